"""Runner that coordinates simulations and artifact writing for each subcommand."""

from __future__ import annotations

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from quadzeeman.core.artifacts import ArtifactStore
from quadzeeman.core.config import CALIBRATE, ExperimentConfig
from quadzeeman.core.exceptions import PreconditionError, QuadZeemanError
from quadzeeman.core.models import RunStats
from quadzeeman.montecarlo.ensemble import dephasing_curve
from quadzeeman.montecarlo.models import DephasingRow
from quadzeeman.physics.atomdata import ZeemanCoefficients, hyperfine_branch, zeeman_coefficients
from quadzeeman.physics.circuit import (
    buildup_time,
    energy_balance,
    peak_current,
    ringdown_rate,
    simulate_pulse,
    total_charge,
)
from quadzeeman.physics.constants import tesla_to_gauss
from quadzeeman.physics.coils import field_scale_map, homogeneity_map, sphere_grid
from quadzeeman.physics.spin import appendix_pipeline, cumulative_phases, phases_from_trace
from quadzeeman.signal.fid import fit_fid, synthesize_fid
from quadzeeman.signal.models import DEFAULT_FROZEN
from quadzeeman.signal.sweeps import (
    AmplitudePoint,
    Mode,
    amplitude_vs_tau,
    calibrate_field_per_ampere,
    phase_scaling,
    probe_times,
)

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[str, int, int], None]

SUBCOMMANDS = (
    "circuit",
    "phases",
    "alpha-vs-tau",
    "phase-scaling",
    "dephasing",
    "fid",
    "calibrate",
    "field-map",
)

_FIELD_MAP_POINTS = 11


def _microseconds(seconds: float) -> float:
    return round(seconds * 1e6, 9)


class ExperimentRunner:
    """Runs subcommands against one config and writes their artifacts to one store."""

    def __init__(
        self,
        config: ExperimentConfig,
        store: ArtifactStore,
        threads: int = 1,
        on_progress: ProgressCallback | None = None,
        mode: Mode = "motionless",
    ) -> None:
        if threads < 1:
            raise PreconditionError("threads must be at least 1")
        self._config = config
        self._store = store
        self._threads = threads
        self._on_progress = on_progress
        self._mode = mode
        self._coeffs: ZeemanCoefficients | None = None
        self._field: float | None = None

    @property
    def coefficients(self) -> ZeemanCoefficients:
        """Zeeman coefficients of the F = 1 manifold of the configured species."""
        if self._coeffs is None:
            species = self._config.species
            self._coeffs = zeeman_coefficients(species, hyperfine_branch(species, 1.0))
        return self._coeffs

    @property
    def field_per_ampere(self) -> float:
        """Field per ampere in use (T/A): configured, calibrated, or from the coil geometry."""
        if self._field is None:
            configured = self._config.field_per_ampere
            if configured == CALIBRATE:
                self._field = calibrate_field_per_ampere(
                    self._config.circuit, self.coefficients, self._config.sweep.period_target
                )
                logger.info("calibrated field per ampere: %.6g T/A", self._field)
            elif isinstance(configured, float):
                self._field = configured
            else:
                self._field = self._config.geometric_field()
        return self._field

    def _progress(self, description: str, done: int, total: int) -> None:
        if self._on_progress:
            self._on_progress(description, done, total)

    def _offset_progress(
        self, description: str, block: int, blocks: int
    ) -> Callable[[int, int], None]:
        def report(done: int, total: int) -> None:
            self._progress(description, block * total + done, blocks * total)

        return report

    def _stats(self, subcommand: str, files_before: int) -> RunStats:
        stats = RunStats(subcommand)
        stats.files = self._store.files[files_before:]
        return stats

    def run(self, subcommand: str) -> RunStats:
        """Run one subcommand, or every subcommand for "all", then write the manifest.

        A failing single subcommand is recorded in the manifest and re-raised.
        """
        if subcommand != "all" and subcommand not in SUBCOMMANDS:
            raise PreconditionError(f"unknown subcommand: {subcommand}")
        try:
            if subcommand != "all":
                return self._dispatch(subcommand)
            stats = RunStats("all")
            for name in SUBCOMMANDS:
                try:
                    stats.merge(self._dispatch(name))
                except QuadZeemanError as e:
                    self._store.record_failure(name, "*", e)
                    stats.errors.append(f"{name}: {e}")
            return stats
        except QuadZeemanError as e:
            self._store.record_failure(subcommand, "*", e)
            raise
        finally:
            self._store.write_manifest()

    def _dispatch(self, subcommand: str) -> RunStats:
        handlers: dict[str, Callable[[], RunStats]] = {
            "circuit": self.circuit,
            "phases": self.phases,
            "alpha-vs-tau": self.alpha_vs_tau,
            "phase-scaling": self.phase_scaling,
            "dephasing": self.dephasing,
            "fid": self.fid,
            "calibrate": self.calibrate,
            "field-map": self.field_map,
        }
        logger.info("running %s", subcommand)
        return handlers[subcommand]()

    def circuit(self) -> RunStats:
        """Current trace of the configured pulse."""
        before = len(self._store.files)
        trace = simulate_pulse(self._config.circuit)
        self._store.write_csv(
            "circuit.csv",
            ["t_s", "I_A"],
            zip(trace.times.tolist(), trace.currents.tolist(), strict=True),
        )
        self._store.write_plot_script(
            "circuit.gp", "circuit.csv", "Coil current", "t (s)", "I (A)", [(1, 2, "I")]
        )
        stats = self._stats("circuit", before)
        stats.points = len(trace.times)
        stats.summary = {
            "peak_current_A": peak_current(trace),
            "buildup_time_s": buildup_time(trace),
            "decay_rate_per_s": ringdown_rate(trace),
            "total_charge_C": total_charge(trace),
            "energy_residual_J": energy_balance(trace).residual,
        }
        return stats

    def phases(self) -> RunStats:
        """Larmor frequency contributions and running phases over the pulse."""
        before = len(self._store.files)
        trace = simulate_pulse(self._config.circuit)
        b = self.field_per_ampere
        running = cumulative_phases(trace, b, self.coefficients)
        rows = zip(
            running.times.tolist(),
            trace.currents.tolist(),
            running.omega1.tolist(),
            running.omega2.tolist(),
            running.phi1.tolist(),
            running.phi2.tolist(),
            strict=True,
        )
        self._store.write_csv(
            "phases.csv",
            ["t_s", "I_A", "omega1_rad_s", "omega2_rad_s", "phi1_rad", "phi2_rad"],
            rows,
        )
        self._store.write_plot_script(
            "phases.gp",
            "phases.csv",
            "Accumulated phases",
            "t (s)",
            "phase (rad)",
            [(1, 5, "phi1"), (1, 6, "phi2")],
        )
        final = phases_from_trace(trace, b, self.coefficients)
        stats = self._stats("phases", before)
        stats.points = len(running.times)
        stats.summary = {
            "field_per_ampere_T_per_A": b,
            "phi1_rad": final.phi1,
            "phi2_rad": final.phi2,
            "max_omega1_rad_s": float(np.max(np.abs(running.omega1))),
            "max_omega2_rad_s": float(np.max(running.omega2)),
        }
        return stats

    def alpha_vs_tau(self, mode: Mode | None = None) -> RunStats:
        """Fitted <alpha_R> against pulse length; failed points are recorded and skipped.

        `mode` defaults to the runner mode: a motionless atom or a Monte Carlo ensemble.
        """
        mode = mode or self._mode
        before = len(self._store.files)
        config = self._config
        taus = config.sweep.taus
        b = self.field_per_ampere
        coeffs = self.coefficients
        sig = config.signal
        times = probe_times(sig.model, sig.n_points, sig.duration)
        ensemble = config.ensemble_config(b, self._threads) if mode == "montecarlo" else None
        seeds = np.random.SeedSequence(config.seed).spawn(len(taus))

        def point(i: int) -> AmplitudePoint:
            return amplitude_vs_tau(
                config.circuit,
                b,
                coeffs,
                [taus[i]],
                model=sig.model,
                times=times,
                noise_sigma=sig.noise_sigma,
                rng=np.random.default_rng(seeds[i]),
                scales=sig.scales,
                mode=mode,
                ensemble=ensemble,
            )[0]

        results: list[AmplitudePoint | None] = [None] * len(taus)
        stats = RunStats("alpha-vs-tau")
        workers = 1 if mode == "montecarlo" else self._threads
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(point, i) for i in range(len(taus))]
            for i, future in enumerate(futures):
                try:
                    results[i] = future.result()
                except Exception as e:
                    self._store.record_failure("alpha-vs-tau", f"tau={taus[i]:.9g}", e)
                    stats.errors.append(f"tau={taus[i]:.9g}: {e}")
                self._progress("alpha-vs-tau", i + 1, len(taus))

        done = [p for p in results if p is not None]
        self._store.write_csv(
            "alpha_vs_tau.csv",
            ["tau_us", "phi1_rad", "phi2_rad", "expected_alpha_R", "fitted_alpha_R", "std_err"],
            [
                (_microseconds(p.tau), p.phi1, p.phi2, p.expected, p.fitted, p.std_err)
                for p in done
            ],
        )
        self._store.write_plot_script(
            "alpha_vs_tau.gp",
            "alpha_vs_tau.csv",
            "Fitted alpha_R against pulse length",
            "tau (us)",
            "<alpha_R>",
            [(1, 4, "expected"), (1, 5, "fitted")],
        )
        stats.files = self._store.files[before:]
        stats.points = len(done)
        stats.summary = {
            "mode": mode,
            "field_per_ampere_T_per_A": b,
            "points": len(done),
            "failed": len(taus) - len(done),
        }
        return stats

    def phase_scaling(self) -> RunStats:
        """phi2 against pulse length for each supply voltage, with steady-state slopes."""
        before = len(self._store.files)
        sweep = self._config.sweep
        scaling = phase_scaling(
            self._config.circuit,
            self.field_per_ampere,
            self.coefficients,
            sweep.voltages,
            sweep.taus,
        )
        header = ["tau_us"] + [f"phi2_rad_V{v:g}" for v in scaling.voltages]
        rows = [
            [_microseconds(tau), *scaling.phi2[:, col].tolist()]
            for col, tau in enumerate(scaling.taus)
        ]
        self._store.write_csv("phase_scaling.csv", header, rows)
        self._store.write_plot_script(
            "phase_scaling.gp",
            "phase_scaling.csv",
            "Quadratic phase against pulse length",
            "tau (us)",
            "phi2 (rad)",
            [(1, 2 + k, f"V = {v:g} V") for k, v in enumerate(scaling.voltages)],
        )
        lines = [
            {
                "voltage_V": line.voltage,
                "slope_rad_per_s": line.slope,
                "intercept_rad": line.intercept,
                "r_squared": line.r_squared,
            }
            for line in scaling.lines
        ]
        summary: dict[str, object] = {"lines": lines}
        if len(scaling.lines) >= 2:
            summary["slope_ratio"] = scaling.slope_ratio(len(scaling.lines) - 1, 0)
        self._store.write_json("phase_scaling_fit.json", summary)
        stats = self._stats("phase-scaling", before)
        stats.points = int(scaling.phi2.size)
        stats.summary = summary
        return stats

    def dephasing(self) -> RunStats:
        """Monte Carlo ensemble amplitude against the number of pi quadratic-phase cycles."""
        before = len(self._store.files)
        config = self._config
        mc = config.montecarlo
        ensemble = config.ensemble_config(self.field_per_ampere, self._threads)
        frequencies = config.sweep.frequencies
        n_max = config.sweep.n_pi_max

        stats = RunStats("dephasing")
        rows: list[DephasingRow] = []
        for k, frequency in enumerate(frequencies):
            try:
                rows.extend(
                    dephasing_curve(
                        ensemble,
                        [frequency],
                        n_max,
                        max_pulse_length=mc.max_pulse_length,
                        retune_capacitor=mc.retune_capacitor,
                        on_progress=self._offset_progress("dephasing", k, len(frequencies)),
                    )
                )
            except QuadZeemanError as e:
                self._store.record_failure("dephasing", f"freq={frequency:g}", e)
                stats.errors.append(f"freq={frequency:g}: {e}")

        self._store.write_csv(
            "dephasing.csv",
            ["freq_hz", "n_pi", "amplitude", "std_err"],
            [(row.frequency, row.n_pi, row.amplitude, row.std_err) for row in rows],
        )
        self._store.write_plot_script(
            "dephasing.gp",
            "dephasing.csv",
            "Ensemble amplitude against pi cycles",
            "n_pi",
            "<alpha_R>",
            [(2, 3, "amplitude")],
        )
        stats.files = self._store.files[before:]
        stats.points = len(rows)
        stats.summary = {
            "frequencies_hz": list(frequencies),
            "n_pi_max": n_max,
            "missing": sum(1 for row in rows if row.missing),
            "particles": mc.n_particles,
        }
        return stats

    def fid(self) -> RunStats:
        """Synthetic rotation signal for the configured pulse and its least-squares fit."""
        before = len(self._store.files)
        config = self._config
        sig = config.signal
        trace = simulate_pulse(config.circuit)
        phi2 = phases_from_trace(trace, self.field_per_ampere, self.coefficients).phi2
        truth = sig.model.with_expectations(*appendix_pipeline(phi2, sig.scales))

        times = probe_times(truth, sig.n_points, sig.duration)
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))
        values = synthesize_fid(truth, times, sig.noise_sigma, rng)
        guess = sig.model.with_expectations(0.5 * sig.scales.A, 0.0, 0.0)
        fit = fit_fid(times, values, guess, frozen=DEFAULT_FROZEN)
        fitted = fit.model.evaluate(times)

        self._store.write_csv(
            "fid.csv",
            ["t_s", "delta_alpha_rad", "fit_rad"],
            zip(times.tolist(), values.tolist(), fitted.tolist(), strict=True),
        )
        self._store.write_plot_script(
            "fid.gp",
            "fid.csv",
            "Rotation signal and fit",
            "t (s)",
            "delta alpha (rad)",
            [(1, 2, "signal"), (1, 3, "fit")],
        )
        document = fit.to_dict()
        document["truth"] = truth.to_dict()
        document["phi2_rad"] = phi2
        self._store.write_json("fid_fit.json", document)

        stats = self._stats("fid", before)
        stats.points = len(times)
        stats.summary = {
            "phi2_rad": phi2,
            "converged": fit.converged,
            "alpha_R": fit.model.alpha_R,
            "alpha_R_expected": truth.alpha_R,
            "residual_rms": fit.residual_rms,
        }
        if not fit.converged:
            stats.errors.append(f"fit did not converge: {fit.message}")
        return stats

    def calibrate(self) -> RunStats:
        """Field per ampere that gives one 2 pi quadratic-phase cycle per target period."""
        before = len(self._store.files)
        config = self._config
        period = config.sweep.period_target
        value = calibrate_field_per_ampere(config.circuit, self.coefficients, period)
        geometric = config.geometric_field()
        summary = {
            "field_per_ampere_T_per_A": value,
            "field_per_ampere_gauss": tesla_to_gauss(value),
            "geometric_T_per_A": geometric,
            "ratio_to_geometric": value / geometric,
            "period_us": _microseconds(period),
        }
        self._store.write_json("calibration.json", summary)
        stats = self._stats("calibrate", before)
        stats.points = 1
        stats.summary = summary
        return stats

    def field_map(self) -> RunStats:
        """Per-ampere field over the cell and its homogeneity."""
        before = len(self._store.files)
        config = self._config
        cell = config.cell
        grid = sphere_grid(cell.radius, cell.center_vector, _FIELD_MAP_POINTS)
        samples = field_scale_map(config.coils, grid)
        self._store.write_csv(
            "field_map.csv",
            ["x", "y", "z", "bx", "by", "bz"],
            [(*s.point, *s.B) for s in samples],
        )
        homogeneity = homogeneity_map(config.coils, cell.radius, center=cell.center_vector)
        summary = {
            "center_T_per_A": config.geometric_field(),
            "max_deviation": homogeneity.max_deviation,
            "rms_deviation": homogeneity.rms_deviation,
            "samples": homogeneity.samples,
        }
        self._store.write_json("field_map_homogeneity.json", summary)
        stats = self._stats("field-map", before)
        stats.points = len(samples)
        stats.summary = summary
        return stats
