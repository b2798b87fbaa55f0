"""SPSA, the warm-started staged VQE driver and measurement-cost accounting."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .simulator import Ansatz, expectation, prepare_state
from .pauli import QubitHamiltonian
from .truncation import StageSchedule

Objective = Callable[[np.ndarray], float]


class NonFiniteObjectiveError(FloatingPointError):
    pass


@dataclass(frozen=True)
class SpsaConfig:
    """SPSA hyperparameters.

    ``stability`` defaults to a tenth of the iteration budget.  ``learning_rate`` is only
    used when calibration is disabled; otherwise calibration sets it.
    """

    max_iterations: int = 800
    calibration_iterations: int = 50
    alpha: float = 0.602
    gamma: float = 0.101
    perturbation: float = 0.1
    stability: float | None = None
    target_magnitude: float = 0.1
    learning_rate: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 0 or self.calibration_iterations < 0:
            raise ValueError("iteration counts must be non-negative")
        if not self.alpha > self.gamma > 0:
            raise ValueError(f"need alpha > gamma > 0, got {self.alpha}, {self.gamma}")
        if not self.perturbation > 0:
            raise ValueError("perturbation must be positive")

    def stability_for(self, total_iterations: int) -> float:
        return 0.1 * total_iterations if self.stability is None else self.stability


class Spsa:
    """Resumable SPSA state: the gain sequence continues across :meth:`step` calls."""

    def __init__(self, config: SpsaConfig, rng: np.random.Generator, total_iterations: int | None = None):
        self.config = config
        self.rng = rng
        total = config.max_iterations if total_iterations is None else total_iterations
        self.A = config.stability_for(total)
        self.k = 0
        self.a = (
            config.learning_rate
            if config.learning_rate is not None
            else config.target_magnitude * (self.A + 1) ** config.alpha
        )

    def _perturbation(self, size: int) -> np.ndarray:
        return self.rng.choice((-1.0, 1.0), size=size)

    def calibrate(self, objective: Objective, x: np.ndarray) -> float:
        """Pick the gain so the first update has roughly ``target_magnitude`` per component."""
        cfg = self.config
        if cfg.calibration_iterations == 0:
            return self.a
        magnitude = 0.0
        for _ in range(cfg.calibration_iterations):
            delta = self._perturbation(x.size)
            plus = objective(x + cfg.perturbation * delta)
            minus = objective(x - cfg.perturbation * delta)
            magnitude += abs(plus - minus) / (2 * cfg.perturbation)
        magnitude /= cfg.calibration_iterations
        if magnitude > 0:
            self.a = cfg.target_magnitude * (self.A + 1) ** cfg.alpha / magnitude
        return self.a

    def step(self, objective: Objective, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        cfg = self.config
        ak = self.a / (self.A + self.k + 1) ** cfg.alpha
        ck = cfg.perturbation / (self.k + 1) ** cfg.gamma
        delta = self._perturbation(x.size)
        x_plus, x_minus = x + ck * delta, x - ck * delta
        f_plus, f_minus = objective(x_plus), objective(x_minus)
        gradient = (f_plus - f_minus) / (2 * ck) / delta
        self.k += 1
        return x - ak * gradient, ((x_plus, f_plus), (x_minus, f_minus))


def _checked(objective: Objective, sink: Callable | None) -> Objective:
    def wrapped(x: np.ndarray) -> float:
        value = float(objective(x))
        if not math.isfinite(value):
            raise NonFiniteObjectiveError(f"objective returned {value} at parameters {x.tolist()}")
        if sink is not None:
            sink(x, value)
        return value

    return wrapped


def _run_iterations(spsa: Spsa, objective: Objective, x: np.ndarray, iterations: int, readout: Objective):
    best_x, best_f = x, math.inf
    for _ in range(iterations):
        x, evaluated = spsa.step(objective, x)
        for point, value in evaluated:
            if value < best_f:
                best_x, best_f = point, value
    # The final iterate is read out once, outside the trace.
    final_f = readout(x)
    if final_f <= best_f:
        best_x, best_f = x, final_f
    return best_x, best_f


def spsa_minimize(
    objective: Objective,
    initial,
    config: SpsaConfig = SpsaConfig(),
    trace_sink: Callable[[np.ndarray, float], None] | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, float]:
    """Minimize ``objective`` and return the best point seen with its value.

    Every calibration and iteration evaluation is passed to ``trace_sink``.  The
    returned value also considers one read-out of the final iterate, which is not
    passed to the sink.
    """
    x = np.array(initial, dtype=float)
    if not np.isfinite(x).all():
        raise ValueError("initial parameters must be finite")
    spsa = Spsa(config, np.random.default_rng(config.rng_seed) if rng is None else rng)
    logged = _checked(objective, trace_sink)
    readout = _checked(objective, None)
    if config.max_iterations == 0:
        return x, readout(x)
    spsa.calibrate(logged, x)
    return _run_iterations(spsa, logged, x, config.max_iterations, readout)


# --------------------------------------------------------------------------- accounting

@dataclass(frozen=True)
class ImprovementReport:
    stages: tuple[tuple[int, int], ...]
    K: int
    I: int
    s_ratio: float
    improvement_percent: float

    def to_dict(self) -> dict:
        return {
            "stages": [{"measurement_units": k, "iterations": i} for k, i in self.stages],
            "K": self.K,
            "I": self.I,
            "S_ratio": self.s_ratio,
            "improvement_percent": self.improvement_percent,
        }


def improvement(stage_stats: Sequence[tuple[int, int]], K: int, I: int) -> ImprovementReport:
    """Weighted measurement cost ``sum k_n i_n / (K I)`` relative to standard VQE."""
    stats = tuple((int(k), int(i)) for k, i in stage_stats)
    if K <= 0 or I <= 0:
        raise ValueError("K and I must be positive")
    if sum(i for _, i in stats) != I:
        raise ValueError(f"iteration budgets sum to {sum(i for _, i in stats)}, expected I={I}")
    if any(k > K for k, _ in stats):
        raise ValueError("a stage uses more measurement units than the full Hamiltonian")
    ratio = Fraction(sum(k * i for k, i in stats), K * I)
    return ImprovementReport(stats, K, I, float(ratio), float(100 * (1 - ratio)))


def schedule_improvement(schedule: StageSchedule) -> ImprovementReport:
    stats = [(s.measurement_units, s.iterations) for s in schedule]
    return improvement(stats, schedule[-1].measurement_units, sum(i for _, i in stats))


# --------------------------------------------------------------------------- traces

class TraceRecord(NamedTuple):
    evaluation_index: int
    stage_index: int
    energy: float
    cumulative_measurement_units: int


TRACE_COLUMNS = TraceRecord._fields


@dataclass
class ConvergenceTrace:
    records: list[TraceRecord] = field(default_factory=list)
    stage_boundaries: list[int] = field(default_factory=list)
    final_parameters: np.ndarray | None = None
    stage_parameters: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    stage_energies: list[float] = field(default_factory=list)

    def append(self, stage_index: int, energy: float, units: int) -> None:
        cumulative = (self.records[-1].cumulative_measurement_units if self.records else 0) + units
        self.records.append(TraceRecord(len(self.records), stage_index, energy, cumulative))

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in self.records:
            writer.writerow((r.evaluation_index, r.stage_index, repr(r.energy), r.cumulative_measurement_units))
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> ConvergenceTrace:
        rows = list(csv.DictReader(io.StringIO(text)))
        trace = cls()
        for row in rows:
            trace.records.append(TraceRecord(
                int(row["evaluation_index"]), int(row["stage_index"]),
                float(row["energy"]), int(row["cumulative_measurement_units"]),
            ))
        trace.stage_boundaries = [
            b.evaluation_index for a, b in zip(trace.records, trace.records[1:])
            if b.stage_index != a.stage_index
        ]
        return trace


def mean_trace(traces: Sequence[ConvergenceTrace]) -> ConvergenceTrace:
    """Pointwise mean energy over runs sharing the same evaluation grid."""
    if not traces:
        raise ValueError("no traces to aggregate")
    length = len(traces[0].records)
    if any(len(t.records) != length for t in traces):
        raise ValueError("traces have different lengths")
    energies = np.mean([t.energies for t in traces], axis=0)
    first = traces[0]
    out = ConvergenceTrace(stage_boundaries=list(first.stage_boundaries))
    out.records = [r._replace(energy=float(e)) for r, e in zip(first.records, energies)]
    return out


# --------------------------------------------------------------------------- driver

def _rngs(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent streams for the initial point and for SPSA perturbations."""
    init, perturb = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init), np.random.default_rng(perturb)


@dataclass
class VqeResult:
    energy: float
    parameters: np.ndarray
    trace: ConvergenceTrace
    report: ImprovementReport


def staged_vqe(
    schedule: StageSchedule,
    ansatz: Ansatz,
    config: SpsaConfig = SpsaConfig(),
    rng_seed: int | None = None,
) -> VqeResult:
    """Run SPSA over each stage in turn, warm-starting from the previous stage.

    One SPSA instance spans the whole schedule: calibration happens once against the
    first stage and the gain sequence keeps counting across stage switches.
    """
    if not len(schedule):
        raise ValueError("empty schedule")
    if schedule.num_qubits != ansatz.num_qubits:
        raise ValueError(
            f"schedule acts on {schedule.num_qubits} qubits, ansatz on {ansatz.num_qubits}"
        )
    init_rng, spsa_rng = _rngs(config.rng_seed if rng_seed is None else rng_seed)
    theta = init_rng.uniform(-np.pi, np.pi, ansatz.num_parameters)
    total = sum(s.iterations for s in schedule)
    spsa = Spsa(replace(config, max_iterations=total), spsa_rng, total)
    trace = ConvergenceTrace()
    energy = math.nan

    for index, stage in enumerate(schedule):
        if index:
            trace.stage_boundaries.append(len(trace.records))

        def energy_of(x, h=stage.hamiltonian):
            return expectation(prepare_state(ansatz, x), h)

        def sink(x, value, index=index, units=stage.measurement_units):
            trace.append(index, value, units)

        logged = _checked(energy_of, sink)
        start = theta.copy()
        if index == 0:
            spsa.calibrate(logged, theta)
        theta, energy = _run_iterations(spsa, logged, theta, stage.iterations, _checked(energy_of, None))
        theta = np.array(theta)
        trace.stage_parameters.append((start, theta.copy()))
        trace.stage_energies.append(energy)

    trace.final_parameters = theta.copy()
    return VqeResult(energy, theta, trace, schedule_improvement(schedule))


def vqe(
    h: QubitHamiltonian, ansatz: Ansatz, config: SpsaConfig = SpsaConfig(), rng_seed: int | None = None
) -> tuple[float, np.ndarray, list[float]]:
    """Plain single-Hamiltonian VQE; returns energy, parameters and evaluated energies."""
    init_rng, spsa_rng = _rngs(config.rng_seed if rng_seed is None else rng_seed)
    theta = init_rng.uniform(-np.pi, np.pi, ansatz.num_parameters)
    energies: list[float] = []
    params, energy = spsa_minimize(
        lambda x: expectation(prepare_state(ansatz, x), h),
        theta,
        config,
        trace_sink=lambda x, value: energies.append(value),
        rng=spsa_rng,
    )
    return energy, params, energies


def report_text(report: ImprovementReport, schedule: StageSchedule, extra: dict | None = None) -> str:
    payload = {"improvement": report.to_dict(), "schedule": schedule.manifest()}
    if extra:
        payload.update(extra)
    return json.dumps(payload, indent=2) + "\n"
