"""Staged Hamiltonian sequences: coefficient-cutoff ladders and operator-class ladders."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .fermion import ClassifiedHamiltonian, jordan_wigner
from .pauli import QubitHamiltonian


@dataclass(frozen=True)
class CutoffSchedule:
    cutoffs: tuple[float, ...]

    def __post_init__(self):
        cutoffs = tuple(float(c) for c in self.cutoffs)
        if not cutoffs:
            raise ValueError("cutoff schedule is empty")
        if any(c <= 0 for c in cutoffs):
            raise ValueError(f"cutoffs must be positive, got {cutoffs}")
        if any(b >= a for a, b in zip(cutoffs, cutoffs[1:])):
            raise ValueError(f"cutoffs must be strictly descending, got {cutoffs}")
        object.__setattr__(self, "cutoffs", cutoffs)


@dataclass(frozen=True, eq=False)
class Stage:
    label: str
    hamiltonian: QubitHamiltonian
    iterations: int
    measurement_units: int

    @property
    def num_terms(self) -> int:
        return len(self.hamiltonian)


@dataclass(frozen=True, eq=False)
class StageSchedule:
    stages: tuple[Stage, ...]
    kind: str = "custom"
    count_identity: bool = True

    def __post_init__(self):
        if not self.stages:
            raise ValueError("schedule has no stages")
        n = self.stages[0].hamiltonian.num_qubits
        for stage in self.stages:
            if stage.iterations < 0:
                raise ValueError(f"stage {stage.label}: negative iteration budget")
            if stage.hamiltonian.num_qubits != n:
                raise ValueError("all stages must act on the same number of qubits")

    def __len__(self) -> int:
        return len(self.stages)

    def __iter__(self):
        return iter(self.stages)

    def __getitem__(self, n: int) -> Stage:
        return self.stages[n]

    @property
    def num_qubits(self) -> int:
        return self.stages[0].hamiltonian.num_qubits

    @property
    def full(self) -> QubitHamiltonian:
        return self.stages[-1].hamiltonian

    def manifest(self) -> dict:
        return {
            "kind": self.kind,
            "measurement_units_count_identity": self.count_identity,
            "stages": [
                {
                    "label": s.label,
                    "terms": s.num_terms,
                    "measurement_units": s.measurement_units,
                    "iterations": s.iterations,
                }
                for s in self.stages
            ],
        }

    def to_text(self) -> str:
        return json.dumps(self.manifest(), indent=2) + "\n"


def _units(h: QubitHamiltonian, count_identity: bool) -> int:
    return len(h) if count_identity else h.num_measurable_terms


def truncate_by_cutoff(h: QubitHamiltonian, cutoff: float) -> QubitHamiltonian:
    """Keep terms with ``|c| >= cutoff`` plus the identity term."""
    if not cutoff > 0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")
    return h.filter(lambda s, c: s.is_identity or abs(c) >= cutoff)


def build_cutoff_ladder(
    h: QubitHamiltonian,
    schedule: CutoffSchedule | Sequence[float],
    iterations: Sequence[int],
    count_identity: bool = True,
) -> StageSchedule:
    """Stages from the largest cutoff down to the full Hamiltonian.

    ``iterations`` holds one budget per cutoff followed by the full-Hamiltonian budget.
    """
    if not isinstance(schedule, CutoffSchedule):
        schedule = CutoffSchedule(tuple(schedule))
    if len(iterations) != len(schedule.cutoffs) + 1:
        raise ValueError(
            f"need {len(schedule.cutoffs) + 1} iteration budgets, got {len(iterations)}"
        )
    hams = [truncate_by_cutoff(h, c) for c in schedule.cutoffs] + [h]
    labels = [f"cutoff={c:g}" for c in schedule.cutoffs] + ["full"]
    stages = tuple(
        Stage(label, ham, int(its), _units(ham, count_identity))
        for label, ham, its in zip(labels, hams, iterations)
    )
    return StageSchedule(stages, kind="naive_cutoff", count_identity=count_identity)


def build_classification_ladder(
    c: ClassifiedHamiltonian,
    iterations: Sequence[int] = (500, 100, 200, 200),
    count_identity: bool = True,
) -> StageSchedule:
    """Cumulative stages num+cou, +exc, +nex, +dex, each Jordan-Wigner mapped.

    The first stage is diagonal in the computational basis and is charged a single
    measurement unit.
    """
    if len(iterations) != 4:
        raise ValueError(f"classification ladder needs 4 iteration budgets, got {len(iterations)}")
    mapped = {tag: jordan_wigner(fragment) for tag, fragment in c.fragments()}
    h3 = mapped["num"] + mapped["cou"]
    h2 = h3 + mapped["exc"]
    h1 = h2 + mapped["nex"]
    hq = h1 + mapped["dex"]
    if not all(s.is_diagonal for s in h3):
        raise AssertionError("number and Coulomb terms must map to Z strings")
    stages = (
        Stage("num+cou", h3, int(iterations[0]), 1),
        Stage("+exc", h2, int(iterations[1]), _units(h2, count_identity)),
        Stage("+nex", h1, int(iterations[2]), _units(h1, count_identity)),
        Stage("full", hq, int(iterations[3]), _units(hq, count_identity)),
    )
    return StageSchedule(stages, kind="classification", count_identity=count_identity)


def single_stage(h: QubitHamiltonian, iterations: int, count_identity: bool = True) -> StageSchedule:
    """Standard VQE expressed as a one-stage schedule."""
    return StageSchedule(
        (Stage("full", h, int(iterations), _units(h, count_identity)),),
        kind="standard",
        count_identity=count_identity,
    )
