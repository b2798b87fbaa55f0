import math

import numpy as np
import pytest

from stagedvqe import fixtures
from stagedvqe.fermion import classify, jordan_wigner
from stagedvqe.simulator import expectation, prepare_state, two_local
from stagedvqe.truncation import build_classification_ladder, build_cutoff_ladder, single_stage
from stagedvqe.vqe import (
    ConvergenceTrace,
    NonFiniteObjectiveError,
    SpsaConfig,
    improvement,
    mean_trace,
    schedule_improvement,
    spsa_minimize,
    staged_vqe,
    vqe,
)


@pytest.fixture(scope="module")
def h2():
    return fixtures.load("H2")[0]


@pytest.fixture(scope="module")
def h2q(h2):
    return jordan_wigner(h2)


def short(**kw):
    return SpsaConfig(**{"calibration_iterations": 5, **kw})


# --------------------------------------------------------------------------- SPSA

def test_spsa_on_sphere():
    values = []
    x, f = spsa_minimize(lambda t: float(np.sum(t**2)), [1.0, 1.0, 1.0],
                         SpsaConfig(max_iterations=300), trace_sink=lambda x, v: values.append(v))
    assert np.linalg.norm(x) < 0.05
    assert len(values) == 2 * 50 + 2 * 300


def test_zero_iterations_returns_initial():
    x, f = spsa_minimize(lambda t: float(np.sum(t**2)), [0.5, -0.5],
                         SpsaConfig(max_iterations=0, calibration_iterations=0))
    np.testing.assert_array_equal(x, [0.5, -0.5])
    assert f == 0.5


def test_spsa_is_deterministic():
    def run():
        trace = []
        out = spsa_minimize(lambda t: float(np.sum(np.cos(t))), np.ones(4), short(max_iterations=50, rng_seed=9),
                            trace_sink=lambda x, v: trace.append(v))
        return out, trace

    (x1, f1), t1 = run()
    (x2, f2), t2 = run()
    assert t1 == t2 and f1 == f2 and np.array_equal(x1, x2)


def test_spsa_quadratic_success_rate():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(1, 9))
        scales = rng.uniform(0.5, 2.0, dim)
        center = rng.uniform(-1, 1, dim)
        minimum = 1.0

        def f(t):
            return minimum + float(np.sum(scales * (t - center) ** 2))

        _, value = spsa_minimize(f, np.zeros(dim), SpsaConfig(max_iterations=500, rng_seed=seed))
        hits += abs(value - minimum) <= 0.05 * minimum
    assert hits >= 95


def test_non_finite_objective_aborts():
    with pytest.raises(NonFiniteObjectiveError, match="nan"):
        spsa_minimize(lambda t: math.nan, [0.0], short(max_iterations=3))


def test_non_finite_initial_rejected():
    with pytest.raises(ValueError):
        spsa_minimize(lambda t: 0.0, [math.inf], short())


@pytest.mark.parametrize("kw", [dict(alpha=0.1, gamma=0.2), dict(gamma=0.0), dict(perturbation=0.0),
                                dict(max_iterations=-1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SpsaConfig(**kw)


# --------------------------------------------------------------------------- improvement metric

def test_single_full_stage_has_no_improvement():
    report = improvement([(15, 800)], 15, 800)
    assert report.s_ratio == 1 and report.improvement_percent == 0


def test_h6_naive_arithmetic():
    report = improvement([(55, 400), (1819, 400)], 1819, 800)
    assert report.improvement_percent == pytest.approx(100 * (1 - (55 * 400 + 1819 * 400) / (1819 * 800)))
    assert round(report.improvement_percent, 1) == 48.5


def test_h2_classification_arithmetic():
    report = improvement([(1, 500), (11, 100), (11, 200), (15, 200)], 15, 1000)
    assert report.improvement_percent == pytest.approx(54.666666666666664)


def test_h4_classification_arithmetic():
    report = improvement([(1, 500), (61, 100), (205, 200), (361, 200)], 361, 1000)
    assert round(report.improvement_percent, 1) == 66.8


def test_h2_naive_schedule_improvement(h2q):
    report = schedule_improvement(build_cutoff_ladder(h2q, [0.1], (400, 400)))
    assert report.improvement_percent == pytest.approx(100 * (1 - 26 / 30))
    assert round(report.improvement_percent, 1) == 13.3


def test_improvement_input_validation():
    with pytest.raises(ValueError):
        improvement([(1, 10)], 1, 20)
    with pytest.raises(ValueError):
        improvement([(5, 10)], 4, 10)
    with pytest.raises(ValueError):
        improvement([], 0, 0)


# --------------------------------------------------------------------------- staged driver

def test_one_stage_schedule_equals_plain_vqe(h2q):
    config = short(max_iterations=60)
    ansatz = two_local(4)
    result = staged_vqe(single_stage(h2q, 60), ansatz, config, rng_seed=3)
    energy, params, energies = vqe(h2q, ansatz, config, rng_seed=3)
    assert result.energy == energy
    assert np.array_equal(result.parameters, params)
    assert list(result.trace.energies) == energies


def test_warm_start_and_bookkeeping(h2):
    ladder = build_classification_ladder(classify(h2), (30, 10, 20, 20))
    result = staged_vqe(ladder, two_local(4), short(), rng_seed=1)
    trace = result.trace
    for (_, end), (start, _) in zip(trace.stage_parameters, trace.stage_parameters[1:]):
        assert np.array_equal(end, start)
    assert np.array_equal(trace.stage_parameters[-1][1], trace.final_parameters)

    calibration = 2 * 5
    per_stage = [2 * s.iterations + (calibration if n == 0 else 0) for n, s in enumerate(ladder)]
    assert len(trace.records) == sum(per_stage)
    assert trace.stage_boundaries == list(np.cumsum(per_stage)[:-1])
    expected_units = sum(n * s.measurement_units for n, s in zip(per_stage, ladder))
    assert trace.records[-1].cumulative_measurement_units == expected_units
    indices = [r.evaluation_index for r in trace.records]
    assert indices == list(range(len(indices)))
    cumulative = [r.cumulative_measurement_units for r in trace.records]
    assert cumulative == sorted(cumulative)


def test_final_energy_is_best_of_final_stage(h2q):
    ladder = build_cutoff_ladder(h2q, [0.1], (40, 40))
    result = staged_vqe(ladder, two_local(4), short(), rng_seed=2)
    final_stage = [r.energy for r in result.trace.records if r.stage_index == 1]
    assert result.energy <= min(final_stage)
    assert result.energy == pytest.approx(expectation(prepare_state(two_local(4), result.parameters), h2q))


def test_staged_vqe_is_deterministic(h2):
    ladder = build_classification_ladder(classify(h2), (20, 10, 10, 10))
    a = staged_vqe(ladder, two_local(4), short(), rng_seed=5)
    b = staged_vqe(ladder, two_local(4), short(), rng_seed=5)
    assert a.trace.to_csv() == b.trace.to_csv()
    assert np.array_equal(a.parameters, b.parameters)
    c = staged_vqe(ladder, two_local(4), short(), rng_seed=6)
    assert c.trace.to_csv() != a.trace.to_csv()


def test_qubit_mismatch_rejected(h2q):
    with pytest.raises(ValueError):
        staged_vqe(single_stage(h2q, 5), two_local(3), short())


# --------------------------------------------------------------------------- traces

def test_trace_csv_round_trip(h2q):
    result = staged_vqe(build_cutoff_ladder(h2q, [0.1], (10, 10)), two_local(4), short(), rng_seed=0)
    text = result.trace.to_csv()
    assert text.splitlines()[0] == "evaluation_index,stage_index,energy,cumulative_measurement_units"
    again = ConvergenceTrace.from_csv(text)
    assert again.records == result.trace.records
    assert again.stage_boundaries == result.trace.stage_boundaries


def test_mean_trace(h2q):
    ladder = build_cutoff_ladder(h2q, [0.1], (10, 10))
    traces = [staged_vqe(ladder, two_local(4), short(), rng_seed=s).trace for s in range(3)]
    mean = mean_trace(traces)
    expected = np.mean([t.energies for t in traces], axis=0)
    assert np.abs(mean.energies - expected).max() <= 1e-12
    assert mean_trace(traces[:1]).records == traces[0].records
    with pytest.raises(ValueError):
        mean_trace([])
