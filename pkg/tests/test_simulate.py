import numpy as np
import pytest

from piq import ConfigError, Dataset, DimensionError, FitConfig, fit_piq, logistic
from piq.simulate import (
    SimSpec,
    clean_test_set,
    covariance_matrix,
    default_config,
    evaluate,
    generate,
    replication_seed,
    run_replications,
)
from piq.solvers import Estimate


def _estimate(beta, gamma):
    return Estimate(np.asarray(beta, float), np.asarray(gamma, float), np.zeros(1), 0.0, 1, 0, True)


def test_example1_coefficients_verbatim():
    spec = SimSpec.preset(1)
    assert spec.beta_star == (1, 1, 0.5, 0.5, -1.5, -1.5, -1, -1, 1, 1)
    assert (spec.n, spec.p, spec.rho, spec.gamma_magnitude) == (1000, 10, 0.5, 5.0)


def test_example3_coefficients_padded():
    spec = SimSpec.preset(3)
    assert spec.beta_star[:6] == (1, 0.5, 0, 0, -0.5, -1)
    assert len(spec.beta_star) == 1000 and spec.s_star == 4


def test_planted_structure():
    inst = generate(SimSpec.preset(1, n=100, o_star=10))
    assert np.count_nonzero(inst.gamma_star) == 10
    np.testing.assert_array_equal(inst.outlier_indices, np.arange(10))
    assert np.all(inst.data.X[:10] == 3.0)


def test_no_outliers():
    inst = generate(SimSpec.preset(1, n=50, o_star=0))
    assert not np.any(inst.gamma_star) and inst.outlier_indices.size == 0


def test_generation_is_byte_identical():
    spec = SimSpec.preset(2, n=80, o_star=5, seed=3)
    a, b = generate(spec), generate(spec)
    assert a.data.digest() == b.data.digest()
    assert generate(SimSpec.preset(2, n=80, o_star=5, seed=4)).data.digest() != a.data.digest()


@pytest.mark.parametrize("kind", ["toeplitz", "equicorrelated", "blocked"])
def test_sample_covariance(kind):
    spec = SimSpec(n=20000, p=4, rho=0.5, covariance=kind, seed=1)
    X = generate(spec).data.X
    np.testing.assert_allclose(np.cov(X, rowvar=False), covariance_matrix(kind, 4, 0.5), atol=0.03)


def test_toeplitz_entries():
    S = covariance_matrix("toeplitz", 3, 0.5)
    np.testing.assert_allclose(S, [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])


def test_spec_validation():
    with pytest.raises(ConfigError):
        SimSpec(n=10, o_star=6)
    with pytest.raises(ConfigError):
        SimSpec.preset(7)


def test_evaluate_perfect_fit():
    inst = generate(SimSpec.preset(1, n=60, o_star=6))
    m = evaluate(_estimate(inst.beta_star, inst.gamma_star), inst)
    assert (m.err, m.masking_rate, m.jd, m.false_alarm) == (0.0, 0.0, True, 0.0)


def test_evaluate_one_miss():
    inst = generate(SimSpec.preset(1, n=60, o_star=10))
    g = inst.gamma_star.copy()
    g[0] = 0
    g[20] = 1.0
    m = evaluate(_estimate(inst.beta_star, g), inst)
    assert m.masking_rate == pytest.approx(0.1) and not m.jd
    assert m.false_alarm == pytest.approx(1 / 50)
    assert m.masking_rate + (9 / 10) == pytest.approx(1.0)


def test_evaluate_err_is_summed_squared_error():
    inst = generate(SimSpec.preset(1, n=40, o_star=0))
    b = inst.beta_star + np.array([1.0, 2.0] + [0.0] * 8)
    assert evaluate(_estimate(b, inst.gamma_star), inst).err == pytest.approx(5.0)


def test_evaluate_classification_recount():
    spec = SimSpec.preset(2, n=100, o_star=0, seed=2)
    inst = generate(spec)
    test = clean_test_set(spec, 500, seed=9)
    fit = fit_piq(inst.data, logistic(), FitConfig(solver="bcd_general", q_gamma=0, cooling="constant"))
    m = evaluate(fit, inst, test_set=test)
    wrong = sum(int((x @ fit.beta > 0) != bool(y)) for x, y in zip(test.X, test.y))
    assert m.err == wrong / 500
    with pytest.raises(ConfigError):
        evaluate(fit, inst)
    with pytest.raises(DimensionError):
        evaluate(_estimate(np.zeros(3), np.zeros(100)), inst)


def test_default_config_budgets():
    c = default_config(SimSpec.preset(1, n=500, o_star=25))
    assert c.q_gamma == 38 and c.solver == "iq_bcd_regression"
    c3 = default_config(SimSpec.preset(3, p=300))
    assert c3.q_beta == 6 and c3.solver == "bcd_general"
    c2 = default_config(SimSpec.preset(2, n=500, o_star=60))
    assert c2.q_gamma == 90 and c2.cooling == "logarithmic"


def test_replication_seeds_are_distinct():
    seeds = {replication_seed(0, r) for r in range(100)}
    assert len(seeds) == 100


def test_single_replication_aggregate():
    spec = SimSpec.preset(1, n=100, o_star=10, seed=1)
    t = run_replications(spec, reps=1)
    r = t.reports[0]
    agg = t.aggregate
    assert agg["Err"] == r.err and agg["M"] == 100 * r.masking_rate and agg["JD"] == 100 * r.jd


def test_replications_deterministic_and_jobs_independent():
    spec = SimSpec.preset(1, n=100, o_star=10, seed=5)
    a = run_replications(spec, reps=3)
    b = run_replications(spec, reps=3, jobs=2)
    assert a.to_csv() == b.to_csv()
    with pytest.raises(ConfigError):
        run_replications(spec, reps=0)


def test_small_example1_detection():
    # n = 200, p = 5, o* = 20 with quadratic cooling
    spec = SimSpec.preset(1, n=200, p=5, o_star=20, seed=0)
    t = run_replications(spec, default_config(spec), reps=20)
    assert t.aggregate["JD"] >= 80


def test_csv_round_trip():
    import csv
    import io

    t = run_replications(SimSpec.preset(1, n=60, o_star=5), reps=2)
    rows = list(csv.reader(io.StringIO(t.to_csv(include_time=True))))
    assert rows[0] == ["setting", "reps", "Err", "M", "JD", "FA", "M_beta", "FA_beta", "JD_beta", "T"]
    assert float(rows[1][4]) == t.aggregate["JD"]


def test_dataset_type():
    assert isinstance(generate(SimSpec()).data, Dataset)
