import numpy as np
import pytest

from npsimex import (
    DistributionSpec,
    ErrorSet,
    FourthMomentEstimator,
    LambdaGrid,
    LogisticEstimator,
    ObservedData,
    RandomStream,
    ValidationPairs,
    naive_estimate,
    npsimex_remeasure,
    psimex_remeasure,
    run_simex,
    sample,
)
from npsimex.engine import export_trace_csv
from npsimex.exceptions import ConfigurationError


def stream(label):
    return RandomStream(77).derive(label)


# -- remeasurement ----------------------------------------------------------


def test_psimex_lambda_zero_identity():
    x = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(psimex_remeasure(x, 2.0, 0.0, stream("a")), x)


def test_psimex_sigma_zero_identity():
    x = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(psimex_remeasure(x, 0.0, 1.7, stream("b")), x)


def test_psimex_noise_variance():
    n = 100_000
    x = np.zeros(n)
    out = psimex_remeasure(x, 2.0, 1.0, stream("c"))
    assert abs(np.var(out - x) - 4.0) < 0.08


def test_psimex_negative_lambda():
    with pytest.raises(ValueError):
        psimex_remeasure(np.zeros(3), 1.0, -0.5, stream("d"))


def test_npsimex_lambda_zero_identity():
    x = np.array([1.0, 2.0])
    eset = ErrorSet(np.array([5.0]))
    assert np.array_equal(npsimex_remeasure(x, eset, 0, stream("e")), x)


def test_npsimex_singleton_atom():
    x = np.array([1.0, 2.0])
    eset = ErrorSet(np.array([0.25]))
    assert np.array_equal(
        npsimex_remeasure(x, eset, 3, stream("f")), x + 0.75
    )


def test_npsimex_noise_variance_additivity():
    n = 100_000
    values = np.array([-2.0, -0.5, 0.0, 1.0, 3.0])
    pop_var = np.var(values)
    x = np.zeros(n)
    out = npsimex_remeasure(x, ErrorSet(values), 2, stream("g"))
    assert np.var(out) == pytest.approx(2 * pop_var, rel=0.05)


def test_npsimex_non_integer_lambda():
    with pytest.raises(ValueError):
        npsimex_remeasure(np.zeros(3), ErrorSet(np.array([1.0])), 1.5, stream("h"))


# -- run_simex --------------------------------------------------------------


def _validation_dataset(n=2000, seed=101):
    s = RandomStream(seed)
    x = sample(DistributionSpec.normal(5, 2), n, s.derive("x"))
    u = sample(DistributionSpec.student_t(5), n, s.derive("u"))
    x_star = x + u
    data = ObservedData(None, x_star[:, None], None)
    validation = ValidationPairs(x, x_star)
    return data, validation, x


def test_zero_error_set_reduces_to_naive():
    n = 500
    s = RandomStream(3)
    x = sample(DistributionSpec.normal(5, 2), n, s.derive("x"))
    data = ObservedData(None, x[:, None], None)
    validation = ValidationPairs(x, x)  # proxy equals truth
    est = FourthMomentEstimator()
    naive = naive_estimate(data, est, validation)
    result = run_simex(data, est, "NP", s.derive("np"), validation=validation, B=5)
    assert np.allclose(result.trace.mean_estimates, naive.estimate[0])
    assert result.estimate == pytest.approx(naive.estimate, rel=1e-10)


def test_lambda_zero_anchor_equals_naive_exactly():
    data, validation, _ = _validation_dataset()
    est = FourthMomentEstimator()
    naive = naive_estimate(data, est, validation)
    for method in ("P", "NP"):
        result = run_simex(
            data, est, method, stream(method), validation=validation, B=3
        )
        assert result.trace.mean_estimates[0, 0] == naive.estimate[0]
        assert result.trace.raw[0].shape == (1, 1)


def test_trace_mean_matches_raw():
    data, validation, _ = _validation_dataset(n=300)
    result = run_simex(
        data,
        FourthMomentEstimator(),
        "NP",
        stream("raw"),
        validation=validation,
        B=7,
    )
    for m in range(result.trace.lambdas.size):
        assert result.trace.mean_estimates[m] == pytest.approx(
            result.trace.raw[m].mean(axis=0), rel=1e-14
        )


def test_corrected_estimate_equals_fit_at_minus_one():
    data, validation, _ = _validation_dataset(n=300)
    result = run_simex(
        data,
        FourthMomentEstimator(),
        "NP",
        stream("fit"),
        validation=validation,
        B=5,
    )
    assert result.estimate[0] == result.fits[0].predict(-1.0)


def test_run_simex_deterministic():
    data, validation, _ = _validation_dataset(n=400)
    est = FourthMomentEstimator()
    r1 = run_simex(data, est, "NP", stream("det"), validation=validation, B=4)
    r2 = run_simex(data, est, "NP", stream("det"), validation=validation, B=4)
    assert np.array_equal(r1.estimate, r2.estimate)
    assert np.array_equal(r1.trace.mean_estimates, r2.trace.mean_estimates)


def test_np_injected_noise_moments():
    # injected noise at grid point lambda has mean ~0 and variance
    # ~lambda * var(error set)
    n = 50_000
    s = RandomStream(55)
    x = sample(DistributionSpec.normal(0, 1), n, s.derive("x"))
    u = sample(DistributionSpec.laplace(0, 1), n, s.derive("u"))
    data = ObservedData(None, (x + u)[:, None], None)
    validation = ValidationPairs(x, x + u)
    eset_var = np.var(u)

    class NoiseProbe:
        name = "probe"
        has_variance = False

        def __init__(self, x_tilde):
            self.x_tilde = x_tilde
            self.rows = []

        def fit(self, y, xcur, z):
            noise = xcur - self.x_tilde
            self.rows.append((noise.mean(), noise.var()))
            return np.array([0.0])

    probe = NoiseProbe(x + u)
    run_simex(
        data,
        probe,
        "NP",
        s.derive("probe"),
        validation=validation,
        B=2,
        grid=LambdaGrid(np.array([0.0, 1.0, 4.0]), "nonparametric"),
    )
    # rows: anchor, then (b, lambda) pairs in order lam=1, lam=4 per replicate
    means = np.array([r[0] for r in probe.rows[1:]])
    variances = np.array([r[1] for r in probe.rows[1:]])
    lams = np.array([1.0, 4.0, 1.0, 4.0])
    assert np.all(np.abs(means) < 4 * np.sqrt(lams * eset_var / n))
    assert variances == pytest.approx(lams * eset_var, rel=0.05)


def test_replicate_mode_psimex_unbiased_for_normal_errors():
    # two replicates with normal errors: P-SIMEX must remove the bias
    n = 40_000
    s = RandomStream(202)
    x = sample(DistributionSpec.normal(5, 2), n, s.derive("x"))
    u = sample(DistributionSpec.normal(0, 1.5), 2 * n, s.derive("u")).reshape(n, 2)
    data = ObservedData(None, x[:, None] + u, None)
    est = FourthMomentEstimator()
    result = run_simex(data, est, "P", s.derive("p"), B=100)
    truth_fit = est.fit(None, x, None)
    naive = naive_estimate(data, est).estimate
    assert abs(result.estimate[0] - truth_fit[0]) < 0.25 * abs(
        naive[0] - truth_fit[0]
    )


def test_grid_method_mismatch():
    data, validation, _ = _validation_dataset(n=100)
    with pytest.raises(ConfigurationError):
        run_simex(
            data,
            FourthMomentEstimator(),
            "NP",
            stream("m"),
            validation=validation,
            grid=LambdaGrid.parametric(),
        )


def test_failure_policy_aborts():
    from npsimex.exceptions import MethodFailureError, SeparationError

    data, validation, _ = _validation_dataset(n=100)

    class Flaky:
        name = "flaky"
        has_variance = False
        calls = 0

        def fit(self, y, x, z):
            Flaky.calls += 1
            if Flaky.calls > 1:  # anchor succeeds, every replicate fails
                raise SeparationError("separation")
            return np.array([1.0])

    with pytest.raises(MethodFailureError, match="failed"):
        run_simex(
            data, Flaky(), "NP", stream("fl"), validation=validation, B=10
        )


def test_logistic_replicate_run_and_trace_export(tmp_path):
    n = 3000
    s = RandomStream(404)
    from scipy.special import expit

    x = sample(DistributionSpec.normal(1, np.sqrt(2)), n, s.derive("x"))
    u = sample(DistributionSpec.student_t(5), 2 * n, s.derive("u")).reshape(n, 2)
    y = (s.derive("y").generator.random(n) < expit(1 - x)).astype(float)
    data = ObservedData(y, x[:, None] + u, None)
    result = run_simex(
        data, LogisticEstimator(), "NP", s.derive("np"), B=20,
        extrapolant="rational",
    )
    assert result.estimate.shape == (2,)
    # corrected slope should sit closer to -1 than the naive slope
    naive = naive_estimate(data, LogisticEstimator()).estimate
    assert abs(result.estimate[1] + 1) < abs(naive[1] + 1)

    path = tmp_path / "trace.csv"
    export_trace_csv(result, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "method,coordinate,lambda,estimate,b_count"
    assert len(lines) == 1 + 2 * 10  # two coordinates, ten grid points
