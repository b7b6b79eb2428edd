"""Synthetic designs with planted high-leverage outliers, and detection metrics.

Rows are drawn iid from ``N(0, Sigma)``; the first ``o_star`` rows are then
overwritten with a constant leverage value and receive a mean shift of
``gamma_magnitude``. Regression responses are ``X beta* + gamma* + sigma eps``;
classification responses are Bernoulli with mean ``expit(X beta* + gamma*)``.
"""

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.special import expit

from .errors import ConfigError, DimensionError
from .linalg import Dataset
from .losses import logistic, quadratic
from .solvers import FitConfig, fit_piq

PRESETS = {
    "ex1_reg_lowdim": dict(
        n=1000, p=10, rho=0.5, o_star=100, gamma_magnitude=5.0,
        beta_star=(1, 1, 0.5, 0.5, -1.5, -1.5, -1, -1, 1, 1)),
    "ex2_cls_lowdim": dict(
        n=1000, p=10, rho=0.5, o_star=120, gamma_magnitude=-90.0,
        beta_star=(3, 3, 1.5, 1.5, 3, 3, -3, -3, 3, 3)),
    "ex3_reg_highdim": dict(
        n=200, p=1000, rho=0.5, o_star=10, gamma_magnitude=5.0,
        beta_star=(1, 0.5, 0, 0, -0.5, -1)),
    "ex4_cls_highdim": dict(
        n=200, p=1000, rho=0.5, o_star=10, gamma_magnitude=-45.0,
        beta_star=(3, 1.5, 3)),
}
EXAMPLE_NUMBERS = {1: "ex1_reg_lowdim", 2: "ex2_cls_lowdim", 3: "ex3_reg_highdim", 4: "ex4_cls_highdim"}
COVARIANCES = ("toeplitz", "equicorrelated", "blocked")
TEST_SET_SIZE = 10_000


@dataclass(frozen=True)
class SimSpec:
    """Parameters of one synthetic design.

    Use `SimSpec.preset` for the four named examples; ``beta_star`` shorter
    than ``p`` is zero-padded, longer is truncated to its first ``p``
    entries.
    """

    example: str = "custom"
    n: int = 200
    p: int = 10
    rho: float = 0.5
    o_star: int = 0
    beta_star: tuple = ()
    gamma_magnitude: float = 5.0
    leverage_value: float = 3.0
    noise_sigma: float = 1.0
    seed: int = 0
    covariance: str = "toeplitz"
    task: str = "regression"

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ConfigError("n and p must be positive")
        if not 0 <= self.rho < 1:
            raise ConfigError("rho must lie in [0, 1)")
        if not 0 <= self.o_star <= self.n / 2:
            raise ConfigError(f"o_star={self.o_star} must satisfy 0 <= o_star <= n/2")
        if self.covariance not in COVARIANCES:
            raise ConfigError(f"unknown covariance {self.covariance!r}")
        if self.task not in ("regression", "classification"):
            raise ConfigError(f"unknown task {self.task!r}")
        b = tuple(float(v) for v in self.beta_star)[: self.p]
        object.__setattr__(self, "beta_star", b + (0.0,) * (self.p - len(b)))

    @classmethod
    def preset(cls, example, **overrides):
        if isinstance(example, int) or str(example).isdigit():
            example = EXAMPLE_NUMBERS.get(int(example), str(example))
        if example not in PRESETS:
            raise ConfigError(f"unknown example {example!r}")
        kw = dict(PRESETS[example])
        kw["task"] = "classification" if "_cls_" in example else "regression"
        kw.update(overrides)
        return cls(example=example, **kw)

    @property
    def s_star(self):
        return int(np.count_nonzero(self.beta_star))

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SimInstance:
    data: Dataset
    beta_star: np.ndarray
    gamma_star: np.ndarray
    outlier_indices: np.ndarray
    spec: SimSpec


@lru_cache(maxsize=32)
def _cholesky(kind, p, rho):
    Sigma = covariance_matrix(kind, p, rho)
    return np.linalg.cholesky(Sigma)


def covariance_matrix(kind, p, rho):
    """Toeplitz ``rho^|i-j|``, equicorrelated, or two equicorrelated diagonal blocks."""
    if kind == "toeplitz":
        i = np.arange(p)
        return rho ** np.abs(i[:, None] - i[None, :]).astype(float)
    if kind == "equicorrelated":
        return np.full((p, p), rho) + (1 - rho) * np.eye(p)
    if kind == "blocked":
        S = np.zeros((p, p))
        h = (p + 1) // 2
        for sl in (slice(0, h), slice(h, p)):
            k = sl.stop - sl.start
            S[sl, sl] = np.full((k, k), rho) + (1 - rho) * np.eye(k)
        return S
    raise ConfigError(f"unknown covariance {kind!r}")


def sample_design(spec, n, rng):
    L = _cholesky(spec.covariance, spec.p, spec.rho)
    return rng.standard_normal((n, spec.p)) @ L.T


def generate(spec):
    """Draw one instance; identical specs (including seed) give identical bytes."""
    rng = np.random.default_rng(spec.seed)
    X = sample_design(spec, spec.n, rng)
    o = spec.o_star
    X[:o] = spec.leverage_value
    beta = np.array(spec.beta_star)
    gamma = np.zeros(spec.n)
    gamma[:o] = spec.gamma_magnitude
    eta = X @ beta + gamma
    if spec.task == "regression":
        y = eta + spec.noise_sigma * rng.standard_normal(spec.n)
    else:
        y = (rng.random(spec.n) < expit(eta)).astype(float)
    data = Dataset(X, y, metadata={"example": spec.example, "seed": spec.seed})
    return SimInstance(data, beta, gamma, np.arange(o), spec)


def clean_test_set(spec, size=TEST_SET_SIZE, seed=None):
    """A fresh outlier-free sample from the same model (for classification error)."""
    s = replace(spec, n=size, o_star=0, seed=spec.seed if seed is None else seed)
    return generate(s).data


@dataclass
class MetricsReport:
    """Detection and accuracy metrics of one fit.

    ``err`` is the summed squared error ``||beta_hat - beta*||^2`` for
    regression and the test misclassification rate for classification.
    Rates lie in [0, 1]; ``false_alarm`` is the fraction of true inliers
    flagged, ``false_alarm_beta`` the fraction of null variables selected.
    """

    err: float
    masking_rate: float
    jd: bool
    false_alarm: float
    masking_beta: float
    jd_beta: bool
    false_alarm_beta: float
    runtime_seconds: float = 0.0
    iterations: int = 0
    converged: bool = True


def _detection(selected, truth, size):
    selected = set(int(i) for i in selected)
    truth = set(int(i) for i in truth)
    missed = len(truth - selected)
    spurious = len(selected - truth)
    m = missed / len(truth) if truth else 0.0
    fa = spurious / (size - len(truth)) if size > len(truth) else 0.0
    return m, missed == 0, fa


def evaluate(fit, truth, task=None, test_set=None, runtime_seconds=0.0):
    """Compare a fit against the planted truth.

    An index counts as detected iff its fitted coefficient is exactly nonzero.
    Classification needs ``test_set``; predictions are ``1{x^T beta_hat > 0}``.
    """
    task = task or truth.spec.task
    beta_star, gamma_star = truth.beta_star, truth.gamma_star
    if fit.beta.shape != beta_star.shape or fit.gamma.shape != gamma_star.shape:
        raise DimensionError("fit and truth dimensions differ")
    if task == "regression":
        d = fit.beta - beta_star
        err = float(d @ d)
    elif task == "classification":
        if test_set is None:
            raise ConfigError("classification metrics need a clean test set")
        pred = (test_set.X @ fit.beta > 0).astype(float)
        err = float(np.mean(pred != test_set.y))
    else:
        raise ConfigError(f"unknown task {task!r}")
    m, jd, fa = _detection(np.flatnonzero(fit.gamma), np.flatnonzero(gamma_star), gamma_star.size)
    mb, jdb, fab = _detection(np.flatnonzero(fit.beta), np.flatnonzero(beta_star), beta_star.size)
    return MetricsReport(err, m, jd, fa, mb, jdb, fab, runtime_seconds,
                         fit.iterations, fit.converged)


def default_config(spec, **overrides):
    """Budgets at 1.5 times the truth, BCD-type solver, per-task cooling."""
    q_gamma = math.ceil(1.5 * spec.o_star)
    kw = dict(q_gamma=min(q_gamma, spec.n // 2), nu=1e-4)
    if spec.task == "regression":
        kw.update(solver="iq_bcd_regression", cooling="quadratic")
        if spec.p >= spec.n:
            # a wide beta budget lets a dense beta fit the constant leverage rows while
            # most samples are still absorbed; start the gamma budget at n/2 and settle
            # beta within each sweep
            kw.update(solver="bcd_general", q_beta=min(math.ceil(1.5 * spec.s_star), spec.p),
                      gamma_upper=spec.n // 2, beta_update="iht")
    else:
        kw.update(solver="bcd_general", cooling="logarithmic")
        if spec.p >= spec.n:
            kw.update(q_beta=min(math.ceil(1.5 * spec.s_star), spec.p))
    kw.update(overrides)
    return FitConfig(**kw)


def default_loss(spec):
    return quadratic() if spec.task == "regression" else logistic()


def replication_seed(base_seed, rep):
    """Independent per-replication seed derived from ``(base_seed, rep)``."""
    return int(np.random.SeedSequence([base_seed, rep]).generate_state(1)[0])


def _one_replication(args):
    spec, config, loss, rep, test_size = args
    seed = replication_seed(spec.seed, rep)
    inst = generate(replace(spec, seed=seed))
    test = None
    if spec.task == "classification":
        test = clean_test_set(spec, test_size, replication_seed(seed, 1))
    t0 = time.perf_counter()
    fit = fit_piq(inst.data, loss, config)
    elapsed = time.perf_counter() - t0
    return evaluate(fit, inst, spec.task, test, elapsed)


TABLE_COLUMNS = ("Err", "M", "JD", "FA", "M_beta", "FA_beta", "JD_beta", "T")


@dataclass
class ReplicationTable:
    """Per-replication reports plus aggregates.

    Aggregates: mean Err, M / FA as mean percentages, JD as percentage of
    replications with no miss, T as total seconds.
    """

    spec: SimSpec
    config: FitConfig
    reports: list = field(default_factory=list)

    @property
    def aggregate(self):
        r = self.reports
        return {
            "Err": float(np.mean([x.err for x in r])),
            "M": 100.0 * float(np.mean([x.masking_rate for x in r])),
            "JD": 100.0 * float(np.mean([x.jd for x in r])),
            "FA": 100.0 * float(np.mean([x.false_alarm for x in r])),
            "M_beta": 100.0 * float(np.mean([x.masking_beta for x in r])),
            "FA_beta": 100.0 * float(np.mean([x.false_alarm_beta for x in r])),
            "JD_beta": 100.0 * float(np.mean([x.jd_beta for x in r])),
            "T": float(np.sum([x.runtime_seconds for x in r])),
        }

    def to_csv(self, include_time=False, label=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = [c for c in TABLE_COLUMNS if include_time or c != "T"]
        w.writerow(["setting", "reps"] + cols)
        agg = self.aggregate
        label = label or f"{self.spec.example} n={self.spec.n} p={self.spec.p} o*={self.spec.o_star}"
        w.writerow([label, len(self.reports)] + [f"{agg[c]:.6g}" for c in cols])
        return buf.getvalue()


def run_replications(spec, config=None, reps=20, loss=None, jobs=1, test_size=TEST_SET_SIZE):
    """Fit ``reps`` independent draws of ``spec`` and collect their metrics.

    Replication ``r`` uses seed ``replication_seed(spec.seed, r)``, so the
    table does not depend on ``jobs``.
    """
    if reps < 1:
        raise ConfigError("reps must be >= 1")
    config = config or default_config(spec)
    loss = loss or default_loss(spec)
    tasks = [(spec, config, loss, r, test_size) for r in range(reps)]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_one_replication, tasks))
    else:
        reports = [_one_replication(t) for t in tasks]
    return ReplicationTable(spec, config, reports)
