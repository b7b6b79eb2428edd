"""Brute-force reference computations for tiny instances.

Everything here enumerates supports and is exponential in n; each routine
checks an `OracleBudget` before it starts. These are used by the test
suite and by the ``verify`` subcommand, never by the solvers.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import BudgetExceededError, ConfigError, DimensionError, UnsupportedError
from .linalg import Dataset, hat_matrix
from .losses import gamma_univariate_min_vec, loss_value
from .solvers import beta_exact
from .thresholding import quantile_threshold

# finite stand-in for the infinite shifts that absorb a classification sample
STAND_IN_NU = 1e-12


@dataclass(frozen=True)
class OracleBudget:
    max_enumerations: int = 10**6

    def check(self, count, what):
        if count > self.max_enumerations:
            raise BudgetExceededError(
                f"{what}: {count} enumerations exceed the budget of {self.max_enumerations}")


DEFAULT_BUDGET = OracleBudget()


def theta_objective(xi, s, nu):
    """``||s - xi||^2/2 + nu ||xi||^2/2``."""
    d = np.asarray(s, dtype=float) - xi
    return 0.5 * float(d @ d) + 0.5 * nu * float(np.dot(xi, xi))


def theta_sharp_bruteforce(s, q, nu, budget=DEFAULT_BUDGET):
    """Exhaustive ``min ||s - xi||^2/2 + nu ||xi||^2/2`` over ``||xi||_0 <= q``.

    On a fixed support S the minimizer is ``s_S / (1 + nu)``, so the value is
    ``||s||^2/2 - sum_S s_i^2 / (2 (1 + nu))``; every subset of size <= q is
    scored at once through a 0/1 mask matrix.

    Returns ``(xi, value, n_subsets)``; ties resolve to the first subset in
    mask order.
    """
    s = np.asarray(s, dtype=float)
    n = s.size
    budget.check(2**n, "subset enumeration")
    masks = ((np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    masks = masks[masks.sum(axis=1) <= q]
    values = 0.5 * float(s @ s) - (masks @ (s * s)) / (2.0 * (1.0 + nu))
    best = int(np.argmin(values))
    xi = np.where(masks[best], s / (1.0 + nu), 0.0)
    return xi, theta_objective(xi, s, nu), masks.shape[0]


def _subset_data(data, keep):
    return Dataset(data.X[keep], data.y[keep])


def _fit_subset(data, loss, keep, nu_beta):
    sub = _subset_data(data, keep)
    beta0 = np.zeros(data.p)
    beta = beta_exact(sub, loss, np.zeros(sub.n), beta0, nu_beta, tol=1e-12, max_iter=200)
    value = loss_value(loss, sub.X @ beta, sub.y) + 0.5 * nu_beta * float(beta @ beta)
    rank = int(np.linalg.matrix_rank(sub.X))
    return beta, value, rank


def _absorbing_shift(loss, data, beta, idx):
    a = data.X[idx] @ beta
    t, _ = gamma_univariate_min_vec(loss, a, data.y[idx], STAND_IN_NU)
    return t


@dataclass
class OracleResult:
    """A certified minimum with its audit trail."""

    beta: np.ndarray
    gamma: np.ndarray
    value: float
    optimal_supports: list
    enumerated: int
    rank_deficient: list = field(default_factory=list)
    note: str = ""


def _ties(values, tol=1e-10):
    v = np.asarray(values)
    lo = float(v.min())
    return [i for i in range(v.size) if v[i] <= lo + tol * (1.0 + abs(lo))]


def trimmed_min_exhaustive(data, loss, q, budget=DEFAULT_BUDGET, nu_beta=0.0):
    """Global minimum of the trimmed loss: best fit after deleting q samples.

    Every deletion set of size q is tried; the retained samples are fit
    exactly (minimum-norm least squares or damped Newton), with an optional
    ridge ``nu_beta ||beta||^2/2`` that keeps separable classification
    subsets finite. ``gamma`` is filled in on the deleted samples with the
    shift that absorbs them (a large finite stand-in for classification).
    """
    n = data.n
    if not 0 <= q <= n:
        raise DimensionError(f"q={q} must lie in [0, {n}]")
    count = math.comb(n, q)
    budget.check(count, "trimmed enumeration")
    supports, values, betas, deficient = [], [], [], []
    for D in itertools.combinations(range(n), q):
        keep = np.setdiff1d(np.arange(n), D)
        beta, value, rank = _fit_subset(data, loss, keep, nu_beta)
        if rank < data.p:
            deficient.append(D)
        supports.append(D)
        values.append(value)
        betas.append(beta)
    best = _ties(values)
    i = best[0]
    beta = betas[i]
    gamma = np.zeros(n)
    D = np.array(supports[i], dtype=int)
    if D.size:
        gamma[D] = _absorbing_shift(loss, data, beta, D)
    return OracleResult(beta, gamma, values[i], [supports[j] for j in best], count, deficient,
                        note="classification shifts are finite stand-ins" if loss.is_classification else "")


def joint_min_exhaustive(data, loss, q, budget=DEFAULT_BUDGET, nu_beta=0.0):
    """Global minimum of ``l(X beta + gamma) + nu_beta ||beta||^2/2`` over ``||gamma||_0 <= q``.

    Supports of size exactly q are enough (absorbing one more sample never
    increases the loss). For each support the problem is solved jointly in
    (beta, gamma_S): least squares on ``[X, I_S]`` for the quadratic loss, and
    otherwise BFGS on beta with every gamma_i profiled out by its univariate
    minimizer (with a 1e-12 ridge as a finite stand-in for infinite shifts).
    """
    n, p = data.n, data.p
    if not 0 <= q <= n:
        raise DimensionError(f"q={q} must lie in [0, {n}]")
    count = math.comb(n, q)
    budget.check(count, "joint enumeration")
    X, y = data.X, data.y
    results = []
    for S in itertools.combinations(range(n), q):
        S = np.array(S, dtype=int)
        if loss.kind == "quadratic":
            E = np.zeros((n, S.size))
            E[S, np.arange(S.size)] = 1.0
            A = np.hstack([X, E])
            if nu_beta > 0:
                reg = np.sqrt(nu_beta) * np.hstack([np.eye(p), np.zeros((p, S.size))])
                A2, y2 = np.vstack([A, reg]), np.concatenate([y, np.zeros(p)])
            else:
                A2, y2 = A, y
            coef = np.linalg.lstsq(A2, y2, rcond=None)[0]
            beta = coef[:p]
            gamma = np.zeros(n)
            gamma[S] = coef[p:]
        else:
            beta = _profile_bfgs(data, loss, S, nu_beta)
            gamma = np.zeros(n)
            if S.size:
                gamma[S] = _absorbing_shift(loss, data, beta, S)
        value = loss_value(loss, X @ beta + gamma, y) + 0.5 * nu_beta * float(beta @ beta)
        results.append((tuple(S.tolist()), value, beta, gamma))
    best = _ties([r[1] for r in results])
    S, value, beta, gamma = results[best[0]]
    return OracleResult(beta, gamma, value, [results[j][0] for j in best], count,
                        note="classification shifts are finite stand-ins" if loss.is_classification else "")


def _profile_bfgs(data, loss, S, nu_beta):
    X, y = data.X, data.y
    inS = np.zeros(data.n, dtype=bool)
    inS[S] = True

    def f(beta):
        eta = X @ beta
        t, best = gamma_univariate_min_vec(loss, eta[inS], y[inS], STAND_IN_NU) if inS.any() else (None, np.zeros(0))
        val = float(np.sum(loss.per_sample(eta[~inS], y[~inS]))) + float(np.sum(best))
        g_eta = np.zeros(data.n)
        g_eta[~inS] = loss.derivative(eta[~inS], y[~inS])
        if inS.any():
            # envelope theorem: d/d eta of min_t [l0(eta + t) + nu t^2/2] = -nu t*
            g_eta[inS] = -STAND_IN_NU * t
        return val + 0.5 * nu_beta * float(beta @ beta), X.T @ g_eta + nu_beta * beta

    res = minimize(f, np.zeros(data.p), jac=True, method="BFGS", options={"gtol": 1e-11, "maxiter": 2000})
    return res.x


def trimmed_value_at(data, loss, beta, q):
    """Sum of the ``n - q`` smallest per-sample losses at a fixed beta."""
    l0 = np.sort(loss.per_sample(data.X @ beta, data.y))
    return float(np.sum(l0[: data.n - q]))


def absorbed_value_exhaustive(data, loss, beta, q, budget=DEFAULT_BUDGET):
    """``min over ||gamma||_0 <= q`` of ``l(X beta + gamma)`` at fixed beta, by enumeration.

    Samples in the support are set to their (stand-in) per-sample infimum.
    Returns ``(value, best_support)``.
    """
    n = data.n
    budget.check(math.comb(n, q), "absorbed-value enumeration")
    eta = data.X @ beta
    l0 = loss.per_sample(eta, data.y)
    _, absorbed = gamma_univariate_min_vec(loss, eta, data.y, STAND_IN_NU)
    best, arg = np.inf, ()
    for S in itertools.combinations(range(n), q):
        S = list(S)
        v = float(np.sum(l0) - np.sum(l0[S]) + np.sum(absorbed[S]))
        if v < best:
            best, arg = v, tuple(S)
    return best, arg


def winsorized_min_exhaustive(data, loss, tau, budget=DEFAULT_BUDGET, grid_size=201, radius=None,
                              polish=5):
    """Grid-certified minimum of ``sum_i min(tau, l0_i(beta))`` for p <= 2.

    The grid is centred at the plain (untrimmed) fit with half-width
    ``radius`` (default ``max(5, 3 ||beta_plain||_inf)``); the ``polish`` best
    grid points are refined by Nelder-Mead.

    Returns ``(beta, value, degenerate)``; ``degenerate`` is True when
    ``tau <= 0`` and every beta attains the minimum.
    """
    if data.p > 2:
        raise UnsupportedError("winsorized enumeration is limited to p <= 2")
    p = data.p
    budget.check(grid_size**p, "winsorized grid")
    X, y = data.X, data.y

    def f(beta):
        return float(np.sum(np.minimum(tau, loss.per_sample(X @ beta, y))))

    if tau <= 0:
        beta = np.zeros(p)
        return beta, f(beta), True
    center = beta_exact(data, loss, np.zeros(data.n), np.zeros(p), 1e-8)
    r = radius if radius is not None else max(5.0, 3.0 * float(np.max(np.abs(center))))
    axes = [np.linspace(c - r, c + r, grid_size) for c in center]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    L = loss.per_sample(X @ pts.T, np.broadcast_to(y[:, None], (data.n, pts.shape[0])))
    vals = np.minimum(tau, L).sum(axis=0)
    order = np.argsort(vals, kind="stable")[:polish]
    best_b, best_v = pts[order[0]], float(vals[order[0]])
    for i in order:
        res = minimize(f, pts[i], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        if res.fun < best_v:
            best_b, best_v = res.x, float(res.fun)
    return np.asarray(best_b), best_v, False


@dataclass(frozen=True)
class RipReport:
    """Restricted margin of ``I - H`` over sparse directions.

    ``epsilon = 1 - max ||H D||^2 / ||D||^2`` over ``||D||_0 <= support_size``.
    ``kappa`` and ``satisfied`` need the budget multiplier ``vartheta``.
    """

    epsilon: float
    kappa: float | None
    support_size: int
    satisfied: bool | None
    supports_checked: int


def rip_margin(X, support_size, budget=DEFAULT_BUDGET, vartheta=None, nu=0.0):
    """Exact margin by eigen-solving ``H[S, S]`` for every support of the given size.

    Larger supports can only raise the top eigenvalue (interlacing), so
    supports of exactly ``min(support_size, n)`` entries suffice.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    k = min(int(support_size), n)
    if k < 0:
        raise ConfigError("support_size must be nonnegative")
    count = math.comb(n, k)
    budget.check(count, "restricted margin")
    H = hat_matrix(X).H if np.any(X) else np.zeros((n, n))
    top = 0.0
    for S in itertools.combinations(range(n), k):
        if k:
            top = max(top, float(np.linalg.eigvalsh(H[np.ix_(S, S)])[-1]))
    eps = 1.0 - min(top, 1.0)
    kappa = satisfied = None
    if vartheta is not None:
        if vartheta <= 0:
            raise ConfigError("vartheta must be positive")
        r = 1.0 / math.sqrt(vartheta)
        num = eps - r + (1.0 - r) * nu
        kappa = math.inf if eps >= 1.0 else num / (1.0 - eps)
        satisfied = bool(eps + (1.0 - r) * nu > r)
    return RipReport(eps, kappa, int(support_size), satisfied, count)


def statistical_error_trace(data, gamma_star, q, nu, iters=50):
    """``||H (gamma_t - gamma*)||^2`` along the gamma-only iteration from ``Theta#(y)``."""
    hat = hat_matrix(data.X)
    gamma, _ = quantile_threshold(data.y, q, nu)
    out = []
    for _ in range(iters):
        d = hat.apply(gamma - gamma_star)
        out.append(float(d @ d))
        gamma, _ = quantile_threshold(hat.apply(gamma) + hat.complement(data.y), q, nu)
    return np.array(out)
