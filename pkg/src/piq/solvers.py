"""Iterative quantile-thresholding solvers and the progressive (PIQ) driver.

Four step operations are provided:

* `iq_bcd_regression_step`  -- exact blockwise minimization for the quadratic loss
* `mm_joint_regression_step` -- joint linearized (MM) update for the quadratic loss
* `bcd_general_step`        -- exact gamma-support selection for any additive loss,
  followed by an exact or single-step beta update
* `mm_general_step`         -- joint MM update for any smooth loss and any
  thresholding rule on beta

`fit_piq` runs one of them while the cardinality budgets follow a cooling
schedule from a large value down to their targets.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg
from .errors import ConfigError, ConvergenceError, DimensionError, UnsupportedError
from .losses import LossModel, gamma_univariate_min_vec, loss_value
from .thresholding import (
    ThresholdRule,
    apply_threshold,
    penalty_total,
    quantile_threshold,
    top_q_indices,
)

SOLVERS = ("iq_bcd_regression", "mm_joint_regression", "bcd_general", "mm_general")
COOLING_KINDS = ("constant", "quadratic", "sigmoidal", "logarithmic")
COOLING_ALIASES = {"const": "constant", "quad": "quadratic", "sig": "sigmoidal", "log": "logarithmic"}
SAFETY = 1.01
MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class CoolingSchedule:
    """Integer cardinality budget Q(t), nonincreasing from `upper` to `lower`.

    Q(t) equals `lower` for every t >= `horizon`. A constant schedule ignores
    `upper` and is at its target from the first iteration.
    """

    kind: str
    upper: int
    lower: int
    horizon: int = 200

    def __post_init__(self):
        kind = COOLING_ALIASES.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        if kind not in COOLING_KINDS:
            raise ConfigError(f"unknown cooling schedule {self.kind!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not 0 <= self.lower <= self.upper:
            raise ConfigError(f"need 0 <= lower <= upper, got {self.lower}, {self.upper}")

    @property
    def stable_from(self):
        """First iteration at which the budget sits at its target."""
        return 1 if self.kind == "constant" else self.horizon

    def raw(self, t):
        U, L, T = self.upper, self.lower, self.horizon
        if self.kind == "constant":
            return float(L)
        if self.kind == "quadratic":
            return U - (U - L) / T**2 * t**2
        if self.kind == "sigmoidal":
            # calibrated so that Q(T) = L; L = 0 is aimed at 1/2, which rounds to 0
            target = max(L, 0.5)
            if target >= U:
                return float(U)
            a = math.log(2.0 * U / target - 1.0) / T
            return 2.0 * U / (1.0 + math.exp(min(a * t, 700.0)))
        if t < 1:
            return float(U)
        if T == 1:
            return float(L)
        return U - (U - L) / math.log(T) * math.log(t)

    def __call__(self, t):
        if t >= self.horizon or self.kind == "constant":
            return self.lower
        q = int(math.floor(self.raw(t) + 0.5))
        return min(max(q, self.lower), self.upper)


@dataclass
class FitConfig:
    """Solver settings.

    Stepsizes are expressed as ``rho`` (the inverse stepsize, equal to
    ``varrho**2`` in the scaled MM form). ``stepsize`` is one of ``"fixed"``
    (use `rho`), ``"lipschitz"`` (a safe bound derived from the loss and the
    design) or ``"backtracking"`` (start from `rho` or the loss's Lipschitz
    constant and divide by `shrink` until the surrogate majorizes).

    ``beta_update`` applies to ``bcd_general``: ``"exact"`` minimizes the
    beta-subproblem fully, ``"single"`` takes one thresholded gradient step,
    ``"iht"`` repeats thresholded gradient steps until beta stops moving
    (at most ``beta_inner_max``), ``"auto"`` is exact unless a beta budget
    or penalty is set, and single otherwise.
    """

    solver: str = "iq_bcd_regression"
    q_gamma: int = 0
    q_beta: int | None = None
    nu: float = 1e-4
    nu_beta: float = 0.0
    lam: float | None = None
    beta_rule: str = "soft"
    stepsize: str = "lipschitz"
    rho: float | None = None
    shrink: float = 0.5
    cooling: str = "quadratic"
    horizon: int = 200
    gamma_upper: int | None = None
    beta_cooling: str | None = None
    beta_upper: int | None = None
    beta_update: str = "auto"
    beta_inner_max: int = 50
    max_iters: int = 2000
    tol_objective: float = 1e-9
    tol_iterate: float = 1e-7
    seed: int = 0

    def validate(self, n, p, loss=None):
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}; choose from {SOLVERS}")
        if not 0 <= self.q_gamma <= n / 2:
            raise ConfigError(f"q_gamma={self.q_gamma} must satisfy 0 <= q_gamma <= n/2 = {n / 2}")
        if self.q_beta is not None and not 0 <= self.q_beta <= p:
            raise ConfigError(f"q_beta={self.q_beta} must lie in [0, p={p}]")
        if self.nu < 0 or self.nu_beta < 0:
            raise ConfigError("nu and nu_beta must be nonnegative")
        if self.stepsize not in ("fixed", "lipschitz", "backtracking"):
            raise ConfigError(f"unknown stepsize policy {self.stepsize!r}")
        if self.stepsize == "fixed" and not (self.rho and self.rho > 0):
            raise ConfigError("fixed stepsize needs rho > 0")
        if not 0 < self.shrink < 1:
            raise ConfigError("shrink must lie in (0, 1)")
        if self.lam is not None:
            if self.lam < 0:
                raise ConfigError("lam must be nonnegative")
            if self.beta_rule not in ("soft", "hard"):
                raise ConfigError("a penalty on beta needs beta_rule 'soft' or 'hard'")
            if self.q_beta is not None:
                raise ConfigError("set either q_beta or lam, not both")
            if self.stepsize == "backtracking":
                raise ConfigError("backtracking would rescale the beta penalty; use a fixed or lipschitz stepsize")
        if self.beta_update not in ("auto", "exact", "single", "iht"):
            raise ConfigError(f"unknown beta_update {self.beta_update!r}")
        if self.beta_update == "exact" and (self.q_beta is not None or self.lam is not None):
            raise ConfigError("exact beta updates are only available without q_beta or lam")
        if self.max_iters < 1 or self.beta_inner_max < 1:
            raise ConfigError("max_iters and beta_inner_max must be >= 1")
        if loss is not None and self.solver in ("iq_bcd_regression", "mm_joint_regression"):
            if loss.kind != "quadratic":
                raise UnsupportedError(f"solver {self.solver} requires the quadratic loss")
            if self.q_beta is not None or self.lam is not None:
                raise UnsupportedError(f"solver {self.solver} has no beta regularization; use bcd_general or mm_general")
        COOLING_ALIASES.get(self.cooling, self.cooling) in COOLING_KINDS or _bad_cooling(self.cooling)

    def gamma_schedule(self, n):
        upper = n if self.gamma_upper is None else self.gamma_upper
        kind = COOLING_ALIASES.get(self.cooling, self.cooling)
        return CoolingSchedule(kind, max(upper, self.q_gamma), self.q_gamma, self.horizon)

    def beta_schedule(self, p):
        if self.q_beta is None:
            return None
        upper = p if self.beta_upper is None else self.beta_upper
        kind = self.beta_cooling or self.cooling
        return CoolingSchedule(kind, max(upper, self.q_beta), self.q_beta, self.horizon)

    def to_dict(self):
        return asdict(self)


def _bad_cooling(kind):
    raise ConfigError(f"unknown cooling schedule {kind!r}")


@dataclass
class Estimate:
    """A fitted ``(beta, gamma)`` pair with its iteration record."""

    beta: np.ndarray
    gamma: np.ndarray
    objective_trace: np.ndarray
    fixed_point_residual: float
    iterations: int
    tie_events: int
    converged: bool
    metadata: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def support_gamma(self):
        return np.flatnonzero(self.gamma)

    @property
    def support_beta(self):
        return np.flatnonzero(self.beta)

    def to_record(self):
        trace = self.objective_trace
        return {
            "beta": self.beta.tolist(),
            "gamma": self.gamma.tolist(),
            "support_gamma": self.support_gamma.tolist(),
            "support_beta": self.support_beta.tolist(),
            "objective": {
                "initial": float(trace[0]),
                "final": float(trace[-1]),
                "length": int(trace.size),
            },
            "fixed_point_residual": self.fixed_point_residual,
            "iterations": self.iterations,
            "tie_events": self.tie_events,
            "converged": self.converged,
            "metadata": self.metadata,
        }


# ---------------------------------------------------------------------------
# step operations


def iq_bcd_regression_step(data, beta, q, nu, pinv=None):
    """One blockwise step for the quadratic loss.

    ``gamma <- Theta#(y - X beta; q, nu)`` then ``beta <- (X^T X)^+ X^T (y - gamma)``.

    Returns
    -------
    beta_next, gamma_next, TieReport
    """
    pinv = pinv or linalg.PseudoInverse(data.X)
    gamma, tie = quantile_threshold(data.y - data.X @ beta, q, nu)
    return pinv.apply(data.y - gamma), gamma, tie


def iq_line_step(hat, y, gamma, q, nu):
    """The same iteration written on gamma alone: ``Theta#(H gamma + (I - H) y; q, nu)``."""
    return quantile_threshold(hat.apply(gamma) + hat.complement(y), q, nu)


def mm_joint_regression_step(data, beta, gamma, rho, q, nu):
    """Joint linearized step for the quadratic loss with inverse stepsize ``rho``."""
    if rho <= 0:
        raise ConfigError("rho must be positive")
    r = data.X @ beta + gamma - data.y
    beta_next = beta - data.X.T @ r / rho
    gamma_next, tie = quantile_threshold(gamma - r / rho, q, nu / rho)
    return beta_next, gamma_next, tie


def gamma_support_step(loss, eta, y, q, nu):
    """Exact ``argmin_gamma l(eta + gamma) + nu ||gamma||^2/2`` subject to ``||gamma||_0 <= q``.

    The support is the q samples whose loss drops the most when given their
    own shift; each selected shift is the univariate minimizer.
    """
    if loss.kind == "quadratic":
        # the drop is r^2 / (2 (1 + nu)), monotone in |r|
        return quantile_threshold(y - eta, q, nu)
    t_star, best = gamma_univariate_min_vec(loss, eta, y, nu)
    drop = loss.per_sample(eta, y) - best
    idx, tie = top_q_indices(np.maximum(drop, 0.0), q)
    gamma = np.zeros_like(eta)
    gamma[idx] = t_star[idx]
    return gamma, tie


def _beta_prox(z, rho, q_beta=None, nu_beta=0.0, rule=None):
    """Minimize ``rho/2 ||b - z||^2 + penalty(b)`` for the supported beta regularizers."""
    if rule is not None and rule.kind in ("soft", "hard"):
        varrho = math.sqrt(rho)
        return apply_threshold(rule, varrho * z) / varrho, None
    if q_beta is not None:
        return quantile_threshold(z, q_beta, nu_beta / rho)
    return z / (1.0 + nu_beta / rho), None


def _majorizes(loss, y, eta_old, eta_new, grad_eta, rho, delta_sq):
    lhs = loss_value(loss, eta_new, y)
    rhs = loss_value(loss, eta_old, y) + float(grad_eta @ (eta_new - eta_old)) + 0.5 * rho * delta_sq
    return lhs <= rhs + 1e-12 * (1.0 + abs(rhs))


def beta_single_step(data, loss, beta, gamma, rho, q_beta=None, nu_beta=0.0, rule=None,
                     backtrack=False, shrink=0.5):
    """One thresholded gradient step on beta with gamma fixed.

    With ``backtrack=True``, ``rho`` is divided by ``shrink`` until the
    quadratic surrogate majorizes the loss along the step.

    Returns ``(beta_next, rho_used, tie_or_None)``.
    """
    X, y = data.X, data.y
    eta = X @ beta + gamma
    g = loss.derivative(eta, y)
    grad = X.T @ g
    for _ in range(MAX_DOUBLINGS + 1):
        b_new, tie = _beta_prox(beta - grad / rho, rho, q_beta, nu_beta, rule)
        if not backtrack:
            return b_new, rho, tie
        d = b_new - beta
        eta_new = X @ b_new + gamma
        if _majorizes(loss, y, eta, eta_new, g, rho, float(d @ d)):
            return b_new, rho, tie
        rho /= shrink
    raise ConvergenceError("beta backtracking exhausted 60 enlargements")


def beta_exact(data, loss, gamma, beta0, nu_beta=0.0, pinv=None, tol=1e-8, max_iter=100):
    """Minimize ``l(X beta + gamma) + nu_beta ||beta||^2 / 2`` over beta.

    Closed form for the quadratic loss (minimum-norm when ``nu_beta = 0``),
    damped Newton with Armijo backtracking otherwise. Newton stops once the
    gradient sup-norm is below ``tol`` or after ``max_iter`` steps; for
    separable classification data the minimizer does not exist and the
    iterate returned is the last Newton point.
    """
    X, y = data.X, data.y
    p = X.shape[1]
    if loss.kind == "quadratic":
        if nu_beta == 0:
            pinv = pinv or linalg.PseudoInverse(X)
            return pinv.apply(y - gamma)
        return np.linalg.solve(X.T @ X + nu_beta * np.eye(p), X.T @ (y - gamma))

    def F(b):
        return loss_value(loss, X @ b + gamma, y) + 0.5 * nu_beta * float(b @ b)

    beta = np.array(beta0, dtype=float)
    f = F(beta)
    for _ in range(max_iter):
        eta = X @ beta + gamma
        grad = X.T @ loss.derivative(eta, y) + nu_beta * beta
        if np.max(np.abs(grad)) <= tol:
            break
        h = loss.curvature(eta, y)
        Hs = X.T @ (h[:, None] * X) + nu_beta * np.eye(p)
        d = -np.linalg.lstsq(Hs, grad, rcond=None)[0]
        slope = float(grad @ d)
        if not slope < 0:
            d, slope = -grad, -float(grad @ grad)
        step = 1.0
        for _ in range(60):
            cand = beta + step * d
            fc = F(cand)
            if fc <= f + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            break
        if f - fc <= 1e-15 * (1.0 + abs(f)) and step < 1:
            beta, f = cand, fc
            break
        beta, f = cand, fc
    return beta


@dataclass
class BetaUpdate:
    """How `bcd_general_step` updates beta once gamma is fixed."""

    mode: str = "exact"
    rho: float | None = None
    q_beta: int | None = None
    nu_beta: float = 0.0
    rule: ThresholdRule | None = None
    backtrack: bool = False
    shrink: float = 0.5
    inner_max: int = 1
    inner_tol: float = 1e-8


def bcd_general_step(data, loss, beta, q, nu, beta_update=None, pinv=None):
    """Blockwise step for any sample-additive loss.

    gamma is solved exactly given beta (support = the q largest loss drops);
    beta is then either fully re-optimized, moved by one thresholded
    gradient step, or moved by repeated thresholded steps until the largest
    coordinate change is below ``inner_tol``, per ``beta_update``.

    Returns
    -------
    beta_next, gamma_next, TieReport, rho_used
    """
    bu = beta_update or BetaUpdate()
    gamma, tie = gamma_support_step(loss, data.X @ beta, data.y, q, nu)
    if bu.mode == "exact":
        return beta_exact(data, loss, gamma, beta, bu.nu_beta, pinv), gamma, tie, bu.rho
    if bu.rho is None or bu.rho <= 0:
        raise ConfigError("single-step beta update needs rho > 0")
    rho = bu.rho
    steps = bu.inner_max if bu.mode == "iht" else 1
    for _ in range(steps):
        b_new, rho, _ = beta_single_step(data, loss, beta, gamma, rho, bu.q_beta, bu.nu_beta,
                                         bu.rule, bu.backtrack, bu.shrink)
        moved = float(np.max(np.abs(b_new - beta))) if beta.size else 0.0
        beta = b_new
        if moved <= bu.inner_tol:
            break
    return beta, gamma, tie, rho


def mm_general_step(data, loss, beta, gamma, varrho, rule, q, nu, nu_beta=0.0):
    """Joint MM step with scale ``varrho`` (inverse stepsize ``varrho**2``).

    ``beta <- Theta(varrho beta - X^T grad / varrho; lam) / varrho`` and
    ``gamma <- Theta#(gamma - grad / varrho^2; q, nu / varrho^2)``.

    ``rule`` may be None (plain gradient step, ridge-shrunk by ``nu_beta``),
    a soft/hard `ThresholdRule`, or a quantile rule whose ``q`` is the beta
    budget and whose ``nu`` is the beta ridge weight.
    """
    if varrho <= 0:
        raise ConfigError("varrho must be positive")
    rho = varrho * varrho
    g = loss.derivative(data.X @ beta + gamma, data.y)
    z = beta - data.X.T @ g / rho
    if rule is not None and rule.kind == "quantile":
        beta_next, _ = quantile_threshold(z, rule.q, rule.nu / rho)
    else:
        beta_next, _ = _beta_prox(z, rho, None, nu_beta, rule)
    gamma_next, tie = quantile_threshold(gamma - g / rho, q, nu / rho)
    return beta_next, gamma_next, tie


def backtracking_stepsize(loss, data, beta, gamma, rho0, shrink=0.5, update=None):
    """Smallest ``rho = rho0 * shrink**-k`` whose MM step passes the majorization test.

    The test is ``l(eta_new) <= l(eta) + <grad, eta_new - eta> + rho/2 ||step||^2``
    with the step taken jointly over ``(beta, gamma)``. ``update(rho)`` must
    return the candidate ``(beta_new, gamma_new)``; by default it is a plain
    joint gradient step.

    Returns ``(rho, beta_new, gamma_new)``.
    """
    if not 0 < shrink < 1:
        raise ConfigError("shrink must lie in (0, 1)")
    X, y = data.X, data.y
    eta = X @ beta + gamma
    g = loss.derivative(eta, y)
    if update is None:
        def update(r):
            return beta - X.T @ g / r, gamma - g / r
    rho = float(rho0)
    for _ in range(MAX_DOUBLINGS + 1):
        b_new, g_new = update(rho)
        db, dg = b_new - beta, g_new - gamma
        if _majorizes(loss, y, eta, X @ b_new + g_new, g, rho, float(db @ db + dg @ dg)):
            return rho, b_new, g_new
        rho /= shrink
    raise ConvergenceError("backtracking exhausted 60 enlargements; the loss may not be smooth")


# ---------------------------------------------------------------------------
# objective and fixed-point checks


def beta_penalty(config, beta, rho):
    if config.lam is not None:
        rule = ThresholdRule(config.beta_rule, config.lam)
        return penalty_total(rule, math.sqrt(rho) * beta)
    return 0.5 * config.nu_beta * float(beta @ beta)


def objective(data, loss, config, beta, gamma, rho=1.0):
    """``l(X beta + gamma) + nu ||gamma||^2/2 + beta penalty``."""
    return (loss_value(loss, data.X @ beta + gamma, data.y)
            + 0.5 * config.nu * float(gamma @ gamma)
            + beta_penalty(config, beta, rho))


def fixed_point_residuals(data, loss, beta, gamma, q_gamma, nu, rho, q_beta=None, nu_beta=0.0,
                          rule=None, gamma_step=1.0):
    """Sup-norm residuals of the two thresholding equations.

    beta-equation: ``beta = prox(beta - X^T grad / rho)`` with the configured
    beta regularizer. gamma-equation:
    ``gamma = Theta#(gamma - s grad; q_gamma, s nu)`` with ``s = gamma_step``.

    Returns ``(beta_residual, gamma_residual)``.
    """
    g = loss.derivative(data.X @ beta + gamma, data.y)
    b_fix, _ = _beta_prox(beta - data.X.T @ g / rho, rho, q_beta, nu_beta, rule)
    g_fix, _ = quantile_threshold(gamma - gamma_step * g, q_gamma, gamma_step * nu)
    rb = float(np.max(np.abs(beta - b_fix))) if beta.size else 0.0
    rg = float(np.max(np.abs(gamma - g_fix))) if gamma.size else 0.0
    return rb, rg


def verify_fixed_point(data, loss, estimate, rho=None, gamma_step=None):
    """Total fixed-point residual of a fitted estimate.

    Reads budgets and ridge weights from ``estimate.metadata["config"]``.
    ``rho`` defaults to the stepsize the fit used; ``gamma_step`` defaults to 1
    for blockwise solvers and ``1/rho`` for MM solvers, whose limit points
    satisfy the gamma-equation at their own stepsize.
    """
    cfg = FitConfig(**estimate.metadata["config"])
    rho = rho if rho is not None else estimate.metadata["rho"]
    if gamma_step is None:
        gamma_step = 1.0 / rho if cfg.solver.startswith("mm") else 1.0
    rule = ThresholdRule(cfg.beta_rule, cfg.lam) if cfg.lam is not None else None
    rb, rg = fixed_point_residuals(data, loss, estimate.beta, estimate.gamma, cfg.q_gamma, cfg.nu,
                                   rho, cfg.q_beta, cfg.nu_beta, rule, gamma_step)
    return rb + rg


# ---------------------------------------------------------------------------
# driver


def default_rho(data, loss, config):
    """Inverse stepsize from the stepsize policy, before any backtracking."""
    if config.stepsize == "fixed":
        return float(config.rho)
    if config.stepsize == "backtracking":
        return float(config.rho) if config.rho else loss.lipschitz
    if config.solver in ("mm_joint_regression", "mm_general"):
        return SAFETY * loss.lipschitz * linalg.AugmentedDesign(data.X).norm_sq()
    if config.q_beta is not None and 2 * config.q_beta < data.p:
        m = linalg.sparse_power_norm(data.X, 2 * config.q_beta, seed=config.seed)
    else:
        m = linalg.spectral_norm_sq(data.X)
    return SAFETY * loss.lipschitz * max(m, np.finfo(float).tiny)


class _Stepper:
    def __init__(self, data, loss, config):
        self.data, self.loss, self.config = data, loss, config
        self.rho = default_rho(data, loss, config)
        c = config
        self.rule = ThresholdRule(c.beta_rule, c.lam) if c.lam is not None else None
        self.pinv = None
        if c.solver == "iq_bcd_regression" or (loss.kind == "quadratic" and c.nu_beta == 0):
            self.pinv = linalg.PseudoInverse(data.X)
        mode = c.beta_update
        if mode == "auto":
            mode = "exact" if (c.q_beta is None and c.lam is None) else "single"
        self.beta_mode = mode
        # the sparse-power estimate is a lower bound, so q_beta steps keep a majorization guard
        self.guard = c.stepsize == "backtracking" or (c.q_beta is not None and c.stepsize == "lipschitz")
        # while the beta budget is still wide the guard may push rho far above the
        # target-budget estimate; under the lipschitz policy it relaxes back geometrically
        self.relax = c.q_beta is not None and c.stepsize == "lipschitz"
        self.rho_floor = self.rho
        if c.solver == "iq_bcd_regression" and config.stepsize == "lipschitz":
            self.rho = SAFETY * linalg.spectral_norm_sq(data.X)

    def step(self, beta, gamma, qg, qb):
        c, data, loss = self.config, self.data, self.loss
        if c.solver == "iq_bcd_regression":
            b, g, tie = iq_bcd_regression_step(data, beta, qg, c.nu, self.pinv)
            return b, g, int(tie.tied)
        if c.solver == "bcd_general":
            if self.relax:
                self.rho = max(self.rho_floor, self.rho * c.shrink)
            bu = BetaUpdate(self.beta_mode, self.rho, qb, c.nu_beta, self.rule, self.guard, c.shrink,
                            c.beta_inner_max)
            b, g, tie, rho = bcd_general_step(data, loss, beta, qg, c.nu, bu, self.pinv)
            if rho is not None:
                self.rho = rho
            return b, g, int(tie.tied)
        if c.solver == "mm_joint_regression":
            if c.stepsize == "backtracking":
                def upd(r):
                    b, g, _ = mm_joint_regression_step(data, beta, gamma, r, qg, c.nu)
                    return b, g
                self.rho, _, _ = backtracking_stepsize(loss, data, beta, gamma, self.rho, c.shrink, upd)
            b, g, tie = mm_joint_regression_step(data, beta, gamma, self.rho, qg, c.nu)
            return b, g, int(tie.tied)
        rule = self.rule
        if qb is not None:
            rule = ThresholdRule("quantile", q=qb, nu=c.nu_beta)
        if c.stepsize == "backtracking":
            def upd(r):
                b, g, _ = mm_general_step(data, loss, beta, gamma, math.sqrt(r), rule, qg, c.nu, c.nu_beta)
                return b, g
            self.rho, _, _ = backtracking_stepsize(loss, data, beta, gamma, self.rho, c.shrink, upd)
        b, g, tie = mm_general_step(data, loss, beta, gamma, math.sqrt(self.rho), rule, qg, c.nu, c.nu_beta)
        return b, g, int(tie.tied)


def fit_piq(data, loss, config, beta0=None, gamma0=None):
    """Fit by progressive quantile thresholding.

    Parameters
    ----------
    data : Dataset
    loss : LossModel
    config : FitConfig
    beta0, gamma0 : array, optional
        Starting point; zeros by default. The blockwise solvers recompute
        gamma from beta in their first step, so for them only ``beta0``
        matters and the first gamma iterate is ``Theta#(y - X beta0; Q(1), nu)``.

    Returns
    -------
    Estimate
        ``converged`` is False when ``max_iters`` post-schedule iterations
        were spent without meeting both stopping tolerances. The estimate's
        ``diagnostics`` hold per-step arrays: ``q_gamma``, ``q_beta``,
        ``rho``, ``delta_sq`` (squared change of (beta, gamma)),
        ``x_delta_sq`` (squared change of X beta), ``xbar_delta_sq``
        (squared change of X beta + gamma), and ``nnz_gamma`` / ``nnz_beta``
        (support sizes of the new iterate).
    """
    if not isinstance(loss, LossModel):
        raise ConfigError("loss must be a LossModel")
    n, p = data.n, data.p
    config.validate(n, p, loss)
    gsched = config.gamma_schedule(n)
    bsched = config.beta_schedule(p)
    stable_from = max(gsched.stable_from, bsched.stable_from if bsched else 1)
    stepper = _Stepper(data, loss, config)

    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    gamma = np.zeros(n) if gamma0 is None else np.array(gamma0, dtype=float)
    if beta.shape != (p,) or gamma.shape != (n,):
        raise DimensionError("starting point has the wrong shape")

    f_prev = objective(data, loss, config, beta, gamma, stepper.rho)
    trace = [f_prev]
    hist = {k: [] for k in ("q_gamma", "q_beta", "rho", "delta_sq", "x_delta_sq", "xbar_delta_sq",
                            "nnz_gamma", "nnz_beta")}
    ties = 0
    converged = False
    t = 0
    while True:
        t += 1
        qg = gsched(t)
        qb = bsched(t) if bsched else None
        b_new, g_new, tie = stepper.step(beta, gamma, qg, qb)
        ties += tie
        db, dg = b_new - beta, g_new - gamma
        xdb = data.X @ db
        f_new = objective(data, loss, config, b_new, g_new, stepper.rho)
        trace.append(f_new)
        hist["q_gamma"].append(qg)
        hist["q_beta"].append(-1 if qb is None else qb)
        hist["rho"].append(stepper.rho)
        hist["delta_sq"].append(float(db @ db + dg @ dg))
        hist["x_delta_sq"].append(float(xdb @ xdb))
        xbar = xdb + dg
        hist["xbar_delta_sq"].append(float(xbar @ xbar))
        hist["nnz_gamma"].append(int(np.count_nonzero(g_new)))
        hist["nnz_beta"].append(int(np.count_nonzero(b_new)))
        beta, gamma = b_new, g_new
        if t >= stable_from:
            obj_ok = abs(f_prev - f_new) <= config.tol_objective * (1.0 + abs(f_prev))
            it_ok = math.sqrt(hist["delta_sq"][-1]) <= config.tol_iterate
            if obj_ok and it_ok:
                converged = True
                break
            if t - stable_from + 1 >= config.max_iters:
                break
        f_prev = f_new

    meta = {
        "solver": config.solver,
        "loss": loss.describe(),
        "config": config.to_dict(),
        "rho": stepper.rho,
        "varrho": math.sqrt(stepper.rho),
        "beta_update": stepper.beta_mode if config.solver == "bcd_general" else None,
        "standardized": bool(data.metadata.get("standardized", False)),
        "stable_from": stable_from,
    }
    est = Estimate(
        beta=beta,
        gamma=gamma,
        objective_trace=np.array(trace),
        fixed_point_residual=float("nan"),
        iterations=t,
        tie_events=ties,
        converged=converged,
        metadata=meta,
        diagnostics={k: np.array(v) for k, v in hist.items()},
    )
    est.fixed_point_residual = verify_fixed_point(data, loss, est)
    return est
