"""Sample-additive smooth losses ``l(eta; y) = sum_i l0(eta_i; y_i)``.

Every built-in loss is convex in eta, has ``inf_eta l0(eta; y) = 0`` and a
Lipschitz gradient. Classification losses take labels in {0, 1}.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigError, ConvergenceError, DataError, DimensionError, NonFiniteError

KINDS = ("quadratic", "logistic", "huber", "hhinge")
UNIVARIATE_MAX_ITER = 200


@dataclass(frozen=True)
class LossModel:
    """A loss kind plus its shape parameter.

    ``delta`` is the Huber / huberized-hinge transition width (default 1);
    it is ignored by the quadratic and logistic losses.
    """

    kind: str
    delta: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown loss {self.kind!r}; choose from {KINDS}")
        if not self.delta > 0:
            raise ConfigError("delta must be positive")

    @property
    def is_classification(self):
        return self.kind in ("logistic", "hhinge")

    @property
    def lipschitz(self):
        """Lipschitz constant of d l0 / d eta."""
        if self.kind == "logistic":
            return 0.25
        if self.kind == "hhinge":
            return 1.0 / self.delta
        return 1.0

    def describe(self):
        if self.kind in ("huber", "hhinge"):
            return f"{self.kind}:{self.delta:g}"
        return self.kind

    # -- per-sample pieces ------------------------------------------------
    def per_sample(self, eta, y):
        eta, y = _check(self, eta, y)
        k = self.kind
        if k == "quadratic":
            return 0.5 * (y - eta) ** 2
        if k == "logistic":
            # logaddexp is the overflow-safe log(1 + e^eta)
            return np.logaddexp(0.0, eta) - y * eta
        if k == "huber":
            r = np.abs(y - eta)
            d = self.delta
            return np.where(r <= d, 0.5 * r**2, d * r - 0.5 * d**2)
        m = (2.0 * y - 1.0) * eta
        d = self.delta
        return np.where(m >= 1.0, 0.0, np.where(m > 1.0 - d, (1.0 - m) ** 2 / (2 * d), 1.0 - m - 0.5 * d))

    def derivative(self, eta, y):
        eta, y = _check(self, eta, y)
        return _d1(self, eta, y)

    def curvature(self, eta, y):
        eta, y = _check(self, eta, y)
        return _d2(self, eta, y)


def _d1(model, eta, y):
    k = model.kind
    if k == "quadratic":
        return eta - y
    if k == "logistic":
        return expit(eta) - y
    if k == "huber":
        return np.clip(eta - y, -model.delta, model.delta)
    sgn = 2.0 * y - 1.0
    m = sgn * eta
    d = model.delta
    dm = np.where(m >= 1.0, 0.0, np.where(m > 1.0 - d, -(1.0 - m) / d, -1.0))
    return sgn * dm


def _d2(model, eta, y):
    k = model.kind
    if k == "quadratic":
        return np.ones_like(eta)
    if k == "logistic":
        s = expit(eta)
        return s * (1.0 - s)
    if k == "huber":
        return (np.abs(eta - y) <= model.delta).astype(float)
    m = (2.0 * y - 1.0) * eta
    d = model.delta
    return np.where((m < 1.0) & (m > 1.0 - d), 1.0 / d, 0.0)


def _check(model, eta, y):
    eta = np.asarray(eta, dtype=float)
    y = np.asarray(y, dtype=float)
    if eta.shape != y.shape:
        raise DimensionError(f"eta has shape {eta.shape} but y has shape {y.shape}")
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(y))):
        raise NonFiniteError("loss evaluated at non-finite input")
    if model.is_classification and not np.all((y == 0) | (y == 1)):
        raise DataError(f"{model.kind} loss needs labels in {{0, 1}}")
    return eta, y


def quadratic():
    return LossModel("quadratic")


def logistic():
    return LossModel("logistic")


def huber(delta=1.0):
    return LossModel("huber", delta)


def huberized_hinge(delta=1.0):
    return LossModel("hhinge", delta)


def parse_loss(text):
    """Parse ``quadratic``, ``logistic``, ``huber:<delta>`` or ``hhinge:<delta>``."""
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name not in KINDS:
        raise ConfigError(f"unknown loss {text!r}")
    if arg:
        if name not in ("huber", "hhinge"):
            raise ConfigError(f"loss {name!r} takes no parameter")
        try:
            return LossModel(name, float(arg))
        except ValueError:
            raise ConfigError(f"bad loss parameter in {text!r}") from None
    return LossModel(name)


def loss_value(model, eta, y):
    return float(np.sum(model.per_sample(eta, y)))


def loss_gradient(model, eta, y):
    return model.derivative(eta, y)


def bregman_divergence(model, alpha, beta, y):
    """Generalized Bregman function ``l(alpha) - l(beta) - <grad l(beta), alpha - beta>``."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return (loss_value(model, alpha, y) - loss_value(model, beta, y)
            - float(np.dot(loss_gradient(model, beta, y), alpha - beta)))


def gamma_univariate_min_vec(model, a, y, nu):
    """Solve ``min_t l0(a_i + t; y_i) + nu t^2 / 2`` for every i at once.

    Closed form for the quadratic loss; otherwise a bracketed Newton
    iteration on the (monotone) derivative, stopping when
    ``|derivative| <= 1e-10 (1 + |t|)``. For losses whose infimum is only
    approached at infinity (logistic with ``nu = 0``) the iteration stops at
    the first point where the derivative is below that tolerance, which
    leaves the objective within about 1e-10 of its infimum.

    Returns
    -------
    t_star, value : ndarray
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    a, y = _check(model, a, y)
    if nu < 0:
        raise ConfigError("nu must be nonnegative")
    if model.kind == "quadratic":
        t = (y - a) / (1.0 + nu)
        return t, 0.5 * (y - a - t) ** 2 + 0.5 * nu * t**2

    def g(t, idx):
        return _d1(model, a[idx] + t, y[idx]) + nu * t

    def h(t, idx):
        return _d2(model, a[idx] + t, y[idx]) + nu

    def tol(t):
        return 1e-10 * (1.0 + np.abs(t))

    n = a.shape[0]
    t = np.zeros(n)
    g0 = g(t, slice(None))
    done = np.abs(g0) <= tol(t)
    # bracket [lo, hi] around the root of the increasing derivative
    lo = np.where(g0 < 0, 0.0, -np.inf)
    hi = np.where(g0 > 0, 0.0, np.inf)
    step = np.ones(n)
    active = np.flatnonzero(~done)
    for _ in range(UNIVARIATE_MAX_ITER):
        if active.size == 0:
            break
        up = g0[active] < 0
        probe = np.where(up, lo[active] + step[active], hi[active] - step[active])
        gp = g(probe, active)
        hit = np.abs(gp) <= tol(probe)
        t[active[hit]] = probe[hit]
        done[active[hit]] = True
        crossed = np.where(up, gp > 0, gp < 0) & ~hit
        moved = ~crossed & ~hit
        ia = active[crossed]
        hi[ia] = np.where(up[crossed], probe[crossed], hi[ia])
        lo[ia] = np.where(up[crossed], lo[ia], probe[crossed])
        im = active[moved]
        lo[im] = np.where(up[moved], probe[moved], lo[im])
        hi[im] = np.where(up[moved], hi[im], probe[moved])
        step[im] *= 2.0
        active = active[moved]
    else:
        if active.size:
            raise ConvergenceError("could not bracket the univariate minimizer")

    active = np.flatnonzero(~done)
    t[active] = 0.5 * (lo[active] + hi[active])
    for _ in range(UNIVARIATE_MAX_ITER):
        if active.size == 0:
            break
        ta = t[active]
        ga = g(ta, active)
        ok = np.abs(ga) <= tol(ta)
        done[active[ok]] = True
        keep = ~ok
        active, ta, ga = active[keep], ta[keep], ga[keep]
        if active.size == 0:
            break
        neg = ga < 0
        lo[active[neg]] = ta[neg]
        hi[active[~neg]] = ta[~neg]
        ha = h(ta, active)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = ta - ga / ha
        mid = 0.5 * (lo[active] + hi[active])
        good = (ha > 0) & (newton > lo[active]) & (newton < hi[active])
        t_new = np.where(good, newton, mid)
        stalled = t_new == ta
        t_new = np.where(stalled, mid, t_new)
        width_zero = hi[active] - lo[active] <= 4 * np.finfo(float).eps * (1 + np.abs(ta))
        t[active] = t_new
        done[active[width_zero]] = True
        active = active[~width_zero]
    else:
        if active.size:
            raise ConvergenceError("univariate gamma subproblem did not converge in 200 iterations")
    value = model.per_sample(a + t, y) + 0.5 * nu * t**2
    return t, value


def gamma_univariate_min(model, a, y, nu):
    """Scalar wrapper around `gamma_univariate_min_vec`; returns ``(t_star, value)``."""
    t, v = gamma_univariate_min_vec(model, np.array([a]), np.array([y]), nu)
    return float(t[0]), float(v[0])


def effective_noise(model, eta_star, y):
    """``-grad l`` at the true systematic component, with its empirical scale."""
    eps = -loss_gradient(model, eta_star, y)
    return eps, float(np.std(eps))
