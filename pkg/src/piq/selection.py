"""Information criteria for choosing cardinality budgets, and a grid tuner."""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, NumericalError
from .losses import loss_value
from .solvers import fit_piq

CRITERIA = ("pic", "pic0", "sfpic")
SCALE_FREE_ALPHA = (5.5, 1.0)
MAD_CONSISTENCY = 1.4826


def _xlog_en(k, m):
    # k log(e m / k) with 0 log 0 = 0
    return 0.0 if k == 0 else k * (1.0 + math.log(m) - math.log(k))


def pic_penalty(s, o, n, p):
    """``o + o log(en/o) + s + s log(ep/s)``, taking ``0 log 0 = 0``."""
    if not (0 <= o <= n and 0 <= s <= p):
        raise ConfigError(f"need 0 <= o <= n and 0 <= s <= p, got s={s}, o={o}, n={n}, p={p}")
    return o + _xlog_en(o, n) + s + _xlog_en(s, p)


@dataclass(frozen=True)
class PicScore:
    loss_term: float
    penalty_term: float
    total: float
    variant: str
    constants: tuple


def pic_score(fit, data, loss, A=2.0, sigma2=1.0, variant="general"):
    """``l(X beta + gamma) + A sigma2 P``.

    ``variant="gamma_only"`` drops the beta part of the penalty, which is
    constant when beta is unconstrained.
    """
    if not A > 0 or not sigma2 > 0:
        raise ConfigError("A and sigma2 must be positive")
    n, p = data.n, data.p
    o = int(np.count_nonzero(fit.gamma))
    s = int(np.count_nonzero(fit.beta)) if variant == "general" else 0
    if variant not in ("general", "gamma_only"):
        raise ConfigError(f"unknown variant {variant!r}")
    lt = loss_value(loss, data.X @ fit.beta + fit.gamma, data.y)
    pt = A * sigma2 * pic_penalty(s, o, n, p)
    return PicScore(lt, pt, lt + pt, variant, (A, sigma2))


def scale_free_pic(fit, data, alpha1=SCALE_FREE_ALPHA[0], alpha2=SCALE_FREE_ALPHA[1]):
    """``(n - p) log RSS + alpha1 o + alpha2 o log(en/o)`` for regression fits with n > p."""
    n, p = data.n, data.p
    if n <= p:
        raise ConfigError("the scale-free criterion needs n > p")
    r = data.X @ fit.beta + fit.gamma - data.y
    rss = float(r @ r)
    if rss <= 0:
        raise NumericalError("residual sum of squares is zero: log RSS is singular")
    o = int(np.count_nonzero(fit.gamma))
    lt = (n - p) * math.log(rss)
    pt = alpha1 * o + alpha2 * _xlog_en(o, n)
    return PicScore(lt, pt, lt + pt, "scale_free", (alpha1, alpha2))


def mad_sigma2(fit, data):
    """Robust noise variance from the residuals of the unflagged samples."""
    keep = fit.gamma == 0
    r = (data.y - data.X @ fit.beta)[keep]
    if r.size == 0:
        raise NumericalError("no unflagged samples to estimate the scale from")
    mad = float(np.median(np.abs(r - np.median(r))))
    return max((MAD_CONSISTENCY * mad) ** 2, np.finfo(float).tiny)


@dataclass
class GridScore:
    q: int
    score: PicScore
    estimate: object


def tune_q(data, loss, base_config, q_grid, criterion="sfpic", A=2.0, sigma2=None,
           alpha=SCALE_FREE_ALPHA):
    """Fit at every ``q_gamma`` in the grid and pick the criterion minimizer.

    For ``pic``/``pic0`` with the quadratic loss and no ``sigma2`` given, the
    noise variance is a MAD estimate from the fit at the largest grid value;
    for other losses it defaults to 1. Ties go to the smaller q.

    Returns
    -------
    best_q : int
    scores : list of GridScore, in grid order
    """
    grid = [int(q) for q in q_grid]
    if not grid:
        raise ConfigError("empty q grid")
    if criterion not in CRITERIA:
        raise ConfigError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")
    for q in grid:
        if not 0 <= q <= data.n / 2:
            raise ConfigError(f"grid value {q} must satisfy 0 <= q <= n/2")
    fits = {q: fit_piq(data, loss, replace(base_config, q_gamma=q)) for q in dict.fromkeys(grid)}
    if criterion != "sfpic" and sigma2 is None:
        sigma2 = mad_sigma2(fits[max(grid)], data) if loss.kind == "quadratic" else 1.0
    scores = []
    for q in grid:
        est = fits[q]
        if criterion == "sfpic":
            sc = scale_free_pic(est, data, *alpha)
        else:
            sc = pic_score(est, data, loss, A, sigma2, "general" if criterion == "pic" else "gamma_only")
        scores.append(GridScore(q, sc, est))
    best = min(scores, key=lambda g: (g.score.total, g.q))
    return best.q, scores
