"""Quantile thresholding and componentwise thresholding rules."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, NonFiniteError, UnsupportedError


@dataclass(frozen=True)
class TieReport:
    """Whether the q-th and (q+1)-th largest magnitudes coincide (and are nonzero)."""

    tied: bool
    boundary_magnitude: float


def top_q_indices(scores, q):
    """Indices of the ``q`` largest ``scores``, ties broken toward smaller index.

    Runs in expected linear time (one partition plus a scan of the boundary
    value). Returns ``(indices, TieReport)`` with indices sorted ascending.
    """
    scores = np.asarray(scores, dtype=float)
    n = scores.shape[0]
    if not 0 <= q <= n:
        raise DimensionError(f"q={q} must lie in [0, {n}]")
    if q == 0:
        boundary = float(np.max(scores)) if n else 0.0
        return np.empty(0, dtype=np.intp), TieReport(False, boundary)
    if q == n:
        return np.arange(n), TieReport(False, float(np.min(scores)))
    # q-th largest value, then the (q+1)-th
    part = np.partition(scores, (n - q - 1, n - q))
    kth, next_ = part[n - q], part[n - q - 1]
    above = np.flatnonzero(scores > kth)
    at = np.flatnonzero(scores == kth)
    idx = np.concatenate([above, at[: q - above.size]])
    idx.sort()
    tied = bool(kth == next_ and kth > 0)
    return idx, TieReport(tied, float(kth))


def quantile_threshold(s, q, nu=0.0):
    """Keep the ``q`` largest-magnitude entries of ``s`` divided by ``1 + nu``.

    This is the exact minimizer of ``||s - xi||^2/2 + nu ||xi||^2/2`` subject to
    ``||xi||_0 <= q``. On ties at the boundary the smaller index is kept and
    the returned `TieReport` is flagged.

    Returns
    -------
    out : ndarray
    report : TieReport
    """
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise NonFiniteError("input to quantile_threshold is not finite")
    if nu < 0:
        raise ConfigError("nu must be nonnegative")
    idx, report = top_q_indices(np.abs(s), q)
    out = np.zeros_like(s)
    out[idx] = s[idx] / (1.0 + nu)
    return out, report


def soft_threshold(v, lam):
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def hard_threshold(v, lam):
    v = np.asarray(v, dtype=float)
    return np.where(np.abs(v) > lam, v, 0.0)


@dataclass(frozen=True)
class ThresholdRule:
    """A thresholding function and its parameter.

    ``kind`` is ``"soft"``, ``"hard"`` or ``"quantile"``. For the first two
    ``lam`` is the threshold; for quantile thresholding ``q`` and ``nu`` are
    used instead.
    """

    kind: str
    lam: float = 0.0
    q: int | None = None
    nu: float = 0.0

    def __post_init__(self):
        if self.kind not in ("soft", "hard", "quantile"):
            raise ConfigError(f"unknown threshold kind {self.kind!r}")
        if self.lam < 0 or self.nu < 0:
            raise ConfigError("threshold parameters must be nonnegative")
        if self.kind == "quantile" and (self.q is None or self.q < 0):
            raise ConfigError("quantile rule needs q >= 0")


def apply_threshold(rule, v):
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("input to apply_threshold is not finite")
    if rule.kind == "soft":
        return soft_threshold(v, rule.lam)
    if rule.kind == "hard":
        return hard_threshold(v, rule.lam)
    return quantile_threshold(v, rule.q, rule.nu)[0]


def induced_penalty(rule, theta):
    """Penalty ``P(theta; lam)`` induced by a soft or hard rule, with ``P(0) = 0``.

    Soft thresholding induces ``lam |theta|``; hard thresholding induces
    ``-theta^2/2 + lam |theta|`` below ``lam`` and ``lam^2/2`` above.
    Works elementwise on arrays.
    """
    if rule.kind == "quantile":
        raise UnsupportedError("quantile thresholding corresponds to an l0 constraint, not a penalty")
    a = np.abs(np.asarray(theta, dtype=float))
    lam = rule.lam
    if rule.kind == "soft":
        out = lam * a
    else:
        out = np.where(a < lam, -0.5 * a**2 + lam * a, 0.5 * lam**2)
    return out if out.ndim else float(out)


def penalty_total(rule, theta):
    return float(np.sum(induced_penalty(rule, theta)))
