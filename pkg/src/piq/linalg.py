"""Dense linear-algebra primitives and the dataset container.

Everything here is dense numpy. The augmented design ``[X, I]`` is never
materialized; `AugmentedDesign` applies it implicitly.
"""

import csv
import hashlib
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceededError, DataError, DimensionError, NonFiniteError

HAT_MATERIALIZE_MAX_N = 4096
EXHAUSTIVE_BUDGET = 10**6


def _as_matrix(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return X


def _as_vector(v, name="v"):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        v = v.reshape(-1)
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return v


def _readonly(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Response ``y`` (length n) and design ``X`` (n x p).

    Arrays are copied and frozen on construction, so a dataset can be
    shared between workers.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple | None = None
    sample_ids: tuple | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = _as_matrix(self.X)
        y = _as_vector(self.y, "y")
        n, p = X.shape
        if n < 1 or p < 1:
            raise DimensionError("dataset needs n >= 1 and p >= 1")
        if y.shape[0] != n:
            raise DimensionError(f"X has {n} rows but y has length {y.shape[0]}")
        if self.feature_names is not None and len(self.feature_names) != p:
            raise DimensionError("feature_names length does not match p")
        if self.sample_ids is not None and len(self.sample_ids) != n:
            raise DimensionError("sample_ids length does not match n")
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "y", _readonly(y))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.sample_ids is not None:
            object.__setattr__(self, "sample_ids", tuple(self.sample_ids))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def standardized(self):
        """Return a copy with every column scaled to unit root-mean-square.

        Columns are not centered: the model has no intercept, so centering
        would change the fitted model. Scales are kept in ``metadata``.
        """
        scale = np.sqrt(np.mean(self.X**2, axis=0))
        scale[scale == 0] = 1.0
        meta = dict(self.metadata)
        meta["standardized"] = True
        meta["column_scale"] = scale.tolist()
        return Dataset(self.X / scale, self.y, self.feature_names, self.sample_ids, meta)

    def digest(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.X).tobytes())
        h.update(np.ascontiguousarray(self.y).tobytes())
        return h.hexdigest()


def read_csv(path, response, header=None, delimiter=","):
    """Load a `Dataset` from a CSV file.

    Parameters
    ----------
    path : str or path-like
    response : str or int
        Column holding y, by header name or 0-based index.
    header : bool, optional
        Whether the first row is a header. Autodetected when None: the first
        row is a header iff any of its cells fails to parse as a float.

    Every other column becomes a predictor. Any non-numeric cell raises
    `DataError` carrying 1-based row and column coordinates.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data rows")

    def _is_float(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    if header is None:
        header = not all(_is_float(c) for c in rows[0])
    names = [c.strip() for c in rows[0]] if header else None
    body = rows[1:] if header else rows
    if not body:
        raise DataError(f"{path}: header but no data rows")
    ncol = len(rows[0])

    if isinstance(response, str) and not response.lstrip("-").isdigit():
        if names is None or response not in names:
            raise DataError(f"response column {response!r} not found in header")
        rcol = names.index(response)
    else:
        rcol = int(response)
        if not -ncol <= rcol < ncol:
            raise DataError(f"response column index {rcol} out of range for {ncol} columns")
        rcol %= ncol

    values = np.empty((len(body), ncol))
    first = 2 if header else 1
    for i, row in enumerate(body):
        if len(row) != ncol:
            raise DataError(f"expected {ncol} cells, found {len(row)}", row=first + i, column=len(row))
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise DataError(f"non-numeric cell {cell!r}", row=first + i, column=j + 1) from None
            if not math.isfinite(values[i, j]):
                raise DataError(f"non-finite cell {cell!r}", row=first + i, column=j + 1)
    keep = [j for j in range(ncol) if j != rcol]
    if not keep:
        raise DataError("no predictor columns left after removing the response")
    feature_names = [names[j] for j in keep] if names else None
    return Dataset(values[:, keep], values[:, rcol], feature_names=feature_names)


class PseudoInverse:
    """Cached SVD of X for repeated minimum-norm least-squares solves.

    Singular values below ``s_max * max(n, p) * eps`` are treated as zero.
    """

    def __init__(self, X):
        X = _as_matrix(X)
        self.shape = X.shape
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
        cutoff = (s[0] if s.size else 0.0) * max(X.shape) * np.finfo(float).eps
        r = int(np.sum(s > cutoff))
        self.rank = r
        self.U = U[:, :r]
        self.s = s[:r]
        self.Vt = Vt[:r]

    def apply(self, v):
        """Return ``(X^T X)^+ X^T v``."""
        v = _as_vector(v)
        if v.shape[0] != self.shape[0]:
            raise DimensionError(f"X has {self.shape[0]} rows but v has length {v.shape[0]}")
        return self.Vt.T @ ((self.U.T @ v) / self.s)

    def project(self, v):
        """Return ``H v``, the projection onto the column space of X."""
        return self.U @ (self.U.T @ v)


def pseudo_inverse_apply(X, v):
    """Minimum-norm solution of ``min_b ||v - X b||_2``."""
    return PseudoInverse(X).apply(v)


@dataclass(frozen=True)
class HatMatrix:
    """Orthogonal projector ``X (X^T X)^+ X^T`` held in factored form.

    ``basis`` is an orthonormal basis of the column space; ``H`` is built on
    first access and refused when n exceeds `HAT_MATERIALIZE_MAX_N`.
    """

    basis: np.ndarray
    rank: int

    @property
    def n(self):
        return self.basis.shape[0]

    @property
    def H(self):
        if self.n > HAT_MATERIALIZE_MAX_N:
            raise DimensionError(
                f"refusing to materialize a {self.n}x{self.n} hat matrix; use apply()")
        return self.basis @ self.basis.T

    def apply(self, v):
        return self.basis @ (self.basis.T @ np.asarray(v, dtype=float))

    def complement(self, v):
        v = np.asarray(v, dtype=float)
        return v - self.apply(v)


def hat_matrix(X):
    pinv = PseudoInverse(X)
    return HatMatrix(basis=_readonly(pinv.U), rank=pinv.rank)


def spectral_norm_sq(X):
    """Squared spectral norm ``||X||_2^2``."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return 0.0
    return float(np.linalg.norm(X, 2) ** 2)


class AugmentedDesign:
    """The concatenated design ``[scale * X, I]`` applied without forming it."""

    def __init__(self, X, scale=1.0):
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.X = np.asarray(X, dtype=float)
        self.scale = float(scale)

    @property
    def shape(self):
        n, p = self.X.shape
        return n, p + n

    def matvec(self, beta, gamma):
        return self.scale * (self.X @ beta) + gamma

    def rmatvec(self, r):
        return self.scale * (self.X.T @ r), np.array(r, dtype=float)

    def norm_sq(self):
        # ||[sX, I]||^2 = lambda_max(s^2 X X^T + I)
        return self.scale**2 * spectral_norm_sq(self.X) + 1.0

    def dense(self):
        return np.hstack([self.scale * self.X, np.eye(self.X.shape[0])])


@dataclass(frozen=True)
class RestrictedNorm:
    value: float
    exact: bool
    supports_checked: int = 0


def restricted_sup_norm(X, s, o, mode="auto", budget=EXHAUSTIVE_BUDGET):
    """Largest ``||[X, I] b||^2 / ||b||^2`` over ``||beta||_0 <= s``, ``||gamma||_0 <= o``.

    In exhaustive mode every pair of supports of the maximal sizes is
    eigen-solved (smaller supports cannot do better, by eigenvalue
    interlacing). ``mode="bound"`` returns the global bound ``||[X, I]||^2``;
    ``mode="auto"`` picks exhaustive when it fits in ``budget``.
    """
    X = _as_matrix(X)
    n, p = X.shape
    if not (0 <= s <= p and 0 <= o <= n):
        raise DimensionError(f"need 0 <= s <= {p} and 0 <= o <= {n}")
    count = math.comb(p, s) * math.comb(n, o)
    if mode == "auto":
        mode = "exhaustive" if count <= budget else "bound"
    if mode == "bound":
        return RestrictedNorm(spectral_norm_sq(X) + 1.0, exact=False)
    if mode != "exhaustive":
        raise ValueError(f"unknown mode {mode!r}")
    if count > budget:
        raise BudgetExceededError(
            f"C({p},{s})*C({n},{o}) = {count} supports exceeds budget {budget}; "
            "use mode='bound' for the global upper bound")
    if s == 0 and o == 0:
        return RestrictedNorm(0.0, exact=True, supports_checked=1)
    best = 0.0
    eye = np.eye(n)
    for cols in itertools.combinations(range(p), s):
        Xs = X[:, cols]
        for rows in itertools.combinations(range(n), o):
            B = np.hstack([Xs, eye[:, rows]])
            best = max(best, float(np.linalg.eigvalsh(B.T @ B)[-1]))
    return RestrictedNorm(best, exact=True, supports_checked=count)


def sparse_power_norm(X, s, iters=100, restarts=3, seed=0):
    """Heuristic estimate of ``M_X(s) = max_{||b||_0 <= s} ||X b||^2 / ||b||^2``.

    Truncated power iteration on ``X^T X``. The result is a lower estimate,
    clipped to the exact global bound ``||X||_2^2``; callers that need a
    guaranteed majorizer pair it with a backtracking check.
    """
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    full = spectral_norm_sq(X)
    if s >= p:
        return full
    if s <= 0:
        return 0.0
    G = X.T @ X
    rng = np.random.default_rng(seed)
    starts = [np.argsort(-np.diag(G), kind="stable")[:s]]
    starts += [rng.choice(p, size=s, replace=False) for _ in range(restarts - 1)]
    best = 0.0
    for idx in starts:
        v = np.zeros(p)
        v[idx] = 1.0 / math.sqrt(s)
        for _ in range(iters):
            w = G @ v
            keep = np.argpartition(-np.abs(w), s - 1)[:s]
            v_new = np.zeros(p)
            v_new[keep] = w[keep]
            nrm = np.linalg.norm(v_new)
            if nrm == 0:
                break
            v_new /= nrm
            if np.allclose(v_new, v, atol=1e-12):
                v = v_new
                break
            v = v_new
        sub = np.flatnonzero(v)
        if sub.size:
            best = max(best, float(np.linalg.eigvalsh(G[np.ix_(sub, sub)])[-1]))
    return min(best, full)
