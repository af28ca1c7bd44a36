"""Singular value data of matrices: projections, cocycles, basins, covers.

Everything here works on plain numpy arrays.  The central objects are

* the singular value projection ``cartan_project``: the sorted vector of
  ``log sigma_i(g)``, computed either from one SVD or, more robustly, from
  largest singular values of the exterior power matrices (the ``compound``
  route), which keeps every component accurate even when the singular values
  span many orders of magnitude;
* the flag cocycle ``iwasawa``: the log volume distortion of a subspace
  basis, which is additive along products and independent of the basis;
* attraction basins for the top singular direction, with a sampled check of
  the contraction inequality;
* an explicit covering of the image of a basin by small metric balls, with
  a sampled audit that every image point is inside the promised ball.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, frexp

import numpy as np

from .errors import (
    AuditError,
    ChartDegeneracyError,
    ConfigError,
    NoGapError,
    NonTransverseError,
)

__all__ = [
    "cartan_project",
    "cartan_project_batch",
    "cartan_project_words",
    "attractor",
    "proj_distance",
    "iwasawa",
    "gromov_product",
    "basin_membership",
    "basin_contraction_check",
    "ellipsoid_cover",
    "cover_audit",
    "CoverResult",
]

_LOG2 = np.log(2.0)


def _compound_matrix(m: np.ndarray, p: int) -> np.ndarray:
    """Matrix of minors: entry (R, C) is det of the p-by-p submatrix."""
    d = m.shape[0]
    idx = list(combinations(range(d), p))
    c = len(idx)
    if c > 3000:
        raise ConfigError(
            f"compound matrix of size {c} is unreasonable; use method='svd'"
        )
    rows = np.array(idx)
    blocks = m[rows[:, None, :, None], rows[None, :, None, :]]
    return np.linalg.det(blocks.reshape(c * c, p, p)).reshape(c, c)


def _top_sigma(a: np.ndarray) -> float:
    top = np.linalg.svd(a, compute_uv=False)[0]
    if top == 0.0:
        raise ConfigError("exterior power underflowed; matrix too extreme")
    return float(top)


def cartan_project(g, method: str = "compound") -> np.ndarray:
    """Sorted vector of log singular values of ``g``.

    ``g`` is either one square matrix or a sequence of factor matrices whose
    product is meant.  ``method='svd'`` takes one SVD and logs it; small
    singular values then carry an absolute error of order ``eps * sigma_1``,
    which ruins their logarithms once the spread is large.  The default
    ``'compound'`` route reads off the partial sums
    ``log(sigma_1 ... sigma_p)`` as the top singular value of the p-th
    exterior power and differences them.

    Handing over the factors is the accurate way to treat long products:
    each factor's exterior power has mild entries, and the product in the
    compound space (rescaled by powers of two along the way) keeps every
    partial sum relatively accurate.  Forming minors of the final matrix
    instead cancels catastrophically once ``sigma_1^p * eps`` overtakes
    ``sigma_1 ... sigma_p``, so a single-matrix argument is only reliable up
    to that point.
    """
    factors = None
    if isinstance(g, (list, tuple)):
        factors = [np.asarray(f, dtype=float) for f in g]
        if not factors:
            raise ConfigError("need at least one factor")
        g = factors[0]
        d = g.shape[0]
    else:
        g = np.asarray(g, dtype=float)
        if g.ndim == 3:
            factors = list(g)
            g = factors[0]
        d = g.shape[-1]
    if g.shape != (d, d):
        raise ConfigError(f"expected square matrices, got shape {g.shape}")
    if method == "svd":
        full = g if factors is None else _product(factors)
        return np.log(np.linalg.svd(full, compute_uv=False))
    if method != "compound":
        raise ConfigError(f"unknown method {method!r}")
    partial = [0.0]
    for p in range(1, d + 1):
        if factors is None:
            e = frexp(np.abs(g).max())[1]
            a = _compound_matrix(g * 2.0 ** (-e), p)
            partial.append(np.log(_top_sigma(a)) + p * e * _LOG2)
        else:
            cur = _compound_matrix(factors[0], p)
            shift = 0
            for f in factors[1:]:
                cur = cur @ _compound_matrix(f, p)
                e = frexp(np.abs(cur).max())[1]
                cur *= 2.0 ** (-e)
                shift += e
            partial.append(np.log(_top_sigma(cur)) + shift * _LOG2)
    return np.diff(np.array(partial))


def _product(factors):
    out = factors[0]
    for f in factors[1:]:
        out = out @ f
    return out


def cartan_project_words(
    gen_mats: np.ndarray, words: np.ndarray, chunk_cells: int = 20_000_000
) -> np.ndarray:
    """Log singular value vectors for a batch of words, shape [N, d].

    ``words`` is an integer array [N, n] of letter codes into ``gen_mats``.
    Works through exterior powers of the generators chained along each word
    with per-element power-of-two rescaling, so the full vector stays
    accurate even when the singular values of the products span hundreds of
    orders of magnitude.
    """
    gen_mats = np.asarray(gen_mats, dtype=float)
    words = np.asarray(words)
    if words.ndim != 2:
        raise ConfigError("words must be a 2d array of letter codes")
    n_words, length = words.shape
    d = gen_mats.shape[-1]
    if length == 0:
        return np.zeros((n_words, d))
    out = np.empty((n_words, d))
    prev = np.zeros(n_words)
    for p in range(1, d + 1):
        cg = np.stack([_compound_matrix(m, p) for m in gen_mats])
        c = cg.shape[-1]
        step = max(1, chunk_cells // max(c * c * max(length, 1), 1))
        logtop = np.empty(n_words)
        for lo in range(0, n_words, step):
            w = words[lo : lo + step]
            cur = cg[w[:, 0]].copy()
            shift = np.zeros(len(w))
            for j in range(1, length):
                cur = cur @ cg[w[:, j]]
                exps = np.frexp(np.abs(cur).max(axis=(1, 2)))[1]
                cur *= (2.0 ** (-exps.astype(float)))[:, None, None]
                shift += exps
            if c == 1:
                tops = np.abs(cur[:, 0, 0])
            else:
                tops = np.linalg.svd(cur, compute_uv=False)[:, 0]
            if (tops == 0.0).any():
                raise ConfigError("exterior power underflowed along a word")
            logtop[lo : lo + step] = np.log(tops) + shift * _LOG2
        out[:, p - 1] = logtop - prev
        prev = logtop
    return out


def _compound_batch(mats: np.ndarray, p: int) -> np.ndarray:
    """Exterior power matrices of a batch, shape [N, C, C] for C = comb(d, p)."""
    d = mats.shape[-1]
    idx = np.array(list(combinations(range(d), p)))
    c = len(idx)
    blocks = mats[:, idx[:, None, :, None], idx[None, :, None, :]]
    return np.linalg.det(blocks.reshape(-1, p, p)).reshape(len(mats), c, c)


def cartan_project_batch(
    mats: np.ndarray, method: str = "compound", chunk_cells: int = 40_000_000
) -> np.ndarray:
    """Log singular values for a batch of explicit matrices, shape [N, d].

    The compound route beats one batched SVD as long as the minors of the
    stored matrices do not cancel below roundoff; when the matrices are long
    products, prefer :func:`cartan_project_words`, which never forms the
    product before taking exterior powers.
    """
    mats = np.asarray(mats, dtype=float)
    n, d = mats.shape[0], mats.shape[-1]
    if method == "svd":
        return np.log(np.linalg.svd(mats, compute_uv=False))
    if method != "compound":
        raise ConfigError(f"unknown method {method!r}")
    exps = np.frexp(np.abs(mats).max(axis=(1, 2)))[1].astype(float)
    g2 = mats * 2.0 ** (-exps)[:, None, None]
    out = np.empty((n, d))
    prev = np.zeros(n)
    for p in range(1, d + 1):
        c = comb(d, p)
        step = max(1, chunk_cells // max(c * c * p * p, 1))
        tops = np.empty(n)
        for lo in range(0, n, step):
            a = _compound_batch(g2[lo : lo + step], p)
            tops[lo : lo + step] = np.linalg.svd(a, compute_uv=False)[:, 0]
        if (tops == 0.0).any():
            raise ConfigError("exterior power underflowed; matrices too extreme")
        cur = np.log(tops) + p * exps * _LOG2
        out[:, p - 1] = cur - prev
        prev = cur
    return out


def _fix_column_signs(u: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    j = np.argmax(np.abs(u), axis=0)
    s = np.sign(u[j, np.arange(u.shape[1])])
    s[s == 0] = 1.0
    return u * s


def attractor(g: np.ndarray, p: int = 1, gap_floor: float = 1e-10):
    """Top-``p`` left singular subspace of ``g`` and its contraction ratio.

    Returns ``(basis, ratio)`` where ``basis`` is orthonormal of shape
    ``[d, p]`` with deterministic column signs and
    ``ratio = sigma_{p+1} / sigma_p``.  Raises :class:`NoGapError` when the
    two singular values are indistinguishable, because then the subspace is
    not defined and no answer would be honest.
    """
    g = np.asarray(g, dtype=float)
    u, s, _ = np.linalg.svd(g)
    if not 1 <= p < len(s):
        raise ConfigError(f"index p={p} out of range for dimension {len(s)}")
    if s[p] > 0.0 and s[p - 1] / s[p] < 1.0 + gap_floor:
        raise NoGapError(
            f"sigma_{p}/sigma_{p + 1} = {s[p - 1] / s[p]:.12f}; "
            "attracting subspace undefined"
        )
    basis = _fix_column_signs(u[:, :p])
    ratio = float(s[p] / s[p - 1]) if s[p - 1] > 0.0 else 0.0
    return (basis[:, 0] if p == 1 else basis), ratio


def proj_distance(v: np.ndarray, w: np.ndarray) -> np.ndarray | float:
    """Sine of the angle between lines: ``|v ^ w| / (|v| |w|)``.

    Accepts single vectors or batches with matching leading shape.  Computed
    as the norm of an orthogonal residual rather than from the Gram
    determinant, so tiny angles keep absolute accuracy near machine epsilon
    instead of losing half the digits to cancellation.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    vu = v / np.linalg.norm(v, axis=-1, keepdims=True)
    wu = w / np.linalg.norm(w, axis=-1, keepdims=True)
    dot = np.sum(vu * wu, axis=-1)
    resid = vu - dot[..., None] * wu
    return np.minimum(np.linalg.norm(resid, axis=-1), 1.0)


def _log_volume(basis: np.ndarray) -> float:
    """Log of the p-volume spanned by the columns of ``basis``."""
    r = np.linalg.qr(basis, mode="r")
    diag = np.abs(np.diagonal(r))
    if diag.min() == 0.0:
        raise ConfigError("degenerate basis: zero volume")
    return float(np.sum(np.log(diag)))


def iwasawa(g: np.ndarray, basis: np.ndarray) -> float:
    """Volume distortion cocycle of ``g`` on the span of ``basis``.

    ``basis`` has shape ``[d, p]`` (a single vector is also accepted); the
    value is ``log(vol(g b_1, ..., g b_p) / vol(b_1, ..., b_p))``.  It only
    depends on the span, and is additive: the value of a product ``g h`` at
    ``x`` equals the value of ``g`` at ``h x`` plus the value of ``h`` at
    ``x``.
    """
    g = np.asarray(g, dtype=float)
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    if basis.shape[0] != g.shape[0]:
        raise ConfigError(
            f"basis of shape {basis.shape} does not match dimension {g.shape[0]}"
        )
    return _log_volume(g @ basis) - _log_volume(basis)


def gromov_product(v: np.ndarray, w: np.ndarray, floor: float = 1e-12) -> float:
    """Depth of transversality between a line and a hyperplane.

    ``v`` spans the line, ``w`` is the hyperplane's normal vector; the value
    is ``-log sin(angle(line, hyperplane)) = -log |<v, w>| / (|v| |w|)``.
    Large values mean the line nearly lies inside the hyperplane; at actual
    incidence the product is infinite and :class:`NonTransverseError` is
    raised.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    c = abs(float(v @ w)) / (np.linalg.norm(v) * np.linalg.norm(w))
    if c < floor:
        raise NonTransverseError(
            f"line lies in the hyperplane to within {c:.3e}"
        )
    return -np.log(c)


# ---------------------------------------------------------------------------
# basins


def _right_singular_top(g: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(g)
    return vt[0]


def basin_membership(g: np.ndarray, x: np.ndarray, alpha: float):
    """Is the line ``x`` in the angular basin of ``g``?

    The basin consists of lines making angle at least ``alpha`` with the
    hyperplane spanned by the lower right singular vectors; equivalently
    ``|<x, v_1>| >= sin(alpha)`` for the top right singular vector ``v_1``.
    Returns ``(member, margin)`` with ``margin = |<x, v1>| - sin(alpha)``.
    """
    if not 0 < alpha <= np.pi / 2:
        raise ConfigError(f"alpha must be in (0, pi/2], got {alpha}")
    v1 = _right_singular_top(g)
    x = np.asarray(x, dtype=float)
    c = abs(float(x @ v1)) / np.linalg.norm(x)
    margin = c - np.sin(alpha)
    return margin >= 0.0, margin


def _sample_basin(rng, g, alpha, n, max_batches=200):
    d = g.shape[0]
    v1 = _right_singular_top(g)
    s = np.sin(alpha)
    got = []
    have = 0
    for _ in range(max_batches):
        x = rng.standard_normal((max(4 * n, 256), d))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        m = np.abs(x @ v1) >= s
        x = x[m]
        got.append(x)
        have += len(x)
        if have >= n:
            return np.concatenate(got)[:n]
    raise ConfigError(
        f"could not sample the basin (alpha={alpha}); it is nearly empty"
    )


def basin_contraction_check(
    g: np.ndarray, alpha: float, n_samples: int = 1000, seed: int = 0
) -> dict:
    """Sampled check that ``g`` contracts its basin toward the attractor.

    For every sampled line ``x`` in the basin, the distance from ``g x`` to
    the top left singular direction must be at most
    ``(sigma_2/sigma_1) / sin(alpha)``.  Returns the worst case as
    ``min_slack`` (bound minus actual, so nonnegative means the inequality
    held) together with the bound used.
    """
    g = np.asarray(g, dtype=float)
    u, s, _ = np.linalg.svd(g)
    if s[0] == 0.0 or s[1] / s[0] >= 1.0:
        raise NoGapError("no contraction without a top singular gap")
    rng = np.random.default_rng(seed)
    x = _sample_basin(rng, g, alpha, n_samples)
    y = x @ g.T
    dist = proj_distance(y, u[:, 0])
    bound = (s[1] / s[0]) / np.sin(alpha)
    slack = bound - dist
    return {
        "bound": float(bound),
        "max_distance": float(dist.max()),
        "min_slack": float(slack.min()),
        "n_samples": int(n_samples),
    }


# ---------------------------------------------------------------------------
# covering the image of a basin


@dataclass
class CoverResult:
    """A concrete ball cover of ``g(basin)`` in the affine chart at ``u_1``.

    ``centers`` are chart coordinates (the chart takes a line ``y`` to the
    vector ``(<y, u_i>/<y, u_1>)`` for ``i >= 2``); every image point lies
    within ``ball_radius`` of some center, and ``count`` never exceeds
    ``count_bound``.
    """

    p: int
    alpha: float
    axes: np.ndarray
    centers: np.ndarray
    ball_radius: float
    count: int
    count_bound: float
    chart: np.ndarray  # left singular basis, columns


def ellipsoid_cover(g: np.ndarray, p: int, alpha: float) -> CoverResult:
    """Cover the image of the angular basin by balls of radius ``~sigma_p/sigma_1``.

    The image of the basin in the chart at the top singular direction sits
    inside the ellipsoid with semi-axes ``beta_i = (sigma_i/sigma_1)/sin(alpha)``
    along the lower left singular directions.  Axes ``2..p-1`` are cut into
    intervals of radius ``beta_p``, the remaining axes are already that
    small, and each grid cell fits in a euclidean ball of radius
    ``sqrt(d) * beta_p``.  The number of balls is at most
    ``4^p * beta_2 ... beta_{p-1} / beta_p^{p-2}``.
    """
    g = np.asarray(g, dtype=float)
    d = g.shape[0]
    if not 2 <= p <= d:
        raise ConfigError(f"need 2 <= p <= d, got p={p}, d={d}")
    if not 0 < alpha <= np.pi / 2:
        raise ConfigError(f"alpha must be in (0, pi/2], got {alpha}")
    u, s, _ = np.linalg.svd(g)
    if s[0] == 0.0:
        raise NoGapError("zero matrix has no attracting direction")
    beta = (s[1:] / s[0]) / np.sin(alpha)  # beta[i-2] is the axis for u_i
    beta_p = beta[p - 2]
    if beta_p == 0.0:
        raise NoGapError(f"sigma_{p} vanishes; covering scale is zero")
    per_axis = []
    for i in range(2, p):
        b = beta[i - 2]
        cells = int(np.ceil(b / beta_p))
        per_axis.append(-b + (2 * np.arange(cells) + 1) * beta_p)
    if per_axis:
        grids = np.meshgrid(*per_axis, indexing="ij")
        centers_sub = np.stack([a.ravel() for a in grids], axis=1)
    else:
        centers_sub = np.zeros((1, 0))
    centers = np.zeros((len(centers_sub), d - 1))
    centers[:, : p - 2] = centers_sub
    bound = 4.0 ** p * np.prod(beta[: p - 2]) / beta_p ** (p - 2)
    return CoverResult(
        p=p,
        alpha=alpha,
        axes=beta,
        centers=centers,
        ball_radius=float(np.sqrt(d) * beta_p),
        count=len(centers),
        count_bound=float(bound),
        chart=u,
    )


def cover_audit(
    g: np.ndarray,
    p: int,
    alpha: float,
    n_points: int = 100_000,
    seed: int = 0,
) -> dict:
    """Sampled proof that the cover really covers.

    Draws lines in the basin, pushes them through ``g``, and verifies in
    chart coordinates that each image lies inside the predicted ellipsoid
    and within ``ball_radius`` of its nearest grid center.  Because the grid
    is a product, the nearest center is found by snapping coordinates, not
    by search.  Raises :class:`AuditError` on any violation.

    Chart coordinates of an image point can only be trusted down to about
    ``d * eps`` (pushing a unit vector through ``g`` leaves absolute noise
    of order ``eps * sigma_1`` on every component), so that floor is added
    to both checks; axes that predict less than the floor are verified
    vacuously, which is the honest thing doubles can say there.
    """
    g = np.asarray(g, dtype=float)
    cover = ellipsoid_cover(g, p, alpha)
    d = g.shape[0]
    floor = 32 * d * np.finfo(float).eps
    rng = np.random.default_rng(seed)
    x = _sample_basin(rng, g, alpha, n_points)
    y = x @ g.T
    coords = y @ cover.chart
    lead = coords[:, 0]
    if np.min(np.abs(lead) / np.linalg.norm(y, axis=1)) < 1e-12:
        raise ChartDegeneracyError(
            "an image point is orthogonal to the attracting direction"
        )
    w = coords[:, 1:] / lead[:, None]
    tol = 1.0 + 1e-9
    excess = np.abs(w) - cover.axes[None, :] * tol - floor
    if excess.max() > 0.0:
        i = np.unravel_index(np.argmax(excess), excess.shape)
        raise AuditError(
            f"image point escapes the ellipsoid on axis {i[1] + 2} "
            f"by {excess[i]:.3e} (axis size {cover.axes[i[1]]:.3e})"
        )
    beta_p = cover.axes[p - 2]
    resid = w.copy()
    for i in range(2, p):
        b = cover.axes[i - 2]
        cells = int(np.ceil(b / beta_p))
        j = np.clip(np.floor((w[:, i - 2] + b) / (2 * beta_p)), 0, cells - 1)
        resid[:, i - 2] = w[:, i - 2] - (-b + (2 * j + 1) * beta_p)
    dist = np.linalg.norm(resid, axis=1)
    allowed = cover.ball_radius * tol + floor * np.sqrt(d)
    if dist.max() > allowed:
        raise AuditError(
            f"a point sits {dist.max():.3e} from its nearest center; "
            f"ball radius is {cover.ball_radius:.3e}"
        )
    return {
        "n_points": int(n_points),
        "max_center_distance": float(dist.max()),
        "ball_radius": cover.ball_radius,
        "count": cover.count,
        "count_bound": cover.count_bound,
    }
