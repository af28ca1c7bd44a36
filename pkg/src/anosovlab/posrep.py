"""Total positivity in SO(p,q): forms, positive unipotents, positive triples.

Everything here is explicit matrix algebra.  The context fixes the
antidiagonal-block form Q (built from an alternating block K and a
Lorentz-type block J), the positive unipotent generators are written entry
by entry, and positive triples of flags are produced by pushing a standard
descending flag with a product of positive unipotents along a fixed
reduced word.  The directness of the resulting configurations reduces to
the positivity of one matrix coefficient per index, which is also the
determinant of a stacked frame, so the module exposes both routes and the
tests compare them.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConeViolationError, ConfigError

__all__ = [
    "PositivityContext",
    "so_pq_context",
    "w0_reduced_expression",
    "positive_unipotent",
    "random_positive_params",
    "PositiveTriple",
    "positive_triple",
]


def _k_block(p: int) -> np.ndarray:
    """Alternating antidiagonal (p-1) x (p-1) block: K[i, p-2-i] = (-1)^i."""
    k = np.zeros((p - 1, p - 1))
    for i in range(p - 1):
        k[i, p - 2 - i] = (-1.0) ** i
    return k


def _j_block(p: int, q: int) -> np.ndarray:
    """Lorentz-type middle block of size q-p+2, signature (1, q-p+1)."""
    m = q - p + 2
    j = np.zeros((m, m))
    sign = (-1.0) ** (p - 1)
    j[0, m - 1] = sign
    j[m - 1, 0] = sign
    if m > 2:
        j[1 : m - 1, 1 : m - 1] = -np.eye(m - 2)
    return j


@dataclass(frozen=True)
class PositivityContext:
    """Fixed matrix data for the positive structure of one SO(p,q).

    ``Q`` is the invariant form in the antidiagonal block shape; ``K`` and
    ``J`` are its corner and middle blocks.  ``flag_std`` spans ascending
    coordinate subspaces (the third flag of every triple built here) and
    ``flag_opp`` the descending ones.
    """

    p: int
    q: int
    Q: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    J: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.p + self.q

    @property
    def cone_dim(self) -> int:
        """Dimension of the vector cone attached to the last short root."""
        return self.q - self.p + 2

    def flag_std(self, k: int) -> np.ndarray:
        """Basis of the ascending k-dimensional coordinate subspace."""
        return np.eye(self.d)[:, :k]

    def flag_opp(self, k: int) -> np.ndarray:
        """Basis of the descending k-dimensional coordinate subspace."""
        return np.eye(self.d)[:, self.d - k :][:, ::-1]

    def q_J(self, v: np.ndarray) -> float:
        """Value of the cone quadratic form, normalized to match exp entries."""
        v = np.asarray(v, dtype=float)
        return float(0.5 * v @ self.J @ v)

    def in_cone(self, v: np.ndarray) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(v[0] > 0 and self.q_J(v) > 0)

    def default_cone_vector(self) -> np.ndarray:
        """A canonical interior point of the vector cone with q_J = 1."""
        v = np.zeros(self.cone_dim)
        v[0] = 1.0
        v[-1] = (-1.0) ** (self.p - 1)
        return v

    def export_text(self, mats: dict[str, np.ndarray] | None = None) -> str:
        """Text block with the form Q and optional named matrices attached."""
        buf = io.StringIO()
        buf.write(f"positivity v1\nsignature {self.p} {self.q}\n")
        buf.write("form given\n")
        for row in self.Q:
            buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
        for name, m in (mats or {}).items():
            buf.write(f"matrix {name}\n")
            for row in np.asarray(m, dtype=float):
                buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
        buf.write("end\n")
        return buf.getvalue()


def so_pq_context(p: int = 3, q: int = 4) -> PositivityContext:
    """Context for SO(p,q) with p < q, in the antidiagonal block convention."""
    if not 2 <= p < q:
        raise ConfigError("need 2 <= p < q")
    kb = _k_block(p)
    jb = _j_block(p, q)
    d = p + q
    m = q - p + 2
    qq = np.zeros((d, d))
    qq[: p - 1, d - p + 1 :] = kb
    qq[d - p + 1 :, : p - 1] = (-1.0) ** p * kb
    qq[p - 1 : p - 1 + m, p - 1 : p - 1 + m] = jb
    eig = np.linalg.eigvalsh(0.5 * (qq + qq.T))
    pos, neg = int((eig > 0).sum()), int((eig < 0).sum())
    if (pos, neg) != (p, q):
        raise ConfigError(
            f"form has signature ({pos},{neg}), expected ({p},{q})"
        )
    return PositivityContext(p=p, q=q, Q=qq, K=kb, J=jb)


def w0_reduced_expression(p: int) -> tuple[int, ...]:
    """The fixed reduced word used for positive products: (1..p-1) repeated.

    Any reduced expression of the longest element works; this one is the
    standard (p-1)^2-letter choice, recorded as a constant so fixtures are
    reproducible.
    """
    if p < 2:
        raise ConfigError("p must be at least 2")
    return tuple((i % (p - 1)) + 1 for i in range((p - 1) * (p - 1)))


def positive_unipotent(
    ctx: PositivityContext, i: int, param, *, enforce_cone: bool = True
) -> np.ndarray:
    """One positive unipotent generator.

    For root index ``i <= p-2`` the parameter is a positive scalar and the
    matrix differs from the identity exactly in the entries (i, i+1) and
    (d-i, d-i+1) (1-based), both equal to the parameter.  For ``i = p-1``
    the parameter is a vector in the cone of the middle quadratic form with
    positive first entry, and the matrix is the displayed block unipotent
    with row (1, v^T, q_J(v)) and column Jv.  ``enforce_cone=False`` skips
    the cone membership test (for boundary experiments); the matrix algebra
    is unchanged.
    """
    p, d = ctx.p, ctx.d
    if not 1 <= i <= p - 1:
        raise ConfigError(f"root index must be in 1..{p - 1}")
    u = np.eye(d)
    if i <= p - 2:
        v = float(param)
        if enforce_cone and not v > 0:
            raise ConeViolationError(
                f"scalar parameter for root {i} must be positive, got {v}"
            )
        u[i - 1, i] = v
        u[d - i - 1, d - i] = v
        return u
    v = np.asarray(param, dtype=float)
    if v.shape != (ctx.cone_dim,):
        raise ConfigError(
            f"root {i} takes a vector of length {ctx.cone_dim}, "
            f"got shape {v.shape}"
        )
    if enforce_cone and not ctx.in_cone(v):
        raise ConeViolationError(
            "vector parameter lies outside the open cone "
            f"(first entry {v[0]:.3g}, q_J {ctx.q_J(v):.3g})"
        )
    # Exponential of the nilpotent Lie algebra element carrying v.  The
    # sign on the column block is forced by invariance of Q and flips
    # with the parity of p.
    sign = (-1.0) ** (p - 1)
    b = p - 2  # 0-based row of the (1, v^T, q_J(v)) block row
    u[b, p - 1 : p - 1 + ctx.cone_dim] = v
    u[b, d - p + 1] = sign * ctx.q_J(v)
    u[p - 1 : p - 1 + ctx.cone_dim, d - p + 1] = sign * (ctx.J @ v)
    return u


def random_positive_params(
    ctx: PositivityContext,
    rng: np.random.Generator,
    scalar_range: tuple[float, float] = (0.05, 5.0),
) -> list:
    """Random parameters for the reduced word, inside the open cones.

    Scalar letters draw uniformly from ``scalar_range``; vector letters draw
    a Gaussian vector and push the last coordinate out (with the parity sign
    that makes the quadratic form grow) until it enters the cone.
    """
    lo, hi = scalar_range
    sign = (-1.0) ** (ctx.p - 1)
    params: list = []
    for i in w0_reduced_expression(ctx.p):
        if i <= ctx.p - 2:
            params.append(float(rng.uniform(lo, hi)))
            continue
        v = rng.normal(size=ctx.cone_dim)
        v[0] = abs(v[0]) + 0.1
        while not ctx.in_cone(v):
            v[-1] = sign * (abs(v[-1]) + 0.5)
        params.append(v)
    return params


@dataclass
class PositiveTriple:
    """A positive flag triple with its directness evidence.

    ``s`` is the product of positive unipotents along the reduced word;
    the flags are (descending, s * descending, ascending).  For each k the
    coefficient route and the determinant route to the same directness
    margin are recorded, together with the smallest singular value of the
    stacked frame.
    """

    ctx: PositivityContext
    word: tuple[int, ...]
    params: list
    s: np.ndarray
    coefficients: dict[int, float]
    coefficient_predictions: dict[int, float]
    determinants: dict[int, float]
    margins: dict[int, float]

    def flag1(self, k: int) -> np.ndarray:
        return self.ctx.flag_opp(k)

    def flag2(self, k: int) -> np.ndarray:
        return self.s @ self.ctx.flag_opp(k)

    def flag3(self, k: int) -> np.ndarray:
        return self.ctx.flag_std(k)

    def as_dict(self) -> dict:
        return {
            "p": self.ctx.p,
            "q": self.ctx.q,
            "word": list(self.word),
            "coefficients": {str(k): v for k, v in self.coefficients.items()},
            "predicted": {
                str(k): v for k, v in self.coefficient_predictions.items()
            },
            "determinants": {str(k): v for k, v in self.determinants.items()},
            "margins": {str(k): v for k, v in self.margins.items()},
        }


def positive_triple(
    ctx: PositivityContext, params: list | None = None
) -> PositiveTriple:
    """Build a positive triple and compute its directness margins.

    ``params`` matches the fixed reduced word letter by letter: a positive
    scalar for letters up to p-2, a cone vector for letters p-1.  Defaults
    to all-ones scalars and the canonical unit cone vector.

    For each 1 <= k <= p-2 the triple determines a stacked frame (the
    ascending d-k-1 space, the pushed line s * e_{d-k+1}, the descending
    k space) whose determinant equals, up to sign, the coefficient of
    s * e_{d-k+1} on e_{d-k}; that coefficient in turn must equal the sum
    of the scalar parameters at the letters equal to k.  All three values
    are recorded.
    """
    word = w0_reduced_expression(ctx.p)
    if params is None:
        params = [
            ctx.default_cone_vector() if i == ctx.p - 1 else 1.0 for i in word
        ]
    if len(params) != len(word):
        raise ConfigError(
            f"need {len(word)} parameters for the reduced word, "
            f"got {len(params)}"
        )
    d = ctx.d
    s = np.eye(d)
    for i, v in zip(word, params):
        s = s @ positive_unipotent(ctx, i, v)
    coefficients: dict[int, float] = {}
    predictions: dict[int, float] = {}
    determinants: dict[int, float] = {}
    margins: dict[int, float] = {}
    for k in range(1, ctx.p - 1):
        pushed = s @ np.eye(d)[:, d - k]  # s * e_{d-k+1}, 0-based column d-k
        coefficients[k] = float(pushed[d - k - 1])
        predictions[k] = float(
            sum(float(v) for i, v in zip(word, params) if i == k)
        )
        frame = np.concatenate(
            [ctx.flag_std(d - k - 1), pushed[:, None], ctx.flag_opp(k)],
            axis=1,
        )
        determinants[k] = float(abs(np.linalg.det(frame)))
        margins[k] = float(np.linalg.svd(frame, compute_uv=False)[-1])
    return PositiveTriple(
        ctx=ctx,
        word=word,
        params=list(params),
        s=s,
        coefficients=coefficients,
        coefficient_predictions=predictions,
        determinants=determinants,
        margins=margins,
    )
