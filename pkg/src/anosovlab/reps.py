"""Representations of the enumerated groups and the standard families.

A :class:`Representation` stores one matrix per letter (generators and
inverses both), so no matrix ever gets inverted numerically, plus an
optional invariant bilinear form.  Constructors:

* ``fuchsian_genus2`` builds the regular-octagon surface group inside
  SL(2, R), or a deformed hyperbolic structure with distinct marked lengths
  (variant ``"alternate"``);
* ``sym_power``, ``direct_sum``, ``tensor``, ``exterior_power``, ``dual``
  and ``trivial`` combine representations functorially, propagating
  invariant forms where they exist;
* ``so_p_pminus1_fuchsian`` composes the two to land on the Fuchsian locus
  of the split orthogonal group of signature (p, p-1).

``anosov_gap_report`` measures how the singular value gaps of a family grow
along spheres of the group and classifies each gap index.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np

from . import cartan
from .errors import ConfigError, ConstructionError, DimensionOverflowError
from .groups import (
    BallScan,
    GroupSpec,
    GroupWord,
    free_group,
    parse_word,
    surface_genus2,
    word_name,
)

__all__ = [
    "Representation",
    "fuchsian_genus2",
    "trivial",
    "sym_power",
    "direct_sum",
    "tensor",
    "exterior_power",
    "dual",
    "so_p_pminus1_fuchsian",
    "anosov_gap_report",
    "GapReport",
    "REGULAR_OCTAGON_HALF_LENGTH",
    "ALTERNATE_OCTAGON_PARAMS",
]

MAX_DIM = 64

# Half the translation length of a side pairing of the regular hyperbolic
# octagon: arccosh(1 + sqrt(2)).
REGULAR_OCTAGON_HALF_LENGTH = 1.5285709194809982

# A second hyperbolic structure on the same surface: side 0 is stretched by
# a fixed 0.25, the remaining lengths and axis angles were solved so that
# the octagon relator still closes up exactly (residual ~2e-15 in the
# defining identity).  All eight marked generator lengths come out distinct
# from the regular structure.
ALTERNATE_OCTAGON_PARAMS = (
    1.5114249885625506,
    1.4924751752928116,
    1.5610324608105068,
    0.07322465105366668,
    -0.038192140191463164,
    -0.1373944015777381,
)


@dataclass(frozen=True)
class Representation:
    """Matrices for every letter of a group, with optional invariant form."""

    spec: GroupSpec
    gen_mats: np.ndarray  # [n_letters, d, d]
    name: str
    form: np.ndarray | None = None
    anchor_mats: np.ndarray | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.gen_mats.shape[-1]

    def of_word(self, word) -> np.ndarray:
        """Matrix of a word (a GroupWord, letter sequence, or string)."""
        if isinstance(word, GroupWord):
            letters = word.letters
        elif isinstance(word, str):
            letters = parse_word(word, self.spec.n_letters)
        else:
            letters = tuple(word)
        out = np.eye(self.dim)
        for c in letters:
            out = out @ self.gen_mats[c]
        return out

    def __call__(self, word) -> np.ndarray:
        return self.of_word(word)

    # -- text round trip --------------------------------------------------

    def export_text(self) -> str:
        """Serialize to a plain text block, 17 significant digits."""
        buf = io.StringIO()
        buf.write("representation v1\n")
        if self.spec.kind == "surface":
            buf.write(f"group surface {self.spec.n_letters} "
                      f"relator {word_name(self.spec.relator)}\n")
        else:
            buf.write(f"group free {self.spec.n_letters}\n")
        buf.write(f"name {self.name}\n")
        buf.write(f"dim {self.dim}\n")
        for c in range(self.spec.n_letters):
            buf.write(f"letter {c}\n")
            for row in self.gen_mats[c]:
                buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
        if self.form is None:
            buf.write("form none\n")
        else:
            buf.write("form given\n")
            for row in self.form:
                buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
        buf.write("end\n")
        return buf.getvalue()

    @staticmethod
    def import_text(text: str) -> "Representation":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        it = iter(lines)
        if next(it).strip() != "representation v1":
            raise ConfigError("not a representation block (missing header)")
        parts = next(it).split()
        if parts[0] != "group":
            raise ConfigError("expected a group line")
        if parts[1] == "surface":
            spec = surface_genus2()
            if int(parts[2]) != spec.n_letters:
                raise ConfigError("unsupported surface group letter count")
        elif parts[1] == "free":
            spec = free_group(int(parts[2]) // 2)
        else:
            raise ConfigError(f"unknown group kind {parts[1]!r}")
        name = next(it).split(maxsplit=1)[1]
        d = int(next(it).split()[1])

        def read_matrix():
            return np.array(
                [[float(v) for v in next(it).split()] for _ in range(d)]
            )

        gens = np.empty((spec.n_letters, d, d))
        for c in range(spec.n_letters):
            tag = next(it).split()
            if tag[0] != "letter" or int(tag[1]) != c:
                raise ConfigError(f"expected letter {c}, got {' '.join(tag)}")
            gens[c] = read_matrix()
        form_tag = next(it).split()[1]
        form = read_matrix() if form_tag == "given" else None
        return _make(spec, gens, name, form=form)


def _merged_ladder(reps: Sequence[Representation]):
    """Shared anchor check for ladder arithmetic on combined families.

    A representation "has a ladder" when its log singular value vector is
    exactly ``ladder * tau(gamma)`` for the common anchor length ``tau``.
    Combining ladders is only meaningful when every part measures the same
    ``tau``, so all non-trivial anchors must coincide.
    """
    ladders = []
    anchors = []
    for r in reps:
        lad = r.meta.get("tau_ladder")
        if lad is None:
            if np.allclose(r.gen_mats, np.eye(r.dim)):
                lad = (0.0,) * r.dim
            else:
                return None
        elif any(c != 0.0 for c in lad):
            if r.anchor_mats is None:
                return None
            anchors.append(r.anchor_mats)
        ladders.append(tuple(lad))
    for a in anchors[1:]:
        if not np.array_equal(anchors[0], a):
            return None
    return ladders


def _make(
    spec: GroupSpec,
    gens: np.ndarray,
    name: str,
    form: np.ndarray | None = None,
    anchor: np.ndarray | None = None,
    meta: dict | None = None,
) -> Representation:
    gens = np.asarray(gens, dtype=float)
    d = gens.shape[-1]
    if d > MAX_DIM:
        raise DimensionOverflowError(
            f"dimension {d} exceeds the supported maximum {MAX_DIM}"
        )
    if gens.shape != (spec.n_letters, d, d):
        raise ConstructionError(
            f"need {spec.n_letters} matrices of size {d}, got {gens.shape}"
        )
    eye = np.eye(d)
    for c in range(0, spec.n_letters, 2):
        prod = gens[c] @ gens[c + 1]
        scale = max(np.abs(gens[c]).max() * np.abs(gens[c + 1]).max(), 1.0)
        if np.abs(prod - eye).max() > 1e-9 * scale:
            raise ConstructionError(
                f"letters {c} and {c + 1} are not inverse to each other"
            )
    logdet = np.linalg.slogdet(gens)[1]
    if np.abs(logdet).max() > 1e-6 * d:
        raise ConstructionError("generators must have unit determinant")
    if form is not None:
        form = np.asarray(form, dtype=float)
        # The roundoff in g^T F g is about eps * |g|^2 * |F|, so the
        # residual must be normalized by the squared operator norm before
        # comparing against a tolerance.
        worst = max(
            np.abs(gens[c].T @ form @ gens[c] - form).max()
            / (max(np.abs(form).max(), 1.0) * max(np.linalg.norm(gens[c], 2) ** 2, 1.0))
            for c in range(spec.n_letters)
        )
        if worst > 1e-11 * d:
            raise ConstructionError(
                f"claimed invariant form moves by {worst:.3e} under the generators"
            )
    if spec.kind == "surface":
        # The identity emerges from cancellation between large partial
        # products, so roundoff in the residual scales with the worst
        # prefix-times-suffix norm along the relator, not with the result.
        rel = np.eye(d)
        pre = [1.0]
        for c in spec.relator:
            rel = rel @ gens[c]
            pre.append(np.linalg.norm(rel, 2))
        suf_mat = np.eye(d)
        suf = [1.0]
        for c in reversed(spec.relator):
            suf_mat = gens[c] @ suf_mat
            suf.append(np.linalg.norm(suf_mat, 2))
        scale = max(
            pre[j] * suf[len(spec.relator) - j]
            for j in range(len(spec.relator) + 1)
        )
        if np.abs(rel - eye).max() > 1e-12 * scale:
            raise ConstructionError("the relator does not map to the identity")
    return Representation(spec, gens, name, form, anchor, meta or {})


# ---------------------------------------------------------------------------
# the Fuchsian anchor


def _octagon_generators(halves: Sequence[float], angles: Sequence[float]) -> np.ndarray:
    """Side pairing matrices: cosh(l) I + sinh(l) (reflection at angle phi).

    Each generator is symmetric with unit determinant; since the reflection
    part squares to the identity, the inverse is the same expression with
    the sinh term negated, so inverses are exact.
    """
    gens = np.empty((8, 2, 2))
    for k in range(4):
        ch, sh = np.cosh(halves[k]), np.sinh(halves[k])
        refl = np.array(
            [
                [-np.sin(angles[k]), np.cos(angles[k])],
                [np.cos(angles[k]), np.sin(angles[k])],
            ]
        )
        gens[2 * k] = ch * np.eye(2) + sh * refl
        gens[2 * k + 1] = ch * np.eye(2) - sh * refl
    return gens


def fuchsian_genus2(variant: str = "regular") -> Representation:
    """Discrete faithful SL(2, R) representation of the genus-2 group.

    ``"regular"`` uses the regular octagon (all four generators share the
    translation length ``2 arccosh(1 + sqrt 2)``); ``"alternate"`` is a
    different hyperbolic structure with pairwise distinct marked lengths,
    useful when a genuinely asymmetric example is needed.
    """
    l0 = REGULAR_OCTAGON_HALF_LENGTH
    if variant == "regular":
        halves = [l0] * 4
        angles = [k * np.pi / 4 for k in range(4)]
    elif variant == "alternate":
        p = ALTERNATE_OCTAGON_PARAMS
        halves = [l0 + 0.25, p[0], p[1], p[2]]
        angles = [0.0, np.pi / 4 + p[3], np.pi / 2 + p[4], 3 * np.pi / 4 + p[5]]
    else:
        raise ConfigError(f"unknown variant {variant!r}")
    gens = _octagon_generators(halves, angles)
    traces = [float(np.trace(gens[2 * k])) for k in range(4)]
    rep = _make(
        surface_genus2(),
        gens,
        f"fuchsian-genus2-{variant}",
        anchor=gens,
        meta={
            "variant": variant,
            "generator_traces": traces,
            "translation_lengths": [2.0 * np.arccosh(t / 2.0) for t in traces],
            "tau_ladder": (0.5, -0.5),
        },
    )
    return rep


def trivial(spec: GroupSpec, dim: int = 1) -> Representation:
    """The representation sending everything to the identity."""
    gens = np.broadcast_to(np.eye(dim), (spec.n_letters, dim, dim)).copy()
    return _make(
        spec,
        gens,
        f"trivial-{dim}",
        form=np.eye(dim),
        meta={"tau_ladder": (0.0,) * dim},
    )


# ---------------------------------------------------------------------------
# functorial constructions


def _sym_power_matrix(m: np.ndarray, k: int) -> np.ndarray:
    # Column j lists the coefficients of (a x + c y)^(k-j) (b x + d y)^j;
    # conjugating by the sqrt-binomial weights makes rotations orthogonal
    # and form-compatible.
    d = k + 1
    a, b = m[0, 0], m[0, 1]
    c, dd = m[1, 0], m[1, 1]
    s = np.zeros((d, d))
    for j in range(d):
        p1 = np.array([comb(k - j, r) * a ** (k - j - r) * c ** r for r in range(k - j + 1)])
        p2 = np.array([comb(j, r) * b ** (j - r) * dd ** r for r in range(j + 1)])
        s[:, j] = np.convolve(p1, p2)
    w = np.sqrt(np.array([comb(k, i) for i in range(d)], dtype=float))
    return s * w[None, :] / w[:, None]


def sym_power(rep: Representation, k: int) -> Representation:
    """k-th symmetric power of a 2-dimensional representation.

    The result preserves the alternating antidiagonal form (symmetric for
    even k, skew for odd k); for even k its signature is split, which is how
    the orthogonal families below arise.
    """
    if rep.dim != 2:
        raise ConstructionError("symmetric powers are implemented for 2x2 input")
    if k < 0:
        raise ConfigError("symmetric power exponent must be nonnegative")
    d = k + 1
    if d > MAX_DIM:
        raise DimensionOverflowError(f"sym^{k} has dimension {d} > {MAX_DIM}")
    gens = np.stack([_sym_power_matrix(m, k) for m in rep.gen_mats])
    form = np.zeros((d, d))
    for i in range(d):
        form[i, k - i] = (-1.0) ** i
    meta: dict = {"base": rep.name, "power": k}
    base_ladder = rep.meta.get("tau_ladder")
    if base_ladder is not None:
        u1, u2 = base_ladder
        meta["tau_ladder"] = tuple((k - j) * u1 + j * u2 for j in range(d))
    return _make(
        rep.spec,
        gens,
        f"{rep.name}-sym{k}",
        form=form,
        anchor=rep.anchor_mats,
        meta=meta,
    )


def direct_sum(*reps: Representation) -> Representation:
    if len(reps) < 2:
        raise ConfigError("direct_sum needs at least two summands")
    spec = reps[0].spec
    if any(r.spec != spec for r in reps):
        raise ConfigError("cannot sum representations of different groups")
    d = sum(r.dim for r in reps)
    if d > MAX_DIM:
        raise DimensionOverflowError(f"direct sum has dimension {d} > {MAX_DIM}")
    gens = np.zeros((spec.n_letters, d, d))
    off = 0
    for r in reps:
        gens[:, off : off + r.dim, off : off + r.dim] = r.gen_mats
        off += r.dim
    form = None
    if all(r.form is not None for r in reps):
        form = np.zeros((d, d))
        off = 0
        for r in reps:
            form[off : off + r.dim, off : off + r.dim] = r.form
            off += r.dim
    anchor = next((r.anchor_mats for r in reps if r.anchor_mats is not None), None)
    meta = {}
    ladders = _merged_ladder(reps)
    if ladders is not None:
        merged = [c for lad in ladders for c in lad]
        meta["tau_ladder"] = tuple(sorted(merged, reverse=True))
    return _make(spec, gens, "+".join(r.name for r in reps), form, anchor, meta)


def tensor(r1: Representation, r2: Representation) -> Representation:
    if r1.spec != r2.spec:
        raise ConfigError("cannot tensor representations of different groups")
    d = r1.dim * r2.dim
    if d > MAX_DIM:
        raise DimensionOverflowError(f"tensor product has dimension {d} > {MAX_DIM}")
    gens = np.stack([np.kron(a, b) for a, b in zip(r1.gen_mats, r2.gen_mats)])
    form = None
    if r1.form is not None and r2.form is not None:
        form = np.kron(r1.form, r2.form)
    anchor = r1.anchor_mats if r1.anchor_mats is not None else r2.anchor_mats
    meta = {}
    ladders = _merged_ladder([r1, r2])
    if ladders is not None:
        sums = [u + v for u in ladders[0] for v in ladders[1]]
        meta["tau_ladder"] = tuple(sorted(sums, reverse=True))
    return _make(r1.spec, gens, f"{r1.name}*{r2.name}", form, anchor, meta)


def exterior_power(rep: Representation, p: int) -> Representation:
    if not 1 <= p <= rep.dim:
        raise ConfigError(f"exterior power index must be in [1, {rep.dim}]")
    d = comb(rep.dim, p)
    if d > MAX_DIM:
        raise DimensionOverflowError(f"wedge^{p} has dimension {d} > {MAX_DIM}")
    gens = np.stack([cartan._compound_matrix(m, p) for m in rep.gen_mats])
    form = None
    if rep.form is not None:
        form = cartan._compound_matrix(rep.form, p)
    meta = {}
    base_ladder = rep.meta.get("tau_ladder")
    if base_ladder is not None:
        sums = [sum(sub) for sub in combinations(base_ladder, p)]
        meta["tau_ladder"] = tuple(sorted(sums, reverse=True))
    return _make(
        rep.spec, gens, f"{rep.name}-wedge{p}", form, rep.anchor_mats, meta
    )


def dual(rep: Representation) -> Representation:
    """Contragredient representation, g -> transpose of g inverse.

    Uses the stored inverse letters, so no matrix inversion happens.
    """
    gens = np.stack([rep.gen_mats[c ^ 1].T for c in range(rep.spec.n_letters)])
    form = None
    if rep.form is not None:
        form = np.linalg.inv(rep.form)
    meta = {}
    base_ladder = rep.meta.get("tau_ladder")
    if base_ladder is not None:
        meta["tau_ladder"] = tuple(sorted((-c for c in base_ladder), reverse=True))
    return _make(rep.spec, gens, f"{rep.name}-dual", form, rep.anchor_mats, meta)


def so_p_pminus1_fuchsian(p: int, variant: str = "regular") -> Representation:
    """Fuchsian locus representation into the split form SO(p, p-1).

    This is the (2p-2)-nd symmetric power of the hyperbolic structure, of
    dimension 2p-1.  Its log singular values are the multiples
    ``(p-1, p-2, ..., 1, 0, -1, ..., -(p-1))`` of half the translation
    length, and the preserved form has split signature.
    """
    if p < 2:
        raise ConfigError("need p >= 2 for a split orthogonal group")
    rep = sym_power(fuchsian_genus2(variant), 2 * p - 2)
    sig = np.linalg.eigvalsh(rep.form)
    rep.meta.update(
        {
            "split_rank": p,
            "form_signature": (int((sig > 0).sum()), int((sig < 0).sum())),
        }
    )
    return rep


# ---------------------------------------------------------------------------
# gap growth reports


@dataclass
class GapReport:
    """Growth of singular value gaps along spheres of the group.

    ``min_gap[n - 1][p - 1]`` is the smallest value of
    ``log sigma_p - log sigma_{p+1}`` over the radius-``n`` sphere.  A gap
    index is called ``"uniform"`` when its minimum keeps growing linearly,
    ``"none"`` when it stays at zero, and ``"weak"`` in between.
    """

    max_len: int
    dim: int
    min_gap: np.ndarray  # [max_len, dim - 1]
    slopes: np.ndarray  # [dim - 1]
    verdicts: list[str]

    @property
    def uniform_indices(self) -> list[int]:
        return [p + 1 for p, v in enumerate(self.verdicts) if v == "uniform"]

    def summary(self) -> str:
        rows = [f"gap report (dim {self.dim}, spheres up to {self.max_len})"]
        for p, v in enumerate(self.verdicts):
            rows.append(
                f"  p={p + 1}: last min gap {self.min_gap[-1][p]:.4f}, "
                f"slope {self.slopes[p]:+.4f}, {v}"
            )
        return "\n".join(rows)


def anosov_gap_report(
    rep: Representation,
    max_len: int = 6,
    chunk: int = 100_000,
    budget_seconds: float | None = None,
) -> GapReport:
    """Measure singular value gaps over all spheres up to ``max_len``.

    Uses the exterior power route for the log singular values so that even
    strongly contracted gaps are computed accurately.
    """
    anchor = rep.anchor_mats
    if anchor is None and rep.dim == 2 and rep.spec.kind == "surface":
        anchor = rep.gen_mats
    scan = BallScan(
        rep.spec, anchor, max_len=max_len, budget_seconds=budget_seconds
    )
    mins = np.full((max_len, rep.dim - 1), np.inf)

    def visit(lv):
        if lv.n == 0:
            return
        for lo in range(0, lv.count, chunk):
            idx = np.arange(lo, min(lo + chunk, lv.count))
            la = cartan.cartan_project_words(
                rep.gen_mats, scan.words(lv.n, idx)
            )
            gaps = la[:, :-1] - la[:, 1:]
            mins[lv.n - 1] = np.minimum(mins[lv.n - 1], gaps.min(axis=0))

    scan.run(visit)
    levels = np.arange(1, max_len + 1, dtype=float)
    slopes = np.zeros(rep.dim - 1)
    verdicts = []
    for p in range(rep.dim - 1):
        y = mins[:, p]
        slopes[p] = np.polyfit(levels, y, 1)[0] if max_len >= 2 else 0.0
        if y[-1] < 1e-8:
            verdicts.append("none")
        elif y[-1] > 0.1 and slopes[p] > 0.02:
            verdicts.append("uniform")
        else:
            verdicts.append("weak")
    return GapReport(max_len, rep.dim, mins, slopes, verdicts)
