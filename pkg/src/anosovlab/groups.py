"""Word enumeration for free groups and the genus-2 surface group.

The genus-2 group is presented on four generators ``a, b, c, d`` (inverses
are written as capitals) with the octagon relator ``aBcDAbCd``.  Because the
presentation satisfies the C'(1/6) small cancellation condition, a freely
reduced word is geodesic as soon as it contains no subword longer than half
the relator, and among the geodesic spellings of one element exactly one
survives if we additionally forbid relator halves whose complementary half is
shortlex-smaller.  The enumerator generates that canonical language directly,
so every sphere is produced with one word per group element and no
cross-level membership checks.

A quantized matrix fingerprint layer stays on as an always-running audit: it
clusters elements whose anchor matrices coincide after projective sign fixing
and grid rounding, merges genuine duplicates (none are expected), and refuses
to guess when two distinct matrices land closer than the quantizer can
separate.

Usage
-----
>>> spec = surface_genus2()
>>> len(sphere(spec, 3, anchor_mats))
392
>>> scan = BallScan(spec, anchor_mats, max_len=6)
>>> result = scan.run(visit=lambda lv: print(lv.n, lv.count))
"""

from __future__ import annotations

import string
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import (
    BudgetExceededError,
    ConfigError,
    ConstructionError,
    QuantizationCollisionError,
)

__all__ = [
    "GroupSpec",
    "GroupWord",
    "BallScan",
    "LevelView",
    "LevelStats",
    "ScanResult",
    "free_group",
    "surface_genus2",
    "reduce_word",
    "sphere",
    "sphere_count",
    "dedup_key",
    "ray_prefixes",
    "evaluate_word",
    "inverse_word",
    "parse_word",
    "word_name",
]

OCTAGON_RELATOR = (0, 3, 4, 7, 1, 2, 5, 6)  # spells aBcDAbCd


# ---------------------------------------------------------------------------
# letters
#
# Generator i gets code 2i, its inverse code 2i+1, so inversion is XOR with 1.
# Shortlex order is induced by the integer codes: a < A < b < B < ...

def letter_name(code: int) -> str:
    gen, bar = divmod(code, 2)
    if gen >= 26:
        raise ConfigError(f"no letter name for generator index {gen}")
    return string.ascii_uppercase[gen] if bar else string.ascii_lowercase[gen]


def word_name(letters: Sequence[int]) -> str:
    """Spell a word; the empty word is written ``1``."""
    if len(letters) == 0:
        return "1"
    return "".join(letter_name(c) for c in letters)


def parse_word(text: str, n_letters: int) -> tuple[int, ...]:
    """Inverse of :func:`word_name` (``"1"`` means the empty word)."""
    if text == "1" or text == "":
        return ()
    out = []
    for ch in text:
        if ch in string.ascii_lowercase:
            code = 2 * string.ascii_lowercase.index(ch)
        elif ch in string.ascii_uppercase:
            code = 2 * string.ascii_uppercase.index(ch) + 1
        else:
            raise ConfigError(f"bad letter {ch!r} in word {text!r}")
        if code >= n_letters:
            raise ConfigError(f"letter {ch!r} is outside the generating set")
        out.append(code)
    return tuple(out)


def inverse_word(letters: Sequence[int]) -> tuple[int, ...]:
    return tuple(c ^ 1 for c in reversed(letters))


# ---------------------------------------------------------------------------
# group specifications


@dataclass(frozen=True)
class GroupSpec:
    """A marked group: either free or the genus-2 surface group.

    ``n_letters`` counts generators together with inverses, so it is twice
    the rank.  ``relator`` is None for free groups.
    """

    kind: str
    n_letters: int
    relator: tuple[int, ...] | None = None

    @property
    def rank(self) -> int:
        return self.n_letters // 2

    def __post_init__(self):
        if self.kind not in ("free", "surface"):
            raise ConfigError(f"unknown group kind {self.kind!r}")
        if self.kind == "surface" and self.relator is None:
            raise ConfigError("surface group needs a relator")


def free_group(rank: int) -> GroupSpec:
    if not 1 <= rank <= 26:
        raise ConfigError(f"free group rank must be in [1, 26], got {rank}")
    return GroupSpec("free", 2 * rank)


def surface_genus2() -> GroupSpec:
    """The genus-2 surface group with the octagon relator ``aBcDAbCd``."""
    return GroupSpec("surface", 8, OCTAGON_RELATOR)


@dataclass(frozen=True)
class GroupWord:
    """A word in the generators of ``spec``; plain container, not reduced."""

    spec: GroupSpec
    letters: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return word_name(self.letters)

    def __repr__(self) -> str:
        return f"GroupWord({word_name(self.letters)!r})"

    def inverse(self) -> "GroupWord":
        return GroupWord(self.spec, inverse_word(self.letters))

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        if other.spec != self.spec:
            raise ConfigError("cannot multiply words from different groups")
        return reduce_word(self.spec, self.letters + other.letters)


# ---------------------------------------------------------------------------
# relator tables
#
# Five-letter windows of relator rotations (both orientations) are packed
# into 15-bit codes, relator halves into 12-bit codes, so the enumerator can
# test a whole level with two table lookups.


class _Tables(NamedTuple):
    win5: np.ndarray          # bool[8**5], forbidden five-letter windows
    half_smaller: np.ndarray  # bool[8**4], halves with shortlex-smaller twin
    five_to_three: dict       # packed 5-window -> complementary 3-word
    swap: dict                # half tuple -> strictly smaller equal half


def _pack(letters: Sequence[int]) -> int:
    code = 0
    for c in letters:
        code = (code << 3) | c
    return code


@lru_cache(maxsize=None)
def _language_tables(relator: tuple[int, ...]) -> _Tables:
    n = len(relator)
    if n != 8:
        raise ConfigError("language tables assume a length-8 relator")
    rotations = []
    for base in (relator, inverse_word(relator)):
        for s in range(n):
            rotations.append(base[s:] + base[:s])
    win5 = np.zeros(8 ** 5, dtype=bool)
    half_smaller = np.zeros(8 ** 4, dtype=bool)
    five_to_three: dict[int, tuple[int, ...]] = {}
    swap: dict[tuple[int, ...], tuple[int, ...]] = {}
    for rot in rotations:
        head5 = rot[:5]
        win5[_pack(head5)] = True
        five_to_three[_pack(head5)] = inverse_word(rot[5:])
        half, twin = rot[:4], inverse_word(rot[4:])
        if twin < half:
            half_smaller[_pack(half)] = True
            swap[half] = twin
    return _Tables(win5, half_smaller, five_to_three, swap)


# ---------------------------------------------------------------------------
# pointwise reduction


def _free_reduce(letters: Sequence[int]) -> list[int]:
    out: list[int] = []
    for c in letters:
        if out and out[-1] == (c ^ 1):
            out.pop()
        else:
            out.append(c)
    return out


def reduce_word(spec: GroupSpec, letters: Sequence[int]) -> GroupWord:
    """Rewrite ``letters`` to the canonical geodesic spelling.

    Free reduction always applies.  For the surface group, any window longer
    than half the relator is replaced by the shorter complement (this is the
    small cancellation geodesic criterion), and any relator half whose twin
    half is shortlex-smaller is swapped for the twin.  The result is geodesic
    and the map is idempotent; words representing the same element reach the
    same fixed point, which is exactly the language the enumerator generates.
    """
    w = _free_reduce(letters)
    if spec.kind == "free":
        return GroupWord(spec, tuple(w))
    tables = _language_tables(spec.relator)
    changed = True
    while changed:
        changed = False
        # long windows first: each hit shortens the word by two
        i = 0
        while i + 5 <= len(w):
            repl = tables.five_to_three.get(_pack(w[i : i + 5]))
            if repl is not None:
                w = _free_reduce(w[:i] + list(repl) + w[i + 5 :])
                changed = True
                i = 0
            else:
                i += 1
        # then half swaps: length stays fixed, shortlex strictly drops
        for i in range(len(w) - 3):
            twin = tables.swap.get(tuple(w[i : i + 4]))
            if twin is not None:
                w2 = _free_reduce(w[:i] + list(twin) + w[i + 4 :])
                w = w2
                changed = True
                break
    return GroupWord(spec, tuple(w))


# ---------------------------------------------------------------------------
# matrix fingerprints

_SIGN_THRESHOLD = 1e-4


@lru_cache(maxsize=None)
def _sign_functionals(dim: int) -> np.ndarray:
    # Three fixed generic directions; the sign of the first decisive one
    # canonicalizes the projective ambiguity M ~ -M.
    rng = np.random.default_rng(94603)
    w = rng.standard_normal((3, dim))
    return w / np.linalg.norm(w, axis=1, keepdims=True)


def _canonical_flat(mats: np.ndarray) -> np.ndarray:
    """Unit-Frobenius rows with projective sign fixed, shape [N, d*d]."""
    flat = mats.reshape(len(mats), -1)
    flat = flat / np.linalg.norm(flat, axis=1, keepdims=True)
    signs = np.zeros(len(flat))
    for w in _sign_functionals(flat.shape[1]):
        undecided = signs == 0.0
        if not undecided.any():
            break
        v = flat @ w
        decisive = np.abs(v) >= _SIGN_THRESHOLD
        signs[undecided & decisive] = np.sign(v)[undecided & decisive]
    if (signs == 0.0).any():
        raise QuantizationCollisionError(
            "sign canonicalization undecided on all three functionals"
        )
    return flat * signs[:, None]


def dedup_key(
    word_or_mat, anchor_mats: np.ndarray | None = None, quantum: float = 1e-9
) -> tuple[int, ...]:
    """Quantized projective fingerprint of a matrix (or of a word's matrix).

    Entries are divided by the Frobenius norm, the overall sign is fixed by a
    generic functional, and each entry is floored to a multiple of
    ``quantum``.  Equal group elements produce equal keys; the coarse grid
    makes the key usable only at small word length, which is where the
    pointwise form is meant to live (the bulk engine uses a two-grid variant
    of the same idea).
    """
    if isinstance(word_or_mat, GroupWord):
        if anchor_mats is None:
            raise ConfigError("dedup_key of a word needs anchor matrices")
        mat = evaluate_word(anchor_mats, word_or_mat.letters)
    else:
        mat = np.asarray(word_or_mat, dtype=float)
    flat = _canonical_flat(mat[None])[0]
    return tuple(int(v) for v in np.floor(flat / quantum))


def evaluate_word(gen_mats: np.ndarray, letters: Sequence[int]) -> np.ndarray:
    """Left-to-right product of generator matrices along a word."""
    d = gen_mats.shape[-1]
    out = np.eye(d)
    for c in letters:
        out = out @ gen_mats[c]
    return out


# ---------------------------------------------------------------------------
# hashing for the bulk dedup audit

_H1 = np.uint64(0x9E3779B97F4A7C15)
_H2 = np.uint64(0xBF58476D1CE4E5B9)
_H3 = np.uint64(0x94D049BB133111EB)


def _mix64(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * _H2
    x = (x ^ (x >> np.uint64(27))) * _H3
    return x ^ (x >> np.uint64(31))


def _hash_rows(cols: np.ndarray, seed: int) -> np.ndarray:
    """One 64-bit hash per row of an integer array."""
    h = np.full(len(cols), np.uint64(seed), dtype=np.uint64)
    mask = (1 << 64) - 1
    for j in range(cols.shape[1]):
        salt = np.uint64((0x9E3779B97F4A7C15 * (j + 1)) & mask)
        h = _mix64((h + salt) ^ _mix64(cols[:, j].astype(np.uint64) + _H1))
    return h


def _grid_hashes(flat: np.ndarray, quantum: float) -> tuple[np.ndarray, np.ndarray]:
    # Two grids offset by half a cell: points closer than the roundoff scale
    # share a cell in at least one grid unless two different coordinates
    # straddle the two grids simultaneously, which needs coincidences at the
    # 1e-7 level twice over.
    k0 = np.floor(flat / quantum).astype(np.int64)
    k1 = np.floor(flat / quantum + 0.5).astype(np.int64)
    return _hash_rows(k0, 101), _hash_rows(k1, 202)


# ---------------------------------------------------------------------------
# bulk enumeration


@dataclass
class LevelStats:
    n: int
    candidates: int
    kept: int
    merged_duplicates: int
    seconds: float


@dataclass
class ScanResult:
    counts: list[int]
    stats: list[LevelStats]
    total_elements: int
    elapsed: float
    audited: bool


@dataclass
class LevelView:
    """One finalized sphere, exposed to the ``visit`` callback of a scan.

    ``matrices`` holds the anchor matrices of the level and is only valid
    during the callback; the engine releases it afterwards.  ``tau`` is the
    translation-style length ``2 log sigma_1`` of each anchor matrix.
    """

    n: int
    count: int
    letters: np.ndarray | None
    parents: np.ndarray | None
    firsts: np.ndarray
    tau: np.ndarray | None
    matrices: np.ndarray | None
    stats: LevelStats
    scan: "BallScan" = field(repr=False, default=None)

    def words(self, idx: np.ndarray | None = None) -> np.ndarray:
        return self.scan.words(self.n, idx)


class BallScan:
    """Level-synchronized enumeration of a ball in the group.

    The scan walks spheres of radius 1..max_len, keeping per-level parent and
    letter arrays so that any element's word (and hence its matrix in any
    representation) can be reconstructed afterwards.  With anchor matrices
    supplied, every level also carries the length ``tau`` of each element and
    runs the quantized duplicate audit.

    ``threads`` only sizes the worker pool for the per-chunk linear algebra;
    chunk boundaries are fixed by ``chunk``, so results are bitwise identical
    for any thread count.
    """

    def __init__(
        self,
        spec: GroupSpec,
        anchor_mats: np.ndarray | None = None,
        *,
        max_len: int,
        chunk: int = 1 << 21,
        threads: int = 1,
        budget_elements: int | None = None,
        budget_seconds: float | None = None,
        dedup_quantum: float = 1e-6,
        duplicate_tolerance: float = 1e-10,
    ):
        if max_len < 0:
            raise ConfigError("max_len must be nonnegative")
        if threads < 1:
            raise ConfigError("threads must be at least 1")
        self.spec = spec
        if anchor_mats is not None:
            anchor_mats = np.asarray(anchor_mats, dtype=float)
            if anchor_mats.shape != (spec.n_letters, 2, 2):
                raise ConfigError(
                    f"anchor matrices must have shape ({spec.n_letters}, 2, 2)"
                )
            det = np.linalg.det(anchor_mats)
            if np.max(np.abs(det - 1.0)) > 1e-9:
                raise ConfigError("anchor matrices must have unit determinant")
        self.anchor_mats = anchor_mats
        self.max_len = max_len
        self.chunk = int(chunk)
        self.threads = int(threads)
        self.budget_elements = budget_elements
        self.budget_seconds = budget_seconds
        self.dedup_quantum = float(dedup_quantum)
        self.duplicate_tolerance = float(duplicate_tolerance)
        self._tables = (
            _language_tables(spec.relator) if spec.kind == "surface" else None
        )
        self._letters: list[np.ndarray | None] = []
        self._parents: list[np.ndarray | None] = []
        self.result: ScanResult | None = None

    # -- word reconstruction ------------------------------------------------

    def words(self, n: int, idx: np.ndarray | None = None) -> np.ndarray:
        """Letters of the level-``n`` elements at ``idx``, shape [m, n]."""
        if n >= len(self._letters):
            raise ConfigError(f"level {n} was not enumerated")
        if idx is None:
            idx = np.arange(len(self._letters[n]) if n else 1)
        idx = np.asarray(idx, dtype=np.int64)
        out = np.empty((len(idx), n), dtype=np.int8)
        cur = idx
        for j in range(n - 1, -1, -1):
            out[:, j] = self._letters[j + 1][cur]
            cur = self._parents[j + 1][cur]
        return out

    def matrices_for(
        self, gen_mats: np.ndarray, n: int, idx: np.ndarray | None = None
    ) -> np.ndarray:
        """Products of ``gen_mats`` along the words of level ``n`` at ``idx``.

        Materializes ``len(idx)`` matrices at once; chunk on the caller side
        for large levels.
        """
        gen_mats = np.asarray(gen_mats, dtype=float)
        w = self.words(n, idx)
        if n == 0:
            d = gen_mats.shape[-1]
            return np.broadcast_to(np.eye(d), (len(w), d, d)).copy()
        out = gen_mats[w[:, 0]]
        for j in range(1, n):
            out = out @ gen_mats[w[:, j]]
        return out

    def level_size(self, n: int) -> int:
        if n == 0:
            return 1
        return len(self._letters[n])

    def level_tables(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Letter and parent arrays of level ``n`` (views, do not mutate)."""
        if not 1 <= n < len(self._letters):
            raise ConfigError(f"level {n} was not enumerated")
        return self._letters[n], self._parents[n]

    # -- the scan itself ----------------------------------------------------

    def run(self, visit: Callable[[LevelView], None] | None = None) -> ScanResult:
        t0 = time.monotonic()
        spec = self.spec
        audited = spec.kind == "surface" and self.anchor_mats is not None
        counts = [1]
        stats = [LevelStats(0, 1, 1, 0, 0.0)]
        total = 1

        self._letters = [None]
        self._parents = [None]

        # level 0 state
        last = np.full(1, -1, dtype=np.int8)
        suf4 = np.zeros(1, dtype=np.int16)
        firsts = np.full(1, -1, dtype=np.int8)
        mats = None
        if self.anchor_mats is not None:
            mats = np.eye(2)[None].copy()

        if visit is not None:
            visit(
                LevelView(
                    0, 1, None, None, firsts,
                    np.zeros(1) if mats is not None else None,
                    mats, stats[0], self,
                )
            )

        for n in range(1, self.max_len + 1):
            tl0 = time.monotonic()
            par, let, suf4_new = self._candidates(n, last, suf4)
            n_cand = len(par)
            if self.budget_elements is not None and total + n_cand > self.budget_elements:
                raise BudgetExceededError(
                    f"element budget {self.budget_elements} exceeded at radius {n} "
                    f"({total} enumerated, {n_cand} candidates pending)",
                    kind="elements",
                )
            tau = None
            h0 = h1 = None
            new_mats = None
            if self.anchor_mats is not None:
                new_mats, tau, h0, h1 = self._matrix_pass(par, let, mats, t0)
            merged = 0
            if audited:
                keep, merged = self._dedup(h0, h1, new_mats)
                if keep is not None:
                    par, let, suf4_new = par[keep], let[keep], suf4_new[keep]
                    new_mats, tau = new_mats[keep], tau[keep]
            kept = len(par)
            total += kept
            counts.append(kept)
            self._letters.append(let)
            self._parents.append(par)
            level_firsts = let.copy() if n == 1 else firsts[par]
            st = LevelStats(n, n_cand, kept, merged, time.monotonic() - tl0)
            stats.append(st)
            view = LevelView(
                n, kept, let, par, level_firsts, tau, new_mats, st, self
            )
            if visit is not None:
                visit(view)
            view.matrices = None
            last, suf4, firsts, mats = let, suf4_new, level_firsts, new_mats
            self._check_time(t0)

        self.result = ScanResult(
            counts, stats, total, time.monotonic() - t0, audited
        )
        return self.result

    # -- phases ---------------------------------------------------------

    def _check_time(self, t0: float):
        if (
            self.budget_seconds is not None
            and time.monotonic() - t0 > self.budget_seconds
        ):
            raise BudgetExceededError(
                f"time budget {self.budget_seconds}s exceeded", kind="seconds"
            )

    def _candidates(self, n: int, last: np.ndarray, suf4: np.ndarray):
        """All children of the previous level that survive the prunes."""
        L = self.spec.n_letters
        p = len(last)
        par = np.repeat(np.arange(p, dtype=np.int64), L)
        let = np.tile(np.arange(L, dtype=np.int8), p)
        if n == 1:
            ok = np.ones(L, dtype=bool)
        else:
            banned = last ^ np.int8(1)
            ok = let != banned[par]
        if self.spec.kind == "surface":
            code5 = (suf4[par].astype(np.int32) << 3) | let
            suf4_new = (code5 & 0xFFF).astype(np.int16)
            if n >= 5:
                ok &= ~self._tables.win5[code5]
            if n >= 4:
                ok &= ~self._tables.half_smaller[suf4_new]
        else:
            suf4_new = np.zeros(len(par), dtype=np.int16)
        par32 = par[ok].astype(np.int32)
        return par32, let[ok], suf4_new[ok]

    def _matrix_pass(self, par, let, prev_mats, t0):
        n_cand = len(par)
        gens = self.anchor_mats
        mats = np.empty((n_cand, 2, 2))
        tau = np.empty(n_cand)
        h0 = np.empty(n_cand, dtype=np.uint64)
        h1 = np.empty(n_cand, dtype=np.uint64)

        def work(lo: int, hi: int):
            m = prev_mats[par[lo:hi]] @ gens[let[lo:hi]]
            det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
            m *= (det ** -0.5)[:, None, None]
            mats[lo:hi] = m
            f2 = np.einsum("nij,nij->n", m, m)
            s1sq = 0.5 * (f2 + np.sqrt(np.maximum(f2 * f2 - 4.0, 0.0)))
            tau[lo:hi] = np.log(s1sq)
            flat = _canonical_flat(m)
            a, b = _grid_hashes(flat, self.dedup_quantum)
            h0[lo:hi] = a
            h1[lo:hi] = b

        bounds = list(range(0, n_cand, self.chunk)) + [n_cand]
        jobs = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]
        if self.threads > 1 and len(jobs) > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                list(pool.map(lambda ab: work(*ab), jobs))
        else:
            for lo, hi in jobs:
                work(lo, hi)
                self._check_time(t0)
        return mats, tau, h0, h1

    def _dedup(self, h0, h1, mats):
        """Audit pass: cluster candidates by the two grid hashes.

        Returns (keep_mask or None, merged_count).  None means everything is
        distinct, which is the expected outcome for the canonical language.
        """
        n = len(h0)
        if np.unique(h0).size == n and np.unique(h1).size == n:
            return None, 0
        labels = np.arange(n, dtype=np.int64)
        for _ in range(64):
            changed = False
            for h in (h0, h1):
                order = np.argsort(h, kind="stable")
                hs = h[order]
                starts = np.flatnonzero(np.r_[True, hs[1:] != hs[:-1]])
                gmin = np.minimum.reduceat(labels[order], starts)
                sizes = np.diff(np.r_[starts, n])
                new = np.empty(n, dtype=np.int64)
                new[order] = np.repeat(gmin, sizes)
                if (new < labels).any():
                    labels = np.minimum(labels, new)
                    changed = True
            if not changed:
                break
        else:
            raise QuantizationCollisionError("duplicate clustering did not settle")

        keep = labels == np.arange(n)
        merged = 0
        for rep in np.unique(labels[~keep]):
            members = np.flatnonzero(labels == rep)
            ref = mats[rep]
            for m in members:
                if m == rep:
                    continue
                dist = np.max(np.abs(mats[m] - ref))
                if dist <= self.duplicate_tolerance:
                    merged += 1
                    continue
                # distinguish a quantizer collision from a hash accident by
                # recomputing the exact integer keys of the pair
                fl = _canonical_flat(mats[[rep, m]])
                same_cell = False
                for off in (0.0, 0.5):
                    k = np.floor(fl / self.dedup_quantum + off).astype(np.int64)
                    if np.array_equal(k[0], k[1]):
                        same_cell = True
                if same_cell:
                    raise QuantizationCollisionError(
                        f"two matrices {dist:.3e} apart share a dedup cell; "
                        f"quantum {self.dedup_quantum:g} cannot separate them"
                    )
                keep[m] = True  # hash accident between genuinely far keys
        return keep, merged


# ---------------------------------------------------------------------------
# convenience wrappers


def sphere(
    spec: GroupSpec,
    n: int,
    anchor_mats: np.ndarray | None = None,
    budget_elements: int | None = None,
) -> list[GroupWord]:
    """All canonical words of length exactly ``n``, shortlex ordered.

    Returns Python objects, so this is meant for moderate radii; bulk
    consumers should drive :class:`BallScan` directly.
    """
    if n == 0:
        return [GroupWord(spec, ())]
    scan = BallScan(spec, anchor_mats, max_len=n, budget_elements=budget_elements)
    scan.run()
    w = scan.words(n)
    return [GroupWord(spec, tuple(int(c) for c in row)) for row in w]


def sphere_count(
    spec: GroupSpec,
    n: int,
    anchor_mats: np.ndarray | None = None,
    budget_elements: int | None = None,
) -> int:
    """Size of the radius-``n`` sphere.

    Free groups use the closed form ``2k (2k-1)^(n-1)``; the surface group
    runs the enumerator.
    """
    if n == 0:
        return 1
    if spec.kind == "free":
        k2 = spec.n_letters
        return k2 * (k2 - 1) ** (n - 1)
    scan = BallScan(spec, anchor_mats, max_len=n, budget_elements=budget_elements)
    return scan.run().counts[n]


def ray_prefixes(spec: GroupSpec, depth: int, seed: int = 0) -> list[GroupWord]:
    """Nested prefixes of one random canonical geodesic ray.

    At each step a uniformly random continuation is chosen among the letters
    the canonical language allows, so the returned words of lengths
    ``1..depth`` are geodesics lying on a common ray.
    """
    rng = np.random.default_rng(seed)
    tables = _language_tables(spec.relator) if spec.kind == "surface" else None
    word: list[int] = []
    suf4 = 0
    out: list[GroupWord] = []
    for step in range(depth):
        allowed = []
        for x in range(spec.n_letters):
            if word and x == (word[-1] ^ 1):
                continue
            if tables is not None:
                code5 = (suf4 << 3) | x
                if len(word) >= 4 and tables.win5[code5]:
                    continue
                if len(word) >= 3 and tables.half_smaller[code5 & 0xFFF]:
                    continue
            allowed.append(x)
        if not allowed:
            raise ConstructionError(
                f"canonical language dead end after {word_name(word)}"
            )
        x = allowed[int(rng.integers(len(allowed)))]
        word.append(x)
        suf4 = ((suf4 << 3) | x) & 0xFFF
        out.append(GroupWord(spec, tuple(word)))
    return out
