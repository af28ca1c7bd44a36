"""Growth exponents of linear functionals along a group orbit.

The central quantity is the critical exponent

    h(phi) = growth rate of #{gamma : phi(a(rho(gamma))) < t} in t,

where ``a`` is the vector of log singular values.  Equivalently it is the
abscissa of convergence of the Dirichlet series with terms
``exp(-s * phi(a))``.  Everything here runs over the exact geodesic
enumeration from :mod:`anosovlab.groups` and reports two independent
readings of each exponent:

* a least squares slope of ``log N(t)`` over a truncation-safe window
  (``counting`` method), and
* the root in ``s`` of the extrapolated per-shell decay rate of the series
  (``shell rate`` method).

Families whose log singular value vector is an exact multiple of the anchor
translation length carry that multiple in ``meta["tau_ladder"]``; for them a
single histogram of anchor lengths serves every functional, and estimates
for proportional functionals differ by exact scalar arithmetic only.

Truncation policy: counts are only trusted below the smallest functional
value seen on the outermost enumerated sphere.  Elements beyond the
enumeration horizon are longer words, and the per-sphere minima grow with
word length (this is checked on the data and recorded in the output), so no
element outside the ball can fall below that threshold.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import cartan
from .errors import (
    ConfigError,
    InsufficientRangeError,
    NonpositiveFunctionalError,
)
from .groups import BallScan, LevelView
from .reps import Representation

BIN_WIDTH = 0.25
FINE_PER_BIN = 16
N_SHARDS = 8

__all__ = [
    "Functional",
    "MinFunctional",
    "epsilon",
    "alpha",
    "omega",
    "unstable_jacobian",
    "min_of",
    "WindowPolicy",
    "ExponentEstimate",
    "AffinityEstimate",
    "critical_exponent",
    "affinity_exponent",
    "affinity_log_term",
    "entropy_min_check",
    "entropy_sum_check",
    "clear_cache",
]


# ---------------------------------------------------------------------------
# linear functionals of the log singular value vector


@dataclass(frozen=True)
class Functional:
    """Linear form ``phi(a) = sum coeffs[i] * a[i]`` with a display label."""

    coeffs: tuple[float, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.label:
            object.__setattr__(
                self, "label", "(" + ",".join("%g" % c for c in self.coeffs) + ")"
            )

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    def __call__(self, a) -> np.ndarray | float:
        return np.asarray(a, dtype=float) @ np.array(self.coeffs)

    def __add__(self, other: "Functional") -> "Functional":
        if not isinstance(other, Functional) or other.dim != self.dim:
            return NotImplemented
        return Functional(
            tuple(x + y for x, y in zip(self.coeffs, other.coeffs)),
            f"{self.label}+{other.label}",
        )

    def __sub__(self, other: "Functional") -> "Functional":
        if not isinstance(other, Functional) or other.dim != self.dim:
            return NotImplemented
        return Functional(
            tuple(x - y for x, y in zip(self.coeffs, other.coeffs)),
            f"{self.label}-{other.label}",
        )

    def __mul__(self, c: float) -> "Functional":
        return Functional(
            tuple(float(c) * x for x in self.coeffs), f"{c:g}*{self.label}"
        )

    __rmul__ = __mul__

    def __neg__(self) -> "Functional":
        return Functional(tuple(-x for x in self.coeffs), f"-{self.label}")

    def reversed_negated(self) -> "Functional":
        """The form pulled back through a -> (-a_d, ..., -a_1).

        That involution is exactly how the log singular values of an inverse
        (or of the dual representation) relate to the original, so a growth
        exponent is invariant under applying it to both the form and the
        family.
        """
        return Functional(
            tuple(-c for c in reversed(self.coeffs)), f"revneg({self.label})"
        )


@dataclass(frozen=True)
class MinFunctional:
    """Pointwise minimum of several linear forms (1-homogeneous, not linear)."""

    components: tuple[Functional, ...]
    label: str = ""

    def __post_init__(self):
        if len(self.components) < 1:
            raise ConfigError("min functional needs at least one component")
        dims = {f.dim for f in self.components}
        if len(dims) != 1:
            raise ConfigError("min functional components disagree on dimension")
        if not self.label:
            object.__setattr__(
                self,
                "label",
                "min(" + ",".join(f.label for f in self.components) + ")",
            )

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def __call__(self, a) -> np.ndarray | float:
        vals = np.stack([f(a) for f in self.components], axis=-1)
        return vals.min(axis=-1)


def min_of(*functionals: Functional) -> MinFunctional:
    return MinFunctional(tuple(functionals))


def epsilon(i: int, dim: int) -> Functional:
    """Coordinate form a -> a_i (1-based), the i-th log singular value."""
    if not 1 <= i <= dim:
        raise ConfigError(f"coordinate index must be in [1, {dim}]")
    coeffs = [0.0] * dim
    coeffs[i - 1] = 1.0
    return Functional(tuple(coeffs), f"eps{i}")


def alpha(i: int, dim: int) -> Functional:
    """Gap form a -> a_i - a_{i+1}, the i-th log singular value gap."""
    if not 1 <= i <= dim - 1:
        raise ConfigError(f"gap index must be in [1, {dim - 1}]")
    coeffs = [0.0] * dim
    coeffs[i - 1] = 1.0
    coeffs[i] = -1.0
    return Functional(tuple(coeffs), f"alpha{i}")


def omega(p: int, dim: int) -> Functional:
    """Partial sum a -> a_1 + ... + a_p, the log top p-volume expansion."""
    if not 1 <= p <= dim:
        raise ConfigError(f"partial sum index must be in [1, {dim}]")
    return Functional(tuple([1.0] * p + [0.0] * (dim - p)), f"omega{p}")


def unstable_jacobian(p: int, dim: int) -> Functional:
    """Expansion form (p+1) a_1 - (a_1 + ... + a_{p+1}).

    Measures the volume expansion transverse to the top axis inside a
    (p+1)-plane containing it; for p = 1 it coincides with the first gap
    form.
    """
    if not 1 <= p <= dim - 1:
        raise ConfigError(f"jacobian index must be in [1, {dim - 1}]")
    coeffs = [0.0] * dim
    coeffs[0] = float(p)
    for j in range(1, p + 1):
        coeffs[j] = -1.0
    return Functional(tuple(coeffs), f"Ju{p}")


def _ladder_value(phi, ladder: Sequence[float]) -> float:
    lad = np.asarray(ladder, dtype=float)
    if isinstance(phi, MinFunctional):
        return float(min(f(lad) for f in phi.components))
    return float(phi(lad))


# ---------------------------------------------------------------------------
# histogrammed growth profiles

# All counting happens on a fixed fine grid (bin width BIN_WIDTH /
# FINE_PER_BIN) so that cumulative counts at the coarse regression edges are
# exact integers, independent of chunking and thread count.  The per-shard
# split below follows the outermost letter of each word; shard histograms
# are integers, merged in ascending shard order.


@dataclass
class _Profile:
    fine: float
    per_level: list[np.ndarray]
    level_min: list[float]
    level_max: list[float]
    max_len: int
    total: int
    monotone: bool
    elapsed: float


_PROFILE_CACHE: dict[tuple, _Profile] = {}

_SLICE = 1 << 23


def clear_cache() -> None:
    """Drop memoized enumeration histograms."""
    _PROFILE_CACHE.clear()


def _digest(arr: np.ndarray) -> str:
    h = hashlib.sha1()
    h.update(str(arr.shape).encode())
    h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


class _HistAccumulator:
    """Per-shard, per-level fine histograms of one scalar value stream."""

    def __init__(self, fine: float):
        self.fine = fine
        self.levels: dict[int, list[np.ndarray]] = {}
        self.mins: dict[int, float] = {}
        self.maxs: dict[int, float] = {}

    def add(self, n: int, shard: np.ndarray, vals: np.ndarray) -> None:
        k = np.floor(vals / self.fine).astype(np.int64)
        if k.min() < 0:
            raise NonpositiveFunctionalError(
                "functional takes nonpositive values on enumerated elements"
            )
        shards = self.levels.setdefault(
            n, [np.zeros(0, dtype=np.int64) for _ in range(N_SHARDS)]
        )
        nb = int(k.max()) + 1
        comb = shard.astype(np.int64) * nb + k
        h = np.bincount(comb, minlength=N_SHARDS * nb).reshape(N_SHARDS, nb)
        for s in range(N_SHARDS):
            if len(shards[s]) < nb:
                grown = np.zeros(nb, dtype=np.int64)
                grown[: len(shards[s])] = shards[s]
                shards[s] = grown
            shards[s][:nb] += h[s]
        vmin = float(vals.min())
        vmax = float(vals.max())
        self.mins[n] = min(self.mins.get(n, np.inf), vmin)
        self.maxs[n] = max(self.maxs.get(n, -np.inf), vmax)

    def finish(self, max_len: int, elapsed: float) -> _Profile:
        per_level, level_min, level_max = [], [], []
        total = 0
        for n in range(1, max_len + 1):
            shards = self.levels.get(n)
            if shards is None:
                raise InsufficientRangeError(f"no elements on sphere {n}")
            nb = max(len(a) for a in shards)
            merged = np.zeros(nb, dtype=np.int64)
            for s in range(N_SHARDS):
                merged[: len(shards[s])] += shards[s]
            per_level.append(merged)
            level_min.append(self.mins[n])
            level_max.append(self.maxs[n])
            total += int(merged.sum())
        monotone = all(
            level_min[i] <= level_min[i + 1] for i in range(len(level_min) - 1)
        )
        return _Profile(
            self.fine, per_level, level_min, level_max, max_len, total,
            monotone, elapsed,
        )


def _run_profile(
    spec,
    anchor: np.ndarray | None,
    max_len: int,
    fine: float,
    values: Callable[[LevelView, int, int], np.ndarray],
    *,
    threads: int = 1,
    chunk: int = 1 << 21,
    budget_elements: int | None = None,
    budget_seconds: float | None = None,
) -> _Profile:
    acc = _HistAccumulator(fine)
    t0 = time.perf_counter()

    def visit(view: LevelView) -> None:
        if view.n == 0 or view.count == 0:
            return
        for lo in range(0, view.count, _SLICE):
            hi = min(lo + _SLICE, view.count)
            vals = values(view, lo, hi)
            acc.add(view.n, view.firsts[lo:hi], vals)

    scan = BallScan(
        spec,
        anchor,
        max_len=max_len,
        chunk=chunk,
        threads=threads,
        budget_elements=budget_elements,
        budget_seconds=budget_seconds,
    )
    scan.run(visit)
    return acc.finish(max_len, time.perf_counter() - t0)


def _tau_profile(rep: Representation, max_len: int, **scan_kw) -> _Profile:
    fine = BIN_WIDTH / FINE_PER_BIN
    cacheable = scan_kw.get("budget_seconds") is None
    key = (
        "tau",
        rep.spec.kind,
        rep.spec.relator,
        _digest(rep.anchor_mats),
        max_len,
        fine,
        scan_kw.get("budget_elements"),
    )
    if cacheable and key in _PROFILE_CACHE:
        return _PROFILE_CACHE[key]

    def values(view: LevelView, lo: int, hi: int) -> np.ndarray:
        return view.tau[lo:hi]

    prof = _run_profile(rep.spec, rep.anchor_mats, max_len, fine, values, **scan_kw)
    if cacheable:
        _PROFILE_CACHE[key] = prof
    return prof


def _functional_profile(
    rep: Representation, phi, max_len: int, **scan_kw
) -> _Profile:
    fine = BIN_WIDTH / FINE_PER_BIN
    cacheable = scan_kw.get("budget_seconds") is None
    phi_key = repr(phi)
    key = (
        "phi",
        rep.spec.kind,
        rep.spec.relator,
        _digest(rep.gen_mats),
        phi_key,
        max_len,
        fine,
        scan_kw.get("budget_elements"),
    )
    if cacheable and key in _PROFILE_CACHE:
        return _PROFILE_CACHE[key]

    def values(view: LevelView, lo: int, hi: int) -> np.ndarray:
        words = view.words(np.arange(lo, hi))
        a = cartan.cartan_project_words(rep.gen_mats, words)
        vals = np.asarray(phi(a), dtype=float)
        if vals.min() <= 0:
            raise NonpositiveFunctionalError(
                f"{getattr(phi, 'label', 'functional')} is not positive on "
                f"sphere {view.n} (min {vals.min():.3e}); growth exponents "
                "need a functional positive on the observed cone"
            )
        return vals

    prof = _run_profile(rep.spec, rep.anchor_mats, max_len, fine, values, **scan_kw)
    if cacheable:
        _PROFILE_CACHE[key] = prof
    return prof


# ---------------------------------------------------------------------------
# the two estimators, both running on a profile


@dataclass(frozen=True)
class WindowPolicy:
    """Knobs for the regression window and its sufficiency test.

    ``min_window`` is measured in e-folds of the cumulative count across the
    window (equivalently, natural-log units of t after rescaling the
    functional so the slope is 1); that makes the test invariant under
    rescaling phi, which pure t-units would not be.
    """

    min_window: float = 5.0
    min_points: int = 5
    count_floor: int = 1
    shell_levels: int = 4
    min_shells: int = 3


def _cumulative(profile: _Profile) -> np.ndarray:
    nb = max(len(h) for h in profile.per_level)
    total = np.zeros(nb, dtype=np.int64)
    for h in profile.per_level:
        total[: len(h)] += h
    return np.concatenate([[0], np.cumsum(total)])


def _counting_fit(profile: _Profile, policy: WindowPolicy) -> dict:
    fine = profile.fine
    cum = _cumulative(profile)
    t_comp = profile.level_min[-1]
    m_max = int(np.floor(t_comp / (fine * FINE_PER_BIN)))
    ts, ns = [], []
    for m in range(0, m_max + 1):
        j = m * FINE_PER_BIN
        n = int(cum[j]) if j < len(cum) else int(cum[-1])
        if n >= policy.count_floor:
            ts.append(m * FINE_PER_BIN * fine)
            ns.append(n)
    if len(ts) < max(policy.min_points, 3):
        raise InsufficientRangeError(
            f"only {len(ts)} usable regression edges below the completeness "
            f"threshold {t_comp:.3f}; increase max_len"
        )
    t = np.array(ts)
    y = np.log(np.array(ns, dtype=float))
    efolds = y[-1] - y[0]
    if efolds < policy.min_window:
        raise InsufficientRangeError(
            f"count grows only {efolds:.2f} e-folds across the window "
            f"[{t[0]:.2f}, {t[-1]:.2f}] (threshold {t_comp:.3f}); "
            f"{policy.min_window:.1f} required, increase max_len"
        )
    A = np.stack([t, np.ones_like(t)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([slope, intercept])
    dof = max(len(t) - 2, 1)
    stderr = float(
        np.sqrt((resid @ resid) / dof / ((t - t.mean()) @ (t - t.mean())))
    )
    twopoint = efolds / (t[-1] - t[0])
    unc = 2.0 * stderr + abs(float(slope) - twopoint)
    return {
        "slope": float(slope),
        "stderr": stderr,
        "uncertainty": unc,
        "t": t,
        "y": y,
        "counts": ns,
        "t_comp": t_comp,
        "efolds": float(efolds),
    }


def _log_shell_sum(hist: np.ndarray, fine: float, sigma: float) -> float:
    k = np.nonzero(hist)[0]
    centers = (k + 0.5) * fine
    expo = np.log(hist[k].astype(float)) - sigma * centers
    m = expo.max()
    return float(m + np.log(np.exp(expo - m).sum()))


def _shell_slope(profile: _Profile, levels: Sequence[int], sigma: float) -> float:
    ys = np.array(
        [_log_shell_sum(profile.per_level[n - 1], profile.fine, sigma) for n in levels]
    )
    xs = np.array(levels, dtype=float)
    return float(((xs - xs.mean()) @ (ys - ys.mean())) / ((xs - xs.mean()) @ (xs - xs.mean())))


def _rate_root(rate: Callable[[float], float], lo: float = 0.0) -> float:
    hi = max(1.0, 2.0 * lo)
    for _ in range(60):
        if rate(hi) < 0:
            break
        hi *= 2.0
    else:
        raise InsufficientRangeError("series decay rate has no root below 2^60")
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if rate(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _shell_fit(profile: _Profile, policy: WindowPolicy) -> dict:
    usable = [
        n
        for n in range(1, profile.max_len + 1)
        if profile.per_level[n - 1].sum() > 0
    ]
    if len(usable) < policy.min_shells:
        raise InsufficientRangeError(
            f"shell-rate method needs {policy.min_shells} populated spheres, "
            f"got {len(usable)}"
        )
    levels = usable[-min(policy.shell_levels, len(usable)) :]
    if _shell_slope(profile, levels, 0.0) <= 0:
        raise InsufficientRangeError("per-sphere counts are not growing")
    root = _rate_root(lambda s: _shell_slope(profile, levels, s))
    pair_roots = []
    for i in range(max(1, len(levels) - 3), len(levels)):
        pair = levels[i - 1 : i + 1]
        pair_roots.append(_rate_root(lambda s: _shell_slope(profile, pair, s)))
    spread = max(abs(r - root) for r in pair_roots) if pair_roots else 0.0
    unc = spread + 1e-9
    curve = []
    for f in (0.5, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5):
        s = root * f
        for n in levels:
            r_n = _log_shell_sum(profile.per_level[n - 1], profile.fine, s) / n
            curve.append((s, n, r_n))
    return {
        "root": root,
        "uncertainty": unc,
        "levels": levels,
        "pair_roots": pair_roots,
        "curve": curve,
    }


# ---------------------------------------------------------------------------
# public estimates


@dataclass
class ExponentEstimate:
    """Two readings of one growth exponent, with their evidence.

    ``h_hat`` is the counting-regression slope, ``h_shell`` the root of the
    extrapolated per-shell series rate.  ``window`` and ``t_comp`` are on
    the functional's own scale; ``effective_window`` is the number of
    e-folds the cumulative count grows across the window, which is what the
    sufficiency test is measured in.
    """

    functional: str
    coeffs: tuple[float, ...] | None
    h_hat: float
    h_shell: float
    uncertainty: float
    shell_uncertainty: float
    window: tuple[float, float]
    t_comp: float
    effective_window: float
    slope_stderr: float
    regression: list[tuple[float, float]]
    counts: list[int]
    shell_curve: list[tuple[float, int, float]]
    max_len: int
    n_elements: int
    agree: bool
    assumptions: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {
            "functional": self.functional,
            "coeffs": list(self.coeffs) if self.coeffs is not None else None,
            "h_hat": self.h_hat,
            "h_shell": self.h_shell,
            "uncertainty": self.uncertainty,
            "shell_uncertainty": self.shell_uncertainty,
            "window": list(self.window),
            "t_comp": self.t_comp,
            "effective_window": self.effective_window,
            "slope_stderr": self.slope_stderr,
            "max_len": self.max_len,
            "n_elements": self.n_elements,
            "agree": self.agree,
            "assumptions": self.assumptions,
            "wall_time": self.wall_time,
        }

    def counting_rows(self) -> list[tuple[float, int, float]]:
        """CSV rows (t, count, log_count) for the counting method."""
        return [
            (t, c, y)
            for (t, y), c in zip(self.regression, self.counts)
        ]

    def shell_rows(self) -> list[tuple[float, int, float]]:
        """CSV rows (s, shell, rate) for the series method."""
        return list(self.shell_curve)


def _ladder_of(rep: Representation):
    lad = rep.meta.get("tau_ladder")
    if lad is None:
        return None
    if rep.anchor_mats is None or rep.anchor_mats.shape[-1] != 2:
        return None
    return np.asarray(lad, dtype=float)


def _estimate_from_profile(
    profile: _Profile,
    scale: float,
    phi,
    policy: WindowPolicy,
    max_len: int,
    t0: float,
) -> ExponentEstimate:
    """Assemble the two readings; ``scale`` maps profile units to phi units."""
    fit = _counting_fit(profile, policy)
    shell = _shell_fit(profile, policy)
    h_hat = fit["slope"] / scale
    h_shell = shell["root"] / scale
    unc = fit["uncertainty"] / scale
    shell_unc = shell["uncertainty"] / scale
    notes = [
        "completeness threshold = min of the functional over the outermost "
        f"sphere; per-sphere minima observed monotone: {profile.monotone}",
        "the growth exponent is defined as an upper limit; the regression "
        "assumes the plain limit exists, which holds on the documented "
        "families",
        f"window sufficiency measured in e-folds of N(t): "
        f"{fit['efolds']:.2f} >= {policy.min_window:.1f}",
    ]
    coeffs = tuple(phi.coeffs) if isinstance(phi, Functional) else None
    return ExponentEstimate(
        functional=getattr(phi, "label", "anchor-length"),
        coeffs=coeffs,
        h_hat=h_hat,
        h_shell=h_shell,
        uncertainty=unc,
        shell_uncertainty=shell_unc,
        window=(float(fit["t"][0] * scale), float(fit["t"][-1] * scale)),
        t_comp=float(fit["t_comp"] * scale),
        effective_window=fit["efolds"],
        slope_stderr=fit["stderr"] / scale,
        regression=[(float(t * scale), float(y)) for t, y in zip(fit["t"], fit["y"])],
        counts=[int(c) for c in fit["counts"]],
        shell_curve=[(s / scale, n, r) for s, n, r in shell["curve"]],
        max_len=max_len,
        n_elements=profile.total,
        agree=bool(abs(h_hat - h_shell) <= unc + shell_unc),
        assumptions=notes,
        wall_time=time.perf_counter() - t0,
    )


def critical_exponent(
    rep: Representation,
    phi: Functional | MinFunctional,
    max_len: int,
    *,
    policy: WindowPolicy | None = None,
    threads: int = 1,
    chunk: int = 1 << 21,
    budget_elements: int | None = None,
    budget_seconds: float | None = None,
) -> ExponentEstimate:
    """Estimate the growth exponent of ``phi`` along the orbit of ``rep``.

    Both estimators run on one histogrammed enumeration up to word length
    ``max_len``.  Raises a nonpositive-functional error when ``phi`` fails
    to be positive on the observed growth directions, and an
    insufficient-range error when the data spans too little growth for a
    trustworthy fit (see :class:`WindowPolicy`).
    """
    policy = policy or WindowPolicy()
    if phi.dim != rep.dim:
        raise ConfigError(
            f"functional has dimension {phi.dim}, representation {rep.dim}"
        )
    t0 = time.perf_counter()
    scan_kw = dict(
        threads=threads,
        chunk=chunk,
        budget_elements=budget_elements,
        budget_seconds=budget_seconds,
    )
    ladder = _ladder_of(rep)
    if ladder is not None:
        c = _ladder_value(phi, ladder)
        if c <= 0:
            raise NonpositiveFunctionalError(
                f"{phi.label} evaluates to {c:g} on the growth ladder "
                f"{tuple(float(x) for x in ladder)}; it is not positive "
                "on the orbit cone"
            )
        profile = _tau_profile(rep, max_len, **scan_kw)
        # Profile units are anchor length; phi = c * length exactly, so the
        # estimate carries over by exact scalar arithmetic.
        return _estimate_from_profile(profile, c, phi, policy, max_len, t0)
    profile = _functional_profile(rep, phi, max_len, **scan_kw)
    return _estimate_from_profile(profile, 1.0, phi, policy, max_len, t0)


# ---------------------------------------------------------------------------
# affinity exponent (broken Dirichlet series over singular value ratios)


def affinity_log_term(a: np.ndarray, p: int, s: float) -> np.ndarray:
    """Log of one term of the broken series, piece ``p``, parameter ``s``.

    For ``s`` in [p-2, p-1] the term is
    ``(sigma_2/sigma_1) ... (sigma_{p-1}/sigma_1) * (sigma_p/sigma_1)^(s-p+2)``,
    evaluated here entirely in the log domain from the log singular values.
    """
    a = np.asarray(a, dtype=float)
    d = a.shape[-1]
    if not 2 <= p <= d:
        raise ConfigError(f"piece index must be in [2, {d}]")
    a1 = a[..., 0]
    fixed = (a[..., 1 : p - 1] - a1[..., None]).sum(axis=-1)
    return fixed + (s - (p - 2)) * (a[..., p - 1] - a1)


@dataclass
class AffinityEstimate:
    """Critical parameter of the broken singular-value series."""

    value: float
    uncertainty: float
    piece: int
    per_piece: list[dict]
    base: ExponentEstimate | None
    max_len: int
    notes: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return {
            "h_aff": self.value,
            "uncertainty": self.uncertainty,
            "piece": self.piece,
            "per_piece": self.per_piece,
            "max_len": self.max_len,
            "notes": self.notes,
            "wall_time": self.wall_time,
        }


def affinity_exponent(
    rep: Representation,
    max_len: int,
    *,
    policy: WindowPolicy | None = None,
    threads: int = 1,
    chunk: int = 1 << 21,
    budget_elements: int | None = None,
    budget_seconds: float | None = None,
) -> AffinityEstimate:
    """Critical parameter of the broken series of singular value ratios.

    The series is assembled piecewise: on ``s in [p-2, p-1]`` each term
    multiplies the first ``p - 2`` subdominant ratios by a fractional power
    of the next one, so consecutive pieces agree at the junctions and the
    series is continuous and strictly decreasing in ``s``.  The estimate
    walks the pieces in order and locates the root of the extrapolated
    shell rate inside the first piece that contains it.
    """
    policy = policy or WindowPolicy()
    t0 = time.perf_counter()
    d = rep.dim
    if d < 2:
        raise ConfigError("affinity exponent needs dimension at least 2")
    scan_kw = dict(
        threads=threads,
        chunk=chunk,
        budget_elements=budget_elements,
        budget_seconds=budget_seconds,
    )
    ladder = _ladder_of(rep)
    notes = []
    per_piece: list[dict] = []
    if ladder is not None:
        profile = _tau_profile(rep, max_len, **scan_kw)
        base = _estimate_from_profile(profile, 1.0, None, policy, max_len, t0)
        delta = base.h_shell
        delta_unc = base.shell_uncertainty + abs(base.h_hat - base.h_shell)
        notes.append(
            "exact singular value ladder detected; each piece reduces to "
            "the anchor length series with a closed-form slope"
        )
        u1 = ladder[0]
        for p in range(2, d + 1):
            c_fixed = float(sum(u1 - ladder[i] for i in range(1, p - 1)))
            c_gap = float(u1 - ladder[p - 1])
            if c_gap <= 0:
                per_piece.append(
                    {"piece": p, "c_fixed": c_fixed, "c_gap": c_gap,
                     "root": None, "in_range": False,
                     "note": "no gap at this index; piece constant in s"}
                )
                continue
            root = (p - 2) + (delta - c_fixed) / c_gap
            unc = delta_unc / c_gap
            in_range = root <= (p - 1) + unc
            per_piece.append(
                {"piece": p, "c_fixed": c_fixed, "c_gap": c_gap,
                 "root": root, "in_range": bool(in_range)}
            )
            if in_range:
                if root > p - 1:
                    notes.append(
                        "root lies at the junction with the next piece "
                        "within uncertainty"
                    )
                return AffinityEstimate(
                    value=float(root),
                    uncertainty=float(unc),
                    piece=p,
                    per_piece=per_piece,
                    base=base,
                    max_len=max_len,
                    notes=notes,
                    wall_time=time.perf_counter() - t0,
                )
        notes.append("series still divergent at s = d - 1; value capped")
        return AffinityEstimate(
            value=float(d - 1),
            uncertainty=float(delta_unc),
            piece=d,
            per_piece=per_piece,
            base=base,
            max_len=max_len,
            notes=notes,
            wall_time=time.perf_counter() - t0,
        )
    # General route: accumulate, per piece, per sphere, a 2D histogram of
    # (fixed part, gap part) of the log terms, then locate the shell-rate
    # root piece by piece.
    fine = BIN_WIDTH / FINE_PER_BIN * 4
    levels: dict[int, dict[int, dict]] = {p: {} for p in range(2, d + 1)}

    def visit(view: LevelView) -> None:
        if view.n == 0 or view.count == 0:
            return
        for lo in range(0, view.count, _SLICE):
            hi = min(lo + _SLICE, view.count)
            words = view.words(np.arange(lo, hi))
            a = cartan.cartan_project_words(rep.gen_mats, words)
            a1 = a[:, 0]
            for p in range(2, d + 1):
                u = (a1[:, None] - a[:, 1 : p - 1]).sum(axis=1)
                v = a1 - a[:, p - 1]
                ku = np.floor(u / fine).astype(np.int64)
                kv = np.floor(v / fine).astype(np.int64)
                ent = levels[p].setdefault(view.n, {})
                nu, nv = int(ku.max()) + 1, int(kv.max()) + 1
                h = np.bincount(ku * nv + kv, minlength=nu * nv).reshape(nu, nv)
                old = ent.get("h")
                if old is not None:
                    grown = np.zeros(
                        (max(nu, old.shape[0]), max(nv, old.shape[1])),
                        dtype=np.int64,
                    )
                    grown[: old.shape[0], : old.shape[1]] = old
                    grown[:nu, :nv] += h
                    ent["h"] = grown
                else:
                    ent["h"] = h.astype(np.int64)

    scan = BallScan(
        rep.spec,
        rep.anchor_mats,
        max_len=max_len,
        chunk=chunk,
        threads=threads,
        budget_elements=budget_elements,
        budget_seconds=budget_seconds,
    )
    scan.run(visit)

    def piece_slope(p: int, s: float) -> float:
        ns = sorted(levels[p])
        use = ns[-min(policy.shell_levels, len(ns)) :]
        ys = []
        for n in use:
            h = levels[p][n]["h"]
            iu, iv = np.nonzero(h)
            expo = (
                np.log(h[iu, iv].astype(float))
                - (iu + 0.5) * fine
                - (s - (p - 2)) * (iv + 0.5) * fine
            )
            m = expo.max()
            ys.append(m + np.log(np.exp(expo - m).sum()))
        xs = np.array(use, dtype=float)
        ys = np.array(ys)
        return float(
            ((xs - xs.mean()) @ (ys - ys.mean()))
            / ((xs - xs.mean()) @ (xs - xs.mean()))
        )

    for p in range(2, d + 1):
        g_left = piece_slope(p, float(p - 2))
        g_right = piece_slope(p, float(p - 1))
        if g_left <= 0:
            root = float(p - 2)
        elif g_right > 0:
            per_piece.append(
                {"piece": p, "root": None, "in_range": False,
                 "rate_left": g_left, "rate_right": g_right}
            )
            continue
        else:
            lo, hi = float(p - 2), float(p - 1)
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if piece_slope(p, mid) > 0:
                    lo = mid
                else:
                    hi = mid
            root = 0.5 * (lo + hi)
        per_piece.append(
            {"piece": p, "root": root, "in_range": True,
             "rate_left": g_left, "rate_right": g_right}
        )
        notes.append("general route: shell-rate bisection inside the piece")
        return AffinityEstimate(
            value=root,
            uncertainty=float(2 * fine),
            piece=p,
            per_piece=per_piece,
            base=None,
            max_len=max_len,
            notes=notes,
            wall_time=time.perf_counter() - t0,
        )
    notes.append("series still divergent at s = d - 1; value capped")
    return AffinityEstimate(
        value=float(d - 1),
        uncertainty=float(2 * fine),
        piece=d,
        per_piece=per_piece,
        base=None,
        max_len=max_len,
        notes=notes,
        wall_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# structural checks on estimates


def entropy_min_check(
    rep: Representation,
    functionals: Sequence[Functional],
    max_len: int,
    **kw,
) -> dict:
    """Exponent of a pointwise minimum against the max of the exponents.

    The minimum of finitely many admissible forms grows like the slowest of
    them, so its exponent is the largest individual one; both sides are
    estimated and compared within their combined uncertainties.
    """
    singles = [critical_exponent(rep, f, max_len, **kw) for f in functionals]
    est_min = critical_exponent(rep, min_of(*functionals), max_len, **kw)
    best = max(singles, key=lambda e: e.h_hat)
    diff = abs(est_min.h_hat - best.h_hat)
    tol = est_min.uncertainty + best.uncertainty
    return {
        "individual": singles,
        "min_estimate": est_min,
        "max_of_individual": best.h_hat,
        "difference": diff,
        "combined_tolerance": tol,
        "ok": bool(diff <= tol),
    }


def entropy_sum_check(
    rep: Representation,
    phi: Functional,
    psi: Functional,
    max_len: int,
    **kw,
) -> dict:
    """Harmonic-mean bound for the exponent of a sum of two forms.

    Checks h(phi + psi) <= h(phi) h(psi) / (h(phi) + h(psi)) on estimates,
    recording the slack.  Equality holds exactly when both forms see the
    same growth profile (for instance phi = psi, where the bound is the
    scaling law).
    """
    e_phi = critical_exponent(rep, phi, max_len, **kw)
    e_psi = critical_exponent(rep, psi, max_len, **kw)
    e_sum = critical_exponent(rep, phi + psi, max_len, **kw)
    bound = e_phi.h_hat * e_psi.h_hat / (e_phi.h_hat + e_psi.h_hat)
    # first-order propagation of the two uncertainties through the bound
    denom = (e_phi.h_hat + e_psi.h_hat) ** 2
    bound_unc = (
        e_psi.h_hat**2 * e_phi.uncertainty + e_phi.h_hat**2 * e_psi.uncertainty
    ) / denom
    slack = bound - e_sum.h_hat
    tol = e_sum.uncertainty + bound_unc
    return {
        "phi": e_phi,
        "psi": e_psi,
        "sum": e_sum,
        "bound": bound,
        "bound_uncertainty": bound_unc,
        "slack": slack,
        "ok": bool(slack >= -tol),
    }
