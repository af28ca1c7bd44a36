"""Limit-cone sampling and Riemannian growth-rate bounds.

Two complementary views of orbit growth in the symmetric space.  The
sampling side (:func:`limit_cone_sample`) records where the normalized
Cartan vectors of long words accumulate, shell by shell.  The variational
side bounds the critical exponent for a Riemannian metric: by Quint's
duality the exponent equals the infimum of the dual norm over the convex
set of entropy-certified functionals, so any feasible functional gives an
upper bound (:func:`hx_upper_bound`) while a direct counting estimate of
the norm functional (:func:`hx_estimate`) approaches the true value from
the data side.

Certified generator sets and metric normalizations are supplied as named
presets rather than discovered: the certificates come from entropy-one
theorems for specific families, and every growth-rate value is meaningful
only relative to a stated normalization.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from . import cartan, entropy
from .entropy import ExponentEstimate, Functional, WindowPolicy, alpha, epsilon
from .errors import ConfigError
from .limitset import _completed_scan, _sampled_matrices
from .reps import Representation

__all__ = [
    "ConeSample",
    "ConeSampleReport",
    "limit_cone_sample",
    "DualNormProblem",
    "HxBound",
    "hx_upper_bound",
    "hx_estimate",
    "HomogeneousNorm",
    "sl2_problem",
    "so_pq_problem",
    "sl2_norm",
    "so_pq_norm",
    "fuchsian_locus_direction",
]


# ---------------------------------------------------------------------------
# limit cone sampling


@dataclass(frozen=True)
class ConeSample:
    """One normalized Cartan direction, with provenance.

    ``direction`` is the unit Euclidean vector of the log singular values,
    nonincreasing by construction.  ``jordan_direction`` is the matching
    normalization of the log eigenvalue moduli when it was requested.
    """

    direction: np.ndarray
    length: int
    jordan_direction: np.ndarray | None = None


@dataclass
class ConeSampleReport:
    rep_name: str
    samples: list[ConeSample]
    shells: list[dict]

    def as_dict(self) -> dict:
        return {
            "rep": self.rep_name,
            "shells": self.shells,
            "samples": [
                {
                    "length": s.length,
                    "direction": [float(x) for x in s.direction],
                    **(
                        {
                            "jordan_direction": [
                                float(x) for x in s.jordan_direction
                            ]
                        }
                        if s.jordan_direction is not None
                        else {}
                    ),
                }
                for s in self.samples
            ],
        }


def limit_cone_sample(
    rep: Representation,
    max_len: int,
    *,
    per_level: int = 200,
    include_jordan: bool = False,
    seed: int = 0,
) -> ConeSampleReport:
    """Unit Cartan directions of random words, shell by shell.

    Each shell contributes up to ``per_level`` samples plus a summary (mean
    direction, angular spread, per-coordinate range) that makes the
    stabilization of the cone visible without shipping every element.
    Jordan directions come from eigenvalue moduli of the same matrices.
    """
    if max_len < 1:
        raise ConfigError("max_len must be at least 1")
    rng = np.random.default_rng(seed)
    scan = _completed_scan(rep, max_len)
    samples: list[ConeSample] = []
    shells: list[dict] = []
    for n in range(1, max_len + 1):
        size = scan.level_size(n)
        take = min(per_level, size)
        idx = np.sort(rng.choice(size, size=take, replace=False))
        words = scan.words(n, idx)
        a = cartan.cartan_project_words(rep.gen_mats, words)
        norms = np.linalg.norm(a, axis=1)
        if norms.min() <= 0:
            raise ConfigError(
                f"zero Cartan vector on sphere {n}; directions undefined"
            )
        dirs = a / norms[:, None]
        jordan = None
        if include_jordan:
            mats = scan.matrices_for(rep.gen_mats, n, idx)
            lam = np.sort(np.log(np.abs(np.linalg.eigvals(mats))), axis=1)[
                :, ::-1
            ]
            jn = np.linalg.norm(lam, axis=1)
            jordan = np.where(jn[:, None] > 0, lam / np.maximum(jn, 1e-300)[:, None], 0.0)
        mean = dirs.mean(axis=0)
        mean /= max(np.linalg.norm(mean), 1e-300)
        spread = float(np.max(cartan.proj_distance(dirs, mean)))
        shells.append(
            {
                "n": n,
                "sphere_size": int(size),
                "sampled": int(take),
                "mean_direction": [float(x) for x in mean],
                "max_angle_to_mean": spread,
                "coordinate_min": [float(x) for x in dirs.min(axis=0)],
                "coordinate_max": [float(x) for x in dirs.max(axis=0)],
            }
        )
        for j in range(take):
            samples.append(
                ConeSample(
                    direction=dirs[j],
                    length=n,
                    jordan_direction=None if jordan is None else jordan[j],
                )
            )
    return ConeSampleReport(rep_name=rep.name, samples=samples, shells=shells)


# ---------------------------------------------------------------------------
# dual-norm problems


def _check_spd(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ConfigError("norm matrix must be square")
    if np.abs(g - g.T).max() > 1e-12 * max(np.abs(g).max(), 1.0):
        raise ConfigError("norm matrix must be symmetric")
    if np.linalg.eigvalsh(g).min() <= 0:
        raise ConfigError("norm matrix must be positive definite")
    return 0.5 * (g + g.T)


@dataclass
class DualNormProblem:
    """Minimize a dual norm over certified functionals plus a positivity cone.

    ``functionals`` are the certified generators (each known to have growth
    exponent at most one, by a theorem, for the family the problem is
    about); the feasible set is their convex hull shifted by nonnegative
    combinations of ``cone_generators``, the functionals nonnegative on the
    relevant Weyl chamber.  ``norm_matrix`` defines the primal Euclidean
    norm on the Cartan coordinates.
    """

    functionals: tuple[Functional, ...]
    norm_matrix: np.ndarray
    cone_generators: tuple[Functional, ...]
    description: str = ""

    def __post_init__(self):
        if not self.functionals:
            raise ConfigError("need at least one generator functional")
        self.functionals = tuple(self.functionals)
        self.cone_generators = tuple(self.cone_generators)
        self.norm_matrix = _check_spd(self.norm_matrix)
        dim = self.norm_matrix.shape[0]
        for f in self.functionals + self.cone_generators:
            if f.dim != dim:
                raise ConfigError(
                    f"functional {f.label} has dimension {f.dim}, "
                    f"norm matrix {dim}"
                )

    @property
    def dim(self) -> int:
        return self.norm_matrix.shape[0]

    def as_dict(self) -> dict:
        return {
            "description": self.description,
            "functionals": [
                {"label": f.label, "coeffs": list(f.coeffs)}
                for f in self.functionals
            ],
            "cone_generators": [
                {"label": f.label, "coeffs": list(f.coeffs)}
                for f in self.cone_generators
            ],
            "norm_matrix": self.norm_matrix.tolist(),
        }


def _chamber_dual_cone(dim: int) -> tuple[Functional, ...]:
    """Extreme rays of the functionals nonnegative on a1 >= ... >= a_dim >= 0."""
    gens = [alpha(i, dim) for i in range(1, dim)]
    gens.append(epsilon(dim, dim))
    return tuple(gens)


def sl2_problem() -> DualNormProblem:
    """Certified problem for the rank-one anchor: alpha_1 with the metric
    normalized so the anchor's exponent is exactly one."""
    return DualNormProblem(
        functionals=(alpha(1, 2),),
        norm_matrix=2.0 * np.eye(2),
        cone_generators=(alpha(1, 2),),
        description="rank-one anchor, curvature -1 normalization",
    )


def so_pq_norm(p: int) -> np.ndarray:
    """Norm matrix on the first ``p`` Cartan coordinates of SO(p,q).

    Normalized so the locus direction (p-1, p-2, ..., 1, 0) has unit norm,
    which is exactly the constant-curvature -1 condition for the plane
    stabilizing a (p, p-1)-signature subspace.
    """
    if p < 2:
        raise ConfigError("p must be at least 2")
    return np.eye(p) / float(sum(j * j for j in range(1, p)))


def fuchsian_locus_direction(p: int) -> np.ndarray:
    """Cartan direction of the (p, p-1)-locus inside SO(p,q), not normalized."""
    return np.array([float(p - 1 - i) for i in range(p)])


def so_pq_problem(p: int) -> DualNormProblem:
    """Certified problem for positivity-locus representations in SO(p,q).

    Generators: the first p-2 simple-root functionals and epsilon_{p-1},
    each entropy-certified for the positive family; cone: functionals
    nonnegative on the SO(p,q) chamber a1 >= ... >= a_p >= 0.
    """
    if p < 2:
        raise ConfigError("p must be at least 2")
    gens = [alpha(i, p) for i in range(1, p - 1)]
    gens.append(epsilon(p - 1, p))
    return DualNormProblem(
        functionals=tuple(gens),
        norm_matrix=so_pq_norm(p),
        cone_generators=_chamber_dual_cone(p),
        description=f"SO({p},q) positivity locus, curvature -1 normalization",
    )


def sl2_norm() -> np.ndarray:
    return 2.0 * np.eye(2)


# ---------------------------------------------------------------------------
# the dual-norm solver


@dataclass
class HxBound:
    """Solver output: a certified upper bound for the Riemannian exponent.

    ``value`` is the dual norm of the best feasible functional found; the
    bound is valid whether or not the iteration converged, because every
    feasible point bounds the infimum from above.
    """

    value: float
    minimizer: list[float]
    hull_weights: list[float]
    cone_coeffs: list[float]
    converged: bool
    iterations: int
    problem: str = ""
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "minimizer": self.minimizer,
            "hull_weights": self.hull_weights,
            "cone_coeffs": self.cone_coeffs,
            "converged": self.converged,
            "iterations": self.iterations,
            "problem": self.problem,
            "notes": self.notes,
        }


def _project_simplex(w: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u - css / np.arange(1, len(w) + 1) > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(w - theta, 0.0)


def hx_upper_bound(
    problem: DualNormProblem,
    *,
    restarts: int = 10,
    max_iter: int = 20000,
    tol: float = 1e-10,
    seed: int = 0,
) -> HxBound:
    """Minimize the dual norm over the problem's feasible functionals.

    Projected gradient on the squared dual norm, jointly over simplex
    weights for the hull part and nonnegative coefficients for the cone
    part, restarted from the barycenter and from random simplex points.
    The objective is a convex quadratic, so the returned value is the
    global minimum whenever the run converged; if the iteration cap is hit
    the best feasible value is still returned, flagged as unconverged,
    because any feasible point upper-bounds the infimum.
    """
    a = np.array([f.coeffs for f in problem.functionals])
    b = np.array([f.coeffs for f in problem.cone_generators]).reshape(
        len(problem.cone_generators), problem.dim
    )
    h = np.linalg.inv(problem.norm_matrix)
    h = 0.5 * (h + h.T)
    basis = np.concatenate([a, b], axis=0) if len(b) else a
    lips = 2.0 * max(np.linalg.eigvalsh(basis @ h @ basis.T).max(), 1e-30)
    step = 1.0 / lips
    m, k = len(a), len(b)
    rng = np.random.default_rng(seed)

    def objective(w, c):
        phi = w @ a + (c @ b if k else 0.0)
        return float(phi @ h @ phi), phi

    best = None
    total_iters = 0
    any_converged = False
    for r in range(restarts):
        if r == 0:
            w = np.full(m, 1.0 / m)
        else:
            w = rng.dirichlet(np.ones(m))
        c = np.zeros(k)
        f_prev, _ = objective(w, c)
        converged = False
        for it in range(max_iter):
            phi = w @ a + (c @ b if k else 0.0)
            grad_w = 2.0 * (a @ h @ phi)
            w = _project_simplex(w - step * grad_w)
            if k:
                grad_c = 2.0 * (b @ h @ phi)
                c = np.maximum(c - step * grad_c, 0.0)
            f_cur, _ = objective(w, c)
            if abs(f_prev - f_cur) < tol:
                converged = True
                total_iters += it + 1
                break
            f_prev = f_cur
        else:
            total_iters += max_iter
        f_final, phi = objective(w, c)
        any_converged = any_converged or converged
        if best is None or f_final < best[0]:
            best = (f_final, phi, w.copy(), c.copy())
    f_best, phi, w, c = best
    notes = []
    if not any_converged:
        notes.append(
            "iteration cap reached on every restart; the value is still a "
            "valid upper bound (feasible point)"
        )
    return HxBound(
        value=float(np.sqrt(f_best)),
        minimizer=[float(x) for x in phi],
        hull_weights=[float(x) for x in w],
        cone_coeffs=[float(x) for x in c],
        converged=any_converged,
        iterations=total_iters,
        problem=problem.description,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# direct counting estimate of the Riemannian exponent


class HomogeneousNorm:
    """1-homogeneous functional a -> ||(a_1..a_k)||_G for the estimators.

    Acts on the leading ``n_coords`` entries of the (sorted, nonincreasing)
    Cartan vector; for SO(p,q) data these are the p free coordinates, the
    rest being determined by the symmetry of the singular value pattern.
    """

    def __init__(self, norm_matrix: np.ndarray, n_coords: int | None = None):
        self.norm_matrix = _check_spd(norm_matrix)
        self.n_coords = (
            self.norm_matrix.shape[0] if n_coords is None else int(n_coords)
        )
        if self.n_coords != self.norm_matrix.shape[0]:
            raise ConfigError("n_coords must match the norm matrix size")
        self.label = f"X-norm[{self.n_coords}]"

    def __call__(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)[..., : self.n_coords]
        return np.sqrt(np.einsum("...i,ij,...j->...", a, self.norm_matrix, a))

    def __repr__(self) -> str:
        digest = hashlib.sha1(
            np.ascontiguousarray(self.norm_matrix).tobytes()
        ).hexdigest()[:12]
        return f"HomogeneousNorm({self.n_coords}, {digest})"


def hx_estimate(
    rep: Representation,
    norm_matrix: np.ndarray,
    max_len: int,
    *,
    policy: WindowPolicy | None = None,
    threads: int = 1,
    chunk: int = 1 << 21,
    budget_elements: int | None = None,
    budget_seconds: float | None = None,
) -> ExponentEstimate:
    """Counting-regression exponent of the metric length of Cartan vectors.

    Same estimator contract as the linear-functional exponent, with the
    1-homogeneous norm in place of a linear form.  The norm matrix may be
    smaller than the representation dimension, in which case it reads the
    leading coordinates (the SO(p,q) convention).
    """
    policy = policy or WindowPolicy()
    theta = HomogeneousNorm(norm_matrix)
    if theta.n_coords > rep.dim:
        raise ConfigError(
            f"norm matrix size {theta.n_coords} exceeds representation "
            f"dimension {rep.dim}"
        )
    t0 = time.perf_counter()
    scan_kw = dict(
        threads=threads,
        chunk=chunk,
        budget_elements=budget_elements,
        budget_seconds=budget_seconds,
    )
    ladder = entropy._ladder_of(rep)
    if ladder is not None:
        scale = float(theta(ladder))
        profile = entropy._tau_profile(rep, max_len, **scan_kw)
        return entropy._estimate_from_profile(
            profile, scale, theta, policy, max_len, t0
        )
    profile = entropy._functional_profile(rep, theta, max_len, **scan_kw)
    return entropy._estimate_from_profile(profile, 1.0, theta, policy, max_len, t0)
