"""Non-steerability borders in the space of diagonal correlation matrices.

Directions in ``(t1, t2, t3)`` space are written as
``D = (sin α cos β, sin α sin β, cos α)`` and every border is reported as a
radius ``r`` along ``D``: the state ``(a e_axis, diag(r D))`` sits on it.

Borders computed here:

* T-state border: ``g(rD) = 1`` with ``g(D) = (1/2π) ∬ ‖D x‖ d²x``.
* Bowles criterion: ``max_x (a·x)² + 2‖T x‖ <= 1``.
* Mapped border: image of the T-state border under the extremal channel
  ``(u, v)`` acting on Alice, subject to ``a = sin u sin v``.  The raw
  optimum of ``r = 1 / min_u g(Λ(u)^{-1} D)`` is reported together with a
  certified radius that additionally keeps the T-state preimage inside the
  physical tetrahedron.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import (
    BranchDomainError,
    InvalidBlochLengthError,
    InvalidInputError,
    InvalidRayError,
    NonMonotonePredicateError,
)
from .quadrature import DEFAULT_ORDER, SphereRule, build_sphere_rule, mean_norm_diag
from .qubit_core import CanonicalState, is_physical, is_separable_ppt

INV_PHI = (math.sqrt(5) - 1) / 2
LAMBDA_FLOOR = 1e-8
N_SEED = 48
GSS_TOL = 1e-10
GSS_MAX_ITER = 200
BOWLES_SEED_ORDER = 48

# Bell-state vertices of the T-state tetrahedron: eigenvalues are (1 + s·t) / 4
BELL_SIGNS = np.array([[-1, -1, -1], [-1, 1, 1], [1, -1, 1], [1, 1, -1]], dtype=float)


def _rule(rule):
    return build_sphere_rule(DEFAULT_ORDER) if rule is None else rule


@dataclass(frozen=True)
class RayDirection:
    alpha: float
    beta: float

    @property
    def vector(self) -> np.ndarray:
        sa = math.sin(self.alpha)
        return np.array([sa * math.cos(self.beta), sa * math.sin(self.beta), math.cos(self.alpha)])

    @classmethod
    def from_vector(cls, v) -> "RayDirection":
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v)
        if n == 0:
            raise InvalidInputError("zero vector has no direction")
        v = v / n
        alpha = math.acos(max(-1.0, min(1.0, v[2])))
        beta = math.atan2(v[1], v[0]) % (2 * math.pi)
        return cls(alpha, beta)

    @classmethod
    def isotropic(cls) -> "RayDirection":
        """Werner direction ``-(1, 1, 1)/√3``."""
        return cls(math.pi - math.acos(1 / math.sqrt(3)), 5 * math.pi / 4)

    @classmethod
    def in_negative_slice(cls, alpha: float, ratio: float) -> "RayDirection":
        """Direction with ``t2 = ratio * t1`` and ``t1, t2 <= 0`` (``t3 <= 0`` for α >= π/2)."""
        return cls(alpha, math.pi + math.atan(ratio))


def tstate_boundary_radius(direction: RayDirection, rule: SphereRule | None = None) -> float:
    return 1.0 / mean_norm_diag(_rule(rule), direction.vector)


def tstate_physical_radius(d) -> float:
    """Largest ``r`` with ``diag(r d)`` inside the Bell tetrahedron (``d`` need not be unit)."""
    proj = BELL_SIGNS @ np.asarray(d, dtype=float)
    neg = proj[proj < 0]
    return float(np.min(-1.0 / neg)) if len(neg) else math.inf


def _tmat(s):
    if isinstance(s, CanonicalState):
        return s.a, np.diag(s.t)
    return s.a, s.T


def _sph(p):
    st = math.sin(p[0])
    return np.array([st * math.cos(p[1]), st * math.sin(p[1]), math.cos(p[0])])


def _refine_on_sphere(f, seeds):
    """Maximise ``f`` over the unit sphere starting from each seed direction."""
    best = -math.inf
    for x0 in seeds:
        p0 = [math.acos(max(-1.0, min(1.0, x0[2]))), math.atan2(x0[1], x0[0])]
        res = minimize(lambda p: -f(_sph(p)), p0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        best = max(best, -float(res.fun))
    return best


def _top_seeds(vals, nodes, k=6):
    idx = np.argsort(vals)[::-1][:k]
    return nodes[idx]


def bowles_value(s, rule: SphereRule | None = None) -> float:
    """``max_x (a·x)² + 2‖T x‖``; a value ``<= 1`` certifies non-steerability."""
    a, T = _tmat(s)
    seed_rule = rule if rule is not None else build_sphere_rule(BOWLES_SEED_ORDER)
    x = seed_rule.nodes
    vals = (x @ a) ** 2 + 2 * np.linalg.norm(x @ T.T, axis=1)

    def f(v):
        return float((a @ v) ** 2 + 2 * np.linalg.norm(T @ v))

    return max(float(vals.max()), _refine_on_sphere(f, _top_seeds(vals, x)))


def bowles_nonsteerable(s, rule: SphereRule | None = None) -> bool:
    return bowles_value(s, rule) <= 1.0


def bowles_border_radius(a_vec, d, rule: SphereRule | None = None) -> float:
    """Border of the Bowles criterion along ``diag(r d)`` at fixed Alice vector.

    Closed under the ray: ``r = min_x (1 - (a·x)²) / (2‖diag(d) x‖)``.
    """
    a_vec = np.asarray(a_vec, dtype=float)
    d = np.asarray(d, dtype=float)
    seed_rule = rule if rule is not None else build_sphere_rule(BOWLES_SEED_ORDER)
    x = seed_rule.nodes
    den = 2 * np.linalg.norm(x * d, axis=1)
    with np.errstate(divide="ignore"):
        ratio = np.where(den > 0, (1 - (x @ a_vec) ** 2) / den, np.inf)

    def f(v):
        dn = 2 * np.linalg.norm(d * v)
        return -(1 - (a_vec @ v) ** 2) / dn if dn > 0 else -math.inf

    return min(float(ratio.min()), -_refine_on_sphere(f, _top_seeds(-ratio, x)))


def golden_section(f, lo: float, hi: float, tol: float = GSS_TOL, max_iter: int = GSS_MAX_ITER):
    """Minimise a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(x, fx, n_iter, converged)``.
    """
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    n = 0
    while b - a > tol and n < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        n += 1
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return x, fx, n, b - a <= tol


def extremal_lambdas(u: float, a: float, axis: int = 2):
    """Contraction vector on the feasible curve ``sin u sin v = a``.

    The doubly contracted component ``cos u cos v`` sits on ``axis`` (the
    direction of Alice's Bloch vector); returns ``(lam, v)``.
    """
    su = math.sin(u)
    v = 0.0 if a == 0 else math.asin(min(1.0, a / su))
    cu, cv = math.cos(u), math.cos(v)
    lam = np.empty(3)
    lam[axis] = cu * cv
    lam[(axis + 1) % 3] = cu
    lam[(axis + 2) % 3] = cv
    return lam, v


def cyclic_perm(axis: int) -> tuple:
    """Channel permutation that puts the translated component on ``axis``."""
    return tuple((i - axis + 2) % 3 for i in range(3))


@dataclass(frozen=True)
class MappedBoundarySample:
    alpha: float
    beta: float
    a: float
    r: float
    u_star: float
    v_star: float
    converged: bool
    r_certified: float
    u_cert: float
    v_cert: float
    preimage_physical: bool
    axis: int = 2
    n_evals: int = 0


class _Objective:
    def __init__(self, rule, d, a, axis):
        self.rule, self.d, self.a, self.axis = rule, d, a, axis
        self.n = 0

    def lam(self, u):
        return extremal_lambdas(u, self.a, self.axis)[0]

    def g(self, u):
        lam = self.lam(u)
        if lam.min() < LAMBDA_FLOOR:
            return math.inf
        self.n += 1
        return mean_norm_diag(self.rule, self.d / lam)

    def certified(self, u):
        lam = self.lam(u)
        if lam.min() < LAMBDA_FLOOR:
            return 0.0
        self.n += 1
        pre = self.d / lam
        return min(1.0 / mean_norm_diag(self.rule, pre), tstate_physical_radius(pre))


def _seeded_gss(f, lo, hi, n_seed, tol):
    """Grid seeding followed by golden section around the best seed."""
    us = lo + (hi - lo) * (np.arange(n_seed) + 0.5) / n_seed
    vals = np.array([f(u) for u in us])
    i = int(np.argmin(vals))
    left = lo if i == 0 else us[i - 1]
    right = hi if i == n_seed - 1 else us[i + 1]
    x, fx, _, ok = golden_section(f, left, right, tol=tol)
    if not fx <= vals[i]:
        x, fx = us[i], vals[i]
    return x, fx, ok and math.isfinite(fx)


def mapped_boundary_radius(a: float, direction: RayDirection, rule: SphereRule | None = None, *,
                           axis: int = 2, n_seed: int = N_SEED, tol: float = GSS_TOL) -> MappedBoundarySample:
    """Border of states reachable from border T-states by an extremal channel on Alice.

    Minimises ``g(Λ(u)^{-1} D)`` over ``u in (asin a, π/2)`` with
    ``v = asin(a / sin u)``; the state ``(a e_axis, diag(r D))`` is on the
    mapped border.  ``r_certified`` restricts the same search to T-state
    preimages that are physical, so it is the radius actually certified
    non-steerable; it equals ``r`` whenever the raw optimum's preimage is
    physical.
    """
    if not 0 <= a < 1:
        raise InvalidBlochLengthError(f"Bloch length must satisfy 0 <= a < 1, got {a!r}")
    rule = _rule(rule)
    d = direction.vector
    obj = _Objective(rule, d, a, axis)

    if a == 0:
        # identity channel is optimal: any contraction only increases g
        r = 1.0 / obj.g(0.0)
        rc = min(r, tstate_physical_radius(d))
        return MappedBoundarySample(direction.alpha, direction.beta, 0.0, r, 0.0, 0.0, True,
                                    rc, 0.0, 0.0, rc == r, axis, obj.n)

    lo, hi = math.asin(a), math.pi / 2
    u, gmin, ok = _seeded_gss(obj.g, lo, hi, n_seed, tol)
    r = 1.0 / gmin if math.isfinite(gmin) else 0.0
    lam, v = extremal_lambdas(u, a, axis)
    pre_ok = tstate_physical_radius(d / lam) >= r
    if pre_ok:
        rc, uc, vc = r, u, v
    else:
        uc, neg, _ = _seeded_gss(lambda x: -obj.certified(x), lo, hi, n_seed, tol)
        rc, vc = -neg, extremal_lambdas(uc, a, axis)[1]
    return MappedBoundarySample(direction.alpha, direction.beta, a, r, u, v, ok,
                                rc, uc, vc, bool(pre_ok), axis, obj.n)


def _asinhc(y: float) -> float:
    """``asinh(y) / y`` with its limit 1 at ``y = 0``."""
    if y < 1e-4:
        return 1 - y * y / 6 + 3 * y**4 / 40
    return math.asinh(y) / y


def _werner_bracket(a: float) -> float:
    # 1/sqrt(1-a) + sqrt((1-a)/a) asinh sqrt(a/(1-a))
    return 1 / math.sqrt(1 - a) + _asinhc(math.sqrt(a / (1 - a)))


def _check_unit_interval(a):
    if not 0 <= a <= 1:
        raise InvalidInputError(f"Bloch length must lie in [0, 1], got {a!r}")


def displaced_werner_xi(a: float) -> float:
    """Largest ``ξ`` with ``(a e_z, -ξ I)`` on the mapped border (optimum at ``u = v``).

    ``ξ(a) = sqrt(1-a) [1/sqrt(1-a) + sqrt((1-a)/a) asinh sqrt(a/(1-a))]^{-1}``,
    which equals ``1/2`` at ``a = 0`` and vanishes at ``a = 1``.
    """
    _check_unit_interval(a)
    if a == 1:
        return 0.0
    return math.sqrt(1 - a) / _werner_bracket(a)


def displaced_werner_xi_printed(a: float) -> float:
    """Same bracket with the prefactor ``(1 - a)`` instead of ``sqrt(1 - a)``.

    Kept for the discrepancy audit; it undershoots the numeric optimum by
    exactly ``sqrt(1 - a)``.
    """
    _check_unit_interval(a)
    if a == 1:
        return 0.0
    return (1 - a) / _werner_bracket(a)


def degenerate_t_c(a: float, alpha: float, reading: str = "printed") -> float:
    cot = math.cos(alpha) / math.sin(alpha)
    if reading == "printed":
        return 2 * cot / (1 - a) - 1
    if reading == "corrected":
        return 2 * cot * cot / (1 - a) - 1
    raise InvalidInputError(f"unknown reading {reading!r}")


def _bracket_printed(a, alpha, c):
    if c == 0:
        return 2.0
    if 1 + c < 0:
        raise BranchDomainError(a, alpha, c, f"sqrt(1+c) is not real: c={c!r} < -1 at a={a!r}, alpha={alpha!r}")
    sq1 = math.sqrt(1 + c)
    if c > 0:
        sc = math.sqrt(c)
        return sq1 + math.log((sq1 + sc) / (sq1 - sc)) / (2 * sc)
    # printed c < 0 branch carries 1/sqrt(c), imaginary for every c < 0
    val = complex(sq1) + math.asin(math.sqrt(-c)) / np.sqrt(complex(c))
    if abs(val.imag) > 0:
        raise BranchDomainError(a, alpha, c, f"1/sqrt(c) is imaginary for c={c!r} < 0 at a={a!r}, alpha={alpha!r}")
    return val.real


def _bracket_corrected(c):
    sq1 = math.sqrt(max(1 + c, 0.0))
    if c > 0:
        sc = math.sqrt(c)
        return sq1 + math.asinh(sc) / sc
    if c < 0:
        sc = math.sqrt(-c)
        return sq1 + math.asin(min(sc, 1.0)) / sc
    return 2.0


def degenerate_t_radius(a: float, alpha: float, reading: str = "printed") -> float:
    """Closed-form border for ``t1 = t2`` directions (optimum at ``u = v``).

    ``r = sqrt(2(1-a)) / sin α * bracket(c)^{-1}``.  ``reading="printed"``
    evaluates ``c = 2 cot α/(1-a) - 1`` with branch brackets exactly as
    printed and raises BranchDomainError wherever they are not real (every
    α in (π/2, π)).  ``reading="corrected"`` uses ``c = 2 cot²α/(1-a) - 1``
    and ``arcsin(sqrt(-c))/sqrt(-c)`` on the ``c < 0`` branch, which is what
    the integral evaluates to.
    """
    if not 0 <= a < 1:
        raise InvalidBlochLengthError(f"Bloch length must satisfy 0 <= a < 1, got {a!r}")
    sa = math.sin(alpha)
    if not sa > 0:
        raise BranchDomainError(a, alpha, math.nan, f"sin(alpha) must be positive, alpha={alpha!r}")
    c = degenerate_t_c(a, alpha, reading)
    bracket = _bracket_printed(a, alpha, c) if reading == "printed" else _bracket_corrected(c)
    return math.sqrt(2 * (1 - a)) / sa / bracket


def degenerate_t_audit(a: float, alphas, order: int = DEFAULT_ORDER) -> list[dict]:
    """Compare the printed and corrected closed forms with the numeric border.

    One row per α on the ``t1 = t2 <= 0`` slice; the numeric reference is
    evaluated at ``order`` and ``2 * order`` so its own convergence is
    visible in ``reference_delta``.
    """
    rule, rule2 = build_sphere_rule(order), build_sphere_rule(2 * order)
    rows = []
    for alpha in alphas:
        direction = RayDirection.in_negative_slice(float(alpha), 1.0)
        ref = mapped_boundary_radius(a, direction, rule)
        ref2 = mapped_boundary_radius(a, direction, rule2)
        row = {
            "alpha": float(alpha),
            "c_printed": degenerate_t_c(a, alpha, "printed"),
            "r_printed": None,
            "printed_error": "",
            "c_corrected": degenerate_t_c(a, alpha, "corrected"),
            "r_corrected": degenerate_t_radius(a, alpha, "corrected"),
            "r_reference": ref.r,
            "r_reference_refined": ref2.r,
            "reference_delta": abs(ref2.r - ref.r),
            "u_star": ref.u_star,
            "v_star": ref.v_star,
        }
        try:
            row["r_printed"] = degenerate_t_radius(a, alpha, "printed")
        except BranchDomainError as exc:
            row["printed_error"] = str(exc)
        row["discrepancy_printed"] = None if row["r_printed"] is None else row["r_printed"] - ref.r
        row["discrepancy_corrected"] = row["r_corrected"] - ref.r
        rows.append(row)
    return rows


def boundary_radius_along_ray(pred, a: float, direction: RayDirection, r_max: float = 2.0,
                              tol: float = 1e-10, *, axis: int = 2, n_scan: int = 64) -> float:
    """Bisection for the last ``r`` where ``pred((a e_axis, diag(r D)))`` holds.

    ``pred`` must hold at ``r = 0`` and flip at most once on ``[0, r_max]``;
    a coarse scan checks the latter.  Returns ``r_max`` if the predicate
    never flips.
    """
    d = direction.vector
    a_vec = np.zeros(3)
    a_vec[axis] = a

    def at(r):
        return bool(pred(CanonicalState(a_vec, r * d)))

    if not at(0.0):
        raise InvalidRayError(f"predicate fails at the origin of the ray (a={a!r})")
    grid = np.linspace(0.0, r_max, n_scan + 1)
    flags = [True] + [at(r) for r in grid[1:]]
    flips = sum(f1 != f2 for f1, f2 in zip(flags, flags[1:]))
    if flips > 1:
        raise NonMonotonePredicateError(f"predicate changes {flips} times along the ray")
    if flips == 0:
        return float(r_max)
    k = flags.index(False)
    lo, hi = grid[k - 1], grid[k]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if at(mid):
            lo = mid
        else:
            hi = mid
    return float(lo)


def physical_predicate(tol: float = 1e-9):
    return lambda s: is_physical(s, tol)


def separable_predicate(tol: float = 1e-9):
    return lambda s: is_physical(s, tol) and is_separable_ppt(s, tol)


def bowles_predicate(rule: SphereRule | None = None, physical_tol: float | None = None):
    """Bowles certificate, optionally restricted to physical states."""
    if physical_tol is None:
        return lambda s: bowles_nonsteerable(s, rule)
    return lambda s: is_physical(s, physical_tol) and bowles_nonsteerable(s, rule)
