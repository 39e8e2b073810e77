import math

import numpy as np
import pytest
from scipy import integrate, optimize

from nonsteer.boundaries import (
    RayDirection,
    boundary_radius_along_ray,
    bowles_border_radius,
    bowles_value,
    degenerate_t_audit,
    degenerate_t_c,
    degenerate_t_radius,
    displaced_werner_xi,
    displaced_werner_xi_printed,
    extremal_lambdas,
    golden_section,
    mapped_boundary_radius,
    physical_predicate,
    separable_predicate,
    tstate_boundary_radius,
    tstate_physical_radius,
)
from nonsteer.errors import BranchDomainError, InvalidBlochLengthError, InvalidRayError
from nonsteer.quadrature import build_sphere_rule, mean_norm_diag
from nonsteer.qubit_core import CanonicalState, random_state, werner

ROOT3 = math.sqrt(3)


@pytest.fixture(scope="module")
def rule():
    return build_sphere_rule()


def _dblquad_mean_norm(d):
    def f(phi, theta):
        st = math.sin(theta)
        x = np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])
        return np.linalg.norm(d * x) * st
    return integrate.dblquad(f, 0, math.pi, 0, 2 * math.pi, epsabs=1e-13, epsrel=1e-13)[0] / (2 * math.pi)


def test_direction_round_trip(rng):
    for _ in range(20):
        v = rng.normal(size=3)
        d = RayDirection.from_vector(v)
        assert np.allclose(d.vector, v / np.linalg.norm(v))


def test_isotropic_direction():
    assert np.allclose(RayDirection.isotropic().vector, -np.ones(3) / ROOT3)


def test_werner_threshold(rule):
    r = tstate_boundary_radius(RayDirection.isotropic(), rule)
    assert math.isclose(r / ROOT3, 0.5, abs_tol=1e-12)


def test_tstate_radius_against_scipy(rule):
    d = RayDirection(2.2, 3.9)
    assert math.isclose(tstate_boundary_radius(d, rule), 1 / _dblquad_mean_norm(d.vector), rel_tol=1e-10)


def test_tetrahedron_radius():
    assert math.isclose(tstate_physical_radius(RayDirection.isotropic().vector), ROOT3)
    assert tstate_physical_radius([1, 1, -1]) == 1.0


def test_bowles_value_against_brute_force(rng):
    dirs = rng.normal(size=(1_000_000, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    for _ in range(5):
        s = random_state(rng)
        brute = float(np.max((dirs @ s.a) ** 2 + 2 * np.linalg.norm(dirs @ s.T.T, axis=1)))
        val = bowles_value(s)
        assert brute <= val + 1e-12
        assert val - brute < 1e-4


def test_bowles_werner():
    # (a·x)² + 2‖Tx‖ = 2 mu for Werner states
    assert math.isclose(bowles_value(werner(0.5)), 1.0, abs_tol=1e-12)


def test_bowles_border_matches_value():
    a_vec = np.array([0, 0, 0.3])
    d = RayDirection(2.0, 3.6).vector
    r = bowles_border_radius(a_vec, d)
    assert math.isclose(bowles_value(CanonicalState(a_vec, r * d)), 1.0, abs_tol=1e-9)


def test_golden_section():
    x, fx, n, ok = golden_section(lambda u: (u - 0.3) ** 2 + 1, 0, 1, tol=1e-10)
    assert ok and abs(x - 0.3) < 1e-7 and math.isclose(fx, 1.0)


def test_extremal_lambdas_reach_a():
    for a in (0.1, 0.5, 0.9):
        u = 1.2
        lam, v = extremal_lambdas(u, a)
        assert math.isclose(math.sin(u) * math.sin(v), a, rel_tol=1e-14)
        assert np.allclose(lam, [math.cos(u), math.cos(v), math.cos(u) * math.cos(v)])


def _oracle_mapped(a, d):
    """Independent oracle: parametrise by v, bounded Brent search, scipy quadrature at the optimum."""
    fine = build_sphere_rule(160)

    def g(v):
        u = math.asin(a / math.sin(v))
        lam = np.array([math.cos(u), math.cos(v), math.cos(u) * math.cos(v)])
        return mean_norm_diag(fine, d / lam)

    lo = math.asin(a)
    grid = np.linspace(lo, math.pi / 2, 400)[1:-1]
    k = int(np.argmin([g(v) for v in grid]))
    res = optimize.minimize_scalar(g, bounds=(grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]),
                                   method="bounded", options={"xatol": 1e-12})
    v = res.x
    u = math.asin(a / math.sin(v))
    lam = np.array([math.cos(u), math.cos(v), math.cos(u) * math.cos(v)])
    return 1 / _dblquad_mean_norm(d / lam), u, v


def test_mapped_against_oracle(rule):
    d = RayDirection(2.0, math.pi / 4)
    s = mapped_boundary_radius(0.1, d, rule)
    r_ref, u_ref, v_ref = _oracle_mapped(0.1, d.vector)
    assert s.converged
    assert abs(s.r - r_ref) < 1e-6


def test_mapped_optimum_beats_grid(rule):
    a = 0.3
    d = RayDirection(2.4, 3.8)
    s = mapped_boundary_radius(a, d, rule)
    us = np.linspace(math.asin(a), math.pi / 2, 402)[1:-1]
    best = max(1 / mean_norm_diag(rule, d.vector / extremal_lambdas(u, a)[0]) for u in us)
    assert s.r >= best - 1e-12
    assert s.r - best < 1e-4


def test_mapped_a_zero_is_tstate(rule):
    d = RayDirection(2.1, 3.7)
    s = mapped_boundary_radius(0.0, d, rule)
    assert math.isclose(s.r, tstate_boundary_radius(d, rule), rel_tol=1e-14)


def test_mapped_shrinks_with_a(rule):
    d = RayDirection.isotropic()
    radii = [mapped_boundary_radius(a, d, rule).r for a in np.linspace(0, 0.95, 12)]
    assert np.all(np.diff(radii) < 0)


def test_mapped_certified_never_exceeds_raw(rule):
    for alpha in np.linspace(math.pi / 2, math.pi, 9):
        s = mapped_boundary_radius(0.2, RayDirection.in_negative_slice(alpha, 0.5), rule)
        assert s.r_certified <= s.r + 1e-15
        assert s.preimage_physical == (s.r_certified == s.r)


def test_mapped_rejects_bad_a(rule):
    for a in (-0.1, 1.0, 1.5):
        with pytest.raises(InvalidBlochLengthError):
            mapped_boundary_radius(a, RayDirection.isotropic(), rule)


def test_displaced_werner_closed_form(rule):
    for a in (0.05, 0.4, 0.85):
        num = mapped_boundary_radius(a, RayDirection.isotropic(), rule).r / ROOT3
        assert math.isclose(displaced_werner_xi(a), num, rel_tol=1e-9)


def test_displaced_werner_limits():
    assert displaced_werner_xi(0.0) == 0.5
    assert displaced_werner_xi(1.0) == 0.0
    # small-a series branch joins the direct formula smoothly
    assert math.isclose(displaced_werner_xi(1e-9), 0.5, rel_tol=1e-8)


def test_printed_werner_prefactor_off_by_sqrt():
    for a in (0.1, 0.5, 0.9):
        ratio = displaced_werner_xi_printed(a) / displaced_werner_xi(a)
        assert math.isclose(ratio, math.sqrt(1 - a), rel_tol=1e-14)


def test_degenerate_corrected_matches_numeric(rule):
    a = 0.1
    for alpha in np.linspace(math.pi / 2 + 0.02, math.pi - 0.02, 7):
        ref = mapped_boundary_radius(a, RayDirection.in_negative_slice(alpha, 1.0), rule).r
        assert math.isclose(degenerate_t_radius(a, alpha, "corrected"), ref, rel_tol=1e-9)


def test_degenerate_continuous_through_c_zero():
    a = 0.2
    # c = 0 where cot² α = (1 - a)/2
    alpha0 = math.pi - math.atan(1 / math.sqrt((1 - a) / 2))
    assert abs(degenerate_t_c(a, alpha0, "corrected")) < 1e-14
    left = degenerate_t_radius(a, alpha0 - 1e-7, "corrected")
    mid = degenerate_t_radius(a, alpha0, "corrected")
    right = degenerate_t_radius(a, alpha0 + 1e-7, "corrected")
    assert abs(left - mid) < 1e-6 and abs(right - mid) < 1e-6


def test_degenerate_printed_branch_errors():
    a = 0.1
    for alpha in np.linspace(math.pi / 2 + 0.01, math.pi - 0.01, 16):
        with pytest.raises(BranchDomainError) as exc:
            degenerate_t_radius(a, alpha, "printed")
        assert exc.value.c < 0


def test_degenerate_rejects_sin_zero():
    with pytest.raises(BranchDomainError):
        degenerate_t_radius(0.1, 0.0, "corrected")


def test_degenerate_audit_rows():
    rows = degenerate_t_audit(0.1, [2.0, 2.6], order=48)
    for row in rows:
        assert row["r_printed"] is None and row["printed_error"]
        assert abs(row["discrepancy_corrected"]) < 1e-8
        assert row["reference_delta"] < 1e-8


def test_ray_borders_werner():
    iso = RayDirection.isotropic()
    r_phys = boundary_radius_along_ray(physical_predicate(), 0.0, iso)
    r_ppt = boundary_radius_along_ray(separable_predicate(), 0.0, iso)
    assert abs(r_phys / ROOT3 - 1) < 1e-8
    assert abs(r_ppt / ROOT3 - 1 / 3) < 1e-8


def test_displaced_werner_physical_border():
    # (a e_z, -xi I) stays physical while xi <= 1 - a
    iso = RayDirection.isotropic()
    for a in (0.2, 0.6):
        r = boundary_radius_along_ray(physical_predicate(), a, iso)
        assert abs(r / ROOT3 - (1 - a)) < 1e-8


def test_ray_predicate_must_hold_at_origin():
    with pytest.raises(InvalidRayError):
        boundary_radius_along_ray(lambda s: False, 0.0, RayDirection.isotropic())
