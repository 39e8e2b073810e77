"""Acceptance criteria, one test each.

Every test prints a single ``[n] PASS|FAIL name: detail`` line (visible under
plain ``pytest``) and then asserts.  ``python tests/test_acceptance.py`` runs
the same checks without pytest.
"""

import io
import math
import time

import numpy as np
import pytest

from nonsteer.boundaries import RayDirection, degenerate_t_audit, displaced_werner_xi, mapped_boundary_radius
from nonsteer.channels import (
    ExtremalParams,
    apply_channel_a,
    choi_min_eigenvalue,
    extremal_map,
    kraus_operators,
    pullback_effects,
)
from nonsteer.cli import data_rows, parse_table, run
from nonsteer.quadrature import DEFAULT_ORDER, build_sphere_rule, integrate_sphere, mean_norm, mean_norm_diag
from nonsteer.qubit_core import assemblage, assemblage_from_effects, is_separable_ppt, projectors, random_state
from nonsteer.qubit_core import CanonicalState
from nonsteer.regions import SliceSpec, figure_slice

ROOT3 = math.sqrt(3)
A_GRID = [round(0.05 * k, 2) for k in range(1, 20)]


@pytest.fixture
def report(capsys):
    def emit(n, name, ok, detail):
        with capsys.disabled():
            print(f"\n[{n:2d}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
        assert ok, detail
    return emit


def _cli(argv):
    buf = io.StringIO()
    code = run(argv, stdout=buf)
    return code, buf.getvalue()


def test_01_werner_threshold(report):
    t0 = time.perf_counter()
    code, out = _cli(["boundary", "tstate", "--isotropic"])
    dt = time.perf_counter() - t0
    mu = parse_table(out).records()[0]["mu"]
    ok = code == 0 and abs(mu - 0.5) <= 1e-8 and dt < 1.0
    report(1, "werner_threshold", ok, f"mu = {mu:.15f}, |mu - 1/2| = {abs(mu - 0.5):.1e}, {dt:.3f} s")


def test_02_displaced_werner_vs_numeric(report):
    rule = build_sphere_rule()
    t0 = time.perf_counter()
    worst = 0.0
    for a in A_GRID:
        num = mapped_boundary_radius(a, RayDirection.isotropic(), rule).r / ROOT3
        worst = max(worst, abs(displaced_werner_xi(a) / num - 1))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 30
    report(2, "displaced_werner_closed_form", ok, f"max relative gap {worst:.1e} over {len(A_GRID)} a, {dt:.2f} s")


def test_03_optimizer_symmetry(report):
    rule = build_sphere_rule()
    dirs = [RayDirection.isotropic()] + [RayDirection.in_negative_slice(al, 1.0)
                                         for al in np.linspace(math.pi / 2 + 0.05, math.pi - 0.05, 9)]
    worst = max(abs(s.u_star - s.v_star)
                for a in A_GRID for d in dirs
                for s in [mapped_boundary_radius(a, d, rule)])
    report(3, "optimizer_symmetry", worst <= 1e-5, f"max |u* - v*| = {worst:.1e} over {len(A_GRID) * len(dirs)} rays")


def test_04_pullback_assemblage(report):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        s = random_state(rng)
        ch = extremal_map(ExtremalParams(rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi)))
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        after = assemblage(apply_channel_a(ch, s), axis)
        pulled = assemblage_from_effects(s, pullback_effects(kraus_operators(ch), projectors(axis)))
        worst = max(worst, np.abs(after.plus - pulled[0]).max(), np.abs(after.minus - pulled[1]).max())
    dt = time.perf_counter() - t0
    ok = worst <= 1e-10 and dt < 10
    report(4, "pullback_assemblage", ok, f"max componentwise mismatch {worst:.1e} over 200 triples, {dt:.2f} s")


def test_05_extremal_family_cp(report):
    grid = np.linspace(0, 2 * math.pi, 50)
    worst = min(choi_min_eigenvalue(extremal_map(ExtremalParams(u, v))) for u in grid for v in grid)
    report(5, "extremal_family_cp", worst >= -1e-10, f"min Choi eigenvalue {worst:.2e} on 50x50 grid")


def test_06_fig3b_dominance(report):
    tab = figure_slice(SliceSpec.for_figure("fig3b", a=0.2, ratio=0.5, resolution=128))
    gaps = [m - b for m, b in zip(tab.column("r_mapped"), tab.column("r_bowles"))]
    ok = len(gaps) == 128 and min(gaps) > 1e-6
    report(6, "fig3b_dominance", ok, f"min r_mapped - r_bowles = {min(gaps):.4f} over {len(gaps)} rays")


def test_07_fig3a_new_region(report):
    tab = figure_slice(SliceSpec.for_figure("fig3a", a=0.1, ratio=1.0, resolution=64))
    iso_alpha = RayDirection.isotropic().alpha
    hits = 0
    for rec in tab.records():
        if rec["r_mapped"] - rec["r_bowles"] <= 1e-3 or abs(rec["alpha"] - iso_alpha) < 0.05:
            continue
        d = np.array([rec["d1"], rec["d2"], rec["d3"]])
        if not is_separable_ppt(CanonicalState([0, 0, 0.1], rec["r_mapped"] * d)):
            hits += 1
    report(7, "fig3a_new_region", hits >= 5, f"{hits} entangled rays with r_mapped - r_bowles > 1e-3")


def test_08_fig2_no_improvement(report):
    worst = max(displaced_werner_xi(a) - (1 - a * a) / 2 for a in np.linspace(0, 1, 64))
    report(8, "fig2_no_improvement", worst <= 1e-9, f"max xi_mapped - xi_bowles = {worst:.3e}")


def test_09_degenerate_audit(report):
    code, out = _cli(["boundary", "degenerate-t", "--a", "0.1", "--n-alpha", "64", "--format", "json"])
    tab = parse_table(out, "json")
    rep = tab.metadata["report"]
    has_printed = all(r["r_printed"] is not None or r["printed_error"] for r in tab.records())
    delta = rep["reference_max_refinement_delta"]
    ok = code == 0 and len(tab.rows) == 64 and has_printed and delta < 1e-8
    report(9, "degenerate_t_audit", ok,
           f"{rep['printed_branch_domain_errors']}/64 printed branch-domain errors, "
           f"reference order-doubling delta {delta:.1e}, corrected max gap {rep['corrected_max_abs_discrepancy']:.1e}")


def test_10_quadrature(report):
    rule = build_sphere_rule(DEFAULT_ORDER)
    moments = [
        (lambda x: np.ones(len(x)), 4 * math.pi),
        (lambda x: np.abs(x[:, 2]), 2 * math.pi),
        (lambda x: x[:, 0] ** 4, 4 * math.pi / 5),
        (lambda x: x[:, 0] ** 2 * x[:, 1] ** 2, 4 * math.pi / 15),
    ]
    moment_err = max(abs(integrate_sphere(rule, f) - ref) for f, ref in moments)
    rng = np.random.default_rng(10)
    prop_err = 0.0
    for _ in range(20):
        d = rng.uniform(0.2, 1, size=3) * rng.choice([-1, 1], size=3)
        c = rng.uniform(0.1, 5)
        prop_err = max(prop_err, abs(mean_norm_diag(rule, c * d) / (c * mean_norm_diag(rule, d)) - 1))
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        prop_err = max(prop_err, abs(mean_norm(rule, q @ np.diag(d) @ q.T) / mean_norm_diag(rule, d) - 1))
    ok = moment_err <= 1e-10 and prop_err <= 1e-10
    report(10, "quadrature", ok, f"moment error {moment_err:.1e}, homogeneity/rotation error {prop_err:.1e}")


def test_11_determinism(report):
    argv = ["figure", "fig3a", "--resolution", "64"]
    first, second = _cli(argv), _cli(argv)
    ok = first[0] == 0 and data_rows(first[1]) == data_rows(second[1])
    report(11, "determinism", ok, f"{len(data_rows(first[1]))} data lines byte-identical across two runs")


if __name__ == "__main__":
    import sys

    def emit(n, name, ok, detail):
        print(f"[{n:2d}] {'PASS' if ok else 'FAIL'} {name}: {detail}")

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        t(emit)
    sys.exit(0)
