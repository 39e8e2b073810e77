"""Reduced-resolution invariant checks behind ``nonsteer selftest``."""

from __future__ import annotations

import math

import numpy as np

from .boundaries import RayDirection, displaced_werner_xi, mapped_boundary_radius, tstate_boundary_radius
from .channels import ExtremalParams, choi_min_eigenvalue, extremal_map, kraus_operators, pullback_effects
from .channels import apply_channel_a
from .quadrature import build_sphere_rule, integrate_sphere
from .qubit_core import assemblage, assemblage_from_effects, bloch_decompose, density_matrix, projectors, random_state
from .regions import SliceSpec, figure_slice


def _quadrature():
    rule = build_sphere_rule(32)
    err = max(
        abs(integrate_sphere(rule, lambda x: np.ones(len(x))) - 4 * math.pi),
        abs(integrate_sphere(rule, lambda x: np.abs(x[:, 2])) - 2 * math.pi),
        abs(integrate_sphere(rule, lambda x: x[:, 0] ** 2 * x[:, 1] ** 2) - 4 * math.pi / 15),
    )
    return err < 1e-10, f"max moment error {err:.2e}"


def _werner():
    mu = tstate_boundary_radius(RayDirection.isotropic(), build_sphere_rule(32)) / math.sqrt(3)
    return abs(mu - 0.5) < 1e-8, f"mu = {mu:.12f}"


def _round_trip():
    rng = np.random.default_rng(1)
    err = 0.0
    for _ in range(20):
        s = random_state(rng)
        back = bloch_decompose(density_matrix(s))
        err = max(err, np.abs(back.T - s.T).max(), np.abs(back.a - s.a).max(), np.abs(back.b - s.b).max())
    return err < 1e-12, f"max round-trip error {err:.2e}"


def _extremal_cp():
    grid = np.linspace(0, 2 * math.pi, 12, endpoint=False)
    worst = min(choi_min_eigenvalue(extremal_map(ExtremalParams(u, v))) for u in grid for v in grid / 2)
    return worst >= -1e-10, f"min Choi eigenvalue {worst:.2e}"


def _pullback_assemblage():
    rng = np.random.default_rng(2)
    err = 0.0
    for _ in range(20):
        s = random_state(rng)
        ch = extremal_map(ExtremalParams(rng.uniform(0, 2 * math.pi), rng.uniform(0, math.pi)))
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        after = assemblage(apply_channel_a(ch, s), axis)
        pulled = assemblage_from_effects(s, pullback_effects(kraus_operators(ch), projectors(axis)))
        err = max(err, np.abs(after.plus - pulled[0]).max(), np.abs(after.minus - pulled[1]).max())
    return err < 1e-10, f"max assemblage mismatch {err:.2e}"


def _displaced_werner():
    rule = build_sphere_rule(48)
    err = 0.0
    for a in (0.1, 0.5, 0.9):
        num = mapped_boundary_radius(a, RayDirection.isotropic(), rule).r / math.sqrt(3)
        err = max(err, abs(num / displaced_werner_xi(a) - 1))
    return err < 1e-6, f"max relative gap {err:.2e}"


def _fig3b():
    tab = figure_slice(SliceSpec.for_figure("fig3b", resolution=16, order=32))
    gap = min(m - b for m, b in zip(tab.column("r_mapped"), tab.column("r_bowles")))
    return gap > 1e-6, f"min r_mapped - r_bowles = {gap:.4f}"


CHECKS = [
    ("quadrature_moments", _quadrature),
    ("werner_threshold", _werner),
    ("bloch_round_trip", _round_trip),
    ("extremal_maps_cp", _extremal_cp),
    ("pullback_assemblage", _pullback_assemblage),
    ("displaced_werner_closed_form", _displaced_werner),
    ("fig3b_dominance", _fig3b),
]


def run_selftest():
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # report, never abort the remaining checks
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
