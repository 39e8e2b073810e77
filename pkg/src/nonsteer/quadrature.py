"""Product quadrature on the unit sphere.

Polar direction: Gauss-Legendre in the polar angle, split at the equator
(half the nodes per hemisphere) with the ``sin θ`` Jacobian folded into the
weights.  Azimuth: uniform trapezoid with ``2 * order`` nodes.  The split
makes integrands with a kink on the equator (``|x3|``, ``‖Dx‖`` for singular
``D``) integrate to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import InvalidOrderError, NonFiniteIntegrandError

DEFAULT_ORDER = 96
MIN_ORDER = 8


@dataclass(frozen=True, eq=False)
class SphereRule:
    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @property
    def nodes_sq(self) -> np.ndarray:
        return _squares(self)

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def _squares(rule: SphereRule) -> np.ndarray:
    sq = rule.nodes**2
    sq.setflags(write=False)
    return sq


def _hemisphere_split(order: int):
    north = order // 2
    south = order - north
    xn, wn = leggauss(north)
    xs, ws = leggauss(south)
    h = np.pi / 4
    theta = np.concatenate([h * (xn + 1), h * (xs + 3)])
    w = np.concatenate([h * wn, h * ws]) * np.sin(theta)
    return theta, w


@lru_cache(maxsize=16)
def build_sphere_rule(order: int = DEFAULT_ORDER) -> SphereRule:
    if int(order) != order or order < MIN_ORDER:
        raise InvalidOrderError(f"quadrature order must be an integer >= {MIN_ORDER}, got {order!r}")
    order = int(order)
    theta, w_theta = _hemisphere_split(order)
    n_phi = 2 * order
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    st = np.sin(th)
    nodes = np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=-1).reshape(-1, 3)
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    weights = np.outer(w_theta, np.full(n_phi, 2 * np.pi / n_phi)).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return SphereRule(nodes, weights, order)


def integrate_sphere(rule: SphereRule, f) -> float:
    """``Σ w_i f(x_i)``.

    ``f`` is called once with the ``(N, 3)`` node array and must return
    ``N`` values; it must be pure.
    """
    vals = np.asarray(f(rule.nodes), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteIntegrandError("integrand returned non-finite values")
    return float(vals @ rule.weights)


def mean_norm_diag(rule: SphereRule, d) -> float:
    """``g(diag d) = (1/2π) ∬ ‖diag(d) x‖ d²x``; hot path of the boundary optimiser."""
    d2 = np.asarray(d, dtype=float) ** 2
    return float(np.sqrt(rule.nodes_sq @ d2) @ rule.weights) / (2 * np.pi)


def mean_norm(rule: SphereRule, D) -> float:
    D = np.asarray(D, dtype=float)
    if D.ndim == 1:
        return mean_norm_diag(rule, D)
    if not np.allclose(D, D.T, rtol=0, atol=1e-12):
        raise ValueError("mean_norm expects a symmetric matrix")
    if np.all(D == np.diag(np.diag(D))):
        return mean_norm_diag(rule, np.diag(D))
    return integrate_sphere(rule, lambda x: np.linalg.norm(x @ D, axis=1)) / (2 * np.pi)


def mean_norm_refinement(D, order: int = DEFAULT_ORDER) -> tuple[float, float]:
    """``(g at order, g at 2*order)`` so callers can assert convergence."""
    return mean_norm(build_sphere_rule(order), D), mean_norm(build_sphere_rule(2 * order), D)
