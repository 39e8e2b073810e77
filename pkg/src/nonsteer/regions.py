"""Region labels, convex closure of certified sets, and figure slice tables."""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import __version__
from .boundaries import (
    RayDirection,
    bowles_border_radius,
    bowles_value,
    boundary_radius_along_ray,
    displaced_werner_xi,
    displaced_werner_xi_printed,
    mapped_boundary_radius,
    physical_predicate,
    separable_predicate,
    tstate_boundary_radius,
)
from .errors import DegenerateHullError, InvalidInputError, InvalidRayError
from .quadrature import DEFAULT_ORDER, build_sphere_rule, mean_norm_refinement
from .qubit_core import DEFAULT_TOL, CanonicalState, is_physical, is_separable_ppt


class RegionLabel(str, Enum):
    NONPHYSICAL = "nonphysical"
    SEPARABLE = "separable"
    NONSTEERABLE_BOWLES = "nonsteerable_bowles"
    NONSTEERABLE_MAPPED = "nonsteerable_mapped"
    NONSTEERABLE_HULL = "nonsteerable_hull"
    ENTANGLED_UNKNOWN = "entangled_unknown"


FIGURES = ("fig2", "fig3a", "fig3b", "custom")
DEFAULT_RATIO = {"fig3a": 1.0, "fig3b": 0.5}
DEFAULT_A = {"fig3a": 0.1, "fig3b": 0.2}
DEFAULT_RESOLUTION = 256
R_MAX = 2.0


@dataclass(frozen=True)
class ClassifyConfig:
    tol: float = DEFAULT_TOL
    order: int = DEFAULT_ORDER
    hull_rays: int = 64
    border_tol: float = 1e-9


# ---------------------------------------------------------------- geometry

def _cross(o, p, q):
    return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])


def convex_hull_2d(points) -> np.ndarray:
    """Counter-clockwise hull by Andrew's monotone chain; collinear points dropped."""
    pts = sorted({(float(x), float(y)) for x, y in np.asarray(points, dtype=float).reshape(-1, 2)})
    if len(pts) < 3:
        raise DegenerateHullError(f"need at least 3 distinct points, got {len(pts)}", collinear=False)
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateHullError("all points are collinear", collinear=True)
    return np.array(hull)


def polygon_area(poly) -> float:
    poly = np.asarray(poly, dtype=float)
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def in_polygon(poly, point, tol: float = 1e-12) -> bool:
    """Membership in a CCW convex polygon, boundary included."""
    poly = np.asarray(poly, dtype=float)
    nxt = np.roll(poly, -1, axis=0)
    edge = nxt - poly
    rel = np.asarray(point, dtype=float) - poly
    cross = edge[:, 0] * rel[:, 1] - edge[:, 1] * rel[:, 0]
    return bool(np.all(cross >= -tol * np.maximum(1.0, np.linalg.norm(edge, axis=1))))


def ray_exit_radius(poly, direction) -> float:
    """Distance from the origin to the boundary of a convex polygon along ``direction``.

    The origin must lie inside or on the polygon.
    """
    poly = np.asarray(poly, dtype=float)
    w = np.asarray(direction, dtype=float)
    w = w / np.linalg.norm(w)
    nxt = np.roll(poly, -1, axis=0)
    edge = nxt - poly
    normal = np.stack([edge[:, 1], -edge[:, 0]], axis=1)  # outward for CCW
    nw = normal @ w
    off = np.einsum("ij,ij->i", normal, poly)
    scale = np.linalg.norm(normal, axis=1)
    hits = nw > 1e-13 * scale
    if not np.any(hits):
        return math.inf
    return float(np.min(off[hits] / nw[hits]))


# ----------------------------------------------------------------- borders

@dataclass(frozen=True)
class RayBorders:
    alpha: float
    beta: float
    r_physical: float
    r_ppt: float
    r_bowles: float
    r_bowles_raw: float
    r_mapped: float
    r_mapped_raw: float
    u_star: float
    v_star: float
    u_cert: float
    v_cert: float
    r_tstate: float
    converged: bool


def ray_borders(a: float, direction: RayDirection, rule, tol: float = DEFAULT_TOL,
                with_mapped: bool = True, a_vec=None) -> RayBorders:
    """All border radii along one ray at fixed Alice vector ``a e_z``.

    ``r_bowles`` and ``r_mapped`` are the certified radii: the Bowles border
    is cut at the physical border, and the mapped border only uses
    physical T-state preimages.
    """
    if a_vec is None:
        a_vec = np.array([0.0, 0.0, a])
    alen = float(np.linalg.norm(a_vec))
    d = direction.vector

    def along(pred):
        # the radial helper puts a on e_z; a_vec off-axis needs its own state
        if np.allclose(a_vec[:2], 0, atol=0):
            return boundary_radius_along_ray(pred, alen, direction, R_MAX, tol=1e-10)
        return _bisect_general(pred, a_vec, d)

    r_phys = along(physical_predicate(tol))
    r_ppt = along(separable_predicate(tol))
    r_b_raw = bowles_border_radius(a_vec, d)
    r_b = min(r_b_raw, r_phys)
    if with_mapped:
        s = mapped_boundary_radius(alen, direction, rule)
        mapped = (s.r_certified, s.r, s.u_star, s.v_star, s.u_cert, s.v_cert, s.converged)
    else:
        mapped = (0.0, 0.0, math.nan, math.nan, math.nan, math.nan, True)
    r_t = tstate_boundary_radius(direction, rule)
    return RayBorders(direction.alpha, direction.beta, r_phys, r_ppt, r_b, r_b_raw,
                      mapped[0], mapped[1], mapped[2], mapped[3], mapped[4], mapped[5], r_t, mapped[6])


def _bisect_general(pred, a_vec, d, r_max=R_MAX, tol=1e-10):
    at = lambda r: bool(pred(CanonicalState(a_vec, r * d)))
    if not at(0.0):
        raise InvalidRayError("predicate fails at the origin of the ray")
    if at(r_max):
        return r_max
    lo, hi = 0.0, r_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if at(mid) else (lo, mid)
    return lo


def _plane(alpha, r):
    return (r * math.sin(alpha), r * math.cos(alpha))


def hull_from_borders(borders) -> np.ndarray:
    """Convex hull, in slice-plane coordinates ``(r sin α, r cos α)``, of all certified border points and the origin."""
    pts = [(0.0, 0.0)]
    for b in borders:
        for r in (b.r_mapped, b.r_bowles, b.r_ppt):
            if r > 0:
                pts.append(_plane(b.alpha, r))
    return convex_hull_2d(pts)


def _label_at(r, b: RayBorders, eps):
    if r > b.r_physical + eps:
        return RegionLabel.NONPHYSICAL
    if r <= b.r_ppt + eps:
        return RegionLabel.SEPARABLE
    if r <= b.r_bowles + eps:
        return RegionLabel.NONSTEERABLE_BOWLES
    if r <= b.r_mapped + eps:
        return RegionLabel.NONSTEERABLE_MAPPED
    return RegionLabel.NONSTEERABLE_HULL


# ----------------------------------------------------------------- classify

def _axis_of(a, tol=1e-12):
    """Index of the coordinate axis carrying ``a``, 2 for ``a = 0``, None if off-axis."""
    nz = np.flatnonzero(np.abs(a) > tol)
    if len(nz) == 0:
        return 2
    return int(nz[0]) if len(nz) == 1 else None


def _to_z_frame(s: CanonicalState):
    """Cyclic relabelling of axes (a joint local rotation) that moves Alice's axis to z."""
    k = _axis_of(s.a)
    if k is None:
        return s, False
    idx = [(k + 1) % 3, (k + 2) % 3, k]
    return CanonicalState(np.abs(s.a[idx]), s.t[idx]), True


def classify_detail(s: CanonicalState, cfg: ClassifyConfig | None = None) -> dict:
    """Label plus every border distance along the ray through ``t``.

    Precedence: nonphysical, separable, Bowles, mapped, hull, unknown.  The
    mapped border is only available when ``a`` lies on a coordinate axis; a
    negative component is folded by a joint π rotation that leaves ``t``
    unchanged.
    """
    cfg = cfg or ClassifyConfig()
    rule = build_sphere_rule(cfg.order)
    z, aligned = _to_z_frame(s)
    out = {"label": None, "norm_t": float(np.linalg.norm(s.t)), "mapped_applicable": aligned}

    if not is_physical(s, cfg.tol):
        out["label"] = RegionLabel.NONPHYSICAL
    elif is_separable_ppt(s, cfg.tol):
        out["label"] = RegionLabel.SEPARABLE
    elif bowles_value(s) <= 1.0:
        out["label"] = RegionLabel.NONSTEERABLE_BOWLES

    tnorm = out["norm_t"]
    if tnorm == 0 or np.linalg.norm(s.a) > 1:
        out["label"] = out["label"] or RegionLabel.ENTANGLED_UNKNOWN
        return out

    direction = RayDirection.from_vector(z.t)
    b = ray_borders(float(np.linalg.norm(z.a)), direction, rule, cfg.tol,
                    with_mapped=aligned, a_vec=None if aligned else z.a)
    out.update({k: v for k, v in asdict(b).items() if k.startswith(("r_", "u_", "v_"))})

    if out["label"] is None and aligned and tnorm <= b.r_mapped:
        out["label"] = RegionLabel.NONSTEERABLE_MAPPED

    alphas = np.linspace(0.0, math.pi, cfg.hull_rays)
    alphas = np.unique(np.append(alphas, direction.alpha))
    borders = [b if a_ == direction.alpha else
               ray_borders(float(np.linalg.norm(z.a)), RayDirection(float(a_), direction.beta), rule, cfg.tol,
                           with_mapped=aligned, a_vec=None if aligned else z.a)
               for a_ in alphas]
    hull = hull_from_borders(borders)
    r_hull = ray_exit_radius(hull, _plane(direction.alpha, 1.0))
    out["r_hull"] = r_hull
    if out["label"] is None:
        out["label"] = RegionLabel.NONSTEERABLE_HULL if tnorm <= r_hull + cfg.border_tol else RegionLabel.ENTANGLED_UNKNOWN
    return out


def classify(s: CanonicalState, cfg: ClassifyConfig | None = None) -> RegionLabel:
    return classify_detail(s, cfg)["label"]


# ------------------------------------------------------------------ slices

@dataclass(frozen=True)
class SliceSpec:
    """A 2-D section of state space at fixed Alice vector ``a e_z``.

    fig2 sweeps ``a`` along the isotropic direction ``T = -ξ I``; the other
    figures sweep ``α in [π/2, π]`` with ``t2 = ratio * t1`` in the
    all-negative octant.
    """

    figure: str
    a: float = 0.0
    ratio: float = 1.0
    resolution: int = DEFAULT_RESOLUTION
    order: int = DEFAULT_ORDER
    tol: float = DEFAULT_TOL
    alpha_min: float = math.pi / 2
    alpha_max: float = math.pi

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise InvalidInputError(f"unknown figure {self.figure!r}; expected one of {FIGURES}")
        if self.resolution < 16:
            raise InvalidInputError("slice resolution must be at least 16")
        if not 0 <= self.a < 1:
            raise InvalidInputError(f"a must lie in [0, 1), got {self.a!r}")

    @classmethod
    def for_figure(cls, figure: str, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if figure in DEFAULT_RATIO:
            kw.setdefault("ratio", DEFAULT_RATIO[figure])
            kw.setdefault("a", DEFAULT_A[figure])
        return cls(figure, **kw)

    @property
    def beta(self) -> float:
        return math.pi + math.atan(self.ratio)

    def alphas(self) -> np.ndarray:
        return np.linspace(self.alpha_min, self.alpha_max, self.resolution)


@dataclass
class SliceTable:
    columns: list
    rows: list
    metadata: dict = field(default_factory=dict)

    def column(self, name) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, row)) for row in self.rows]


FIG2_COLUMNS = ["a", "xi_physical", "xi_ppt", "xi_bowles", "xi_mapped", "xi_mapped_printed",
                "xi_mapped_numeric", "label"]
FIG3_COLUMNS = ["alpha", "beta", "d1", "d2", "d3", "p", "q", "label", "r_physical", "r_ppt",
                "r_bowles", "r_bowles_raw", "r_mapped", "r_mapped_raw", "r_hull", "r_tstate",
                "u_star", "v_star", "u_cert", "v_cert", "converged"]


def slice_borders(spec: SliceSpec) -> list[RayBorders]:
    rule = build_sphere_rule(spec.order)
    return [ray_borders(spec.a, RayDirection(float(al), spec.beta), rule, spec.tol) for al in spec.alphas()]


def hull_region(a: float, spec: SliceSpec) -> np.ndarray:
    """Convex closure of the certified non-steerable points in the slice."""
    if a != spec.a:
        spec = SliceSpec(spec.figure, a, spec.ratio, spec.resolution, spec.order, spec.tol,
                         spec.alpha_min, spec.alpha_max)
    return hull_from_borders(slice_borders(spec))


def _metadata(spec: SliceSpec, columns, extra=None) -> dict:
    probe = RayDirection.isotropic() if spec.figure == "fig2" else RayDirection(
        0.5 * (spec.alpha_min + spec.alpha_max), spec.beta)
    g1, g2 = mean_norm_refinement(probe.vector, spec.order)
    meta = {
        "figure": spec.figure,
        "a": spec.a,
        "ratio": spec.ratio,
        "ratio_meaning": "t2 = ratio * t1",
        "resolution": spec.resolution,
        "order": spec.order,
        "tol": spec.tol,
        "alpha_range": [spec.alpha_min, spec.alpha_max],
        "quadrature_convergence": [g1, g2],
        "code_version": __version__,
        "columns": list(columns),
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    meta.update(extra or {})
    return meta


def _fig2(spec: SliceSpec) -> SliceTable:
    rule = build_sphere_rule(spec.order)
    iso = RayDirection.isotropic()
    root3 = math.sqrt(3)
    rows = []
    for a in np.linspace(0.0, 1.0, spec.resolution):
        a = float(a)
        xi_phys = boundary_radius_along_ray(physical_predicate(spec.tol), a, iso, R_MAX) / root3
        xi_ppt = boundary_radius_along_ray(separable_predicate(spec.tol), a, iso, R_MAX) / root3
        xi_b = (1 - a * a) / 2
        xi_m = displaced_werner_xi(a)
        xi_num = mapped_boundary_radius(a, iso, rule).r_certified / root3 if a < 1 else 0.0
        top = max(xi_b, xi_m, xi_ppt)
        label = (RegionLabel.SEPARABLE if top <= xi_ppt else
                 RegionLabel.NONSTEERABLE_BOWLES if top <= xi_b else RegionLabel.NONSTEERABLE_MAPPED)
        rows.append((a, xi_phys, xi_ppt, xi_b, xi_m, displaced_werner_xi_printed(a), xi_num, label.value))
    return SliceTable(list(FIG2_COLUMNS), rows, _metadata(spec, FIG2_COLUMNS, {"direction": "T = -xi I"}))


def _fig3(spec: SliceSpec) -> SliceTable:
    borders = slice_borders(spec)
    hull = hull_from_borders(borders)
    rows = []
    for b in borders:
        r_hull = ray_exit_radius(hull, _plane(b.alpha, 1.0))
        d = RayDirection(b.alpha, b.beta).vector
        label = _label_at(r_hull, b, 1e-9)
        p, q = _plane(b.alpha, r_hull)
        rows.append((b.alpha, b.beta, float(d[0]), float(d[1]), float(d[2]), p, q, label.value,
                     b.r_physical, b.r_ppt, b.r_bowles, b.r_bowles_raw, b.r_mapped, b.r_mapped_raw,
                     r_hull, b.r_tstate, b.u_star, b.v_star, b.u_cert, b.v_cert, int(b.converged)))
    extra = {"hull_vertices": hull.tolist(), "label_meaning": "label of the outermost certified point on the ray"}
    return SliceTable(list(FIG3_COLUMNS), rows, _metadata(spec, FIG3_COLUMNS, extra))


def figure_slice(spec: SliceSpec) -> SliceTable:
    if spec.figure == "fig2":
        return _fig2(spec)
    return _fig3(spec)
