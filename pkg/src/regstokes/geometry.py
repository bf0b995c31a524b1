"""Surface discretisations for the sphere, prolate spheroid and torus.

Every generator returns a SurfaceDiscretisation: collocation/quadrature points,
one combined weight per point (quadrature weight times surface metric, i.e.
an area), and the minimum pairwise spacing h of the point set.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.spatial import cKDTree

from .errors import (
    DegeneratePairError,
    InvalidGeometryError,
    InvalidParameterError,
    ResourceBudgetError,
)

DEFAULT_POINT_CAP = 200_000


@dataclass(frozen=True)
class SurfaceDiscretisation:
    points: np.ndarray          # (N, 3)
    weights: np.ndarray         # (N,) combined weight * surface metric
    h: float                    # minimum pairwise point distance
    shape_tag: str

    def __post_init__(self):
        object.__setattr__(self, "points", np.ascontiguousarray(self.points, dtype=float))
        object.__setattr__(self, "weights", np.ascontiguousarray(self.weights, dtype=float))
        if len(self.points) != len(self.weights):
            raise InvalidParameterError("points/weights length mismatch")

    @property
    def n_points(self):
        return len(self.points)

    @property
    def sdof(self):
        return 3 * len(self.points)

    @property
    def area(self):
        return float(self.weights.sum())

    def centroid(self):
        return np.average(self.points, axis=0, weights=self.weights)

    def transformed(self, x0, basis):
        """Rigidly map the body-frame discretisation: p -> x0 + basis @ p."""
        pts = np.asarray(x0, dtype=float) + self.points @ np.asarray(basis, dtype=float).T
        return SurfaceDiscretisation(pts, self.weights, self.h, self.shape_tag)

    def save_txt(self, path):
        with open(path, "w") as fh:
            fh.write(f"{self.shape_tag} h={self.h:.17g}\n")
            for p, w in zip(self.points, self.weights):
                fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g} {w:.17g}\n")

    @staticmethod
    def load_txt(path):
        with open(path) as fh:
            header = fh.readline().split()
            shape_tag = header[0]
            h = float(header[1].split("=", 1)[1])
            rows = np.loadtxt(fh, ndmin=2)
        return SurfaceDiscretisation(rows[:, :3], rows[:, 3], h, shape_tag)


@dataclass(frozen=True)
class NearestPair:
    """Coarse force discretisation paired with a finer quadrature set."""

    force: SurfaceDiscretisation
    quad: SurfaceDiscretisation
    filter_distance: float


def min_spacing(points):
    """Exact minimum pairwise Euclidean distance of a point set."""
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        raise InvalidParameterError("min_spacing needs at least 2 points")
    if len(points) <= 500:
        d2 = np.sum((points[:, None, :] - points[None, :, :]) ** 2, axis=-1)
        np.fill_diagonal(d2, np.inf)
        return float(np.sqrt(d2.min()))
    dist, _ = cKDTree(points).query(points, k=2)
    return float(dist[:, 1].min())


def _rect_solid_angle(a, b, c, d):
    # Solid angle at the origin of the rectangle [a,b]x[c,d] on a cube face
    # at distance 1 (inclusion/exclusion of the corner antiderivative).
    def f(u, v):
        return math.atan2(u * v, math.sqrt(1.0 + u * u + v * v))

    return f(b, d) - f(a, d) - f(b, c) + f(a, c)


def discretise_sphere(h_target, point_cap=DEFAULT_POINT_CAP):
    """Unit sphere by radial projection of uniform grids on the cube faces.

    Per-point weight is the exact spherical area of the grid cell around the
    node (cell edges at grid midpoints, clipped to the face); nodes shared
    between faces are merged with their weights summed, so the weights total
    4*pi up to rounding.
    """
    if not 0.0 < h_target < 2.0:
        raise InvalidParameterError(f"h_target must be in (0, 2), got {h_target}")
    k = max(1, math.ceil(2.0 / h_target))
    while True:
        if 6 * k * k + 2 > point_cap:
            raise ResourceBudgetError(
                f"sphere grid k={k} needs {6 * k * k + 2} points, cap {point_cap}"
            )
        nodes = np.linspace(-1.0, 1.0, k + 1)
        edges = np.concatenate(([-1.0], (nodes[:-1] + nodes[1:]) / 2.0, [1.0]))
        merged = {}
        order = []
        for axis in range(3):
            for sign in (1.0, -1.0):
                for i, u in enumerate(nodes):
                    for j, v in enumerate(nodes):
                        w = _rect_solid_angle(edges[i], edges[i + 1], edges[j], edges[j + 1])
                        p = [0.0, 0.0, 0.0]
                        p[axis] = sign
                        p[(axis + 1) % 3] = u
                        p[(axis + 2) % 3] = v
                        key = (round(p[0], 12), round(p[1], 12), round(p[2], 12))
                        if key in merged:
                            merged[key] += w
                        else:
                            merged[key] = w
                            order.append(key)
        pts = np.array(order)
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        weights = np.array([merged[key] for key in order])
        h = min_spacing(pts)
        if h <= h_target:
            return SurfaceDiscretisation(pts, weights, h, f"sphere:k={k}")
        k += 1


def _spheroid_ds_dnu(a, c, nu):
    # meridian arc-length element of x = a cos(nu), rho = c sin(nu)
    return math.sqrt(a * a * math.sin(nu) ** 2 + c * c * math.cos(nu) ** 2)


def discretise_spheroid(a, c, h_target, point_cap=DEFAULT_POINT_CAP):
    """Prolate spheroid (major semi-axis a along x, minor c) by rings of
    azimuthal points at uniformly spaced polar angles; poles are single points.

    Ring weights are the exact area of the strip between mid-latitudes,
    shared equally over the ring; the pole weight is the polar cap area.
    """
    if not (a > c > 0.0):
        raise InvalidGeometryError(f"need a > c > 0, got a={a}, c={c}")
    if not h_target > 0.0:
        raise InvalidParameterError(f"h_target must be positive, got {h_target}")

    meridian, _ = quad(lambda nu: _spheroid_ds_dnu(a, c, nu), 0.0, math.pi)
    n = max(3, math.ceil(meridian / h_target) + 1)
    nu = np.linspace(0.0, math.pi, n)
    nu_edges = np.concatenate(([0.0], (nu[:-1] + nu[1:]) / 2.0, [math.pi]))

    def strip_area(lo, hi):
        val, _ = quad(
            lambda t: 2.0 * math.pi * c * math.sin(t) * _spheroid_ds_dnu(a, c, t), lo, hi
        )
        return val

    pts = [np.array([a, 0.0, 0.0])]
    weights = [strip_area(nu_edges[0], nu_edges[1])]
    for i in range(1, n - 1):
        rho = c * math.sin(nu[i])
        m_i = math.ceil(2.0 * math.pi * rho / h_target)
        area = strip_area(nu_edges[i], nu_edges[i + 1])
        phi = 2.0 * math.pi * np.arange(m_i) / m_i
        x = a * math.cos(nu[i])
        for p in phi:
            pts.append(np.array([x, rho * math.cos(p), rho * math.sin(p)]))
            weights.append(area / m_i)
        if len(pts) > point_cap:
            raise ResourceBudgetError(f"spheroid exceeds point cap {point_cap}")
    pts.append(np.array([-a, 0.0, 0.0]))
    weights.append(strip_area(nu_edges[-2], nu_edges[-1]))

    pts = np.array(pts)
    return SurfaceDiscretisation(
        pts, np.array(weights), min_spacing(pts), f"spheroid:a={a}:c={c}"
    )


def discretise_torus(R, r, h_target, point_cap=DEFAULT_POINT_CAP):
    """Torus (central radius R, tube radius r, axis z) by rings in the tube
    angle theta, each ring evenly discretised in the azimuth phi.

    Weights come from the exact area element dS = r (R + r cos theta), strip
    between mid-angles shared equally over each ring.
    """
    if not (R > r > 0.0):
        raise InvalidGeometryError(f"need R > r > 0, got R={R}, r={r}")
    if not h_target > 0.0:
        raise InvalidParameterError(f"h_target must be positive, got {h_target}")

    n = math.ceil(2.0 * math.pi * r / h_target)
    theta = 2.0 * math.pi * np.arange(n) / n
    dtheta = 2.0 * math.pi / n

    def strip_area(lo, hi):
        # closed form of the theta-integral of 2*pi*r*(R + r*cos t)
        return 2.0 * math.pi * r * (R * (hi - lo) + r * (math.sin(hi) - math.sin(lo)))

    pts = []
    weights = []
    for i in range(n):
        rho = R + r * math.cos(theta[i])
        m_i = math.ceil(2.0 * math.pi * rho / h_target)
        area = strip_area(theta[i] - dtheta / 2.0, theta[i] + dtheta / 2.0)
        z = r * math.sin(theta[i])
        phi = 2.0 * math.pi * np.arange(m_i) / m_i
        for p in phi:
            pts.append(np.array([rho * math.cos(p), rho * math.sin(p), z]))
            weights.append(area / m_i)
        if len(pts) > point_cap:
            raise ResourceBudgetError(f"torus exceeds point cap {point_cap}")

    pts = np.array(pts)
    return SurfaceDiscretisation(
        pts, np.array(weights), min_spacing(pts), f"torus:R={R}:r={r}"
    )


def make_nearest_pair(generator, h_f, quad_refine=4.0, filter_fraction=0.1,
                      point_cap=DEFAULT_POINT_CAP):
    """Coarse force set plus refined quadrature set for the two-grid method.

    generator(h) must return a SurfaceDiscretisation for a target spacing h.
    The quadrature set uses target spacing h_q = h_f / quad_refine; quadrature
    points within filter_fraction * h_q of their nearest force point are
    removed and the remaining weights rescaled to preserve the total area.
    """
    if not quad_refine >= 1.0:
        raise InvalidParameterError(f"quad_refine must be >= 1, got {quad_refine}")
    if filter_fraction < 0.0:
        raise InvalidParameterError("filter_fraction must be non-negative")

    force = generator(h_f)
    if quad_refine == 1.0 and filter_fraction == 0.0:
        return NearestPair(force, force, 0.0)

    h_q = h_f / quad_refine
    quad_disc = generator(h_q)
    threshold = filter_fraction * h_q
    if threshold > 0.0:
        tree = cKDTree(force.points)
        dist, _ = tree.query(quad_disc.points)
        keep = dist > threshold
        if not keep.any():
            raise DegeneratePairError("filtering removed every quadrature point")
        total = quad_disc.weights.sum()
        pts = quad_disc.points[keep]
        w = quad_disc.weights[keep] * (total / quad_disc.weights[keep].sum())
        # every force point must still see nearby quadrature
        qtree = cKDTree(pts)
        fdist, _ = qtree.query(force.points)
        if (fdist > 2.0 * h_q + threshold).any():
            bad = np.nonzero(fdist > 2.0 * h_q + threshold)[0]
            raise DegeneratePairError(
                f"force points {bad.tolist()} lost all nearby quadrature points"
            )
        quad_disc = SurfaceDiscretisation(pts, w, min_spacing(pts), quad_disc.shape_tag)
    return NearestPair(force, quad_disc, threshold)
