"""Two-grid ("nearest-neighbour") discretisation: coarse force degrees of
freedom, fine quadrature set, and the sparse assignment map linking them.

Each quadrature point contributes its weight to the nearest coarse point;
exact ties split the unit row weight equally. The assembled system collocates
at the coarse points, so with identical force and quadrature sets it reduces
entrywise to the Nystrom matrix.
"""

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from . import core
from .errors import EmptyCoarsePointError, InvalidParameterError
from .kernels import reg_stokeslet_blocks

DEFAULT_TIE_TOLERANCE = 1e-12


@dataclass
class NearestMap:
    """rows[q] is a list of (force index, fraction) pairs; fractions are exact
    rationals 1/k so each row sums to exactly 1."""

    rows: list
    n_force: int

    def row_sums(self):
        return [sum(frac for _, frac in row) for row in self.rows]

    def column_groups(self):
        """Per force index: arrays of quadrature indices and fractions."""
        groups = [[] for _ in range(self.n_force)]
        for q, row in enumerate(self.rows):
            for n, frac in row:
                groups[n].append((q, float(frac)))
        return groups

    def to_dense(self):
        nu = np.zeros((len(self.rows), self.n_force))
        for q, row in enumerate(self.rows):
            for n, frac in row:
                nu[q, n] = float(frac)
        return nu


def build_nearest_map(force_points, quad_points, tie_tolerance=DEFAULT_TIE_TOLERANCE,
                      drop_empty=False):
    """Assign every quadrature point to its nearest force point(s).

    Force points within tie_tolerance (relative) of the minimum distance share
    the row weight equally. A force point receiving no quadrature points is an
    error by default; drop_empty=True removes it instead and returns the map
    together with the indices of the kept force points.
    """
    force_points = np.asarray(force_points, dtype=float)
    quad_points = np.asarray(quad_points, dtype=float)
    if len(force_points) == 0 or len(quad_points) == 0:
        raise InvalidParameterError("force and quadrature sets must be nonempty")

    tree = cKDTree(force_points)
    dmin, nearest = tree.query(quad_points)
    balls = tree.query_ball_point(quad_points, dmin * (1.0 + tie_tolerance))
    rows = []
    hit = np.zeros(len(force_points), dtype=bool)
    for q in range(len(quad_points)):
        idx = sorted(balls[q]) if balls[q] else [int(nearest[q])]
        frac = Fraction(1, len(idx))
        rows.append([(n, frac) for n in idx])
        hit[idx] = True

    if not hit.all():
        missing = np.nonzero(~hit)[0]
        if not drop_empty:
            raise EmptyCoarsePointError(
                f"force points {missing.tolist()} received no quadrature points",
                indices=missing,
            )
        kept = np.nonzero(hit)[0]
        remap = -np.ones(len(force_points), dtype=int)
        remap[kept] = np.arange(len(kept))
        rows = [[(int(remap[n]), frac) for n, frac in row] for row in rows]
        return NearestMap(rows, len(kept)), kept
    if drop_empty:
        return NearestMap(rows, len(force_points)), np.arange(len(force_points))
    return NearestMap(rows, len(force_points))


def coarse_weights(nearest_map, quad_weights):
    """Combined weight gathered by each coarse point: W[n] = sum_q nu[q,n] w[q]."""
    W = np.zeros(nearest_map.n_force)
    for q, row in enumerate(nearest_map.rows):
        for n, frac in row:
            W[n] += float(frac) * quad_weights[q]
    return W


def assemble_nearest(pair, params, nearest_map=None, tie_tolerance=DEFAULT_TIE_TOLERANCE):
    """Dense 3N x 3N system collocated at the coarse points with quadrature
    over the fine set.

    Block (m, n) = (1/8 pi mu) sum_q S^eps(x[m], X[q]) w[q] nu[q, n]; unknowns
    are coarse tractions, converted to combined unknowns via coarse_weights.
    """
    if nearest_map is None:
        nearest_map = build_nearest_map(pair.force.points, pair.quad.points,
                                        tie_tolerance=tie_tolerance)
    n = pair.force.n_points
    A = np.zeros((3 * n, 3 * n))
    _fill_nearest_columns(A, pair, params, nearest_map)
    return core.StokesSystem(A, n, params.epsilon, "resistance"), nearest_map


def _fill_nearest_columns(A, pair, params, nearest_map):
    scale = 1.0 / (8.0 * math.pi * params.mu)
    force_pts = pair.force.points
    quad_pts = pair.quad.points
    quad_w = pair.quad.weights
    for ncol, group in enumerate(nearest_map.column_groups()):
        if not group:
            continue
        q_idx = np.array([q for q, _ in group])
        frac = np.array([f for _, f in group])
        blocks = reg_stokeslet_blocks(force_pts, quad_pts[q_idx], params.epsilon)
        col = scale * np.einsum("mqjk,q->mjk", blocks, frac * quad_w[q_idx])
        A[:, 3 * ncol : 3 * ncol + 3] = col.reshape(3 * len(force_pts), 3)


def assemble_nearest_mobility(pair, params, x0=None, nearest_map=None,
                              tie_tolerance=DEFAULT_TIE_TOLERANCE):
    """(3N+6) augmented system over the two-grid discretisation."""
    if nearest_map is None:
        nearest_map = build_nearest_map(pair.force.points, pair.quad.points,
                                        tie_tolerance=tie_tolerance)
    if x0 is None:
        x0 = pair.force.centroid()
    x0 = np.asarray(x0, dtype=float)
    n = pair.force.n_points
    W = coarse_weights(nearest_map, pair.quad.weights)
    A = np.zeros((3 * n + 6, 3 * n + 6))
    _fill_nearest_columns(A[: 3 * n, : 3 * n], pair, params, nearest_map)
    d = pair.force.points - x0
    for m in range(n):
        A[3 * m : 3 * m + 3, 3 * n : 3 * n + 3] = -np.eye(3)
        A[3 * m : 3 * m + 3, 3 * n + 3 :] = core._skew(d[m])
        # force/moment rows act on combined unknowns f[n] * W[n]
        A[3 * n : 3 * n + 3, 3 * m : 3 * m + 3] = W[m] * np.eye(3)
        A[3 * n + 3 :, 3 * m : 3 * m + 3] = W[m] * core._skew(d[m])
    return core.StokesSystem(A, n, params.epsilon, "mobility"), nearest_map, W


def solve_nearest_mobility(pair, params, F_ext, M_ext, x0=None, factored_aux=None,
                           rcond_threshold=core.RCOND_THRESHOLD):
    """Mobility solve on the two-grid system."""
    n = pair.force.n_points
    if factored_aux is None:
        system, _, W = assemble_nearest_mobility(pair, params, x0)
        factored = core.FactoredSystem(system, rcond_threshold)
    else:
        factored, W = factored_aux
    rhs = np.zeros(3 * n + 6)
    rhs[3 * n : 3 * n + 3] = F_ext
    rhs[3 * n + 3 :] = M_ext
    sol = factored.solve(rhs)
    f = sol[: 3 * n].reshape(-1, 3)
    F = f * W[:, None]
    return core.MobilityResult(sol[3 * n : 3 * n + 3], sol[3 * n + 3 :],
                               core.TractionSolution(F, params.epsilon))


def discretisation_checksum(disc):
    digest = hashlib.sha256()
    digest.update(disc.points.tobytes())
    digest.update(disc.weights.tobytes())
    return digest.hexdigest()[:16]


def save_reference_record(path, record):
    with open(path, "w") as fh:
        for key, value in record.items():
            if isinstance(value, float):
                fh.write(f"{key} = {value:.17g}\n")
            else:
                fh.write(f"{key} = {value}\n")


def load_reference_record(path):
    record = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, value = line.split("=", 1)
            record[key.strip()] = value.strip()
    return record


def nearest_reference_run(R, r, h_f, epsilon=1e-6, quad_refine=4.0,
                          filter_fraction=0.1, t_end=98.7, rtol=1e-6, atol=1e-8,
                          out_path=None):
    """Sedimenting-torus reference: two-grid discretisation with disjoint
    force/quadrature sets and a small regularisation width. Persists the final
    z-position as the ground-truth observable when out_path is given."""
    from . import dynamics, geometry  # local import: dynamics depends on this module

    pair = geometry.make_nearest_pair(
        lambda h: geometry.discretise_torus(R, r, h),
        h_f, quad_refine=quad_refine, filter_fraction=filter_fraction,
    )
    config = dynamics.MethodConfig(method="nearest", epsilon=epsilon, pair=pair)
    traj = dynamics.sediment_torus(R, r, h_f, config, t_end=t_end,
                                   rtol=rtol, atol=atol)
    z_end = float(traj.states[-1].x0[2])
    record = {
        "shape": f"torus R={R} r={r}",
        "h_f": float(pair.force.h),
        "h_q": float(pair.quad.h),
        "epsilon": float(epsilon),
        "sdof": pair.force.sdof,
        "quad_points": pair.quad.n_points,
        "observable": "torus_z",
        "value": z_end,
        "t_end": float(t_end),
        "checksum": discretisation_checksum(pair.force),
    }
    if out_path is not None:
        save_reference_record(out_path, record)
    return record
