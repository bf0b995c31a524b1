"""Dense Nystrom systems for the resistance, mobility and flow-evaluation
problems, grand resistance matrices and the relative-error metric.

Sign convention: the boundary velocity satisfies
u_j(x[m]) = (1/8 pi mu) sum_n S^eps_jk(x[m], x[n]) F_k[n], with combined
unknowns F = traction * weight, so a unit-velocity translating unit sphere
carries total force 6 pi mu.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from .errors import InvalidGeometryError, InvalidParameterError, NearSingularSystemError
from .kernels import RegParam, reg_stokeslet_blocks

RCOND_THRESHOLD = 1e-12
_ASSEMBLY_CHUNK = 256


@dataclass
class StokesSystem:
    matrix: np.ndarray
    n_points: int
    epsilon: float
    kind: str  # "resistance" | "mobility"


@dataclass
class TractionSolution:
    F: np.ndarray  # (N, 3) combined unknowns traction * weight
    epsilon: float


@dataclass
class MobilityResult:
    U: np.ndarray
    Omega: np.ndarray
    tractions: TractionSolution


def _skew(d):
    return np.array([
        [0.0, -d[2], d[1]],
        [d[2], 0.0, -d[0]],
        [-d[1], d[0], 0.0],
    ])


def _fill_kernel_rows(out, targets, sources, weights, params, row_offset=0):
    """Fill out[3m:3m+3, 3n:3n+3] = S^eps(targets[m], sources[n]) w[n]/(8 pi mu)."""
    scale = 1.0 / (8.0 * math.pi * params.mu)
    n = len(sources)
    for lo in range(0, len(targets), _ASSEMBLY_CHUNK):
        hi = min(lo + _ASSEMBLY_CHUNK, len(targets))
        blocks = reg_stokeslet_blocks(targets[lo:hi], sources, params.epsilon)
        if weights is not None:
            blocks *= weights[None, :, None, None]
        blocks *= scale
        rows = blocks.transpose(0, 2, 1, 3).reshape(3 * (hi - lo), 3 * n)
        out[row_offset + 3 * lo : row_offset + 3 * hi, : 3 * n] = rows


def assemble_nystrom(disc, params):
    """Dense 3N x 3N collocation matrix for the resistance problem."""
    n = disc.n_points
    A = np.empty((3 * n, 3 * n))
    _fill_kernel_rows(A, disc.points, disc.points, disc.weights, params)
    return StokesSystem(A, n, params.epsilon, "resistance")


class FactoredSystem:
    """LU factorisation with a reciprocal-condition gate, reusable for many
    right-hand sides."""

    def __init__(self, system, rcond_threshold=RCOND_THRESHOLD):
        A = system.matrix
        anorm = np.linalg.norm(A, 1)
        lu, piv, info = lapack.dgetrf(A)
        if info != 0:
            raise NearSingularSystemError(
                f"LU factorisation failed (info={info})", epsilon=system.epsilon
            )
        rcond, _ = lapack.dgecon(lu, anorm, norm="1")
        if rcond < rcond_threshold:
            raise NearSingularSystemError(
                f"system near-singular: rcond={rcond:.3e} at eps={system.epsilon}",
                epsilon=system.epsilon,
                rcond=rcond,
            )
        self._lu = (lu, piv)
        self.rcond = float(rcond)
        self.system = system

    def solve(self, rhs):
        return lu_solve(self._lu, rhs)


def _rigid_velocity_rhs(points, U, Omega, x0):
    u = np.asarray(U, dtype=float) + np.cross(np.asarray(Omega, dtype=float), points - x0)
    return u.reshape(-1)


def _totals(points, F, x0):
    F_total = F.sum(axis=0)
    M_total = np.cross(points - x0, F).sum(axis=0)
    return F_total, M_total


def solve_resistance(disc, params, U, Omega, x0=None, factored=None,
                     rcond_threshold=RCOND_THRESHOLD):
    """Prescribe rigid-body motion (U, Omega); return total force, total
    moment about x0, and the traction solution."""
    if x0 is None:
        x0 = disc.centroid()
    x0 = np.asarray(x0, dtype=float)
    if factored is None:
        factored = FactoredSystem(assemble_nystrom(disc, params), rcond_threshold)
    rhs = _rigid_velocity_rhs(disc.points, U, Omega, x0)
    # system unknowns are tractions (weights sit in the matrix); combine here
    F = factored.solve(rhs).reshape(-1, 3) * disc.weights[:, None]
    F_total, M_total = _totals(disc.points, F, x0)
    return F_total, M_total, TractionSolution(F, params.epsilon)


@dataclass
class GrandResistanceMatrix:
    """6x6 block matrix [[A_FU, A_FO], [A_MU, A_MO]] mapping (U, Omega) to
    (F, M)."""

    matrix: np.ndarray

    @property
    def A_FU(self):
        return self.matrix[:3, :3]

    @property
    def A_FO(self):
        return self.matrix[:3, 3:]

    @property
    def A_MU(self):
        return self.matrix[3:, :3]

    @property
    def A_MO(self):
        return self.matrix[3:, 3:]


def grand_resistance(disc, params, x0=None, system=None,
                     rcond_threshold=RCOND_THRESHOLD):
    """Six resistance solves (unit translations and rotations) sharing one
    factorisation."""
    if x0 is None:
        x0 = disc.centroid()
    x0 = np.asarray(x0, dtype=float)
    if system is None:
        system = assemble_nystrom(disc, params)
    factored = FactoredSystem(system, rcond_threshold)
    n = disc.n_points
    rhs = np.zeros((3 * n, 6))
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        rhs[:, i] = _rigid_velocity_rhs(disc.points, e, np.zeros(3), x0)
        rhs[:, 3 + i] = _rigid_velocity_rhs(disc.points, np.zeros(3), e, x0)
    sol = factored.solve(rhs)
    A = np.empty((6, 6))
    for col in range(6):
        F = sol[:, col].reshape(-1, 3) * disc.weights[:, None]
        F_total, M_total = _totals(disc.points, F, x0)
        A[:3, col] = F_total
        A[3:, col] = M_total
    return GrandResistanceMatrix(A)


def analytic_sphere_grm(radius=1.0, mu=1.0):
    """Exact grand resistance matrix of a rigid sphere."""
    if not radius > 0.0:
        raise InvalidGeometryError(f"radius must be positive, got {radius}")
    A = np.zeros((6, 6))
    A[:3, :3] = 6.0 * math.pi * mu * radius * np.eye(3)
    A[3:, 3:] = 8.0 * math.pi * mu * radius**3 * np.eye(3)
    return GrandResistanceMatrix(A)


def analytic_spheroid_grm(a, c, mu=1.0):
    """Exact grand resistance matrix of a prolate spheroid with major
    semi-axis a along x and minor semi-axis c, via the classical axisymmetric
    resistance functions XA, YA, XC, YC."""
    if not (a > c > 0.0):
        raise InvalidGeometryError(f"need a > c > 0, got a={a}, c={c}")
    e = math.sqrt((a - c) * (a + c)) / a
    e2 = e * e
    L = math.log1p(e) - math.log1p(-e)
    XA = (8.0 / 3.0) * e**3 / (-2.0 * e + (1.0 + e2) * L)
    YA = (16.0 / 3.0) * e**3 / (2.0 * e + (3.0 * e2 - 1.0) * L)
    XC = (4.0 / 3.0) * e**3 * (1.0 - e2) / (2.0 * e - (1.0 - e2) * L)
    YC = (4.0 / 3.0) * e**3 * (2.0 - e2) / (-2.0 * e + (1.0 + e2) * L)
    A = np.zeros((6, 6))
    A[:3, :3] = 6.0 * math.pi * mu * a * np.diag([XA, YA, YA])
    A[3:, 3:] = 8.0 * math.pi * mu * a**3 * np.diag([XC, YC, YC])
    return GrandResistanceMatrix(A)


def assemble_mobility(disc, params, x0=None):
    """(3N+6) x (3N+6) augmented system with unknowns (F, U, Omega)."""
    if x0 is None:
        x0 = disc.centroid()
    x0 = np.asarray(x0, dtype=float)
    n = disc.n_points
    size = 3 * n + 6
    A = np.zeros((size, size))
    _fill_kernel_rows(A, disc.points, disc.points, disc.weights, params)
    d = disc.points - x0
    w = disc.weights
    for m in range(n):
        A[3 * m : 3 * m + 3, 3 * n : 3 * n + 3] = -np.eye(3)
        A[3 * m : 3 * m + 3, 3 * n + 3 :] = _skew(d[m])
        # force/moment rows act on combined unknowns (traction * weight)
        A[3 * n : 3 * n + 3, 3 * m : 3 * m + 3] = w[m] * np.eye(3)
        A[3 * n + 3 :, 3 * m : 3 * m + 3] = w[m] * _skew(d[m])
    return StokesSystem(A, n, params.epsilon, "mobility")


def solve_mobility(disc, params, F_ext, M_ext, x0=None, factored=None,
                   rcond_threshold=RCOND_THRESHOLD):
    """Prescribe total force and moment; return rigid-body velocities and the
    traction solution."""
    n = disc.n_points
    if factored is None:
        factored = FactoredSystem(assemble_mobility(disc, params, x0), rcond_threshold)
    rhs = np.zeros(3 * n + 6)
    rhs[3 * n : 3 * n + 3] = F_ext
    rhs[3 * n + 3 :] = M_ext
    sol = factored.solve(rhs)
    F = sol[: 3 * n].reshape(-1, 3) * disc.weights[:, None]
    return MobilityResult(sol[3 * n : 3 * n + 3], sol[3 * n + 3 :],
                          TractionSolution(F, params.epsilon))


def evaluate_flow(tractions, disc, params, query_points):
    """Velocity field induced by a traction solution at arbitrary points."""
    query_points = np.atleast_2d(np.asarray(query_points, dtype=float))
    blocks = reg_stokeslet_blocks(query_points, disc.points, tractions.epsilon)
    scale = 1.0 / (8.0 * math.pi * params.mu)
    return scale * np.einsum("mnjk,nk->mj", blocks, tractions.F)


def relative_error_2norm(A, A_ref):
    """Spectral-norm relative error between two grand resistance matrices."""
    M = A.matrix if isinstance(A, GrandResistanceMatrix) else np.asarray(A)
    M_ref = A_ref.matrix if isinstance(A_ref, GrandResistanceMatrix) else np.asarray(A_ref)
    ref_norm = np.linalg.norm(M_ref, 2)
    if ref_norm == 0.0:
        raise InvalidParameterError("reference matrix is zero")
    return float(np.linalg.norm(M - M_ref, 2) / ref_norm)
