"""Stokeslet kernels: singular and regularised velocity/pressure tensors and
the cutoff ("blob") function used to smooth the point force.

All evaluations are plain closed-form expressions; no tabulation or cutoff
radius is applied, so kernel values are exact to rounding and safe to use in
extrapolation identities.
"""

import numpy as np

from .errors import InvalidParameterError, SingularEvaluationError

COINCIDENCE_RTOL = 1e-14


def _check_epsilon(epsilon):
    if not epsilon > 0.0:
        raise InvalidParameterError(f"epsilon must be positive, got {epsilon}")


class RegParam:
    """Regularisation width epsilon and viscosity mu (default 1)."""

    __slots__ = ("epsilon", "mu")

    def __init__(self, epsilon, mu=1.0):
        _check_epsilon(epsilon)
        if not mu > 0.0:
            raise InvalidParameterError(f"mu must be positive, got {mu}")
        self.epsilon = float(epsilon)
        self.mu = float(mu)

    def with_epsilon(self, epsilon):
        return RegParam(epsilon, self.mu)

    def __repr__(self):
        return f"RegParam(epsilon={self.epsilon}, mu={self.mu})"


def blob(x, epsilon):
    """Smoothed delta function, 15 eps^4 / (8 pi (|x|^2 + eps^2)^(7/2))."""
    _check_epsilon(epsilon)
    x = np.asarray(x, dtype=float)
    r2 = np.dot(x, x)
    return 15.0 * epsilon**4 / (8.0 * np.pi * (r2 + epsilon**2) ** 3.5)


def singular_stokeslet(x, y):
    """Oseen tensor delta_jk/r + d_j d_k / r^3, d = x - y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r = np.sqrt(np.dot(d, d))
    if r < COINCIDENCE_RTOL * (1.0 + np.sqrt(np.dot(x, x))):
        raise SingularEvaluationError(
            f"stokeslet evaluated at coincident points, |x-y|={r}"
        )
    return np.eye(3) / r + np.outer(d, d) / r**3


def reg_stokeslet(x, y, epsilon):
    """Regularised stokeslet, finite for all x, y including x == y."""
    _check_epsilon(epsilon)
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r2 = np.dot(d, d)
    e2 = epsilon * epsilon
    den = (r2 + e2) ** 1.5
    return (np.eye(3) * (r2 + 2.0 * e2) + np.outer(d, d)) / den


def reg_pressure(x, y, epsilon):
    """Regularised pressure kernel, odd in x - y."""
    _check_epsilon(epsilon)
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r2 = np.dot(d, d)
    e2 = epsilon * epsilon
    return d * (2.0 * r2 + 5.0 * e2) / (r2 + e2) ** 2.5


def reg_stokeslet_blocks(targets, sources, epsilon):
    """Regularised stokeslet for every target/source pair.

    targets: (M, 3), sources: (N, 3); returns (M, N, 3, 3).
    """
    _check_epsilon(epsilon)
    targets = np.asarray(targets, dtype=float)
    sources = np.asarray(sources, dtype=float)
    d = targets[:, None, :] - sources[None, :, :]
    r2 = np.einsum("mnk,mnk->mn", d, d)
    e2 = epsilon * epsilon
    blocks = d[:, :, :, None] * d[:, :, None, :]
    diag = r2 + 2.0 * e2
    for j in range(3):
        blocks[:, :, j, j] += diag
    blocks /= ((r2 + e2) ** 1.5)[:, :, None, None]
    return blocks
