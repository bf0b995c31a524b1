"""Richardson extrapolation in the regularisation parameter: evaluate a
quantity at three widths (c1*eps, c2*eps, c3*eps) and combine with weights
that cancel the first- and second-order regularisation error terms.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import core
from .errors import InvalidParameterError


@dataclass(frozen=True)
class ExtrapolationRule:
    """Ordered multipliers (c1, c2, c3) defining the three widths."""

    multipliers: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.multipliers)
        if len(c) != 3:
            raise InvalidParameterError(f"rule needs 3 multipliers, got {len(c)}")
        if not (0.0 < c[0] < c[1] < c[2]):
            raise InvalidParameterError(f"multipliers must be increasing and positive: {c}")
        object.__setattr__(self, "multipliers", c)

    def epsilons(self, eps_base):
        if not eps_base > 0.0:
            raise InvalidParameterError(f"eps_base must be positive, got {eps_base}")
        return tuple(c * eps_base for c in self.multipliers)

    @staticmethod
    def parse(text):
        return ExtrapolationRule(tuple(float(v) for v in text.split(",")))

    def __str__(self):
        return ",".join(f"{c:g}" for c in self.multipliers)


DEFAULT_RULE = ExtrapolationRule((1.0, math.sqrt(2.0), 2.0))

# the rule variants used for the robustness comparison
RULE_VARIANTS = (
    ExtrapolationRule((1.0, math.sqrt(2.0), 2.0)),
    ExtrapolationRule((1.0, 1.5, 2.0)),
    ExtrapolationRule((1.0, 2.0, 3.0)),
    ExtrapolationRule((1.0, 1.25, 1.5)),
    ExtrapolationRule((1.0, math.sqrt(1.5), 1.5)),
)


def extrapolation_weights(eps):
    """Weights (w1, w2, w3) with sum w = 1, sum w*eps = 0, sum w*eps^2 = 0.

    Computed as the Lagrange basis evaluated at zero, which avoids inverting
    the Vandermonde matrix for nearby eps values.
    """
    eps = tuple(float(v) for v in eps)
    if len(eps) != 3:
        raise InvalidParameterError(f"need exactly 3 eps values, got {len(eps)}")
    if any(not v > 0.0 for v in eps):
        raise InvalidParameterError(f"eps values must be positive: {eps}")
    if len(set(eps)) != 3:
        raise InvalidParameterError(f"eps values must be distinct: {eps}")
    w = np.empty(3)
    for i in range(3):
        num = 1.0
        den = 1.0
        for j in range(3):
            if j != i:
                num *= -eps[j]
                den *= eps[i] - eps[j]
        w[i] = num / den
    return w


def extrapolate(values, eps):
    """Weighted combination of three evaluations; applied componentwise when
    the values are arrays."""
    w = extrapolation_weights(eps)
    stacked = np.stack([np.asarray(v, dtype=float) for v in values])
    out = np.tensordot(w, stacked, axes=1)
    return float(out) if out.ndim == 0 else out


def _run_three(tasks, workers):
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=min(3, workers)) as pool:
            futures = [pool.submit(t) for t in tasks]
            return [f.result() for f in futures]
    return [t() for t in tasks]


def nyr_grand_resistance(disc, eps_base, rule=DEFAULT_RULE, mu=1.0, x0=None,
                         workers=None, rcond_threshold=core.RCOND_THRESHOLD):
    """Grand resistance matrix extrapolated from three solves on the same
    discretisation; the solves are independent and may run concurrently."""
    eps = rule.epsilons(eps_base)
    tasks = [
        (lambda e=e: core.grand_resistance(disc, core.RegParam(e, mu), x0=x0,
                                           rcond_threshold=rcond_threshold))
        for e in eps
    ]
    results = _run_three(tasks, workers)
    A = extrapolate([r.matrix for r in results], eps)
    return core.GrandResistanceMatrix(A)


def nyr_mobility(disc, eps_base, rule, F_ext, M_ext, x0=None, mu=1.0,
                 workers=None, rcond_threshold=core.RCOND_THRESHOLD):
    """Mobility velocities extrapolated from three solves; tractions reported
    from the smallest width (diagnostic only)."""
    eps = rule.epsilons(eps_base)
    tasks = [
        (lambda e=e: core.solve_mobility(disc, core.RegParam(e, mu), F_ext, M_ext,
                                         x0=x0, rcond_threshold=rcond_threshold))
        for e in eps
    ]
    results = _run_three(tasks, workers)
    U = extrapolate([r.U for r in results], eps)
    Omega = extrapolate([r.Omega for r in results], eps)
    return core.MobilityResult(U, Omega, results[0].tractions)
