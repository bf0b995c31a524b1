"""Extrapolation rule and weight identities, exactness on quadratics and the
extrapolated grand-resistance entry point."""

import numpy as np
import pytest

from regstokes import core, geometry, richardson
from regstokes.errors import InvalidParameterError


def test_rule_validation_and_parse():
    rule = richardson.ExtrapolationRule.parse("1,1.5,2")
    assert rule.multipliers == (1.0, 1.5, 2.0)
    assert richardson.ExtrapolationRule.parse(str(rule)) == rule
    for bad in ((1.0, 1.0, 2.0), (2.0, 1.0, 3.0), (0.0, 1.0, 2.0), (1.0, 2.0)):
        with pytest.raises(InvalidParameterError):
            richardson.ExtrapolationRule(bad)


def test_epsilons_scaling():
    eps = richardson.DEFAULT_RULE.epsilons(0.2)
    assert eps[0] == 0.2 and abs(eps[1] - 0.2 * np.sqrt(2.0)) < 1e-16
    with pytest.raises(InvalidParameterError):
        richardson.DEFAULT_RULE.epsilons(-0.1)


def test_weight_identities_all_rules():
    for rule in richardson.RULE_VARIANTS:
        for eps_base in (0.01, 0.1, 0.4):
            eps = rule.epsilons(eps_base)
            w = richardson.extrapolation_weights(eps)
            assert abs(w.sum() - 1.0) < 1e-12
            assert abs(np.dot(w, eps)) < 1e-12
            assert abs(np.dot(w, np.square(eps))) < 1e-12


def test_weights_match_vandermonde_oracle():
    eps = richardson.DEFAULT_RULE.epsilons(1.0)
    w = richardson.extrapolation_weights(eps)
    V = np.vander(np.asarray(eps), 3, increasing=True).T
    oracle = np.linalg.solve(V, np.array([1.0, 0.0, 0.0]))
    assert np.allclose(w, oracle, atol=1e-10)
    assert np.allclose(w, [6.828427, -8.242641, 2.414214], atol=1e-6)


def test_extrapolation_exact_on_quadratics():
    rng = np.random.default_rng(11)
    for rule in richardson.RULE_VARIANTS:
        eps = rule.epsilons(0.1)
        for _ in range(20):
            a, b, c = rng.normal(size=3)
            values = [a + b * e + c * e * e for e in eps]
            out = richardson.extrapolate(values, eps)
            assert abs(out - a) <= 1e-12 * max(1.0, abs(a))


def test_extrapolate_componentwise():
    eps = (0.1, 0.15, 0.2)
    mats = [np.full((2, 2), 3.0 + 2.0 * e + e * e) for e in eps]
    out = richardson.extrapolate(mats, eps)
    assert out.shape == (2, 2)
    assert np.allclose(out, 3.0, atol=1e-12)
    with pytest.raises(InvalidParameterError):
        richardson.extrapolation_weights((0.1, 0.1, 0.2))


def test_nyr_improves_on_ny():
    disc = geometry.discretise_sphere(0.3)
    ref = core.analytic_sphere_grm()
    ny = core.grand_resistance(disc, core.RegParam(0.2))
    nyr = richardson.nyr_grand_resistance(disc, 0.2)
    assert core.relative_error_2norm(nyr, ref) < core.relative_error_2norm(ny, ref)


def test_nyr_worker_determinism():
    disc = geometry.discretise_sphere(0.4)
    seq = richardson.nyr_grand_resistance(disc, 0.2, workers=1)
    par = richardson.nyr_grand_resistance(disc, 0.2, workers=3)
    assert np.array_equal(seq.matrix, par.matrix)


def test_nyr_mobility_matches_resistance_inverse():
    disc = geometry.discretise_sphere(0.3)
    A = richardson.nyr_grand_resistance(disc, 0.2)
    U0 = np.array([0.0, 0.0, -1.0])
    res = richardson.nyr_mobility(disc, 0.2, richardson.DEFAULT_RULE,
                                  A.A_FU @ U0, np.zeros(3))
    # extrapolating velocities and inverting the extrapolated matrix agree
    # up to the extrapolation residual, not exactly
    assert np.allclose(res.U, U0, rtol=1e-2, atol=1e-8)
    assert np.linalg.norm(res.Omega) < 1e-8
