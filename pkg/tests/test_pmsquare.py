import itertools

import numpy as np
import pytest
from hypothesis import given

from contextuality import pmsquare as pm
from contextuality import qcore
from contextuality.errors import InvalidInputError
from contextuality.pmsquare import Label

from tests.strategies import density_matrices


def _trace_value(rho, mats):
    prod = np.eye(4)
    for m in mats:
        prod = prod @ m
    return np.einsum("ij,ji->", rho, prod).real


def test_bell_state_amplitudes_and_norm():
    psi = pm.bell_state()
    assert np.isclose(np.linalg.norm(psi), 1, atol=1e-12)
    # (|down,I> - |up,II>)/sqrt2, index = 2*spin + path
    assert np.allclose(psi, [0, -1 / np.sqrt(2), 1 / np.sqrt(2), 0])


@pytest.mark.parametrize("a", [qcore.SX, qcore.SY, qcore.SZ])
def test_bell_state_anticorrelated(a):
    psi = pm.bell_state()
    op = qcore.tensor(a, a)
    assert np.isclose((psi.conj() @ op @ psi).real, -1, atol=1e-12)


@pytest.mark.parametrize("label", list(Label))
def test_observables_hermitian_involutions(label):
    m = pm.observable(label).matrix
    assert qcore.is_hermitian(m)
    assert qcore.allclose(m @ m, qcore.I4)


def test_observable_matrices():
    assert qcore.allclose(pm.observable("XSYP").matrix, qcore.tensor(qcore.SX, qcore.SY))
    assert qcore.allclose(pm.observable(Label.YP).matrix, qcore.tensor(qcore.I2, qcore.SY))
    zz = pm.observable("XSYP").matrix @ pm.observable("YSXP").matrix
    assert qcore.allclose(pm.observable("ZSZP").matrix, zz)
    assert qcore.commutes(pm.observable("XS").matrix, pm.observable("YP").matrix)


def test_unknown_label():
    with pytest.raises(InvalidInputError):
        pm.observable("QQ")


def test_contexts_layout():
    cs = pm.contexts()
    assert [c.id for c in cs] == ["C1", "C2", "C3", "C4", "C5"]
    assert [c.coefficient for c in cs] == [-1, -1, 1, 1, -1]
    assert cs[2].labels == (Label.XSYP, Label.XS, Label.YP)
    assert cs[3].labels == (Label.YSXP, Label.YS, Label.XP)


@pytest.mark.parametrize("c", pm.contexts(), ids=lambda c: c.id)
def test_contexts_mutually_commute(c):
    for a, b in itertools.combinations(c.observables, 2):
        assert qcore.commutes(a.matrix, b.matrix, 1e-12)


def test_identity_products():
    assert qcore.allclose(pm.context("C3").product_matrix(), qcore.I4)
    assert qcore.allclose(pm.context("C4").product_matrix(), qcore.I4)
    assert qcore.allclose(pm.context("C5").product_matrix(), qcore.tensor(qcore.SZ, qcore.SZ))


def test_bell_context_values():
    psi = pm.bell_state()
    vals = [pm.context_expectation(psi, c) for c in pm.contexts()]
    assert np.allclose(vals, [-1, -1, 1, 1, -1], atol=1e-12)


def test_ideal_values():
    psi = pm.bell_state()
    assert abs(pm.ideal_inequality_value(psi, "eq6") - 5) <= 1e-12
    assert abs(pm.ideal_inequality_value(psi, "eq7") - 3) <= 1e-12
    assert abs(pm.ideal_inequality_value(np.eye(4) / 4, "eq6") - 2) <= 1e-12


def test_ideal_value_matches_trace_oracle(bell_rho):
    xs, ys = qcore.tensor(qcore.SX, qcore.I2), qcore.tensor(qcore.SY, qcore.I2)
    xp, yp = qcore.tensor(qcore.I2, qcore.SX), qcore.tensor(qcore.I2, qcore.SY)
    xy, yx = qcore.tensor(qcore.SX, qcore.SY), qcore.tensor(qcore.SY, qcore.SX)
    oracle = (-_trace_value(bell_rho, [xs, xp]) - _trace_value(bell_rho, [ys, yp])
              - _trace_value(bell_rho, [xy, yx]))
    assert np.isclose(oracle, 3)
    assert np.isclose(pm.ideal_inequality_value(bell_rho, pm.Inequality.REDUCED), oracle, atol=1e-12)


@given(density_matrices())
def test_full_minus_reduced_is_two(rho):
    diff = pm.ideal_inequality_value(rho, "eq6") - pm.ideal_inequality_value(rho, "eq7")
    assert abs(diff - 2) <= 1e-10


def test_invalid_state_rejected():
    with pytest.raises(InvalidInputError):
        pm.ideal_inequality_value(np.ones(4), "eq6")
    with pytest.raises(InvalidInputError):
        pm.ideal_inequality_value(pm.bell_state(), "eq9")
