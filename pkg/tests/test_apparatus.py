import math

import numpy as np
import pytest
from hypothesis import given, settings

from contextuality import apparatus as ap
from contextuality import measurement as ms
from contextuality import pmsquare as pm
from contextuality import qcore
from contextuality.errors import InvalidInputError
from contextuality.measurement import RandomSource

from tests.strategies import pure_states

PROBES = ap.tomographic_probes()


def _port_effects(app):
    """Heisenberg-picture effect per port for mixer-free apparatus: sum of K^dag K."""
    kraus = {(): qcore.I4}
    for kind, data in ap.compile_elements(app.elements):
        if kind == "unitary":
            kraus = {k: data @ m for k, m in kraus.items()}
        elif kind == "split":
            kraus = {k + (s,): p @ m for k, m in kraus.items() for s, p in zip((1, -1), data)}
        else:
            raise AssertionError("mixer not supported here")
    effects = {}
    for raw, k in kraus.items():
        out = app.port_for_raw(raw).outcomes
        effects[out] = effects.get(out, 0) + k.conj().T @ k
    return effects


@pytest.mark.parametrize("element", [
    ap.PhaseShifter(0, 0.3), ap.PhaseShifter(1, -2.0), ap.BeamSplitter(),
    ap.SpinRotator((1, 0, 0), math.pi, 1), ap.SpinRotator((0, 0.6, 0.8), 1.1, 0),
    ap.SpinRotator((0, 1, 0), 0.4),
])
def test_unitary_elements(element):
    assert qcore.is_unitary(element.unitary())


def test_analyzers_are_projective_splits():
    for el in (ap.SpinAnalyzer((0, 1, 0)), ap.PathDetector()):
        plus, minus = el.projectors()
        assert qcore.allclose(plus + minus, qcore.I4)
        assert qcore.allclose(plus @ plus, plus)
        assert qcore.allclose(plus @ minus, np.zeros((4, 4)))


def test_batched_phase_shifter_matches_scalar():
    el = ap.PhaseShifter(1, 0.0)
    batch = el.unitary(np.array([0.2, -1.0]))
    assert qcore.allclose(batch[0], ap.PhaseShifter(1, 0.2).unitary())
    assert qcore.allclose(batch[1], ap.PhaseShifter(1, -1.0).unitary())


def test_scheme_i_bell():
    for d in ("x", "y"):
        res = ap.port_distribution(ap.build_scheme_i(d, d), pm.bell_state())
        assert res.product_distribution()[-1] == pytest.approx(1.0, abs=1e-12)


def test_scheme_i_up_i_uniform():
    res = ap.port_distribution(ap.build_scheme_i("x", "x"), np.array([1, 0, 0, 0], dtype=complex))
    assert all(p == pytest.approx(0.25, abs=1e-12) for p in res.probabilities.values())
    assert len(res.probabilities) == 4


def test_scheme_i_rejects_direction():
    with pytest.raises(InvalidInputError):
        ap.build_scheme_i("z", "x")


def test_scheme_ii_has_spin_flip():
    flips = [el for el in ap.build_scheme_ii().elements
             if isinstance(el, ap.SpinRotator) and el.angle == pytest.approx(math.pi) and el.path is not None]
    assert flips


def test_scheme_ii_bell_support():
    res = ap.port_distribution(ap.build_scheme_ii(), pm.bell_state())
    for (e, f), p in res.probabilities.items():
        if e * f == 1:
            assert p == pytest.approx(0.0, abs=1e-12)
    assert sum(res.probabilities.values()) == pytest.approx(1.0, abs=1e-12)


def test_scheme_ii_port_effects_are_joint_eigenprojectors():
    effects = _port_effects(ap.build_scheme_ii())
    a = qcore.eigenprojectors(pm.observable("XSYP"))
    b = qcore.eigenprojectors(pm.observable("YSXP"))
    total = np.zeros((4, 4))
    for (e, f), eff in effects.items():
        want = a[0 if e > 0 else 1] @ b[0 if f > 0 else 1]
        assert qcore.max_abs_diff(eff, want) <= 1e-10
        total = total + eff
        for (e2, f2), eff2 in effects.items():
            if (e2, f2) != (e, f):
                assert qcore.allclose(eff @ eff2, np.zeros((4, 4)))
    assert qcore.allclose(total, qcore.I4)


def test_scheme_ii_mixed_input_uniform():
    res = ap.port_distribution(ap.build_scheme_ii(), np.eye(4) / 4)
    assert all(p == pytest.approx(0.25, abs=1e-12) for p in res.probabilities.values())


def test_scheme_iii_reuses_front_end():
    front = ap.build_scheme_ii()
    for first in ("XSYP", "YSXP"):
        app = ap.build_scheme_iii(first)
        assert ap.shares_front_end(app, front)
        assert app.elements[: len(front.elements)] == front.elements
    assert not ap.shares_front_end(ap.build_scheme_i(), front)


def test_scheme_iii_ports_distinct_and_labeled():
    app = ap.build_scheme_iii("YSXP")
    assert app.observables == (pm.Label.YSXP, pm.Label.YS, pm.Label.XP)
    assert len({p.outcomes for p in app.ports}) == 8


@settings(max_examples=100)
@given(pure_states())
def test_scheme_iii_triple_product(psi):
    for first in ("XSYP", "YSXP"):
        res = ap.port_distribution(ap.build_scheme_iii(first), psi)
        assert sum(res.probabilities.values()) == pytest.approx(1.0, abs=1e-10)
        for key, p in res.probabilities.items():
            if p > 1e-12:
                assert math.prod(key) == 1


def test_scheme_iii_first_marginal_matches_scheme_ii():
    psi = pm.bell_state()
    ii = ap.port_distribution(ap.build_scheme_ii(), psi)
    for first, idx in (("XSYP", 0), ("YSXP", 1)):
        iii = ap.port_distribution(ap.build_scheme_iii(first), psi)
        for v in (1, -1):
            assert iii.marginal(0)[v] == pytest.approx(ii.marginal(idx)[v], abs=1e-12)


def test_mixer_success_half(np_rng):
    for psi in (pm.bell_state(), qcore.random_pure_state(np_rng)):
        res = ap.port_distribution(ap.build_scheme_iii("XSYP"), psi)
        assert res.mixer_success
        assert all(s == pytest.approx(0.5, abs=1e-12) for s in res.mixer_success.values())


def test_eraser_target_is_eigenstate_of_kept_only():
    xy = pm.observable("XSYP").matrix
    yx = pm.observable("YSXP").matrix
    t = ap.eraser_target(1, -1, pm.Label.XSYP)
    assert np.linalg.norm(t) == pytest.approx(1.0)
    assert qcore.allclose(xy @ t, t, 1e-10)
    assert abs(np.vdot(t, yx @ t)) <= 1e-10
    first = next(a for a in t if abs(a) > 1e-10)
    assert first.imag == pytest.approx(0.0, abs=1e-12) and first.real > 0


def test_probes_span_operator_space():
    vecs = np.array([np.outer(p, p.conj()).reshape(-1) for p in PROBES])
    assert len(PROBES) == 16
    assert np.linalg.matrix_rank(vecs) == 16


@pytest.mark.parametrize("cid", ["C1", "C2", "C5"])
def test_verify_mixer_free_schemes(cid):
    rep = ap.verify_against_abstract(ap.scheme_for_context(cid), pm.context(cid), PROBES, 1e-10)
    assert rep.passed
    assert rep.criterion == "joint-distribution"
    assert rep.max_deviation <= 1e-10


@pytest.mark.parametrize("cid", ["C3", "C4"])
def test_verify_scheme_iii(cid):
    rep = ap.verify_against_abstract(ap.scheme_for_context(cid), pm.context(cid), [pm.bell_state()], 1e-10)
    assert rep.passed
    rep = ap.verify_against_abstract(ap.scheme_for_context(cid), pm.context(cid), PROBES, 1e-10)
    assert rep.passed


def test_verify_arity_mismatch():
    with pytest.raises(InvalidInputError):
        ap.verify_against_abstract(ap.build_scheme_ii(), pm.context("C3"), PROBES)


def test_verify_detects_wrong_apparatus():
    # YS*XP is not the C1 pair
    with pytest.raises(InvalidInputError):
        ap.verify_against_abstract(ap.build_scheme_i("y", "x"), pm.context("C1"), PROBES)
    broken = ap.Apparatus("broken", ap.build_scheme_ii().elements, (pm.Label.XSYP, pm.Label.YSXP),
                          tuple(ap.Port(p.port_id, p.raw, (p.outcomes[1], p.outcomes[0]))
                                for p in ap.build_scheme_ii().ports))
    assert not ap.verify_against_abstract(broken, pm.context("C5"), PROBES).passed


def test_discriminator_equals_series_measurement():
    """Joint discrimination reproduces XSYP-then-YSXP and YSXP-then-XSYP sequences."""
    a, b = pm.observable("XSYP"), pm.observable("YSXP")
    app = ap.build_scheme_ii()
    for probe in PROBES:
        joint = ap.port_distribution(app, probe).probabilities
        ab = ms.joint_distribution(probe, [a, b])
        ba = {(x, y): p for (y, x), p in ms.joint_distribution(probe, [b, a]).items()}
        assert ms.total_variation(joint, ab) <= 1e-10
        assert ms.total_variation(joint, ba) <= 1e-10


def test_batched_table_without_noise_matches_exact():
    app = ap.build_scheme_iii("XSYP")
    keys, exact = ap.port_probability_table(app, pm.bell_state())
    keys2, table = ap.port_probability_table(app, pm.bell_state(), 7, RandomSource(1), 0.0, 0.0)
    assert keys == keys2
    assert np.allclose(table, np.tile(exact, (7, 1)), atol=1e-12)
    _, noisy = ap.port_probability_table(app, pm.bell_state(), 50, RandomSource(1), 0.2, 0.2)
    assert np.allclose(noisy.sum(axis=1), 1, atol=1e-10)
