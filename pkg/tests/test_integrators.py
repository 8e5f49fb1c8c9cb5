import math

import numpy as np
import pytest

from phsplit import integrators as I
from phsplit import matcore as M
from phsplit import phmodel as P
from phsplit.errors import SchemeError
from phsplit.schemes import names, preset

ENERGY = [n for n in names() if preset(n).kind != "port"]
PORT = [n for n in names() if preset(n).kind in ("port", "both")]
W = math.sqrt(1000.0)


def test_force_gradient_oscillator(osc):
    f = I.force_gradient_matrices(osc)
    np.testing.assert_allclose(f.C, [[0, W], [-W, 0]], rtol=1e-14)
    np.testing.assert_allclose(f.D, np.diag([2 * W**2, -2 * W**2]), rtol=1e-14)
    assert np.max(np.abs(f.L1D)) <= 1e-12 * W**2


def test_force_gradient_conservative():
    s = P.build_oscillator(d=0.0)[0]
    f = I.force_gradient_matrices(s)
    assert not f.C.any() and not f.D.any()


def test_force_gradient_rigid_body_general(rigid):
    f = I.force_gradient_matrices(rigid)
    assert np.max(np.abs(f.L1D)) > 1.0
    assert np.max(np.abs(M.commutator(rigid.L2, f.D))) > 1.0


@pytest.mark.parametrize("name", ENERGY)
def test_zero_step_is_identity(name, rigid):
    np.testing.assert_array_equal(I.get_context(rigid, name, 0.0).matrix, np.eye(3))


@pytest.mark.parametrize("name", ENERGY)
def test_conservative_steps_preserve_norm(name):
    s = P.build_rigid_body(r=(0, 0, 0))
    x = np.array([0.3, -0.5, 0.8])
    y = I.get_context(s, name, 0.05).apply(x)
    assert np.linalg.norm(y) == pytest.approx(np.linalg.norm(x), abs=1e-12)


def test_ea5a_local_defect_ratio(osc):
    x0 = np.array([0.0, 1.0])
    d = [np.linalg.norm(I.get_context(osc, "ea5-a", h).apply(x0) - I.exact_flow(osc, h, x0)) for h in (0.01, 0.005)]
    assert d[0] / d[1] == pytest.approx(32, rel=0.25)


def test_negative_step_rejected(osc):
    with pytest.raises(SchemeError):
        I.get_context(osc, "ea5-a", -0.1)


def test_context_cached_bitwise(rigid):
    a = I.get_context(rigid, "ea7-b", 0.01)
    b = I.get_context(rigid, "ea7-b", 0.01)
    assert a is b
    x = np.array([1.0, 0.0, 0.0])
    np.testing.assert_array_equal(a.apply(x), b.apply(x))


def test_order6_variants_agree_on_oscillator(osc):
    x = np.array([0.0, 1.0])
    ref = I.get_context(osc, "ea9-a", 0.02).apply(x)
    for v in ("i", "ii"):
        y = I.step_order6_general(I.get_context(osc, "ea6gen-ii", 0.02), x, v)
        np.testing.assert_allclose(y, ref, atol=1e-13)


def test_order6_needs_s_factor(osc):
    with pytest.raises(SchemeError):
        I.step_order6_general(I.get_context(osc, "ea5-a", 0.1), [0.0, 1.0])


def test_exact_flow():
    s = P.PHSystem(np.array([[0.0, 2.0], [-2.0, 0.0]]), np.zeros((2, 2)))
    np.testing.assert_array_equal(I.exact_flow(s, 0.0, [1.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(I.exact_flow(s, math.pi, [1.0, 0.0]), [1.0, 0.0], atol=1e-14)


def test_exact_flow_dissipates(osc):
    x0 = np.array([0.0, 1.0])
    for t in (0.1, 1.0, 5.0):
        assert P.hamiltonian(I.exact_flow(osc, t, x0)) <= 0.5


@pytest.mark.parametrize("name", PORT)
def test_pbs_without_input_is_homogeneous(name, driven):
    system, _ = driven
    zero = P.InputSignal.zero()
    x = np.array([0.3, 0.7])
    np.testing.assert_allclose(I.step_pbs(system, zero, name, 0.0, 0.05, x), I.exact_flow(system, 0.05, x), atol=1e-14)
    assert I.d_pbs(system, zero, name, 0.0, 0.05, x) == 0.0


def test_pbs_zero_step(driven):
    system, u = driven
    x = np.array([0.3, 0.7])
    np.testing.assert_array_equal(I.step_pbs(system, u, "pbs4-a", 1.0, 0.0, x), x)


def test_pbs_zero_port():
    s = P.PHSystem(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.diag([0.0, 1.0]), np.zeros((2, 1)))
    assert I.d_pbs(s, P.cosine_input(5, 3), "pbs4-a", 0.0, 0.1, [1.0, 0.0]) == 0.0


def test_pbs_local_defect_ratio(driven):
    system, u = driven
    x0 = np.array([0.0, 1.0])
    d = [np.linalg.norm(I.step_pbs(system, u, "pbs4-a", 0.0, h, x0)
                        - I.reference_nonautonomous(system, u, 0.0, h, x0)) for h in (0.02, 0.01)]
    assert d[0] / d[1] == pytest.approx(32, rel=0.25)


def test_pbs_rejects_energy_scheme(driven):
    system, u = driven
    with pytest.raises(SchemeError):
        I.step_pbs(system, u, "ea5-a", 0.0, 0.1, [0.0, 1.0])


def test_esq_reduces_without_input(driven):
    system, _ = driven
    x = np.array([0.3, 0.7])
    zero = P.InputSignal.zero()
    np.testing.assert_allclose(I.step_esq(system, zero, "ea5-a", 0.0, 0.05, x),
                               I.get_context(system, "ea5-a", 0.05).apply(x), atol=1e-15)
    np.testing.assert_array_equal(I.step_esq(system, zero, "ea5-a", 0.0, 0.0, x), x)
    assert I.d_esq(system, zero, 0.0, 0.05, x, x) == 0.0


def test_desq_zero_states(driven):
    system, _ = driven
    one = P.InputSignal(lambda t: [1.0], "1")
    assert I.d_esq(system, one, 0.0, 0.1, np.zeros(2), np.zeros(2)) == 0.0


def test_esq_rejects_bad_inner(driven):
    system, u = driven
    for bad in ("tj4", "pbs4-a", "tilde3"):
        with pytest.raises(SchemeError):
            I.step_esq(system, u, bad, 0.0, 0.1, [0.0, 1.0])


def test_reference_trivial_cases(osc):
    x0 = np.array([0.0, 1.0])
    np.testing.assert_array_equal(I.reference_nonautonomous(osc, None, 0.0, 2.0, x0), I.exact_flow(osc, 2.0, x0))
    s = P.PHSystem(np.zeros((2, 2)), np.zeros((2, 2)), np.array([[1.0], [2.0]]))
    one = P.InputSignal(lambda t: [1.0], "1")
    np.testing.assert_allclose(I.reference_nonautonomous(s, one, 1.0, 3.0, x0), x0 + 2.0 * np.array([1.0, 2.0]),
                               atol=1e-12)


def test_supplied_energy_matches_quadrature(driven):
    import scipy.integrate

    system, u = driven
    x0 = np.array([0.0, 1.0])
    e = I.supplied_energy(system, u, [0.0, 0.5], x0)[0]
    y = lambda t: float(system.B[:, 0] @ I.reference_nonautonomous(system, u, 0.0, t, x0)) * u(t)[0]  # noqa: E731
    q = scipy.integrate.quad(y, 0.0, 0.5, epsabs=1e-12, limit=200)[0]
    assert e == pytest.approx(q, abs=1e-10)


def test_stage_energy_increments_sum(osc):
    ctx = I.get_context(osc, "ea5-a", 0.05)
    x = np.array([0.0, 1.0])
    inc = I.stage_energy_increments(ctx, x)
    assert len(inc) == len(ctx.stages)
    assert inc.sum() == pytest.approx(P.hamiltonian(ctx.apply(x)) - 0.5, abs=1e-15)
