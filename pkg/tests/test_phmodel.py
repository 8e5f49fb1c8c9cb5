import math

import numpy as np
import pytest

from phsplit import phmodel as P
from phsplit.errors import DimensionError, NonFiniteError, ValidationError


def test_oscillator_matrices(osc):
    assert osc.J[0, 1] == pytest.approx(31.6228, abs=1e-4)
    assert osc.R[1, 1] == 1.0
    assert osc.p == 0
    assert P.validate(osc).ok


def test_driven_oscillator_input(driven):
    system, u = driven
    assert system.B[1, 0] == -1.0
    assert u(0.0)[0] == 5.0
    assert abs(u(math.pi / 6)[0]) < 1e-14


def test_undamped_oscillator_has_zero_R():
    system, u = P.build_oscillator(d=0.0)
    assert not system.R.any() and u is None


def test_oscillator_rejects_bad_mass():
    with pytest.raises(ValueError):
        P.build_oscillator(m=0.0)


def test_validate_reports_violations(osc):
    J = osc.J.copy()
    J[0, 1] += 1e-3
    rep = P.validate(P.PHSystem(J, osc.R))
    assert not rep.ok and rep.skew_defect == pytest.approx(1e-3, rel=1e-6)
    rep = P.validate(P.PHSystem(osc.J, np.diag([0.0, -1.0])))
    assert not rep.ok and rep.min_eigenvalue == pytest.approx(-1.0)
    with pytest.raises(ValidationError) as info:
        P.require_valid(P.PHSystem(osc.J, np.diag([0.0, -1.0])))
    assert info.value.report is not None


def test_hamiltonian_and_output(driven):
    system, _ = driven
    assert P.hamiltonian(np.zeros(2)) == 0.0
    assert P.hamiltonian([0.0, 1.0]) == 0.5
    assert P.hamiltonian([1.0, 0.0, 0.0]) == 0.5
    assert P.output(system, [0.0, 1.0])[0] == -1.0
    assert P.output(system, [3.0, 0.0])[0] == 0.0
    with pytest.raises(DimensionError):
        P.output(system, [1.0, 2.0, 3.0])


def test_rigid_body_transform(rigid):
    np.testing.assert_allclose(rigid.J[0, 1], -70.0, rtol=1e-14)
    np.testing.assert_allclose(rigid.J[0, 2], 14.0, rtol=1e-14)
    np.testing.assert_allclose(rigid.J[1, 2], -0.2, rtol=1e-14)
    np.testing.assert_allclose(rigid.R, np.diag([0.0, 5.0, 40.0]), rtol=1e-14)


def test_rigid_body_special_cases():
    assert not P.build_rigid_body(r=(0, 0, 0)).R.any()
    np.testing.assert_array_equal(P.build_rigid_body(r=(0, 0, 0), inertia=(1, 1, 1)).J, P.RIGID_BODY_JQ)
    with pytest.raises(ValueError):
        P.build_rigid_body(inertia=(0, 1, 1))


def test_instantaneous_dissipation(rng):
    for _ in range(50):
        s = P.random_system(rng, int(rng.integers(2, 6)), scale=float(rng.uniform(0.1, 10)))
        x = rng.standard_normal(s.n)
        assert x @ s.A @ x <= 1e-12 * s.scale * (x @ x)


def test_input_signal_checks():
    u = P.InputSignal(lambda t: [t, t], "bad", 1)
    with pytest.raises(DimensionError):
        u(1.0)
    with pytest.raises(NonFiniteError):
        P.InputSignal(lambda t: [math.inf], "inf")(0.0)


def test_system_is_immutable(osc):
    with pytest.raises(ValueError):
        osc.J[0, 0] = 1.0


def test_model_file_roundtrip(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("2 1\n0 2\n-2 0\n0 0\n0 0.5\n0\n1\n")
    s = P.load_model_file(f)
    assert (s.n, s.p) == (2, 1) and s.B[1, 0] == 1.0
    f.write_text("2 0\n0 1\n-1 0\n0 0\n0 1\n")
    assert P.load_model_file(f).p == 0
    f.write_text("2 0\n0 1\n1 0\n0 0\n0 1\n")
    with pytest.raises(ValidationError):
        P.load_model_file(f)


def test_special_system_has_vanishing_bracket(rng):
    from phsplit.integrators import force_gradient_matrices

    s = P.random_special_system(rng)
    assert np.max(np.abs(force_gradient_matrices(s).L1D)) < 1e-12
