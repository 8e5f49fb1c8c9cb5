"""
Linear port-Hamiltonian systems ``x' = (J - R) x + B u``, ``y = B^T x``
with Hamiltonian ``H(x) = x^T x / 2`` and the two benchmark models.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import matcore
from .errors import DimensionError, NonFiniteError, ValidationError


def _frozen(A: np.ndarray) -> np.ndarray:
    A = np.array(A, dtype=float, copy=True)
    A.setflags(write=False)
    return A


@dataclass(frozen=True, eq=False)
class PHSystem:
    """Constant-coefficient pH system with ``Q = I``.

    ``B`` has shape ``(n, p)``; ``p = 0`` means autonomous.
    """

    J: np.ndarray
    R: np.ndarray
    B: np.ndarray = None
    name: str = "custom"

    def __post_init__(self):
        J = matcore.as_square(self.J, "J")
        R = matcore.as_square(self.R, "R")
        if J.shape != R.shape:
            raise DimensionError(f"J {J.shape} and R {R.shape} differ in shape")
        n = J.shape[0]
        B = np.zeros((n, 0)) if self.B is None else np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(n, 1) if B.size == n else B.reshape(n, -1)
        if B.ndim != 2 or B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got shape {B.shape}")
        if not np.all(np.isfinite(B)):
            raise NonFiniteError("B has non-finite entries")
        object.__setattr__(self, "J", _frozen(J))
        object.__setattr__(self, "R", _frozen(R))
        object.__setattr__(self, "B", _frozen(B))

    @property
    def n(self) -> int:
        return self.J.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @property
    def A(self) -> np.ndarray:
        return self.J - self.R

    @property
    def L1(self) -> np.ndarray:
        """Dissipative split matrix ``-R``."""
        return -self.R

    @property
    def L2(self) -> np.ndarray:
        """Energy-conserving split matrix ``J``."""
        return self.J

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.J))), float(np.max(np.abs(self.R))))


@dataclass(frozen=True, eq=False)
class InputSignal:
    """Deterministic input ``u(t)`` with a human-readable description."""

    func: Callable[[float], np.ndarray]
    description: str = "u(t)"
    p: int = 1

    def __call__(self, t: float) -> np.ndarray:
        u = np.atleast_1d(np.asarray(self.func(float(t)), dtype=float))
        if u.shape != (self.p,):
            raise DimensionError(f"input returned shape {u.shape}, expected ({self.p},)")
        if not np.all(np.isfinite(u)):
            raise NonFiniteError(f"input {self.description} is non-finite at t={t}")
        return u

    @classmethod
    def zero(cls, p: int = 1) -> "InputSignal":
        return cls(lambda t: np.zeros(p), "0", p)


def cosine_input(f0: float, omega: float) -> InputSignal:
    return InputSignal(
        lambda t: np.array([f0 * np.cos(omega * t)]), f"{f0:g}*cos({omega:g}*t)", 1
    )


@dataclass
class ValidationReport:
    skew_defect: float
    symmetry_defect: float
    min_eigenvalue: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def summary(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(self.violations)


def validate(system: PHSystem, tol: float | None = None) -> ValidationReport:
    """Check ``J = -J^T``, ``R = R^T`` and ``R >= 0``.

    ``tol`` is relative to ``max(1, max|entry|)`` of the matrix checked.
    """
    tol = matcore.default_tol() if tol is None else tol
    J, R = system.J, system.R
    sk = matcore.skew_defect(J)
    sy = matcore.symmetric_defect(R)
    violations = []
    j_scale = max(1.0, float(np.max(np.abs(J), initial=0.0)))
    r_scale = max(1.0, float(np.max(np.abs(R), initial=0.0)))
    if sk > tol * j_scale:
        violations.append(f"J not skew-symmetric (defect {sk:.3g})")
    if sy > tol * r_scale:
        violations.append(f"R not symmetric (defect {sy:.3g})")
    Rs = 0.5 * (R + R.T)
    min_eig = float(np.linalg.eigvalsh(Rs)[0]) if system.n else 0.0
    if min_eig < -1e-10 * max(matcore.spectral_norm(Rs), 1e-300):
        violations.append(f"R not positive semidefinite (min eigenvalue {min_eig:.3g})")
    return ValidationReport(sk, sy, min_eig, violations)


def require_valid(system: PHSystem, tol: float | None = None) -> PHSystem:
    report = validate(system, tol)
    if not report.ok:
        raise ValidationError(f"invalid pH system {system.name}: {report.summary()}", report)
    return system


def hamiltonian(x) -> float:
    x = np.asarray(x, dtype=float)
    return 0.5 * float(x @ x)


def output(system: PHSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (system.n,):
        raise DimensionError(f"state has shape {x.shape}, expected ({system.n},)")
    return system.B.T @ x


def build_oscillator(m=1.0, d=1.0, k=1000.0, driven=False, f0=5.0, omega=3.0):
    """Damped (optionally driven) linear oscillator in energy coordinates.

    The state is ``x = (sqrt(k) q, sqrt(m) q')``.  Returns ``(system, u)``;
    ``u`` is ``None`` for the undriven case, where ``p = 0``.
    """
    if not m > 0:
        raise ValueError(f"mass must be positive, got {m}")
    if k < 0 or d < 0:
        raise ValueError("k and d must be nonnegative")
    w = np.sqrt(k / m)
    J = np.array([[0.0, w], [-w, 0.0]])
    R = np.array([[0.0, 0.0], [0.0, d / m]])
    if driven:
        B = np.array([[0.0], [-np.sqrt(1.0 / m)]])
        u = cosine_input(f0, omega)
    else:
        B = np.zeros((2, 0))
        u = None
    name = f"oscillator(m={m:g},d={d:g},k={k:g}" + (f",f0={f0:g},omega={omega:g})" if driven else ")")
    return require_valid(PHSystem(J, R, B, name)), u


RIGID_BODY_JQ = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])


def build_rigid_body(r=(0.0, 5.0, 1000.0), inertia=(1 / 4900, 1.0, 25.0)) -> PHSystem:
    """Linearised rigid body with friction, transformed to ``x = Q^{1/2} p``."""
    r = np.asarray(r, dtype=float)
    inertia = np.asarray(inertia, dtype=float)
    if r.shape != (3,) or inertia.shape != (3,):
        raise DimensionError("rigid body needs three frictions and three inertias")
    if np.any(inertia <= 0):
        raise ValueError("moments of inertia must be positive")
    if np.any(r < 0):
        raise ValueError("friction coefficients must be nonnegative")
    q_half = np.diag(1.0 / np.sqrt(inertia))
    J = q_half @ RIGID_BODY_JQ @ q_half
    R = q_half @ np.diag(r) @ q_half
    name = "rigidbody(r=({}),I=({}))".format(
        ",".join(f"{v:g}" for v in r), ",".join(f"{v:g}" for v in inertia)
    )
    return require_valid(PHSystem(J, R, None, name))


def load_model_file(path) -> PHSystem:
    """Read ``n p`` then n rows of J, n rows of R, n rows of B."""
    with open(path) as fh:
        rows = [line.split() for line in fh if line.strip() and not line.lstrip().startswith("#")]
    if not rows or len(rows[0]) != 2:
        raise ValueError(f"{path}: first line must be 'n p'")
    n, p = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != 3 * n and not (p == 0 and len(body) == 2 * n):
        raise ValueError(f"{path}: expected {3 * n} matrix rows, found {len(body)}")
    try:
        J = np.array([[float(v) for v in row] for row in body[:n]])
        R = np.array([[float(v) for v in row] for row in body[n : 2 * n]])
        if p > 0:
            B = np.array([[float(v) for v in row] for row in body[2 * n : 3 * n]])
        else:
            B = np.zeros((n, 0))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if J.shape != (n, n) or R.shape != (n, n) or B.shape != (n, p):
        raise ValueError(f"{path}: matrix rows have the wrong length")
    return require_valid(PHSystem(J, R, B, f"file:{path}"))


def random_system(rng: np.random.Generator, n: int = 3, p: int = 0, scale: float = 1.0) -> PHSystem:
    """Random valid pH system with ``||J - R||_2`` equal to ``scale``."""
    K = rng.standard_normal((n, n))
    J = K - K.T
    M = rng.standard_normal((n, n))
    R = M @ M.T * rng.uniform(0.2, 1.0)
    s = scale / matcore.spectral_norm(J - R)
    B = rng.standard_normal((n, p)) if p else np.zeros((n, 0))
    return require_valid(PHSystem(J * s, R * s, B, f"random(n={n})"))


def random_special_system(rng: np.random.Generator, scale: float = 1.0) -> PHSystem:
    """Random 3x3 system with ``[R, [J, [R, J]]] = 0``.

    Every 2x2 pH system has this property; an orthogonal change of basis
    of a 2x2 block plus a decoupled damped mode keeps it.
    """
    w = rng.uniform(0.5, 1.5)
    J2 = np.array([[0.0, w], [-w, 0.0]])
    M = rng.standard_normal((2, 2))
    R2 = M @ M.T * 0.5
    J = np.zeros((3, 3))
    R = np.zeros((3, 3))
    J[:2, :2] = J2
    R[:2, :2] = R2
    R[2, 2] = rng.uniform(0.1, 1.0)
    Qm, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    J = Qm @ J @ Qm.T
    J = 0.5 * (J - J.T)
    R = Qm @ R @ Qm.T
    R = 0.5 * (R + R.T)
    s = scale / matcore.spectral_norm(J - R)
    return require_valid(PHSystem(J * s, R * s, None, "random-special(n=3)"))
