"""
Steppers for linear pH systems.

Autonomous systems use the energy-associated split ``L1 = -R``,
``L2 = J``; every stage is an exact matrix exponential.  Driven systems use
either the port-based split (drift with frozen input, then homogeneous
flow) or the Simpson-combined scheme (ESQ) around an autonomous stepper.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.integrate

from . import matcore
from .errors import NonFiniteError, QuadratureError, SchemeError, StepError, ValidationError
from .phmodel import InputSignal, PHSystem, hamiltonian
from .schemes import SchemeSpec, preset


@dataclass(frozen=True)
class ForceGradientMatrices:
    """Commutators of ``L1 = -R`` and ``L2 = J`` used by force-gradient stages."""

    C: np.ndarray
    D: np.ndarray
    L1D: np.ndarray
    L1L1C: np.ndarray
    L1L2D: np.ndarray
    L2L2C: np.ndarray
    L2L2D: np.ndarray

    def bracket(self, name: str) -> np.ndarray:
        return getattr(self, name)


# expected parity of each bracket: number of J factors odd -> skew
_PARITY = {
    "C": ("skew", 1, 2),
    "D": ("symmetric", 2, 1),
    "L1D": ("skew", 3, 2),
    "L1L1C": ("skew", 4, 1),
    "L1L2D": ("skew", 3, 2),
    "L2L2C": ("skew", 2, 3),
    "L2L2D": ("symmetric", 1, 4),
}


@functools.lru_cache(maxsize=64)
def _fg_cached(system: PHSystem, tol: float) -> ForceGradientMatrices:
    L1, L2 = system.L1, system.L2
    com = matcore.commutator
    K = com(L1, L2)
    C = com(L1, K)
    D = com(L2, K)
    mats = {
        "C": C,
        "D": D,
        "L1D": com(L1, D),
        "L1L1C": com(L1, com(L1, C)),
        "L1L2D": com(L1, com(L2, D)),
        "L2L2C": com(L2, com(L2, C)),
        "L2L2D": com(L2, com(L2, D)),
    }
    n1 = max(1.0, matcore.spectral_norm(L1))
    n2 = max(1.0, matcore.spectral_norm(L2))
    for name, (kind, k1, k2) in _PARITY.items():
        M = mats[name]
        # round-off in a bracket scales with the product of factor norms
        scale = 2.0 ** (k1 + k2 - 1) * n1**k1 * n2**k2
        got = matcore.symmetry_class(M, tol * scale)
        if got != kind and not (kind == "skew" and matcore.skew_defect(M) <= tol * scale):
            raise ValidationError(f"commutator {name} is {got}, expected {kind}")
        M.setflags(write=False)
    return ForceGradientMatrices(**mats)


def force_gradient_matrices(system: PHSystem, tol: float | None = None) -> ForceGradientMatrices:
    """Return ``C, D, [L1, D]`` and the fifth-order brackets, checking their parity."""
    return _fg_cached(system, matcore.default_tol() if tol is None else tol)


def stage_generators(system: PHSystem, spec: SchemeSpec, h: float) -> list[np.ndarray]:
    """Exponents of the stage flows in acting order (first entry acts first)."""
    if spec.kind == "port":
        raise SchemeError(f"{spec.name} is a port-based scheme; use step_pbs")
    L1, L2 = system.L1, system.L2
    c1, c2 = spec.fg_arrays()
    need_fg = bool(spec.fg) or bool(spec.z_terms) or spec.s_variant is not None
    fgm = force_gradient_matrices(system) if need_fg else None
    Z = None
    if spec.z_terms:
        Z = sum(coef * fgm.bracket(name) for name, coef in spec.z_terms)
    mid = (spec.m - 1) // 2 if spec.s_variant else None
    gens = []
    for j, (aj, bj) in enumerate(zip(spec.a, spec.b)):
        if j == mid:
            Y = aj * h * L1
            W = spec.e52 * h**4 / aj * fgm.L1D
            if spec.s_variant == "ii":
                # matrix product exp(W) exp(Y) exp(-W)
                gens += [-W, Y, W]
            else:
                # matrix product exp(Y/2 + 2W) exp(Y/2 - 2W)
                gens += [0.5 * Y - 2 * W, 0.5 * Y + 2 * W]
        elif aj != 0 or c1[j] != 0:
            G = aj * h * L1
            if c1[j]:
                G = G - c1[j] * h**3 * fgm.C
            gens.append(G)
        if bj != 0:
            G = bj * h * L2
            if c2[j]:
                G = G - c2[j] * h**3 * fgm.C
            if Z is not None:
                G = G - bj * h**5 * Z
            gens.append(G)
    return gens


@dataclass(frozen=True, eq=False)
class StepContext:
    """Cached stage exponentials for one (system, scheme, h) triple."""

    system: PHSystem
    spec: SchemeSpec
    h: float
    stages: tuple = field(repr=False)

    def apply(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        for E in self.stages:
            x = E @ x
        if not np.all(np.isfinite(x)):
            raise NonFiniteError(f"{self.spec.name}: non-finite state at h={self.h}")
        return x

    def apply_stages(self, x) -> list[np.ndarray]:
        """States after every stage, starting with ``x`` itself."""
        out = [np.asarray(x, dtype=float)]
        for E in self.stages:
            out.append(E @ out[-1])
        return out

    @functools.cached_property
    def matrix(self) -> np.ndarray:
        P = np.eye(self.system.n)
        for E in self.stages:
            P = E @ P
        return P


@functools.lru_cache(maxsize=512)
def _context(system: PHSystem, spec: SchemeSpec, h: float) -> StepContext:
    stages = []
    for G in stage_generators(system, spec, h):
        E = matcore.expm(G)
        E.setflags(write=False)
        stages.append(E)
    return StepContext(system, spec, h, tuple(stages))


def _check_h(spec: SchemeSpec, h: float):
    if not np.isfinite(h):
        raise NonFiniteError(f"step size {h} is not finite")
    if h < 0:
        raise SchemeError(f"negative step size {h} is not allowed")


def get_context(system: PHSystem, spec: SchemeSpec | str, h: float) -> StepContext:
    if isinstance(spec, str):
        spec = preset(spec)
    h = float(h)
    _check_h(spec, h)
    return _context(system, spec, h)


def step_autonomous(ctx: StepContext, x) -> np.ndarray:
    """One step ``x -> Phi_h x`` of an energy-associated splitting."""
    return ctx.apply(x)


def step_order6_general(ctx: StepContext, x, variant: str | None = None) -> np.ndarray:
    """Step of a general sixth-order class-a scheme with central ``S`` factor."""
    if ctx.spec.s_variant is None:
        raise SchemeError(f"{ctx.spec.name} has no S factor")
    if variant is not None and variant != ctx.spec.s_variant:
        if variant not in ("i", "ii"):
            raise SchemeError(f"unknown S variant {variant!r}")
        ctx = get_context(ctx.system, replace(ctx.spec, s_variant=variant, name=f"ea6gen-{variant}"), ctx.h)
    return ctx.apply(x)


def exact_flow(system: PHSystem, t: float, x0) -> np.ndarray:
    return matcore.expm(t * system.A) @ np.asarray(x0, dtype=float)


# --- port-based splitting -------------------------------------------------


@functools.lru_cache(maxsize=512)
def _homogeneous(system: PHSystem, tau: float) -> np.ndarray:
    E = matcore.expm(tau * system.A)
    E.setflags(write=False)
    return E


def _require_port(spec: SchemeSpec):
    if spec.kind not in ("port", "both") or spec.fg or spec.z_terms:
        raise SchemeError(f"{spec.name} is not usable as a port-based scheme")


def pbs_step_with_estimate(system: PHSystem, u: InputSignal, spec: SchemeSpec, t0: float, h: float, x):
    """Port-based step; returns ``(x_new, d_pbs)``.

    Drift stages ``x += a_j h B u(t2)`` freeze the input at the clock of the
    homogeneous subproblem; the state is affine in time during a drift, so
    the supplied-energy integral of each drift stage is exact.
    """
    if isinstance(spec, str):
        spec = preset(spec)
    _require_port(spec)
    _check_h(spec, h)
    x = np.array(x, dtype=float)
    t2 = float(t0)
    d = 0.0
    B = system.B
    for aj, bj in zip(spec.a, spec.b):
        if aj != 0:
            dt = aj * h
            v = B @ u(t2)
            d += dt * float(x @ v) + 0.5 * dt * dt * float(v @ v)
            x = x + dt * v
        if bj != 0:
            x = _homogeneous(system, bj * h) @ x
            t2 += bj * h
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"{spec.name}: non-finite state at t={t0}")
    return x, d


def step_pbs(system, u, spec, t0, h, x) -> np.ndarray:
    return pbs_step_with_estimate(system, u, spec, t0, h, x)[0]


def d_pbs(system, u, spec, t0, h, x) -> float:
    """Quadrature-type bound on the energy supplied during one PBS step."""
    return pbs_step_with_estimate(system, u, spec, t0, h, x)[1]


# --- Simpson-combined energy splitting ------------------------------------


def _require_esq_inner(spec: SchemeSpec, inner: bool = True):
    if spec.kind == "port" or not spec.dissipative:
        raise SchemeError(f"{spec.name} cannot serve as an ESQ scheme")
    if inner and spec.fg and any(g.sub != 2 for g in spec.fg):
        raise SchemeError(f"{spec.name} must keep its commutator in the J stages")


def step_esq(system, u, inner, t0, h, x, half=None) -> np.ndarray:
    """Variation of constants with Simpson's rule and a split homogeneous flow.

    ``half`` selects the scheme used for the half step (default: ``inner``).
    """
    inner = preset(inner) if isinstance(inner, str) else inner
    half = inner if half is None else (preset(half) if isinstance(half, str) else half)
    _require_esq_inner(inner)
    _require_esq_inner(half, inner=False)
    x = np.asarray(x, dtype=float)
    if h == 0:
        return x.copy()
    B = system.B
    full = get_context(system, inner, h)
    mid = get_context(system, half, h / 2)
    v0 = B @ u(t0)
    v1 = B @ u(t0 + h / 2)
    v2 = B @ u(t0 + h)
    return full.apply(x + h / 6 * v0) + (2 * h / 3) * mid.apply(v1) + (h / 6) * v2


def d_esq(system, u, t0, h, x, x_new) -> float:
    """Bound ``(|x| + |x_new|)/2 * |B|_2 * Simpson(|u|)`` on supplied energy."""
    q = h * (
        np.linalg.norm(u(t0)) / 6
        + 2 * np.linalg.norm(u(t0 + h / 2)) / 3
        + np.linalg.norm(u(t0 + h)) / 6
    )
    return 0.5 * (np.linalg.norm(x) + np.linalg.norm(x_new)) * matcore.spectral_norm(system.B) * q


# --- references -----------------------------------------------------------


REFERENCE_TOL = 1e-12


def reference_nonautonomous(system: PHSystem, u: InputSignal | None, t0: float, T: float, x0,
                            tol: float = REFERENCE_TOL) -> np.ndarray:
    """Variation of constants with adaptive Gauss-Kronrod quadrature of the convolution."""
    x0 = np.asarray(x0, dtype=float)
    hom = exact_flow(system, T - t0, x0)
    if u is None or system.p == 0 or T == t0:
        return hom
    A, B = system.A, system.B
    scale = max(1.0, float(np.linalg.norm(x0)))

    def integrand(s):
        return matcore.expm((T - s) * A) @ (B @ u(s))

    val, err = scipy.integrate.quad_vec(integrand, t0, T, epsabs=tol * scale, epsrel=0.0, limit=20000)
    if not np.all(np.isfinite(val)) or err > tol * scale:
        raise QuadratureError(f"convolution integral reached only {err:.3g} (wanted {tol * scale:.3g})", err)
    return hom + val


def reference_states(system: PHSystem, u: InputSignal | None, times, x0, tol: float = REFERENCE_TOL) -> np.ndarray:
    """Reference solution at every node of ``times``, interval by interval."""
    times = np.asarray(times, dtype=float)
    out = np.empty((len(times), system.n))
    out[0] = x0
    for k in range(len(times) - 1):
        out[k + 1] = reference_nonautonomous(system, u, times[k], times[k + 1], out[k], tol)
    return out


def supplied_energy(system: PHSystem, u: InputSignal, times, x0, rtol: float = 1e-13) -> np.ndarray:
    """Exact energy ``int y^T u dt`` supplied over each interval of ``times``.

    Integrates the state together with the accumulated supply with a
    high-order adaptive Runge-Kutta method, independently of every splitting
    scheme in this package.
    """
    times = np.asarray(times, dtype=float)
    A, B = system.A, system.B
    n = system.n

    def rhs(t, z):
        x = z[:n]
        v = B @ u(t)
        return np.concatenate([A @ x + v, [x @ v]])

    z0 = np.concatenate([np.asarray(x0, dtype=float), [0.0]])
    scale = max(1.0, float(np.linalg.norm(x0)))
    sol = scipy.integrate.solve_ivp(rhs, (times[0], times[-1]), z0, method="DOP853", t_eval=times,
                                    rtol=rtol, atol=rtol * scale)
    if not sol.success:
        raise QuadratureError(f"supplied-energy integration failed: {sol.message}")
    return np.diff(sol.y[n])


def stage_energy_increments(ctx: StepContext, x) -> np.ndarray:
    """``H`` change across each stage of one step."""
    states = ctx.apply_stages(x)
    H = np.array([hamiltonian(s) for s in states])
    return np.diff(H)
