"""
Experiment harness: trajectories, convergence studies and dissipation traces.

A *method* is either a catalogue preset or one of the ESQ combinations
``"esq"`` (inner ``ea5-a``) and ``"esq-tilde3"`` (same, with the third-order
``tilde3`` scheme on the half step).  ``"esq:<preset>"`` picks another inner
scheme.  Energy presets step autonomous models; port presets and ESQ methods
step driven ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import integrators, matcore
from .errors import IndeterminateOrderError, PHSplitError, SchemeError, StepError
from .matcore import default_tol
from .phmodel import InputSignal, PHSystem, hamiltonian
from .schemes import SchemeSpec, preset

ROUNDOFF = 1e-13
FLOOR_FACTOR = 100.0
# consecutive pairwise orders closer than this count as asymptotic
ORDER_JITTER = 0.5

DEFAULT_T = 5.0
DEFAULT_H_GRID = tuple(0.1 * 2.0**-k for k in range(7))


@dataclass(frozen=True)
class Method:
    """A resolved stepping method."""

    name: str
    kind: str  # "autonomous" | "pbs" | "esq"
    spec: SchemeSpec
    half: SchemeSpec | None = None

    @property
    def driven(self) -> bool:
        return self.kind != "autonomous"


def resolve_method(method: str | SchemeSpec | Method, driven: bool) -> Method:
    """Map a method name to a stepper family, given whether the model is driven."""
    if isinstance(method, Method):
        if method.driven != driven:
            raise SchemeError(f"{method.name} does not fit a {'driven' if driven else 'autonomous'} model")
        return method
    if isinstance(method, str) and (method == "esq" or method.startswith("esq")):
        if method == "esq":
            return Method(method, "esq", preset("ea5-a"))
        if method == "esq-tilde3":
            return Method(method, "esq", preset("ea5-a"), preset("tilde3"))
        if method.startswith("esq:"):
            return Method(method, "esq", preset(method[4:]))
    spec = preset(method) if isinstance(method, str) else method
    if driven:
        if spec.kind not in ("port", "both"):
            raise SchemeError(f"{spec.name} needs an autonomous model; use a port scheme or esq")
        return Method(spec.name, "pbs", spec)
    if spec.kind == "port":
        raise SchemeError(f"{spec.name} is a port-based scheme and needs a driven model")
    return Method(spec.name, "autonomous", spec)


def default_state(system: PHSystem) -> np.ndarray:
    """Initial state used by the benchmark models, ``(1,...,1)/sqrt(n)`` otherwise."""
    if system.name.startswith("oscillator"):
        return np.array([0.0, 1.0])
    if system.name.startswith("rigidbody"):
        return np.array([1.0, 0.0, 0.0])
    return np.ones(system.n) / math.sqrt(system.n)


def step_grid(t0: float, T: float, h: float) -> tuple[np.ndarray, bool]:
    """Time nodes ``t0 + n h``; a shorter final step is appended when needed."""
    if not (h > 0 and math.isfinite(h)):
        raise SchemeError(f"step size must be positive, got {h}")
    if not T > t0:
        raise SchemeError(f"final time {T} must exceed the initial time {t0}")
    q = (T - t0) / h
    N = round(q)
    if abs(q - N) <= 8 * np.finfo(float).eps * max(1.0, q) and N >= 1:
        times = t0 + h * np.arange(N + 1)
        times[-1] = T
        return times, False
    N = math.floor(q)
    times = np.append(t0 + h * np.arange(N + 1), T)
    return times, True


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States and energies at every time node of a run.

    ``estimates`` holds the per-step supply bound for driven runs and
    ``stage_max`` the largest single-stage energy increase for autonomous
    runs recorded with ``stages=True``.
    """

    method: str
    model: str
    times: np.ndarray
    states: np.ndarray
    H: np.ndarray
    partial: bool = False
    estimates: np.ndarray | None = None
    stage_max: np.ndarray | None = None

    def __len__(self):
        return len(self.times)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def dH(self) -> np.ndarray:
        return np.diff(self.H)


def integrate(system: PHSystem, u: InputSignal | None, method, t0: float, T: float, h: float,
              x0=None, stages: bool = False) -> Trajectory:
    """Apply a method repeatedly from ``t0`` to ``T`` with step ``h``.

    Errors raised by a step are re-raised as :class:`StepError` carrying the
    step index.
    """
    driven = u is not None and system.p > 0
    m = resolve_method(method, driven)
    x = default_state(system) if x0 is None else np.asarray(x0, dtype=float)
    if x.shape != (system.n,):
        raise SchemeError(f"initial state has shape {x.shape}, expected ({system.n},)")
    times, partial = step_grid(t0, T, h)
    N = len(times) - 1
    states = np.empty((N + 1, system.n))
    states[0] = x
    est = np.empty(N) if driven else None
    smax = np.empty(N) if stages and not driven else None
    for n in range(N):
        tn, hn = times[n], times[n + 1] - times[n]
        try:
            if m.kind == "autonomous":
                ctx = integrators.get_context(system, m.spec, hn)
                if smax is not None:
                    seq = ctx.apply_stages(x)
                    smax[n] = float(np.max(np.diff([hamiltonian(s) for s in seq]), initial=-np.inf))
                    x = seq[-1]
                else:
                    x = ctx.apply(x)
            elif m.kind == "pbs":
                x, est[n] = integrators.pbs_step_with_estimate(system, u, m.spec, tn, hn, x)
            else:
                x_new = integrators.step_esq(system, u, m.spec, tn, hn, x, half=m.half)
                est[n] = integrators.d_esq(system, u, tn, hn, x, x_new)
                x = x_new
        except StepError:
            raise
        except PHSplitError as exc:
            raise StepError(f"step {n} at t={tn}: {exc}", n) from exc
        if not np.all(np.isfinite(x)):
            raise StepError(f"step {n} at t={tn}: non-finite state", n)
        states[n + 1] = x
    H = 0.5 * np.einsum("ij,ij->i", states, states)
    return Trajectory(m.name, system.name, times, states, H, partial, est, smax)


# --- convergence -----------------------------------------------------------


@dataclass(frozen=True)
class StudyResult:
    """Final-time errors over an h grid and the observed orders they imply.

    ``used`` marks the points entering the fitted ``slope``: points above the
    round-off floor, from the start of the asymptotic tail on.  ``slope_all``
    fits every point above the floor.
    """

    method: str
    model: str
    T: float
    h: np.ndarray
    errors: np.ndarray
    floor: float
    pairwise: np.ndarray
    used: np.ndarray
    slope: float
    slope_all: float

    @property
    def indeterminate(self) -> bool:
        return not np.isfinite(self.slope)


def _lsq_slope(h, e) -> float:
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def fit_order(h, errors, floor: float) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Return ``(pairwise, used, slope, slope_all)`` for a halving grid.

    Points whose error is under ``FLOOR_FACTOR * floor`` are dropped.  Leading
    points are dropped until consecutive pairwise orders agree to
    ``ORDER_JITTER``; the slope is a least-squares fit over what is left.
    """
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if np.any(np.diff(h) >= 0):
        raise ValueError("h values must be strictly decreasing")
    with np.errstate(divide="ignore", invalid="ignore"):
        pairwise = np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
    above = e > FLOOR_FACTOR * floor
    # usable points form a prefix of the grid; anything after the first floor hit is dropped
    stop = int(np.argmin(above)) if not above.all() else len(e)
    if stop < 2:
        raise IndeterminateOrderError(f"only {stop} error(s) above the round-off floor {floor:.3g}")
    slope_all = _lsq_slope(h[:stop], e[:stop])
    orders = pairwise[: stop - 1]
    start = 0
    for k in range(len(orders) - 1):
        if abs(orders[k + 1] - orders[k]) > ORDER_JITTER:
            start = k + 1
    used = np.zeros(len(e), dtype=bool)
    used[start:stop] = True
    return pairwise, used, _lsq_slope(h[used], e[used]), slope_all


def convergence_study(system: PHSystem, u: InputSignal | None, methods, h_grid=DEFAULT_H_GRID,
                      T: float = DEFAULT_T, t0: float = 0.0, x0=None) -> list[StudyResult]:
    """Errors at ``T`` against the exact (or variation-of-constants) solution."""
    if isinstance(methods, (str, SchemeSpec, Method)):
        methods = [methods]
    x0 = default_state(system) if x0 is None else np.asarray(x0, dtype=float)
    driven = u is not None and system.p > 0
    if driven:
        ref = integrators.reference_nonautonomous(system, u, t0, T, x0)
    else:
        ref = integrators.exact_flow(system, T - t0, x0)
    h = np.asarray(h_grid, dtype=float)
    out = []
    for method in methods:
        errs, peak = [], 0.0
        for hk in h:
            tr = integrate(system, u, method, t0, T, hk, x0=x0)
            errs.append(float(np.linalg.norm(tr.states[-1] - ref)))
            peak = max(peak, float(np.max(np.linalg.norm(tr.states, axis=1))))
        errs = np.array(errs)
        floor = ROUNDOFF * peak
        name = resolve_method(method, driven).name
        try:
            pairwise, used, slope, slope_all = fit_order(h, errs, floor)
        except IndeterminateOrderError:
            with np.errstate(divide="ignore", invalid="ignore"):
                pairwise = np.log2(errs[:-1] / errs[1:])
            used, slope, slope_all = np.zeros(len(h), dtype=bool), math.nan, math.nan
        out.append(StudyResult(name, system.name, T, h, errs, floor, pairwise, used, slope, slope_all))
    return out


def require_order(result: StudyResult) -> float:
    if result.indeterminate:
        raise IndeterminateOrderError(f"{result.method}: all errors at the round-off floor")
    return result.slope


# --- dissipation -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DissipationTrace:
    """Per-step energy balance of a run.

    For driven runs ``d_per_h`` is the method's supply bound and
    ``supplied_rate`` the exact supplied energy per step along the reference
    solution, both divided by the step size.
    """

    trajectory: Trajectory
    dH_per_h: np.ndarray
    d_per_h: np.ndarray | None = None
    supplied_rate: np.ndarray | None = None
    tol: float = field(default=1e-12)

    @property
    def times(self) -> np.ndarray:
        return self.trajectory.times

    @property
    def max_dH_per_h(self) -> float:
        return float(np.max(self.dH_per_h))

    @property
    def excess(self) -> np.ndarray:
        """Per-step energy gain beyond what the dissipation inequality allows."""
        tr = self.trajectory
        gain = tr.dH if tr.estimates is None else tr.dH - tr.estimates
        return gain

    @property
    def violations(self) -> np.ndarray:
        tr = self.trajectory
        scale = max(1.0, float(tr.H[0]))
        return self.excess > self.tol * scale

    @property
    def first_violation(self) -> float | None:
        """End time of the first step that breaks the inequality, if any."""
        idx = np.flatnonzero(self.violations)
        return float(self.times[idx[0] + 1]) if idx.size else None


def dissipation_study(system: PHSystem, u: InputSignal | None, method, h: float, T: float = DEFAULT_T,
                      t0: float = 0.0, x0=None, stages: bool = False, tol: float | None = None) -> DissipationTrace:
    tr = integrate(system, u, method, t0, T, h, x0=x0, stages=stages)
    steps = tr.steps
    dH = tr.dH / steps
    d = sup = None
    if tr.estimates is not None:
        d = tr.estimates / steps
        sup = integrators.supplied_energy(system, u, tr.times, tr.states[0]) / steps
    return DissipationTrace(tr, dH, d, sup, default_tol() if tol is None else tol)


# --- one-step defects --------------------------------------------------------


def one_step_defect(system: PHSystem, u: InputSignal | None, method, h: float, t0: float = 0.0, x0=None) -> float:
    """Distance between one step and the exact solution.

    Autonomous methods are compared as matrices in the spectral norm; driven
    methods act on ``x0``.
    """
    driven = u is not None and system.p > 0
    m = resolve_method(method, driven)
    if m.kind == "autonomous":
        ctx = integrators.get_context(system, m.spec, h)
        return float(np.linalg.norm(ctx.matrix - matcore.expm(h * system.A), 2))
    x0 = default_state(system) if x0 is None else np.asarray(x0, dtype=float)
    tr = integrate(system, u, m, t0, t0 + h, h, x0=x0)
    ref = integrators.reference_nonautonomous(system, u, t0, t0 + h, x0)
    return float(np.linalg.norm(tr.states[-1] - ref))


def defect_ratios(system: PHSystem, u: InputSignal | None, method, h_grid) -> np.ndarray:
    """Ratios ``defect(h) / defect(h/2)`` over a halving grid."""
    d = np.array([one_step_defect(system, u, method, hk) for hk in h_grid])
    return d[:-1] / d[1:]


# --- property suites -----------------------------------------------------------

DEFECT_PAIR = (0.2, 0.1)


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str


def _random_sym_skew(rng, n):
    M = rng.standard_normal((n, n))
    K = rng.standard_normal((n, n))
    return M + M.T, K - K.T


def check_parity(rng: np.random.Generator, trials: int = 100) -> PropertyResult:
    """Odd-length brackets of a symmetric and a skew matrix are skew iff the skew count is odd.

    Only odd lengths occur in the expansion of a symmetric scheme; even
    lengths flip the rule.
    """
    bad = 0
    for _ in range(trials):
        n = int(rng.integers(2, 7))
        S_, K = _random_sym_skew(rng, n)
        depth = int(rng.choice([3, 5]))
        word = rng.integers(0, 2, size=depth)
        # an innermost [X, X] would make the whole bracket vanish
        word[-1] = 1 - word[-2]
        X = matcore.nested_commutator([K if w else S_ for w in word])
        expect = "skew" if word.sum() % 2 else "symmetric"
        tol = 1e-10 * max(1.0, float(np.max(np.abs(X))))
        # for n = 2 some brackets vanish identically; zero has both parities
        if np.max(np.abs(X)) > tol and matcore.symmetry_class(X, tol) != expect:
            bad += 1
    return PropertyResult("commutator parity", bad == 0, f"{trials - bad}/{trials} brackets classified correctly")


def check_jacobi(rng: np.random.Generator, trials: int = 100) -> PropertyResult:
    com = matcore.commutator
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 7))
        X, Y, Z = (rng.standard_normal((n, n)) for _ in range(3))
        res = com(X, com(Y, Z)) + com(Y, com(Z, X)) + com(Z, com(X, Y))
        scale = np.linalg.norm(X, 2) * np.linalg.norm(Y, 2) * np.linalg.norm(Z, 2)
        worst = max(worst, float(np.max(np.abs(res))) / scale)
    return PropertyResult("Jacobi identity", bool(worst <= 1e-12), f"worst relative residual {worst:.2e}")


def check_skew_nullity(rng: np.random.Generator, trials: int = 100) -> PropertyResult:
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 7))
        _, K = _random_sym_skew(rng, n)
        x = rng.standard_normal(n)
        worst = max(worst, abs(float(x @ K @ x)) / (np.linalg.norm(K, 2) * float(x @ x)))
    return PropertyResult("skew quadratic form", bool(worst <= 1e-12), f"worst |x'Kx|/(|K||x|^2) {worst:.2e}")


def check_expm(rng: np.random.Generator, trials: int = 50) -> PropertyResult:
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 7))
        X = rng.standard_normal((n, n))
        X *= rng.uniform(0.1, 2.0) / np.linalg.norm(X, 2)
        E = matcore.expm(X)
        worst = max(worst, float(np.linalg.norm(E - matcore.taylor_expm(X), 2) / np.linalg.norm(E, 2)))
    return PropertyResult("expm vs Taylor oracle", bool(worst <= 1e-12), f"worst relative error {worst:.2e}")


def check_catalogue() -> PropertyResult:
    from .schemes import check_scheme, names

    bad = [n for n in names() if not check_scheme(preset(n)).ok]
    return PropertyResult("scheme coefficients", not bad, "all presets consistent" if not bad else f"failed: {bad}")


def defect_systems(rng: np.random.Generator):
    """Random general, special (``[L1, D] = 0``) and driven 3x3 systems.

    ``|A|_2 = 2`` keeps the sixth-order defects at ``DEFECT_PAIR`` clear of
    round-off while staying asymptotic.
    """
    from .phmodel import cosine_input, random_special_system, random_system

    return (random_system(rng, 3, scale=2.0), random_special_system(rng, scale=2.0),
            random_system(rng, 3, p=1, scale=2.0), cosine_input(1.0, 1.3))


def check_defect_orders(rng: np.random.Generator, tol: float = 0.25) -> list[PropertyResult]:
    """One-step defect ratio ``2^(p+1)`` for every preset at its declared order."""
    from .schemes import names

    general, special, driven, u = defect_systems(rng)
    out = []
    for name in names():
        spec = preset(name)
        if spec.kind == "port":
            r = defect_ratios(driven, u, name, DEFECT_PAIR)[0]
        else:
            r = defect_ratios(general if spec.hypothesis == "general" else special, None, name, DEFECT_PAIR)[0]
        target = 2.0 ** (spec.order + 1)
        ok = bool(abs(r / target - 1) <= tol)
        out.append(PropertyResult(f"defect order {name}", ok, f"ratio {r:.2f}, expected {target:g}"))
    return out


def property_suites(seed: int = 0) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    results = [check_parity(rng), check_jacobi(rng), check_skew_nullity(rng), check_expm(rng), check_catalogue()]
    results += check_defect_orders(rng)
    return results


DEFECT_GRID = tuple(0.1 * 2.0**-k for k in range(7))
DEFECT_FLOOR = 1e-14


def numeric_defect_order(spec, system: PHSystem, u: InputSignal | None = None, h_grid=DEFECT_GRID) -> int:
    """Global order implied by the one-step defect over a halving grid.

    Defects under ``DEFECT_FLOOR`` are ignored and the usable tail is picked
    as in :func:`fit_order`; the local slope minus one is rounded.
    """
    h = np.asarray(h_grid, dtype=float)
    d = np.array([one_step_defect(system, u, spec, hk) for hk in h])
    if not np.any(d > DEFECT_FLOOR):
        raise IndeterminateOrderError(f"defect below {DEFECT_FLOOR:g} at every h")
    _, _, slope, _ = fit_order(h, d, DEFECT_FLOOR / FLOOR_FACTOR)
    return int(round(slope - 1))
