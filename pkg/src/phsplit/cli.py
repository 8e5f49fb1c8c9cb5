"""
Command-line front end.

    phsplit schemes list
    phsplit run --model oscillator --scheme ea5-a --h 0.01 --t-end 5
    phsplit converge --scheme ea5-a --scheme ea7-a --h-grid 0..5 --plot
    phsplit dissipation --scheme tj4 --h 0.09
    phsplit selftest --seed 0

Exit codes: 0 success, 2 configuration error, 3 numeric failure (including
a failing self test).
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics
from .errors import (
    DimensionError,
    IndeterminateOrderError,
    NonFiniteError,
    QuadratureError,
    SchemeError,
    StepError,
    UnknownSchemeError,
    ValidationError,
)
from .phmodel import InputSignal, PHSystem, build_oscillator, build_rigid_body, load_model_file
from .schemes import names, preset

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    """Invalid command-line configuration; the message names the field."""


@dataclass
class RunConfig:
    model: str = "oscillator"
    schemes: list = field(default_factory=list)
    t0: float = 0.0
    t_end: float = diagnostics.DEFAULT_T
    h: float | None = None
    h_grid: tuple = (0, 6)
    driven: bool = False
    f0: float = 5.0
    omega: float = 3.0
    m: float = 1.0
    d: float = 1.0
    k: float = 1000.0
    r: tuple = (0.0, 5.0, 1000.0)
    inertia: tuple = (1 / 4900, 1.0, 25.0)
    model_file: str | None = None
    out: str | None = None
    fmt: str = "csv"
    plot: str | None = None
    seed: int = 0

    def validate(self, need_h: bool = False, single: bool = False):
        if not self.schemes:
            raise ConfigError("--scheme: at least one scheme is required")
        if single and len(self.schemes) != 1:
            raise ConfigError("--scheme: this command takes exactly one scheme")
        for s in self.schemes:
            diagnostics.resolve_method(s, self.is_driven) if s.startswith("esq") else preset(s)
        if need_h and (self.h is None or not self.h > 0 or not math.isfinite(self.h)):
            raise ConfigError(f"--h: step size must be positive, got {self.h}")
        if not self.t_end > self.t0:
            raise ConfigError(f"--t-end: must exceed --t0 ({self.t_end} <= {self.t0})")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"--format: expected csv or json, got {self.fmt!r}")

    @property
    def is_driven(self) -> bool:
        return self.driven or (self.model == "file" and self.model_file is not None and self._file_p() > 0)

    def _file_p(self) -> int:
        with open(self.model_file) as fh:
            first = fh.readline().split()
        return int(first[1]) if len(first) == 2 else 0

    def h_values(self) -> np.ndarray:
        k0, k1 = self.h_grid
        return np.array([0.1 * 2.0**-k for k in range(k0, k1 + 1)])


def build_model(cfg: RunConfig) -> tuple[PHSystem, InputSignal | None]:
    try:
        if cfg.model == "oscillator":
            return build_oscillator(cfg.m, cfg.d, cfg.k, cfg.driven, cfg.f0, cfg.omega)
        if cfg.model == "rigidbody":
            if cfg.driven:
                raise ConfigError("--driven: the rigid body has no input port")
            return build_rigid_body(cfg.r, cfg.inertia), None
        if cfg.model == "file":
            if not cfg.model_file:
                raise ConfigError("--model-file: required for --model file")
            system = load_model_file(cfg.model_file)
            if system.p == 0:
                return system, None
            f0, om, p = cfg.f0, cfg.omega, system.p
            u = InputSignal(lambda t: np.full(p, f0 * np.cos(om * t)), f"{f0:g}*cos({om:g}*t)", p)
            return system, u
    except (ValidationError, DimensionError, ValueError, OSError) as exc:
        raise ConfigError(f"--model: {exc}") from exc
    raise ConfigError(f"--model: unknown model {cfg.model!r}")


# --- writers -----------------------------------------------------------------


def _f(v) -> str:
    """Shortest round-trip float text; empty for missing values."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def trajectory_table(trace: diagnostics.DissipationTrace) -> tuple[list, list]:
    tr = trace.trajectory
    n = tr.states.shape[1]
    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + ["H", "dH_per_h"]
    driven = trace.d_per_h is not None
    if driven:
        header += ["d_est_per_h", "supplied_rate"]
    rows = []
    for i in range(len(tr.times)):
        row = [tr.times[i], *tr.states[i], tr.H[i], None if i == 0 else trace.dH_per_h[i - 1]]
        if driven:
            row += [None, None] if i == 0 else [trace.d_per_h[i - 1], trace.supplied_rate[i - 1]]
        rows.append(row)
    return header, rows


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else _f(v) for v in row) + "\n")
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, str):
        return v
    return None if v is None or math.isnan(float(v)) else float(v)


def _json(obj) -> str:
    return json.dumps(obj) + "\n"


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _plot_path(cfg: RunConfig) -> str | None:
    if cfg.plot is None:
        return None
    if cfg.plot:
        return cfg.plot
    return str(Path(cfg.out).with_suffix(".svg")) if cfg.out else "phsplit.svg"


def _save_svg(fig, path: str):
    import matplotlib

    matplotlib.rcParams["svg.hashsalt"] = "phsplit"
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_convergence(results, path: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    for r in results:
        ax.loglog(r.h, r.errors, "o-", label=r.method)
    ax.set_xlabel("h")
    ax.set_ylabel("error at T")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    _save_svg(fig, path)
    plt.close(fig)


def plot_dissipation(trace: diagnostics.DissipationTrace, path: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = trace.times[1:]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(t, trace.dH_per_h, label="dH/h")
    if trace.d_per_h is not None:
        ax.plot(t, trace.d_per_h, "--", label="estimate/h")
        ax.plot(t, trace.supplied_rate, ":", label="supplied/h")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("t")
    ax.legend()
    _save_svg(fig, path)
    plt.close(fig)


# --- commands ------------------------------------------------------------------


def cmd_schemes_list() -> str:
    header = ["name", "class", "stages", "order", "positive", "dissipative"]
    rows = []
    for name in names():
        s = preset(name)
        yn = lambda flag: "yes" if flag else "no"  # noqa: E731
        rows.append([name, s.cls or "—", str(s.n_stages), str(s.order), yn(s.positive), yn(s.dissipative)])
    return "\n".join(" | ".join(r) for r in [header] + rows) + "\n"


def _trace(cfg: RunConfig) -> diagnostics.DissipationTrace:
    system, u = build_model(cfg)
    return diagnostics.dissipation_study(system, u, cfg.schemes[0], cfg.h, cfg.t_end, cfg.t0)


def _trace_text(cfg: RunConfig, trace, summary: dict | None) -> str:
    header, rows = trajectory_table(trace)
    if cfg.fmt == "json":
        obj = {
            "scheme": trace.trajectory.method,
            "model": trace.trajectory.model,
            "partial_final_step": trace.trajectory.partial,
            "columns": header,
            "rows": [[_json_value(v) for v in row] for row in rows],
        }
        if summary is not None:
            obj["summary"] = summary
        return _json(obj)
    text = _csv(header, rows)
    if summary is not None:
        text += "# summary,max_dH_per_h={},first_violation={}\n".format(
            _f(summary["max_dH_per_h"]),
            "none" if summary["first_violation"] is None else _f(summary["first_violation"]),
        )
    return text


def cmd_run(cfg: RunConfig) -> str:
    cfg.validate(need_h=True, single=True)
    trace = _trace(cfg)
    if (p := _plot_path(cfg)) is not None:
        plot_dissipation(trace, p)
    return _trace_text(cfg, trace, None)


def cmd_dissipation(cfg: RunConfig) -> tuple[str, str]:
    cfg.validate(need_h=True, single=True)
    trace = _trace(cfg)
    summary = {"max_dH_per_h": trace.max_dH_per_h, "first_violation": trace.first_violation}
    if (p := _plot_path(cfg)) is not None:
        plot_dissipation(trace, p)
    line = "max dH/h = {:.6g}, first violation: {}".format(
        summary["max_dH_per_h"], "none" if summary["first_violation"] is None else f"t = {summary['first_violation']:.6g}"
    )
    return _trace_text(cfg, trace, summary), line


def cmd_converge(cfg: RunConfig) -> str:
    cfg.validate()
    system, u = build_model(cfg)
    results = diagnostics.convergence_study(system, u, cfg.schemes, cfg.h_values(), cfg.t_end, cfg.t0)
    if (p := _plot_path(cfg)) is not None:
        plot_convergence(results, p)
    if cfg.fmt == "json":
        return _json([
            {
                "scheme": r.method,
                "model": r.model,
                "T": r.T,
                "h": [float(v) for v in r.h],
                "error": [float(v) for v in r.errors],
                "pairwise_order": [None] + [_json_value(v) for v in r.pairwise],
                "used_in_fit": [bool(v) for v in r.used],
                "fitted_slope": _json_value(r.slope),
            }
            for r in results
        ])
    rows = []
    for r in results:
        for i, (hk, ek) in enumerate(zip(r.h, r.errors)):
            rows.append([r.method, hk, ek, None if i == 0 else r.pairwise[i - 1]])
    text = _csv(["scheme", "h", "error", "pairwise_order"], rows)
    text += _csv(["scheme", "fitted_slope"], [[r.method, r.slope] for r in results])
    return text


def cmd_selftest(seed: int) -> tuple[str, bool]:
    results = diagnostics.property_suites(seed)
    lines = [f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}" for r in results]
    ok = all(r.passed for r in results)
    lines.append(f"{sum(r.passed for r in results)}/{len(results)} properties hold (seed {seed})")
    return "\n".join(lines) + "\n", ok


# --- argument parsing ------------------------------------------------------------


def _h_grid(text: str) -> tuple[int, int]:
    try:
        a, b = text.split("..")
        k0, k1 = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected k0..k1, got {text!r}") from None
    if k0 < 0 or k1 <= k0:
        raise argparse.ArgumentTypeError(f"need 0 <= k0 < k1, got {text!r}")
    return k0, k1


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--model", choices=["oscillator", "rigidbody", "file"], default="oscillator")
    p.add_argument("--model-file", help="matrix file: 'n p', then rows of J, R and B")
    p.add_argument("--scheme", action="append", default=[], help="catalogue preset, esq or esq-tilde3")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t-end", type=float, default=diagnostics.DEFAULT_T)
    p.add_argument("--driven", action="store_true", help="drive the oscillator with f0*cos(omega*t)")
    p.add_argument("--f0", type=float, default=5.0)
    p.add_argument("--omega", type=float, default=3.0)
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--d", type=float, default=1.0)
    p.add_argument("--k", type=float, default=1000.0)
    for i, v in enumerate((0.0, 5.0, 1000.0), 1):
        p.add_argument(f"--r{i}", type=float, default=v)
    for i, v in enumerate((1 / 4900, 1.0, 25.0), 1):
        p.add_argument(f"--I{i}", type=float, default=v)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--plot", nargs="?", const="", default=None, metavar="SVG",
                   help="write an SVG plot (default name derived from --out)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phsplit", description="Splitting integrators for linear pH systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    sch = sub.add_parser("schemes", help="scheme catalogue")
    sch.add_argument("action", choices=["list"])
    for name, h_kind in (("run", "h"), ("converge", "grid"), ("dissipation", "h")):
        p = sub.add_parser(name)
        _add_common(p)
        if h_kind == "h":
            p.add_argument("--h", type=float, required=True)
        else:
            p.add_argument("--h-grid", type=_h_grid, default=(0, 6), help="exponents k0..k1 of h = 0.1*2^-k")
    st = sub.add_parser("selftest", help="run the property suites")
    st.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    model = "file" if ns.model_file else ns.model
    return RunConfig(
        model=model,
        schemes=list(ns.scheme),
        t0=ns.t0,
        t_end=ns.t_end,
        h=getattr(ns, "h", None),
        h_grid=getattr(ns, "h_grid", (0, 6)),
        driven=ns.driven,
        f0=ns.f0,
        omega=ns.omega,
        m=ns.m,
        d=ns.d,
        k=ns.k,
        r=(ns.r1, ns.r2, ns.r3),
        inertia=(ns.I1, ns.I2, ns.I3),
        model_file=ns.model_file,
        out=ns.out,
        fmt=ns.format,
        plot=ns.plot,
    )


def main(argv=None) -> int:
    ns = make_parser().parse_args(argv)
    try:
        if ns.command == "schemes":
            sys.stdout.write(cmd_schemes_list())
            return 0
        if ns.command == "selftest":
            text, ok = cmd_selftest(ns.seed)
            sys.stdout.write(text)
            return 0 if ok else EXIT_NUMERIC
        cfg = config_from_args(ns)
        if ns.command == "run":
            _emit(cmd_run(cfg), cfg.out)
        elif ns.command == "converge":
            _emit(cmd_converge(cfg), cfg.out)
        else:
            text, line = cmd_dissipation(cfg)
            _emit(text, cfg.out)
            if cfg.out is not None:
                print(line)
        return 0
    except UnknownSchemeError as exc:
        print(f"phsplit: error: --scheme: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, SchemeError) as exc:
        print(f"phsplit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepError, NonFiniteError, QuadratureError, IndeterminateOrderError, FloatingPointError) as exc:
        print(f"phsplit: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
