"""Command-line interface.

Exit codes: 0 success, 1 usage or IO error, 2 certification failure.
Randomized states come from ``numpy.random.Philox`` keyed by ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import decay_analysis as da
from . import lyapunov_ledger as ll
from . import memory_kernel_lab as mk
from .errors import CertificationError, ConfigParseError, LorentzDecayError
from .material import (
    BRANCHES,
    classify_dissipation,
    default_herglotz_grid,
    gamma,
    herglotz_scan,
    load_material,
    total_kernel,
)
from .mode_dynamics import (
    ModeState,
    build_generator,
    divergence_residual,
    propagate,
    random_state,
    spectral_abscissa,
)
from .sampling import make_rng

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class UsageError(LorentzDecayError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# formatting helpers


def fmt(x) -> str:
    return "%.17g" % float(x)


def write_csv(header: Sequence[str], rows, out) -> None:
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")


def emit_json(obj, out) -> None:
    out.write(json.dumps(obj, allow_nan=True) + "\n")


def parse_vector(text: str, dtype=float) -> np.ndarray:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise UsageError(f"expected three comma-separated components, got {text!r}")
    try:
        vals = [dtype(p.replace("i", "j")) if dtype is complex else dtype(p) for p in parts]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return np.array(vals, dtype=dtype)


def parse_floats(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


class _Output:
    """Context manager yielding a text stream for ``path`` or stdout."""

    def __init__(self, path):
        self.path = path
        self.fh = None

    def __enter__(self):
        if self.path in (None, "-"):
            return sys.stdout
        self.fh = open(self.path, "w", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()


def _time_grid(tmin: float, tmax: float, n: int, spacing: str) -> np.ndarray:
    if n < 2 or tmax <= tmin or tmin < 0:
        raise UsageError("need n >= 2 and 0 <= tmin < tmax")
    if spacing == "log":
        if tmin <= 0:
            raise UsageError("log spacing needs tmin > 0")
        return np.geomspace(tmin, tmax, n)
    return np.linspace(tmin, tmax, n)


# ---------------------------------------------------------------------------
# subcommands


def cmd_check_material(args) -> int:
    mat = _load(args)
    cls = classify_dissipation(mat)
    rep = herglotz_scan(mat, default_herglotz_grid(args.grid_n))
    with _Output(args.output) as out:
        emit_json({"report": "classification", **cls.as_dict()}, out)
        emit_json(
            {
                "report": "herglotz",
                "min_im_omega_eps": rep.min_im_eps,
                "min_im_omega_mu": rep.min_im_mu,
                "min_relative_eps": rep.min_rel_eps,
                "min_relative_mu": rep.min_rel_mu,
                "n_points": rep.n_points,
                "passed": rep.passed,
                "tolerances": {"herglotz_relative": rep.tol},
            },
            out,
        )
        for w in parse_floats(args.gamma_at):
            emit_json({"report": "gamma", "omega": w, **{b: gamma(mat, b, w) for b in BRANCHES}}, out)
    return 0 if rep.passed else 2


def cmd_kernel_table(args) -> int:
    mat = _load(args)
    t = np.linspace(0.0, args.tmax, args.n)
    cols = [total_kernel(mat, args.branch, t, j) for j in range(4)]
    with _Output(args.output) as out:
        write_csv(["t", "chi", "chi1", "chi2", "chi3"], zip(t, *cols), out)
    return 0


def _initial_state(args, mat, k) -> ModeState:
    rng = make_rng(args.seed)
    if args.E0 is None and args.H0 is None:
        return random_state(rng, mat.n_e, mat.n_m, k, oscillators=False)
    E0 = parse_vector(args.E0, complex) if args.E0 else np.zeros(3, complex)
    H0 = parse_vector(args.H0, complex) if args.H0 else np.zeros(3, complex)
    return ModeState.from_fields(E0, H0, mat.n_e, mat.n_m)


def cmd_simulate_mode(args) -> int:
    mat = _load(args)
    k = parse_vector(args.k)
    gen = build_generator(mat, k)
    u0 = _initial_state(args, mat, k)
    t = _time_grid(0.0, args.tmax, args.n, "linear")
    U = propagate(gen, u0.to_vector(), t)
    names = ["E", "H"] + [f"P{j}" for j in range(mat.n_e)] + [f"Pdot{j}" for j in range(mat.n_e)]
    names += [f"M{l}" for l in range(mat.n_m)] + [f"Mdot{l}" for l in range(mat.n_m)]
    header = ["t"]
    for nm in names:
        for c in "xyz":
            header += [f"re_{nm}{c}", f"im_{nm}{c}"]
    header.append("divergence_residual")
    rows = []
    for ti, u in zip(t, U):
        st = ModeState.from_vector(u, mat.n_e, mat.n_m)
        rows.append([ti, *st.to_real(), divergence_residual(st, k)])
    with _Output(args.output) as out:
        write_csv(header, rows, out)
    return 0


def cmd_ledger(args) -> int:
    mat = _load(args)
    k = parse_vector(args.k)
    gen = build_generator(mat, k)
    u0 = random_state(make_rng(args.seed), mat.n_e, mat.n_m, k)
    t = _time_grid(0.0, args.tmax, args.n, "linear")
    tr = ll.ledger_trajectory(gen, u0, t)
    Lc, Dc, dLc = tr.cumulated(2)
    norms = [max(tr.L[j, 0], ll.RESIDUAL_FLOOR) for j in range(3)] + [max(Lc[0], ll.RESIDUAL_FLOOR)]
    res = [np.abs(tr.dLdt[j] + tr.D[j]) / norms[j] for j in range(3)] + [np.abs(dLc + Dc) / norms[3]]
    header = ["t", "L0", "L1", "L2", "D0", "D1", "D2", "L_cum", "D_cum", "res0", "res1", "res2", "res_cum"]
    rows = zip(t, *tr.L, *tr.D, Lc, Dc, *res)
    worst = float(max(np.max(r) for r in res))
    with _Output(args.output) as out:
        write_csv(header, rows, out)
    if args.report:
        with _Output(args.report) as out:
            emit_json({"report": "ledger", "worst_relative_residual": worst, "tolerances": {"identity": args.tol}}, out)
    return 0 if worst <= args.tol else 2


def cmd_certify(args) -> int:
    mat = _load(args)
    rtol = 1e-9
    report = {"report": "certify", "seed": args.seed, "tolerances": {"gronwall_rtol": rtol}}
    try:
        knorms = np.geomspace(args.k_min, args.k_max, args.n_k)
        sweep = ll.lemma_sweep(mat, knorms, args.n_states, args.seed)
        cases = ll.sweep_cases(mat, knorms, args.n_states, args.seed)
        certs = [ll.gronwall_certificate(mat, k, u0, sigma_star=sweep.sigma_star, rtol=rtol) for k, u0 in cases]
        per_k = []
        for i, kn in enumerate(knorms):
            block = certs[i * args.n_states : (i + 1) * args.n_states]
            k = cases[i * args.n_states][0]
            abscissa = spectral_abscissa(build_generator(mat, k), "transverse")
            per_k.append(
                {
                    "k_norm": float(kn),
                    "bound_holds": all(c.bound_holds for c in block),
                    "max_excess": max(c.max_excess for c in block),
                    "sigma_fit_max": max(c.sigma_fit for c in block),
                    "spectral_rate": 2.0 * block[0].weight * abs(abscissa),
                    "weight": block[0].weight,
                }
            )
        ok = all(row["bound_holds"] for row in per_k)
        report.update(
            {
                "status": "ok" if ok else "bound_violated",
                "lemma_order": certs[0].order,
                "lemma_constant": sweep.constant,
                "spread_max_over_median": sweep.spread,
                "sigma_star": sweep.sigma_star,
                "per_k": per_k,
            }
        )
        code = 0 if ok else 2
    except CertificationError as exc:
        report.update({"status": "refused", "error": type(exc).__name__, "message": str(exc)})
        code = 2
    with _Output(args.output) as out:
        emit_json(report, out)
    return code


def _spec_from_args(args) -> da.InitialDataSpec:
    data = {}
    if args.spec:
        with open(args.spec, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigParseError(str(exc)) from exc
    name = data.get("profile", args.profile)
    p = int(data.get("p", args.p))
    m = data.get("m", args.m)
    delta = float(data.get("delta", args.delta))
    pol = data.get("polarization", args.polarization)
    if name == "gaussian":
        prof = da.gaussian()
        p = 0
    elif name == "power_gaussian":
        prof = da.power_gaussian(p)
    elif name == "power_exponential":
        prof = da.power_exponential(p)
    elif name == "sobolev_tail":
        if m is None:
            raise UsageError("sobolev_tail needs --m")
        prof = da.sobolev_tail(int(m), delta, p)
    else:
        raise UsageError(f"unknown profile {name!r}")
    return da.InitialDataSpec(prof, p=p, m=None if m is None else int(m), polarization=pol)


def _read_spectrum(path) -> list[da.DiscreteMode]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return [da.DiscreteMode(float(r["k_n"]), float(r["weight"]), float(r["amplitude"])) for r in rows]
    except (KeyError, ValueError) as exc:
        raise ConfigParseError(f"spectrum CSV needs k_n, weight, amplitude columns: {exc}") from exc


def cmd_sweep(args) -> int:
    mat = _load(args)
    t = _time_grid(args.tmin, args.tmax, args.n_times, "log")
    if args.spectrum:
        curve = da.discrete_spectrum_curve(mat, _read_spectrum(args.spectrum), t, args.polarization)
        with _Output(args.output) as out:
            write_csv(["t", "L_total"], zip(t, curve.values), out)
        return 0
    spec = _spec_from_args(args)
    da.moment_order_check(spec)
    quad = da.QuadratureConfig(n_nodes=args.nodes, kappa_max=args.kappa_max)
    ec = da.total_energy_curve(mat, spec, t, quad)
    hf, lf = da.hf_lf_split(ec)
    with _Output(args.output) as out:
        write_csv(["t", "L_total", "L_hf", "L_lf"], zip(t, ec.total, hf.values, lf.values), out)
    return 0


def cmd_fit(args) -> int:
    try:
        with open(args.csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
        t = np.array([float(r["t"]) for r in rows])
        v = np.array([float(r[args.column]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise ConfigParseError(f"cannot read columns t, {args.column}: {exc}") from exc
    window = tuple(parse_floats(args.window)) if args.window else None
    fit = da.fit_decay_exponent(da.Curve(t, v, args.column), window)
    with _Output(args.output) as out:
        emit_json({"report": "fit", **fit.as_dict()}, out)
    return 0


_KERNEL_RE = re.compile(r"^\s*(\w+)\s*(?:\(([^)]*)\))?\s*$")


def parse_kernel(text: str) -> mk.KernelFunction:
    """``drude(alpha)``, ``lorentz(alpha, omega0)``, ``saturating``, ``linear(Omega)``,
    ``exp(rate)`` or ``table:path.csv`` (columns ``t, chi``)."""
    if text.startswith("table:"):
        with open(text[6:], newline="") as fh:
            rows = list(csv.DictReader(fh))
        return mk.tabulated_kernel([float(r["t"]) for r in rows], [float(r["chi"]) for r in rows], text)
    m = _KERNEL_RE.match(text)
    if not m:
        raise UsageError(f"cannot parse kernel {text!r}")
    name, argstr = m.group(1), m.group(2) or ""
    vals = parse_floats(argstr)
    table = {
        "drude": (mk.drude_kernel, 1),
        "lorentz": (mk.lorentz_kernel, 2),
        "saturating": (mk.saturating_kernel, 0),
        "linear": (mk.linear_kernel, 1),
        "exp": (mk.exponential_kernel, 1),
    }
    if name not in table or len(vals) != table[name][1]:
        raise UsageError(f"unknown kernel or wrong arity: {text!r}")
    return table[name][0](*vals)


def cmd_memory_lab(args) -> int:
    ker = parse_kernel(args.kernel)
    t = _time_grid(0.0, args.tmax, args.n, "linear")
    signs = mk.sign_condition_check(ker, t)
    verdict = {"report": "memory-lab", "kernel": args.kernel, "scenario": args.scenario, "sign_conditions": signs.as_dict()}
    code = 0
    if args.scenario == "identity":
        k = parse_vector(args.k)
        traj = mk.simulate_convolution_mode(ker, ker, k, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        res = mk.general_lyapunov_identity(ker, ker, traj, t, args.n_gauss)
        pointwise = np.abs(res.pointwise) / max(res.L[0], 1e-30)
        with _Output(args.output) as out:
            write_csv(["t", "L", "D", "residual"], zip(t, res.L, res.D, pointwise), out)
        passed = res.residual <= args.tol
        verdict.update({"residual": res.residual, "passed": passed, "tolerances": {"identity": args.tol}})
        code = 0 if passed else 2
    elif args.scenario == "qform":
        u = mk.ScalarTrajectory.from_function(t, np.sin, np.cos)
        lhs, rhs = mk.q_form_sides(ker, u, args.n_gauss)
        with _Output(args.output) as out:
            write_csv(["t", "lhs", "rhs", "residual"], zip(t, lhs, rhs, np.abs(lhs - rhs)), out)
        r = float(np.max(np.abs(lhs - rhs)))
        verdict.update({"residual": r, "passed": r <= args.tol, "tolerances": {"qform": args.tol}})
        code = 0 if r <= args.tol else 2
    else:
        verdict["tolerances"] = {}
    with _Output(args.report) as out:
        emit_json(verdict, out)
    return code


# ---------------------------------------------------------------------------
# parser


def _add_material(p) -> None:
    p.add_argument("material", nargs="?", default=None, help="material TOML file")
    p.add_argument("--material", dest="material_opt", default=None, help="same as the positional argument")


def _load(args):
    path = args.material or args.material_opt
    if not path:
        raise UsageError("a material file is required")
    return load_material(path)


def _add_output(p) -> None:
    p.add_argument("-o", "--output", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lorentz-decay", description=__doc__)
    parser.add_argument("--config", default=None, help="TOML file with option defaults, optionally per-subcommand tables")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser(
        "check-material",
        help="classify dissipation and scan passivity",
        description="Evaluates eps(w) = eps0 (1 - sum Omega^2/(w^2 + i alpha w - w0^2)), "
        "checks that w eps(w) and w mu(w) are Herglotz (Im >= 0 for Im w > 0), and "
        "reports gamma(w) = sum alpha Omega^2 w^2 / |w^2 + i alpha w - w0^2|^2 with the dissipation class.",
    )
    _add_material(p)
    p.add_argument("--gamma-at", default="0.01,0.1,1,10", help="comma-separated real frequencies")
    p.add_argument("--grid-n", type=int, default=50)
    _add_output(p)
    p.set_defaults(func=cmd_check_material)

    p = sub.add_parser(
        "kernel-table",
        help="tabulate the time-domain susceptibility kernel",
        description="Tabulates chi(t) = sum Omega^2 chi_j(t) and its first three derivatives, where chi_j "
        "solves x'' + alpha x' + w0^2 x = 0, x(0) = 0, x'(0) = 1 (sinh, sin or t exp(-alpha t/2) form).",
    )
    _add_material(p)
    p.add_argument("--branch", choices=BRANCHES, default="electric")
    p.add_argument("--tmax", type=float, default=20.0)
    p.add_argument("--n", type=int, default=201)
    _add_output(p)
    p.set_defaults(func=cmd_kernel_table)

    def add_state_args(p):
        _add_material(p)
        p.add_argument("--k", required=True, help="wavevector kx,ky,kz")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tmax", type=float, default=10.0)
        p.add_argument("--n", type=int, default=101)

    p = sub.add_parser(
        "simulate-mode",
        help="exact evolution of one Fourier mode",
        description="Integrates eps0 dE/dt - i k x H + eps0 sum Omega^2 dP/dt = 0, "
        "mu0 dH/dt + i k x E + mu0 sum Omega^2 dM/dt = 0, P'' + alpha P' + w0^2 P = E (and likewise M) "
        "with the matrix exponential; random transverse fields from --seed unless --E0/--H0 are given.",
    )
    add_state_args(p)
    p.add_argument("--E0", default=None, help="complex components, e.g. 1,0.5+1j,0")
    p.add_argument("--H0", default=None)
    _add_output(p)
    p.set_defaults(func=cmd_simulate_mode)

    p = sub.add_parser(
        "ledger",
        help="energy and decay densities of orders 0-2 with identity residuals",
        description="Checks d/dt L_k^j + D_k^j = 0 for j = 0, 1, 2 and the cumulated form "
        "d/dt L^(2) + D^(2) = 0 with L^(2) = sum <k>^(-2j) L^j, along an exact trajectory.",
    )
    add_state_args(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--report", default=None, help="optional JSON report path")
    _add_output(p)
    p.set_defaults(func=cmd_ledger)

    p = sub.add_parser(
        "certify",
        help="empirical lemma constant and per-mode Gronwall bound",
        description="Estimates C in L^(n) <= C w(k) D^(n) (n = 1, w = <k>^2 for pure Drude media; "
        "n = 2, w = <k>^2 + |k|^-2 otherwise) and checks L^(n)(t) <= L^(n)(0) exp(-t/(C w(k))).",
    )
    _add_material(p)
    p.add_argument("--k-min", type=float, default=0.05)
    p.add_argument("--k-max", type=float, default=20.0)
    p.add_argument("--n-k", type=int, default=30)
    p.add_argument("--n-states", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser(
        "sweep",
        help="total energy curve by radial quadrature",
        description="Computes L(t) = int L_k(t) dk = int 4 pi kappa^2 L_kappa(t) dkappa, whose decay "
        "follows t^-m (H^m data) plus t^-(p + 3/2) (spectrum vanishing like |k|^p) for Lorentz media. "
        "With --spectrum the integral becomes a sum over discrete modes.",
    )
    _add_material(p)
    p.add_argument("--spec", default=None, help="TOML with profile, p, m, delta, polarization")
    p.add_argument(
        "--profile", default="gaussian", choices=["gaussian", "power_gaussian", "power_exponential", "sobolev_tail"]
    )
    p.add_argument("--p", type=int, default=0)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--delta", type=float, default=da.SOBOLEV_DELTA)
    p.add_argument("--polarization", default="eh", choices=sorted(da.POLARIZATIONS))
    p.add_argument("--tmin", type=float, default=1.0)
    p.add_argument("--tmax", type=float, default=1e4)
    p.add_argument("--n-times", type=int, default=41)
    p.add_argument("--nodes", type=int, default=256)
    p.add_argument("--kappa-max", type=float, default=None)
    p.add_argument("--spectrum", default=None, help="CSV with k_n, weight, amplitude")
    _add_output(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "fit",
        help="fit a power law to an energy curve",
        description="Least-squares slope of log L against log t, the exponent in L(t) ~ t^-min(m, p + 3/2).",
    )
    p.add_argument("csv")
    p.add_argument("--column", default="L_total")
    p.add_argument("--window", default=None, help="t_lo,t_hi (default: last decade)")
    _add_output(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser(
        "memory-lab",
        help="convolution-kernel identities and sign conditions",
        description="Checks d/dt (E + E_ad) + D = 0 with E_ad = eps0/2 chi'(t)|E_p|^2 - eps0/2 int chi''(t-s)"
        "|E_p(t) - E_p(s)|^2 ds, the quadratic-form identity for int k'(t-s) u(s) u'(t) ds, and the sign "
        "conditions chi(0) >= 0, chi' >= 0, chi'' <= 0, chi''' >= 0 and -chi'' >= beta chi', chi''' >= -beta chi''.",
    )
    p.add_argument("--kernel", required=True, help="drude(a) | lorentz(a,w0) | saturating | linear(W) | exp(r) | table:f.csv")
    p.add_argument("--scenario", choices=["identity", "qform", "signs"], default="identity")
    p.add_argument("--k", default="0,0,1")
    p.add_argument("--tmax", type=float, default=20.0)
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--n-gauss", type=int, default=mk.DEFAULT_GAUSS)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--report", default=None, help="JSON verdict path (default: stdout)")
    _add_output(p)
    p.set_defaults(func=cmd_memory_lab)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Turn a ``--config`` TOML file into subparser defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"{known.config}: {exc}") from exc
    command = next((a for a in rest if not a.startswith("-")), None)
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if command not in sub_action.choices:
        return
    table = {k: v for k, v in data.items() if not isinstance(v, dict)}
    table.update(data.get(command, {}))
    sub_action.choices[command].set_defaults(**{k.replace("-", "_"): v for k, v in table.items()})


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_help(sys.stderr)
            return 1
        return args.func(args)
    except CertificationError as exc:
        print(f"certification failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (LorentzDecayError, OSError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
