"""Command-line front end for the laboratory.

One run = one resolved configuration = one output directory.  The
configuration is a single flat JSON document (``--config``); command-line
flags override its fields, and unknown flags or fields are rejected, never
ignored.  Exit codes: 0 when the requested quantity was computed
(divergence is a valid answer), 1 on usage or parse errors, 2 when a
scenario check fails, 3 when a smoothing plan misses a budget.

The light commands (``nfunc``, ``modular``, ``norm``, ``energy``) print to
stdout and write a run directory only when an output root is configured;
``smooth run`` and ``scenario run`` always write one.  The environment
variable ORLICZLAB_OUT overrides the default run root (./runs) when no
``--out`` is given; there is no other environment coupling.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .field import Field, QuadratureSpec, finite_diff_gradient, read_field_csv, write_field_csv
from .modular import luxemburg_norm, modular, weighted_energy
from .nfunc import (
    ExpStar,
    RawExp,
    SaturationError,
    check_submultiplicativity,
    check_weak_subadditivity,
    classify_delta2,
    find_tau0,
    parse_nfunction,
)
from .report import write_json, write_run
from .scenarios import (
    FIELD_SINGULARITIES,
    SCENARIOS,
    build_field_recipe,
    build_weight_recipe,
    list_scenarios,
    run_scenario,
)
from .smooth import (
    PlanFailure,
    SmoothingDecomposition,
    build_cover,
    build_partition,
    choose_radii,
    verify_energy_convergence,
)

_BASE_DEFAULTS = {"out": None, "seed": 0, "threads": 1, "figures": True}

_COMMAND_DEFAULTS = {
    "nfunc eval": {"phi": None, "t": None, "deriv": 0},
    "nfunc verify": {"phi": None, "samples": 10000, "tol": 1e-12},
    "nfunc tau0": {"tol": 1e-9},
    "nfunc delta2": {
        "phi": None,
        "t_lo": 1e-3,
        "t_hi": 50.0,
        "samples": 512,
        "ratio_cap": 1e4,
        "finite_measure": False,
    },
    "modular": {
        "phi": None,
        "field": None,
        "field_csv": None,
        "singularities": None,
        "grading_depth": 20,
        "resolution": 1024,
    },
    "norm": {
        "phi": None,
        "field": None,
        "field_csv": None,
        "singularities": None,
        "grading_depth": 20,
        "resolution": 1024,
        "tol": 1e-7,
    },
    "energy": {
        "phi": None,
        "field": None,
        "field_csv": None,
        "weight": "one",
        "resolution": 256,
    },
    "smooth run": {
        "b": None,
        "phi": None,
        "weight": "one",
        "deltas": None,
        "j_max": 26,
        "fraction": 0.2,
        "work_resolution": 12,
        "tol": 1e-3,
    },
    "scenario list": {},
    "scenario run": {"scenario": None},
}


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1 by convention (argparse default is 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(p):
    p.add_argument(
        "--config", help="JSON configuration document; flags override its fields"
    )
    p.add_argument("--out", help="run-directory root ($ORLICZLAB_OUT or ./runs)")
    p.add_argument("--seed", type=int, default=None, help="seed for sampled audits")
    p.add_argument(
        "--threads", type=int, default=None, help="bound on internal parallelism"
    )
    p.add_argument(
        "--no-figures",
        dest="figures",
        action="store_const",
        const=False,
        default=None,
        help="skip PNG rendering in run directories",
    )


def _build_parser() -> _Parser:
    p = _Parser(prog="orliczlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    nf = sub.add_parser("nfunc", help="evaluate and audit N-function families")
    nfs = nf.add_subparsers(dest="sub", required=True, parser_class=_Parser)

    pe = nfs.add_parser("eval", help="evaluate phi or a derivative at one point")
    pe.add_argument("phi", nargs="?", help="descriptor, e.g. exp_star or power:p=2")
    pe.add_argument("--t", type=float, default=None)
    pe.add_argument("--deriv", type=int, choices=(0, 1, 2), default=None)
    _add_common(pe)

    pv = nfs.add_parser("verify", help="derivative and inequality battery")
    pv.add_argument("phi", nargs="?")
    pv.add_argument("--samples", type=int, default=None, help="audit pairs")
    pv.add_argument("--tol", type=float, default=None, help="relative slack")
    _add_common(pv)

    pt = nfs.add_parser("tau0", help="convexity threshold of the log-damped family")
    pt.add_argument("--tol", type=float, default=None, help="bisection tolerance")
    _add_common(pt)

    pd = nfs.add_parser("delta2", help="doubling classification over a range")
    pd.add_argument("phi", nargs="?")
    pd.add_argument("--t-lo", type=float, default=None)
    pd.add_argument("--t-hi", type=float, default=None)
    pd.add_argument("--samples", type=int, default=None)
    pd.add_argument("--ratio-cap", type=float, default=None)
    pd.add_argument(
        "--finite-measure",
        dest="finite_measure",
        action="store_const",
        const=True,
        default=None,
    )
    _add_common(pd)

    for name, helptext in (
        ("modular", "integral of phi(|u|) over the field domain"),
        ("norm", "Luxemburg norm by bracketed bisection"),
    ):
        pm = sub.add_parser(name, help=helptext)
        pm.add_argument("--phi", default=None)
        pm.add_argument("--field", default=None, help="field recipe name")
        pm.add_argument("--field-csv", default=None, help="stored sampled field")
        pm.add_argument(
            "--singularities",
            default=None,
            help="comma-separated grading points (default: the recipe's own)",
        )
        pm.add_argument("--grading-depth", type=int, default=None)
        pm.add_argument("--resolution", type=int, default=None)
        if name == "norm":
            pm.add_argument("--tol", type=float, default=None)
        _add_common(pm)

    pw = sub.add_parser("energy", help="weighted energy of the field gradient")
    pw.add_argument("--phi", default=None)
    pw.add_argument("--field", default=None)
    pw.add_argument("--field-csv", default=None)
    pw.add_argument("--weight", default=None, help="weight recipe name")
    pw.add_argument("--resolution", type=int, default=None)
    _add_common(pw)

    sm = sub.add_parser("smooth", help="run the exhaustion-cover smoothing")
    sms = sm.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    sr = sms.add_parser("run", help="plan radii, smooth, and report the ladder")
    sr.add_argument("--b", default=None, help="field recipe to smooth")
    sr.add_argument("--phi", default=None)
    sr.add_argument("--weight", default=None)
    sr.add_argument(
        "--delta",
        dest="deltas",
        type=float,
        action="append",
        default=None,
        help="target distance; repeat for a decreasing ladder",
    )
    sr.add_argument("--j-max", type=int, default=None)
    sr.add_argument("--fraction", type=float, default=None)
    sr.add_argument("--work-resolution", type=int, default=None)
    sr.add_argument("--tol", type=float, default=None, help="trend tolerance")
    _add_common(sr)

    sc = sub.add_parser("scenario", help="named experiment recipes with checks")
    scs = sc.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    scs.add_parser("list", help="print the registry")
    su = scs.add_parser("run", help="run scenarios and write their reports")
    su.add_argument("scenario", nargs="*", help="registered scenario names")
    su.add_argument(
        "--set",
        dest="set",
        action="append",
        default=None,
        metavar="KEY=VALUE",
        help="override one scenario configuration field (JSON value)",
    )
    _add_common(su)

    return p


# ------------------------------------------------------------- resolution


def _load_config_doc(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(
            f"config {path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        )
    if not isinstance(doc, dict):
        raise ValueError(f"config {path}: top level must be a JSON object")
    return doc


def _float_list(value, name: str):
    if value is None:
        return None
    if isinstance(value, str):
        parts = [p for p in value.replace(",", " ").split() if p]
        value = parts
    if not isinstance(value, (list, tuple)):
        raise ValueError(f"{name} must be a list of numbers")
    return [float(v) for v in value]


def _parse_set_items(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _command_of(args) -> str:
    sub = getattr(args, "sub", None)
    return f"{args.cmd} {sub}" if sub else args.cmd


def _resolve(args):
    """Merge defaults <- JSON document <- CLI flags for one command.

    Returns (command, resolved config dict, scenario overrides dict).
    Unknown JSON fields are an error, never ignored.
    """
    command = _command_of(args)
    defaults = dict(_BASE_DEFAULTS)
    defaults.update(_COMMAND_DEFAULTS[command])
    doc = _load_config_doc(args.config) if getattr(args, "config", None) else {}

    known = set(defaults) | {"command"}
    extras = {k: v for k, v in doc.items() if k not in known}
    overrides = {}
    if command == "scenario run":
        cli_names = list(args.scenario or [])
        doc_names = doc.get("scenario")
        if isinstance(doc_names, str):
            doc_names = [doc_names]
        names = cli_names or list(doc_names or [])
        if not names:
            raise ValueError("scenario run needs at least one scenario name")
        unknown_names = [n for n in names if n not in SCENARIOS]
        if unknown_names:
            raise ValueError(
                f"unknown scenario {unknown_names[0]!r}; known: {sorted(SCENARIOS)}"
            )
        allowed = set()
        for n in names:
            allowed |= set(SCENARIOS[n].default_config())
        bad = sorted(set(extras) - allowed)
        if bad:
            raise ValueError(
                f"unknown configuration fields: {bad}; known here: {sorted(allowed)}"
            )
        overrides = dict(extras)
        overrides.update(_parse_set_items(getattr(args, "set", None)))
    elif extras:
        raise ValueError(
            f"unknown configuration fields for {command}: {sorted(extras)}; "
            f"known: {sorted(set(defaults))}"
        )

    cfg = dict(defaults)
    for k, v in doc.items():
        if k in defaults:
            cfg[k] = v
    for k in defaults:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if command == "scenario run":
        cfg["scenario"] = names

    # normalized forms
    if "singularities" in cfg:
        cfg["singularities"] = _float_list(cfg["singularities"], "singularities")
    if "deltas" in cfg:
        cfg["deltas"] = _float_list(cfg["deltas"], "deltas")
    cfg["seed"] = int(cfg["seed"])
    cfg["threads"] = int(cfg["threads"])
    cfg["figures"] = bool(cfg["figures"])
    if cfg["threads"] < 1:
        raise ValueError("--threads must be at least 1")
    if cfg.get("tol") is not None and cfg["tol"] <= 0.0:
        raise ValueError("tolerances must be positive")
    return command, cfg, overrides


def _run_root(cfg) -> Path:
    if cfg.get("out"):
        return Path(cfg["out"])
    env = os.environ.get("ORLICZLAB_OUT")
    return Path(env) if env else Path("runs")


def _maybe_write(cfg, command: str, token: str, report: dict, tables=None):
    """Light-command run directory, written only when an out root is set."""
    if not cfg.get("out"):
        return None
    out = _run_root(cfg) / token
    echo = {"command": command}
    echo.update({k: v for k, v in sorted(cfg.items())})
    write_run(out, echo, report, tables or {}, figures=cfg["figures"])
    return out


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


# --------------------------------------------------------------- commands


def _require(cfg, key: str, what: str):
    if not cfg.get(key):
        raise ValueError(f"{what} is required (flag or config field {key!r})")
    return cfg[key]


def cmd_nfunc_eval(cfg) -> int:
    phi = parse_nfunction(_require(cfg, "phi", "a phi descriptor"))
    if cfg["t"] is None:
        raise ValueError("nfunc eval requires --t")
    t = float(cfg["t"])
    order = int(cfg["deriv"] or 0)
    fn = (phi.eval, phi.deriv1, phi.deriv2)[order]
    try:
        value = float(fn(np.array([t]))[0])
    except SaturationError:
        value = math.inf
    print(_fmt(value))
    _maybe_write(
        cfg,
        "nfunc eval",
        "nfunc-eval",
        {"descriptor": phi.descriptor(), "t": t, "deriv": order, "value": value},
    )
    return 0


def _verify_battery(phi, n_pairs: int, rel_tol: float, seed: int):
    checks = []

    def record(name, passed, detail):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    t = np.linspace(0.0, 50.0, 502)[1:-1]
    d1 = phi.deriv1(t)
    d2 = phi.deriv2(t)
    record("first_derivative_positive", np.min(d1) > 0.0, f"min={np.min(d1):.3e}")
    if phi.strictly_convex:
        record(
            "second_derivative_positive", np.min(d2) > 0.0, f"min={np.min(d2):.3e}"
        )
    else:
        record(
            "second_derivative_reported",
            True,
            f"min={np.min(d2):.3e} (family not flagged strictly convex)",
        )

    # closed forms against central differences, step scaled with t
    mid = 50.0 * (np.arange(200) + 0.5) / 200.0
    h = 1e-5 * (1.0 + mid)
    try:
        fd1 = (phi.eval(mid + h) - phi.eval(mid - h)) / (2.0 * h)
        fd2 = (phi.eval(mid + h) - 2.0 * phi.eval(mid) + phi.eval(mid - h)) / h**2
        # mixed absolute/relative: derivatives may vanish identically
        cf1, cf2 = phi.deriv1(mid), phi.deriv2(mid)
        r1 = float(np.max(np.abs(fd1 - cf1) / (1.0 + np.abs(cf1))))
        r2 = float(np.max(np.abs(fd2 - cf2) / (1.0 + np.abs(cf2))))
        record("first_derivative_matches_differences", r1 <= 1e-5, f"rel={r1:.3e}")
        record("second_derivative_matches_differences", r2 <= 1e-4, f"rel={r2:.3e}")
    except SaturationError as exc:
        record("derivative_difference_audit", False, f"saturated: {exc}")

    rng = np.random.default_rng(seed)
    pairs = rng.uniform(0.0, 50.0, size=(n_pairs, 2))
    if isinstance(phi, ExpStar):
        try:
            rep = check_weak_subadditivity(phi, 1.0, pairs, rel_tol)
            record(
                "weak_subadditivity_k1",
                rep.passed,
                f"max_excess={rep.max_excess:.3e} "
                f"worst=({rep.worst_pair[0]:.6g}, {rep.worst_pair[1]:.6g})",
            )
        except SaturationError as exc:
            record("weak_subadditivity_k1", False, f"saturated: {exc}")
    elif isinstance(phi, RawExp):
        rep = check_submultiplicativity(phi.gamma, phi.tau, pairs, rel_tol)
        record(
            "submultiplicativity",
            rep.passed,
            f"max_excess={rep.max_excess:.3e} "
            f"worst=({rep.worst_pair[0]:.6g}, {rep.worst_pair[1]:.6g})",
        )

    try:
        d2rep = classify_delta2(phi, 1e-3, 50.0, finite_measure=True)
        delta2 = {
            "label": d2rep.label,
            "max_ratio": d2rep.max_ratio,
            "tail_max_ratio": d2rep.tail_max_ratio,
            "regular_pair": d2rep.regular_pair,
        }
    except SaturationError:
        delta2 = {"label": "saturated", "max_ratio": math.inf}
    return checks, delta2


def cmd_nfunc_verify(cfg) -> int:
    phi = parse_nfunction(_require(cfg, "phi", "a phi descriptor"))
    checks, delta2 = _verify_battery(
        phi, int(cfg["samples"]), float(cfg["tol"]), cfg["seed"]
    )
    for c in checks:
        state = "PASS" if c["passed"] else "FAIL"
        print(f"{c['name']}: {state} ({c['detail']})")
    print(f"delta2: {delta2['label']}")
    n_pass = sum(1 for c in checks if c["passed"])
    all_ok = n_pass == len(checks)
    print(
        f"verify {phi.descriptor()}: {'PASS' if all_ok else 'FAIL'} "
        f"({n_pass}/{len(checks)} checks)"
    )
    _maybe_write(
        cfg,
        "nfunc verify",
        "nfunc-verify",
        {
            "descriptor": phi.descriptor(),
            "checks": checks,
            "delta2": delta2,
            "passed": all_ok,
        },
    )
    return 0


def cmd_nfunc_tau0(cfg) -> int:
    tol = float(cfg["tol"])
    if tol <= 0.0:
        raise ValueError("tolerances must be positive")
    tau0 = find_tau0(tol)
    residual = abs(math.log(tau0) - 2.0 * (math.log(tau0) / tau0 + 1.0))
    print(f"tau0 = {_fmt(tau0)}")
    print(f"residual = {residual:.3e}")
    _maybe_write(
        cfg,
        "nfunc tau0",
        "nfunc-tau0",
        {"tau0": tau0, "residual": residual, "tol": tol},
    )
    return 0


def cmd_nfunc_delta2(cfg) -> int:
    phi = parse_nfunction(_require(cfg, "phi", "a phi descriptor"))
    rep = classify_delta2(
        phi,
        float(cfg["t_lo"]),
        float(cfg["t_hi"]),
        n_samples=int(cfg["samples"]),
        ratio_cap=float(cfg["ratio_cap"]),
        finite_measure=bool(cfg["finite_measure"]),
    )
    print(
        f"delta2 {phi.descriptor()} on [{cfg['t_lo']:g}, {cfg['t_hi']:g}]: "
        f"{rep.label} (max_ratio={rep.max_ratio:.6g}, tail={rep.tail_max_ratio:.6g})"
    )
    print(f"regular_pair = {'true' if rep.regular_pair else 'false'}")
    _maybe_write(
        cfg,
        "nfunc delta2",
        "nfunc-delta2",
        {
            "descriptor": phi.descriptor(),
            "label": rep.label,
            "max_ratio": rep.max_ratio,
            "tail_max_ratio": rep.tail_max_ratio,
            "regular_pair": rep.regular_pair,
            "t_lo": rep.t_lo,
            "t_hi": rep.t_hi,
        },
    )
    return 0


def _load_field(cfg) -> Field:
    recipe = cfg.get("field")
    csv_path = cfg.get("field_csv")
    if bool(recipe) == bool(csv_path):
        raise ValueError("exactly one of --field / --field-csv is required")
    if recipe:
        fld = build_field_recipe(recipe)
        if cfg.get("singularities") is None and "singularities" in cfg:
            cfg["singularities"] = [float(s) for s in FIELD_SINGULARITIES.get(recipe, ())]
        return fld
    if cfg.get("singularities"):
        raise ValueError("sampled fields cannot grade; drop --singularities")
    if "singularities" in cfg:
        cfg["singularities"] = []
    return read_field_csv(csv_path)


def _quadrature(cfg) -> QuadratureSpec:
    return QuadratureSpec(
        resolution=int(cfg["resolution"]),
        singularities=tuple(cfg.get("singularities") or ()),
        grading_depth=int(cfg["grading_depth"]),
    )


def _echo_quadrature(q: QuadratureSpec):
    sing = "[" + ", ".join(_fmt(s) for s in q.singularities) + "]"
    print(
        f"quadrature: resolution={q.resolution} "
        f"grading_depth={q.grading_depth} singularities={sing}"
    )


def cmd_modular(cfg) -> int:
    phi = parse_nfunction(_require(cfg, "phi", "a phi descriptor"))
    fld = _load_field(cfg)
    q = _quadrature(cfg)
    try:
        mv = modular(phi, fld, q)
        value, diverged, partial = mv.value, mv.diverged, mv.partial
    except SaturationError:
        value, diverged, partial = math.inf, True, math.nan
    print(f"modular = {_fmt(value)}")
    if diverged:
        print(f"diverged = true (partial = {_fmt(partial)})")
    else:
        print("diverged = false")
    _echo_quadrature(q)
    _maybe_write(
        cfg,
        "modular",
        "modular",
        {
            "descriptor": phi.descriptor(),
            "value": value,
            "diverged": diverged,
            "partial": partial,
        },
    )
    return 0


def cmd_norm(cfg) -> int:
    phi = parse_nfunction(_require(cfg, "phi", "a phi descriptor"))
    fld = _load_field(cfg)
    q = _quadrature(cfg)
    diverged = False
    try:
        value = luxemburg_norm(phi, fld, q, tol=float(cfg["tol"]))
    except ValueError as exc:
        if not str(exc).startswith("Luxemburg bracket failure"):
            raise
        value, diverged = math.inf, True
    print(f"norm = {_fmt(value)}")
    print(f"diverged = {'true' if diverged else 'false'}")
    _echo_quadrature(q)
    _maybe_write(
        cfg,
        "norm",
        "norm",
        {"descriptor": phi.descriptor(), "value": value, "diverged": diverged},
    )
    return 0


def cmd_energy(cfg) -> int:
    phi = parse_nfunction(_require(cfg, "phi", "a phi descriptor"))
    fld = _load_field(cfg)
    w = build_weight_recipe(cfg["weight"])
    # registered gradients are preferred; sampled or plain analytic fields
    # fall back to central differences
    grad = finite_diff_gradient(fld)
    q = QuadratureSpec(resolution=int(cfg["resolution"]))
    try:
        mv = weighted_energy(phi, w, grad, q)
        value, diverged = mv.value, mv.diverged
    except SaturationError:
        value, diverged = math.inf, True
    print(f"energy = {_fmt(value)}")
    print(f"diverged = {'true' if diverged else 'false'}")
    print(f"weight = {w.name} resolution = {q.resolution}")
    _maybe_write(
        cfg,
        "energy",
        "energy",
        {
            "descriptor": phi.descriptor(),
            "weight": cfg["weight"],
            "value": value,
            "diverged": diverged,
        },
    )
    return 0


def cmd_smooth_run(cfg) -> int:
    b = build_field_recipe(_require(cfg, "b", "a field recipe (--b)"))
    if b.domain.dim != 2:
        raise ValueError("smoothing expects a space-time recipe (2-D domain)")
    phi = parse_nfunction(_require(cfg, "phi", "a phi descriptor"))
    w = build_weight_recipe(cfg["weight"])
    deltas = cfg["deltas"]
    if not deltas:
        raise ValueError("smooth run requires at least one --delta")
    if any(d <= 0.0 for d in deltas):
        raise ValueError("deltas must be positive")

    j_max = int(cfg["j_max"])
    fraction = float(cfg["fraction"])
    wr = int(cfg["work_resolution"])
    cover = build_cover(b.domain, j_max)
    part = build_partition(cover, fraction)
    plans = [choose_radii(b, phi, w, part, d, work_resolution=wr) for d in deltas]
    ladder = verify_energy_convergence(
        b, phi, w, deltas,
        j_max=j_max, fraction=fraction, work_resolution=wr, tol=float(cfg["tol"]),
    )

    out = _run_root(cfg) / "smooth"
    echo = {"command": "smooth run"}
    echo.update(sorted(cfg.items()))
    report = ladder.to_json_dict()
    report["budgets_satisfied"] = True  # choose_radii raises otherwise
    report["plans"] = [p.to_json_dict() for p in plans]

    # mid-time profile of the finest smoothing, on the working grid; the
    # plan assigns radii only to rings that grid meets, so the slice must
    # reuse its coordinates
    deco = SmoothingDecomposition(plans[-1])
    T, X = b.domain.meshgrid((wr, wr))
    mid = wr // 2
    b_vals = np.asarray(b.evaluator(T, X), dtype=float)
    bd_vals = deco.field(T, X)
    profile = [["x", "b", "b_delta"]]
    for k in range(wr):
        profile.append([X[mid, k], b_vals[mid, k], bd_vals[mid, k]])

    written = write_run(
        out,
        echo,
        report,
        {"ladder": ladder.to_csv_rows(), "profile": profile},
        figures=cfg["figures"],
    )
    for p, d in zip(plans, deltas):
        written.append(write_json(out / f"plan_{format(d, 'g')}.json", p.to_json_dict()))
    smoothed = Field.sampled(b.domain, bd_vals, name=f"{cfg['b']}_delta")
    write_field_csv(smoothed, str(out / "b_delta.csv"))

    for i, d in enumerate(deltas):
        print(
            f"delta {d:g}: rings={len(plans[i].active)} "
            f"grad_l1={ladder.grad_l1[i]:.6e} sup_z={ladder.sup_z[i]:.6e} "
            f"energy_gap={ladder.energy_gap[i]:.6e}"
        )
    print("plan: all budgets satisfied")
    print(f"wrote {out}")
    return 0


def cmd_scenario_list(cfg) -> int:
    for sc in list_scenarios():
        print(f"{sc.name}: {sc.description}")
    return 0


def cmd_scenario_run(cfg, overrides) -> int:
    names = cfg["scenario"]
    root = _run_root(cfg)

    def compute(name):
        return run_scenario(name, overrides or None)

    if cfg["threads"] > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=cfg["threads"]) as pool:
            reports = list(pool.map(compute, names))
    else:
        reports = [compute(n) for n in names]

    # output writing stays single-threaded and ordered
    any_failed = False
    for name, rep in zip(names, reports):
        out = root / name
        resolved = SCENARIOS[name].default_config()
        resolved.update(overrides or {})
        echo = {"command": "scenario run", "scenario": name}
        echo.update(sorted(resolved.items()))
        write_run(out, echo, rep.to_json_dict(), rep.tables, figures=cfg["figures"])
        n_pass = sum(1 for c in rep.checks if c.passed)
        state = "PASS" if rep.passed else "FAIL"
        any_failed = any_failed or not rep.passed
        print(f"{name}: {state} ({n_pass}/{len(rep.checks)} checks) -> {out}")
    return 2 if any_failed else 0


# ------------------------------------------------------------------ driver


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        command, cfg, overrides = _resolve(args)
        if command == "nfunc eval":
            return cmd_nfunc_eval(cfg)
        if command == "nfunc verify":
            return cmd_nfunc_verify(cfg)
        if command == "nfunc tau0":
            return cmd_nfunc_tau0(cfg)
        if command == "nfunc delta2":
            return cmd_nfunc_delta2(cfg)
        if command == "modular":
            return cmd_modular(cfg)
        if command == "norm":
            return cmd_norm(cfg)
        if command == "energy":
            return cmd_energy(cfg)
        if command == "smooth run":
            return cmd_smooth_run(cfg)
        if command == "scenario list":
            return cmd_scenario_list(cfg)
        if command == "scenario run":
            return cmd_scenario_run(cfg, overrides)
        raise ValueError(f"unhandled command {command!r}")
    except PlanFailure as exc:
        print(f"plan failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
