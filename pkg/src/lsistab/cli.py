"""Command-line front end.

Every subcommand prints one JSON document. Computed numbers carry a sibling
``<name>_error`` field holding an absolute error estimate; all floats are
rounded to 12 significant digits so that repeated runs are byte-identical.

Exit codes: 0 success, 1 numerical failure, 2 usage or precondition error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import densities as dens
from . import functionals as fn
from . import stability as st
from . import transport1d as tr
from .errors import NumericalError, UsageError

INEQUALITIES = ("thm1", "thm1-u", "gradient-star", "entropy-moment", "hwi", "prior-w1",
                "w1-stability", "transport-gap", "tensorization")

DEFAULTS = {
    "family": "gaussian", "a": None, "b": None, "components": None, "density_file": None,
    "recentre": False, "p": 1.0, "amplitude": False, "inequality": None, "alpha": None,
    "eps": 0.1, "constant": None, "slack": st.DEFAULT_SLACK, "factors": None,
    "a_grid": "0.05,0.02,0.01,0.005,0.002", "out": None, "json": True,
}


def _num(x):
    x = float(x)
    return float(f"{x:.12g}") if math.isfinite(x) else None


def _pair(out, name, value, error):
    out[name] = _num(value)
    out[f"{name}_error"] = _num(error)


def _exact(params):
    """Echo input numbers; inputs are exact, so their error is 0."""
    out = {}
    for k, v in params.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            out[k] = v
        else:
            _pair(out, k, v, 0.0)
    return out


def _estimate(out, name, est):
    _pair(out, name, est.value, est.error)


def _report_json(r: st.StabilityReport):
    out = {"inequality": r.inequality_id, "verdict": r.verdict}
    _pair(out, "lhs", r.lhs, r.slack)
    _pair(out, "rhs", r.rhs, r.slack)
    ratio_err = 0.0 if r.ratio == 0 or not math.isfinite(r.ratio) else r.slack * r.ratio / max(abs(r.lhs), r.slack)
    _pair(out, "ratio", r.ratio, ratio_err)
    _pair(out, "slack", r.slack, 0.0)
    if r.constant is not None:
        _pair(out, "constant", r.constant, ratio_err if r.constant_kind == "empirical" else 0.0)
    out["constant_kind"] = r.constant_kind
    comps = {}
    for k, v in r.components.items():
        _pair(comps, k, v, r.slack)
    out["components"] = comps
    return out


def _density_from_desc(desc):
    family = desc.get("family", "gaussian")
    if family in ("gaussian", "gaussian_family"):
        if desc.get("a") is None:
            raise UsageError("gaussian family needs parameter a")
        return dens.make_gaussian_family(desc["a"])
    if family == "tilt":
        if desc.get("b") is None:
            raise UsageError("tilt family needs parameter b")
        return dens.make_tilt(desc["b"])
    if family == "mixture":
        comps = desc.get("components")
        if not comps:
            raise UsageError("mixture needs a JSON list of components")
        return dens.make_mixture([_density_from_desc(c) for c in comps],
                                 [float(c.get("weight", 1.0)) for c in comps])
    if family == "custom":
        pieces = desc.get("pieces")
        if pieces is None:
            raise UsageError("custom family needs --density-file with a 'pieces' list")
        return dens.piecewise_density(pieces)
    raise UsageError(f"unknown family {family!r}")


def _load_json_arg(value, what):
    if value is None:
        return None
    if isinstance(value, (list, dict)):
        return value
    path = Path(value)
    try:
        text = path.read_text(encoding="utf-8") if path.exists() else value
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot parse {what}: {exc}") from exc


def _density(opts):
    desc = {"family": opts["family"], "a": opts["a"], "b": opts["b"],
            "components": _load_json_arg(opts["components"], "--components")}
    if opts["family"] == "custom":
        doc = _load_json_arg(opts["density_file"], "--density-file")
        desc["pieces"] = doc.get("pieces") if isinstance(doc, dict) else doc
    f = _density_from_desc(desc)
    return dens.normalize_center(f) if opts["recentre"] else f


def _density_params(opts):
    params = {"family": opts["family"]}
    for k in ("a", "b"):
        if opts[k] is not None:
            params[k] = opts[k]
    if opts["components"] is not None:
        params["components"] = _load_json_arg(opts["components"], "--components")
    if opts["density_file"] is not None:
        params["density_file"] = str(opts["density_file"])
    params["recentre"] = bool(opts["recentre"])
    return params


def cmd_deficit(opts):
    f = _density(opts)
    d = fn.deficit(f)
    out = {"command": "deficit", "input": _exact(_density_params(opts))}
    _estimate(out, "delta", d)
    _estimate(out, "entropy", d.entropy)
    _estimate(out, "fisher", d.fisher)
    _estimate(out, "mass", f.mass())
    _estimate(out, "mean", f.mean())
    _estimate(out, "m2", f.second_moment())
    if f.is_normalized:
        _estimate(out, "delta_star", fn.deficit_star(fn.to_u(f)))
    return out


def cmd_w11(opts):
    f = _density(opts)
    out = {"command": "w11", "input": _exact(_density_params(opts))}
    w = fn.sobolev11_dist_u(fn.to_u(f)) if opts["amplitude"] else fn.sobolev11_dist(f)
    out["space"] = "amplitude" if opts["amplitude"] else "density"
    _estimate(out, "w11", w)
    _estimate(out, "l1", w.l1)
    _estimate(out, "grad", w.grad)
    return out


def cmd_wasserstein(opts):
    f = _density(opts)
    p = float(opts["p"])
    out = {"command": "wasserstein", "input": _exact({**_density_params(opts), "p": p})}
    _estimate(out, "wp", tr.wasserstein_p(f, None, p))
    if p == 1.0:
        _estimate(out, "w1_cdf", tr.wasserstein1_cdf(f, None))
    return out


def _need(opts, key, what):
    if opts[key] is None:
        raise UsageError(f"--{key.replace('_', '-')} is required for {what}")
    return float(opts[key])


def cmd_check(opts):
    ineq = opts["inequality"]
    if ineq not in INEQUALITIES:
        raise UsageError(f"--inequality must be one of {', '.join(INEQUALITIES)}")
    slack = float(opts["slack"])
    constant = None if opts["constant"] is None else float(opts["constant"])
    params = {"inequality": ineq, "slack": slack}
    if ineq == "tensorization":
        descs = _load_json_arg(opts["factors"], "--factors")
        if not descs:
            raise UsageError("tensorization needs --factors, a JSON list of density descs")
        alpha = _need(opts, "alpha", ineq)
        report = st.check_tensorization([_density_from_desc(s) for s in descs], alpha, constant, slack)
        params.update(factors=descs, alpha=alpha)
    else:
        f = _density(opts)
        params.update(_density_params(opts))
        if ineq == "thm1":
            alpha = _need(opts, "alpha", ineq)
            report = st.check_thm1_density(f, alpha, constant, slack)
            params["alpha"] = alpha
        elif ineq == "thm1-u":
            alpha = _need(opts, "alpha", ineq)
            report = st.check_thm1_u(fn.to_u(f), alpha, constant, slack)
            params["alpha"] = alpha
        elif ineq == "gradient-star":
            report = st.gradient_star_bound(fn.to_u(f), slack)
        elif ineq == "entropy-moment":
            alpha = None if opts["alpha"] is None else float(opts["alpha"])
            report = st.entropy_moment_bound(f, alpha, slack)
        elif ineq == "hwi":
            report = st.hwi_type_bound(f, slack)
        elif ineq == "prior-w1":
            report = st.prior_w1_bound(f, slack)
        elif ineq == "w1-stability":
            alpha = _need(opts, "alpha", ineq)
            eps = float(opts["eps"])
            report = st.check_w1_stability(f, eps, alpha, constant, slack)
            params.update(alpha=alpha, eps=eps)
        else:
            report = st.run_transport_gap(f, slack)
    return {"command": "check", "input": _exact(params), "report": _report_json(report)}


def _sweep_json(res: st.SweepResult):
    out = {}
    _pair(out, "eps", res.eps, 0.0)
    _pair(out, "alpha", res.alpha, 0.0)
    _pair(out, "alpha_threshold", res.alpha_threshold, 0.0)
    _pair(out, "extrapolated_limit", res.extrapolated_limit, res.uncertainty)
    _pair(out, "target", res.target, 0.0)
    _pair(out, "w1_over_a_limit", res.w1_over_a_limit, res.uncertainty)
    _pair(out, "delta_over_a2_limit", res.delta_over_a2_limit, res.uncertainty)
    rows = []
    for r in res.rows:
        row = {}
        _pair(row, "a", r.a, 0.0)
        _pair(row, "delta", r.delta, r.delta_error)
        _pair(row, "w1", r.w1, r.w1_error)
        _pair(row, "w11", r.w11, r.w11_error)
        _pair(row, "ratio_sqrt", r.ratio_sqrt, r.ratio_sqrt * (r.w1_error / r.w1 + r.delta_error / max(r.delta, 1e-300)))
        _pair(row, "ratio_thm1", r.ratio_thm1, 0.0)
        _pair(row, "exp_moment_bound", r.exp_moment_bound, 0.0)
        row["admissible"] = r.admissible
        rows.append(row)
    out["rows"] = rows
    return out


def write_sweep_csv(res: st.SweepResult, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "delta", "w1", "w11", "ratio_sqrt", "ratio_thm1", "admissible"])
        for r in res.rows:
            w.writerow([repr(r.a), repr(r.delta), repr(r.w1), repr(r.w11), repr(r.ratio_sqrt),
                        repr(r.ratio_thm1), "true" if r.admissible else "false"])


def _parse_grid(text):
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"--a-grid must be comma-separated numbers: {exc}") from exc


def cmd_sweep(opts):
    grid = _parse_grid(opts["a_grid"])
    eps = float(opts["eps"])
    alpha = 2.0 if opts["alpha"] is None else float(opts["alpha"])
    res = st.sharpness_sweep(grid, eps, alpha)
    if opts["out"]:
        write_sweep_csv(res, opts["out"])
    out = {"command": "sweep", "input": _exact({"a_grid": ",".join(repr(a) for a in grid), "eps": eps,
                                                "alpha": alpha})}
    out["sweep"] = _sweep_json(res)
    return out


def cmd_report_all(opts):
    slack = float(opts["slack"])
    suite = st.family_suite()
    entries = []
    for name, f in suite.items():
        u = fn.to_u(f)
        m2 = f.second_moment().value
        reports = [
            st.check_thm1_density(f, m2, slack=slack),
            st.check_thm1_u(u, u.second_moment().value, slack=slack),
            st.gradient_star_bound(u, slack),
            st.entropy_moment_bound(f, slack=slack),
            st.hwi_type_bound(f, slack),
            st.prior_w1_bound(f, slack),
            st.run_transport_gap(f, slack),
        ]
        entry = {"name": name}
        _estimate(entry, "delta", fn.deficit(f))
        _estimate(entry, "delta_star", fn.deficit_star(u))
        _estimate(entry, "w1", tr.wasserstein1(f))
        _estimate(entry, "w1_cdf", tr.wasserstein1_cdf(f, None))
        entry["checks"] = [_report_json(r) for r in reports]
        entries.append(entry)
    g = dens.make_gaussian_family
    eps = float(opts["eps"])
    w1s = []
    for a in (0.5, 0.1, 0.01, 0.001):
        alpha = fn.exp_moment_gaussian_bound(a, eps)
        w1s.append(_report_json(st.check_w1_stability(g(a), eps, alpha, slack=slack)))
    tens = [_report_json(st.check_tensorization([g(a1), g(a2)], 1.0, slack=slack))
            for a1, a2 in ((0.1, 0.5), (0.5, 1.0), (0.1, 1.0))]
    sweep = st.sharpness_sweep(_parse_grid(DEFAULTS["a_grid"]), eps, 2.0)
    out = {"command": "report-all", "input": _exact({"eps": eps, "slack": slack}), "suite": entries,
           "w1_stability": w1s, "tensorization": tens, "sweep": _sweep_json(sweep)}
    _pair(out, "sharp_constant_lower_bound", st.sharp_constant_lower_bound(1), 0.0)
    out["all_ok"] = all(c["verdict"] in ("holds", "vacuous")
                        for e in entries for c in e["checks"]) and \
        all(r["verdict"] in ("holds", "vacuous") for r in w1s + tens)
    return out


COMMANDS = {"deficit": cmd_deficit, "w11": cmd_w11, "wasserstein": cmd_wasserstein,
            "check": cmd_check, "sweep": cmd_sweep, "report-all": cmd_report_all}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with the same keys as the flags")
    common.add_argument("--json", action="store_true", default=None, help="emit JSON (always on)")
    common.add_argument("--slack", type=float, default=None)

    dens_args = argparse.ArgumentParser(add_help=False)
    dens_args.add_argument("--family", choices=["gaussian", "tilt", "mixture", "custom"], default=None)
    dens_args.add_argument("--a", type=float, default=None, help="gaussian family parameter (a > -1/2)")
    dens_args.add_argument("--b", type=float, default=None, help="tilt parameter")
    dens_args.add_argument("--components", default=None,
                           help="mixture components as JSON list of {family, a|b, weight} or a path")
    dens_args.add_argument("--density-file", default=None, help="piecewise density JSON for --family custom")
    dens_args.add_argument("--recentre", action="store_true", default=None,
                           help="normalize and center the density first")

    parser = argparse.ArgumentParser(prog="lsistab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("deficit", parents=[common, dens_args], help="entropy, Fisher information, deficit")
    p = sub.add_parser("w11", parents=[common, dens_args], help="W^{1,1} distance to 1")
    p.add_argument("--amplitude", action="store_true", default=None)
    p = sub.add_parser("wasserstein", parents=[common, dens_args], help="W_p distance to gamma")
    p.add_argument("--p", type=float, default=None)
    p = sub.add_parser("check", parents=[common, dens_args], help="check one inequality")
    p.add_argument("--inequality", choices=INEQUALITIES, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--constant", type=float, default=None)
    p.add_argument("--factors", default=None, help="tensorization factors as JSON list or path")
    p = sub.add_parser("sweep", parents=[common], help="sharpness sweep over f_a")
    p.add_argument("--a-grid", default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--out", default=None, help="CSV output path")
    p = sub.add_parser("report-all", parents=[common], help="run every check on the built-in suite")
    p.add_argument("--eps", type=float, default=None)
    return parser


def _merge(ns):
    opts = dict(DEFAULTS)
    given = {k: v for k, v in vars(ns).items() if v is not None}
    if ns.config is not None:
        try:
            cfg = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        opts.update(cfg)
    opts.update(given)
    return opts


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        opts = _merge(ns)
        result = COMMANDS[ns.command](opts)
    except UsageError as exc:
        print(f"lsistab: error: {exc}", file=stderr)
        return 2
    except NumericalError as exc:
        print(f"lsistab: numerical failure: {exc}", file=stderr)
        return 1
    stdout.write(json.dumps(result, indent=2) + "\n")
    return 0


def main():
    sys.exit(run())
