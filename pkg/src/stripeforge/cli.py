"""Command-line front end: one subcommand per pipeline, run directories with
manifests, flat key = value config files with per-subcommand sections.

Every invocation creates a timestamped run directory under --out containing
the subcommand outputs plus run_manifest.txt: the resolved configuration,
content hashes of all inputs and outputs, the tool version, wall time, and
any warnings. Exit status is 0 on success, 1 when a numerical check fails,
and 2 on usage or configuration errors (with a one-line diagnostic naming
the offending key).
"""

import argparse
import configparser
import hashlib
import os
import sys
import time

import numpy as np

from . import __version__
from .core import Params, ScalarField, load_field, save_field, make_stripe_field
from . import decompose as dcm
from . import energy as en
from . import kernel as kn
from . import minimize as mz
from . import onedim as od
from . import stripes as st
from . import verify as vf


class CliError(Exception):
    """Configuration or usage error: reported on one line, exit status 2."""


def _floats(text):
    return tuple(float(t) for t in str(text).split(",") if t.strip())


def _ints(text):
    return tuple(int(t) for t in str(text).split(",") if t.strip())


def _names(text):
    return tuple(t.strip() for t in str(text).split(",") if t.strip())


# option tables: name -> (parser, default, help); None default means required
_PARAM_OPTS = {
    "d": (int, None, "dimension"),
    "p": (float, None, "kernel exponent"),
    "tau": (float, None, "kernel scale parameter"),
    "eps": (float, None, "interface width parameter"),
    "L": (float, 1.0, "torus period"),
    "n": (float, 64, "grid cells per unit length"),
}

_OPTIONS = {
    "solve1d": {
        "d": (int, 1, "ambient dimension of the 1D reduction"),
        "p": (float, 3.0, "kernel exponent"),
        "tau": (float, 0.5, "kernel scale parameter"),
        "eps": (float, 0.1, "interface width parameter"),
        "n": (float, 64, "grid cells per unit length"),
        "h-min": (float, 0.2, "smallest half-period searched"),
        "h-max": (float, 5.0, "largest half-period searched"),
        "coarse-points": (int, 25, "sweep points bracketing the minimum"),
    },
    "minimize": {
        "d": (int, 2, "dimension"),
        "p": (float, 4.0, "kernel exponent"),
        "tau": (float, 0.2, "kernel scale parameter"),
        "eps": (float, 0.05, "interface width parameter"),
        "L": (float, 1.0, "torus period"),
        "n": (float, 32, "grid cells per unit length"),
        "max-iters": (int, 2000, "iteration cap per restart"),
        "restarts": (int, 4, "random restarts"),
        "seed": (int, 0, "base seed for restarts"),
        "grad-tol": (float, 1e-6, "projected-gradient stopping tolerance"),
        "h-min": (float, 0.2, "half-period bracket for the commensuration check"),
        "h-max": (float, 5.0, "half-period bracket for the commensuration check"),
        "coarse-points": (int, 9, "sweep points for the commensuration check"),
    },
    "decompose": {
        "field": (str, None, "input field file"),
        "l": (float, 0.25, "cube side of the localization"),
        "tol": (float, 1e-6, "allowed negative slack of the lower-bound residual"),
    },
    "stripedist": {
        "field": (str, None, "input field file"),
        "center": (str, "0.5", "cube center coordinates, comma separated"),
        "l": (float, 0.5, "cube side"),
        "eta": (float, 0.125, "minimal gap between stripe boundaries"),
    },
    "classify": {
        "field": (str, None, "input field file"),
        "l": (float, 0.25, "cube side"),
        "eta": (float, 0.125, "minimal gap between stripe boundaries"),
        "sigma": (float, 0.05, "stripe distance threshold"),
        "stride": (float, 0.25, "cube center stride"),
    },
    "verify": {
        "seeds": (_ints, tuple(range(1, 21)), "seeds, comma separated"),
        "sizes-1d": (_ints, (32, 64), "1d pool grid sizes"),
        "sizes-2d": (_ints, (16,), "2d pool grid sizes"),
        "pairs-per-field": (int, 80, "sampled pairs per field"),
        "checks": (_names, (), "subset of checks (empty = all)"),
        "upsilon": (float, 17.0 / 16.0, "interface measure unit"),
        "delta": (float, 0.01, "jump defect"),
        "sigma": (float, 0.05, "stripe distance threshold"),
        "nu": (float, 0.05, "small-volume fraction"),
        "l": (float, 0.25, "cube side for localized checks"),
    },
    "gamma-check": {
        "d": (int, 1, "dimension"),
        "p": (float, 3.0, "kernel exponent"),
        "tau": (float, 2.0, "kernel scale parameter"),
        "L": (float, 2.0, "torus period"),
        "n": (float, 256, "grid cells per unit length"),
        "h": (float, 0.5, "stripe half-period"),
        "eps-list": (_floats, (0.2, 0.1, 0.05, 0.025), "interface widths, decreasing"),
        "rel-tol": (float, 0.1, "allowed relative gap at the smallest eps"),
    },
}


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _new_run_dir(base, command):
    stamp = time.strftime("%Y%m%d-%H%M%S")
    k = 0
    while True:
        suffix = "" if k == 0 else "-%d" % k
        path = os.path.join(base, "%s-%s%s" % (command, stamp, suffix))
        try:
            os.makedirs(path)
            return path
        except FileExistsError:
            k += 1


def _write_manifest(run_dir, command, resolved, inputs, outputs, warnings,
                    wall, status):
    lines = [
        "stripeforge-run 1",
        "command=%s" % command,
        "version=%s" % __version__,
        "wall_time_s=%.3f" % wall,
        "exit_status=%d" % status,
    ]
    for w in warnings:
        lines.append("warning=%s" % w)
    for key in sorted(resolved):
        lines.append("config %s=%s" % (key, resolved[key]))
    for path in inputs:
        lines.append("input sha256 %s %s" % (_sha256(path), path))
    for name in outputs:
        lines.append("output sha256 %s %s" % (_sha256(os.path.join(run_dir, name)), name))
    with open(os.path.join(run_dir, "run_manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _resolve(command, args, config_path):
    """Defaults < config file sections < command-line flags."""
    table = _OPTIONS[command]
    file_vals = {}
    if config_path is not None:
        if not os.path.exists(config_path):
            raise CliError("config file not found: %s" % config_path)
        cp = configparser.ConfigParser()
        try:
            cp.read(config_path)
        except configparser.Error as exc:
            raise CliError("unreadable config: %s" % str(exc).replace("\n", " "))
        for section in ("common", command):
            if not cp.has_section(section):
                continue
            for key, val in cp.items(section):
                key = key.replace("_", "-")
                if key not in table:
                    raise CliError("unknown config key '%s' in section [%s]" % (key, section))
                file_vals[key] = val
    out = {}
    for key, (parse, default, _) in table.items():
        cli_val = getattr(args, key.replace("-", "_"))
        if cli_val is not None:
            out[key] = cli_val
        elif key in file_vals:
            try:
                out[key] = parse(file_vals[key])
            except ValueError:
                raise CliError("config key '%s' has malformed value %r" % (key, file_vals[key]))
        elif default is not None:
            out[key] = default
        else:
            raise CliError("missing required key '%s' for %s" % (key, command))
    return out


def _load_input_field(opts):
    path = opts["field"]
    if not os.path.exists(path):
        raise CliError("field file not found: %s" % path)
    return load_field(path), path


# --- subcommand bodies: return (status, outputs, warnings) -----------------

def _run_solve1d(opts, run_dir):
    p = Params(d=opts["d"], p=opts["p"], tau=opts["tau"], eps=opts["eps"],
               L=1.0, n_per_unit=opts["n"])
    warnings = []
    try:
        res = od.optimal_period_search(p, h_min=opts["h-min"], h_max=opts["h-max"],
                                       coarse_points=opts["coarse-points"])
        h_star, c_star, prof, trace = res.h_star, res.c_star, res.profile, res.search_trace
    except ValueError as exc:
        # minimum at the bracket edge: report the sweep and flag it instead
        # of failing, since a positive-energy regime has no interior optimum
        warnings.append("period search fell back to the sweep edge: %s" % exc)
        hs = 1.0 / p.n_per_unit
        rows = []
        best = None
        for h in sorted({od._snap(h, hs) for h in
                         np.linspace(opts["h-min"], opts["h-max"], opts["coarse-points"])}):
            q = od.optimal_profile_for_period(p, h)
            rows.append((h, q.energy_density))
            if best is None or q.energy_density < best.energy_density:
                best = q
        prof, trace = best, np.array(rows)
        h_star, c_star = best.h, best.energy_density
    with open(os.path.join(run_dir, "search_trace.csv"), "w") as fh:
        fh.write("h,energy\n")
        for h, e in trace:
            fh.write("%.17g,%.17g\n" % (h, e))
    pf = Params(d=1, p=opts["p"], tau=opts["tau"], eps=opts["eps"],
                L=2.0 * h_star, n_per_unit=opts["n"])
    save_field(ScalarField(pf, prof.full_period()),
               os.path.join(run_dir, "profile.sf"))
    with open(os.path.join(run_dir, "summary.txt"), "w") as fh:
        fh.write("h_star=%.17g\nc_star=%.17g\nsymmetry_residual=%.3g\n"
                 % (h_star, c_star, prof.symmetry_residual))
    return 0, ["search_trace.csv", "profile.sf", "summary.txt"], warnings


def _run_minimize(opts, run_dir):
    p = Params(d=opts["d"], p=opts["p"], tau=opts["tau"], eps=opts["eps"],
               L=opts["L"], n_per_unit=opts["n"])
    warnings = []
    try:
        res = od.optimal_period_search(p, h_min=opts["h-min"], h_max=opts["h-max"],
                                       coarse_points=opts["coarse-points"])
        ratio = p.L / (2.0 * res.h_star)
        if abs(ratio - round(ratio)) > 1e-6:
            warnings.append(
                "L=%g is not a multiple of the optimal period 2h*=%g; the "
                "torus frustrates the preferred stripe spacing" % (p.L, 2 * res.h_star))
    except ValueError as exc:
        warnings.append("commensuration check skipped: %s" % exc)
    mopts = mz.MinimizeOptions(max_iters=opts["max-iters"], grad_tol=opts["grad-tol"],
                               restarts=opts["restarts"], seed=opts["seed"])
    tab = kn.build_table(p)
    best, all_res = mz.minimize_with_restarts(p, mopts, tab)
    mz.emit_run(run_dir, p, mopts, all_res, best)
    outputs = ["manifest.txt"]
    for k in range(len(all_res)):
        outputs.extend(["energy_trace_%d.csv" % k, "field_%d.sf" % k])
    return 0, outputs, warnings


def _run_decompose(opts, run_dir):
    fld, _ = _load_input_field(opts)
    tab = kn.build_table(fld.params)
    rep = dcm.lower_bound_report(fld, opts["l"], tab)
    with open(os.path.join(run_dir, "decomposition.csv"), "w") as fh:
        fh.write(dcm.report_csv(rep))
    with open(os.path.join(run_dir, "summary.txt"), "w") as fh:
        fh.write(dcm.report_summary(rep))
    status = 0
    warnings = []
    if rep.lower_bound_residual < -opts["tol"]:
        status = 1
        warnings.append("lower-bound residual %.3g below -tol"
                        % rep.lower_bound_residual)
    return status, ["decomposition.csv", "summary.txt"], warnings


def _run_stripedist(opts, run_dir):
    fld, _ = _load_input_field(opts)
    center = _floats(opts["center"])
    if len(center) == 1:
        center = center * fld.params.d
    if len(center) != fld.params.d:
        raise CliError("key 'center' needs %d coordinates" % fld.params.d)
    cube = (center, opts["l"])
    lines = ["direction,distance,admissible,transitions"]
    for i in range(1, fld.params.d + 1):
        fit = st.stripe_fit_distance(fld, i, cube, opts["eta"])
        lines.append("%d,%.17g,%s,%s" % (
            i, fit.distance, fit.admissible,
            ";".join("%.17g" % t for t in fit.transitions)))
    with open(os.path.join(run_dir, "stripedist.csv"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0, ["stripedist.csv"], []


def _run_classify(opts, run_dir):
    fld, _ = _load_input_field(opts)
    cl = st.classify_cubes(fld, opts["l"], opts["eta"], opts["sigma"], opts["stride"])
    with open(os.path.join(run_dir, "classification.csv"), "w") as fh:
        fh.write(st.classification_csv(cl))
    return 0, ["classification.csv"], []


def _run_verify(opts, run_dir):
    cfg = vf.VerifyConfig(
        upsilon=opts["upsilon"], delta=opts["delta"], sigma=opts["sigma"],
        nu=opts["nu"], l=opts["l"], seeds=tuple(opts["seeds"]),
        sizes_1d=tuple(opts["sizes-1d"]), sizes_2d=tuple(opts["sizes-2d"]),
        pairs_per_field=opts["pairs-per-field"],
        checks=tuple(opts["checks"]) or None,
    )
    rep = vf.run_suite(cfg)
    with open(os.path.join(run_dir, "verify_report.txt"), "w") as fh:
        fh.write(vf.report_text(rep))
    with open(os.path.join(run_dir, "verify_report.csv"), "w") as fh:
        fh.write(vf.report_csv(rep))
    warnings = [] if rep.passed else ["verification suite failed"]
    return (0 if rep.passed else 1), ["verify_report.txt", "verify_report.csv"], warnings


def _run_gamma_check(opts, run_dir):
    eps_list = opts["eps-list"]
    if list(eps_list) != sorted(eps_list, reverse=True) or len(eps_list) < 2:
        raise CliError("key 'eps-list' must be a decreasing sequence of at least 2 values")
    rows = []
    sharp = None
    for eps in eps_list:
        p = Params(d=opts["d"], p=opts["p"], tau=opts["tau"], eps=eps,
                   L=opts["L"], n_per_unit=opts["n"])
        tab = kn.build_table(p)
        if sharp is None:
            sharp = en.sharp_interface_energy(make_stripe_field(p, 1, opts["h"]), tab)
        diffuse = en.total_energy(en.mollified_stripe_field(p, 1, opts["h"]), tab).total
        rows.append((eps, diffuse, sharp, abs(diffuse - sharp)))
    with open(os.path.join(run_dir, "gamma_trend.csv"), "w") as fh:
        fh.write("eps,diffuse_energy,sharp_energy,gap\n")
        for r in rows:
            fh.write("%.17g,%.17g,%.17g,%.17g\n" % r)
    gaps = [r[3] for r in rows]
    status = 0
    warnings = []
    if any(gaps[k + 1] >= gaps[k] for k in range(len(gaps) - 1)):
        status = 1
        warnings.append("gap to the sharp-interface energy is not strictly decreasing")
    if gaps[-1] > opts["rel-tol"] * max(abs(sharp), 1e-30):
        status = 1
        warnings.append("gap %.3g at eps=%g exceeds rel-tol" % (gaps[-1], eps_list[-1]))
    return status, ["gamma_trend.csv"], warnings


_RUNNERS = {
    "solve1d": _run_solve1d,
    "minimize": _run_minimize,
    "decompose": _run_decompose,
    "stripedist": _run_stripedist,
    "classify": _run_classify,
    "verify": _run_verify,
    "gamma-check": _run_gamma_check,
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="stripeforge",
        description="Stripe-forming energy toolkit: 1D solver, minimizer, "
                    "localized decomposition, stripe distances, verification.")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name, table in _OPTIONS.items():
        sp = subs.add_parser(name)
        sp.add_argument("--config", default=None, help="key = value config file")
        sp.add_argument("--out", default="runs", help="base directory for run outputs")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker cap (overrides STRIPEFORGE_THREADS)")
        for key, (parse, _, hlp) in table.items():
            typ = str if parse in (_floats, _ints, _names) else parse
            sp.add_argument("--%s" % key, default=None, help=hlp,
                            type=typ if typ is not str else None)
    return parser


def execute(argv):
    """Run one subcommand; returns the process exit status."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    command = args.command
    try:
        opts = _resolve(command, args, args.config)
        # list-valued flags arrive as strings from the command line
        for key, (parse, _, _) in _OPTIONS[command].items():
            if parse in (_floats, _ints, _names) and isinstance(opts[key], str):
                opts[key] = parse(opts[key])
        if args.threads is not None:
            if args.threads < 1:
                raise CliError("key 'threads' must be a positive integer")
            os.environ["STRIPEFORGE_THREADS"] = str(args.threads)
        run_dir = _new_run_dir(args.out, command)
        inputs = [args.config] if args.config else []
        if "field" in opts:
            if not os.path.exists(opts["field"]):
                raise CliError("field file not found: %s" % opts["field"])
            inputs.append(opts["field"])
        t0 = time.time()
        status, outputs, warnings = _RUNNERS[command](opts, run_dir)
        resolved = {k: (",".join(map(str, v)) if isinstance(v, tuple) else v)
                    for k, v in opts.items()}
        resolved["out"] = args.out
        resolved["threads"] = os.environ.get("STRIPEFORGE_THREADS", "1")
        _write_manifest(run_dir, command, resolved, inputs, outputs, warnings,
                        time.time() - t0, status)
        for w in warnings:
            print("warning: %s" % w, file=sys.stderr)
        print(run_dir)
        return status
    except CliError as exc:
        print("stripeforge: error: %s" % exc, file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print("stripeforge: error: %s" % str(exc).split("\n")[0], file=sys.stderr)
        return 2


def main():
    sys.exit(execute(sys.argv[1:]))


if __name__ == "__main__":
    main()
