"""Command-line front end.

    kernel-entropy {spectrum,bounds,rademacher,gaussian-asymptotics,validate}
        --config PATH [--out DIR] [--seed N] [--threads N] [--epsilon X]

Exit codes: 0 ok, 1 check failure, 2 config error, 3 resource/numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds as B
from . import validate as V
from .config import (build_setup, build_spectrum, check_out_dir, load_config,
                     total_mass, validate_config)
from .errors import (BoundViolation, BudgetError, ConfigError, DomainError,
                     NumericError, ParameterError, RegimeError, ResourceError)
from .kernels import GaussianKernel, sup_diag
from .spectrum import CSV_VERSION_LINE, gaussian_eigen_bound, write_spectrum_csv

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(CSV_VERSION_LINE + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


# commands ----------------------------------------------------------------------

def cmd_spectrum(cfg, out):
    sp, _, params = build_spectrum(cfg, base_dir=cfg["_base_dir"])
    write_spectrum_csv(sp, out / "spectrum.csv")
    write_json(out / "spectrum.json", {
        "source": sp.source, "parameters": params, "count": len(sp),
        "trace": math.fsum(sp.values), "truncation_note": sp.truncation_note,
        "complete": sp.complete})
    return EXIT_OK


def _scale(cfg, sp, setup):
    if cfg["norm"] == "L2":
        return math.sqrt(sp.lambda1)
    if setup is not None:
        kernel, _, _, grid = setup
        return sup_diag(kernel, grid=grid)
    return float(cfg.get("d_k", 1.0))


BOUND_COLUMNS = ["epsilon", "upper_nats", "upper_bits", "upper_half_eps_nats",
                 "lower_simple_nats", "lower_main_half_eps_nats",
                 "lower_minor_half_eps_nats", "rate_distortion_at_matched_D",
                 "theta_star", "delta_star", "lower_main_flag", "lower_minor_flag"]


def bound_row(eps, sp, scale, mass, cfg):
    """One self-checked row of the bounds table, plus its reports."""
    theta = cfg.get("theta_grid") or B.DEFAULT_THETA_GRID
    c = cfg["c_universal"]
    npts = cfg["delta_points"]
    conv = cfg["norm"]
    up = B.upper_bound_main(eps, sp, scale, theta, conv)
    up2 = B.upper_bound_main(eps / 2.0, sp, scale, theta, conv)
    ls = B.lower_bound_simple(eps, sp, mass)
    lm = B.lower_bound_main(eps, sp, mass, c, npts)
    ln_ = B.lower_bound_minor(eps, sp, mass, c, npts)
    dist = math.fsum(np.minimum(sp.values, eps))
    wf = B.water_fill(dist, sp) if dist > 0 else None

    problems = []
    if not (B.recheck_upper(up) and B.recheck_upper(up2)):
        problems.append("upper witness does not reproduce the value")
    if not B.recheck_lower_main(lm, sp, mass):
        problems.append("lower_main witness fails its constraints")
    if "f" in ln_.witnesses:
        w = ln_.witnesses
        if B.minor_f(w["delta"], w["M"], sp, w["delta0"]) != w["f"]:
            problems.append("lower_minor witness f does not reproduce")
    if ls.value > up.value:
        problems.append(f"lower_simple {ls.value} > upper {up.value}")
    if lm.value > up2.value:
        problems.append(f"lower_main {lm.value} > upper(eps/2) {up2.value}")
    if ln_.value > up2.value:
        problems.append(f"lower_minor {ln_.value} > upper(eps/2) {up2.value}")
    if problems:
        raise BoundViolation(f"row eps={eps!r}: " + "; ".join(problems))

    row = {
        "epsilon": float(eps), "upper_nats": up.value, "upper_bits": up.value_bits,
        "upper_half_eps_nats": up2.value, "lower_simple_nats": ls.value,
        "lower_main_half_eps_nats": lm.value, "lower_minor_half_eps_nats": ln_.value,
        "rate_distortion_at_matched_D": wf.rate if wf else 0.0,
        "theta_star": up.witnesses["theta"],
        "delta_star": lm.witnesses.get("delta_star"),
        "lower_main_flag": lm.witnesses.get("fallback", ""),
        "lower_minor_flag": ln_.witnesses.get("flag", ""),
    }
    return row, [up, up2, ls, lm, ln_]


def cmd_bounds(cfg, out):
    setup = build_setup(cfg) if (cfg.get("spectrum") or {"source": "nystrom"})["source"] == "nystrom" else None
    sp, _, params = build_spectrum(cfg, setup, cfg["_base_dir"])
    sp = sp.trusted()
    scale = _scale(cfg, sp, setup)
    mass = total_mass(cfg)
    eps_grid = cfg.get("epsilon_grid") or [float(x) for x in np.logspace(-4, 0, 20)]
    rows, reports = [], []
    for eps in eps_grid:
        row, reps = bound_row(float(eps), sp, scale, mass, cfg)
        rows.append(row)
        reports.extend(r.to_dict() for r in reps)
    write_csv(out / "bounds.csv", BOUND_COLUMNS, rows)
    write_json(out / "bounds.json", {"spectrum": params, "scale": scale, "total_mass": mass,
                                     "reports": reports})
    return EXIT_OK


def _kernel_points(cfg, setup, m, rng):
    _, domain, _, _ = setup
    lo = np.array([a for a, _ in domain.box])
    hi = np.array([b for _, b in domain.box])
    return lo + (hi - lo) * rng.random((m, domain.dim))


def cmd_rademacher(cfg, out):
    setup = build_setup(cfg)
    kernel = setup[0]
    rc = cfg.get("rademacher", {})
    sets, m, trials = int(rc.get("sets", 3)), int(rc.get("m", 50)), int(rc.get("trials", 10_000))
    seeds = np.random.SeedSequence(cfg["seed"]).spawn(sets)
    rows = []
    for k, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        pts = _kernel_points(cfg, setup, m, rng)
        sub = int(rng.integers(0, 2**63 - 1))
        mc = V.rademacher_mc(kernel, pts, trials, sub)
        bound = V.rademacher_bound(V.gram_spectrum(kernel, pts))
        lhs = mc.mean + 3 * mc.stderr
        rows.append({"set": k, "m": m, "trials": trials, "mc_mean": mc.mean,
                     "mc_stderr": mc.stderr, "bound": bound, "margin": bound - lhs,
                     "status": "pass" if lhs <= bound else "fail"})
    write_csv(out / "rademacher.csv",
              ["set", "m", "trials", "mc_mean", "mc_stderr", "bound", "margin", "status"], rows)
    return EXIT_OK if all(r["status"] == "pass" for r in rows) else EXIT_CHECK


def cmd_gaussian_asymptotics(cfg, out):
    gc = cfg.get("gaussian_asymptotics", {})
    sigma = float(gc.get("sigma", 1.0))
    ns = [int(n) for n in gc.get("n", [1, 2])]
    eps_list = [float(e) for e in gc.get("epsilons", [1e-4, 1e-6, 1e-8, 1e-10, 1e-12])]
    rows, ok = [], True
    for n in ns:
        for eps in eps_list:
            rep = B.gaussian_entropy_bound(eps, sigma, n, float(gc.get("C", 1.0)))
            lg = math.log(1.0 / eps)
            row = {"n": n, "epsilon": eps, "bound_nats": rep.value, "q_star": rep.witnesses["q"],
                   "rate_ratio": rep.value / (lg ** (n + 1) / math.log(lg) ** n)}
            try:
                row["volume_count"] = B.integer_point_count(eps, sigma, n, "volume_bound")
            except RegimeError:
                row["volume_count"] = None
            if n <= 3 and eps >= 1e-12:
                row["exact_count"] = B.integer_point_count(eps, sigma, n)
                if row["volume_count"] is not None and row["exact_count"] > row["volume_count"]:
                    ok = False
            rows.append(row)
    write_csv(out / "gaussian_asymptotics.csv",
              ["n", "epsilon", "bound_nats", "q_star", "rate_ratio", "exact_count", "volume_count"],
              rows)
    return EXIT_OK if ok else EXIT_CHECK


def eigen_bound_check(system, sigma):
    sp = system.spectrum.trusted()
    excess = [lam - gaussian_eigen_bound(k, sigma) for k, lam in enumerate(sp.values, start=1)]
    worst = max(excess)
    return V.check_leq("gaussian_eigen_bound", worst, 1e-9, None, sigma=sigma,
                       trusted=len(sp))


SUITES = ("eigen_bound", "rademacher", "covering", "function_probe", "kkl", "quantizer")


def cmd_validate(cfg, out):
    vc = cfg.get("validate", {})
    suites = vc.get("suites", list(SUITES))
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise ConfigError(f"unknown suites {unknown}", "validate.suites")
    seed = cfg["seed"]
    checks = []
    need_system = {"eigen_bound", "function_probe", "kkl"} & set(suites)
    setup = build_setup(cfg) if need_system or "rademacher" in suites else None
    system = None
    if need_system:
        _, system, _ = build_spectrum(dict(cfg, spectrum={"source": "nystrom",
                                                          **vc.get("nystrom", {})}), setup)
    kernel = setup[0] if setup else None
    for suite in suites:
        if suite == "eigen_bound":
            if not isinstance(kernel, GaussianKernel) or setup[1].dim != 1:
                raise ConfigError("eigen_bound suite needs a 1-D gaussian kernel", "validate.suites")
            checks.append(eigen_bound_check(system, kernel.sigma))
        elif suite == "rademacher":
            rc = vc.get("rademacher", {})
            checks += V.suite_rademacher(kernel, int(rc.get("m", 50)), int(rc.get("trials", 10_000)),
                                         seed, setup[1].dim)
        elif suite == "covering":
            cc = vc.get("covering", {})
            axes = cc.get("axes")
            if axes is None:
                from .spectrum import gaussian_bound_spectrum
                g = gaussian_bound_spectrum(1.0, int(cc.get("N", 2))).values
                axes = g / g[0]
            checks += V.suite_covering(axes, tuple(cc.get("epsilons", (0.1, 0.2, 0.4))),
                                       int(cc.get("budget", 100_000)), seed)
        elif suite == "function_probe":
            fc = vc.get("function_probe", {})
            checks += V.suite_function_probe(system, kernel, int(fc.get("n_keep", 4)),
                                             float(fc.get("epsilon", 0.3)),
                                             int(fc.get("budget", 4000)), seed)
        elif suite == "kkl":
            kc = vc.get("kkl", {})
            checks += V.suite_kkl(system, kc.get("n_modes"), int(kc.get("samples", 10_000)),
                                  int(kc.get("pairs", 10)), seed)
        elif suite == "quantizer":
            checks += V.suite_quantizer()
    dicts = [c.to_dict() for c in checks]
    all_pass = all(c.status == "pass" for c in checks)
    write_json(out / "validate.json", {"all_pass": all_pass, "checks": dicts, "seed": seed})
    write_csv(out / "validate_summary.csv",
              ["check_name", "status", "lhs", "rhs", "margin", "seed"], dicts)
    return EXIT_OK if all_pass else EXIT_CHECK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "bounds": cmd_bounds,
    "rademacher": cmd_rademacher,
    "gaussian-asymptotics": cmd_gaussian_asymptotics,
    "validate": cmd_validate,
}


def build_parser():
    p = argparse.ArgumentParser(prog="kernel-entropy",
                                description="Spectral eps-entropy bounds for kernel RKHS balls.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, default=1,
                   help="accepted for interface compatibility; computations are serial")
    p.add_argument("--epsilon", type=float, help="run the bounds for this single eps")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError("must lie in [0, 2^64)", "--seed")
            cfg["seed"] = args.seed
        if args.epsilon is not None:
            cfg["epsilon_grid"] = [args.epsilon]
        if args.threads < 1:
            raise ConfigError("must be >= 1", "--threads")
        cfg = validate_config(cfg)
        cfg["_base_dir"] = str(Path(args.config).resolve().parent)
        out = check_out_dir(args.out)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, ParameterError, RegimeError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResourceError, NumericError, BudgetError) as exc:
        print(f"resource/numeric error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except BoundViolation as exc:
        print(f"check failure: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
