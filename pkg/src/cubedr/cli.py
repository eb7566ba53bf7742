"""Command-line entry point: every verification and study as a subcommand.

Exit status is 0 when all checks pass, 1 when a check fails and 2 on usage
errors.  Reports are JSON (or CSV where tabular) and are written atomically.
"""

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

FAMILY_NAMES = {
    "qminus": "Qminus", "s": "S", "sminus": "Sminus", "hermite": "Hermite",
    "adini": "Adini", "trimmed-adini": "TrimmedAdini", "reduced-adini": "ReducedAdini",
    "component-px": "ComponentPx",
}
TARGETS = {"s": "S", "S": "S", "sminus": "Sminus", "Sminus": "Sminus"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    family: str = None
    n: int = None
    k: int = None
    r: int = None
    mesh: tuple = None
    levels: int = None
    output: str = None
    format: str = "json"
    target: str = None
    seed: int = 0
    quiet: bool = False


def _family(name):
    key = name.lower()
    if key not in FAMILY_NAMES:
        raise UsageError(f"unknown family {name!r}; choose from {sorted(FAMILY_NAMES)}")
    return FAMILY_NAMES[key]


def _element(cfg):
    from .refelem import ElementError, build_element
    if None in (cfg.n, cfg.k, cfg.r):
        raise UsageError("--n, --k and --r are required")
    try:
        return build_element(cfg.family, cfg.n, cfg.k, cfg.r)
    except ElementError as exc:
        raise UsageError(str(exc))


def _check(checks, name, ok):
    checks.append({"name": name, "pass": bool(ok)})


# ---------------------------------------------------------------- subcommands

def cmd_element_info(cfg):
    from .refelem import element_info
    e = _element(cfg)
    return element_info(e), []


def cmd_unisolvence(cfg):
    from . import exact
    from .refelem import vandermonde
    e = _element(cfg)
    d = exact.det(vandermonde(e)) if e.dim else Fraction(1)
    checks = []
    _check(checks, "det_nonzero", d != 0)
    return {"element": e.name, "dim": e.dim, "det": str(d)}, checks


def cmd_bubbles(cfg):
    from .refelem import bubble_space
    e = _element(cfg)
    b = bubble_space(e)
    checks = []
    _check(checks, "bubble_dim_equals_interior_dofs", len(b) == e.interior_count())
    return {"element": e.name, "bubble_dim": len(b), "interior_dofs": e.interior_count()}, checks


def cmd_commute(cfg):
    from .refelem import ElementError, build_element
    from .xform import check_bubble_preservation, commute_paths, elements_equal, fingerprint
    if cfg.target not in TARGETS:
        raise UsageError("--target must be S or Sminus")
    target = TARGETS[cfg.target]
    if cfg.n is None or cfg.r is None:
        raise UsageError("--n and --r are required")
    ks = range(cfg.n + 1) if cfg.k is None else [cfg.k]
    results, checks = [], []
    for k in ks:
        try:
            base = build_element(cfg.family, cfg.n, k, cfg.r)
        except ElementError as exc:
            raise UsageError(str(exc))
        try:
            p1, p2 = commute_paths(base, target)
            ok = elements_equal(p1, p2)
            row = {"k": k, "base": base.name, "TQ": p1.name, "QT": p2.name,
                   "fingerprint_TQ": fingerprint(p1), "fingerprint_QT": fingerprint(p2),
                   "commute": ok}
        except ElementError as exc:
            ok = False
            row = {"k": k, "base": base.name, "error": str(exc), "commute": False}
        _check(checks, f"commute_k{k}", ok)
        if k in (0, 1):
            bp = check_bubble_preservation(base)
            row["bubbles_preserved"] = bp
            _check(checks, f"bubbles_k{k}", bp)
        results.append(row)
    return {"target": target, "n": cfg.n, "r": cfg.r, "results": results}, checks


def cmd_exactness(cfg):
    from .assembly import AssemblyError, build_complex, cohomology_report
    from .cubemesh import build_mesh
    from .refelem import ElementError
    if cfg.mesh is None or cfg.n is None or cfg.r is None:
        raise UsageError("--n, --r and --mesh are required")
    if len(cfg.mesh) != cfg.n:
        raise UsageError("mesh spec does not match --n")
    try:
        spaces = build_complex(build_mesh(cfg.n, cfg.mesh), cfg.family, cfg.r)
    except (ElementError, AssemblyError) as exc:
        raise UsageError(str(exc))
    rep = cohomology_report(spaces)
    checks = []
    _check(checks, "dd_zero", rep.dd_zero)
    _check(checks, "constants_in_kernel", rep.constants_in_kernel)
    _check(checks, "betti_trivial", rep.betti == [1] + [0] * cfg.n)
    out = {"family": cfg.family, "n": cfg.n, "r": cfg.r, "mesh": list(cfg.mesh),
           "elements": [s.element.name for s in spaces]}
    out.update(rep.to_dict())
    return out, checks


def _monotone(vals):
    return all(b < a for a, b in zip(vals, vals[1:]))


def cmd_poisson(cfg):
    from .nonconform import poisson_study
    if cfg.n not in (2, 3):
        raise UsageError("--dim must be 2 or 3")
    if cfg.family not in ("component", "adini1"):
        raise UsageError("--family must be component or adini1")
    levels = cfg.levels or (4 if cfg.n == 2 else 3)
    if levels < 1:
        raise UsageError("--levels must be positive")
    base = 4 if cfg.n == 2 else 2
    Ns = [base * 2 ** i for i in range(levels)]
    control = cfg.family == "component"
    res = poisson_study(cfg.n, cfg.family, Ns, probe=True, control=control)
    checks = []
    _check(checks, "errors_decrease", _monotone(res.err_H1h) and _monotone(res.err_L2))
    if levels >= 2:
        r1, r0 = res.rate_H1h[-1], res.rate_L2[-1]
        if cfg.n == 2:
            _check(checks, "rate_H1h_in_[0.85,1.3]", 0.85 <= r1 <= 1.3)
            _check(checks, "rate_L2_ge_1.6", r0 >= 1.6)
            _check(checks, "consistency_rate_ge_0.8", res.rate_consistency[-1] >= 0.8)
        else:
            _check(checks, "rate_H1h_ge_0.7", r1 >= 0.7)
    if control:
        _check(checks, "conforming_control_le_1e-9",
               max(res.conforming_consistency) <= 1e-9)
    rep = {"dim": cfg.n, "family": cfg.family, "levels": levels, "rows": res.rows(),
           "conforming_consistency": res.conforming_consistency}
    return rep, checks


def cmd_korn(cfg):
    from .nonconform import korn_study
    if cfg.family != "adini1":
        raise UsageError("--family must be adini1")
    levels = cfg.levels or 3
    Ns = [2 * 2 ** i for i in range(levels)]
    lam = korn_study(Ns, cfg.n or 2)
    variation = (max(lam) - min(lam)) / max(lam)
    checks = []
    _check(checks, "lambda_min_positive", min(lam) > 0)
    _check(checks, "variation_lt_25pct", variation < 0.25)
    rows = [{"N": N, "h": 1.0 / N, "lambda_min": v, "korn_constant": 1.0 / v}
            for N, v in zip(Ns, lam)]
    return {"family": cfg.family, "rows": rows, "variation": variation}, checks


def random_cubics(seed, count=50):
    from .polyform import Polynomial, exps_total
    rng = np.random.default_rng(seed)
    exps = exps_total(3, 3)
    out = []
    for _ in range(count):
        coeffs = rng.integers(-5, 6, size=len(exps))
        out.append(Polynomial(3, {e: int(c) for e, c in zip(exps, coeffs)}))
    return out


def cmd_interp(cfg):
    from .nonconform import (PI_Q_EXPECTED, _expected_poly, boundary_flux, component_spaces,
                             face_pair_integrals, split_residual, pi_q_table)
    from .polyform import Polynomial, exps_total
    checks, rows = [], []
    for name, u, q, w in pi_q_table():
        ok = q == _expected_poly(PI_Q_EXPECTED[name]) and u - q == w
        rows.append({"u": name, "Pi_Q u": repr(q), "u - Pi_Q u": repr(w), "pass": ok})
        _check(checks, f"pi_q_{name}", ok)
    mono = [Polynomial.monomial(e) for e in exps_total(3, 4)]
    _check(checks, "split_identity_monomials_deg_le_4",
           all(split_residual(u).is_zero() for u in mono))
    _check(checks, "split_identity_random_cubics",
           all(split_residual(u).is_zero() for u in random_cubics(cfg.seed)))
    P = component_spaces(3)["P"]
    _check(checks, "boundary_flux_zero",
           all(c == 0 for v in P for c in boundary_flux(v)))
    _check(checks, "face_pairs_equal",
           all(a == b for v in P for a, b in face_pair_integrals(v)))
    return {"seed": cfg.seed, "pi_q_table": rows, "random_cubics": 50,
            "monomials_checked": len(mono)}, checks


COMMANDS = {
    "element-info": cmd_element_info, "unisolvence": cmd_unisolvence,
    "bubbles": cmd_bubbles, "commute": cmd_commute, "exactness": cmd_exactness,
    "poisson": cmd_poisson, "korn": cmd_korn, "interp-identities": cmd_interp,
}


# ---------------------------------------------------------------- plumbing

def build_parser():
    p = argparse.ArgumentParser(prog="cubedr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--output", "-o", help="report path (stdout if omitted)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--quiet", "-q", action="store_true")
        return sp

    for name in ("element-info", "unisolvence", "bubbles"):
        sp = common(sub.add_parser(name))
        sp.add_argument("--family", required=True)
        sp.add_argument("--n", type=int, required=True)
        sp.add_argument("--k", type=int, required=True)
        sp.add_argument("--r", type=int, required=True)
    sp = common(sub.add_parser("commute"))
    sp.add_argument("--base", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--k", type=int)
    sp = common(sub.add_parser("exactness"))
    sp.add_argument("--family", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--mesh", required=True)
    sp = common(sub.add_parser("poisson"))
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--family", required=True)
    sp.add_argument("--levels", type=int)
    sp = common(sub.add_parser("korn"))
    sp.add_argument("--family", default="adini1")
    sp.add_argument("--levels", type=int)
    sp.add_argument("--dim", type=int, default=2)
    sp = common(sub.add_parser("interp-identities"))
    sp.add_argument("--seed", type=int, default=0)
    return p


def make_config(args):
    from .cubemesh import MeshError, parse_mesh_spec
    cfg = RunConfig(args.subcommand, output=args.output, format=args.format, quiet=args.quiet)
    if args.subcommand in ("element-info", "unisolvence", "bubbles", "exactness"):
        cfg.family = _family(args.family)
        cfg.n, cfg.r = args.n, args.r
        cfg.k = getattr(args, "k", None)
    if args.subcommand == "commute":
        cfg.family = _family(args.base)
        cfg.target, cfg.n, cfg.r, cfg.k = args.target, args.n, args.r, args.k
    if args.subcommand == "exactness":
        try:
            cfg.mesh = parse_mesh_spec(args.mesh)
        except MeshError as exc:
            raise UsageError(str(exc))
    if args.subcommand == "poisson":
        cfg.family, cfg.n, cfg.levels = args.family, args.dim, args.levels
    if args.subcommand == "korn":
        cfg.family, cfg.levels, cfg.n = args.family, args.levels, args.dim
    if args.subcommand == "interp-identities":
        cfg.seed = args.seed
    if cfg.n is not None and cfg.n not in (2, 3):
        raise UsageError("n must be 2 or 3")
    return cfg


def render(report, checks, fmt, subcommand):
    report = dict(report)
    report["checks"] = checks
    report["pass"] = all(c["pass"] for c in checks)
    report["subcommand"] = subcommand
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True, default=str) + "\n"
    buf = io.StringIO()
    if subcommand == "poisson":
        cols = ["h", "err_H1h", "err_L2", "rate_H1h", "rate_L2", "consistency"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for row in report["rows"]:
            w.writerow({c: "" if row[c] is None else repr(row[c]) for c in cols})
    else:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check", "pass"])
        for c in checks:
            w.writerow([c["name"], c["pass"]])
    return buf.getvalue()


def write_atomic(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".cubedr-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg):
    """Execute a configuration; returns (exit status, report text)."""
    report, checks = COMMANDS[cfg.subcommand](cfg)
    text = render(report, checks, cfg.format, cfg.subcommand)
    if cfg.output:
        write_atomic(cfg.output, text)
    failed = [c["name"] for c in checks if not c["pass"]]
    return (1 if failed else 0), text, failed


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        if not cfg.quiet:
            print(f"running {cfg.subcommand}", file=sys.stderr)
        status, text, failed = run(cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not cfg.output:
        sys.stdout.write(text)
    for name in failed:
        print(f"check failed: {name}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
