"""Command-line interface: JSON problem configs in, JSON reports out.

Commands: check-group, accuracy, cascade, lift, extract.  Exit codes:
0 success, 1 malformed input, 2 invalid group, 3 inadmissible dilation,
4 mask shape/multiplicity mismatch, 5 cascade non-convergence under
--strict.  Rational numbers travel as "p/q" strings so the exact pipeline
survives JSON; plain JSON floats select the floating backend.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

import numpy as np

from .accuracy import max_accuracy, sufficient_check
from .crystal import (AdmissibilityError, CrystalTriple, Dilation,
                      GroupValidationError, catalog_names, catalog_triple,
                      check_admissible, validate_triple)
from .linalg import Mat, QC
from .mask import Mask, MaskShapeError, extract_scalar, lattice_triple, \
    lift_scalar_to_matrix
from .multiidx import VCollection
from . import cascade as cascade_mod

SCHEMA_VERSION = 1
SEED_ENV_VAR = "CRYSTACC_SEED"
DEFAULT_SEED = 2026

EXIT_OK = 0
EXIT_MALFORMED = 1
EXIT_BAD_GROUP = 2
EXIT_INADMISSIBLE = 3
EXIT_SHAPE = 4
EXIT_NO_CONVERGENCE = 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- parsing

def _parse_scalar(value):
    """One JSON coefficient: "p/q" string or int -> exact, float -> float,
    [re, im] pair -> complex with the same rules."""
    if isinstance(value, bool):
        raise CliError(EXIT_MALFORMED, "boolean is not a coefficient")
    if isinstance(value, str):
        try:
            return QC.parse(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise CliError(EXIT_MALFORMED, f"bad rational {value!r}: {exc}")
    if isinstance(value, int):
        return QC(Fraction(value))
    if isinstance(value, float):
        return value
    if isinstance(value, list) and len(value) == 2:
        re_part, im_part = (_parse_scalar(v) for v in value)
        if isinstance(re_part, float) or isinstance(im_part, float):
            def as_float(x):
                return x if isinstance(x, float) else float(x.to_complex().real)
            return complex(as_float(re_part), as_float(im_part))
        return QC(re_part.re, im_part.re)
    raise CliError(EXIT_MALFORMED, f"cannot read coefficient {value!r}")


def _parse_matrix(rows, what: str) -> Mat:
    if not (isinstance(rows, list) and rows
            and all(isinstance(r, list) for r in rows)):
        raise CliError(EXIT_MALFORMED, f"{what} must be a nested list")
    parsed = [[_parse_scalar(x) for x in row] for row in rows]
    if any(isinstance(x, (float, complex)) for row in parsed for x in row):
        raise CliError(EXIT_MALFORMED, f"{what} must be exact rationals")
    return Mat.from_rows([[x.re for x in row] for row in parsed])


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError(EXIT_MALFORMED, f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_MALFORMED, f"malformed JSON: {exc}")
    if not isinstance(cfg, dict):
        raise CliError(EXIT_MALFORMED, "config must be a JSON object")
    return cfg


def _build_triple(cfg: dict) -> CrystalTriple:
    try:
        dim = int(cfg["dimension"])
    except (KeyError, TypeError, ValueError):
        raise CliError(EXIT_MALFORMED, "config needs an integer 'dimension'")
    group = cfg.get("group", "p1")
    lattice = cfg.get("lattice")
    try:
        if isinstance(group, str):
            if group not in catalog_names(dim):
                raise CliError(EXIT_BAD_GROUP,
                               f"unknown catalog group {group!r} in "
                               f"dimension {dim}")
            triple = catalog_triple(group, dim)
            if lattice is not None:
                r_mat = _parse_matrix(lattice, "lattice")
                triple = validate_triple(
                    r_mat, [Mat.from_rows(g.row_list(i) for i in range(dim))
                            for g in triple.group], group)
        else:
            r_mat = (_parse_matrix(lattice, "lattice") if lattice is not None
                     else Mat.identity(dim))
            gens = [_parse_matrix(g, "group generator") for g in group]
            from .crystal import generate_group
            triple = validate_triple(r_mat, generate_group(gens), "custom")
    except GroupValidationError as exc:
        raise CliError(EXIT_BAD_GROUP, f"invalid group: {exc}")
    return triple


def _build_dilation(cfg: dict, triple: CrystalTriple) -> Dilation:
    if "dilation" not in cfg:
        raise CliError(EXIT_MALFORMED, "config needs a 'dilation' matrix")
    a_mat = _parse_matrix(cfg["dilation"], "dilation")
    try:
        return check_admissible(a_mat, triple)
    except AdmissibilityError as exc:
        raise CliError(EXIT_INADMISSIBLE, f"inadmissible dilation: {exc}")


def _build_mask(cfg: dict, triple: CrystalTriple) -> Mask:
    entries = cfg.get("mask")
    if not isinstance(entries, list) or not entries:
        raise CliError(EXIT_MALFORMED, "config needs a nonempty 'mask' list")
    blocks = {}
    for pos, item in enumerate(entries):
        if not isinstance(item, dict):
            raise CliError(EXIT_MALFORMED, f"mask entry {pos} not an object")
        g = item.get("g", 0)
        k = item.get("k")
        coef = item.get("coef")
        if not isinstance(g, int) or not (0 <= g < triple.order):
            raise CliError(EXIT_MALFORMED,
                           f"mask entry {pos}: bad point index {g!r}")
        if (not isinstance(k, list) or len(k) != triple.d
                or not all(isinstance(x, int) for x in k)):
            raise CliError(EXIT_MALFORMED,
                           f"mask entry {pos}: k must be {triple.d} integers")
        if not isinstance(coef, list):
            coef = [[coef]]
        rows = [[_parse_scalar(x) for x in row] for row in coef]
        r = len(rows)
        if any(len(row) != r for row in rows):
            raise CliError(EXIT_SHAPE, f"mask entry {pos}: block not square")
        if any(isinstance(x, (float, complex)) for row in rows for x in row):
            data = np.array([[complex(x) if isinstance(x, (float, complex))
                              else x.to_complex() for x in row]
                             for row in rows])
            blk = Mat.from_array(data)
        else:
            blk = Mat.from_rows(rows)
        key = triple.element(g, tuple(k))
        if key in blocks:
            raise CliError(EXIT_MALFORMED,
                           f"mask entry {pos}: duplicate element")
        blocks[key] = blk
    try:
        return Mask(triple, blocks)
    except MaskShapeError as exc:
        raise CliError(EXIT_SHAPE, f"bad mask: {exc}")


# ------------------------------------------------------------ serialization

def _scalar_json(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, QC):
        if x.im == 0:
            return str(x.re)
        return [str(x.re), str(x.im)]
    z = complex(x)
    if z.imag == 0.0:
        return z.real
    return [z.real, z.imag]


def _mat_json(mat: Mat):
    if mat.backend == "exact":
        return [[_scalar_json(x) for x in mat.row_list(i)]
                for i in range(mat.rows)]
    arr = mat.np()
    return [[_scalar_json(arr[i, j]) for j in range(mat.cols)]
            for i in range(mat.rows)]


def _mask_json(mask: Mask) -> dict:
    entries = []
    for e, blk in mask.items():
        entries.append({"g": e.g, "k": list(e.k), "coef": _mat_json(blk)})
    return {"schema_version": SCHEMA_VERSION, "r": mask.r,
            "entries": entries}


def _witness_json(v: VCollection | None):
    if v is None:
        return None
    return [_mat_json(v.block(s)) for s in range(v.p)]


def _emit(report: dict) -> None:
    print(json.dumps(report, indent=2))


# ----------------------------------------------------------------- commands

def cmd_check_group(args) -> int:
    cfg = _load_config(args.config)
    triple = _build_triple(cfg)
    dilation = _build_dilation(cfg, triple)
    report = {
        "schema_version": SCHEMA_VERSION,
        "group": triple.name,
        "dimension": triple.d,
        "order": triple.order,
        "m": dilation.m,
        "digits": [{"g": e.g, "k": list(e.k)} for e in dilation.digits],
        "h": list(dilation.h),
        "rho": [list(row) for row in dilation.rho],
    }
    _emit(report)
    return EXIT_OK


def cmd_accuracy(args) -> int:
    cfg = _load_config(args.config)
    triple = _build_triple(cfg)
    dilation = _build_dilation(cfg, triple)
    mask = _build_mask(cfg, triple)
    options = cfg.get("options", {})
    if args.p_max is not None and args.p_max < 1:
        raise CliError(EXIT_MALFORMED, "--p-max must be at least 1")
    p_max = args.p_max if args.p_max is not None \
        else int(options.get("p_max", 6))
    report = {"schema_version": SCHEMA_VERSION, "method": args.method,
              "p_max": p_max}
    cert = None
    if args.method in ("condition-d", "both"):
        cert = max_accuracy(mask, triple, dilation, p_max)
        report["accuracy"] = cert.p
        report["witness"] = _witness_json(cert.witness)
        report["gate"] = _scalar_json(cert.gate) if cert.gate is not None \
            else None
        report["diagnostics"] = {
            str(k): (dict((str(a), b) for a, b in v.items())
                     if isinstance(v, dict) else v)
            for k, v in cert.diagnostics.items()}
    if args.method in ("sufficient", "both"):
        if mask.r != 1:
            raise CliError(EXIT_SHAPE,
                           "sufficient method needs a scalar mask (r=1), "
                           f"got r={mask.r}")
        # with both methods, test the sum rules at the certified order;
        # alone, at the requested order
        if cert is not None:
            p_claim = max(cert.p, 1)
        elif args.p_max is not None:
            p_claim = args.p_max
        else:
            p_claim = int(options.get("p_max", 2))
        suff = sufficient_check(mask, triple, dilation, p_claim)
        report["sufficient"] = {
            "p": suff.p,
            "passed": suff.passed,
            "sum_total": _scalar_json(suff.sum_total),
            "sum_rule_ok": suff.sum_rule_ok,
            "moments_ok": suff.moments_ok,
            "eigen_ok": suff.eigen_ok,
            "eigen_flags": {str(k): v for k, v in suff.eigen_flags.items()},
            "beta0_consistent": suff.beta0_consistent,
            "beta": [{"b": b, "alpha": list(alpha),
                      "value": _scalar_json(val)}
                     for (b, alpha), val in sorted(suff.beta.items())],
            "chain": _witness_json(suff.v_chain),
            "chain_residual_zero": suff.chain_residual_zero,
            "notes": suff.notes,
        }
    _emit(report)
    return EXIT_OK


def cmd_cascade(args) -> int:
    cfg = _load_config(args.config)
    triple = _build_triple(cfg)
    dilation = _build_dilation(cfg, triple)
    mask = _build_mask(cfg, triple)
    options = cfg.get("options", {})
    if args.iters is not None and args.iters < 1:
        raise CliError(EXIT_MALFORMED, "--iters must be at least 1")
    if args.grid is not None and args.grid < 0:
        raise CliError(EXIT_MALFORMED, "--grid must be nonnegative")
    if args.verify_p is not None and args.verify_p < 0:
        raise CliError(EXIT_MALFORMED, "--verify-p must be nonnegative")
    iters = args.iters if args.iters is not None \
        else int(options.get("iterations", 12))
    grid_q = args.grid if args.grid is not None \
        else int(options.get("grid_exponent", 8))
    tol = float(options.get("tolerance", 1e-5))
    count = int(options.get("sample_count", 32))
    seed = args.seed

    p_max = args.verify_p if args.verify_p is not None \
        else int(options.get("p_max", 6))
    cert = max_accuracy(mask, triple, dilation, max(p_max, 1))
    verify_p = args.verify_p if args.verify_p is not None \
        else max(cert.p, 1)
    result = cascade_mod.cascade_iterate(mask, triple, dilation, iters,
                                         grid_exponent=grid_q)
    field = result.field
    field_max = float(np.max(np.abs(field.data)))
    report = {
        "schema_version": SCHEMA_VERSION,
        "iterations": iters,
        "grid_exponent": grid_q,
        "seed": seed,
        "converged": result.converged,
        "sup_diff_last": result.sup_diffs[-1],
        "sup_diffs": list(result.sup_diffs),
        "field_max": field_max,
        "degenerate": field_max < 1e-12,
        "solver_accuracy": cert.p,
    }
    if not result.converged and args.strict:
        report["error"] = "cascade did not converge"
        _emit(report)
        return EXIT_NO_CONVERGENCE

    reports = []
    level = 0
    if not report["degenerate"]:
        pts = cascade_mod.sample_points(field, count, seed)
        v = cert.witness.to_float() if cert.witness is not None else None
        c_est = None
        for s in range(verify_p):
            if v is not None and s < cert.p:
                rep = cascade_mod.reproduce(field, v, s, pts, tol=tol)
                if s == 0:
                    c_est = rep.C
                entry = {"s": s, "residual": rep.residual,
                         "verdict": rep.verdict, "probed": False,
                         "C": _scalar_json(rep.C),
                         "excluded": rep.excluded,
                         "matched_form": rep.matched_form}
                ok = rep.verdict
            else:
                residual, v, c_est = cascade_mod._probe_block(
                    field, v, s, pts, c_est)
                ok = residual < tol
                entry = {"s": s, "residual": residual, "verdict": ok,
                         "probed": True}
            reports.append(entry)
            if ok and level == s:
                level = s + 1
    report["reports"] = reports
    report["empirical_accuracy"] = level

    if args.out:
        _dump_field_csv(field, args.out)
        report["csv"] = args.out
    _emit(report)
    return EXIT_OK


def _dump_field_csv(field, path: str) -> None:
    nodes = cascade_mod._node_points(field.lo, field.h, field.shape)
    flat = field.data.reshape(-1, field.r)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = [f"x{j}" for j in range(field.d)]
        for c in range(field.r):
            header += [f"re{c}", f"im{c}"]
        writer.writerow(header)
        for row, vals in zip(nodes, flat):
            out = [repr(float(x)) for x in row]
            for c in range(field.r):
                out += [repr(float(vals[c].real)), repr(float(vals[c].imag))]
            writer.writerow(out)


def cmd_lift(args) -> int:
    cfg = _load_config(args.config)
    triple = _build_triple(cfg)
    dilation = _build_dilation(cfg, triple)
    mask = _build_mask(cfg, triple)
    if mask.r != 1:
        raise CliError(EXIT_SHAPE, f"lift needs a scalar mask, got r={mask.r}")
    try:
        lifted = lift_scalar_to_matrix(mask, dilation)
    except MaskShapeError as exc:
        raise CliError(EXIT_SHAPE, str(exc))
    _emit(_mask_json(lifted))
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = _load_config(args.config)
    triple = _build_triple(cfg)
    dilation = _build_dilation(cfg, triple)
    lat = lattice_triple(triple)
    raw_mask = _build_mask({"mask": cfg.get("mask"), "dimension": triple.d},
                           lat)
    if raw_mask.r != triple.order:
        raise CliError(EXIT_SHAPE,
                       f"extract needs block size {triple.order} to match "
                       f"the point group, got {raw_mask.r}")
    try:
        scalar = extract_scalar(raw_mask, triple, dilation)
    except MaskShapeError as exc:
        raise CliError(EXIT_SHAPE, str(exc))
    _emit(_mask_json(scalar))
    return EXIT_OK


# ---------------------------------------------------------------- dispatch

def _default_seed() -> int:
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_SEED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crystacc",
        description="Accuracy of refinable functions over crystal groups")
    parser.add_argument("--seed", type=int, default=_default_seed(),
                        help="seed for randomized sampling "
                             f"(env {SEED_ENV_VAR})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-group", help="validate group and dilation")
    p.add_argument("config")
    p.set_defaults(func=cmd_check_group)

    p = sub.add_parser("accuracy", help="exact accuracy certificates")
    p.add_argument("config")
    p.add_argument("--method", choices=("condition-d", "sufficient", "both"),
                   default="condition-d")
    p.add_argument("--p-max", type=int, default=None)
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("cascade", help="floating-point oracle")
    p.add_argument("config")
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--verify-p", type=int, default=None)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out", default=None, help="CSV dump of the field")
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("lift", help="scalar mask to matrix lattice mask")
    p.add_argument("config")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("extract", help="matrix lattice mask to scalar mask")
    p.add_argument("config")
    p.set_defaults(func=cmd_extract)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(json.dumps({"schema_version": SCHEMA_VERSION,
                          "error": str(exc)}, indent=2))
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except cascade_mod.CascadeError as exc:
        print(json.dumps({"schema_version": SCHEMA_VERSION,
                          "error": str(exc)}, indent=2))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
