"""Batch runner for identity checks, spectra, theorem checks and refinement sweeps.

Exit codes: 0 when every check passes, 1 when any check fails, 2 on a
configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import CONVENTIONS, __version__
from . import identity_lab as lab
from . import mesh as meshmod
from . import spectra
from .discrete import assemble, dump_matrices
from .fields import FieldSyntaxError, PFormField, parse_field, random_form, random_polynomial
from .quadrature import FlatDomain

SCHEMA_VERSION = "1"
COMMANDS = ("identities", "spectrum", "steklov", "theorem", "lp", "convergence")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None, source: str = "<flags>"):
        loc = source
        if line is not None:
            loc += f":{line}"
            if col is not None:
                loc += f":{col}"
        super().__init__(f"{loc}: {message}")


# ---------------------------------------------------------------------------
# configuration


OPTIONS = {
    # name: (type, default, commands)
    "domain": (str, "ball3", ("identities", "steklov", "theorem")),
    "shape": (str, "icosphere", ("spectrum", "convergence")),
    "embedding": (str, "circle", ("lp",)),
    "level": (int, 2, ("spectrum", "steklov", "theorem", "lp")),
    "levels": (str, "1,2,3", ("convergence",)),
    "weight": (str, "0", COMMANDS),
    "potential": (str, "1", ("identities", "theorem")),
    "omega": (str, None, ("identities",)),
    "p": (int, None, ("identities", "spectrum", "steklov", "theorem", "lp", "convergence")),
    "k": (int, 5, ("spectrum", "steklov", "theorem", "convergence")),
    "j": (str, "1", ("lp",)),
    "kind": (str, "coexact", ("spectrum", "convergence")),
    "case": (str, "thm1.2", ("theorem",)),
    "order": (int, 12, ("identities",)),
    "quad_order": (int, 4, ("spectrum", "steklov", "theorem", "lp", "convergence")),
    "cases": (int, 20, ("identities",)),
    "poly_degree": (int, 3, ("identities",)),
    "seed": (int, 0, COMMANDS),
    "tol": (float, 1e-8, ("identities",)),
    "pointwise_tol": (float, 1e-10, ("identities",)),
    "tol_rel": (float, None, ("theorem", "lp", "convergence", "spectrum", "steklov")),
    "expect": (str, None, ("spectrum", "steklov", "convergence")),
    "exclude_harmonic": (bool, False, ("steklov", "theorem")),
    "out": (str, None, COMMANDS),
    "csv": (str, None, COMMANDS),
    "dump_matrices": (str, None, ("spectrum",)),
}


def _convert(name: str, raw, where: tuple) -> object:
    typ = OPTIONS[name][0]
    if raw is None:
        return None
    if isinstance(raw, typ) and not isinstance(raw, bool) or typ is bool and isinstance(raw, bool):
        return raw
    text = str(raw).strip()
    try:
        if typ is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return typ(text)
    except ValueError:
        raise ConfigError(f"option {name!r} expects {typ.__name__}, got {text!r}", *where) from None


def read_config(path: str, command: str) -> tuple[dict, dict]:
    """Keys of the ``[command]`` section (plus ``[common]``) and their line numbers."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path} not found")
    text = p.read_text()
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(p))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], line, None, str(p)) from None
    lines = _key_lines(text)
    values, where = {}, {}
    for section in ("common", command):
        if not parser.has_section(section):
            continue
        for key, val in parser.items(section):
            name = key.replace("-", "_")
            ln, col = lines.get((section, key), (None, None))
            if name not in OPTIONS:
                raise ConfigError(f"unknown option {key!r}", ln, col, str(p))
            if command not in OPTIONS[name][2]:
                raise ConfigError(f"option {key!r} does not apply to {command!r}", ln, col, str(p))
            values[name] = val
            where[name] = (ln, col, str(p))
    unknown = [s for s in parser.sections() if s not in ("common",) + COMMANDS]
    if unknown:
        raise ConfigError(f"unknown section [{unknown[0]}]", None, None, str(p))
    return values, where


def _key_lines(text: str) -> dict:
    out, section = {}, None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif "=" in s and section is not None and not s.startswith(("#", ";")):
            key = s.split("=", 1)[0].strip().lower()
            col = line.index("=") + 2 + (len(line.split("=", 1)[1]) - len(line.split("=", 1)[1].lstrip()))
            out[(section, key)] = (i, col)
    return out


def resolve(command: str, flags: dict) -> tuple[dict, dict]:
    """Merge defaults, config file and flags (flags win)."""
    file_vals, where = ({}, {})
    if flags.get("config"):
        file_vals, where = read_config(flags["config"], command)
    cfg = {}
    for name, (typ, default, cmds) in OPTIONS.items():
        if command not in cmds:
            continue
        flag = flags.get(name)
        if flag is not None and flag is not False:
            cfg[name] = _convert(name, flag, (None, None, "<flags>"))
            where[name] = (None, None, f"--{name.replace('_', '-')}")
        elif name in file_vals:
            w = where[name]
            cfg[name] = _convert(name, file_vals[name], (w[0], w[1], w[2]))
        else:
            cfg[name] = default
    return cfg, where


def _field_error(name: str, exc: FieldSyntaxError, where: dict) -> ConfigError:
    ln, col, src = where.get(name, (None, None, "--" + name.replace("_", "-")))
    if ln is None:
        ln, col = 1, exc.col + 1
    else:
        col = (col or 1) + exc.col
    return ConfigError(f"{name}: {str(exc).split(' (line')[0]}", ln, col, src)


def _field(cfg: dict, where: dict, name: str, dim: int):
    text = cfg[name]
    try:
        return parse_field(text, dim)
    except FieldSyntaxError as exc:
        raise _field_error(name, exc, where) from None


def parse_form(text: str, dim: int) -> PFormField:
    """Form grammar: ``;``-separated ``key: expression`` terms.

    ``key`` is ``1`` for functions or a wedge of differentials such as
    ``dx1`` or ``dx1^dx3``; e.g. ``"dx2: x1; dx1: x3^2"`` is
    ``x1 dx2 + x3^2 dx1``. Error columns refer to ``text``.
    """
    comps: dict = {}
    degree = None
    offset = 0
    for term in text.split(";"):
        start = offset
        offset += len(term) + 1
        if not term.strip():
            continue
        if ":" not in term:
            raise FieldSyntaxError("form term needs 'key: expression'", text, 1, start)
        key, expr = term.split(":", 1)
        key_col = start + len(key) - len(key.lstrip())
        expr_col = start + len(key) + 1
        key = key.strip()
        idx: list[int] = []
        if key != "1":
            for s in key.split("^"):
                s = s.strip()
                if not (s.startswith("dx") and s[2:].isdigit() and 1 <= int(s[2:]) <= dim):
                    raise FieldSyntaxError(f"bad differential {s!r}", text, 1, key_col)
                idx.append(int(s[2:]) - 1)
        if degree is None:
            degree = len(idx)
        elif degree != len(idx):
            raise FieldSyntaxError("terms of different degree", text, 1, key_col)
        if len(set(idx)) != len(idx):
            raise FieldSyntaxError("repeated differential", text, 1, key_col)
        try:
            fld = parse_field(expr, dim)
        except FieldSyntaxError as exc:
            msg = str(exc).split(" (line")[0]
            raise FieldSyntaxError(msg, text, 1, expr_col + exc.col) from None
        comps.setdefault(tuple(idx), []).append(fld)
    if degree is None:
        raise FieldSyntaxError("empty form", text, 1, 0)
    merged = {}
    for idx, parts in comps.items():
        total = parts[0]
        for q in parts[1:]:
            total = total + q
        merged[idx] = total
    return PFormField(degree, dim, merged)


def _domain(name: str) -> FlatDomain:
    table = {"ball2": lambda: FlatDomain.ball(2), "ball3": lambda: FlatDomain.ball(3),
             "disc": lambda: FlatDomain.ball(2), "annulus2": lambda: FlatDomain.annulus(2),
             "annulus3": lambda: FlatDomain.annulus(3), "box2": lambda: FlatDomain.box(2),
             "box3": lambda: FlatDomain.box(3)}
    if name not in table:
        raise ConfigError(f"unknown domain {name!r}; choose from {sorted(table)}")
    return table[name]()


# ---------------------------------------------------------------------------
# commands


def _identities(cfg: dict, where: dict) -> tuple[list, list]:
    dom = _domain(cfg["domain"])
    D = dom.dim
    f = _field(cfg, where, "weight", D)
    V = _field(cfg, where, "potential", D)
    rng = np.random.default_rng(cfg["seed"])
    order, tol, ptol = cfg["order"], cfg["tol"], cfg["pointwise_tol"]
    if cfg["omega"]:
        try:
            omegas = [parse_form(cfg["omega"], D)]
        except FieldSyntaxError as exc:
            raise _field_error("omega", exc, where) from None
    else:
        degrees = range(D + 1) if cfg["p"] is None else [cfg["p"]]
        omegas = [random_form(rng, q, D, cfg["poly_degree"], 0.5) for q in degrees]
    reports = []
    for i in range(cfg["cases"]):
        case = lab.random_pointwise_case(cfg["seed"] * 100003 + i, D, poly_degree=cfg["poly_degree"])
        reports.extend(lab.pointwise_suite(case, ptol))
    round_dom = dom.kind != "box" and D >= 2
    for om in omegas:
        q = om.degree
        if q < D:
            psi = random_form(rng, q + 1, D, cfg["poly_degree"], 0.5)
            reports.append(lab.check_green(om, psi, f, dom, order, tol))
            F = [random_polynomial(rng, D, 2, 0.5) for _ in range(D)]
            reports.append(lab.check_pohozhaev(om, F, f, dom, order, tol))
        reports.append(lab.check_green_laplacian(om, f, dom, order, tol))
        if round_dom:
            for form in ("normal", "star"):
                reports.append(lab.check_reilly(om, f, V, dom, order, form, tol))
            if 1 <= q <= D - 1:
                for route in ("jet", "fd"):
                    reports.extend(lab.check_boundary_split(om, f, dom, 50, cfg["seed"], route, tol))
    rows = [[r.identity_id, r.domain, r.lhs, r.rhs, r.abs_residual, r.rel_residual, r.tolerance, r.passed]
            for r in reports]
    header = ["identity_id", "domain", "lhs", "rhs", "abs_residual", "rel_residual", "tolerance", "passed"]
    return [r.to_dict() | {"passed": r.passed} for r in reports], [header] + rows


def _expect(cfg: dict) -> list[float] | None:
    if not cfg.get("expect"):
        return None
    try:
        return [float(s) for s in cfg["expect"].split(",")]
    except ValueError:
        raise ConfigError(f"expect must be a comma-separated list of numbers, got {cfg['expect']!r}") from None


def _compare(values, expected, tol_rel) -> dict:
    n = min(len(values), len(expected))
    errs = [abs(values[i] - expected[i]) / max(abs(expected[i]), 1e-300) for i in range(n)]
    return {"expected": expected[:n], "rel_errors": errs, "tol_rel": tol_rel,
            "passed": bool(all(e <= tol_rel for e in errs))}


def _mesh(shape: str, level: int):
    try:
        if shape == "flat_torus":
            return meshmod.flat_torus(level, level)
        return meshmod.generate(shape, level)
    except meshmod.UnsupportedShape as exc:
        raise ConfigError(str(exc)) from None


def _spectrum(cfg: dict, where: dict) -> tuple[list, list]:
    K = _mesh(cfg["shape"], cfg["level"])
    f = _field(cfg, where, "weight", K.ambient_dim)
    WC = assemble(K, f, cfg["quad_order"])
    p = 0 if cfg["p"] is None else cfg["p"]
    kind = cfg["kind"]
    if kind == "coexact":
        r = spectra.coexact_spectrum(WC, p, cfg["k"])
    elif kind in ("exact", "exact-projection"):
        r = spectra.exact_spectrum(WC, p, cfg["k"], "projection" if kind.endswith("projection") else "duality")
    elif kind == "full":
        r = spectra.full_spectrum(WC, p, cfg["k"])
    else:
        raise ConfigError(f"unknown spectrum kind {kind!r}")
    d = r.to_dict()
    d["passed"] = bool(np.all(r.residuals <= 1e-8))
    exp = _expect(cfg)
    if exp is not None:
        d["comparison"] = _compare(list(r.eigenvalues), exp, cfg["tol_rel"] or 1e-2)
        d["passed"] = d["passed"] and d["comparison"]["passed"]
    if cfg["dump_matrices"]:
        d["matrix_files"] = dump_matrices(WC, cfg["dump_matrices"])
    rows = [["index", "eigenvalue", "residual"]] + [[i + 1, float(x), float(y)]
                                                    for i, (x, y) in enumerate(zip(r.eigenvalues, r.residuals))]
    return [d], rows


def _steklov(cfg: dict, where: dict) -> tuple[list, list]:
    name = cfg["domain"]
    mesh_name = {"ball2": "disc"}.get(name, name)
    if mesh_name not in ("disc", "ball3", "annulus3"):
        raise ConfigError(f"steklov supports disc, ball3, annulus3; got {name!r}")
    K = _mesh(mesh_name, cfg["level"])
    f = _field(cfg, where, "weight", K.ambient_dim)
    WC = assemble(K, f, cfg["quad_order"])
    p = 0 if cfg["p"] is None else cfg["p"]
    r = spectra.steklov_spectrum(WC, p, cfg["k"], include_harmonic=not cfg["exclude_harmonic"])
    d = r.to_dict()
    d["passed"] = bool(np.all(r.eigenvalues >= -1e-10) and np.all(r.residuals <= 1e-8))
    exp = _expect(cfg)
    if exp is not None:
        d["comparison"] = _compare(list(r.eigenvalues), exp, cfg["tol_rel"] or 2e-2)
        d["passed"] = d["passed"] and d["comparison"]["passed"]
    rows = [["index", "sigma", "residual"]] + [[i + 1, float(x), float(y)]
                                               for i, (x, y) in enumerate(zip(r.eigenvalues, r.residuals))]
    return [d], rows


def _theorem(cfg: dict, where: dict) -> tuple[list, list]:
    dom = _domain(cfg["domain"])
    _field(cfg, where, "weight", dom.dim)
    _field(cfg, where, "potential", dom.dim)
    kw = dict(domain=cfg["domain"], p=1 if cfg["p"] is None else cfg["p"], f=cfg["weight"], V=cfg["potential"], level=cfg["level"],
              k=cfg["k"], quad_order=cfg["quad_order"], include_harmonic=not cfg["exclude_harmonic"])
    if cfg["tol_rel"] is not None:
        kw["tol_rel"] = cfg["tol_rel"]
    try:
        chk = spectra.check_theorem(cfg["case"], **kw)
    except spectra.HypothesisViolated as exc:
        chk = exc.check
        chk.details["error"] = str(exc)
    d = chk.to_dict()
    rows = [["theorem_id", "computed", "bound", "margin", "passed"],
            [chk.theorem_id, chk.computed, chk.bound, chk.margin, chk.passed]]
    return [d], rows


def _int_list(text: str) -> list[int]:
    out = []
    try:
        for part in text.split(","):
            if "-" in part:
                a, b = part.split("-")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise ConfigError(f"expected integers like '1,3' or '1-5', got {text!r}") from None
    return out


def _lp(cfg: dict, where: dict) -> tuple[list, list]:
    name = cfg["embedding"]
    M = {"circle": 2, "sphere": 3, "clifford": 4}.get(name)
    if M is None:
        raise ConfigError(f"unknown embedding {name!r}")
    f = _field(cfg, where, "weight", M)
    emb = spectra.make_embedding(name, f)
    p = 1 if cfg["p"] is None else cfg["p"]
    tol = 0.0 if cfg["tol_rel"] is None else cfg["tol_rel"]
    out, rows = [], [["j", "computed", "bound", "margin", "passed"]]
    for j in _int_list(cfg["j"]):
        chk = spectra.lp_check(emb, p, j, cfg["level"], cfg["quad_order"], tol)
        out.append(chk.to_dict())
        rows.append([j, chk.computed, chk.bound, chk.margin, chk.passed])
    tr = spectra.trace_identities(emb, seed=cfg["seed"])
    tr["passed"] = bool(tr["max_residual"] < 1e-9)
    out.append(tr)
    return out, rows


def _convergence(cfg: dict, where: dict) -> tuple[list, list]:
    levels = _int_list(cfg["levels"])
    p = 0 if cfg["p"] is None else cfg["p"]
    K0 = _mesh(cfg["shape"], levels[0])
    f = _field(cfg, where, "weight", K0.ambient_dim)
    rows_out = []
    for lev in levels:
        K = _mesh(cfg["shape"], lev)
        WC = assemble(K, f, cfg["quad_order"])
        kind = cfg["kind"]
        r = spectra.full_spectrum(WC, p, cfg["k"]) if kind == "full" else spectra.coexact_spectrum(WC, p, cfg["k"])
        rows_out.append({"level": lev, "h": K.mesh_size(), "eigenvalues": [float(x) for x in r.eigenvalues]})
    d = {"rows": rows_out, "passed": True}
    if len(rows_out) >= 2:
        hs = [r["h"] for r in rows_out]
        d["richardson_first"] = spectra.richardson(hs, [r["eigenvalues"][0] for r in rows_out])
    exp = _expect(cfg)
    if exp is not None:
        est = d.get("richardson_first", rows_out[-1]["eigenvalues"][0])
        d["comparison"] = _compare([est], exp[:1], cfg["tol_rel"] or 5e-3)
        d["passed"] = d["comparison"]["passed"]
    header = ["level", "h"] + [f"lambda_{i + 1}" for i in range(cfg["k"])]
    table = [header] + [[r["level"], r["h"]] + r["eigenvalues"] for r in rows_out]
    return [d], table


RUNNERS = {"identities": _identities, "spectrum": _spectrum, "steklov": _steklov, "theorem": _theorem,
           "lp": _lp, "convergence": _convergence}


# ---------------------------------------------------------------------------
# output


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not np.isfinite(x):
            return repr(x)
        return x
    return x


def _atomic_write(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent), prefix=target.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weighted-hodge", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sp_ = sub.add_parser(cmd)
        sp_.add_argument("--config", help="key = value file with [common] and per-command sections")
        for name, (typ, default, cmds) in OPTIONS.items():
            if cmd not in cmds:
                continue
            flag = "--" + name.replace("_", "-")
            if typ is bool:
                sp_.add_argument(flag, dest=name, action="store_true", default=None)
            else:
                sp_.add_argument(flag, dest=name, default=None, help=f"default: {default}")
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    flags = vars(args)
    command = flags.pop("command")
    t0 = time.perf_counter()
    try:
        cfg, where = resolve(command, flags)
        results, rows = RUNNERS[command](cfg, where)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        cfg = locals().get("cfg", {})
        results, rows = [{"error": f"{type(exc).__name__}: {exc}", "passed": False}], []
    passed = bool(results) and all(bool(r.get("passed", False)) for r in results)
    report = {"schema_version": SCHEMA_VERSION, "tool_version": __version__, "conventions": CONVENTIONS,
              "command": command, "config": {k: v for k, v in sorted(cfg.items()) if k not in ("out", "csv")},
              "seed": cfg.get("seed"), "results": results, "passed": passed,
              "wall_time_s": round(time.perf_counter() - t0, 3)}
    text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
    if cfg.get("out"):
        _atomic_write(cfg["out"], text)
    else:
        sys.stdout.write(text)
    if cfg.get("csv") and rows:
        _atomic_write(cfg["csv"], _csv_text(rows))
    return 0 if passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
