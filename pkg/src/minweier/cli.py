"""Command-line entry point.

    minweier generate|verify|pde|reconstruct|classify [--config FILE] [overrides]

Exit codes: 0 success, 1 usage or configuration error, 2 empty admissible set.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from ._backend import BACKEND
from .errors import ExprSyntaxError, GaussFieldError, MinWeierError, QuadratureError
from .expr import parse_expr, to_string
from .geometry import (
    FAMILIES, INFORMATIONAL, SECOND_ORDER, Sampler, classify_subclass, default_fd_step,
    pde_residual_25, residual_suite, richardson_ratios, ResidualField,
)
from .mesh_io import (
    DiagnosticsReport, mesh_from_arrays, grid_to_mesh, read_gauss_csv, write_gauss_csv,
    write_obj, write_ply, write_report,
)
from .reconstruct import GaussField, integrate_34, validate_33
from .weierstrass import Flag, WeierstrassJob, classify_points, generate_grid, holo

log = logging.getLogger("minweier")

EXIT_OK, EXIT_USAGE, EXIT_EMPTY = 0, 1, 2
RATIO_BAND = (3.0, 5.0)

# documented defaults for every optional key
DEFAULTS = {
    "domain": "0.1,1.1,0.1,1.1",
    "grid": "33x33",
    "quad_tol": "1e-10",
    "mu_floor": "1e-12",
    "reg_floor": "1e-12",
    "formats": "obj,ply",
    "base": "0,0",
}
KEYS = ("expr", "z0", "domain", "grid", "quad_tol", "mu_floor", "reg_floor", "fd_step",
        "out", "formats", "path_via", "gauss_csv", "base")


class ConfigError(MinWeierError):
    pass


class EmptyDomain(MinWeierError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _floats(text, n, key):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{key}: expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise ConfigError(f"{key}: expected {n} comma-separated numbers, got {text!r}")
    return vals


def _grid(text):
    parts = text.lower().split("x")
    try:
        nx, ny = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"grid: expected NxM, got {text!r}") from None
    if nx < 2 or ny < 2:
        raise ConfigError(f"grid: need at least 2x2 samples, got {text!r}")
    return nx, ny


def _number(cfg, key):
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"{key}: not a number: {cfg[key]!r}") from None


@dataclass
class RunConfig:
    job: WeierstrassJob | None
    expr_text: str | None
    fd_step: float
    out: str
    formats: tuple
    gauss_csv: str | None
    base: tuple
    raw: dict

    def echo(self):
        job = self.job
        echo = {"expr": self.expr_text,
                "expr_normalized": to_string(job.expr) if job else None}
        if job is not None:
            echo.update(z0=[job.z0.real, job.z0.imag], domain=list(job.domain),
                        grid=list(job.grid), quad_tol=job.quad_tol, mu_floor=job.mu_floor,
                        reg_floor=job.reg_floor,
                        path_via=[[p.real, p.imag] for p in job.path_via])
        echo["fd_step"] = self.fd_step
        if self.gauss_csv:
            echo["gauss_csv"] = os.path.basename(self.gauss_csv)
        return echo


def build_config(args, need_expr=True) -> RunConfig:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for key in ("expr", "domain", "grid", "z0", "quad_tol", "fd_step", "out", "gauss_csv"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v

    gauss_csv = cfg.get("gauss_csv")
    expr_text = cfg.get("expr")
    if expr_text is None and (need_expr or gauss_csv is None):
        raise ConfigError("missing required key 'expr'")
    job = None
    domain = _floats(cfg["domain"], 4, "domain")
    if expr_text is not None:
        try:
            expr = parse_expr(expr_text)
        except ExprSyntaxError as exc:
            raise ConfigError(f"expr: {exc}") from None
        if "z0" in cfg:
            zr, zi = _floats(cfg["z0"], 2, "z0")
            z0 = complex(zr, zi)
        else:
            z0 = complex(0.5 * (domain[0] + domain[1]), 0.5 * (domain[2] + domain[3]))
        via = ()
        if cfg.get("path_via"):
            via = tuple(complex(*_floats(p, 2, "path_via")) for p in cfg["path_via"].split(";"))
        try:
            job = WeierstrassJob(expr, z0, domain, _grid(cfg["grid"]),
                                 quad_tol=_number(cfg, "quad_tol"),
                                 mu_floor=_number(cfg, "mu_floor"),
                                 reg_floor=_number(cfg, "reg_floor"), path_via=via)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if "fd_step" in cfg:
        fd_step = _number(cfg, "fd_step")
        if not fd_step > 0:
            raise ConfigError("fd_step must be positive")
    else:
        x0, x1, y0, y1 = domain
        fd_step = default_fd_step(float(np.hypot(x1 - x0, y1 - y0)))
    formats = tuple(f.strip().lower() for f in cfg["formats"].split(",") if f.strip())
    for f in formats:
        if f not in ("obj", "ply"):
            raise ConfigError(f"formats: unknown mesh format {f!r}")
    base = tuple(int(v) for v in _floats(cfg["base"], 2, "base"))
    return RunConfig(job=job, expr_text=expr_text, fd_step=fd_step,
                     out=cfg.get("out", "."), formats=formats,
                     gauss_csv=gauss_csv, base=base, raw=cfg)


# --------------------------------------------------------------------------
# commands


def _flag_counts(flags):
    return {f.name: int(np.count_nonzero(flags == f)) for f in Flag}


def _subclass_tally(signs):
    return {"plus": int(np.count_nonzero(signs == 1)),
            "minus": int(np.count_nonzero(signs == -1)),
            "degenerate": int(np.count_nonzero(signs == 0))}


def _write_mesh(mesh, out, stem, formats):
    written = []
    for fmt in formats:
        path = os.path.join(out, f"{stem}.{fmt}")
        (write_obj if fmt == "obj" else write_ply)(mesh, path)
        written.append(os.path.basename(path))
    return written


def cmd_generate(rc: RunConfig):
    job = rc.job
    grid = generate_grid(job)
    report = DiagnosticsReport("generate", rc.echo(), flags=grid.flag_counts())
    adm = grid.admissible
    pts = job.points[adm]
    if pts.size:
        report.subclass = _subclass_tally(classify_subclass(job.expr, pts, job.reg_floor))
    suite = residual_suite(Sampler.from_job(job), pts, rc.fd_step)
    for name in FAMILIES:
        report.add_family(suite[name].summary(), informational=name in INFORMATIONAL)

    files = []
    if pts.size:
        mesh = grid_to_mesh(grid)
        report.extra["triangles"] = len(mesh)
        report.extra["vertices"] = len(mesh.vertices)
        if len(mesh):
            files += _write_mesh(mesh, rc.out, "surface", rc.formats)
        pos = grid.position[adm]
        report.extra["bounding_box"] = [pos.min(axis=0), pos.max(axis=0)]
    if np.all(np.isfinite(grid.normal)):
        write_gauss_csv(GaussField.from_grid(grid), os.path.join(rc.out, "gauss.csv"))
        files.append("gauss.csv")
    report.extra["files"] = files
    write_report(report, os.path.join(rc.out, "report.json"))
    if not pts.size:
        raise EmptyDomain("no admissible grid points (see flags in report.json)")


def _checkable(job):
    flags = classify_points(job.holo, job.points, job.mu_floor, job.reg_floor)
    return flags, job.points[flags <= Flag.REG_FLOOR]


def cmd_verify(rc: RunConfig):
    job = rc.job
    flags, pts = _checkable(job)
    report = DiagnosticsReport("verify", rc.echo(), flags=_flag_counts(flags))
    sampler = Sampler.from_job(job)
    h = rc.fd_step
    coarse = residual_suite(sampler, pts, h)
    fine = residual_suite(sampler, pts, h / 2)
    ratios = richardson_ratios(coarse, fine)
    all_ok = True
    for name in FAMILIES:
        second = name in SECOND_ORDER
        ok = None
        if second and ratios[name] is not None:
            ok = RATIO_BAND[0] <= ratios[name] <= RATIO_BAND[1]
            all_ok &= ok
        report.add_family(coarse[name].summary(), max_half_step=fine[name].max,
                          richardson_ratio=ratios[name], second_order=ok,
                          informational=name in INFORMATIONAL)
    report.extra["all_second_order"] = bool(all_ok and pts.size > 0)
    report.extra["fd_steps"] = [h, h / 2]
    if pts.size:
        report.subclass = _subclass_tally(classify_subclass(job.expr, pts, job.reg_floor))
    write_report(report, os.path.join(rc.out, "verify_report.json"))
    if not pts.size:
        raise EmptyDomain("no grid point where the checks are defined")


def cmd_pde(rc: RunConfig):
    job = rc.job
    flags, pts = _checkable(job)
    report = DiagnosticsReport("pde", rc.echo(), flags=_flag_counts(flags))
    if pts.size:
        analytic, fd = pde_residual_25(job.expr, pts, rc.fd_step)
    else:
        analytic = fd = np.zeros(0)
    report.add_family(ResidualField("natural_pde_analytic", analytic, pts).summary())
    report.add_family(ResidualField("natural_pde_fd", fd, pts).summary())
    report.extra["excluded_points"] = int(flags.size - pts.size)
    write_report(report, os.path.join(rc.out, "pde_report.json"))
    if not pts.size:
        raise EmptyDomain("every grid point is flagged POLE or MU_FLOOR")


def cmd_classify(rc: RunConfig):
    job = rc.job
    flags, pts = _checkable(job)
    report = DiagnosticsReport("classify", rc.echo(), flags=_flag_counts(flags))
    if pts.size:
        signs = classify_subclass(job.expr, pts, job.reg_floor)
        report.subclass = _subclass_tally(signs)
        oracle = fd_sign_oracle(job.expr, pts, rc.fd_step)
        off = signs != 0
        report.extra["fd_oracle_agreement"] = (
            float(np.mean(oracle[off] == signs[off])) if np.any(off) else None
        )
    write_report(report, os.path.join(rc.out, "classify_report.json"))
    if not pts.size:
        raise EmptyDomain("every grid point is flagged POLE or MU_FLOOR")


def fd_sign_oracle(expr, points, h):
    """Sign of nu_x nu_y from central differences of nu."""
    from .weierstrass import eval_nu

    hl = holo(expr)
    nx = (eval_nu(hl, points + h) - eval_nu(hl, points - h)) / (2 * h)
    ny = (eval_nu(hl, points + 1j * h) - eval_nu(hl, points - 1j * h)) / (2 * h)
    return np.sign(nx * ny).astype(int)


def cmd_reconstruct(rc: RunConfig):
    report = DiagnosticsReport("reconstruct", rc.echo())
    grid = None
    if rc.gauss_csv:
        field = read_gauss_csv(rc.gauss_csv)
    else:
        grid = generate_grid(rc.job)
        report.flags = grid.flag_counts()
        field = GaussField.from_grid(grid)
    check = validate_33(field)
    report.add_family(check.residual.summary())
    report.extra["norm_violations"] = check.norm_violations
    report.extra["nu_flagged"] = int(np.count_nonzero(check.flagged))
    if not check.ok:
        write_report(report, os.path.join(rc.out, "reconstruct_report.json"))
        if check.norm_violations:
            i, j = check.norm_violations[0]
            raise GaussFieldError(f"sample ({i}, {j}) is not a unit vector")
        raise EmptyDomain("recovered nu vanishes on part of the grid")
    rec = integrate_34(field, rc.base)
    report.extra["base"] = list(rc.base)
    report.extra["integrability_commutator"] = rec.commutator

    if grid is not None:
        adm = grid.admissible
        i0, j0 = rc.base
        if adm[i0, j0]:
            ref = grid.position - grid.position[i0, j0]
            err = np.abs(rec.positions - ref)[adm]
            report.extra["max_error"] = float(err.max()) if err.size else None
            nx, ny = field.normals.shape[:2]
            if nx % 2 and ny % 2 and nx >= 5 and ny >= 5 and i0 % 2 == 0 and j0 % 2 == 0:
                coarse = GaussField(field.x[::2], field.y[::2], field.normals[::2, ::2])
                crec = integrate_34(coarse, (i0 // 2, j0 // 2))
                cadm = adm[::2, ::2]
                cerr = np.abs(crec.positions - ref[::2, ::2])[cadm]
                report.extra["max_error_double_spacing"] = float(cerr.max())
                if err.max() > 0:
                    report.extra["convergence_ratio"] = float(cerr.max() / err.max())

    mask = np.ones(field.normals.shape[:2], dtype=bool)
    mesh = mesh_from_arrays(rec.positions, field.normals, mask)
    report.extra["files"] = _write_mesh(mesh, rc.out, "reconstruct", rc.formats)
    write_report(report, os.path.join(rc.out, "reconstruct_report.json"))


COMMANDS = {
    "generate": cmd_generate,
    "verify": cmd_verify,
    "pde": cmd_pde,
    "reconstruct": cmd_reconstruct,
    "classify": cmd_classify,
}


def make_parser():
    parser = _Parser(prog="minweier", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--out", metavar="DIR")
        p.add_argument("--grid", metavar="NxM")
        p.add_argument("--expr", metavar="STRING")
        p.add_argument("--domain", metavar="xmin,xmax,ymin,ymax")
        p.add_argument("--z0", metavar="a,b")
        p.add_argument("--quad-tol", dest="quad_tol", metavar="T")
        p.add_argument("--fd-step", dest="fd_step", metavar="H")
        if name == "reconstruct":
            p.add_argument("--gauss-csv", dest="gauss_csv", metavar="PATH")
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        rc = build_config(args, need_expr=args.command != "reconstruct")
        log.info("kernel backend: %s", BACKEND)
        os.makedirs(rc.out, exist_ok=True)
        COMMANDS[args.command](rc)
    except EmptyDomain as exc:
        print(f"minweier {args.command}: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (ConfigError, GaussFieldError, QuadratureError, MinWeierError, ValueError, OSError) as exc:
        print(f"minweier {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
