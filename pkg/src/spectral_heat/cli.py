"""Command-line front end.

Commands
--------
density   subordinator density on a log grid: ``x,value,method,est_error``
curve     heat content curve on a geometric grid: ``t,value,stderr``
verify    one named check: ``check,predicted,estimated,rel_err,verdict``
report    the deterministic checks plus a plain-text summary

Settings come from flags, optionally layered over a TOML file given with
``--config`` (flags win).  Exit codes: 0 success, 1 a verification failed,
2 usage or configuration error, 3 numerical failure.
"""

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics as asym
from . import heat_brownian as hb
from . import shc
from . import subordinator as sub
from .errors import DomainError, NumericalError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

COMMANDS = ("density", "curve", "verify", "report")
CHECKS = ("thm11", "thm12", "remark13", "prop35", "lemmas", "ub-bounds")
QUANTITIES = ("Q2", "QTilde", "QTildeMC", "QAlphaMC")
FORMATS = ("csv", "jsonl")

DENSITY_HEADER = ("x", "value", "method", "est_error")
CURVE_HEADER = ("t", "value", "stderr")
VERIFY_HEADER = ("check", "predicted", "estimated", "rel_err", "verdict")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Every setting of a run; round-trips through :meth:`to_toml`."""

    command: str = "verify"
    check: str = "thm11"
    quantity: str = "QTilde"
    domain: str = "interval:0,1"
    alpha: float = 1.5
    t: float = 1.0
    t_grid: list = field(default_factory=lambda: [1e-1, 1e-4, 7])
    x_grid: list = field(default_factory=lambda: [1e4, 1e-3, 141])
    include_zero: bool = False
    rel_tol: float = 1e-11
    abs_tol: float = 1e-300
    n_samples: int = 100_000
    seed: int = 20240101
    batch: int = 50_000
    n_grid: int = 256
    output: str = "-"
    format: str = "csv"

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.check not in CHECKS:
            raise ConfigError(f"unknown check {self.check!r}; choose from {', '.join(CHECKS)}")
        if self.quantity not in QUANTITIES:
            raise ConfigError(f"unknown quantity {self.quantity!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}")
        try:
            hb.parse_domain(self.domain)
            sub.Alpha(self.alpha)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        for name in ("t_grid", "x_grid"):
            g = getattr(self, name)
            if len(g) != 3 or not (g[0] > g[1] > 0) or int(g[2]) != g[2] or g[2] < 2:
                raise ConfigError(f"{name} must be [max, min, points] with max > min > 0")
        if self.n_samples < 1 or self.batch < 1 or self.n_grid < 4 or self.n_grid % 4:
            raise ConfigError("n_samples, batch >= 1 and n_grid a positive multiple of 4")
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.t > 0):
            raise ConfigError("tolerances and t must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in 64 bits")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls()
        for key, value in data.items():
            default = getattr(cfg, key)
            try:
                if isinstance(default, bool):
                    if not isinstance(value, bool):
                        raise TypeError
                elif isinstance(default, int):
                    value = int(value)
                elif isinstance(default, float):
                    value = float(value)
                elif isinstance(default, list):
                    value = [float(v) for v in value]
                    value[-1] = int(value[-1])
                else:
                    value = str(value)
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {key}: {value!r}") from None
            setattr(cfg, key, value)
        return cfg

    def to_toml(self):
        lines = []
        for key, value in self.to_dict().items():
            lines.append(f"{key} = {_toml_value(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_toml(cls, text):
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from None
        return cls.from_dict(data)


def _toml_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return json.dumps(str(value))


# --------------------------------------------------------------------------
# output


def fmt(value):
    """Numbers as 15 significant digits in exponent form; empty for missing."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".14e")


class Table:
    """Row writer for the csv and json-lines formats."""

    def __init__(self, header, fmt_name):
        self.header = header
        self.format = fmt_name
        self.buf = io.StringIO()
        self.writer = csv.writer(self.buf, lineterminator="\n")
        if fmt_name == "csv":
            self.writer.writerow(header)

    def row(self, *values):
        if self.format == "csv":
            self.writer.writerow([fmt(v) for v in values])
        else:
            rec = {}
            for k, v in zip(self.header, values):
                if v is None or isinstance(v, str):
                    rec[k] = v
                else:
                    v = float(v)
                    rec[k] = v if math.isfinite(v) else fmt(v)
            self.buf.write(json.dumps(rec, sort_keys=False) + "\n")

    def text(self):
        return self.buf.getvalue()


def _emit(text, output):
    if output in ("-", "", None):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# commands


def cmd_density(cfg):
    alpha = sub.Alpha(cfg.alpha)
    x_max, x_min, n = cfg.x_grid
    x = np.exp(np.linspace(math.log(x_min), math.log(x_max), int(n)))
    ev = sub.density(alpha, cfg.t, x)
    table = Table(DENSITY_HEADER, cfg.format)
    for xi, v, m, e in zip(x, ev.value, ev.method, ev.est_error):
        table.row(float(xi), float(v), str(m), float(e))
    return table.text(), EXIT_OK


def _t_grid(cfg):
    t_max, t_min, n = cfg.t_grid
    return asym.geometric_grid(t_max, t_min, int(n))


def _mc_config(cfg):
    return shc.McConfig(n_samples=cfg.n_samples, master_seed=cfg.seed, batch=cfg.batch)


def cmd_curve(cfg):
    domain = hb.parse_domain(cfg.domain)
    alpha = sub.Alpha(cfg.alpha)
    grid = _t_grid(cfg)
    table = Table(CURVE_HEADER, cfg.format)
    spec = shc.QuadratureSpec(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    if cfg.include_zero:
        if cfg.quantity != "Q2":
            raise ConfigError("include_zero applies to the Q2 curve only")
        table.row(0.0, hb.q2(domain, 0.0), None)
    for t in grid:
        if cfg.quantity == "Q2":
            table.row(t, hb.q2(domain, t), None)
        elif cfg.quantity == "QTilde":
            table.row(t, shc.q_tilde(domain, alpha, t, spec), None)
        elif cfg.quantity == "QTildeMC":
            est = shc.q_tilde_mc(domain, alpha, t, _mc_config(cfg))
            table.row(t, est.mean, est.stderr)
        else:
            est = shc.q_alpha_mc(domain, alpha, t, cfg.n_grid, _mc_config(cfg)).finest
            table.row(t, est.mean, est.stderr)
    return table.text(), EXIT_OK


def run_check(cfg):
    """Reports for the configured check."""
    domain = hb.parse_domain(cfg.domain)
    alpha = sub.Alpha(cfg.alpha)
    if cfg.check == "thm11":
        return [asym.verify_second_term(domain, alpha)]
    if cfg.check == "thm12":
        return [asym.verify_third_term(domain, alpha)]
    if cfg.check == "remark13":
        return [asym.verify_third_term_bracket(domain, alpha)]
    if cfg.check == "lemmas":
        return asym.verify_lemma_limits(alpha)
    if cfg.check == "prop35":
        rep, _ = asym.verify_sup_gap(alpha, _mc_config(cfg), cfg.n_grid)
        return [rep]
    rep, _ = asym.verify_upper_bounds(domain, alpha, _t_grid(cfg), cfg.n_grid, _mc_config(cfg))
    return [rep]


def _report_table(reports, fmt_name):
    table = Table(VERIFY_HEADER, fmt_name)
    for r in reports:
        table.row(r.check, r.predicted, r.estimated, r.rel_err, r.verdict)
    return table


def cmd_verify(cfg):
    reports = run_check(cfg)
    code = EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL
    return _report_table(reports, cfg.format).text(), code


REPORT_PLAN = (
    ("thm11", "interval:0,1", 1.5),
    ("thm11", "ball3:1", 1.5),
    ("thm11", "interval:0,1", 1.0),
    ("thm11", "interval:0,1", 0.5),
    ("thm12", "ball3:1", 1.5),
    ("remark13", "ball3:1", 1.5),
    ("lemmas", "interval:0,1", 1.0),
    ("lemmas", "interval:0,1", 1.5),
)


def cmd_report(cfg):
    reports = []
    for check, dom, a in REPORT_PLAN:
        reports.extend(run_check(dataclasses.replace(cfg, check=check, domain=dom, alpha=a)))
    table = _report_table(reports, cfg.format)
    width = max(len(r.check) for r in reports)
    lines = ["", "summary"]
    for r in reports:
        lines.append(f"  {r.check:<{width}}  {r.verdict}  rel_err={r.rel_err:.3e}")
    passed = sum(r.passed for r in reports)
    lines.append(f"  {passed}/{len(reports)} checks passed")
    sys.stderr.write("\n".join(lines) + "\n")
    code = EXIT_OK if passed == len(reports) else EXIT_FAIL
    return table.text(), code


HANDLERS = {"density": cmd_density, "curve": cmd_curve, "verify": cmd_verify,
            "report": cmd_report}


# --------------------------------------------------------------------------
# argument parsing


def _grid3(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected max,min,points")
    try:
        return [float(parts[0]), float(parts[1]), int(parts[2])]
    except ValueError:
        raise argparse.ArgumentTypeError("expected max,min,points") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spectral_heat",
        description="Spectral heat content of subordinate killed Brownian motion.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file with run settings (flags override it)")
    common.add_argument("--domain", help="interval:a,b or ball3:r")
    common.add_argument("--alpha", type=float, help="stability index in (0, 2)")
    common.add_argument("-o", "--output", help="output path, '-' for stdout")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--seed", type=int, help="master seed of Monte Carlo runs")
    common.add_argument("--n-samples", type=int, dest="n_samples")
    common.add_argument("--batch", type=int)
    common.add_argument("--n-grid", type=int, dest="n_grid", help="monitoring steps")
    common.add_argument("--t-grid", type=_grid3, dest="t_grid", metavar="MAX,MIN,POINTS")
    common.add_argument("--rel-tol", type=float, dest="rel_tol")
    common.add_argument("--abs-tol", type=float, dest="abs_tol")
    common.add_argument("--dump-config", action="store_true",
                        help="print the merged configuration as TOML and exit")

    subs = parser.add_subparsers(dest="command", required=True)
    p = subs.add_parser("density", parents=[common], help="subordinator density on a log grid")
    p.add_argument("--t", type=float, help="time of the density (default 1)")
    p.add_argument("--x-grid", type=_grid3, dest="x_grid", metavar="MAX,MIN,POINTS")
    p = subs.add_parser("curve", parents=[common], help="heat content curve")
    p.add_argument("--quantity", choices=QUANTITIES)
    p.add_argument("--include-zero", action="store_const", const=True, dest="include_zero",
                   help="prepend the t = 0 row (Q2 only)")
    p = subs.add_parser("verify", parents=[common], help="run one named check")
    p.add_argument("check", choices=CHECKS)
    subs.add_parser("report", parents=[common], help="run the deterministic checks")
    return parser


_NOT_CONFIG = {"config", "dump_config"}


def resolve_config(args):
    """Defaults, then the TOML file, then explicit flags."""
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "rb") as fh:
                data.update(tomllib.load(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {args.config}: {exc}") from None
    for key, value in vars(args).items():
        if key in _NOT_CONFIG or value is None:
            continue
        data[key] = value
    return RunConfig.from_dict(data).validate()


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.dump_config:
            _emit(cfg.to_toml(), "-")
            return EXIT_OK
        text, code = HANDLERS[cfg.command](cfg)
        _emit(text, cfg.output)
        return code
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: {exc}\n")
        return EXIT_USAGE
    except (NumericalError, ArithmeticError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except DomainError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
