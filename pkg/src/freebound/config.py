"""Experiment configuration files.

Line-oriented ``key = value`` pairs under ``[section]`` headers; ``#``
starts a comment.  Numbers may be constant expressions (``h = 1/64``) and
lists are comma separated.  Points are ``x, y`` pairs separated by ``;``.
See the README for the full key list.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, fields

from .errors import ParseError, ValidationError
from .expr import Expression, ExpressionError, parse_expression, parse_number

CHECKS = ("inclusions", "exponents", "nondegeneracy", "density", "porosity", "boxdim", "blowup", "comparison")
FORMATS = ("csv", "pgm")
EXAMPLE_NAMES = ("radial", "halfspace", "uncoupled", "shifted-paraboloid")


@dataclass
class GridConfig:
    lo: tuple = (-1.0, -1.0)
    hi: tuple = (1.0, 1.0)
    h: float = 1.0 / 64


@dataclass
class ProblemConfig:
    example: str | None = None
    alpha: float | None = None
    eps: float | None = None
    f: Expression | None = None
    g: Expression | None = None
    phi: Expression | None = None
    psi: Expression | None = None
    c0: float | None = None


@dataclass
class ScheduleConfig:
    eps: tuple = (1e-1, 1e-2, 1e-3)
    per_eps_tol: float = 1e-6
    acceptance_tol: float = 5e-2
    max_iterations: int = 60


@dataclass
class AnalysisConfig:
    solve: bool = True
    checks: tuple = CHECKS[:-1]
    points: tuple = ()
    radii: tuple = ()
    kappa: float = 0.5
    g_inf: float | None = None
    g2: Expression | None = None


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: tuple = ("csv",)


@dataclass
class ExperimentConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_text(self) -> str:
        return serialize_config(self)


SECTIONS = {
    "grid": GridConfig,
    "problem": ProblemConfig,
    "schedule": ScheduleConfig,
    "analysis": AnalysisConfig,
    "output": OutputConfig,
}


# -- value parsers ------------------------------------------------------------

def _number(text):
    return parse_number(text)


def _numbers(text):
    return tuple(parse_number(t) for t in text.split(",") if t.strip())


def _integer(text):
    val = parse_number(text)
    if val != int(val):
        raise ValueError(f"{text!r} is not an integer")
    return int(val)


def _boolean(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _words(text):
    return tuple(t.strip().lower() for t in text.split(",") if t.strip())


def _points(text):
    out = []
    for chunk in text.split(";"):
        if chunk.strip():
            out.append(tuple(parse_number(t) for t in chunk.strip().strip("()").split(",")))
    return tuple(out)


def _name(text):
    return text.strip().strip('"').strip("'")


PARSERS = {
    ("grid", "lo"): _numbers,
    ("grid", "hi"): _numbers,
    ("grid", "h"): _number,
    ("problem", "example"): _name,
    ("problem", "alpha"): _number,
    ("problem", "eps"): _number,
    ("problem", "f"): parse_expression,
    ("problem", "g"): parse_expression,
    ("problem", "phi"): parse_expression,
    ("problem", "psi"): parse_expression,
    ("problem", "c0"): _number,
    ("schedule", "eps"): _numbers,
    ("schedule", "per_eps_tol"): _number,
    ("schedule", "acceptance_tol"): _number,
    ("schedule", "max_iterations"): _integer,
    ("analysis", "solve"): _boolean,
    ("analysis", "checks"): _words,
    ("analysis", "points"): _points,
    ("analysis", "radii"): _numbers,
    ("analysis", "kappa"): _number,
    ("analysis", "g_inf"): _number,
    ("analysis", "g2"): parse_expression,
    ("output", "directory"): _name,
    ("output", "formats"): _words,
}


def _line_of(lines, section, key):
    """Line number of ``key`` inside ``[section]`` (1-based), for error messages."""
    current = None
    pat = re.compile(r"^\s*([^=:#;\s]+)\s*[=:]")
    for no, line in enumerate(lines, 1):
        m = re.match(r"^\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip().lower()
            continue
        m = pat.match(line)
        if m and current == section and m.group(1).lower() == key:
            return no
    return 0


def parse_config(text: str) -> ExperimentConfig:
    """Parse, fill defaults and validate.

    Raises :class:`ParseError` for malformed lines, unknown sections or keys
    and unparsable values, :class:`ValidationError` for semantic problems.
    """
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                       default_section="__none__")
    parser.optionxform = str.lower
    lines = text.splitlines()
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError(exc.lineno, "key outside any [section]") from None
    except configparser.DuplicateOptionError as exc:
        raise ParseError(exc.lineno, f"duplicate key {exc.option!r} in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ParseError(exc.lineno, f"duplicate section [{exc.section}]") from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else 0
        raise ParseError(lineno, "expected 'key = value'") from None
    cfg = ExperimentConfig()
    for section in parser.sections():
        sec = section.strip().lower()
        if sec not in SECTIONS:
            no = next((i for i, ln in enumerate(lines, 1) if ln.strip().lower() == f"[{section.lower()}]"), 0)
            raise ParseError(no, f"unknown section [{section}]")
        target = getattr(cfg, sec)
        for key, raw in parser.items(section):
            no = _line_of(lines, sec, key)
            if (sec, key) not in PARSERS:
                raise ParseError(no, f"unknown key {key!r} in [{sec}]")
            try:
                value = PARSERS[sec, key](raw)
            except (ExpressionError, ValueError) as exc:
                raise ParseError(no, f"{sec}.{key}: {exc}") from None
            setattr(target, key, value)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    from .coupled import EPS_FLOOR_FACTOR
    from .errors import FreeboundError
    from .grid import make_grid

    g = cfg.grid
    if len(g.lo) != len(g.hi) or len(g.lo) not in (1, 2):
        raise ValidationError("grid.lo", "lo and hi must both have 1 or 2 coordinates")
    try:
        make_grid(g.lo, g.hi, g.h)
    except FreeboundError as exc:
        raise ValidationError("grid.h", str(exc)) from None

    p = cfg.problem
    exprs = [p.f, p.g, p.phi, p.psi]
    has_expr = any(e is not None for e in exprs)
    if p.example is not None and has_expr:
        raise ValidationError("problem", "give either an example name or expressions, not both")
    if p.example is None and not has_expr:
        raise ValidationError("problem", "give an example name or the expressions f, g, phi, psi")
    if has_expr and any(e is None for e in exprs):
        missing = [n for n, e in zip(("f", "g", "phi", "psi"), exprs) if e is None]
        raise ValidationError("problem", f"missing expression(s): {', '.join(missing)}")
    if p.example is not None:
        if p.example not in EXAMPLE_NAMES:
            raise ValidationError("problem.example", f"unknown example {p.example!r}")
        if p.example == "shifted-paraboloid" and p.eps is None:
            raise ValidationError("problem.eps", "shifted-paraboloid needs eps")
        if (p.alpha is not None or p.eps is not None) and p.example not in ("halfspace", "shifted-paraboloid"):
            raise ValidationError("problem", f"example {p.example!r} takes no parameters")
        if p.example == "shifted-paraboloid" and p.alpha is not None:
            raise ValidationError("problem.alpha", "shifted-paraboloid takes only eps")

    s = cfg.schedule
    if not s.eps or any(e <= 0 for e in s.eps):
        raise ValidationError("schedule.eps", "eps values must be positive")
    if any(b >= a for a, b in zip(s.eps, s.eps[1:])):
        raise ValidationError("schedule.eps", "eps values must be strictly decreasing")
    floor = EPS_FLOOR_FACTOR * g.h**2
    if s.eps[-1] < floor:
        raise ValidationError("schedule.eps", f"final eps {s.eps[-1]:g} is below the floor 2h^2 = {floor:g}")
    if s.per_eps_tol <= 0 or s.acceptance_tol <= 0:
        raise ValidationError("schedule", "tolerances must be positive")
    if s.max_iterations < 1:
        raise ValidationError("schedule.max_iterations", "must be at least 1")

    a = cfg.analysis
    unknown = [c for c in a.checks if c not in CHECKS + ("all",)]
    if unknown:
        raise ValidationError("analysis.checks", f"unknown check(s): {', '.join(unknown)}")
    if "all" in a.checks:
        a.checks = CHECKS if a.g2 is not None else CHECKS[:-1]
    for pt in a.points:
        if len(pt) != len(g.lo) or any(not lo <= c <= hi for c, lo, hi in zip(pt, g.lo, g.hi)):
            raise ValidationError("analysis.points", f"point {pt} is not inside the domain")
    if any(r <= 0 for r in a.radii):
        raise ValidationError("analysis.radii", "radii must be positive")
    if a.kappa <= 0:
        raise ValidationError("analysis.kappa", "must be positive")
    if "comparison" in a.checks and a.g2 is None:
        raise ValidationError("analysis.g2", "the comparison check needs a second source g2")

    bad = [f for f in cfg.output.formats if f not in FORMATS]
    if bad:
        raise ValidationError("output.formats", f"unknown format(s): {', '.join(bad)}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Expression):
        return value.source
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(", ".join(repr(float(c)) for c in pt) for pt in value)
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Text that :func:`parse_config` maps back to an equal config."""
    out = []
    for sec in SECTIONS:
        out.append(f"[{sec}]")
        obj = getattr(cfg, sec)
        for f in fields(obj):
            value = getattr(obj, f.name)
            if value is None or value == ():
                continue
            out.append(f"{f.name} = {_fmt(value)}")
        out.append("")
    return "\n".join(out)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
