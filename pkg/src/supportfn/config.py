"""Run configuration: YAML documents, polynomial and grid strings."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace

import yaml

from .cutoffs import parse_cutoff, validate_class_p
from .errors import SupportFnError
from .model import HolPoly, Weight
from .verify import CHECKS, CatalogConfig, Scenario, Tolerances


class ConfigError(SupportFnError):
    """Bad configuration; ``location`` names the offending key or line."""

    def __init__(self, message, location=""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


# --- small parsers -------------------------------------------------------------

def parse_grid(text) -> tuple:
    """``start:stop:step`` (stop included), a comma list, or one number."""
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} is not start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if not step > 0:
            raise ValueError("grid step must be positive")
        if stop < start:
            raise ValueError(f"grid {text!r} is empty")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(round(start + i * step, 12)) for i in range(n))
    vals = tuple(float(x) for x in text.split(",") if x.strip())
    if not vals:
        raise ValueError("grid is empty")
    return vals


_TERM = re.compile(
    r"^(?P<coef>\([^()]*\)|[0-9.]+(?:[eE][-+]?[0-9]+)?j?)?\*?(?P<z>z(?:\^(?P<pow>[0-9]+))?)?$"
)


def _split_terms(text):
    terms, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in "+-" and depth == 0 and cur and cur[-1] not in "eE^(":
            terms.append(cur)
            cur = ch
        else:
            cur += ch
    terms.append(cur)
    return [t for t in terms if t]


def parse_poly(text) -> HolPoly:
    """Polynomial in ``z`` such as ``"3+2z+z^3"``, ``"(1+2j)*z^2"``, or a coefficient list."""
    if isinstance(text, (list, tuple)):
        return HolPoly(tuple(complex(c) for c in text))
    if isinstance(text, (int, float, complex)):
        return HolPoly((complex(text),))
    s = str(text).replace(" ", "")
    if s.startswith("["):
        return HolPoly(tuple(complex(c.strip()) for c in s.strip("[]").split(",") if c.strip()))
    if not s:
        raise ValueError("polynomial is empty")
    coeffs = {}
    for term in _split_terms(s):
        sign = -1.0 if term.startswith("-") else 1.0
        body = term.lstrip("+-")
        m = _TERM.match(body)
        if not m or not (m.group("coef") or m.group("z")):
            raise ValueError(f"cannot parse polynomial term {term!r}")
        coef = complex(m.group("coef").strip("()")) if m.group("coef") else 1.0
        k = 0 if not m.group("z") else int(m.group("pow") or 1)
        coeffs[k] = coeffs.get(k, 0) + sign * coef
    n = max(coeffs) + 1
    return HolPoly(tuple(coeffs.get(k, 0) for k in range(n)))


def parse_density(text, loc="c"):
    """A cutoff spec that must also pass the class-P checks."""
    try:
        c = parse_cutoff(str(text))
    except (ValueError, SupportFnError) as e:
        raise ConfigError(str(e), loc) from None
    rep = validate_class_p(c)
    if not rep.passed:
        bad = ", ".join(r.name for r in rep.conditions if not r.passed)
        raise ConfigError(f"{c.spec} is not in class P (fails {bad})", loc)
    return c


def parse_weight(d, loc="weight") -> Weight:
    if not isinstance(d, dict):
        raise ConfigError("expected a mapping", loc)
    kind = d.get("kind", "radial")
    try:
        if kind == "radial":
            return Weight.radial(float(_req(d, "alpha", loc)))
        if kind in ("poles", "blaschke"):
            alphas = [float(a) for a in _req(d, "alphas", loc)]
            poles = [complex(p) for p in _req(d, "poles", loc)]
            return Weight.log_poles(alphas, poles, blaschke=kind == "blaschke")
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), loc) from None
    raise ConfigError(f"unknown weight kind {kind!r}", f"{loc}.kind")


def _req(d, key, loc):
    if key not in d:
        raise ConfigError("missing required key", f"{loc}.{key}")
    return d[key]


def _checks(value, loc):
    items = value.split(",") if isinstance(value, str) else list(value)
    items = tuple(str(i).strip() for i in items if str(i).strip())
    for i, name in enumerate(items):
        if name not in CHECKS:
            raise ConfigError(f"unknown check {name!r}", f"{loc}[{i}]")
    return items


# --- the document --------------------------------------------------------------

@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    format: str = "csv"
    timing: bool = False


@dataclass(frozen=True)
class RunConfig:
    catalog: CatalogConfig = CatalogConfig()
    output: OutputSpec = OutputSpec()


class _Loader(yaml.SafeLoader):
    """Safe loader without YAML 1.1 base-60 numbers, so ``1:5:1`` stays a grid string."""


_INT_TAG, _FLOAT_TAG = "tag:yaml.org,2002:int", "tag:yaml.org,2002:float"
_Loader.yaml_implicit_resolvers = {
    k: [(tag, rx) for tag, rx in v if tag not in (_INT_TAG, _FLOAT_TAG)]
    for k, v in yaml.SafeLoader.yaml_implicit_resolvers.items()
}
_Loader.add_implicit_resolver(
    _INT_TAG, re.compile(r"^(?:[-+]?0b[0-1_]+|[-+]?0[0-7_]+|[-+]?(?:0|[1-9][0-9_]*)|[-+]?0x[0-9a-fA-F_]+)$"),
    list("-+0123456789"))
_Loader.add_implicit_resolver(
    _FLOAT_TAG, re.compile(r"^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?|[-+]?[0-9][0-9_]*[eE][-+]?[0-9]+"
                           r"|\.[0-9_]+(?:[eE][-+]?[0-9]+)?|[-+]?\.(?:inf|Inf|INF)|\.(?:nan|NaN|NAN))$"),
    list("-+0123456789."))


_TOP_KEYS = {"seed", "samples", "t_grid", "checks", "scenario_filter", "catalog", "alphas",
             "polys", "cutoffs", "two_pole", "tolerances", "output", "scenarios"}


def load_config(text, source="<config>") -> RunConfig:
    """Parse a YAML configuration document; errors carry a location."""
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        loc = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ConfigError(str(e.problem or e), loc) from None
    except yaml.YAMLError as e:
        raise ConfigError(str(e), source) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping", source)
    return config_from_dict(doc, source)


def config_from_dict(doc, source="<config>") -> RunConfig:
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key {key!r}", f"{source}:{key}")
    kw = {}

    def conv(key, fn):
        if key in doc:
            try:
                kw[key] = fn(doc[key])
            except ConfigError:
                raise
            except (TypeError, ValueError) as e:
                raise ConfigError(str(e), f"{source}:{key}") from None

    conv("seed", int)
    conv("samples", _samples)
    conv("t_grid", parse_grid)
    conv("scenario_filter", lambda v: tuple([v] if isinstance(v, str) else v))
    conv("alphas", lambda v: tuple(float(a) for a in ([v] if isinstance(v, (int, float)) else v)))
    conv("polys", lambda v: tuple((str(p), parse_poly(p).coeffs) for p in ([v] if isinstance(v, str) else v)))
    if "cutoffs" in doc:
        v = doc["cutoffs"]
        kw["cutoffs"] = tuple(parse_density(c, f"{source}:cutoffs[{i}]")
                              for i, c in enumerate([v] if isinstance(v, str) else v))
    conv("two_pole", bool)
    if "catalog" in doc:
        kw["builtin"] = bool(doc["catalog"])
    if "checks" in doc:
        kw["checks"] = _checks(doc["checks"], f"{source}:checks")
    if "tolerances" in doc:
        kw["tolerances"] = _tolerances(doc["tolerances"], f"{source}:tolerances")
    if "scenarios" in doc:
        if not isinstance(doc["scenarios"], list):
            raise ConfigError("expected a list", f"{source}:scenarios")
        seed = kw.get("seed", 0)
        samples = kw.get("samples", CatalogConfig.samples)
        kw["extra"] = tuple(
            _scenario(s, f"{source}:scenarios[{i}]", seed, samples)
            for i, s in enumerate(doc["scenarios"])
        )
    if "cutoffs" in kw:
        kw["ode_cutoffs"] = kw["cutoffs"]
    cat = CatalogConfig(**kw)
    out = OutputSpec()
    if "output" in doc:
        o = doc["output"]
        if not isinstance(o, dict):
            raise ConfigError("expected a mapping", f"{source}:output")
        fmt = o.get("format", "csv")
        if fmt not in ("csv", "jsonl"):
            raise ConfigError(f"unknown format {fmt!r}", f"{source}:output.format")
        out = OutputSpec(o.get("path"), fmt, bool(o.get("timing", False)))
    return RunConfig(cat, out)


def _samples(v):
    n = int(v)
    if n < 1000:
        raise ValueError("samples must be at least 1000")
    return n


def _tolerances(d, loc):
    if isinstance(d, (int, float)):
        return Tolerances(closed_rel=float(d))
    if not isinstance(d, dict):
        raise ConfigError("expected a number or mapping", loc)
    names = {f.name for f in fields(Tolerances)}
    kw = {}
    for k, v in d.items():
        if k not in names:
            raise ConfigError(f"unknown tolerance {k!r}", f"{loc}.{k}")
        try:
            kw[k] = float(v)
        except (TypeError, ValueError):
            raise ConfigError("expected a number", f"{loc}.{k}") from None
    return Tolerances(**kw)


def _scenario(d, loc, seed, samples) -> Scenario:
    if not isinstance(d, dict):
        raise ConfigError("expected a mapping", loc)
    sid = str(_req(d, "id", loc))
    w = parse_weight(_req(d, "weight", loc), f"{loc}.weight")
    try:
        F = parse_poly(d.get("F", "1"))
    except ValueError as e:
        raise ConfigError(str(e), f"{loc}.F") from None
    c = None
    if "c" in d:
        c = parse_density(d["c"], f"{loc}.c")
    try:
        grid = parse_grid(d.get("t_grid", "0.5,1,2"))
    except ValueError as e:
        raise ConfigError(str(e), f"{loc}.t_grid") from None
    default = ("theorem_ratio", "prop_p") if c is not None else ("theorem_ratio",)
    checks = _checks(d.get("checks", default), f"{loc}.checks")
    for name in checks:
        if name in ("sharpness", "openness_demo", "cutoff_family", "ode"):
            raise ConfigError(f"check {name!r} is not per-scenario", f"{loc}.checks")
        if name in ("prop_p", "concavity", "diff_ineq") and c is None:
            raise ConfigError(f"check {name!r} needs a density c", f"{loc}.checks")
    return Scenario(sid, w, F, c, grid, checks, int(d.get("seed", seed)),
                    int(d.get("samples", samples)), int(d.get("basis_degree", 16)))


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    """Replace catalog fields that are not ``None``."""
    return replace(cfg, catalog=replace(cfg.catalog, **{k: v for k, v in kw.items() if v is not None}))
