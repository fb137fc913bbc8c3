"""Scenario documents (TOML) and sweep manifests.

Grammar, schema_version 1::

    schema_version = 1
    name = "example1"                  # letters, digits, '.', '_' and '-'

    [params]                           # beta, gamma, eta, i0 required
    beta = 0.4428571429
    gamma = 0.1428571429
    eta = 2761.63
    i0 = 1e-4
    # c0, pi_s, c_lower optional

    [cost.linear_in_time]              # exactly one cost variant:
    c0 = 0.05                          #   constant        {c}
    k = 0.005                          #   linear_in_time  {c0, k}
                                       #   fatigue         {c0, k, r}
                                       #   piecewise_schedule {segments = [...]}
                                       #   tabulated       {knots, interpolation}
    [sim]
    t_max = 200.0                      # dt, output_every, stop_when_i_below optional

    [analyses]                         # all default to true
    waves = true

    [policy]                           # optional target transmission path
    knots = [[0.0, 0.25]]
    interpolation = "constant_right"   # or "linear"
    t_end = 200.0
    margin = 1e-6

Schedule segments are inline tables ``{t_start, jump_to, inner}`` where
``inner`` holds one variant among constant, linear_in_time and fatigue;
inside a schedule the level fields (``constant.c``, ``linear_in_time.c0``)
may be omitted because the cost continues from its post-jump value.
"""
from __future__ import annotations

import copy
import itertools
import math
import re
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .costs import (Constant, Fatigue, LinearInTime, PiecewiseSchedule, Segment, Tabulated,
                    model_problems, resolve_params)
from .errors import ValidationError
from .integrator import SimConfig
from .model import EpidemicParams
from .policy import DEFAULT_MARGIN, TransmissionPath

SCHEMA_VERSION = 1
NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")

PARAM_KEYS = {"beta": True, "gamma": True, "eta": True, "i0": True,
              "c0": False, "pi_s": False, "c_lower": False}
SIM_KEYS = {"t_max": True, "dt": False, "output_every": False, "stop_when_i_below": False}
ANALYSIS_KEYS = ("waves", "single_peak", "threshold", "reproduction")
POLICY_KEYS = {"knots": True, "interpolation": False, "t_end": False, "margin": False}
VARIANT_KEYS = {
    "constant": {"c": True},
    "linear_in_time": {"c0": True, "k": True},
    "fatigue": {"c0": True, "k": True, "r": True},
    "piecewise_schedule": {"segments": True},
    "tabulated": {"knots": True, "interpolation": False},
}
SEGMENT_KEYS = {"t_start": True, "jump_to": False, "inner": True}
INNER_VARIANTS = ("constant", "linear_in_time", "fatigue")
TOP_KEYS = {"schema_version", "name", "params", "cost", "sim", "analyses", "policy"}


@dataclass(frozen=True)
class Analyses:
    waves: bool = True
    single_peak: bool = True
    threshold: bool = True
    reproduction: bool = True


@dataclass(frozen=True)
class Scenario:
    name: str
    params: EpidemicParams
    cost: object
    sim: SimConfig
    analyses: Analyses = field(default_factory=Analyses)
    policy: Optional[TransmissionPath] = None
    policy_margin: float = DEFAULT_MARGIN


class _Collector:
    """Accumulates problems with field paths and (best effort) line numbers."""

    def __init__(self, text=""):
        self.text = text
        self.problems = []

    def add(self, path, msg):
        line = self._line_of(path)
        where = f"{path} (line {line})" if line else path
        self.problems.append(f"{where}: {msg}")

    def _line_of(self, path):
        key = path.split(".")[-1].split("[")[0]
        if not key or not self.text:
            return None
        pat = re.compile(r'^\s*(\[+[^\]]*\b' + re.escape(key) + r'\b[^\]]*\]+|"?' + re.escape(key) + r'"?\s*=)')
        for n, line in enumerate(self.text.splitlines(), 1):
            if pat.search(line):
                return n
        return None

    def number(self, table, key, path, required, integer=False):
        if key not in table:
            if required:
                self.add(f"{path}.{key}", "missing required key")
            return None
        v = table[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.add(f"{path}.{key}", f"expected a number, got {v!r}")
            return None
        if integer:
            if isinstance(v, float) and not v.is_integer():
                self.add(f"{path}.{key}", f"expected an integer, got {v!r}")
                return None
            return int(v)
        if not math.isfinite(v):
            self.add(f"{path}.{key}", f"must be finite, got {v!r}")
            return None
        return float(v)

    def table(self, doc, key, path, required=True):
        if key not in doc:
            if required:
                self.add(path, "missing required section")
            return None
        v = doc[key]
        if not isinstance(v, dict):
            self.add(path, "expected a table")
            return None
        return v

    def unknown(self, table, allowed, path):
        for k in table:
            if k not in allowed:
                self.add(f"{path}.{k}" if path else k, "unknown key")


def _knots(col, value, path):
    if not isinstance(value, list) or not value:
        col.add(path, "expected a non-empty list of [t, value] pairs")
        return None
    out = []
    for n, pair in enumerate(value):
        if (not isinstance(pair, list) or len(pair) != 2
                or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in pair)):
            col.add(f"{path}[{n}]", f"expected [t, value], got {pair!r}")
            return None
        out.append((float(pair[0]), float(pair[1])))
    return tuple(out)


def _variant(col, table, path, allowed, inner=False):
    if not isinstance(table, dict) or len(table) != 1:
        col.add(path, f"expected exactly one variant among {', '.join(allowed)}")
        return None
    (kind, body), = table.items()
    if kind not in allowed:
        col.add(f"{path}.{kind}", f"unknown cost variant (expected one of {', '.join(allowed)})")
        return None
    if not isinstance(body, dict):
        col.add(f"{path}.{kind}", "expected a table")
        return None
    allowed_keys = VARIANT_KEYS[kind]
    col.unknown(body, allowed_keys, f"{path}.{kind}")
    p = f"{path}.{kind}"
    req = lambda k: allowed_keys[k] and not (inner and k in ("c", "c0") and kind != "fatigue")
    n_before = len(col.problems)
    if kind == "constant":
        m = Constant(c=col.number(body, "c", p, req("c")))
    elif kind == "linear_in_time":
        c0 = col.number(body, "c0", p, req("c0"))
        m = LinearInTime(c0=c0, k=col.number(body, "k", p, True) or 0.0)
    elif kind == "fatigue":
        vals = [col.number(body, k, p, True) for k in ("c0", "k", "r")]
        if any(v is None for v in vals):
            return None
        m = Fatigue(*vals)
    elif kind == "tabulated":
        knots = _knots(col, body.get("knots"), f"{p}.knots") if "knots" in body else None
        if knots is None:
            if "knots" not in body:
                col.add(f"{p}.knots", "missing required key")
            return None
        m = Tabulated(knots=knots, interpolation=body.get("interpolation", "constant_right"))
    else:
        segs = body.get("segments")
        if not isinstance(segs, list) or not segs:
            col.add(f"{p}.segments", "expected a non-empty array of segment tables")
            return None
        out = []
        for n, seg in enumerate(segs):
            sp = f"{p}.segments[{n}]"
            if not isinstance(seg, dict):
                col.add(sp, "expected a table")
                continue
            col.unknown(seg, SEGMENT_KEYS, sp)
            t0 = col.number(seg, "t_start", sp, True)
            jump = col.number(seg, "jump_to", sp, False)
            law = _variant(col, seg.get("inner", {"constant": {}}), f"{sp}.inner", INNER_VARIANTS, inner=True)
            if t0 is not None and law is not None:
                out.append(Segment(t_start=t0, jump_to=jump, inner=law))
        if len(out) != len(segs):
            return None
        m = PiecewiseSchedule(segments=tuple(out))
    if len(col.problems) > n_before:
        return None
    for msg in model_problems(m, p):
        col.problems.append(msg)
    return m


def scenario_from_dict(doc: dict, text: str = "") -> Scenario:
    col = _Collector(text)
    col.unknown(doc, TOP_KEYS, "")
    sv = doc.get("schema_version")
    if sv is None:
        col.add("schema_version", "missing required key")
    elif sv != SCHEMA_VERSION or isinstance(sv, bool):
        col.add("schema_version", f"unsupported version {sv!r} (expected {SCHEMA_VERSION})")
    name = doc.get("name")
    if not isinstance(name, str) or not NAME_RE.match(name):
        col.add("name", f"must be a nonempty filesystem-safe identifier, got {name!r}")

    params = None
    pt = col.table(doc, "params", "params")
    if pt is not None:
        col.unknown(pt, PARAM_KEYS, "params")
        vals = {k: col.number(pt, k, "params", req) for k, req in PARAM_KEYS.items()}
        if vals["i0"] is not None and not 0 < vals["i0"] < 1:
            col.add("params.i0", f"must lie in (0, 1), got {vals['i0']}")
        if all(vals[k] is not None for k, req in PARAM_KEYS.items() if req):
            if vals["pi_s"] is None:
                vals["pi_s"] = 0.0
            try:
                params = EpidemicParams(**vals)
            except ValueError as exc:
                col.add("params", str(exc))

    cost = None
    ct = col.table(doc, "cost", "cost")
    if ct is not None:
        cost = _variant(col, ct, "cost", tuple(VARIANT_KEYS))

    sim = None
    st = col.table(doc, "sim", "sim")
    if st is not None:
        col.unknown(st, SIM_KEYS, "sim")
        t_max = col.number(st, "t_max", "sim", True)
        kw = {"t_max": t_max}
        for k in ("dt", "stop_when_i_below"):
            v = col.number(st, k, "sim", False)
            if v is not None:
                kw[k] = v
        oe = col.number(st, "output_every", "sim", False, integer=True)
        if oe is not None:
            kw["output_every"] = oe
        if t_max is not None:
            sim = SimConfig(**kw)
            for msg in sim.problems():
                col.problems.append(msg)

    analyses = Analyses()
    at = col.table(doc, "analyses", "analyses", required=False)
    if at is not None:
        col.unknown(at, ANALYSIS_KEYS, "analyses")
        flags = {}
        for k in ANALYSIS_KEYS:
            if k in at:
                if not isinstance(at[k], bool):
                    col.add(f"analyses.{k}", f"expected true or false, got {at[k]!r}")
                else:
                    flags[k] = at[k]
        analyses = Analyses(**flags)

    policy, margin = None, DEFAULT_MARGIN
    pol = col.table(doc, "policy", "policy", required=False)
    if pol is not None:
        col.unknown(pol, POLICY_KEYS, "policy")
        knots = _knots(col, pol["knots"], "policy.knots") if "knots" in pol else None
        if "knots" not in pol:
            col.add("policy.knots", "missing required key")
        t_end = col.number(pol, "t_end", "policy", False)
        m = col.number(pol, "margin", "policy", False)
        if m is not None:
            if not 0 <= m < 1:
                col.add("policy.margin", f"must lie in [0, 1), got {m}")
            margin = m
        if knots is not None:
            policy = TransmissionPath(knots=knots, interpolation=pol.get("interpolation", "constant_right"),
                                      t_end=t_end)
            # infeasible targets are reported at run time with their own exit code
            col.problems.extend(policy.problems())

    if not col.problems and params is not None and cost is not None and sim is not None:
        try:
            resolve_params(params, cost)
        except ValidationError as exc:
            col.problems.extend(exc.problems)
        late = [s.t_start for s in getattr(cost, "segments", ()) if s.t_start > sim.t_max]
        for t in late:
            col.add("cost.piecewise_schedule.segments", f"jump time {t} beyond sim.t_max={sim.t_max}")

    if col.problems:
        raise ValidationError(col.problems)
    return Scenario(name=name, params=params, cost=cost, sim=sim, analyses=analyses,
                    policy=policy, policy_margin=margin)


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document; all problems are reported together."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError([f"syntax error: {exc}"]) from None
    return scenario_from_dict(doc, text)


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


# -- canonical form ---------------------------------------------------------

def _drop_none(d):
    return {k: v for k, v in d.items() if v is not None}


def _law_dict(law, inner=False):
    if isinstance(law, Constant):
        return {"constant": _drop_none({"c": law.c})}
    if isinstance(law, LinearInTime):
        return {"linear_in_time": _drop_none({"c0": law.c0, "k": float(law.k)})}
    if isinstance(law, Fatigue):
        return {"fatigue": {"c0": float(law.c0), "k": float(law.k), "r": float(law.r)}}
    if isinstance(law, PiecewiseSchedule):
        segs = [_drop_none({"t_start": float(s.t_start), "jump_to": s.jump_to,
                            "inner": _law_dict(s.inner)}) for s in law.segments]
        return {"piecewise_schedule": {"segments": segs}}
    if isinstance(law, Tabulated):
        return {"tabulated": {"knots": [list(k) for k in law.knots],
                              "interpolation": law.interpolation}}
    raise TypeError(type(law))


def scenario_to_dict(sc: Scenario) -> dict:
    p = sc.params
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": sc.name,
        "params": _drop_none({f.name: getattr(p, f.name) for f in fields(p)}),
        "cost": _law_dict(sc.cost),
        "sim": {"t_max": float(sc.sim.t_max), "dt": float(sc.sim.dt),
                "output_every": int(sc.sim.output_every),
                "stop_when_i_below": float(sc.sim.stop_when_i_below)},
        "analyses": {k: getattr(sc.analyses, k) for k in ANALYSIS_KEYS},
    }
    if sc.policy is not None:
        doc["policy"] = _drop_none({"knots": [list(k) for k in sc.policy.knots],
                                    "interpolation": sc.policy.interpolation,
                                    "t_end": sc.policy.t_end, "margin": float(sc.policy_margin)})
    return doc


def dump_scenario(sc: Scenario) -> str:
    """Canonical TOML text; ``parse_scenario(dump_scenario(s)) == s``."""
    return tomli_w.dumps(scenario_to_dict(sc))


# -- sweeps -----------------------------------------------------------------

def set_dotted(doc: dict, dotted: str, value):
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ValidationError(f"override path {dotted!r} crosses a non-table value")
    node[keys[-1]] = value


def _cell_label(overrides):
    parts = [f"{k.split('.')[-1]}-{v}" for k, v in overrides.items()]
    return re.sub(r"[^A-Za-z0-9._-]+", "_", "_".join(parts)) or "base"


def load_manifest(path):
    """Expand a sweep manifest into ``[(cell_name, Scenario), ...]``.

    The manifest names a ``base`` scenario file and lists per-cell
    ``overrides`` (dotted keys) in ``[[cells]]`` and/or a ``[grid]`` whose
    value lists are crossed.
    """
    path = Path(path)
    try:
        man = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError([f"syntax error: {exc}"]) from None
    problems = []
    for k in man:
        if k not in ("schema_version", "base", "cells", "grid"):
            problems.append(f"{k}: unknown key")
    if man.get("schema_version") != SCHEMA_VERSION:
        problems.append(f"schema_version: expected {SCHEMA_VERSION}")
    if not isinstance(man.get("base"), str):
        problems.append("base: missing path to the base scenario")
    if problems:
        raise ValidationError(problems)
    base_path = (path.parent / man["base"]).resolve()
    base_doc = tomllib.loads(base_path.read_text())

    cells = []
    for n, cell in enumerate(man.get("cells", [])):
        ov = cell.get("overrides", {})
        cells.append((cell.get("name") or _cell_label(ov), ov))
    grid = man.get("grid", {})
    if grid:
        keys = list(grid)
        for combo in itertools.product(*(grid[k] for k in keys)):
            ov = dict(zip(keys, combo))
            cells.append((_cell_label(ov), ov))
    if not cells:
        cells.append((base_doc.get("name", "base"), {}))

    names = [c[0] for c in cells]
    dup = sorted({x for x in names if names.count(x) > 1})
    if dup:
        raise ValidationError([f"duplicate cell names: {', '.join(dup)}"])

    out, problems = [], []
    for name, ov in cells:
        doc = copy.deepcopy(base_doc)
        for k, v in ov.items():
            set_dotted(doc, k, v)
        doc["name"] = name
        try:
            out.append((name, scenario_from_dict(doc)))
        except ValidationError as exc:
            problems.extend(f"cell {name}: {p}" for p in exc.problems)
    if problems:
        raise ValidationError(problems)
    return out
