"""Scenario files: a YAML grammar that parses into a :class:`RunConfig`.

Grammar (agents and coordinates are numbered from 1)::

    name: str                               # required
    dim: int                                # optional, inferred from initial_states
    topology:                               # one of
      {generator: complete|path|ring, n: int}
      {generator: ring_plus_chords, n: int, stride: int}   # stride defaults to 5
      {generator: random, n: int, seed: int, extra_edge_prob: float}
      {n: int, edges: [[i, j], ...]}
    objectives:                             # one of
      {builtin: scenario1|scenario2}
      [record, ...]                         # one tagged record per agent, see below
    initial_priorities: uniform | {setting: int} | [[w_11, ..., w_1n], ...]
    initial_states: [[x_11, ..., x_1m], ...]
    alpha: float                            # required
    c: float                                # optional, default 0.9 / max degree
    k_max: int                              # required
    record_every: int                       # optional, default 100
    flags:
      track_phi: bool                       # default false
      l1_cap: float | null                  # default null
      l1_policy: clip|error                 # default clip
      a_from_updated_w: bool                # default false

Objective records carry a ``kind`` tag::

    {kind: affine_quadratic_1d, coord, a, center: 0, offset: 0}
    {kind: quadratic_form, coords: [...], matrix: [[...], ...]}
    {kind: linear, coords: [...], coeffs: [...], const: 0}
    {kind: exponential_sum, terms: [{coef, rate, coord}, ...]}
    {kind: sum_of_squares, coords: [...]}
    {kind: composite, parts: [{weight, objective: record}, ...]}
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import fixtures
from .engine import L1_POLICIES, RunConfig
from .errors import ConfigError, ParetoConsensusError, ScenarioError
from .graph import GENERATORS, build_graph, matrices
from .objectives import (
    AffineQuadratic1D,
    Composite,
    ExponentialSum,
    Linear,
    QuadraticForm,
    SumOfSquares,
)
from .priorities import as_priority_matrix, default_gain, eta_a

DEFAULT_RECORD_EVERY = 100
BUILTIN_PREFIX = "builtin:"
TOP_LEVEL = {"name", "dim", "topology", "objectives", "initial_priorities", "initial_states",
             "alpha", "c", "k_max", "record_every", "flags"}
FLAGS = {"track_phi", "l1_cap", "l1_policy", "a_from_updated_w"}


@dataclass
class Scenario:
    config: RunConfig
    metadata: dict = field(default_factory=dict)


def _line_map(text: str) -> dict:
    """1-based source line of every mapping key and sequence item, keyed by field path."""
    lines = {}

    def walk(node, path):
        lines.setdefault(path, node.start_mark.line + 1)
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                sub = f"{path}.{k.value}" if path else str(k.value)
                lines[sub] = k.start_mark.line + 1
                walk(v, sub)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, f"{path}[{i}]")

    root = yaml.compose(text, Loader=yaml.SafeLoader)
    if root is not None:
        walk(root, "")
    return lines


class _Reader:
    def __init__(self, lines: dict):
        self.lines = lines

    def fail(self, path: str, message: str):
        # missing keys have no line of their own; report the nearest enclosing one
        probe = path
        while probe not in self.lines and probe:
            parent = re.sub(r"(\.[^.\[]*|\[\d+\])$", "", probe)
            probe = "" if parent == probe else parent
        raise ScenarioError(message, field=path or None, line=self.lines.get(probe))

    def mapping(self, value, path):
        if not isinstance(value, dict):
            self.fail(path, f"'{path}' must be a mapping")
        return value

    def require(self, d: dict, key: str, path: str):
        if key not in d or d[key] is None:
            self.fail(_join(path, key), f"missing required field '{_join(path, key)}'")
        return d[key]

    def number(self, value, path, *, integer=False, positive=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"'{path}' must be a number, got {value!r}")
        if integer and int(value) != value:
            self.fail(path, f"'{path}' must be an integer, got {value!r}")
        if positive and not value > 0:
            self.fail(path, f"'{path}' must be positive, got {value!r}")
        return int(value) if integer else float(value)

    def matrix(self, value, path):
        if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
            self.fail(path, f"'{path}' must be a list of rows")
        for i, row in enumerate(value):
            for j, x in enumerate(row):
                self.number(x, f"{path}[{i}][{j}]")
        widths = {len(r) for r in value}
        if len(widths) != 1:
            self.fail(path, f"rows of '{path}' have differing lengths {sorted(widths)}")
        return np.array(value, dtype=float)


def _join(path, key):
    return f"{path}.{key}" if path else key


def _topology(r: _Reader, t, path="topology", seed=None):
    t = r.mapping(t, path)
    n = r.number(r.require(t, "n", path), f"{path}.n", integer=True, positive=True)
    try:
        if "edges" in t:
            edges = t["edges"]
            if not isinstance(edges, list):
                r.fail(f"{path}.edges", "'topology.edges' must be a list of [i, j] pairs")
            pairs = []
            for e, pair in enumerate(edges):
                if not (isinstance(pair, list) and len(pair) == 2):
                    r.fail(f"{path}.edges[{e}]", f"edge {pair!r} must be a pair [i, j]")
                pairs.append(tuple(r.number(x, f"{path}.edges[{e}]", integer=True) for x in pair))
            return build_graph(n, pairs), {"topology": "edges"}
        gen = r.require(t, "generator", path)
        if gen not in GENERATORS:
            r.fail(f"{path}.generator", f"unknown generator {gen!r}; expected one of {sorted(GENERATORS)}")
        kwargs = {}
        if gen == "ring_plus_chords":
            kwargs["stride"] = r.number(t.get("stride", 5), f"{path}.stride", integer=True, positive=True)
        if gen == "random":
            if seed is None:
                seed = r.number(r.require(t, "seed", path), f"{path}.seed", integer=True)
            kwargs["seed"] = seed
            if "extra_edge_prob" in t:
                kwargs["extra_edge_prob"] = r.number(t["extra_edge_prob"], f"{path}.extra_edge_prob")
        return GENERATORS[gen](n, **kwargs), {"topology": gen, **kwargs}
    except ScenarioError:
        raise
    except ParetoConsensusError as e:
        r.fail(path, str(e))


def _coords(r, value, path):
    if not isinstance(value, list):
        r.fail(path, f"'{path}' must be a list of coordinate indices")
    return tuple(r.number(p, f"{path}[{i}]", integer=True) for i, p in enumerate(value))


def objective_from_record(r: _Reader, rec, path):
    rec = r.mapping(rec, path)
    kind = r.require(rec, "kind", path)
    try:
        if kind == "affine_quadratic_1d":
            return AffineQuadratic1D(
                coord=r.number(r.require(rec, "coord", path), f"{path}.coord", integer=True),
                a=r.number(r.require(rec, "a", path), f"{path}.a"),
                center=r.number(rec.get("center", 0.0), f"{path}.center"),
                offset=r.number(rec.get("offset", 0.0), f"{path}.offset"),
            )
        if kind == "quadratic_form":
            M = r.matrix(r.require(rec, "matrix", path), f"{path}.matrix")
            return QuadraticForm(coords=_coords(r, r.require(rec, "coords", path), f"{path}.coords"),
                                 matrix=tuple(map(tuple, M)))
        if kind == "linear":
            coeffs = r.require(rec, "coeffs", path)
            if not isinstance(coeffs, list):
                r.fail(f"{path}.coeffs", f"'{path}.coeffs' must be a list")
            return Linear(coords=_coords(r, r.require(rec, "coords", path), f"{path}.coords"),
                          coeffs=tuple(r.number(a, f"{path}.coeffs[{i}]") for i, a in enumerate(coeffs)),
                          const=r.number(rec.get("const", 0.0), f"{path}.const"))
        if kind == "exponential_sum":
            terms = r.require(rec, "terms", path)
            if not isinstance(terms, list):
                r.fail(f"{path}.terms", f"'{path}.terms' must be a list")
            out = []
            for i, t in enumerate(terms):
                tp = f"{path}.terms[{i}]"
                t = r.mapping(t, tp)
                out.append((r.number(r.require(t, "coef", tp), f"{tp}.coef"),
                            r.number(r.require(t, "rate", tp), f"{tp}.rate"),
                            r.number(r.require(t, "coord", tp), f"{tp}.coord", integer=True)))
            return ExponentialSum(terms=tuple(out))
        if kind == "sum_of_squares":
            return SumOfSquares(coords=_coords(r, r.require(rec, "coords", path), f"{path}.coords"))
        if kind == "composite":
            parts = r.require(rec, "parts", path)
            if not isinstance(parts, list):
                r.fail(f"{path}.parts", f"'{path}.parts' must be a list")
            out = []
            for i, p in enumerate(parts):
                pp = f"{path}.parts[{i}]"
                p = r.mapping(p, pp)
                out.append((r.number(r.require(p, "weight", pp), f"{pp}.weight"),
                            objective_from_record(r, r.require(p, "objective", pp), f"{pp}.objective")))
            return Composite(parts=tuple(out))
    except ScenarioError:
        raise
    except ParetoConsensusError as e:
        r.fail(path, str(e))
    r.fail(f"{path}.kind", f"unknown objective kind {kind!r}")


def _objectives(r, value, n, path="objectives"):
    if isinstance(value, dict):
        name = r.require(value, "builtin", path)
        if name not in fixtures.BUILTIN_OBJECTIVES:
            r.fail(f"{path}.builtin", f"unknown builtin objectives {name!r}; expected one of "
                                      f"{sorted(fixtures.BUILTIN_OBJECTIVES)}")
        factory, dim = fixtures.BUILTIN_OBJECTIVES[name]
        objs = list(factory())
    elif isinstance(value, list):
        objs = [objective_from_record(r, rec, f"{path}[{i}]") for i, rec in enumerate(value)]
        dim = None
    else:
        r.fail(path, "'objectives' must be a list of records or {builtin: name}")
    if len(objs) != n:
        r.fail(path, f"topology has {n} agents but {len(objs)} objectives were given")
    return objs, dim


def _priorities(r, value, n, path="initial_priorities"):
    if value == "uniform":
        return np.full((n, n), 1.0 / n), "uniform"
    if isinstance(value, dict):
        row = r.number(r.require(value, "setting", path), f"{path}.setting", integer=True)
        if not 1 <= row <= len(fixtures.SCENARIO1_PRIORITIES):
            r.fail(f"{path}.setting", f"setting must lie in 1..{len(fixtures.SCENARIO1_PRIORITIES)}")
        if n != 2:
            r.fail(f"{path}.setting", "setting priorities need exactly 2 agents")
        return np.array(fixtures.SCENARIO1_PRIORITIES[row - 1], dtype=float), f"setting {row}"
    W = r.matrix(value, path)
    if W.shape != (n, n):
        r.fail(path, f"'{path}' must be {n}x{n}, got {W.shape[0]}x{W.shape[1]}")
    for i, row in enumerate(W):
        if abs(row.sum() - 1.0) > 1e-6:
            r.fail(f"{path}[{i}]", f"priority row {i + 1} sums to {row.sum():.9g}, not 1")
    try:
        return as_priority_matrix(W, n), "explicit"
    except ParetoConsensusError as e:
        r.fail(path, str(e))


def parse_scenario(text: str, *, source: str = "<string>", seed: int | None = None) -> Scenario:
    """Validate scenario text and build the run configuration.

    ``seed`` overrides ``topology.seed`` of the random generator and is
    ignored by every other topology.

    Raises :class:`ScenarioError` carrying the offending field path and line.
    """
    try:
        lines = _line_map(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ScenarioError(f"{source}: malformed YAML: {getattr(e, 'problem', e)}",
                            line=mark.line + 1 if mark else None) from None
    r = _Reader(lines)
    data = r.mapping(data, "")
    unknown = sorted(set(data) - TOP_LEVEL)
    if unknown:
        r.fail(unknown[0], f"unknown field '{unknown[0]}'")
    name = r.require(data, "name", "")
    if not isinstance(name, str):
        r.fail("name", "'name' must be a string")
    g, topo_meta = _topology(r, r.require(data, "topology", ""), seed=seed)
    n = g.n
    objs, builtin_dim = _objectives(r, r.require(data, "objectives", ""), n)
    W0, prio_source = _priorities(r, r.require(data, "initial_priorities", ""), n)
    x0 = r.matrix(r.require(data, "initial_states", ""), "initial_states")
    if x0.shape[0] != n:
        r.fail("initial_states", f"expected {n} initial states, got {x0.shape[0]}")
    dim = data.get("dim", builtin_dim)
    if dim is not None:
        dim = r.number(dim, "dim", integer=True, positive=True)
        if x0.shape[1] != dim:
            r.fail("initial_states", f"initial states have dimension {x0.shape[1]}, expected {dim}")
    for i, f in enumerate(objs):
        if f.min_dim > x0.shape[1]:
            r.fail(f"objectives[{i}]" if isinstance(data["objectives"], list) else "objectives",
                   f"objective of agent {i + 1} reads x_{f.min_dim} but states have dimension {x0.shape[1]}")
    alpha = r.number(r.require(data, "alpha", ""), "alpha", positive=True)
    k_max = r.number(r.require(data, "k_max", ""), "k_max", integer=True, positive=True)
    record_every = r.number(data.get("record_every", DEFAULT_RECORD_EVERY), "record_every",
                            integer=True, positive=True)
    gm = matrices(g)
    if data.get("c") is None:
        c = default_gain(gm)
        c_source = "default"
    else:
        c = r.number(data["c"], "c")
        if not 0.0 < c < 1.0 / gm.max_degree:
            r.fail("c", f"consensus gain c={c!r} must lie in the open interval "
                        f"(0, 1/max_degree) = (0, {1.0 / gm.max_degree:.17g})")
        c_source = "file"
    flags = r.mapping(data.get("flags") or {}, "flags")
    bad = sorted(set(flags) - FLAGS)
    if bad:
        r.fail(f"flags.{bad[0]}", f"unknown flag '{bad[0]}'")
    for key in ("track_phi", "a_from_updated_w"):
        if not isinstance(flags.get(key, False), bool):
            r.fail(f"flags.{key}", f"'flags.{key}' must be true or false")
    l1_cap = flags.get("l1_cap")
    if l1_cap is not None:
        l1_cap = r.number(l1_cap, "flags.l1_cap", positive=True)
    l1_policy = flags.get("l1_policy", "clip")
    if l1_policy not in L1_POLICIES:
        r.fail("flags.l1_policy", f"'flags.l1_policy' must be one of {L1_POLICIES}")
    cfg = RunConfig(
        graph=g, objectives=objs, W0=W0, x0=x0, alpha=alpha, c=c, k_max=k_max,
        record_every=record_every, track_phi=flags.get("track_phi", False), l1_cap=l1_cap,
        l1_policy=l1_policy, a_from_updated_w=flags.get("a_from_updated_w", False), name=name,
    )
    meta = {
        "scenario": name,
        "source": source,
        **topo_meta,
        "n": n,
        "dim": int(x0.shape[1]),
        "initial_priorities": prio_source,
        "alpha": alpha,
        "c": c,
        "c_source": c_source,
        "k_max": k_max,
        "record_every": record_every,
        "a_from_updated_w": cfg.a_from_updated_w,
        "l1_cap": l1_cap,
        "l1_policy": l1_policy,
        "eta_A": eta_a(W0),
    }
    return Scenario(config=cfg, metadata=meta)


def builtin_names() -> list[str]:
    rows = [f"scenario1-row{i}" for i in range(1, len(fixtures.SCENARIO1_PRIORITIES) + 1)]
    return ["scenario1", *rows, "scenario2"]


def builtin_text(name: str) -> str:
    """YAML text of a shipped scenario; ``scenario1-rowK`` selects priority setting ``K``."""
    base, _, row = name.partition("-row")
    if name not in builtin_names():
        raise ConfigError(f"unknown builtin scenario {name!r}; see 'fixtures list'")
    text = resources.files(__package__).joinpath("scenarios", f"{base}.yaml").read_text()
    if row:
        text = text.replace("name: scenario1\n", f"name: {name}\n")
        text = text.replace("setting: 1\n", f"setting: {int(row)}\n")
    return text


def load_scenario(spec: str, seed: int | None = None) -> Scenario:
    """``builtin:NAME`` or a path to a scenario file."""
    if spec.startswith(BUILTIN_PREFIX):
        name = spec[len(BUILTIN_PREFIX):]
        return parse_scenario(builtin_text(name), source=spec, seed=seed)
    p = Path(spec)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read scenario {spec}: {e.strerror}") from None
    return parse_scenario(text, source=str(p), seed=seed)


def read_priorities_csv(text: str, n: int | None = None) -> list[tuple[str, np.ndarray]]:
    """Parse ``setting,agent,w1,...,wn`` records into one ``W0`` per setting, in file order.

    Lines starting with ``#`` are comments.
    """
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(io.StringIO("\n".join(rows)))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ConfigError("priorities file is empty") from None
    width = len(header) - 2
    if header[:2] != ["setting", "agent"] or width < 1 or header[2:] != [f"w{j}" for j in range(1, width + 1)]:
        raise ConfigError(f"priorities header must be 'setting,agent,w1,...,wn', got {','.join(header)}")
    if n is not None and width != n:
        raise ConfigError(f"priorities file has {width} weight columns but the scenario has {n} agents")
    groups: dict[str, dict[int, list[float]]] = {}
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(header):
            raise ConfigError(f"priorities record {lineno}: expected {len(header)} fields, got {len(rec)}")
        try:
            agent = int(rec[1])
            w = [float(x) for x in rec[2:]]
        except ValueError as e:
            raise ConfigError(f"priorities record {lineno}: non-numeric field ({e})") from None
        setting = rec[0].strip()
        rowset = groups.setdefault(setting, {})
        if agent in rowset or not 1 <= agent <= width:
            raise ConfigError(f"priorities record {lineno}: agent {agent} duplicated or outside 1..{width}")
        rowset[agent] = w
    if not groups:
        raise ConfigError("priorities file has no records")
    out = []
    for setting, rowset in groups.items():
        if sorted(rowset) != list(range(1, width + 1)):
            raise ConfigError(f"priorities setting {setting}: expected rows for agents 1..{width}")
        W = [rowset[i] for i in range(1, width + 1)]
        try:
            out.append((setting, as_priority_matrix(W, width)))
        except ParetoConsensusError as e:
            raise ConfigError(f"priorities setting {setting}: {e}") from None
    return out
