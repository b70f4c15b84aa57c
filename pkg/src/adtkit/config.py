"""Run configuration: a single YAML document, validated strictly.

Every diagnostic names the offending key path (``state.theta``) or, for syntax
errors, the line number.  Unknown keys are rejected.
"""
from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .algebra import OperatorSum, PauliWord, spin
from .errors import AdtError, ConfigError

TASKS = ("greens", "cumulants", "pivotal", "perturb", "oracle-compare", "moments")
MODEL_KINDS = ("qsm-bond", "qsm-lattice", "hubbard-atom", "kondo-local")
STATE_SOURCES = ("theta", "eigenstate", "expectations")
GRID_DEFAULTS = {"min": -2.0, "max": 2.0, "count": 401, "eta": 0.0}

_TOP_KEYS = {"model", "state", "operators", "tasks", "grid", "perturb", "moments", "output", "seed"}
_MODEL_PARAMS = {
    "qsm-bond": {"Jz", "hz", "hx"},
    "qsm-lattice": {"n_sites", "fields", "couplings", "chain"},
    "hubbard-atom": {"mu_up", "mu_dn", "U"},
    "kondo-local": {"mu", "h", "Jk", "flavor_order"},
}


@dataclass(frozen=True)
class RunConfig:
    model: dict
    n_sites: int
    state: dict
    tasks: tuple
    grid: dict
    operators: dict = field(default_factory=dict)
    perturb: dict = field(default_factory=dict)
    moments: dict = field(default_factory=dict)
    output: str | None = None
    seed: int = 0
    source: str = ""
    sha256: str = ""
    base_dir: str = "."


def _mapping(value, key: str, allowed: set | None = None) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"expected a mapping, got {type(value).__name__}", key=key)
    if allowed is not None:
        unknown = sorted(set(value) - allowed)
        if unknown:
            raise ConfigError(
                f"unknown key(s) {', '.join(map(str, unknown))}; allowed: {', '.join(sorted(allowed))}",
                key=key,
            )
    return value


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key=key)
    if not math.isfinite(value):
        raise ConfigError(f"expected a finite number, got {value!r}", key=key)
    return float(value)


def _integer(value, key: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", key=key)
    return value


_FACTOR = re.compile(r"^s([xyz+-])(\d+)$")


def parse_operator(spec, n_sites: int, key: str = "operator") -> OperatorSum:
    """Operator from text.

    A term is an optional leading number followed by factors, each either
    ``s<c><site>`` (c in x, y, z, +, -) or a full Pauli word such as ``XZ``.
    A list of terms is summed.
    """
    terms = spec if isinstance(spec, list) else [spec]
    if not terms:
        raise ConfigError("operator needs at least one term", key=key)
    total = OperatorSum.zero(n_sites)
    for k, term in enumerate(terms):
        tkey = f"{key}[{k}]" if isinstance(spec, list) else key
        if not isinstance(term, str) or not term.strip():
            raise ConfigError(f"expected a term string, got {term!r}", key=tkey)
        tokens = term.split()
        coeff = 1.0
        if tokens[0][0] in "0123456789.-+":
            try:
                coeff = complex(tokens[0].replace("i", "j"))
            except ValueError:
                raise ConfigError(f"bad coefficient {tokens[0]!r}", key=tkey) from None
            tokens = tokens[1:]
        op = OperatorSum.identity(n_sites, coeff)
        if not tokens:
            raise ConfigError("term has a coefficient but no operator", key=tkey)
        for tok in tokens:
            m = _FACTOR.match(tok)
            if m:
                site = int(m.group(2))
                if site >= n_sites:
                    raise ConfigError(f"site {site} out of range for {n_sites} sites in {tok!r}", key=tkey)
                op = op * spin(n_sites, site, m.group(1))
            elif len(tok) == n_sites and set(tok) <= set("IXYZ"):
                op = op * OperatorSum.from_word(PauliWord.from_string(tok))
            else:
                raise ConfigError(f"cannot parse factor {tok!r}", key=tkey)
        total = total + op
    if not len(total):
        raise ConfigError("operator is zero", key=key)
    return total


def _model(raw, key="model") -> tuple[dict, int]:
    m = _mapping(raw, key, {"kind", "params"})
    if "kind" not in m:
        raise ConfigError("missing required key 'kind'", key=key)
    kind = m["kind"]
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}; use one of {', '.join(MODEL_KINDS)}", key=f"{key}.kind")
    params = _mapping(m.get("params", {}), f"{key}.params", _MODEL_PARAMS[kind])
    out = {"kind": kind}
    pkey = f"{key}.params"
    if kind == "qsm-bond":
        for name in ("Jz", "hz", "hx"):
            out[name] = _number(params.get(name, 0.0), f"{pkey}.{name}")
        n = 2
    elif kind == "hubbard-atom":
        for name in ("mu_up", "mu_dn", "U"):
            out[name] = _number(params.get(name, 0.0), f"{pkey}.{name}")
        n = 2
    elif kind == "kondo-local":
        mu = _mapping(params.get("mu", {}), f"{pkey}.mu", {"up", "dn"})
        out["mu"] = {f: _number(v, f"{pkey}.mu.{f}") for f, v in mu.items()}
        h = params.get("h", 0.0)
        if isinstance(h, dict):
            _mapping(h, f"{pkey}.h", {"x", "y", "z"})
            out["h"] = {a: _number(v, f"{pkey}.h.{a}") for a, v in h.items()}
        else:
            out["h"] = _number(h, f"{pkey}.h")
        out["Jk"] = _number(params.get("Jk", 0.0), f"{pkey}.Jk")
        order = params.get("flavor_order", ["up", "dn", "moment"])
        if not isinstance(order, list) or sorted(order) != ["dn", "moment", "up"]:
            raise ConfigError("must be a permutation of [up, dn, moment]", key=f"{pkey}.flavor_order")
        out["flavor_order"] = list(order)
        n = 3
    else:
        if "n_sites" not in params:
            raise ConfigError("missing required key 'n_sites'", key=pkey)
        n = _integer(params["n_sites"], f"{pkey}.n_sites", 1)
        fields = {}
        for k, f in enumerate(params.get("fields", []) or []):
            fk = f"{pkey}.fields[{k}]"
            f = _mapping(f, fk, {"site", "axis", "value"})
            site = _integer(f.get("site"), f"{fk}.site", 0)
            if site >= n:
                raise ConfigError(f"site {site} out of range for {n} sites", key=f"{fk}.site")
            axis = f.get("axis")
            if axis not in ("x", "y", "z"):
                raise ConfigError(f"axis must be x, y or z, got {axis!r}", key=f"{fk}.axis")
            fields[(site, axis)] = fields.get((site, axis), 0.0) + _number(f.get("value"), f"{fk}.value")
        couplings = {}
        for k, c in enumerate(params.get("couplings", []) or []):
            ck = f"{pkey}.couplings[{k}]"
            c = _mapping(c, ck, {"i", "j", "alpha", "beta", "value"})
            i = _integer(c.get("i"), f"{ck}.i", 0)
            j = _integer(c.get("j"), f"{ck}.j", 0)
            for name, s in (("i", i), ("j", j)):
                if s >= n:
                    raise ConfigError(f"site {s} out of range for {n} sites", key=f"{ck}.{name}")
            if i == j:
                raise ConfigError("self-bonds are not allowed", key=ck)
            for name in ("alpha", "beta"):
                if c.get(name) not in ("x", "y", "z"):
                    raise ConfigError(f"must be x, y or z, got {c.get(name)!r}", key=f"{ck}.{name}")
            kk = (i, j, c["alpha"], c["beta"])
            couplings[kk] = couplings.get(kk, 0.0) + _number(c.get("value"), f"{ck}.value")
        if "chain" in params:
            ch = _mapping(params["chain"], f"{pkey}.chain", {"J", "periodic"})
            J = _number(ch.get("J", 1.0), f"{pkey}.chain.J")
            periodic = ch.get("periodic", False)
            if not isinstance(periodic, bool):
                raise ConfigError("expected true or false", key=f"{pkey}.chain.periodic")
            bonds = [(i, i + 1) for i in range(n - 1)]
            if periodic and n > 2:
                bonds.append((n - 1, 0))
            for i, j in bonds:
                for a in "xyz":
                    couplings[(i, j, a, a)] = couplings.get((i, j, a, a), 0.0) + J
        out["fields"] = fields
        out["couplings"] = couplings
    out["n_sites"] = n
    return out, n


def _state(raw, n: int, base: Path, key="state") -> dict:
    s = _mapping(raw, key, {"theta", "eigenstate", "expectations", "max_grade"})
    given = [k for k in STATE_SOURCES if k in s]
    if len(given) != 1:
        if given:
            raise ConfigError(
                f"exactly one state source is allowed, got {' and '.join(f'{key}.{g}' for g in given)}", key=key
            )
        raise ConfigError(f"one of {', '.join(STATE_SOURCES)} is required", key=key)
    out = {"source": given[0]}
    max_grade = s.get("max_grade", n)
    max_grade = _integer(max_grade, f"{key}.max_grade", 0)
    if max_grade > n:
        raise ConfigError(
            f"max_grade={max_grade} exceeds n_sites={n} (enumerate_cobs requires 0 <= max_grade <= n_sites)",
            key=f"{key}.max_grade",
        )
    out["max_grade"] = max_grade
    if given[0] == "theta":
        if n != 2:
            raise ConfigError("a theta state needs a two-site model", key=f"{key}.theta")
        out["theta"] = _number(s["theta"], f"{key}.theta")
    elif given[0] == "eigenstate":
        idx = _integer(s["eigenstate"], f"{key}.eigenstate", 0)
        if idx >= 2**n:
            raise ConfigError(f"index {idx} out of range for a {2**n}-dimensional spectrum", key=f"{key}.eigenstate")
        out["eigenstate"] = idx
    else:
        e = s["expectations"]
        ekey = f"{key}.expectations"
        e = _mapping(e, ekey, {"file", "rows"})
        if len(e) != 1:
            raise ConfigError("give exactly one of 'file' or 'rows'", key=ekey)
        if "file" in e:
            if not isinstance(e["file"], str):
                raise ConfigError("expected a path string", key=f"{ekey}.file")
            path = (base / e["file"]).resolve()
            if not path.is_file():
                raise ConfigError(f"file not found: {path}", key=f"{ekey}.file")
            out["file"] = str(path)
        else:
            rows = _mapping(e["rows"], f"{ekey}.rows")
            clean = {}
            for w, v in rows.items():
                if not isinstance(w, str) or len(w) != n or set(w) - set("IXYZ"):
                    raise ConfigError(f"{w!r} is not a {n}-letter Pauli word", key=f"{ekey}.rows")
                clean[w] = _number(v, f"{ekey}.rows.{w}")
            out["rows"] = clean
    return out


def parse_config_text(text: str, source: str = "<string>", base_dir=".") -> RunConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ConfigError(f"syntax error: {exc.problem}", line=line) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    if raw is None:
        raise ConfigError("configuration is empty")
    raw = _mapping(raw, "<root>", _TOP_KEYS)
    base = Path(base_dir)
    for req in ("model", "state", "tasks"):
        if req not in raw:
            raise ConfigError(f"missing required key '{req}'", key=req)
    model, n = _model(raw["model"])
    state = _state(raw["state"], n, base)
    tasks = raw["tasks"]
    if isinstance(tasks, str):
        tasks = [tasks]
    if not isinstance(tasks, list) or not tasks:
        raise ConfigError("expected a non-empty list of tasks", key="tasks")
    for k, t in enumerate(tasks):
        if t not in TASKS:
            raise ConfigError(f"unknown task {t!r}; use one of {', '.join(TASKS)}", key=f"tasks[{k}]")
    if len(set(tasks)) != len(tasks):
        raise ConfigError("duplicate task", key="tasks")
    grid = dict(GRID_DEFAULTS)
    g = _mapping(raw.get("grid", {}) or {}, "grid", set(GRID_DEFAULTS))
    for name in ("min", "max", "eta"):
        if name in g:
            grid[name] = _number(g[name], f"grid.{name}")
    if "count" in g:
        grid["count"] = _integer(g["count"], "grid.count", 2)
    if grid["max"] <= grid["min"]:
        raise ConfigError("grid.max must exceed grid.min", key="grid.max")
    if grid["eta"] < 0:
        raise ConfigError("broadening must be non-negative", key="grid.eta")
    ops = {}
    needs_ops = {"greens", "pivotal", "oracle-compare", "moments"} & set(tasks)
    if "operators" in raw:
        o = _mapping(raw["operators"], "operators", {"initial", "final", "kind"})
        for name in ("initial", "final"):
            if name not in o:
                raise ConfigError(f"missing required key '{name}'", key="operators")
            parse_operator(o[name], n, key=f"operators.{name}")
            ops[name] = o[name]
        kind = o.get("kind", "both")
        if kind not in ("plus", "minus", "both"):
            raise ConfigError(f"must be plus, minus or both, got {kind!r}", key="operators.kind")
        ops["kind"] = kind
    elif needs_ops:
        raise ConfigError(f"tasks {', '.join(sorted(needs_ops))} need an 'operators' block", key="operators")
    if "oracle-compare" in tasks and state["source"] == "expectations":
        raise ConfigError("oracle-compare needs a wavefunction; use theta or eigenstate", key="state")
    perturb = {}
    if "perturb" in tasks:
        if model["kind"] != "qsm-bond":
            raise ConfigError("the perturb task runs on the qsm-bond model", key="model.kind")
        p = _mapping(raw.get("perturb", {}) or {}, "perturb", {"hx", "hx_probe"})
        perturb["hx"] = _number(p.get("hx", 0.01), "perturb.hx")
        if "hx_probe" in p:
            perturb["hx_probe"] = _number(p["hx_probe"], "perturb.hx_probe")
            if perturb["hx_probe"] <= 0:
                raise ConfigError("must be positive", key="perturb.hx_probe")
    elif "perturb" in raw:
        raise ConfigError("block given but the perturb task is not requested", key="perturb")
    moments = {}
    if "moments" in tasks:
        mm = _mapping(raw.get("moments", {}) or {}, "moments", {"n_max"})
        moments["n_max"] = _integer(mm.get("n_max", 6), "moments.n_max", 0)
        if moments["n_max"] > 12:
            raise ConfigError("n_max is capped at 12", key="moments.n_max")
    elif "moments" in raw:
        raise ConfigError("block given but the moments task is not requested", key="moments")
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError("expected a directory path", key="output")
    seed = _integer(raw.get("seed", 0), "seed", 0)
    return RunConfig(
        model, n, state, tuple(tasks), grid, ops, perturb, moments, output, seed,
        source, hashlib.sha256(text.encode("utf-8")).hexdigest(), str(base),
    )


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", key=str(path)) from None
    try:
        return parse_config_text(text, source=path.name, base_dir=path.parent)
    except ConfigError:
        raise
    except AdtError as exc:
        raise ConfigError(str(exc)) from None
