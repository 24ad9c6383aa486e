"""Graph-spec ingestion, analysis dispatch and canonical report emission."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import boundary as bd
from .capacity import RecurrenceOptions, capacity, recurrence_verdict
from .completeness import (canonical_alpha_harmonic, grigoryan_integral, heat_mass_profile,
                           path_mass_search, yau_hypothesis_report)
from .errors import InputError
from .exhaustion import ExhaustionSchedule
from .graph import Graph, GraphFamily, generate, validate
from .metrics import (EdgeWeights, Pseudometric, family_hop_metric, hop_metric, hopf_rinow_check,
                      is_intrinsic, path_metric_matrix, triangle_violations)

COMMANDS = ("recurrence", "completeness", "liouville-hypotheses", "boundary:dtn", "boundary:robin",
            "boundary:trace", "metric:intrinsic-check", "capacity")
FINITE_MODEL_NOTE = "exact for the finite model only"


@dataclass
class AnalysisConfig:
    tol_rec: float = 1e-3
    tol_trans: float = 1e-2
    tol_comp: float = 1e-6
    tol_inc: float = 0.05
    solver_residual: float = 1e-10
    schedule: list = field(default_factory=lambda: [8, 16, 32, 64, 128])
    window: int = 3
    atol: float = 1e-10
    rtol: float = 1e-8
    region: str = "ball"
    measure_policy: str = "sphere_normalized"
    inner_radii: list = field(default_factory=lambda: [2 ** k for k in range(12)])
    outer_offsets: list = field(default_factory=lambda: [8, 16, 24])
    transience_radii: list = field(default_factory=lambda: [2, 4, 6, 8, 10, 12])
    max_vertices: int = 50_000
    alpha: float = 1.0
    times: list = field(default_factory=lambda: [0.1, 1.0, 10.0])
    r_max: float = 32.0
    horizon: int = 40
    capacity_radius: int = 8
    capacity_set: list | None = None
    base_vertex: int = 0
    beta: float | None = None
    format: str = "json"
    wall_time: bool = False

    def __post_init__(self):
        for name in ("tol_rec", "tol_trans", "tol_comp", "tol_inc", "solver_residual", "atol", "rtol",
                     "alpha"):
            if not getattr(self, name) > 0:
                raise InputError(f"config field {name!r} must be positive")
        if self.format not in ("json", "csv"):
            raise InputError(f"unknown format {self.format!r}")
        if self.beta is not None and not self.beta >= 0:
            raise InputError("config field 'beta' must be nonnegative")
        self.exhaustion()  # validates the schedule

    @classmethod
    def from_dict(cls, data: dict) -> "AnalysisConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputError(f"unknown config field(s): {', '.join(unknown)}")
        data = dict(data)
        if data.get("beta") == "inf":
            data["beta"] = math.inf
        return cls(**data)

    def exhaustion(self) -> ExhaustionSchedule:
        return ExhaustionSchedule(tuple(self.schedule), self.window, self.atol, self.rtol, self.region)

    def recurrence_options(self) -> RecurrenceOptions:
        return RecurrenceOptions(self.tol_rec, self.tol_trans, tuple(self.inner_radii),
                                 tuple(self.outer_offsets), measure_policy=self.measure_policy,
                                 transience_radii=tuple(self.transience_radii), window=self.window,
                                 max_vertices=self.max_vertices)

    def echo(self) -> dict:
        return asdict(self)

    def cite(self, *names: str) -> dict:
        return {n: getattr(self, n) for n in names}


@dataclass
class Report:
    command: str
    verdicts: dict
    tables: dict
    config: dict
    warnings: list = field(default_factory=list)
    wall_time: float | None = None

    def to_dict(self) -> dict:
        out = {"command": self.command, "verdicts": self.verdicts, "tables": self.tables,
               "config": self.config, "warnings": list(self.warnings)}
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        return cls(data["command"], data["verdicts"], data["tables"], data["config"],
                   data.get("warnings", []), data.get("wall_time"))


# -- parsing --------------------------------------------------------------------------

def _vertex_key(v):
    if isinstance(v, list):
        return tuple(v)
    return v


def _parse_edges(edges, index: dict, where: str) -> list[tuple[int, int, float]]:
    seen: dict[tuple[int, int], float] = {}
    for k, e in enumerate(edges):
        if not isinstance(e, (list, tuple)) or len(e) != 3:
            raise InputError(f"{where}: edges[{k}] must be [u, v, weight]")
        u, v, w = _vertex_key(e[0]), _vertex_key(e[1]), e[2]
        for end in (u, v):
            if end not in index:
                raise InputError(f"{where}: edges[{k}] names unknown vertex {end!r}")
        if not isinstance(w, (int, float)) or isinstance(w, bool):
            raise InputError(f"{where}: edges[{k}] weight must be a number")
        i, j = index[u], index[v]
        key = (min(i, j), max(i, j))
        if key in seen:
            if seen[key] != float(w):
                raise InputError(f"{where}: asymmetric weights on pair ({e[0]!r}, {e[1]!r}): "
                                 f"{seen[key]!r} vs {float(w)!r}")
            continue
        seen[key] = float(w)
    return [(i, j, w) for (i, j), w in seen.items()]


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError(f"{where} must be a number")
    return float(x)


def parse_graph_data(data: dict, where: str = "<spec>") -> Graph | GraphFamily | bd.GraphWithBoundary:
    """Validated object from an already-decoded spec."""
    if not isinstance(data, dict):
        raise InputError(f"{where}: top level must be an object")
    if "generator" in data:
        gen = data["generator"]
        if not isinstance(gen, dict) or "kind" not in gen:
            raise InputError(f"{where}: field 'generator' needs a 'kind'")
        return generate(gen["kind"], gen.get("params", {}))
    if "vertices" not in data or "edges" not in data:
        raise InputError(f"{where}: need 'vertices' and 'edges', or 'generator'")
    verts = data["vertices"]
    ids, cs, ms = [], [], []
    for k, v in enumerate(verts):
        if not isinstance(v, dict) or "id" not in v:
            raise InputError(f"{where}: vertices[{k}] must be an object with an 'id'")
        ids.append(_vertex_key(v["id"]))
        cs.append(_number(v.get("c", 0.0), f"{where}: vertices[{k}].c"))
        ms.append(_number(v.get("m", 1.0), f"{where}: vertices[{k}].m"))
    if len(set(ids)) != len(ids):
        raise InputError(f"{where}: duplicate vertex ids")
    bnd = data.get("boundary")
    if bnd is not None:
        bnd = [_vertex_key(z) for z in bnd]
        missing = [z for z in bnd if z not in ids]
        if missing:
            raise InputError(f"{where}: boundary names unknown vertices {missing!r}")
        inner = [i for i, v in enumerate(ids) if v not in set(bnd)]
        order = inner + [ids.index(z) for z in bnd]
        ids = [ids[i] for i in order]
        cs = [cs[i] for i in order]
        ms = [ms[i] for i in order]
    index = {v: i for i, v in enumerate(ids)}
    edges = _parse_edges(data["edges"], index, where)
    if bnd is None:
        g = Graph.from_edges(len(ids), edges, cs, ms, ids)
        bad = validate(g)
        if bad:
            raise InputError(f"{where}: " + "; ".join(f"{v.kind} at {v.vertices}" for v in bad))
        return g
    ni = len(ids) - len(bnd)
    if any(c != 0 for c in cs[ni:]):
        raise InputError(f"{where}: boundary vertices carry no killing")
    mu = None
    if "mu" in data:
        table = {_vertex_key(k) if not isinstance(k, str) else k: v for k, v in data["mu"].items()}
        mu = [_number(_lookup(table, z, where + ": mu"), f"{where}: mu[{z!r}]") for z in bnd]
    gb = bd.GraphWithBoundary.build(ni, len(bnd), edges, cs[:ni], ms[:ni], mu, 0, ids)
    return gb


def _lookup(table: dict, z, where: str):
    for key in (z, str(z)):
        if key in table:
            return table[key]
    raise InputError(f"{where}: missing entry for {z!r}")


def parse_graph_spec(path: str | Path):
    """Read a JSON graph spec.  Returns ``(object, beta)``; ``beta`` is a RobinSpec or None."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    obj = parse_graph_data(data, str(path))
    beta = None
    if "beta" in data:
        if not isinstance(obj, bd.GraphWithBoundary):
            raise InputError(f"{path}: 'beta' needs a boundary")
        order = obj.host.labels[obj.n_interior:]
        vals = []
        for z in order:
            v = _lookup(data["beta"], z, f"{path}: beta")
            vals.append(math.inf if v == "inf" else _number(v, f"{path}: beta[{z!r}]"))
        beta = bd.RobinSpec(np.array(vals))
    return obj, beta


# -- analyses ---------------------------------------------------------------------------

def _label(v):
    return list(v) if isinstance(v, tuple) else v


def _need_graph(obj, command):
    if isinstance(obj, bd.GraphWithBoundary):
        raise InputError(f"{command} runs on a graph, not a graph with boundary")
    return obj


def _need_boundary(obj, command) -> bd.GraphWithBoundary:
    if not isinstance(obj, bd.GraphWithBoundary):
        raise InputError(f"{command} needs a graph with boundary")
    return obj


def _scaled_hop(g, cfg: AnalysisConfig):
    """Hop metric scaled by ``min sqrt(2 m / sum b)`` over the horizon, hence intrinsic there."""
    fam = g.as_family(0) if isinstance(g, Graph) else g
    order, _ = fam.ball(cfg.horizon, cfg.max_vertices)
    s = min(math.sqrt(2 * fam.measure(x) / max(sum(w for _, w in fam.neighbors(x)), 1e-300))
            for x in order)
    s = min(s, 1.0)
    base = hop_metric(g) if isinstance(g, Graph) else family_hop_metric(fam)
    return (base if s == 1.0 else base.scaled(s)), s


def _recurrence(obj, cfg: AnalysisConfig, rep: Report):
    g = _need_graph(obj, rep.command)
    v = recurrence_verdict(g, cfg.recurrence_options())
    rep.verdicts["recurrence"] = {"verdict": v.verdict, "reason": v.reason, "heuristic": v.heuristic,
                                  "config": cfg.cite("tol_rec", "tol_trans", "inner_radii",
                                                     "outer_offsets", "measure_policy",
                                                     "transience_radii", "window")}
    if v.profile is not None:
        rep.tables["boundary_capacity"] = [
            {"level": lv.inner_radius, "value": lv.value, "converged": lv.converged,
             **{f"outer_{r}": val for r, val in zip(lv.outer_radii, lv.values)}}
            for lv in v.profile.levels]
        rep.warnings.extend(v.profile.warnings)
    rep.tables["energy_capacity_B1"] = [{"level": r, "value": val}
                                        for r, val in zip(v.transience_radii, v.transience_values)]


def _completeness(obj, cfg: AnalysisConfig, rep: Report):
    g = _need_graph(obj, rep.command)
    sched = cfg.exhaustion()
    r = canonical_alpha_harmonic(g, cfg.alpha, sched, cfg.tol_inc, cfg.tol_comp)
    rep.verdicts["stochastic_completeness"] = {
        "verdict": r.verdict, "label": r.label, "heuristic": True,
        "config": cfg.cite("alpha", "tol_comp", "tol_inc", "schedule", "window", "atol", "rtol")}
    rep.tables["alpha_harmonic"] = [{"level": rad, "u_root": a, "sup_reference_ball": b}
                                    for rad, a, b in zip(r.radii, r.root_values, r.sup_values)]
    root = g.as_family(0).root if isinstance(g, Graph) else g.root
    heat = heat_mass_profile(g, cfg.times, root, sched)
    rep.tables["heat_mass"] = [{"level": rad, **{f"t={t:g}": val for t, val in zip(heat.times, row)}}
                               for rad, row in zip(heat.radii, heat.values)]


def _liouville(obj, cfg: AnalysisConfig, rep: Report):
    g = _need_graph(obj, rep.command)
    sigma, s = _scaled_hop(g, cfg)
    o = 0 if isinstance(g, Graph) else g.root
    horizon = None if isinstance(g, Graph) else cfg.horizon
    gi = grigoryan_integral(g, sigma, o, cfg.r_max, 1.0, horizon)
    rep.verdicts["volume_growth"] = {
        "verdict": gi.classification, "rule": gi.rule, "growth_exponent": gi.growth_exponent,
        "partial_integral": gi.partial_integral, "heuristic": True,
        "config": cfg.cite("r_max", "horizon")}
    rep.tables["growth"] = [{"level": r, "volume": v, "integrand": i}
                            for r, v, i in zip(gi.radii, gi.volumes, gi.integrand)]
    yau = yau_hypothesis_report(g, sigma, o, gi.radii, horizon)
    rep.tables["degree_on_balls"] = [{"level": r, "sup_degree": d} for r, d in zip(yau.radii, yau.sup_degree)]
    pm = path_mass_search(g, cfg.horizon if horizon is not None else g.n, cfg.max_vertices)
    rep.verdicts["finite_mass_paths"] = {"verdict": pm.status, "mass": pm.mass, "heuristic": True,
                                         "config": cfg.cite("horizon", "max_vertices")}
    rep.tables["path_mass"] = [{"level": k, "sphere_min_mass": v} for k, v in enumerate(pm.sphere_minima)]
    rep.warnings.append(f"metric: hop distance scaled by {s:.6g} (intrinsic on the horizon ball)")


def _boundary_common(gb: bd.GraphWithBoundary, rep: Report):
    labels = gb.host.labels or tuple(range(gb.n))
    return [_label(z) for z in labels[gb.n_interior:]], [_label(x) for x in labels[:gb.n_interior]]


def _matrix_table(mat, row_labels, col_labels):
    return [{"level": r, **{"col_" + (c if isinstance(c, str) else json.dumps(c)): float(mat[i, j]) for j, c in enumerate(col_labels)}}
            for i, r in enumerate(row_labels)]


def _dtn(obj, cfg: AnalysisConfig, rep: Report, beta=None):
    gb = _need_boundary(obj, rep.command)
    zs, xs = _boundary_common(gb, rep)
    q = bd.dtn_form(gb)
    rep.verdicts["dirichlet_to_neumann"] = {"verdict": "Computed", "label": FINITE_MODEL_NOTE,
                                            "heuristic": False, "wide_sense_dirichlet": q.wide_sense_dirichlet,
                                            "config": cfg.cite("base_vertex")}
    rep.tables["q_dn"] = _matrix_table(q.q, zs, zs)
    x0 = cfg.base_vertex
    rep.tables["harmonic_measure"] = [{"level": z, "mu_x0": float(v), "mu_ref": float(r)}
                                      for z, v, r in zip(zs, bd.harmonic_measure(gb, x0), gb.mu)]
    rep.tables["kasue"] = [{"level": x, "C_x": bd.kasue_constant(gb, i)} for i, x in enumerate(xs)]


def _robin_spec(gb, cfg, beta):
    if beta is not None:
        return beta
    if cfg.beta is None:
        raise InputError("boundary:robin needs 'beta' in the spec or the config")
    return bd.RobinSpec.constant(cfg.beta, gb.n_boundary)


def _robin(obj, cfg: AnalysisConfig, rep: Report, beta=None):
    gb = _need_boundary(obj, rep.command)
    zs, xs = _boundary_common(gb, rep)
    spec = _robin_spec(gb, cfg, beta)
    op = bd.robin_operator(gb, spec)
    res = bd.sandwich_check(gb, spec, cfg.times)
    ok = all(r.passed for r in res)
    rep.verdicts["sandwich"] = {"verdict": "Sandwiched" if ok else "NotSandwiched",
                                "label": FINITE_MODEL_NOTE, "heuristic": False,
                                "in_theorem": bool(res[0].in_theorem) if res else True,
                                "config": cfg.cite("times", "beta")}
    rep.tables["robin_operator"] = _matrix_table(op, xs, xs)
    rep.tables["beta"] = [{"level": z, "beta": float(b)} for z, b in zip(zs, spec.beta)]
    rep.tables["sandwich"] = [{"level": r.t, "lower_slack": r.lower_slack, "upper_slack": r.upper_slack,
                               "passed": r.passed} for r in res]
    if res and not res[0].in_theorem:
        rep.warnings.append("killing present: sandwich check outside the theorem's hypothesis")


def _trace(obj, cfg: AnalysisConfig, rep: Report, beta=None):
    gb = _need_boundary(obj, rep.command)
    zs, _ = _boundary_common(gb, rep)
    spec = beta if beta is not None else bd.RobinSpec.constant(0.0 if cfg.beta is None else cfg.beta,
                                                                gb.n_boundary)
    tr = bd.trace_form(gb, bd.robin_form(gb, spec))
    back = bd.trace_form(gb, bd.form_from_boundary_data(gb, tr))
    defect = float(np.max(np.abs(back.restricted() - tr.restricted()), initial=0.0))
    rep.verdicts["trace"] = {"verdict": "Computed", "label": FINITE_MODEL_NOTE, "heuristic": False,
                             "round_trip_defect": defect, "config": cfg.cite("beta")}
    rep.tables["trace_form"] = _matrix_table(tr.q, zs, zs)
    rep.tables["vanishing_set"] = [{"level": zs[z], "vanishes": True} for z in sorted(tr.vanishing)]


def _intrinsic(obj, cfg: AnalysisConfig, rep: Report):
    g = _need_graph(obj, rep.command)
    w = EdgeWeights.degree_adapted(g)
    if isinstance(g, Graph):
        d = path_metric_matrix(g, w)
        finite = np.where(np.isfinite(d), d, 0.0)
        res = is_intrinsic(g, Pseudometric(finite))
        bad = triangle_violations(d)
        rep.verdicts["intrinsic"] = {"verdict": "Intrinsic" if res.intrinsic else "NotIntrinsic",
                                     "ratio": res.ratio, "triangle_violations": len(bad),
                                     "heuristic": False, "config": {}}
        hop = is_intrinsic(g, hop_metric(g))
        rep.tables["intrinsic_ratio"] = [{"level": "adapted_path_metric", "ratio": res.ratio},
                                         {"level": "hop_metric", "ratio": hop.ratio}]
        return
    order, _ = g.ball(cfg.horizon, cfg.max_vertices)
    res = is_intrinsic(g, w, order[:-1] if len(order) > 1 else order)
    hr = hopf_rinow_check(g, w, cfg.horizon)
    rep.verdicts["intrinsic"] = {"verdict": "Intrinsic" if res.intrinsic else "NotIntrinsic",
                                 "ratio": res.ratio, "heuristic": True,
                                 "complete_within_horizon": hr.complete_within_horizon,
                                 "escape_bound": hr.escape_bound, "config": cfg.cite("horizon")}
    rep.tables["hopf_rinow"] = [{"level": r, "ball_count": n, "touches_frontier": t}
                                for r, n, t in zip(hr.radii, hr.ball_counts, hr.ball_touches_frontier)]


def _capacity(obj, cfg: AnalysisConfig, rep: Report):
    g = _need_graph(obj, rep.command)
    if isinstance(g, Graph):
        U = cfg.capacity_set or [0]
        U = [g.index(_vertex_key(u)) if g.labels is not None else u for u in U]
        res = capacity(g, U)
    else:
        U = [_vertex_key(u) for u in cfg.capacity_set] if cfg.capacity_set else [g.root]
        res = capacity(g, U, cfg.capacity_radius)
    rep.verdicts["capacity"] = {"verdict": "Computed", "value": res.value, "heuristic": False,
                                "truncation": res.truncation,
                                "config": cfg.cite("capacity_set", "capacity_radius")}
    rep.tables["equilibrium_potential"] = [{"level": _label(v), "potential": float(p)}
                                           for v, p in zip(res.model.vertices or range(res.model.n),
                                                           res.potential)]


_DISPATCH = {
    "recurrence": _recurrence,
    "completeness": _completeness,
    "liouville-hypotheses": _liouville,
    "boundary:dtn": _dtn,
    "boundary:robin": _robin,
    "boundary:trace": _trace,
    "metric:intrinsic-check": _intrinsic,
    "capacity": _capacity,
}


def run_analysis(obj, command: str, config: AnalysisConfig | None = None, beta=None) -> Report:
    """Dispatch ``command`` and collect verdicts with their per-level evidence."""
    if command not in _DISPATCH:
        raise InputError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    cfg = config or AnalysisConfig()
    rep = Report(command, {}, {}, cfg.echo())
    t0 = time.perf_counter()
    fn = _DISPATCH[command]
    if command.startswith("boundary:"):
        fn(obj, cfg, rep, beta)
    else:
        fn(obj, cfg, rep)
    if cfg.wall_time:
        rep.wall_time = time.perf_counter() - t0
    return rep


# -- emission ---------------------------------------------------------------------------

def _canon(x: Any):
    if isinstance(x, dict):
        return {str(k): _canon(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_canon(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_canon(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _encode(x, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_encode(x[k], indent + 1)}" for k in sorted(x)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(x, list):
        if not x:
            return "[]"
        if not any(isinstance(v, (dict, list)) for v in x):
            return "[" + ", ".join(_encode(v) for v in x) + "]"
        return "[\n" + ",\n".join(inner + _encode(v, indent + 1) for v in x) + "\n" + pad + "]"
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            return json.dumps("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
        return "%.12e" % x
    return json.dumps(x)


def to_json(report: Report) -> str:
    """Canonical text: sorted keys, floats as ``%.12e``, non-finite floats as strings."""
    return _encode(_canon(report.to_dict())) + "\n"


def csv_rows(report: Report) -> list[list]:
    rows = []
    for name in sorted(report.tables):
        for row in report.tables[name]:
            level = row.get("level")
            for key in sorted(k for k in row if k != "level"):
                rows.append([name, _canon(level), key, _canon(row[key])])
    return rows


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table", "level", "quantity", "value"])
    for name in sorted(report.verdicts):
        w.writerow(["verdict", name, "verdict", report.verdicts[name].get("verdict", "")])
    for name, level, key, val in csv_rows(report):
        if isinstance(val, float):
            val = "%.12e" % val
        w.writerow([name, json.dumps(level) if isinstance(level, list) else level, key, val])
    return buf.getvalue()


def emit_report(report: Report, fmt: str = "json", path: str | Path | None = None) -> str:
    """Serialize ``report``; write it to ``path`` when given.  Returns the text."""
    if fmt == "json":
        text = to_json(report)
    elif fmt == "csv":
        text = to_csv(report)
    else:
        raise InputError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text
