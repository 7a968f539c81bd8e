"""Experiment orchestration: build data, leak, attack, score, report.

One :class:`ExperimentConfig` describes a scenario end to end. Each of the
R repetitions derives its own generator from (seed, repetition), so runs
are reproducible and repetitions can execute concurrently (capped by the
GLG_THREADS environment variable) without affecting the result.
"""

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .attacks import (
    AttackSpec,
    attack_batched,
    attack_graph,
    attack_node1,
    attack_node2,
    finalize_adjacency,
)
from .errors import ConfigError, GlgError
from .federated import leak
from .graphs import Graph, dummy_tree, er_graph, khop_egonet, load_graph, synthetic_graph
from .metrics import (
    batch_match_score,
    rnmse,
    rnmse_per_row,
    score_adjacency,
)
from .models import init_params

__all__ = [
    "DatasetSpec",
    "ExperimentConfig",
    "ReportRow",
    "emit_report",
    "load_config",
    "run_experiment",
    "sweep",
]

EXPERIMENT_SCENARIOS = (
    "node1", "node2a", "node2b", "node2c",
    "graph_a", "graph_b", "graph_c",
    "batched_node", "batched_graph",
)

SWEEP_PARAMETERS = ("alpha", "beta", "hidden_dim", "threshold", "batch_size",
                    "d_tree", "init")


@dataclass
class DatasetSpec:
    source: str = "synthetic"          # synthetic | er | tree | files
    n: int = 50
    avg_degree: float = 4.0
    edge_prob: Optional[float] = None  # er; defaults to avg_degree / (n - 1)
    feature_dim: int = 10
    num_classes: int = 4
    d_tree: int = 10                   # tree source
    feature_file: Optional[str] = None
    edge_file: Optional[str] = None
    label_file: Optional[str] = None

    def validate(self):
        if self.source not in ("synthetic", "er", "tree", "files"):
            raise ConfigError("unknown dataset source", "dataset.source")
        if self.source == "files":
            for name in ("feature_file", "edge_file"):
                path = getattr(self, name)
                if not path or not os.path.exists(path):
                    raise ConfigError(f"missing file {path!r}", f"dataset.{name}")
        else:
            if self.n < 1 or self.feature_dim < 1 or self.num_classes < 2:
                raise ConfigError("dataset sizes must be positive",
                                  "dataset.n")


@dataclass
class ExperimentConfig:
    scenario: str
    framework: str = "sage"
    hidden_dim: int = 100
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    attack: AttackSpec = None
    egonet_hops: Optional[int] = 3     # node2*: sample this k-hop egonet
    batch_size: int = 5                # batched scenarios
    one_hop_eval: bool = False         # node1: also score matched neighbors
    repeats: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in EXPERIMENT_SCENARIOS:
            raise ConfigError(
                f"scenario must be one of {EXPERIMENT_SCENARIOS}", "scenario")
        if self.framework not in ("gcn", "sage"):
            raise ConfigError("framework must be gcn or sage", "framework")
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1", "repeats")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1", "batch_size")
        if self.attack is None:
            self.attack = AttackSpec(scenario=self._attack_scenario())
        if self.attack.scenario != self._attack_scenario():
            raise ConfigError(
                f"attack scenario {self.attack.scenario} does not fit "
                f"experiment scenario {self.scenario}", "attack.scenario")
        self.dataset.validate()

    def _attack_scenario(self):
        if self.scenario == "batched_node":
            return "node1"
        if self.scenario == "batched_graph":
            return "graph_b"
        return self.scenario

    @property
    def task(self):
        return "graph" if self.scenario.startswith(("graph", "batched_graph")) else "node"

    def to_dict(self):
        out = asdict(self)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        ds = data.pop("dataset", {})
        atk = data.pop("attack", None)
        try:
            dataset = DatasetSpec(**ds)
        except TypeError as exc:
            raise ConfigError(str(exc), "dataset") from None
        scenario = data.get("scenario")
        if scenario is None:
            raise ConfigError("missing scenario", "scenario")
        attack = None
        if atk is not None:
            atk = dict(atk)
            atk.setdefault("scenario", scenario if not scenario.startswith("batched") else
                           ("node1" if scenario == "batched_node" else "graph_b"))
            try:
                attack = AttackSpec(**atk)
            except TypeError as exc:
                raise ConfigError(str(exc), "attack") from None
        try:
            return cls(dataset=dataset, attack=attack, **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


@dataclass
class ReportRow:
    scenario: str
    framework: str
    dataset: str
    repeats: int
    metrics: dict                      # name -> {mean, std, min}
    hyperparams: dict
    errors: List[str]
    wall_time_s: float


def _rep_rng(seed, rep):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, rep))))


def _build_graph(cfg, rng, need_graph_label=False):
    ds = cfg.dataset
    if ds.source == "synthetic":
        g = synthetic_graph(rng, ds.n, ds.avg_degree, ds.feature_dim,
                            num_classes=ds.num_classes)
    elif ds.source == "er":
        p = ds.edge_prob if ds.edge_prob is not None else ds.avg_degree / (ds.n - 1)
        g = er_graph(rng, ds.n, p, ds.feature_dim, num_classes=ds.num_classes)
    elif ds.source == "tree":
        g = dummy_tree(rng, ds.d_tree, ds.feature_dim, num_classes=ds.num_classes)
    else:
        g = load_graph(ds.feature_file, ds.edge_file, ds.label_file)
        if g.labels is None and cfg.task == "node":
            raise ConfigError("file dataset lacks labels for a node task",
                              "dataset.label_file")
    if need_graph_label:
        g = Graph(adjacency=g.adjacency, features=g.features, labels=g.labels,
                  graph_label=int(rng.integers(0, ds.num_classes)))
    return g


def _one_repetition(cfg, rep):
    """Returns (metric dict, artifact dict of recovered/true matrices)."""
    rng = _rep_rng(cfg.seed, rep)
    params = init_params(
        rng, cfg.framework, cfg.task, cfg.dataset.feature_dim,
        cfg.hidden_dim, cfg.dataset.num_classes,
        num_nodes=cfg.dataset.n if cfg.task == "graph" else None)
    out = {}
    arts = {}

    if cfg.scenario == "node1":
        g = _build_graph(cfg, rng)
        target = int(rng.integers(0, g.num_nodes))
        spec = cfg.attack
        if cfg.one_hop_eval:
            deg = max(1, int(g.degrees()[target]))
            spec = AttackSpec(**{**asdict(spec), "d_tree": deg})
        record = leak(params, g, "node1", targets=[target])
        res = attack_node1(record, spec, params, rng=rng)
        out["target_rnmse"] = rnmse(g.features[target], res.target_feature)
        if cfg.one_hop_eval:
            nbrs = g.neighbors(target)
            if len(nbrs) == len(res.neighbor_features):
                ms = batch_match_score([g.features[v] for v in nbrs],
                                       list(res.neighbor_features))
                out["neighbor_rnmse"] = ms.mean
        arts["true_features"] = g.features[target][None]
        arts["recovered_features"] = res.target_feature[None]
        return out, arts

    if cfg.scenario in ("node2a", "node2b", "node2c"):
        g = _build_graph(cfg, rng)
        if cfg.egonet_hops is not None:
            center = int(rng.integers(0, g.num_nodes))
            g, _ = khop_egonet(g, center, cfg.egonet_hops)
        record = leak(params, g, "node2")
        known_x = g.features if cfg.scenario == "node2a" else None
        known_a = g.adjacency if cfg.scenario == "node2b" else None
        res = attack_node2(record, cfg.attack, params,
                           known_features=known_x, known_adjacency=known_a,
                           rng=rng)
    elif cfg.scenario in ("graph_a", "graph_b", "graph_c"):
        g = _build_graph(cfg, rng, need_graph_label=True)
        record = leak(params, g, "graph")
        known_x = g.features if cfg.scenario == "graph_a" else None
        known_a = g.adjacency if cfg.scenario == "graph_b" else None
        res = attack_graph(record, cfg.attack, params,
                           known_features=known_x, known_adjacency=known_a,
                           rng=rng)
    elif cfg.scenario == "batched_node":
        g = _build_graph(cfg, rng)
        if cfg.batch_size > g.num_nodes:
            raise ConfigError("batch larger than the graph", "batch_size")
        targets = rng.choice(g.num_nodes, size=cfg.batch_size, replace=False)
        record = leak(params, g, "batched-node", targets=targets)
        results = attack_batched(record, cfg.attack, params,
                                 labels=g.labels[targets], rng=rng)
        ms = batch_match_score([g.features[t] for t in targets],
                               [r.target_feature for r in results])
        out.update(matched_rnmse=ms.mean, matched_rnmse_min=ms.min,
                   matched_rnmse_std=ms.std)
        arts["true_features"] = g.features[targets]
        arts["recovered_features"] = np.vstack(
            [r.target_feature for r in results])
        return out, arts
    else:  # batched_graph
        gs = [_build_graph(cfg, rng, need_graph_label=True)
              for _ in range(cfg.batch_size)]
        record = leak(params, gs, "batched-graph")
        results = attack_batched(record, cfg.attack, params,
                                 labels=[g.graph_label for g in gs],
                                 known_adjacencies=[g.adjacency for g in gs],
                                 rng=rng)
        ms = batch_match_score([g.features for g in gs],
                               [r.features for r in results])
        out.update(matched_rnmse=ms.mean, matched_rnmse_min=ms.min,
                   matched_rnmse_std=ms.std)
        arts["true_features"] = np.vstack([g.features for g in gs])
        arts["recovered_features"] = np.vstack([r.features for r in results])
        return out, arts

    # shared scoring for the subgraph / whole-graph scenarios
    if res.features is not None:
        out["feature_rnmse"] = rnmse_per_row(g.features, res.features)
        arts["true_features"] = g.features
        arts["recovered_features"] = res.features
    if res.adjacency is not None:
        thresholded = finalize_adjacency(res.adjacency_prob, "threshold",
                                         tau=cfg.attack.threshold)
        sc = score_adjacency(g.adjacency, res.adjacency, res.adjacency_prob,
                             a_thresholded=thresholded)
        out.update(accuracy=sc.accuracy, auc=sc.auc, ap=sc.ap, mae=sc.mae,
                   mae_thresholded=sc.mae_thresholded)
        arts["true_adjacency"] = g.adjacency
        arts["recovered_adjacency"] = res.adjacency
        arts["recovered_adjacency_prob"] = res.adjacency_prob
    return out, arts


def _aggregate(per_rep, cfg, errors, elapsed):
    names = sorted({k for rep in per_rep for k, v in rep.items() if v is not None})
    stats = {}
    for name in names:
        vals = np.array([rep[name] for rep in per_rep
                         if rep.get(name) is not None], dtype=np.float64)
        stats[name] = {
            "mean": float(vals.mean()),
            "std": float(vals.std()),
            "min": float(vals.min()),
        }
    hp = {
        "objective": cfg.attack.objective,
        "alpha": cfg.attack.alpha,
        "beta": cfg.attack.beta,
        "learning_rate": cfg.attack.learning_rate,
        "iterations": cfg.attack.iterations,
        "init": cfg.attack.init,
        "finalization": cfg.attack.finalization,
        "threshold": cfg.attack.threshold,
        "d_tree": cfg.attack.d_tree,
        "hidden_dim": cfg.hidden_dim,
        "batch_size": cfg.batch_size,
        "seed": cfg.seed,
    }
    return ReportRow(
        scenario=cfg.scenario,
        framework=cfg.framework,
        dataset=cfg.dataset.source,
        repeats=cfg.repeats,
        metrics=stats,
        hyperparams=hp,
        errors=errors,
        wall_time_s=elapsed,
    )


def run_experiment(cfg, dump_dir=None):
    """Run the configured scenario R times and aggregate mean/std/min.

    With ``dump_dir`` set, each repetition's recovered and true matrices are
    written there as CSV (``rep<i>_<name>.csv``), so every reported metric
    can be recomputed from the files.
    """
    start = time.perf_counter()
    threads = int(os.environ.get("GLG_THREADS", "1"))
    per_rep = []
    errors = []

    def safe(rep):
        try:
            return _one_repetition(cfg, rep), None
        except GlgError as exc:
            return None, f"rep {rep}: {exc}"

    if threads > 1 and cfg.repeats > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(safe, range(cfg.repeats)))
    else:
        outcomes = [safe(rep) for rep in range(cfg.repeats)]
    for rep, (result, err) in enumerate(outcomes):
        if err is not None:
            errors.append(err)
            continue
        metrics_out, artifacts = result
        per_rep.append(metrics_out)
        if dump_dir is not None:
            os.makedirs(dump_dir, exist_ok=True)
            for name, arr in artifacts.items():
                np.savetxt(os.path.join(dump_dir, f"rep{rep}_{name}.csv"),
                           np.atleast_2d(arr), fmt="%.17g", delimiter=",")
    if not per_rep and errors:
        raise GlgError("every repetition failed: " + "; ".join(errors))
    elapsed = time.perf_counter() - start
    return [_aggregate(per_rep, cfg, errors, elapsed)]


def sweep(cfg, parameter, values):
    """Re-run the experiment for each value of one hyperparameter."""
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"sweep parameter must be one of {SWEEP_PARAMETERS}",
                          "parameter")
    rows = []
    for value in values:
        data = cfg.to_dict()
        if parameter in ("hidden_dim", "batch_size"):
            data[parameter] = int(value)
        elif parameter == "init":
            data["attack"]["init"] = str(value)
        elif parameter == "d_tree":
            data["attack"]["d_tree"] = int(value)
        else:
            data["attack"][parameter] = float(value)
        swept = ExperimentConfig.from_dict(data)
        for row in run_experiment(swept):
            row.hyperparams["swept_parameter"] = parameter
            row.hyperparams["swept_value"] = value
            rows.append(row)
    return rows


_BASE_COLUMNS = ("scenario", "framework", "dataset", "repeats")
_HP_COLUMNS = ("objective", "alpha", "beta", "learning_rate", "iterations",
               "init", "finalization", "threshold", "d_tree", "hidden_dim",
               "batch_size", "seed", "swept_parameter", "swept_value")


def _row_record(row, include_timing):
    rec = {
        "scenario": row.scenario,
        "framework": row.framework,
        "dataset": row.dataset,
        "repeats": row.repeats,
        "metrics": {k: dict(v) for k, v in sorted(row.metrics.items())},
        "hyperparams": dict(row.hyperparams),
        "errors": list(row.errors),
    }
    if include_timing:
        rec["wall_time_s"] = row.wall_time_s
    return rec


def emit_report(rows, fmt, path, config=None, include_timing=False):
    """Write rows as CSV or JSON with a deterministic layout; returns the path."""
    if fmt not in ("csv", "json"):
        raise ConfigError("format must be csv or json", "format")
    if fmt == "json":
        payload = {
            "config": config.to_dict() if config is not None else None,
            "rows": [_row_record(r, include_timing) for r in rows],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path

    metric_names = sorted({m for r in rows for m in r.metrics})
    header = list(_BASE_COLUMNS)
    for m in metric_names:
        header += [f"{m}_mean", f"{m}_std", f"{m}_min"]
    header += [c for c in _HP_COLUMNS]
    if include_timing:
        header.append("wall_time_s")
    header.append("errors")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            rec = [r.scenario, r.framework, r.dataset, r.repeats]
            for m in metric_names:
                st = r.metrics.get(m)
                rec += ([st["mean"], st["std"], st["min"]] if st
                        else ["", "", ""])
            rec += [r.hyperparams.get(c, "") for c in _HP_COLUMNS]
            if include_timing:
                rec.append(f"{r.wall_time_s:.3f}")
            rec.append("; ".join(r.errors))
            writer.writerow(rec)
    return path


def rows_from_json(path):
    """Reload report rows written by :func:`emit_report` (json format)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    rows = []
    for rec in payload["rows"]:
        rows.append(ReportRow(
            scenario=rec["scenario"],
            framework=rec["framework"],
            dataset=rec["dataset"],
            repeats=rec["repeats"],
            metrics=rec["metrics"],
            hyperparams=rec["hyperparams"],
            errors=rec["errors"],
            wall_time_s=rec.get("wall_time_s", 0.0),
        ))
    return rows
