"""Iterative gradient-matching attacks and their objectives.

The attacker holds leaked gradient bundles, a copy of the model, and
optionally part of the private data. Dummy inputs are pushed through the
model, their gradients compared to the leak under an L2 or cosine
objective (plus smoothness and Frobenius regularizers when structure is
being recovered), and the dummies updated by Adam. Adjacency dummies stay
symmetric by construction: only the strict lower triangle is optimized,
each step is projected back into [0, 1], and the final probabilistic
matrix is binarized by Bernoulli sampling or min-max thresholding.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DegenerateGradientError, ShapeError
from .federated import LeakRecord
from .graphs import dummy_tree, normalize_dense, normalize_dense_backward
from .models import (
    PARAM_ORDER,
    GradientBundle,
    graph_bundles,
    graph_ctx,
    graph_matching_grad,
    infer_label,
    node_bundles,
    node_ctx,
    node_matching_grad,
)
from .numkit import AdamState, adam_step, make_rng, sample_bernoulli

__all__ = [
    "AttackSpec",
    "RecoveryResult",
    "attack_batched",
    "attack_graph",
    "attack_node1",
    "attack_node2",
    "finalize_adjacency",
    "frobenius_penalty",
    "grad_match_cosine",
    "grad_match_l2",
    "project_interval",
    "smoothness",
]

SCENARIOS = ("node1", "node2a", "node2b", "node2c", "graph_a", "graph_b", "graph_c")
OBJECTIVES = ("cosine", "l2")
INITS = ("gaussian", "constant", "tree")
FINALIZATIONS = ("bernoulli", "threshold")


@dataclass
class AttackSpec:
    """Configuration of one attack run."""

    scenario: str
    objective: str = "cosine"
    alpha: float = 1e-9            # smoothness weight
    beta: float = 1e-7             # Frobenius weight
    learning_rate: float = 0.05
    iterations: int = 2000
    init: str = "gaussian"
    init_value: float = 0.5        # fill value for constant init
    d_tree: int = 10               # dummy-tree degree (node1)
    finalization: str = "bernoulli"
    threshold: float = 0.5
    restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}", "scenario")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objective must be one of {OBJECTIVES}", "objective")
        if self.init not in INITS:
            raise ConfigError(f"init must be one of {INITS}", "init")
        if self.init == "tree" and self.scenario != "node1":
            raise ConfigError("tree init only applies to node1", "init")
        if self.finalization not in FINALIZATIONS:
            raise ConfigError(
                f"finalization must be one of {FINALIZATIONS}", "finalization"
            )
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("regularizer weights must be non-negative", "alpha")
        if self.iterations < 1:
            raise ConfigError("need at least one iteration", "iterations")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("threshold must lie in [0, 1]", "threshold")
        if self.restarts < 1:
            raise ConfigError("need at least one restart", "restarts")
        if self.d_tree < 1:
            raise ConfigError("d_tree must be positive", "d_tree")


@dataclass
class RecoveryResult:
    """Output of one attack: recovered data plus the optimization trace."""

    features: Optional[np.ndarray] = None
    adjacency_prob: Optional[np.ndarray] = None
    adjacency: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    wall_time_s: float = 0.0
    target_feature: Optional[np.ndarray] = None
    neighbor_features: Optional[np.ndarray] = None
    final_objective: float = np.inf


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------

def _stack_tensors(bundles):
    names = [k for k in PARAM_ORDER if k in bundles[0].tensors]
    return {k: np.stack([b.tensors[k] for b in bundles]) for k in names}


def _flatten(stacks, names):
    s = stacks[names[0]].shape[0]
    return np.concatenate([stacks[k].reshape(s, -1) for k in names], axis=1)


def _unflatten(mat, stacks, names):
    out = {}
    pos = 0
    for k in names:
        size = int(np.prod(stacks[k].shape[1:]))
        out[k] = mat[:, pos:pos + size].reshape(stacks[k].shape)
        pos += size
    return out


def _objective_and_grad(dummy_stacks, leaked_flat, kind, names):
    """Sum of per-sample matching losses and d(loss)/d(dummy bundle)."""
    dummy_flat = _flatten(dummy_stacks, names)
    if kind == "l2":
        diff = dummy_flat - leaked_flat
        value = float((diff * diff).sum())
        return value, _unflatten(2.0 * diff, dummy_stacks, names)
    dn = np.linalg.norm(dummy_flat, axis=1, keepdims=True)
    ln = np.linalg.norm(leaked_flat, axis=1, keepdims=True)
    if np.any(dn == 0.0) or np.any(ln == 0.0):
        raise DegenerateGradientError("zero-norm gradient bundle in cosine objective")
    u = dummy_flat / dn
    v = leaked_flat / ln
    w = u - v
    # 0.5 ||u - v||^2 equals 1 - cos and is exactly zero on identical bundles
    value = float(0.5 * (w * w).sum())
    vgrad = (w - u * (u * w).sum(axis=1, keepdims=True)) / dn
    return value, _unflatten(vgrad, dummy_stacks, names)


def _pair_flat(bundle):
    names = [k for k in PARAM_ORDER if k in bundle.tensors]
    return np.concatenate([np.ravel(bundle.tensors[k]) for k in names]), names


def grad_match_l2(leaked, dummy):
    """Squared entrywise distance between two gradient bundles."""
    lf, ln = _pair_flat(leaked)
    df, dn = _pair_flat(dummy)
    if ln != dn or lf.shape != df.shape:
        raise ShapeError("bundles are not congruent")
    d = df - lf
    return float(d @ d)


def grad_match_cosine(leaked, dummy):
    """One minus the cosine similarity of two flattened gradient bundles."""
    lf, ln = _pair_flat(leaked)
    df, dn = _pair_flat(dummy)
    if ln != dn or lf.shape != df.shape:
        raise ShapeError("bundles are not congruent")
    nl = np.linalg.norm(lf)
    nd = np.linalg.norm(df)
    if nl == 0.0 or nd == 0.0:
        raise DegenerateGradientError("zero-norm gradient bundle in cosine objective")
    w = df / nd - lf / nl
    return float(0.5 * (w @ w))


# ---------------------------------------------------------------------------
# Regularizers, projection, finalization
# ---------------------------------------------------------------------------

def _degree_scaled(x, a):
    d = a.sum(axis=1)
    r = np.where(d > 0.0, 1.0 / np.sqrt(np.where(d > 0.0, d, 1.0)), 0.0)
    return d, r, x * r[:, None]


def smoothness(x, a):
    """Dirichlet energy of the degree-scaled features over the edge set.

    Sum over edges of ||x_i/sqrt(d_i) - x_j/sqrt(d_j)||^2; zero-degree rows
    contribute nothing. Accepts a weighted adjacency (each ordered pair
    counts half).
    """
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    _, _, u = _degree_scaled(x, a)
    sq = (u * u).sum(axis=1)
    pair = sq[:, None] + sq[None, :] - 2.0 * (u @ u.T)
    return float(0.5 * (a * pair).sum())


def smoothness_grads(x, a, wrt_features, wrt_adjacency):
    """Value and exact gradients of :func:`smoothness`, degrees included."""
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    d, r, u = _degree_scaled(x, a)
    sq = (u * u).sum(axis=1)
    pair = sq[:, None] + sq[None, :] - 2.0 * (u @ u.T)
    value = float(0.5 * (a * pair).sum())
    rowsum = a.sum(axis=1)
    colsum = a.sum(axis=0)
    gu = (rowsum + colsum)[:, None] * u - a @ u - a.T @ u
    gx = None
    if wrt_features:
        gx = gu * r[:, None]
    ga = None
    if wrt_adjacency:
        ga = 0.5 * pair.copy()
        # degree channel: d_k enters every u_k = x_k d_k^{-1/2}
        safe = np.where(d > 0.0, d, 1.0)
        wdeg = np.where(d > 0.0, -0.5 * (gu * u).sum(axis=1) / safe, 0.0)
        ga += wdeg[:, None]
    return value, gx, ga


def frobenius_penalty(a):
    """Squared Frobenius norm; the sparsity-promoting term on the adjacency."""
    a = np.asarray(a, dtype=np.float64)
    return float((a * a).sum())


def project_interval(m):
    """Entrywise clamp to [0, 1]."""
    return np.clip(np.asarray(m, dtype=np.float64), 0.0, 1.0)


def finalize_adjacency(prob, rule, rng=None, tau=0.5):
    """Binarize a probabilistic adjacency.

    bernoulli: entrywise draw with the given probabilities. threshold:
    min-max normalize the off-diagonal entries, then keep entries at or
    above tau. Either way the lower triangle is mirrored and the diagonal
    zeroed.
    """
    prob = np.asarray(prob, dtype=np.float64)
    n = prob.shape[0]
    if rule == "bernoulli":
        if rng is None:
            raise ValueError("bernoulli finalization needs an rng")
        draw = sample_bernoulli(rng, prob)
        lower = np.tril(draw, k=-1)
        return lower + lower.T
    if rule == "threshold":
        lo = prob.min()
        hi = prob.max()
        if hi > lo:
            z = (prob - lo) / (hi - lo)
        else:
            z = np.zeros_like(prob)
        lower = np.tril((z >= tau).astype(np.float64), k=-1)
        return lower + lower.T
    raise ValueError(f"unknown finalization rule {rule!r}")


# ---------------------------------------------------------------------------
# Optimized variables
# ---------------------------------------------------------------------------

class _SymmetricAdjacency:
    """Strict-lower-triangle parameterization of a [0,1] symmetric matrix."""

    def __init__(self, init_matrix, lr):
        self.n = init_matrix.shape[0]
        self.rows, self.cols = np.tril_indices(self.n, k=-1)
        self.theta = project_interval(init_matrix)[self.rows, self.cols]
        self.adam = AdamState(lr=lr)

    def matrix(self):
        a = np.zeros((self.n, self.n))
        a[self.rows, self.cols] = self.theta
        return a + a.T

    def step(self, grad_full):
        g = grad_full[self.rows, self.cols] + grad_full[self.cols, self.rows]
        self.theta = np.clip(adam_step(self.adam, self.theta, g), 0.0, 1.0)


def _init_features(rng, spec, shape):
    if spec.init == "constant":
        return np.full(shape, float(spec.init_value))
    return rng.standard_normal(shape)


def _init_adjacency(rng, spec, n):
    if spec.init == "constant":
        return np.full((n, n), float(spec.init_value))
    return project_interval(rng.standard_normal((n, n)))


def _bundles_of(leak):
    if isinstance(leak, LeakRecord):
        return leak.bundles
    if isinstance(leak, GradientBundle):
        return [leak]
    return list(leak)


# ---------------------------------------------------------------------------
# Attacks
# ---------------------------------------------------------------------------

def attack_node1(leak, spec, params, rng=None, init_features=None):
    """Recover target (and neighbor) features from one node-task bundle.

    Builds a two-level dummy tree rooted at the target, infers the label
    from the leak, and matches gradients over the tree's features with the
    plain cosine/L2 objective (no regularizers). ``init_features`` warm
    starts the tree features instead of the configured init.
    """
    if spec.scenario != "node1":
        raise ConfigError(f"spec scenario is {spec.scenario}, not node1", "scenario")
    if params.task != "node":
        raise ConfigError("node1 needs a node-task model", "scenario")
    rng = rng or make_rng(spec.seed)
    bundle = _bundles_of(leak)[0]
    label = infer_label(bundle)
    leaked_flat = _flatten(_stack_tensors([bundle]), bundle.param_names)
    names = bundle.param_names

    tree = dummy_tree(rng, spec.d_tree, params.feature_dim)
    anorm = normalize_dense(tree.adjacency, params.norm_mode)
    targets = np.array([0])
    labels = np.array([label])

    start = time.perf_counter()
    best = None
    for _ in range(spec.restarts):
        if init_features is not None:
            x = np.array(init_features, dtype=np.float64)
        elif spec.init == "constant":
            x = np.full_like(tree.features, float(spec.init_value))
        else:
            x = rng.standard_normal(tree.features.shape)
        state = AdamState(lr=spec.learning_rate)
        trace = np.zeros(spec.iterations)
        for p in range(spec.iterations):
            ctx = node_ctx(params, x, anorm, targets, labels)
            stacks = node_bundles(ctx, params)
            value, v = _objective_and_grad(stacks, leaked_flat, spec.objective, names)
            trace[p] = value
            xbar, _ = node_matching_grad(ctx, params, v, want_adjacency=False)
            x = adam_step(state, x, xbar)
        ctx = node_ctx(params, x, anorm, targets, labels)
        final, _ = _objective_and_grad(
            node_bundles(ctx, params), leaked_flat, spec.objective, names)
        if best is None or final < best.final_objective:
            best = RecoveryResult(
                features=x,
                labels=labels.copy(),
                objective_trace=trace,
                target_feature=x[0].copy(),
                neighbor_features=x[1:1 + spec.d_tree].copy(),
                final_objective=final,
            )
    best.wall_time_s = time.perf_counter() - start
    return best


def _known_matrix(value, name):
    if value is None:
        raise ConfigError(f"scenario requires known {name}", name)
    return np.asarray(value, dtype=np.float64)


def attack_node2(leak, spec, params, known_features=None, known_adjacency=None,
                 rng=None, init_features=None, init_adjacency=None):
    """Recover features and/or structure from per-node bundles of a subgraph.

    node2a optimizes the adjacency (features known), node2b the features
    (adjacency known), node2c both. The objective sums per-node matching
    losses and adds the smoothness and Frobenius terms weighted by
    spec.alpha / spec.beta. ``init_features`` / ``init_adjacency`` warm
    start the optimized variables instead of the configured init.
    """
    if spec.scenario not in ("node2a", "node2b", "node2c"):
        raise ConfigError(f"spec scenario {spec.scenario} is not a node2 case",
                          "scenario")
    if params.task != "node":
        raise ConfigError("node2 needs a node-task model", "scenario")
    rng = rng or make_rng(spec.seed)
    bundles = _bundles_of(leak)
    n = len(bundles)
    opt_x = spec.scenario in ("node2b", "node2c")
    opt_a = spec.scenario in ("node2a", "node2c")
    labels = np.array([infer_label(b) for b in bundles])
    targets = np.arange(n)
    names = bundles[0].param_names
    leaked_flat = _flatten(_stack_tensors(bundles), names)

    x_known = None if opt_x else _known_matrix(known_features, "features")
    a_known = None if opt_a else _known_matrix(known_adjacency, "adjacency")

    start = time.perf_counter()
    best = None
    for _ in range(spec.restarts):
        if opt_x:
            x = (np.array(init_features, dtype=np.float64)
                 if init_features is not None
                 else _init_features(rng, spec, (n, params.feature_dim)))
        else:
            x = x_known
        if opt_a:
            a0 = (np.asarray(init_adjacency, dtype=np.float64)
                  if init_adjacency is not None
                  else _init_adjacency(rng, spec, n))
            adj = _SymmetricAdjacency(a0, spec.learning_rate)
        else:
            adj = None
        x_state = AdamState(lr=spec.learning_rate) if opt_x else None
        trace = np.zeros(spec.iterations)

        def objective_step(x_cur, a_cur, update):
            anorm = normalize_dense(a_cur, params.norm_mode)
            ctx = node_ctx(params, x_cur, anorm, targets, labels)
            stacks = node_bundles(ctx, params)
            value, v = _objective_and_grad(stacks, leaked_flat, spec.objective,
                                           names)
            gx_total = None
            ga_total = None
            if update:
                xbar, abar_norm = node_matching_grad(ctx, params, v,
                                                     want_adjacency=opt_a)
                if opt_a:
                    ga_total = normalize_dense_backward(
                        abar_norm, a_cur, params.norm_mode)
                if opt_x:
                    gx_total = xbar
            if spec.alpha > 0.0:
                s_val, s_gx, s_ga = smoothness_grads(
                    x_cur, a_cur, wrt_features=update and opt_x,
                    wrt_adjacency=update and opt_a)
                value += spec.alpha * s_val
                if update and opt_x:
                    gx_total += spec.alpha * s_gx
                if update and opt_a:
                    ga_total += spec.alpha * s_ga
            if spec.beta > 0.0:
                value += spec.beta * frobenius_penalty(a_cur)
                if update and opt_a:
                    ga_total += spec.beta * 2.0 * a_cur
            return value, gx_total, ga_total

        for p in range(spec.iterations):
            a_cur = adj.matrix() if opt_a else a_known
            value, gx, ga = objective_step(x, a_cur, update=True)
            trace[p] = value
            if opt_x:
                x = adam_step(x_state, x, gx)
            if opt_a:
                adj.step(ga)
        a_cur = adj.matrix() if opt_a else a_known
        final, _, _ = objective_step(x, a_cur, update=False)
        if best is None or final < best.final_objective:
            best = RecoveryResult(
                features=x.copy() if opt_x else None,
                adjacency_prob=a_cur.copy() if opt_a else None,
                labels=labels.copy(),
                objective_trace=trace,
                final_objective=final,
            )
    if opt_a:
        best.adjacency = finalize_adjacency(
            best.adjacency_prob, spec.finalization, rng=rng, tau=spec.threshold)
    best.wall_time_s = time.perf_counter() - start
    return best


def attack_graph(leak, spec, params, known_features=None, known_adjacency=None,
                 rng=None, init_features=None, init_adjacency=None):
    """Recover features and/or structure from one graph-task bundle.

    Same unknown-selection logic as the subgraph attack, driven by a single
    graph-level loss. With alpha = beta = 0 the objective reduces to the
    plain matching loss.
    """
    if spec.scenario not in ("graph_a", "graph_b", "graph_c"):
        raise ConfigError(f"spec scenario {spec.scenario} is not a graph case",
                          "scenario")
    if params.task != "graph":
        raise ConfigError("graph attack needs a graph-task model", "scenario")
    rng = rng or make_rng(spec.seed)
    bundle = _bundles_of(leak)[0]
    n = params.num_nodes
    opt_x = spec.scenario in ("graph_b", "graph_c")
    opt_a = spec.scenario in ("graph_a", "graph_c")
    label = infer_label(bundle)
    names = bundle.param_names
    leaked_flat = _flatten(_stack_tensors([bundle]), names)
    glabels = np.array([label])

    x_known = None if opt_x else _known_matrix(known_features, "features")
    a_known = None if opt_a else _known_matrix(known_adjacency, "adjacency")

    start = time.perf_counter()
    best = None
    for _ in range(spec.restarts):
        if opt_x:
            x = (np.array(init_features, dtype=np.float64)
                 if init_features is not None
                 else _init_features(rng, spec, (n, params.feature_dim)))
        else:
            x = x_known
        if opt_a:
            a0 = (np.asarray(init_adjacency, dtype=np.float64)
                  if init_adjacency is not None
                  else _init_adjacency(rng, spec, n))
            adj = _SymmetricAdjacency(a0, spec.learning_rate)
        else:
            adj = None
        x_state = AdamState(lr=spec.learning_rate) if opt_x else None
        trace = np.zeros(spec.iterations)

        def objective_step(x_cur, a_cur, update):
            anorm = normalize_dense(a_cur, params.norm_mode)
            ctx = graph_ctx(params, x_cur[None], anorm, glabels)
            stacks = graph_bundles(ctx, params)
            value, v = _objective_and_grad(stacks, leaked_flat, spec.objective,
                                           names)
            gx_total = None
            ga_total = None
            if update:
                xbar, abar_norm = graph_matching_grad(ctx, params, v,
                                                      want_adjacency=opt_a)
                if opt_a:
                    ga_total = normalize_dense_backward(
                        abar_norm[0], a_cur, params.norm_mode)
                if opt_x:
                    gx_total = xbar[0]
            if spec.alpha > 0.0:
                s_val, s_gx, s_ga = smoothness_grads(
                    x_cur, a_cur, wrt_features=update and opt_x,
                    wrt_adjacency=update and opt_a)
                value += spec.alpha * s_val
                if update and opt_x:
                    gx_total += spec.alpha * s_gx
                if update and opt_a:
                    ga_total += spec.alpha * s_ga
            if spec.beta > 0.0:
                value += spec.beta * frobenius_penalty(a_cur)
                if update and opt_a:
                    ga_total += spec.beta * 2.0 * a_cur
            return value, gx_total, ga_total

        for p in range(spec.iterations):
            a_cur = adj.matrix() if opt_a else a_known
            value, gx, ga = objective_step(x, a_cur, update=True)
            trace[p] = value
            if opt_x:
                x = adam_step(x_state, x, gx)
            if opt_a:
                adj.step(ga)
        a_cur = adj.matrix() if opt_a else a_known
        final, _, _ = objective_step(x, a_cur, update=False)
        if best is None or final < best.final_objective:
            best = RecoveryResult(
                features=x.copy() if opt_x else None,
                adjacency_prob=a_cur.copy() if opt_a else None,
                labels=np.array([label]),
                objective_trace=trace,
                final_objective=final,
            )
    if opt_a:
        best.adjacency = finalize_adjacency(
            best.adjacency_prob, spec.finalization, rng=rng, tau=spec.threshold)
    best.wall_time_s = time.perf_counter() - start
    return best


def attack_batched(leak, spec, params, labels, known_adjacencies=None, rng=None):
    """Jointly recover a batch of samples from one averaged bundle.

    Node task: one dummy tree per sample, all features optimized so the
    batch-averaged dummy gradient matches the leak. Graph task: per-sample
    known adjacencies, per-sample feature matrices optimized. True labels
    must be supplied; averaging destroys the per-sample sign structure that
    single-sample label inference relies on.
    """
    rng = rng or make_rng(spec.seed)
    bundle = _bundles_of(leak)[0]
    b = leak.batch_size if isinstance(leak, LeakRecord) else len(labels)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != b:
        raise ConfigError(f"{labels.shape[0]} labels for batch of {b}", "labels")
    names = bundle.param_names
    leaked_flat = _flatten(_stack_tensors([bundle]), names)

    if params.task == "node":
        tree = dummy_tree(rng, spec.d_tree, params.feature_dim)
        anorm = normalize_dense(tree.adjacency, params.norm_mode)
        n = tree.num_nodes
        targets = np.zeros(b, dtype=np.int64)
    else:
        if known_adjacencies is None:
            raise ConfigError("batched graph attack needs known adjacencies",
                              "known_adjacencies")
        anorm = np.stack([
            normalize_dense(np.asarray(a, dtype=np.float64), params.norm_mode)
            for a in known_adjacencies
        ])
        n = params.num_nodes

    def batch_objective(x):
        if params.task == "node":
            ctx = node_ctx(params, x, anorm, targets, labels, batch=True)
            stacks = node_bundles(ctx, params)
        else:
            ctx = graph_ctx(params, x, anorm, labels)
            stacks = graph_bundles(ctx, params)
        avg = {k: v.mean(axis=0, keepdims=True) for k, v in stacks.items()}
        value, v1 = _objective_and_grad(avg, leaked_flat, spec.objective, names)
        return ctx, value, v1

    start = time.perf_counter()
    best = None
    for _ in range(spec.restarts):
        x = _init_features(rng, spec, (b, n, params.feature_dim))
        state = AdamState(lr=spec.learning_rate)
        trace = np.zeros(spec.iterations)
        for p in range(spec.iterations):
            ctx, value, v1 = batch_objective(x)
            trace[p] = value
            vb = {k: np.repeat(g / float(b), b, axis=0) for k, g in v1.items()}
            if params.task == "node":
                xbar, _ = node_matching_grad(ctx, params, vb,
                                             want_adjacency=False)
            else:
                xbar, _ = graph_matching_grad(ctx, params, vb,
                                              want_adjacency=False)
            x = adam_step(state, x, xbar)
        _, final, _ = batch_objective(x)
        if best is None or final < best[0]:
            best = (final, trace, x)
    elapsed = time.perf_counter() - start

    final, trace, best_x = best
    results = []
    for i in range(b):
        res = RecoveryResult(
            features=best_x[i].copy(),
            labels=np.array([labels[i]]),
            objective_trace=trace,
            final_objective=final,
            wall_time_s=elapsed,
        )
        if params.task == "node":
            res.target_feature = best_x[i, 0].copy()
        results.append(res)
    return results
