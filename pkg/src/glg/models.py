"""Forward passes and hand-derived gradients for the two GNN classifiers.

Node task: one graph-convolution layer (sigmoid) followed by a linear
readout at the target node. With this head, the loss reaches the first
layer's weights only through the target's own pre-activation, which is what
makes the closed-form feature recoveries exact. Graph task: two
graph-convolution layers (sigmoid), row-major flattening, and a linear MLP
readout over the whole graph.

Both tasks come in a "gcn" flavour (single weight on the aggregated input,
self-loop normalization) and a "sage" flavour (separate aggregation and
self weights, mean normalization).

Besides plain backward passes (the gradient bundles a federated server
would see), this module computes the gradient of ``<bundle, V>`` with
respect to the input features and the normalized adjacency for a constant
co-vector ``V``. That second-order pass is what the iterative
gradient-matching attacks differentiate through.

Array convention: an optional leading sample axis is supported everywhere;
``x`` may be (N, D) or (B, N, D), the normalized adjacency (N, N) or
(B, N, N).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AmbiguousLabelError, ShapeError
from .graphs import Graph, NormalizedAdjacency, normalize_dense_backward

__all__ = [
    "GradientBundle",
    "GraphTrace",
    "ModelParams",
    "NodeTrace",
    "backward_graph",
    "backward_node",
    "cross_entropy",
    "forward_graph",
    "forward_node",
    "infer_label",
    "init_params",
    "softmax",
]

FRAMEWORKS = ("gcn", "sage")
TASKS = ("node", "graph")

# Canonical tensor order used when flattening bundles.
PARAM_ORDER = (
    "conv1_agg",
    "conv1_self",
    "conv1_bias",
    "conv2_agg",
    "conv2_self",
    "conv2_bias",
    "out_weight",
    "out_bias",
    "mlp_weight",
    "mlp_bias",
)


@dataclass
class ModelParams:
    """Parameter tensors of one classifier, keyed by canonical names."""

    framework: str
    task: str
    feature_dim: int
    hidden_dim: int
    num_classes: int
    tensors: dict
    num_nodes: Optional[int] = None  # graph task: node count the MLP expects

    def __post_init__(self):
        if self.framework not in FRAMEWORKS:
            raise ValueError(f"framework must be one of {FRAMEWORKS}")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if self.task == "graph" and self.num_nodes is None:
            raise ValueError("graph task requires num_nodes")
        self.tensors = {
            k: np.asarray(v, dtype=np.float64) for k, v in self.tensors.items()
        }

    @property
    def norm_mode(self):
        return "gcn" if self.framework == "gcn" else "sage-mean"

    @property
    def param_names(self):
        return [k for k in PARAM_ORDER if k in self.tensors]

    def copy(self):
        return ModelParams(
            framework=self.framework,
            task=self.task,
            feature_dim=self.feature_dim,
            hidden_dim=self.hidden_dim,
            num_classes=self.num_classes,
            tensors={k: v.copy() for k, v in self.tensors.items()},
            num_nodes=self.num_nodes,
        )


def init_params(rng, framework, task, feature_dim, hidden_dim, num_classes,
                num_nodes=None):
    """Gaussian init, std 1/sqrt(fan_in) per tensor."""
    d, f, k = feature_dim, hidden_dim, num_classes
    tensors = {}

    def gauss(shape, fan_in):
        return rng.standard_normal(shape) / np.sqrt(fan_in)

    tensors["conv1_agg"] = gauss((f, d), d)
    if framework == "sage":
        tensors["conv1_self"] = gauss((f, d), d)
    tensors["conv1_bias"] = gauss((f,), d)
    if task == "node":
        tensors["out_weight"] = gauss((k, f), f)
        tensors["out_bias"] = gauss((k,), f)
    else:
        if num_nodes is None:
            raise ValueError("graph task requires num_nodes")
        tensors["conv2_agg"] = gauss((f, f), f)
        if framework == "sage":
            tensors["conv2_self"] = gauss((f, f), f)
        tensors["conv2_bias"] = gauss((f,), f)
        tensors["mlp_weight"] = gauss((k, num_nodes * f), num_nodes * f)
        tensors["mlp_bias"] = gauss((k,), num_nodes * f)
    return ModelParams(
        framework=framework,
        task=task,
        feature_dim=d,
        hidden_dim=f,
        num_classes=k,
        tensors=tensors,
        num_nodes=num_nodes,
    )


@dataclass
class GradientBundle:
    """Gradients of one loss w.r.t. every parameter tensor (same shapes)."""

    tensors: dict
    d_features: Optional[np.ndarray] = None
    d_adj_norm: Optional[np.ndarray] = None
    d_adjacency: Optional[np.ndarray] = None

    @property
    def param_names(self):
        return [k for k in PARAM_ORDER if k in self.tensors]


def softmax(logits):
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(logits, label):
    """Stable -log softmax(logits)[label]."""
    logits = np.asarray(logits, dtype=np.float64).ravel()
    label = int(label)
    if not 0 <= label < logits.shape[0]:
        raise ShapeError(f"label {label} out of range for {logits.shape[0]} classes")
    z = logits - logits.max()
    return float(np.log(np.exp(z).sum()) - z[label])


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _ce_rows(logits, labels):
    z = logits - logits.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1))
    picked = np.take_along_axis(z, labels[:, None], axis=-1)[:, 0]
    return lse - picked


def _check_norm(params, anorm):
    if isinstance(anorm, NormalizedAdjacency):
        if anorm.mode != params.norm_mode:
            raise ShapeError(
                f"normalization mode {anorm.mode!r} does not match "
                f"framework {params.framework!r}"
            )
        return anorm.matrix
    return np.asarray(anorm, dtype=np.float64)


# ---------------------------------------------------------------------------
# Node task
# ---------------------------------------------------------------------------

@dataclass
class _NodeCtx:
    """Everything the per-sample backward and matching-gradient passes need.

    ``batch`` selects between one shared graph with many target nodes
    (x is (N, D), one row per target in the stacks) and a batch of
    independent graphs with one target each (x is (B, N, D)).
    """

    x: np.ndarray
    anorm: np.ndarray
    targets: np.ndarray
    labels: np.ndarray
    batch: bool
    agg1: np.ndarray = field(repr=False, default=None)   # anorm @ x
    sig1: np.ndarray = field(repr=False, default=None)   # sigma'(pre1)
    ht: np.ndarray = field(repr=False, default=None)     # hidden rows at targets
    st: np.ndarray = field(repr=False, default=None)
    mt: np.ndarray = field(repr=False, default=None)     # aggregated input rows
    xt: np.ndarray = field(repr=False, default=None)     # raw feature rows
    at: np.ndarray = field(repr=False, default=None)     # anorm rows at targets
    q: np.ndarray = field(repr=False, default=None)
    g2: np.ndarray = field(repr=False, default=None)     # softmax - onehot
    g1: np.ndarray = field(repr=False, default=None)     # d loss / d pre1 rows
    u: np.ndarray = field(repr=False, default=None)      # g2 @ out_weight
    losses: np.ndarray = None
    pre1: np.ndarray = field(repr=False, default=None)
    hidden1: np.ndarray = field(repr=False, default=None)
    logits: np.ndarray = field(repr=False, default=None)


def _gather_rows(arr, targets, batch):
    if batch:
        if arr.ndim == 2:  # shared across the batch
            return arr[targets]
        return arr[np.arange(arr.shape[0]), targets]
    return arr[targets]


def node_ctx(params, x, anorm, targets, labels, batch=False):
    t = params.tensors
    x = np.asarray(x, dtype=np.float64)
    anorm = np.asarray(anorm, dtype=np.float64)
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if np.any(labels < 0) or np.any(labels >= params.num_classes):
        raise ShapeError("label out of range")

    agg1 = anorm @ x
    pre1 = agg1 @ t["conv1_agg"].T + t["conv1_bias"]
    if "conv1_self" in t:
        pre1 = pre1 + x @ t["conv1_self"].T
    hidden1 = _sigmoid(pre1)
    sig1 = hidden1 * (1.0 - hidden1)

    ctx = _NodeCtx(x=x, anorm=anorm, targets=targets, labels=labels, batch=batch,
                   agg1=agg1, sig1=sig1, pre1=pre1, hidden1=hidden1)
    ctx.ht = _gather_rows(hidden1, targets, batch)
    ctx.st = _gather_rows(sig1, targets, batch)
    ctx.mt = _gather_rows(agg1, targets, batch)
    ctx.xt = _gather_rows(x, targets, batch)
    ctx.at = _gather_rows(anorm, targets, batch)

    ctx.logits = ctx.ht @ t["out_weight"].T + t["out_bias"]
    ctx.q = softmax(ctx.logits)
    onehot = np.zeros_like(ctx.q)
    onehot[np.arange(labels.shape[0]), labels] = 1.0
    ctx.g2 = ctx.q - onehot
    ctx.u = ctx.g2 @ t["out_weight"]
    ctx.g1 = ctx.u * ctx.st
    ctx.losses = _ce_rows(ctx.logits, labels)
    return ctx


def node_bundles(ctx, params):
    """Per-sample gradient stacks, leading axis = sample."""
    out = {
        "out_weight": np.einsum("sk,sf->skf", ctx.g2, ctx.ht),
        "out_bias": ctx.g2.copy(),
        "conv1_agg": np.einsum("sf,sd->sfd", ctx.g1, ctx.mt),
        "conv1_bias": ctx.g1.copy(),
    }
    if "conv1_self" in params.tensors:
        out["conv1_self"] = np.einsum("sf,sd->sfd", ctx.g1, ctx.xt)
    return out


def node_input_grads(ctx, params, want_adjacency=True):
    """First-order d loss / d features (and d loss / d anorm), summed over samples."""
    t = params.tensors
    m1bar = ctx.g1 @ t["conv1_agg"]  # (S, D)
    if ctx.batch:
        xbar = np.einsum("sn,sd->snd", ctx.at, m1bar)
        if "conv1_self" in t:
            selfbar = ctx.g1 @ t["conv1_self"]
            xbar[np.arange(xbar.shape[0]), ctx.targets] += selfbar
        abar = None
        if want_adjacency:
            abar = np.zeros(ctx.x.shape[:-1] + (ctx.x.shape[-2],))
            rows = np.einsum("sd,snd->sn", m1bar, ctx.x)
            abar[np.arange(abar.shape[0]), ctx.targets] = rows
        return xbar, abar
    xbar = np.einsum("sn,sd->nd", ctx.at, m1bar)
    if "conv1_self" in t:
        np.add.at(xbar, ctx.targets, ctx.g1 @ t["conv1_self"])
    abar = None
    if want_adjacency:
        abar = np.zeros((ctx.x.shape[0], ctx.x.shape[0]))
        np.add.at(abar, ctx.targets, m1bar @ ctx.x.T)
    return xbar, abar


def node_matching_grad(ctx, params, v, want_adjacency):
    """Gradient of sum_s <bundle_s, v_s> w.r.t. features and normalized adjacency.

    ``v`` holds one co-tensor per parameter, stacked along the sample axis.
    The return value follows the ctx layout: shared mode gives (N, D) and
    (N, N) arrays summed over samples, batch mode per-sample stacks.
    """
    t = params.tensors
    w_out = t["out_weight"]
    w_agg = t["conv1_agg"]
    w_self = t.get("conv1_self")

    g1bar = np.einsum("sd,sfd->sf", ctx.mt, v["conv1_agg"]) + v["conv1_bias"]
    if w_self is not None:
        g1bar += np.einsum("sd,sfd->sf", ctx.xt, v["conv1_self"])
    mtbar = np.einsum("sf,sfd->sd", ctx.g1, v["conv1_agg"])
    xtbar = (np.einsum("sf,sfd->sd", ctx.g1, v["conv1_self"])
             if w_self is not None else 0.0)

    ubar = g1bar * ctx.st
    stbar = g1bar * ctx.u
    g2bar = (np.einsum("sf,skf->sk", ctx.ht, v["out_weight"]) + v["out_bias"]
             + ubar @ w_out.T)
    pbar = ctx.q * g2bar - (g2bar * ctx.q).sum(axis=-1, keepdims=True) * ctx.q
    htbar = (pbar @ w_out
             + np.einsum("sk,skf->sf", ctx.g2, v["out_weight"])
             + stbar * (1.0 - 2.0 * ctx.ht))
    ztbar = htbar * ctx.st
    mtbar = mtbar + ztbar @ w_agg
    if w_self is not None:
        xtbar = xtbar + ztbar @ w_self

    if ctx.batch:
        xbar = np.einsum("sn,sd->snd", ctx.at, mtbar)
        if w_self is not None:
            xbar[np.arange(xbar.shape[0]), ctx.targets] += xtbar
        abar = None
        if want_adjacency:
            abar = np.zeros(ctx.x.shape[:-1] + (ctx.x.shape[-2],))
            abar[np.arange(abar.shape[0]), ctx.targets] = np.einsum(
                "sd,snd->sn", mtbar, ctx.x)
        return xbar, abar

    xbar = np.einsum("sn,sd->nd", ctx.at, mtbar)
    if w_self is not None:
        np.add.at(xbar, ctx.targets, xtbar)
    abar = None
    if want_adjacency:
        abar = np.zeros((ctx.x.shape[0], ctx.x.shape[0]))
        np.add.at(abar, ctx.targets, mtbar @ ctx.x.T)
    return xbar, abar


@dataclass
class NodeTrace:
    """Forward record for one target node."""

    features: np.ndarray
    adj_norm: np.ndarray
    mode: str
    target: int
    label: int
    aggregated: np.ndarray   # anorm @ features
    pre_hidden: np.ndarray
    hidden: np.ndarray
    logits: np.ndarray
    probs: np.ndarray
    loss: float
    _ctx: _NodeCtx = field(repr=False, default=None)


def forward_node(params, g, anorm, target, label=None):
    """Run the node classifier at ``target`` and record the trace."""
    if params.task != "node":
        raise ShapeError("params are not a node-task model")
    mat = _check_norm(params, anorm)
    x = g.features if isinstance(g, Graph) else np.asarray(g, dtype=np.float64)
    if label is None:
        if not isinstance(g, Graph) or g.labels is None:
            raise ShapeError("no label given and the graph carries none")
        label = int(g.labels[target])
    if not 0 <= target < x.shape[0]:
        raise ShapeError(f"target {target} out of range")
    ctx = node_ctx(params, x, mat, [target], [label])
    return NodeTrace(
        features=x,
        adj_norm=mat,
        mode=params.norm_mode,
        target=int(target),
        label=int(label),
        aggregated=ctx.agg1,
        pre_hidden=ctx.pre1,
        hidden=ctx.hidden1,
        logits=ctx.logits[0],
        probs=ctx.q[0],
        loss=float(ctx.losses[0]),
        _ctx=ctx,
    )


def _single(stacked):
    return {k: v[0] for k, v in stacked.items()}


def backward_node(params, trace, graph=None, wrt=("params",)):
    """Exact reverse-mode gradients for a recorded node forward."""
    ctx = trace._ctx
    tensors = _single(node_bundles(ctx, params))
    bundle = GradientBundle(tensors=tensors)
    if "features" in wrt or "adjacency" in wrt:
        want_adj = "adjacency" in wrt
        xbar, abar = node_input_grads(ctx, params, want_adjacency=want_adj)
        bundle.d_features = xbar
        if want_adj:
            bundle.d_adj_norm = abar
            if graph is not None:
                bundle.d_adjacency = normalize_dense_backward(
                    abar, graph.adjacency, trace.mode)
    return bundle


# ---------------------------------------------------------------------------
# Graph task
# ---------------------------------------------------------------------------

@dataclass
class _GraphCtx:
    """Intermediates for a batch of graph-level losses (leading axis B)."""

    x: np.ndarray
    anorm: np.ndarray
    labels: np.ndarray
    agg1: np.ndarray = field(repr=False, default=None)
    sig1: np.ndarray = field(repr=False, default=None)
    hidden1: np.ndarray = field(repr=False, default=None)
    agg2: np.ndarray = field(repr=False, default=None)
    sig2: np.ndarray = field(repr=False, default=None)
    hidden2: np.ndarray = field(repr=False, default=None)
    flat: np.ndarray = field(repr=False, default=None)
    logits: np.ndarray = field(repr=False, default=None)
    q: np.ndarray = field(repr=False, default=None)
    gp: np.ndarray = field(repr=False, default=None)
    u1: np.ndarray = field(repr=False, default=None)
    g1: np.ndarray = field(repr=False, default=None)
    g2: np.ndarray = field(repr=False, default=None)
    losses: np.ndarray = None
    pre1: np.ndarray = field(repr=False, default=None)
    pre2: np.ndarray = field(repr=False, default=None)


def _anorm_t(anorm):
    return np.swapaxes(anorm, -1, -2) if anorm.ndim == 3 else anorm.T


def graph_ctx(params, x, anorm, labels):
    """Forward + first-order backward intermediates; x is (B, N, D)."""
    t = params.tensors
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    anorm = np.asarray(anorm, dtype=np.float64)
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    b, n, _ = x.shape
    if params.num_nodes != n:
        raise ShapeError(
            f"model readout expects {params.num_nodes} nodes, graph has {n}"
        )
    if np.any(labels < 0) or np.any(labels >= params.num_classes):
        raise ShapeError("label out of range")

    ctx = _GraphCtx(x=x, anorm=anorm, labels=labels)
    ctx.agg1 = anorm @ x
    ctx.pre1 = ctx.agg1 @ t["conv1_agg"].T + t["conv1_bias"]
    if "conv1_self" in t:
        ctx.pre1 = ctx.pre1 + x @ t["conv1_self"].T
    ctx.hidden1 = _sigmoid(ctx.pre1)
    ctx.sig1 = ctx.hidden1 * (1.0 - ctx.hidden1)

    ctx.agg2 = anorm @ ctx.hidden1
    ctx.pre2 = ctx.agg2 @ t["conv2_agg"].T + t["conv2_bias"]
    if "conv2_self" in t:
        ctx.pre2 = ctx.pre2 + ctx.hidden1 @ t["conv2_self"].T
    ctx.hidden2 = _sigmoid(ctx.pre2)
    ctx.sig2 = ctx.hidden2 * (1.0 - ctx.hidden2)

    ctx.flat = ctx.hidden2.reshape(b, -1)
    ctx.logits = ctx.flat @ t["mlp_weight"].T + t["mlp_bias"]
    ctx.q = softmax(ctx.logits)
    onehot = np.zeros_like(ctx.q)
    onehot[np.arange(b), labels] = 1.0
    ctx.gp = ctx.q - onehot
    ctx.losses = _ce_rows(ctx.logits, labels)

    hbar = (ctx.gp @ t["mlp_weight"]).reshape(ctx.hidden2.shape)
    ctx.g2 = hbar * ctx.sig2
    ctx.u1 = _anorm_t(anorm) @ (ctx.g2 @ t["conv2_agg"])
    if "conv2_self" in t:
        ctx.u1 = ctx.u1 + ctx.g2 @ t["conv2_self"]
    ctx.g1 = ctx.u1 * ctx.sig1
    return ctx


def graph_bundles(ctx, params):
    """Per-sample gradient stacks for the graph task, leading axis B."""
    out = {
        "mlp_weight": np.einsum("bk,bm->bkm", ctx.gp, ctx.flat),
        "mlp_bias": ctx.gp.copy(),
        "conv2_agg": np.einsum("bnf,bng->bfg", ctx.g2, ctx.agg2),
        "conv2_bias": ctx.g2.sum(axis=-2),
        "conv1_agg": np.einsum("bnf,bnd->bfd", ctx.g1, ctx.agg1),
        "conv1_bias": ctx.g1.sum(axis=-2),
    }
    if "conv2_self" in params.tensors:
        out["conv2_self"] = np.einsum("bnf,bng->bfg", ctx.g2, ctx.hidden1)
    if "conv1_self" in params.tensors:
        out["conv1_self"] = np.einsum("bnf,bnd->bfd", ctx.g1, ctx.x)
    return out


def graph_input_grads(ctx, params, want_adjacency=True):
    """First-order d loss / d features and d loss / d anorm, per sample."""
    t = params.tensors
    m1bar = ctx.g1 @ t["conv1_agg"]
    xbar = _anorm_t(ctx.anorm) @ m1bar
    if "conv1_self" in t:
        xbar = xbar + ctx.g1 @ t["conv1_self"]
    abar = None
    if want_adjacency:
        m2bar = ctx.g2 @ t["conv2_agg"]
        abar = (m2bar @ np.swapaxes(ctx.hidden1, -1, -2)
                + m1bar @ np.swapaxes(ctx.x, -1, -2))
    return xbar, abar


def graph_matching_grad(ctx, params, v, want_adjacency):
    """Gradient of sum_b <bundle_b, v_b> w.r.t. features and normalized adjacency."""
    t = params.tensors
    w1a = t["conv1_agg"]
    w1s = t.get("conv1_self")
    w2a = t["conv2_agg"]
    w2s = t.get("conv2_self")
    wm = t["mlp_weight"]
    anorm_t = _anorm_t(ctx.anorm)
    b = ctx.x.shape[0]

    # adjoints of the first-layer backward outputs
    g1bar = np.einsum("bnd,bfd->bnf", ctx.agg1, v["conv1_agg"]) + v["conv1_bias"][:, None, :]
    if w1s is not None:
        g1bar += np.einsum("bnd,bfd->bnf", ctx.x, v["conv1_self"])
    m1bar = np.einsum("bnf,bfd->bnd", ctx.g1, v["conv1_agg"])
    xbar = (np.einsum("bnf,bfd->bnd", ctx.g1, v["conv1_self"])
            if w1s is not None else np.zeros_like(ctx.x))

    u1bar = g1bar * ctx.sig1
    s1bar = g1bar * ctx.u1
    g2bar = (ctx.anorm @ u1bar) @ w2a.T
    abar_n = None
    if want_adjacency:
        abar_n = (ctx.g2 @ w2a) @ np.swapaxes(u1bar, -1, -2)
    if w2s is not None:
        g2bar += u1bar @ w2s.T

    # adjoints of the second-layer gradient outputs
    g2bar += np.einsum("bng,bfg->bnf", ctx.agg2, v["conv2_agg"]) + v["conv2_bias"][:, None, :]
    m2bar = np.einsum("bnf,bfg->bng", ctx.g2, v["conv2_agg"])
    h1bar = np.zeros_like(ctx.hidden1)
    if w2s is not None:
        g2bar += np.einsum("bng,bfg->bnf", ctx.hidden1, v["conv2_self"])
        h1bar += np.einsum("bnf,bfg->bng", ctx.g2, v["conv2_self"])

    # adjoints of the readout gradient outputs
    gpbar = (np.einsum("bm,bkm->bk", ctx.flat, v["mlp_weight"]) + v["mlp_bias"])
    rbar = (g2bar * ctx.sig2).reshape(b, -1)
    gpbar += rbar @ wm.T
    s2bar = g2bar * (ctx.gp @ wm).reshape(ctx.hidden2.shape)

    pbar = ctx.q * gpbar - (gpbar * ctx.q).sum(axis=-1, keepdims=True) * ctx.q
    hflatbar = pbar @ wm + np.einsum("bk,bkm->bm", ctx.gp, v["mlp_weight"])
    h2bar = hflatbar.reshape(ctx.hidden2.shape) + s2bar * (1.0 - 2.0 * ctx.hidden2)
    z2bar = h2bar * ctx.sig2

    m2bar = m2bar + z2bar @ w2a
    if w2s is not None:
        h1bar += z2bar @ w2s
    if want_adjacency:
        abar_n = abar_n + m2bar @ np.swapaxes(ctx.hidden1, -1, -2)
    h1bar += anorm_t @ m2bar
    h1bar += s1bar * (1.0 - 2.0 * ctx.hidden1)
    z1bar = h1bar * ctx.sig1

    m1bar = m1bar + z1bar @ w1a
    if w1s is not None:
        xbar += z1bar @ w1s
    if want_adjacency:
        abar_n = abar_n + m1bar @ np.swapaxes(ctx.x, -1, -2)
    xbar += anorm_t @ m1bar
    return xbar, abar_n


@dataclass
class GraphTrace:
    """Forward record for one graph-level loss."""

    features: np.ndarray
    adj_norm: np.ndarray
    mode: str
    graph_label: int
    aggregated1: np.ndarray
    pre_hidden1: np.ndarray
    hidden1: np.ndarray
    aggregated2: np.ndarray
    pre_hidden2: np.ndarray
    hidden2: np.ndarray
    flat: np.ndarray
    logits: np.ndarray
    probs: np.ndarray
    loss: float
    _ctx: _GraphCtx = field(repr=False, default=None)


def forward_graph(params, g, anorm, graph_label=None):
    """Run the graph classifier and record the trace."""
    if params.task != "graph":
        raise ShapeError("params are not a graph-task model")
    mat = _check_norm(params, anorm)
    x = g.features if isinstance(g, Graph) else np.asarray(g, dtype=np.float64)
    if graph_label is None:
        if not isinstance(g, Graph) or g.graph_label is None:
            raise ShapeError("no graph label given and the graph carries none")
        graph_label = int(g.graph_label)
    ctx = graph_ctx(params, x, mat, [graph_label])
    return GraphTrace(
        features=x,
        adj_norm=mat,
        mode=params.norm_mode,
        graph_label=int(graph_label),
        aggregated1=ctx.agg1[0],
        pre_hidden1=ctx.pre1[0],
        hidden1=ctx.hidden1[0],
        aggregated2=ctx.agg2[0],
        pre_hidden2=ctx.pre2[0],
        hidden2=ctx.hidden2[0],
        flat=ctx.flat[0],
        logits=ctx.logits[0],
        probs=ctx.q[0],
        loss=float(ctx.losses[0]),
        _ctx=ctx,
    )


def backward_graph(params, trace, graph=None, wrt=("params",)):
    """Exact reverse-mode gradients for a recorded graph forward."""
    ctx = trace._ctx
    tensors = _single(graph_bundles(ctx, params))
    bundle = GradientBundle(tensors=tensors)
    if "features" in wrt or "adjacency" in wrt:
        want_adj = "adjacency" in wrt
        xbar, abar = graph_input_grads(ctx, params, want_adjacency=want_adj)
        bundle.d_features = xbar[0]
        if want_adj:
            bundle.d_adj_norm = abar[0]
            if graph is not None:
                bundle.d_adjacency = normalize_dense_backward(
                    abar[0], graph.adjacency, trace.mode)
    return bundle


def infer_label(bundle):
    """Read the training label off the signs of the final-layer weight gradient.

    Every row of that gradient is the (positive) activation vector scaled by
    softmax - onehot, so the true class's row is anti-aligned with every
    other row and is the only one with a negative entry sum. For K > 2 the
    pairwise products single out the class; with K = 2 both rows pass the
    product test and the row sums break the tie. Raises if the rule does not
    isolate exactly one class (e.g. an all-zero bundle).
    """
    tensors = bundle.tensors if isinstance(bundle, GradientBundle) else bundle
    w = tensors.get("mlp_weight", tensors.get("out_weight"))
    if w is None:
        raise ShapeError("bundle lacks a final-layer weight gradient")
    dots = w @ w.T
    k = w.shape[0]
    candidates = [
        i for i in range(k)
        if dots[i, i] > 0.0
        and all(dots[i, j] <= 0.0 for j in range(k) if j != i)
    ]
    if len(candidates) > 1:
        candidates = [i for i in candidates if w[i].sum() < 0.0]
    if len(candidates) != 1:
        raise AmbiguousLabelError(
            f"sign rule matched {len(candidates)} classes instead of 1"
        )
    return candidates[0]
