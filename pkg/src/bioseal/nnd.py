"""Trainable belief-propagation decoding on a Tanner graph.

The decoder unrolls T sum-product iterations.  Check-to-variable messages
get a per-iteration, per-edge weight inside the variable update and a
second weight set in the final marginalization; check updates themselves
are unweighted.  With every weight at 1 the forward pass reduces exactly
to standard sum-product BP.

Sign convention: LLR = ln(P(bit=0) / P(bit=1)), so positive favors 0.
Outputs estimate P(bit=1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import bch

ATANH_EPS = 1e-12   # product clamp inside check updates
LOG_EPS = 1e-12     # output clamp before logs in the BCE loss
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TannerGraph:
    """Bipartite code graph; one edge per nonzero parity-check entry.

    Edges are numbered in row-major scan order of the parity-check matrix,
    i.e. grouped by check, which is also the serialization order for
    weight arrays.
    """

    n: int
    r: int
    edge_var: np.ndarray     # (E,) variable index of each edge
    edge_check: np.ndarray   # (E,) check index of each edge
    check_ptr: np.ndarray    # (r+1,) edge-range bounds per check
    pad_slot: np.ndarray     # (E,) slot of each edge inside its check row
    max_degree: int
    var_scatter: np.ndarray  # (E, n) one-hot: sums edge values per variable

    @classmethod
    def from_parity_check(cls, h: np.ndarray) -> "TannerGraph":
        h = np.asarray(h)
        if h.ndim != 2:
            raise ValueError("parity-check matrix must be 2-D")
        r, n = h.shape
        edge_check, edge_var = np.nonzero(h)
        num_edges = edge_var.size
        if num_edges == 0:
            raise ValueError("parity-check matrix has no nonzero entries")
        check_ptr = np.searchsorted(edge_check, np.arange(r + 1))
        pad_slot = np.arange(num_edges) - check_ptr[edge_check]
        scatter = np.zeros((num_edges, n))
        scatter[np.arange(num_edges), edge_var] = 1.0
        return cls(n=n, r=r, edge_var=edge_var, edge_check=edge_check,
                   check_ptr=check_ptr, pad_slot=pad_slot,
                   max_degree=int(np.diff(check_ptr).max()),
                   var_scatter=scatter)

    @property
    def num_edges(self) -> int:
        return int(self.edge_var.size)

    def pad(self, x: np.ndarray, fill: float) -> np.ndarray:
        """(B, E) edge array -> (B, r, max_degree) check-row layout."""
        out = np.full((x.shape[0], self.r, self.max_degree), fill)
        out[:, self.edge_check, self.pad_slot] = x
        return out

    def unpad(self, xp: np.ndarray) -> np.ndarray:
        return xp[:, self.edge_check, self.pad_slot]


def build_tanner(code: bch.BchCode) -> TannerGraph:
    return TannerGraph.from_parity_check(code.parity_check)


def llr_from_soft(activations: np.ndarray, clamp: float) -> np.ndarray:
    """Map P(bit=1) activations in [0, 1] to clamped LLRs (0.5 -> 0)."""
    p = np.asarray(activations, dtype=float)
    with np.errstate(divide="ignore"):
        llr = np.log((1.0 - p) / p)
    return np.clip(llr, -clamp, clamp)


def llr_from_hard(bits: np.ndarray, clamp: float) -> np.ndarray:
    """Map hard bits to saturated LLRs: 0 -> +clamp, 1 -> -clamp."""
    b = np.asarray(bits, dtype=float)
    return (1.0 - 2.0 * b) * clamp


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def bce_loss(outputs: np.ndarray, target: np.ndarray) -> float:
    """Mean binary cross-entropy per bit (batches average over samples)."""
    o = np.clip(np.asarray(outputs, dtype=float), LOG_EPS, 1.0 - LOG_EPS)
    y = np.asarray(target, dtype=float)
    per_bit = y * np.log(o) + (1.0 - y) * np.log(1.0 - o)
    return float(-np.mean(per_bit))


def bce_grad(outputs: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Gradient of bce_loss w.r.t. the raw outputs."""
    o = np.clip(np.asarray(outputs, dtype=float), LOG_EPS, 1.0 - LOG_EPS)
    y = np.asarray(target, dtype=float)
    return (o - y) / (o * (1.0 - o) * o.size)


@dataclass
class NndTrainConfig:
    learning_rate: float = 0.01
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0


class NndModel:
    """Unrolled weighted sum-product decoder over a Tanner graph."""

    def __init__(self, graph: TannerGraph, iterations: int = 5,
                 llr_clamp: float = 15.0):
        if iterations < 1:
            raise ValueError("iterations must be >= 1")
        if llr_clamp <= 0:
            raise ValueError("llr_clamp must be positive")
        self.graph = graph
        self.iterations = iterations
        self.llr_clamp = llr_clamp
        self.edge_weights = np.ones((iterations, graph.num_edges))
        self.output_weights = np.ones(graph.num_edges)
        self.code_params: tuple[int, int] | None = None

    @classmethod
    def from_code(cls, code: bch.BchCode, iterations: int = 5,
                  llr_clamp: float = 15.0) -> "NndModel":
        model = cls(build_tanner(code), iterations, llr_clamp)
        model.code_params = (code.m, code.t)
        return model

    def copy(self) -> "NndModel":
        dup = NndModel(self.graph, self.iterations, self.llr_clamp)
        dup.edge_weights = self.edge_weights.copy()
        dup.output_weights = self.output_weights.copy()
        dup.code_params = self.code_params
        return dup

    # -- forward ------------------------------------------------------------

    def forward(self, llr: np.ndarray, keep_cache: bool = False):
        """Decode LLRs to per-bit P(bit=1) estimates in (0, 1).

        Accepts a single (n,) vector or a (B, n) batch.  With
        keep_cache=True also returns the intermediates needed by
        backward().
        """
        llr = np.asarray(llr, dtype=float)
        single = llr.ndim == 1
        l2 = np.atleast_2d(llr)
        if l2.shape[1] != self.graph.n:
            raise ValueError(f"llr length {l2.shape[1]} != n = {self.graph.n}")
        out, cache = self._forward(l2, keep_cache)
        if single:
            out = out[0]
        return (out, cache) if keep_cache else out

    def _forward(self, llr: np.ndarray, keep_cache: bool):
        g = self.graph
        l = np.clip(llr, -self.llr_clamp, self.llr_clamp)
        l_edges = l[:, g.edge_var]
        cv = np.zeros((l.shape[0], g.num_edges))
        steps = []
        for t in range(self.iterations):
            w = self.edge_weights[t]
            u = cv * w
            node_sum = u @ g.var_scatter
            vc = l_edges + node_sum[:, g.edge_var] - u
            th = np.tanh(0.5 * vc)
            thp = g.pad(th, 1.0)
            pre = np.ones_like(thp)
            pre[..., 1:] = np.cumprod(thp[..., :-1], axis=-1)
            suf = np.ones_like(thp)
            suf[..., :-1] = np.cumprod(thp[..., :0:-1], axis=-1)[..., ::-1]
            loo = g.unpad(pre * suf)
            loo_c = np.clip(loo, -1.0 + ATANH_EPS, 1.0 - ATANH_EPS)
            new_cv = 2.0 * np.arctanh(loo_c)
            if keep_cache:
                steps.append((cv, th, thp, pre, suf, loo))
            cv = new_cv
        total = l + (cv * self.output_weights) @ g.var_scatter
        # sigmoid saturates to exactly 0/1 in float64 beyond |total| ~ 37;
        # keep the contract that outputs stay strictly inside (0, 1)
        out = np.clip(_sigmoid(-total), LOG_EPS, 1.0 - LOG_EPS)
        cache = {"llr": l, "steps": steps, "cv_final": cv, "out": out} \
            if keep_cache else None
        return out, cache

    # -- backward -----------------------------------------------------------

    def backward(self, cache: dict, d_out: np.ndarray):
        """Exact reverse-mode gradients from d(loss)/d(outputs).

        Returns (d_edge_weights, d_output_weights, d_llr); clamp
        boundaries (LLR clip, atanh product clip) propagate zero gradient.
        """
        g = self.graph
        d_out = np.atleast_2d(np.asarray(d_out, dtype=float))
        out = cache["out"]
        cv_final = cache["cv_final"]

        d_total = -d_out * out * (1.0 - out)
        d_llr = d_total.copy()
        d_wc = d_total[:, g.edge_var]
        d_output_w = np.sum(d_wc * cv_final, axis=0)
        d_cv = d_wc * self.output_weights

        d_edge_w = np.zeros_like(self.edge_weights)
        for t in range(self.iterations - 1, -1, -1):
            cv_in, th, thp, pre, suf, loo = cache["steps"][t]
            interior = (loo > -1.0 + ATANH_EPS) & (loo < 1.0 - ATANH_EPS)
            loo_c = np.clip(loo, -1.0 + ATANH_EPS, 1.0 - ATANH_EPS)
            d_loo = np.where(interior, d_cv * 2.0 / (1.0 - loo_c * loo_c), 0.0)
            d_loo_p = g.pad(d_loo, 0.0)
            d_pre = d_loo_p * suf
            d_suf = d_loo_p * pre
            d_thp = np.zeros_like(thp)
            for i in range(g.max_degree - 1, 0, -1):   # pre[i] = pre[i-1]*th[i-1]
                d_thp[..., i - 1] += d_pre[..., i] * pre[..., i - 1]
                d_pre[..., i - 1] += d_pre[..., i] * thp[..., i - 1]
            for i in range(g.max_degree - 1):          # suf[i] = suf[i+1]*th[i+1]
                d_thp[..., i + 1] += d_suf[..., i] * suf[..., i + 1]
                d_suf[..., i + 1] += d_suf[..., i] * thp[..., i + 1]
            d_th = g.unpad(d_thp)
            d_vc = d_th * 0.5 * (1.0 - th * th)

            d_node = d_vc @ g.var_scatter
            d_llr += d_node
            d_u = d_node[:, g.edge_var] - d_vc
            d_edge_w[t] = np.sum(d_u * cv_in, axis=0)
            d_cv = d_u * self.edge_weights[t]

        return d_edge_w, d_output_w, d_llr

    def gradients(self, llr: np.ndarray, target: np.ndarray):
        """BCE-loss gradients for one vector or a batch; returns
        (loss, d_edge_weights, d_output_weights, d_llr)."""
        llr = np.atleast_2d(np.asarray(llr, dtype=float))
        target = np.atleast_2d(np.asarray(target, dtype=float))
        out, cache = self.forward(llr, keep_cache=True)
        loss = bce_loss(out, target)
        d_ew, d_ow, d_llr = self.backward(cache, bce_grad(out, target))
        return loss, d_ew, d_ow, d_llr

    # -- persistence ---------------------------------------------------------

    def to_json_dict(self) -> dict:
        if self.code_params is None:
            raise ValueError("only models built from a BCH code can be serialized")
        return {
            "format_version": FORMAT_VERSION,
            "kind": "nnd",
            "code": {"m": self.code_params[0], "t": self.code_params[1]},
            "iterations": self.iterations,
            "llr_clamp": self.llr_clamp,
            "edge_weights": self.edge_weights.tolist(),
            "output_weights": self.output_weights.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "NndModel":
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported format_version {doc.get('format_version')}")
        code = bch.construct(doc["code"]["m"], doc["code"]["t"])
        model = cls.from_code(code, doc["iterations"], doc["llr_clamp"])
        ew = np.asarray(doc["edge_weights"], dtype=float)
        ow = np.asarray(doc["output_weights"], dtype=float)
        if ew.shape != model.edge_weights.shape or ow.shape != model.output_weights.shape:
            raise ValueError("weight arrays do not match the code's edge layout")
        model.edge_weights = ew
        model.output_weights = ow
        return model

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "NndModel":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def train(model: NndModel, soft_inputs: np.ndarray, targets: np.ndarray,
          config: NndTrainConfig):
    """Mini-batch gradient descent on the BCE loss.

    soft_inputs holds per-bit P(bit=1) activations; targets hold the
    ground-truth codewords.  Returns (model, per-epoch loss history);
    the model is updated in place.
    """
    soft_inputs = np.atleast_2d(np.asarray(soft_inputs, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if soft_inputs.shape[0] == 0:
        raise ValueError("training dataset is empty")
    if soft_inputs.shape != (targets.shape[0], model.graph.n):
        raise ValueError("inputs and targets must be (N, n) with matching N")

    llr_all = llr_from_soft(soft_inputs, model.llr_clamp)
    rng = np.random.default_rng(config.seed)
    history = []
    for _ in range(config.epochs):
        order = rng.permutation(llr_all.shape[0])
        batch_losses = []
        for start in range(0, order.size, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, d_ew, d_ow, _ = model.gradients(llr_all[idx], targets[idx])
            model.edge_weights -= config.learning_rate * d_ew
            model.output_weights -= config.learning_rate * d_ow
            batch_losses.append(loss)
        history.append(float(np.mean(batch_losses)))
    return model, history


def decode_hard(model: NndModel, soft_vector: np.ndarray,
                project_code: bch.BchCode | None = None) -> np.ndarray:
    """Final binary code: forward pass thresholded at 0.5 (ties -> 0).

    With project_code set, a hard-decision decode pass snaps the result to
    the nearest reachable codeword when one exists (off by default; the
    matching protocol does not require valid codewords).
    """
    out = model.forward(llr_from_soft(soft_vector, model.llr_clamp))
    bits = (out > 0.5).astype(np.uint8)
    if project_code is not None:
        res = bch.decode(project_code, bits)
        if res.success:
            return res.codeword
    return bits
