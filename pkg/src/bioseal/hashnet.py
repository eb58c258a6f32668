"""Feed-forward hashing network: rectifier layer, sigmoid hashing layer,
softmax head.

Training minimizes alpha*E1 + beta*E2 + gamma*E3 with momentum SGD:
E1 is softmax cross-entropy plus L2 on the weight matrices, E2 rewards
activations far from 0.5 (quantization), E3 keeps each sample's mean
activation near 0.5 (bit balance).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

LOG_EPS = 1e-12
FORMAT_VERSION = 1


@dataclass
class LossWeights:
    alpha: float = 1.0
    beta: float = 0.25
    gamma: float = 0.25
    lam: float = 1e-4   # L2 strength inside E1

    def validate(self) -> "LossWeights":
        vals = (self.alpha, self.beta, self.gamma, self.lam)
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise ValueError(f"loss weights must be finite and >= 0, got {vals}")
        return self


@dataclass
class Stage1Config:
    learning_rate: float = 0.05
    momentum: float = 0.9
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0


class ForwardOut(NamedTuple):
    fc1: np.ndarray    # rectifier activations
    hash: np.ndarray   # sigmoid activations in (0, 1)
    probs: np.ndarray  # softmax probabilities


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


class HashNetModel:
    """input -> rectifier(d) -> sigmoid hashing layer(K) -> softmax(M)."""

    def __init__(self, d_in: int, d: int, K: int, M: int, seed: int = 0):
        if min(d_in, d, K, M) < 1:
            raise ValueError("all layer sizes must be positive")
        self.d_in, self.d, self.K, self.M = d_in, d, K, M
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.W1 = _glorot(rng, d_in, d)
        self.b1 = np.zeros(d)
        self.Wh = _glorot(rng, d, K)
        self.bh = np.zeros(K)
        self.Wo = _glorot(rng, K, M)
        self.bo = np.zeros(M)

    def copy(self) -> "HashNetModel":
        dup = HashNetModel.__new__(HashNetModel)
        dup.d_in, dup.d, dup.K, dup.M = self.d_in, self.d, self.K, self.M
        dup.seed = self.seed
        for name in ("W1", "b1", "Wh", "bh", "Wo", "bo"):
            setattr(dup, name, getattr(self, name).copy())
        return dup

    def weight_matrices(self) -> tuple[np.ndarray, ...]:
        """The matrices covered by the L2 term (biases excluded)."""
        return (self.W1, self.Wh, self.Wo)

    # -- forward ------------------------------------------------------------

    def forward(self, x: np.ndarray) -> ForwardOut:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        cache = self._forward_cached(np.atleast_2d(x))
        zo = cache["v"] @ self.Wo + self.bo
        probs = _softmax(zo)
        fc1, v = cache["a1"], cache["v"]
        if single:
            return ForwardOut(fc1[0], v[0], probs[0])
        return ForwardOut(fc1, v, probs)

    def _forward_cached(self, x: np.ndarray) -> dict:
        if x.shape[1] != self.d_in:
            raise ValueError(f"input dimension {x.shape[1]} != d_in = {self.d_in}")
        z1 = x @ self.W1 + self.b1
        a1 = np.maximum(z1, 0.0)
        zh = a1 @ self.Wh + self.bh
        v = _sigmoid(zh)
        return {"x": x, "z1": z1, "a1": a1, "v": v}

    def hash_activations(self, x: np.ndarray) -> np.ndarray:
        """Hashing-layer activations only (softmax head skipped)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        v = self._forward_cached(np.atleast_2d(x))["v"]
        return v[0] if single else v

    def backward_from_hash(self, cache: dict, d_v: np.ndarray) -> dict:
        """Gradients of the layers below the hashing layer, given d loss/d v."""
        d_zh = d_v * cache["v"] * (1.0 - cache["v"])
        grads = {
            "Wh": cache["a1"].T @ d_zh,
            "bh": d_zh.sum(axis=0),
        }
        d_a1 = d_zh @ self.Wh.T
        d_z1 = d_a1 * (cache["z1"] > 0)
        grads["W1"] = cache["x"].T @ d_z1
        grads["b1"] = d_z1.sum(axis=0)
        return grads

    # -- persistence ----------------------------------------------------------

    def to_json_dict(self, loss_weights: LossWeights | None = None) -> dict:
        lw = loss_weights or LossWeights()
        return {
            "format_version": FORMAT_VERSION,
            "kind": "hashnet",
            "dims": {"d_in": self.d_in, "d": self.d, "K": self.K, "M": self.M},
            "seed": self.seed,
            "loss_weights": {"alpha": lw.alpha, "beta": lw.beta,
                             "gamma": lw.gamma, "lam": lw.lam},
            "W1": self.W1.tolist(), "b1": self.b1.tolist(),
            "Wh": self.Wh.tolist(), "bh": self.bh.tolist(),
            "Wo": self.Wo.tolist(), "bo": self.bo.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "HashNetModel":
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported format_version {doc.get('format_version')}")
        dims = doc["dims"]
        model = cls(dims["d_in"], dims["d"], dims["K"], dims["M"], doc.get("seed", 0))
        for name in ("W1", "b1", "Wh", "bh", "Wo", "bo"):
            arr = np.asarray(doc[name], dtype=float)
            if arr.shape != getattr(model, name).shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected "
                                 f"{getattr(model, name).shape}")
            setattr(model, name, arr)
        return model

    def save(self, path, loss_weights: LossWeights | None = None) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(loss_weights), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "HashNetModel":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


# -- losses ------------------------------------------------------------------

def classification_loss(probs: np.ndarray, labels: np.ndarray, lam: float = 0.0,
                        weight_matrices: tuple = ()) -> float:
    """Mean cross-entropy over the batch plus lam * sum ||W||^2."""
    p = np.clip(np.atleast_2d(probs), LOG_EPS, None)
    y = np.atleast_2d(labels)
    ce = -np.sum(y * np.log(p)) / p.shape[0]
    reg = sum(float(np.sum(w * w)) for w in weight_matrices)
    return float(ce + lam * reg)


def quantization_loss(hash_batch: np.ndarray) -> float:
    """E2 = -(1/K) * sum_i ||v_i - 0.5||^2; in [-N/4, 0], 0 is worst."""
    v = np.atleast_2d(hash_batch)
    return float(-np.sum((v - 0.5) ** 2) / v.shape[1])


def bit_balance_loss(hash_batch: np.ndarray) -> float:
    """E3 = sum_i (mean(v_i) - 0.5)^2; zero when every code is half ones."""
    v = np.atleast_2d(hash_batch)
    return float(np.sum((v.mean(axis=1) - 0.5) ** 2))


def total_loss(probs: np.ndarray, hash_batch: np.ndarray, labels: np.ndarray,
               lw: LossWeights, weight_matrices: tuple = ()) -> float:
    """alpha*E1 + beta*E2 + gamma*E3 — the scalar stage-1 SGD minimizes."""
    e1 = classification_loss(probs, labels, lw.lam, weight_matrices)
    return (lw.alpha * e1 + lw.beta * quantization_loss(hash_batch)
            + lw.gamma * bit_balance_loss(hash_batch))


def binarize(hash_activations: np.ndarray) -> np.ndarray:
    """Threshold at 0.5; exact 0.5 resolves to 0."""
    return (np.asarray(hash_activations) > 0.5).astype(np.uint8)


# -- training ------------------------------------------------------------------

def stage1_loss(model: HashNetModel, x: np.ndarray, y: np.ndarray,
                lw: LossWeights) -> float:
    out = model.forward(x)
    return total_loss(out.probs, out.hash, y, lw, model.weight_matrices())


def gradients_stage1(model: HashNetModel, x: np.ndarray, y: np.ndarray,
                     lw: LossWeights):
    """Exact reverse-mode gradients of the total stage-1 loss.

    Returns (loss, grads) with grads keyed like the parameter attributes.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    cache = model._forward_cached(x)
    v = cache["v"]
    zo = v @ model.Wo + model.bo
    probs = _softmax(zo)
    batch = x.shape[0]

    loss = total_loss(probs, v, y, lw, model.weight_matrices())

    d_zo = lw.alpha * (probs - y) / batch
    d_v = d_zo @ model.Wo.T
    d_v += lw.beta * (-2.0 / model.K) * (v - 0.5)
    d_v += lw.gamma * (2.0 / model.K) * (v.mean(axis=1, keepdims=True) - 0.5)

    grads = model.backward_from_hash(cache, d_v)
    grads["Wo"] = v.T @ d_zo
    grads["bo"] = d_zo.sum(axis=0)
    reg = 2.0 * lw.alpha * lw.lam
    grads["W1"] += reg * model.W1
    grads["Wh"] += reg * model.Wh
    grads["Wo"] += reg * model.Wo
    return loss, grads


def train_stage1(model: HashNetModel, x: np.ndarray, y: np.ndarray,
                 lw: LossWeights, config: Stage1Config):
    """Classical momentum SGD on the total loss; deterministic per seed.

    Returns (model, per-epoch loss history); the model is updated in place.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] == 0:
        raise ValueError("training dataset is empty")
    if x.shape[0] != y.shape[0]:
        raise ValueError("inputs and labels must have matching length")
    lw.validate()

    rng = np.random.default_rng(config.seed)
    velocity = {name: np.zeros_like(getattr(model, name))
                for name in ("W1", "b1", "Wh", "bh", "Wo", "bo")}
    history = []
    for _ in range(config.epochs):
        order = rng.permutation(x.shape[0])
        batch_losses = []
        for start in range(0, order.size, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = gradients_stage1(model, x[idx], y[idx], lw)
            for name, g in grads.items():
                velocity[name] = config.momentum * velocity[name] \
                    - config.learning_rate * g
                setattr(model, name, getattr(model, name) + velocity[name])
            batch_losses.append(loss)
        history.append(float(np.mean(batch_losses)))
    return model, history
