"""End-to-end model: hashing network feeding the trainable BP decoder.

The softmax head of the hashing network plays no role here; hashing
activations are mapped to LLRs and decoded.  Joint fine-tuning minimizes
binary cross-entropy against ground-truth codewords with gradients
flowing through the LLR mapping into both weight sets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .hashnet import HashNetModel
from .nnd import NndModel, bce_grad, bce_loss, llr_from_hard, llr_from_soft

FORMAT_VERSION = 1
INPUT_MODES = ("soft", "hard")


@dataclass
class JointTrainConfig:
    learning_rate: float = 0.01
    epochs: int = 60
    batch_size: int = 32
    seed: int = 0


class JointModel:
    """Composite of a HashNetModel and an NndModel with matching width."""

    def __init__(self, dh: HashNetModel, nnd: NndModel, input_mode: str = "soft"):
        if dh.K != nnd.graph.n:
            raise ValueError(
                f"hashing width K={dh.K} does not match code length n={nnd.graph.n}"
            )
        if input_mode not in INPUT_MODES:
            raise ValueError(f"input_mode must be one of {INPUT_MODES}")
        self.dh = dh
        self.nnd = nnd
        self.input_mode = input_mode

    @property
    def codec_id(self) -> str:
        if self.nnd.code_params is not None:
            m, t = self.nnd.code_params
            code = f"bch-m{m}t{t}-n{self.nnd.graph.n}"
        else:
            code = f"n{self.nnd.graph.n}"
        return f"{code}:nnd-T{self.nnd.iterations}:{self.input_mode}"

    def copy(self) -> "JointModel":
        return JointModel(self.dh.copy(), self.nnd.copy(), self.input_mode)

    def _to_llr(self, hash_acts: np.ndarray) -> np.ndarray:
        if self.input_mode == "hard":
            return llr_from_hard(hash_acts > 0.5, self.nnd.llr_clamp)
        return llr_from_soft(hash_acts, self.nnd.llr_clamp)

    def forward(self, x: np.ndarray):
        """Returns (hash activations, llr, decoder outputs)."""
        h = self.dh.hash_activations(x)
        llr = self._to_llr(h)
        return h, llr, self.nnd.forward(llr)

    def final_code(self, x: np.ndarray) -> np.ndarray:
        """Final binary code for one sample: outputs thresholded at 0.5."""
        _, _, out = self.forward(x)
        return (out > 0.5).astype(np.uint8)

    def final_codes(self, x: np.ndarray, chunk: int = 2048) -> np.ndarray:
        """Batched final codes (B, n), computed in memory-bounded chunks."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        parts = []
        for start in range(0, x.shape[0], chunk):
            _, _, out = self.forward(x[start:start + chunk])
            parts.append((out > 0.5).astype(np.uint8))
        return np.concatenate(parts, axis=0)

    def gradients(self, x: np.ndarray, targets: np.ndarray):
        """BCE gradients through decoder, LLR mapping, and hashing layers."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        cache_h = self.dh._forward_cached(x)
        v = cache_h["v"]
        llr = self._to_llr(v)
        out, cache_n = self.nnd.forward(llr, keep_cache=True)
        loss = bce_loss(out, targets)
        d_ew, d_ow, d_llr = self.nnd.backward(cache_n, bce_grad(out, targets))
        if self.input_mode == "hard":
            d_v = np.zeros_like(v)   # thresholding blocks the gradient
        else:
            with np.errstate(divide="ignore"):
                raw = np.log((1.0 - v) / v)
            interior = np.abs(raw) < self.nnd.llr_clamp
            d_v = np.where(interior, -d_llr / (v * (1.0 - v)), 0.0)
        grads_h = self.dh.backward_from_hash(cache_h, d_v)
        return loss, d_ew, d_ow, grads_h

    def train(self, x: np.ndarray, targets: np.ndarray, config: JointTrainConfig):
        """Joint fine-tuning by mini-batch gradient descent on the BCE loss."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        if x.shape[0] == 0:
            raise ValueError("training dataset is empty")
        if x.shape[0] != targets.shape[0]:
            raise ValueError("inputs and targets must have matching length")
        rng = np.random.default_rng(config.seed)
        history = []
        for _ in range(config.epochs):
            order = rng.permutation(x.shape[0])
            batch_losses = []
            for start in range(0, order.size, config.batch_size):
                idx = order[start:start + config.batch_size]
                loss, d_ew, d_ow, grads_h = self.gradients(x[idx], targets[idx])
                self.nnd.edge_weights -= config.learning_rate * d_ew
                self.nnd.output_weights -= config.learning_rate * d_ow
                for name, g in grads_h.items():
                    setattr(self.dh, name,
                            getattr(self.dh, name) - config.learning_rate * g)
                batch_losses.append(loss)
            history.append(float(np.mean(batch_losses)))
        return self, history

    # -- persistence ----------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "joint",
            "input_mode": self.input_mode,
            "hashnet": self.dh.to_json_dict(),
            "nnd": self.nnd.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "JointModel":
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported format_version {doc.get('format_version')}")
        return cls(HashNetModel.from_json_dict(doc["hashnet"]),
                   NndModel.from_json_dict(doc["nnd"]),
                   doc["input_mode"])

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "JointModel":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def integrate(dh: HashNetModel, nnd: NndModel, input_mode: str = "soft") -> JointModel:
    """Connect a trained hashing network to a decoder (softmax head dropped)."""
    return JointModel(dh, nnd, input_mode)
