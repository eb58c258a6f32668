"""Training orchestration: dataset through the three stages to a joint model.

Stage 1 fits the hashing network on the dh_train subjects (a fixed
per-subject sample subset, so later probes stay unseen).  Stage 2 decodes
the nnd_train subjects' intermediate codes into ground-truth codewords.
Stage 3 trains the decoder on those pairs, then fine-tunes decoder and
hashing layers jointly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bch, nnd as nnd_mod
from .config import RunConfig
from .evalharness import GroundTruth, stage2_ground_truth
from .hashnet import HashNetModel, train_stage1
from .joint import JointModel, integrate
from .nnd import NndModel, llr_from_soft, train as train_nnd
from .synth import (SubjectSplits, SyntheticDataset, SyntheticDatasetSpec,
                    augment, generate)


@dataclass
class TrainedSystem:
    code: bch.BchCode
    dh_stage1: HashNetModel         # frozen stage-1 snapshot
    ground_truth: dict[str, GroundTruth]
    nnd_stage3: NndModel            # decoder after its own training, pre-joint
    joint: JointModel               # jointly fine-tuned copies
    stage1_history: list[float]
    nnd_history: list[float]
    joint_history: list[float]


def build_dataset(cfg: RunConfig) -> tuple[SyntheticDataset, SubjectSplits]:
    return generate(cfg.dataset)


def stage1_training_set(cfg: RunConfig, dataset: SyntheticDataset,
                        splits: SubjectSplits):
    """(X, one-hot Y, class order) for the hashing-network stage."""
    reserve = cfg.training.train_samples_per_subject
    classes = list(splits.dh_train)
    rows, labels = [], []
    for ci, sid in enumerate(classes):
        for row in dataset.samples[sid][:reserve]:
            rows.append(row)
            labels.append(ci)
    x = np.stack(rows)
    y = np.zeros((len(labels), len(classes)))
    y[np.arange(len(labels)), labels] = 1.0
    return x, y, classes


def train_stage1_model(cfg: RunConfig, dataset: SyntheticDataset,
                       splits: SubjectSplits, code: bch.BchCode):
    x, y, classes = stage1_training_set(cfg, dataset, splits)
    model = HashNetModel(
        d_in=dataset.spec.d_in,
        d=cfg.hashnet_width_for(code.n),
        K=code.n,
        M=len(classes),
        seed=cfg.hashnet_seed,
    )
    model, history = train_stage1(model, x, y, cfg.loss_weights,
                                  cfg.training.stage1)
    return model, history


def nnd_training_pairs(dataset: SyntheticDataset, splits: SubjectSplits,
                       dh: HashNetModel, ground_truth: dict[str, GroundTruth],
                       augment_cfg=None):
    """(raw features, hash activations, target codewords) for stages 2-3.

    With an AugmentConfig the rows expand to every augmented view of every
    sample (same target), which teaches the decoder to contract the
    probe-time perturbations.
    """
    rows, targets = [], []
    for sid in splits.nnd_train:
        cw = ground_truth[sid].codeword
        for row in dataset.samples[sid]:
            if augment_cfg is None:
                rows.append(row)
                targets.append(cw)
            else:
                views = augment(row, augment_cfg)
                rows.extend(views)
                targets.extend([cw] * views.shape[0])
    x = np.stack(rows)
    return x, dh.hash_activations(x), np.stack(targets).astype(float)


def channel_pretrain_data(code: bch.BchCode, count: int, flip_prob: float,
                          seed: int):
    """Synthetic channel realizations: random codewords observed through a
    bit-flip channel with soft confidences."""
    rng = np.random.default_rng(seed)
    messages = rng.integers(0, 2, size=(count, code.k))
    words = np.stack([bch.encode(code, m) for m in messages]).astype(float)
    flips = rng.random(words.shape) < flip_prob
    observed = np.where(flips, 1.0 - words, words)
    soft = np.clip(observed + 0.1 * rng.standard_normal(words.shape), 0.02, 0.98)
    return soft, words


def train_system(cfg: RunConfig, dataset: SyntheticDataset,
                 splits: SubjectSplits, *,
                 channel_pretrain: int = 0) -> TrainedSystem:
    """Run stages 1-3 end to end and return every artifact."""
    code = bch.construct(*cfg.code)
    dh, s1_hist = train_stage1_model(cfg, dataset, splits, code)

    gt = stage2_ground_truth(dh, code,
                             {sid: dataset.samples[sid]
                              for sid in splits.nnd_train})

    decoder = NndModel.from_code(code, cfg.nnd.iterations, cfg.nnd.llr_clamp)
    if channel_pretrain > 0:
        soft, words = channel_pretrain_data(code, channel_pretrain, 0.02,
                                            cfg.training.nnd.seed + 1)
        train_nnd(decoder, soft, words, cfg.training.nnd)
    pair_augment = cfg.augment if cfg.training.pair_augment else None
    x_nnd, hash_acts, targets = nnd_training_pairs(dataset, splits, dh, gt,
                                                   pair_augment)
    decoder, nnd_hist = train_nnd(decoder, hash_acts, targets, cfg.training.nnd)

    joint = integrate(dh.copy(), decoder.copy(), cfg.nnd.input_mode)
    joint, joint_hist = joint.train(x_nnd, targets, cfg.training.joint)

    return TrainedSystem(code=code, dh_stage1=dh, ground_truth=gt,
                         nnd_stage3=decoder, joint=joint,
                         stage1_history=s1_hist, nnd_history=nnd_hist,
                         joint_history=joint_hist)


def hash_soft_inputs(dh: HashNetModel, x: np.ndarray, clamp: float) -> np.ndarray:
    """Hashing activations as clamped LLRs (decoder-side view of the data)."""
    return llr_from_soft(dh.hash_activations(x), clamp)
