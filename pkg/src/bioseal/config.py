"""Run configuration: one JSON document drives every stage.

All randomness flows from the named seeds in here, so a config replays
into byte-identical artifacts.  Flags can override individual keys via
dotted paths (see apply_overrides).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import bch
from .hashnet import LossWeights, Stage1Config
from .joint import JointTrainConfig
from .nnd import NndTrainConfig
from .synth import AugmentConfig, SyntheticDatasetSpec

FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class NndArchConfig:
    iterations: int = 5
    llr_clamp: float = 15.0
    input_mode: str = "soft"


@dataclass
class TrainingConfig:
    stage1: Stage1Config = field(default_factory=Stage1Config)
    nnd: NndTrainConfig = field(default_factory=NndTrainConfig)
    joint: JointTrainConfig = field(default_factory=JointTrainConfig)
    train_samples_per_subject: int = 5   # per-subject stage-1 subset; the rest probe
    pair_augment: bool = True            # stages 2-3 train on augmented views


@dataclass
class EvalSettings:
    far_targets: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    multi_shot_count: int = 5
    threshold: float = 0.5
    mode: str = "multi-shot"


@dataclass
class AttackSettings:
    subjects: int = 10
    seed: int = 9000


@dataclass
class PathsConfig:
    model_dir: str = "runs/models"
    template_store: str = "runs/templates.jsonl"
    report_dir: str = "runs/reports"


@dataclass
class RunConfig:
    code: tuple[int, int] = bch.PRESETS["bch63_45"]   # (m, t)
    hashnet_width: int | None = None                  # None -> sized from K
    hashnet_seed: int = 7001
    loss_weights: LossWeights = field(default_factory=LossWeights)
    nnd: NndArchConfig = field(default_factory=NndArchConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    dataset: SyntheticDatasetSpec = field(default_factory=SyntheticDatasetSpec)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    eval: EvalSettings = field(default_factory=EvalSettings)
    attack: AttackSettings = field(default_factory=AttackSettings)
    paths: PathsConfig = field(default_factory=PathsConfig)
    timestamp: str | None = None   # pinned created_at for replayable stores

    def hashnet_width_for(self, code_length: int) -> int:
        if self.hashnet_width is not None:
            return self.hashnet_width
        return default_width(code_length)

    def artifact(self, name: str) -> Path:
        return Path(self.paths.model_dir) / name


def default_width(code_length: int) -> int:
    """fc1 sizing: 512 for K=255, 2048 for K=1023, else ~2K rounded up to
    a power of two (128 for the desk-scale K=63)."""
    fixed = {255: 512, 1023: 2048}
    if code_length in fixed:
        return fixed[code_length]
    width = 32
    while width < 2 * code_length:
        width *= 2
    return width


def default_config() -> RunConfig:
    return RunConfig()


_SECTION_KEYS = {
    "code", "hashnet", "nnd", "training", "dataset", "augment",
    "eval", "attack", "paths", "timestamp", "format_version",
}


def _build(cls, doc: dict, context: str):
    fields = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore
    unknown = set(doc) - fields
    if unknown:
        raise ConfigError(f"unknown keys in {context}: {sorted(unknown)}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {context} section: {exc}") from exc


def config_from_dict(doc: dict) -> RunConfig:
    unknown = set(doc) - _SECTION_KEYS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    cfg = RunConfig()

    code_doc = doc.get("code", {})
    if isinstance(code_doc, str):
        code_doc = {"preset": code_doc}
    if "preset" in code_doc:
        preset = code_doc["preset"]
        if preset not in bch.PRESETS:
            raise ConfigError(f"unknown code preset {preset!r}; "
                              f"choose from {sorted(bch.PRESETS)}")
        cfg.code = bch.PRESETS[preset]
        extra = set(code_doc) - {"preset"}
    else:
        if not {"m", "t"} <= set(code_doc):
            raise ConfigError("code section needs a preset or both m and t")
        cfg.code = (int(code_doc["m"]), int(code_doc["t"]))
        extra = set(code_doc) - {"m", "t"}
    if extra:
        raise ConfigError(f"unknown keys in code: {sorted(extra)}")

    hn = dict(doc.get("hashnet", {}))
    lw_doc = hn.pop("loss_weights", {})
    cfg.loss_weights = _build(LossWeights, lw_doc, "hashnet.loss_weights").validate()
    cfg.hashnet_width = hn.pop("d", None)
    cfg.hashnet_seed = hn.pop("seed", cfg.hashnet_seed)
    if hn:
        raise ConfigError(f"unknown keys in hashnet: {sorted(hn)}")

    cfg.nnd = _build(NndArchConfig, doc.get("nnd", {}), "nnd")
    if cfg.nnd.input_mode not in ("soft", "hard"):
        raise ConfigError(f"nnd.input_mode must be soft or hard, "
                          f"got {cfg.nnd.input_mode!r}")

    tr = dict(doc.get("training", {}))
    cfg.training = TrainingConfig(
        stage1=_build(Stage1Config, tr.pop("stage1", {}), "training.stage1"),
        nnd=_build(NndTrainConfig, tr.pop("nnd", {}), "training.nnd"),
        joint=_build(JointTrainConfig, tr.pop("joint", {}), "training.joint"),
        train_samples_per_subject=tr.pop("train_samples_per_subject", 5),
        pair_augment=tr.pop("pair_augment", True),
    )
    if tr:
        raise ConfigError(f"unknown keys in training: {sorted(tr)}")

    cfg.dataset = _build(SyntheticDatasetSpec, doc.get("dataset", {}), "dataset")
    aug_doc = dict(doc.get("augment", {}))
    if "scales" in aug_doc:
        aug_doc["scales"] = tuple(aug_doc["scales"])
    cfg.augment = _build(AugmentConfig, aug_doc, "augment")
    ev_doc = dict(doc.get("eval", {}))
    if "far_targets" in ev_doc:
        ev_doc["far_targets"] = tuple(ev_doc["far_targets"])
    cfg.eval = _build(EvalSettings, ev_doc, "eval")
    if cfg.eval.mode not in ("zero-shot", "one-shot", "multi-shot"):
        raise ConfigError(f"eval.mode must be zero-shot, one-shot or multi-shot, "
                          f"got {cfg.eval.mode!r}")
    cfg.attack = _build(AttackSettings, doc.get("attack", {}), "attack")
    cfg.paths = _build(PathsConfig, doc.get("paths", {}), "paths")
    cfg.timestamp = doc.get("timestamp")
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    lw = cfg.loss_weights
    return {
        "format_version": FORMAT_VERSION,
        "code": {"m": cfg.code[0], "t": cfg.code[1]},
        "hashnet": {
            "d": cfg.hashnet_width,
            "seed": cfg.hashnet_seed,
            "loss_weights": {"alpha": lw.alpha, "beta": lw.beta,
                             "gamma": lw.gamma, "lam": lw.lam},
        },
        "nnd": {"iterations": cfg.nnd.iterations, "llr_clamp": cfg.nnd.llr_clamp,
                "input_mode": cfg.nnd.input_mode},
        "training": {
            "stage1": vars(cfg.training.stage1),
            "nnd": vars(cfg.training.nnd),
            "joint": vars(cfg.training.joint),
            "train_samples_per_subject": cfg.training.train_samples_per_subject,
            "pair_augment": cfg.training.pair_augment,
        },
        "dataset": vars(cfg.dataset),
        "augment": {"m": cfg.augment.m, "n": cfg.augment.n,
                    "scales": list(cfg.augment.scales),
                    "flip": cfg.augment.flip, "sigma": cfg.augment.sigma,
                    "distortion_rank": cfg.augment.distortion_rank},
        "eval": {"far_targets": list(cfg.eval.far_targets),
                 "multi_shot_count": cfg.eval.multi_shot_count,
                 "threshold": cfg.eval.threshold, "mode": cfg.eval.mode},
        "attack": vars(cfg.attack),
        "paths": vars(cfg.paths),
        "timestamp": cfg.timestamp,
    }


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(doc)


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply --set a.b.c=value pairs onto a raw config dict.

    Values parse as JSON when possible, else as bare strings.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = value
    return doc
