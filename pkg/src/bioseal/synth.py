"""Synthetic subject data and feature-space augmentation.

Subjects are Gaussian clouds around well-separated prototype vectors.
Augmentation mirrors the image pipeline's counting structure — flip and
scale variants, each cropped (m-n+1)^2 ways — but realizes every
(variant, crop) combination as a fixed, seeded perturbation operator so
the same view of two different samples shifts them coherently.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = 1


@dataclass(frozen=True)
class SyntheticDatasetSpec:
    subjects: int = 20
    samples_per_subject: int = 50
    d_in: int = 48
    intra_sigma: float = 0.025
    inter_min_dist: float = 1.2
    feature_scale: float = 0.35   # prototype coordinate scale
    seed: int = 97


@dataclass(frozen=True)
class SubjectSplits:
    dh_train: tuple[str, ...]
    nnd_train: tuple[str, ...]
    zero_shot: tuple[str, ...]

    def all_subjects(self) -> tuple[str, ...]:
        return self.dh_train + self.nnd_train + self.zero_shot


@dataclass
class SyntheticDataset:
    spec: SyntheticDatasetSpec
    subject_ids: list[str]
    prototypes: np.ndarray            # (S, d_in)
    samples: dict[str, np.ndarray]    # id -> (samples_per_subject, d_in)

    def to_json_dict(self, splits: SubjectSplits) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "dataset",
            "spec": {
                "subjects": self.spec.subjects,
                "samples_per_subject": self.spec.samples_per_subject,
                "d_in": self.spec.d_in,
                "intra_sigma": self.spec.intra_sigma,
                "inter_min_dist": self.spec.inter_min_dist,
                "feature_scale": self.spec.feature_scale,
                "seed": self.spec.seed,
            },
            "subject_ids": self.subject_ids,
            "prototypes": self.prototypes.tolist(),
            "samples": {sid: self.samples[sid].tolist() for sid in self.subject_ids},
            "splits": {
                "dh_train": list(splits.dh_train),
                "nnd_train": list(splits.nnd_train),
                "zero_shot": list(splits.zero_shot),
            },
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> tuple["SyntheticDataset", SubjectSplits]:
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported format_version {doc.get('format_version')}")
        spec = SyntheticDatasetSpec(**doc["spec"])
        ds = cls(spec=spec, subject_ids=list(doc["subject_ids"]),
                 prototypes=np.asarray(doc["prototypes"], dtype=float),
                 samples={sid: np.asarray(rows, dtype=float)
                          for sid, rows in doc["samples"].items()})
        sp = doc["splits"]
        splits = SubjectSplits(tuple(sp["dh_train"]), tuple(sp["nnd_train"]),
                               tuple(sp["zero_shot"]))
        return ds, splits


def split_subjects(subject_ids: list[str]) -> SubjectSplits:
    """~70% hashing-net training, ~20% decoder training, rest zero-shot."""
    s = len(subject_ids)
    if s < 3:
        raise ValueError("need at least 3 subjects to form the three splits")
    n_nnd = max(1, round(0.2 * s))
    n_zero = max(1, round(0.1 * s))
    n_dh = s - n_nnd - n_zero
    if n_dh < 1:
        raise ValueError(f"{s} subjects cannot cover all three splits")
    return SubjectSplits(
        dh_train=tuple(subject_ids[:n_dh]),
        nnd_train=tuple(subject_ids[n_dh:n_dh + n_nnd]),
        zero_shot=tuple(subject_ids[n_dh + n_nnd:]),
    )


def generate(spec: SyntheticDatasetSpec, *, id_prefix: str = "s",
             max_retries: int = 100) -> tuple[SyntheticDataset, SubjectSplits]:
    """Deterministic dataset for a spec; prototypes are redrawn until all
    pairwise distances reach inter_min_dist (bounded retries)."""
    rng = np.random.default_rng(spec.seed)
    prototypes = None
    for _ in range(max_retries):
        cand = spec.feature_scale * rng.standard_normal((spec.subjects, spec.d_in))
        diffs = cand[:, None, :] - cand[None, :, :]
        dist = np.sqrt((diffs ** 2).sum(axis=-1))
        dist[np.diag_indices_from(dist)] = np.inf
        if dist.min() >= spec.inter_min_dist:
            prototypes = cand
            break
    if prototypes is None:
        raise RuntimeError(
            f"could not place {spec.subjects} prototypes at pairwise distance "
            f">= {spec.inter_min_dist} in {max_retries} tries"
        )

    width = max(2, len(str(spec.subjects - 1)))
    subject_ids = [f"{id_prefix}{i:0{width}d}" for i in range(spec.subjects)]
    samples = {
        sid: prototypes[i] + spec.intra_sigma
        * rng.standard_normal((spec.samples_per_subject, spec.d_in))
        for i, sid in enumerate(subject_ids)
    }
    ds = SyntheticDataset(spec=spec, subject_ids=subject_ids,
                          prototypes=prototypes, samples=samples)
    return ds, split_subjects(subject_ids)


@dataclass(frozen=True)
class AugmentConfig:
    m: int = 4                    # source size
    n: int = 3                    # crop size; (m-n+1)^2 crops per variant
    scales: tuple[float, ...] = (0.6, 0.7, 0.8, 0.9)
    flip: bool = True
    sigma: float = 1.7            # perturbation strength; 0 = noiseless
    distortion_rank: int = 4      # distortion modes span this many directions

    def __post_init__(self):
        if self.n > self.m:
            raise ValueError(f"crop size n={self.n} exceeds source size m={self.m}")
        if self.distortion_rank < 1:
            raise ValueError("distortion_rank must be >= 1")

    def variant_tags(self) -> tuple[str, ...]:
        tags: list[str] = []
        if self.flip:
            tags.append("flip")
        tags.extend(f"scale{s:g}" for s in self.scales)
        return tuple(tags) if tags else ("orig",)


def augment_count(cfg: AugmentConfig) -> int:
    """Number of augmented views: variants x (m-n+1)^2."""
    return len(cfg.variant_tags()) * (cfg.m - cfg.n + 1) ** 2


_DELTA_BANKS: dict[tuple, np.ndarray] = {}


def _distortion_basis(d: int, rank: int) -> np.ndarray:
    """Fixed orthonormal basis of the distortion subspace, (d, rank).

    Capture distortions (flip, rescale, crop shift) move a face along a
    handful of shared modes, so the operators' offsets live in one low
    dimensional subspace instead of in general position.
    """
    rank = min(rank, d)
    rng = np.random.default_rng(zlib.crc32(f"distortion-basis|{d}|{rank}".encode()))
    basis, _ = np.linalg.qr(rng.standard_normal((d, rank)))
    return basis


def _variant_strength(tag: str) -> float:
    """Distortion severity per variant: rescaling to 60% moves a face much
    further than rescaling to 90%; a flip is in between; 'orig' not at all."""
    if tag == "orig":
        return 0.0
    if tag == "flip":
        return 0.25
    return 1.0 - float(tag.removeprefix("scale"))


def _delta_bank(cfg: AugmentConfig, d: int) -> np.ndarray:
    """Fixed offsets, one per (variant, crop) operator, scaled by severity."""
    key = (cfg.variant_tags(), cfg.m - cfg.n + 1, cfg.distortion_rank, d)
    bank = _DELTA_BANKS.get(key)
    if bank is None:
        basis = _distortion_basis(d, cfg.distortion_rank)
        crops = cfg.m - cfg.n + 1
        center = (crops - 1) / 2.0
        rows = []
        for tag in cfg.variant_tags():
            for i in range(crops):
                for j in range(crops):
                    seed = zlib.crc32(f"{tag}|{i}|{j}".encode())
                    coords = np.random.default_rng(seed).standard_normal(basis.shape[1])
                    direction = basis @ (coords / np.linalg.norm(coords))
                    crop_shift = (abs(i - center) + abs(j - center)) / max(crops - 1, 1)
                    strength = _variant_strength(tag) + 0.15 * crop_shift
                    rows.append(strength * direction)
        bank = np.stack(rows)
        _DELTA_BANKS[key] = bank
    return bank


def augment(sample: np.ndarray, cfg: AugmentConfig) -> np.ndarray:
    """All augmented views of one feature vector, shape (count, d)."""
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 1:
        raise ValueError("augment expects a single feature vector")
    return sample[None, :] + cfg.sigma * _delta_bank(cfg, sample.size)


def save_dataset(path, dataset: SyntheticDataset, splits: SubjectSplits) -> None:
    with open(path, "w") as fh:
        json.dump(dataset.to_json_dict(splits), fh, sort_keys=True)
        fh.write("\n")


def load_dataset(path) -> tuple[SyntheticDataset, SubjectSplits]:
    with open(path) as fh:
        return SyntheticDataset.from_json_dict(json.load(fh))
