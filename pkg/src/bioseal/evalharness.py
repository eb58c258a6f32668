"""Experiment harness: stage-2 ground truth, verification benchmarks,
pipeline-variant comparison, dictionary attacks, and brute-force
accounting.

Pipelines are anything exposing final_codes(X) -> (B, n) bits plus a
codec_id string; three realizations matter here: the raw hashing network,
hashing plus a conventional hard-decision decode, and the full jointly
trained system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bch
from .hashnet import HashNetModel, binarize
from .metrics import EvalReport, build_report
from .protocol import Template, enroll, hash_template
from .synth import AugmentConfig, SubjectSplits, SyntheticDataset, augment

MODES = ("zero-shot", "one-shot", "multi-shot")


@dataclass
class GroundTruth:
    codeword: np.ndarray
    confident: bool    # False when no sample of the subject decoded


def stage2_ground_truth(dh: HashNetModel, code: bch.BchCode,
                        samples_by_subject: dict[str, np.ndarray]
                        ) -> dict[str, GroundTruth]:
    """Per-subject target codeword for decoder training.

    Each sample's binarized hash goes through the conventional decoder;
    the subject's ground truth is the most common successfully decoded
    codeword (lexicographic tie-break).  Subjects where every decode
    fails fall back to re-encoding the message bits of the bitwise-
    majority intermediate code, flagged low-confidence.
    """
    table: dict[str, GroundTruth] = {}
    for sid in sorted(samples_by_subject):
        samples = np.atleast_2d(np.asarray(samples_by_subject[sid], dtype=float))
        if samples.shape[0] == 0:
            raise ValueError(f"subject {sid!r} has no samples")
        inter = binarize(dh.hash_activations(samples))
        decoded = [res.codeword for row in inter
                   if (res := bch.decode(code, row)).success]
        if decoded:
            table[sid] = GroundTruth(_majority(np.stack(decoded)), True)
        else:
            counts = inter.sum(axis=0)
            majority_bits = (2 * counts > inter.shape[0]).astype(np.uint8)
            message = majority_bits[code.n - code.k:]
            table[sid] = GroundTruth(bch.encode(code, message), False)
    return table


def _majority(codes: np.ndarray) -> np.ndarray:
    counts: dict[bytes, int] = {}
    for row in codes:
        counts[row.tobytes()] = counts.get(row.tobytes(), 0) + 1
    best = max(counts.items(), key=lambda kv: (kv[1], [-b for b in kv[0]]))
    return np.frombuffer(best[0], dtype=np.uint8).copy()


class DirectPipeline:
    """Intermediate code used directly as the final code (no decoder)."""

    def __init__(self, dh: HashNetModel):
        self.dh = dh

    @property
    def codec_id(self) -> str:
        return f"n{self.dh.K}:raw"

    def final_codes(self, x: np.ndarray) -> np.ndarray:
        return binarize(self.dh.hash_activations(np.atleast_2d(x)))


class DecodedPipeline:
    """Intermediate code cleaned by conventional hard-decision decoding;
    undecodable words pass through unchanged."""

    def __init__(self, dh: HashNetModel, code: bch.BchCode):
        if dh.K != code.n:
            raise ValueError(f"hashing width K={dh.K} != code length n={code.n}")
        self.dh = dh
        self.code = code

    @property
    def codec_id(self) -> str:
        return f"{self.code.name}:bm"

    def final_codes(self, x: np.ndarray) -> np.ndarray:
        inter = binarize(self.dh.hash_activations(np.atleast_2d(x)))
        out = np.empty_like(inter)
        for i, row in enumerate(inter):
            res = bch.decode(self.code, row)
            out[i] = res.codeword if res.success else row
        return out


def _mode_plan(mode: str, splits: SubjectSplits, multi_count: int,
               train_reserve: int):
    """(enrolled subjects, enrollment sample slice, probe start index)."""
    if mode == "zero-shot":
        return splits.zero_shot, slice(0, 1), 1
    if mode == "one-shot":
        return splits.dh_train, slice(0, 1), train_reserve
    if mode == "multi-shot":
        return splits.dh_train, slice(0, multi_count), train_reserve
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def evaluate(pipeline, dataset: SyntheticDataset, splits: SubjectSplits,
             mode: str, augment_cfg: AugmentConfig, *,
             multi_count: int = 5, train_reserve: int = 5,
             far_targets=(1e-2, 1e-3, 1e-4)) -> EvalReport:
    """Verification benchmark for one enrollment mode.

    Enrollment follows the mode plan; genuine trials pit each enrolled
    subject's held-out probes against their own template, impostor trials
    pit every other subject's probes against it.  Probe digests are
    computed once per probe and scored against all templates.
    """
    group, enroll_slice, probe_start = _mode_plan(mode, splits, multi_count,
                                                  train_reserve)
    templates = {
        sid: enroll(dataset.samples[sid][enroll_slice], pipeline, None, sid,
                    created_at="1970-01-01T00:00:00Z")
        for sid in group
    }

    probe_owner: list[str] = []
    probe_rows = []
    for sid in dataset.subject_ids:
        probes = dataset.samples[sid][probe_start:]
        for row in probes:
            probe_owner.append(sid)
            probe_rows.append(row)
    if not probe_rows:
        raise ValueError("no probes left after the enrollment/training reserve")

    views = np.concatenate([augment(row, augment_cfg) for row in probe_rows])
    per_probe = views.shape[0] // len(probe_rows)
    codes = pipeline.final_codes(views)
    digests = np.frombuffer(
        b"".join(hash_template(codes[i]) for i in range(codes.shape[0])),
        dtype="S64",
    ).reshape(len(probe_rows), per_probe)

    genuine, impostor = [], []
    for sid, template in templates.items():
        scores = (digests == template.digest).mean(axis=1)
        owners = np.array(probe_owner)
        genuine.extend(scores[owners == sid])
        impostor.extend(scores[owners != sid])
    return build_report(genuine, impostor, mode, far_targets)


def variant_compare(dh_stage1: HashNetModel, code: bch.BchCode, joint,
                    dataset: SyntheticDataset, splits: SubjectSplits,
                    augment_cfg: AugmentConfig, *, mode: str = "one-shot",
                    multi_count: int = 5, train_reserve: int = 5
                    ) -> dict[str, EvalReport]:
    """EER comparison across the three pipeline variants on one protocol."""
    variants = {
        "dh_minus": DirectPipeline(dh_stage1),
        "dh_decoder": DecodedPipeline(dh_stage1, code),
        "dh_nnd": joint,
    }
    return {
        name: evaluate(p, dataset, splits, mode, augment_cfg,
                       multi_count=multi_count, train_reserve=train_reserve)
        for name, p in variants.items()
    }


@dataclass
class AttackReport:
    genuine_scores: list[float]
    impostor_scores: list[float]
    false_accept_count: int            # impostor trials with score > 0
    impostor_histogram: dict[float, int]

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "kind": "attack_report",
            "false_accept_count": self.false_accept_count,
            "num_genuine": len(self.genuine_scores),
            "num_impostor": len(self.impostor_scores),
            "impostor_histogram": {repr(k): v for k, v in
                                   sorted(self.impostor_histogram.items())},
            "genuine_scores": self.genuine_scores,
            "impostor_scores": self.impostor_scores,
        }


def dictionary_attack(pipeline, templates: dict[str, Template] | list[Template],
                      attacker_dataset: SyntheticDataset,
                      augment_cfg: AugmentConfig, *,
                      genuine_dataset: SyntheticDataset | None = None
                      ) -> AttackReport:
    """Throw every attacker sample at every enrolled template.

    Attacker subjects must be disjoint from the enrolled population.  When
    genuine_dataset is given, the genuine distribution is computed from the
    enrolled subjects' own samples for side-by-side comparison.
    """
    if isinstance(templates, dict):
        templates = list(templates.values())
    if not templates:
        raise ValueError("no enrolled templates to attack")
    enrolled_ids = {t.subject_id for t in templates}
    overlap = enrolled_ids & set(attacker_dataset.subject_ids)
    if overlap:
        raise ValueError(f"attacker subjects overlap enrolled subjects: {overlap}")

    def scores_against(rows: np.ndarray) -> np.ndarray:
        views = np.concatenate([augment(r, augment_cfg) for r in rows])
        per = views.shape[0] // rows.shape[0]
        codes = pipeline.final_codes(views)
        digs = np.frombuffer(
            b"".join(hash_template(codes[i]) for i in range(codes.shape[0])),
            dtype="S64",
        ).reshape(rows.shape[0], per)
        return digs

    impostor: list[float] = []
    attack_rows = np.concatenate(
        [attacker_dataset.samples[sid] for sid in attacker_dataset.subject_ids])
    digs = scores_against(attack_rows)
    for t in templates:
        impostor.extend((digs == t.digest).mean(axis=1))

    genuine: list[float] = []
    if genuine_dataset is not None:
        by_id = {t.subject_id: t for t in templates}
        for sid, t in sorted(by_id.items()):
            if sid not in genuine_dataset.samples:
                continue
            rows = genuine_dataset.samples[sid]
            gd = scores_against(rows)
            genuine.extend((gd == t.digest).mean(axis=1))

    hist: dict[float, int] = {}
    for s in impostor:
        hist[float(s)] = hist.get(float(s), 0) + 1
    return AttackReport(
        genuine_scores=[float(s) for s in genuine],
        impostor_scores=[float(s) for s in impostor],
        false_accept_count=int(sum(s > 0 for s in impostor)),
        impostor_histogram=hist,
    )


@dataclass
class BruteForceReport:
    exponent: int              # search space is 2**exponent
    meets_secure_floor: bool   # secure profile requires K >= 255

    def describe(self) -> str:
        tag = "secure" if self.meets_secure_floor else "INSECURE (test profile)"
        return f"brute-force search space 2^{self.exponent} [{tag}]"


def brute_force_exponent(code_length: int) -> BruteForceReport:
    """Brute-force search-space accounting for a K-bit final code."""
    if code_length < 1:
        raise ValueError("code length must be positive")
    return BruteForceReport(exponent=code_length,
                            meets_secure_floor=code_length >= 255)
