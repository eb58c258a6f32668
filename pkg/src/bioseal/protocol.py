"""Enrollment and authentication with SHA3-512 sealed templates.

Only the digest of the packed final code is ever persisted; the code
itself stays in memory.  An optional per-subject salt provides
revocation: same code, different salt, different template.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .synth import AugmentConfig, augment

FORMAT_VERSION = 1
DIGEST_BYTES = 64


class TemplateConflictError(RuntimeError):
    """Subject already enrolled; re-enrollment must be explicit."""


def pack_bits(code: np.ndarray) -> bytes:
    """Pack bits MSB-first per byte in index order; low bits of a partial
    final byte are zero."""
    bits = np.asarray(code, dtype=np.uint8).ravel()
    if bits.size == 0:
        return b""
    return np.packbits(bits, bitorder="big").tobytes()


def hash_template(code: np.ndarray, subject_salt: bytes | None = None) -> bytes:
    """SHA3-512 over (salt || packed bits); 64-byte digest."""
    return hashlib.sha3_512((subject_salt or b"") + pack_bits(code)).digest()


def majority_code(codes: np.ndarray) -> np.ndarray:
    """Most common row; ties break to the lexicographically smallest."""
    codes = np.atleast_2d(np.asarray(codes, dtype=np.uint8))
    if codes.shape[0] == 0:
        raise ValueError("majority of an empty code set")
    counts: dict[bytes, int] = {}
    for row in codes:
        counts[row.tobytes()] = counts.get(row.tobytes(), 0) + 1
    best = max(counts.items(), key=lambda kv: (kv[1], [-b for b in kv[0]]))
    return np.frombuffer(best[0], dtype=np.uint8).copy()


@dataclass
class Template:
    subject_id: str
    digest: bytes
    code_length: int
    codec_id: str
    created_at: str
    salt: bytes | None = None

    def to_record(self) -> dict:
        rec = {
            "subject_id": self.subject_id,
            "digest_hex": self.digest.hex(),
            "code_length": self.code_length,
            "codec_id": self.codec_id,
            "created_at": self.created_at,
        }
        if self.salt is not None:
            rec["salt_hex"] = self.salt.hex()
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Template":
        digest = bytes.fromhex(rec["digest_hex"])
        if len(digest) != DIGEST_BYTES:
            raise ValueError(f"digest must be {DIGEST_BYTES} bytes")
        salt = bytes.fromhex(rec["salt_hex"]) if "salt_hex" in rec else None
        return cls(rec["subject_id"], digest, rec["code_length"],
                   rec["codec_id"], rec["created_at"], salt)


class TemplateStore:
    """Newline-delimited JSON template records; single writer, many readers."""

    def __init__(self, path: str | os.PathLike):
        self.path = str(path)
        self._records: dict[str, Template] = {}
        if os.path.exists(self.path):
            self._load()

    def _load(self) -> None:
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    t = Template.from_record(json.loads(line))
                    self._records[t.subject_id] = t

    def _flush(self) -> None:
        with open(self.path, "w") as fh:
            for sid in sorted(self._records):
                json.dump(self._records[sid].to_record(), fh, sort_keys=True)
                fh.write("\n")

    def add(self, template: Template, re_enroll: bool = False) -> None:
        if template.subject_id in self._records and not re_enroll:
            raise TemplateConflictError(
                f"subject {template.subject_id!r} already enrolled; "
                "pass re_enroll=True to replace"
            )
        self._records[template.subject_id] = template
        self._flush()

    def get(self, subject_id: str) -> Template:
        if subject_id not in self._records:
            raise KeyError(f"no template for subject {subject_id!r}")
        return self._records[subject_id]

    def subjects(self) -> list[str]:
        return sorted(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, subject_id: str) -> bool:
        return subject_id in self._records


def _now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def enroll(samples: np.ndarray, pipeline, store: TemplateStore | None,
           subject_id: str, *, salt: bytes | None = None, re_enroll: bool = False,
           created_at: str | None = None) -> Template:
    """Enroll a subject from one or more samples.

    Each sample maps to a final code through the pipeline; the enrollment
    code is the majority code (lexicographic tie-break) and only its
    digest is kept.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise ValueError("enrollment needs at least one sample")
    codes = pipeline.final_codes(samples)
    code = majority_code(codes)
    template = Template(
        subject_id=subject_id,
        digest=hash_template(code, salt),
        code_length=int(code.size),
        codec_id=pipeline.codec_id,
        created_at=created_at or _now_iso(),
        salt=salt,
    )
    if store is not None:
        store.add(template, re_enroll=re_enroll)
    return template


def probe_digests(probe_sample: np.ndarray, augment_cfg: AugmentConfig,
                  pipeline, salt: bytes | None = None) -> list[bytes]:
    """Digest per augmented view of the probe."""
    views = augment(np.asarray(probe_sample, dtype=float), augment_cfg)
    codes = pipeline.final_codes(views)
    return [hash_template(codes[i], salt) for i in range(codes.shape[0])]


@dataclass
class MatchResult:
    score: float
    threshold: float
    accept: bool


def match_score(digests: list[bytes], enrolled: Template,
                threshold: float = 0.5) -> MatchResult:
    """Fraction of probe digests equal to the enrolled digest."""
    if not digests:
        raise ValueError("probe template set is empty")
    score = sum(d == enrolled.digest for d in digests) / len(digests)
    return MatchResult(score=score, threshold=threshold,
                       accept=score >= threshold)


def authenticate(probe_sample: np.ndarray, augment_cfg: AugmentConfig,
                 pipeline, enrolled: Template,
                 threshold: float = 0.5) -> MatchResult:
    """Augment the probe, derive per-view digests, score against a template."""
    digests = probe_digests(probe_sample, augment_cfg, pipeline, enrolled.salt)
    return match_score(digests, enrolled, threshold)
