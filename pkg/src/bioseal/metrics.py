"""Verification metrics: ROC sweep, EER, GAR at fixed FAR operating points.

Scores are match scores in [0, 1]; a trial accepts when score >= threshold.
The sweep runs over the union of observed scores plus accept-all /
reject-all sentinels, and the EER interpolates linearly between adjacent
(FAR, FRR) points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


def score_curve(genuine: np.ndarray, impostor: np.ndarray):
    """Threshold sweep.

    Returns (thresholds, far, frr): far[i] is the fraction of impostor
    scores >= thresholds[i], frr[i] the fraction of genuine scores below
    it.  far is nonincreasing, frr nondecreasing.
    """
    genuine = np.asarray(genuine, dtype=float)
    impostor = np.asarray(impostor, dtype=float)
    if genuine.size == 0 or impostor.size == 0:
        raise ValueError("need both genuine and impostor scores")
    thresholds = np.unique(np.concatenate(
        [[0.0], genuine, impostor, [np.inf]]
    ))
    far = np.array([(impostor >= t).mean() for t in thresholds])
    frr = np.array([(genuine < t).mean() for t in thresholds])
    return thresholds, far, frr


def compute_eer(far: np.ndarray, frr: np.ndarray) -> float:
    """Rate at the FAR = FRR crossing, linearly interpolated."""
    diff = far - frr
    for i in range(len(diff) - 1):
        if diff[i] == 0.0:
            return float(far[i])
        if diff[i] > 0.0 >= diff[i + 1]:
            span = diff[i] - diff[i + 1]
            if span == 0.0:
                return float((far[i] + frr[i]) / 2.0)
            s = diff[i] / span
            return float(far[i] + s * (far[i + 1] - far[i]))
    if diff[-1] == 0.0:
        return float(far[-1])
    # no crossing: report the point of closest approach
    i = int(np.argmin(np.abs(diff)))
    return float((far[i] + frr[i]) / 2.0)


def gar_at_far(far: np.ndarray, gar: np.ndarray, target: float) -> float:
    """Highest GAR among operating points with FAR <= target."""
    ok = far <= target
    return float(gar[ok].max()) if ok.any() else 0.0


@dataclass
class EvalReport:
    enrollment_mode: str
    eer: float
    gar_at_far: dict[float, float]
    gar_at_zero_far: float
    roc: list[tuple[float, float]]     # (far, gar) sorted by far
    genuine_scores: list[float]
    impostor_scores: list[float]

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "kind": "eval_report",
            "enrollment_mode": self.enrollment_mode,
            "eer": self.eer,
            "gar_at_far": {repr(k): v for k, v in self.gar_at_far.items()},
            "gar_at_zero_far": self.gar_at_zero_far,
            "num_genuine": len(self.genuine_scores),
            "num_impostor": len(self.impostor_scores),
            "roc": [[f, g] for f, g in self.roc],
            "genuine_scores": self.genuine_scores,
            "impostor_scores": self.impostor_scores,
        }

    def roc_csv_text(self) -> str:
        lines = ["far,gar"]
        lines.extend(f"{f!r},{g!r}" for f, g in self.roc)
        return "\n".join(lines) + "\n"

    def save(self, json_path, csv_path=None) -> None:
        with open(json_path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")
        if csv_path is not None:
            with open(csv_path, "w") as fh:
                fh.write(self.roc_csv_text())


def build_report(genuine, impostor, mode: str,
                 far_targets=(1e-2, 1e-3, 1e-4)) -> EvalReport:
    """Assemble the full report from raw trial scores."""
    genuine = np.asarray(genuine, dtype=float)
    impostor = np.asarray(impostor, dtype=float)
    _, far, frr = score_curve(genuine, impostor)
    gar = 1.0 - frr
    order = np.argsort(far, kind="stable")
    roc = sorted({(float(far[i]), float(gar[i])) for i in order})
    return EvalReport(
        enrollment_mode=mode,
        eer=compute_eer(far, frr),
        gar_at_far={t: gar_at_far(far, gar, t) for t in far_targets},
        gar_at_zero_far=gar_at_far(far, gar, 0.0),
        roc=roc,
        genuine_scores=[float(s) for s in genuine],
        impostor_scores=[float(s) for s in impostor],
    )
