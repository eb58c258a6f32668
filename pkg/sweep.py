# Scratch sweep harness (not part of the package; deleted before finishing).
import dataclasses
import sys
import time

import numpy as np

from bioseal import bch
from bioseal.bench import build_dataset, stage1_training_set, train_system
from bioseal.config import default_config
from bioseal.evalharness import DecodedPipeline, DirectPipeline, evaluate, variant_compare
from bioseal.hashnet import binarize
from bioseal.synth import augment


def make_cfg(*, s1_epochs, s1_lr, intra, aug_sigma, nnd_epochs, nnd_lr,
             joint_epochs, joint_lr, seed=101):
    cfg = default_config()
    cfg.dataset = dataclasses.replace(cfg.dataset, intra_sigma=intra, seed=seed)
    cfg.augment = dataclasses.replace(cfg.augment, sigma=aug_sigma)
    cfg.training.stage1.epochs = s1_epochs
    cfg.training.stage1.learning_rate = s1_lr
    cfg.training.stage1.seed = 303
    cfg.training.nnd.epochs = nnd_epochs
    cfg.training.nnd.learning_rate = nnd_lr
    cfg.training.nnd.seed = 404
    cfg.training.joint.epochs = joint_epochs
    cfg.training.joint.learning_rate = joint_lr
    cfg.training.joint.seed = 505
    cfg.hashnet_seed = 202
    return cfg


def stability(pipeline, dataset, subjects, aug_cfg, probe_idx=(10, 20, 30)):
    """Mean fraction of augmented views matching the enrollment code."""
    fracs = []
    for sid in subjects:
        enroll_code = pipeline.final_codes(dataset.samples[sid][:1])[0]
        for pi in probe_idx:
            views = augment(dataset.samples[sid][pi], aug_cfg)
            codes = pipeline.final_codes(views)
            fracs.append(float((codes == enroll_code).all(axis=1).mean()))
    return float(np.mean(fracs))


def run_case(label, quick=True, **kw):
    cfg = make_cfg(**kw)
    t0 = time.time()
    dataset, splits = build_dataset(cfg)
    sys_ = train_system(cfg, dataset, splits)

    x1, _, _ = stage1_training_set(cfg, dataset, splits)
    acts = sys_.dh_stage1.hash_activations(x1)
    balance = float(np.mean((acts.mean(axis=0) >= 0.4) & (acts.mean(axis=0) <= 0.6)))
    absllr = np.abs(np.log((1 - np.clip(acts, 1e-12, 1 - 1e-12)) /
                           np.clip(acts, 1e-12, 1 - 1e-12)))
    q50, q90 = np.percentile(absllr, [50, 90])

    dec_ok = sum(
        bch.decode(sys_.code, binarize(
            sys_.dh_stage1.hash_activations(dataset.samples[sid][0]))).success
        for sid in splits.dh_train)

    raw = DirectPipeline(sys_.dh_stage1)
    bm = DecodedPipeline(sys_.dh_stage1, sys_.code)
    st_raw = stability(raw, dataset, splits.dh_train[:5], cfg.augment)
    st_bm = stability(bm, dataset, splits.dh_train[:5], cfg.augment)
    st_nnd = stability(sys_.joint, dataset, splits.dh_train[:5], cfg.augment)
    st_zero = stability(sys_.joint, dataset, splits.zero_shot, cfg.augment)

    var = variant_compare(sys_.dh_stage1, sys_.code, sys_.joint, dataset, splits,
                          cfg.augment, mode="one-shot",
                          train_reserve=cfg.training.train_samples_per_subject)
    e_raw, e_bm, e_nnd = (var[k].eer for k in ("dh_minus", "dh_decoder", "dh_nnd"))
    a7 = e_raw > e_bm >= e_nnd and e_nnd <= 0.5 * e_raw
    line = (f"[{label}] bal {balance*100:4.1f}% llr {q50:.1f}/{q90:.1f} "
            f"dec {dec_ok:2d}/14 | stab raw {st_raw:.2f} bm {st_bm:.2f} "
            f"nnd {st_nnd:.2f} zero {st_zero:.2f} | "
            f"EER {e_raw:.4f}/{e_bm:.4f}/{e_nnd:.4f} A7={'Y' if a7 else 'n'}")
    if not quick:
        r_multi = evaluate(sys_.joint, dataset, splits, "multi-shot", cfg.augment,
                           train_reserve=cfg.training.train_samples_per_subject)
        r_zero = evaluate(sys_.joint, dataset, splits, "zero-shot", cfg.augment,
                          train_reserve=cfg.training.train_samples_per_subject)
        a8 = r_multi.eer < e_nnd < r_zero.eer
        line += (f" | multi {r_multi.eer:.4f} one {e_nnd:.4f} "
                 f"zero {r_zero.eer:.4f} A8={'Y' if a8 else 'n'}")
    print(line + f" ({time.time()-t0:.0f}s)")
    sys.stdout.flush()


if __name__ == "__main__":
    base = dict(s1_lr=0.02, nnd_epochs=20, nnd_lr=0.02, joint_epochs=30,
                joint_lr=0.01)
    for s1e in (5, 10, 20):
        for intra, augs in ((0.3, 0.15), (0.5, 0.25)):
            run_case(f"s1e{s1e} i{intra} a{augs}", s1_epochs=s1e,
                     intra=intra, aug_sigma=augs, **base)
