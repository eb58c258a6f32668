# Scratch tuning harness (not part of the package; deleted before finishing).
import sys
import time

import numpy as np

from bioseal import bch
from bioseal.bench import build_dataset, train_system
from bioseal.config import default_config
from bioseal.evalharness import evaluate, variant_compare, dictionary_attack
from bioseal.hashnet import binarize
from bioseal.synth import SyntheticDatasetSpec, generate


def main(overrides=None):
    t0 = time.time()
    cfg = default_config()
    if overrides:
        for k, v in overrides.items():
            obj = cfg
            parts = k.split(".")
            for p in parts[:-1]:
                obj = getattr(obj, p)
            # dataclasses are frozen for dataset/augment; rebuild if needed
            setattr(obj, parts[-1], v)
    dataset, splits = build_dataset(cfg)
    print(f"dataset: {time.time()-t0:.1f}s")

    sys_ = train_system(cfg, dataset, splits)
    print(f"trained: {time.time()-t0:.1f}s  s1 loss {sys_.stage1_history[0]:.3f}->{sys_.stage1_history[-1]:.3f}"
          f"  nnd {sys_.nnd_history[0]:.4f}->{sys_.nnd_history[-1]:.4f}"
          f"  joint {sys_.joint_history[0]:.4f}->{sys_.joint_history[-1]:.4f}")

    # acceptance 6: per-bit mean activation on the stage-1 training set
    from bioseal.bench import stage1_training_set
    x1, y1, _ = stage1_training_set(cfg, dataset, splits)
    acts = sys_.dh_stage1.hash_activations(x1)
    bit_means = acts.mean(axis=0)
    frac = np.mean((bit_means >= 0.4) & (bit_means <= 0.6))
    print(f"bit balance: {frac*100:.1f}% of bits in [0.4,0.6] "
          f"(min {bit_means.min():.2f} max {bit_means.max():.2f})")

    # stage-2 decode success rate
    gt = sys_.ground_truth
    n_conf = sum(g.confident for g in gt.values())
    print(f"ground truth: {n_conf}/{len(gt)} subjects with successful decodes")

    # intermediate-code deviation stats per subject (vs majority)
    for grp, name in ((splits.dh_train[:3], "dh"), (splits.zero_shot, "zero")):
        devs = []
        for sid in grp:
            inter = binarize(sys_.dh_stage1.hash_activations(dataset.samples[sid]))
            maj = (2 * inter.sum(axis=0) > inter.shape[0]).astype(np.uint8)
            devs.extend((inter ^ maj).sum(axis=1))
        print(f"  {name} intermediate-code deviation bits: mean {np.mean(devs):.2f} "
              f"p90 {np.percentile(devs, 90):.1f} max {np.max(devs)}")

    # acceptance 8: mode ordering
    reports = {}
    for mode in ("multi-shot", "one-shot", "zero-shot"):
        reports[mode] = evaluate(sys_.joint, dataset, splits, mode, cfg.augment,
                                 multi_count=cfg.eval.multi_shot_count,
                                 train_reserve=cfg.training.train_samples_per_subject)
        r = reports[mode]
        gz = np.mean(np.array(r.genuine_scores) == 0)
        iz = np.mean(np.array(r.impostor_scores) > 0)
        print(f"{mode}: EER {r.eer:.4f}  genuine-zero {gz:.3f}  impostor>0 {iz:.5f} "
              f"({time.time()-t0:.0f}s)")

    # acceptance 7: variant ordering (one-shot)
    var = variant_compare(sys_.dh_stage1, sys_.code, sys_.joint, dataset, splits,
                          cfg.augment, mode="one-shot",
                          multi_count=cfg.eval.multi_shot_count,
                          train_reserve=cfg.training.train_samples_per_subject)
    for name, r in var.items():
        print(f"variant {name}: EER {r.eer:.4f}")
    print(f"variants: ordering ok: "
          f"{var['dh_minus'].eer > var['dh_decoder'].eer >= var['dh_nnd'].eer}, "
          f"factor2: {var['dh_nnd'].eer <= 0.5*var['dh_minus'].eer}")

    # acceptance 9: dictionary attack
    from bioseal.protocol import enroll
    templates = {sid: enroll(dataset.samples[sid][:1], sys_.joint, None, sid,
                             created_at="1970-01-01T00:00:00Z")
                 for sid in splits.dh_train}
    atk_spec = SyntheticDatasetSpec(subjects=cfg.attack.subjects,
                                    samples_per_subject=20,
                                    d_in=cfg.dataset.d_in,
                                    intra_sigma=cfg.dataset.intra_sigma,
                                    inter_min_dist=cfg.dataset.inter_min_dist,
                                    seed=cfg.attack.seed)
    attacker, _ = generate(atk_spec, id_prefix="a")
    atk = dictionary_attack(sys_.joint, templates, attacker, cfg.augment)
    print(f"attack: {len(atk.impostor_scores)} trials, false accepts {atk.false_accept_count}")
    print(f"total {time.time()-t0:.1f}s")
    return reports, var


if __name__ == "__main__":
    main()
