"""Command-line driver for the whole pipeline.

Every command reads one JSON config (plus --set overrides) and touches
only its declared artifacts, so a run replays deterministically from the
config's seeds.  Exit codes: 0 ok, 1 config error, 2 missing
prerequisite, 3 runtime failure.
"""

from __future__ import annotations

import os

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")

import argparse
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, bch
from .bench import (build_dataset, nnd_training_pairs, stage1_training_set,
                    train_stage1_model)
from .config import (ConfigError, RunConfig, apply_overrides, config_from_dict,
                     config_to_dict, default_config)
from .evalharness import (brute_force_exponent, dictionary_attack, evaluate,
                          stage2_ground_truth, variant_compare)
from .hashnet import HashNetModel
from .joint import JointModel, integrate
from .nnd import NndModel, train as train_nnd
from .protocol import TemplateStore, authenticate, enroll
from .synth import (SyntheticDatasetSpec, generate, load_dataset, save_dataset)

FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_MISSING = 2
EXIT_RUNTIME = 3


class MissingArtifactError(RuntimeError):
    pass


def _load_cfg(args) -> RunConfig:
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    else:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    apply_overrides(doc, args.set or [])
    return config_from_dict(doc)


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(f"{path} is missing; run `{hint}` first")
    return path


def _dataset_path(cfg) -> Path:
    return cfg.artifact("dataset.json")


def _mkdirs(cfg) -> None:
    Path(cfg.paths.model_dir).mkdir(parents=True, exist_ok=True)
    Path(cfg.paths.report_dir).mkdir(parents=True, exist_ok=True)
    Path(cfg.paths.template_store).parent.mkdir(parents=True, exist_ok=True)


def _load_joint(cfg) -> JointModel:
    return JointModel.load(_require(cfg.artifact("joint_model.json"),
                                    "bioseal finetune"))


def _load_gt(cfg, code):
    path = _require(cfg.artifact("ground_truth.json"), "bioseal gen-gt")
    with open(path) as fh:
        doc = json.load(fh)
    table = {}
    for sid, rec in doc["subjects"].items():
        bits = np.array([int(c) for c in rec["codeword"]], dtype=np.uint8)
        table[sid] = (bits, rec["confident"])
    return table


# -- commands -----------------------------------------------------------------

def cmd_synth(cfg: RunConfig, args) -> int:
    dataset, splits = build_dataset(cfg)
    _mkdirs(cfg)
    save_dataset(_dataset_path(cfg), dataset, splits)
    print(f"wrote {_dataset_path(cfg)}: {cfg.dataset.subjects} subjects x "
          f"{cfg.dataset.samples_per_subject} samples "
          f"(splits {len(splits.dh_train)}/{len(splits.nnd_train)}/"
          f"{len(splits.zero_shot)})")
    return EXIT_OK


def cmd_train_dh(cfg: RunConfig, args) -> int:
    dataset, splits = load_dataset(_require(_dataset_path(cfg), "bioseal synth"))
    code = bch.construct(*cfg.code)
    model, history = train_stage1_model(cfg, dataset, splits, code)
    _mkdirs(cfg)
    model.save(cfg.artifact("dh_model.json"), cfg.loss_weights)
    print(f"wrote {cfg.artifact('dh_model.json')}; "
          f"loss {history[0]:.4f} -> {history[-1]:.4f} "
          f"over {len(history)} epochs")
    return EXIT_OK


def cmd_gen_gt(cfg: RunConfig, args) -> int:
    dataset, splits = load_dataset(_require(_dataset_path(cfg), "bioseal synth"))
    dh = HashNetModel.load(_require(cfg.artifact("dh_model.json"),
                                    "bioseal train-dh"))
    code = bch.construct(*cfg.code)
    gt = stage2_ground_truth(dh, code, {sid: dataset.samples[sid]
                                        for sid in splits.nnd_train})
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "ground_truth",
        "code": {"m": cfg.code[0], "t": cfg.code[1]},
        "subjects": {
            sid: {"codeword": "".join(str(b) for b in g.codeword),
                  "confident": g.confident}
            for sid, g in sorted(gt.items())
        },
    }
    _mkdirs(cfg)
    with open(cfg.artifact("ground_truth.json"), "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")
    low = sum(not g.confident for g in gt.values())
    print(f"wrote {cfg.artifact('ground_truth.json')}: {len(gt)} subjects "
          f"({low} low-confidence)")
    return EXIT_OK


def cmd_train_nnd(cfg: RunConfig, args) -> int:
    dataset, splits = load_dataset(_require(_dataset_path(cfg), "bioseal synth"))
    dh = HashNetModel.load(_require(cfg.artifact("dh_model.json"),
                                    "bioseal train-dh"))
    code = bch.construct(*cfg.code)
    table = _load_gt(cfg, code)
    from .evalharness import GroundTruth
    gt = {sid: GroundTruth(bits, conf) for sid, (bits, conf) in table.items()}
    decoder = NndModel.from_code(code, cfg.nnd.iterations, cfg.nnd.llr_clamp)
    pair_aug = cfg.augment if cfg.training.pair_augment else None
    _, hash_acts, targets = nnd_training_pairs(dataset, splits, dh, gt, pair_aug)
    decoder, history = train_nnd(decoder, hash_acts, targets, cfg.training.nnd)
    _mkdirs(cfg)
    decoder.save(cfg.artifact("nnd_model.json"))
    print(f"wrote {cfg.artifact('nnd_model.json')}; "
          f"loss {history[0]:.4f} -> {history[-1]:.4f}")
    return EXIT_OK


def cmd_finetune(cfg: RunConfig, args) -> int:
    dataset, splits = load_dataset(_require(_dataset_path(cfg), "bioseal synth"))
    dh = HashNetModel.load(_require(cfg.artifact("dh_model.json"),
                                    "bioseal train-dh"))
    decoder = NndModel.load(_require(cfg.artifact("nnd_model.json"),
                                     "bioseal train-nnd"))
    code = bch.construct(*cfg.code)
    table = _load_gt(cfg, code)
    from .evalharness import GroundTruth
    gt = {sid: GroundTruth(bits, conf) for sid, (bits, conf) in table.items()}
    pair_aug = cfg.augment if cfg.training.pair_augment else None
    x, _, targets = nnd_training_pairs(dataset, splits, dh, gt, pair_aug)
    joint = integrate(dh.copy(), decoder.copy(), cfg.nnd.input_mode)
    joint, history = joint.train(x, targets, cfg.training.joint)
    _mkdirs(cfg)
    joint.save(cfg.artifact("joint_model.json"))
    print(f"wrote {cfg.artifact('joint_model.json')}; "
          f"loss {history[0]:.4f} -> {history[-1]:.4f}")
    return EXIT_OK


def cmd_enroll(cfg: RunConfig, args) -> int:
    dataset, splits = load_dataset(_require(_dataset_path(cfg), "bioseal synth"))
    joint = _load_joint(cfg)
    _mkdirs(cfg)
    store = TemplateStore(cfg.paths.template_store)
    if args.subject == "all":
        subjects = list(splits.dh_train)
    else:
        if args.subject not in dataset.samples:
            raise MissingArtifactError(f"subject {args.subject!r} not in dataset")
        subjects = [args.subject]
    salt = bytes.fromhex(args.salt_hex) if args.salt_hex else None
    for sid in subjects:
        template = enroll(dataset.samples[sid][:args.count], joint, store, sid,
                          salt=salt, re_enroll=args.re_enroll,
                          created_at=cfg.timestamp)
        print(f"enrolled {sid}: {template.digest.hex()[:16]}... "
              f"({args.count} sample(s))")
    return EXIT_OK


def cmd_auth(cfg: RunConfig, args) -> int:
    dataset, _ = load_dataset(_require(_dataset_path(cfg), "bioseal synth"))
    joint = _load_joint(cfg)
    store = TemplateStore(
        _require(Path(cfg.paths.template_store), "bioseal enroll"))
    if args.subject not in store:
        raise MissingArtifactError(
            f"subject {args.subject!r} is not enrolled; run `bioseal enroll`")
    probe = dataset.samples[args.subject][args.probe_index]
    threshold = cfg.eval.threshold if args.threshold is None else args.threshold
    result = authenticate(probe, cfg.augment, joint, store.get(args.subject),
                          threshold)
    print(f"score {result.score:.3f} {'ACCEPT' if result.accept else 'REJECT'}")
    return EXIT_OK


def cmd_eval(cfg: RunConfig, args) -> int:
    dataset, splits = load_dataset(_require(_dataset_path(cfg), "bioseal synth"))
    joint = _load_joint(cfg)
    mode = args.mode or cfg.eval.mode
    report = evaluate(joint, dataset, splits, mode, cfg.augment,
                      multi_count=cfg.eval.multi_shot_count,
                      train_reserve=cfg.training.train_samples_per_subject,
                      far_targets=cfg.eval.far_targets)
    _mkdirs(cfg)
    tag = mode.replace("-", "_")
    json_path = Path(cfg.paths.report_dir) / f"report_{tag}.json"
    csv_path = Path(cfg.paths.report_dir) / f"roc_{tag}.csv"
    report.save(json_path, csv_path)
    gar = {f"{k:g}": f"{v:.4f}" for k, v in report.gar_at_far.items()}
    print(f"wrote {json_path}; EER {report.eer:.4f}; GAR@FAR {gar}")
    print(brute_force_exponent(joint.dh.K).describe())
    return EXIT_OK


def cmd_attack(cfg: RunConfig, args) -> int:
    dataset, _ = load_dataset(_require(_dataset_path(cfg), "bioseal synth"))
    joint = _load_joint(cfg)
    store = TemplateStore(
        _require(Path(cfg.paths.template_store), "bioseal enroll"))
    if len(store) == 0:
        raise MissingArtifactError("template store is empty; run `bioseal enroll`")
    attacker_spec = SyntheticDatasetSpec(
        subjects=cfg.attack.subjects,
        samples_per_subject=cfg.dataset.samples_per_subject,
        d_in=cfg.dataset.d_in,
        intra_sigma=cfg.dataset.intra_sigma,
        inter_min_dist=cfg.dataset.inter_min_dist,
        seed=cfg.attack.seed,
    )
    attacker, _ = generate(attacker_spec, id_prefix="a")
    templates = {sid: store.get(sid) for sid in store.subjects()}
    report = dictionary_attack(joint, templates, attacker, cfg.augment,
                               genuine_dataset=dataset)
    _mkdirs(cfg)
    out = Path(cfg.paths.report_dir) / "attack.json"
    with open(out, "w") as fh:
        json.dump(report.to_json_dict(), fh, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out}: {len(report.impostor_scores)} impostor trials, "
          f"{report.false_accept_count} with score > 0")
    return EXIT_OK


def cmd_bch_check(cfg: RunConfig, args) -> int:
    preset = args.preset
    code = bch.from_preset(preset)
    if preset == "bch15_7":
        per_message = _exhaustive_check(code)
        print(f"{per_message}/121 error patterns per message corrected")
        return EXIT_OK if per_message == 121 else EXIT_RUNTIME
    failures = _sampled_check(code, trials=1000, seed=0)
    print(f"{1000 - failures}/1000 random error patterns corrected")
    return EXIT_OK if failures == 0 else EXIT_RUNTIME


def _exhaustive_check(code) -> int:
    """All 2^k messages x all error patterns of weight <= t; returns the
    per-message corrected count if uniform, else -1."""
    patterns = [np.zeros(code.n, dtype=np.uint8)]
    for i in range(code.n):
        e = np.zeros(code.n, dtype=np.uint8)
        e[i] = 1
        patterns.append(e)
    for i, j in itertools.combinations(range(code.n), 2):
        e = np.zeros(code.n, dtype=np.uint8)
        e[i] = 1
        e[j] = 1
        patterns.append(e)
    per_message = None
    for msg_val in range(1 << code.k):
        message = np.array([(msg_val >> i) & 1 for i in range(code.k)],
                           dtype=np.uint8)
        word = bch.encode(code, message)
        good = sum(
            bool(r.success and np.array_equal(r.message, message))
            for e in patterns if (r := bch.decode(code, word ^ e)) is not None
        )
        if per_message is None:
            per_message = good
        elif per_message != good:
            return -1
    return per_message if per_message is not None else -1


def _sampled_check(code, trials: int, seed: int) -> int:
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(trials):
        message = rng.integers(0, 2, size=code.k).astype(np.uint8)
        word = bch.encode(code, message)
        weight = rng.integers(0, code.t + 1)
        pos = rng.choice(code.n, size=weight, replace=False)
        noisy = word.copy()
        noisy[pos] ^= 1
        r = bch.decode(code, noisy)
        if not (r.success and np.array_equal(r.message, message)):
            failures += 1
    return failures


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bioseal",
        description="Protected biometric templates: train, enroll, evaluate.")
    parser.add_argument("--version", action="version",
                        version=f"bioseal {__version__} "
                                f"(artifact format_version {FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to the JSON run config")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (dotted path, JSON value)")

    common(sub.add_parser("synth", help="generate the synthetic dataset"))
    common(sub.add_parser("train-dh", help="stage 1: train the hashing network"))
    common(sub.add_parser("gen-gt", help="stage 2: decode ground-truth codewords"))
    common(sub.add_parser("train-nnd", help="stage 3a: train the decoder"))
    common(sub.add_parser("finetune", help="stage 3b: joint fine-tuning"))

    p = sub.add_parser("enroll", help="enroll subjects into the template store")
    common(p)
    p.add_argument("--subject", required=True,
                   help="subject id, or 'all' for every dh-train subject")
    p.add_argument("--count", type=int, default=1,
                   help="number of enrollment samples (default 1)")
    p.add_argument("--re-enroll", action="store_true",
                   help="replace an existing template")
    p.add_argument("--salt-hex", help="optional per-subject salt (hex)")

    p = sub.add_parser("auth", help="authenticate a probe against a template")
    common(p)
    p.add_argument("--subject", required=True)
    p.add_argument("--probe-index", type=int, default=0,
                   help="sample index to use as the probe")
    p.add_argument("--threshold", type=float,
                   help="accept threshold (default: config eval.threshold)")

    p = sub.add_parser("eval", help="run the verification benchmark")
    common(p)
    p.add_argument("--mode", choices=["zero-shot", "one-shot", "multi-shot"],
                   help="enrollment mode (default: config eval.mode)")

    common(sub.add_parser("attack", help="dictionary attack with fresh subjects"))

    p = sub.add_parser("bch-check", help="run the decoder correctness oracle")
    common(p)
    p.add_argument("--preset", default="bch15_7", choices=sorted(bch.PRESETS),
                   help="code to check (bch15_7 runs the exhaustive oracle)")
    return parser


COMMANDS = {
    "synth": cmd_synth,
    "train-dh": cmd_train_dh,
    "gen-gt": cmd_gen_gt,
    "train-nnd": cmd_train_nnd,
    "finetune": cmd_finetune,
    "enroll": cmd_enroll,
    "auth": cmd_auth,
    "eval": cmd_eval,
    "attack": cmd_attack,
    "bch-check": cmd_bch_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_cfg(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args)
    except MissingArtifactError as exc:
        print(f"missing prerequisite: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 3
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
