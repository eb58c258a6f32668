import numpy as np
import pytest

from bioseal.synth import (AugmentConfig, SyntheticDataset,
                           SyntheticDatasetSpec, augment, augment_count,
                           generate, load_dataset, save_dataset,
                           split_subjects)


def test_generate_deterministic():
    spec = SyntheticDatasetSpec(subjects=8, samples_per_subject=5, seed=3)
    ds1, sp1 = generate(spec)
    ds2, sp2 = generate(spec)
    assert np.array_equal(ds1.prototypes, ds2.prototypes)
    for sid in ds1.subject_ids:
        assert np.array_equal(ds1.samples[sid], ds2.samples[sid])
    assert sp1 == sp2


def test_generate_zero_intra_sigma_collapses_samples():
    spec = SyntheticDatasetSpec(subjects=5, samples_per_subject=4,
                                intra_sigma=0.0, seed=1)
    ds, _ = generate(spec)
    for sid in ds.subject_ids:
        assert np.allclose(ds.samples[sid], ds.samples[sid][0])


def test_generate_enforces_prototype_separation():
    spec = SyntheticDatasetSpec(subjects=20, d_in=32, inter_min_dist=1.4,
                                feature_scale=1.0, seed=5)
    ds, _ = generate(spec)
    diffs = ds.prototypes[:, None, :] - ds.prototypes[None, :, :]
    dist = np.sqrt((diffs ** 2).sum(axis=-1))
    dist[np.diag_indices_from(dist)] = np.inf
    assert dist.min() >= 1.4


def test_generate_infeasible_separation_fails():
    spec = SyntheticDatasetSpec(subjects=50, d_in=2, inter_min_dist=100.0,
                                seed=0)
    with pytest.raises(RuntimeError):
        generate(spec, max_retries=5)


def test_splits_proportions_and_disjointness():
    ids = [f"s{i:02d}" for i in range(20)]
    sp = split_subjects(ids)
    assert len(sp.dh_train) == 14
    assert len(sp.nnd_train) == 4
    assert len(sp.zero_shot) == 2
    groups = set(sp.dh_train) | set(sp.nnd_train) | set(sp.zero_shot)
    assert groups == set(ids)
    assert len(sp.dh_train) + len(sp.nnd_train) + len(sp.zero_shot) == 20


def test_splits_small_counts():
    sp = split_subjects([f"s{i}" for i in range(3)])
    assert len(sp.dh_train) >= 1 and len(sp.nnd_train) >= 1
    assert len(sp.zero_shot) >= 1
    with pytest.raises(ValueError):
        split_subjects(["a", "b"])


def test_augment_count_paper_configuration():
    assert augment_count(AugmentConfig(m=224, n=221)) == 80  # 5 x 16
    assert augment_count(AugmentConfig(m=5, n=5)) == 5       # one crop per variant
    assert augment_count(AugmentConfig(m=4, n=3, scales=(), flip=False)) == 4
    assert augment_count(AugmentConfig(m=6, n=4, scales=(0.8,), flip=False)) == 9


def test_augment_invalid_crop():
    with pytest.raises(ValueError):
        AugmentConfig(m=3, n=4)


def test_augment_shapes_and_determinism():
    cfg = AugmentConfig(m=4, n=3, sigma=0.5)
    x = np.linspace(-1, 1, 24)
    a1 = augment(x, cfg)
    a2 = augment(x, cfg)
    assert a1.shape == (augment_count(cfg), 24)
    assert np.array_equal(a1, a2)


def test_augment_noiseless_is_identity():
    cfg = AugmentConfig(m=4, n=3, sigma=0.0)
    x = np.linspace(-1, 1, 16)
    views = augment(x, cfg)
    assert np.allclose(views, x)


def test_augment_offsets_shared_across_samples():
    cfg = AugmentConfig(m=4, n=3, sigma=1.0)
    x1 = np.zeros(16)
    x2 = np.ones(16)
    d1 = augment(x1, cfg) - x1
    d2 = augment(x2, cfg) - x2
    assert np.allclose(d1, d2)


def test_augment_offsets_live_in_distortion_subspace():
    cfg = AugmentConfig(m=4, n=3, sigma=1.0, distortion_rank=4)
    deltas = augment(np.zeros(32), cfg)
    rank = np.linalg.matrix_rank(deltas, tol=1e-9)
    assert rank <= 4


def test_augment_strength_ordering():
    cfg = AugmentConfig(m=3, n=3, sigma=1.0)   # single center crop per variant
    deltas = augment(np.zeros(16), cfg)
    norms = np.linalg.norm(deltas, axis=1)
    # variants: flip, scale 0.6, 0.7, 0.8, 0.9 -> severities .25, .4, .3, .2, .1
    assert norms[1] > norms[2] > norms[3] > norms[4]
    assert norms[4] < norms[0] < norms[2]


def test_dataset_json_roundtrip(tmp_path):
    spec = SyntheticDatasetSpec(subjects=6, samples_per_subject=3, seed=9)
    ds, sp = generate(spec)
    path = tmp_path / "dataset.json"
    save_dataset(path, ds, sp)
    ds2, sp2 = load_dataset(path)
    assert ds2.spec == spec
    assert sp2 == sp
    assert np.array_equal(ds2.prototypes, ds.prototypes)
    for sid in ds.subject_ids:
        assert np.array_equal(ds2.samples[sid], ds.samples[sid])
