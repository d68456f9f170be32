import math

import numpy as np
import pytest

import speechstyle as ss


def test_version_and_constants():
    assert ss.__version__ == "0.3.0"
    assert ss.SAMPLE_RATE == 16000
    assert len(ss.handcrafted_feature_names()) == ss.HANDCRAFTED_DIMS == 115


def test_prior_bias_matches_log_ratio():
    assert ss.prior_bias(700, 1230) == pytest.approx(math.log(700 / 1230), abs=1e-15)


def test_auc_and_f1():
    y = np.array([1, 1, 0, 0])
    assert ss.roc_auc(y, np.array([0.9, 0.8, 0.2, 0.1])) == 1.0
    assert ss.roc_auc(y, np.array([0.5, 0.5, 0.5, 0.5])) == 0.5
    scripted, spontaneous = ss.f1_per_class(y, np.array([0.9, 0.4, 0.2, 0.1]))
    assert scripted == pytest.approx(2 / 3)
    assert spontaneous == pytest.approx(0.8)
    with pytest.raises(ValueError):
        ss.roc_auc(np.array([1, 1]), np.array([0.1, 0.2]))


def test_aggregate():
    assert ss.aggregate(np.array([0.1, 0.9, 0.3]), "median") == pytest.approx(0.3)
    assert ss.aggregate(np.array([0.1, 0.9, 0.3]), "mean") == pytest.approx(13 / 30)


def test_f0_on_sine():
    t = np.arange(960) / 16000.0
    f0, voicing = ss.estimate_f0(np.sin(2 * np.pi * 200.0 * t).astype(np.float32))
    assert abs(f0 - 200.0) / 200.0 < 0.01
    assert voicing > 0.5


def test_class_score_summaries():
    scores = np.array([[0.2, 0.9, 0.1], [0.4, 0.7, 0.8]], dtype=np.float32)
    s = ss.class_score_summary(scores)
    assert s.shape == (6,)
    np.testing.assert_allclose(s[:3], scores.mean(axis=0), rtol=1e-6)
    counts = ss.class_score_top_k_counts(scores, 2)
    assert counts.sum() == 4


def test_feature_file_round_trip(tmp_path):
    m = np.random.default_rng(0).random((5, 7), dtype=np.float32)
    ss.write_feature_file(tmp_path / "m.ssf", m, "yamnet-scores")
    back, schema = ss.read_feature_file(tmp_path / "m.ssf")
    assert schema == "yamnet-scores"
    assert np.array_equal(back, m)


def test_language_groups_and_folds():
    assert ss.group_language("hindi") == "indo-aryan"
    assert ss.group_language("catalan") is None
    records = [{"episode_id": f"e{i}", "label": "scripted" if i % 2 else "spontaneous"} for i in range(10)]
    folds = ss.stratified_kfold(records, 5, 1)
    assert set(folds) == {r["episode_id"] for r in records}
    assert sorted(folds.values()) == sorted(list(range(5)) * 2)


def test_synth_and_handcrafted(tmp_path):
    audio, silence = ss.synth_episode("scripted", 3, 60.0)
    assert audio.shape == (60 * 16000,)
    assert 0.05 <= silence <= 0.15
    snippets = ss.chunk(audio)
    assert len(snippets) == 2
    feats = ss.extract_handcrafted(snippets[0])
    assert feats.shape == (115,)
    assert np.isfinite(feats).all()
    ss.write_wav(tmp_path / "a.wav", audio)
    assert np.allclose(ss.load_audio(tmp_path / "a.wav"), audio, atol=1e-4)
    kinds = {k for _, _, k in ss.speech_segments(snippets[0])}
    assert "speech" in kinds
