import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fracsig.audio import write_wav
from fracsig.retrieval import (
    ChecksumError,
    CorpusItem,
    FeatureAssembly,
    IndexFormatError,
    build_index,
    evaluate,
    extract_feature,
    ingest_corpus,
    knn_query,
    load_index,
    pca_fit,
    pca_project,
    read_corpus,
    save_index,
)
from helpers import sine


def items(n, **kw):
    return [CorpusItem(f"i{j:02d}", None, **kw) for j in range(n)]


@pytest.fixture(scope="module")
def wav_corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    rows = []
    for j, f in enumerate([300, 310, 2000, 2100]):
        write_wav(d / f"s{j}.wav", sine(f, 1.1, amp=20000))
        rows.append({"id": f"s{j}", "path": f"s{j}.wav", "label": "low" if f < 1000 else "high",
                     "tags": ["Tone", "low" if f < 1000 else "high"]})
    # a duplicate of s0 under another id
    write_wav(d / "dup.wav", sine(300, 1.1, amp=20000))
    rows.append({"id": "dup", "path": "dup.wav", "label": "low", "tags": ["tone"]})
    meta = d / "metadata.jsonl"
    meta.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return meta


# --- assembly and ingest -----------------------------------------------------------

def test_assembly_parse_and_dims():
    a = FeatureAssembly.parse("mfcc13:1,emfd-kde:0.5, mfd-vl")
    assert a.parts == (("mfcc13", 1.0), ("emfd-kde", 0.5), ("mfd-vl", 1.0))
    assert a.total_dim == 13 + 512 + 10
    assert FeatureAssembly.from_dict(a.to_dict()) == a
    with pytest.raises(ValueError):
        FeatureAssembly.parse("mfcc14")
    with pytest.raises(ValueError):
        FeatureAssembly.parse("mfcc13:-1")
    with pytest.raises(ValueError):
        FeatureAssembly(())


def test_extract_feature_normalizes_first():
    s = sine(440, 1.1, amp=1000)
    loud = s.with_samples(s.samples * 30)
    np.testing.assert_allclose(extract_feature(s, "mfcc13").vector(),
                               extract_feature(loud, "mfcc13").vector(), atol=1e-9)
    assert extract_feature(s, "logmel").vector().size == 40


def test_ingest_dims_and_weights(wav_corpus):
    r1 = ingest_corpus(wav_corpus, FeatureAssembly.parse("mfd-vl:1"))
    assert r1.matrix.shape == (5, 10) and not r1.failures
    r2 = ingest_corpus(wav_corpus, FeatureAssembly.parse("mfd-vl:2,mfcc13:0"))
    assert r2.matrix.shape == (5, 23)
    np.testing.assert_array_equal(r2.matrix[:, :10], 2 * r1.matrix)
    assert np.all(r2.matrix[:, 10:] == 0)


def test_ingest_parallel_matches_serial(wav_corpus):
    a = FeatureAssembly.parse("mfcc13")
    np.testing.assert_array_equal(ingest_corpus(wav_corpus, a, jobs=2).matrix,
                                  ingest_corpus(wav_corpus, a).matrix)


def test_ingest_reports_missing_audio(tmp_path):
    write_wav(tmp_path / "ok.wav", sine(440, 1.1))
    meta = tmp_path / "m.jsonl"
    meta.write_text(json.dumps({"id": "ok", "path": "ok.wav", "label": "a"}) + "\n"
                    + json.dumps({"id": "gone", "path": "gone.wav", "label": "a"}) + "\n")
    res = ingest_corpus(meta, FeatureAssembly.parse("mfcc13"))
    assert [it.id for it in res.items] == ["ok"]
    assert set(res.failures) == {"gone"}


@pytest.mark.parametrize("lines", [
    ['{"id": "a", "path": "x.wav", "label": "l"}', '{"id": "a", "path": "y.wav", "label": "l"}'],
    ['{"id": "a"}'],
    ['not json'],
    ['{"id": "a", "path": "x.wav"}'],
])
def test_malformed_metadata(tmp_path, lines):
    meta = tmp_path / "m.jsonl"
    meta.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError):
        read_corpus(meta)


# --- PCA -------------------------------------------------------------------------------

def test_pca_rank_one():
    t = np.linspace(-3, 3, 20)[:, None]
    x = t * np.array([[1.0, 2.0, -2.0]]) + np.array([5.0, 0, 1])
    m = pca_fit(x, "variance", tau=0.99)
    assert m.n_components == 1
    np.testing.assert_allclose(np.abs(m.components[0]), [1 / 3, 2 / 3, 2 / 3], atol=1e-12)
    # sign rule: largest-magnitude coordinate positive
    c = m.components[0]
    assert c[np.argmax(np.abs(c))] > 0


def test_pca_fixed_and_isotropic():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 3))
    m = pca_fit(x, "fixed", n_components=2)
    np.testing.assert_allclose(m.components @ m.components.T, np.eye(2), atol=1e-12)
    # a whitened cloud has exactly equal eigenvalues
    q, _ = np.linalg.qr(rng.normal(size=(200, 10)))
    iso = (q - q.mean(axis=0)) * np.sqrt(199)
    iso = np.linalg.qr(iso)[0] * np.sqrt(199)
    assert pca_fit(iso, "variance", tau=0.98).n_components == 10
    with pytest.raises(ValueError):
        pca_fit(x, "fixed", n_components=4)


def test_pca_zero_variance():
    with pytest.raises(ValueError, match="zero variance"):
        pca_fit(np.ones((4, 3)), "variance")
    with pytest.raises(ValueError):
        pca_fit(np.ones((1, 3)), "variance")


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 12), st.integers(2, 6)), elements=st.floats(-10, 10)))
def test_pca_model_invariants(x):
    if np.ptp(x, axis=0).max() < 1e-3:
        return
    m = pca_fit(x, "variance", tau=0.9)
    np.testing.assert_allclose(m.components @ m.components.T, np.eye(m.n_components), atol=1e-6)
    assert np.all(np.diff(m.explained_ratio) <= 1e-12)
    assert m.explained_ratio.sum() <= 1 + 1e-9
    np.testing.assert_allclose(pca_project(m, m.mean), 0, atol=1e-12)
    p = pca_project(m, x)
    for i in range(len(x)):
        for j in range(i):
            assert np.linalg.norm(p[i] - p[j]) <= np.linalg.norm(x[i] - x[j]) + 1e-9


def test_pca_lossless_reconstruction():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(6, 2)) @ rng.normal(size=(2, 4))
    m = pca_fit(x, "fixed", n_components=2)
    back = pca_project(m, x) @ m.components + m.mean
    np.testing.assert_allclose(back, x, atol=1e-10)
    with pytest.raises(ValueError):
        pca_project(m, np.zeros(3))


def test_pca_fit_subset():
    x = np.vstack([np.eye(3), 100 * np.ones((1, 3))])
    m = pca_fit(x, "fixed", n_components=1, fit_rows=[0, 1, 2])
    np.testing.assert_allclose(m.mean, [1 / 3] * 3)


# --- k-NN -------------------------------------------------------------------------------

def test_knn_matches_hand_distances():
    x = np.array([[0.0, 0], [3, 4], [1, 0]])
    idx = build_index(x, items(3, label="a"), FeatureAssembly(), "identity")
    assert knn_query(idx, "i00", 3) == [("i00", 0.0), ("i02", 1.0), ("i01", 5.0)]
    assert knn_query(idx, "i01", 2, exclude_self=True) == [("i02", np.sqrt(4 + 16)), ("i00", 5.0)]
    with pytest.raises(ValueError):
        knn_query(idx, "i00", 4)
    with pytest.raises(ValueError):
        knn_query(idx, "i00", 3, exclude_self=True)
    with pytest.raises(KeyError):
        knn_query(idx, "nope", 1)


def test_knn_ties_and_self_first():
    x = np.array([[0.0], [0.0], [1.0], [-1.0]])
    its = [CorpusItem(i, None, label="a") for i in ["b", "a", "d", "c"]]
    idx = build_index(x, its, FeatureAssembly(), "identity")
    assert [i for i, _ in knn_query(idx, "b", 4)] == ["b", "a", "c", "d"]
    assert [i for i, _ in knn_query(idx, "a", 4)] == ["a", "b", "c", "d"]


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 15), st.integers(1, 4)), elements=st.floats(-5, 5)))
def test_knn_total_order(x):
    idx = build_index(x, items(len(x), label="a"), FeatureAssembly(), "identity")
    res = knn_query(idx, "i00", len(x))
    d = [v for _, v in res]
    assert d == sorted(d) and res[0] == ("i00", 0.0)
    assert sorted(i for i, _ in res) == idx.ids


def test_identity_pca_gamma_invariance():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(12, 4))
    its = items(12, label="a")
    base = build_index(x, its, FeatureAssembly(), "identity")
    scaled = build_index(3.7 * x, its, FeatureAssembly(), "identity")
    for q in base.ids:
        assert knn_query(base, q, 1, exclude_self=True)[0][0] == knn_query(scaled, q, 1, exclude_self=True)[0][0]


def test_duplicate_audio_distance_zero(wav_corpus):
    a = FeatureAssembly.parse("mfd-vl,mfcc13")
    res = ingest_corpus(wav_corpus, a)
    idx = build_index(res.matrix, res.items, a, "variance", tau=0.99)
    dist = dict(knn_query(idx, "s0", 5))
    assert dist["dup"] == 0.0
    # querying by path goes through extraction and lands on the same point
    by_path = knn_query(idx, str(wav_corpus.parent / "s0.wav"), 2)
    assert {i for i, _ in by_path} == {"s0", "dup"} and by_path[0][1] == 0.0


# --- persistence -----------------------------------------------------------------------

def _index():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(8, 5))
    its = [CorpusItem(f"i{j}", f"/a/{j}.wav", tags=("x",), label="a" if j < 4 else "b") for j in range(8)]
    return build_index(x, its, FeatureAssembly.parse("mfd-vl:2"), "variance", tau=0.9)


def test_save_load_round_trip(tmp_path):
    idx = _index()
    save_index(idx, tmp_path / "a.idx")
    back = load_index(tmp_path / "a.idx")
    np.testing.assert_array_equal(back.vectors, idx.vectors)
    np.testing.assert_array_equal(back.pca.components, idx.pca.components)
    np.testing.assert_array_equal(back.pca.mean, idx.pca.mean)
    assert back.ids == idx.ids and back.assembly == idx.assembly
    assert back.items == idx.items
    for q in idx.ids:
        assert knn_query(back, q, 4) == knn_query(idx, q, 4)
    save_index(back, tmp_path / "b.idx")
    assert (tmp_path / "a.idx").read_bytes() == (tmp_path / "b.idx").read_bytes()


def test_truncated_and_corrupt_index(tmp_path):
    save_index(_index(), tmp_path / "a.idx")
    raw = (tmp_path / "a.idx").read_bytes()
    (tmp_path / "t.idx").write_bytes(raw[:-9])
    with pytest.raises(ChecksumError):
        load_index(tmp_path / "t.idx")
    (tmp_path / "h.idx").write_bytes(raw[:40])
    with pytest.raises(ChecksumError):
        load_index(tmp_path / "h.idx")
    flipped = bytearray(raw)
    flipped[-1] ^= 1
    (tmp_path / "f.idx").write_bytes(bytes(flipped))
    with pytest.raises(ChecksumError):
        load_index(tmp_path / "f.idx")


def test_version_mismatch(tmp_path):
    save_index(_index(), tmp_path / "a.idx")
    raw = (tmp_path / "a.idx").read_bytes()
    raw = raw.replace(b'"format_version": 1', b'"format_version": 9', 1)
    (tmp_path / "v.idx").write_bytes(raw)
    with pytest.raises(IndexFormatError, match="expected 1"):
        load_index(tmp_path / "v.idx")


# --- evaluation ------------------------------------------------------------------------

def test_evaluate_identical_tags():
    x = np.arange(10.0)[:, None]
    idx = build_index(x, items(10, tags=("Birds", "rain")), FeatureAssembly(), "identity")
    rep = evaluate(idx, "si", k_list=(1, 3))
    assert rep.summary == {1: 1.0, 3: 1.0}


def test_evaluate_separable_precision(tmp_path):
    x = np.vstack([np.zeros((5, 2)), 10 + np.zeros((5, 2))]) + np.arange(10)[:, None] * 0.01
    its = [CorpusItem(f"i{j}", None, label="a" if j < 5 else "b") for j in range(10)]
    rep = evaluate(build_index(x, its, FeatureAssembly(), "identity"), "precision", (1, 3))
    assert rep.summary[1] == 1.0 and rep.summary[3] == 1.0
    assert all(q != nb for q, _, nb, _, _ in rep.rows)
    rep.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "query_id,rank,neighbor_id,distance,si_or_match"
    assert len(lines) == 1 + 10 * 3


def test_evaluate_errors():
    one = build_index(np.zeros((1, 2)), items(1, label="a"), FeatureAssembly(), "identity")
    with pytest.raises(ValueError):
        evaluate(one, "precision", (1,))
    two = build_index(np.eye(2), items(2, label="a"), FeatureAssembly(), "identity")
    with pytest.raises(ValueError, match="missing annotations"):
        evaluate(two, "si", (1,))
