"""Weighted feature assembly, PCA reduction and exhaustive k-NN search.

Corpus metadata is JSON Lines, one object per item::

    {"id": "a1", "path": "sounds/a1.wav", "tags": ["birds", "forest"], "label": "Bird"}

Relative paths resolve against the metadata file's directory.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import baseline, signature
from .audio import Signal, load_wav, normalize_peak
from .metrics import default_stopwords, jaccard_si, normalize_tags, precision_at_k

__all__ = [
    "FEATURE_KINDS",
    "FeatureParams",
    "FeatureAssembly",
    "CorpusItem",
    "IngestResult",
    "PcaModel",
    "SearchIndex",
    "IndexFormatError",
    "ChecksumError",
    "extract_feature",
    "feature_dim",
    "assemble",
    "read_corpus",
    "ingest_corpus",
    "pca_fit",
    "pca_project",
    "build_index",
    "knn_query",
    "save_index",
    "load_index",
    "EvaluationReport",
    "evaluate",
]

log = logging.getLogger(__name__)

FEATURE_KINDS = ("emfd", "emfd-kde", "mfd-vl", "mfcc13", "mfcc39", "logmel")
INDEX_MAGIC = "fracsig-index"
INDEX_VERSION = 1


class IndexFormatError(ValueError):
    pass


class ChecksumError(IndexFormatError):
    pass


@dataclass(frozen=True)
class FeatureParams:
    alpha: float = 32.0
    window_ms: float = 50.0
    hop_ms: float = 50.0
    n_mels: int = 40
    fft_size: int | None = None

    def frame_spec(self) -> baseline.FrameSpec:
        return baseline.FrameSpec(self.window_ms, self.hop_ms, self.fft_size, self.n_mels)


@dataclass(frozen=True)
class FeatureAssembly:
    parts: tuple = (("mfd-vl", 1.0),)
    params: FeatureParams = field(default_factory=FeatureParams)

    def __post_init__(self):
        parts = tuple((str(k), float(w)) for k, w in self.parts)
        if not parts:
            raise ValueError("assembly needs at least one part")
        for kind, w in parts:
            if kind not in FEATURE_KINDS:
                raise ValueError(f"unknown feature kind {kind!r}; expected one of {FEATURE_KINDS}")
            if not np.isfinite(w) or w < 0:
                raise ValueError(f"weight for {kind} must be finite and >= 0, got {w}")
        object.__setattr__(self, "parts", parts)

    @property
    def total_dim(self) -> int:
        return sum(feature_dim(k, self.params) for k, _ in self.parts)

    def to_dict(self) -> dict:
        return {"parts": [list(p) for p in self.parts], "params": asdict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureAssembly":
        return cls(tuple(tuple(p) for p in d["parts"]), FeatureParams(**d.get("params", {})))

    @classmethod
    def parse(cls, text: str, params: FeatureParams | None = None) -> "FeatureAssembly":
        """Parse ``"mfcc13:1,emfd-kde:0.5"`` (weight defaults to 1)."""
        parts = []
        for chunk in text.split(","):
            chunk = chunk.strip()
            if not chunk:
                continue
            kind, _, w = chunk.partition(":")
            parts.append((kind.strip(), float(w) if w else 1.0))
        return cls(tuple(parts), params or FeatureParams())


def feature_dim(kind: str, params: FeatureParams = FeatureParams()) -> int:
    return {"emfd": 512, "emfd-kde": 512, "mfd-vl": 10, "mfcc13": 13, "mfcc39": 39,
            "logmel": params.n_mels}[kind]


def extract_feature(signal: Signal, kind: str, params: FeatureParams = FeatureParams()):
    """Peak-normalize ``signal`` to -0.1 dBFS, then compute one feature record."""
    sig = normalize_peak(signal)
    if kind == "emfd":
        return signature.emfd(sig, params.window_ms)
    if kind == "emfd-kde":
        return signature.emfd_kde(sig, params.alpha, params.window_ms)
    if kind == "mfd-vl":
        return signature.mfdvl(sig)
    spec = params.frame_spec()
    fn = {"mfcc13": baseline.mfcc13, "mfcc39": baseline.mfcc39, "logmel": baseline.log_mel}
    if kind not in fn:
        raise ValueError(f"unknown feature kind {kind!r}")
    return signature.FeatureVector(kind, fn[kind](sig, spec), asdict(params))


def assemble(signal: Signal, assembly: FeatureAssembly) -> np.ndarray:
    """Concatenate ``weight * feature`` blocks in declared order."""
    blocks = [w * extract_feature(signal, kind, assembly.params).vector()
              for kind, w in assembly.parts]
    return np.concatenate(blocks)


# --- corpus ------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusItem:
    id: str
    path: str | None = None
    tags: tuple = ()
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags or ()))
        if not self.tags and self.label is None:
            raise ValueError(f"item {self.id!r} needs tags or a label")

    def to_dict(self) -> dict:
        d = {"id": self.id, "path": self.path}
        if self.tags:
            d["tags"] = list(self.tags)
        if self.label is not None:
            d["label"] = self.label
        return d


def read_corpus(metadata_path) -> list[CorpusItem]:
    metadata_path = Path(metadata_path)
    base = metadata_path.parent
    items, seen = [], set()
    with open(metadata_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                item_id = str(obj["id"])
                path = obj["path"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{metadata_path}:{lineno}: malformed metadata ({exc})") from exc
            if item_id in seen:
                raise ValueError(f"{metadata_path}:{lineno}: duplicate id {item_id!r}")
            seen.add(item_id)
            full = Path(path) if Path(path).is_absolute() else base / path
            try:
                items.append(CorpusItem(item_id, str(full), obj.get("tags") or (), obj.get("label")))
            except ValueError as exc:
                raise ValueError(f"{metadata_path}:{lineno}: {exc}") from exc
    return items


@dataclass
class IngestResult:
    matrix: np.ndarray
    items: list
    failures: dict  # id -> error message


def _extract_item(args):
    path, assembly, mode = args
    try:
        return assemble(load_wav(path, mode), assembly), None
    except Exception as exc:  # reported per item; the run continues
        return None, f"{type(exc).__name__}: {exc}"


def ingest_corpus(metadata_path, assembly: FeatureAssembly, jobs: int = 1,
                  load_mode: str = "convert") -> IngestResult:
    items = read_corpus(metadata_path)
    tasks = [(it.path, assembly, load_mode) for it in items]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_item, tasks))
    else:
        results = [_extract_item(t) for t in tasks]
    rows, kept, failures = [], [], {}
    for item, (vec, err) in zip(items, results):
        if err is not None:
            log.warning("skipping %s: %s", item.id, err)
            failures[item.id] = err
        else:
            rows.append(vec)
            kept.append(item)
    matrix = np.vstack(rows) if rows else np.empty((0, assembly.total_dim))
    return IngestResult(matrix, kept, failures)


# --- PCA ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (L2, total_dim), orthonormal rows
    explained_ratio: np.ndarray
    mode: str  # "variance", "fixed" or "identity"
    tau: float | None = None

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def pca_fit(matrix, mode: str = "variance", *, tau: float = 0.99,
            n_components: int | None = None, fit_rows=None) -> PcaModel:
    """Covariance-eigendecomposition PCA on mean-centred rows.

    ``mode="variance"`` keeps the smallest number of components whose
    cumulative explained ratio reaches ``tau``; ``mode="fixed"`` keeps
    ``n_components``; ``mode="identity"`` skips reduction.  Component signs
    are fixed so that each row's largest-magnitude coordinate is positive.
    """
    x = np.asarray(matrix, dtype=np.float64)
    if fit_rows is not None:
        x = x[np.asarray(fit_rows)]
    d = x.shape[1]
    if mode == "identity":
        return PcaModel(np.zeros(d), np.eye(d), np.zeros(0), "identity")
    if x.shape[0] < 2:
        raise ValueError("PCA needs at least 2 rows in the fit subset")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (x.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order].T
    total = evals.sum()
    if mode == "variance":
        if total <= 0:
            raise ValueError("zero variance: all fit rows are identical")
        ratio = evals / total
        keep = int(np.searchsorted(np.cumsum(ratio), tau - 1e-12) + 1)
        keep = min(keep, d)
    elif mode == "fixed":
        if n_components is None or not 1 <= n_components <= min(x.shape[0] - 1, d):
            raise ValueError(
                f"fixed-dim PCA needs 1 <= L2 <= min(rows-1, dim) = {min(x.shape[0] - 1, d)}"
            )
        ratio = evals / total if total > 0 else np.zeros_like(evals)
        keep = int(n_components)
    else:
        raise ValueError(f"unknown PCA mode {mode!r}")
    comps = evecs[:keep].copy()
    lead = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(keep), lead])
    comps *= np.where(signs == 0, 1.0, signs)[:, None]
    return PcaModel(mean, comps, ratio[:keep], mode, tau if mode == "variance" else None)


def pca_project(model: PcaModel, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != model.mean.size:
        raise ValueError(f"dimension mismatch: got {v.shape[-1]}, model expects {model.mean.size}")
    return (v - model.mean) @ model.components.T


# --- index -------------------------------------------------------------------

@dataclass(eq=False)
class SearchIndex:
    pca: PcaModel
    ids: list
    vectors: np.ndarray  # (n, L2), row i belongs to ids[i]
    items: dict
    assembly: FeatureAssembly
    format_version: int = INDEX_VERSION

    def __post_init__(self):
        if self.vectors.shape != (len(self.ids), self.pca.n_components):
            raise ValueError("vector matrix does not match ids / PCA dimension")
        if not set(self.ids) <= set(self.items):
            raise ValueError("every indexed id needs an item record")
        self._row = {i: n for n, i in enumerate(self.ids)}

    def vector(self, item_id: str) -> np.ndarray:
        try:
            return self.vectors[self._row[item_id]]
        except KeyError:
            raise KeyError(f"unknown id {item_id!r}") from None

    def __len__(self):
        return len(self.ids)


def build_index(matrix, items, assembly: FeatureAssembly, pca_mode: str = "variance", *,
                tau: float = 0.99, n_components: int | None = None, fit_ids=None) -> SearchIndex:
    ids = [it.id for it in items]
    fit_rows = None
    if fit_ids is not None:
        pos = {i: n for n, i in enumerate(ids)}
        fit_rows = [pos[i] for i in fit_ids]
    model = pca_fit(matrix, pca_mode, tau=tau, n_components=n_components, fit_rows=fit_rows)
    # row-by-row so that a later single-vector query projects bit-identically
    rows = [pca_project(model, row) for row in np.asarray(matrix, dtype=np.float64)]
    vectors = np.vstack(rows) if rows else np.empty((0, model.n_components))
    return SearchIndex(model, ids, vectors, {it.id: it for it in items}, assembly)


def knn_query(index: SearchIndex, key, k: int, exclude_self: bool = False,
              load_mode: str = "convert") -> list[tuple[str, float]]:
    """Nearest neighbours by Euclidean distance in the reduced space.

    ``key`` is an indexed id, an audio path or a :class:`Signal`.  Ties are
    ordered by id; a query id always ranks first among its zero-distance ties.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    self_id = None
    if isinstance(key, Signal):
        q = pca_project(index.pca, assemble(key, index.assembly))
    elif isinstance(key, str) and key in index._row:
        self_id = key
        q = index.vector(key)
    elif isinstance(key, (str, Path)) and Path(key).exists():
        q = pca_project(index.pca, assemble(load_wav(key, load_mode), index.assembly))
    else:
        raise KeyError(f"unknown id or missing audio file: {key!r}")
    available = len(index) - (1 if exclude_self and self_id is not None else 0)
    if k > available:
        raise ValueError(f"k={k} exceeds the {available} searchable items")
    dist = np.sqrt(np.sum((index.vectors - q) ** 2, axis=1))
    not_self = np.array([i != self_id for i in index.ids])
    order = sorted(range(len(index)), key=lambda n: (dist[n], not_self[n], index.ids[n]))
    if exclude_self and self_id is not None:
        order = [n for n in order if index.ids[n] != self_id]
    return [(index.ids[n], float(dist[n])) for n in order[:k]]


def _arrays(index: SearchIndex) -> dict:
    return {"mean": index.pca.mean, "components": index.pca.components,
            "explained_ratio": index.pca.explained_ratio, "vectors": index.vectors}


def save_index(index: SearchIndex, path) -> None:
    """Write a JSON header line followed by a raw little-endian float64 payload."""
    arrays, specs, chunks, offset = _arrays(index), [], [], 0
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        specs.append({"name": name, "dtype": "<f8", "shape": list(arr.shape), "offset": offset})
        chunks.append(data)
        offset += len(data)
    payload = b"".join(chunks)
    header = {
        "format": INDEX_MAGIC,
        "format_version": INDEX_VERSION,
        "dims": {"total_dim": int(index.pca.mean.size), "reduced_dim": index.pca.n_components,
                 "items": len(index)},
        "pca": {"mode": index.pca.mode, "tau": index.pca.tau},
        "assembly": index.assembly.to_dict(),
        "ids": list(index.ids),
        "items": [index.items[i].to_dict() for i in sorted(index.items)],
        "arrays": specs,
        "payload_bytes": len(payload),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(payload)


def load_index(path) -> SearchIndex:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ChecksumError(f"{path}: truncated index (no complete header)")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ChecksumError(f"{path}: corrupt index header ({exc})") from exc
    if header.get("format") != INDEX_MAGIC:
        raise IndexFormatError(f"{path}: not a fracsig index")
    if header.get("format_version") != INDEX_VERSION:
        raise IndexFormatError(
            f"{path}: unsupported format_version {header.get('format_version')!r}; "
            f"expected {INDEX_VERSION}"
        )
    payload = raw[nl + 1:]
    if (len(payload) != header["payload_bytes"]
            or hashlib.sha256(payload).hexdigest() != header["payload_sha256"]):
        raise ChecksumError(f"{path}: payload checksum mismatch (truncated or corrupted)")
    arrays = {}
    for spec in header["arrays"]:
        n = int(np.prod(spec["shape"])) if spec["shape"] else 1
        arr = np.frombuffer(payload, dtype=spec["dtype"], count=n, offset=spec["offset"])
        arrays[spec["name"]] = arr.reshape(spec["shape"]).astype(np.float64)
    pca = PcaModel(arrays["mean"], arrays["components"], arrays["explained_ratio"],
                   header["pca"]["mode"], header["pca"]["tau"])
    items = {}
    for d in header["items"]:
        items[d["id"]] = CorpusItem(d["id"], d.get("path"), d.get("tags", ()), d.get("label"))
    return SearchIndex(pca, header["ids"], arrays["vectors"], items,
                       FeatureAssembly.from_dict(header["assembly"]))


# --- evaluation --------------------------------------------------------------

CSV_HEADER = ("query_id", "rank", "neighbor_id", "distance", "si_or_match")


@dataclass
class EvaluationReport:
    mode: str
    rows: list  # (query_id, rank, neighbor_id, distance, value)
    summary: dict  # k -> mean over queries

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for q, rank, nb, dist, val in self.rows:
                w.writerow([q, rank, nb, repr(float(dist)), repr(float(val))])

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "si_top_n" if self.mode == "si" else "precision_at_k"])
            for k, v in self.summary.items():
                w.writerow([k, repr(float(v))])


def _si(a, b) -> float:
    # two empty tag sets carry no shared evidence
    return jaccard_si(a, b) if (a or b) else 0.0


def evaluate(index: SearchIndex, mode: str = "precision", k_list=(1, 3, 10),
             stopwords=None) -> EvaluationReport:
    """Use every item as a query (itself excluded) and score its result list.

    ``mode="si"``: SI of top n is the mean tag Jaccard similarity over the
    first n results.  ``mode="precision"``: Precision@k against the label.
    """
    if mode not in ("si", "precision"):
        raise ValueError(f"mode must be 'si' or 'precision', got {mode!r}")
    if len(index) < 2:
        raise ValueError("evaluation needs at least two items (no non-self neighbours)")
    k_list = sorted(set(int(k) for k in k_list))
    k_max = max(k_list)
    if k_max > len(index) - 1:
        raise ValueError(f"k={k_max} exceeds the {len(index) - 1} non-self neighbours")
    if mode == "si":
        if stopwords is None:
            stopwords = default_stopwords()
        missing = [i for i in index.ids if not index.items[i].tags]
        tagsets = {i: normalize_tags(index.items[i].tags, stopwords) for i in index.ids}
    else:
        missing = [i for i in index.ids if index.items[i].label is None]
    if missing:
        raise ValueError(f"missing annotations for {len(missing)} item(s), e.g. {missing[0]!r}")

    rows, per_k = [], {k: [] for k in k_list}
    for q in index.ids:
        result = knn_query(index, q, k_max, exclude_self=True)
        if mode == "si":
            vals = [_si(tagsets[q], tagsets[nb]) for nb, _ in result]
            for k in k_list:
                per_k[k].append(float(np.mean(vals[:k])))
        else:
            key = index.items[q].label
            labels = [index.items[nb].label for nb, _ in result]
            vals = [1.0 if lab == key else 0.0 for lab in labels]
            for k in k_list:
                per_k[k].append(precision_at_k(labels, key, k))
        rows.extend((q, r + 1, nb, d, v) for r, ((nb, d), v) in enumerate(zip(result, vals)))
    summary = {k: float(np.mean(v)) for k, v in per_k.items()}
    return EvaluationReport(mode, rows, summary)
