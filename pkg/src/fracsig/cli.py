"""Batch command line: ``fracsig synth|extract|index|query|eval|plot``.

Exit status is 0 on success, 2 for an invalid configuration and 1 for a
runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import audio, signature, synth
from .audio import load_wav, normalize_peak
from .fractal import mfdvl_radii
from .metrics import dr_mfcc13, dr_mfdvl, load_stopwords
from .retrieval import (
    FEATURE_KINDS,
    FeatureAssembly,
    FeatureParams,
    build_index,
    evaluate,
    extract_feature,
    ingest_corpus,
    knn_query,
    load_index,
    save_index,
)

log = logging.getLogger("fracsig")


class ConfigError(Exception):
    """Invalid run configuration; reported with exit status 2."""


def _num(x) -> str:
    return repr(float(x))


def _positive(name, value):
    if value is not None and not value > 0:
        raise ConfigError(f"--{name} must be positive, got {value}")


def _params(args) -> FeatureParams:
    _positive("alpha", args.alpha)
    _positive("window-ms", args.window_ms)
    _positive("hop-ms", args.hop_ms)
    if args.hop_ms > args.window_ms:
        raise ConfigError("--hop-ms must not exceed --window-ms")
    return FeatureParams(alpha=args.alpha, window_ms=args.window_ms, hop_ms=args.hop_ms,
                         n_mels=args.n_mels)


def _parse_pca(text: str) -> dict:
    kind, _, value = text.partition(":")
    try:
        if kind == "identity":
            return {"pca_mode": "identity"}
        if kind == "var":
            tau = float(value or 0.99)
            if not 0 < tau <= 1:
                raise ValueError
            return {"pca_mode": "variance", "tau": tau}
        if kind == "dim":
            n = int(value)
            if n < 1:
                raise ValueError
            return {"pca_mode": "fixed", "n_components": n}
    except ValueError:
        pass
    raise ConfigError(f"--pca must be identity, var:TAU or dim:N, got {text!r}")


def _k_list(text: str) -> list[int]:
    try:
        ks = [int(k) for k in text.split(",") if k.strip()]
    except ValueError:
        raise ConfigError(f"--k must be a comma-separated list of integers, got {text!r}") from None
    if not ks or min(ks) < 1:
        raise ConfigError("--k values must be >= 1")
    return ks


def _writer(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


# --- subcommands -------------------------------------------------------------

def cmd_synth(args) -> int:
    if args.duration <= 0:
        raise ConfigError("--duration must be positive")
    if args.set:
        specs = synth.test_set_specs(args.set, args.duration, args.seed)
    else:
        params = {}
        for item in args.param or []:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--param expects NAME=VALUE, got {item!r}")
            try:
                params[key] = float(value)
            except ValueError:
                raise ConfigError(f"--param {key}: not a number: {value!r}") from None
        try:
            specs = [synth.SynthSpec(args.kind, params, args.duration, args.seed)]
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prefix = args.set or args.kind
    with open(out / "metadata.jsonl", "w", encoding="utf-8") as meta:
        for n, spec in enumerate(specs):
            item_id = f"{prefix}_{n:02d}"
            sig = synth.generate(spec)
            audio.write_wav(out / f"{item_id}.wav", sig)
            label = synth.spec_label(spec)
            meta.write(json.dumps({
                "id": item_id, "path": f"{item_id}.wav", "label": label, "kind": spec.kind,
                "parameters": spec.parameters, "duration": spec.duration, "seed": spec.seed,
            }, sort_keys=True) + "\n")
    print(f"wrote {len(specs)} sound(s) to {out}")
    return 0


def cmd_extract(args) -> int:
    params = _params(args)
    out = Path(args.out)
    single = len(args.inputs) == 1 and out.suffix == ".json"
    if not single:
        out.mkdir(parents=True, exist_ok=True)
    for src in args.inputs:
        sig = load_wav(src, args.mode)
        record = extract_feature(sig, args.feature, params)
        target = out if single else out / f"{Path(src).stem}.{args.feature}.json"
        target.write_bytes(signature.serialize_signature(record))
    return 0


def cmd_index_build(args) -> int:
    params = _params(args)
    try:
        assembly = FeatureAssembly.parse(args.assembly, params)
    except ValueError as exc:
        raise ConfigError(f"--assembly: {exc}") from exc
    pca = _parse_pca(args.pca)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    fit_ids = None
    if args.fit_ids:
        fit_ids = [ln.strip() for ln in Path(args.fit_ids).read_text().splitlines() if ln.strip()]
    result = ingest_corpus(args.metadata, assembly, jobs=args.jobs, load_mode=args.mode)
    if result.failures:
        manifest = Path(str(args.out) + ".failures.jsonl")
        with open(manifest, "w", encoding="utf-8") as fh:
            for item_id, err in sorted(result.failures.items()):
                fh.write(json.dumps({"id": item_id, "error": err}) + "\n")
        log.warning("%d item(s) failed; see %s", len(result.failures), manifest)
    if not result.items:
        raise RuntimeError("no corpus item could be ingested")
    if fit_ids is not None:
        known = {it.id for it in result.items}
        fit_ids = [i for i in fit_ids if i in known]
    index = build_index(result.matrix, result.items, assembly, fit_ids=fit_ids, **pca)
    save_index(index, args.out)
    print(f"indexed {len(index)} item(s), {index.pca.n_components} dims -> {args.out}")
    return 0


def cmd_query(args) -> int:
    if args.k < 1:
        raise ConfigError("--k must be >= 1")
    index = load_index(args.index)
    key = args.id if args.id is not None else args.audio
    result = knn_query(index, key, args.k, exclude_self=args.exclude_self)
    fh, close = _writer(args.out)
    try:
        w = csv.writer(fh)
        w.writerow(["rank", "neighbor_id", "distance"])
        for rank, (nb, dist) in enumerate(result, 1):
            w.writerow([rank, nb, _num(dist)])
    finally:
        if close:
            fh.close()
    return 0


def cmd_eval(args) -> int:
    ks = _k_list(args.k)
    stopwords = load_stopwords(args.stopwords) if args.stopwords else None
    index = load_index(args.index)
    report = evaluate(index, args.metric, ks, stopwords=stopwords)
    report.write_csv(args.out)
    if args.summary:
        report.write_summary_csv(args.summary)
    for k, v in report.summary.items():
        name = "SI(top %d)" % k if args.metric == "si" else "Precision@%d" % k
        print(f"{name}: {v:.6f}")
    return 0


def _load_normalized(path, mode):
    return normalize_peak(load_wav(path, mode))


def cmd_plot(args) -> int:
    fh, close = _writer(args.out)
    w = csv.writer(fh)
    try:
        if args.what == "mfdvl":
            w.writerow(["sound", "x", "radius", "side_length_s", "value"])
            for src in args.inputs:
                sig = _load_normalized(src, args.mode)
                values = signature.mfdvl(sig).values
                radii = mfdvl_radii(sig.sample_rate).radii
                for x, v in enumerate(values):
                    w.writerow([Path(src).name, x, int(radii[x]),
                                _num(2 * radii[x] / sig.sample_rate), _num(v)])
        elif args.what == "emfd":
            _positive("alpha", args.alpha)
            w.writerow(["sound", "rbin", "dbin", "dbin_mid", "value"])
            for src in args.inputs:
                sig = _load_normalized(src, args.mode)
                sg = signature.emfd_kde(sig, args.alpha) if args.kde else signature.emfd(sig)
                for rb in range(signature.N_RBINS):
                    for db in range(signature.N_DBINS):
                        w.writerow([Path(src).name, rb + 1, db + 1,
                                    _num(signature.DBIN_MIDPOINTS[db]), _num(sg.values[rb, db])])
        elif args.what == "mfcc13":
            w.writerow(["sound", "coefficient", "value"])
            params = FeatureParams()
            for src in args.inputs:
                vec = extract_feature(load_wav(src, args.mode), "mfcc13", params).vector()
                for i, v in enumerate(vec):
                    w.writerow([Path(src).name, i, _num(v)])
        elif args.what == "snr":
            if args.inputs:
                raise ConfigError("plot snr takes no input files")
            w.writerow(["beta", "snr_db", "dr_mfdvl", "dr_mfcc13"])
            ref = synth.generate(synth.SynthSpec("snr_mix", {"beta": 1.0}, args.duration, args.seed))
            ref_vl = extract_feature(ref, "mfd-vl").vector()
            ref_mc = extract_feature(ref, "mfcc13").vector()
            for spec in synth.test_set_specs("SS_t5", args.duration, args.seed):
                mix = synth.generate(spec)
                beta = spec.parameters["beta"]
                w.writerow([_num(beta), _num(20 * np.log10(beta / (1 - beta))),
                            _num(dr_mfdvl(ref_vl, extract_feature(mix, "mfd-vl").vector())),
                            _num(dr_mfcc13(ref_mc, extract_feature(mix, "mfcc13").vector()))])
    finally:
        if close:
            fh.close()
    return 0


# --- parser ------------------------------------------------------------------

def _feature_flags(p):
    p.add_argument("--alpha", type=float, default=32.0, help="EMFD-KDE smoothing constant")
    p.add_argument("--window-ms", type=float, default=50.0)
    p.add_argument("--hop-ms", type=float, default=50.0)
    p.add_argument("--n-mels", type=int, default=40)


def _mode_flag(p):
    p.add_argument("--mode", choices=("strict", "convert"), default="convert",
                   help="WAV loading mode")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracsig", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic test sounds")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--set", choices=synth.TEST_SETS)
    g.add_argument("--kind", choices=("beat_sine", "pulse_sine", "cricket", "cricket2",
                                      "pink_noise", "snr_mix"))
    p.add_argument("--param", action="append", metavar="NAME=VALUE")
    p.add_argument("--duration", type=float, default=synth.DEFAULT_DURATION)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="compute signature files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--feature", choices=FEATURE_KINDS, required=True)
    p.add_argument("--out", required=True, help="directory, or a .json file for one input")
    _feature_flags(p)
    _mode_flag(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("index", help="search index management")
    isub = p.add_subparsers(dest="index_command", required=True)
    b = isub.add_parser("build")
    b.add_argument("--metadata", required=True, help="corpus JSON Lines file")
    b.add_argument("--assembly", default="mfd-vl:1", help="e.g. mfcc13:1,emfd-kde:0.5")
    b.add_argument("--pca", default="var:0.99", help="identity | var:TAU | dim:N")
    b.add_argument("--fit-ids", help="file with one id per line to fit PCA on")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", required=True)
    _feature_flags(b)
    _mode_flag(b)
    b.set_defaults(func=cmd_index_build)

    p = sub.add_parser("query", help="k-NN query against an index")
    p.add_argument("--index", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--id")
    g.add_argument("--audio")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--exclude-self", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="evaluate retrieval quality")
    p.add_argument("metric", choices=("si", "precision"))
    p.add_argument("--index", required=True)
    p.add_argument("--k", default="1,3,10")
    p.add_argument("--stopwords", help="stopword file (default: $FRACSIG_STOPWORDS or bundled)")
    p.add_argument("--out", required=True, help="per-query CSV")
    p.add_argument("--summary", help="aggregate CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="emit figure data as CSV")
    p.add_argument("what", choices=("mfdvl", "emfd", "mfcc13", "snr"))
    p.add_argument("inputs", nargs="*")
    p.add_argument("--kde", action="store_true", help="EMFD-KDE instead of the histogram")
    p.add_argument("--alpha", type=float, default=32.0)
    p.add_argument("--duration", type=float, default=synth.DEFAULT_DURATION)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    _mode_flag(p)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "plot" and args.what != "snr" and not args.inputs:
        print("fracsig: error: plot needs at least one input file", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"fracsig: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        if args.verbose:
            log.exception("run failed")
        print(f"fracsig: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
