"""Command-line entry point wiring all modules.

Every numeric CSV cell is written with full double precision and newline
line endings, so identical invocations produce byte-identical files. No
command uses randomness; synthetic corpora are derived from an explicit
seed flag.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import corpora, experiments
from .classifier import LabeledCorpus, Metric, knn_predict
from .contrapuntal import VariationKind, apply_variation
from .ingest import NoteSequence, extract_voice, parse_standard_midi
from .segmentation import (
    Equalization,
    constant_boundaries,
    cut_segments,
    lbdm_boundaries,
    local_maxima_boundaries,
    zero_crossing_boundaries,
)
from .signals import RestPolicy, resample_to_length, sample_pitch_signal
from .wavelet import WaveletScale, haar_coefficients, scalogram

_BOOLEAN_KEYS = {"scalogram", "unsegmented", "grid", "zero-rest-renormalize", "synthetic"}

_REST = {"represent": RestPolicy.REPRESENT_ZERO, "remove": RestPolicy.REMOVE}
_METRIC = {"euclidean": Metric.EUCLIDEAN, "cityblock": Metric.CITYBLOCK}
_EQUALIZE = {"pad": Equalization.ZERO_PAD, "interp": Equalization.INTERPOLATE}
_REP = {"wr": experiments.Representation.WAVELET, "vr": experiments.Representation.PITCH}
_SEG = {method.value: method for method in experiments.SegMethod}
_CP = {"nc": experiments.ContrapuntalMode.NC, "cp": experiments.ContrapuntalMode.CP}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return str(value) if value.denominator == 1 else repr(float(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))  # shortest round-trip repr, full precision
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


class _Output:
    def __init__(self, path: str):
        self.path = path

    def __enter__(self):
        if self.path == "-":
            self.handle = sys.stdout
        else:
            self.handle = open(self.path, "w", newline="")
        return csv.writer(self.handle, lineterminator="\n")

    def __exit__(self, *exc):
        if self.handle is not sys.stdout:
            self.handle.close()
        return False


def _write_rows(path: str, rows) -> None:
    with _Output(path) as writer:
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _load_sequence(args) -> NoteSequence:
    data = Path(args.input).read_bytes()
    score = parse_standard_midi(data)
    for message in score.dropped:
        print(f"melowave: warning: {message}", file=sys.stderr)
    selector = args.voice or f"track:{score.track_numbers()[0]}"
    return extract_voice(score, selector)


def _signal(args):
    seq = _load_sequence(args)
    policy = _REST[args.rests]
    if getattr(args, "length", None):
        return resample_to_length(seq, args.length, policy)
    return sample_pitch_signal(seq, Fraction(args.rate), policy)


# --------------------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    seq = _load_sequence(args)
    rows = [("onset_qn", "duration_qn", "pitch_midi")]
    rows += [
        (float(ev.onset_qn), float(ev.duration_qn), ev.pitch_midi) for ev in seq.events
    ]
    _write_rows(args.output, rows)
    return 0


def cmd_signal(args) -> int:
    signal = _signal(args)
    rows = [("index", "value")] + [(i, v) for i, v in enumerate(signal.samples)]
    _write_rows(args.output, rows)
    return 0


def cmd_cwt(args) -> int:
    signal = _signal(args)
    if args.scalogram:
        if not args.scales:
            raise ValueError("--scalogram requires --scales S1,S2,...")
        scales = [WaveletScale.from_qn(Fraction(s), signal.rate) for s in args.scales.split(",")]
        matrix = scalogram(signal, scales)
        rows = [["scale_qn"] + [f"u{i}" for i in range(matrix.shape[1])]]
        rows += [[scale.scale_qn] + list(row) for scale, row in zip(scales, matrix)]
    else:
        if args.scale_qn is None:
            raise ValueError("either --scale-qn or --scalogram is required")
        scale = WaveletScale.from_qn(Fraction(args.scale_qn), signal.rate)
        coeffs = haar_coefficients(signal, scale)
        rows = [("shift", "coefficient")] + [(u, w) for u, w in enumerate(coeffs.values)]
    _write_rows(args.output, rows)
    return 0


def cmd_segment(args) -> int:
    seq = _load_sequence(args)
    policy = _REST[args.rests]
    signal = sample_pitch_signal(seq, Fraction(args.rate), policy)
    method = args.method
    if method in ("ws-zc", "ws-max"):
        if args.scale_qn is None:
            raise ValueError(f"--method {method} requires --scale-qn")
        scale = WaveletScale.from_qn(Fraction(args.scale_qn), signal.rate)
        coeffs = haar_coefficients(signal, scale)
        finder = zero_crossing_boundaries if method == "ws-zc" else local_maxima_boundaries
        boundaries = finder(coeffs)
    elif method == "const":
        if args.step_qn is None:
            raise ValueError("--method const requires --step-qn")
        boundaries = constant_boundaries(len(signal), signal.rate, Fraction(args.step_qn))
    elif method == "lbdm":
        if args.threshold is None:
            raise ValueError("--method lbdm requires --threshold")
        boundaries = lbdm_boundaries(seq, args.threshold, signal.rate)
    else:
        raise ValueError(f"unknown segmentation method {method!r}")
    rows = [("boundary_sample_index",)] + [(b,) for b in boundaries]
    _write_rows(args.output, rows)
    if args.segments_dir:
        directory = Path(args.segments_dir)
        directory.mkdir(parents=True, exist_ok=True)
        for n, segment in enumerate(cut_segments(signal.samples, boundaries)):
            seg_rows = [("index", "value")] + [
                (i, v) for i, v in enumerate(segment.values)
            ]
            _write_rows(str(directory / f"segment_{n:03d}.csv"), seg_rows)
    return 0


def cmd_variations(args) -> int:
    signal = _signal(args)
    kinds = list(VariationKind)
    columns = [apply_variation(signal.samples, kind) for kind in kinds]
    rows = [["index", "prime", "inversion", "retrograde", "retrograde_inversion"]]
    rows += [[i, *(col[i] for col in columns)] for i in range(len(signal))]
    _write_rows(args.output, rows)
    return 0


def _read_corpus_csv(path: str) -> LabeledCorpus:
    with open(path, newline="") as handle:
        raw = [row for row in csv.reader(handle) if row]
    if not raw:
        raise ValueError(f"corpus CSV {path} is empty")
    label_col = 0
    if "label" in raw[0]:
        label_col = raw[0].index("label")
        raw = raw[1:]
    labels, vectors = [], []
    for row in raw:
        labels.append(row[label_col])
        vectors.append([float(c) for i, c in enumerate(row) if i != label_col])
    return LabeledCorpus(np.array(vectors), tuple(labels))


def _read_vectors_csv(path: str) -> np.ndarray:
    with open(path, newline="") as handle:
        raw = [row for row in csv.reader(handle) if row]
    if not raw:
        raise ValueError(f"query CSV {path} is empty")
    try:
        float(raw[0][0])
    except ValueError:
        raw = raw[1:]  # header row
    return np.array([[float(c) for c in row] for row in raw])


def cmd_classify(args) -> int:
    corpus = _read_corpus_csv(args.corpus)
    queries = _read_vectors_csv(args.queries)
    metric = _METRIC[args.metric]
    rows = [("query_index", "predicted_label", "nearest_distance")]
    for i, query in enumerate(queries):
        prediction = knn_predict(query, corpus, args.k, metric)
        rows.append((i, prediction.label, prediction.nearest_distance))
    _write_rows(args.output, rows)
    return 0


def _write_traces(path: str, traces) -> None:
    rows = [("item_id", "true", "predicted", "nearest_distance")]
    rows += [(t.item_id, t.true_label, t.predicted_label, t.nearest_distance) for t in traces]
    _write_rows(path, rows)


def cmd_exp_bach(args) -> int:
    works = corpora.load_bach_corpus(args.corpus, args.upper, args.lower)
    seg = _SEG[args.seg]
    config = experiments.ExperimentConfig(
        representation=_REP[args.rep],
        wavelet_rep_scale_qn=Fraction(args.rep_scale_qn),
        segmentation=seg,
        seg_scale_qn=Fraction(args.seg_scale_qn) if seg in (
            experiments.SegMethod.WS_ZERO_CROSS, experiments.SegMethod.WS_LOCAL_MAX
        ) else None,
        step_qn=Fraction(args.step_qn) if seg is experiments.SegMethod.CONSTANT else None,
        lbdm_threshold=args.threshold if seg is experiments.SegMethod.LBDM else None,
        rest_policy=_REST[args.rests],
        rate=Fraction(args.rate),
        equalization=_EQUALIZE[args.equalize],
        metric=_METRIC[args.metric],
        classifier_prefix_qn=args.prefix_qn,
        contrapuntal=_CP[args.contrapuntal],
        zero_rest_renormalize=args.zero_rest_renormalize,
    )
    report = experiments.run_bach_experiment(works, config)
    rows = [("section_index", "accuracy")]
    rows += [(i, acc) for i, acc in enumerate(report.section_accuracies)]
    rows += [("mean", report.mean_accuracy), ("std", report.std_accuracy)]
    _write_rows(args.output, rows)
    if args.trace:
        _write_traces(args.trace, report.traces)
    return 0


def _folk_corpus(args) -> corpora.FolkCorpus:
    if args.synthetic_seed is not None:
        return corpora.synthetic_tune_families(
            args.synthetic_seed, n_families=args.synthetic_families
        )
    if not args.corpus or not args.labels:
        raise ValueError("exp folk needs --corpus DIR with --labels CSV, or --synthetic-seed N")
    return corpora.load_folk_corpus(args.corpus, args.labels)


def _cell_rows(reports) -> list[tuple]:
    rows = [("rep", "seg", "param", "equalize", "metric", "k", "accuracy")]
    for r in reports:
        accuracy = f"ERROR({r.error})" if r.error else r.accuracy
        rows.append((
            r.representation.value,
            r.segmentation.value,
            r.param,
            r.equalization.value if r.equalization else "",
            r.metric.value,
            r.k,
            accuracy,
        ))
    return rows


def _parse_list(text: str, caster):
    return tuple(caster(part) for part in text.split(",") if part)


def cmd_exp_folk(args) -> int:
    corpus = _folk_corpus(args)
    jobs = args.jobs or int(os.environ.get("MELOWAVE_JOBS", "1"))
    rest_policy = _REST[args.rests]
    if args.grid:
        base = experiments.ExperimentConfig(
            rest_policy=rest_policy,
            rate=Fraction(args.rate),
            wavelet_rep_scale_qn=Fraction(args.rep_scale_qn),
        )
        reports = experiments.grid_search(
            corpus,
            base,
            scales=_parse_list(args.scales, Fraction),
            thresholds=_parse_list(args.thresholds, float),
            ks=_parse_list(args.ks, int),
            jobs=jobs,
            record_traces=bool(args.trace),
        )
    elif args.unsegmented:
        # the wavelet variant sweeps its scale: one report row per support
        if _REP[args.rep] is experiments.Representation.WAVELET:
            supports = _parse_list(args.rep_support or "2,4,8,16,32,64,128,256", int)
        else:
            supports = (None,)
        reports = []
        for support in supports:
            config = experiments.ExperimentConfig(
                representation=_REP[args.rep],
                segmentation=experiments.SegMethod.NONE,
                seg_scale_qn=None,
                rest_policy=rest_policy,
                fixed_length=args.length,
                wavelet_rep_support=support,
                metric=_METRIC[args.metric],
                zero_rest_renormalize=args.zero_rest_renormalize,
            )
            try:
                reports.append(experiments.run_folk_unsegmented(corpus, config))
            except ValueError as exc:
                reports.append(experiments.FolkCellReport(
                    config.representation, experiments.SegMethod.NONE, support,
                    None, config.metric, 1, None, str(exc),
                ))
    else:
        seg = _SEG[args.seg]
        if seg not in (experiments.SegMethod.WS_LOCAL_MAX, experiments.SegMethod.LBDM):
            raise ValueError("segmented folk runs use --seg ws-max or --seg lbdm")
        config = experiments.ExperimentConfig(
            representation=_REP[args.rep],
            wavelet_rep_scale_qn=Fraction(args.rep_scale_qn),
            segmentation=seg,
            seg_scale_qn=Fraction(args.seg_scale_qn) if seg is experiments.SegMethod.WS_LOCAL_MAX else None,
            lbdm_threshold=args.threshold if seg is experiments.SegMethod.LBDM else None,
            rest_policy=rest_policy,
            rate=Fraction(args.rate),
            equalization=_EQUALIZE[args.equalize],
            metric=_METRIC[args.metric],
            k=args.k,
            zero_rest_renormalize=args.zero_rest_renormalize,
        )
        reports = [experiments.run_folk_segmented(corpus, config)]
    _write_rows(args.output, _cell_rows(reports))
    if args.trace:
        if args.grid:
            rows = [("rep", "seg", "param", "equalize", "metric", "k",
                     "item_id", "true", "predicted", "nearest_distance")]
            for r in reports:
                for t in r.traces:
                    rows.append((
                        r.representation.value, r.segmentation.value, r.param,
                        r.equalization.value if r.equalization else "", r.metric.value,
                        r.k, t.item_id, t.true_label, t.predicted_label, t.nearest_distance,
                    ))
            _write_rows(args.trace, rows)
        else:
            _write_traces(args.trace, reports[0].traces)
    return 0


# --------------------------------------------------------------------------- parser


def _add_output(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-o", "--output", default="-", help="output CSV path (default: stdout)")
    parser.add_argument("--config", default=None,
                        help="flat key=value file of defaults; CLI flags override it")


def _add_signal_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("input", help="input MIDI file")
    parser.add_argument("--voice", default=None,
                        help="voice selector: N, track:N or channel:N (default: first note track)")
    parser.add_argument("--rate", default="8", help="samples per quarter note (default 8)")
    parser.add_argument("--rests", choices=("represent", "remove"), default="represent",
                        help="rests become 0 or take the neighboring pitch")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="melowave",
        description="Haar-wavelet melodic filtering, segmentation and classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a MIDI file to a note table")
    p.add_argument("input", help="input MIDI file")
    p.add_argument("--voice", default=None, help="voice selector: N, track:N or channel:N")
    _add_output(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("signal", help="sample a voice to a pitch signal")
    _add_signal_flags(p)
    p.add_argument("--length", type=int, default=None,
                   help="resample to exactly N samples instead of using --rate")
    _add_output(p)
    p.set_defaults(func=cmd_signal)

    p = sub.add_parser("cwt", help="Haar coefficients at one scale, or a scalogram")
    _add_signal_flags(p)
    p.add_argument("--scale-qn", default=None, help="wavelet scale in quarter notes")
    p.add_argument("--scalogram", action="store_true", help="emit a scale-by-shift matrix")
    p.add_argument("--scales", default=None, help="comma list of scales for --scalogram")
    _add_output(p)
    p.set_defaults(func=cmd_cwt)

    p = sub.add_parser("segment", help="boundary detection on a voice")
    _add_signal_flags(p)
    p.add_argument("--method", choices=("ws-zc", "ws-max", "const", "lbdm"), required=True)
    p.add_argument("--scale-qn", default=None, help="wavelet scale for ws-zc/ws-max")
    p.add_argument("--step-qn", default=None, help="grid step for const")
    p.add_argument("--threshold", type=float, default=None, help="LBDM threshold in [0,1]")
    p.add_argument("--segments-dir", default=None,
                   help="also write one CSV per segment into this directory")
    _add_output(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("variations", help="contrapuntal variants of a pitch signal")
    _add_signal_flags(p)
    _add_output(p)
    p.set_defaults(func=cmd_variations)

    p = sub.add_parser("classify", help="kNN over CSV corpora")
    p.add_argument("--corpus", required=True, help="corpus CSV with a label column")
    p.add_argument("--queries", required=True, help="query vectors CSV")
    p.add_argument("--k", type=int, default=1, help="neighbors, 1..5")
    p.add_argument("--metric", choices=("euclidean", "cityblock"), default="cityblock")
    _add_output(p)
    p.set_defaults(func=cmd_classify)

    exp = sub.add_parser("exp", help="full experiment harnesses")
    exp_sub = exp.add_subparsers(dest="experiment", required=True)

    p = exp_sub.add_parser("bach", help="section classification of two-part works")
    p.add_argument("--corpus", required=True, help="directory of two-part MIDI works")
    p.add_argument("--upper", default=None, help="voice selector for the upper part")
    p.add_argument("--lower", default=None, help="voice selector for the lower part")
    p.add_argument("--prefix-qn", type=int, choices=(4, 8, 16), default=16,
                   help="quarter notes of exposition used for the classifier")
    p.add_argument("--rep", choices=("wr", "vr"), default="wr",
                   help="wavelet or normalized pitch signal representation")
    p.add_argument("--rep-scale-qn", default="1", help="wavelet representation scale")
    p.add_argument("--seg", choices=("ws-zc", "lbdm", "const", "none"), default="ws-zc")
    p.add_argument("--seg-scale-qn", default="1", help="zero-crossing segmentation scale")
    p.add_argument("--step-qn", default="1", help="constant segmentation step")
    p.add_argument("--threshold", type=float, default=0.2, help="LBDM threshold")
    p.add_argument("--metric", choices=("euclidean", "cityblock"), default="cityblock")
    p.add_argument("--equalize", choices=("pad", "interp"), default="pad")
    p.add_argument("--rests", choices=("represent", "remove"), default="represent")
    p.add_argument("--contrapuntal", choices=("nc", "cp"), default="nc",
                   help="cp adds inversion/retrograde/retrograde-inversion classes")
    p.add_argument("--zero-rest-renormalize", action="store_true",
                   help="normalize over sounding samples only, re-zeroing rests")
    p.add_argument("--rate", default="8")
    p.add_argument("--trace", default=None, help="write per-item prediction CSV here")
    _add_output(p)
    p.set_defaults(func=cmd_exp_bach)

    p = exp_sub.add_parser("folk", help="tune-family classification")
    _add_folk_flags(p)
    p.set_defaults(func=cmd_exp_folk)

    p = sub.add_parser("grid", help="shortcut for: exp folk --grid")
    _add_folk_flags(p)
    p.set_defaults(func=cmd_exp_folk, grid=True)

    return parser


def _add_folk_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", default=None, help="directory of folk tune MIDI files")
    p.add_argument("--labels", default=None, help="manifest CSV: filename,family")
    p.add_argument("--synthetic-seed", type=int, default=None,
                   help="use the built-in synthetic tune-family corpus with this seed")
    p.add_argument("--synthetic-families", type=int, default=26,
                   help="family count for the synthetic corpus (default 26)")
    p.add_argument("--unsegmented", action="store_true",
                   help="whole melodies resampled to --length, 1-NN leave-one-out")
    p.add_argument("--grid", action="store_true",
                   help="sweep representations x segmentations x equalizations x metrics x k")
    p.add_argument("--rep", choices=("wr", "vr"), default="wr")
    p.add_argument("--rep-scale-qn", default="1",
                   help="wavelet representation scale (segmented runs)")
    p.add_argument("--rep-support", default=None,
                   help="wavelet scale(s) in samples for unsegmented fixed-length "
                        "signals, comma list (default: dyadic sweep 2..256)")
    p.add_argument("--seg", choices=("ws-max", "lbdm"), default="ws-max")
    p.add_argument("--seg-scale-qn", default="1", help="local-maxima segmentation scale")
    p.add_argument("--threshold", type=float, default=0.4, help="LBDM threshold")
    p.add_argument("--length", type=int, default=1024,
                   help="fixed signal length for --unsegmented (default 2^10)")
    p.add_argument("--k", type=int, default=1, help="neighbors, 1..5")
    p.add_argument("--metric", choices=("euclidean", "cityblock"), default="cityblock")
    p.add_argument("--equalize", choices=("pad", "interp"), default="pad")
    p.add_argument("--rests", choices=("represent", "remove"), default="remove")
    p.add_argument("--zero-rest-renormalize", action="store_true")
    p.add_argument("--rate", default="8")
    p.add_argument("--scales", default="1,2,4,8,16,32,64,128",
                   help="comma list of wavelet scales for --grid")
    p.add_argument("--thresholds", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8",
                   help="comma list of LBDM thresholds for --grid")
    p.add_argument("--ks", default="1,2,3,4,5", help="comma list of k values for --grid")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel workers for --grid (default: $MELOWAVE_JOBS or 1)")
    p.add_argument("--trace", default=None, help="write per-item prediction CSV here")
    _add_output(p)


def _expand_config_file(argv: list[str]) -> list[str]:
    """Insert flags from a --config file before the user's flags so the
    command line overrides the file."""
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return argv
    argv = list(argv)
    path = None
    for i, arg in enumerate(argv):
        if arg == "--config":
            if i + 1 >= len(argv):
                raise ValueError("--config needs a file path")
            path = argv[i + 1]
            del argv[i : i + 2]
            break
        if arg.startswith("--config="):
            path = arg.split("=", 1)[1]
            del argv[i]
            break
    flags: list[str] = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key = key.strip().replace("_", "-")
        value = value.strip()
        if key in _BOOLEAN_KEYS:
            if value.lower() in ("1", "true", "yes", "on"):
                flags.append(f"--{key}")
            continue
        flags.extend((f"--{key}", value))
    # keep the subcommand tokens first, then file flags, then CLI flags
    head = 0
    while head < len(argv) and not argv[head].startswith("-"):
        head += 1
        if head >= 2:
            break
    return argv[:head] + flags + argv[head:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _expand_config_file(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"melowave: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
