"""End-to-end classification experiments.

Two protocols are reproduced: identifying the parent work of sections of
two-part inventions from exposition material, and classifying folk tunes
into tune families with leave-one-out cross validation, including the full
grid search over representations, segmentations, equalizations, metrics
and neighbor counts.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Hashable, Sequence

import numpy as np

from .classifier import (
    LabeledCorpus,
    Metric,
    _decide,
    _lex_less,
    pairwise_distances,
    predict_from_distances,
    vote,
)
from .contrapuntal import VariationKind, apply_variation, transform_sequence
from .corpora import BachWork, FolkCorpus
from .ingest import NoteSequence
from .segmentation import (
    BoundarySet,
    Equalization,
    Segment,
    SegmentMatrix,
    constant_boundaries,
    cut_segments,
    equalize_interpolate,
    equalize_zero_pad,
    lbdm_boundaries,
    local_maxima_boundaries,
    zero_crossing_boundaries,
)
from .signals import (
    RestPolicy,
    mean_normalize,
    mean_normalize_nonrest,
    sample_pitch_signal,
    resample_to_length,
)
from .wavelet import WaveletScale, haar_filter


class ConfigError(ValueError):
    """An experiment configuration combines parameters that cannot run."""


class Representation(Enum):
    PITCH = "vr"
    WAVELET = "wr"


class SegMethod(Enum):
    NONE = "none"
    WS_ZERO_CROSS = "ws-zc"
    WS_LOCAL_MAX = "ws-max"
    CONSTANT = "const"
    LBDM = "lbdm"


class ContrapuntalMode(Enum):
    NC = "nc"
    CP = "cp"


DYADIC_SCALES_QN: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64, 128)
LBDM_THRESHOLDS: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
ALL_KS: tuple[int, ...] = (1, 2, 3, 4, 5)
EXPOSITION_QN = 16

_WS_METHODS = (SegMethod.WS_ZERO_CROSS, SegMethod.WS_LOCAL_MAX)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameterization of one experiment cell."""

    representation: Representation = Representation.WAVELET
    wavelet_rep_scale_qn: Fraction = Fraction(1)
    wavelet_rep_support: int | None = None  # scale in samples, for fixed-length signals
    segmentation: SegMethod = SegMethod.WS_ZERO_CROSS
    seg_scale_qn: Fraction | None = Fraction(1)
    step_qn: Fraction | None = None
    lbdm_threshold: float | None = None
    rest_policy: RestPolicy = RestPolicy.REPRESENT_ZERO
    rate: Fraction = Fraction(8)
    fixed_length: int | None = None
    equalization: Equalization = Equalization.ZERO_PAD
    metric: Metric = Metric.CITYBLOCK
    k: int = 1
    classifier_prefix_qn: int = 16
    contrapuntal: ContrapuntalMode = ContrapuntalMode.NC
    zero_rest_renormalize: bool = False

    def __post_init__(self) -> None:
        for name in ("wavelet_rep_scale_qn", "seg_scale_qn", "step_qn", "rate"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, Fraction(value))
        if self.rate <= 0:
            raise ConfigError("rate must be positive")
        if not 1 <= self.k <= 5:
            raise ConfigError(f"k must be in 1..5, got {self.k}")
        if self.classifier_prefix_qn not in (4, 8, 16):
            raise ConfigError(f"classifier prefix must be 4, 8 or 16 qn, got {self.classifier_prefix_qn}")
        if self.fixed_length is not None and self.fixed_length < 1:
            raise ConfigError("fixed length must be positive")
        self._check_segmentation_params()

    def _check_segmentation_params(self) -> None:
        seg = self.segmentation
        wants = {
            "seg_scale_qn": seg in _WS_METHODS,
            "step_qn": seg is SegMethod.CONSTANT,
            "lbdm_threshold": seg is SegMethod.LBDM,
        }
        for name, wanted in wants.items():
            value = getattr(self, name)
            if wanted and value is None:
                raise ConfigError(f"segmentation {seg.value} requires {name}")
            if not wanted and value is not None:
                raise ConfigError(f"{name} is not valid with segmentation {seg.value}")
        if seg is SegMethod.LBDM and not 0 <= self.lbdm_threshold <= 1:
            raise ConfigError(f"LBDM threshold must be in [0, 1], got {self.lbdm_threshold}")


@dataclass(frozen=True)
class TraceRow:
    item_id: str
    true_label: str
    predicted_label: str
    nearest_distance: float


@dataclass(frozen=True)
class BachReport:
    """Per-section accuracies over the works plus their mean and sample
    standard deviation."""

    section_accuracies: tuple[float, ...]
    mean_accuracy: float
    std_accuracy: float
    config: ExperimentConfig
    traces: tuple[TraceRow, ...] = ()


@dataclass(frozen=True)
class FolkCellReport:
    """Accuracy (or the error that prevented it) for one parameter cell."""

    representation: Representation
    segmentation: SegMethod
    param: object
    equalization: Equalization | None
    metric: Metric
    k: int
    accuracy: float | None
    error: str | None = None
    traces: tuple[TraceRow, ...] = ()


def _normalizer(config: ExperimentConfig):
    if config.zero_rest_renormalize and config.rest_policy is RestPolicy.REPRESENT_ZERO:
        return mean_normalize_nonrest
    return mean_normalize


def _boundaries(
    pitch_span: np.ndarray,
    span_seq: NoteSequence | None,
    config: ExperimentConfig,
) -> BoundarySet:
    length = pitch_span.size
    seg = config.segmentation
    if seg is SegMethod.NONE:
        return BoundarySet((0, length), length)
    if seg in _WS_METHODS:
        support = WaveletScale.from_qn(config.seg_scale_qn, config.rate).support_samples
        coeffs = haar_filter(pitch_span, support)
        if seg is SegMethod.WS_ZERO_CROSS:
            return zero_crossing_boundaries(coeffs)
        return local_maxima_boundaries(coeffs)
    if seg is SegMethod.CONSTANT:
        return constant_boundaries(length, config.rate, config.step_qn)
    if span_seq is None:
        raise ValueError("LBDM segmentation needs the note stream of the span")
    return lbdm_boundaries(span_seq, config.lbdm_threshold, config.rate)


def _span_segments(
    pitch_span: np.ndarray,
    span_seq: NoteSequence | None,
    config: ExperimentConfig,
    source_id: Hashable,
    label: Hashable,
) -> list[Segment]:
    """Represent one span per the config, segment it and cut the segments.

    Pitch-signal segments are mean-normalized after the cut; wavelet
    segments are transposition-invariant already.
    """
    if config.representation is Representation.WAVELET:
        support = WaveletScale.from_qn(config.wavelet_rep_scale_qn, config.rate).support_samples
        rep = haar_filter(pitch_span, support)
    else:
        rep = np.asarray(pitch_span, dtype=float)
    segments = cut_segments(rep, _boundaries(pitch_span, span_seq, config), source_id, label)
    if config.representation is Representation.PITCH:
        norm = _normalizer(config)
        segments = [
            Segment(norm(s.values), s.start_index, s.source_id, s.label) for s in segments
        ]
    return segments


def _equalize(
    segments: Sequence[Segment], equalization: Equalization, target_len: int | None = None
) -> SegmentMatrix:
    if equalization is Equalization.ZERO_PAD:
        return equalize_zero_pad(segments, target_len)
    return equalize_interpolate(segments, target_len)


# ---------------------------------------------------------------------------
# Experiment 1: sections of two-part inventions


def split_section_spans(
    length_samples: int, rate: int | Fraction, exposition_qn: int = EXPOSITION_QN
) -> list[tuple[int, int]]:
    """Divide the samples after the exposition into three contiguous spans
    of equal size; the remainder goes to the final span."""
    exposition_end = math.ceil(exposition_qn * Fraction(rate))
    remaining = length_samples - exposition_end
    if remaining < 3:
        raise ValueError(
            f"work must extend beyond the {exposition_qn} qn exposition "
            f"to be divided into sections"
        )
    size = remaining // 3
    cuts = [exposition_end, exposition_end + size, exposition_end + 2 * size, length_samples]
    return list(zip(cuts, cuts[1:]))


def split_bach_sections(
    work: BachWork, rate: int | Fraction = 8, exposition_qn: int = EXPOSITION_QN
) -> list[tuple[int, int]]:
    """Section sample spans of a work; both parts share one sampled length."""
    total = max(work.upper.end_qn, work.lower.end_qn)
    return split_section_spans(math.ceil(total * Fraction(rate)), rate, exposition_qn)


def _work_signals(work: BachWork, config: ExperimentConfig):
    total = max(work.upper.end_qn, work.lower.end_qn)
    if total < EXPOSITION_QN:
        raise ValueError(f"{work.work_id}: work is shorter than the {EXPOSITION_QN} qn exposition")
    parts = []
    for name, seq in (("upper", work.upper), ("lower", work.lower)):
        extended = seq.with_total_duration(total)
        parts.append((name, sample_pitch_signal(extended, config.rate, config.rest_policy), extended))
    return parts


def _variant_inputs(
    span: np.ndarray,
    span_seq: NoteSequence | None,
    variation: VariationKind,
) -> tuple[np.ndarray, NoteSequence | None]:
    if variation is VariationKind.PRIME:
        return span, span_seq
    values = apply_variation(span, variation)
    if span_seq is not None and span_seq.events:
        span_seq = transform_sequence(span_seq, variation)
    return values, span_seq


def classifier_segments(works: Sequence[BachWork], config: ExperimentConfig) -> list[Segment]:
    """Segments of the exposition prefixes of every part, with contrapuntal
    variants added as extra classes when configured."""
    prefix_samples = math.ceil(config.classifier_prefix_qn * config.rate)
    variations = (
        (VariationKind.PRIME,)
        if config.contrapuntal is ContrapuntalMode.NC
        else tuple(VariationKind)
    )
    needs_notes = config.segmentation is SegMethod.LBDM
    segments: list[Segment] = []
    for work in works:
        for part, signal, seq in _work_signals(work, config):
            span = signal.samples[:prefix_samples]
            span_seq = seq.slice(0, config.classifier_prefix_qn) if needs_notes else None
            for variation in variations:
                values, vseq = _variant_inputs(span, span_seq, variation)
                label = (
                    work.work_id
                    if config.contrapuntal is ContrapuntalMode.NC
                    else (work.work_id, variation.value)
                )
                source = (work.work_id, part, "exposition", variation.value)
                segments.extend(_span_segments(values, vseq, config, source, label))
    return segments


def _test_segment_items(
    works: Sequence[BachWork], config: ExperimentConfig
) -> list[tuple[str, int, list[Segment]]]:
    needs_notes = config.segmentation is SegMethod.LBDM
    items = []
    for work in works:
        parts = _work_signals(work, config)
        spans = split_section_spans(len(parts[0][1].samples), config.rate)
        for j, (a, b) in enumerate(spans):
            segments: list[Segment] = []
            for part, signal, seq in parts:
                span = signal.samples[a:b]
                span_seq = (
                    seq.slice(Fraction(a) / config.rate, Fraction(b) / config.rate)
                    if needs_notes
                    else None
                )
                source = (work.work_id, part, f"section{j}")
                segments.extend(_span_segments(span, span_seq, config, source, work.work_id))
            items.append((work.work_id, j, segments))
    return items


def build_bach_classifier(
    works: Sequence[BachWork], config: ExperimentConfig, target_len: int | None = None
) -> LabeledCorpus:
    matrix = _equalize(classifier_segments(works, config), config.equalization, target_len)
    return LabeledCorpus.from_matrix(matrix)


def _base_work(label: Hashable) -> str:
    return label[0] if isinstance(label, tuple) else label


def run_bach_experiment(works: Sequence[BachWork], config: ExperimentConfig) -> BachReport:
    """Classify every section of every work against the exposition corpus
    and report per-section-index accuracies."""
    if config.k != 1:
        raise ConfigError("the invention experiment uses 1-NN")
    cls_segments = classifier_segments(works, config)
    test_items = _test_segment_items(works, config)
    target = max(
        max(len(s) for s in cls_segments),
        max(len(s) for _, _, segs in test_items for s in segs),
    )
    corpus = LabeledCorpus.from_matrix(_equalize(cls_segments, config.equalization, target))
    n_sections = max(j for _, j, _ in test_items) + 1
    correct = [0] * n_sections
    traces = []
    for work_id, section, segments in test_items:
        matrix = _equalize(segments, config.equalization, target)
        distances = pairwise_distances(matrix.rows, corpus.rows, config.metric)
        predictions = [
            predict_from_distances(distances[i], corpus.labels, config.k)
            for i in range(distances.shape[0])
        ]
        predicted = _base_work(vote(predictions))
        if predicted == work_id:
            correct[section] += 1
        traces.append(
            TraceRow(
                f"{work_id}/s{section}",
                work_id,
                predicted,
                min(p.nearest_distance for p in predictions),
            )
        )
    accuracies = tuple(c / len(works) for c in correct)
    return BachReport(
        accuracies,
        float(np.mean(accuracies)),
        float(np.std(accuracies, ddof=1)),
        config,
        tuple(traces),
    )


# ---------------------------------------------------------------------------
# Experiment 2: folk tune families


def _folk_vectors(corpus: FolkCorpus, config: ExperimentConfig) -> np.ndarray:
    length = config.fixed_length or 1024
    vectors = []
    for song in corpus.songs:
        signal = resample_to_length(song.seq, length, config.rest_policy)
        if config.representation is Representation.WAVELET:
            if config.wavelet_rep_support is None:
                raise ConfigError(
                    "fixed-length wavelet representation needs wavelet_rep_support "
                    "(a scale in samples)"
                )
            vectors.append(haar_filter(signal.samples, config.wavelet_rep_support))
        else:
            vectors.append(_normalizer(config)(signal.samples))
    return np.vstack(vectors)


def run_folk_unsegmented(corpus: FolkCorpus, config: ExperimentConfig) -> FolkCellReport:
    """1-NN leave-one-out over whole melodies resampled to a fixed length."""
    if config.segmentation is not SegMethod.NONE:
        raise ConfigError("the unsegmented run takes segmentation 'none'")
    if len(corpus) < 2:
        raise ValueError("leave-one-out needs at least two songs")
    vectors = _folk_vectors(corpus, config)
    distances = pairwise_distances(vectors, vectors, config.metric)
    np.fill_diagonal(distances, np.inf)
    nearest = distances.argmin(axis=1)
    families = [song.family for song in corpus.songs]
    traces = tuple(
        TraceRow(song.song_id, song.family, families[nearest[i]], float(distances[i, nearest[i]]))
        for i, song in enumerate(corpus.songs)
    )
    accuracy = sum(t.true_label == t.predicted_label for t in traces) / len(corpus)
    param = (
        config.wavelet_rep_support
        if config.representation is Representation.WAVELET
        else None
    )
    return FolkCellReport(
        config.representation, SegMethod.NONE, param, None, config.metric, 1,
        accuracy, None, traces,
    )


def _song_segments(song, config: ExperimentConfig) -> list[Segment]:
    signal = sample_pitch_signal(song.seq, config.rate, config.rest_policy)
    span_seq = song.seq if config.segmentation is SegMethod.LBDM else None
    return _span_segments(signal.samples, span_seq, config, song.song_id, song.family)


def _nearest_labels(row: np.ndarray, labels: Sequence, k: int):
    """The first k labels in (distance, insertion index) order.

    The modal-tie walk never leaves the top k (every tied class has a vote
    there), so this prefix fully determines the kNN decision.
    """
    finite_count = int(np.isfinite(row).sum())
    kk = min(k, finite_count)
    if kk == 0:
        raise ValueError("no finite distances to classify against")
    if kk == row.size:
        candidates = np.arange(row.size)
    else:
        kth = np.partition(row, kk - 1)[kk - 1]
        candidates = np.nonzero(row <= kth)[0]
    order = candidates[np.lexsort((candidates, row[candidates]))]
    return [labels[i] for i in order[:kk]]


def _vote_pooled(seg_labels: list, block: np.ndarray) -> Hashable:
    """Song-level vote matching ``classifier.vote``: a modal tie compares
    the tied classes' pooled ascending neighbor distances."""
    votes = Counter(seg_labels)
    top = max(votes.values())
    tied = [label for label in votes if votes[label] == top]
    if len(tied) == 1:
        return tied[0]
    pooled = {}
    for label in tied:
        rows = [block[i] for i, seg_label in enumerate(seg_labels) if seg_label == label]
        stacked = np.concatenate(rows)
        pooled[label] = np.sort(stacked[np.isfinite(stacked)])
    best = tied[0]
    for label in tied[1:]:
        if _lex_less(pooled[label], pooled[best]):
            best = label
    return best


def _folk_segmented_multi(
    corpus: FolkCorpus,
    config: ExperimentConfig,
    ks: Sequence[int],
    record_traces: bool = True,
) -> dict[int, tuple[float, tuple[TraceRow, ...]]]:
    """Song-level leave-one-out for several k values at once; the distance
    matrix and neighbor orderings are shared across k."""
    if config.segmentation not in (SegMethod.WS_LOCAL_MAX, SegMethod.LBDM):
        raise ConfigError(
            "segmented folk classification uses ws-max or lbdm segmentation"
        )
    if len(corpus) < 2:
        raise ValueError("leave-one-out needs at least two songs")
    spans = []
    segments: list[Segment] = []
    for song in corpus.songs:
        song_segments = _song_segments(song, config)
        assert song_segments, "default boundaries guarantee at least one segment"
        spans.append((len(segments), len(segments) + len(song_segments)))
        segments.extend(song_segments)
    matrix = _equalize(segments, config.equalization)
    sources = np.array([str(s) for s in matrix.sources])
    labels = matrix.labels
    distances = pairwise_distances(matrix.rows, matrix.rows, config.metric)
    k_max = max(ks)
    correct = {k: 0 for k in ks}
    traces: dict[int, list[TraceRow]] = {k: [] for k in ks}
    for song, (a, b) in zip(corpus.songs, spans):
        own = np.nonzero(sources == song.song_id)[0]
        assert np.array_equal(own, np.arange(a, b)), "held-out song leaked into the corpus"
        block = distances[a:b].copy()
        block[:, a:b] = np.inf
        top_labels = [_nearest_labels(row, labels, k_max) for row in block]
        nearest = float(block.min())
        for k in ks:
            seg_labels = [_decide(top[: min(k, len(top))], k) for top in top_labels]
            predicted = _vote_pooled(seg_labels, block)
            if predicted == song.family:
                correct[k] += 1
            if record_traces:
                traces[k].append(TraceRow(song.song_id, song.family, predicted, nearest))
    return {k: (correct[k] / len(corpus), tuple(traces[k])) for k in ks}


def _cell_param(config: ExperimentConfig):
    if config.segmentation in _WS_METHODS:
        return config.seg_scale_qn
    if config.segmentation is SegMethod.LBDM:
        return config.lbdm_threshold
    if config.segmentation is SegMethod.CONSTANT:
        return config.step_qn
    return None


def run_folk_segmented(corpus: FolkCorpus, config: ExperimentConfig) -> FolkCellReport:
    """Leave-one-out tune-family classification over melody segments."""
    accuracy, traces = _folk_segmented_multi(corpus, config, (config.k,))[config.k]
    return FolkCellReport(
        config.representation, config.segmentation, _cell_param(config),
        config.equalization, config.metric, config.k, accuracy, None, traces,
    )


def _grid_configs(
    base: ExperimentConfig,
    scales: Sequence,
    thresholds: Sequence[float],
) -> list[ExperimentConfig]:
    """One config per base cell (k varies within a cell at no extra cost).

    For wavelet representation with wavelet segmentation the representation
    scale follows the segmentation scale; with LBDM it stays at the base
    config's representation scale.
    """
    configs = []
    for rep in (Representation.WAVELET, Representation.PITCH):
        for seg, params in ((SegMethod.WS_LOCAL_MAX, scales), (SegMethod.LBDM, thresholds)):
            for param in params:
                for equalization in (Equalization.ZERO_PAD, Equalization.INTERPOLATE):
                    for metric in (Metric.CITYBLOCK, Metric.EUCLIDEAN):
                        changes = dict(
                            representation=rep,
                            segmentation=seg,
                            equalization=equalization,
                            metric=metric,
                            k=1,
                        )
                        if seg is SegMethod.WS_LOCAL_MAX:
                            changes["seg_scale_qn"] = Fraction(param)
                            changes["lbdm_threshold"] = None
                            if rep is Representation.WAVELET:
                                changes["wavelet_rep_scale_qn"] = Fraction(param)
                        else:
                            changes["seg_scale_qn"] = None
                            changes["lbdm_threshold"] = float(param)
                        configs.append(replace(base, **changes))
    return configs


def _grid_cell(args) -> list[FolkCellReport]:
    corpus, config, ks, record_traces = args
    try:
        by_k = _folk_segmented_multi(corpus, config, ks, record_traces)
        return [
            FolkCellReport(
                config.representation, config.segmentation, _cell_param(config),
                config.equalization, config.metric, k, by_k[k][0], None, by_k[k][1],
            )
            for k in ks
        ]
    except (ValueError, ArithmeticError) as exc:
        return [
            FolkCellReport(
                config.representation, config.segmentation, _cell_param(config),
                config.equalization, config.metric, k, None, str(exc),
            )
            for k in ks
        ]


def grid_search(
    corpus: FolkCorpus,
    base_config: ExperimentConfig | None = None,
    scales: Sequence = DYADIC_SCALES_QN,
    thresholds: Sequence[float] = LBDM_THRESHOLDS,
    ks: Sequence[int] = ALL_KS,
    jobs: int = 1,
    record_traces: bool = False,
) -> list[FolkCellReport]:
    """Accuracy for every cell of the parameter sweep; cells that error are
    reported with the error instead of being skipped. Cell evaluation is
    pure, so any job count assembles identical results."""
    if base_config is None:
        base_config = ExperimentConfig(rest_policy=RestPolicy.REMOVE)
    configs = _grid_configs(base_config, scales, thresholds)
    tasks = [(corpus, config, tuple(ks), record_traces) for config in configs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_cell = list(pool.map(_grid_cell, tasks))
    else:
        per_cell = [_grid_cell(task) for task in tasks]
    return [report for cell in per_cell for report in cell]
