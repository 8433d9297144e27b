"""Boundary detection and segment extraction.

Boundaries come from coefficient zero-crossings or local maxima, from a
constant grid, or from LBDM boundary strengths on the note stream. The
beginning and end of the signal are always boundaries. Segments are then
cut from any same-length vector and equalized by trailing zero-padding or
nearest-neighbor resizing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

import numpy as np

from .ingest import NoteSequence
from .wavelet import CoefficientSignal

ZERO_TOLERANCE = 1e-12  # coefficients of integer signals hit exact zeros


class Equalization(Enum):
    ZERO_PAD = "pad"
    INTERPOLATE = "interp"


@dataclass(frozen=True)
class BoundarySet:
    """Strictly increasing sample indices from 0 to the signal length."""

    indices: tuple[int, ...]
    length: int

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError("boundary sets need a positive signal length")
        idx = self.indices
        if not idx or idx[0] != 0 or idx[-1] != self.length:
            raise ValueError("boundaries must start at 0 and end at the signal length")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("boundaries must be strictly increasing")

    @classmethod
    def from_interior(cls, interior: Iterable[int], length: int) -> "BoundarySet":
        inside = {int(i) for i in interior if 0 < i < length}
        return cls(tuple(sorted(inside | {0, length})), length)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class Segment:
    """One segment of a vector plus where it came from."""

    values: np.ndarray
    start_index: int
    source_id: Hashable = None
    label: Hashable = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.size < 1:
            raise ValueError("segments must contain at least one value")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class SegmentMatrix:
    """Equal-length segment vectors ready for distance computation."""

    rows: np.ndarray
    labels: tuple
    sources: tuple
    method: Equalization

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ValueError("segment matrix must be 2-dimensional")
        if rows.shape[0] != len(self.labels) or rows.shape[0] != len(self.sources):
            raise ValueError("labels and sources must align with rows")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)


def _coeff_values(coeffs: CoefficientSignal | np.ndarray) -> np.ndarray:
    values = coeffs.values if isinstance(coeffs, CoefficientSignal) else np.asarray(coeffs, float)
    if values.size == 0:
        raise ValueError("coefficient signal is empty")
    return values


def zero_crossing_boundaries(coeffs: CoefficientSignal | np.ndarray) -> BoundarySet:
    """Boundaries where the coefficients change sign or are (near) zero.

    A sign change puts the boundary on the first index of the new sign;
    values within ZERO_TOLERANCE of zero are boundaries themselves.
    """
    w = _coeff_values(coeffs)
    signs = np.sign(w)
    interior = set(np.nonzero(signs[:-1] * signs[1:] < 0)[0] + 1)
    interior |= set(np.nonzero(np.abs(w) <= ZERO_TOLERANCE)[0])
    return BoundarySet.from_interior(interior, w.size)


def local_maxima_boundaries(coeffs: CoefficientSignal | np.ndarray) -> BoundarySet:
    """Boundaries at strict interior local maxima of the coefficients.

    A plateau flanked by strictly smaller values yields one boundary at its
    first index. Negative-valued maxima count.
    """
    w = _coeff_values(coeffs)
    interior = []
    i = 1
    while i < w.size - 1:
        if w[i] > w[i - 1]:
            j = i
            while j + 1 < w.size and w[j + 1] == w[i]:
                j += 1
            if j < w.size - 1 and w[j + 1] < w[i]:
                interior.append(i)
            i = j + 1
        else:
            i += 1
    return BoundarySet.from_interior(interior, w.size)


def constant_boundaries(
    length_samples: int, rate: int | Fraction, step_qn: int | float | Fraction
) -> BoundarySet:
    """Boundaries on a constant grid; a shorter trailing remainder is kept."""
    step = Fraction(step_qn) * Fraction(rate)
    if step.denominator != 1 or step <= 0:
        raise ValueError(f"step of {step_qn} qn at rate {rate} is not a whole number of samples")
    return BoundarySet.from_interior(range(int(step), length_samples, int(step)), length_samples)


def lbdm_profile(seq: NoteSequence) -> np.ndarray:
    """Combined LBDM boundary strength per note transition, in [0, 1].

    Per transition, the pitch-interval, inter-onset and rest profiles get a
    degree of change r_i = |x_i - x_{i+1}| / (x_i + x_{i+1}) and strength
    x_i * (r_{i-1} + r_i); profiles are max-normalized and combined with
    weights 0.25/0.5/0.25, then max-normalized again.
    """
    events = seq.events
    if len(events) < 2:
        return np.zeros(0)
    pitch = np.array(
        [abs(b.pitch_midi - a.pitch_midi) for a, b in zip(events, events[1:])], float
    )
    ioi = np.array([float(b.onset_qn - a.onset_qn) for a, b in zip(events, events[1:])])
    rest = np.array(
        [max(0.0, float(b.onset_qn - a.end_qn)) for a, b in zip(events, events[1:])]
    )
    combined = (
        0.25 * _strength_profile(pitch)
        + 0.5 * _strength_profile(ioi)
        + 0.25 * _strength_profile(rest)
    )
    top = combined.max()
    return combined / top if top > 0 else combined


def _strength_profile(x: np.ndarray) -> np.ndarray:
    total = x[:-1] + x[1:]
    change = np.divide(
        np.abs(np.diff(x)), total, out=np.zeros(x.size - 1), where=total != 0
    )
    padded = np.concatenate(([0.0], change, [0.0]))
    strength = x * (padded[:-1] + padded[1:])
    top = strength.max()
    return strength / top if top > 0 else strength


def lbdm_boundaries(
    seq: NoteSequence, threshold: float, rate: int | Fraction
) -> BoundarySet:
    """Boundaries before every note whose LBDM strength exceeds the threshold."""
    if not 0 <= threshold <= 1:
        raise ValueError(f"LBDM threshold must be in [0, 1], got {threshold}")
    rate = Fraction(rate)
    length = math.ceil(seq.total_duration_qn * rate)
    strengths = lbdm_profile(seq)
    interior = [
        math.ceil(seq.events[i + 1].onset_qn * rate)
        for i in range(strengths.size)
        if strengths[i] > threshold
    ]
    return BoundarySet.from_interior(interior, length)


def cut_segments(
    values: np.ndarray,
    boundaries: BoundarySet,
    source_id: Hashable = None,
    label: Hashable = None,
) -> list[Segment]:
    """Cut a vector at the boundaries; concatenation reconstructs it exactly."""
    values = np.asarray(values, dtype=float)
    if values.size != boundaries.length:
        raise ValueError(
            f"boundaries are for length {boundaries.length}, vector has {values.size}"
        )
    return [
        Segment(values[a:b], a, source_id, label)
        for a, b in zip(boundaries.indices, boundaries.indices[1:])
    ]


def equalize_zero_pad(
    segments: Sequence[Segment], target_len: int | None = None
) -> SegmentMatrix:
    """Pad shorter segments with trailing zeros up to the target length."""
    if not segments:
        raise ValueError("no segments to equalize")
    longest = max(len(s) for s in segments)
    target = longest if target_len is None else int(target_len)
    if longest > target:
        raise ValueError(f"segment of length {longest} exceeds target length {target}")
    rows = np.zeros((len(segments), target))
    for i, seg in enumerate(segments):
        rows[i, : len(seg)] = seg.values
    return SegmentMatrix(
        rows,
        tuple(s.label for s in segments),
        tuple(s.source_id for s in segments),
        Equalization.ZERO_PAD,
    )


def nearest_resize(values: np.ndarray, target: int) -> np.ndarray:
    """Nearest-neighbor resize of a vector's index grid to a target length."""
    values = np.asarray(values, dtype=float)
    if target < 1:
        raise ValueError("target length must be at least 1")
    idx = np.floor((np.arange(target) + 0.5) * values.size / target).astype(int)
    return values[np.minimum(idx, values.size - 1)]


def equalize_interpolate(
    segments: Sequence[Segment], target_len: int | None = None
) -> SegmentMatrix:
    """Resize every segment to the target length by nearest-neighbor interpolation."""
    if not segments:
        raise ValueError("no segments to equalize")
    target = max(len(s) for s in segments) if target_len is None else int(target_len)
    rows = np.vstack([nearest_resize(s.values, target) for s in segments])
    return SegmentMatrix(
        rows,
        tuple(s.label for s in segments),
        tuple(s.source_id for s in segments),
        Equalization.INTERPOLATE,
    )
