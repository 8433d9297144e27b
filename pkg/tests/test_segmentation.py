"""Boundary detection, segment cutting and length equalization."""

import math
from fractions import Fraction

import numpy as np
import pytest

from melowave.segmentation import (
    BoundarySet,
    Segment,
    constant_boundaries,
    cut_segments,
    equalize_interpolate,
    equalize_zero_pad,
    lbdm_boundaries,
    lbdm_profile,
    local_maxima_boundaries,
    nearest_resize,
    zero_crossing_boundaries,
)
from melowave.wavelet import haar_filter

from conftest import make_sequence, random_sequence
from test_wavelet import window_means


class TestBoundarySet:
    def test_defaults_added(self):
        b = BoundarySet.from_interior([3, 1], 5)
        assert b.indices == (0, 1, 3, 5)

    def test_out_of_range_interior_dropped(self):
        assert BoundarySet.from_interior([0, 5, 7, -1], 5).indices == (0, 5)

    def test_invalid_rejected(self):
        with pytest.raises(ValueError):
            BoundarySet((0, 2, 2, 5), 5)
        with pytest.raises(ValueError):
            BoundarySet((1, 5), 5)


class TestZeroCrossings:
    def test_sign_change(self):
        assert zero_crossing_boundaries(np.array([1.0, 1.0, -1.0, -1.0])).indices == (0, 2, 4)

    def test_all_positive(self):
        assert zero_crossing_boundaries(np.array([1.0, 2.0, 3.0])).indices == (0, 3)

    def test_exact_zero_is_boundary(self):
        assert zero_crossing_boundaries(np.array([1.0, 0.0, -1.0])).indices == (0, 1, 3)

    def test_equal_half_means_at_exact_zero(self, rng):
        found = 0
        for _ in range(200):
            length = int(rng.integers(8, 64))
            values = rng.integers(0, 128, size=length).astype(float)
            support = int(rng.choice([4, 8]))
            w = haar_filter(values, support)
            for i in np.nonzero(np.abs(w) <= 1e-12)[0]:
                first, second = window_means(values, support, int(i))
                assert abs(first - second) <= 1e-9
                found += 1
        assert found > 10  # the property was actually exercised


class TestLocalMaxima:
    def test_two_peaks(self):
        assert local_maxima_boundaries(np.array([0.0, 2.0, 0.0, 3.0, 0.0])).indices == (0, 1, 3, 5)

    def test_monotone(self):
        assert local_maxima_boundaries(np.array([0.0, 1.0, 2.0, 3.0])).indices == (0, 4)

    def test_plateau_first_index(self):
        assert local_maxima_boundaries(np.array([0.0, 1.0, 1.0, 0.0])).indices == (0, 1, 4)

    def test_negative_maxima_count(self):
        assert local_maxima_boundaries(np.array([-5.0, -1.0, -3.0])).indices == (0, 1, 3)

    def test_edge_plateau_is_not_a_maximum(self):
        assert local_maxima_boundaries(np.array([1.0, 1.0, 0.0])).indices == (0, 3)

    def test_strictly_greater_than_neighbors(self, rng):
        for _ in range(30):
            w = rng.normal(size=int(rng.integers(4, 100)))
            for i in local_maxima_boundaries(w).indices[1:-1]:
                assert w[i] > w[i - 1]
                after = i
                while after + 1 < w.size and w[after + 1] == w[i]:
                    after += 1
                assert w[after + 1] < w[i]


class TestConstant:
    def test_even_split(self):
        assert constant_boundaries(16, 2, 4).indices == (0, 8, 16)

    def test_trailing_remainder_kept(self):
        assert constant_boundaries(10, 1, 4).indices == (0, 4, 8, 10)

    def test_step_at_least_length(self):
        assert constant_boundaries(6, 1, 10).indices == (0, 6)

    def test_non_integral_step_rejected(self):
        with pytest.raises(ValueError, match="whole number"):
            constant_boundaries(16, 2, Fraction(1, 3))


def oracle_lbdm(seq):
    """Straight transcription of the profile formulas, no vectorization."""
    events = seq.events
    n = len(events)
    if n < 2:
        return []
    params = {
        "pitch": [abs(events[i + 1].pitch_midi - events[i].pitch_midi) for i in range(n - 1)],
        "ioi": [float(events[i + 1].onset_qn - events[i].onset_qn) for i in range(n - 1)],
        "rest": [max(0.0, float(events[i + 1].onset_qn - events[i].end_qn)) for i in range(n - 1)],
    }
    profiles = {}
    for name, x in params.items():
        r = []
        for i in range(len(x) - 1):
            denom = x[i] + x[i + 1]
            r.append(abs(x[i] - x[i + 1]) / denom if denom else 0.0)
        s = []
        for i in range(len(x)):
            left = r[i - 1] if i - 1 >= 0 else 0.0
            right = r[i] if i < len(r) else 0.0
            s.append(x[i] * (left + right))
        top = max(s)
        profiles[name] = [v / top for v in s] if top > 0 else s
    combined = [
        0.25 * profiles["pitch"][i] + 0.5 * profiles["ioi"][i] + 0.25 * profiles["rest"][i]
        for i in range(n - 1)
    ]
    top = max(combined)
    return [v / top for v in combined] if top > 0 else combined


class TestLBDM:
    def test_single_note(self):
        seq = make_sequence([(0, 2, 60)])
        assert lbdm_boundaries(seq, 0.4, 2).indices == (0, 4)

    def test_octave_leap_dominates(self):
        # isochronous scale steps with one octave leap: only the leap
        # transition survives a 0.4 threshold
        pitches = [60, 62, 64, 65, 67, 79, 81, 83]
        seq = make_sequence([(i, 1, p) for i, p in enumerate(pitches)])
        strengths = oracle_lbdm(seq)
        assert strengths[4] == 1.0
        assert all(s < 0.4 for i, s in enumerate(strengths) if i != 4)
        # the leap lands on its target note's onset sample (5 qn * rate 2)
        assert lbdm_boundaries(seq, 0.4, 2).indices == (0, 10, 16)

    def test_profile_matches_oracle(self, rng):
        for _ in range(40):
            seq = random_sequence(rng, n_notes=int(rng.integers(2, 20)))
            got = lbdm_profile(seq)
            expected = oracle_lbdm(seq)
            assert np.allclose(got, expected, atol=1e-12)
            assert (got >= 0).all() and (got <= 1).all()

    def test_threshold_zero_keeps_every_positive_strength(self, rng):
        seq = random_sequence(rng, n_notes=12)
        strengths = lbdm_profile(seq)
        rate = 4
        expected = {
            math.ceil(seq.events[i + 1].onset_qn * rate)
            for i in range(len(strengths))
            if strengths[i] > 0
        }
        got = set(lbdm_boundaries(seq, 0.0, rate).indices) - {0, math.ceil(seq.total_duration_qn * rate)}
        assert got == {b for b in expected if 0 < b < math.ceil(seq.total_duration_qn * rate)}

    def test_threshold_validated(self):
        seq = make_sequence([(0, 1, 60), (1, 1, 62)])
        with pytest.raises(ValueError, match="threshold"):
            lbdm_boundaries(seq, 1.5, 2)


class TestCutSegments:
    def test_basic(self):
        values = np.array([1.0, 2.0, 3.0, 4.0])
        segs = cut_segments(values, BoundarySet((0, 2, 4), 4))
        assert [list(s.values) for s in segs] == [[1, 2], [3, 4]]
        assert [s.start_index for s in segs] == [0, 2]

    def test_whole_vector(self):
        values = np.arange(5.0)
        segs = cut_segments(values, BoundarySet((0, 5), 5))
        assert len(segs) == 1 and np.array_equal(segs[0].values, values)

    def test_unit_segments(self):
        values = np.arange(4.0)
        segs = cut_segments(values, BoundarySet(tuple(range(5)), 4))
        assert [len(s) for s in segs] == [1, 1, 1, 1]

    def test_concatenation_reconstructs(self, rng):
        for _ in range(20):
            values = rng.normal(size=int(rng.integers(2, 80)))
            interior = rng.choice(np.arange(1, values.size), size=min(5, values.size - 1), replace=False)
            bounds = BoundarySet.from_interior(interior.tolist(), values.size)
            segs = cut_segments(values, bounds)
            assert np.array_equal(np.concatenate([s.values for s in segs]), values)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="length"):
            cut_segments(np.arange(3.0), BoundarySet((0, 4), 4))


class TestEqualize:
    def test_zero_pad_to_longest(self):
        segs = [Segment(np.arange(3.0), 0), Segment(np.arange(5.0), 3)]
        matrix = equalize_zero_pad(segs)
        assert matrix.rows.shape == (2, 5)
        assert list(matrix.rows[0]) == [0, 1, 2, 0, 0]

    def test_zero_pad_example(self):
        matrix = equalize_zero_pad([Segment(np.array([2.0, -1.0]), 0)], target_len=4)
        assert list(matrix.rows[0]) == [2, -1, 0, 0]

    def test_zero_pad_equal_lengths_unchanged(self, rng):
        segs = [Segment(rng.normal(size=4), i) for i in range(3)]
        matrix = equalize_zero_pad(segs)
        for seg, row in zip(segs, matrix.rows):
            assert np.array_equal(seg.values, row)

    def test_zero_pad_never_alters_prefix(self, rng):
        segs = [Segment(rng.normal(size=int(rng.integers(1, 9))), 0) for _ in range(6)]
        matrix = equalize_zero_pad(segs)
        for seg, row in zip(segs, matrix.rows):
            assert np.array_equal(row[: len(seg)], seg.values)

    def test_zero_pad_overlong_segment_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            equalize_zero_pad([Segment(np.arange(5.0), 0)], target_len=4)

    def test_interpolate_example(self):
        assert list(nearest_resize(np.array([1.0, 2.0]), 4)) == [1, 1, 2, 2]
        matrix = equalize_interpolate(
            [Segment(np.array([1.0, 2.0]), 0), Segment(np.arange(4.0), 2)]
        )
        assert list(matrix.rows[0]) == [1, 1, 2, 2]

    def test_interpolate_matches_bruteforce(self, rng):
        # nearest input-sample center per output-sample center; exact ties
        # resolve to the later sample
        for _ in range(30):
            n = int(rng.integers(1, 12))
            target = int(rng.integers(1, 20))
            values = rng.normal(size=n)
            got = nearest_resize(values, target)
            for j in range(target):
                out_center = (j + 0.5) / target
                dists = [abs(out_center - (i + 0.5) / n) for i in range(n)]
                best = min(dists)
                candidates = [i for i, d in enumerate(dists) if abs(d - best) < 1e-12]
                assert got[j] == values[candidates[-1]]

    def test_interpolate_identity(self, rng):
        values = rng.normal(size=7)
        assert np.array_equal(nearest_resize(values, 7), values)

    def test_interpolate_preserves_ends_when_upsampling(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 10))
            target = n + int(rng.integers(0, 15))
            values = rng.normal(size=n)
            out = nearest_resize(values, target)
            assert out[0] == values[0] and out[-1] == values[-1]

    def test_interpolate_constant(self):
        out = nearest_resize(np.full(3, 2.5), 11)
        assert (out == 2.5).all()

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError, match="no segments"):
            equalize_zero_pad([])
        with pytest.raises(ValueError, match="no segments"):
            equalize_interpolate([])


class TestSegmenterDecoupling:
    def test_equal_boundary_sets_give_equal_downstream_results(self, rng):
        # cut/equalize depend on the boundary set alone, not on which
        # segmenter produced it
        values = rng.integers(0, 128, size=16).astype(float)
        from_grid = constant_boundaries(16, 1, 4)
        from_hand = BoundarySet.from_interior([4, 8, 12], 16)
        assert from_grid == from_hand
        a = equalize_zero_pad(cut_segments(values, from_grid))
        b = equalize_zero_pad(cut_segments(values, from_hand))
        assert np.array_equal(a.rows, b.rows)
        assert a.labels == b.labels
