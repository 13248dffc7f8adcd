import numpy as np
import pytest

from zeroradius import (StructuredPattern, affine_pattern,
                        expand_perturbation, partition_pencil, pencil,
                        reduce_perturbation, spectral_norm)
from .conftest import BENCH_S


class TestStructuredPattern:
    def test_needs_selection(self):
        with pytest.raises(ValueError):
            StructuredPattern(np.zeros(3, dtype=bool), np.ones(2, dtype=bool))

    def test_from_indices_range(self):
        with pytest.raises(ValueError, match="out of range"):
            StructuredPattern.from_indices([0, 5], [0], (5, 4))

    def test_zero_counts(self, fourcell_pattern):
        assert fourcell_pattern.zero_rows == 3
        assert fourcell_pattern.zero_cols == 2

    def test_gate_matrices_are_binary_diagonal(self, fourcell_pattern):
        E = fourcell_pattern.row_gate()
        G = fourcell_pattern.col_gate()
        assert np.allclose(E, np.diag([1, 0, 1, 0, 0]))
        assert np.allclose(G, np.diag([1, 0, 1, 0]))
        assert spectral_norm(E) == 1.0
        assert spectral_norm(G) == 1.0


class TestPartition:
    def test_bench_rows_and_selector(self, bench_system, fourcell_pattern):
        L = pencil(bench_system, BENCH_S)
        split = partition_pencil(L, fourcell_pattern)
        assert np.allclose(split.perturbable, L[[0, 2], :])
        assert np.allclose(split.frozen, L[[1, 3, 4], :])
        assert np.allclose(split.selector,
                           [[1, 0, 0, 0], [0, 0, 1, 0]])
        assert np.allclose(split.selector @ split.selector.T, np.eye(2))

    def test_all_selected(self, bench_system):
        pat = StructuredPattern.from_indices(range(5), range(4), (5, 4))
        L = pencil(bench_system, 0.3)
        split = partition_pencil(L, pat)
        assert np.allclose(split.perturbable, L)
        assert split.frozen.shape == (0, 4)
        assert np.allclose(split.selector, np.eye(4))

    def test_single_cell(self, bench_system):
        pat = StructuredPattern.from_indices([1], [3], (5, 4))
        split = partition_pencil(pencil(bench_system, 0.0), pat)
        assert split.perturbable.shape == (1, 4)
        assert split.selector.shape == (1, 4)

    def test_constraint_decomposes(self, bench_system, fourcell_pattern):
        # (pencil - gated delta) x = 0 splits into the perturbable rows minus
        # the reduced block acting through the selector, and the frozen rows
        rng = np.random.default_rng(0)
        L = pencil(bench_system, 0.7 + 0.2j)
        split = partition_pencil(L, fourcell_pattern)
        delta_r = rng.standard_normal((2, 2))
        full = expand_perturbation(delta_r, fourcell_pattern)
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        lhs = (L - full) @ x
        top = (split.perturbable - delta_r @ split.selector) @ x
        assert np.allclose(lhs[[0, 2]], top)
        assert np.allclose(lhs[[1, 3, 4]], split.frozen @ x)


class TestReduceExpand:
    def test_bench_expand_star_pattern(self, fourcell_pattern):
        delta_r = np.array([[-0.0341, -0.2048], [0.0682, -0.0307]])
        full = expand_perturbation(delta_r, fourcell_pattern)
        stars = {(0, 0), (0, 2), (2, 0), (2, 2)}
        for i in range(5):
            for j in range(4):
                if (i, j) in stars:
                    assert full[i, j] != 0
                else:
                    assert full[i, j] == 0

    def test_round_trip(self, fourcell_pattern):
        rng = np.random.default_rng(1)
        delta_r = rng.standard_normal((2, 2))
        assert np.allclose(
            reduce_perturbation(expand_perturbation(delta_r, fourcell_pattern),
                                fourcell_pattern), delta_r)

    def test_zero_maps_to_zero(self, fourcell_pattern):
        assert np.allclose(expand_perturbation(np.zeros((2, 2)),
                                               fourcell_pattern), 0.0)

    def test_norm_preserved(self):
        # dropping gated rows and columns never changes the spectral norm
        rng = np.random.default_rng(2)
        for _ in range(100):
            nr = int(rng.integers(2, 7))
            nc = int(rng.integers(2, 6))
            rows = rng.choice(nr, size=int(rng.integers(1, nr + 1)), replace=False)
            cols = rng.choice(nc, size=int(rng.integers(1, nc + 1)), replace=False)
            pat = StructuredPattern.from_indices(rows, cols, (nr, nc))
            delta = rng.standard_normal((nr, nc))
            gated = pat.row_gate() @ delta @ pat.col_gate()
            reduced = reduce_perturbation(gated, pat)
            assert spectral_norm(gated) == pytest.approx(
                spectral_norm(reduced), rel=1e-12, abs=1e-300)
            assert spectral_norm(gated) <= spectral_norm(delta) + 1e-12

    def test_shape_check(self, fourcell_pattern):
        with pytest.raises(ValueError):
            expand_perturbation(np.zeros((3, 2)), fourcell_pattern)


class TestAffinePattern:
    def test_rectangle_detected(self):
        pat = affine_pattern([(0, 0), (0, 2), (2, 0), (2, 2)], (5, 4))
        assert pat.representable_as_structured

    def test_three_corners_not_representable(self):
        pat = affine_pattern([(0, 0), (0, 2), (2, 0)], (5, 4))
        assert not pat.representable_as_structured

    def test_single_cell_is_rectangle(self):
        assert affine_pattern([(1, 1)], (5, 4)).representable_as_structured

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            affine_pattern([(5, 0)], (5, 4))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            affine_pattern([], (5, 4))

    def test_mask_zeroes_off_cells(self):
        rng = np.random.default_rng(3)
        pat = affine_pattern([(0, 1), (2, 3), (4, 0)], (5, 4))
        delta = rng.standard_normal((5, 4))
        masked = pat.mask(delta)
        for i in range(5):
            for j in range(4):
                expected = delta[i, j] if (i, j) in pat.cells else 0.0
                assert masked[i, j] == expected

    def test_values_round_trip(self):
        pat = affine_pattern([(0, 0), (1, 2)], (3, 3))
        vals = np.array([2.5, -1.0])
        assert np.allclose(pat.values(pat.from_values(vals)), vals)

    def test_bounding_structured(self, threecell_pattern):
        rect = threecell_pattern.bounding_structured()
        assert sorted(rect.row_indices) == [0, 2]
        assert sorted(rect.col_indices) == [0, 2]
