import itertools

import numpy as np
import pytest

from app.core.errors import DimensionNotDivisible, IndexOutOfRange, MalformedDecomposition
from app.schemas.image import GrayImage
from app.schemas.tetrolet import TetroletDecomposition
from app.services import tetrolet


@pytest.fixture(scope="module")
def catalog():
    return tetrolet.enumerate_tilings()


def _haar_levels(x: np.ndarray, J: int):
    """Classical separable 2x2 Haar, written out cell by cell."""
    out = []
    current = x
    for _ in range(J):
        a, b = current[0::2, 0::2], current[0::2, 1::2]
        c, d = current[1::2, 0::2], current[1::2, 1::2]
        low = (a + b + c + d) / 2
        out.append((low, (a + b - c - d) / 2, (a - b + c - d) / 2, (a - b - c + d) / 2))
        current = low
    return out


class TestCatalog:
    def test_size_and_classes(self, catalog):
        assert len(catalog) == 117
        assert len(tetrolet.symmetry_classes(catalog)) == 22

    def test_square_tiling_first(self, catalog):
        assert catalog[0].partition() == tetrolet.SQUARE_PARTITION

    def test_free_shapes(self, catalog):
        assert tetrolet.free_shape_names(catalog) == ["I", "L", "O", "S", "T"]

    def test_matches_golden_dump(self, catalog, golden_dir):
        expected = (golden_dir / "tilings_v1.txt").read_text().splitlines()
        assert tetrolet.format_catalog(catalog) == expected

    def test_gather_table_covers_block(self, catalog):
        gather = catalog.gather_table()
        assert gather.shape == (117, 4, 4)
        for row in gather:
            assert sorted(row.reshape(-1).tolist()) == list(range(16))

    def test_deterministic(self):
        tetrolet.enumerate_tilings.cache_clear()
        first = tetrolet.format_catalog(tetrolet.enumerate_tilings())
        tetrolet.enumerate_tilings.cache_clear()
        assert tetrolet.format_catalog(tetrolet.enumerate_tilings()) == first


class TestHaarTetromino:
    def test_constant(self):
        assert tetrolet.haar_tetromino([1, 1, 1, 1]) == (2.0, (0.0, 0.0, 0.0))

    def test_impulse(self):
        assert tetrolet.haar_tetromino([4, 0, 0, 0]) == (2.0, (2.0, 2.0, 2.0))

    def test_orthogonal(self):
        rng = np.random.default_rng(0)
        v = rng.normal(size=4)
        low, details = tetrolet.haar_tetromino(v)
        assert np.allclose(tetrolet.inverse_haar_tetromino(low, details), v, atol=1e-12)
        assert np.allclose(tetrolet.HAAR_MATRIX @ tetrolet.HAAR_MATRIX.T, np.eye(4), atol=1e-15)


class TestAnalyzeBlock:
    def test_constant_block(self, catalog):
        index, low, details = tetrolet.analyze_block(np.full((4, 4), 3.0), catalog)
        assert index == 0
        assert np.all(details == 0)
        assert np.allclose(low, 6.0)

    def test_minimal_over_brute_force(self, catalog):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            block = rng.integers(0, 4, size=(4, 4)).astype(np.float64)
            index, _, details = tetrolet.analyze_block(block, catalog)
            costs = [tetrolet.tiling_cost(block, t) for t in catalog.tilings]
            best = min(costs)
            assert np.abs(details).sum() == pytest.approx(best, abs=1e-12)
            assert costs[index] == pytest.approx(best, abs=1e-12)
            # ties resolve to the smallest catalog index
            assert index == min(i for i, c in enumerate(costs) if c <= best + 1e-12)

    def test_diagonal_edge_beats_square(self, catalog):
        block = np.array([[0.0 if c <= r else 100.0 for c in range(4)] for r in range(4)])
        index, _, details = tetrolet.analyze_block(block, catalog)
        assert np.abs(details).sum() < tetrolet.tiling_cost(block, catalog[0])
        assert index != 0

    def test_wrong_shape(self, catalog):
        with pytest.raises(ValueError):
            tetrolet.analyze_block(np.zeros((4, 5)), catalog)


class TestForward:
    def test_subband_shapes(self):
        rng = np.random.default_rng(2)
        dec = tetrolet.forward(GrayImage(pixels=rng.uniform(0, 255, (16, 16))), 3)
        assert dec.J == 3
        sizes = [tetrolet.subband(dec, level, d).shape for level, d in tetrolet.band_ids(3)]
        assert sizes == [(8, 8)] * 3 + [(4, 4)] * 3 + [(2, 2)] * 3
        assert dec.final_lowpass.shape == (2, 2)

    def test_constant_image(self):
        dec = tetrolet.forward(GrayImage(pixels=np.full((16, 16), 5.0)), 2)
        for level, d in tetrolet.band_ids(2):
            assert np.all(tetrolet.subband(dec, level, d) == 0)
        assert np.allclose(dec.final_lowpass, 20.0)

    def test_not_divisible(self):
        with pytest.raises(DimensionNotDivisible):
            tetrolet.forward(GrayImage(pixels=np.zeros((20, 20))), 3)

    def test_fixed_tiling_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            tetrolet.forward(GrayImage(pixels=np.zeros((16, 16))), 1, fixed_tiling=117)

    def test_outputs_read_only(self, textured_image):
        dec = tetrolet.forward(textured_image, 3)
        with pytest.raises(ValueError):
            dec.levels[0].details[0][0, 0] = 1.0

    def test_energy_per_level(self, textured_image):
        dec = tetrolet.forward(textured_image, 3)
        current = textured_image.pixels
        for level in dec.levels:
            out_energy = np.sum(level.lowpass ** 2) + sum(np.sum(d ** 2) for d in level.details)
            assert out_energy == pytest.approx(np.sum(current ** 2), rel=1e-9)
            current = level.lowpass

    def test_haar_equivalence(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            x = rng.uniform(0, 255, size=(32, 32))
            dec = tetrolet.forward(GrayImage(pixels=x), 3, fixed_tiling=0)
            for level, expected in zip(dec.levels, _haar_levels(x, 3)):
                got = (level.lowpass, *level.details)
                for g, e in zip(got, expected):
                    assert np.max(np.abs(g - e)) <= 1e-12 * 255 * 8

    def test_subband_out_of_range(self):
        dec = tetrolet.forward(GrayImage(pixels=np.zeros((16, 16))), 3)
        with pytest.raises(IndexOutOfRange):
            tetrolet.subband(dec, 4, 1)
        with pytest.raises(IndexOutOfRange):
            tetrolet.subband(dec, 1, 0)


class TestInverse:
    def test_perfect_reconstruction(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            img = GrayImage(pixels=rng.uniform(0, 255, size=(64, 64)))
            rebuilt = tetrolet.inverse(tetrolet.forward(img, 3))
            assert np.max(np.abs(rebuilt.pixels - img.pixels)) <= 1e-9

    def test_reconstruction_rectangular(self, textured_image):
        img = GrayImage(pixels=textured_image.pixels[:64, :])
        rebuilt = tetrolet.inverse(tetrolet.forward(img, 2))
        assert np.max(np.abs(rebuilt.pixels - img.pixels)) <= 1e-9

    def test_zero_decomposition(self):
        dec = tetrolet.forward(GrayImage(pixels=np.zeros((32, 32))), 3)
        assert np.all(tetrolet.inverse(dec).pixels == 0)

    def test_tampered_tiling(self, textured_image):
        dec = tetrolet.forward(textured_image, 2)
        tiles = np.array(dec.levels[0].tiling_choice)
        tiles[0, 0] = 200
        tampered = TetroletDecomposition(
            levels=(dec.levels[0].model_copy(update={"tiling_choice": tiles}), *dec.levels[1:])
        )
        with pytest.raises(MalformedDecomposition):
            tetrolet.inverse(tampered)

    def test_mismatched_detail_shape(self, textured_image):
        dec = tetrolet.forward(textured_image, 2)
        level = dec.levels[0]
        bad = level.model_copy(update={"details": (level.details[0][:-2], *level.details[1:])})
        with pytest.raises(MalformedDecomposition):
            tetrolet.inverse(TetroletDecomposition(levels=(bad, *dec.levels[1:])))


def test_band_ids_order():
    assert tetrolet.band_ids(3) == list(itertools.product((1, 2, 3), (1, 2, 3)))
