import datetime as dt

import numpy as np
import pytest

from vegretrieval.errors import ConfigurationError
from vegretrieval.products import (FILL_INT16, K0_SCALE, GridSpec, InputTile, encode_plane,
                                   retrieve_tile, synthetic_input_tile)
from vegretrieval.products.tiles import QC_CLIPPED, QC_UNPROCESSED, ProductTile
from vegretrieval.rtm_sim import NoiseSpec, SamplingConfig
from vegretrieval.uncertainty import InputErrorSpec, classify_quality

DAY = dt.date(2016, 6, 15)
VARS = ("LAI", "FVC", "FAPAR")


def empty_input(grid):
    return InputTile(grid, DAY, np.full((3, *grid.shape), FILL_INT16, np.int16))


@pytest.fixture(scope="module")
def tile_and_truth():
    grid = GridSpec(6, 7, origin_row=3, origin_col=3.5)
    return synthetic_input_tile(grid, DAY, SamplingConfig(rng_seed=33), NoiseSpec(),
                                missing_fraction=0.25)


def test_all_fill_no_previous(small_gpr):
    grid = GridSpec(4, 4)
    out = retrieve_tile(small_gpr, empty_input(grid))
    assert list(out) == list(VARS)
    for tile in out.values():
        assert np.all(tile.value == FILL_INT16) and np.all(tile.age == 255)
        assert np.all(tile.qc == QC_UNPROCESSED)
        tile.check()


def test_carry_forward(small_gpr, tile_and_truth):
    tile, _ = tile_and_truth
    first = retrieve_tile(small_gpr, tile)
    later = retrieve_tile(small_gpr, empty_input(tile.grid), previous=first,
                          timeslot=DAY + dt.timedelta(days=10))
    for var in VARS:
        prev, cur = first[var], later[var]
        done = ~prev.unprocessed
        assert np.array_equal(cur.value, prev.value) and np.array_equal(cur.error, prev.error)
        assert np.all(cur.age[done] == 10) and np.all(cur.age[~done] == 255)
        assert np.all(cur.carried[done]) and not np.any(cur.carried[~done])
        assert np.array_equal(cur.qc[done] & QC_CLIPPED, prev.qc[done] & QC_CLIPPED)
        cur.check()
        assert cur.timeslot == DAY + dt.timedelta(days=10)


def test_age_cap(small_gpr):
    grid = GridSpec(1, 3)
    prev = ProductTile(grid, "FVC", DAY, np.array([[5000, 5000, 5000]], np.int16),
                       np.array([[500, 500, 500]], np.int16), np.zeros((1, 3), np.uint8),
                       np.array([[0, 245, 250]], np.uint8))
    out = retrieve_tile(small_gpr, empty_input(grid), previous={"FVC": prev})
    assert out["FVC"].age.tolist() == [[10, 250, 250]]
    assert np.all(out["LAI"].unprocessed)


def test_fresh_retrieval_resets_age(small_gpr, tile_and_truth):
    tile, _ = tile_and_truth
    first = retrieve_tile(small_gpr, tile)
    carried = retrieve_tile(small_gpr, empty_input(tile.grid), previous=first)
    fresh = retrieve_tile(small_gpr, tile, previous=carried)
    for var in VARS:
        assert fresh[var] == first[var]


def test_grid_mismatch(small_gpr):
    prev = ProductTile.empty(GridSpec(2, 2), "LAI", DAY)
    with pytest.raises(ConfigurationError):
        retrieve_tile(small_gpr, empty_input(GridSpec(2, 3)), previous={"LAI": prev})


def test_validity_window(small_gpr):
    grid = GridSpec(1, 4)
    refl = np.array([[0.05, 0.3, 0.2], [1.3, 0.3, 0.2], [0.05, -0.25, 0.2], [-0.19, 0.3, 1.19]]).T
    tile = InputTile(grid, DAY, encode_plane(refl.reshape(3, 1, 4), K0_SCALE))
    out = retrieve_tile(small_gpr, tile)
    assert out["FVC"].unprocessed.tolist() == [[False, True, True, False]]


def test_pixel_independence(small_gpr, tile_and_truth):
    tile, _ = tile_and_truth
    whole = retrieve_tile(small_gpr, tile)
    for i in range(tile.grid.rows):
        for j in range(tile.grid.cols):
            g = GridSpec(1, 1)
            single = retrieve_tile(small_gpr, InputTile(g, DAY, tile.k0[:, i:i + 1, j:j + 1]))
            for var in VARS:
                for plane in ("value", "error", "qc", "age"):
                    assert getattr(single[var], plane)[0, 0] == getattr(whole[var], plane)[i, j]


def test_chunking_does_not_matter(small_gpr, tile_and_truth):
    tile, _ = tile_and_truth
    a = retrieve_tile(small_gpr, tile)
    b = retrieve_tile(small_gpr, tile, chunk_size=5)
    assert all(a[v] == b[v] for v in VARS)


def test_quality_matches_error_plane(small_gpr, tile_and_truth):
    tile, _ = tile_and_truth
    for var, product in retrieve_tile(small_gpr, tile).items():
        ok = ~product.unprocessed
        err = product.errors()[ok]
        # classes come from the unquantized error; allow disagreement only at a class edge
        cls = classify_quality(var, err)
        assert np.mean(cls == (product.qc[ok] & 3)) > 0.95
        values = product.values()[ok]
        lo, hi = (0, 8) if var == "LAI" else (0, 1)
        assert values.min() >= lo and values.max() <= hi


def test_sigma_planes_and_override(small_gpr, tile_and_truth):
    tile, _ = tile_and_truth
    base = retrieve_tile(small_gpr, tile)
    zero = InputTile(tile.grid, DAY, tile.k0, np.zeros_like(tile.k0))
    with_planes = retrieve_tile(small_gpr, zero)
    explicit = retrieve_tile(small_gpr, tile, errors=InputErrorSpec.uniform(0.0))
    for var in VARS:
        assert with_planes[var] == explicit[var]
        ok = ~base[var].unprocessed
        assert np.all(with_planes[var].errors()[ok] <= base[var].errors()[ok])
