import numpy as np
import pytest

from podsim.orderstream import OrderStream


def test_frequencies_normalized():
    stream = OrderStream(np.random.default_rng(0), sku_count=1000)
    assert stream.frequencies.sum() == pytest.approx(1.0, abs=1e-12)
    assert (stream.frequencies >= 0).all()


def test_empirical_draw_frequencies_track_weights():
    stream = OrderStream(np.random.default_rng(1), sku_count=1000)
    draws = stream.draw_skus(100_000)
    counts = np.bincount(draws, minlength=1000) / 100_000
    r = np.corrcoef(counts, stream.frequencies)[0, 1]
    assert r > 0.99


def test_equal_weights_yield_uniform_histogram():
    rng = np.random.default_rng(2)
    stream = OrderStream(rng, sku_count=10, weights=np.ones(10))
    n = 100_000
    counts = np.bincount(stream.draw_skus(n), minlength=10)
    expected = n / 10
    sigma = (n * 0.1 * 0.9) ** 0.5
    assert np.abs(counts - expected).max() < 3 * sigma


def test_customer_lines_shape():
    stream = OrderStream(np.random.default_rng(3), sku_count=50)
    for _ in range(200):
        lines = stream.draw_customer_lines()
        assert 1 <= len(lines) <= 3
        for sku, qty in lines:
            assert 0 <= sku < 50
            assert qty == 1


def test_initial_inventory_totals():
    stream = OrderStream(np.random.default_rng(4), sku_count=50)
    inventories = stream.draw_initial_inventory(7, 30)
    assert len(inventories) == 7
    for inv in inventories:
        assert sum(inv.values()) == 30
        assert all(qty > 0 for qty in inv.values())


def test_same_seed_same_stream():
    a = OrderStream(np.random.default_rng(9), sku_count=100)
    b = OrderStream(np.random.default_rng(9), sku_count=100)
    assert np.array_equal(a.frequencies, b.frequencies)
    assert [a.draw_sku() for _ in range(50)] == [b.draw_sku() for _ in range(50)]
