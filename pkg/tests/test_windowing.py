import numpy as np
import pytest

from flowdigits import (
    CapabilityError,
    FlowDataset,
    SizeUnit,
    WindowIndex,
    WindowSpec,
    difference_sequence,
    size_sequence,
    window_differences,
    windows,
)
from test_ingest import make_flow


def dataset_with_bytes(values, packets=None):
    flows = tuple(
        make_flow(i, bytes_total=v, packets_total=None if packets is None else packets[i])
        for i, v in enumerate(values)
    )
    return FlowDataset(flows=flows, labeled=False)


def test_size_sequence_projection():
    ds = dataset_with_bytes([100, 250, 40], packets=[2, 5, 1])
    assert size_sequence(ds, SizeUnit.BYTES).tolist() == [100, 250, 40]
    assert size_sequence(ds, SizeUnit.PACKETS).tolist() == [2, 5, 1]


def test_size_sequence_capability_error():
    ds = dataset_with_bytes([100, 250])
    with pytest.raises(CapabilityError):
        size_sequence(ds, SizeUnit.PACKETS)


def test_difference_sequence_examples():
    assert difference_sequence([100, 250, 250, 40]).tolist() == [150, 0, 210]
    assert difference_sequence([5]).tolist() == []
    assert difference_sequence([]).tolist() == []
    assert difference_sequence([40, 100]).tolist() == [60]
    assert difference_sequence([100, 40]).tolist() == [60]


def test_difference_sequence_length_and_shift_invariance():
    rng = np.random.default_rng(13)
    for _ in range(100):
        sizes = rng.integers(0, 10**6, size=rng.integers(2, 50))
        diffs = difference_sequence(sizes)
        assert diffs.size == sizes.size - 1
        assert np.array_equal(diffs, difference_sequence(sizes + 1234))


def test_window_spec_validation_and_default_step():
    assert WindowSpec(4).s == 2
    assert WindowSpec(1).s == 1
    assert WindowSpec(10, 10).s == 10
    with pytest.raises(ValueError):
        WindowSpec(0)
    with pytest.raises(ValueError):
        WindowSpec(4, 5)
    with pytest.raises(ValueError):
        WindowSpec(4, 0)


def test_windows_enumeration():
    assert [w.start for w in windows(10, WindowSpec(4, 2))] == [0, 2, 4, 6]
    assert windows(3, WindowSpec(4, 2)) == []
    assert len(windows(10, WindowSpec(4, 1))) == 7
    assert windows(0, WindowSpec(1, 1)) == []
    for w in windows(10, WindowSpec(4, 2)):
        assert w.end - w.start == 4
        assert w.end <= 10


def test_windows_count_formula():
    rng = np.random.default_rng(57)
    for _ in range(200):
        n = int(rng.integers(0, 500))
        w = int(rng.integers(1, 60))
        s = int(rng.integers(1, w + 1))
        got = len(windows(n, WindowSpec(w, s)))
        want = (n - w) // s + 1 if n >= w else 0
        assert got == want


def test_window_differences():
    ds = dataset_with_bytes([100, 250, 250, 40])
    win = WindowIndex(0, 4)
    assert window_differences(ds, SizeUnit.BYTES, win).tolist() == [150, 0, 210]

    ds2 = dataset_with_bytes([7, 7])
    assert window_differences(ds2, SizeUnit.BYTES, WindowIndex(0, 2)).tolist() == [0]

    with pytest.raises(ValueError):
        window_differences(ds2, SizeUnit.BYTES, WindowIndex(0, 5))


def test_non_overlapping_windows_cover_all_but_junctions():
    rng = np.random.default_rng(59)
    sizes = rng.integers(0, 1000, size=40)
    ds = dataset_with_bytes(sizes.tolist())
    w = 8
    spec = WindowSpec(w, w)
    pieces = [window_differences(ds, SizeUnit.BYTES, win) for win in windows(40, spec)]
    glued = np.concatenate(pieces)
    full = difference_sequence(sizes)
    kept = np.concatenate([full[s : s + w - 1] for s in range(0, 40 - w + 1, w)])
    assert np.array_equal(glued, kept)
    # exactly n/w - 1 junction differences are skipped
    assert full.size - glued.size == 40 // w - 1
