import numpy as np

from specsim.streams import child_stream, derive_stream


def test_same_labels_same_stream():
    a = derive_stream(7, "x", 1).random(64)
    b = derive_stream(7, "x", 1).random(64)
    assert np.array_equal(a, b)


def test_label_order_matters():
    a = derive_stream(7, "a", "b").random(8)
    b = derive_stream(7, "b", "a").random(8)
    assert not np.array_equal(a, b)


def test_label_concatenation_is_unambiguous():
    a = derive_stream(7, "ab", "c").random(8)
    b = derive_stream(7, "a", "bc").random(8)
    assert not np.array_equal(a, b)


def test_sibling_streams_uncorrelated():
    x = derive_stream(3, "sib", 0).standard_normal(10_000)
    y = derive_stream(3, "sib", 1).standard_normal(10_000)
    r = np.corrcoef(x, y)[0, 1]
    assert abs(r) < 0.05


def test_integral_float_and_int_labels_agree():
    a = derive_stream(7, 1).random(4)
    b = derive_stream(7, 1.0).random(4)
    assert np.array_equal(a, b)


def test_child_stream_consumes_parent():
    parent = derive_stream(5, "p")
    c1 = child_stream(parent).random(4)
    c2 = child_stream(parent).random(4)
    assert not np.array_equal(c1, c2)
    parent2 = derive_stream(5, "p")
    assert np.array_equal(c1, child_stream(parent2).random(4))
