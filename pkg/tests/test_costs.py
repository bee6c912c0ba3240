from rrns.costs import (optimal_bottom_width, predict, simplified_min_ops,
                        simplified_mont3)


def test_reference_tower():
    # 9+9 bottom base, 32+32 middle base
    levels = predict([(9, 9), (32, 32)])
    l2, l3 = levels[1], levels[2]
    assert (l2.add, l2.mul, l2.reduce, l2.mont) == (19, 19, 398, 417)
    assert (l3.add, l3.mul, l3.reduce, l3.mont) == (1217, 26689, 131330, 158019)


def test_remark_layer():
    l2 = predict([(2, 2)])[1]
    assert (l2.add, l2.mul, l2.reduce, l2.mont) == (5, 5, 34, 39)


def test_mid_tower():
    levels = predict([(3, 3), (4, 4)])
    assert levels[1].mont == 69
    assert levels[2].mont == 2123


def test_simplified():
    assert simplified_mont3(32, 9) == 135936
    assert abs(optimal_bottom_width(2048, 8) - 9.2376) < 1e-3
    assert abs(simplified_min_ops(2048, 8) - 113511.68) < 0.5
    # simplified stays within 25% of the exact recurrence here
    exact = predict([(9, 9), (32, 32)])[2].mont
    assert abs(simplified_mont3(32, 9) - exact) / exact < 0.25


def test_bottom_identity():
    assert predict([])[0].mont == 1
