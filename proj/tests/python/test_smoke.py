import math

import pytest

import ergolab


def test_groups_and_balls():
    z2 = ergolab.Group("zd:2")
    assert len(ergolab.ball(z2, 3)) == 16
    h = ergolab.Group("heis3")
    a, b = [1, 0, 0], [0, 1, 0]
    assert h.multiply(a, b) != h.multiply(b, a)
    assert h.multiply(a, h.inverse(a)) == [0, 0, 0]
    assert h.growth_degree == 4
    assert sum(ergolab.sphere_sizes(h, 4)) == len(ergolab.ball(h, 4))


def test_profile_and_beta():
    p = ergolab.Profile("power:0.4")
    assert p(1) == 1.0
    direct = sum(n ** -0.4 for n in range(1, 101))
    assert ergolab.beta_interval(100, p) == pytest.approx(direct, rel=1e-12)


def test_golden_sequence():
    seq = ergolab.sample_sequence(ergolab.Profile.power_law(0.4), 40, 42)
    assert seq == [1, 2, 4, 6, 8, 10, 11, 12, 16, 17, 18, 20, 21, 22, 27, 28, 31]


def test_density_matches_sliding_window():
    seq = [1, 2, 3, 10, 11, 30]
    best = max(sum(1 for x in seq if s <= x < s + 4) for s in range(1, 21))
    assert ergolab.banach_density(seq, 4, 20) == pytest.approx(best / 4)


def test_blocks_and_probabilities():
    blocks, seq, truncated = ergolab.block_sequence("k^2", 3)
    assert [v for v, _ in blocks] == [2, 8, 114]
    assert all(n >= k * k for k, n in enumerate(seq, start=1))
    lower, exact, upper = ergolab.block_probability(ergolab.Profile("power:0.5"), 4, 2, 3)
    assert lower <= exact <= min(1.0, upper)


def test_random_average_golden_value():
    value = ergolab.random_average("rotation:golden", "cos1", 0.1, 1024, ergolab.Profile("power:0.4"), 42)
    assert value == pytest.approx(-0.054430997844587131, rel=1e-12)


def test_moments_and_partitions():
    assert ergolab.partition_count(4) == 4
    z = ergolab.Group("zd:1")
    exact = ergolab.moment_exact(z, [[0], [1], [3]], [0.5, 0.5, 0.5], 1)
    assert math.isfinite(exact) and exact > 0


def test_cz_invariants():
    report = ergolab.cz_check([([0], 9.0), ([1], -2.0), ([40], 4.0)], 1.0)
    assert report["bad_cubes"] >= 1
    assert all(report[k] for k in ("recombines", "good_bounded", "pieces_bounded", "disjoint", "measure_bounded"))


def test_errors_are_typed():
    with pytest.raises(ergolab.ConfigError):
        ergolab.Group("free:2")
    with pytest.raises(ergolab.Error):
        ergolab.ball(ergolab.Group("zd:3"), 500, 1000)


def test_cli_and_selftest():
    code, report, _ = ergolab.run("ball", "--group", "zd:1", "--radius", "5")
    assert code == 0
    assert report["payload"]["size"] == 6
    code, _, err = ergolab.run("ball", "--radius", "5")
    assert code == 1 and "group" in err
    assert all(ok for _, ok in ergolab.selftest())
