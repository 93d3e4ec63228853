import itertools
import math
from collections import Counter

import numpy as np
import pytest

from specsim.linalg import tv_distance
from specsim.schur import (
    SpectrumPair,
    YoungDiagram,
    fixed_exponent_fit,
    game_success,
    min_copies,
    power_law_fit,
    sample_sw,
    schur_log,
    schur_oracle,
    shrsk_shape,
    spectra_family,
)
from specsim.streams import derive_stream


def partitions_up_to(n_max, max_rows):
    """All partitions of 1..n_max with at most max_rows rows."""
    out = []

    def rec(remaining, max_part, current):
        if remaining == 0:
            out.append(tuple(current))
            return
        if len(current) == max_rows:
            return
        for p in range(min(remaining, max_part), 0, -1):
            current.append(p)
            rec(remaining - p, p, current)
            current.pop()

    for n in range(1, n_max + 1):
        rec(n, n, [])
    return out


class TestSpectraFamilies:
    def test_k3_example(self):
        pair = spectra_family(3, 6)
        assert np.allclose(pair.alpha.entries, [0.25, 0.25, 0.25, 0.25, 0, 0])
        assert np.allclose(
            pair.beta.entries, [1 / 3, 1 / 3, 1 / 12, 1 / 12, 1 / 12, 1 / 12]
        )
        d = 6
        assert np.sum(pair.alpha.entries**3) == pytest.approx(9 / (4 * d * d))
        assert np.sum(pair.beta.entries**3) == pytest.approx(11 / (4 * d * d))

    def test_k4_example(self):
        pair = spectra_family(4, 4)
        assert np.allclose(pair.beta.entries, [0.5, 0.25, 0.25, 0.0])
        d = 4
        assert np.sum(pair.alpha.entries**4) == pytest.approx(17 / (4 * d**3))
        assert np.sum(pair.beta.entries**4) == pytest.approx(18 / (4 * d**3))

    def test_moment_matching_and_tv(self):
        for k in (2, 3, 4):
            for d in (k * 2, k * 3):
                pair = spectra_family(k, d)
                for j in range(1, k):
                    pa = np.sum(pair.alpha.entries**j)
                    pb = np.sum(pair.beta.entries**j)
                    assert abs(pa - pb) < 1e-12
                assert tv_distance(pair.alpha, pair.beta) == pytest.approx(
                    1.0 / k, abs=1e-12
                )

    def test_divisibility_enforced(self):
        with pytest.raises(ValueError):
            spectra_family(3, 7)
        with pytest.raises(ValueError):
            spectra_family(5, 10)


class TestRsk:
    def test_hand_cases(self):
        assert shrsk_shape([1, 1, 1]).parts == (3,)
        assert shrsk_shape([2, 1]).parts == (1, 1)
        assert shrsk_shape([1, 2, 1]).parts == (2, 1)

    def test_first_row_is_longest_weakly_increasing_subsequence(self):
        rng = derive_stream(1, "lis")
        for _ in range(20):
            word = rng.integers(1, 5, size=9)
            shape = shrsk_shape(word).parts
            best = 0
            for mask in range(1, 1 << 9):
                sub = [word[i] for i in range(9) if mask >> i & 1]
                if all(a <= b for a, b in zip(sub, sub[1:])):
                    best = max(best, len(sub))
            assert shape[0] == best

    def test_rejects_bad_words(self):
        with pytest.raises(ValueError):
            shrsk_shape([])
        with pytest.raises(ValueError):
            shrsk_shape([0, 1])


class TestSchurLog:
    def test_single_box(self):
        assert schur_log(YoungDiagram((1,)), [0.3, 0.7]) == pytest.approx(0.0)

    def test_elementary_and_hook(self):
        g = [0.5, 0.5]
        assert schur_log(YoungDiagram((1, 1)), g) == pytest.approx(math.log(0.25))
        assert schur_log(YoungDiagram((2, 1)), g) == pytest.approx(math.log(0.25))

    def test_h_closed_form_uniform_2(self):
        for n in (1, 2, 3):
            got = math.exp(schur_log(YoungDiagram((n,)), [0.5, 0.5]))
            assert got == pytest.approx((n + 1) / 2**n)

    def test_too_many_rows_gives_neg_inf(self):
        assert schur_log(YoungDiagram((1, 1, 1)), [0.5, 0.5]) == -math.inf
        assert schur_oracle(YoungDiagram((1, 1, 1)), [0.5, 0.5]) == 0.0

    def test_zero_entries_dropped(self):
        g_full = [0.6, 0.4]
        g_padded = [0.6, 0.4, 0.0, 0.0]
        lam = YoungDiagram((3, 1))
        assert schur_log(lam, g_padded) == pytest.approx(schur_log(lam, g_full))

    def test_oracle_agreement_exhaustive(self):
        rng = derive_stream(2, "oracle")
        for d in (2, 3, 4):
            g = rng.dirichlet(np.ones(d))
            for parts in partitions_up_to(6, d):
                lam = YoungDiagram(parts)
                want = schur_oracle(lam, g)
                got = schur_log(lam, g)
                assert abs(math.exp(got) - want) <= 1e-9 * want

    def test_exchangeability(self):
        rng = derive_stream(3, "exch")
        g = rng.dirichlet(np.ones(4))
        lam = YoungDiagram((4, 2, 1))
        base = schur_log(lam, g)
        for t in range(5):
            assert abs(schur_log(lam, derive_stream(t, "p").permutation(g)) - base) <= 1e-10

    def test_large_instance_finite(self):
        # dynamic range of the k=3 family at scan scale
        pair = spectra_family(3, 24)
        lam = YoungDiagram((150, 60, 30, 20, 10, 8, 6, 4, 4, 4, 2, 2))
        val = schur_log(lam, pair.beta.entries)
        assert math.isfinite(val)


class TestSampleSw:
    def test_single_letter_word(self, rng):
        assert sample_sw([0.3, 0.7], 1, rng).parts == (1,)

    def test_deterministic_distribution(self, rng):
        assert sample_sw([1.0, 0.0], 5, rng).parts == (5,)

    def test_matches_word_enumeration_law(self):
        gamma = np.array([0.7, 0.3])
        n = 3
        law = Counter()
        for word in itertools.product((1, 2), repeat=n):
            p = math.prod(gamma[w - 1] for w in word)
            law[shrsk_shape(word).parts] += p
        assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)
        # every shape's law weight is dim(lambda) * s_lambda: an integer multiple
        for parts, weight in law.items():
            s_val = math.exp(schur_log(YoungDiagram(parts), gamma))
            ratio = weight / s_val
            assert abs(ratio - round(ratio)) < 1e-9
        draws = Counter()
        m = 100_000
        rng = derive_stream(5, "sw-law")
        for _ in range(m):
            draws[sample_sw(gamma, n, rng).parts] += 1
        chi2 = sum(
            (draws[p] - m * q) ** 2 / (m * q) for p, q in law.items()
        )
        from scipy.stats import chi2 as chi2_dist

        p_value = float(chi2_dist.sf(chi2, df=len(law) - 1))
        assert p_value > 1e-4


class TestGame:
    def test_equal_spectra_exactly_half(self):
        pair = spectra_family(2, 6)
        same = SpectrumPair(2, 6, pair.alpha, pair.alpha)
        for n in (1, 4, 9):
            assert game_success(same, n, 300, derive_stream(6, "eq", n)) == 0.5

    def test_single_copy_is_half(self):
        pair = spectra_family(2, 6)
        assert game_success(pair, 1, 400, derive_stream(7, "one")) == 0.5

    def test_k2_d6_reference_point(self):
        pair = spectra_family(2, 6)
        assert game_success(pair, 9, 100_000, derive_stream(8, "pp")) >= 0.69

    def test_statistical_monotonicity(self):
        pair = spectra_family(2, 6)
        lows = [game_success(pair, 5, 4000, derive_stream(t, "lo")) for t in range(10)]
        highs = [game_success(pair, 20, 4000, derive_stream(t, "hi")) for t in range(10)]
        assert min(highs) > max(lows)


class TestMinCopies:
    def test_threshold_validated(self):
        pair = spectra_family(2, 6)
        with pytest.raises(ValueError):
            min_copies(pair, 0.5, 100, derive_stream(9, "t"))

    def test_k2_d6(self):
        pair = spectra_family(2, 6)
        n = min_copies(pair, 0.7, 10_000, derive_stream(10, "m"))
        assert abs(n - 9) <= 2


class TestPowerLawFit:
    def test_noiseless_recovery(self):
        pts = [(d, 2.0 * d**1.5 + 3.0) for d in (4, 8, 12, 20, 32)]
        a, c, b = power_law_fit(pts)
        assert a == pytest.approx(2.0, abs=2e-3)
        assert c == pytest.approx(1.5, abs=1e-3)
        assert b == pytest.approx(3.0, abs=2e-2)

    def test_reference_dataset_exponents(self):
        fig2 = list(zip(range(6, 49, 3), [21, 37, 56, 76, 97, 120, 145, 171, 196, 223, 253, 281, 312, 342, 376]))
        a, c, b = power_law_fit(fig2)
        assert abs(c - 1.37) <= 0.03
        fig3 = list(zip(range(4, 41, 4), [19, 51, 95, 147, 209, 274, 347, 426, 511, 598]))
        _, c3, _ = power_law_fit(fig3)
        assert abs(c3 - 1.53) <= 0.03

    def test_fixed_exponent_exposed(self):
        pts = [(d, 5.0 * d + 1.0) for d in (4, 8, 16)]
        a, b, rss = fixed_exponent_fit(pts, 1.0)
        assert a == pytest.approx(5.0) and b == pytest.approx(1.0)
        assert rss == pytest.approx(0.0, abs=1e-18)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            power_law_fit([(4, 10), (4, 12), (4, 13)])


class TestYoungDiagram:
    def test_validation(self):
        with pytest.raises(ValueError):
            YoungDiagram((2, 3))
        with pytest.raises(ValueError):
            YoungDiagram((0,))
        lam = YoungDiagram((3, 1))
        assert lam.n == 4 and lam.n_rows == 2
