import math

import numpy as np
import pytest

from specsim.linalg import random_density_from_spectrum, tv_distance
from specsim.pipeline import (
    PipelineParams,
    choose_parameters,
    desk_params,
    learn_spectrum,
    run_pipeline,
)
from specsim.streams import derive_stream

from conftest import random_state

D, EPS = 8, 0.3


class TestParams:
    def test_invariants(self):
        with pytest.raises(ValueError):
            PipelineParams(d=8, eps=1.5)
        with pytest.raises(ValueError):
            PipelineParams(d=8, eps=0.3, c_k=0.2)  # above 2/19
        with pytest.raises(ValueError):
            PipelineParams(d=8, eps=0.3, c_k=0.0)

    def test_choose_parameters_regression(self):
        params = PipelineParams(d=16, eps=0.3, c_k=0.1, c_b=1.0, c2=1.0)
        n, b, k = choose_parameters(16, 0.3, params)
        # frozen by direct substitution: K = max(1, round(0.1 ln16/ln ln16)),
        # B = 0.09 K^2/16, n = ceil(16 B^-2 / 0.09)
        assert k == 1
        assert b == pytest.approx(0.005625)
        assert n == 5618656

    def test_k_nondecreasing_in_d(self):
        params = lambda d: PipelineParams(d=d, eps=0.3, c_k=0.1)
        ks = [choose_parameters(d, 0.3, params(d))[2] for d in (4, 16, 64, 256)]
        assert all(a <= b for a, b in zip(ks, ks[1:]))

    def test_b_clamped(self):
        p = PipelineParams(d=4, eps=1.0, c_b=1000.0)
        _, b, _ = choose_parameters(4, 1.0, p)
        assert b == 1.0

    def test_small_d_rejected(self):
        with pytest.raises(ValueError):
            choose_parameters(3, 0.3, PipelineParams(d=3, eps=0.3))


class TestLearnSpectrum:
    def test_pure_state(self):
        alpha = np.zeros(D)
        alpha[0] = 1.0
        hits = 0
        for seed in range(20):
            rho = random_density_from_spectrum(alpha, derive_stream(seed, "pure"))
            est = learn_spectrum(rho, desk_params(D, EPS, seed=seed))
            if tv_distance(est, alpha) <= EPS:
                hits += 1
        assert hits >= 18

    def test_maximally_mixed(self):
        alpha = np.full(D, 1 / D)
        rho = np.eye(D) / D
        hits = 0
        ranks = []
        for seed in range(20):
            run = run_pipeline(rho, desk_params(D, EPS, seed=seed))
            ranks.append(run.diagnostics.rank_r)
            if tv_distance(run.spectrum, alpha) <= EPS:
                hits += 1
        assert hits >= 18
        assert np.median(ranks) == 0  # pure small-bucket path is typical

    def test_output_is_normalized_spectrum(self):
        for seed in range(10):
            alpha, rho = random_state(D, seed, "norm")
            run = run_pipeline(rho, desk_params(D, EPS, seed=seed))
            ent = run.spectrum.entries
            assert np.all(np.diff(ent) <= 1e-12)
            assert np.all(ent >= 0)
            assert ent.sum() == pytest.approx(1.0, abs=1e-9)

    def test_bit_reproducible(self):
        _, rho = random_state(D, 3, "repro")
        a = learn_spectrum(rho, desk_params(D, EPS, seed=11))
        b = learn_spectrum(rho, desk_params(D, EPS, seed=11))
        assert np.array_equal(a.entries, b.entries)

    def test_decomposition_audit(self):
        for seed in range(15):
            alpha, rho = random_state(D, seed, "audit")
            run = run_pipeline(rho, desk_params(D, EPS, seed=seed))
            tv = tv_distance(run.spectrum, alpha)
            assert tv <= run.diagnostics.audit_bound + 1e-9

    def test_dimension_mismatch_rejected(self):
        _, rho = random_state(4, 0, "dim")
        with pytest.raises(ValueError):
            learn_spectrum(rho, desk_params(8, EPS))

    def test_explicit_overrides_respected(self):
        _, rho = random_state(D, 1, "ovr")
        params = desk_params(D, EPS, seed=5, n_copies=900, threshold_b=0.3, k_moments=2)
        run = run_pipeline(rho, params)
        diag = run.diagnostics
        assert (diag.n_copies, diag.threshold_b, diag.k_moments) == (900, 0.3, 2)
