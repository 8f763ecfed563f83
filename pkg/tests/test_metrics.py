import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsfp import oracles
from tsfp.losses import loss_cc, loss_nss
from tsfp.metrics import (
    EvalRecord,
    aggregate,
    format_report,
    frame_record,
    metric_auc_judd,
    metric_cc,
    metric_nss,
    metric_sauc,
    metric_sim,
)
from tsfp.tensor import Tensor


def _case(seed, n=16):
    r = np.random.default_rng(seed)
    S = r.uniform(0, 1, n)
    G = r.uniform(0, 1, n)
    F = np.zeros(n, bool)
    F[r.choice(n, 3, replace=False)] = True
    return S, F, G


class TestNSSCC:
    def test_nss_examples(self):
        assert metric_nss([0.0, 1.0], [0, 1]) == 1.0
        assert abs(metric_nss([0.2, 0.5, 0.9], [1, 1, 1])) < 1e-15

    def test_cc_examples(self):
        G = np.array([0.1, 0.5, 0.2, 0.9])
        assert metric_cc(G, G) == pytest.approx(1.0, abs=1e-12)
        assert metric_cc([0.1, 0.3, 0.2, 0.4], [0.4, 0.2, 0.3, 0.1]) == pytest.approx(-1.0, abs=1e-12)

    def test_negated_losses_bit_exact(self):
        for seed in range(20):
            S, F, G = _case(seed)
            t = Tensor(S, dtype=np.float64)
            assert metric_nss(S, F) == -float(loss_nss(t, F).data)
            assert metric_cc(S, G) == -float(loss_cc(t, G).data)

    def test_scalar_oracles(self):
        for seed in range(50):
            S, F, G = _case(seed)
            assert abs(metric_nss(S, F) - oracles.nss_naive(S, F)) < 1e-12
            assert abs(metric_cc(S, G) - oracles.cc_naive(S, G)) < 1e-12
            assert abs(metric_sim(S, G) - oracles.sim_naive(S, G)) < 1e-12

    def test_degenerate_flag(self):
        assert metric_nss(np.full(4, 0.2), [1, 0, 0, 0], return_flag=True) == (0.0, True)


class TestSIM:
    def test_identity(self):
        G = np.array([0.1, 0.5, 0.2])
        assert metric_sim(G, G) == pytest.approx(1.0, abs=1e-15)

    def test_disjoint(self):
        assert metric_sim([1, 0, 0], [0, 0, 1]) == 0.0

    def test_hand_example(self):
        assert metric_sim([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.75, abs=1e-15)

    def test_zero_sum(self):
        with pytest.raises(ValueError):
            metric_sim([0, 0], [1, 1])

    def test_scale_invariant_not_shift_invariant(self):
        S, _, G = _case(4)
        assert abs(metric_sim(3.0 * S, G) - metric_sim(S, G)) < 1e-12
        assert abs(metric_sim(S + 1.0, G) - metric_sim(S, G)) > 1e-3


class TestAUC:
    def test_perfect(self):
        S = np.array([0.9, 0.8, 0.1, 0.2, 0.3])
        F = np.array([1, 1, 0, 0, 0])
        assert metric_auc_judd(S, F) == 1.0

    def test_constant(self):
        assert metric_auc_judd(np.full(9, 0.3), np.eye(3).ravel()) == 0.5
        assert metric_sauc(np.full(9, 0.3), np.eye(3).ravel(), [np.ones(9)]) == 0.5

    def test_sauc_perfect(self):
        S = np.array([1.0, 0.5, 0.0])
        assert metric_sauc(S, [1, 0, 0], [[0, 0, 1]]) == 1.0

    def test_errors(self):
        with pytest.raises(ValueError):
            metric_auc_judd([0.1, 0.2], [0, 0])
        with pytest.raises(ValueError):
            metric_sauc([0.1, 0.2], [1, 0], [])
        with pytest.raises(ValueError):
            metric_sauc([0.1, 0.2], [1, 0], [[0, 0]])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_against_sweep_oracle(self, seed):
        r = np.random.default_rng(seed)
        n = int(r.integers(2, 17))
        S = np.round(r.uniform(0, 1, n), 1)  # rounding creates ties
        F = np.zeros(n, bool)
        F[r.choice(n, int(r.integers(1, n)), replace=False)] = True
        negs = [r.uniform(0, 1, n) < 0.4 for _ in range(2)]
        negs[0][0] = True
        assert abs(metric_auc_judd(S, F) - oracles.auc_judd_naive(S, F)) < 1e-9
        assert abs(metric_sauc(S, F, negs) - oracles.auc_shuffled_naive(S, F, negs)) < 1e-9

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(-10, 10))
    def test_affine_invariance(self, seed, a, b):
        S, F, G = _case(seed)
        negs = [_case(seed + 1)[1]]
        S2 = a * S + b
        assert metric_auc_judd(S2, F) == pytest.approx(metric_auc_judd(S, F), abs=1e-12)
        assert metric_sauc(S2, F, negs) == pytest.approx(metric_sauc(S, F, negs), abs=1e-12)
        assert metric_nss(S2, F) == pytest.approx(metric_nss(S, F), abs=1e-9)
        assert metric_cc(S2, G) == pytest.approx(metric_cc(S, G), abs=1e-12)

    def test_ranges(self):
        for seed in range(30):
            S, F, G = _case(seed)
            rec = frame_record("v", 1, S, F, G, [_case(seed + 100)[1]])
            assert 0 <= rec.auc_j <= 1 and 0 <= rec.s_auc <= 1 and 0 <= rec.sim <= 1 and -1 <= rec.cc <= 1


def _rec(video, frame, v, degenerate=False):
    return EvalRecord(video, frame, v, v, v, v, v, degenerate=degenerate)


class TestAggregate:
    def test_single(self):
        out = aggregate([_rec("a", 1, 0.3)])
        assert out.values() == _rec("a", 1, 0.3).values()

    def test_video_mean_convention(self):
        recs = [_rec("a", 1, 0.4)] + [_rec("b", k, 0.6) for k in range(1, 6)]
        out = aggregate(recs)
        assert all(v == pytest.approx(0.5) for v in out.values().values())
        assert out.n_frames == 6

    def test_degenerate_frames_excluded_from_sigma_metrics(self):
        recs = [_rec("a", 1, 1.0), _rec("a", 2, 3.0), _rec("a", 3, 0.0, degenerate=True)]
        out = aggregate(recs)
        assert out.nss == 2.0 and out.cc == 2.0
        assert out.sim == pytest.approx(4.0 / 3)
        assert out.n_excluded == 1

    def test_nan_skipped(self):
        a = _rec("a", 1, 0.5)
        a.s_auc = math.nan
        out = aggregate([a, _rec("a", 2, 0.7)])
        assert out.s_auc == pytest.approx(0.7)

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([])


def test_report_format():
    recs = [_rec("b", 1, 0.5), _rec("a", 2, 0.25), _rec("a", 1, 0.75, degenerate=True)]
    lines = format_report(recs).splitlines()
    assert lines[0] == "video,frame,nss,cc,sim,aucj,sauc"
    assert lines[1].startswith("a,1,0.750000") and lines[2].startswith("a,2,") and lines[3].startswith("b,1,")
    assert lines[4] == "a,mean,0.250000,0.250000,0.500000,0.500000,0.500000"
    assert lines[5].startswith("b,mean,")
    assert lines[6] == "ALL,mean,0.375000,0.375000,0.500000,0.500000,0.500000"
    assert lines[7] == "# frames=3 excluded_degenerate=1 videos=2"
    assert format_report(list(reversed(recs))) == format_report(recs)
