import json
import math

import numpy as np
import pytest
from scipy import integrate

from oscgp import (
    BorderCauchy,
    DecayRegime,
    Exponential,
    FgnLike,
    LampertiBifbm,
    TabulatedKernel,
    bifbm_cov,
    classify_decay,
    eval_cov,
    model_from_dict,
    variogram,
)
from oscgp.exceptions import ParameterError, UnclassifiableKernelError

REGISTRY = [Exponential(1.0), Exponential(0.5), BorderCauchy(), FgnLike(0.6), FgnLike(0.8), LampertiBifbm(0.6, 0.8),
            LampertiBifbm(0.5, 1.0)]
GRID = np.concatenate([np.linspace(0, 5, 51), np.geomspace(5, 1e4, 40)])


@pytest.mark.parametrize("model", REGISTRY, ids=repr)
def test_unit_variance_bounded_even(model):
    assert eval_cov(model, 0.0) == 1.0
    r = eval_cov(model, GRID)
    assert np.all(np.isfinite(r)) and np.all(np.abs(r) <= 1.0)
    np.testing.assert_array_equal(eval_cov(model, -GRID), r)


def test_exponential_and_fgn_at_zero():
    assert eval_cov(Exponential(1.0), 0.0) == 1.0
    assert eval_cov(FgnLike(0.7), 0.0) == 1.0


def test_fgn_formula():
    H = 0.8
    t = np.array([0.3, 1.0, 2.0, 7.5, 40.0])
    ref = 0.5 * ((t + 1) ** (2 * H) - 2 * t ** (2 * H) + np.abs(t - 1) ** (2 * H))
    np.testing.assert_allclose(eval_cov(FgnLike(H), t), ref, rtol=1e-10)


def test_fgn_half_is_white():
    np.testing.assert_array_equal(eval_cov(FgnLike(0.5), np.arange(1.0, 20.0)), 0.0)
    assert classify_decay(FgnLike(0.5)).case == "integrable"


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_lamperti_brownian_reduces_to_ou(t):
    assert eval_cov(LampertiBifbm(0.5, 1.0), t) == pytest.approx(math.exp(-t / 2), rel=1e-12)


@pytest.mark.parametrize("H,K", [(0.6, 0.8), (0.3, 1.5), (0.9, 0.5)])
def test_lamperti_kernel_is_bifbm_transform(H, K):
    # r_U(t) = e^{-HK t} R(1, e^t) / e^{..}: the Lamperti kernel of an HK-self-similar process
    for t in (0.05, 0.7, 3.0, 12.0):
        s, u = 1.0, math.exp(t)
        ref = bifbm_cov(H, K, s, u) / (s * u) ** (H * K)
        assert eval_cov(LampertiBifbm(H, K), t) == pytest.approx(ref, rel=1e-9, abs=1e-15)


def test_lamperti_exponential_decay():
    t = np.linspace(0, 20, 401)
    r = eval_cov(LampertiBifbm(0.6, 0.8), t)
    assert np.max(np.abs(r) * np.exp(0.3 * t)) < 10


def test_parameter_rejection_at_construction():
    for bad in (lambda: Exponential(0.0), lambda: FgnLike(1.0), lambda: FgnLike(0.4),
                lambda: LampertiBifbm(0.9, 1.5), lambda: LampertiBifbm(0.5, 2.0)):
        with pytest.raises(ParameterError):
            bad()


def test_classify():
    reg = classify_decay(Exponential(2.0))
    assert reg.case == "integrable" and reg.rate(400.0) == pytest.approx(20.0)
    reg = classify_decay(FgnLike(0.8))
    assert reg.case == "long_range" and reg.hurst == 0.8
    assert reg.rate(1e5) == pytest.approx(1e5 ** 0.2)
    reg = classify_decay(BorderCauchy())
    assert reg.case == "border"
    assert reg.rate(100.0) == pytest.approx(math.sqrt(100 / math.log(100)))
    assert classify_decay(LampertiBifbm(0.6, 0.8)).case == "integrable"


def test_tabulated_needs_declared_regime():
    k = TabulatedKernel(lambda t: np.exp(-np.abs(t) ** 2))
    with pytest.raises(UnclassifiableKernelError):
        classify_decay(k)
    k2 = TabulatedKernel(lambda t: np.exp(-np.abs(t) ** 2), declared_regime=DecayRegime("integrable"))
    assert classify_decay(k2).case == "integrable"
    with pytest.raises(ParameterError):
        TabulatedKernel(lambda t: 2.0 + 0 * t)


def test_variogram_examples():
    for m in REGISTRY:
        assert variogram(m, 0.0) == 0.0
        c = variogram(m, GRID)
        assert np.all((c >= 0) & (c <= 4))
    assert variogram(Exponential(1.0), math.log(2)) == pytest.approx(1.0, abs=1e-15)
    assert variogram(FgnLike(0.6), 1.0) == pytest.approx(2 * (1 - 0.5 * (2 ** 1.2 - 2)), abs=1e-14)


def test_integrable_tail():
    tail, _ = integrate.quad(lambda t: abs(eval_cov(Exponential(0.5), t)), 40.0, 1e4, limit=200)
    assert tail < 1e-6
    head, _ = integrate.quad(lambda t: abs(eval_cov(Exponential(0.5), t)), 0.0, 40.0)
    assert head == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("H", [0.6, 0.8, 0.95])
def test_long_range_ratio_stabilises(H):
    t = np.array([1e2, 1e3, 1e4])
    ratio = eval_cov(FgnLike(H), t) / t ** (2 * H - 2)
    assert np.all(np.abs(ratio / ratio[-1] - 1) < 0.05)
    assert ratio[-1] == pytest.approx(H * (2 * H - 1), rel=1e-3)


def test_border_reading():
    t = np.array([1e2, 1e4, 1e6])
    # t r(t) -> 1, the reading under which sqrt(T / log T) is the right normaliser
    np.testing.assert_allclose(t * eval_cov(BorderCauchy(), t), 1.0, rtol=1.1e-2)


class TestBifbmCov:
    def test_brownian(self):
        assert bifbm_cov(0.5, 1.0, 1.0, 2.0) == pytest.approx(1.0, abs=1e-15)

    def test_diagonal(self):
        assert bifbm_cov(0.75, 1.0, 1.0, 1.0) == pytest.approx(1.0, abs=1e-15)
        t = np.linspace(0.1, 3, 9)
        np.testing.assert_allclose(bifbm_cov(0.6, 0.8, t, t), t ** 0.96, rtol=1e-13)

    def test_value(self):
        ref = 2 ** -0.8 * ((1 + 2 ** 1.2) ** 0.8 - 1)
        assert ref == pytest.approx(0.917459, abs=1e-6)
        assert bifbm_cov(0.6, 0.8, 1.0, 2.0) == pytest.approx(ref, abs=1e-14)

    def test_symmetric(self):
        s, t = np.meshgrid(np.linspace(0, 2, 11), np.linspace(0, 2, 11))
        np.testing.assert_array_equal(bifbm_cov(0.3, 1.4, s, t), bifbm_cov(0.3, 1.4, t, s))

    @pytest.mark.parametrize("H", [0.2, 0.5, 0.8])
    def test_k1_is_fbm(self, H):
        s, t = np.meshgrid(np.linspace(0.05, 4, 20), np.linspace(0.05, 4, 20))
        fbm = 0.5 * (t ** (2 * H) + s ** (2 * H) - np.abs(t - s) ** (2 * H))
        np.testing.assert_allclose(bifbm_cov(H, 1.0, s, t), fbm, atol=1e-12)

    def test_rejections(self):
        for H, K in [(0.0, 1.0), (1.0, 0.5), (0.6, 2.0), (0.8, 1.3)]:
            with pytest.raises(ParameterError):
                bifbm_cov(H, K, 1.0, 1.0)
        with pytest.raises(ParameterError):
            bifbm_cov(0.5, 1.0, -1.0, 1.0)


def test_json_roundtrip():
    for m in REGISTRY[:6]:
        d = json.loads(json.dumps(m.to_dict()))
        assert model_from_dict(d) == m
    assert model_from_dict({"kind": "exp", "params": {"theta": 3}}) == Exponential(3.0)
    with pytest.raises(ParameterError):
        model_from_dict({"kind": "matern", "params": {}})
