import numpy as np
import pytest

from _gradcheck import gradcheck
from radargest.classify import (
    ClassifierConfig,
    build_classifier,
    classify,
    predict,
    to_range_doppler,
)
from radargest.degrade import complex_to_channels
from radargest.errors import ConfigError
from radargest.simulate import (
    Constant,
    GestureScene,
    Linear,
    RadarParams,
    Scatterer,
    synthesize_cube,
)
from radargest.sr import SafmnConfig, build_safmn, safmn_forward
from radargest.tensor import Tensor, backward, ops

TINY = ClassifierConfig(
    num_classes=3,
    cnn_channels=(2, 3),
    tcn_channels=4,
    tcn_kernel=3,
    tcn_dilations=(1, 2),
    hidden=5,
)


def t(a, grad=False):
    return Tensor(np.asarray(a, dtype=np.float64), requires_grad=grad)


# ---------------------------------------------------------------------------
# to_range_doppler
# ---------------------------------------------------------------------------

def test_static_scene_energy_in_dc_bin():
    radar = RadarParams(k_frames=2, m_pulses=8, n_fast=16)
    scene = GestureScene(
        radar=radar,
        scatterers=[Scatterer(Constant(0.2), Constant(1.0))],
        label=0,
    )
    cube = synthesize_cube(scene)
    maps = to_range_doppler(t(complex_to_channels(cube))).data
    peak = maps.max()
    assert peak > 0
    assert maps[:, 1:, :].max() < 1e-5 * peak


def test_moving_target_peak_at_analytic_bin():
    radar = RadarParams(r_min=0.1, r_max=0.3, n_fast=4, m_pulses=32, k_frames=1)
    scene = GestureScene(
        radar=radar,
        scatterers=[Scatterer(Linear(0.2, -0.1), Constant(1.0))],
        label=0,
    )
    cube = synthesize_cube(scene)
    maps = to_range_doppler(t(complex_to_channels(cube))).data
    doppler_profile = maps[0].sum(axis=1)
    assert abs(int(np.argmax(doppler_profile)) - 6) <= 1


def test_parseval_per_frame():
    rng = np.random.default_rng(0)
    z = rng.standard_normal((3, 8, 5)) + 1j * rng.standard_normal((3, 8, 5))
    x = np.stack([z.real, z.imag])
    maps = to_range_doppler(t(x)).data
    for f in range(3):
        lhs = np.sum(maps[f] ** 2)
        rhs = 8 * np.sum(np.abs(z[f]) ** 2)
        assert abs(lhs - rhs) / rhs < 1e-9


def test_map_values_nonnegative_finite():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 2, 4, 6))
    maps = to_range_doppler(t(x)).data
    assert np.all(maps >= 0)
    assert np.all(np.isfinite(maps))


def test_range_doppler_gradcheck_4x4():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((2, 1, 4, 4))

    def f(xx):
        return ops.sum(to_range_doppler(xx))

    gradcheck(f, x)


def test_range_doppler_shape_validation():
    with pytest.raises(ValueError):
        to_range_doppler(t(np.zeros((3, 1, 4, 4))))


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def test_logits_shape():
    store = build_classifier(TINY, rng_seed=0)
    maps = t(np.random.default_rng(3).standard_normal((3, 8, 16)) ** 2)
    assert classify(maps, store, TINY).shape == (3,)


def test_permuting_head_rows_permutes_logits():
    store = build_classifier(TINY, rng_seed=1)
    maps = t(np.abs(np.random.default_rng(4).standard_normal((2, 8, 8))))
    base = classify(maps, store, TINY).data
    perm = [2, 0, 1]
    store["head.out.w"].data = store["head.out.w"].data[perm]
    store["head.out.b"].data = store["head.out.b"].data[perm]
    permuted = classify(maps, store, TINY).data
    np.testing.assert_allclose(permuted, base[perm], atol=1e-12)


def test_classifier_full_gradient_check():
    store = build_classifier(TINY, rng_seed=2)
    maps = np.abs(np.random.default_rng(5).standard_normal((3, 8, 16)))
    names = store.names()
    params = [store[n].data.copy() for n in names]

    from test_sr_model import StoreView

    def f(m, *tensors):
        logits = classify(m, StoreView(names, tensors), TINY)
        return ops.sum(ops.mul(logits, logits))

    gradcheck(f, maps, *params)


def test_classifier_small_maps_rejected():
    store = build_classifier(TINY, rng_seed=3)
    with pytest.raises(ConfigError):
        classify(t(np.zeros((2, 3, 3))), store, TINY)


def test_classifier_single_frame_sequence():
    store = build_classifier(TINY, rng_seed=4)
    maps = t(np.abs(np.random.default_rng(6).standard_normal((1, 8, 8))))
    assert classify(maps, store, TINY).shape == (3,)


def test_classifier_deterministic():
    store = build_classifier(TINY, rng_seed=5)
    maps = np.abs(np.random.default_rng(7).standard_normal((3, 8, 8)))
    a = classify(t(maps), store, TINY).data
    b = classify(t(maps), store, TINY).data
    np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------

def test_predict_examples():
    assert predict(np.array([0.1, 2.0, -1.0])) == 1
    assert predict(np.array([3.0, 3.0, 3.0])) == 0
    logits = np.array([0.5, -0.2, 0.9])
    assert predict(logits + 100.0) == predict(logits)
    assert predict(logits * 7.0) == predict(logits)


def test_predict_empty_rejected():
    with pytest.raises(ValueError):
        predict(np.array([]))


def test_config_validation():
    with pytest.raises(ConfigError):
        ClassifierConfig(num_classes=1)
    with pytest.raises(ConfigError):
        ClassifierConfig(tcn_dilations=(1, 3))
    with pytest.raises(ConfigError):
        ClassifierConfig(tcn_dilations=(2, 1))
    with pytest.raises(ConfigError):
        ClassifierConfig(tcn_dilations=())


# ---------------------------------------------------------------------------
# end-to-end differentiability
# ---------------------------------------------------------------------------

def test_joint_path_populates_both_param_stores():
    sr_config = SafmnConfig(base_channels=4, num_fmm_blocks=1, ds=2, df=2)
    sr_store = build_safmn(sr_config, rng_seed=6)
    clf_store = build_classifier(TINY, rng_seed=7)
    lr = t(np.random.default_rng(8).standard_normal((2, 2, 4, 8)))

    hr = safmn_forward(lr, sr_store, sr_config)  # (2, 2, 8, 16)
    maps = to_range_doppler(hr)
    logits = classify(maps, clf_store, TINY)
    backward(ops.sum(ops.mul(logits, logits)))

    for name, p in list(sr_store.items()) + list(clf_store.items()):
        assert p.grad is not None, f"no gradient reached {name}"
        assert np.all(np.isfinite(p.grad))
    assert any(np.abs(p.grad).max() > 0 for _, p in sr_store.items())
