import os
import subprocess
import sys

import numpy as np
import pytest

from radargest.tensor import _kernels_py as pyk
from radargest.tensor import kernels

ck = pytest.importorskip("radargest._core")


@pytest.fixture
def rng():
    return np.random.default_rng(99)


@pytest.mark.parametrize("stride,ph,pw", [(1, 0, 0), (1, 1, 1), (2, 1, 1), (3, 2, 0)])
def test_depthwise_conv_parity(rng, stride, ph, pw):
    x = rng.standard_normal((2, 4, 9, 7))
    w = rng.standard_normal((4, 3, 3))
    yc = ck.depthwise_conv2d_fwd(x, w, stride, ph, pw)
    yp = pyk.depthwise_conv2d_fwd(x, w, stride, ph, pw)
    np.testing.assert_allclose(yc, yp, atol=1e-12)

    gy = rng.standard_normal(yc.shape)
    np.testing.assert_allclose(
        ck.depthwise_conv2d_bwd_x(gy, w, x.shape, stride, ph, pw),
        pyk.depthwise_conv2d_bwd_x(gy, w, x.shape, stride, ph, pw),
        atol=1e-12,
    )
    np.testing.assert_allclose(
        ck.depthwise_conv2d_bwd_w(gy, x, 3, 3, stride, ph, pw),
        pyk.depthwise_conv2d_bwd_w(gy, x, 3, 3, stride, ph, pw),
        atol=1e-12,
    )


@pytest.mark.parametrize("oh,ow", [(1, 1), (3, 4), (5, 7), (2, 3)])
def test_maxpool_parity_including_tie_indices(rng, oh, ow):
    x = rng.standard_normal((2, 3, 5, 7))
    # Inject exact ties to confirm both backends use first-occurrence rule.
    x[0, 0] = 1.0
    yc, ic = ck.adaptive_maxpool2d_fwd(x, oh, ow)
    yp, ip = pyk.adaptive_maxpool2d_fwd(x, oh, ow)
    np.testing.assert_array_equal(yc, yp)
    np.testing.assert_array_equal(ic, ip)

    gy = rng.standard_normal(yc.shape)
    np.testing.assert_allclose(
        ck.adaptive_maxpool2d_bwd(gy, ic, 5, 7),
        pyk.adaptive_maxpool2d_bwd(gy, ip, 5, 7),
        atol=1e-12,
    )


@pytest.mark.parametrize("oh,ow", [(1, 1), (2, 3), (10, 14), (5, 7)])
def test_resize_parity(rng, oh, ow):
    x = rng.standard_normal((2, 3, 5, 7))
    np.testing.assert_array_equal(ck.resize_nearest_fwd(x, oh, ow), pyk.resize_nearest_fwd(x, oh, ow))
    gy = rng.standard_normal((2, 3, oh, ow))
    np.testing.assert_allclose(
        ck.resize_nearest_bwd(gy, 5, 7), pyk.resize_nearest_bwd(gy, 5, 7), atol=1e-12
    )


def _backend_of(env_value):
    env = dict(os.environ, RADARGEST_KERNELS=env_value)
    out = subprocess.run(
        [sys.executable, "-c", "from radargest.tensor import kernels; print(kernels.BACKEND)"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert out.returncode == 0, out.stderr
    return out.stdout.strip()


def test_env_var_selects_backend():
    assert _backend_of("py") == "py"
    assert _backend_of("c") == "c"
    assert _backend_of("auto") == "c"


def test_env_var_rejects_unknown_value():
    env = dict(os.environ, RADARGEST_KERNELS="fast")
    out = subprocess.run(
        [sys.executable, "-c", "from radargest.tensor import kernels"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert out.returncode != 0
    assert "RADARGEST_KERNELS" in out.stderr


def test_selected_backend_exposed():
    assert kernels.BACKEND in {"c", "py"}
