import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panogabor.gabor import (
    DISTORTION_MODES,
    GaborParams,
    _gabor_parts,
    distortion_coefficient,
    distortion_profile,
    export_bank_image,
    gabor_kernel,
    latitude_bank_stack,
    orientations,
    pano_gabor_bank,
)
from panogabor.geometry import latitudes


def reference_kernel(f, theta, psi, sigma):
    """Scalar loop straight from the filter definition."""
    g = np.empty((3, 3))
    for i, y in enumerate((-1, 0, 1)):
        for j, x in enumerate((-1, 0, 1)):
            xr = x * math.cos(theta) + y * math.sin(theta)
            yr = -x * math.sin(theta) + y * math.cos(theta)
            g[i, j] = math.exp(-0.5 * (xr * xr + yr * yr) / sigma**2) * math.cos(f * xr + psi)
    return g / (2 * math.pi * sigma**2)


class TestDistortionCoefficient:
    def test_linear(self):
        assert distortion_coefficient(0.0) == 0.0
        assert distortion_coefficient(np.pi / 2) == pytest.approx(math.pi**2 / 4, abs=1e-12)
        assert distortion_coefficient(-np.pi / 2) == pytest.approx(2.4674011002723395, abs=1e-12)

    def test_cosine(self):
        assert distortion_coefficient(0.0, "cosine") == 1.0
        assert distortion_coefficient(np.pi / 3, "cosine") == pytest.approx(0.5, abs=1e-15)

    def test_inverse_cosine(self):
        assert distortion_coefficient(0.0, "inverse_cosine") == 1.0
        assert distortion_coefficient(np.pi / 3, "inverse_cosine") == pytest.approx(2.0)
        assert distortion_coefficient(np.pi / 2, "inverse_cosine") == 10.0
        assert distortion_coefficient(1.5, "inverse_cosine") == 10.0  # 1/cos(1.5) ~ 14.1

    @pytest.mark.parametrize("lat", [1.6, -2.0, np.nan])
    def test_out_of_range(self, lat):
        with pytest.raises(ValueError):
            distortion_coefficient(lat)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            distortion_coefficient(0.1, "quadratic")

    @pytest.mark.parametrize("mode", DISTORTION_MODES)
    def test_profiles_even(self, mode):
        c = distortion_profile(64, mode)
        assert np.array_equal(c, c[::-1])

    def test_linear_profile_shape(self):
        c = distortion_profile(65, "linear")
        assert c[32] == 0.0 and c.argmin() == 32
        assert c[0] == c.max()
        c = distortion_profile(65, "cosine")
        assert c[32] == 1.0 and c.argmax() == 32


class TestKernel:
    @pytest.mark.parametrize("theta", list(orientations()) + [0.3, -1.1])
    @pytest.mark.parametrize("psi", [0.0, 0.7])
    def test_matches_reference(self, theta, psi):
        f, sigma = 2.1, 1.3
        np.testing.assert_allclose(gabor_kernel(f, theta, psi, sigma), reference_kernel(f, theta, psi, sigma), rtol=1e-12, atol=1e-16)

    def test_centre(self):
        sigma = math.pi / (math.pi / 2 + 0.1)
        k = gabor_kernel(math.pi / 2, 0.0, 0.0, sigma)
        assert k[1, 1] == pytest.approx(0.045016052627256734, rel=1e-12)
        k = gabor_kernel(1.0, 0.4, 0.9, 1.5)
        assert k[1, 1] == pytest.approx(math.cos(0.9) / (2 * math.pi * 1.5**2), rel=1e-12)

    @pytest.mark.parametrize("c", [0.0, 1.0, 2.4674])
    def test_pi_periodic(self, c):
        p = GaborParams.from_coefficient(c)
        th = p.thetas
        assert np.array_equal(gabor_kernel(p.frequency, th, 0.0, p.sigma), gabor_kernel(p.frequency, th + np.pi, 0.0, p.sigma))

    def test_vertical_orientation_carrier(self):
        env, carrier = _gabor_parts(math.pi / 2, math.pi / 2, 0.0, 1.88)
        # carrier depends on y only: constant along each row
        assert np.all(carrier[0] == carrier[0, 0]) and np.all(carrier[2] == carrier[2, 0])
        k = gabor_kernel(math.pi / 2, math.pi / 2, 0.0, 1.88)
        np.testing.assert_allclose(k / env, (carrier / (2 * math.pi * 1.88**2)), rtol=1e-15)

    def test_envelope_isotropic(self):
        p = GaborParams.from_coefficient(0.7)
        k = gabor_kernel(p.frequency, p.thetas, p.psi, p.sigma)
        _, carrier = _gabor_parts(p.frequency, p.thetas, p.psi, p.sigma)
        env = k / carrier
        np.testing.assert_allclose(env, np.broadcast_to(env[0], env.shape), rtol=1e-12)

    @pytest.mark.parametrize("f,sigma", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
    def test_rejects(self, f, sigma):
        with pytest.raises(ValueError):
            gabor_kernel(f, 0.0, 0.0, sigma)


class TestBank:
    def test_equator_bank(self):
        b = pano_gabor_bank(0.0, 0.0)
        assert b.params.frequency == pytest.approx(math.pi / 2, rel=1e-15)
        assert b.params.sigma == pytest.approx(1.880296600613396, rel=1e-15)
        assert b.params.psi == 0.0
        assert b.kernels.shape == (8, 3, 3)

    def test_unit_coefficient(self):
        b = pano_gabor_bank(1.0)
        assert b.params.frequency == pytest.approx(math.pi, rel=1e-15)
        assert b.params.sigma == pytest.approx(0.9691509666122736, rel=1e-15)

    def test_epsilon(self):
        p = pano_gabor_bank(0.5, 1.0).params
        assert p.psi == pytest.approx(math.pi)
        assert p.frequency == pytest.approx(math.pi / 2 * math.sqrt(2) * 1.5)

    def test_thetas_exact(self):
        th = pano_gabor_bank(0.3).params.thetas
        for i, t in enumerate(th, start=1):
            assert abs(t * 8 / math.pi - i) <= np.spacing(float(i))

    def test_kernels_use_theta_grid(self):
        b = pano_gabor_bank(0.4)
        p = b.params
        for i, t in enumerate(p.thetas):
            np.testing.assert_allclose(b.kernels[i], reference_kernel(p.frequency, t, p.psi, p.sigma), rtol=1e-12, atol=1e-16)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            pano_gabor_bank(-0.1)

    def test_reproducible(self):
        a, b = pano_gabor_bank(0.37, 0.5), pano_gabor_bank(0.37, 0.5)
        assert np.array_equal(a.kernels, b.kernels)


@settings(max_examples=50)
@given(st.floats(0, 20), st.floats(0, 20), st.floats(-2, 2))
def test_monotone_in_coefficient(c1, c2, eps):
    lo, hi = sorted((c1, c2))
    if hi - lo < 1e-9:  # below float resolution of (1 + c)
        return
    a, b = GaborParams.from_coefficient(lo, eps), GaborParams.from_coefficient(hi, eps)
    assert b.frequency > a.frequency and b.sigma < a.sigma


@settings(max_examples=50)
@given(st.floats(0, 50), st.floats(-3, 3))
def test_sigma_identity(c, eps):
    p = GaborParams.from_coefficient(c, eps)
    assert p.frequency > 0 and p.sigma > 0
    assert abs(p.sigma * (p.frequency + 0.1) - math.pi) <= 1e-12


class TestStack:
    def test_height_three(self):
        banks = latitude_bank_stack(3)
        assert banks[1].params.coefficient == 0.0
        assert banks[1].params.sigma == pytest.approx(1.880296600613396)
        assert banks[0].params.coefficient == pytest.approx(abs(latitudes(3)[0]) * math.pi / 2)

    def test_height_one(self):
        (b,) = latitude_bank_stack(1)
        assert b.params.coefficient == 0.0

    @pytest.mark.parametrize("mode", ["linear", "cosine"])
    def test_symmetric(self, mode):
        banks = latitude_bank_stack(16, mode=mode)
        for r in range(16):
            assert np.array_equal(banks[r].kernels, banks[15 - r].kernels)

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            latitude_bank_stack(0)


class TestExport:
    def test_one_bank(self):
        img = export_bank_image([pano_gabor_bank(0.0)])
        assert img.shape == (48, 8 * 48) and img.dtype == np.uint8
        # nearest-neighbour blocks
        assert np.all(img[:16, :16] == img[0, 0])

    def test_flat_kernel_gray(self):
        img = export_bank_image(np.ones((1, 8, 3, 3)))
        assert np.all(img == 128)

    def test_normalised(self):
        img = export_bank_image([pano_gabor_bank(1.0)])
        tile = img[:48, :48]
        assert tile.min() == 0 and tile.max() == 255

    def test_tall_stack(self):
        img = export_bank_image(latitude_bank_stack(512), scale=1)
        assert img.shape == (512 * 3, 8 * 3)
