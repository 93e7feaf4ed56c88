import numpy as np
import pytest

from panogabor.geometry import latitudes, longitudes

# Lines recorded by tests/test_acceptance.py, echoed in the terminal summary.
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def brute_tangent_patch(img, row, col, size=3, step=None):
    """Tangent patch built from the east/north basis of the tangent plane.

    Independent of the offset tables used by the library: points are placed
    on the plane in 3-D, normalised onto the sphere and sampled through
    ``bilinear_sample``.
    """
    from panogabor.geometry import bilinear_sample

    h, w = img.shape[-2:]
    step = 2 * np.pi / w if step is None else step
    lat0 = latitudes(h)[row]
    lon0 = longitudes(w)[col]
    centre = np.array([np.cos(lat0) * np.sin(lon0), np.sin(lat0), np.cos(lat0) * np.cos(lon0)])
    east = np.array([np.cos(lon0), 0.0, -np.sin(lon0)])
    north = np.array([-np.sin(lat0) * np.sin(lon0), np.cos(lat0), -np.sin(lat0) * np.cos(lon0)])
    k = size // 2
    out = np.empty(img.shape[:-2] + (size, size))
    for i in range(size):
        for j in range(size):
            p = centre + (j - k) * step * east + (k - i) * step * north
            p = p / np.linalg.norm(p)
            lat = np.arcsin(p[1])
            lon = np.arctan2(p[0], p[2])
            out[..., i, j] = bilinear_sample(img, lat, lon)
    return out


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
