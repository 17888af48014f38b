import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from jndmix.image_io import Image, JndMap


def random_image(rng, height, width, channels=3, smooth=False):
    if smooth:
        # low-frequency content gives luminance-adaptation dominated maps
        yy, xx = np.mgrid[0:height, 0:width]
        phase = rng.uniform(0, 2 * np.pi, size=channels)
        base = 127.5 + 120 * np.sin(xx[..., None] / rng.uniform(4, 20) + yy[..., None] / rng.uniform(4, 20) + phase)
        return Image(np.clip(np.rint(base), 0, 255).astype(np.uint8))
    return Image(rng.integers(0, 256, size=(height, width, channels), dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


image_arrays = st.integers(1, 3).flatmap(
    lambda c: hnp.arrays(
        np.uint8,
        st.tuples(st.integers(1, 9), st.integers(1, 9), st.just(1 if c < 3 else 3)),
    )
)

images = image_arrays.map(Image)

map_values = st.floats(0, 40, allow_nan=False, width=32)


def maps_like(shape):
    return hnp.arrays(np.float32, shape, elements=map_values).map(JndMap)


# acceptance criteria report, filled by tests/test_acceptance.py
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for tag, ok, text in sorted(ACCEPTANCE_RESULTS, key=lambda r: int(r[0][2:])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {tag} {text}")
