import numpy as np
import pytest

from dceeval.images import Image2D, Phase


def make_image(pixels, case_id="case", phase=Phase.PRE, slice_index=0) -> Image2D:
    return Image2D(np.asarray(pixels, dtype=np.uint8), case_id, phase, slice_index)


def random_image(rng, h, w, case_id="case", phase=Phase.PRE, slice_index=0) -> Image2D:
    return make_image(rng.integers(0, 256, size=(h, w)), case_id, phase, slice_index)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
