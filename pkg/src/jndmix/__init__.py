"""JND-bounded noise augmentation for no-reference image quality assessment."""

from .augment import (
    AugmentedSample,
    NoiseField,
    SignField,
    full_jnd_inject,
    gaussian_inject,
    inject,
    jndmix,
    make_noise,
    sample_lambda,
    sample_sign_field,
)
from .image_io import Image, JndMap, load_image, load_jnd_map, save_image, save_jnd_map
from .jnd_estimator import estimate_jnd, scale_map, to_luma
from .metrics import MetricReport, plcc, rank_with_ties, srcc
from .protocol import (
    DatasetManifest,
    Record,
    Split,
    load_manifest,
    make_split,
    repeat_protocol,
    subsample_train,
)
from .rng import derive_seed, make_rng, splitmix64

__version__ = "0.1.0"
