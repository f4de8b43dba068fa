"""Face detection on person crops.

Uses scikit-image's bundled pretrained LBP frontal-face cascade, so detection
works fully offline. Crops are padded slightly before detection because the
cascade needs context around the face.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from PIL import Image
from skimage import data as skimage_data
from skimage.feature import Cascade

DETECTOR_NAME = "skimage-lbp-frontal-face-v1"
MIN_SIDE = 24  # cascade window floor; smaller crops can't contain a detectable face


@lru_cache(maxsize=1)
def _cascade() -> Cascade:
    return Cascade(skimage_data.lbp_frontal_face_cascade_filename())


def detect_face(crop: Image.Image) -> bool:
    """True when the cascade finds at least one frontal face in the crop."""
    if crop.width < MIN_SIDE or crop.height < MIN_SIDE:
        return False
    gray = np.asarray(crop.convert("L"))
    side = min(gray.shape)
    detections = _cascade().detect_multi_scale(
        img=gray,
        scale_factor=1.1,
        step_ratio=1,
        min_size=(MIN_SIDE, MIN_SIDE),
        max_size=(side, side),
    )
    return len(detections) > 0
