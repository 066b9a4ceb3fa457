"""Volumetric agreement between two masks."""
import json
from dataclasses import dataclass

import numpy as np

from ._validation import check_mask, check_same_shape
from .exceptions import BothEmpty


@dataclass(frozen=True)
class AgreementReport:
    dice: float
    overlap: float
    volume_a: int
    volume_b: int
    intersection: int

    def to_dict(self):
        return {
            "dice": self.dice,
            "overlap": self.overlap,
            "volume_a": self.volume_a,
            "volume_b": self.volume_b,
            "intersection": self.intersection,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def compare(a, b):
    """Dice similarity and overlap coefficient of masks ``a`` and ``b``.

    Overlap is the intersection over the smaller volume. If exactly one mask
    is empty both scores are 0; two empty masks raise ``BothEmpty``.
    """
    a, b = check_mask(a), check_mask(b)
    check_same_shape(a, b)
    va, vb = int(np.count_nonzero(a)), int(np.count_nonzero(b))
    if va == 0 and vb == 0:
        raise BothEmpty("cannot compare two empty masks")
    inter = int(np.count_nonzero(a & b))
    if va == 0 or vb == 0:
        return AgreementReport(0.0, 0.0, va, vb, inter)
    return AgreementReport(
        dice=2.0 * inter / (va + vb),
        overlap=inter / min(va, vb),
        volume_a=va,
        volume_b=vb,
        intersection=inter,
    )


def dice_score(a, b):
    return compare(a, b).dice


def overlap_coefficient(a, b):
    return compare(a, b).overlap
