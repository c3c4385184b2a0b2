"""Acuity unit conversions.

The canonical unit throughout the package is the visual angle subtended by
an optotype's stroke, in minutes of arc (arcmin). logMAR is log10(arcmin)
and a Snellen fraction ``num/den`` corresponds to ``den/num`` arcmin
(20/20 == 1 arcmin).
"""

from __future__ import annotations

import math


def arcmin_to_logmar(arcmin: float) -> float:
    """log10 of the visual angle. Rejects non-positive sizes."""
    if arcmin <= 0:
        raise ValueError(f"arcmin must be positive, got {arcmin}")
    return math.log10(arcmin)


def logmar_to_arcmin(logmar: float) -> float:
    return 10.0**logmar


def snellen_to_arcmin(numerator: float, denominator: float) -> float:
    """Snellen fraction (e.g. 20/40 or 6/6) to arcmin.

    The fraction is testing-distance / distance-at-which-normal-vision
    resolves the line, so 20/40 means the patient needs letters twice the
    normal angular size: 2.0 arcmin.
    """
    if numerator <= 0:
        raise ValueError(f"Snellen numerator must be positive, got {numerator}")
    if denominator <= 0:
        raise ValueError(f"Snellen denominator must be positive, got {denominator}")
    return denominator / numerator


def arcmin_to_snellen_denominator(arcmin: float, base: float = 20.0) -> float:
    """Denominator D such that base/D is the Snellen fraction for this angle."""
    if arcmin <= 0:
        raise ValueError(f"arcmin must be positive, got {arcmin}")
    return base * arcmin
