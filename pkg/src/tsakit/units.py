"""Unit conventions and conversions.

Internal units are millimeters, grams, radians, seconds, and newton
meters. The command line accepts and reports twist in revolutions.
"""

from __future__ import annotations

import math

GRAVITY = 9.81  # m/s^2, fixed

TWO_PI = 2.0 * math.pi


def grams_to_newtons(mass_g: float) -> float:
    """Weight of a mass in grams, in newtons."""
    return mass_g * 1e-3 * GRAVITY


def rev_to_rad(rev: float) -> float:
    return rev * TWO_PI


def rad_to_rev(rad: float) -> float:
    return rad / TWO_PI
