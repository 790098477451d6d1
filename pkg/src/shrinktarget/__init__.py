"""Exact shrinking-target experiments on the circle."""
__version__ = "0.1.0"

from .arcs import Arc, ArcSet, circle_distance, circular_gaps, format_rational
from .covering import CoverProfile, covering_profile, covering_radius, rate_report
from .maps import IET, CircleMap, Doubling, NotInvertibleError, Odometer, Rotation, RotationAngle
from .random_covering import (CoverageEstimate, LengthFamily, classify_lengths, coverage_probability,
                              sample_cover, shepp_partial_sums)
from .rates import HorizonError, RateSeq
from .targets import (AbstractSets, FixedSet, GeometricBalls, HitRecord, SelfBalls, hits,
                      scaled_distance_min, tail_ball_union, tail_preimage_union, visibility_fraction)

__all__ = [
    "AbstractSets", "Arc", "ArcSet", "CircleMap", "CoverProfile", "CoverageEstimate", "Doubling",
    "FixedSet", "GeometricBalls", "HitRecord", "HorizonError", "IET", "LengthFamily",
    "NotInvertibleError", "Odometer", "RateSeq", "Rotation", "RotationAngle", "SelfBalls",
    "circle_distance", "circular_gaps", "classify_lengths", "coverage_probability",
    "covering_profile", "covering_radius", "format_rational", "hits", "rate_report", "sample_cover",
    "scaled_distance_min", "shepp_partial_sums", "tail_ball_union", "tail_preimage_union",
    "visibility_fraction",
]
