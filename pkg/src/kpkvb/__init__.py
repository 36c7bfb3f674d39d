"""KPKVB random hyperbolic graphs: sampling, adjacency, a layered Hamilton
cycle construction and a counting obstruction to near-perfect matchings."""
from .geometry import PolarPoint, hyperbolic_distance, is_adjacent, theta_R
from .graphcore import GeomGraph, build_naive, build_pruned
from .hamilton import HamResult, construct, verify_cycle
from .matching import (Matching, Obstruction, certify_no_matching, matching_from_cycle,
                       obstruction_counts, verify_matching)
from .sampler import ModelParams, PointSet, sample, sample_binomial, sample_poisson

__all__ = [
    "GeomGraph", "HamResult", "Matching", "ModelParams", "Obstruction", "PointSet",
    "PolarPoint", "build_naive", "build_pruned", "certify_no_matching", "construct",
    "hyperbolic_distance", "is_adjacent", "matching_from_cycle", "obstruction_counts",
    "sample", "sample_binomial", "sample_poisson", "theta_R", "verify_cycle",
    "verify_matching",
]
