"""Homotopy-class path planning with harmonic potentials on forest worlds."""

from .geometry import ForestWorld, Squircle, enumerate_forests
from .planner import PlannerConfig, Solution, enumerate_classes, plan_for_class
from .potential import WeightVector
from .topology import DSignature, candidate_signatures, sign_vector
from .transform import PointWorld, build_chain, map_path, point_world

__all__ = ["DSignature", "ForestWorld", "PlannerConfig", "PointWorld", "Solution", "Squircle", "WeightVector",
           "build_chain", "candidate_signatures", "enumerate_classes", "enumerate_forests", "map_path",
           "plan_for_class", "point_world", "sign_vector"]
