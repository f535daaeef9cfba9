"""Interactive pose-graph SLAM workbench with human stroke corrections."""

from .geometry import Pose2D, Segment, Transform2D, compose, fit_segment, point_segment_sq_dist
from .graph import (CorrectionMode, FactorGraph, HumanCorrectionFactor,
                    RelativePoseFactor, Scan, validate)
from .interpret import InterpretationParams, RawCorrection, interpret
from .optimizer import ResidualWeights, SolverParams, optimize
from .session import MapUpdate, Session, SessionConfig, replay

__version__ = "0.1.0"
