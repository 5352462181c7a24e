"""Detect and separate the regimes of an iterated function system from a trajectory."""
from .detection import DetectionReport, GapReport, detect, estimate_regime_count, find_gap, nn_diameters
from .embedding import EmbeddingConfig, delay_embed
from .errors import DivergenceError, InputError, IntegrityError, StructureError
from .geometry import PointCloud, epsilon_components, farthest_point_sample, knn
from .ghost import GhostReport, analyze_ghosts, synth_surrogate
from .ifs import HENON_F0, HENON_F1, Bernoulli, Explicit, IfsModel, MapSpec, Modular, generate, henon_ifs
from .separation import SeparationResult, evaluate_separation, separate

__version__ = "0.1.0"
