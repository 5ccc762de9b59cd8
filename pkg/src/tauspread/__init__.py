"""Amyloid-beta / tau propagation on brain connectome graphs.

Builds the structural, intrinsic-proximity and cumulative connectomes from
an edge-list connectome, runs the coupled reaction-diffusion system with a
diffusion- or convolution-based tau spreading operator, and scores the
simulated deterioration pattern against a clinical one by Hamming distance.
"""

__version__ = "0.1.0"

from .dynamics import ModelParams, OperatorChoice, SimulationState, Trajectory, run_simulation
from .errors import (
    ConfigError,
    EvaluationError,
    IntegrationError,
    ParseError,
    PathBudgetError,
    SpectralError,
    TauspreadError,
)
from .evaluation import clinical_pattern, hamming, pattern_string, sweep
from .graphs import (
    WeightedGraph,
    build_cumulative,
    build_proximity,
    build_structural,
    cumulative_connectivity,
    enumerate_admissible_paths,
)
from .io import parse_atlas, parse_clinical_table, parse_connectome, select_significant_rois
from .spectral import (
    Kernel,
    SpectralBasis,
    convolve,
    cumulative_kernel,
    eigendecompose,
    gft,
    igft,
    laplacian,
    shortest_path_kernel,
)

__all__ = [
    "__version__",
    "ModelParams", "OperatorChoice", "SimulationState", "Trajectory", "run_simulation",
    "TauspreadError", "ParseError", "ConfigError", "PathBudgetError",
    "SpectralError", "IntegrationError", "EvaluationError",
    "clinical_pattern", "hamming", "pattern_string", "sweep",
    "WeightedGraph", "build_structural", "build_proximity", "build_cumulative",
    "cumulative_connectivity", "enumerate_admissible_paths",
    "parse_connectome", "parse_atlas", "parse_clinical_table", "select_significant_rois",
    "Kernel", "SpectralBasis", "laplacian", "eigendecompose", "gft", "igft",
    "convolve", "cumulative_kernel", "shortest_path_kernel",
]
