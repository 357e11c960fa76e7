"""Walk-on-spheres samplers for reflecting Brownian motion, boundary local
time estimators, and Monte Carlo solvers for the Laplace problem with
Neumann or Dirichlet data in 3-D boxes, balls, and ellipsoids."""

from .geometry import (Ball, Box, Domain, Ellipsoid, RegionClass, classify,
                       make_domain)
from .sampling import make_stream, unit_sphere_sample, wos_jump
from .rbm import PathEvent, RbmPath, StepBatch, simulate_path, walk_steps
from .local_time import (LocalTimeAccumulator, LocalTimePath,
                         layer_sojourn_time, layer_step_weight,
                         levy_local_time, occupation_local_time,
                         t_eps_estimate)
from .neumann import (HarmonicTrigExp, NeumannProblem, NormalFlux,
                      SolverConfig, SolverResult, TabulatedFlux,
                      align_and_error, manufactured_neumann_data,
                      path_contribution, solve)
from .dirichlet import (DirichletProblem, DirichletResult,
                        manufactured_dirichlet_data, solve_dirichlet)
from .lattice import (LatticeLawReport, appendix_time_law_check,
                      lattice_step, lattice_walk_steps, snap_to_grid)
from .harness import (ExperimentConfig, RunReport, circle_points,
                      paper_defaults, run_experiment, segment_points)

__version__ = "0.1.0"

__all__ = [
    "Ball", "Box", "Domain", "Ellipsoid", "RegionClass", "classify",
    "make_domain",
    "make_stream", "unit_sphere_sample", "wos_jump",
    "PathEvent", "RbmPath", "StepBatch", "simulate_path", "walk_steps",
    "LocalTimeAccumulator", "LocalTimePath", "layer_sojourn_time",
    "layer_step_weight", "levy_local_time", "occupation_local_time",
    "t_eps_estimate",
    "HarmonicTrigExp", "NeumannProblem", "NormalFlux", "SolverConfig",
    "SolverResult", "TabulatedFlux", "align_and_error",
    "manufactured_neumann_data", "path_contribution", "solve",
    "DirichletProblem", "DirichletResult", "manufactured_dirichlet_data",
    "solve_dirichlet",
    "LatticeLawReport", "appendix_time_law_check", "lattice_step",
    "lattice_walk_steps", "snap_to_grid",
    "ExperimentConfig", "RunReport", "circle_points", "paper_defaults",
    "run_experiment", "segment_points",
    "__version__",
]
