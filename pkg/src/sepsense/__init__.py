"""Separable approximation of functions with decaying sensitivity.

Modules:

* :mod:`sepsense.graph` interaction graphs, distances and neighborhoods
* :mod:`sepsense.riccati` Riccati solvers and decay certificates
* :mod:`sepsense.sensitivity` block norms, Lipschitz probes, decay fits
* :mod:`sepsense.separable` the approximation ``Psi_l`` and its error bounds
* :mod:`sepsense.snn` separable-structured neural networks
* :mod:`sepsense.models` benchmark problems and value oracles
"""

from .errors import (ConfigError, ConvergenceError, NumericalError, SepsenseError,
                     StabilityError)
from .graph import (BlockStructure, InteractionGraph, build_interaction_graph,
                    graph_from_matrices, growth_bound, neighborhood, sequential_graph)
from .riccati import (LQRProblem, RiccatiSolution, care_closed_form, care_newton,
                      decay_certificate, solve_care, solve_dare)
from .sensitivity import (DecayModel, FunctionOracle, fit_decay, gamma_from_quadratic,
                          quadratic_oracle)
from .separable import SeparableApprox, error_bound_matrix
from .snn import SNNModel, TrainConfig, build_dense_network, build_snn, count, train

__version__ = "0.1.0"
