"""Graph-based semi-supervised classification with probit and one-hot likelihoods.

Modules
-------
graph        proximity graphs, Laplacians, connected components
spectral     eigendecomposition, covariance operators, truncation
likelihood   noise models, probit and one-hot likelihood terms, label sampling
probit       binary minimizers (full, reduced, truncated)
onehot       multi-class minimizers (full, reduced, truncated)
experiments  synthetic data, sweeps, success probabilities, balance study
cli          ``ssl-lab`` command-line tool
"""

__version__ = "0.1.0"

from .errors import (ContractViolation, ConvergenceError, IllConditioned, OutlierNode,
                     ParameterError, SizeError, SSLError)
from .graph import (ClusterPartition, Exponential, GraphLaplacian, HardThreshold,
                    PerturbedThreshold, PointCloud, WeightedGraph, build_laplacian,
                    build_weight_matrix, connected_components, kernel_eval,
                    weighted_indicators)
from .likelihood import (BinaryLabels, MultiLabels, NoiseModel, QuadratureRule,
                         classify_argmax, classify_sign)
from .spectral import (CovarianceOperator, EigenDecomposition, TruncatedCovariance,
                       covariance_from, eigendecompose, truncate)
from .probit import ProbitProblem, ProbitSolution
from .onehot import OneHotProblem, OneHotSolution
