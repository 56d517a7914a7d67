"""Dyson Brownian motion for the Gaussian ensembles (beta = 1, 2, 4).

The same Ornstein-Uhlenbeck matrix flow is exposed in three coordinate
systems: matrix entries, eigenvalues, and power-sum traces t_n = tr M^n.
An exact rational kernel (`symfun`) verifies the symmetric-function
identities that make the trace-coordinate Fokker-Planck picture close,
`fokker_planck` carries the drift/diffusion data and stationary laws,
`dyson_sim` integrates the three SDEs, and `bernoulli` runs the
sign-flip random walk on symmetric Bernoulli matrices whose local moves
reproduce the beta = 1 flow for large dimension.
"""

from dyson_traces.ensembles import EnsembleSpec, SelfAdjointMatrix

__all__ = ["EnsembleSpec", "SelfAdjointMatrix"]

__version__ = "0.1.0"
