"""Strength prediction for CFRP-confined concrete cylinders.

Feedforward networks trained by particle swarm, grey wolf, and bat
optimizers (plus plain gradient descent), benchmarked against closed-form
empirical confinement models, with a reproducible experiment harness and
a command-line front end.
"""

__version__ = "0.1.0"

from . import dataset, experiment, mechanics, metrics, neuralnet, optimizers

__all__ = [
    "dataset",
    "experiment",
    "mechanics",
    "metrics",
    "neuralnet",
    "optimizers",
    "__version__",
]
