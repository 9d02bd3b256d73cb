"""Bayesian model-evidence estimators and benchmark harness.

The package provides four model families with known or numerically
checkable evidence, six evidence estimators (Laplace, harmonic mean,
conditional-ordinate decomposition, annealed importance sampling,
nested sampling, thermodynamic integration over power posteriors),
independent oracles, and a CLI harness for replicated comparisons.
"""

__version__ = "0.1.0"
