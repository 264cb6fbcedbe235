"""additr: sparse additive individualized treatment rules.

Learns a treatment rule as the sign of an estimated conditional treatment
effect modeled additively: linear terms are fit first, per-covariate smooth
terms are built from the residuals, and a final penalized fit admits a
nonlinear term only when it earns its extra complexity. Nuisance models
(propensity and main effect) are cross-fitted, and the final penalty level
is chosen by a concordance information criterion or cross-validation.
"""

from .backend import COMPILED

__version__ = "0.1.0"
__all__ = ["COMPILED", "__version__"]
