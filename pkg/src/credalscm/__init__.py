"""Causal and counterfactual bounds for discrete structural causal models.

An SCM's structural equations plus an observed joint over its endogenous
variables define, for each exogenous variable, a polytope of admissible PMFs.
Placing those polytopes at the exogenous roots turns the model into a credal
network, so interventional and counterfactual queries become interval-valued
credal-network queries.
"""

__version__ = "0.1.0"

from .constraints import LinearConstraintSystem
from .errors import CredalSCMError
from .identification import (
    IdentificationResult,
    add_constraints,
    identify,
    identify_markovian,
    identify_quasi_markovian,
    verify_identification,
)
from .inference import (
    ApproxConfig,
    CausalQuery,
    IntervalResult,
    bounds,
    bounds_approx,
    bounds_exact,
    counterfactual_bounds,
    ve_precise,
)
from .network import CredalNetwork, attach_virtual_evidence, compile_network, intervene, precise_network, twin
from .scm import (
    CausalModel,
    EmpiricalDistribution,
    ProbabilisticSCM,
    StructuralEquation,
    Variable,
    canonical_equation,
    induced_joint,
    validate_model,
)

__all__ = [
    "ApproxConfig", "CausalModel", "CausalQuery", "CredalNetwork", "CredalSCMError",
    "EmpiricalDistribution", "IdentificationResult", "IntervalResult", "LinearConstraintSystem",
    "ProbabilisticSCM", "StructuralEquation", "Variable", "add_constraints", "attach_virtual_evidence",
    "bounds", "bounds_approx", "bounds_exact", "canonical_equation", "compile_network",
    "counterfactual_bounds", "identify", "identify_markovian", "identify_quasi_markovian",
    "induced_joint", "intervene", "precise_network", "twin", "validate_model", "ve_precise",
    "verify_identification",
]
