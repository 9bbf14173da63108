"""Cleanness of reactive models: trace-quantified formulas and a semantic oracle."""
from .checks import (
    ExistsResult, check_exists_exists, check_forall_forall, check_forall_forall_exists_exact,
    check_negation_instance, check_strengthened,
)
from .formula import (
    Cmp, HyperFormula, ModelView, cleanness_formulas, eval_on_lassos, eval_weak_until, expand,
    guarantee_formula, negation_instance, strengthened_formula,
)
from .oracle import (
    bounded_oracle, bounded_oracle_clean, bounded_oracle_fclean, bounded_oracle_robust, default_depth,
    replay_oracle_witness,
)
from .product import ProductTooLarge, exists_path, sat_cases, violation_cases

__all__ = [
    "Cmp", "ExistsResult", "HyperFormula", "ModelView", "ProductTooLarge", "bounded_oracle",
    "bounded_oracle_clean", "bounded_oracle_fclean", "bounded_oracle_robust", "check_exists_exists",
    "check_forall_forall", "check_forall_forall_exists_exact", "check_negation_instance", "check_strengthened",
    "cleanness_formulas", "default_depth", "eval_on_lassos", "eval_weak_until", "exists_path", "expand",
    "guarantee_formula", "negation_instance", "replay_oracle_witness", "sat_cases", "strengthened_formula",
    "violation_cases",
]
