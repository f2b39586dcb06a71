"""Regularised integrals of radial symbols and renormalised constrained multiple integrals."""
from .germs import MeroGerm, evaluator_E0, evaluator_linear, evaluator_reparam, fp_one_var
from .laurent import LaurentSeries
from .matrices import ConstraintMatrix, coproduct, step_reduce, whitney_sum
from .oracle import direct_integral, radial_fp_oracle
from .renorm import HopfCharacter, birkhoff_factorise, renorm_birkhoff, renorm_evaluator, verify_suite
from .schwinger import SchwingerProblem, meromorphic_extension, sector_data
from .single import DIMREG, RIESZ, Regularisation, RegKind, cutoff_integral, dimreg_integral, regularised_laurent
from .symbols import RadialSymbol, make_power, make_symbol

__all__ = [
    "ConstraintMatrix", "DIMREG", "HopfCharacter", "LaurentSeries", "MeroGerm", "RIESZ", "RadialSymbol",
    "RegKind", "Regularisation", "SchwingerProblem", "birkhoff_factorise", "coproduct", "cutoff_integral",
    "dimreg_integral", "direct_integral", "evaluator_E0", "evaluator_linear", "evaluator_reparam",
    "fp_one_var", "make_power", "make_symbol", "meromorphic_extension", "radial_fp_oracle",
    "regularised_laurent", "renorm_birkhoff", "renorm_evaluator", "sector_data", "step_reduce",
    "verify_suite", "whitney_sum",
]
