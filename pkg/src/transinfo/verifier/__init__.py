"""Inequality checkers, constant estimators and the (a)/(b) equivalence engine."""

from .bounds import (best_variance_deviation_bound, cheeger_margin, check_margins, hi_margin,
                     information_deviation_bound, tilting_curve, tilting_mgf_check, tp_check,
                     variance_deviation_bound, wph_margin, wpi_margin)
from .constants import BestConstant, estimate_best_constant
from .equivalence import chernoff_deviation_bound, lambda_grid, lambda_max, verify_theorem11
from .hopf_lax import bobkov_gotze_w2_check, hopf_lax
from .reports import InequalityReport, TiltingCurve, reports_to_csv
