"""Heavy-tail Levy process toolkit: simulation, regular-variation calculus,
cadlag path metrics and one-big-jump Monte Carlo diagnostics."""

__version__ = "0.1.0"

from .cadlag import (CadlagPath, TimeChange, cw_product, gamma_oscillation,
                     j1_distance, j1_within, largest_jump_time, one_step_approx,
                     sup_norm, uniform_distance)
from .diagnostics import (ConditionalDistanceCurve, HillEstimate, RatioEstimate,
                          TailEstimate, TrendPoint, analytic_prediction,
                          breiman_ratio, double_jump_trend, hill,
                          maximal_product_bound, one_big_jump_curve,
                          tail_equivalence, tail_prob)
from .experiments import RunManifest, ValidationError, config_hash, run, validate
from .levy_sim import (ConstantIntegrand, DeterministicIntegrand, ExpOUIntegrand,
                       IntegrandSpec, JumpRecord, LevyModel, SimConfig,
                       assemble_levy_path, batch_integral_functionals,
                       integrand_from_dict, integrand_from_json, integrand_to_json,
                       one_jump_integral, simulate_big_jumps, simulate_integrand,
                       simulate_levy_path, simulate_small_part,
                       stochastic_integral, threshold_jumps)
from .regvar import (EndpointExceedance, Estimate, RadialCone, RegVarMeasure,
                     RunningSupExceedance, ScalingSequence, SetDescriptor,
                     SupExceedance, breiman_constant, mu_tail, one_step_mass,
                     scaling, weighted_one_step_mass)
