"""Exact and simulated gradient-descent dynamics for rank-one spiked Wigner estimation."""

from .errors import ConfigError, DivergenceError, DomainError, SingularSystemError
from .semicircle import (bessel_i0e, bessel_i1, bessel_i1e, g_sc, laplace_m_lambda,
                         m_lambda, m_lambda_quadrature, m_lambda_scaled, mu_sc)
from .theory import (ScenarioParams, asymptote, bar_q, bar_q_lambda1, cost_and_p1,
                     hat_p_scaled, hat_q_scaled, k_lambda, noiseless_q, theory_curve)
from .ide import ContourGrid, contour_integral, init_state, solve_ide, stationary_solutions
from .matrices import concentration_sweep, resolvent_element, sample_wigner, spectrum_in_interval
from .landscape import landscape_check
from .simulate import SimConfig, ensemble, gd_step, init_vectors, simulate_run
from .randfeat import (RFConfig, build_instance, rf_expectation_identity, rf_flow_exact,
                       rf_flow_mc, rf_risk_curve)

__version__ = "0.1.0"
