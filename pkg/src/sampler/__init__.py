from .model import JointModel, MeasurementTerms, joint_log_posterior
from .conditionals import (
    BetaDraw,
    HContext,
    beta_posterior_moments,
    h_log_density,
    mu_conditional,
    sample_beta,
    sample_h,
    sample_mu,
    sample_mu_all,
    sample_sigma_mat,
)
from .gibbs import (
    SamplerError,
    TwoStepError,
    first_stage_h,
    gibbs_sweep,
    initial_state,
    run_joint_mcmc,
    run_twostep,
)
from .storage import estimated_inequality_frame, read_draws, write_draws
