from .synthetic import (
    SyntheticSample,
    generate_synthetic_dataset,
    sample_log_order_statistics,
    simulate_var_path,
    write_synthetic_bundle,
)
from .lorenz import LorenzReport, lorenz_group_sweep, simulate_lorenz_comparison
from .comparison import ComparisonBundle, compare_draws, compare_joint_twostep, paired_seeds
from .coverage import CoverageReport, coverage_study, run_replication
