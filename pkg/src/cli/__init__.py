from .config import RunConfig
from .commands import (
    OutputLockedError,
    cmd_compare,
    cmd_fetch,
    cmd_fit_joint,
    cmd_fit_twostep,
    cmd_gen_synthetic,
    cmd_irf,
    cmd_simulate_lorenz,
    output_lock,
    write_manifest,
)
