from .irf import (
    AnalysisError,
    DecompositionError,
    ImpactScatter,
    NonStationaryDrawError,
    PairingError,
    band_widths,
    cholesky_lower,
    compute_irf,
    draw_responses,
    impact_scatter,
    is_stationary,
    posterior_irf_bands,
    shutdown_channel,
    variable_indices,
    write_scatter,
)
from .charts import plot_bands_svg
