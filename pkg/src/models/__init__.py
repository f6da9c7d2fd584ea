from .grid import QuantileGrid, OrderStatCov
from .income import (
    INEQUALITY_STATE,
    ContiguityError,
    Dataset,
    GroupedIncomeSeries,
    MacroPanel,
    RowValidationError,
)
from .sampling import (
    ChainState,
    PosteriorDraws,
    Priors,
    SamplerConfig,
    pack_coefficients,
    spectral_radius,
    unpack_coefficients,
)
from .irf import IrfBands, IrfSpec
from .truth import SyntheticTruth
