from .loaders import (
    IncomeSchema,
    load_grouped_csv,
    load_macro_csv,
    load_transform_spec,
    validate_transform_spec,
    write_grouped_csv,
    write_macro_csv,
)
from .frequency import (
    DEFAULT_SAMPLE_SIZE,
    IncompleteQuarterError,
    LeadingCoverageError,
    aggregate_monthly_to_quarterly,
    expand_biannual,
)
from .assemble import (
    INSTRUMENTS,
    UnknownVariableError,
    assemble_dataset,
    identification_order,
    shock_variable,
)
