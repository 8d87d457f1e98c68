from pyLifting.Labels.Lifting import (
    DEFAULT_EPS,
    LabelSpace,
    SublabelCoord,
    coord_of,
    indicator,
    integrality_check,
    integrality_field,
    lift_field,
    lift_scalar,
    project_field,
    project_lifted,
    round_field,
    round_to_integral,
    value_of,
)
