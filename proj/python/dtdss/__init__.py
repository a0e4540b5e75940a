"""Solar irradiance from two temperature nodes: Python bindings."""

from ._core import (
    AirProperties,
    DtdssError,
    Estimate,
    FixedPipeline,
    InertialFilter,
    InrOutput,
    Params,
    Pipeline,
    air_properties,
    clear_sky_ghi,
    convective_coefficient,
    dry_air_density,
    fit_gain,
    mape,
    r_squared,
    rmse,
    run_cli,
    saturation_vapor_pressure,
    scenario_names,
    simulate,
    vapor_pressure,
)

__all__ = [name for name in dir() if not name.startswith("_")]
