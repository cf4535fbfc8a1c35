"""CDS option pricing: single-name options with running, upfront and quoted
strikes, Vasicek recovery options, PV-based index options and a
default/recovery factor copula."""

from .curves import CreditCurve, bp, calibrate_flat_rate, dv01_flat, year_fraction
from .index import (
    IndexState,
    IndexStrike,
    implied_pv_vol,
    price_index_option,
    price_index_option_hy,
    x_tilde,
    y_tilde,
)
from .numerics import QuadratureRule
from .recovery import RecoveryParams, RecoveryQuote, fit_params
from .single_name import (
    OptionSpec,
    PriceResult,
    calibrate_epsilon,
    price,
    price_ko_quoted,
    price_ko_running,
    price_ko_upfront_running,
    price_nko_running,
    price_nko_upfront_running,
)

__version__ = "0.1.0"
