"""Option pricing-error analysis of traded volume.

Black-Scholes, Barone-Adesi-Whaley and binomial pricers, market-data
ingestion, an OLS/ADF/PACF engine and the end-to-end noise pipeline.
"""
__version__ = "0.1.0"

from ._backend import BACKEND
from .exceptions import (CollinearityError, ContractPricingError, CriticalPriceError,
                         DegenerateInputError, DomainError, FormatError, OptnoiseError,
                         PipelineError, SchemaError)
from .pricing import (ExerciseStyle, MarketParams, OptionContractSpec, OptionType,
                      baw_critical_price, baw_price, bs_price, crr_binomial_price)

__all__ = [
    "__version__", "BACKEND", "CollinearityError", "ContractPricingError",
    "CriticalPriceError", "DegenerateInputError", "DomainError", "FormatError",
    "OptnoiseError", "PipelineError", "SchemaError", "ExerciseStyle", "MarketParams",
    "OptionContractSpec", "OptionType", "baw_critical_price", "baw_price", "bs_price",
    "crr_binomial_price",
]
