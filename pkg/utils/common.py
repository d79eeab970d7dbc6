import contextlib
import logging
from typing import Iterator

logger = logging.getLogger(__name__)

# structural checks (hermiticity, normalisation, PSD, unitarity)
ATOL = 1e-9
# eigen-solver residual
EIG_ATOL = 1e-8
# probabilities in a mixing channel
PROB_ATOL = 1e-12
REPORT_DIGITS = 12

DEFAULT_DIM_CAP = 4096
MAX_PERMUTATION_REGISTERS = 6

_dim_cap = DEFAULT_DIM_CAP


class DQMAError(Exception):
    pass


class LayoutError(DQMAError, ValueError):
    pass


class DimensionCapError(DQMAError):
    pass


class NumericalError(DQMAError):
    pass


class ProtocolError(DQMAError, ValueError):
    pass


class ConfigError(DQMAError):
    pass


def get_dim_cap() -> int:
    return _dim_cap


def set_dim_cap(cap: int) -> None:
    global _dim_cap
    if cap < 1:
        raise ValueError(f"dim_cap must be positive, got {cap}")
    logger.debug("dim_cap set to %d", cap)
    _dim_cap = int(cap)


@contextlib.contextmanager
def dim_cap(cap: int) -> Iterator[int]:
    """Temporarily override the dimension cap."""
    previous = get_dim_cap()
    set_dim_cap(cap)
    try:
        yield cap
    finally:
        set_dim_cap(previous)


def check_dimension(dimension: int, what: str = "space") -> None:
    """
    Raises DimensionCapError if a Hilbert space of the given dimension may not be built.
    :param dimension: total dimension of the space about to be constructed.
    :param what: short description used in the error message.
    """
    if dimension > _dim_cap:
        raise DimensionCapError(f"{what} has dimension {dimension} > dim_cap {_dim_cap}")


def fmt(value: float) -> float:
    """Rounds a reported number to REPORT_DIGITS significant digits."""
    return float(f"{value:.{REPORT_DIGITS}g}")
