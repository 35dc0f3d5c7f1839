"""GFDM transceiver with time-domain multiplication modem and block precoding."""

__version__ = "0.1.0"

from .errors import GfdmError, InvalidArgument, SingularMatrixError, SpectralNullError, UnsupportedSizeError
from .filters import FilterKind, PrototypeFilter, ReceiverFilter, RxMode, make_prototype, make_receiver
from .modem import (
    GfdmParams,
    build_mod_matrix,
    core_receive,
    core_transmit,
    demodulate_fd,
    demodulate_ref,
    demodulate_td,
    modulate_fd,
    modulate_ref,
    modulate_td,
)
from .precoding import Domain, PrecodingScheme, custom_scheme, decode, domain_scheme, encode, general_matrix
from .simulation import ChannelConfig, LinkResult, receive, run_ser, transmit
