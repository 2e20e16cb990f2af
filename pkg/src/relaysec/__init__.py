"""Joint source/relay secure beamforming: power minimization with a QoS floor
for the legitimate user and a worst-case SNR cap for an eavesdropper whose
channel estimate carries a norm-bounded error."""

__version__ = "0.1.0"

from .alternating import AltConfig, LiftedSolution, run_alternating  # noqa: F401
from .rounding import PrecoderSolution, RoundingConfig, randomize_select  # noqa: F401
from .sysmodel import (  # noqa: F401
    BeamformingPair,
    ChannelSet,
    EveError,
    LiftedPair,
    SystemConfig,
    sample_channels,
    sample_eve_error,
)
