"""Optimal non-uniform modulation with Huffman shaping and GRAND-style length correction."""
from ._jit import USE_NUMBA
from .channel import ChannelParams, DomainError, add_noise, log_bessel_i0, rician_log_density
from .constellation import Constellation, Ring, allocate_points, build_constellation, rotate_rings
from .dacp import AmplitudeGrid, DacpDistribution, design_dacp
from .demod import candidate_set, last_symbol_fallback, length_correct, map_demod, receive
from .framing import FramePlan, eb_n0, estimate_p_indel, frame_rate, select_ns, tune_a
from .qam import QamGrid, qam_demodulate, qam_modulate
from .shaping import ShapingCode, assign_gray, build_code, depad, modulate, symbols_to_bits

__version__ = "0.1.0"
