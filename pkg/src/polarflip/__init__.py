"""Polar code SC / SC-Flip / thresholded SC-Flip decoding toolkit."""

__version__ = "0.1.0"

from .code import (CrcSpec, DimensionError, PolarCodeSpec, construct_code,
                   crc_check, crc_remainder, ebn0_to_sigma2, encode,
                   load_construction, pad_message, polar_transform,
                   reliability_sequence, save_construction)
from .sc import (ScAttemptResult, ScDecoder, channel_llrs, combine_partial_sums,
                 f_kernel, g_kernel, modulate, oracle_decode, sc_decode)
from .flip import (CriticalSet, FlipDecodeResult, TscfConfig, sco1_decode,
                   scflip_decode, scflip_eis_decode, scflip_fis_decode,
                   tscf_decode)
from .profiler import (E1Profile, InsufficientDataError, LlrStats,
                       derive_critical_set, llr_statistics, profile_e1,
                       sweep_crc, sweep_threshold, sweep_tmax)
from .simulate import (DecoderConfig, FrameStream, SimReport, StopRule,
                       frame_rng, generate_frame, run_campaign,
                       steps_after_leaf, time_step_cost)

__all__ = [name for name in dir() if not name.startswith("_")]
