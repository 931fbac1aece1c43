"""Successive-cancellation decoding engine.

Tree-based SC with min-sum f and exact g kernels, a per-leaf override
hook for bit-flipping decoders, a genie mode that corrects decisions
against the transmitted word, and resume-from-index accounting for
fractional iteration costs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import code as _code
from ._kernels import LLR_SATURATION, crc_register, sc_pass
from .code import PolarCodeSpec, crc_check


def f_kernel(a: float, b: float) -> float:
    """Min-sum check-node update: sgn(a) sgn(b) min(|a|, |b|)."""
    m = min(abs(a), abs(b))
    return -m if (a < 0) != (b < 0) else m


def g_kernel(a: float, b: float, beta_left: int) -> float:
    """Variable-node update: b + (1 - 2 beta_left) a."""
    return b - a if beta_left else b + a


def combine_partial_sums(left, right) -> np.ndarray:
    """Parent partial sums: (left XOR right, right)."""
    left = np.asarray(left, dtype=np.uint8)
    right = np.asarray(right, dtype=np.uint8)
    if left.shape != right.shape:
        raise ValueError(f"length mismatch: {left.shape} vs {right.shape}")
    return np.concatenate([left ^ right, right])


@dataclass
class ScAttemptResult:
    """Outcome of one SC traversal.

    leaf_llrs holds the pre-override LLR observed at every leaf;
    codeword_estimate is the re-encoding of the leaf decisions.
    """

    decisions: np.ndarray
    leaf_llrs: np.ndarray
    codeword_estimate: np.ndarray
    message_estimate: np.ndarray
    crc_pass: bool
    bits_decoded_this_attempt: int


class ScDecoder:
    """Reusable SC decoder bound to one code spec.

    Holds per-instance scratch arrays, so a decoder is cheap to call
    repeatedly on one thread but must not be shared across threads.
    """

    def __init__(self, spec: PolarCodeSpec):
        self.spec = spec
        N, n = spec.N, spec.n
        self._llr_ws = np.empty((n + 1, N), dtype=np.float64)
        self._bit_ws = np.zeros((n + 1, N), dtype=np.uint8)
        self._leaf_llr = np.empty(N, dtype=np.float64)
        self._decisions = np.empty(N, dtype=np.uint8)
        self._flip = np.zeros(N, dtype=np.uint8)
        self._err = np.empty(N, dtype=np.int64)
        self._frozen = np.ascontiguousarray(spec.frozen_mask, dtype=np.uint8)
        self._no_truth = np.zeros(N, dtype=np.uint8)
        self._saved_llrs: np.ndarray | None = None
        self._nf_idx = spec.non_frozen
        self._msg_idx = self._nf_idx[: spec.K]

    def _check_llrs(self, channel_llrs) -> np.ndarray:
        llrs = np.ascontiguousarray(channel_llrs, dtype=np.float64)
        if llrs.shape != (self.spec.N,):
            raise ValueError(f"channel LLR length must be {self.spec.N}")
        if not np.isfinite(llrs).all():
            llrs = np.clip(np.nan_to_num(llrs), -LLR_SATURATION, LLR_SATURATION)
        return llrs

    def _result(self, bits_decoded: int) -> ScAttemptResult:
        spec = self.spec
        decisions = self._decisions.copy()
        payload = decisions[~spec.frozen_mask]
        crc_ok = crc_check(spec.crc, payload) if spec.C > 0 else True
        return ScAttemptResult(
            decisions=decisions,
            leaf_llrs=self._leaf_llr.copy(),
            codeword_estimate=self._bit_ws[spec.n].copy(),
            message_estimate=payload[: spec.K].copy(),
            crc_pass=crc_ok,
            bits_decoded_this_attempt=bits_decoded,
        )

    def attempt(self, channel_llrs, flip_index: int = -1) -> bool:
        """Run one SC pass without building a result object.

        channel_llrs must already be a contiguous float64 array of length N
        with finite entries.  Decisions, leaf LLRs and the codeword row stay
        in the decoder's scratch arrays (``raw_decisions``, ``raw_leaf_llrs``,
        ``raw_codeword``).  Returns the CRC verdict.
        """
        self._flip[:] = 0
        if flip_index >= 0:
            self._flip[flip_index] = 1
        sc_pass(channel_llrs, self._frozen, self._flip, False, self._no_truth,
                0, self._llr_ws, self._bit_ws, self._leaf_llr,
                self._decisions, self._err)
        spec = self.spec
        if spec.C == 0:
            return True
        return crc_register(self._decisions[self._nf_idx],
                            spec.crc.polynomial, spec.crc.length,
                            spec.crc.init) == 0

    def genie_attempt(self, channel_llrs, transmitted_word,
                      max_corrections: int = -1) -> np.ndarray:
        """Genie-aided SC pass on scratch arrays; returns corrected indices.

        The returned array is a view into internal scratch and is only valid
        until the next pass.
        """
        limit = self.spec.N if max_corrections < 0 else max_corrections
        self._flip[:] = 0
        n_err = sc_pass(channel_llrs, self._frozen, self._flip, True,
                        transmitted_word, limit, self._llr_ws, self._bit_ws,
                        self._leaf_llr, self._decisions, self._err)
        return self._err[:n_err]

    @property
    def raw_decisions(self) -> np.ndarray:
        return self._decisions

    @property
    def raw_leaf_llrs(self) -> np.ndarray:
        return self._leaf_llr

    @property
    def raw_codeword(self) -> np.ndarray:
        return self._bit_ws[self.spec.n]

    @property
    def raw_message(self) -> np.ndarray:
        return self._decisions[self._msg_idx]

    def decode(self, channel_llrs, overrides=(), resume_from: int | None = None
               ) -> ScAttemptResult:
        """Run SC, inverting the hard decision at each override index.

        resume_from credits the attempt with N - resume_from decoded bits;
        it requires saved state from a prior attempt on the same channel
        LLRs. Internally the traversal is replayed from the start, which
        yields leaf records identical to a true resume because decisions
        before the first override are unchanged.
        """
        llrs = self._check_llrs(channel_llrs)
        overrides = np.atleast_1d(np.asarray(list(overrides), dtype=np.int64)) \
            if len(overrides) else np.empty(0, dtype=np.int64)
        if overrides.size and self.spec.frozen_mask[overrides].any():
            raise ValueError("override on a frozen index")
        if resume_from is None:
            bits_decoded = self.spec.N
        else:
            if self._saved_llrs is None or not np.array_equal(self._saved_llrs, llrs):
                raise ValueError("resume_from requires saved state for these LLRs")
            if not 0 <= resume_from < self.spec.N:
                raise ValueError(f"resume_from out of range: {resume_from}")
            bits_decoded = self.spec.N - int(resume_from)
        self._flip[:] = 0
        self._flip[overrides] = 1
        sc_pass(llrs, self._frozen, self._flip, False, self._no_truth, 0,
                self._llr_ws, self._bit_ws, self._leaf_llr, self._decisions,
                self._err)
        self._saved_llrs = llrs.copy()
        return self._result(bits_decoded)

    def genie_decode(self, channel_llrs, transmitted_word,
                     max_corrections: int | None = None
                     ) -> tuple[ScAttemptResult, np.ndarray]:
        """SC with decisions corrected against the transmitted word.

        Every natural decision that disagrees with the pre-transform truth
        is forced correct (up to max_corrections) and its index recorded.
        """
        llrs = self._check_llrs(channel_llrs)
        truth = np.ascontiguousarray(transmitted_word, dtype=np.uint8)
        if truth.shape != (self.spec.N,):
            raise ValueError(f"transmitted word length must be {self.spec.N}")
        limit = self.spec.N if max_corrections is None else int(max_corrections)
        n_err = sc_pass(llrs, self._frozen, self._flip, True, truth, limit,
                        self._llr_ws, self._bit_ws, self._leaf_llr,
                        self._decisions, self._err)
        self._saved_llrs = llrs.copy()
        return self._result(self.spec.N), self._err[:n_err].copy()


def sc_decode(spec: PolarCodeSpec, channel_llrs, overrides=(),
              resume_from: int | None = None, decoder: ScDecoder | None = None
              ) -> ScAttemptResult:
    """One-shot SC decode; see ScDecoder.decode."""
    dec = decoder if decoder is not None else ScDecoder(spec)
    if resume_from is not None and decoder is None:
        raise ValueError("resume_from requires a decoder with saved state")
    return dec.decode(channel_llrs, overrides, resume_from)


def oracle_decode(spec: PolarCodeSpec, channel_llrs, transmitted_word,
                  decoder: ScDecoder | None = None
                  ) -> tuple[ScAttemptResult, np.ndarray]:
    """SC with all channel-induced errors corrected against the truth.

    The returned index list holds exactly the channel-induced errors: each
    recorded leaf went wrong with every earlier decision correct. It is
    empty iff plain SC recovers the transmitted word bit-exactly.
    """
    dec = decoder if decoder is not None else ScDecoder(spec)
    return dec.genie_decode(channel_llrs, transmitted_word)


def channel_llrs(received, sigma2: float) -> np.ndarray:
    """BPSK AWGN channel LLRs 2 r / sigma^2, saturated to keep values finite."""
    llr = 2.0 * np.asarray(received, dtype=np.float64) / sigma2
    return np.clip(llr, -LLR_SATURATION, LLR_SATURATION)


def modulate(codeword) -> np.ndarray:
    """BPSK map 0 -> +1, 1 -> -1."""
    return 1.0 - 2.0 * np.asarray(codeword, dtype=np.float64)


def reencode_decisions(decisions) -> np.ndarray:
    """Brute-force check helper: polar transform of the leaf decisions."""
    return _code.polar_transform(decisions)
