"""SC-Flip decoder family.

Baseline SC-Flip (smallest-|LLR| candidates), the fixed-index (FIS) and
enhanced (EIS) critical-set variants, the single-correction genie
baseline SCO-1, and thresholded SC-Flip (TSCF): candidates are critical
indices whose first-attempt |LLR| falls below a threshold, flipped
leftmost-first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .code import PolarCodeSpec
from .sc import ScAttemptResult, ScDecoder


@dataclass(frozen=True, eq=False)
class CriticalSet:
    """Error-prone non-frozen indices with their first-error frequencies.

    Entries are sorted by descending frequency (ties by ascending index).
    The frequencies come from a profiled first-error distribution over
    SC-failing frames; the full profiled vector sums to 1, so the entry
    sum is >= gamma_used and <= 1.
    """

    indices: np.ndarray
    frequencies: np.ndarray
    gamma_used: float
    source_ebn0: float
    source_fer_target: float = float("nan")

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        freq = np.ascontiguousarray(self.frequencies, dtype=np.float64)
        if idx.ndim != 1 or idx.shape != freq.shape:
            raise ValueError("indices and frequencies must be 1-D and equal length")
        if len(np.unique(idx)) != len(idx):
            raise ValueError("critical indices must be distinct")
        if ((freq < 0) | (freq > 1)).any():
            raise ValueError("frequencies must lie in [0, 1]")
        if not 0 < self.gamma_used <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma_used}")
        order = np.lexsort((idx, -freq))
        idx = idx[order]
        freq = freq[order]
        idx.setflags(write=False)
        freq.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "frequencies", freq)

    def __len__(self):
        return len(self.indices)

    @property
    def coverage(self) -> float:
        return float(self.frequencies.sum())

    @classmethod
    def all_non_frozen(cls, spec: PolarCodeSpec) -> "CriticalSet":
        """Degenerate set covering every non-frozen index uniformly."""
        nf = spec.non_frozen
        return cls(indices=nf, frequencies=np.full(len(nf), 1.0 / len(nf)),
                   gamma_used=1.0, source_ebn0=float("nan"))

    def save(self, path, spec: PolarCodeSpec | None = None) -> None:
        doc = {
            "gamma": self.gamma_used,
            "source_ebn0": self.source_ebn0,
            "fer_target": self.source_fer_target,
            "entries": [{"index": int(i), "freq": float(f)}
                        for i, f in zip(self.indices, self.frequencies)],
        }
        if spec is not None:
            doc.update(N=spec.N, K=spec.K, C=spec.C,
                       design_ebn0=spec.design_ebn0)
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CriticalSet":
        with open(path) as fh:
            doc = json.load(fh)
        return cls(
            indices=np.array([e["index"] for e in doc["entries"]], dtype=np.int64),
            frequencies=np.array([e["freq"] for e in doc["entries"]]),
            gamma_used=doc["gamma"],
            source_ebn0=doc["source_ebn0"],
            source_fer_target=doc.get("fer_target", float("nan")),
        )


@dataclass(frozen=True, eq=False)
class TscfConfig:
    """Threshold, iteration budget and critical set for TSCF decoding."""

    threshold_omega: float
    t_max: int
    critical_set: CriticalSet

    def __post_init__(self):
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.threshold_omega < 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold_omega}")


@dataclass
class FlipDecodeResult:
    """Final verdict of an SC-Flip-family decode.

    iterations_consumed counts the initial attempt as 1 and each retry as
    (N - flip_index) / N; success is the CRC verdict of the last attempt
    (bit-exactness for SCO-1).
    """

    message_estimate: np.ndarray
    success: bool
    iterations_consumed: float
    attempts: int
    flip_trace: list = field(default_factory=list)
    first_attempt: ScAttemptResult | None = None
    crc_pass: bool = False


def _smallest_llr_order(leaf_llrs, pool: np.ndarray) -> np.ndarray:
    """Pool indices by ascending |LLR|, ties by ascending bit index."""
    mags = np.abs(leaf_llrs[pool])
    return pool[np.lexsort((pool, mags))]


def select_scflip_candidates(spec: PolarCodeSpec, leaf_llrs, t_max: int
                             ) -> np.ndarray:
    """The t_max - 1 least reliable non-frozen indices of the first attempt."""
    return _smallest_llr_order(leaf_llrs, spec.non_frozen)[: max(t_max - 1, 0)]


def select_eis_candidates(critical_set: CriticalSet, leaf_llrs, t_max: int
                          ) -> np.ndarray:
    """LLR-sorted selection restricted to the critical set."""
    pool = np.sort(critical_set.indices)
    return _smallest_llr_order(leaf_llrs, pool)[: max(t_max - 1, 0)]


def select_fis_candidates(critical_set: CriticalSet, t_max: int) -> np.ndarray:
    """Fixed flip order: descending first-error frequency, no LLR use."""
    return critical_set.indices[: max(t_max - 1, 0)]


def select_tscf_candidates(config: TscfConfig, leaf_llrs) -> np.ndarray:
    """Critical indices with first-attempt |LLR| under the threshold.

    Returned in ascending bit-index order (leftmost-first flipping); a
    zero threshold always yields an empty list. Truncation to the
    iteration budget happens in the decode loop.
    """
    idx = np.sort(config.critical_set.indices)
    below = np.abs(leaf_llrs[idx]) < config.threshold_omega
    return idx[below][: max(config.t_max - 1, 0)]


def _flip_loop(spec: PolarCodeSpec, channel_llrs, select, t_max: int,
               decoder: ScDecoder | None, initial: ScAttemptResult | None = None
               ) -> FlipDecodeResult:
    """Shared retry loop: initial SC, candidate selection, one flip per retry."""
    dec = decoder if decoder is not None else ScDecoder(spec)
    first = initial if initial is not None else dec.decode(channel_llrs)
    if first.crc_pass or t_max <= 1:
        return FlipDecodeResult(
            message_estimate=first.message_estimate, success=first.crc_pass,
            iterations_consumed=1.0, attempts=1, flip_trace=[],
            first_attempt=first, crc_pass=first.crc_pass)
    candidates = select(first.leaf_llrs)
    iterations = 1.0
    attempts = 1
    trace = []
    last = first
    for flip_idx in candidates[: t_max - 1]:
        attempt = dec.decode(channel_llrs, overrides=[flip_idx],
                             resume_from=int(flip_idx))
        attempts += 1
        iterations += attempt.bits_decoded_this_attempt / spec.N
        trace.append(int(flip_idx))
        last = attempt
        if attempt.crc_pass:
            break
    return FlipDecodeResult(
        message_estimate=last.message_estimate, success=last.crc_pass,
        iterations_consumed=iterations, attempts=attempts, flip_trace=trace,
        first_attempt=first, crc_pass=last.crc_pass)


def scflip_decode(spec: PolarCodeSpec, channel_llrs, t_max: int,
                  decoder: ScDecoder | None = None) -> FlipDecodeResult:
    """Baseline SC-Flip: retry with the smallest-|LLR| bits flipped one at a time."""
    if t_max < 1:
        raise ValueError(f"t_max must be >= 1, got {t_max}")
    return _flip_loop(spec, channel_llrs,
                      lambda llrs: select_scflip_candidates(spec, llrs, t_max),
                      t_max, decoder)


def scflip_eis_decode(spec: PolarCodeSpec, channel_llrs,
                      critical_set: CriticalSet, t_max: int,
                      decoder: ScDecoder | None = None) -> FlipDecodeResult:
    """SC-Flip with the LLR-sorted candidate pool restricted to the critical set."""
    return _flip_loop(spec, channel_llrs,
                      lambda llrs: select_eis_candidates(critical_set, llrs, t_max),
                      t_max, decoder)


def scflip_fis_decode(spec: PolarCodeSpec, channel_llrs,
                      critical_set: CriticalSet, t_max: int,
                      decoder: ScDecoder | None = None) -> FlipDecodeResult:
    """SC-Flip with a fixed flip order pre-sorted by first-error frequency."""
    return _flip_loop(spec, channel_llrs,
                      lambda llrs: select_fis_candidates(critical_set, t_max),
                      t_max, decoder)


def tscf_decode(spec: PolarCodeSpec, channel_llrs, config: TscfConfig,
                decoder: ScDecoder | None = None) -> FlipDecodeResult:
    """Thresholded SC-Flip: flip sub-threshold critical indices leftmost-first."""
    return _flip_loop(spec, channel_llrs,
                      lambda llrs: select_tscf_candidates(config, llrs),
                      config.t_max, decoder)


def sco1_decode(spec: PolarCodeSpec, channel_llrs, transmitted_word,
                decoder: ScDecoder | None = None) -> FlipDecodeResult:
    """Genie baseline: force only the first channel-induced error correct.

    Success means the estimate is bit-exact against the transmitted word;
    the CRC verdict is recorded separately.
    """
    dec = decoder if decoder is not None else ScDecoder(spec)
    attempt, corrected = dec.genie_decode(channel_llrs, transmitted_word,
                                          max_corrections=1)
    truth = np.asarray(transmitted_word, dtype=np.uint8)
    exact = bool(np.array_equal(attempt.decisions, truth))
    return FlipDecodeResult(
        message_estimate=attempt.message_estimate, success=exact,
        iterations_consumed=1.0, attempts=1,
        flip_trace=[int(i) for i in corrected],
        first_attempt=attempt, crc_pass=attempt.crc_pass)
