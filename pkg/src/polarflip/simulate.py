"""BPSK/AWGN Monte Carlo simulation harness.

Campaigns are reproducible from a single seed: every frame draws its
message and noise from a counter-based substream keyed by (seed, Eb/N0
point index, frame index), so results are bit-identical regardless of
chunking or worker count. All decoders in a campaign see the same noise
per frame, enabling paired comparisons, and they share the first SC
attempt, which is common to the whole flip family by construction.
"""

from __future__ import annotations

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__ as _version
from .code import PolarCodeSpec, ebn0_to_sigma2, pad_message
from .flip import (CriticalSet, TscfConfig, select_eis_candidates,
                   select_fis_candidates, select_scflip_candidates,
                   select_tscf_candidates)
from .sc import ScDecoder, channel_llrs, modulate
from ._kernels import polar_transform_inplace

_FRAME_STRIDE_BITS = 20   # counter space reserved per frame
_POINT_STRIDE_BITS = 44   # counter space reserved per Eb/N0 point

DECODER_KINDS = ("sc", "scflip", "tscf", "fis", "eis", "sco1")


def frame_rng(seed: int, point_index: int, frame_index: int) -> np.random.Generator:
    """Counter-based per-frame substream; disjoint for distinct frames."""
    bg = np.random.Philox(key=seed)
    bg.advance((point_index << _POINT_STRIDE_BITS)
               | (frame_index << _FRAME_STRIDE_BITS))
    return np.random.Generator(bg)


class FrameStream:
    """Reusable per-frame substream source, stream-identical to frame_rng.

    Rebuilds the Philox counter in place instead of constructing a fresh
    bit generator per frame, which matters in tight Monte Carlo loops.
    """

    def __init__(self, seed: int):
        self._bg = np.random.Philox(key=seed)
        self.generator = np.random.Generator(self._bg)
        self._counter = np.zeros(4, dtype=np.uint64)
        self._state = {
            "bit_generator": "Philox",
            "state": {"counter": self._counter,
                      "key": self._bg.state["state"]["key"]},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4, "has_uint32": 0, "uinteger": 0,
        }

    def at(self, point_index: int, frame_index: int) -> np.random.Generator:
        """Position the shared generator at one frame's substream start."""
        k = ((point_index << _POINT_STRIDE_BITS)
             | (frame_index << _FRAME_STRIDE_BITS))
        self._counter[0] = k & 0xFFFFFFFFFFFFFFFF
        self._counter[1] = (k >> 64) & 0xFFFFFFFFFFFFFFFF
        self._bg.state = self._state
        return self.generator


@functools.lru_cache(maxsize=None)
def _non_frozen_cached(spec: PolarCodeSpec) -> np.ndarray:
    return spec.non_frozen


def generate_frame(spec: PolarCodeSpec, sigma: float, rng: np.random.Generator):
    """Random message -> encode -> BPSK -> AWGN; returns (msg, u_true, llrs)."""
    from ._kernels import LLR_SATURATION
    from .code import crc_remainder
    msg = rng.integers(0, 2, size=spec.K, dtype=np.uint8)
    nf = _non_frozen_cached(spec)
    u_true = np.zeros(spec.N, dtype=np.uint8)
    u_true[nf[: spec.K]] = msg
    if spec.C:
        u_true[nf[spec.K:]] = crc_remainder(spec.crc, msg)
    x = u_true.copy()
    polar_transform_inplace(x)
    llrs = rng.standard_normal(spec.N)
    llrs *= sigma
    llrs += modulate(x)
    llrs *= 2.0 / (sigma * sigma)
    np.clip(llrs, -LLR_SATURATION, LLR_SATURATION, out=llrs)
    return msg, u_true, llrs


@functools.lru_cache(maxsize=None)
def descent_counts(N: int):
    """Cumulative stage-descent (time-step) counts of the SC schedule.

    Each downward stage transition computes one node LLR vector and costs
    one time step; a full traversal costs 2N - 2. Entry i of the returned
    array is the number of steps spent once leaf i's LLR is available, so
    the cost of a resumed attempt flipping at leaf i is (2N - 2) - cum[i].
    """
    n = N.bit_length() - 1
    cum = np.empty(N, dtype=np.int64)
    total = 0
    for i in range(N):
        if i == 0:
            total += n
        else:
            t = 1
            while ((i >> (t - 1)) & 1) == 0:
                t += 1
            total += t
        cum[i] = total
    return cum


def steps_after_leaf(N: int) -> np.ndarray:
    """Time steps of a resumed attempt that restarts at each leaf."""
    return (2 * N - 2) - descent_counts(N)


def time_step_cost(N: int, flip_trace) -> int:
    """Total time steps of one decode: full attempt plus resumed retries."""
    after = steps_after_leaf(N)
    return int(2 * N - 2 + sum(after[i] for i in flip_trace))


@dataclass(frozen=True, eq=False)
class DecoderConfig:
    """One decoder in a campaign.

    omega may be a single threshold or an {ebn0: omega} map; critical_set
    is required for tscf/fis/eis.
    """

    kind: str
    t_max: int = 1
    omega: float | dict = 0.0
    critical_set: CriticalSet | None = None
    label: str | None = None

    def __post_init__(self):
        if self.kind not in DECODER_KINDS:
            raise ValueError(f"unknown decoder kind {self.kind!r}")
        if self.t_max < 1:
            raise ValueError(f"t_max must be >= 1, got {self.t_max}")
        if self.kind in ("tscf", "fis", "eis") and self.critical_set is None:
            raise ValueError(f"{self.kind} requires a critical set")
        if self.label is None:
            object.__setattr__(self, "label", self.kind)

    def omega_at(self, ebn0: float) -> float:
        if isinstance(self.omega, dict):
            return float(self.omega[ebn0])
        return float(self.omega)


@dataclass(frozen=True)
class StopRule:
    """Stop a point once every decoder saw target_errors frame errors,
    or at max_frames, whichever first."""

    target_errors: int = 200
    max_frames: int = 5_000_000


@dataclass
class RowStats:
    decoder: str
    ebn0: float
    frames: int
    frame_errors: int
    bit_errors: int
    undetected_errors: int
    fer: float
    ber: float
    t_avg: float
    t_avg_attempts: float
    time_steps_avg: float
    ci_halfwidth: float
    low_confidence: bool
    t_max: int
    omega: float


@dataclass
class SimReport:
    spec: PolarCodeSpec
    seed: int
    rows: list = field(default_factory=list)

    def row(self, decoder: str, ebn0: float) -> RowStats:
        for r in self.rows:
            if r.decoder == decoder and r.ebn0 == ebn0:
                return r
        raise KeyError(f"no row for ({decoder}, {ebn0})")

    def t_avg_max(self, decoder: str) -> float:
        vals = [r.t_avg for r in self.rows if r.decoder == decoder]
        if not vals:
            raise KeyError(f"no rows for {decoder}")
        return max(vals)

    def to_csv(self, path) -> None:
        spec = self.spec
        with open(path, "w") as fh:
            fh.write(f"# polarflip {_version} N={spec.N} K={spec.K} C={spec.C} "
                     f"design_ebn0={spec.design_ebn0} seed={self.seed}\n")
            fh.write("decoder,N,K,C,t_max,omega,ebn0,frames,frame_errors,fer,"
                     "ber,t_avg,t_avg_attempts,time_steps_avg,ci_halfwidth,"
                     "low_confidence\n")
            for r in self.rows:
                fh.write(f"{r.decoder},{spec.N},{spec.K},{spec.C},{r.t_max},"
                         f"{r.omega:.6g},{r.ebn0:.6g},{r.frames},"
                         f"{r.frame_errors},{r.fer:.8e},{r.ber:.8e},"
                         f"{r.t_avg:.8f},{r.t_avg_attempts:.8f},"
                         f"{r.time_steps_avg:.4f},{r.ci_halfwidth:.8e},"
                         f"{int(r.low_confidence)}\n")


# accumulator columns per decoder
_ACC_COLS = 7  # frames, frame_err, bit_err, undetected, iter_sum, att_sum, step_sum


def _candidate_list(cfg: DecoderConfig, spec: PolarCodeSpec, leaf_llrs,
                    omega: float) -> np.ndarray:
    if cfg.kind == "scflip":
        return select_scflip_candidates(spec, leaf_llrs, cfg.t_max)
    if cfg.kind == "eis":
        return select_eis_candidates(cfg.critical_set, leaf_llrs, cfg.t_max)
    if cfg.kind == "fis":
        return select_fis_candidates(cfg.critical_set, cfg.t_max)
    if cfg.kind == "tscf":
        tc = TscfConfig(omega, cfg.t_max, cfg.critical_set)
        return select_tscf_candidates(tc, leaf_llrs)
    raise AssertionError(cfg.kind)


def _simulate_chunk(spec: PolarCodeSpec, configs: tuple, ebn0: float,
                    point_index: int, seed: int, frame_start: int,
                    n_frames: int) -> np.ndarray:
    """Decode a contiguous block of frames; returns per-decoder sums."""
    sigma = np.sqrt(ebn0_to_sigma2(ebn0, spec.rate))
    dec = ScDecoder(spec)
    after = steps_after_leaf(spec.N)
    N = spec.N
    full_steps = 2 * N - 2
    omegas = [cfg.omega_at(ebn0) for cfg in configs]
    need_genie = any(cfg.kind == "sco1" for cfg in configs)
    may_flip = any(cfg.kind not in ("sc", "sco1") and cfg.t_max > 1
                   for cfg in configs)
    acc = np.zeros((len(configs), _ACC_COLS), dtype=np.float64)
    stream = FrameStream(seed)
    for frame in range(frame_start, frame_start + n_frames):
        rng = stream.at(point_index, frame)
        msg, u_true, llrs = generate_frame(spec, sigma, rng)
        first_crc = dec.attempt(llrs)
        first_msg = dec.raw_message.copy()
        first_bit_err = int(np.count_nonzero(first_msg != msg))
        first_leaf = None
        if may_flip and not first_crc:
            first_leaf = dec.raw_leaf_llrs.copy()
        genie_msg = genie_exact = None
        if need_genie:
            dec.genie_attempt(llrs, u_true, max_corrections=1)
            genie_msg = dec.raw_message.copy()
            genie_exact = bool(np.array_equal(dec.raw_decisions, u_true))
        retry_cache: dict = {}
        for ci, cfg in enumerate(configs):
            if cfg.kind == "sco1":
                n_bit_err = int(np.count_nonzero(genie_msg != msg))
                crc_ok = genie_exact
                iters, attempts, steps = 1.0, 1, full_steps
            elif cfg.kind == "sc" or first_crc or cfg.t_max <= 1:
                n_bit_err = first_bit_err
                crc_ok = first_crc
                iters, attempts, steps = 1.0, 1, full_steps
            else:
                candidates = _candidate_list(cfg, spec, first_leaf, omegas[ci])
                n_bit_err, crc_ok = first_bit_err, False
                iters, attempts, steps = 1.0, 1, full_steps
                for fi in candidates[: cfg.t_max - 1]:
                    fi = int(fi)
                    hit = retry_cache.get(fi)
                    if hit is None:
                        att_crc = dec.attempt(llrs, flip_index=fi)
                        hit = (att_crc,
                               dec.raw_message.copy() if att_crc else None)
                        retry_cache[fi] = hit
                    attempts += 1
                    iters += (N - fi) / N
                    steps += after[fi]
                    if hit[0]:
                        n_bit_err = int(np.count_nonzero(hit[1] != msg))
                        crc_ok = True
                        break
            frame_err = n_bit_err > 0
            acc[ci, 0] += 1
            acc[ci, 1] += frame_err
            acc[ci, 2] += n_bit_err
            acc[ci, 3] += int(crc_ok and frame_err)
            acc[ci, 4] += iters
            acc[ci, 5] += attempts
            acc[ci, 6] += steps
    return acc


def _consume_in_order(worker, n_chunk_frames, max_frames, should_stop, workers):
    """Run worker(frame_start, n) over successive chunks, merging results in
    submission order so the outcome is independent of worker count."""
    states = []
    frames_done = 0
    if workers <= 1:
        while frames_done < max_frames:
            n = min(n_chunk_frames, max_frames - frames_done)
            states.append(worker(frames_done, n))
            frames_done += n
            if should_stop(states, frames_done):
                break
        return states, frames_done
    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending = []
        submitted = 0
        while True:
            while len(pending) < 2 * workers and submitted < max_frames:
                n = min(n_chunk_frames, max_frames - submitted)
                pending.append(pool.submit(worker, submitted, n))
                submitted += n
            if not pending:
                break
            states.append(pending.pop(0).result())
            if should_stop(states, sum_frames(states)):
                break
        for fut in pending:
            fut.cancel()
    return states, sum_frames(states)


def sum_frames(states) -> int:
    return int(sum(s[0, 0] for s in states))


def run_campaign(spec: PolarCodeSpec, decoders, ebn0_list,
                 stop: StopRule | None = None, seed: int = 1,
                 workers: int = 1, chunk_frames: int = 4096) -> SimReport:
    """Seed-matched Monte Carlo campaign over Eb/N0 points.

    Rows with fewer than 20 frame errors are flagged low-confidence; the
    confidence half-width is the 95% normal approximation.
    """
    if isinstance(decoders, DecoderConfig):
        decoders = [decoders]
    configs = tuple(decoders)
    labels = [c.label for c in configs]
    if len(set(labels)) != len(labels):
        raise ValueError("decoder labels must be unique")
    stop = stop or StopRule()
    report = SimReport(spec=spec, seed=seed)
    for point_index, ebn0 in enumerate(ebn0_list):
        worker = functools.partial(_simulate_chunk, spec, configs, float(ebn0),
                                   point_index, seed)

        def should_stop(states, frames_done):
            total = np.sum(states, axis=0)
            return bool((total[:, 1] >= stop.target_errors).all())

        states, _ = _consume_in_order(worker, chunk_frames, stop.max_frames,
                                      should_stop, workers)
        total = np.sum(states, axis=0)
        for ci, cfg in enumerate(configs):
            frames = int(total[ci, 0])
            ferr = int(total[ci, 1])
            fer = ferr / frames
            half = 1.96 * np.sqrt(max(fer * (1 - fer), 0.0) / frames)
            report.rows.append(RowStats(
                decoder=cfg.label, ebn0=float(ebn0), frames=frames,
                frame_errors=ferr, bit_errors=int(total[ci, 2]),
                undetected_errors=int(total[ci, 3]), fer=fer,
                ber=total[ci, 2] / (frames * spec.K),
                t_avg=total[ci, 4] / frames,
                t_avg_attempts=total[ci, 5] / frames,
                time_steps_avg=total[ci, 6] / frames,
                ci_halfwidth=half, low_confidence=ferr < 20,
                t_max=cfg.t_max, omega=cfg.omega_at(float(ebn0))
                if cfg.kind == "tscf" else 0.0))
    return report
