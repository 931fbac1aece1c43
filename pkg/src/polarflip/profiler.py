"""Offline Monte Carlo profiling.

Estimates the first-error distribution over non-frozen indices with the
genie decoder, derives critical sets from it, gathers per-index LLR
statistics split by error status, and sweeps the TSCF threshold, the CRC
length and the iteration budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import __version__ as _version
from .code import PolarCodeSpec, construct_code, ebn0_to_sigma2
from .flip import CriticalSet, TscfConfig, select_scflip_candidates, \
    select_tscf_candidates
from .sc import ScDecoder
from .simulate import DecoderConfig, FrameStream, StopRule, \
    generate_frame, run_campaign

SUM_TOLERANCE = 1e-12


class InsufficientDataError(RuntimeError):
    """Raised when a profiling campaign saw no SC failures at all."""


@dataclass
class E1Profile:
    """First-error frequencies and error-count distribution.

    f_e1 is a length-N vector, zero on frozen/unseen indices, summing to 1
    over the profiled events; error_count_hist[k] is the number of
    SC-failing frames with exactly k channel-induced errors.
    """

    ebn0: float
    f_e1: np.ndarray
    error_count_hist: np.ndarray
    n_frames: int
    n_failures: int
    target_events: int

    @property
    def meets_target(self) -> bool:
        return self.n_failures >= self.target_events

    @property
    def single_error_fraction(self) -> float:
        return self.error_count_hist[1] / self.n_failures

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# polarflip {_version} e1 profile ebn0={self.ebn0:.6g} "
                     f"frames={self.n_frames} failures={self.n_failures}\n")
            fh.write("index,freq\n")
            for i in np.flatnonzero(self.f_e1):
                fh.write(f"{i},{self.f_e1[i]:.10e}\n")


def profile_e1(spec: PolarCodeSpec, ebn0: float, min_events: int = 2000,
               max_frames: int = 10_000_000, seed: int = 1,
               stream: int = 0) -> E1Profile:
    """Estimate the first-error distribution at one Eb/N0 point.

    Runs the genie decoder frame by frame; every frame on which plain SC
    would fail contributes the index of its first channel-induced error.
    Raises InsufficientDataError when the budget produced no failures.
    """
    sigma = float(np.sqrt(ebn0_to_sigma2(ebn0, spec.rate)))
    dec = ScDecoder(spec)
    rngs = FrameStream(seed)
    counts = np.zeros(spec.N, dtype=np.int64)
    hist = np.zeros(spec.K + spec.C + 1, dtype=np.int64)
    n_fail = 0
    frame = 0
    while frame < max_frames and n_fail < min_events:
        rng = rngs.at(stream, frame)
        _, u_true, llrs = generate_frame(spec, sigma, rng)
        err = dec.genie_attempt(llrs, u_true)
        if len(err):
            counts[err[0]] += 1
            hist[len(err)] += 1
            n_fail += 1
        frame += 1
    if n_fail == 0:
        raise InsufficientDataError(
            f"no SC failures in {frame} frames at {ebn0} dB")
    return E1Profile(ebn0=float(ebn0), f_e1=counts / n_fail,
                     error_count_hist=hist, n_frames=frame,
                     n_failures=n_fail, target_events=min_events)


def derive_critical_set(f_e1, gamma: float, source_ebn0: float = float("nan"),
                        fer_target: float = float("nan")) -> CriticalSet:
    """Smallest index set whose first-error mass reaches gamma.

    Indices are taken greedily in descending frequency, ties broken by
    ascending index.
    """
    f = np.asarray(f_e1, dtype=np.float64)
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    if abs(f.sum() - 1.0) > 1e-9:
        raise ValueError("first-error frequencies must sum to 1")
    nz = np.flatnonzero(f)
    order = nz[np.lexsort((nz, -f[nz]))]
    cum = np.cumsum(f[order])
    k = int(np.searchsorted(cum, gamma - SUM_TOLERANCE)) + 1
    k = min(k, len(order))
    return CriticalSet(indices=order[:k], frequencies=f[order[:k]],
                       gamma_used=gamma, source_ebn0=source_ebn0,
                       source_fer_target=fer_target)


@dataclass
class LlrStats:
    """Per-critical-index |LLR| statistics split by first-error status."""

    ebn0: float
    indices: np.ndarray
    e1_mean: np.ndarray
    ok_mean: np.ndarray
    e1_count: np.ndarray
    ok_count: np.ndarray
    hist_bins: int
    e1_hist: list = field(default_factory=list)
    ok_hist: list = field(default_factory=list)
    hist_max: np.ndarray | None = None
    n_frames: int = 0

    @property
    def underpopulated(self) -> np.ndarray:
        """Indices with no first-error samples; their e1_mean is NaN."""
        return self.indices[self.e1_count == 0]

    def overall_gap(self, min_samples: int = 1) -> float:
        """Correct-case minus error-case mean |LLR| over the whole set."""
        ok = self.e1_count >= min_samples
        w_ok = self.ok_count[ok]
        w_e1 = self.e1_count[ok]
        mean_ok = float((self.ok_mean[ok] * w_ok).sum() / w_ok.sum())
        mean_e1 = float((self.e1_mean[ok] * w_e1).sum() / w_e1.sum())
        return mean_ok - mean_e1

    def save_csv(self, path) -> None:
        # normalized by the largest observed magnitude, for plotting parity
        scale = float(np.nanmax(self.hist_max)) if self.hist_max is not None \
            else max(float(np.nanmax(self.ok_mean)), 1.0)
        with open(path, "w") as fh:
            fh.write(f"# polarflip {_version} llr stats ebn0={self.ebn0:.6g} "
                     f"frames={self.n_frames} scale={scale:.6g}\n")
            fh.write("index,e1_count,ok_count,e1_mean_norm,ok_mean_norm\n")
            for j, i in enumerate(self.indices):
                e1m = self.e1_mean[j] / scale if self.e1_count[j] else float("nan")
                fh.write(f"{i},{self.e1_count[j]},{self.ok_count[j]},"
                         f"{e1m:.8e},{self.ok_mean[j] / scale:.8e}\n")


_HIST_BINS = 64
_HIST_SAMPLE_CAP = 20000


def llr_statistics(spec: PolarCodeSpec, ebn0: float,
                   critical_set: CriticalSet, frame_budget: int,
                   seed: int = 1, stream: int = 0) -> LlrStats:
    """Collect |LLR| means and histograms at the critical leaves.

    For each critical index the magnitude of its first-attempt LLR is
    accumulated separately over frames whose first channel-induced error
    sits at that index and frames where the natural decision there was
    correct. Means are exact; histograms use up to 20k samples per group.
    """
    sigma = float(np.sqrt(ebn0_to_sigma2(ebn0, spec.rate)))
    dec = ScDecoder(spec)
    idx = np.sort(critical_set.indices)
    pos = {int(i): j for j, i in enumerate(idx)}
    m = len(idx)
    e1_sum = np.zeros(m)
    ok_sum = np.zeros(m)
    e1_cnt = np.zeros(m, dtype=np.int64)
    ok_cnt = np.zeros(m, dtype=np.int64)
    e1_samp: list = [[] for _ in range(m)]
    ok_samp: list = [[] for _ in range(m)]
    rngs = FrameStream(seed)
    for frame in range(frame_budget):
        rng = rngs.at(stream, frame)
        _, u_true, llrs = generate_frame(spec, sigma, rng)
        err = dec.genie_attempt(llrs, u_true)
        mags = np.abs(dec.raw_leaf_llrs[idx])
        first = int(err[0]) if len(err) else -1
        wrong = set(int(e) for e in err)
        for j in range(m):
            i = int(idx[j])
            if i == first:
                e1_sum[j] += mags[j]
                e1_cnt[j] += 1
                if len(e1_samp[j]) < _HIST_SAMPLE_CAP:
                    e1_samp[j].append(mags[j])
            elif i not in wrong:
                ok_sum[j] += mags[j]
                ok_cnt[j] += 1
                if len(ok_samp[j]) < _HIST_SAMPLE_CAP:
                    ok_samp[j].append(mags[j])
    with np.errstate(invalid="ignore", divide="ignore"):
        e1_mean = np.where(e1_cnt > 0, e1_sum / np.maximum(e1_cnt, 1), np.nan)
        ok_mean = np.where(ok_cnt > 0, ok_sum / np.maximum(ok_cnt, 1), np.nan)
    hist_max = np.empty(m)
    e1_hist, ok_hist = [], []
    for j in range(m):
        allv = np.array(e1_samp[j] + ok_samp[j]) if (e1_samp[j] or ok_samp[j]) \
            else np.array([1.0])
        hi = float(allv.max())
        hist_max[j] = hi
        edges = np.linspace(0.0, hi, _HIST_BINS + 1)
        e1_hist.append(np.histogram(e1_samp[j], bins=edges)[0])
        ok_hist.append(np.histogram(ok_samp[j], bins=edges)[0])
    return LlrStats(ebn0=float(ebn0), indices=idx, e1_mean=e1_mean,
                    ok_mean=ok_mean, e1_count=e1_cnt, ok_count=ok_cnt,
                    hist_bins=_HIST_BINS, e1_hist=e1_hist, ok_hist=ok_hist,
                    hist_max=hist_max, n_frames=frame_budget)


@dataclass
class OmegaSweep:
    """FER per (Eb/N0, threshold) for TSCF at a fixed iteration budget."""

    ebn0_list: np.ndarray
    omegas: np.ndarray
    fer: np.ndarray          # shape (len(ebn0_list), len(omegas))
    frame_errors: np.ndarray
    frames: np.ndarray       # per ebn0

    def best_omega(self, ebn0_index: int) -> float:
        return float(self.omegas[int(np.argmin(self.fer[ebn0_index]))])

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# polarflip {_version} omega sweep\n")
            fh.write("ebn0,omega,frames,frame_errors,fer\n")
            for pi, ebn0 in enumerate(self.ebn0_list):
                for oi, om in enumerate(self.omegas):
                    fh.write(f"{ebn0:.6g},{om:.6g},{int(self.frames[pi])},"
                             f"{int(self.frame_errors[pi, oi])},"
                             f"{self.fer[pi, oi]:.8e}\n")


def sweep_threshold(spec: PolarCodeSpec, critical_set: CriticalSet,
                    ebn0_list, omegas, t_max: int, frame_budget: int,
                    seed: int = 1) -> OmegaSweep:
    """Full-factorial TSCF threshold sweep, seed-matched across thresholds.

    All thresholds share each frame's initial SC attempt and a retry cache,
    so a column at threshold zero is exactly the plain-SC error pattern.
    """
    ebn0_list = np.asarray(list(ebn0_list), dtype=np.float64)
    omegas = np.asarray(list(omegas), dtype=np.float64)
    dec = ScDecoder(spec)
    ferr = np.zeros((len(ebn0_list), len(omegas)), dtype=np.int64)
    frames_arr = np.zeros(len(ebn0_list), dtype=np.int64)
    configs = [TscfConfig(float(om), t_max, critical_set) for om in omegas]
    rngs = FrameStream(seed)
    for pi, ebn0 in enumerate(ebn0_list):
        sigma = float(np.sqrt(ebn0_to_sigma2(ebn0, spec.rate)))
        for frame in range(frame_budget):
            rng = rngs.at(pi, frame)
            msg, _, llrs = generate_frame(spec, sigma, rng)
            if dec.attempt(llrs):
                if not np.array_equal(dec.raw_message, msg):
                    ferr[pi, :] += 1
                continue
            first_leaf = dec.raw_leaf_llrs.copy()
            cache: dict = {}
            for oi, cfg in enumerate(configs):
                ok = False
                for fi in select_tscf_candidates(cfg, first_leaf):
                    fi = int(fi)
                    hit = cache.get(fi)
                    if hit is None:
                        att_crc = dec.attempt(llrs, flip_index=fi)
                        hit = (att_crc,
                               dec.raw_message.copy() if att_crc else None)
                        cache[fi] = hit
                    if hit[0]:
                        ok = bool(np.array_equal(hit[1], msg))
                        break
                if not ok:
                    ferr[pi, oi] += 1
        frames_arr[pi] = frame_budget
    return OmegaSweep(ebn0_list=ebn0_list, omegas=omegas,
                      fer=ferr / np.maximum(frames_arr[:, None], 1),
                      frame_errors=ferr, frames=frames_arr)


@dataclass
class CrcSweep:
    """SC-Flip FER per (CRC length, Eb/N0) at fixed K and N."""

    c_list: list
    ebn0_list: np.ndarray
    fer: np.ndarray          # shape (len(c_list), len(ebn0_list))
    frames: np.ndarray
    frame_errors: np.ndarray

    def best_c(self, ebn0_index: int) -> int:
        return int(self.c_list[int(np.argmin(self.fer[:, ebn0_index]))])

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# polarflip {_version} crc sweep\n")
            fh.write("crc_len,ebn0,frames,frame_errors,fer\n")
            for ci, c in enumerate(self.c_list):
                for pi, ebn0 in enumerate(self.ebn0_list):
                    fh.write(f"{c},{ebn0:.6g},{int(self.frames[ci, pi])},"
                             f"{int(self.frame_errors[ci, pi])},"
                             f"{self.fer[ci, pi]:.8e}\n")


def sweep_crc(N: int, K: int, c_list, ebn0_list, t_max: int,
              stop: StopRule, design_ebn0: float = 2.5, seed: int = 1,
              workers: int = 1) -> CrcSweep:
    """SC-Flip FER as a function of the CRC remainder length."""
    ebn0_list = np.asarray(list(ebn0_list), dtype=np.float64)
    c_list = list(c_list)
    fer = np.zeros((len(c_list), len(ebn0_list)))
    frames = np.zeros_like(fer, dtype=np.int64)
    ferr = np.zeros_like(frames)
    for ci, c in enumerate(c_list):
        spec = construct_code(N, K, c, design_ebn0)
        kind = "scflip" if c > 0 else "sc"
        rep = run_campaign(spec, [DecoderConfig(kind, t_max=t_max)],
                           ebn0_list, stop=stop, seed=seed, workers=workers)
        for pi, ebn0 in enumerate(ebn0_list):
            row = rep.row(kind, float(ebn0))
            fer[ci, pi] = row.fer
            frames[ci, pi] = row.frames
            ferr[ci, pi] = row.frame_errors
    return CrcSweep(c_list=c_list, ebn0_list=ebn0_list, fer=fer,
                    frames=frames, frame_errors=ferr)


@dataclass
class TmaxSweep:
    """FER versus iteration budget for SC-Flip and TSCF, seed-matched."""

    ebn0: float
    t_max_grid: np.ndarray
    fer: dict                # decoder label -> array over t_max_grid
    frames: int

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# polarflip {_version} t_max sweep ebn0={self.ebn0:.6g} "
                     f"frames={self.frames}\n")
            fh.write("decoder,t_max,fer\n")
            for name, curve in self.fer.items():
                for t, f in zip(self.t_max_grid, curve):
                    fh.write(f"{name},{int(t)},{f:.8e}\n")


def sweep_tmax(spec: PolarCodeSpec, critical_set: CriticalSet, omega: float,
               ebn0: float, t_max_grid, frame_budget: int, seed: int = 1,
               stream: int = 0) -> TmaxSweep:
    """FER of SC-Flip and TSCF across iteration budgets in one pass.

    Each family runs once at the largest budget; because a success at
    attempt a implies success for every larger budget, the whole curve
    falls out of the per-frame success attempt.
    """
    grid = np.asarray(sorted(t_max_grid), dtype=np.int64)
    t_top = int(grid[-1])
    sigma = float(np.sqrt(ebn0_to_sigma2(ebn0, spec.rate)))
    dec = ScDecoder(spec)
    tscf_cfg = TscfConfig(omega, t_top, critical_set)
    ferr = {"scflip": np.zeros(len(grid), dtype=np.int64),
            "tscf": np.zeros(len(grid), dtype=np.int64)}
    rngs = FrameStream(seed)
    for frame in range(frame_budget):
        rng = rngs.at(stream, frame)
        msg, _, llrs = generate_frame(spec, sigma, rng)
        if dec.attempt(llrs):
            if not np.array_equal(dec.raw_message, msg):
                for name in ferr:
                    ferr[name] += 1
            continue
        first_leaf = dec.raw_leaf_llrs.copy()
        cache: dict = {}
        cand = {"scflip": select_scflip_candidates(spec, first_leaf, t_top),
                "tscf": select_tscf_candidates(tscf_cfg, first_leaf)}
        for name, cands in cand.items():
            success_at = None
            msg_ok = False
            for a, fi in enumerate(cands[: t_top - 1], start=2):
                fi = int(fi)
                hit = cache.get(fi)
                if hit is None:
                    att_crc = dec.attempt(llrs, flip_index=fi)
                    hit = (att_crc,
                           dec.raw_message.copy() if att_crc else None)
                    cache[fi] = hit
                if hit[0]:
                    success_at = a
                    msg_ok = bool(np.array_equal(hit[1], msg))
                    break
            for gi, t in enumerate(grid):
                if success_at is None or success_at > t or not msg_ok:
                    ferr[name][gi] += 1
    return TmaxSweep(ebn0=float(ebn0), t_max_grid=grid,
                     fer={k: v / frame_budget for k, v in ferr.items()},
                     frames=frame_budget)
