"""Polar code construction, encoding and CRC handling.

Code construction uses Gaussian-approximation density evolution at a
design Eb/N0, with the noise variance derived from the information rate
K/N (CRC bits are treated as overhead). The resulting reliability order
is stored on the spec so experiments are construction-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._kernels import crc_register, polar_transform_inplace

# Default generator polynomials by remainder length. Stored with the
# leading term included, MSB-first. Overridable wherever a CrcSpec is
# accepted.
DEFAULT_CRC_POLYS = {
    4: (1 << 4) | 0b0011,                 # x^4 + x + 1
    6: (1 << 6) | 0b000011,               # x^6 + x + 1
    7: (1 << 7) | 0b0001001,              # x^7 + x^3 + 1
    8: (1 << 8) | 0b00000111,             # x^8 + x^2 + x + 1
    9: (1 << 9) | 0b000011011,            # x^9 + x^4 + x^3 + x + 1
    10: (1 << 10) | 0b1000110011,
    12: (1 << 12) | 0b100000001111,       # x^12 + x^11 + x^3 + x^2 + x + 1
    16: (1 << 16) | 0x1021,
    24: (1 << 24) | 0x864CFB,
    32: (1 << 32) | 0x04C11DB7,
}


class DimensionError(ValueError):
    """Raised for inconsistent code dimensions."""


@dataclass(frozen=True)
class CrcSpec:
    """CRC descriptor: remainder length, generator polynomial, initial register.

    The polynomial is stored as an integer with the leading x^C term
    included, e.g. x^7 + x^3 + 1 -> 0x89.
    """

    length: int
    polynomial: int
    init: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise DimensionError(f"CRC length must be >= 1, got {self.length}")
        if self.polynomial.bit_length() != self.length + 1:
            raise DimensionError(
                f"generator degree {self.polynomial.bit_length() - 1} does not "
                f"match CRC length {self.length}")

    @classmethod
    def default(cls, length):
        if length not in DEFAULT_CRC_POLYS:
            raise DimensionError(f"no default polynomial for C={length}; "
                                 f"supply one explicitly")
        return cls(length, DEFAULT_CRC_POLYS[length])


def crc_remainder(crc: CrcSpec, bits) -> np.ndarray:
    """C-bit remainder of bits(x) * x^C modulo the generator, MSB-first."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    reg = crc_register(bits, crc.polynomial, crc.length, crc.init)
    out = np.empty(crc.length, dtype=np.uint8)
    for k in range(crc.length):
        out[k] = (reg >> (crc.length - 1 - k)) & 1
    return out


def crc_check(crc: CrcSpec, bits_with_remainder) -> bool:
    """True iff the trailing C bits are the remainder of the leading bits."""
    bits = np.ascontiguousarray(bits_with_remainder, dtype=np.uint8)
    if bits.shape[0] < crc.length:
        return False
    return crc_register(bits, crc.polynomial, crc.length, crc.init) == 0


@dataclass(frozen=True, eq=False)
class PolarCodeSpec:
    """Immutable polar code description.

    frozen_mask is length N with True marking frozen channels; the K + C
    most reliable entries of reliability_order are the non-frozen ones.
    """

    N: int
    K: int
    C: int
    design_ebn0: float
    reliability_order: np.ndarray
    frozen_mask: np.ndarray
    crc: CrcSpec | None = None
    n: int = field(init=False)

    def __post_init__(self):
        if self.N < 2 or self.N & (self.N - 1):
            raise DimensionError(f"N must be a power of two >= 2, got {self.N}")
        if self.K < 1 or self.K + self.C > self.N:
            raise DimensionError(
                f"need 0 < K and K + C <= N, got K={self.K} C={self.C} N={self.N}")
        if self.C > 0 and self.crc is None:
            object.__setattr__(self, "crc", CrcSpec.default(self.C))
        if self.C == 0 and self.crc is not None:
            raise DimensionError("C=0 spec must not carry a CrcSpec")
        order = np.ascontiguousarray(self.reliability_order, dtype=np.int64)
        mask = np.ascontiguousarray(self.frozen_mask, dtype=np.bool_)
        if order.shape != (self.N,) or not np.array_equal(
                np.sort(order), np.arange(self.N)):
            raise DimensionError("reliability_order must be a permutation of 0..N-1")
        if mask.shape != (self.N,):
            raise DimensionError("frozen_mask must have length N")
        if int((~mask).sum()) != self.K + self.C:
            raise DimensionError("frozen_mask must leave exactly K + C channels open")
        if mask[order[: self.K + self.C]].any():
            raise DimensionError("non-frozen set must be the most reliable channels")
        order.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "reliability_order", order)
        object.__setattr__(self, "frozen_mask", mask)
        object.__setattr__(self, "n", int(self.N).bit_length() - 1)

    @property
    def rate(self) -> float:
        return self.K / self.N

    @property
    def non_frozen(self) -> np.ndarray:
        """Non-frozen indices, ascending."""
        return np.flatnonzero(~self.frozen_mask)


def _phi(x):
    """Mean-LLR reliability functional for Gaussian-approximation DE."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = x < 10.0
    xs = np.where(small, x, 1.0)
    out_small = np.exp(-0.4527 * xs ** 0.86 + 0.0218)
    xl = np.where(small, 10.0, x)
    out_large = np.sqrt(np.pi / xl) * np.exp(-xl / 4.0) * (1.0 - 10.0 / (7.0 * xl))
    out[...] = np.where(small, out_small, out_large)
    return out


_PHI_AT_10 = float(_phi(10.0))


def _phi_inv_scalar(y):
    if y >= 1.0:
        return 0.0
    if y > _PHI_AT_10:
        return ((0.0218 - np.log(y)) / 0.4527) ** (1.0 / 0.86)
    # bisection on the monotone tail branch
    lo, hi = 10.0, 20.0
    while float(_phi(hi)) > y:
        hi *= 2.0
        if hi > 1e9:
            return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(_phi(mid)) > y:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * hi:
            break
    return 0.5 * (lo + hi)


def _phi_inv(y):
    return np.array([_phi_inv_scalar(v) for v in np.atleast_1d(y)])


def ebn0_to_sigma2(ebn0_db: float, rate: float) -> float:
    """AWGN noise variance for unit-energy BPSK at the given Eb/N0."""
    return 1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))


def reliability_sequence(N: int, design_ebn0: float, rate: float) -> np.ndarray:
    """Bit-channel indices most-reliable-first, by Gaussian-approximation DE.

    Ties broken by ascending index so the sequence is deterministic.
    """
    if N < 2 or N & (N - 1):
        raise DimensionError(f"N must be a power of two >= 2, got {N}")
    sigma2 = ebn0_to_sigma2(design_ebn0, rate)
    mu = np.array([2.0 / sigma2])
    n = N.bit_length() - 1
    for _ in range(n):
        nxt = np.empty(2 * mu.shape[0])
        nxt[0::2] = _phi_inv(1.0 - (1.0 - _phi(mu)) ** 2)
        nxt[1::2] = 2.0 * mu
        mu = nxt
    return np.argsort(-mu, kind="stable").astype(np.int64)


def construct_code(N: int, K: int, C: int = 0, design_ebn0: float = 2.5,
                   crc: CrcSpec | None = None) -> PolarCodeSpec:
    """Build a PolarCodeSpec with the K + C most reliable channels open."""
    if K < 1 or C < 0 or K + C > N:
        raise DimensionError(
            f"need 0 < K and K + C <= N, got K={K} C={C} N={N}")
    order = reliability_sequence(N, design_ebn0, K / N)
    mask = np.ones(N, dtype=np.bool_)
    mask[order[: K + C]] = False
    if C > 0 and crc is None:
        crc = CrcSpec.default(C)
    return PolarCodeSpec(N=N, K=K, C=C, design_ebn0=design_ebn0,
                         reliability_order=order, frozen_mask=mask,
                         crc=crc if C > 0 else None)


def pad_message(spec: PolarCodeSpec, message) -> np.ndarray:
    """Pre-transform word: CRC appended, payload scattered on non-frozen bits."""
    message = np.ascontiguousarray(message, dtype=np.uint8)
    if message.shape != (spec.K,):
        raise DimensionError(
            f"message length must be {spec.K}, got {message.shape[0]}")
    if spec.C > 0:
        payload = np.concatenate([message, crc_remainder(spec.crc, message)])
    else:
        payload = message
    u = np.zeros(spec.N, dtype=np.uint8)
    u[~spec.frozen_mask] = payload
    return u


def encode(spec: PolarCodeSpec, message) -> np.ndarray:
    """Encode K information bits into an N-bit codeword."""
    x = pad_message(spec, message)
    polar_transform_inplace(x)
    return x


def polar_transform(u) -> np.ndarray:
    """x = u G^{(x)n} over GF(2) for a full-length input word."""
    x = np.array(u, dtype=np.uint8, copy=True)
    if x.shape[0] & (x.shape[0] - 1) or x.shape[0] < 1:
        raise DimensionError("input length must be a power of two")
    polar_transform_inplace(x)
    return x


def extract_message(spec: PolarCodeSpec, decisions) -> np.ndarray:
    """Information bits (CRC tail stripped) from pre-transform decisions."""
    payload = np.asarray(decisions, dtype=np.uint8)[~spec.frozen_mask]
    return payload[: spec.K]


def save_construction(spec: PolarCodeSpec, path) -> None:
    """Persist the construction as byte-stable JSON."""
    doc = {
        "N": spec.N,
        "K": spec.K,
        "C": spec.C,
        "design_ebn0": spec.design_ebn0,
        "reliability_order": [int(i) for i in spec.reliability_order],
        "frozen_mask": [int(b) for b in spec.frozen_mask],
    }
    if spec.crc is not None:
        doc["crc_polynomial"] = spec.crc.polynomial
        doc["crc_init"] = spec.crc.init
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_construction(path) -> PolarCodeSpec:
    with open(path) as fh:
        doc = json.load(fh)
    crc = None
    if doc["C"] > 0:
        poly = doc.get("crc_polynomial")
        crc = (CrcSpec(doc["C"], poly, doc.get("crc_init", 0))
               if poly is not None else CrcSpec.default(doc["C"]))
    return PolarCodeSpec(
        N=doc["N"], K=doc["K"], C=doc["C"], design_ebn0=doc["design_ebn0"],
        reliability_order=np.array(doc["reliability_order"], dtype=np.int64),
        frozen_mask=np.array(doc["frozen_mask"], dtype=np.bool_),
        crc=crc)
