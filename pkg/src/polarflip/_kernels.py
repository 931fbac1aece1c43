"""Numba-compiled hot loops: polar transform, CRC division, SC decoding.

Everything here operates on plain numpy arrays so the kernels stay
pickling-free and reusable; the public API lives in the sibling modules.
"""

import numba as nb
import numpy as np

# Magnitudes are clipped here so that g-node sums can never overflow into
# inf/nan territory at very high SNR. Decisions are unaffected.
LLR_SATURATION = 1.0e6


@nb.njit(cache=True)
def polar_transform_inplace(u):
    """Apply x = u G^{(x)n} over GF(2), in place, natural bit order."""
    n_bits = u.shape[0]
    step = 2
    while step <= n_bits:
        half = step >> 1
        for blk in range(0, n_bits, step):
            for j in range(blk, blk + half):
                u[j] ^= u[j + half]
        step <<= 1


@nb.njit(cache=True)
def crc_register(bits, poly_full, crc_len, init):
    """Feed `bits` MSB-first through a CRC shift register.

    Returns the register after appending crc_len implicit zeros, i.e. the
    remainder of (init*x^len + bits(x)) * x^C modulo the generator.
    """
    mask = (1 << crc_len) - 1
    poly_low = poly_full & mask
    reg = init & mask
    for k in range(bits.shape[0]):
        fb = ((reg >> (crc_len - 1)) & 1) ^ bits[k]
        reg = (reg << 1) & mask
        if fb:
            reg ^= poly_low
    return reg


@nb.njit(cache=True)
def sc_pass(chan_llr, frozen, flip, use_genie, u_true, max_corrections,
            llr_ws, bit_ws, leaf_llr, decisions, err_out):
    """One full successive-cancellation traversal.

    Depth-first, left-first tree schedule with min-sum f and exact g
    kernels. `llr_ws`/`bit_ws` are (n+1, N) scratch arrays owned by the
    caller; row n of `bit_ws` ends up holding the re-encoded codeword of
    the leaf decisions.

    With use_genie=False, the hard decision at every index with
    flip[i] != 0 is inverted. With use_genie=True, natural decisions that
    disagree with u_true are corrected (up to max_corrections of them)
    and the corrected indices are written to err_out; returns how many
    corrections were applied.
    """
    n_leaves = chan_llr.shape[0]
    n_stages = 0
    while (1 << n_stages) < n_leaves:
        n_stages += 1
    for j in range(n_leaves):
        v = chan_llr[j]
        if v > LLR_SATURATION:
            v = LLR_SATURATION
        elif v < -LLR_SATURATION:
            v = -LLR_SATURATION
        llr_ws[n_stages, j] = v
    n_err = 0
    for i in range(n_leaves):
        if i == 0:
            s_first = n_stages
        else:
            s_first = 1
            while ((i >> (s_first - 1)) & 1) == 0:
                s_first += 1
        for s in range(s_first, 0, -1):
            half = 1 << (s - 1)
            blk = (i >> s) << s
            cblk = (i >> (s - 1)) << (s - 1)
            if ((i >> (s - 1)) & 1) == 0:
                # left child: min-sum f kernel
                for j in range(half):
                    a = llr_ws[s, blk + j]
                    b = llr_ws[s, blk + half + j]
                    m = abs(a)
                    mb = abs(b)
                    if mb < m:
                        m = mb
                    if (a < 0.0) != (b < 0.0):
                        m = -m
                    llr_ws[s - 1, cblk + j] = m
            else:
                # right child: g kernel using the left sibling's partial sums
                for j in range(half):
                    a = llr_ws[s, blk + j]
                    b = llr_ws[s, blk + half + j]
                    if bit_ws[s - 1, blk + j]:
                        v = b - a
                    else:
                        v = b + a
                    if v > LLR_SATURATION:
                        v = LLR_SATURATION
                    elif v < -LLR_SATURATION:
                        v = -LLR_SATURATION
                    llr_ws[s - 1, cblk + j] = v
        alpha = llr_ws[0, i]
        leaf_llr[i] = alpha
        if frozen[i]:
            d = np.uint8(0)
        else:
            d = np.uint8(0) if alpha >= 0.0 else np.uint8(1)
            if use_genie:
                if d != u_true[i] and n_err < max_corrections:
                    err_out[n_err] = i
                    n_err += 1
                    d = u_true[i]
            elif flip[i]:
                d ^= np.uint8(1)
        decisions[i] = d
        bit_ws[0, i] = d
        s = 0
        while s < n_stages and ((i >> s) & 1) == 1:
            pblk = (i >> (s + 1)) << (s + 1)
            half = 1 << s
            for j in range(half):
                left = bit_ws[s, pblk + j]
                right = bit_ws[s, pblk + half + j]
                bit_ws[s + 1, pblk + j] = left ^ right
                bit_ws[s + 1, pblk + half + j] = right
            s += 1
    return n_err
