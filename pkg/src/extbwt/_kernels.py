"""Compiled inner loops for the merge phase.

The merge state lives in memory-mapped files (or, in semi-external mode, in
RAM); these loops only ever walk them left to right, or left to right within
each bucket, so the access pattern stays sequential.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# scalar slots of the resumable scan state
S_POS = 0
S_BLOCK = 1
S_SKIP_IDX = 2
S_N_OUT = 3
S_N_EMIT = 4
S_RUN_ACTIVE = 5
S_RUN_START = 6
S_RUN_END = 7
S_PEND_LAM = 8
S_PEND_C = 9
S_SCANNED = 10
S_SKIPPED = 11
S_CONSUMED = 12
S_WRITTEN = 13
S_EMITTED = 14
N_SLOTS = 16

DONE = 0
EMIT_FULL = 1
RANGES_FULL = 2


@njit(cache=True, inline="always")
def _getbit(a, i):
    return (a[i >> 3] >> (i & 7)) & 1


@njit(cache=True, inline="always")
def _putbit(a, i, v):
    if v:
        a[i >> 3] |= np.uint8(1 << (i & 7))
    else:
        a[i >> 3] &= np.uint8(~(1 << (i & 7)) & 0xFF)


@njit(cache=True)
def _close_run(st, adv, out, t, k, sig1):
    """Store the finished bx run, shortened by its last position, if long enough."""
    if st[S_RUN_ACTIVE] == 0:
        return
    st[S_RUN_ACTIVE] = 0
    if st[S_PEND_LAM] < 0:
        # run ended inside a skipped range: cannot shorten it, drop it
        return
    start = st[S_RUN_START]
    end = st[S_RUN_END] - 1
    if end - start + 1 <= t:
        return
    row = st[S_N_OUT]
    out[row, 0] = start
    out[row, 1] = end
    for j in range(adv.shape[0]):
        out[row, 2 + j] = adv[j]
    st[S_N_OUT] = row + 1
    st[S_WRITTEN] += 1


@njit(cache=True)
def _flush_pending(st, adv, k, sig1):
    lam = st[S_PEND_LAM]
    if lam >= 0:
        c = st[S_PEND_C]
        adv[lam] += 1
        adv[k + c] += 1
        if c == 0:
            adv[k + sig1 + lam] += 1
        st[S_PEND_LAM] = -1


@njit(cache=True)
def scan_iteration(
    h, n, k, sig1,
    cat, in_cur, code_of, bucket_cur, zero_cur, last_block,
    semi, z_old, z_new, zpack, old_shift, new_shift,
    bx, track_ts, ts_old, ts_new,
    skipping, t, skip_in, skip_out,
    emit_pairs, emit_buf,
    st, adv,
):
    """One (possibly partial) left-to-right pass of a merge iteration.

    Returns DONE when position n is reached, or EMIT_FULL / RANGES_FULL when
    an output buffer must be flushed by the caller before resuming.
    """
    i = st[S_POS]
    block = st[S_BLOCK]
    sidx = st[S_SKIP_IDX]
    nskip = skip_in.shape[0]
    emit_cap = emit_buf.shape[0]
    out_cap = skip_out.shape[0]
    old_bbit = 6 if old_shift == 0 else 7
    new_bbit = 6 if new_shift == 0 else 7
    new_mask = np.uint8(~((7 << new_shift) | (1 << new_bbit)) & 0xFF)
    while i < n:
        if st[S_N_EMIT] >= emit_cap:
            st[S_POS] = i
            st[S_BLOCK] = block
            st[S_SKIP_IDX] = sidx
            return EMIT_FULL
        if st[S_N_OUT] >= out_cap:
            st[S_POS] = i
            st[S_BLOCK] = block
            st[S_SKIP_IDX] = sidx
            return RANGES_FULL

        if skipping and sidx < nskip and skip_in[sidx, 0] == i:
            end = skip_in[sidx, 1]
            for lam in range(k):
                in_cur[lam] += skip_in[sidx, 2 + lam]
                zero_cur[lam] += skip_in[sidx, 2 + k + sig1 + lam]
            for c in range(1, sig1):
                bucket_cur[c] += skip_in[sidx, 2 + k + c]
            block += 1
            if st[S_RUN_ACTIVE] == 0:
                st[S_RUN_ACTIVE] = 1
                st[S_RUN_START] = i
                for j in range(adv.shape[0]):
                    adv[j] = 0
                st[S_PEND_LAM] = -1
            else:
                _flush_pending(st, adv, k, sig1)
            for j in range(adv.shape[0]):
                adv[j] += skip_in[sidx, 2 + j]
            st[S_RUN_END] = end
            st[S_SKIPPED] += end - i + 1
            st[S_CONSUMED] += 1
            sidx += 1
            i = end + 1
            continue

        if semi:
            byte = zpack[i]
            lam = (byte >> old_shift) & 7
            b = (byte >> old_bbit) & 1
        else:
            byte = z_old[i]
            lam = byte & 0x7F
            b = byte >> 7
        bxi = _getbit(bx, i)
        if b:
            block += 1
            if bxi == 0:
                if emit_pairs:
                    rec = np.uint64(i)
                    if track_ts and _getbit(ts_old, i - 1):
                        rec |= np.uint64(1) << np.uint64(63)
                    emit_buf[st[S_N_EMIT]] = rec
                    st[S_N_EMIT] += 1
                st[S_EMITTED] += 1
                _putbit(bx, i, 1)
                bxi = 1

        p = in_cur[lam]
        sym = cat[p]
        in_cur[lam] = p + 1
        c = code_of[sym]
        if c == 0:
            d = zero_cur[lam]
            zero_cur[lam] = d + 1
            nb = 1
        else:
            d = bucket_cur[c]
            bucket_cur[c] = d + 1
            nb = 1 if last_block[c] != block else 0
            last_block[c] = block
        # boundaries are monotone: keep the bit stored two iterations ago
        if semi:
            cur = zpack[d]
            nb |= (cur >> new_bbit) & 1
            zpack[d] = (cur & new_mask) | np.uint8(lam << new_shift) | np.uint8(nb << new_bbit)
        else:
            nb |= z_new[d] >> 7
            z_new[d] = np.uint8(lam | (nb << 7))
        if track_ts:
            if c == 0:
                _putbit(ts_new, d, 1)
            else:
                _putbit(ts_new, d, _getbit(ts_old, i))

        if bxi:
            if st[S_RUN_ACTIVE] == 0:
                st[S_RUN_ACTIVE] = 1
                st[S_RUN_START] = i
                for j in range(adv.shape[0]):
                    adv[j] = 0
            else:
                _flush_pending(st, adv, k, sig1)
            st[S_PEND_LAM] = lam
            st[S_PEND_C] = c
            st[S_RUN_END] = i
        else:
            _close_run(st, adv, skip_out, t, k, sig1)
        st[S_SCANNED] += 1
        i += 1

    if st[S_RUN_ACTIVE]:
        if st[S_N_OUT] >= out_cap:
            st[S_POS] = i
            st[S_BLOCK] = block
            st[S_SKIP_IDX] = sidx
            return RANGES_FULL
        _close_run(st, adv, skip_out, t, k, sig1)
    st[S_POS] = i
    st[S_BLOCK] = block
    st[S_SKIP_IDX] = sidx
    return DONE


@njit(cache=True)
def final_pass(n, semi, z, zpack, shift, cat, dacat, in_cur, out_bwt, out_da, lo, hi):
    """Write merged bwt/da for positions lo..hi-1 following the final ordering."""
    for i in range(lo, hi):
        if semi:
            lam = (zpack[i] >> shift) & 7
        else:
            lam = z[i] & 0x7F
        p = in_cur[lam]
        out_bwt[i - lo] = cat[p]
        out_da[i - lo] = dacat[p]
        in_cur[lam] = p + 1


@njit(cache=True)
def lf_walk(bwt, lf, m, out):
    """Suffix lengths (marker included) by walking each document backwards."""
    steps = 0
    for d in range(m):
        r = d
        length = 1
        while True:
            out[r] = length
            steps += 1
            if bwt[r] == 0:
                break
            r = lf[r]
            length += 1
    return steps
