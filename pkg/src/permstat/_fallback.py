"""Pure NumPy versions of the compiled kernels.

Every function here reproduces :mod:`permstat._kernels` bit for bit: the
same PCG32 stream layout, the same Fisher-Yates swap order, and the same
Jacobi rotation sequence. Vectorization runs across the batch axis only.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
PCG_MULT = 6364136223846793005
GOLDEN = 0x9E3779B97F4A7C15

_U64_MULT = np.uint64(PCG_MULT)


def splitmix64(x):
    z = (x + GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def draw_stream(stream, index):
    """Stream id used by draw ``index`` of a batch keyed on ``stream``."""
    return splitmix64((stream * GOLDEN + index) & _MASK64)


def _init_states(seed, subs):
    incs = np.array([((s << 1) | 1) & _MASK64 for s in subs], dtype=np.uint64)
    states = incs.copy()  # state = 0 * MULT + inc
    states += np.uint64(seed & _MASK64)
    states = states * _U64_MULT + incs
    return states, incs


def _next_u32(states, incs):
    old = states.copy()
    states *= _U64_MULT
    states += incs
    xs = (((old >> np.uint64(18)) ^ old) >> np.uint64(27)).astype(np.uint32)
    rot = (old >> np.uint64(59)).astype(np.uint32)
    return (xs >> rot) | (xs << ((np.uint32(32) - rot) & np.uint32(31)))


def permutation_batch(n, seed, stream, start, count):
    subs = [draw_stream(stream, start + b) for b in range(count)]
    states, incs = _init_states(seed, subs)
    perms = np.tile(np.arange(n, dtype=np.int64), (count, 1))
    rows = np.arange(count)
    for i in range(n - 1, 0, -1):
        bound = i + 1
        threshold = ((1 << 32) - bound) % bound
        r = _next_u32(states, incs)
        j = (r % np.uint32(bound)).astype(np.int64)
        pending = np.flatnonzero(r < threshold)
        while pending.size:
            sub_states = states[pending]
            rr = _next_u32(sub_states, incs[pending])
            states[pending] = sub_states
            ok = rr >= threshold
            j[pending[ok]] = (rr[ok] % np.uint32(bound)).astype(np.int64)
            pending = pending[~ok]
        vi = perms[:, i].copy()
        perms[:, i] = perms[rows, j]
        perms[rows, j] = vi
    return perms


def jacobi_eigvals_batch(mats, tol, max_sweeps):
    a = np.array(mats, dtype=np.float64, copy=True)
    count, d, _ = a.shape
    fro2 = np.zeros(count)
    for p in range(d):
        for q in range(d):
            fro2 = fro2 + a[:, p, q] * a[:, p, q]
    active = fro2 != 0.0
    tol2 = tol * tol
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_sweeps):
            off = np.zeros(count)
            for p in range(d - 1):
                for q in range(p + 1, d):
                    off = off + a[:, p, q] * a[:, p, q]
            active &= ~(2.0 * off <= tol2 * fro2)
            if not active.any():
                break
            for p in range(d - 1):
                for q in range(p + 1, d):
                    apq = a[:, p, q].copy()
                    apply = active & (apq != 0.0)
                    if not apply.any():
                        continue
                    theta = (a[:, q, q] - a[:, p, p]) / (2.0 * apq)
                    big = np.abs(theta) > 1e150
                    t = 1.0 / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                    t = np.where(theta < 0.0, -t, t)
                    t = np.where(big, 0.5 / theta, t)
                    c = 1.0 / np.sqrt(t * t + 1.0)
                    s = t * c
                    tau = s / (1.0 + c)
                    a[:, p, p] = np.where(apply, a[:, p, p] - t * apq, a[:, p, p])
                    a[:, q, q] = np.where(apply, a[:, q, q] + t * apq, a[:, q, q])
                    a[:, p, q] = np.where(apply, 0.0, apq)
                    a[:, q, p] = np.where(apply, 0.0, a[:, q, p])
                    for r in range(d):
                        if r == p or r == q:
                            continue
                        arp = a[:, r, p].copy()
                        arq = a[:, r, q].copy()
                        a[:, r, p] = np.where(apply, arp - s * (arq + tau * arp), arp)
                        a[:, r, q] = np.where(apply, arq + s * (arp - tau * arq), arq)
                        a[:, p, r] = a[:, r, p]
                        a[:, q, r] = a[:, r, q]
    return np.ascontiguousarray(np.diagonal(a, axis1=1, axis2=2))
