"""Compiled front-tracking kernel.

All solver state lives in a :data:`Buffers` tuple of numpy arrays so that
the event loop can run under numba.  Front ``i`` occupies row ``i`` of
``F`` (floats) and ``I`` (ints); rows are recycled through a free
stack, and heap entries carry the uids of their two fronts so that an entry
naming a recycled row is recognised as stale.

Every function that can run out of room checks capacity *before* touching
any state and returns a ``NEED_*`` code; the Python side grows the arrays
and calls again.  Negative return codes are errors.
"""

from __future__ import annotations

import math
from collections import namedtuple

import numpy as np
from numba import njit

# F columns
# TVL caches |ln(RU/LU)| for the running diagnostics sums
EPS, LU, LV, RU, RV, SPD, X0, T0, TVL = range(9)
NF = 9
# I columns; FREE holds the stack of unused rows, not a property of row i
FAM, PRV, NXT, ALIVE, UID, FREE = range(6)
NI = 6
# heap columns: key (t, y, family, seq), then the pair and its uids
H_T, H_Y, H_FAM, H_SEQ, H_A, H_B, H_UA, H_UB = range(8)
NH = 8
# float scalars
(S_TIME, S_PERIOD, S_ALPHA, S_CU, S_CV, S_DT, S_ETA, S_MDAMP, S_DROP, S_Q,
 S_XI, S_T_END, S_LAST_X, S_LAST_E1, S_LAST_E2, S_LAST_EA, S_LAST_EB,
 S_STEP_LB, S_STEP_LN, S_STEP_LA, S_STEP_VB, S_STEP_VD, S_STEP_VA,
 S_STEP_DROP, S_STEP_LXB, S_STEP_LXN, S_STEP_LXA,
 S_A_L, S_A_LXI, S_A_TVL, S_A_TVV, S_A_U, S_A_V, S_A_RU, S_A_RV, S_A_TREF,
 S_A_INF, S_A_SUP) = range(38)
# S_A_*: running functionals kept up to date at collisions (U, V are valid
# at S_A_TREF and change at the rates S_A_RU, S_A_RV)
# int scalars
(I_HEAD, I_N, I_STEP, I_SEQ, I_UID, I_HN, I_NFREE, I_LOGN, I_NEVENTS,
 I_COLL, I_CROSS, I_STEPS, I_CREATED, I_OVERSIZE, I_DIAG, I_CLOSURE_EVERY,
 I_NSTEPS, I_MAXEV, I_LAST_FA, I_LAST_FB, I_LAST_NEW, I_STEP_NF,
 I_LAST_OVER, I_A_DIRTY) = range(24)
NSI = 32
# monitor slots live in S after the scalars
MON0 = 40
NMON = 24
(M_DL_COLL, M_DLXI_COLL, M_DL_STEP, M_DL_CLAMP, M_SUMRULE, M_BRACKET_LO,
 M_BRACKET_HI, M_V_SCALE, M_DLXI_STEP, M_ENTROPY, M_LAX, M_CREATE_RES,
 M_CLOSURE, M_RAR_OVER_ETA, M_DROPPED, M_DLXI_STEP_AFTER, M_V_CLAMP,
 M_N_CLOSURE, M_N_SHOCKS, M_MAX_FRONTS, M_ACC_DRIFT) = range(MON0, MON0 + 21)
NS = MON0 + NMON
MON_INIT = np.array(
    [-np.inf, -np.inf, 0.0, -np.inf, 0.0, np.inf, np.inf, 0.0, -np.inf,
     np.inf, np.inf, 0.0, 0.0, 0.0, 0.0, -np.inf, 0.0, 0.0, 0.0, 0.0, 0.0]
    + [0.0] * (NMON - 21)
)
# log columns
(L_T, L_KIND, L_L, L_LXI, L_TVLNU, L_TVV, L_U, L_V, L_INF, L_SUP, L_N,
 L_CLOSURE) = range(12)
NLOG = 12
KIND_INITIAL, KIND_COLLISION, KIND_STEP_BEFORE, KIND_STEP_AFTER, KIND_FINAL = range(5)

# status codes
OK = 0
DONE = 0
NEED_FRONTS = 1
NEED_HEAP = 2
NEED_LOG = 3
ERR_VOLUME = -1
ERR_CONVERGENCE = -2
ERR_INTERACTION = -3
ERR_NOT_COLOCATED = -4
ERR_OVERFLOW = -5
ERR_DAMPING = -6

# peek results
EV_NONE, EV_COLLISION, EV_STEP = 0, 1, 2

# strengths below this are exact zeros
STRENGTH_CLAMP = 1e-14
# residual tolerance of the in-kernel Riemann solves
KERNEL_TOL = 1e-15
MAX_ITER = 200
# relative tolerance for the crossing-exactness assertion
CROSS_RTOL = 1e-11

Buffers = namedtuple("Buffers", ["F", "I", "H", "S", "Si", "PW", "log", "fans", "scratch"])


def allocate(cap: int, hcap: int, n_probes: int = 0, lcap: int = 1, fcap: int = 1) -> Buffers:
    """Empty buffers for ``cap`` fronts.  ``PW`` holds probe positions and trace sums."""
    I = np.zeros((cap, NI), dtype=np.int64)
    I[:, FREE] = np.arange(cap - 1, -1, -1)
    Si = np.zeros(NSI, dtype=np.int64)
    Si[I_NFREE] = cap
    Si[I_HEAD] = -1
    S = np.zeros(NS)
    S[MON0:] = MON_INIT
    return Buffers(
        np.zeros((cap, NF)), I, np.zeros((hcap, NH)), S, Si, np.zeros((2, n_probes)),
        np.zeros((lcap, NLOG)), np.zeros((fcap, 4)), np.zeros(cap, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# wave algebra
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def h(e):
    return e if e >= 0.0 else math.sinh(e)


@njit(cache=True, inline="always")
def dh(e):
    return 1.0 if e >= 0.0 else math.cosh(e)


@njit(cache=True, inline="always")
def wave_u(fam, u, e):
    if fam == 1:
        return u * math.exp(2.0 * e)
    return u * math.exp(-2.0 * e)


@njit(cache=True, inline="always")
def wave_v(v, e, alpha):
    return v + 2.0 * alpha * h(e)


@njit(cache=True)
def root(d, delta, tol, max_iter):
    lo = min(0.0, -d)
    hi = max(0.0, -d)
    f_lo = h(lo) + h(lo + d) - delta
    if f_lo >= 0.0:
        return math.asinh(delta / (2.0 * math.cosh(0.5 * d))) - 0.5 * d, 0
    f_hi = h(hi) + h(hi + d) - delta
    if f_hi <= 0.0:
        return 0.5 * (delta - d), 0
    x = lo - f_lo * (hi - lo) / (f_hi - f_lo)
    for _ in range(max_iter):
        f = h(x) + h(x + d) - delta
        if abs(f) <= tol:
            return x, 0
        if f > 0.0:
            hi = x
        else:
            lo = x
        step = f / (dh(x) + dh(x + d))
        x_new = x - step
        if not (lo < x_new and x_new < hi):
            x_new = 0.5 * (lo + hi)
        if x_new == x or hi - lo <= 4e-16 * max(abs(lo), abs(hi)):
            return x_new, 0
        x = x_new
    return x, ERR_CONVERGENCE


@njit(cache=True, inline="always")
def clamp(e):
    return 0.0 if abs(e) < STRENGTH_CLAMP else e


@njit(cache=True)
def solve(ul, vl, ur, vr, alpha, tol):
    """Riemann fan ``(eps1, eps2, u_mid, v_mid, status)``."""
    if not (ul > 0.0 and ur > 0.0):
        return 0.0, 0.0, ul, vl, ERR_VOLUME
    d = 0.5 * math.log(ul / ur)
    delta = (vr - vl) / (2.0 * alpha)
    x, st = root(d, delta, tol, MAX_ITER)
    e2 = clamp(x + d)
    e1 = clamp(x)
    if e1 == 0.0:
        return e1, e2, ul, vl, st
    if e2 == 0.0:
        return e1, e2, ur, vr, st
    return e1, e2, ul * math.exp(2.0 * e1), vl + 2.0 * alpha * h(e1), st


@njit(cache=True)
def n_pieces(e, eta):
    """Number of fronts used for a wave of strength ``e``."""
    if e > 0.0 and e >= eta:
        n = int(math.floor(e / eta)) + 1
        while True:
            piece = e / n
            last = e - piece * (n - 1)
            if piece < eta and last < eta:
                return n
            n += 1
    return 0 if e == 0.0 else 1


@njit(cache=True)
def entropy_production(ul, vl, ur, vr, mu, alpha):
    a2 = alpha * alpha
    eta_l = 0.5 * vl * vl - a2 * math.log(ul)
    eta_r = 0.5 * vr * vr - a2 * math.log(ur)
    q_l = a2 * vl / ul
    q_r = a2 * vr / ur
    return mu * (eta_r - eta_l) - (q_r - q_l)


# ---------------------------------------------------------------------------
# fronts and heap
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def xpos(F, i, t):
    return F[i, X0] + F[i, SPD] * (t - F[i, T0])


@njit(cache=True)
def _new_front(F, I, S, Si, fam, e, lu, lv, ru, rv, x, t):
    nf = Si[I_NFREE] - 1
    slot = I[nf, FREE]
    Si[I_NFREE] = nf
    alpha = S[S_ALPHA]
    if e > 0.0:
        spd = -alpha / ru if fam == 1 else alpha / ru
    else:
        s = alpha / math.sqrt(lu * ru)
        spd = -s if fam == 1 else s
    F[slot, EPS] = e
    F[slot, LU] = lu
    F[slot, LV] = lv
    F[slot, RU] = ru
    F[slot, RV] = rv
    F[slot, SPD] = spd
    F[slot, X0] = x
    F[slot, T0] = t
    F[slot, TVL] = abs(math.log(ru / lu))
    I[slot, FAM] = fam
    I[slot, ALIVE] = 1
    I[slot, UID] = Si[I_UID]
    Si[I_UID] += 1
    Si[I_CREATED] += 1
    if Si[I_DIAG]:
        wu = wave_u(fam, lu, e)
        wv = wave_v(lv, e, alpha)
        res = max(abs(wu - ru) / ru, abs(wv - rv) / alpha)
        if res > S[M_CREATE_RES]:
            S[M_CREATE_RES] = res
        if e > 0.0:
            r = e / S[S_ETA]
            if r > S[M_RAR_OVER_ETA]:
                S[M_RAR_OVER_ETA] = r
        else:
            S[M_N_SHOCKS] += 1.0
            prod = entropy_production(lu, lv, ru, rv, spd, alpha)
            if prod < S[M_ENTROPY]:
                S[M_ENTROPY] = prod
            if fam == 1:
                lax = min(-alpha / lu - spd, spd + alpha / ru)
            else:
                lax = min(alpha / lu - spd, spd - alpha / ru)
            if lax < S[M_LAX]:
                S[M_LAX] = lax
    return slot


@njit(cache=True, inline="always")
def _release(I, Si, i):
    I[i, ALIVE] = 0
    nf = Si[I_NFREE]
    I[nf, FREE] = i
    Si[I_NFREE] = nf + 1


@njit(cache=True)
def _trace_death(F, S, PW, i, t):
    """Add the crossings of front ``i`` over its lifetime to the probe sums."""
    if PW.shape[1] == 0:
        return
    P = S[S_PERIOD]
    xb = F[i, X0]
    xd = xpos(F, i, t)
    a = abs(F[i, EPS])
    for k in range(PW.shape[1]):
        Y = PW[0, k]
        if xd > xb:
            c = math.floor((xd - Y) / P) - math.floor((xb - Y) / P)
        elif xd < xb:
            c = math.ceil((xb - Y) / P) - math.ceil((xd - Y) / P)
        else:
            c = 0.0
        if c > 0.0:
            PW[1, k] += c * a


@njit(cache=True, inline="always")
def hless(H, i, j):
    for c in range(4):
        if H[i, c] != H[j, c]:
            return H[i, c] < H[j, c]
    return False


@njit(cache=True, inline="always")
def hswap(H, i, j):
    for c in range(NH):
        tmp = H[i, c]
        H[i, c] = H[j, c]
        H[j, c] = tmp


@njit(cache=True, inline="always")
def _heap_push(I, H, Si, tc, y, fam, a, b):
    k = Si[I_HN]
    H[k, H_T] = tc
    H[k, H_Y] = y
    H[k, H_FAM] = fam
    H[k, H_SEQ] = Si[I_SEQ]
    H[k, H_A] = a
    H[k, H_B] = b
    H[k, H_UA] = I[a, UID]
    H[k, H_UB] = I[b, UID]
    Si[I_SEQ] += 1
    Si[I_HN] = k + 1
    while k > 0:
        p = (k - 1) // 2
        if hless(H, k, p):
            hswap(H, k, p)
            k = p
        else:
            break


@njit(cache=True, inline="always")
def _heap_pop(H, Si):
    n = Si[I_HN] - 1
    Si[I_HN] = n
    if n == 0:
        return
    hswap(H, 0, n)
    k = 0
    while True:
        l = 2 * k + 1
        if l >= n:
            break
        m = l
        r = l + 1
        if r < n and hless(H, r, l):
            m = r
        if hless(H, m, k):
            hswap(H, m, k)
            k = m
        else:
            break


@njit(cache=True, inline="always")
def _schedule(F, I, H, S, Si, a):
    b = I[a, NXT]
    if b == a:
        return
    closing = F[a, SPD] - F[b, SPD]
    if not closing > 0.0:
        return
    t = S[S_TIME]
    P = S[S_PERIOD]
    gap = xpos(F, b, t) - xpos(F, a, t)
    if b == Si[I_HEAD]:
        gap += P
    if gap < 0.0:
        gap = 0.0
    tc = t + gap / closing
    y = xpos(F, a, tc) % P
    _heap_push(I, H, Si, tc, y, I[a, FAM], a, b)


@njit(cache=True)
def _rebuild_queue(F, I, H, S, Si):
    Si[I_HN] = 0
    n = Si[I_N]
    f = Si[I_HEAD]
    for _ in range(n):
        _schedule(F, I, H, S, Si, f)
        f = I[f, NXT]


@njit(cache=True, inline="always")
def _top_valid(I, H, Si):
    """Drop stale entries; return True if a valid collision is on top."""
    while Si[I_HN] > 0:
        a = int(H[0, H_A])
        b = int(H[0, H_B])
        if (I[a, ALIVE] == 1 and I[b, ALIVE] == 1 and I[a, UID] == H[0, H_UA]
                and I[b, UID] == H[0, H_UB] and I[a, NXT] == b):
            return True
        _heap_pop(H, Si)
    return False


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------

@njit(cache=True)
def _scan(F, I, S, Si):
    """``(L, L_xi, tv_ln_u, tv_v, U, V, inf_u, sup_u)`` of the current tape."""
    n = Si[I_N]
    P = S[S_PERIOD]
    if n == 0:
        u = S[S_CU]
        return 0.0, 0.0, 0.0, 0.0, u * P, S[S_CV] * P, u, u
    t = S[S_TIME]
    xi = S[S_XI]
    head = Si[I_HEAD]
    L = 0.0
    Lxi = 0.0
    tvl = 0.0
    tvv = 0.0
    U = 0.0
    V = 0.0
    inf_u = np.inf
    sup_u = 0.0
    f = head
    x = xpos(F, f, t)
    for _ in range(n):
        g = I[f, NXT]
        xg = xpos(F, g, t)
        if g == head:
            xg += P
        e = F[f, EPS]
        if e < 0.0:
            L -= e
            Lxi -= xi * e
        else:
            L += e
            Lxi += e
        ru = F[f, RU]
        rv = F[f, RV]
        tvl += abs(math.log(ru / F[f, LU]))
        tvv += abs(rv - F[f, LV])
        gap = xg - x
        U += gap * ru
        V += gap * rv
        if ru < inf_u:
            inf_u = ru
        if ru > sup_u:
            sup_u = ru
        f = g
        x = xg
    return L, Lxi, tvl, tvv, U, V, inf_u, sup_u


@njit(cache=True)
def _closure(F, I, S, Si):
    """Largest deviation between stored states and the composition of all jumps."""
    n = Si[I_N]
    if n == 0:
        return 0.0
    alpha = S[S_ALPHA]
    f = Si[I_HEAD]
    u = F[f, LU]
    v = F[f, LV]
    err = 0.0
    for _ in range(n):
        err = max(err, abs(F[f, LU] - u), abs(F[f, LV] - v))
        e = F[f, EPS]
        u = wave_u(I[f, FAM], u, e)
        v = wave_v(v, e, alpha)
        f = I[f, NXT]
    return max(err, abs(F[f, LU] - u), abs(F[f, LV] - v))


@njit(cache=True, inline="always")
def _acc_move(F, S, f, sgn):
    """Add (``sgn = 1``) or remove (``-1``) front ``f`` from the running sums."""
    e = F[f, EPS]
    S[S_A_L] += sgn * abs(e)
    S[S_A_LXI] += sgn * (-S[S_XI] * e if e < 0.0 else e)
    S[S_A_TVL] += sgn * F[f, TVL]
    S[S_A_TVV] += sgn * abs(F[f, RV] - F[f, LV])
    S[S_A_RU] += sgn * F[f, SPD] * (F[f, LU] - F[f, RU])
    S[S_A_RV] += sgn * F[f, SPD] * (F[f, LV] - F[f, RV])


@njit(cache=True, inline="always")
def _acc_clock(S, t):
    dt = t - S[S_A_TREF]
    S[S_A_U] += S[S_A_RU] * dt
    S[S_A_V] += S[S_A_RV] * dt
    S[S_A_TREF] = t


@njit(cache=True)
def _acc_sync(F, I, S, Si, L, Lxi, tvl, tvv, U, V, inf_u, sup_u):
    """Reset the running sums to freshly scanned values."""
    S[S_A_L] = L
    S[S_A_LXI] = Lxi
    S[S_A_TVL] = tvl
    S[S_A_TVV] = tvv
    S[S_A_U] = U
    S[S_A_V] = V
    S[S_A_INF] = inf_u
    S[S_A_SUP] = sup_u
    S[S_A_TREF] = S[S_TIME]
    ru_rate = 0.0
    rv_rate = 0.0
    f = Si[I_HEAD]
    for _ in range(Si[I_N]):
        ru_rate += F[f, SPD] * (F[f, LU] - F[f, RU])
        rv_rate += F[f, SPD] * (F[f, LV] - F[f, RV])
        f = I[f, NXT]
    S[S_A_RU] = ru_rate
    S[S_A_RV] = rv_rate
    Si[I_A_DIRTY] = 0


@njit(cache=True)
def _extremes(F, I, Si):
    inf_u = np.inf
    sup_u = 0.0
    f = Si[I_HEAD]
    for _ in range(Si[I_N]):
        ru = F[f, RU]
        if ru < inf_u:
            inf_u = ru
        if ru > sup_u:
            sup_u = ru
        f = I[f, NXT]
    return inf_u, sup_u


@njit(cache=True)
def _log_row(F, I, S, Si, log, kind, full):
    """Append a diagnostics row.

    A ``full`` row scans the tape, checks the closure, compares with the
    running sums and resynchronises them; other rows read the running sums.
    """
    k = Si[I_LOGN]
    row = log[k]
    t = S[S_TIME]
    full = full or Si[I_CLOSURE_EVERY] != 0
    if full:
        L, Lxi, tvl, tvv, U, V, inf_u, sup_u = _scan(F, I, S, Si)
        if kind != KIND_INITIAL:
            _acc_clock(S, t)
            sc = max(1.0, L, abs(U), abs(V), tvv)
            d = max(abs(S[S_A_L] - L), abs(S[S_A_LXI] - Lxi), abs(S[S_A_TVL] - tvl),
                    abs(S[S_A_TVV] - tvv), abs(S[S_A_U] - U), abs(S[S_A_V] - V)) / sc
            if d > S[M_ACC_DRIFT]:
                S[M_ACC_DRIFT] = d
        _acc_sync(F, I, S, Si, L, Lxi, tvl, tvv, U, V, inf_u, sup_u)
        c = _closure(F, I, S, Si)
        row[L_CLOSURE] = c
        S[M_N_CLOSURE] += 1.0
        if c > S[M_CLOSURE]:
            S[M_CLOSURE] = c
    else:
        _acc_clock(S, t)
        if Si[I_A_DIRTY]:
            if Si[I_N] > 0:
                S[S_A_INF], S[S_A_SUP] = _extremes(F, I, Si)
            else:
                S[S_A_INF] = S[S_CU]
                S[S_A_SUP] = S[S_CU]
            Si[I_A_DIRTY] = 0
        L = S[S_A_L]
        Lxi = S[S_A_LXI]
        tvl = S[S_A_TVL]
        tvv = S[S_A_TVV]
        U = S[S_A_U]
        V = S[S_A_V]
        inf_u = S[S_A_INF]
        sup_u = S[S_A_SUP]
        row[L_CLOSURE] = np.nan
    row[L_T] = t
    row[L_KIND] = kind
    row[L_L] = L
    row[L_LXI] = Lxi
    row[L_TVLNU] = tvl
    row[L_TVV] = tvv
    row[L_U] = U
    row[L_V] = V
    row[L_INF] = inf_u
    row[L_SUP] = sup_u
    row[L_N] = Si[I_N]
    if Si[I_N] > S[M_MAX_FRONTS]:
        S[M_MAX_FRONTS] = Si[I_N]
    Si[I_LOGN] = k + 1


# ---------------------------------------------------------------------------
# building and splicing
# ---------------------------------------------------------------------------

@njit(cache=True)
def _emit(F, I, S, Si, out, nout, fam, e, lu, lv, ru, rv, x, t, initial):
    """Append the fronts of one wave to ``out``; return ``(nout, oversize)``."""
    eta = S[S_ETA]
    alpha = S[S_ALPHA]
    if e > 0.0 and e >= eta:
        n = n_pieces(e, eta)
        piece = e / n
        su = lu
        sv = lv
        for k in range(n):
            p = piece if k < n - 1 else e - piece * (n - 1)
            if k == n - 1:
                nu_ = ru
                nv_ = rv
            else:
                nu_ = wave_u(fam, su, p)
                nv_ = wave_v(sv, p, alpha)
            out[nout] = _new_front(F, I, S, Si, fam, p, su, sv, nu_, nv_, x, t)
            nout += 1
            su = nu_
            sv = nv_
        return nout, 0 if initial else 1
    out[nout] = _new_front(F, I, S, Si, fam, e, lu, lv, ru, rv, x, t)
    return nout + 1, 0


@njit(cache=True)
def _link_ring(I, Si, out, nout):
    for k in range(nout):
        I[out[k], NXT] = out[(k + 1) % nout]
        I[out[k], PRV] = out[(k + nout - 1) % nout]
    Si[I_HEAD] = out[0] if nout > 0 else -1
    Si[I_N] = nout


@njit(cache=True)
def _build(F, I, H, S, Si, scratch, starts, us, vs):
    """Fronts of a piecewise-constant profile whose neighbouring cells all differ."""
    n = starts.shape[0]
    alpha = S[S_ALPHA]
    eta = S[S_ETA]
    need = 0
    fan0 = np.zeros((n, 4))
    for k in range(n):
        e1, e2, mu, mv, st = solve(us[k - 1], vs[k - 1], us[k], vs[k], alpha, KERNEL_TOL)
        if st != 0:
            return st
        fan0[k, 0] = e1
        fan0[k, 1] = e2
        fan0[k, 2] = mu
        fan0[k, 3] = mv
        need += n_pieces(e1, eta) + n_pieces(e2, eta)
    if Si[I_NFREE] < need + 4:
        return NEED_FRONTS
    if H.shape[0] < need + 4:
        return NEED_HEAP
    out = scratch
    nout = 0
    for k in range(n):
        e1 = fan0[k, 0]
        e2 = fan0[k, 1]
        if e1 != 0.0:
            nout, _ = _emit(F, I, S, Si, out, nout, 1, e1, us[k - 1], vs[k - 1], fan0[k, 2], fan0[k, 3],
                           starts[k], 0.0, True)
        if e2 != 0.0:
            nout, _ = _emit(F, I, S, Si, out, nout, 2, e2, fan0[k, 2], fan0[k, 3], us[k], vs[k],
                           starts[k], 0.0, True)
    if nout == 0:
        Si[I_N] = 0
        Si[I_HEAD] = -1
        return OK
    _link_ring(I, Si, out, nout)
    _rebuild_queue(F, I, H, S, Si)
    return OK


@njit(cache=True)
def _splice(F, I, S, Si, PW, a, b, out, nout):
    prv = I[a, PRV]
    nxt = I[b, NXT]
    head = Si[I_HEAD]
    if prv == b:
        if nout > 0:
            _link_ring(I, Si, out, nout)
        else:
            S[S_CU] = F[a, LU]
            S[S_CV] = F[a, LV]
            Si[I_N] = 0
            Si[I_HEAD] = -1
        return
    if nout > 0:
        I[prv, NXT] = out[0]
        I[out[0], PRV] = prv
        for k in range(nout - 1):
            I[out[k], NXT] = out[k + 1]
            I[out[k + 1], PRV] = out[k]
        I[out[nout - 1], NXT] = nxt
        I[nxt, PRV] = out[nout - 1]
        Si[I_N] += nout - 2
        if b == head:
            Si[I_HEAD] = nxt
        elif a == head:
            Si[I_HEAD] = out[0]
        return
    I[prv, NXT] = nxt
    I[nxt, PRV] = prv
    F[nxt, LU] = F[prv, RU]
    F[nxt, LV] = F[prv, RV]
    Si[I_N] -= 2
    if a == head or b == head:
        Si[I_HEAD] = nxt
    if Si[I_N] == 1:
        # a lone front has a vanishing jump by torus closure
        last = Si[I_HEAD]
        _trace_death(F, S, PW, last, S[S_TIME])
        _release(I, Si, last)
        S[S_CU] = F[last, LU]
        S[S_CV] = F[last, LV]
        Si[I_N] = 0
        Si[I_HEAD] = -1


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------

@njit(cache=True)
def _collide(F, I, H, S, Si, PW, scratch, a, b, pop):
    """Resolve the collision of adjacent fronts ``a`` (left) and ``b`` at the current time."""
    t = S[S_TIME]
    P = S[S_PERIOD]
    alpha = S[S_ALPHA]
    eta = S[S_ETA]
    xa = xpos(F, a, t)
    xb = xpos(F, b, t)
    if b == Si[I_HEAD]:
        xb += P
    if abs(xb - xa) > 1e-12 * P + 1e-13 * abs(xa):
        return ERR_NOT_COLOCATED
    lu = F[a, LU]
    lv = F[a, LV]
    ru = F[b, RU]
    rv = F[b, RV]
    fa = I[a, FAM]
    fb = I[b, FAM]
    ea = F[a, EPS]
    eb = F[b, EPS]
    if fa == fb:
        e1, e2, mu, mv, st = solve(lu, lv, ru, rv, alpha, KERNEL_TOL)
        if st != 0:
            return st
    else:
        # a 2-front catching a 1-front: both cross with unchanged strengths
        e1 = eb
        e2 = ea
        mu = wave_u(1, lu, e1)
        mv = wave_v(lv, e1, alpha)
        cu = wave_u(2, mu, e2)
        cv = wave_v(mv, e2, alpha)
        if abs(cu - ru) > CROSS_RTOL * ru or abs(cv - rv) > CROSS_RTOL * (alpha + abs(rv)):
            return ERR_INTERACTION
    need = n_pieces(e1, eta) + n_pieces(e2, eta)
    if Si[I_NFREE] < need + 2:
        return NEED_FRONTS
    if H.shape[0] - Si[I_HN] < need + 4:
        return NEED_HEAP
    if pop:
        _heap_pop(H, Si)
    if Si[I_DIAG]:
        dl = abs(e1) + abs(e2) - abs(ea) - abs(eb)
        if dl > S[M_DL_COLL]:
            S[M_DL_COLL] = dl
        if fa == fb:
            xi = S[S_XI]
            w1 = -xi * e1 if e1 < 0.0 else e1
            w2 = -xi * e2 if e2 < 0.0 else e2
            wa = -xi * ea if ea < 0.0 else ea
            wb = -xi * eb if eb < 0.0 else eb
            refl = e2 if fa == 1 else e1
            val = w1 + w2 - wa - wb + (xi - 1.0) * abs(refl)
            if val > S[M_DLXI_COLL]:
                S[M_DLXI_COLL] = val
    if Si[I_DIAG]:
        _acc_clock(S, t)
        _acc_move(F, S, a, -1.0)
        _acc_move(F, S, b, -1.0)
        for g in (a, b):
            if F[g, RU] >= S[S_A_SUP] or F[g, RU] <= S[S_A_INF]:
                Si[I_A_DIRTY] = 1
    _trace_death(F, S, PW, a, t)
    _trace_death(F, S, PW, b, t)
    out = scratch
    nout = 0
    over = 0
    if e1 != 0.0:
        nout, o = _emit(F, I, S, Si, out, nout, 1, e1, lu, lv, mu, mv, xa, t, False)
        over += o
    if e2 != 0.0:
        nout, o = _emit(F, I, S, Si, out, nout, 2, e2, mu, mv, ru, rv, xa, t, False)
        over += o
    if Si[I_DIAG]:
        for k in range(nout):
            g = out[k]
            _acc_move(F, S, g, 1.0)
            if F[g, RU] > S[S_A_SUP]:
                S[S_A_SUP] = F[g, RU]
            if F[g, RU] < S[S_A_INF]:
                S[S_A_INF] = F[g, RU]
    _splice(F, I, S, Si, PW, a, b, out, nout)
    _release(I, Si, a)
    _release(I, Si, b)
    if Si[I_DIAG] and (nout == 0 or Si[I_N] == 0):
        # the splice merged or emptied arcs: rescan
        L, Lxi, tvl, tvv, U, V, inf_u, sup_u = _scan(F, I, S, Si)
        _acc_sync(F, I, S, Si, L, Lxi, tvl, tvv, U, V, inf_u, sup_u)
    Si[I_COLL] += 1
    if fa != fb:
        Si[I_CROSS] += 1
    Si[I_OVERSIZE] += over
    Si[I_LAST_OVER] = over
    Si[I_LAST_FA] = fa
    Si[I_LAST_FB] = fb
    Si[I_LAST_NEW] = nout
    S[S_LAST_X] = xa
    S[S_LAST_E1] = e1
    S[S_LAST_E2] = e2
    S[S_LAST_EA] = ea
    S[S_LAST_EB] = eb
    if Si[I_N] > 0:
        if nout > 0:
            f = I[out[0], PRV]
            for _ in range(nout + 1):
                _schedule(F, I, H, S, Si, f)
                f = I[f, NXT]
        else:
            nxt = I[b, NXT]
            _schedule(F, I, H, S, Si, I[nxt, PRV])
    return OK


@njit(cache=True)
def _step_capacity(F, I, S, Si):
    n = Si[I_N]
    L = 0.0
    f = Si[I_HEAD]
    for _ in range(n):
        L += abs(F[f, EPS])
        f = I[f, NXT]
    return 4 * n + 2 * int(L / S[S_ETA]) + 16


@njit(cache=True)
def _time_step(F, I, H, S, Si, PW, fans, scratch):
    """Damp velocities and re-solve every front; see ``engine.apply_time_step``."""
    factor = 1.0 - S[S_MDAMP] * S[S_DT]
    if not factor > 0.0:
        return ERR_DAMPING
    n = Si[I_N]
    P = S[S_PERIOD]
    need = _step_capacity(F, I, S, Si)
    if Si[I_NFREE] < need:
        return NEED_FRONTS
    if H.shape[0] < need:
        return NEED_HEAP
    if fans.shape[0] < n + 1:
        return NEED_LOG
    alpha = S[S_ALPHA]
    t = S[S_TIME]
    xi = S[S_XI]
    Si[I_STEP] += 1
    Si[I_STEPS] += 1
    Si[I_STEP_NF] = n
    if n == 0:
        S[S_STEP_VB] = S[S_CV] * P
        S[S_CV] = S[S_CV] * factor
        S[S_STEP_VD] = S[S_CV] * P
        S[S_STEP_VA] = S[S_STEP_VD]
        S[S_STEP_LB] = 0.0
        S[S_STEP_LN] = 0.0
        S[S_STEP_LA] = 0.0
        S[S_STEP_LXB] = 0.0
        S[S_STEP_LXN] = 0.0
        S[S_STEP_LXA] = 0.0
        S[S_STEP_DROP] = 0.0
        return OK

    # canonical order starting at the first front in [0, P)
    chain = np.empty(n, dtype=np.int64)
    ys = np.empty(n)
    f = Si[I_HEAD]
    x0 = xpos(F, f, t)
    y0 = x0 % P
    rot = n
    for k in range(n):
        chain[k] = f
        y = y0 + (xpos(F, f, t) - x0)
        if y >= P:
            if rot == n:
                rot = k
            y = max(y - P, 0.0)
        ys[k] = y
        f = I[f, NXT]
    if rot < n:
        chain = np.concatenate((chain[rot:], chain[:rot]))
        ys = np.concatenate((ys[rot:], ys[:rot]))
    for k in range(1, n):
        if ys[k] < ys[k - 1]:
            ys[k] = ys[k - 1]

    au = np.empty(n)
    av = np.empty(n)
    L_b = 0.0
    Lx_b = 0.0
    V_b = 0.0
    V_d = 0.0
    for k in range(n):
        c = chain[k]
        au[k] = F[c, RU]
        av[k] = F[c, RV] * factor
        e = F[c, EPS]
        L_b += abs(e)
        Lx_b += -xi * e if e < 0.0 else e
        ylen = (ys[k + 1] if k + 1 < n else ys[0] + P) - ys[k]
        V_b += ylen * F[c, RV]
        V_d += ylen * av[k]

    q = S[S_Q]
    mdt = S[S_MDAMP] * S[S_DT]
    c1 = 1.0 / (1.0 + math.cosh(q))
    diag = Si[I_DIAG]
    nom = np.empty((n, 4))
    L_n = 0.0
    Lx_n = 0.0
    for k in range(n):
        c = chain[k]
        e1, e2, mu, mv, st = solve(au[k - 1], av[k - 1], au[k], av[k], alpha, KERNEL_TOL)
        if st != 0:
            return st
        nom[k, 0] = e1
        nom[k, 1] = e2
        nom[k, 2] = mu
        nom[k, 3] = mv
        L_n += abs(e1) + abs(e2)
        Lx_n += (-xi * e1 if e1 < 0.0 else e1) + (-xi * e2 if e2 < 0.0 else e2)
        em = F[c, EPS]
        if I[c, FAM] == 1:
            ep = e1
            er = e2
        else:
            ep = e2
            er = e1
        fans[k, 0] = I[c, FAM]
        fans[k, 1] = em
        fans[k, 2] = ep
        fans[k, 3] = er
        if diag:
            sr = abs(abs(ep) + abs(er) - abs(em))
            if sr > S[M_SUMRULE]:
                S[M_SUMRULE] = sr
            c_up = 0.5 if em > 0.0 else 0.5 * math.cosh(q)
            lo = abs(er) - c1 * mdt * abs(em)
            hi = c_up * mdt * abs(em) - abs(er)
            if lo < S[M_BRACKET_LO]:
                S[M_BRACKET_LO] = lo
            if hi < S[M_BRACKET_HI]:
                S[M_BRACKET_HI] = hi

    drop = S[S_DROP]
    out = scratch
    nout = 0
    over = 0
    Lu = au[n - 1]
    Lv = av[n - 1]
    clean = True
    dropped = 0.0
    for k in range(n):
        tu = au[k]
        tv = av[k]
        if clean:
            e1 = nom[k, 0]
            e2 = nom[k, 1]
            mu = nom[k, 2]
            mv = nom[k, 3]
        else:
            e1, e2, mu, mv, st = solve(Lu, Lv, tu, tv, alpha, KERNEL_TOL)
            if st != 0:
                return st
        keep1 = e1 != 0.0
        keep2 = e2 != 0.0
        if k < n - 1:
            # only the reflected wave is subject to the drop threshold
            if I[chain[k], FAM] == 1:
                if keep2 and abs(e2) < drop:
                    keep2 = False
                    dropped += abs(e2)
            else:
                if keep1 and abs(e1) < drop:
                    keep1 = False
                    dropped += abs(e1)
        x = ys[k]
        if keep1 and keep2:
            nout, o = _emit(F, I, S, Si, out, nout, 1, e1, Lu, Lv, mu, mv, x, t, False)
            over += o
            nout, o = _emit(F, I, S, Si, out, nout, 2, e2, mu, mv, tu, tv, x, t, False)
            over += o
            Ru = tu
            Rv = tv
            clean = True
        elif keep1:
            if e2 == 0.0:
                Ru = tu
                Rv = tv
                clean = True
            else:
                Ru = wave_u(1, Lu, e1)
                Rv = wave_v(Lv, e1, alpha)
                clean = False
            nout, o = _emit(F, I, S, Si, out, nout, 1, e1, Lu, Lv, Ru, Rv, x, t, False)
            over += o
        elif keep2:
            if e1 == 0.0:
                Ru = tu
                Rv = tv
                clean = True
            else:
                Ru = wave_u(2, Lu, e2)
                Rv = wave_v(Lv, e2, alpha)
                clean = False
            nout, o = _emit(F, I, S, Si, out, nout, 2, e2, Lu, Lv, Ru, Rv, x, t, False)
            over += o
        else:
            if e1 == 0.0 and e2 == 0.0:
                Ru = tu
                Rv = tv
                clean = True
            else:
                Ru = Lu
                Rv = Lv
                clean = False
        Lu = Ru
        Lv = Rv

    for k in range(n):
        _trace_death(F, S, PW, chain[k], t)
        _release(I, Si, chain[k])
    Si[I_OVERSIZE] += over
    if nout > 0:
        _link_ring(I, Si, out, nout)
    else:
        Si[I_N] = 0
        Si[I_HEAD] = -1
        S[S_CU] = au[n - 1]
        S[S_CV] = av[n - 1]
    _rebuild_queue(F, I, H, S, Si)

    L_a, Lx_a, tvl_a, tvv_a, U_a, V_a, inf_a, sup_a = _scan(F, I, S, Si)
    if diag:
        _acc_sync(F, I, S, Si, L_a, Lx_a, tvl_a, tvv_a, U_a, V_a, inf_a, sup_a)
    S[S_STEP_LB] = L_b
    S[S_STEP_LN] = L_n
    S[S_STEP_LA] = L_a
    S[S_STEP_LXB] = Lx_b
    S[S_STEP_LXN] = Lx_n
    S[S_STEP_LXA] = Lx_a
    S[S_STEP_VB] = V_b
    S[S_STEP_VD] = V_d
    S[S_STEP_VA] = V_a
    S[S_STEP_DROP] = dropped
    if diag:
        S[M_DROPPED] += dropped
        if abs(L_n - L_b) > S[M_DL_STEP]:
            S[M_DL_STEP] = abs(L_n - L_b)
        if L_a - L_n > S[M_DL_CLAMP]:
            S[M_DL_CLAMP] = L_a - L_n
        vs = abs(V_d - factor * V_b)
        if vs > S[M_V_SCALE]:
            S[M_V_SCALE] = vs
        if abs(V_a - V_d) > S[M_V_CLAMP]:
            S[M_V_CLAMP] = abs(V_a - V_d)
        allow = 0.5 * S[S_MDAMP] * S[S_DT] * (xi - 1.0) * L_b
        if Lx_n - Lx_b - allow > S[M_DLXI_STEP]:
            S[M_DLXI_STEP] = Lx_n - Lx_b - allow
        if Lx_a - Lx_b - allow > S[M_DLXI_STEP_AFTER]:
            S[M_DLXI_STEP_AFTER] = Lx_a - Lx_b - allow
    return OK


@njit(cache=True)
def _peek(I, H, S, Si, T, nsteps):
    """Next event ``(kind, time, a, b)`` not later than ``T``."""
    s = Si[I_STEP] + 1
    has_step = s <= nsteps
    t_step = s * S[S_DT]
    if _top_valid(I, H, Si):
        tc = H[0, H_T]
        if tc <= T and (not has_step or tc <= t_step):
            return EV_COLLISION, max(tc, S[S_TIME]), int(H[0, H_A]), int(H[0, H_B])
    if has_step:
        return EV_STEP, t_step, -1, -1
    return EV_NONE, T, -1, -1


@njit(cache=True)
def _run(F, I, H, S, Si, PW, log, fans, scratch, T, nsteps, max_events):
    """Process events until ``T``; returns a status code."""
    diag = Si[I_DIAG]
    while True:
        if diag and Si[I_LOGN] + 3 > log.shape[0]:
            return NEED_LOG
        kind, tev, a, b = _peek(I, H, S, Si, T, nsteps)
        if kind == EV_NONE:
            break
        if kind == EV_COLLISION:
            told = S[S_TIME]
            S[S_TIME] = tev
            st = _collide(F, I, H, S, Si, PW, scratch, a, b, True)
            if st != OK:
                S[S_TIME] = told
                return st
            if diag:
                _log_row(F, I, S, Si, log, KIND_COLLISION, False)
        else:
            told = S[S_TIME]
            S[S_TIME] = tev
            need = _step_capacity(F, I, S, Si)
            if Si[I_NFREE] < need:
                S[S_TIME] = told
                return NEED_FRONTS
            if H.shape[0] < need:
                S[S_TIME] = told
                return NEED_HEAP
            if fans.shape[0] < Si[I_N] + 1:
                S[S_TIME] = told
                return NEED_LOG
            if diag:
                _log_row(F, I, S, Si, log, KIND_STEP_BEFORE, True)
            st = _time_step(F, I, H, S, Si, PW, fans, scratch)
            if st != OK:
                return st
            if diag:
                _log_row(F, I, S, Si, log, KIND_STEP_AFTER, True)
        Si[I_NEVENTS] += 1
        if Si[I_NEVENTS] > max_events:
            return ERR_OVERFLOW
    if S[S_TIME] < T:
        S[S_TIME] = T
    return DONE


# ---------------------------------------------------------------------------
# entry points taking the whole buffer tuple
# ---------------------------------------------------------------------------

@njit(cache=True)
def build(buf, starts, us, vs):
    return _build(buf.F, buf.I, buf.H, buf.S, buf.Si, buf.scratch, starts, us, vs)


@njit(cache=True)
def collide(buf, a, b, pop):
    return _collide(buf.F, buf.I, buf.H, buf.S, buf.Si, buf.PW, buf.scratch, a, b, pop)


@njit(cache=True)
def time_step(buf):
    return _time_step(buf.F, buf.I, buf.H, buf.S, buf.Si, buf.PW, buf.fans, buf.scratch)


@njit(cache=True)
def run(buf, T, nsteps, max_events):
    return _run(buf.F, buf.I, buf.H, buf.S, buf.Si, buf.PW, buf.log, buf.fans, buf.scratch, T, nsteps, max_events)


@njit(cache=True)
def peek(buf, T, nsteps):
    return _peek(buf.I, buf.H, buf.S, buf.Si, T, nsteps)


@njit(cache=True)
def log_row(buf, kind, full):
    _log_row(buf.F, buf.I, buf.S, buf.Si, buf.log, kind, full)


@njit(cache=True)
def scan(buf):
    return _scan(buf.F, buf.I, buf.S, buf.Si)


@njit(cache=True)
def closure(buf):
    return _closure(buf.F, buf.I, buf.S, buf.Si)


@njit(cache=True)
def trace_death(buf, i, t):
    _trace_death(buf.F, buf.S, buf.PW, i, t)


@njit(cache=True)
def rebuild_queue(buf):
    _rebuild_queue(buf.F, buf.I, buf.H, buf.S, buf.Si)
