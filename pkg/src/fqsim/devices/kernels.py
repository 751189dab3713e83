"""Compiled right-hand sides for every device family.

Each family stores its parameters in one float row (column indices below)
and its states in a contiguous slice of ``x`` starting at ``off``. A kernel
writes the state derivatives into ``dx[off:off + n]`` and returns the
active and reactive power injected at the device bus (system base).

Angles are measured in a frame rotating at nominal speed; per-unit speeds
are referred to nominal.
"""

import math

from numba import njit

F_NOMINAL = 50.0
OMEGA_B = 2.0 * math.pi * F_NOMINAL

# common columns
BUS = 0
XOFF = 1

# synchronous machine / condenser
M_H, M_D, M_XD, M_XDP, M_XQ, M_XQP, M_TD0P, M_TQ0P = 2, 3, 4, 5, 6, 7, 8, 9
M_KA, M_TA, M_VREF = 10, 11, 12
M_HAS_GOV, M_RATING, M_R, M_DB, M_T1, M_T2, M_T3, M_VMIN, M_VMAX = 13, 14, 15, 16, 17, 18, 19, 20, 21
M_PREF, M_PAGC, M_PM0 = 22, 23, 24
M_NCOL = 25
M_NSTATE_GOV = 7
M_NSTATE = 5

# doubly-fed induction generator
W_RATING, W_VR, W_VCIN, W_VCOUT, W_VMEAN, W_ETA, W_CURT = 2, 3, 4, 5, 6, 7, 8
W_R, W_DB, W_TE, W_TQ, W_KV, W_VREF, W_Q0 = 9, 10, 11, 12, 13, 14, 15
W_HT, W_KTH, W_WMAX, W_TTH, W_THMAX, W_TW, W_PAGC, W_LOPT, W_CPMAX = 16, 17, 18, 19, 20, 21, 22, 23, 24
W_RAMP = 25
W_NCOL = 26
W_NSTATE = 5

# grid-following battery
S_RATING, S_P0, S_Q0, S_R, S_DB, S_TB, S_TQ, S_KV, S_VREF, S_TW = 2, 3, 4, 5, 6, 7, 8, 9, 10, 11
S_NCOL = 12
S_NSTATE = 4

# grid-forming converter (kind 0 = VSM, 1 = droop)
F_KIND, F_RATING, F_XC, F_E0, F_NQ, F_Q0, F_TQ, F_P0, F_PAGC = 2, 3, 4, 5, 6, 7, 8, 9, 10
F_H, F_D, F_MP, F_TF, F_IMAX = 11, 12, 13, 14, 15
F_NCOL = 16
F_NSTATE = 3
GFM_VSM = 0
GFM_DROOP = 1

# loads
L_BUS, L_P, L_Q, L_CONN, L_ETA, L_RAMP = 0, 1, 2, 3, 4, 5
L_NCOL = 6


@njit(cache=True)
def deadband(x, db):
    """Subtractive dead-band: zero inside [-db, db], slope one outside."""
    if x > db:
        return x - db
    if x < -db:
        return x + db
    return 0.0


@njit(cache=True)
def clip(x, lo, hi):
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


@njit(cache=True)
def droop_power(df_hz, db, r):
    """Primary-control power change (device base) for a frequency deviation in Hz."""
    return -deadband(df_hz, db) / F_NOMINAL / r


@njit(cache=True)
def washout_frequency(theta, z, tw):
    """Frequency deviation in Hz from a washout filter on the bus angle."""
    return (theta - z) / (tw * OMEGA_B) * F_NOMINAL


@njit(cache=True)
def machine_rhs(p, x, off, v, th, dx):
    delta = x[off]
    w = x[off + 1]
    eqp = x[off + 2]
    edp = x[off + 3]
    efd = x[off + 4]
    vd = v * math.sin(delta - th)
    vq = v * math.cos(delta - th)
    i_d = (eqp - vq) / p[M_XDP]
    i_q = (vd - edp) / p[M_XQP]
    pe = vd * i_d + vq * i_q
    qe = vq * i_d - vd * i_q

    if p[M_HAS_GOV] > 0.5:
        s = p[M_RATING]
        pv = x[off + 5]
        xll = x[off + 6]
        dp = droop_power((w - 1.0) * F_NOMINAL, p[M_DB], p[M_R])
        cmd = clip((p[M_PREF] + p[M_PAGC]) / s + dp, p[M_VMIN], p[M_VMAX])
        ratio = p[M_T2] / p[M_T3]
        dx[off + 5] = (cmd - pv) / p[M_T1]
        dx[off + 6] = ((1.0 - ratio) * pv - xll) / p[M_T3]
        pm = s * (ratio * pv + xll)
    else:
        pm = p[M_PM0]

    dx[off] = OMEGA_B * (w - 1.0)
    dx[off + 1] = (pm - pe - p[M_D] * (w - 1.0)) / (2.0 * p[M_H])
    dx[off + 2] = (-eqp - (p[M_XD] - p[M_XDP]) * i_d + efd) / p[M_TD0P]
    dx[off + 3] = (-edp + (p[M_XQ] - p[M_XQP]) * i_q) / p[M_TQ0P]
    dx[off + 4] = (p[M_KA] * (p[M_VREF] - v) - efd) / p[M_TA]
    return pe, qe


@njit(cache=True)
def power_coefficient(lam, beta):
    """Aerodynamic power coefficient Cp(lambda, pitch in degrees)."""
    inv = 1.0 / (lam + 0.08 * beta) - 0.035 / (beta**3 + 1.0)
    if inv <= 0.0:
        return 0.0
    cp = 0.5176 * (116.0 * inv - 0.4 * beta - 5.0) * math.exp(-21.0 * inv) + 0.0068 * lam
    return cp if cp > 0.0 else 0.0


@njit(cache=True)
def mppt_curve(v, vr, v_cut_in, v_cut_out):
    """Uncurtailed maximum-power-point output, device base."""
    if v < v_cut_in or v >= v_cut_out:
        return 0.0
    if v >= vr:
        return 1.0
    r = v / vr
    return r * r * r


@njit(cache=True)
def aero_power(v, wr, beta, vr, lam_opt, cp_max):
    if v <= 1e-3 or wr <= 1e-3:
        return 0.0
    r = v / vr
    lam = lam_opt * wr / r
    return r * r * r * power_coefficient(lam, beta) / cp_max


@njit(cache=True)
def dfig_rhs(p, x, off, v, th, wind, dx):
    wr = x[off]
    beta = x[off + 1]
    pe = x[off + 2]
    qe = x[off + 3]
    z = x[off + 4]
    s = p[W_RATING]

    p_avail = mppt_curve(wind, p[W_VR], p[W_VCIN], p[W_VCOUT])
    df = washout_frequency(th, z, p[W_TW])
    order = p[W_CURT] * p_avail + droop_power(df, p[W_DB], p[W_R]) + p[W_PAGC]
    order = clip(order, 0.0, p_avail)
    pm = aero_power(wind, wr, beta, p[W_VR], p[W_LOPT], p[W_CPMAX])
    beta_ref = clip(p[W_KTH] * (wr - p[W_WMAX]), 0.0, p[W_THMAX])

    dx[off] = (pm - pe) / (2.0 * p[W_HT] * wr)
    dx[off + 1] = (beta_ref - beta) / p[W_TTH]
    dx[off + 2] = (order - pe) / p[W_TE]
    dx[off + 3] = (p[W_Q0] + p[W_KV] * (p[W_VREF] - v) - qe) / p[W_TQ]
    dx[off + 4] = (th - z) / p[W_TW]
    return s * pe, s * qe


@njit(cache=True)
def bess_rhs(p, x, off, v, th, dx):
    pb = x[off]
    qb = x[off + 1]
    z = x[off + 2]
    df = washout_frequency(th, z, p[S_TW])
    cmd = clip(p[S_P0] + droop_power(df, p[S_DB], p[S_R]), -1.0, 1.0)
    dx[off] = (cmd - pb) / p[S_TB]
    dx[off + 1] = (p[S_Q0] + p[S_KV] * (p[S_VREF] - v) - qb) / p[S_TQ]
    dx[off + 2] = (th - z) / p[S_TW]
    dx[off + 3] = -pb / 3600.0
    return p[S_RATING] * pb, p[S_RATING] * qb


@njit(cache=True)
def gfm_current(p, x, off, v, th):
    """Terminal current (system base) of the voltage source behind its coupling reactance."""
    s = p[F_RATING]
    delta = x[off]
    qf = x[off + 2]
    e = p[F_E0] + p[F_NQ] * (p[F_Q0] - qf)
    xc = p[F_XC] / s
    dr = e * math.cos(delta) - v * math.cos(th)
    di = e * math.sin(delta) - v * math.sin(th)
    # I = (E - V) / (j xc)
    ir = di / xc
    ii = -dr / xc
    imag = math.hypot(ir, ii)
    imax = p[F_IMAX] * s
    if imag > imax:
        ir *= imax / imag
        ii *= imax / imag
    return ir, ii


@njit(cache=True)
def gfm_speed(p, x, off):
    if p[F_KIND] < 0.5:
        return x[off + 1]
    return 1.0 + p[F_MP] * (p[F_P0] + p[F_PAGC] - x[off + 1])


@njit(cache=True)
def gfm_rhs(p, x, off, v, th, dx):
    s = p[F_RATING]
    ir, ii = gfm_current(p, x, off, v, th)
    vr = v * math.cos(th)
    vi = v * math.sin(th)
    pe = vr * ir + vi * ii
    qe = vi * ir - vr * ii
    pref = p[F_P0] + p[F_PAGC]
    if p[F_KIND] < 0.5:
        w = x[off + 1]
        dx[off + 1] = (pref - pe / s - p[F_D] * (w - 1.0)) / (2.0 * p[F_H])
    else:
        pf = x[off + 1]
        w = 1.0 + p[F_MP] * (pref - pf)
        dx[off + 1] = (pe / s - pf) / p[F_TF]
    dx[off] = OMEGA_B * (w - 1.0)
    dx[off + 2] = (qe / s - x[off + 2]) / p[F_TQ]
    return pe, qe
