"""Compiled stepping kernels shared by every SDAE model.

A model supplies ``fg(x, y, eta, t, data, f_out, g_out)``, an njit function
that writes the differential right-hand side and the algebraic residual.
Stochastic channels are Ornstein-Uhlenbeck rows ``(mu, alpha, sigma)``.
"""

import numpy as np
from numba import njit

OK = 0
NOT_CONVERGED = 1
DIVERGED = 2


@njit(cache=True)
def eta_step(eta0, dw, ou, dt, eta1):
    """Trapezoidal drift, Ito diffusion evaluated at the start of the step."""
    for k in range(eta0.shape[0]):
        mu = ou[k, 0]
        alpha = ou[k, 1]
        h = 0.5 * alpha * dt
        eta1[k] = (eta0[k] * (1.0 - h) + alpha * mu * dt + ou[k, 2] * dw[k]) / (1.0 + h)


@njit(cache=True)
def _residual(fg, data, x0, f0, x1, y1, eta1, t1, dt, f1, g1, r):
    fg(x1, y1, eta1, t1, data, f1, g1)
    nx = x0.shape[0]
    for i in range(nx):
        r[i] = x1[i] - x0[i] - 0.5 * dt * (f0[i] + f1[i])
    for i in range(g1.shape[0]):
        r[nx + i] = g1[i]


@njit(cache=True)
def trap_step(fg, data, x0, y0, f0, eta1, t1, dt, jinv, tol, max_iter, x1, y1, f1, g1):
    """Chord-Newton solve of the implicit trapezoidal step.

    Returns ``(status, iterations, residual_inf_norm)``; on success ``x1``,
    ``y1`` hold the new point and ``f1``/``g1`` the functions evaluated there.
    """
    nx = x0.shape[0]
    ny = y0.shape[0]
    n = nx + ny
    r = np.empty(n)
    x1[:] = x0
    y1[:] = y0
    err = 0.0
    for it in range(max_iter + 1):
        _residual(fg, data, x0, f0, x1, y1, eta1, t1, dt, f1, g1, r)
        err = 0.0
        for i in range(n):
            a = abs(r[i])
            if not np.isfinite(r[i]):
                return DIVERGED, it, np.inf
            if a > err:
                err = a
        if err <= tol:
            return OK, it, err
        if it == max_iter:
            break
        dz = jinv @ r
        for i in range(nx):
            x1[i] -= dz[i]
        for i in range(ny):
            y1[i] -= dz[nx + i]
    return NOT_CONVERGED, max_iter, err


@njit(cache=True)
def step_jacobian(fg, data, x0, y0, f0, eta1, t1, dt):
    """Finite-difference Jacobian of the trapezoidal residual at (x0, y0)."""
    nx = x0.shape[0]
    ny = y0.shape[0]
    n = nx + ny
    f1 = np.empty(nx)
    g1 = np.empty(ny)
    r0 = np.empty(n)
    r1 = np.empty(n)
    x = x0.copy()
    y = y0.copy()
    _residual(fg, data, x0, f0, x, y, eta1, t1, dt, f1, g1, r0)
    jac = np.empty((n, n))
    for j in range(n):
        if j < nx:
            v = x[j]
            h = 1e-7 * max(1.0, abs(v))
            x[j] = v + h
            _residual(fg, data, x0, f0, x, y, eta1, t1, dt, f1, g1, r1)
            x[j] = v
        else:
            v = y[j - nx]
            h = 1e-7 * max(1.0, abs(v))
            y[j - nx] = v + h
            _residual(fg, data, x0, f0, x, y, eta1, t1, dt, f1, g1, r1)
            y[j - nx] = v
        for i in range(n):
            jac[i, j] = (r1[i] - r0[i]) / h
    return jac


@njit(cache=True)
def _all_finite(a):
    for v in a.ravel():
        if not np.isfinite(v):
            return False
    return True


@njit(cache=True)
def refresh_jacobian(fg, data, x, y, f0, eta1, t1, dt, jinv):
    """Replace ``jinv`` by the inverse step Jacobian; False if it is not finite."""
    jac = step_jacobian(fg, data, x, y, f0, eta1, t1, dt)
    if not _all_finite(jac):
        return False
    jinv[:, :] = np.linalg.inv(jac)
    return True


@njit(cache=True)
def solve_algebraic(fg, data, x, y0, eta, t, tol, max_iter):
    """Newton on g(x, y, eta) = 0 for y with x and eta frozen."""
    nx = x.shape[0]
    ny = y0.shape[0]
    f = np.empty(nx)
    g = np.empty(ny)
    g2 = np.empty(ny)
    y = y0.copy()
    jac = np.empty((ny, ny))
    err = 0.0
    for it in range(max_iter + 1):
        fg(x, y, eta, t, data, f, g)
        err = 0.0
        for i in range(ny):
            if not np.isfinite(g[i]):
                return y, DIVERGED, it, np.inf
            if abs(g[i]) > err:
                err = abs(g[i])
        if err <= tol:
            return y, OK, it, err
        if it == max_iter:
            break
        for j in range(ny):
            v = y[j]
            h = 1e-7 * max(1.0, abs(v))
            y[j] = v + h
            fg(x, y, eta, t, data, f, g2)
            y[j] = v
            for i in range(ny):
                jac[i, j] = (g2[i] - g[i]) / h
        if not _all_finite(jac):
            return y, DIVERGED, it, np.inf
        dy = np.linalg.solve(jac, g)
        for i in range(ny):
            y[i] -= dy[i]
    return y, NOT_CONVERGED, max_iter, err


@njit(cache=True)
def evaluate(fg, data, x, y, eta, t):
    f = np.empty(x.shape[0])
    g = np.empty(y.shape[0])
    fg(x, y, eta, t, data, f, g)
    return f, g


@njit(cache=True)
def no_post(x, y, eta, t, dt, data, ctrl):
    return False


@njit(cache=True)
def record_all(x, y, y_prev, eta, t, dt, data, ctrl, row):
    nx = x.shape[0]
    ny = y.shape[0]
    for i in range(nx):
        row[i] = x[i]
    for i in range(ny):
        row[nx + i] = y[i]
    for i in range(eta.shape[0]):
        row[nx + ny + i] = eta[i]


@njit(cache=True)
def run_steps(fg, post, out, data, ctrl, x, y, eta, k0, n, t_start, dt, dw, ou, jinv,
              tol, max_iter, refresh_iter, record_every, rec, r):
    """Advance ``n`` steps starting at global step ``k0``.

    ``x``, ``y``, ``eta`` and ``jinv`` are updated in place. Every
    ``record_every``-th global step writes one row of ``rec`` at index ``r``.
    ``jinv[0, 0]`` set to NaN requests a Jacobian refresh before the next
    step. Returns ``(status, steps_done, next_record_row, residual)``.
    """
    nx = x.shape[0]
    ny = y.shape[0]
    f0 = np.empty(nx)
    g0 = np.empty(ny)
    x1 = np.empty(nx)
    y1 = np.empty(ny)
    f1 = np.empty(nx)
    g1 = np.empty(ny)
    eta1 = np.empty(eta.shape[0])
    y_prev = np.empty(ny)
    t = t_start + k0 * dt
    fg(x, y, eta, t, data, f0, g0)
    for j in range(n):
        k = k0 + j
        t1 = t_start + (k + 1) * dt
        eta_step(eta, dw[k], ou, dt, eta1)
        if not np.isfinite(jinv[0, 0]):
            if not refresh_jacobian(fg, data, x, y, f0, eta1, t1, dt, jinv):
                return DIVERGED, j, r, np.inf
        status, it, err = trap_step(fg, data, x, y, f0, eta1, t1, dt, jinv, tol, max_iter,
                                    x1, y1, f1, g1)
        if status != OK:
            if not refresh_jacobian(fg, data, x, y, f0, eta1, t1, dt, jinv):
                return DIVERGED, j, r, np.inf
            status, it2, err = trap_step(fg, data, x, y, f0, eta1, t1, dt, jinv, tol,
                                         4 * max_iter, x1, y1, f1, g1)
            it += it2
        if status != OK:
            return status, j, r, err
        if it > refresh_iter:
            jinv[0, 0] = np.nan
        y_prev[:] = y
        x[:] = x1
        y[:] = y1
        eta[:] = eta1
        f0[:] = f1
        if post(x, y, eta, t1, dt, data, ctrl):
            fg(x, y, eta, t1, data, f0, g0)
        if (k + 1) % record_every == 0:
            out(x, y, y_prev, eta, t1, dt, data, ctrl, rec[r])
            r += 1
    return OK, n, r, 0.0
