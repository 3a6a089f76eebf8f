"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same algorithms, same operation order; used when the
extension is not built or ``SRLASER_BACKEND=python`` is set.
"""

import math

import numpy as np

BACKEND = "python"

_A21 = 1.0 / 5
_A31, _A32 = 3.0 / 40, 9.0 / 40
_A41, _A42, _A43 = 44.0 / 45, -56.0 / 15, 32.0 / 9
_A51, _A52, _A53, _A54 = 19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84
_E1, _E3, _E4, _E5 = 71.0 / 57600, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200
_E6, _E7 = 22.0 / 525, -1.0 / 40


def _rms2(v, y, rtol, atol):
    s0 = atol + rtol * abs(y[0])
    s1 = atol + rtol * math.sqrt(y[1] * y[1] + y[2] * y[2])
    r0 = abs(v[0]) / s0
    r1 = math.sqrt(v[1] * v[1] + v[2] * v[2]) / s1
    return math.sqrt(0.5 * (r0 * r0 + r1 * r1))


def _err_norm(e, y, yn, rtol, atol):
    s0 = atol + rtol * max(abs(y[0]), abs(yn[0]))
    s1 = atol + rtol * max(math.sqrt(y[1] * y[1] + y[2] * y[2]), math.sqrt(yn[1] * yn[1] + yn[2] * yn[2]))
    r0 = abs(e[0]) / s0
    r1 = math.sqrt(e[1] * e[1] + e[2] * e[2]) / s1
    return math.sqrt(0.5 * (r0 * r0 + r1 * r1))


def mf_adiabatic(sz0, x0, y0, a, gamma, Gamma, N, t0, t1, n_samples, method, dt,
                 rtol, atol, dt_min, dt_max, max_steps):
    """Integrate the adiabatic mean-field equations.

    Returns (t[n+1], Y[n+1, 3] = (Sz, ReSm, ImSm), n_steps, n_rejected, status)
    with status 0 ok, 1 step underflow, 2 max_steps exceeded.
    """
    loss = Gamma / N

    def rhs(sz, x, y):
        lam = a * sz - 0.5 * gamma - loss
        return (-a * (x * x + y * y) - gamma * (sz + 0.5 * N) + 0.5 * Gamma - loss * sz, lam * x, lam * y)

    span = t1 - t0
    T = np.empty(n_samples + 1)
    Y = np.empty((n_samples + 1, 3))
    y = [sz0, x0, y0]
    T[0] = t0
    Y[0] = y
    next_sample = 1
    n_steps = 0
    n_rejected = 0

    if method == 0:
        n = max(1, int(math.ceil(span / dt - 1e-9)))
        h = span / n
        per_sample = n // n_samples
        if per_sample < 1 or per_sample * n_samples != n:
            raise ValueError("sample spacing must be an integer multiple of the rk4 step")
        for i in range(1, n + 1):
            k1 = rhs(*y)
            k2 = rhs(*[y[j] + 0.5 * h * k1[j] for j in range(3)])
            k3 = rhs(*[y[j] + 0.5 * h * k2[j] for j in range(3)])
            k4 = rhs(*[y[j] + h * k3[j] for j in range(3)])
            y = [y[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) for j in range(3)]
            n_steps += 1
            if i % per_sample == 0:
                T[next_sample] = t0 + i * h if i < n else t1
                Y[next_sample] = y
                next_sample += 1
        return T, Y, n_steps, 0, 0

    tiny = 16 * 2.220446049250313e-16
    k1 = rhs(*y)
    d0 = _rms2(y, y, rtol, atol)
    d1 = _rms2(k1, y, rtol, atol)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    k2 = rhs(*[y[j] + h0 * k1[j] for j in range(3)])
    d2 = _rms2([k2[j] - k1[j] for j in range(3)], y, rtol, atol) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5)
    h = min(min(100 * h0, h1), min(dt_max, span))
    t = t0
    status = 0
    while t < t1:
        if n_steps + n_rejected > max_steps:
            status = 2
            break
        target = t1 if next_sample == n_samples else t0 + span * next_sample / n_samples
        h = min(h, dt_max)
        if h < dt_min or h <= tiny * max(abs(t), span):
            status = 1
            break
        landing = t + h >= target - tiny * max(abs(target), span)
        step = target - t if landing else h
        k2 = rhs(*[y[j] + step * (_A21 * k1[j]) for j in range(3)])
        k3 = rhs(*[y[j] + step * (_A31 * k1[j] + _A32 * k2[j]) for j in range(3)])
        k4 = rhs(*[y[j] + step * (_A41 * k1[j] + _A42 * k2[j] + _A43 * k3[j]) for j in range(3)])
        k5 = rhs(*[y[j] + step * (_A51 * k1[j] + _A52 * k2[j] + _A53 * k3[j] + _A54 * k4[j]) for j in range(3)])
        k6 = rhs(*[y[j] + step * (_A61 * k1[j] + _A62 * k2[j] + _A63 * k3[j] + _A64 * k4[j] + _A65 * k5[j])
                   for j in range(3)])
        yn = [y[j] + step * (_B1 * k1[j] + _B3 * k3[j] + _B4 * k4[j] + _B5 * k5[j] + _B6 * k6[j]) for j in range(3)]
        k7 = rhs(*yn)
        e = [step * (_E1 * k1[j] + _E3 * k3[j] + _E4 * k4[j] + _E5 * k5[j] + _E6 * k6[j] + _E7 * k7[j])
             for j in range(3)]
        en = _err_norm(e, y, yn, rtol, atol)
        if not math.isfinite(en):
            en = math.inf
        if en <= 1.0:
            t = target if landing else t + step
            y = yn
            k1 = k7
            n_steps += 1
            if landing:
                T[next_sample] = t
                Y[next_sample] = y
                next_sample += 1
            if not landing or step >= h:
                factor = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
                h = h * factor
        else:
            n_rejected += 1
            h = step * max(0.2, 0.9 * en ** -0.2)
    if status != 0:
        T = T[:next_sample]
        Y = Y[:next_sample]
    return T, Y, n_steps, n_rejected, status


def mc_events(sx0, sy0, sz0, a, N, h, n_sub, n_events, draws, noise, refresh, record_every):
    """Monte-Carlo event loop; see the compiled version for the contract."""
    n_rec = (n_events + record_every - 1) // record_every
    S = np.empty((n_rec, 3))
    F = np.zeros(n_events, dtype=np.int8)
    draws = np.asarray(draws)
    if draws.shape[0] < n_events or draws.shape[1] < 4:
        raise ValueError("draws must have shape (n_events, 4)")
    bits = draws.tolist()
    hs = h / n_sub
    keep = (N - 1.0) / N
    x, y, z = sx0, sy0, sz0
    rec = 0
    for ev in range(n_events):
        if ev % record_every == 0:
            S[rec, 0] = x
            S[rec, 1] = y
            S[rec, 2] = z
            rec += 1
        d = bits[ev]
        if refresh:
            z = z + 0.5
            if noise:
                x = x + (0.5 if d[0] else -0.5)
                y = y + (0.5 if d[1] else -0.5)
        for _ in range(n_sub):
            k1x, k1y, k1z = a * z * x, a * z * y, -a * (x * x + y * y)
            tx, ty, tz = x + 0.5 * hs * k1x, y + 0.5 * hs * k1y, z + 0.5 * hs * k1z
            k2x, k2y, k2z = a * tz * tx, a * tz * ty, -a * (tx * tx + ty * ty)
            tx, ty, tz = x + 0.5 * hs * k2x, y + 0.5 * hs * k2y, z + 0.5 * hs * k2z
            k3x, k3y, k3z = a * tz * tx, a * tz * ty, -a * (tx * tx + ty * ty)
            tx, ty, tz = x + hs * k3x, y + hs * k3y, z + hs * k3z
            k4x, k4y, k4z = a * tz * tx, a * tz * ty, -a * (tx * tx + ty * ty)
            x = x + (hs / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            y = y + (hs / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            z = z + (hs / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        if refresh:
            x, y, z = x * keep, y * keep, z * keep
            if noise:
                norm = math.sqrt(x * x + y * y + z * z)
                if norm == 0.0:
                    F[ev] = 1
                else:
                    u = (x / norm, y / norm, z / norm)
                    axis = 0
                    for j in (1, 2):
                        if abs(u[j]) < abs(u[axis]):
                            axis = j
                    proj = u[axis]
                    v1 = [-proj * u[0], -proj * u[1], -proj * u[2]]
                    v1[axis] = v1[axis] + 1.0
                    norm = math.sqrt(v1[0] * v1[0] + v1[1] * v1[1] + v1[2] * v1[2])
                    v1 = [v1[0] / norm, v1[1] / norm, v1[2] / norm]
                    v2 = (u[1] * v1[2] - u[2] * v1[1], u[2] * v1[0] - u[0] * v1[2], u[0] * v1[1] - u[1] * v1[0])
                    s1 = 0.5 if d[2] else -0.5
                    s2 = 0.5 if d[3] else -0.5
                    x = x + s1 * v1[0] + s2 * v2[0]
                    y = y + s1 * v1[1] + s2 * v2[1]
                    z = z + s1 * v1[2] + s2 * v2[2]
    return S, F


def spectrum_direct(t0, dt, b_re, b_im, omega, chunk=256):
    """Trapezoid rule for A(w) = int b(t) exp(i w t) dt on a uniform time grid."""
    b = np.asarray(b_re, dtype=float) + 1j * np.asarray(b_im, dtype=float)
    n = b.size
    t = t0 + dt * np.arange(n)
    w = np.full(n, 1.0)
    w[0] = w[-1] = 0.5
    bw = b * w
    omega = np.asarray(omega, dtype=float)
    out = np.empty(omega.size, dtype=complex)
    for start in range(0, omega.size, chunk):
        om = omega[start:start + chunk]
        out[start:start + chunk] = np.exp(1j * np.outer(om, t)) @ bw
    out *= dt
    return out.real.copy(), out.imag.copy()
