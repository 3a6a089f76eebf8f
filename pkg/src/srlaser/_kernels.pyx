# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. ``_kernels_py`` holds the reference Python versions;
both must follow the same algorithm step for step."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, cos, sin, ceil, pow, INFINITY, isfinite

cnp.import_array()

BACKEND = "compiled"

# Dormand-Prince 5(4)
cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200
cdef double E6 = 22.0 / 525, E7 = -1.0 / 40


cdef struct MF:
    double a       # 4 g^2 / kappa
    double gamma
    double Gamma
    double N


cdef inline void mf_rhs(MF* p, double sz, double x, double y, double* d) noexcept nogil:
    cdef double lam = p.a * sz - 0.5 * p.gamma - p.Gamma / p.N
    d[0] = -p.a * (x * x + y * y) - p.gamma * (sz + 0.5 * p.N) + 0.5 * p.Gamma - (p.Gamma / p.N) * sz
    d[1] = lam * x
    d[2] = lam * y


cdef inline double cabs2(double re, double im) noexcept nogil:
    return sqrt(re * re + im * im)


cdef double err_norm(double* e, double* y, double* yn, double rtol, double atol) noexcept nogil:
    # two complex components: Sz (real) and Sm = x + i y
    cdef double s0 = atol + rtol * max(fabs(y[0]), fabs(yn[0]))
    cdef double s1 = atol + rtol * max(cabs2(y[1], y[2]), cabs2(yn[1], yn[2]))
    cdef double r0 = fabs(e[0]) / s0
    cdef double r1 = cabs2(e[1], e[2]) / s1
    return sqrt(0.5 * (r0 * r0 + r1 * r1))


cdef double rms2(double* v, double* y, double rtol, double atol) noexcept nogil:
    cdef double s0 = atol + rtol * fabs(y[0])
    cdef double s1 = atol + rtol * cabs2(y[1], y[2])
    cdef double r0 = fabs(v[0]) / s0
    cdef double r1 = cabs2(v[1], v[2]) / s1
    return sqrt(0.5 * (r0 * r0 + r1 * r1))


def mf_adiabatic(double sz0, double x0, double y0, double a, double gamma, double Gamma, double N,
                 double t0, double t1, long n_samples, int method, double dt,
                 double rtol, double atol, double dt_min, double dt_max, long max_steps):
    """Integrate the adiabatic mean-field equations.

    Returns (t[n+1], Y[n+1, 3] = (Sz, ReSm, ImSm), n_steps, n_rejected, status)
    with status 0 ok, 1 step underflow, 2 max_steps exceeded.
    """
    cdef MF p
    p.a = a
    p.gamma = gamma
    p.Gamma = Gamma
    p.N = N
    cdef double span = t1 - t0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] T = np.empty(n_samples + 1)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Y = np.empty((n_samples + 1, 3))
    cdef double[:] Tv = T
    cdef double[:, :] Yv = Y
    cdef double y[3]
    cdef double yn[3]
    cdef double yt[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double k5[3]
    cdef double k6[3]
    cdef double k7[3]
    cdef double e[3]
    cdef double t = t0, h, step, target, en, factor, tiny, d0, d1, d2, h0, h1
    cdef long i, j, n, per_sample, next_sample = 1, n_steps = 0, n_rejected = 0
    cdef int landing, status = 0

    y[0] = sz0
    y[1] = x0
    y[2] = y0
    Tv[0] = t0
    for j in range(3):
        Yv[0, j] = y[j]

    if method == 0:
        n = <long> ceil(span / dt - 1e-9)
        if n < 1:
            n = 1
        h = span / n
        per_sample = n // n_samples
        if per_sample < 1 or per_sample * n_samples != n:
            raise ValueError("sample spacing must be an integer multiple of the rk4 step")
        with nogil:
            for i in range(1, n + 1):
                mf_rhs(&p, y[0], y[1], y[2], k1)
                for j in range(3):
                    yt[j] = y[j] + 0.5 * h * k1[j]
                mf_rhs(&p, yt[0], yt[1], yt[2], k2)
                for j in range(3):
                    yt[j] = y[j] + 0.5 * h * k2[j]
                mf_rhs(&p, yt[0], yt[1], yt[2], k3)
                for j in range(3):
                    yt[j] = y[j] + h * k3[j]
                mf_rhs(&p, yt[0], yt[1], yt[2], k4)
                for j in range(3):
                    y[j] = y[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
                n_steps += 1
                if i % per_sample == 0:
                    Tv[next_sample] = t0 + i * h if i < n else t1
                    for j in range(3):
                        Yv[next_sample, j] = y[j]
                    next_sample += 1
        return T, Y, n_steps, 0, 0

    tiny = 16 * 2.220446049250313e-16
    mf_rhs(&p, y[0], y[1], y[2], k1)
    # starting step, same heuristic as integrator._initial_step
    d0 = rms2(y, y, rtol, atol)
    d1 = rms2(k1, y, rtol, atol)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for j in range(3):
        yt[j] = y[j] + h0 * k1[j]
    mf_rhs(&p, yt[0], yt[1], yt[2], k2)
    for j in range(3):
        e[j] = k2[j] - k1[j]
    d2 = rms2(e, y, rtol, atol) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / max(d1, d2), 1.0 / 5)
    h = min(min(100 * h0, h1), min(dt_max, span))

    with nogil:
        while t < t1:
            if n_steps + n_rejected > max_steps:
                status = 2
                break
            target = t0 + span * next_sample / n_samples
            if next_sample == n_samples:
                target = t1
            h = min(h, dt_max)
            if h < dt_min or h <= tiny * max(fabs(t), span):
                status = 1
                break
            landing = t + h >= target - tiny * max(fabs(target), span)
            step = target - t if landing else h
            for j in range(3):
                yt[j] = y[j] + step * (A21 * k1[j])
            mf_rhs(&p, yt[0], yt[1], yt[2], k2)
            for j in range(3):
                yt[j] = y[j] + step * (A31 * k1[j] + A32 * k2[j])
            mf_rhs(&p, yt[0], yt[1], yt[2], k3)
            for j in range(3):
                yt[j] = y[j] + step * (A41 * k1[j] + A42 * k2[j] + A43 * k3[j])
            mf_rhs(&p, yt[0], yt[1], yt[2], k4)
            for j in range(3):
                yt[j] = y[j] + step * (A51 * k1[j] + A52 * k2[j] + A53 * k3[j] + A54 * k4[j])
            mf_rhs(&p, yt[0], yt[1], yt[2], k5)
            for j in range(3):
                yt[j] = y[j] + step * (A61 * k1[j] + A62 * k2[j] + A63 * k3[j] + A64 * k4[j] + A65 * k5[j])
            mf_rhs(&p, yt[0], yt[1], yt[2], k6)
            for j in range(3):
                yn[j] = y[j] + step * (B1 * k1[j] + B3 * k3[j] + B4 * k4[j] + B5 * k5[j] + B6 * k6[j])
            mf_rhs(&p, yn[0], yn[1], yn[2], k7)
            for j in range(3):
                e[j] = step * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j])
            en = err_norm(e, y, yn, rtol, atol)
            if not isfinite(en):
                en = INFINITY
            if en <= 1.0:
                t = target if landing else t + step
                for j in range(3):
                    y[j] = yn[j]
                    k1[j] = k7[j]
                n_steps += 1
                if landing:
                    Tv[next_sample] = t
                    for j in range(3):
                        Yv[next_sample, j] = y[j]
                    next_sample += 1
                if not landing or step >= h:
                    if en == 0:
                        factor = 5.0
                    else:
                        factor = min(5.0, max(0.2, 0.9 * pow(en, -0.2)))
                    h = h * factor
            else:
                n_rejected += 1
                h = step * max(0.2, 0.9 * pow(en, -0.2))
    if status != 0:
        T = T[:next_sample]
        Y = Y[:next_sample]
    return T, Y, n_steps, n_rejected, status


cdef inline void pulsed_rhs(double a, double x, double y, double z, double* d) noexcept nogil:
    d[0] = a * z * x
    d[1] = a * z * y
    d[2] = -a * (x * x + y * y)


def mc_events(double sx0, double sy0, double sz0, double a, double N, double h, long n_sub,
              long n_events, cnp.int8_t[:, :] draws, bint noise, bint refresh, long record_every):
    """Monte-Carlo event loop: sample, load, evolve one loading interval, unload.

    ``draws[j]`` holds four fair bits: load x/y signs, then the two unload
    noise signs. Returns (samples[n_rec, 3], flags[n_events]); flags[j] = 1
    when the spin was zero-length at unload and noise was skipped.
    """
    cdef long n_rec = (n_events + record_every - 1) // record_every
    cdef cnp.ndarray[cnp.float64_t, ndim=2] S = np.empty((n_rec, 3))
    cdef cnp.ndarray[cnp.int8_t, ndim=1] F = np.zeros(n_events, dtype=np.int8)
    cdef double[:, :] Sv = S
    cdef cnp.int8_t[:] Fv = F
    cdef double s[3]
    cdef double st[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double u[3]
    cdef double v1[3]
    cdef double v2[3]
    cdef double hs = h / n_sub, keep = (N - 1.0) / N, norm, proj, sgn1, sgn2
    cdef long ev, k, j, rec = 0, axis
    if draws.shape[0] < n_events or draws.shape[1] < 4:
        raise ValueError("draws must have shape (n_events, 4)")
    s[0] = sx0
    s[1] = sy0
    s[2] = sz0
    with nogil:
        for ev in range(n_events):
            if ev % record_every == 0:
                Sv[rec, 0] = s[0]
                Sv[rec, 1] = s[1]
                Sv[rec, 2] = s[2]
                rec += 1
            if refresh:
                s[2] = s[2] + 0.5
                if noise:
                    s[0] = s[0] + (0.5 if draws[ev, 0] else -0.5)
                    s[1] = s[1] + (0.5 if draws[ev, 1] else -0.5)
            for k in range(n_sub):
                pulsed_rhs(a, s[0], s[1], s[2], k1)
                for j in range(3):
                    st[j] = s[j] + 0.5 * hs * k1[j]
                pulsed_rhs(a, st[0], st[1], st[2], k2)
                for j in range(3):
                    st[j] = s[j] + 0.5 * hs * k2[j]
                pulsed_rhs(a, st[0], st[1], st[2], k3)
                for j in range(3):
                    st[j] = s[j] + hs * k3[j]
                pulsed_rhs(a, st[0], st[1], st[2], k4)
                for j in range(3):
                    s[j] = s[j] + (hs / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            if refresh:
                for j in range(3):
                    s[j] = s[j] * keep
                if noise:
                    norm = sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2])
                    if norm == 0.0:
                        Fv[ev] = 1
                    else:
                        for j in range(3):
                            u[j] = s[j] / norm
                        axis = 0
                        for j in range(1, 3):
                            if fabs(u[j]) < fabs(u[axis]):
                                axis = j
                        proj = u[axis]
                        for j in range(3):
                            v1[j] = -proj * u[j]
                        v1[axis] = v1[axis] + 1.0
                        norm = sqrt(v1[0] * v1[0] + v1[1] * v1[1] + v1[2] * v1[2])
                        for j in range(3):
                            v1[j] = v1[j] / norm
                        v2[0] = u[1] * v1[2] - u[2] * v1[1]
                        v2[1] = u[2] * v1[0] - u[0] * v1[2]
                        v2[2] = u[0] * v1[1] - u[1] * v1[0]
                        sgn1 = 0.5 if draws[ev, 2] else -0.5
                        sgn2 = 0.5 if draws[ev, 3] else -0.5
                        for j in range(3):
                            s[j] = s[j] + sgn1 * v1[j] + sgn2 * v2[j]
    return S, F


def spectrum_direct(double t0, double dt, double[:] b_re, double[:] b_im, double[:] omega):
    """Trapezoid rule for A(w) = int b(t) exp(i w t) dt on a uniform time grid."""
    cdef long n = b_re.shape[0], m = omega.shape[0], k, i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_re = np.empty(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_im = np.empty(m)
    cdef double[:] ore = out_re
    cdef double[:] oim = out_im
    cdef double w, cr, ci, rr, ri, acc_r, acc_i, wt, tmp, ph
    with nogil:
        for k in range(m):
            w = omega[k]
            rr = cos(w * dt)
            ri = sin(w * dt)
            acc_r = 0.0
            acc_i = 0.0
            for i in range(n):
                if i % 256 == 0:
                    # resynchronise the rotating phasor to bound round-off drift
                    ph = w * (t0 + i * dt)
                    cr = cos(ph)
                    ci = sin(ph)
                wt = 0.5 if (i == 0 or i == n - 1) else 1.0
                acc_r = acc_r + wt * (b_re[i] * cr - b_im[i] * ci)
                acc_i = acc_i + wt * (b_re[i] * ci + b_im[i] * cr)
                tmp = cr * rr - ci * ri
                ci = cr * ri + ci * rr
                cr = tmp
            ore[k] = acc_r * dt
            oim[k] = acc_i * dt
    return out_re, out_im
