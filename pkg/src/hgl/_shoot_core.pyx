# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled adaptive integrator for the self-similar profile equation.

Twin of ``_shoot_fallback.py``: same Dormand-Prince 5(4) scheme, same PI
step control, operation for operation (the extension is built with
-ffp-contract=off so results stay bit-compatible with the fallback).
"""

from libc.math cimport exp, fabs, isfinite, pow, sqrt, INFINITY

cdef int _FORM_ETA_C = 0

FORM_ETA = 0
FORM_LOG = 1

STATUS_REACHED_END = 0
STATUS_BLOWUP = 1
STATUS_UNDERFLOW = 2

cdef double _C2 = 1.0 / 5.0
cdef double _C3 = 3.0 / 10.0
cdef double _C4 = 4.0 / 5.0
cdef double _C5 = 8.0 / 9.0
cdef double _A21 = 1.0 / 5.0
cdef double _A31 = 3.0 / 40.0
cdef double _A32 = 9.0 / 40.0
cdef double _A41 = 44.0 / 45.0
cdef double _A42 = -56.0 / 15.0
cdef double _A43 = 32.0 / 9.0
cdef double _A51 = 19372.0 / 6561.0
cdef double _A52 = -25360.0 / 2187.0
cdef double _A53 = 64448.0 / 6561.0
cdef double _A54 = -212.0 / 729.0
cdef double _A61 = 9017.0 / 3168.0
cdef double _A62 = -355.0 / 33.0
cdef double _A63 = 46732.0 / 5247.0
cdef double _A64 = 49.0 / 176.0
cdef double _A65 = -5103.0 / 18656.0
cdef double _A71 = 35.0 / 384.0
cdef double _A73 = 500.0 / 1113.0
cdef double _A74 = 125.0 / 192.0
cdef double _A75 = -2187.0 / 6784.0
cdef double _A76 = 11.0 / 84.0
cdef double _E1 = 71.0 / 57600.0
cdef double _E3 = -71.0 / 16695.0
cdef double _E4 = 71.0 / 1920.0
cdef double _E5 = -17253.0 / 339200.0
cdef double _E6 = 22.0 / 525.0
cdef double _E7 = -1.0 / 40.0

cdef double _SAFETY = 0.9
cdef double _FACMIN = 0.2
cdef double _FACMAX = 10.0
cdef double _BETA = 0.08
cdef double _EXPO = 0.14


cdef inline double _exp_sat(double x) noexcept nogil:
    if x >= 700.0:
        return INFINITY
    return exp(x)


cdef inline double _rhs(int form, double t, double y0, double y1, double y2) noexcept nogil:
    cdef double t2, er, e4r
    if form == _FORM_ETA_C:
        t2 = t * t
        return (t2 * t2 * y0 + 4.0 * t * y1 + 4.0 * t2 * y0 * y1
                - 8.0 * t2 * y2 - 4.0 * y0) / (4.0 * t2 * t)
    er = _exp_sat(t)
    e4r = _exp_sat(4.0 * t)
    return y2 + y1 + er * y1 * y0 + 0.25 * (e4r - 4.0) * y0


cdef double _initial_step(int form, double t0, double y0, double y1, double y2,
                          double f0, double f1, double f2, double t_end,
                          double rtol, double atol) noexcept nogil:
    cdef double sk0 = atol + rtol * fabs(y0)
    cdef double sk1 = atol + rtol * fabs(y1)
    cdef double sk2 = atol + rtol * fabs(y2)
    cdef double d0 = sqrt(((y0 / sk0) ** 2 + (y1 / sk1) ** 2 + (y2 / sk2) ** 2) / 3.0)
    cdef double d1 = sqrt(((f0 / sk0) ** 2 + (f1 / sk1) ** 2 + (f2 / sk2) ** 2) / 3.0)
    cdef double h0, g0, g1, g2, e0, e1, e2, d2, dm, h1
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_end - t0)
    g0 = y0 + h0 * f0
    g1 = y1 + h0 * f1
    g2 = y2 + h0 * f2
    e0 = g1
    e1 = g2
    e2 = _rhs(form, t0 + h0, g0, g1, g2)
    d2 = sqrt((((e0 - f0) / sk0) ** 2 + ((e1 - f1) / sk1) ** 2
               + ((e2 - f2) / sk2) ** 2) / 3.0) / h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / dm, 0.2)
    return min(100.0 * h0, min(h1, t_end - t0))


def integrate(int form, double t0, double y0, double y1, double y2,
              double t_end, double rtol, double atol, double g_cap,
              long max_steps=2_000_000):
    """Compiled twin of ``hgl._shoot_fallback.integrate``."""
    cdef double t = t0
    cdef double f0 = y1
    cdef double f1 = y2
    cdef double f2 = _rhs(form, t, y0, y1, y2)
    cdef list ts, gs, g1s, g2s

    if not (isfinite(f2) and isfinite(y0) and isfinite(y1) and isfinite(y2)):
        return [t], [y0], [y1], [y2], STATUS_UNDERFLOW, 0, "non-finite launch state"

    ts = [t]
    gs = [y0]
    g1s = [y1]
    g2s = [y2]

    cdef double h = _initial_step(form, t, y0, y1, y2, f0, f1, f2, t_end, rtol, atol)
    cdef double facold = 1e-4
    cdef long n_acc = 0
    cdef long n_rej = 0
    cdef bint rejected = False
    cdef int status = STATUS_UNDERFLOW
    cdef bint last, finite
    cdef double hfloor, fac, facmax, err
    cdef double s0, s1, s2, w0, w1, w2, e0, e1, e2, sk0, sk1, sk2
    cdef double k20, k21, k22, k30, k31, k32, k40, k41, k42
    cdef double k50, k51, k52, k60, k61, k62, k70, k71, k72
    message = ""

    while True:
        if n_acc + n_rej >= max_steps:
            message = "step budget exhausted"
            break
        hfloor = 1e-14 * t if form == _FORM_ETA_C else 1e-14 * max(1.0, fabs(t))
        if h < hfloor or t + h == t:
            message = "step size underflow"
            break

        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True

        s0 = y0 + h * (_A21 * f0)
        s1 = y1 + h * (_A21 * f1)
        s2 = y2 + h * (_A21 * f2)
        k20 = s1
        k21 = s2
        k22 = _rhs(form, t + _C2 * h, s0, s1, s2)

        s0 = y0 + h * (_A31 * f0 + _A32 * k20)
        s1 = y1 + h * (_A31 * f1 + _A32 * k21)
        s2 = y2 + h * (_A31 * f2 + _A32 * k22)
        k30 = s1
        k31 = s2
        k32 = _rhs(form, t + _C3 * h, s0, s1, s2)

        s0 = y0 + h * (_A41 * f0 + _A42 * k20 + _A43 * k30)
        s1 = y1 + h * (_A41 * f1 + _A42 * k21 + _A43 * k31)
        s2 = y2 + h * (_A41 * f2 + _A42 * k22 + _A43 * k32)
        k40 = s1
        k41 = s2
        k42 = _rhs(form, t + _C4 * h, s0, s1, s2)

        s0 = y0 + h * (_A51 * f0 + _A52 * k20 + _A53 * k30 + _A54 * k40)
        s1 = y1 + h * (_A51 * f1 + _A52 * k21 + _A53 * k31 + _A54 * k41)
        s2 = y2 + h * (_A51 * f2 + _A52 * k22 + _A53 * k32 + _A54 * k42)
        k50 = s1
        k51 = s2
        k52 = _rhs(form, t + _C5 * h, s0, s1, s2)

        s0 = y0 + h * (_A61 * f0 + _A62 * k20 + _A63 * k30 + _A64 * k40 + _A65 * k50)
        s1 = y1 + h * (_A61 * f1 + _A62 * k21 + _A63 * k31 + _A64 * k41 + _A65 * k51)
        s2 = y2 + h * (_A61 * f2 + _A62 * k22 + _A63 * k32 + _A64 * k42 + _A65 * k52)
        k60 = s1
        k61 = s2
        k62 = _rhs(form, t + h, s0, s1, s2)

        w0 = y0 + h * (_A71 * f0 + _A73 * k30 + _A74 * k40 + _A75 * k50 + _A76 * k60)
        w1 = y1 + h * (_A71 * f1 + _A73 * k31 + _A74 * k41 + _A75 * k51 + _A76 * k61)
        w2 = y2 + h * (_A71 * f2 + _A73 * k32 + _A74 * k42 + _A75 * k52 + _A76 * k62)
        k70 = w1
        k71 = w2
        k72 = _rhs(form, t + h, w0, w1, w2)

        e0 = h * (_E1 * f0 + _E3 * k30 + _E4 * k40 + _E5 * k50 + _E6 * k60 + _E7 * k70)
        e1 = h * (_E1 * f1 + _E3 * k31 + _E4 * k41 + _E5 * k51 + _E6 * k61 + _E7 * k71)
        e2 = h * (_E1 * f2 + _E3 * k32 + _E4 * k42 + _E5 * k52 + _E6 * k62 + _E7 * k72)

        sk0 = atol + rtol * max(fabs(y0), fabs(w0))
        sk1 = atol + rtol * max(fabs(y1), fabs(w1))
        sk2 = atol + rtol * max(fabs(y2), fabs(w2))
        err = sqrt(((e0 / sk0) ** 2 + (e1 / sk1) ** 2 + (e2 / sk2) ** 2) / 3.0)

        finite = (isfinite(err) and isfinite(w0) and isfinite(w1) and isfinite(w2))

        if finite and err <= 1.0:
            n_acc += 1
            t = t_end if last else t + h
            y0 = w0
            y1 = w1
            y2 = w2
            f0 = k70
            f1 = k71
            f2 = k72
            ts.append(t)
            gs.append(y0)
            g1s.append(y1)
            g2s.append(y2)
            if fabs(y0) >= g_cap:
                status = STATUS_BLOWUP
                return ts, gs, g1s, g2s, status, n_rej, message
            if last:
                status = STATUS_REACHED_END
                return ts, gs, g1s, g2s, status, n_rej, message
            if err == 0.0:
                fac = _FACMAX
            else:
                fac = _SAFETY * pow(err, -_EXPO) * pow(facold, _BETA)
            facmax = 1.0 if rejected else _FACMAX
            fac = min(facmax, max(_FACMIN, fac))
            facold = max(err, 1e-4)
            h = h * fac
            rejected = False
        else:
            n_rej += 1
            if finite:
                fac = min(1.0, max(_FACMIN, _SAFETY * pow(err, -_EXPO)))
            else:
                fac = 0.1
            h = h * fac
            rejected = True

    return ts, gs, g1s, g2s, status, n_rej, message
