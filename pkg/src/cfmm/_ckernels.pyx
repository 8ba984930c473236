# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``. Same signatures."""
from libc.math cimport sqrt, log, exp, fabs, pow, INFINITY

cdef enum:
    BUY_ALPHA = 0
    STATUS_INTERIOR = 0
    STATUS_ZERO = 1
    STATUS_MAXITER = 2


cpdef double cp_out(double r_in, double r_out, double gamma, double amount_in):
    cdef double g = gamma * amount_in
    return r_out * g / (r_in + g)


cpdef double cp_in_for_out(double r_in, double r_out, double gamma, double amount_out):
    if amount_out >= r_out:
        return INFINITY
    return r_in * amount_out / (gamma * (r_out - amount_out))


cdef inline double _alpha_derivative(double x, double r_alpha, double r_beta,
                                     double gamma, double m_p, int side,
                                     double rho_a, double rho_b,
                                     double eta, double xi) nogil:
    cdef double impact = 0.0
    cdef double t, s, b, db
    if eta > 0.0 and x > 0.0:
        impact = m_p * eta * pow(x, xi)
    if side == BUY_ALPHA:
        t = r_alpha - x
        b = r_beta * x / (gamma * t)
        db = r_beta * r_alpha / (gamma * t * t)
        return m_p - db - rho_a * x - rho_b * b * db - impact
    s = r_alpha + gamma * x
    b = r_beta * gamma * x / s
    db = r_beta * gamma * r_alpha / (s * s)
    return db - m_p - rho_a * x - rho_b * b * db - impact


cpdef double riskless_alpha(double r_alpha, double r_beta, double gamma,
                            double m_p, int side):
    if side == BUY_ALPHA:
        return r_alpha - sqrt(r_alpha * r_beta / (gamma * m_p))
    return (sqrt(gamma * r_alpha * r_beta / m_p) - r_alpha) / gamma


def penalized_alpha(double r_alpha, double r_beta, double gamma, double m_p,
                    int side, double rho_a, double rho_b, double eta, double xi,
                    int max_iter, double dtol, double xtol_rel):
    cdef double hi = riskless_alpha(r_alpha, r_beta, gamma, m_p, side)
    cdef double lo = 0.0
    cdef double x, d, xtol
    cdef int it
    if not hi > 0.0:
        d = _alpha_derivative(0.0, r_alpha, r_beta, gamma, m_p, side, rho_a, rho_b, eta, xi)
        return 0.0, d, 0, STATUS_ZERO
    xtol = xtol_rel * r_alpha
    x = 0.5 * hi
    d = 0.0
    for it in range(1, max_iter + 1):
        x = 0.5 * (lo + hi)
        d = _alpha_derivative(x, r_alpha, r_beta, gamma, m_p, side, rho_a, rho_b, eta, xi)
        if fabs(d) < dtol:
            return x, d, it, STATUS_INTERIOR
        if d > 0.0:
            lo = x
        else:
            hi = x
        if hi - lo < xtol:
            x = 0.5 * (lo + hi)
            d = _alpha_derivative(x, r_alpha, r_beta, gamma, m_p, side, rho_a, rho_b, eta, xi)
            return x, d, it, STATUS_INTERIOR
    return x, d, max_iter, STATUS_MAXITER


cdef inline double _pos_root(double a, double b, double c) nogil:
    cdef double disc
    if a == 0.0:
        return c / b
    disc = sqrt(b * b + 4.0 * a * c)
    if b >= 0.0:
        return 2.0 * c / (b + disc)
    return (-b + disc) / (2.0 * a)


cdef double _reserves_at(double nu, double[:] reserves, double[:] weights,
                         double[:] gammas, double[:] prices, double[:] rho_in,
                         double[:] rho_out, double[:] out) nogil:
    cdef Py_ssize_t i, n = reserves.shape[0]
    cdef double total = 0.0
    cdef double r, w, m, g, a, x
    for i in range(n):
        r = reserves[i]
        w = weights[i]
        if w == 0.0:
            out[i] = r
            continue
        m = prices[i]
        g = gammas[i]
        a = nu * w
        if a < m * r:
            x = _pos_root(rho_out[i], m - rho_out[i] * r, a)
        elif a * g > m * r:
            x = _pos_root(rho_in[i] / (g * g), m / g - rho_in[i] * r / (g * g), a)
        else:
            x = r
        out[i] = x
        total += w * log(x)
    return total


def mean_reserves_at(double nu, double[:] reserves, double[:] weights,
                     double[:] gammas, double[:] prices, double[:] rho_in,
                     double[:] rho_out, double[:] out):
    return _reserves_at(nu, reserves, weights, gammas, prices, rho_in, rho_out, out)


def mean_dual_solve(double[:] reserves, double[:] weights, double[:] gammas,
                    double[:] prices, double[:] rho_in, double[:] rho_out,
                    double log_k, int max_iter, double[:] out):
    cdef Py_ssize_t i, n = reserves.shape[0]
    cdef double lo = INFINITY
    cdef double hi = 0.0
    cdef double base, log_lo, log_hi, mid, nu, slack
    cdef int it = 0
    for i in range(n):
        if weights[i] > 0.0:
            base = prices[i] * reserves[i] / weights[i]
            if base < lo:
                lo = base
            if base / gammas[i] > hi:
                hi = base / gammas[i]
    log_lo = log(lo)
    log_hi = log(hi)
    while _reserves_at(exp(log_lo), reserves, weights, gammas, prices,
                       rho_in, rho_out, out) - log_k > 0.0:
        log_lo -= 1.0
    while _reserves_at(exp(log_hi), reserves, weights, gammas, prices,
                       rho_in, rho_out, out) - log_k < 0.0:
        log_hi += 1.0
    while it < max_iter and log_hi - log_lo > 1e-15 * max(1.0, fabs(log_hi)):
        it += 1
        mid = 0.5 * (log_lo + log_hi)
        if _reserves_at(exp(mid), reserves, weights, gammas, prices,
                        rho_in, rho_out, out) - log_k < 0.0:
            log_lo = mid
        else:
            log_hi = mid
    nu = exp(log_hi)
    slack = _reserves_at(nu, reserves, weights, gammas, prices, rho_in, rho_out, out) - log_k
    return nu, slack, it
