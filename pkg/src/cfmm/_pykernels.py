"""Pure-Python reference versions of the numeric kernels.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
The two must agree to rounding; ``tests/test_kernels.py`` checks this.
"""
import math

# side codes for penalized_alpha
BUY_ALPHA = 0   # beta goes into the pool, alpha comes out
SELL_ALPHA = 1  # alpha goes into the pool, beta comes out

# status codes returned by penalized_alpha
STATUS_INTERIOR = 0
STATUS_ZERO = 1
STATUS_MAXITER = 2


def cp_out(r_in, r_out, gamma, amount_in):
    """Output of a constant product trade for ``amount_in`` tendered."""
    g = gamma * amount_in
    return r_out * g / (r_in + g)


def cp_in_for_out(r_in, r_out, gamma, amount_out):
    """Input needed to receive ``amount_out``; ``inf`` if it would drain the pool."""
    if amount_out >= r_out:
        return math.inf
    return r_in * amount_out / (gamma * (r_out - amount_out))


def _alpha_derivative(x, r_alpha, r_beta, gamma, m_p, side, rho_a, rho_b, eta, xi):
    impact = m_p * eta * x ** xi if (eta > 0.0 and x > 0.0) else 0.0
    if side == BUY_ALPHA:
        t = r_alpha - x
        b = r_beta * x / (gamma * t)
        db = r_beta * r_alpha / (gamma * t * t)
        return m_p - db - rho_a * x - rho_b * b * db - impact
    s = r_alpha + gamma * x
    b = r_beta * gamma * x / s
    db = r_beta * gamma * r_alpha / (s * s)
    return db - m_p - rho_a * x - rho_b * b * db - impact


def riskless_alpha(r_alpha, r_beta, gamma, m_p, side):
    """Unpenalized optimal alpha amount for one side (may be <= 0)."""
    if side == BUY_ALPHA:
        return r_alpha - math.sqrt(r_alpha * r_beta / (gamma * m_p))
    return (math.sqrt(gamma * r_alpha * r_beta / m_p) - r_alpha) / gamma


def penalized_alpha(r_alpha, r_beta, gamma, m_p, side, rho_a, rho_b, eta, xi,
                    max_iter, dtol, xtol_rel):
    """Bisection on the derivative of the concave one-sided arbitrage objective.

    The variable is the amount of alpha bought from (``BUY_ALPHA``) or sold
    to (``SELL_ALPHA``) the pool. Penalty derivatives are nonnegative, so the
    riskless optimum bounds the search from above.

    Returns ``(x, derivative_at_x, iterations, status)``.
    """
    hi = riskless_alpha(r_alpha, r_beta, gamma, m_p, side)
    if not hi > 0.0:
        d0 = _alpha_derivative(0.0, r_alpha, r_beta, gamma, m_p, side, rho_a, rho_b, eta, xi)
        return 0.0, d0, 0, STATUS_ZERO
    lo = 0.0
    xtol = xtol_rel * r_alpha
    x = 0.5 * hi
    d = 0.0
    for it in range(1, max_iter + 1):
        x = 0.5 * (lo + hi)
        d = _alpha_derivative(x, r_alpha, r_beta, gamma, m_p, side, rho_a, rho_b, eta, xi)
        if abs(d) < dtol:
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


def _pos_root(a, b, c):
    # positive root of a*x^2 + b*x - c = 0 with a >= 0, c > 0
    if a == 0.0:
        return c / b
    disc = math.sqrt(b * b + 4.0 * a * c)
    if b >= 0.0:
        return 2.0 * c / (b + disc)
    return (-b + disc) / (2.0 * a)


def mean_reserves_at(nu, reserves, weights, gammas, prices, rho_in, rho_out, out):
    """Fill ``out`` with the post-trade reserves that maximize the Lagrangian at ``nu``.

    Returns the weighted log of the result, ``sum(w_i * log(out_i))``.
    """
    total = 0.0
    for i in range(len(reserves)):
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
        total += w * math.log(x)
    return total


def mean_dual_solve(reserves, weights, gammas, prices, rho_in, rho_out, log_k,
                    max_iter, out):
    """Bisect the scalar multiplier of the geometric-mean constraint.

    On return ``out`` holds feasible post-trade reserves (constraint slack
    >= 0). Returns ``(nu, slack, iterations)``.
    """
    lo = math.inf
    hi = 0.0
    for i in range(len(reserves)):
        if weights[i] > 0.0:
            base = prices[i] * reserves[i] / weights[i]
            lo = min(lo, base)
            hi = max(hi, base / gammas[i])
    log_lo = math.log(lo)
    log_hi = math.log(hi)
    # widen until the bracket straddles the constraint
    while mean_reserves_at(math.exp(log_lo), reserves, weights, gammas, prices,
                           rho_in, rho_out, out) - log_k > 0.0:
        log_lo -= 1.0
    while mean_reserves_at(math.exp(log_hi), reserves, weights, gammas, prices,
                           rho_in, rho_out, out) - log_k < 0.0:
        log_hi += 1.0
    it = 0
    while it < max_iter and log_hi - log_lo > 1e-15 * max(1.0, abs(log_hi)):
        it += 1
        mid = 0.5 * (log_lo + log_hi)
        if mean_reserves_at(math.exp(mid), reserves, weights, gammas, prices,
                            rho_in, rho_out, out) - log_k < 0.0:
            log_lo = mid
        else:
            log_hi = mid
    nu = math.exp(log_hi)
    slack = mean_reserves_at(nu, reserves, weights, gammas, prices, rho_in, rho_out, out) - log_k
    return nu, slack, it
