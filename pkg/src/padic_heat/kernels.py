"""Heat kernels, the Green function, and the resolvent on the ball.

Sign convention, fixed across the package: the operator D of order
alpha is positive; A = D - lambda*I kills constants; the semigroup is
T(t) = exp(-t*(D - lambda*I)); the resolvent (A + mu)^(-1) divides
spectrally by (m[k] - lambda + mu).

Radial evaluators work directly in the radius variable: an argument
``m`` denotes the sphere |x|_p = p**m, and ``m=None`` denotes the point
x = 0 (where defined).  Grid-level kernels return GridFunctions whose
coset values are the exact coset averages of the radial profiles.

The ball heat kernel has two independent evaluation routes:

* ``heat_kernel_ball``: a finite character sum over the ball's own
  frequencies, exact up to exp() rounding;
* ``heat_kernel_ball_series``: exp(lambda*t) times the global kernel
  plus the correction c(t), with c(t) summed from its alternating
  series (``c_series``).

The alternating series cancels catastrophically once t is a few units
(terms swell to about e^t before the signs bite), so ``c_series`` sums
it in extended working precision scaled to the hump and rounds the
result to a double; every stored value in this package remains float64.
"""

from __future__ import annotations

import math
from functools import lru_cache

import mpmath as mp
import numpy as np

from .ball_model import BallModel, lambda_value, valuation_table
from .fourier_ball import SpectralFunction, inverse
from .function_space import GridFunction
from .vladimirov import multiplier

DEFAULT_EPS_TAIL = 1e-16


class NonConvergenceError(Exception):
    """An adaptive series failed to meet its stopping rule within the cap."""


def _exp_neg(t: float, p: int, exponent: float) -> float:
    """exp(-t * p**exponent) with overflow-proof underflow to 0.0."""
    logarg = exponent * math.log(p) + math.log(t)
    if logarg > 709.0:
        return 0.0
    return math.exp(-t * float(p) ** exponent)


def _exp_shifted(t: float, lam: float, p: int, exponent: float) -> float:
    """exp(t*(lam - p**exponent)), a pure decay whenever p**exponent > lam."""
    if exponent * math.log(p) > 709.0:
        return 0.0
    arg = t * (lam - float(p) ** exponent)
    return math.exp(arg) if arg > -745.0 else 0.0


def heat_kernel_global(p: int, alpha: float, t: float, m: int | None = None,
                       eps_tail: float = DEFAULT_EPS_TAIL) -> float:
    """Heat kernel on the whole field at radius p**m (m=None for x = 0).

    Sphere decomposition of the oscillatory integral:

        Z(t, |x| = p**m) = sum_{l <= -m} (1-1/p) p**l exp(-t p**(alpha*l))
                           - p**(-m) exp(-t p**(alpha*(1-m)))

    and for x = 0 the full two-sided sphere sum.  The downward tail is
    truncated once its geometric bound drops below ``eps_tail``.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    q = 1.0 - 1.0 / p
    if m is None:
        # start above the superexponential cutoff of exp(-t p**(alpha l))
        l = int(math.ceil(math.log(745.0 / t) / (alpha * math.log(p)))) + 1
        acc = 0.0
    else:
        e_bnd = _exp_neg(t, p, alpha * (1 - m))
        acc = -float(p) ** (-m) * e_bnd if e_bnd > 0.0 else 0.0
        l = -m
    while True:
        acc += q * float(p) ** l * _exp_neg(t, p, alpha * l)
        if float(p) ** l < eps_tail:
            return acc
        l -= 1


def global_kernel_mass(p: int, alpha: float, t: float,
                       eps_tail: float = DEFAULT_EPS_TAIL) -> float:
    """Sphere-sum of the global kernel over the whole field; should be 1.

    Upward spheres contribute ~ t*(1-p**(-alpha))*p**(-alpha*m), so the
    upper cutoff scales with log(t/eps); below that the summand is
    rounding noise of the sphere evaluator.
    """
    q = 1.0 - 1.0 / p
    m = int(math.ceil(math.log(max(t, 1.0) * float(p) ** alpha / 1e-16)
                      / (alpha * math.log(p)))) + 2
    acc = 0.0
    while True:
        # cut each sphere's own tail relative to its p**(-m) scale, since
        # the weight p**m amplifies absolute truncation error
        eps_m = eps_tail * min(1.0, float(p) ** (-m))
        acc += q * float(p) ** m * heat_kernel_global(p, alpha, t, m, eps_m)
        if float(p) ** m < eps_tail and m < 0:
            return acc
        m -= 1


def global_kernel_ball_mass(p: int, N: int, alpha: float, t: float,
                            eps_tail: float = DEFAULT_EPS_TAIL) -> float:
    """Sphere-sum of the global kernel over the radius-p**N ball."""
    q = 1.0 - 1.0 / p
    acc = 0.0
    m = N
    while True:
        acc += q * float(p) ** m * heat_kernel_global(p, alpha, t, m, eps_tail)
        if float(p) ** m < eps_tail:
            return acc
        m -= 1


def _c_total_mp(p: int, N: int, alpha: float, t: float,
                eps_increment: float, term_cap: int):
    """Alternating series sum_{n>=0} (-x)**n/n! / (1 - p**(-alpha*n-1)).

    x = t*p**(-N*alpha); the n = 0 term carries 1/(1 - p**(-1))
    literally.  Runs at the caller's mpmath working precision; stops
    once the increment drops below ``eps_increment`` past the hump.
    """
    P = mp.mpf(p)
    x = mp.mpf(t) * P ** (-N * alpha)
    hump = float(x)
    term_base = mp.mpf(1)  # (-x)**n / n!
    total = mp.mpf(0)
    n = 0
    while True:
        inc = term_base / (1 - P ** (-alpha * n - 1))
        total += inc
        if abs(inc) < eps_increment and n > hump:
            return total
        n += 1
        if n > term_cap:
            raise NonConvergenceError(
                f"c(t) series: increment {float(abs(inc))!r} after {term_cap} terms"
            )
        term_base *= -x / n


def _lambda_mp(p: int, alpha: float, N: int):
    P = mp.mpf(p)
    return (P - 1) / (P ** (alpha + 1) - 1) * P ** (alpha * (1 - N))


def _series_dps(p: int, N: int, alpha: float, t: float) -> int:
    hump = t * float(p) ** (-N * alpha)
    lam = lambda_value(p, alpha, N)
    return min(25 + int(math.ceil((hump + lam * t) * math.log10(math.e))), 2000)


def c_series(p: int, N: int, alpha: float, t: float,
             eps_increment: float = 1e-15, term_cap: int = 500) -> float:
    """Spatially constant correction c(t) relating global and ball kernels.

        c(t) = p**(-N) * (1 - (1-1/p) * exp(lambda*t)
               * sum_{n>=0} (-x)**n / n! / (1 - p**(-alpha*n-1))),   x = t*p**(-N*alpha)

    Terms are added until the increment falls below ``eps_increment``
    past the hump of the alternating series; hitting ``term_cap`` first
    raises NonConvergenceError.  Summation runs in extended precision
    sized to the hump, the return value is an ordinary double.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0.0:
        return 0.0
    with mp.workdps(_series_dps(p, N, alpha, t)):
        total = _c_total_mp(p, N, alpha, t, eps_increment, term_cap)
        c = mp.mpf(p) ** (-N) * (1 - (1 - mp.mpf(1) / p)
                                 * mp.e ** (_lambda_mp(p, alpha, N) * t) * total)
        return float(c)


def heat_kernel_ball(p: int, N: int, alpha: float, t: float,
                     m: int | None = None) -> float:
    """Ball heat kernel at radius p**m (m=None for x = 0), by finite character sum.

        Z_ball(t, |x| = p**m) = p**(-N) + exp(lambda*t) *
            [ sum_{l=-N+1}^{-m} (1-1/p) p**l exp(-t p**(alpha*l))
              - p**(-m) exp(-t p**(alpha*(1-m))) ]

    Every frequency in the sum has p**(alpha*l) > lambda, so the
    exp(lambda*t) prefactor folds into each term as a pure decay
    exp(t*(lambda - p**(alpha*l))); the evaluation is overflow-free for
    arbitrarily large t.  For x = 0 the sphere sum runs upward until
    those decays underflow.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if m is not None and m > N:
        raise ValueError(f"radius exponent m must be <= N = {N}, got {m}")
    q = 1.0 - 1.0 / p
    lam = lambda_value(p, alpha, N)
    if m is None:
        acc = 0.0
        l = -N + 1
        while True:
            e = _exp_shifted(t, lam, p, alpha * l)
            if e == 0.0:
                break
            acc += q * float(p) ** l * e
            l += 1
    else:
        acc = 0.0
        for l in range(-N + 1, -m + 1):
            acc += q * float(p) ** l * _exp_shifted(t, lam, p, alpha * l)
        e_bnd = _exp_shifted(t, lam, p, alpha * (1 - m))
        if e_bnd > 0.0:
            acc -= float(p) ** (-m) * e_bnd
    return float(p) ** (-N) + acc


def _global_kernel_mp(p: int, alpha: float, t: float, m: int | None,
                      tail_digits: int):
    """Global kernel sphere sum at the caller's mpmath precision.

    The downward tail is cut at p**l < 10**(-tail_digits); the caller
    sizes that to survive multiplication by exp(lambda*t).
    """
    P = mp.mpf(p)
    q = 1 - 1 / P
    T = mp.mpf(t)
    if m is None:
        l = int(math.ceil(math.log((tail_digits + 10) * math.log(10) / t)
                          / (alpha * math.log(p)))) + 1
        acc = mp.mpf(0)
    else:
        acc = -P ** (-m) * mp.e ** (-T * P ** (alpha * (1 - m)))
        l = -m
    cutoff = mp.mpf(10) ** (-tail_digits)
    while True:
        acc += q * P ** l * mp.e ** (-T * P ** (mp.mpf(alpha) * l))
        if P ** l < cutoff:
            return acc
        l -= 1


def heat_kernel_ball_series(p: int, N: int, alpha: float, t: float,
                            m: int | None = None,
                            eps_tail: float = DEFAULT_EPS_TAIL) -> float:
    """Ball heat kernel via exp(lambda*t) * global kernel + c(t).

    Independent route from ``heat_kernel_ball``; the two must agree to
    tight tolerance on every radius and time.  The two summands grow
    like exp(lambda*t) while their sum stays order p**(-N), so once
    lambda*t is large enough to cost double precision the whole
    combination is evaluated in extended precision and rounded;
    ``eps_tail`` governs only the double-precision branch.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    lam = lambda_value(p, alpha, N)
    if lam * t <= 30.0:
        return math.exp(lam * t) * heat_kernel_global(p, alpha, t, m, eps_tail) \
            + c_series(p, N, alpha, t)
    tail_digits = 15 + int(math.ceil(lam * t * math.log10(math.e)))
    if tail_digits > 20000:
        raise NonConvergenceError(
            f"series route needs ~{tail_digits} guard digits at lambda*t = "
            f"{lam * t:.3g}; use the character-sum route instead")
    with mp.workdps(_series_dps(p, N, alpha, t) + tail_digits):
        grow = mp.e ** (_lambda_mp(p, alpha, N) * t)
        # the series total is multiplied by exp(lambda*t), so its
        # stopping threshold must shrink by the same factor
        total = _c_total_mp(p, N, alpha, t, mp.mpf(10) ** (-16) / grow, 2000)
        Z = _global_kernel_mp(p, alpha, t, m, tail_digits)
        c = mp.mpf(p) ** (-N) * (1 - (1 - mp.mpf(1) / p) * grow * total)
        return float(grow * Z + c)


def ball_kernel_gridfunction(model: BallModel, alpha: float, t: float) -> GridFunction:
    """Ball heat kernel as a grid function, built spectrally.

    Coefficients p**(-N) * exp(-t*(m[k] - lambda)); convolving with it
    realises the semigroup exp(-t*(D - lambda*I)) on level-M data.  Its
    coset values equal the coset averages of the radial evaluator.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    mult = multiplier(model, float(alpha))
    lam = mult.eigenvalues[0]
    coeffs = float(model.p) ** (-model.N) * np.exp(-t * (mult.eigenvalues - lam))
    return GridFunction(model, inverse(SpectralFunction(model, coeffs)).values.real)


# -- Green function and resolvent --------------------------------------


def _green_denominator(p: int, N: int, alpha: float, mu: float, l: int) -> float:
    return float(p) ** (alpha * l) - lambda_value(p, alpha, N) + mu


def green_kernel(p: int, N: int, alpha: float, mu: float,
                 m: int | None = None, series_eps: float = 1e-17) -> float:
    """Green function of (D - lambda + mu) at radius p**m.

    Finite progression for a point on the sphere |x| = p**m:

        K(|x| = p**m) = (1-1/p) * sum_{l=-N+1}^{-m} p**l / d(l)
                        - p**(-m) / d(1-m),
        d(l) = p**(alpha*l) - lambda + mu.

    ``m=None`` evaluates at x = 0, defined only for alpha > 1, where the
    upward sphere series converges geometrically.
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    q = 1.0 - 1.0 / p
    if m is None:
        if alpha <= 1:
            raise ValueError("the Green function is unbounded at x = 0 for alpha <= 1")
        acc = 0.0
        l = -N + 1
        ratio = float(p) ** (1.0 - alpha)
        while True:
            term = q * float(p) ** l / _green_denominator(p, N, alpha, mu, l)
            acc += term
            if term / (1.0 - ratio) < series_eps * max(abs(acc), 1e-300):
                return acc
            l += 1
    if m > N:
        raise ValueError(f"radius exponent m must be <= N = {N}, got {m}")
    acc = 0.0
    for l in range(-N + 1, -m + 1):
        acc += q * float(p) ** l / _green_denominator(p, N, alpha, mu, l)
    acc -= float(p) ** (-m) / _green_denominator(p, N, alpha, mu, 1 - m)
    return acc


def green_kernel_series(p: int, N: int, alpha: float, mu: float,
                        m: int | None = None, series_eps: float = 1e-17) -> float:
    """Green function summed frequency-sphere by frequency-sphere.

    Requires alpha > 1.  Each sphere |eta| = p**l contributes its exact
    character integral over the sphere divided by d(l); spheres beyond
    the critical one contribute zero, which this route evaluates
    explicitly rather than by the closed cutoff.
    """
    if alpha <= 1:
        raise ValueError("the sphere series requires alpha > 1")
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    q = 1.0 - 1.0 / p
    acc = 0.0
    l = -N + 1
    ratio = float(p) ** (1.0 - alpha)
    while True:
        if m is None:
            char_int = q * float(p) ** l
        elif l <= -m:
            char_int = q * float(p) ** l
        elif l == -m + 1:
            char_int = -float(p) ** (l - 1)
        else:
            char_int = 0.0
        term = char_int / _green_denominator(p, N, alpha, mu, l)
        acc += term
        if m is not None and l > -m + 1:
            return acc
        if m is None and q * float(p) ** l / _green_denominator(
                p, N, alpha, mu, l) / (1.0 - ratio) < series_eps * max(abs(acc), 1e-300):
            return acc
        l += 1


def green_ball_integral(p: int, N: int, alpha: float, mu: float,
                        m_min: int | None = -40) -> float:
    """Sphere-sum of the Green function over the ball; should vanish.

    ``m_min`` truncates the sphere sum (the default -40 suits
    alpha >= 1); ``m_min=None`` descends adaptively until the geometric
    tail bound is negligible.
    """
    q = 1.0 - 1.0 / p
    acc = 0.0
    m = N
    scale = 0.0
    while True:
        term = q * float(p) ** m * green_kernel(p, N, alpha, mu, m)
        acc += term
        scale = max(scale, abs(term))
        m -= 1
        if m_min is not None:
            if m < m_min:
                return acc
        else:
            # terms shrink geometrically like p**(m*min(alpha,1)), log factor aside
            if abs(term) < 1e-18 * max(scale, 1e-300) and m < -8:
                return acc


@lru_cache(maxsize=32)
def green_kernel_gridfunction(model: BallModel, alpha: float, mu: float) -> GridFunction:
    """Green function as a grid function of exact coset averages.

    Nonzero cosets take the radial value on their sphere; the zero
    coset takes the average over the sub-ball, an adaptive sphere sum.
    """
    p, N, M = model.p, model.N, model.M
    vt = valuation_table(model)
    vals = np.empty(model.S, dtype=np.float64)
    radial = {}
    for v in range(N + M):
        m = N - v
        radial[v] = green_kernel(p, N, alpha, mu, m)
    for n in range(1, model.S):
        vals[n] = radial[int(vt[n])]
    # zero coset: p**M * integral of K over the sub-ball of radius p**(-M)
    q = 1.0 - 1.0 / p
    acc = 0.0
    m = -M
    scale = 0.0
    while True:
        term = q * float(p) ** m * green_kernel(p, N, alpha, mu, m)
        acc += term
        scale = max(scale, abs(term))
        m -= 1
        if abs(term) < 1e-18 * max(scale, 1e-300) and m < -M - 8:
            break
    vals[0] = float(p) ** M * acc
    return GridFunction(model, vals)


def resolvent_apply(u: GridFunction, alpha: float, mu: float,
                    path: str = "spectral") -> GridFunction:
    """Apply (D - lambda + mu)^(-1) to a grid function.

    path="spectral" divides Fourier coefficients by (m[k] - lambda + mu);
    path="kernel" convolves with the Green grid function and adds the
    rank-one piece p**(-N)/mu * integral(u) that the kernel (mean-zero
    by construction) cannot carry.
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    model = u.model
    if path == "spectral":
        from .fourier_ball import forward
        mult = multiplier(model, float(alpha))
        lam = mult.eigenvalues[0]
        coeffs = forward(u).coeffs / (mult.eigenvalues - lam + mu)
        out = inverse(SpectralFunction(model, coeffs))
        return out.real() if not np.iscomplexobj(u.values) else out
    if path == "kernel":
        kg = green_kernel_gridfunction(model, float(alpha), float(mu))
        mean_part = float(model.p) ** (-model.N) / mu * u.integral()
        conv = u.convolve(kg)
        return GridFunction(model, conv.values + mean_part)
    raise ValueError(f"unknown path {path!r}")


# -- regime tables ------------------------------------------------------


def green_estimates_report(p: int, N: int, alpha: float, mu: float,
                           m_range: tuple[int, int] = (-25, 0)) -> list[dict]:
    """Tabulate |K| against its regime weight on spheres p**m, m in m_range.

    Weights: max(1, |m|*log p) for alpha = 1 (logarithmic growth),
    p**(m*(alpha-1)) for alpha < 1 (power growth), 1 for alpha > 1
    (bounded, continuous at 0).  Rows carry the weighted value and the
    ratio of consecutive weighted values, which should settle near 1 as
    m decreases.
    """
    lo, hi = m_range
    if lo > hi or hi > N:
        raise ValueError(f"bad m_range {m_range}")
    rows = []
    prev_weighted = None
    for m in range(hi, lo - 1, -1):
        K = green_kernel(p, N, alpha, mu, m)
        if alpha == 1.0:
            weight = max(1.0, abs(m) * math.log(p))
        elif alpha < 1.0:
            weight = float(p) ** (m * (alpha - 1.0))
        else:
            weight = 1.0
        weighted = abs(K) / weight
        ratio = weighted / prev_weighted if prev_weighted not in (None, 0.0) else math.nan
        rows.append({
            "m": m,
            "abs_x": float(p) ** m,
            "K": K,
            "weight": weight,
            "weighted": weighted,
            "ratio": ratio,
        })
        prev_weighted = weighted
    return rows
