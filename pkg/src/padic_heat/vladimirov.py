"""The fractional operator of order alpha on the ball, in four equivalent forms.

On the finite model the operator acts on grid functions and can be
evaluated through any of:

1. spectral multiplication: eigenvalue lambda on the zero frequency and
   |xi|_p**alpha on every other frequency (``apply_spectral``);
2. the hypersingular difference sum with weights a_p * |y|^(-alpha-1),
   which is exact on level-M functions because the inner coset
   contributes nothing (``apply_hypersingular``);
3. pairing translates of the input against the radial distribution
   kernel (``convolve_riesz`` / ``riesz_pairing``);
4. extending by zero to the whole field, applying the global difference
   operator, and restricting; the far field contributes a pure
   multiple of the input, a geometric tail that reproduces lambda
   (``apply_global_restriction``).

``multiplier`` cross-checks the closed-form symbol against an exact
sphere-by-sphere quadrature of the oscillatory integral at construction
time and refuses to hand out an inconsistent operator.  ``build_matrix``
materialises the dense symmetric matrix for small models, the oracle
for spectrum tests, and ``spectrum_multiset`` lists the expected
eigenvalues with multiplicities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ball_model import (
    BallModel,
    coefficient_ap,
    freq_abs_table,
    lambda_value,
    point_abs_table,
    valuation_table,
)
from .fourier_ball import apply_multiplier
from .function_space import GridFunction

DEFAULT_MATRIX_CAP = 4096


class ConsistencyError(Exception):
    """Two evaluation routes that must agree did not."""


@dataclass(eq=False)
class SpectralMultiplier:
    """Eigenvalues of the operator on the frequency basis."""

    model: BallModel
    alpha: float
    eigenvalues: np.ndarray


def symbol_quadrature(model: BallModel, alpha: float, k: int) -> float:
    """Symbol at frequency k via exact sphere-by-sphere quadrature.

    Integrates a_p * |y|^(-alpha-1) * (character(y, xi) - 1) over the
    ball using the closed character integrals over spheres |y| = p**l:
    the spheres with p**l <= 1/|xi| cancel, the critical sphere
    p**l = p/|xi| contributes -p**(-alpha*l), and every larger sphere
    contributes -(1 - 1/p) * p**(-alpha*l).  Returns 0 at k = 0.
    """
    model._check_index(k)
    if k == 0:
        return 0.0
    p = model.p
    s = model.M - model.valuation(k)  # |xi| = p**s
    l0 = 1 - s
    total = -float(p) ** (-alpha * l0)
    geom = math.fsum(float(p) ** (-alpha * l) for l in range(l0 + 1, model.N + 1))
    total -= (1.0 - 1.0 / p) * geom
    return coefficient_ap(p, alpha) * total


@lru_cache(maxsize=128)
def multiplier(model: BallModel, alpha: float) -> SpectralMultiplier:
    """Spectral multiplier with a constructor-time quadrature cross-check.

    m[0] = lambda and m[k] = |xi_k|**alpha otherwise.  For one frequency
    of each valuation the closed form is checked against
    ``symbol_quadrature`` plus lambda; a relative disagreement above
    1e-10 raises ConsistencyError.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    lam = lambda_value(model.p, alpha, model.N)
    fa = freq_abs_table(model)
    eig = np.empty(model.S, dtype=np.float64)
    eig[0] = lam
    if model.S > 1:
        eig[1:] = fa[1:] ** alpha
    for v in range(model.N + model.M):
        k0 = model.p ** v
        closed = eig[k0]
        quad = symbol_quadrature(model, alpha, k0) + lam
        if abs(quad - closed) > 1e-10 * max(abs(closed), 1.0):
            raise ConsistencyError(
                f"symbol mismatch at |xi| = p**{model.M - v}: "
                f"closed form {closed!r}, quadrature {quad!r}"
            )
    eig.setflags(write=False)
    return SpectralMultiplier(model, alpha, eig)


def apply_spectral(u: GridFunction, alpha: float) -> GridFunction:
    """Apply the operator by Fourier multiplication."""
    mult = multiplier(u.model, float(alpha))
    return GridFunction(u.model, apply_multiplier(u.model, mult.eigenvalues, u.values))


@lru_cache(maxsize=128)
def _difference_weights(model: BallModel, alpha: float) -> np.ndarray:
    """a_p * p**(-M) * |y_j|^(-alpha-1) for j != 0, with 0 at j = 0."""
    a_p = coefficient_ap(model.p, alpha)
    absy = point_abs_table(model)
    w = np.zeros(model.S, dtype=np.float64)
    if model.S > 1:
        w[1:] = a_p * float(model.p) ** (-model.M) * absy[1:] ** (-alpha - 1.0)
    w.setflags(write=False)
    return w


def apply_hypersingular(u: GridFunction, alpha: float) -> GridFunction:
    """Apply the operator as lambda*u plus the weighted difference sum.

    result[n] = lambda*u[n]
              + a_p * p**(-M) * sum_{j != 0} |y_j|^(-alpha-1) * (u[n-j] - u[n]).

    Exact on level-M functions: the inner coset drops out because the
    difference vanishes there.  Direct O(S^2) evaluation.
    """
    model = u.model
    lam = lambda_value(model.p, alpha, model.N)
    w = _difference_weights(model, float(alpha))
    acc = np.zeros_like(u.values)
    for j in range(1, model.S):
        acc += w[j] * np.roll(u.values, j)
    sigma = float(w.sum())
    return GridFunction(model, lam * u.values + acc - sigma * u.values)


def apply_global_restriction(u: GridFunction, alpha: float) -> GridFunction:
    """Zero-extend to the whole field, apply the global operator, restrict.

    Inside the ball the difference sum is organised sphere by sphere.
    Points y with |y| > p**N contribute in two ways: the translate term
    vanishes identically (ultrametricity pushes x - y out of the ball,
    where the extension is zero), and the -u(x) term integrates to a
    geometric series whose sum reproduces lambda.  That tail coefficient
    is computed here from the series, independently of ``lambda_value``.
    """
    model = u.model
    p, S = model.p, model.S
    a_p = coefficient_ap(p, alpha)
    vt = valuation_table(model)
    acc = np.zeros_like(u.values)
    weight_total = 0.0
    for l in range(-model.M + 1, model.N + 1):
        v = model.N - l
        idx = np.nonzero(vt == v)[0]
        idx = idx[idx != 0]
        if idx.size == 0:
            continue
        sphere_sum = np.zeros_like(u.values)
        for j in idx:
            sphere_sum += np.roll(u.values, j)
        weight = a_p * float(p) ** (-model.M) * float(p) ** (-l * (alpha + 1.0))
        acc += weight * sphere_sum
        weight_total += weight * idx.size
    # far field: a_p * integral_{|y| > p**N} |y|^(-alpha-1) dy, summed exactly
    tail = -a_p * (1.0 - 1.0 / p) * float(p) ** (-alpha * (model.N + 1)) / (
        1.0 - float(p) ** (-alpha))
    return GridFunction(model, tail * u.values + acc - weight_total * u.values)


@dataclass(frozen=True)
class RieszDistribution:
    """Radial distribution kernel |x|^(sign*alpha - 1) with its point mass.

    sign = -1 is the kernel whose convolution realises the operator;
    sign = +1 is its convolution inverse on mean-zero data.  The +1
    branch is undefined at alpha = 1, where its normalising denominator
    1 - p**(alpha-1) vanishes; construction rejects that case.
    """

    model: BallModel
    alpha: float
    sign: int

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be -1 or +1")
        if self.sign == 1 and self.alpha == 1.0:
            raise ValueError("the +alpha kernel is not defined at alpha = 1")


def riesz_pairing(dist: RieszDistribution, phi: GridFunction) -> float | complex:
    """Pair the distribution against a test function on the ball.

    sign = -1:  lambda*phi(0) + a_p * int (phi - phi(0)) |x|^(-alpha-1) dx
    sign = +1:  (1-1/p)/(1-p**(alpha-1)) * p**(alpha*N) * phi(0)
              + (1-p**(-alpha))/(1-p**(alpha-1)) * int (phi - phi(0)) |x|^(alpha-1) dx

    Both integrals are exact coset sums: the zero coset drops out of the
    difference.
    """
    model = dist.model
    if phi.model != model:
        raise ValueError("test function lives on a different model")
    p = model.p
    absx = point_abs_table(model)
    vals = phi.values
    diff = vals[1:] - vals[0]
    meas = float(p) ** (-model.M)
    scalar = complex if np.iscomplexobj(vals) else float
    if dist.sign == -1:
        lam = lambda_value(p, dist.alpha, model.N)
        a_p = coefficient_ap(p, dist.alpha)
        integral = meas * scalar((diff * absx[1:] ** (-dist.alpha - 1.0)).sum())
        return lam * scalar(vals[0]) + a_p * integral
    denom = 1.0 - float(p) ** (dist.alpha - 1.0)
    point_coeff = (1.0 - 1.0 / p) / denom * float(p) ** (dist.alpha * model.N)
    int_coeff = (1.0 - float(p) ** (-dist.alpha)) / denom
    integral = meas * scalar((diff * absx[1:] ** (dist.alpha - 1.0)).sum())
    return point_coeff * scalar(vals[0]) + int_coeff * integral


def convolve_riesz(u: GridFunction, alpha: float) -> GridFunction:
    """Apply the operator by pairing the kernel with translates of u.

    result[n] pairs the sign = -1 distribution against x -> u(n - x);
    expanding the pairing gives exactly the hypersingular sum.
    """
    model = u.model
    dist = RieszDistribution(model, alpha, -1)
    S = model.S
    out = np.empty(S, dtype=u.values.dtype)
    base = np.arange(S)
    for n in range(S):
        translated = u.values[(n - base) % S]
        out[n] = riesz_pairing(dist, GridFunction(model, translated))
    return GridFunction(model, out)


def build_matrix(model: BallModel, alpha: float, cap: int = DEFAULT_MATRIX_CAP) -> np.ndarray:
    """Dense symmetric matrix of the operator; refuses orders above ``cap``.

    Row n holds lambda - sum(w) on the diagonal pattern and the
    difference weights w_j at column (n - j) mod S; row sums equal
    lambda because the weights cancel.
    """
    if model.S > cap:
        raise ValueError(f"group order {model.S} exceeds the dense-matrix cap {cap}")
    lam = lambda_value(model.p, alpha, model.N)
    w = _difference_weights(model, float(alpha))
    col = np.array(w)
    col[0] = lam - float(w.sum())
    S = model.S
    A = np.empty((S, S), dtype=np.float64)
    base = np.arange(S)
    for i in range(S):
        A[i] = col[(i - base) % S]
    return A


def spectrum_multiset(model: BallModel, alpha: float) -> np.ndarray:
    """Sorted expected eigenvalues: lambda once, then p**(alpha*k) with
    multiplicity p**(N+k-1) * (p-1) for k = -N+1, ..., M."""
    p = model.p
    lam = lambda_value(p, alpha, model.N)
    eigs = [lam]
    for k in range(-model.N + 1, model.M + 1):
        eigs.extend([float(p) ** (alpha * k)] * (p ** (model.N + k - 1) * (p - 1)))
    out = np.sort(np.array(eigs))
    if out.size != model.S:
        raise AssertionError("multiplicity bookkeeping is wrong")
    return out


@dataclass(eq=False)
class DomainReport:
    """L^1 norms of the applied operator across refinement levels."""

    levels: list[int]
    norms: list[float]
    ratios: list[float]
    bounded: bool


def domain_check(u, alpha: float, levels: int = 3,
                 base_model: BallModel | None = None) -> DomainReport:
    """Track ||D u||_1 across refinements; boundedness signals domain membership.

    ``u`` is either a GridFunction (refined exactly, so the sequence is
    flat for resolved data) or a callable model -> GridFunction that
    resamples a profile at each finer resolution, in which case
    ``base_model`` fixes the starting resolution.  Diagnostic only; the
    ``bounded`` flag records whether no step grew by more than a
    rounding margin.
    """
    if callable(u):
        if base_model is None:
            raise ValueError("base_model is required when passing a profile callable")
        start = base_model
    else:
        start = u.model

    def sample(lev: int) -> GridFunction:
        if callable(u):
            m = BallModel(start.p, start.N, start.M + lev, order_cap=start.order_cap)
            return u(m)
        return u.refine(lev)

    norms: list[float] = []
    lvls: list[int] = []
    for lev in range(levels + 1):
        du = apply_spectral(sample(lev), alpha)
        norms.append(du.lp_norm(1))
        lvls.append(start.M + lev)
    ratios = [
        norms[i + 1] / norms[i] if norms[i] > 0.0 else 1.0
        for i in range(len(norms) - 1)
    ]
    bounded = all(r <= 1.0 + 1e-8 for r in ratios)
    return DomainReport(lvls, norms, ratios, bounded)
