"""Linear heat flow on the ball: du/dt + (D - lambda)u = 0.

Two interchangeable propagation paths: the spectral path multiplies
Fourier coefficients by exp(-t*(m[k] - lambda)) and is the default; the
kernel path convolves with the ball heat kernel grid function and is
kept as an independent oracle.  Constants are fixed points, mass is
conserved (the k = 0 mode is untouched), and every nonzero mode decays,
so solutions relax to the mean at rate p**(alpha*(1-N)) - lambda.
"""

from __future__ import annotations

import numpy as np

from .fourier_ball import SpectralFunction, forward, inverse
from .function_space import GridFunction
from .kernels import ball_kernel_gridfunction
from .vladimirov import multiplier


def evolve(u0: GridFunction, alpha: float, t: float,
           path: str = "spectral") -> GridFunction:
    """Propagate initial data by time t."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0.0:
        return GridFunction(u0.model, u0.values)
    if path == "spectral":
        mult = multiplier(u0.model, float(alpha))
        lam = mult.eigenvalues[0]
        coeffs = forward(u0).coeffs * np.exp(-t * (mult.eigenvalues - lam))
        out = inverse(SpectralFunction(u0.model, coeffs))
        return out.real() if not np.iscomplexobj(u0.values) else out
    if path == "kernel":
        return u0.convolve(ball_kernel_gridfunction(u0.model, float(alpha), t))
    raise ValueError(f"unknown path {path!r}")


def evolve_series(u0: GridFunction, alpha: float, times,
                  path: str = "spectral") -> list[GridFunction]:
    """Solution snapshots at an increasing grid of positive times."""
    ts = [float(t) for t in times]
    if any(t <= 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
        raise ValueError("times must be strictly increasing and positive")
    return [evolve(u0, alpha, t, path) for t in ts]


def spectral_gap(model, alpha: float) -> float:
    """Decay rate of the slowest nonzero mode, p**(alpha*(1-N)) - lambda."""
    mult = multiplier(model, float(alpha))
    return float(model.p) ** (alpha * (1 - model.N)) - mult.eigenvalues[0]


def pde_residual(u0: GridFunction, alpha: float, t: float,
                 dt: float | None = None) -> float:
    """Sup-norm residual of the equation at time t.

    du/dt is approximated by a centered difference with step ``dt``
    (default 1e-5 scaled by the local time, clamped to keep t - dt
    positive); the spatial term is applied exactly.  Small residual
    certifies a classical solution of the flow at that instant.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if dt is None:
        dt = min(1e-5 * max(t, 1.0), t / 2)
    u_min = evolve(u0, alpha, t - dt)
    u_mid = evolve(u0, alpha, t)
    u_pls = evolve(u0, alpha, t + dt)
    du_dt = (u_pls.values - u_min.values) / (2 * dt)
    mult = multiplier(u0.model, float(alpha))
    lam = mult.eigenvalues[0]
    from .vladimirov import apply_spectral
    spatial = apply_spectral(u_mid, float(alpha)).values - lam * u_mid.values
    return float(np.max(np.abs(du_dt + spatial)))
