"""Fourier analysis on the finite ball model.

Sign and scaling convention, used everywhere in this package:

* forward:  coeffs[k] = p**(-N-M) * sum_n exp(+2*pi*i*n*k/S) * u[n]
* inverse:  u[n]      =             sum_k exp(-2*pi*i*n*k/S) * coeffs[k]

The forward kernel carries the PLUS sign, matching the point-frequency
pairing of the ball model, and the 1/S = p**(-N-M) scale sits entirely
on the forward side.  Consequences worth remembering:

* Plancherel:   p**(-N) * integral(|u|^2) = sum_k |coeffs[k]|^2
* convolution:  forward(u * v) = p**N * forward(u) * forward(v)
  for the measure-weighted convolution of the function space.

The transform is a mixed-radix Cooley-Tukey specialization to radix p,
recursing on index residues mod p with all butterflies batched through
numpy.  Twiddle factors are read from one table exp(+-2*pi*i*j/S) whose
index j is reduced mod S in exact integer arithmetic before the
transcendental call, so no angle ever drifts by multiples of 2*pi.
``dft_direct`` is the O(S^2) reference transform kept as an oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ball_model import BallModel
from .function_space import GridFunction


@lru_cache(maxsize=32)
def _twiddle_table(S: int, sign: int) -> np.ndarray:
    j = np.arange(S)
    t = np.exp(sign * 2j * np.pi * j / S)
    t.setflags(write=False)
    return t


def _fft_core(a: np.ndarray, p: int, table: np.ndarray) -> np.ndarray:
    """Radix-p transform along the last axis; length must be a power of p."""
    n = a.shape[-1]
    if n == 1:
        return a.copy()
    m = n // p
    stride = table.size // n
    sub = np.stack([a[..., r::p] for r in range(p)], axis=0)
    sub = _fft_core(sub, p, table)
    # twiddles exp(sign*2*pi*i * r*v / n), indices reduced mod S exactly
    tw_idx = (np.arange(p)[:, None] * np.arange(m)[None, :] * stride) % table.size
    tw = table[tw_idx].reshape(p, *([1] * (sub.ndim - 2)), m)
    t = sub * tw
    zeta_idx = (np.arange(p)[:, None] * np.arange(p)[None, :] * (table.size // p)) % table.size
    x = np.tensordot(table[zeta_idx], t, axes=(1, 0))
    out = np.moveaxis(x, 0, -2)
    return out.reshape(*a.shape[:-1], n)


def _transform(values: np.ndarray, model: BallModel, sign: int) -> np.ndarray:
    table = _twiddle_table(model.S, sign)
    return _fft_core(np.ascontiguousarray(values, dtype=np.complex128), model.p, table)


@dataclass(eq=False)
class SpectralFunction:
    """Fourier coefficients of a grid function, indexed by frequency k."""

    model: BallModel
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.model.S,):
            raise ValueError(
                f"coeffs must have shape ({self.model.S},), got {c.shape}"
            )
        c = c.copy()
        c.setflags(write=False)
        self.coeffs = c


def forward(u: GridFunction) -> SpectralFunction:
    """Fourier coefficients with the +2*pi*i kernel and 1/S scale."""
    return SpectralFunction(u.model, _transform(u.values, u.model, +1) / u.model.S)


def inverse(f: SpectralFunction) -> GridFunction:
    """Synthesis with the -2*pi*i kernel; exact inverse of ``forward``."""
    return GridFunction(f.model, _transform(f.coeffs, f.model, -1))


def apply_multiplier(model: BallModel, factors: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Pointwise spectral multiplication; returns values in the point domain.

    Real input comes back real (the imaginary residue of the synthesis
    is dropped; multipliers used in this package are even in k).
    """
    coeffs = _transform(values, model, +1) / model.S
    out = _transform(coeffs * factors, model, -1)
    if not np.iscomplexobj(values):
        return out.real
    return out


def dft_direct(values: np.ndarray, sign: int) -> np.ndarray:
    """O(S^2) reference transform: sum with kernel exp(sign*2*pi*i*n*k/S).

    Carries no 1/S scale; the caller applies the forward normalisation.
    Index products are reduced mod S exactly, as in the fast path.
    """
    v = np.asarray(values, dtype=np.complex128)
    S = v.size
    table = _twiddle_table(S, +1 if sign > 0 else -1)
    idx = (np.outer(np.arange(S), np.arange(S))) % S
    return table[idx] @ v
