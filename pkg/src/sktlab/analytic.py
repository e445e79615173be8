"""Trigonometric-polynomial fields with exact derivatives.

Used wherever an identity or a manufactured solution must be checked
without discretization error: the fields are c0 + sum_k c_k cos(k pi x / L),
which automatically satisfy the zero-flux condition at x = 0 and x = L.
"""

from __future__ import annotations

import numpy as np


class TrigPoly:
    """c0 + sum_{k>=1} c_k cos(k pi x / L) with closed-form derivatives."""

    def __init__(self, coeffs, length: float = 1.0):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.length = float(length)

    def _freqs(self):
        return np.arange(self.coeffs.size) * np.pi / self.length

    def val(self, x):
        x = np.asarray(x, dtype=float)
        k = self._freqs()
        return np.cos(np.outer(x, k)) @ self.coeffs

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        k = self._freqs()
        return -np.sin(np.outer(x, k)) @ (self.coeffs * k)

    def deriv2(self, x):
        x = np.asarray(x, dtype=float)
        k = self._freqs()
        return -np.cos(np.outer(x, k)) @ (self.coeffs * k * k)

    @classmethod
    def random(cls, rng, n_modes: int, base: float, amplitude: float,
               length: float = 1.0) -> "TrigPoly":
        """Random field base + perturbation, decaying mode amplitudes."""
        c = np.zeros(n_modes + 1)
        c[0] = base
        c[1:] = amplitude * rng.uniform(-1.0, 1.0, n_modes) / np.arange(1, n_modes + 1)
        return cls(c, length)
