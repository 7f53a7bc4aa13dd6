"""Uniform grids on ``[-L, L] x T^{d-1}`` with shared quadrature and stencils.

Fields are stored as ``(n, N2, N1)`` arrays: component, transverse index,
normal index. In one dimension ``N2 = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import TRANSVERSE_PERIOD


@dataclass(frozen=True)
class Grid:
    """Nodes ``x_j = -L + j dx`` (both ends included) and ``y_k = k dy``."""

    L: float
    N1: int
    N2: int = 1
    d: int = 1

    def __post_init__(self):
        if self.N1 < 8:
            raise ValueError("need at least 8 normal grid points")
        if self.d not in (1, 2):
            raise ValueError("only d = 1 or 2 is supported")
        if self.d == 1 and self.N2 != 1:
            raise ValueError("one-dimensional grids have N2 = 1")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.N1)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.N1 - 1)

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.N2) * self.dy

    @property
    def dy(self) -> float:
        return TRANSVERSE_PERIOD / self.N2

    def integrate(self, f) -> float | np.ndarray:
        """``int f dx dy``: trapezoid in ``x``, periodic rectangle rule in ``y``.

        ``f`` has trailing axes ``(N2, N1)`` or just ``(N1,)``.
        """
        f = np.asarray(f, dtype=float)
        fx = np.trapezoid(f, dx=self.dx, axis=-1)
        if f.ndim >= 2 and f.shape[-2] == self.N2:
            # in one dimension the single transverse row carries weight 1
            return np.sum(fx, axis=-1) * (self.dy if self.d == 2 else 1.0)
        return fx


def ddx(f, h: float, axis: int = -1) -> np.ndarray:
    """4th-order central first derivative, one-sided 4th order at the two ends."""
    y = np.moveaxis(np.asarray(f, dtype=float), axis, -1)
    out = np.empty_like(y)
    out[..., 2:-2] = (y[..., :-4] - 8 * y[..., 1:-3] + 8 * y[..., 3:-1] - y[..., 4:]) / (12 * h)
    # forward/backward 5-point formulas
    c0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12 * h)
    c1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / (12 * h)
    out[..., 0] = y[..., :5] @ c0
    out[..., 1] = y[..., :5] @ c1
    out[..., -1] = -(y[..., ::-1][..., :5] @ c0)
    out[..., -2] = -(y[..., ::-1][..., :5] @ c1)
    return np.moveaxis(out, -1, axis)


def ddy_periodic(f, h: float, axis: int = -2) -> np.ndarray:
    """4th-order central derivative on a periodic axis."""
    f = np.asarray(f, dtype=float)
    return (
        np.roll(f, 2, axis) - 8 * np.roll(f, 1, axis) + 8 * np.roll(f, -1, axis) - np.roll(f, -2, axis)
    ) / (12 * h)
