"""Quintic right-hand side and the PDE residual of a computed solution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import DispersionCoefficients, GridConfig, spectral_derivative


@dataclass(frozen=True, eq=False)
class SolutionField:
    """``g(0,0;x,t)`` and its companion over the x-grid, with x-derivatives.

    ``g`` has shape ``(n_x, d1, d2)`` and ``gt`` has shape ``(n_x, d2, d1)``.
    """

    g: np.ndarray
    gt: np.ndarray
    t: float
    grid: GridConfig
    det1: np.ndarray | None = None
    residual: np.ndarray | None = None
    derivs: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_profiles(cls, g, gt, t, grid, **extra) -> "SolutionField":
        g = np.asarray(g, dtype=complex)
        gt = np.asarray(gt, dtype=complex)
        if g.ndim == 1:
            g = g[:, None, None]
        if gt.ndim == 1:
            gt = gt[:, None, None]
        if g.shape[0] != grid.n_x or gt.shape[0] != grid.n_x:
            raise ValueError("solution arrays must have length n_x")
        return cls(g, gt, float(t), grid, **extra)

    def _d(self, name: str, arr: np.ndarray, order: int) -> np.ndarray:
        if name not in self.derivs:
            self.derivs[name] = spectral_derivative(arr, order, self.grid)
        return self.derivs[name]

    @property
    def dg(self):
        return self._d("dg", self.g, 1)

    @property
    def d2g(self):
        return self._d("d2g", self.g, 2)

    @property
    def d3g(self):
        return self._d("d3g", self.g, 3)

    @property
    def d4g(self):
        return self._d("d4g", self.g, 4)

    @property
    def dgt(self):
        return self._d("dgt", self.gt, 1)

    @property
    def d2gt(self):
        return self._d("d2gt", self.gt, 2)

    @property
    def scalar(self) -> np.ndarray:
        return self.g[:, 0, 0]


def _check_shapes(g, gt):
    if g.shape[0] != gt.shape[0] or g.shape[1:] != gt.shape[1:][::-1]:
        raise ValueError(f"incommensurate blocks: g {g.shape[1:]} vs companion {gt.shape[1:]}")


def quintic_terms(g, gt, dg, dgt, d2g, d2gt) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three coefficient groups of the nonlinearity, pointwise in x.

    Returns ``(cubic2, cubic3, quartic)`` such that the right-hand side is
    ``2 mu2 cubic2 + 3 mu3 cubic3 + 2 mu4 quartic``.  The last group holds
    both the degree-three ``mu4`` terms and the quintic term.
    """
    _check_shapes(g, gt)
    mm = np.matmul
    ggt = mm(g, gt)
    ggtg = mm(ggt, g)
    cubic2 = ggtg
    cubic3 = mm(mm(dg, gt), g) + mm(ggt, dg)
    quartic = (2 * mm(mm(d2g, gt), g)
               + mm(mm(g, d2gt), g)
               + 2 * mm(ggt, d2g)
               + mm(mm(dg, dgt), g)
               + 3 * mm(mm(dg, gt), dg)
               + mm(mm(g, dgt), dg)
               + 3 * mm(mm(ggtg, gt), g))
    return cubic2, cubic3, quartic


def quintic_nonlinearity(g, gt, dg, dgt, d2g, d2gt, c: DispersionCoefficients) -> np.ndarray:
    """Non-commutative nonlinearity from raw block arrays (products in written order)."""
    cubic2, cubic3, quartic = quintic_terms(g, gt, dg, dgt, d2g, d2gt)
    return 2 * c.mu2 * cubic2 + 3 * c.mu3 * cubic3 + 2 * c.mu4 * quartic


def quintic_rhs(s: SolutionField, c: DispersionCoefficients) -> np.ndarray:
    return quintic_nonlinearity(s.g, s.gt, s.dg, s.dgt, s.d2g, s.d2gt, c)


@dataclass(frozen=True)
class ResidualReport:
    max_norm: float
    l2_norm: float
    pointwise: np.ndarray
    time_difference: np.ndarray
    linear: np.ndarray
    nonlinear: np.ndarray


def pde_residual(s_minus: SolutionField, s: SolutionField, s_plus: SolutionField,
                 delta: float, c: DispersionCoefficients, *, nonlinear: bool = True) -> ResidualReport:
    """Centered-difference residual of the quintic equation at ``s.t``.

    ``(g+ - g-)/(2 delta) - mu2 g'' - mu3 g''' - mu4 g'''' - rhs(g)``; the
    L2 norm uses the grid spacing as weight.  ``nonlinear=False`` drops the
    right-hand side (a check on the linear flow alone).
    """
    dt_g = (s_plus.g - s_minus.g) / (2.0 * delta)
    lin = c.mu2 * s.d2g + c.mu3 * s.d3g + c.mu4 * s.d4g
    rhs = quintic_rhs(s, c) if nonlinear else np.zeros_like(s.g)
    r = dt_g - lin - rhs
    pointwise = np.sqrt(np.sum(np.abs(r) ** 2, axis=(1, 2)))
    return ResidualReport(
        max_norm=float(pointwise.max()),
        l2_norm=float(np.sqrt(s.grid.dx * np.sum(pointwise**2))),
        pointwise=pointwise,
        time_difference=dt_g,
        linear=lin,
        nonlinear=rhs,
    )
