"""Direct split-step Fourier solver used as the reference for the GP method.

One step is an exact linear phase followed by an explicit Euler step on the
transformed nonlinearity:

    v   = exp(dt d(K)) u
    u'  = v + dt F(Psi(F^-1 v, F^-1 K v, F^-1 K^2 v))
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .fredholm import gp_solution_at_time
from .hankel import CompanionVariant, companion_samples
from .quintic import quintic_nonlinearity
from .spectral import (
    DispersionCoefficients,
    GridConfig,
    ScatteringField,
    dealias_mask,
    forward,
    fourier_multipliers,
    inverse,
    propagator_multipliers,
)


@dataclass(frozen=True, eq=False)
class StepperState:
    u_hat: np.ndarray
    dt: float
    grid: GridConfig
    step_count: int = 0
    t0: float = 0.0

    @property
    def t(self) -> float:
        return self.t0 + self.step_count * self.dt

    @property
    def physical(self) -> np.ndarray:
        return inverse(self.u_hat)


def nonlinear_term(v_hat: np.ndarray, grid: GridConfig, c: DispersionCoefficients,
                   v: CompanionVariant) -> np.ndarray:
    """``Psi`` in physical space from the Fourier-space field ``v_hat``.

    The companion is built from the current field: conjugate transpose for
    the adjoint variants, transpose of the reflected field for the nonlocal
    ones (time reversal cannot be realised by a forward stepper).  Its
    derivatives are taken spectrally from its own samples, as on the GP side.
    """
    ik = fourier_multipliers(grid)[:, None, None]
    g = inverse(v_hat)
    dg = inverse(ik * v_hat)
    d2g = inverse(ik**2 * v_hat)
    gt_hat = forward(companion_samples(g, v))
    gt = inverse(gt_hat)
    dgt = inverse(ik * gt_hat)
    d2gt = inverse(ik**2 * gt_hat)
    return quintic_nonlinearity(g, gt, dg, dgt, d2g, d2gt, c)


def splitstep_advance(state: StepperState, c: DispersionCoefficients, v: CompanionVariant, *,
                      nonlinear: bool = True, dealias: bool = False) -> StepperState:
    """One exact-phase plus explicit-Euler step."""
    if not state.dt > 0:
        raise ValueError(f"time step must be positive, got {state.dt}")
    v = CompanionVariant.parse(v)
    phase = propagator_multipliers(c, state.dt, fourier_multipliers(state.grid))[:, None, None]
    v_hat = phase * state.u_hat
    if nonlinear:
        psi_hat = forward(nonlinear_term(v_hat, state.grid, c, v))
        if dealias:
            psi_hat = psi_hat * dealias_mask(state.grid.n_x)[:, None, None]
        v_hat = v_hat + state.dt * psi_hat
    return replace(state, u_hat=v_hat, step_count=state.step_count + 1)


def splitstep_initial_data(p0: ScatteringField, v: CompanionVariant, dt: float = 1e-3,
                           c: DispersionCoefficients | None = None, **gp_kwargs) -> StepperState:
    """Stepper state from ``g0(0,0;x)`` computed by the Fredholm solve at t = 0.

    The propagation coefficients do not affect the t = 0 solve; ``c`` only
    has to satisfy the solver's preconditions.
    """
    v = CompanionVariant.parse(v)
    if c is None:
        c = DispersionCoefficients(-1j, 0.0, 1j) if v.is_transpose else DispersionCoefficients()
    g0 = gp_solution_at_time(p0, 0.0, v, c, solve_companion=False, **gp_kwargs)
    return StepperState(forward(g0.g), dt, p0.grid, 0, p0.time)


def integrate(state: StepperState, t_end: float, c: DispersionCoefficients, v: CompanionVariant,
              *, checkpoints=(), nonlinear: bool = True, dealias: bool = False,
              callback=None) -> StepperState:
    """Step until ``t_end``; ``callback(state)`` fires at each checkpoint time.

    Checkpoints are rounded to the nearest whole step.
    """
    n_end = int(round((t_end - state.t0) / state.dt))
    marks = sorted({int(round((tc - state.t0) / state.dt)) for tc in checkpoints})
    marks = [m for m in marks if 0 <= m <= n_end]
    if callback and state.step_count in marks:
        callback(state)
    while state.step_count < n_end:
        state = splitstep_advance(state, c, v, nonlinear=nonlinear, dealias=dealias)
        if callback and state.step_count in marks:
            callback(state)
    return state
