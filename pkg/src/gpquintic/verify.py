"""Numerical checks of the operator identities and the two-solver comparison.

Every check returns an :class:`IdentityReport` holding the error at each
refinement level and a least-squares convergence order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fredholm import (
    assemble_data_kernel,
    determinants_at_time,
    gp_solution_at_time,
    quadrature,
    solve_at_x,
    solve_marchenko,
)
from .hankel import CompanionVariant, companion_field, hankel_sample, require_compatible
from .spectral import (
    DispersionCoefficients,
    GridConfig,
    ScatteringField,
    evolve_scattering,
    forward,
    fourier_multipliers,
    inverse,
    propagate,
    spectral_derivative,
)
from .quintic import pde_residual
from .splitstep import integrate, splitstep_initial_data

Profile = Callable[[np.ndarray], np.ndarray]


def estimate_order(steps: Sequence[float], errors: Sequence[float]) -> float:
    """Slope of ``log(error)`` against ``log(step)`` by least squares."""
    steps = np.asarray(steps, float)
    errors = np.asarray(errors, float)
    if len(steps) < 2:
        raise ValueError("need at least two refinement levels for an order estimate")
    if np.any(errors <= 0):
        return float("nan")
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)


@dataclass
class IdentityReport:
    name: str
    params: dict
    steps: list
    errors: list
    expected_order: float | None = None
    order_tolerance: float = 0.3
    error_tolerance: float | None = None
    notes: str = ""
    extra: dict = field(default_factory=dict)
    conditions: dict = field(default_factory=dict)

    @property
    def order(self) -> float | None:
        if len(self.steps) < 2:
            return None
        return estimate_order(self.steps, self.errors)

    @property
    def passed(self) -> bool:
        ok = True
        if self.error_tolerance is not None:
            ok &= max(self.errors) <= self.error_tolerance
        if self.expected_order is not None:
            order = self.order
            ok &= order is not None and abs(order - self.expected_order) <= self.order_tolerance
        return bool(ok and all(self.conditions.values()))

    def summary(self) -> dict:
        order = self.order
        return {
            "name": self.name,
            "params": self.params,
            "steps": [float(s) for s in self.steps],
            "errors": [float(e) for e in self.errors],
            "order": None if order is None or np.isnan(order) else float(order),
            "expected_order": self.expected_order,
            "passed": self.passed,
            "conditions": {k: bool(v) for k, v in self.conditions.items()},
            "notes": self.notes,
        }

    def line(self) -> str:
        order = self.order
        o = "n/a" if order is None else f"{order:.3f}"
        errs = ", ".join(f"{e:.3e}" for e in self.errors)
        cond = "".join(f" {k}={'yes' if v else 'no'}" for k, v in self.conditions.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: errors [{errs}] order {o}{cond}"


def sample_profile(profile: Profile | ScatteringField, grid: GridConfig) -> ScatteringField:
    """Initial data on ``grid`` from a callable or by Fourier interpolation of a field."""
    if callable(profile):
        return ScatteringField(profile(grid.x), 0.0, grid)
    src = profile
    if src.grid.n_x == grid.n_x:
        return ScatteringField(src.samples, src.time, grid)
    n0, n1 = src.grid.n_x, grid.n_x
    if n1 < n0:
        raise ValueError("Fourier interpolation only refines")
    c0 = forward(src.samples)
    c1 = np.zeros((n1,) + c0.shape[1:], dtype=complex)
    half = n0 // 2
    c1[:half] = c0[:half]
    c1[-half + 1:] = c0[-half + 1:]
    # split the unpaired Nyquist mode symmetrically
    c1[half] = 0.5 * c0[half]
    c1[-half] = 0.5 * c0[half]
    return ScatteringField(inverse(c1) * (n1 / n0), src.time, grid)


def _rel(err: float, scale: float) -> float:
    return err / scale if scale > 0 else err


def gaussian_trig(a: float = 1.0, b: float = 1.0, shift: float = 0.0) -> Callable:
    return lambda w: np.exp(-a * (w - shift) ** 2) * np.cos(b * (w - shift))


def check_kernel_product_rule(h=None, hp=None, f=None, fp=None, x: float = 0.3, *,
                              L: float = 16.0, n_levels: Sequence[int] = (64, 128, 256),
                              y=(-1.0, -0.4, 0.0), z=(-1.3, -0.2, 0.0),
                              dx: float = 1e-4) -> IdentityReport:
    """Product rule for Hankel ``H, H'`` between general kernels ``F, F'``.

    The left side is a centered difference in ``x`` of the discretised triple
    composition ``F H H' F'``; the right side is ``[FH](y,0) [H'F'](0,z)``.
    Scalar kernels; ``f(y, s)`` and ``fp(s, z)`` take broadcast arrays.
    """
    h = h or gaussian_trig(0.5, 1.0, -1.0)
    hp = hp or gaussian_trig(0.3, 2.0, -1.5)
    f = f or (lambda a, b: np.exp(-0.25 * (a**2 + b**2)) * np.cos(a - 0.5 * b))
    fp = fp or (lambda a, b: np.exp(-0.3 * (a**2 + b**2)) * np.sin(a + b + 1.0))
    y = np.asarray(y, float)
    z = np.asarray(z, float)
    steps, errors = [], []
    for n in n_levels:
        s, w = quadrature(L, n, "left")
        F = f(y[:, None], s[None, :]) * w
        Fp = fp(s[:, None], z[None, :])

        def triple(xx):
            Hm = h(s[:, None] + s[None, :] + xx) * w
            Hpm = hp(s[:, None] + s[None, :] + xx) * w
            return F @ Hm @ Hpm @ Fp

        lhs = (triple(x + dx) - triple(x - dx)) / (2 * dx)
        left = F @ h(s + x)
        right = (hp(s + x) * w) @ Fp
        rhs = np.outer(left, right)
        steps.append(0.5 * L / n)
        errors.append(_rel(np.abs(lhs - rhs).max(), np.abs(rhs).max()))
    return IdentityReport("kernel product rule", {"x": x, "L": L, "dx": dx, "n_quad": list(n_levels)},
                          steps, errors, expected_order=1.0)


def quad_levels(base: GridConfig, levels: int = 3) -> list[GridConfig]:
    """``n_quad`` halved, as given, doubled, ... on a fixed x-grid."""
    first = base.n_quad // 2
    return [GridConfig(base.L, base.n_x, first * 2**i, base.d1, base.d2) for i in range(levels)]


def _resolve_grids(p0, grids):
    if grids is not None:
        return list(grids)
    base = p0.grid if isinstance(p0, ScatteringField) else GridConfig()
    return quad_levels(base)


def key_identity_profiles(p0: ScatteringField, t: float, v: CompanionVariant,
                          c: DispersionCoefficients, *, boundary_corrected: bool = False,
                          rule: str = "left"):
    """``(dD, g g~)`` over the grid where ``D = [P U P~](0,0;x)``.

    With ``boundary_corrected`` the window-edge term ``g(0,-L/2) g~(-L/2,0)``
    left over by truncating the half-line to ``[-L/2, 0]`` is added to the
    left side.
    """
    grid = p0.grid
    p = evolve_scattering(p0, t, c)
    pt = companion_field(p0, t, v, c)
    nodes, w = quadrature(grid.L, grid.n_quad, rule)
    D, rhs, edge = [], [], []
    for x in grid.x:
        ps = solve_at_x(p, pt, x, rule=rule)
        pt_col = hankel_sample(pt, nodes + x)  # p~(s + 0 + x)
        D.append(np.einsum("k,kab,kbc->ac", w, ps.trace_row, pt_col))
        rhs.append(ps.g @ ps.gt)
        if boundary_corrected:
            qt = assemble_data_kernel(pt, p, x, rule)
            gt_edge = solve_marchenko(pt, qt, x, full=True).g_zero[0]
            edge.append(ps.trace_row[0] @ gt_edge)
    D = np.stack(D)
    rhs = np.stack(rhs)
    dD = spectral_derivative(D, 1, grid)
    if boundary_corrected:
        dD = dD + np.stack(edge)
    return dD, rhs


def check_key_identity_i(p0: Profile | ScatteringField, t: float, v: CompanionVariant,
                         c: DispersionCoefficients, *, grids: Sequence[GridConfig] | None = None,
                         boundary_corrected: bool = False) -> IdentityReport:
    """``d/dx [P U P~](0,0) = g g~`` under ``n_quad`` refinement."""
    v = CompanionVariant.parse(v)
    require_compatible(v, c)
    grids = _resolve_grids(p0, grids)
    steps, errors = [], []
    for gr in grids:
        field0 = sample_profile(p0, gr)
        dD, rhs = key_identity_profiles(field0, t, v, c, boundary_corrected=boundary_corrected)
        steps.append(gr.h)
        errors.append(_rel(np.abs(dD - rhs).max(), np.abs(rhs).max()))
    name = "key identity (i)" + (" with window-edge term" if boundary_corrected else "")
    return IdentityReport(name, {"t": t, "variant": v.value, "n_quad": [gr.n_quad for gr in grids]},
                          steps, errors, expected_order=1.0)


def check_adjoint_pair(p0: Profile | ScatteringField, t: float, c: DispersionCoefficients, *,
                       grids: Sequence[GridConfig] | None = None) -> IdentityReport:
    """Independent solves for ``g`` and ``g~`` against ``g~ = g^dagger``."""
    grids = _resolve_grids(p0, grids)
    steps, errors = [], []
    for gr in grids:
        s = gp_solution_at_time(sample_profile(p0, gr), t, CompanionVariant.ADJOINT, c)
        diff = s.gt - np.conj(np.swapaxes(s.g, 1, 2))
        steps.append(gr.h)
        errors.append(_rel(np.abs(diff).max(), np.abs(s.g).max()))
    return IdentityReport("adjoint pair g~ = g^dagger", {"t": t, "n_quad": [g.n_quad for g in grids]},
                          steps, errors, expected_order=1.0)


def _shifted(p: ScatteringField, shift: float) -> ScatteringField:
    """Samples of ``p(x + shift)`` by an exact Fourier shift."""
    ik = fourier_multipliers(p.grid)[:, None, None]
    return p.with_samples(inverse(np.exp(ik * shift) * forward(p.samples)))


def check_inverse_operator_identity(p0: ScatteringField, t: float, v: CompanionVariant,
                                    c: DispersionCoefficients, x: float = 0.0,
                                    increments: Sequence[float] = (1e-2, 5e-3, 2.5e-3)) -> IdentityReport:
    """``U(x+e) - U(x) ~ -U (Q(x+e) - Q(x)) U`` with ``U = (Id + W Q)^-1``."""
    v = CompanionVariant.parse(v)
    p = evolve_scattering(p0, t, c)
    pt = companion_field(p0, t, v, c)

    def u_and_m(shift):
        q = assemble_data_kernel(_shifted(p, shift), _shifted(pt, shift), x)
        m = np.eye(q.n * q.block) + q.weighted()
        return np.linalg.inv(m), m

    U0, M0 = u_and_m(0.0)
    errors = []
    for e in increments:
        U1, M1 = u_and_m(e)
        dU = U1 - U0
        pred = -U0 @ (M1 - M0) @ U0
        errors.append(_rel(np.linalg.norm(dU - pred), np.linalg.norm(dU)))
    return IdentityReport("inverse operator identity dU = -U dQ U", {"t": t, "x": x},
                          list(increments), errors, expected_order=1.0)


def _scaled(p0, scale: float):
    if callable(p0):
        return lambda x: scale * p0(x)
    return p0.with_samples(scale * p0.samples)


def check_pde_residual(p0: Profile | ScatteringField, t: float, v: CompanionVariant,
                       c: DispersionCoefficients, *, deltas: Sequence[float] = (1e-2, 1e-3),
                       reference_delta: float = 1e-4, grids: Sequence[GridConfig] | None = None,
                       workers: int | None = None) -> IdentityReport:
    """Residual of the quintic equation for GP solutions at ``t +- delta``.

    Errors are those of the centered time difference against one taken with
    ``reference_delta`` on the finest grid; the expected order in ``delta``
    is 2.  The full residual norm is tabulated over ``grids x deltas`` and
    must decrease along both refinement directions.
    """
    v = CompanionVariant.parse(v)
    grids = _resolve_grids(p0, grids)
    table = []
    errors = []
    for i, gr in enumerate(grids):
        field0 = sample_profile(p0, gr)
        solve = lambda tt: gp_solution_at_time(field0, tt, v, c, workers=workers)
        mid = solve(t)
        row = []
        finest = i == len(grids) - 1
        diffs = {}
        for d in list(deltas) + ([reference_delta] if finest else []):
            lo, hi = solve(t - d), solve(t + d)
            rep = pde_residual(lo, mid, hi, d, c)
            diffs[d] = rep.time_difference
            if d in deltas:
                row.append(rep.l2_norm)
        table.append(row)
        if finest:
            ref = diffs[reference_delta]
            scale = np.abs(ref).max()
            errors = [_rel(np.abs(diffs[d] - ref).max(), scale) for d in deltas]
    table = np.array(table)
    along_delta = bool(np.all(np.diff(table, axis=1) < 0))
    along_grid = bool(np.all(np.diff(table, axis=0) < 0)) if len(grids) > 1 else True
    return IdentityReport(
        "PDE residual", {"t": t, "variant": v.value, "deltas": list(deltas),
                         "reference_delta": reference_delta, "n_quad": [g.n_quad for g in grids]},
        list(deltas), errors, expected_order=2.0,
        extra={"residual_l2": table.tolist()},
        conditions={"residual decreases in delta": along_delta,
                    "residual decreases in n_quad": along_grid},
    )


def check_companion_linear_pde(p0: ScatteringField, t: float, v: CompanionVariant,
                               c: DispersionCoefficients,
                               deltas: Sequence[float] = (1e-6, 5e-7, 2.5e-7)) -> IdentityReport:
    """Centered-difference residual of ``d/dt p~ = d~(d/dx) p~`` for the companion field.

    The companion obeys the linear flow with coefficients
    ``(-mu2, mu3, -mu4)``; the residual is relative to the max of the
    spectral right-hand side and should fall with order 2 in ``delta``.
    """
    v = CompanionVariant.parse(v)
    require_compatible(v, c)
    ct = c.tilde
    mid = companion_field(p0, t, v, c).samples
    grid = p0.grid
    rhs = sum(m * spectral_derivative(mid, k, grid) for k, m in ((2, ct.mu2), (3, ct.mu3), (4, ct.mu4)))
    scale = np.abs(rhs).max()
    errors = []
    for d in deltas:
        fd = (companion_field(p0, t + d, v, c).samples - companion_field(p0, t - d, v, c).samples) / (2 * d)
        errors.append(_rel(np.abs(fd - rhs).max(), scale))
    return IdentityReport("companion linear PDE", {"t": t, "variant": v.value},
                          list(deltas), errors, expected_order=2.0)


def check_small_amplitude(p0: Profile | ScatteringField, t: float, v: CompanionVariant,
                          c: DispersionCoefficients,
                          amplitudes: Sequence[float] = (1e-3, 5e-4, 2.5e-4),
                          workers: int | None = None) -> IdentityReport:
    """``g`` for ``eps p0`` against the linear evolution ``eps p(t)``.

    The first correction is cubic in ``eps``, so the absolute error should
    scale with order 3.
    """
    v = CompanionVariant.parse(v)
    base = p0 if isinstance(p0, ScatteringField) else sample_profile(p0, GridConfig())
    errors = []
    for eps in amplitudes:
        field0 = _scaled(base, eps)
        g = gp_solution_at_time(field0, t, v, c, workers=workers, solve_companion=False).g
        lin = evolve_scattering(field0, t, c).samples
        errors.append(float(np.abs(g - lin).max()))
    return IdentityReport("small-amplitude limit", {"t": t, "variant": v.value},
                          list(amplitudes), errors, expected_order=3.0,
                          extra={"scaled_errors": [e / a**3 for e, a in zip(errors, amplitudes)]})


@dataclass
class SolverComparison:
    times: list
    max_difference: list
    gp_profiles: list
    ss_profiles: list
    x: np.ndarray
    gp_det: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"times": [float(t) for t in self.times],
                "max_difference": [float(d) for d in self.max_difference]}


def compare_solvers(p0: ScatteringField, T: float, c: DispersionCoefficients,
                    v: CompanionVariant = CompanionVariant.ADJOINT, *, dt: float = 1e-3,
                    checkpoints: Sequence[float] | None = None, nonlinear: bool = True,
                    dealias: bool = False, workers: int | None = None) -> SolverComparison:
    """``max_x |g_GP - g_SS|`` at checkpoint times.

    With ``nonlinear=False`` the stepper runs its linear factor only and the
    GP side is the exact linear propagation of the same initial profile.
    """
    v = CompanionVariant.parse(v)
    if checkpoints is None:
        checkpoints = np.linspace(0.0, T, 6)
    state = splitstep_initial_data(p0, v, dt, c, workers=workers)
    g0 = inverse(state.u_hat)
    out = SolverComparison([], [], [], [], p0.grid.x)

    def record(st):
        if nonlinear:
            sol = gp_solution_at_time(p0, st.t, v, c, workers=workers, solve_companion=False)
            gp, det = sol.g, sol.det1
        else:
            gp, det = propagate(g0, st.t, c, p0.grid), None
        ss = st.physical
        out.times.append(st.t)
        out.max_difference.append(float(np.abs(gp - ss).max()))
        out.gp_profiles.append(gp)
        out.ss_profiles.append(ss)
        out.gp_det.append(det)

    integrate(state, T, c, v, checkpoints=checkpoints, nonlinear=nonlinear,
              dealias=dealias, callback=record)
    return out


@dataclass
class DeterminantSeries:
    times: list
    min_abs: list
    max_abs: list
    min_real: list
    max_abs_imag: list
    dets: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {k: [float(a) for a in getattr(self, k)]
                for k in ("times", "min_abs", "max_abs", "min_real", "max_abs_imag")}


def determinant_monitor(p0: ScatteringField, T: float, c: DispersionCoefficients,
                        v: CompanionVariant = CompanionVariant.ADJOINT, *,
                        checkpoints: Sequence[float] | None = None) -> DeterminantSeries:
    """Extremes over x of ``det(Id + Q(x, t))`` at each checkpoint."""
    v = CompanionVariant.parse(v)
    if checkpoints is None:
        checkpoints = np.linspace(0.0, T, 6)
    out = DeterminantSeries([], [], [], [], [])
    for t in checkpoints:
        det = determinants_at_time(p0, t, v, c)
        out.times.append(float(t))
        out.min_abs.append(float(np.abs(det).min()))
        out.max_abs.append(float(np.abs(det).max()))
        out.min_real.append(float(det.real.min()))
        out.max_abs_imag.append(float(np.abs(det.imag).max()))
        out.dets.append(det)
    return out
