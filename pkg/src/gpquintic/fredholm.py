"""Data kernel assembly, Fredholm determinants and the Marchenko solve.

For fixed ``x`` the kernel equation

    p(y+z+x) = g(y,z) + int_{-L/2}^0 g(y,s) q(s,z) ds

is discretised by a quadrature rule on ``[-L/2, 0]``.  The unknowns for a
fixed ``y`` form a row vector acted on from the right by ``Id + W Q``, so
every ``y`` shares one factorisation.  Values at ``z = 0`` (and the trace
value ``g(0,0)``) follow by Nystrom interpolation.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .hankel import CompanionVariant, companion_field, hankel_sample, require_compatible
from .quintic import SolutionField
from .spectral import (
    DispersionCoefficients,
    ScatteringField,
    check_dispersion_property,
    evolve_scattering,
)

log = logging.getLogger(__name__)

SINGULARITY_THRESHOLD = 1e-8


class NearSingularOperator(ArithmeticError):
    """``|det(Id + Q)|`` fell below the singularity threshold."""

    def __init__(self, det, x=None, t=None):
        self.det = det
        self.x = x
        self.t = t
        where = []
        if x is not None:
            where.append(f"x={x:.6g}")
        if t is not None:
            where.append(f"t={t:.6g}")
        loc = f" at {', '.join(where)}" if where else ""
        super().__init__(f"|det(Id+Q)| = {abs(det):.3e} below {SINGULARITY_THRESHOLD:g}{loc}")


def quadrature(L: float, n_quad: int, rule: str = "left") -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[-L/2, 0]``.

    ``left``: left-hand Riemann sum, ``n_quad`` nodes excluding 0.
    ``trapezoid``: ``n_quad + 1`` nodes including both endpoints.
    """
    h = 0.5 * L / n_quad
    if rule == "left":
        nodes = -0.5 * L + h * np.arange(n_quad)
        return nodes, np.full(n_quad, h)
    if rule == "trapezoid":
        nodes = -0.5 * L + h * np.arange(n_quad + 1)
        w = np.full(n_quad + 1, h)
        w[0] = w[-1] = 0.5 * h
        return nodes, w
    raise ValueError(f"unknown quadrature rule {rule!r}")


def _block_matrix(blocks: np.ndarray) -> np.ndarray:
    """``(m, n, a, b)`` block array to an ``(m*a, n*b)`` matrix."""
    m, n, a, b = blocks.shape
    return blocks.transpose(0, 2, 1, 3).reshape(m * a, n * b)


def _blocks(matrix: np.ndarray, a: int, b: int) -> np.ndarray:
    m, n = matrix.shape[0] // a, matrix.shape[1] // b
    return matrix.reshape(m, a, n, b).transpose(0, 2, 1, 3)


@dataclass(frozen=True, eq=False)
class DataKernel:
    """Discretised ``q(y, z; x, t)`` at the quadrature nodes plus ``y, z = 0``.

    ``matrix`` is the ``((n+1) d2, (n+1) d2)`` block matrix whose last block
    row/column corresponds to the evaluation point 0.
    """

    x: float
    t: float
    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    block: int

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def h(self) -> float:
        return float(self.weights[1])

    @property
    def node_matrix(self) -> np.ndarray:
        k = self.n * self.block
        return self.matrix[:k, :k]

    @property
    def entries(self) -> np.ndarray:
        """``q(y_i, z_j)`` blocks over node pairs, shape ``(n, n, d2, d2)``."""
        return _blocks(self.node_matrix, self.block, self.block)

    def weighted(self) -> np.ndarray:
        """``W Q`` restricted to the nodes (row ``k`` scaled by ``w_k``)."""
        w = np.repeat(self.weights, self.block)
        return w[:, None] * self.node_matrix


def _hankel_grid(p: ScatteringField, nodes_ext: np.ndarray, x: float) -> np.ndarray:
    return hankel_sample(p, nodes_ext[:, None] + nodes_ext[None, :] + x)


def assemble_data_kernel(p: ScatteringField, pt: ScatteringField, x: float,
                         rule: str = "left") -> DataKernel:
    """``q(y,z) = sum_s w_s pt(y+s+x) p(s+z+x)`` on nodes extended by 0."""
    d1, d2 = p.block_shape
    if pt.block_shape != (d2, d1):
        raise ValueError(
            f"incommensurate blocks: p is {p.block_shape}, companion is {pt.block_shape}"
        )
    nodes, w = quadrature(p.grid.L, p.grid.n_quad, rule)
    n = len(nodes)
    ext = np.append(nodes, 0.0)
    H = _hankel_grid(p, ext, x)
    Ht = H if pt is p else _hankel_grid(pt, ext, x)
    left = _block_matrix(Ht[:, :n] * w[None, :, None, None])
    right = _block_matrix(H[:n, :])
    return DataKernel(float(x), p.time, nodes, w, left @ right, d2)


def _lu_det(lu: np.ndarray, piv: np.ndarray) -> complex:
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    return complex((-1) ** swaps * np.prod(np.diag(lu)))


def fredholm_determinant(q: DataKernel, order: int = 1) -> complex:
    """``det(Id + W Q)``; order 2 multiplies by ``exp(-trace(W Q))``."""
    if order not in (1, 2):
        raise ValueError(f"determinant order must be 1 or 2, got {order}")
    wq = q.weighted()
    det1 = complex(np.linalg.det(np.eye(wq.shape[0]) + wq))
    if order == 1:
        return det1
    return det1 * np.exp(-np.trace(wq))


@dataclass(frozen=True, eq=False)
class KernelSolution:
    """Solution of one discretised kernel equation at fixed ``x``.

    ``g_rows[i, k]`` holds ``g(y_i, s_k)`` for evaluation points ``y_i``
    (the nodes followed by 0 when ``full``, else 0 only) and nodes ``s_k``;
    ``g_zero[i]`` holds ``g(y_i, 0)``.
    """

    x: float
    t: float
    g_rows: np.ndarray
    g_zero: np.ndarray
    det1: complex
    residual: float

    @property
    def trace(self) -> np.ndarray:
        """``g(0, 0; x, t)``."""
        return self.g_zero[-1]

    @property
    def trace_row(self) -> np.ndarray:
        """``g(0, s_k)`` over the nodes."""
        return self.g_rows[-1]

    @property
    def nodes_block(self) -> np.ndarray:
        """``g(y_i, z_j)`` over node pairs (only with ``full``)."""
        n = self.g_rows.shape[1]
        if self.g_rows.shape[0] != n + 1:
            raise ValueError("solution was computed for the trace row only")
        return self.g_rows[:n]


def solve_marchenko(p: ScatteringField, q: DataKernel, x: float | None = None, *,
                    full: bool = True) -> KernelSolution:
    """Solve ``g (Id + W Q) = p`` row-wise for one ``x``.

    Raises ``NearSingularOperator`` when ``|det(Id + W Q)|`` drops below
    ``SINGULARITY_THRESHOLD``.
    """
    x = q.x if x is None else float(x)
    d1, d2 = p.block_shape
    if d2 != q.block:
        raise ValueError(f"kernel blocks are {q.block}x{q.block}, p has {d2} columns")
    n = q.n
    wq = q.weighted()
    M = np.eye(n * d2, dtype=complex) + wq
    with warnings.catch_warnings():
        # exact singularity is reported below via the determinant
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    det1 = _lu_det(lu, piv)
    if not abs(det1) >= SINGULARITY_THRESHOLD:
        raise NearSingularOperator(det1, x, q.t)

    ext = np.append(q.nodes, 0.0)
    rows = ext if full else ext[-1:]
    H = hankel_sample(p, rows[:, None] + ext[None, :] + x)  # (r, n+1, d1, d2)
    P = _block_matrix(H[:, :n])
    G = scipy.linalg.lu_solve((lu, piv), P.T, trans=1, check_finite=False).T

    scale = np.linalg.norm(P)
    residual = float(np.linalg.norm(G @ M - P) / scale) if scale > 0 else float(np.linalg.norm(G))

    # Nystrom value at z = 0
    w = np.repeat(q.weights, d2)
    q_col = q.matrix[: n * d2, n * d2:]
    g_zero = H[:, n] - _blocks(G @ (w[:, None] * q_col), d1, d2)[:, 0]
    return KernelSolution(x, q.t, _blocks(G, d1, d2), g_zero, det1, residual)


def _map(fn, items, workers: int | None):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


@dataclass(frozen=True, eq=False)
class PointSolve:
    g: np.ndarray
    gt: np.ndarray | None
    det1: complex
    residual: float
    trace_row: np.ndarray


def solve_at_x(p: ScatteringField, pt: ScatteringField, x: float, *, rule: str = "left",
               companion: bool = True) -> PointSolve:
    """Both kernel equations at one ``x``: ``g`` from ``Q = P~P``, ``g~`` from ``Q~ = PP~``."""
    sol = solve_marchenko(p, assemble_data_kernel(p, pt, x, rule), x, full=False)
    gt = None
    if companion:
        gt = solve_marchenko(pt, assemble_data_kernel(pt, p, x, rule), x, full=False).trace
    return PointSolve(sol.trace, gt, sol.det1, sol.residual, sol.trace_row)


def gp_solution_at_time(p0: ScatteringField, t: float, v: CompanionVariant,
                        c: DispersionCoefficients, *, rule: str = "left",
                        workers: int | None = None, solve_companion: bool = True) -> SolutionField:
    """Nonlinear solution ``g(0,0;x,t)`` on the whole x-grid at a single time.

    Propagates ``p`` and its companion directly to ``t``, then solves one
    dense kernel equation per grid point.  The companion ``g~`` is obtained
    from its own kernel equation; with ``solve_companion=False`` the adjoint
    variants instead use ``+-g^dagger``.
    """
    v = CompanionVariant.parse(v)
    if not check_dispersion_property(c):
        raise ValueError(f"coefficients {c} do not satisfy the dispersion property")
    require_compatible(v, c)
    p = evolve_scattering(p0, t, c)
    pt = companion_field(p0, t, v, c)
    xs = p0.grid.x
    use_solve = solve_companion or v.is_transpose

    def one(x):
        try:
            return solve_at_x(p, pt, x, rule=rule, companion=use_solve)
        except NearSingularOperator as err:
            raise NearSingularOperator(err.det, x, t) from None

    results = _map(one, xs, workers)
    g = np.stack([r.g for r in results])
    if use_solve:
        gt = np.stack([r.gt for r in results])
    else:
        sign = -1.0 if v is CompanionVariant.NEGATED_ADJOINT else 1.0
        gt = sign * np.conj(np.swapaxes(g, 1, 2))
    det1 = np.array([r.det1 for r in results])
    residual = np.array([r.residual for r in results])
    sol = SolutionField.from_profiles(g, gt, p0.time + t, p0.grid, det1=det1, residual=residual)
    log.debug("gp solve t=%g: min|det|=%.4g max residual=%.2e", t, np.abs(det1).min(), residual.max())
    return sol


def determinants_at_time(p0: ScatteringField, t: float, v: CompanionVariant,
                         c: DispersionCoefficients, *, rule: str = "left") -> np.ndarray:
    """``det(Id + W Q)`` over the x-grid at time ``t`` without solving for ``g``."""
    v = CompanionVariant.parse(v)
    require_compatible(v, c)
    p = evolve_scattering(p0, t, c)
    pt = companion_field(p0, t, v, c)
    return np.array([fredholm_determinant(assemble_data_kernel(p, pt, x, rule)) for x in p0.grid.x])
