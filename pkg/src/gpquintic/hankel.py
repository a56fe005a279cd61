"""Scattering data, its companion, and Hankel kernel sampling."""

from __future__ import annotations

import enum

import numpy as np

from .spectral import DispersionCoefficients, ScatteringField, evolve_scattering

# Fractional grid offsets below this are treated as exact nodes.
_NODE_SNAP = 1e-9


class CompanionVariant(enum.Enum):
    """Rule producing the companion data ``p~`` from ``p``."""

    ADJOINT = "adjoint"
    NEGATED_ADJOINT = "negated-adjoint"
    REVERSE_SPACE_TIME_TRANSPOSE = "reverse-space-time-transpose"
    REVERSE_TIME_TRANSPOSE = "reverse-time-transpose"

    @classmethod
    def parse(cls, name: "str | CompanionVariant") -> "CompanionVariant":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {
            "dagger": cls.ADJOINT,
            "negated": cls.NEGATED_ADJOINT,
            "rst": cls.REVERSE_SPACE_TIME_TRANSPOSE,
            "rt": cls.REVERSE_TIME_TRANSPOSE,
        }
        if key in aliases:
            return aliases[key]
        for v in cls:
            if v.value == key:
                return v
        raise ValueError(f"unknown companion variant {name!r}; choose from {[v.value for v in cls]}")

    @property
    def is_transpose(self) -> bool:
        return self in (CompanionVariant.REVERSE_SPACE_TIME_TRANSPOSE,
                        CompanionVariant.REVERSE_TIME_TRANSPOSE)

    @property
    def reflects_space(self) -> bool:
        return self is CompanionVariant.REVERSE_SPACE_TIME_TRANSPOSE


def require_compatible(v: CompanionVariant, c: DispersionCoefficients) -> None:
    """Transpose companions are only consistent when ``mu3 == 0``."""
    if v.is_transpose and c.mu3 != 0:
        raise ValueError(f"variant {v.value!r} requires mu3 = 0, got mu3 = {c.mu3}")


def reflect(samples: np.ndarray) -> np.ndarray:
    """Samples of ``f(-x)``: index ``j`` maps to ``(n_x - j) mod n_x``."""
    n = samples.shape[0]
    return samples[(-np.arange(n)) % n]


def companion_samples(samples: np.ndarray, v: CompanionVariant) -> np.ndarray:
    """Apply the variant's block map at a single time.

    For the transpose variants this only transposes (and reflects, for the
    space-time one); the time reversal is the caller's business.
    """
    if v is CompanionVariant.ADJOINT:
        return np.conj(np.swapaxes(samples, 1, 2))
    if v is CompanionVariant.NEGATED_ADJOINT:
        return -np.conj(np.swapaxes(samples, 1, 2))
    out = np.swapaxes(samples, 1, 2)
    if v.reflects_space:
        out = reflect(out)
    return np.ascontiguousarray(out)


def companion_field(p0: ScatteringField, t: float, v: CompanionVariant,
                    c: DispersionCoefficients) -> ScatteringField:
    """Companion data ``p~(., t)`` generated from initial data ``p0``.

    Adjoint variants conjugate-transpose ``p(., t)``; the transpose variants
    use ``p(-x, -t)^T`` or ``p(x, -t)^T`` and so propagate backwards in time.
    """
    v = CompanionVariant.parse(v)
    require_compatible(v, c)
    if v.is_transpose:
        p = evolve_scattering(p0, -t, c)
    else:
        p = evolve_scattering(p0, t, c)
    return ScatteringField(companion_samples(p.samples, v), p0.time + t, p0.grid)


def hankel_sample(p: ScatteringField, arg) -> np.ndarray:
    """Value of ``p`` at ``arg`` (scalar or array) with periodic wrapping.

    Off-grid arguments are linearly interpolated between neighbouring nodes.
    Returns blocks with shape ``arg.shape + block_shape``.
    """
    grid = p.grid
    arg = np.asarray(arg, dtype=float)
    pos = ((arg + 0.5 * grid.L) / grid.dx) % grid.n_x
    i0 = np.floor(pos)
    frac = pos - i0
    near_next = frac > 1.0 - _NODE_SNAP
    i0 = np.where(near_next, i0 + 1, i0).astype(np.int64) % grid.n_x
    frac = np.where(near_next | (frac < _NODE_SNAP), 0.0, frac)
    s = p.samples
    out = s[i0]
    if np.any(frac):
        f = frac[..., None, None]
        out = (1.0 - f) * out + f * s[(i0 + 1) % grid.n_x]
    return out
