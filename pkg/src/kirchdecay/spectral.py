"""Finite spectral representation of a nonnegative self-adjoint operator.

The operator A is carried as its (truncated) spectrum 0 <= lam_1 <= ... <= lam_N
in an eigenbasis of the underlying Hilbert space.  Every norm and inner product
used by the energy functionals reduces to a weighted sum over eigencoordinates,
which makes the truncation exact for finitely supported data: modes that start
at zero stay at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionMismatchError(ValueError):
    """Vector length does not match the operator's spectrum length."""


@dataclass(frozen=True)
class SpectralOperator:
    """Operator A as a finite nonnegative spectrum, sorted ascending.

    ``nu`` is the coercivity constant: the smallest eigenvalue.  A spectrum
    containing 0 models a genuinely noncoercive operator; spectra accumulating
    at 0 (e.g. lam_k = 1/k^2) model noncoercive behavior transiently, since any
    finite truncation has nu = lam_1 > 0.
    """

    eigenvalues: np.ndarray
    nu: float = field(init=False)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("spectrum must be a nonempty 1-D sequence")
        if np.any(lam < 0.0) or not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite and nonnegative")
        lam = np.sort(lam)
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "nu", float(lam[0]))

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def _check(self, *vectors: np.ndarray) -> list[np.ndarray]:
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=float)
            if arr.shape != (self.dim,):
                raise DimensionMismatchError(
                    f"vector of shape {arr.shape} does not match spectrum of size {self.dim}"
                )
            out.append(arr)
        return out


def norm_alpha(op: SpectralOperator, u: np.ndarray, alpha: float) -> float:
    """|A^alpha u| = sqrt(sum_k lam_k^(2 alpha) u_k^2).

    Convention 0^0 = 1, so alpha = 0 returns the plain norm |u| even on a
    kernel mode.
    """
    (u,) = op._check(u)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0.0:
        return float(np.sqrt(np.dot(u, u)))
    weights = op.eigenvalues ** (2.0 * alpha)
    return float(np.sqrt(np.dot(weights, u * u)))


def inner_Au_v(op: SpectralOperator, u: np.ndarray, v: np.ndarray) -> float:
    """<Au, v> = sum_k lam_k u_k v_k.  Symmetric; <Au, u> = |A^(1/2)u|^2."""
    u, v = op._check(u, v)
    return float(np.dot(op.eigenvalues, u * v))


def coercivity(op: SpectralOperator) -> float:
    """nu = inf <Ax,x>/|x|^2 over the truncated spectrum, i.e. the minimum
    eigenvalue.  Zero iff a zero eigenvalue is present."""
    return op.nu
