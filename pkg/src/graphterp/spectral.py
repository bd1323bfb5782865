"""Spectral machinery: eigenbasis, graph Fourier transform, ideal and
Chebyshev polynomial filters on the normalized Laplacian.

Graph frequencies always live in [0, 2] because the Laplacian is the
symmetric normalized one; every kernel and polynomial here is defined on
that fixed interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceFailureError, DimensionMismatchError
from .graph import NormalizedLaplacian

DENSE_EIGENSOLVER_LIMIT = 2000

# grid used to bound kernels on [0, 2] (step bound for beta, approximation checks)
KERNEL_GRID = np.linspace(0.0, 2.0, 2001)


@dataclass(frozen=True)
class EigenBasis:
    """Eigendecomposition of a normalized Laplacian.

    ``lambdas`` ascending in [0, 2], ``U`` orthonormal columns; column i is
    the eigenvector of lambdas[i]. Signs follow the convention that the
    first nonzero component of each eigenvector is positive.
    """

    lambdas: np.ndarray
    U: np.ndarray

    @property
    def n(self) -> int:
        return len(self.lambdas)


@dataclass(frozen=True)
class SpectralKernel:
    """Real-valued spectral response h(lambda) on [0, 2] plus a descriptor tag."""

    fn: Callable[[np.ndarray], np.ndarray]
    tag: str

    def __call__(self, lam) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(lam, dtype=np.float64)))

    def max_abs(self) -> float:
        """Largest |h| over a fine grid on [0, 2]."""
        return float(np.max(np.abs(self(KERNEL_GRID))))


def ideal_lowpass(omega: float) -> SpectralKernel:
    """Brick-wall low pass: 1 for lambda < omega, 0 otherwise."""
    return SpectralKernel(
        fn=lambda lam: (lam < omega).astype(np.float64),
        tag=f"ideal-lowpass({omega!r})",
    )


def ideal_highpass(omega: float) -> SpectralKernel:
    """Complement of the ideal low pass (the I - P response)."""
    return SpectralKernel(
        fn=lambda lam: (lam >= omega).astype(np.float64),
        tag=f"ideal-highpass({omega!r})",
    )


def smoothed_lowpass(omega: float, transition: float = 0.1) -> SpectralKernel:
    """Low pass with a raised-cosine transition band of half-width
    ``transition`` centered at omega.

    Used for polynomial approximation, where a hard step would ring.
    """

    def fn(lam):
        lam = np.asarray(lam, dtype=np.float64)
        lo, hi = omega - transition, omega + transition
        out = np.where(lam <= lo, 1.0, 0.0)
        band = (lam > lo) & (lam < hi)
        out = np.where(
            band, 0.5 * (1.0 + np.cos(np.pi * (lam - lo) / (2.0 * transition))), out
        )
        return out

    return SpectralKernel(fn=fn, tag=f"smoothed-lowpass({omega!r},{transition!r})")


def exp_highpass() -> SpectralKernel:
    """High-pass kernel h(lambda) = exp(-1/lambda), continued with h(0) = 0."""

    def fn(lam):
        lam = np.asarray(lam, dtype=np.float64)
        safe = np.where(lam > 0, lam, 1.0)
        return np.where(lam > 0, np.exp(-1.0 / safe), 0.0)

    return SpectralKernel(fn=fn, tag="exp-highpass")


def custom_kernel(fn: Callable, tag: str = "custom") -> SpectralKernel:
    return SpectralKernel(fn=fn, tag=tag)


def squared(kernel: SpectralKernel) -> SpectralKernel:
    """Kernel with response h(lambda)^2 (the H^t H composite)."""
    return SpectralKernel(fn=lambda lam: kernel(lam) ** 2, tag=f"squared({kernel.tag})")


def eigendecompose(lap: NormalizedLaplacian) -> EigenBasis:
    """Dense symmetric eigendecomposition with a deterministic sign convention.

    Intended for desk-scale graphs (n <= 2000); larger graphs should go
    through the polynomial filter path instead.
    """
    if lap.n > DENSE_EIGENSOLVER_LIMIT:
        raise ValueError(
            f"dense eigendecomposition capped at n={DENSE_EIGENSOLVER_LIMIT}, "
            f"got n={lap.n}; use polynomial filtering"
        )
    try:
        lambdas, U = np.linalg.eigh(lap.toarray())
    except np.linalg.LinAlgError as exc:  # pragma: no cover - not seen in practice
        raise ConvergenceFailureError(str(exc)) from exc
    U = U.copy()
    for k in range(U.shape[1]):
        col = U[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if len(nz) and col[nz[0]] < 0:
            U[:, k] = -col
    return EigenBasis(lambdas=lambdas, U=U)


def gft(basis: EigenBasis, f: np.ndarray) -> np.ndarray:
    """Graph Fourier transform: coefficients <f, u_i>."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (basis.n,):
        raise DimensionMismatchError(f"signal shape {f.shape} vs n={basis.n}")
    return basis.U.T @ f


def igft(basis: EigenBasis, fhat: np.ndarray) -> np.ndarray:
    """Inverse graph Fourier transform."""
    fhat = np.asarray(fhat, dtype=np.float64)
    if fhat.shape != (basis.n,):
        raise DimensionMismatchError(f"coefficients shape {fhat.shape} vs n={basis.n}")
    return basis.U @ fhat


def apply_ideal_filter(
    basis: EigenBasis, kernel: SpectralKernel, f: np.ndarray
) -> np.ndarray:
    """Filter exactly in the spectral domain: coefficient i scales by h(lambda_i)."""
    return igft(basis, kernel(basis.lambdas) * gft(basis, f))


@dataclass(frozen=True)
class ChebyshevFilter:
    """Truncated Chebyshev expansion of a spectral kernel on [0, 2].

    coeffs[k] multiplies T_k(lambda - 1); applying the filter equals acting
    with p(L) for the polynomial p these coefficients define.
    """

    coeffs: np.ndarray
    tag: str = "custom"

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, lam) -> np.ndarray:
        """p(lambda) on scalars or arrays via the three-term recurrence."""
        y = np.asarray(lam, dtype=np.float64) - 1.0
        t_prev = np.ones_like(y)
        acc = self.coeffs[0] * t_prev
        if self.degree >= 1:
            t_cur = y.copy()
            acc = acc + self.coeffs[1] * t_cur
            for k in range(2, self.degree + 1):
                t_prev, t_cur = t_cur, 2.0 * y * t_cur - t_prev
                acc = acc + self.coeffs[k] * t_cur
        return acc

    def to_text(self) -> str:
        body = " ".join(repr(float(c)) for c in self.coeffs)
        return f"{self.tag}\t{self.degree}\t{body}"

    @classmethod
    def from_text(cls, text: str) -> "ChebyshevFilter":
        tag, degree, body = text.strip().split("\t")
        coeffs = np.array([float(tok) for tok in body.split()])
        if len(coeffs) != int(degree) + 1:
            raise ValueError("coefficient count does not match declared degree")
        return cls(coeffs=coeffs, tag=tag)


def chebyshev_coeffs(kernel: SpectralKernel, degree: int) -> ChebyshevFilter:
    """Chebyshev series of ``kernel`` on [0, 2], truncated at ``degree``.

    Coefficients come from Gauss-Chebyshev quadrature of the Chebyshev inner
    products with 4 (degree + 1) nodes, spectrally accurate for smooth kernels.
    """
    if degree < 1:
        raise ValueError(f"degree must be >= 1, got {degree}")
    nq = 4 * (degree + 1)
    theta = np.pi * (np.arange(nq) + 0.5) / nq
    vals = kernel(np.cos(theta) + 1.0)  # nodes mapped from [-1,1] to [0,2]
    coeffs = np.empty(degree + 1)
    coeffs[0] = vals.mean()
    for k in range(1, degree + 1):
        coeffs[k] = (2.0 / nq) * np.dot(vals, np.cos(k * theta))
    return ChebyshevFilter(coeffs=coeffs, tag=kernel.tag)


def apply_poly_filter(
    lap: NormalizedLaplacian, filt: ChebyshevFilter, f: np.ndarray
) -> np.ndarray:
    """Apply p(L) f through the shifted three-term recurrence.

    Only matrix-vector products with L are used; no eigendecomposition.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (lap.n,):
        raise DimensionMismatchError(f"signal shape {f.shape} vs n={lap.n}")
    # recurrence in the shifted variable y = lambda - 1, operator L - I
    t_prev = f
    acc = filt.coeffs[0] * t_prev
    if filt.degree >= 1:
        t_cur = lap.matvec(f) - f
        acc = acc + filt.coeffs[1] * t_cur
        for k in range(2, filt.degree + 1):
            t_next = 2.0 * (lap.matvec(t_cur) - t_cur) - t_prev
            t_prev, t_cur = t_cur, t_next
            acc = acc + filt.coeffs[k] * t_cur
    return acc
