"""Band-limited interpolation: cutoff estimation, exact least-squares
reconstruction, and the iterative POCS variant.

The reconstruction model: a signal sampled on a vertex subset S is
interpolated by the unique band-limited signal (spectral support below a
cutoff omega) that fits the samples in the least-squares sense. The cutoff
that guarantees unique recovery comes from the smallest eigenvalue of the
square of the Laplacian restricted to the unsampled vertices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyUnknownSetError,
    NegativeEigenvalueError,
    NoBasisVectorsError,
    RankDeficientError,
)
from .graph import NormalizedLaplacian
from .spectral import (
    EigenBasis,
    apply_poly_filter,
    chebyshev_coeffs,
    eigendecompose,
    smoothed_lowpass,
)

# eigenvalues within this distance of the cutoff count as outside the band
CUTOFF_EXCLUSION = 1e-9

# negative eigenvalues of a PSD submatrix beyond this signal numerical failure
PSD_TOLERANCE = 1e-8


@dataclass(frozen=True)
class SampleSet:
    """Partition of vertices into a known set S (with values) and its complement."""

    n: int
    known: np.ndarray
    known_values: np.ndarray

    def __post_init__(self):
        known = np.asarray(self.known, dtype=np.int64)
        values = np.asarray(self.known_values, dtype=np.float64)
        if known.ndim != 1 or values.shape != known.shape:
            raise DimensionMismatchError("known and known_values must be 1-d and aligned")
        if len(known) == 0:
            raise ValueError("sample set S must be nonempty")
        if len(np.unique(known)) != len(known):
            raise ValueError("sample set S contains duplicates")
        if known.min() < 0 or known.max() >= self.n:
            raise ValueError(f"sample indices outside [0,{self.n})")
        object.__setattr__(self, "known", known)
        object.__setattr__(self, "known_values", values)

    @cached_property
    def unknown(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.known] = False
        return np.flatnonzero(mask)

    def f_du(self) -> np.ndarray:
        """Downsample-then-upsample signal: known values on S, zeros elsewhere."""
        out = np.zeros(self.n)
        out[self.known] = self.known_values
        return out


@dataclass(frozen=True)
class CutoffEstimate:
    omega: float
    sigma_min_sq: float
    k: int


@dataclass(frozen=True)
class StoppingRule:
    max_iters: int = 500
    tol: float = 1e-6


@dataclass(frozen=True)
class IterativeResult:
    """Outcome of an iterative solve. ``converged`` False is a warning, not an
    error; ``signal`` then holds the last iterate."""

    signal: np.ndarray
    iterations: int
    converged: bool
    rel_change: float


def count_in_band(lambdas: np.ndarray, omega: float) -> int:
    """Number of eigenvalues strictly below the cutoff (with exclusion margin)."""
    return int(np.sum(lambdas < omega - CUTOFF_EXCLUSION))


def min_unknown_eigenvalue(lap: NormalizedLaplacian, unknown: np.ndarray) -> float:
    """Smallest eigenvalue of the unknown-set submatrix of L^2.

    Formed as M^t M with M the unknown columns of L, so it is PSD by
    construction up to rounding.
    """
    if len(unknown) == 0:
        raise EmptyUnknownSetError("sample set covers all vertices")
    m = lap.matrix[:, unknown]
    sub = (m.T @ m).toarray()
    sub = 0.5 * (sub + sub.T)
    eigs = np.linalg.eigvalsh(sub)
    smallest = float(eigs[0])
    if smallest < -PSD_TOLERANCE:
        raise NegativeEigenvalueError(
            f"(L^2) submatrix produced eigenvalue {smallest}"
        )
    return max(smallest, 0.0)


def cutoff_frequency(
    lap: NormalizedLaplacian,
    samples: SampleSet,
    lambdas: Optional[np.ndarray] = None,
) -> CutoffEstimate:
    """Largest cutoff with guaranteed unique recovery from samples on S.

    ``lambdas`` may carry a precomputed spectrum of the Laplacian; when
    omitted it is computed densely to count the in-band eigenvalues.
    """
    sigma_min_sq = min_unknown_eigenvalue(lap, samples.unknown)
    omega = float(np.sqrt(sigma_min_sq))
    if lambdas is None:
        lambdas = np.linalg.eigvalsh(lap.toarray())
    return CutoffEstimate(
        omega=omega, sigma_min_sq=sigma_min_sq, k=count_in_band(lambdas, omega)
    )


def lsr(basis: EigenBasis, samples: SampleSet, omega: float) -> np.ndarray:
    """Exact least-squares band-limited reconstruction.

    Returns the full-length signal: the given values on S, and on the
    complement the unique band-limited least-squares interpolation. Solved
    by orthogonal factorization of the sampled basis columns rather than
    the normal equations.
    """
    if samples.n != basis.n:
        raise DimensionMismatchError(f"sample set n={samples.n} vs basis n={basis.n}")
    k = count_in_band(basis.lambdas, omega)
    if k == 0:
        raise NoBasisVectorsError(f"no eigenvalue below cutoff {omega}")
    uk_s = basis.U[samples.known, :k]
    alpha, _, rank, sv = np.linalg.lstsq(uk_s, samples.known_values, rcond=1e-10)
    if rank < k:
        raise RankDeficientError(
            f"sampled basis has rank {rank} < {k}; cutoff too large for this sample set"
        )
    out = np.empty(samples.n)
    out[samples.known] = samples.known_values
    out[samples.unknown] = basis.U[samples.unknown, :k] @ alpha
    return out


def ilsr(
    lap: NormalizedLaplacian,
    samples: SampleSet,
    omega: float,
    mode: str = "ideal",
    degree: int = 25,
    stop: Optional[StoppingRule] = None,
    basis: Optional[EigenBasis] = None,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> IterativeResult:
    """Iterative POCS reconstruction: alternately reset the samples on S to
    their given values and project onto the band-limited subspace.

    mode "ideal" projects exactly through the eigenbasis (computed on demand
    when not supplied); mode "poly" replaces the projector by a Chebyshev
    polynomial filter of the given degree, using only matrix-vector products.
    With the ideal projector the iterates converge to the least-squares
    reconstruction. ``callback(k, iterate)`` observes each projected iterate.
    """
    if samples.n != lap.n:
        raise DimensionMismatchError(f"sample set n={samples.n} vs laplacian n={lap.n}")
    if omega <= 0:
        raise ValueError(f"cutoff must be positive, got {omega}")
    stop = stop or StoppingRule()

    if mode == "ideal":
        if basis is None:
            basis = eigendecompose(lap)
        k = count_in_band(basis.lambdas, omega)
        if k == 0:
            raise NoBasisVectorsError(f"no eigenvalue below cutoff {omega}")
        uk = basis.U[:, :k]

        def project(x):
            return uk @ (uk.T @ x)

    elif mode == "poly":
        filt = chebyshev_coeffs(smoothed_lowpass(omega), degree)

        def project(x):
            return apply_poly_filter(lap, filt, x)

    else:
        raise ValueError(f"unknown filter mode {mode!r}")

    known, values = samples.known, samples.known_values
    f = project(samples.f_du())
    if callback is not None:
        callback(0, f)
    iterations = 0
    converged = False
    rel_change = np.inf
    for it in range(1, stop.max_iters + 1):
        g = f.copy()
        g[known] = values
        f_next = project(g)
        if callback is not None:
            callback(it, f_next)
        delta = np.linalg.norm(f_next - f)
        scale = np.linalg.norm(f)
        rel_change = delta / scale if scale > 0 else delta
        f = f_next
        iterations = it
        if rel_change <= stop.tol:
            converged = True
            break
    out = f.copy()
    out[known] = values  # hard data-consistency reset, regardless of filter leakage
    return IterativeResult(
        signal=out, iterations=iterations, converged=converged, rel_change=rel_change
    )
