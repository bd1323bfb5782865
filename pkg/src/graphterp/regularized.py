"""Regularized interpolation: trade sample fidelity against high-frequency
energy instead of forcing an exactly band-limited answer.

The cost is ||J(f_du - x)||^2 + alpha ||H x||^2 with H a high-pass spectral
filter (default response exp(-1/lambda)). A closed-form linear solve and a
gradient-descent style iteration are both provided; the iteration admits a
polynomial filter so no eigendecomposition is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bandlimited import IterativeResult, SampleSet, StoppingRule
from .errors import (
    DimensionMismatchError,
    DivergenceDetectedError,
    SingularSystemError,
)
from .graph import NormalizedLaplacian
from .spectral import (
    EigenBasis,
    SpectralKernel,
    apply_poly_filter,
    chebyshev_coeffs,
    eigendecompose,
    exp_highpass,
    squared,
)


def default_beta(alpha: float, kernel: SpectralKernel) -> float:
    """Step size at half the stability limit of descent on the quadratic cost.

    The quadratic's operator norm is at most 1 + alpha * max h^2, so any
    beta below 2 / (1 + alpha * max h^2) converges; half of that is the
    standard safe choice.
    """
    return 1.0 / (1.0 + alpha * kernel.max_abs() ** 2)


@dataclass(frozen=True)
class RegConfig:
    """Parameters of the regularized solve.

    ``beta`` defaults to half the stability limit for the given alpha and
    kernel. Convergence requires beta < beta_limit(); larger values are
    accepted here so the iteration itself can flag them as divergent.
    """

    alpha: float
    beta: Optional[float] = None
    kernel: SpectralKernel = field(default_factory=exp_highpass)
    stop: StoppingRule = field(default_factory=StoppingRule)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.beta is None:
            object.__setattr__(self, "beta", 0.5 * self.beta_limit())
        elif self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    def beta_limit(self) -> float:
        """Step sizes below this bound are guaranteed to converge."""
        return 2.0 / (1.0 + self.alpha * self.kernel.max_abs() ** 2)


def _highpass_gram(basis: EigenBasis, kernel: SpectralKernel) -> np.ndarray:
    """Dense H^t H = U diag(h^2) U^t."""
    h2 = kernel(basis.lambdas) ** 2
    return (basis.U * h2) @ basis.U.T


def rbm_closed_form(
    basis: EigenBasis, samples: SampleSet, cfg: RegConfig
) -> np.ndarray:
    """Minimize the regularized cost exactly: solve (J^tJ + alpha H^tH) x = f_du.

    Raises SingularSystemError when the system is numerically singular, e.g.
    an isolated unknown vertex under a kernel with h(0) = 0; the caller is
    expected to fall back rather than have the solver guess.
    """
    if samples.n != basis.n:
        raise DimensionMismatchError(f"sample set n={samples.n} vs basis n={basis.n}")
    a = cfg.alpha * _highpass_gram(basis, cfg.kernel)
    a[samples.known, samples.known] += 1.0
    f_du = samples.f_du()
    try:
        out = np.linalg.solve(a, f_du)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    residual = np.linalg.norm(a @ out - f_du)
    scale = max(1.0, cfg.alpha * cfg.kernel.max_abs() ** 2) * max(
        1.0, float(np.linalg.norm(out))
    )
    if residual > 1e-8 * scale:
        raise SingularSystemError(
            f"solve residual {residual:.3e} exceeds tolerance; system near-singular"
        )
    return out


def irbm(
    lap: NormalizedLaplacian,
    samples: SampleSet,
    cfg: RegConfig,
    mode: str = "ideal",
    degree: int = 25,
    basis: Optional[EigenBasis] = None,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> IterativeResult:
    """Iterative regularized interpolation (gradient descent on the cost).

    Starts at f_du and repeats
        f <- (I - beta alpha H^tH) f + beta J^tJ (f_du - f).
    mode "ideal" applies H^tH through the eigenbasis; mode "poly" applies one
    Chebyshev filter approximating h^2(lambda), halving the matrix products a
    two-pass filter would need. Raises DivergenceDetectedError when the
    iterate norm grows past 10x the initial norm (bad beta).
    """
    if samples.n != lap.n:
        raise DimensionMismatchError(f"sample set n={samples.n} vs laplacian n={lap.n}")

    if mode == "ideal":
        if basis is None:
            basis = eigendecompose(lap)
        h2 = cfg.kernel(basis.lambdas) ** 2
        u = basis.U

        def apply_hth(x):
            return u @ (h2 * (u.T @ x))

    elif mode == "poly":
        filt = chebyshev_coeffs(squared(cfg.kernel), degree)

        def apply_hth(x):
            return apply_poly_filter(lap, filt, x)

    else:
        raise ValueError(f"unknown filter mode {mode!r}")

    known, values = samples.known, samples.known_values
    beta, alpha = cfg.beta, cfg.alpha
    f = samples.f_du()
    if callback is not None:
        callback(0, f)
    norm0 = np.linalg.norm(f)
    blowup = 10.0 * norm0 if norm0 > 0 else np.inf
    iterations = 0
    converged = False
    rel_change = np.inf
    for it in range(1, cfg.stop.max_iters + 1):
        f_next = f - beta * alpha * apply_hth(f)
        f_next[known] += beta * (values - f[known])
        if callback is not None:
            callback(it, f_next)
        delta = np.linalg.norm(f_next - f)
        scale = np.linalg.norm(f)
        rel_change = delta / scale if scale > 0 else delta
        f = f_next
        iterations = it
        if np.linalg.norm(f) > blowup:
            raise DivergenceDetectedError(
                f"iterate norm exceeded 10x the initial norm after {it} iterations"
            )
        if rel_change <= cfg.stop.tol:
            converged = True
            break
    return IterativeResult(
        signal=f, iterations=iterations, converged=converged, rel_change=rel_change
    )
