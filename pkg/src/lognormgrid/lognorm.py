"""Logarithmic norm, spectral abscissa, and transient-growth diagnostics.

For the norm induced by the vector 2-norm, the logarithmic norm (matrix
measure / numerical abscissa) of B is the largest eigenvalue of the
symmetric part (B + B^T)/2.  It upper-bounds the instantaneous growth
rate of ||z|| along dz/dt = B z, so mu[B] < 0 certifies exponential
stability, while the spectral abscissa alpha (max real part of the
eigenvalues) only governs asymptotic decay:

    e^(t alpha)  <=  ||e^(t B)||  <=  e^(t mu)      for all t >= 0.

A gap between alpha < 0 and mu > 0 is exactly the signature of transient
amplification in a nonnormal system.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CrossCheckError

_OVERFLOW_EXPONENT = math.log(np.finfo(np.float64).max)  # ~709.78


def log_norm(b) -> float:
    """Logarithmic norm mu[B]: largest eigenvalue of (B + B^T)/2."""
    b = np.asarray(b, dtype=np.float64)
    sym = 0.5 * (b + b.T)
    return float(kernels.sym_eigvals(sym)[-1])


def matrix_two_norm(b) -> float:
    """Induced 2-norm: square root of the top eigenvalue of B^T B.

    Entries are pre-scaled by the largest magnitude so the Gram product
    cannot overflow even for matrices near the float ceiling.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.size == 0:
        return 0.0
    scale = float(np.max(np.abs(b)))
    if scale == 0.0:
        return 0.0
    scaled = b / scale
    gram = scaled.T @ scaled
    top = float(kernels.sym_eigvals(gram)[-1])
    return scale * math.sqrt(max(top, 0.0))


def default_h_sequence() -> np.ndarray:
    return 0.1 * 2.0 ** -np.arange(21)


def log_norm_limit(b, h_sequence=None, check=True) -> np.ndarray:
    """Difference-quotient estimates (||I + h B|| - 1)/h of the log norm.

    The estimates decrease toward mu[B] as h -> 0+.  With ``check`` the
    final estimate is cross-validated against the symmetric-part
    eigensolve and a CrossCheckError is raised if the two routes disagree
    beyond 1e-5 * (1 + ||B||).
    """
    b = np.asarray(b, dtype=np.float64)
    if h_sequence is None:
        h_sequence = default_h_sequence()
    h_sequence = np.asarray(h_sequence, dtype=np.float64)
    if h_sequence.size == 0 or np.any(h_sequence <= 0.0):
        raise ValueError("h_sequence must be non-empty and strictly positive")
    if np.any(np.diff(h_sequence) >= 0.0):
        raise ValueError("h_sequence must be strictly decreasing")
    eye = np.eye(b.shape[0])
    estimates = np.array(
        [(matrix_two_norm(eye + h * b) - 1.0) / h for h in h_sequence]
    )
    if check:
        mu = log_norm(b)
        tol = 1e-5 * (1.0 + matrix_two_norm(b))
        if not abs(estimates[-1] - mu) <= tol:
            raise CrossCheckError(
                f"difference-quotient estimate {estimates[-1]!r} disagrees with "
                f"symmetric-part eigensolve {mu!r} beyond {tol:.3e}"
            )
    return estimates


def spectral_abscissa(b) -> float:
    """Largest real part over the eigenvalues of B."""
    eigs = kernels.eigvals(b)
    return float(np.max(eigs.real))


def stiffness_ratio(b) -> float:
    """|lambda|_max / |lambda|_min over the eigenvalues of B.

    Guides step-size choice for fixed-step integration; infinite when the
    smallest eigenvalue magnitude is zero at working precision.
    """
    mags = np.abs(kernels.eigvals(b))
    if mags.size == 0:
        return 1.0
    top = float(np.max(mags))
    bottom = float(np.min(mags))
    if bottom <= 1e-300 * max(top, 1.0):
        return math.inf
    return top / bottom


@dataclass(frozen=True)
class Envelope:
    """Samples of ||e^(tB)|| together with its two analytic bounds."""

    t: np.ndarray
    exp_norm: np.ndarray
    lower_bound: np.ndarray  # e^(t alpha)
    upper_bound: np.ndarray  # e^(t mu)
    overflow: np.ndarray  # True where e^(t mu) exceeds the float range

    def __len__(self):
        return self.t.shape[0]

    def to_csv(self) -> str:
        lines = ["t,exp_norm,lower_bound,upper_bound"]
        for i in range(len(self)):
            lines.append(
                f"{self.t[i]:.17g},{self.exp_norm[i]:.17g},"
                f"{self.lower_bound[i]:.17g},{self.upper_bound[i]:.17g}"
            )
        return "\n".join(lines) + "\n"


def exp_envelope(b, t_grid) -> Envelope:
    """Evaluate ||e^(tB)|| on a grid along with e^(t alpha) and e^(t mu)."""
    b = np.asarray(b, dtype=np.float64)
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=np.float64))
    if np.any(t_grid < 0.0):
        raise ValueError("t_grid must be >= 0")
    mu = log_norm(b)
    alpha = spectral_abscissa(b)
    exp_norm = np.empty(t_grid.shape)
    lower = np.empty(t_grid.shape)
    upper = np.empty(t_grid.shape)
    overflow = np.zeros(t_grid.shape, dtype=bool)
    for i, t in enumerate(t_grid):
        exp_tb = kernels.expm(t * b)
        if np.isfinite(exp_tb).all():
            exp_norm[i] = matrix_two_norm(exp_tb)
        else:
            exp_norm[i] = math.inf
        lower[i] = math.exp(t * alpha) if t * alpha < _OVERFLOW_EXPONENT else math.inf
        if t * mu >= _OVERFLOW_EXPONENT:
            overflow[i] = True
            upper[i] = math.inf
        else:
            upper[i] = math.exp(t * mu)
    return Envelope(
        t=t_grid.copy(),
        exp_norm=exp_norm,
        lower_bound=lower,
        upper_bound=upper,
        overflow=overflow,
    )


def pseudospectral_abscissa_lower_bound(b, epsilon, samples=32, rng_seed=0) -> float:
    """Sampled lower bound on the epsilon-pseudospectral abscissa.

    Maximizes the spectral abscissa over ``samples`` random perturbations
    of 2-norm exactly epsilon (plus the unperturbed matrix, since the
    pseudospectrum contains the spectrum).  Deterministic per seed.
    """
    b = np.asarray(b, dtype=np.float64)
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    best = spectral_abscissa(b)
    if epsilon == 0.0:
        return best
    rng = np.random.default_rng(rng_seed)
    n = b.shape[0]
    for _ in range(samples):
        pert = rng.standard_normal((n, n))
        pert *= epsilon / matrix_two_norm(pert)
        best = max(best, spectral_abscissa(b + pert))
    return best


@dataclass(frozen=True)
class StabilityReport:
    """Stability metrics of one system matrix.

    mu: logarithmic norm (1/s); alpha: spectral abscissa (1/s);
    two_norm: ||B||; stable: mu < 0; envelope: optional growth samples.
    """

    mu: float
    alpha: float
    two_norm: float
    stable: bool
    envelope: Envelope = None

    def __post_init__(self):
        slack = 1e-8 * max(1.0, self.two_norm)
        if self.alpha > self.mu + slack:
            raise CrossCheckError(
                f"spectral abscissa {self.alpha!r} exceeds log norm {self.mu!r}"
            )
        if abs(self.mu) > self.two_norm + slack:
            raise CrossCheckError(
                f"|mu| = {abs(self.mu)!r} exceeds ||B|| = {self.two_norm!r}"
            )

    def to_json_dict(self) -> dict:
        doc = {
            "mu": self.mu,
            "alpha": self.alpha,
            "two_norm": self.two_norm,
            "stable": self.stable,
        }
        if self.envelope is not None:
            doc["envelope"] = {
                "t": [float(v) for v in self.envelope.t],
                "exp_norm": [float(v) for v in self.envelope.exp_norm],
                "lower_bound": [float(v) for v in self.envelope.lower_bound],
                "upper_bound": [float(v) for v in self.envelope.upper_bound],
                "overflow": [bool(v) for v in self.envelope.overflow],
            }
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"


def stability_report(b, t_grid=None) -> StabilityReport:
    """Compute mu, alpha, ||B||, the stability verdict, and the envelope."""
    b = np.asarray(b, dtype=np.float64)
    mu = log_norm(b)
    alpha = spectral_abscissa(b)
    envelope = exp_envelope(b, t_grid) if t_grid is not None else None
    return StabilityReport(
        mu=mu,
        alpha=alpha,
        two_norm=matrix_two_norm(b),
        stable=mu < 0.0,
        envelope=envelope,
    )
