"""Fixed-step trajectory integration and growth-bound checks.

Uses classical RK4 with a uniform step: reproducible output over adaptive
accuracy, since the CSV files this feeds are compared byte-for-byte.  The
default step is 0.1 / ||B||; :func:`lognormgrid.lognorm.stiffness_ratio`
tells users when to pick a smaller one.
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .assembly import ClosedLoopSystem, OpenLoopSystem, equilibrium
from .errors import DegenerateNormError
from .lognorm import Envelope, exp_envelope, log_norm, matrix_two_norm, spectral_abscissa

DIVERGENCE_FACTOR = 1e12


def system_hash(b, k) -> str:
    digest = hashlib.sha256()
    b = np.ascontiguousarray(b, dtype=np.float64)
    k = np.ascontiguousarray(k, dtype=np.float64)
    digest.update(repr(b.shape).encode())
    digest.update(b.tobytes())
    digest.update(k.tobytes())
    return digest.hexdigest()[:16]


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled states of one integration run.

    ``states[j]`` is the state at ``times[j]``; columns follow the
    system's own ordering (line currents, then permuted voltages for a
    closed-loop system).  ``permutation`` is carried along so writers can
    restore the original node order.
    """

    times: np.ndarray
    states: np.ndarray
    step: float
    method: str
    system_hash: str
    diverged: bool = False
    permutation: tuple = None

    def __post_init__(self):
        if self.times.shape[0] != self.states.shape[0]:
            raise ValueError("times and states must have equal length")

    @property
    def final_state(self):
        return self.states[-1]

    def to_csv(self, n_lines: int) -> str:
        """CSV with voltages mapped back to original node order."""
        n_nodes = self.states.shape[1] - n_lines
        header = (
            ["t"]
            + [f"ip_{e}" for e in range(n_lines)]
            + [f"vg_{i}" for i in range(n_nodes)]
        )
        perm = (
            np.asarray(self.permutation, dtype=int)
            if self.permutation is not None
            else np.arange(n_nodes)
        )
        inverse = np.empty(n_nodes, dtype=int)
        inverse[perm] = np.arange(n_nodes)
        lines = [",".join(header)]
        for j in range(self.times.shape[0]):
            volts = self.states[j, n_lines:][inverse]
            row = [f"{self.times[j]:.17g}"]
            row += [f"{v:.17g}" for v in self.states[j, :n_lines]]
            row += [f"{v:.17g}" for v in volts]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def default_step(system: ClosedLoopSystem) -> float:
    nrm = matrix_two_norm(system.b)
    return 0.1 / nrm if nrm > 0.0 else 0.1


def default_initial_state(system: ClosedLoopSystem) -> np.ndarray:
    """Zero line currents, every bus at its reference voltage."""
    v_ref = system.droop.effective_v_ref()[system.permutation()]
    return np.concatenate([np.zeros(system.n_lines), v_ref])


def _n_steps(t_end, h):
    if h <= 0.0:
        raise ValueError(f"step must be > 0, got {h}")
    if t_end < h:
        raise ValueError(f"t_end={t_end} must be >= step={h}")
    # t_end is interpreted as the nearest whole number of steps
    return max(1, int(round(t_end / h)))


def integrate(system: ClosedLoopSystem, z0, t_end, h) -> Trajectory:
    """Integrate dz/dt = B z + k from z0 with fixed step h.

    Truncates with ``diverged=True`` once any state magnitude exceeds
    1e12 * (1 + ||z0||).
    """
    z0 = np.asarray(z0, dtype=np.float64)
    if z0.shape != (system.dim,):
        raise ValueError(f"z0 must have shape ({system.dim},), got {z0.shape}")
    n_steps = _n_steps(t_end, h)
    limit = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(z0)))
    states, completed, diverged = kernels.rk4(
        system.b, system.k, z0, h, n_steps, limit
    )
    times = h * np.arange(completed + 1)
    return Trajectory(
        times=times,
        states=states,
        step=h,
        method="rk4",
        system_hash=system_hash(system.b, system.k),
        diverged=diverged,
        permutation=tuple(int(i) for i in system.permutation()),
    )


def integrate_forced(open_sys: OpenLoopSystem, f, z0, t_end, h) -> Trajectory:
    """Integrate dx/dt = A x + G f(t, x) with per-stage forcing evaluation.

    ``f(t, x)`` returns the injected current at every bus (original node
    order).  Useful for replaying role-dependent feedback against the
    open-loop dynamics.
    """
    z0 = np.asarray(z0, dtype=np.float64)
    a, g = open_sys.a, open_sys.g
    n_steps = _n_steps(t_end, h)
    limit = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(z0)))
    states = np.empty((n_steps + 1, open_sys.dim))
    states[0] = z0
    z = z0.copy()
    diverged = False
    completed = n_steps
    for step in range(1, n_steps + 1):
        t = (step - 1) * h
        k1 = a @ z + g @ f(t, z)
        s1 = z + 0.5 * h * k1
        k2 = a @ s1 + g @ f(t + 0.5 * h, s1)
        s2 = z + 0.5 * h * k2
        k3 = a @ s2 + g @ f(t + 0.5 * h, s2)
        s3 = z + h * k3
        k4 = a @ s3 + g @ f(t + h, s3)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[step] = z
        mx = float(np.max(np.abs(z)))
        if not mx <= limit:
            completed = step
            diverged = True
            break
    return Trajectory(
        times=h * np.arange(completed + 1),
        states=states[: completed + 1],
        step=h,
        method="rk4",
        system_hash=system_hash(a, np.zeros(open_sys.dim)),
        diverged=diverged,
    )


@dataclass(frozen=True)
class DiniCheckResult:
    """Outcome of the growth-rate bound check along one trajectory."""

    max_rate: float
    mu: float
    tolerance: float
    within_bound: bool
    skipped_samples: int
    rates: np.ndarray


def dini_check(trajectory: Trajectory, system: ClosedLoopSystem, mu=None) -> DiniCheckResult:
    """Check d/dt log||z - z*|| against the logarithmic norm of B.

    The deviation y = z - z* follows dy/dt = B y, whose log-norm growth
    bound is checked with forward differences; the tolerance
    10 * h * ||B||^2 absorbs the discretization error.  Samples with
    ||y|| < 1e-14 are skipped (and counted); if none remain the check is
    impossible and DegenerateNormError is raised.
    """
    if mu is None:
        mu = log_norm(system.b)
    if np.any(system.k != 0.0):
        z_star = equilibrium(system)
    else:
        z_star = np.zeros(system.dim)
    dev = trajectory.states - z_star
    norms = np.linalg.norm(dev, axis=1)
    h = trajectory.step
    valid = norms >= 1e-14
    pair_ok = valid[:-1] & valid[1:]
    skipped = int(np.sum(~pair_ok))
    if not np.any(pair_ok):
        raise DegenerateNormError(
            "every sample pair has vanishing deviation norm; nothing to check"
        )
    rates = (np.log(norms[1:][pair_ok]) - np.log(norms[:-1][pair_ok])) / h
    max_rate = float(np.max(rates))
    bnorm = matrix_two_norm(system.b)
    tolerance = 10.0 * h * bnorm * bnorm
    return DiniCheckResult(
        max_rate=max_rate,
        mu=float(mu),
        tolerance=tolerance,
        within_bound=max_rate <= mu + tolerance,
        skipped_samples=skipped,
        rates=rates,
    )


@dataclass(frozen=True)
class TransientGrowth:
    """Peak of ||e^(tB)|| over a time grid."""

    peak: float
    t_peak: float
    amplifying: bool  # peak > 1 while alpha < 0
    envelope: Envelope


def measure_transient_growth(system, t_grid) -> TransientGrowth:
    """Scan ||e^(tB)|| on t_grid; flags decay-masked amplification."""
    b = system.b if hasattr(system, "b") else np.asarray(system, dtype=np.float64)
    envelope = exp_envelope(b, t_grid)
    idx = int(np.argmax(envelope.exp_norm))
    peak = float(envelope.exp_norm[idx])
    alpha = spectral_abscissa(b)
    return TransientGrowth(
        peak=peak,
        t_peak=float(envelope.t[idx]),
        amplifying=peak > 1.0 + 1e-9 and alpha < 0.0,
        envelope=envelope,
    )


def convergence_order(system: ClosedLoopSystem, z0, t_end, h) -> float:
    """Measured RK4 convergence exponent from errors at h and h/2.

    Each error is taken against a 10x-finer reference of the same run.
    """
    errors = []
    for step in (h, 0.5 * h):
        coarse = integrate(system, z0, t_end, step)
        fine = integrate(system, z0, t_end, step / 10.0)
        errors.append(float(np.linalg.norm(coarse.final_state - fine.final_state)))
    if errors[1] == 0.0:
        return math.inf
    return math.log2(errors[0] / errors[1])
