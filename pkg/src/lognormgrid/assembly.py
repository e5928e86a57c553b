"""State-space assembly for open-loop and droop-closed microgrid dynamics.

Open loop: with diagonal line inductance Lind, line resistance R, and bus
capacitance C, the state x = [i_lines; v_buses] obeys

    dx/dt = [[-Lind^-1 R,  Lind^-1 L ],   x  +  [[ 0    ]]  f(t)
             [-C^-1 L^T ,  0         ]]         [[ C^-1 ]]

where f is the net current injected at each bus.  Closing the loop splits
buses into producers (droop current sources, injection gain*(v - v_ref))
and consumers (constant current draw load_power/v_ref), reorders the
voltage coordinates producers-first with a permutation P, and folds the
feedback into a constant-coefficient system dz/dt = B z + k.

Only diagonal scalings and one dense linear solve (for the equilibrium)
are used; no general matrix inversion.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadAssignmentError,
    InvalidParamsError,
    SingularScalingError,
    SingularSystemError,
)
from .topology import MicrogridGraph


class Role(enum.Enum):
    PRODUCER = "producer"
    CONSUMER = "consumer"


@dataclass(frozen=True)
class RoleAssignment:
    """Partition of the buses into producers and consumers.

    The induced permutation lists producer indices first, preserving the
    original index order within each class.
    """

    roles: tuple

    def __post_init__(self):
        for r in self.roles:
            if not isinstance(r, Role):
                raise BadAssignmentError(f"roles must be Role values, got {r!r}")
        object.__setattr__(self, "roles", tuple(self.roles))

    @classmethod
    def from_producers(cls, n_nodes: int, producers) -> "RoleAssignment":
        producers = set(producers)
        for node in producers:
            if not 0 <= node < n_nodes:
                raise BadAssignmentError(f"producer id {node} out of range")
        return cls(
            tuple(
                Role.PRODUCER if i in producers else Role.CONSUMER
                for i in range(n_nodes)
            )
        )

    @property
    def n_nodes(self):
        return len(self.roles)

    @property
    def producer_indices(self):
        return tuple(i for i, r in enumerate(self.roles) if r is Role.PRODUCER)

    @property
    def consumer_indices(self):
        return tuple(i for i, r in enumerate(self.roles) if r is Role.CONSUMER)

    @property
    def n_producers(self):
        return len(self.producer_indices)

    def permutation(self) -> np.ndarray:
        """Index array p with permuted[r] = original[p[r]], producers first."""
        return np.array(self.producer_indices + self.consumer_indices, dtype=int)

    def with_role(self, node: int, role: Role) -> "RoleAssignment":
        if not 0 <= node < self.n_nodes:
            raise BadAssignmentError(f"node {node} out of range")
        roles = list(self.roles)
        roles[node] = role
        return RoleAssignment(tuple(roles))


def permutation_matrix(assignment: RoleAssignment, n_nodes=None) -> np.ndarray:
    """Producers-first permutation matrix P with (P v)[r] = v[perm[r]]."""
    if n_nodes is not None and n_nodes != assignment.n_nodes:
        raise BadAssignmentError(
            f"assignment covers {assignment.n_nodes} nodes, graph has {n_nodes}"
        )
    perm = assignment.permutation()
    pmat = np.zeros((assignment.n_nodes, assignment.n_nodes))
    pmat[np.arange(assignment.n_nodes), perm] = 1.0
    return pmat


@dataclass(frozen=True)
class DroopConfig:
    """Droop-control and load parameters, one entry per bus.

    gain applies while a bus is a producer (amps per volt, strictly
    negative: the source injects more as the local voltage falls below
    v_ref).  load_power applies while it is a consumer (watts, >= 0,
    drawn as the constant current load_power / v_ref).  v_ref is the
    shared reference voltage; v_ref_per_node optionally overrides it
    bus-by-bus.
    """

    gain: np.ndarray
    load_power: np.ndarray
    v_ref: float
    v_ref_per_node: np.ndarray = None
    allow_positive_gain: bool = False

    def __post_init__(self):
        gain = np.atleast_1d(np.asarray(self.gain, dtype=np.float64))
        load = np.atleast_1d(np.asarray(self.load_power, dtype=np.float64))
        if gain.shape != load.shape or gain.ndim != 1:
            raise InvalidParamsError("gain and load_power must be 1-D, same length")
        if not np.all(np.isfinite(gain)) or not np.all(np.isfinite(load)):
            raise InvalidParamsError("gain/load_power must be finite")
        if np.any(load < 0.0):
            raise InvalidParamsError("load_power entries must be >= 0")
        if not self.allow_positive_gain and np.any(gain >= 0.0):
            raise InvalidParamsError(
                "droop gains must be strictly negative (set allow_positive_gain "
                "to experiment with positive feedback)"
            )
        if not (isinstance(self.v_ref, (int, float)) and math.isfinite(self.v_ref)
                and self.v_ref > 0.0):
            raise InvalidParamsError(f"v_ref must be finite and > 0, got {self.v_ref!r}")
        vpn = self.v_ref_per_node
        if vpn is not None:
            vpn = np.asarray(vpn, dtype=np.float64)
            if vpn.shape != gain.shape:
                raise InvalidParamsError("v_ref_per_node must match gain's length")
            if not np.all(np.isfinite(vpn)) or np.any(vpn <= 0.0):
                raise InvalidParamsError("v_ref_per_node entries must be finite, > 0")
            vpn.setflags(write=False)
        gain.setflags(write=False)
        load.setflags(write=False)
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "load_power", load)
        object.__setattr__(self, "v_ref", float(self.v_ref))
        object.__setattr__(self, "v_ref_per_node", vpn)

    @classmethod
    def uniform(cls, n_nodes, gain=-1.0, load_power=0.0, v_ref=48.0,
                allow_positive_gain=False) -> "DroopConfig":
        return cls(
            gain=np.full(n_nodes, float(gain)),
            load_power=np.full(n_nodes, float(load_power)),
            v_ref=v_ref,
            allow_positive_gain=allow_positive_gain,
        )

    @property
    def n_nodes(self):
        return self.gain.shape[0]

    def effective_v_ref(self) -> np.ndarray:
        if self.v_ref_per_node is not None:
            return self.v_ref_per_node.copy()
        return np.full(self.n_nodes, self.v_ref)

    def with_load_power(self, node: int, value: float) -> "DroopConfig":
        load = self.load_power.copy()
        load[node] = value
        return DroopConfig(
            gain=self.gain,
            load_power=load,
            v_ref=self.v_ref,
            v_ref_per_node=self.v_ref_per_node,
            allow_positive_gain=self.allow_positive_gain,
        )


@dataclass(frozen=True)
class OpenLoopSystem:
    """dx/dt = a x + g f(t), state x = [i_lines (m); v_buses (n)]."""

    a: np.ndarray
    g: np.ndarray
    n_lines: int
    n_nodes: int

    @property
    def dim(self):
        return self.n_lines + self.n_nodes


@dataclass(frozen=True)
class ClosedLoopSystem:
    """dz/dt = b z + k, state z = [i_lines (m); v_buses producers-first (n)]."""

    b: np.ndarray
    k: np.ndarray
    assignment: RoleAssignment
    droop: DroopConfig
    n_lines: int
    n_nodes: int

    @property
    def dim(self):
        return self.n_lines + self.n_nodes

    def permutation(self) -> np.ndarray:
        return self.assignment.permutation()

    def to_json_dict(self) -> dict:
        return {
            "b": [[float(v) for v in row] for row in self.b],
            "k": [float(v) for v in self.k],
            "state_ordering": {
                "layout": "line currents (m) then bus voltages producers-first (n)",
                "n_lines": self.n_lines,
                "n_nodes": self.n_nodes,
            },
            "permutation": [int(i) for i in self.permutation()],
            "producers": [int(i) for i in self.assignment.producer_indices],
        }


def _check_scaling(values, what):
    median = float(np.median(values))
    if np.min(values) < 1e-12 * median:
        worst = int(np.argmin(values))
        raise SingularScalingError(
            f"{what}[{worst}] = {values[worst]:.3e} is below 1e-12 of the "
            f"median {median:.3e}"
        )


def assemble_open_loop(graph: MicrogridGraph) -> OpenLoopSystem:
    """Build the passive network dynamics from the graph parameters."""
    graph.validate()
    lmat = graph.incidence()
    m, n = lmat.shape
    res = graph.resistances()
    ind = graph.inductances()
    cap = graph.capacitances()
    a = np.zeros((m + n, m + n))
    a[:m, :m] = np.diag(-res / ind)
    a[:m, m:] = lmat / ind[:, None]
    a[m:, :m] = -lmat.T / cap[:, None]
    g = np.zeros((m + n, n))
    g[m:, :] = np.diag(1.0 / cap)
    return OpenLoopSystem(a=a, g=g, n_lines=m, n_nodes=n)


def injection_vector(assignment: RoleAssignment, droop: DroopConfig) -> np.ndarray:
    """Constant part d of the net injection f = K' v_hat + d, permuted order.

    Producers contribute -gain * v_ref (so that the feedback reads
    gain * (v - v_ref)); consumers contribute the constant draw
    -load_power / v_ref.
    """
    perm = assignment.permutation()
    p = assignment.n_producers
    v_ref = droop.effective_v_ref()
    d = np.empty(assignment.n_nodes)
    for r, node in enumerate(perm):
        if r < p:
            d[r] = -droop.gain[node] * v_ref[node]
        else:
            d[r] = -droop.load_power[node] / v_ref[node]
    return d


def assemble_closed_loop(
    graph: MicrogridGraph, assignment: RoleAssignment, droop: DroopConfig
) -> ClosedLoopSystem:
    """Fold droop feedback and constant loads into dz/dt = B z + k."""
    graph.validate()
    n = graph.n_nodes
    if assignment.n_nodes != n:
        raise BadAssignmentError(
            f"assignment covers {assignment.n_nodes} nodes, graph has {n}"
        )
    if droop.n_nodes != n:
        raise InvalidParamsError(
            f"droop config covers {droop.n_nodes} nodes, graph has {n}"
        )
    lmat = graph.incidence()
    m = graph.n_edges
    res = graph.resistances()
    ind = graph.inductances()
    cap = graph.capacitances()
    if m:
        _check_scaling(ind, "inductance")
    _check_scaling(cap, "capacitance")

    perm = assignment.permutation()
    p = assignment.n_producers
    lhat = lmat[:, perm]
    cap_hat = cap[perm]
    gain_hat = np.zeros(n)
    gain_hat[:p] = droop.gain[perm[:p]]

    b = np.zeros((m + n, m + n))
    b[:m, :m] = np.diag(-res / ind)
    b[:m, m:] = lhat / ind[:, None]
    b[m:, :m] = -lhat.T / cap_hat[:, None]
    b[m:, m:] = np.diag(gain_hat / cap_hat)

    k = np.zeros(m + n)
    # the trailing + 0.0 maps -0.0 entries (zero loads) to +0.0
    k[m:] = injection_vector(assignment, droop) / cap_hat + 0.0
    return ClosedLoopSystem(
        b=b, k=k, assignment=assignment, droop=droop, n_lines=m, n_nodes=n
    )


def equilibrium(system: ClosedLoopSystem) -> np.ndarray:
    """Steady state z* solving B z* = -k by one dense linear solve."""
    b, k = system.b, system.k
    try:
        z_star = np.linalg.solve(b, -k)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"closed-loop matrix is singular: {exc}", condition=float(np.linalg.cond(b))
        ) from exc
    residual = float(np.linalg.norm(b @ z_star + k))
    bound = 1e-9 * (1.0 + float(np.linalg.norm(k)))
    if not residual <= bound:
        raise SingularSystemError(
            f"equilibrium residual {residual:.3e} exceeds {bound:.3e}",
            condition=float(np.linalg.cond(b)),
        )
    return z_star
