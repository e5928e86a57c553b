"""Iterative producer/consumer role switching driven by the log norm.

Each monitoring pass takes a voltage snapshot, proposes role changes for
buses whose deviation from the reference crosses a threshold, and accepts
the first proposal (ascending node order) that makes the logarithmic norm
of the closed-loop matrix strictly more negative.  Candidate evaluation
never mutates the live assignment, so the loop is deterministic and the
recorded decisions can be re-derived from scratch.
"""

from dataclasses import dataclass

import numpy as np

from .assembly import (
    DroopConfig,
    Role,
    RoleAssignment,
    assemble_closed_loop,
)
from .errors import InvalidParamsError, LognormGridError
from .lognorm import log_norm
from .simulate import default_initial_state, default_step, integrate
from .topology import MicrogridGraph


@dataclass(frozen=True)
class StabilizerConfig:
    """Knobs of the monitoring loop.

    threshold: volts of deviation from the reference that trigger a
    proposal; min_producers: policy floor on the producer count;
    evaluation_time: seconds simulated between snapshots.
    """

    threshold: float
    min_producers: int = 1
    max_iterations: int = 10
    evaluation_time: float = 1.0
    step: float = None  # integrator step; default 0.1/||B||

    def __post_init__(self):
        if not self.threshold > 0.0:
            raise InvalidParamsError(f"threshold must be > 0, got {self.threshold}")
        if self.max_iterations < 1:
            raise InvalidParamsError("max_iterations must be >= 1")
        if self.min_producers < 0:
            raise InvalidParamsError("min_producers must be >= 0")
        if not self.evaluation_time > 0.0:
            raise InvalidParamsError("evaluation_time must be > 0")
        if self.step is not None and not self.step > 0.0:
            raise InvalidParamsError("step must be > 0 when given")


@dataclass(frozen=True)
class SwitchDecision:
    """Record of one evaluated role switch."""

    node: int
    from_role: Role
    to_role: Role
    mu_before: float
    mu_after: float
    accepted: bool
    iteration: int
    note: str = ""

    def csv_row(self) -> str:
        return (
            f"{self.iteration},{self.node},{self.from_role.value},"
            f"{self.to_role.value},{self.mu_before:.17g},{self.mu_after:.17g},"
            f"{'true' if self.accepted else 'false'}"
        )


DECISION_CSV_HEADER = "iteration,node,from,to,mu_before,mu_after,accepted"


def detect_candidates(voltages, v_ref, assignment: RoleAssignment,
                      config: StabilizerConfig):
    """Propose role changes for buses beyond the deviation threshold.

    ``voltages`` are in original node order; ``v_ref`` is a scalar or a
    per-node array.  A bus above v_ref + threshold is proposed as a
    producer, below v_ref - threshold as a consumer; buses already in the
    proposed role are skipped.  Returned sorted by node id.
    """
    voltages = np.asarray(voltages, dtype=np.float64)
    n = assignment.n_nodes
    if voltages.shape != (n,):
        raise InvalidParamsError(
            f"voltages must have shape ({n},), got {voltages.shape}"
        )
    v_ref = np.broadcast_to(np.asarray(v_ref, dtype=np.float64), (n,))
    candidates = []
    for node in range(n):
        deviation = voltages[node] - v_ref[node]
        if deviation > config.threshold:
            proposed = Role.PRODUCER
        elif deviation < -config.threshold:
            proposed = Role.CONSUMER
        else:
            continue
        if assignment.roles[node] is not proposed:
            candidates.append((node, proposed))
    return candidates


def evaluate_switch(graph: MicrogridGraph, assignment: RoleAssignment,
                    droop: DroopConfig, candidate, min_producers=0,
                    iteration=0) -> SwitchDecision:
    """Steps 2-4 of the switching method for a single candidate.

    Computes the log norm before and after the hypothetical switch on
    freshly assembled systems; accepts only a strict decrease.  The input
    assignment is never mutated.  Assembly or eigensolver failures yield
    a rejected decision with the error in ``note``.
    """
    node, to_role = candidate
    from_role = assignment.roles[node]
    note = ""
    try:
        mu_before = log_norm(assemble_closed_loop(graph, assignment, droop).b)
    except LognormGridError as exc:
        return SwitchDecision(
            node=node, from_role=from_role, to_role=to_role,
            mu_before=float("nan"), mu_after=float("nan"),
            accepted=False, iteration=iteration, note=f"error: {exc}",
        )
    switched = assignment.with_role(node, to_role)
    if switched.n_producers < min_producers:
        try:
            mu_after = log_norm(assemble_closed_loop(graph, switched, droop).b)
        except LognormGridError:
            mu_after = float("nan")
        return SwitchDecision(
            node=node, from_role=from_role, to_role=to_role,
            mu_before=mu_before, mu_after=mu_after, accepted=False,
            iteration=iteration,
            note=f"PolicyViolation: fewer than {min_producers} producers",
        )
    try:
        mu_after = log_norm(assemble_closed_loop(graph, switched, droop).b)
    except LognormGridError as exc:
        return SwitchDecision(
            node=node, from_role=from_role, to_role=to_role,
            mu_before=mu_before, mu_after=float("nan"), accepted=False,
            iteration=iteration, note=f"error: {exc}",
        )
    return SwitchDecision(
        node=node, from_role=from_role, to_role=to_role,
        mu_before=mu_before, mu_after=mu_after,
        accepted=mu_after < mu_before, iteration=iteration, note=note,
    )


@dataclass(frozen=True)
class StabilizerRun:
    """Everything that happened during one run() invocation."""

    decisions: tuple
    assignment: RoleAssignment
    mu_history: tuple
    unstable: bool  # final mu >= 0
    iterations: int

    @property
    def accepted(self):
        return tuple(d for d in self.decisions if d.accepted)

    @property
    def final_mu(self):
        return self.mu_history[-1]

    def decisions_csv(self) -> str:
        lines = [DECISION_CSV_HEADER]
        lines += [d.csv_row() for d in self.decisions]
        return "\n".join(lines) + "\n"

    def mu_history_csv(self) -> str:
        lines = ["iteration,mu"]
        lines += [f"{i},{mu:.17g}" for i, mu in enumerate(self.mu_history)]
        return "\n".join(lines) + "\n"


def run(graph: MicrogridGraph, assignment: RoleAssignment, droop: DroopConfig,
        config: StabilizerConfig, snapshots=None, z0=None,
        on_decision=None) -> StabilizerRun:
    """Run the monitoring loop until no switch is accepted.

    Voltage snapshots come either from ``snapshots`` (a sequence of
    per-node voltage vectors in original order, for injected testing) or
    from integrating the live closed-loop system for
    ``config.evaluation_time`` between passes, carrying the state across
    switches.  At most one switch is applied per pass; candidates are
    evaluated in ascending node order and the first strict improvement
    wins.  ``on_decision`` (if given) observes every decision as it is
    made, so partial logs survive a failure in a later iteration.
    """
    system = assemble_closed_loop(graph, assignment, droop)
    mu = log_norm(system.b)
    mu_history = [mu]
    decisions = []
    v_ref = droop.effective_v_ref()

    simulate_mode = snapshots is None
    if simulate_mode:
        z = np.asarray(z0, dtype=np.float64) if z0 is not None else (
            default_initial_state(system)
        )
    iterations_done = 0
    for iteration in range(1, config.max_iterations + 1):
        if simulate_mode:
            h = config.step if config.step is not None else default_step(system)
            trajectory = integrate(system, z, config.evaluation_time, h)
            z = trajectory.final_state
            perm = system.permutation()
            voltages = np.empty(system.n_nodes)
            voltages[perm] = z[system.n_lines :]
        else:
            if iteration - 1 >= len(snapshots):
                break
            voltages = np.asarray(snapshots[iteration - 1], dtype=np.float64)
        iterations_done = iteration
        candidates = detect_candidates(voltages, v_ref, assignment, config)
        if not candidates:
            mu_history.append(mu)
            break
        accepted_decision = None
        for candidate in candidates:
            decision = evaluate_switch(
                graph, assignment, droop, candidate,
                min_producers=config.min_producers, iteration=iteration,
            )
            decisions.append(decision)
            if on_decision is not None:
                on_decision(decision)
            if decision.accepted:
                accepted_decision = decision
                break
        if accepted_decision is None:
            mu_history.append(mu)
            break
        assignment = assignment.with_role(
            accepted_decision.node, accepted_decision.to_role
        )
        new_system = assemble_closed_loop(graph, assignment, droop)
        if simulate_mode:
            # carry the state across the switch: same physical values,
            # re-ordered for the new permutation
            old_perm = system.permutation()
            new_perm = new_system.permutation()
            v_orig = np.empty(system.n_nodes)
            v_orig[old_perm] = z[system.n_lines :]
            z = np.concatenate([z[: system.n_lines], v_orig[new_perm]])
        system = new_system
        mu = accepted_decision.mu_after
        mu_history.append(mu)
    return StabilizerRun(
        decisions=tuple(decisions),
        assignment=assignment,
        mu_history=tuple(mu_history),
        unstable=mu_history[-1] >= 0.0,
        iterations=iterations_done,
    )
