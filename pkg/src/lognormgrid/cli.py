"""Command-line front end: generate, analyze, simulate, stabilize.

Every command reads its inputs fully, computes in memory, and only then
writes its output files via temp-file + rename, so a failed run leaves no
partial CSVs behind.  Outputs are byte-deterministic for a fixed scenario
and seed.  The output directory is ``--out``, overridden by the
LOGNORM_GRID_OUT environment variable when set.
"""

import argparse
import dataclasses
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import errors
from .assembly import assemble_closed_loop
from .lognorm import stability_report, stiffness_ratio
from .scenario import Scenario
from .simulate import Trajectory, default_step, integrate, system_hash
from .stabilizer import DECISION_CSV_HEADER, run as run_stabilizer
from .topology import LineParams, MicrogridGraph, NodeParams

DEFAULT_RANGES = {
    "resistance": (0.05, 0.5),
    "inductance": (1e-5, 1e-4),
    "capacitance": (1e-4, 1e-3),
}

_ERROR_MODULES = (
    (errors.ScenarioError, "scenario"),
    (errors.DegenerateNormError, "simulator"),
    (
        (errors.NonFiniteMatrixError, errors.EigenConvergenceError,
         errors.CrossCheckError),
        "lognorm",
    ),
    (
        (errors.BadAssignmentError, errors.SingularScalingError,
         errors.SingularSystemError),
        "assembly",
    ),
    (
        (errors.InvalidParamsError, errors.UnknownNodeError,
         errors.EmptyGraphError, errors.DisconnectedError),
        "topology",
    ),
)


def _module_of(exc):
    for types, name in _ERROR_MODULES:
        if isinstance(exc, types):
            return name
    return "cli"


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _out_dir(args) -> Path:
    env = os.environ.get("LOGNORM_GRID_OUT")
    return Path(env) if env else Path(args.out)


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lognormgrid",
        description=(
            "Model a DC microgrid as a linear state-space system, score its "
            "stability with the logarithmic norm, and improve it by switching "
            "producer/consumer roles."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="grow a grid by preferential attachment")
    gen.add_argument("--nodes", type=int, required=True, help="node count (>= 1)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=".", help="output directory")
    gen.add_argument("--quiet", action="store_true")
    for name in ("resistance", "inductance", "capacitance"):
        lo, hi = DEFAULT_RANGES[name]
        gen.add_argument(
            f"--{name}-range", nargs=2, type=float, default=[lo, hi],
            metavar=("LO", "HI"),
            help=f"uniform sampling range, default [{lo}, {hi}]",
        )

    for name, help_text in (
        ("analyze", "stability report and growth envelope (exit 0 stable, 2 not)"),
        ("simulate", "integrate the closed loop, applying load-step events"),
        ("stabilize", "run the role-switching loop and log its decisions"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--scenario", required=True, help="scenario JSON path")
        cmd.add_argument("--out", default=".", help="output directory")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override the scenario seed")
        cmd.add_argument("--quiet", action="store_true")
    return parser


def _check_range(lo, hi, what):
    if not (np.isfinite(lo) and np.isfinite(hi) and 0.0 < lo <= hi):
        raise errors.InvalidParamsError(f"bad {what} range [{lo}, {hi}]")
    return lo, hi


def cmd_generate(args) -> int:
    if args.nodes < 1:
        raise errors.InvalidParamsError(f"--nodes must be >= 1, got {args.nodes}")
    r_lo, r_hi = _check_range(*args.resistance_range, "resistance")
    l_lo, l_hi = _check_range(*args.inductance_range, "inductance")
    c_lo, c_hi = _check_range(*args.capacitance_range, "capacitance")

    def node_factory(rng):
        return NodeParams(c_lo + (c_hi - c_lo) * rng.random())

    def line_factory(rng):
        resistance = r_lo + (r_hi - r_lo) * rng.random()
        inductance = l_lo + (l_hi - l_lo) * rng.random()
        return LineParams(resistance, inductance)

    rng = np.random.default_rng(args.seed)
    graph = MicrogridGraph()
    graph.add_seed(node_factory(rng))
    if args.nodes > 1:
        # one generator drives attachment choices and parameter draws
        graph.grow_preferential(args.nodes - 1, node_factory, line_factory, rng)
    graph.validate()

    out = _out_dir(args) / "graph.json"
    _atomic_write(out, graph.to_json())
    if not args.quiet:
        print(f"wrote {out} ({graph.n_nodes} nodes, {graph.n_edges} edges)")
    return 0


def _load_scenario(args) -> Scenario:
    scenario = Scenario.load(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    return scenario


def _build_system(scenario):
    graph = scenario.build_graph()
    assignment = scenario.build_assignment(graph.n_nodes)
    droop = scenario.build_droop(graph.n_nodes)
    return graph, assignment, droop, assemble_closed_loop(graph, assignment, droop)


def cmd_analyze(args) -> int:
    scenario = _load_scenario(args)
    _, _, _, system = _build_system(scenario)
    t_grid = np.linspace(0.0, scenario.t_end, 21)
    report = stability_report(system.b, t_grid=t_grid)

    doc = report.to_json_dict()
    doc["system"] = {
        "n_nodes": system.n_nodes,
        "n_lines": system.n_lines,
        "producers": [int(i) for i in system.assignment.producer_indices],
        "hash": system_hash(system.b, system.k),
    }
    out = _out_dir(args)
    _atomic_write(out / "report.json", _json_text(doc))
    _atomic_write(out / "envelope.csv", report.envelope.to_csv())
    if not args.quiet:
        verdict = "stable" if report.stable else "not certified stable"
        print(
            f"mu={report.mu:.6g} alpha={report.alpha:.6g} "
            f"norm={report.two_norm:.6g} -> {verdict}"
        )
    return 0 if report.stable else 2


def _event_plan(events, droop, h, n_steps):
    """Integration plan: (step_index, droop) pairs after snapping events."""
    plan = []
    current = droop
    for event in events:
        index = int(round(event.time / h))
        index = max(0, min(index, n_steps))
        current = current.with_load_power(event.node, event.load_power)
        plan.append((index, current))
    return plan


def cmd_simulate(args) -> int:
    scenario = _load_scenario(args)
    graph, assignment, droop, system = _build_system(scenario)
    scenario.validate_events(graph.n_nodes, assignment)

    h = scenario.step if scenario.step is not None else default_step(system)
    n_steps = max(1, int(round(scenario.t_end / h)))
    plan = _event_plan(scenario.events, droop, h, n_steps)

    z = scenario.build_initial_state(system)
    states = [z[None, :]]
    cursor = 0
    diverged = False
    segments = plan + [(n_steps, None)]
    for boundary, new_droop in segments:
        span = boundary - cursor
        if span > 0 and not diverged:
            trajectory = integrate(system, z, span * h, h)
            states.append(trajectory.states[1:])
            z = trajectory.final_state
            cursor += trajectory.states.shape[0] - 1
            diverged = diverged or trajectory.diverged
        if new_droop is not None and not diverged:
            system = assemble_closed_loop(graph, assignment, new_droop)
    all_states = np.vstack(states)
    times = h * np.arange(all_states.shape[0])
    combined = Trajectory(
        times=times,
        states=all_states,
        step=h,
        method="rk4",
        system_hash=system_hash(system.b, system.k),
        diverged=diverged,
        permutation=tuple(int(i) for i in system.permutation()),
    )

    out = _out_dir(args)
    _atomic_write(out / "trajectory.csv", combined.to_csv(system.n_lines))
    status = {
        "diverged": diverged,
        "completed_steps": int(all_states.shape[0] - 1),
        "planned_steps": n_steps,
        "step": h,
        "t_end": scenario.t_end,
        "events_applied": len(scenario.events),
        "stiffness_ratio": stiffness_ratio(system.b),
    }
    _atomic_write(out / "status.json", _json_text(status))
    if not args.quiet:
        print(
            f"integrated {status['completed_steps']}/{n_steps} steps "
            f"(h={h:.6g}); diverged={diverged}"
        )
    return 0


def cmd_stabilize(args) -> int:
    scenario = _load_scenario(args)
    graph = scenario.build_graph()
    assignment = scenario.build_assignment(graph.n_nodes)
    droop = scenario.build_droop(graph.n_nodes)
    config = scenario.build_stabilizer_config()
    # events model the disturbance that triggered monitoring: fold them in
    for event in scenario.events:
        droop = droop.with_load_power(event.node, event.load_power)
    scenario.validate_events(graph.n_nodes, assignment)

    initial_system = assemble_closed_loop(graph, assignment, droop)
    z0 = scenario.build_initial_state(initial_system)

    out = _out_dir(args)
    observed = []
    try:
        result = run_stabilizer(
            graph, assignment, droop, config, z0=z0,
            on_decision=observed.append,
        )
    except errors.LognormGridError:
        # flush whatever was decided before the failure
        rows = [DECISION_CSV_HEADER] + [d.csv_row() for d in observed]
        _atomic_write(out / "decisions.csv", "\n".join(rows) + "\n")
        raise

    final_system = assemble_closed_loop(graph, result.assignment, droop)
    report = stability_report(
        final_system.b, t_grid=np.linspace(0.0, scenario.t_end, 21)
    )
    _atomic_write(out / "decisions.csv", result.decisions_csv())
    _atomic_write(out / "mu_history.csv", result.mu_history_csv())
    _atomic_write(
        out / "final_assignment.json",
        _json_text(
            {
                "producers": [int(i) for i in result.assignment.producer_indices],
                "consumers": [int(i) for i in result.assignment.consumer_indices],
                "unstable": result.unstable,
                "iterations": result.iterations,
            }
        ),
    )
    doc = report.to_json_dict()
    doc["system"] = {
        "n_nodes": final_system.n_nodes,
        "n_lines": final_system.n_lines,
        "producers": [int(i) for i in result.assignment.producer_indices],
        "hash": system_hash(final_system.b, final_system.k),
    }
    _atomic_write(out / "report.json", _json_text(doc))
    if not args.quiet:
        switches = len(result.accepted)
        print(
            f"{switches} switch(es) accepted over {result.iterations} "
            f"iteration(s); mu {result.mu_history[0]:.6g} -> {result.final_mu:.6g}"
        )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {
        "generate": cmd_generate,
        "analyze": cmd_analyze,
        "simulate": cmd_simulate,
        "stabilize": cmd_stabilize,
    }[args.command]
    try:
        return handler(args)
    except errors.LognormGridError as exc:
        print(
            f"lognormgrid {args.command}: error in {_module_of(exc)}: {exc}",
            file=sys.stderr,
        )
        return 1
    except OSError as exc:
        print(f"lognormgrid {args.command}: i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
