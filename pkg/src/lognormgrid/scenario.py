"""Scenario documents: the JSON input consumed by the CLI commands.

A scenario bundles a graph source, droop/load configuration, the initial
role assignment, the simulation horizon, optional load-step events, and
optional stabilizer settings.  Parsing is strict: unknown fields and
missing required fields fail fast with a ScenarioError naming the path.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assembly import DroopConfig, RoleAssignment
from .errors import LognormGridError, ScenarioError
from .stabilizer import StabilizerConfig
from .topology import MicrogridGraph

SCENARIO_VERSION = 1


def _require_keys(doc, required, optional, where):
    if not isinstance(doc, dict):
        raise ScenarioError(f"{where}: expected an object, got {type(doc).__name__}")
    unknown = set(doc) - set(required) - set(optional)
    if unknown:
        raise ScenarioError(f"{where}: unknown fields {sorted(unknown)}")
    missing = set(required) - set(doc)
    if missing:
        raise ScenarioError(f"{where}: missing required fields {sorted(missing)}")


def _number(value, where, minimum=None, strict=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if minimum is not None:
        if strict and not value > minimum:
            raise ScenarioError(f"{where}: must be > {minimum}, got {value}")
        if not strict and not value >= minimum:
            raise ScenarioError(f"{where}: must be >= {minimum}, got {value}")
    return value


@dataclass(frozen=True)
class LoadStepEvent:
    """At ``time`` seconds, consumer ``node`` starts drawing ``load_power``."""

    time: float
    node: int
    load_power: float


@dataclass(frozen=True)
class Scenario:
    """Validated scenario; build_* methods produce the domain objects."""

    seed: int
    graph_path: str  # one of graph_path / graph_inline is set
    graph_inline: dict
    droop_doc: dict
    producers: tuple
    t_end: float
    step: float  # None -> default 0.1/||B||
    events: tuple
    stabilizer_doc: dict  # None when absent
    initial_currents: tuple  # None -> zeros
    initial_voltages: tuple  # None -> v_ref

    @classmethod
    def parse(cls, doc, base_dir=".") -> "Scenario":
        _require_keys(
            doc,
            required=("version", "graph", "droop", "producers", "simulation"),
            optional=("seed", "events", "stabilizer", "initial_state"),
            where="scenario",
        )
        if doc["version"] != SCENARIO_VERSION:
            raise ScenarioError(
                f"scenario: unsupported version {doc['version']!r} "
                f"(expected {SCENARIO_VERSION})"
            )
        seed = doc.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ScenarioError(f"scenario.seed: expected an integer, got {seed!r}")

        graph = doc["graph"]
        _require_keys(graph, required=(), optional=("path", "inline"), where="scenario.graph")
        if ("path" in graph) == ("inline" in graph):
            raise ScenarioError("scenario.graph: give exactly one of 'path' or 'inline'")
        graph_path = None
        if "path" in graph:
            if not isinstance(graph["path"], str):
                raise ScenarioError("scenario.graph.path: expected a string")
            graph_path = str(Path(base_dir) / graph["path"])

        droop = doc["droop"]
        _require_keys(
            droop,
            required=("v_ref", "gain", "load_power"),
            optional=("v_ref_per_node", "allow_positive_gain"),
            where="scenario.droop",
        )
        _number(droop["v_ref"], "scenario.droop.v_ref", minimum=0.0, strict=True)

        producers = doc["producers"]
        if not isinstance(producers, list) or not all(
            isinstance(i, int) and not isinstance(i, bool) for i in producers
        ):
            raise ScenarioError("scenario.producers: expected a list of node ids")

        sim = doc["simulation"]
        _require_keys(sim, required=("t_end",), optional=("step",), where="scenario.simulation")
        t_end = _number(sim["t_end"], "scenario.simulation.t_end", minimum=0.0, strict=True)
        step = None
        if "step" in sim:
            step = _number(sim["step"], "scenario.simulation.step", minimum=0.0, strict=True)

        events = []
        last_time = -1.0
        for idx, ev in enumerate(doc.get("events", [])):
            where = f"scenario.events[{idx}]"
            _require_keys(ev, required=("time", "node", "load_power"), optional=(), where=where)
            time = _number(ev["time"], f"{where}.time", minimum=0.0)
            if time < last_time:
                raise ScenarioError("scenario.events: times must be sorted ascending")
            last_time = time
            if isinstance(ev["node"], bool) or not isinstance(ev["node"], int):
                raise ScenarioError(f"{where}.node: expected a node id")
            load = _number(ev["load_power"], f"{where}.load_power", minimum=0.0)
            events.append(LoadStepEvent(time=time, node=ev["node"], load_power=load))

        stab = doc.get("stabilizer")
        if stab is not None:
            _require_keys(
                stab,
                required=("threshold",),
                optional=("min_producers", "max_iterations", "evaluation_time", "step"),
                where="scenario.stabilizer",
            )

        init = doc.get("initial_state")
        init_currents = init_voltages = None
        if init is not None:
            _require_keys(
                init, required=(), optional=("line_currents", "voltages"),
                where="scenario.initial_state",
            )
            if "line_currents" in init:
                init_currents = tuple(
                    _number(v, "scenario.initial_state.line_currents[]")
                    for v in init["line_currents"]
                )
            if "voltages" in init:
                init_voltages = tuple(
                    _number(v, "scenario.initial_state.voltages[]")
                    for v in init["voltages"]
                )

        return cls(
            seed=seed,
            graph_path=graph_path,
            graph_inline=graph.get("inline"),
            droop_doc=droop,
            producers=tuple(producers),
            t_end=t_end,
            step=step,
            events=tuple(events),
            stabilizer_doc=stab,
            initial_currents=init_currents,
            initial_voltages=init_voltages,
        )

    @classmethod
    def load(cls, path) -> "Scenario":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path} is not valid JSON: {exc}") from exc
        return cls.parse(doc, base_dir=path.parent)

    # -- builders ------------------------------------------------------

    def build_graph(self) -> MicrogridGraph:
        if self.graph_path is not None:
            try:
                text = Path(self.graph_path).read_text()
            except OSError as exc:
                raise ScenarioError(
                    f"cannot read graph file {self.graph_path}: {exc}"
                ) from exc
            graph = MicrogridGraph.from_json(text)
        else:
            graph = MicrogridGraph.from_json_dict(self.graph_inline)
        graph.validate()
        return graph

    def build_assignment(self, n_nodes) -> RoleAssignment:
        for node in self.producers:
            if not 0 <= node < n_nodes:
                raise ScenarioError(f"scenario.producers: node {node} does not exist")
        return RoleAssignment.from_producers(n_nodes, self.producers)

    def _per_node(self, value, n_nodes, where):
        if isinstance(value, list):
            if len(value) != n_nodes:
                raise ScenarioError(
                    f"{where}: expected {n_nodes} entries, got {len(value)}"
                )
            return np.array([_number(v, f"{where}[]") for v in value])
        return np.full(n_nodes, _number(value, where))

    def build_droop(self, n_nodes) -> DroopConfig:
        doc = self.droop_doc
        gain = self._per_node(doc["gain"], n_nodes, "scenario.droop.gain")
        load = self._per_node(doc["load_power"], n_nodes, "scenario.droop.load_power")
        v_ref_per_node = None
        if "v_ref_per_node" in doc:
            v_ref_per_node = self._per_node(
                doc["v_ref_per_node"], n_nodes, "scenario.droop.v_ref_per_node"
            )
        allow_positive = doc.get("allow_positive_gain", False)
        if not isinstance(allow_positive, bool):
            raise ScenarioError("scenario.droop.allow_positive_gain: expected a boolean")
        try:
            return DroopConfig(
                gain=gain,
                load_power=load,
                v_ref=doc["v_ref"],
                v_ref_per_node=v_ref_per_node,
                allow_positive_gain=allow_positive,
            )
        except LognormGridError as exc:
            raise ScenarioError(f"scenario.droop: {exc}") from exc

    def build_stabilizer_config(self) -> StabilizerConfig:
        if self.stabilizer_doc is None:
            raise ScenarioError("scenario.stabilizer: required for this command")
        doc = self.stabilizer_doc
        try:
            return StabilizerConfig(
                threshold=_number(doc["threshold"], "scenario.stabilizer.threshold",
                                  minimum=0.0, strict=True),
                min_producers=int(doc.get("min_producers", 1)),
                max_iterations=int(doc.get("max_iterations", 10)),
                evaluation_time=_number(
                    doc.get("evaluation_time", 1.0),
                    "scenario.stabilizer.evaluation_time", minimum=0.0, strict=True,
                ),
                step=doc.get("step"),
            )
        except LognormGridError as exc:
            raise ScenarioError(f"scenario.stabilizer: {exc}") from exc

    def build_initial_state(self, system) -> np.ndarray:
        """State vector in the system's (permuted) ordering."""
        from .simulate import default_initial_state

        z0 = default_initial_state(system)
        m, n = system.n_lines, system.n_nodes
        if self.initial_currents is not None:
            if len(self.initial_currents) != m:
                raise ScenarioError(
                    f"scenario.initial_state.line_currents: expected {m} entries"
                )
            z0[:m] = self.initial_currents
        if self.initial_voltages is not None:
            if len(self.initial_voltages) != n:
                raise ScenarioError(
                    f"scenario.initial_state.voltages: expected {n} entries"
                )
            z0[m:] = np.asarray(self.initial_voltages)[system.permutation()]
        return z0

    def validate_events(self, n_nodes, assignment: RoleAssignment):
        """Events must target existing consumer nodes (loads only)."""
        from .assembly import Role

        for idx, ev in enumerate(self.events):
            if not 0 <= ev.node < n_nodes:
                raise ScenarioError(
                    f"scenario.events[{idx}]: node {ev.node} does not exist"
                )
            if assignment.roles[ev.node] is not Role.CONSUMER:
                raise ScenarioError(
                    f"scenario.events[{idx}]: node {ev.node} is a producer; "
                    "load_power events apply to consumers"
                )
