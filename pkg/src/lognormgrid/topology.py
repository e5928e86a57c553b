"""Microgrid graphs: DC buses joined by resistive-inductive power lines.

The network is a weighted undirected graph.  Each edge row of the oriented
incidence matrix L carries +1 at one endpoint and -1 at the other, so
``v_lines = L @ v_buses`` gives the line voltage drops and
``L.T @ i_lines`` the net current leaving each bus.  Orientation follows
two conventions: an edge appended by :meth:`MicrogridGraph.add_node` puts
+1 on the new node, an edge added explicitly by
:meth:`MicrogridGraph.add_edge` puts +1 on its first endpoint.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DisconnectedError,
    EmptyGraphError,
    InvalidParamsError,
    UnknownNodeError,
)


def _require_positive(value, what):
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise InvalidParamsError(f"{what} must be a number, got {type(value).__name__}")
    if not math.isfinite(value) or value <= 0.0:
        raise InvalidParamsError(f"{what} must be finite and > 0, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class NodeParams:
    """Per-bus electrical parameters.

    capacitance: DC link capacitance in farads (> 0); diagonal entry of C.
    """

    capacitance: float

    def __post_init__(self):
        object.__setattr__(
            self, "capacitance", _require_positive(self.capacitance, "capacitance")
        )


@dataclass(frozen=True)
class LineParams:
    """Per-line electrical parameters (series lumped model).

    resistance: ohms (> 0); inductance: henries (> 0).
    """

    resistance: float
    inductance: float

    def __post_init__(self):
        object.__setattr__(
            self, "resistance", _require_positive(self.resistance, "resistance")
        )
        object.__setattr__(
            self, "inductance", _require_positive(self.inductance, "inductance")
        )


@dataclass(frozen=True)
class Edge:
    """Oriented line: +1 incidence at ``pos``, -1 at ``neg``."""

    pos: int
    neg: int
    params: LineParams


class MicrogridGraph:
    """Mutable builder for a microgrid network.

    Node and edge ids are dense 0-based integers in insertion order.
    Mutation invalidates the cached incidence matrix; a validated graph
    that is no longer mutated can be shared freely across threads.
    """

    def __init__(self):
        self._node_params = []
        self._edges = []
        self._incidence = None

    # -- construction -------------------------------------------------

    def add_seed(self, params: NodeParams) -> int:
        """Add an isolated node (no line). Used for the first node of a
        graph or for seed graphs that are wired up with add_edge."""
        if not isinstance(params, NodeParams):
            raise InvalidParamsError("params must be a NodeParams")
        self._node_params.append(params)
        self._incidence = None
        return len(self._node_params) - 1

    def add_node(self, params: NodeParams, attach_to: int, line: LineParams) -> int:
        """Connect a new node to an existing one through a new line.

        The appended incidence row has +1 in the new node's column and -1
        in ``attach_to``'s column.
        """
        if not 0 <= attach_to < len(self._node_params):
            raise UnknownNodeError(f"attach_to={attach_to} does not exist")
        if not isinstance(params, NodeParams) or not isinstance(line, LineParams):
            raise InvalidParamsError("params/line must be NodeParams/LineParams")
        node_id = self.add_seed(params)
        self._edges.append(Edge(pos=node_id, neg=attach_to, params=line))
        return node_id

    def add_edge(self, i: int, j: int, line: LineParams) -> int:
        """Add a line between two existing nodes; +1 incidence goes to ``i``."""
        n = len(self._node_params)
        for node in (i, j):
            if not 0 <= node < n:
                raise UnknownNodeError(f"node {node} does not exist")
        if i == j:
            raise InvalidParamsError(f"self-loop on node {i} is not allowed")
        for edge in self._edges:
            if {edge.pos, edge.neg} == {i, j}:
                raise InvalidParamsError(f"parallel edge between {i} and {j}")
        if not isinstance(line, LineParams):
            raise InvalidParamsError("line must be a LineParams")
        self._edges.append(Edge(pos=i, neg=j, params=line))
        self._incidence = None
        return len(self._edges) - 1

    def grow_preferential(self, count, node_params, line_params, rng_seed):
        """Attach ``count`` new nodes, each to an existing node drawn with
        probability proportional to degree + 1.

        ``node_params``/``line_params`` may be fixed instances or callables
        taking the shared numpy Generator and returning fresh params, so
        callers can sample parameters from the same deterministic stream.
        ``rng_seed`` may also be an existing Generator to continue a stream.
        """
        if count < 1:
            raise InvalidParamsError(f"count must be >= 1, got {count}")
        if not self._node_params:
            raise EmptyGraphError("cannot grow an empty graph")
        rng = np.random.default_rng(rng_seed)
        added = []
        for _ in range(count):
            weights = self.degrees() + 1.0
            target = int(np.searchsorted(np.cumsum(weights), rng.random() * weights.sum(), side="right"))
            target = min(target, len(self._node_params) - 1)
            nparams = node_params(rng) if callable(node_params) else node_params
            lparams = line_params(rng) if callable(line_params) else line_params
            added.append(self.add_node(nparams, target, lparams))
        return added

    def copy(self):
        dup = MicrogridGraph()
        dup._node_params = list(self._node_params)
        dup._edges = list(self._edges)
        return dup

    # -- views ---------------------------------------------------------

    @property
    def n_nodes(self):
        return len(self._node_params)

    @property
    def n_edges(self):
        return len(self._edges)

    @property
    def nodes(self):
        return tuple(self._node_params)

    @property
    def edges(self):
        return tuple(self._edges)

    def node_params(self, node_id: int) -> NodeParams:
        if not 0 <= node_id < len(self._node_params):
            raise UnknownNodeError(f"node {node_id} does not exist")
        return self._node_params[node_id]

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes)
        for edge in self._edges:
            deg[edge.pos] += 1.0
            deg[edge.neg] += 1.0
        return deg

    def incidence(self) -> np.ndarray:
        """Oriented incidence matrix L, shape (n_edges, n_nodes)."""
        if self._incidence is None or self._incidence.shape != (
            self.n_edges,
            self.n_nodes,
        ):
            lmat = np.zeros((self.n_edges, self.n_nodes))
            for row, edge in enumerate(self._edges):
                lmat[row, edge.pos] = 1.0
                lmat[row, edge.neg] = -1.0
            self._incidence = lmat
        return self._incidence.copy()

    def capacitances(self) -> np.ndarray:
        return np.array([p.capacitance for p in self._node_params])

    def resistances(self) -> np.ndarray:
        return np.array([e.params.resistance for e in self._edges])

    def inductances(self) -> np.ndarray:
        return np.array([e.params.inductance for e in self._edges])

    # -- validation ----------------------------------------------------

    def validate(self):
        """Raise if the graph is empty, disconnected, or carries bad params."""
        n = self.n_nodes
        if n == 0:
            raise EmptyGraphError("graph has no nodes")
        for i, p in enumerate(self._node_params):
            if not math.isfinite(p.capacitance) or p.capacitance <= 0:
                raise InvalidParamsError(f"node {i}: capacitance {p.capacitance!r}")
        for e, edge in enumerate(self._edges):
            for what, value in (
                ("resistance", edge.params.resistance),
                ("inductance", edge.params.inductance),
            ):
                if not math.isfinite(value) or value <= 0:
                    raise InvalidParamsError(f"edge {e}: {what} {value!r}")
        components = self._components()
        if len(components) > 1:
            raise DisconnectedError(components)

    def _components(self):
        adjacency = [[] for _ in range(self.n_nodes)]
        for edge in self._edges:
            adjacency[edge.pos].append(edge.neg)
            adjacency[edge.neg].append(edge.pos)
        seen = [False] * self.n_nodes
        components = []
        for start in range(self.n_nodes):
            if seen[start]:
                continue
            stack = [start]
            seen[start] = True
            comp = []
            while stack:
                node = stack.pop()
                comp.append(node)
                for nxt in adjacency[node]:
                    if not seen[nxt]:
                        seen[nxt] = True
                        stack.append(nxt)
            components.append(comp)
        return components

    # -- serialization ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "nodes": [
                {"id": i, "capacitance": p.capacitance}
                for i, p in enumerate(self._node_params)
            ],
            "edges": [
                {
                    "id": e,
                    "from": edge.pos,
                    "to": edge.neg,
                    "resistance": edge.params.resistance,
                    "inductance": edge.params.inductance,
                }
                for e, edge in enumerate(self._edges)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"

    @classmethod
    def from_json_dict(cls, doc: dict) -> "MicrogridGraph":
        if not isinstance(doc, dict) or set(doc) != {"nodes", "edges"}:
            raise InvalidParamsError(
                "graph document must have exactly the keys 'nodes' and 'edges'"
            )
        graph = cls()
        nodes = sorted(doc["nodes"], key=lambda item: item.get("id", -1))
        for expect, item in enumerate(nodes):
            if set(item) != {"id", "capacitance"} or item["id"] != expect:
                raise InvalidParamsError(f"bad node record: {item!r}")
            graph.add_seed(NodeParams(item["capacitance"]))
        edges = sorted(doc["edges"], key=lambda item: item.get("id", -1))
        for expect, item in enumerate(edges):
            keys = {"id", "from", "to", "resistance", "inductance"}
            if set(item) != keys or item["id"] != expect:
                raise InvalidParamsError(f"bad edge record: {item!r}")
            graph.add_edge(
                item["from"],
                item["to"],
                LineParams(item["resistance"], item["inductance"]),
            )
        return graph

    @classmethod
    def from_json(cls, text: str) -> "MicrogridGraph":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidParamsError(f"graph document is not valid JSON: {exc}") from exc
        return cls.from_json_dict(doc)


def incidence(graph: MicrogridGraph) -> np.ndarray:
    """Free-function view of :meth:`MicrogridGraph.incidence`."""
    return graph.incidence()


def validate(graph: MicrogridGraph):
    """Free-function view of :meth:`MicrogridGraph.validate`."""
    graph.validate()
