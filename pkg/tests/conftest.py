import numpy as np
import pytest

from lognormgrid import _kernels_py
from lognormgrid.assembly import DroopConfig, RoleAssignment, assemble_closed_loop
from lognormgrid.topology import LineParams, MicrogridGraph, NodeParams

try:
    from lognormgrid import _kernels_c
except ImportError:
    _kernels_c = None

KERNEL_BACKENDS = [_kernels_py] + ([_kernels_c] if _kernels_c is not None else [])


@pytest.fixture(params=KERNEL_BACKENDS, ids=lambda mod: mod.BACKEND)
def kernel_backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_two_node_graph():
    """The canonical single-line grid with L = [[1, -1]]."""
    graph = MicrogridGraph()
    graph.add_seed(NodeParams(1.0))
    graph.add_seed(NodeParams(1.0))
    graph.add_edge(0, 1, LineParams(resistance=1.0, inductance=1.0))
    return graph


def make_chain_graph(n, resistance=1.0, inductance=1.0, capacitance=1.0):
    graph = MicrogridGraph()
    graph.add_seed(NodeParams(capacitance))
    for i in range(1, n):
        graph.add_node(
            NodeParams(capacitance), i - 1, LineParams(resistance, inductance)
        )
    return graph


def make_random_grid(seed, n_nodes, param_range=(0.5, 2.0)):
    """Preferential-attachment grid with O(1) parameters."""
    lo, hi = param_range
    rng = np.random.default_rng(seed)
    graph = MicrogridGraph()
    graph.add_seed(NodeParams(lo + (hi - lo) * rng.random()))
    if n_nodes > 1:
        graph.grow_preferential(
            n_nodes - 1,
            lambda r: NodeParams(lo + (hi - lo) * r.random()),
            lambda r: LineParams(
                lo + (hi - lo) * r.random(), lo + (hi - lo) * r.random()
            ),
            rng,
        )
    return graph


def make_random_closed_loop(seed, n_nodes):
    graph = make_random_grid(seed, n_nodes)
    rng = np.random.default_rng(seed + 1)
    n_producers = int(rng.integers(1, n_nodes)) if n_nodes > 1 else 1
    producers = sorted(rng.choice(n_nodes, size=n_producers, replace=False).tolist())
    assignment = RoleAssignment.from_producers(n_nodes, producers)
    droop = DroopConfig(
        gain=-(0.5 + rng.random(n_nodes)),
        load_power=10.0 * rng.random(n_nodes),
        v_ref=48.0,
    )
    return graph, assignment, droop, assemble_closed_loop(graph, assignment, droop)


@pytest.fixture
def two_node_graph():
    return make_two_node_graph()
