import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aogm_lineage.lineage_graph import TrackRow, TrackTable, build_graph, drop_vertices  # noqa: E402
from aogm_lineage.lineage_graph import Edge, Semantics, TrackingGraph  # noqa: E402


def point_table(rows):
    """Track table with each track on its own column, 40 px apart, 20 px boxes."""
    detections = {}
    for r in rows:
        for f in range(r.begin, r.end + 1):
            x = 40.0 * r.label
            detections[(r.label, f)] = ((x, 100.0), (x - 10, 90.0, 20.0, 20.0))
    return TrackTable(tuple(rows), detections)


def mitosis_table():
    """Mother 1 at t0-t1 dividing into 2 and 3 at t2-t3."""
    return point_table([TrackRow(1, 0, 1), TrackRow(2, 2, 3, 1), TrackRow(3, 2, 3, 1)])


@pytest.fixture
def ref():
    return build_graph(mitosis_table())


def _key(graph, track, frame):
    return next(v.vertex_id for v in graph.vertices if v.track_id == track and v.frame == frame)


@pytest.fixture
def key():
    return _key


@pytest.fixture
def shifted(ref):
    """Prediction that finds both daughters one frame late, with parent links."""
    g = drop_vertices(ref, {_key(ref, 2, 2), _key(ref, 3, 2)})
    m1 = _key(ref, 1, 1)
    links = (
        Edge(m1, _key(ref, 2, 3), Semantics.PARENT),
        Edge(m1, _key(ref, 3, 3), Semantics.PARENT),
    )
    return TrackingGraph.from_parts(g.vertices, g.edges + links)


@pytest.fixture
def shifted_bare(ref):
    """The same late prediction with no mitosis links at all."""
    return drop_vertices(ref, {_key(ref, 2, 2), _key(ref, 3, 2)})


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
