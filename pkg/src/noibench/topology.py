"""Package-network topologies: construction, validation, editing and I/O.

A topology is a simple connected undirected graph over chiplet nodes. Nodes
carry a die kind and a role (memory / compute / io); links carry an effective
bandwidth in GB/s. Instances are immutable: every edit returns a new value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import errors
from .chiplets import CATALOG, DEFAULT_LINK_GBPS, ChipletKind, spec_for
from .rng import generator

ROLES = ("memory", "compute", "io")


@dataclass(frozen=True)
class Node:
    node_id: int
    kind: ChipletKind
    role: str
    port_cap: int


def _norm(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


class NoiTopology:
    """Immutable simple graph with per-link bandwidth and per-node port caps."""

    def __init__(self, nodes, links, check=True):
        """nodes: iterable of Node; links: mapping {(a, b): bandwidth_gbps}."""
        self.nodes: tuple[Node, ...] = tuple(sorted(nodes, key=lambda n: n.node_id))
        self.links: dict[tuple[int, int], float] = {
            _norm(*pair): float(bw) for pair, bw in dict(links).items()
        }
        ids = [n.node_id for n in self.nodes]
        if ids != list(range(len(ids))):
            raise ValueError("node ids must be 0..N-1 without gaps")
        self._adj: dict[int, tuple[int, ...]] = {}
        adj: dict[int, list[int]] = {i: [] for i in ids}
        for (a, b) in self.links:
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if a not in adj or b not in adj:
                raise errors.UnknownNode(f"link ({a},{b}) references unknown node")
            adj[a].append(b)
            adj[b].append(a)
        for i, neigh in adj.items():
            self._adj[i] = tuple(sorted(neigh))
        if check:
            for n in self.nodes:
                if self.degree(n.node_id) > n.port_cap:
                    raise errors.DegreeExceedsPortCap(
                        f"node {n.node_id} degree {self.degree(n.node_id)} "
                        f"> port cap {n.port_cap}"
                    )
            if not self.is_connected():
                raise errors.WouldDisconnect("topology is not connected")

    # -- basic queries ------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._adj[i]

    def degree(self, i: int) -> int:
        return len(self._adj[i])

    def has_link(self, a: int, b: int) -> bool:
        return _norm(a, b) in self.links

    def bandwidth(self, a: int, b: int) -> float:
        return self.links[_norm(a, b)]

    def sorted_links(self) -> list[tuple[int, int]]:
        return sorted(self.links)

    def nodes_with_role(self, role: str) -> tuple[int, ...]:
        return tuple(n.node_id for n in self.nodes if n.role == role)

    @property
    def memory_nodes(self) -> tuple[int, ...]:
        return self.nodes_with_role("memory")

    @property
    def compute_nodes(self) -> tuple[int, ...]:
        return self.nodes_with_role("compute")

    def is_connected(self) -> bool:
        if not self.nodes:
            return False
        seen = {self.nodes[0].node_id}
        stack = [self.nodes[0].node_id]
        while stack:
            u = stack.pop()
            for v in self._adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n_nodes

    def is_bridge(self, a: int, b: int) -> bool:
        """True if removing link (a, b) disconnects the graph."""
        if not self.has_link(a, b):
            raise errors.LinkAbsent(f"link ({a},{b}) not present")
        seen = {a}
        stack = [a]
        while stack:
            u = stack.pop()
            for v in self._adj[u]:
                if u == a and v == b:
                    continue
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return b not in seen

    def bfs_dist(self, src: int) -> list[int]:
        dist = [-1] * self.n_nodes
        dist[src] = 0
        frontier = [src]
        while frontier:
            nxt = []
            for u in frontier:
                for v in self._adj[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        return dist

    # -- editing --------------------------------------------------------------

    def apply_edit(self, op: str, a: int, b: int) -> "NoiTopology":
        """Return a new topology differing by exactly one link.

        op "add": link must be absent and both endpoints below their port cap.
        op "remove": link must be present and not a bridge.
        """
        if a == b or not (0 <= a < self.n_nodes and 0 <= b < self.n_nodes):
            raise errors.UnknownNode(f"bad node pair ({a},{b})")
        pair = _norm(a, b)
        links = dict(self.links)
        if op == "add":
            if pair in links:
                raise errors.DuplicateLink(f"link {pair} already present")
            for i in pair:
                if self.degree(i) >= self.nodes[i].port_cap:
                    raise errors.PortCapExceeded(
                        f"node {i} at port cap {self.nodes[i].port_cap}"
                    )
            links[pair] = DEFAULT_LINK_GBPS
        elif op == "remove":
            if pair not in links:
                raise errors.LinkAbsent(f"link {pair} not present")
            if self.is_bridge(*pair):
                raise errors.WouldDisconnect(f"link {pair} is a bridge")
            del links[pair]
        else:
            raise ValueError(f"unknown edit op {op!r}")
        return NoiTopology(self.nodes, links, check=False)

    def __eq__(self, other):
        return (
            isinstance(other, NoiTopology)
            and self.nodes == other.nodes
            and self.links == other.links
        )

    def __repr__(self):
        return f"NoiTopology(n={self.n_nodes}, links={self.n_links})"


# -- validation -----------------------------------------------------------------


@dataclass
class ValidationReport:
    connected: bool
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.connected and not self.violations


def validate(t: NoiTopology, mode: str = "lenient") -> ValidationReport:
    """Check connectivity, port caps and (relay_strict) relay legality.

    relay_strict flags every memory→compute pair for which some minimal-length
    route transits a non-relay-capable intermediate node, since that is the set
    of routes the simulator's routing policies may use.
    """
    report = ValidationReport(connected=t.is_connected())
    if not report.connected:
        report.violations.append(("NotConnected", ()))
    for n in t.nodes:
        if t.degree(n.node_id) > n.port_cap:
            report.violations.append(
                ("PortCapViolation", (n.node_id, t.degree(n.node_id), n.port_cap))
            )
    if mode == "relay_strict" and report.connected:
        relay = [CATALOG[n.kind].relay_capable for n in t.nodes]
        for m in t.memory_nodes:
            dist_m = t.bfs_dist(m)
            for c in t.compute_nodes:
                dist_c = t.bfs_dist(c)
                d = dist_m[c]
                bad = [
                    v
                    for v in range(t.n_nodes)
                    if v not in (m, c)
                    and not relay[v]
                    and dist_m[v] + dist_c[v] == d
                ]
                if bad:
                    report.violations.append(("RelayViolation", (m, c, tuple(bad))))
    elif mode != "lenient":
        raise ValueError(f"unknown validation mode {mode!r}")
    return report


# -- baseline families -------------------------------------------------------


def _grid_links(rows: int, cols: int, wrap: bool) -> set[tuple[int, int]]:
    links = set()
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                links.add(_norm(u, r * cols + c + 1))
            elif wrap and cols > 2:
                links.add(_norm(u, r * cols))
            if r + 1 < rows:
                links.add(_norm(u, (r + 1) * cols + c))
            elif wrap and rows > 2:
                links.add(_norm(u, c))
    return links


def _kary_ncube_links(k: int, n: int) -> set[tuple[int, int]]:
    links = set()
    total = k**n
    for u in range(total):
        digits = []
        x = u
        for _ in range(n):
            digits.append(x % k)
            x //= k
        for dim in range(n):
            up = list(digits)
            up[dim] = (up[dim] + 1) % k
            if k > 2 or up[dim] > digits[dim]:
                v = sum(d * k**i for i, d in enumerate(up))
                links.add(_norm(u, v))
    return links


def build_baseline(
    kind: str,
    placement,
    *,
    rows: int | None = None,
    cols: int | None = None,
    k: int | None = None,
    n: int | None = None,
    degree: int | None = None,
    seed: int = 0,
    bandwidth_gbps: float = DEFAULT_LINK_GBPS,
) -> NoiTopology:
    """Build a classical topology family over the given placement.

    placement is a sequence of (kind, role) pairs, one per node id; its length
    must match the node count implied by the family parameters.
    """
    nodes = [
        Node(i, ChipletKind(kd) if isinstance(kd, str) else kd, role,
             spec_for(kd).port_cap)
        for i, (kd, role) in enumerate(placement)
    ]
    n_nodes = len(nodes)

    if kind == "mesh2d":
        rows, cols = rows or 4, cols or 4
        _require_size(kind, rows * cols, n_nodes)
        links = _grid_links(rows, cols, wrap=False)
    elif kind == "torus2d":
        rows, cols = rows or 4, cols or 4
        _require_size(kind, rows * cols, n_nodes)
        links = _grid_links(rows, cols, wrap=True)
    elif kind == "ring":
        links = {_norm(i, (i + 1) % n_nodes) for i in range(n_nodes)}
    elif kind == "hypercube":
        dim = (n_nodes - 1).bit_length()
        _require_size(kind, 2**dim, n_nodes)
        links = {
            _norm(u, u ^ (1 << b)) for u in range(n_nodes) for b in range(dim)
        }
    elif kind == "kary_ncube":
        if not k or not n:
            raise ValueError("kary_ncube requires k and n")
        _require_size(kind, k**n, n_nodes)
        links = _kary_ncube_links(k, n)
    elif kind == "cmesh":
        links = _cmesh_links(nodes, rows or 4, cols or 4)
    elif kind == "random_regular":
        d = degree or 3
        links = _random_regular_links(n_nodes, d, seed)
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")

    link_map = {pair: bandwidth_gbps for pair in links}
    t = NoiTopology(nodes, link_map)  # validates caps + connectivity
    return t


def _require_size(kind: str, implied: int, actual: int):
    if implied != actual:
        raise errors.PlacementSizeMismatch(
            f"{kind}: family implies {implied} nodes, placement has {actual}"
        )


def _cmesh_links(nodes, rows: int, cols: int) -> set[tuple[int, int]]:
    """Concentrated mesh: the canvas splits into 2x2 clusters; each cluster's
    hub (its highest-port-cap node, lowest id on ties) stars the cluster and
    hubs form a mesh."""
    n_nodes = len(nodes)
    _require_size("cmesh", rows * cols, n_nodes)
    if rows % 2 or cols % 2:
        raise errors.PlacementSizeMismatch("cmesh requires even rows and cols")
    clusters: dict[tuple[int, int], list[int]] = {}
    for r in range(rows):
        for c in range(cols):
            clusters.setdefault((r // 2, c // 2), []).append(r * cols + c)
    hubs = {}
    links = set()
    for key, members in sorted(clusters.items()):
        hub = max(members, key=lambda i: (nodes[i].port_cap, -i))
        hubs[key] = hub
        for m in members:
            if m != hub:
                links.add(_norm(hub, m))
    hub_rows, hub_cols = rows // 2, cols // 2
    for (r, c), hub in sorted(hubs.items()):
        if c + 1 < hub_cols:
            links.add(_norm(hub, hubs[(r, c + 1)]))
        if r + 1 < hub_rows:
            links.add(_norm(hub, hubs[(r + 1, c)]))
    return links


def _random_regular_links(n_nodes: int, d: int, seed: int) -> set[tuple[int, int]]:
    """d-regular simple connected graph via repeated configuration-model draws."""
    if n_nodes * d % 2:
        raise ValueError("n*d must be even for a d-regular graph")
    rng = generator(seed, "random_regular", n_nodes, d)
    for _ in range(2000):
        stubs = [i for i in range(n_nodes) for _ in range(d)]
        rng.shuffle(stubs)
        links: set[tuple[int, int]] = set()
        ok = True
        for i in range(0, len(stubs), 2):
            a, b = stubs[i], stubs[i + 1]
            if a == b or _norm(a, b) in links:
                ok = False
                break
            links.add(_norm(a, b))
        if not ok:
            continue
        # connectivity check over the candidate edge set
        adj: dict[int, list[int]] = {i: [] for i in range(n_nodes)}
        for a, b in links:
            adj[a].append(b)
            adj[b].append(a)
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) == n_nodes:
            return links
    raise errors.InfeasibleAugmentation(
        f"could not draw a connected {d}-regular graph on {n_nodes} nodes"
    )


# -- canvases ----------------------------------------------------------------

MEMORY_CORNER_IDS = (0, 3, 12, 15)


def mi300x_placement() -> list[tuple[ChipletKind, str]]:
    """16-node canvas: 4 fused HBM+IOD memory nodes at the 4x4 grid corners,
    8 XCDs and 4 CCD_ai compute dies on the remaining sites."""
    placement: list[tuple[ChipletKind, str]] = []
    others = [i for i in range(16) if i not in MEMORY_CORNER_IDS]
    xcd_ids = set(others[:8])
    for i in range(16):
        if i in MEMORY_CORNER_IDS:
            placement.append((ChipletKind.IOD, "memory"))
        elif i in xcd_ids:
            placement.append((ChipletKind.XCD, "compute"))
        else:
            placement.append((ChipletKind.CCD_AI, "compute"))
    return placement


def default_canvas() -> NoiTopology:
    """4x4 mesh over the MI300X-like placement. Corner memory nodes have degree
    2, so the memory cut is 8 links = 297.6 GB/s."""
    return build_baseline("mesh2d", mi300x_placement(), rows=4, cols=4)


def sparse_canvas() -> NoiTopology:
    """Synthesis start state: a compute backbone (path) plus exactly two
    cross-cut links per memory node; same 297.6 GB/s cut as the mesh canvas."""
    placement = mi300x_placement()
    nodes = [
        Node(i, kd, role, spec_for(kd).port_cap)
        for i, (kd, role) in enumerate(placement)
    ]
    compute = [i for i in range(16) if i not in MEMORY_CORNER_IDS]
    links: dict[tuple[int, int], float] = {}
    for a, b in zip(compute, compute[1:]):
        links[_norm(a, b)] = DEFAULT_LINK_GBPS
    # two cross-cut links per memory node, spread over the backbone
    attach = {0: (1, 4), 3: (2, 7), 12: (8, 13), 15: (11, 14)}
    for m, (c1, c2) in attach.items():
        links[_norm(m, c1)] = DEFAULT_LINK_GBPS
        links[_norm(m, c2)] = DEFAULT_LINK_GBPS
    return NoiTopology(nodes, links)


# -- file format ---------------------------------------------------------------

FORMAT_HEADER = "noi v1"


def to_text(t: NoiTopology) -> str:
    """Serialize to the line-oriented topology format."""
    lines = [FORMAT_HEADER]
    for n in t.nodes:
        lines.append(f"node {n.node_id} {n.kind.value} {n.role} {n.port_cap}")
    for a, b in t.sorted_links():
        lines.append(f"link {a} {b} {t.links[(a, b)]!r}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> NoiTopology:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != FORMAT_HEADER:
        raise ValueError(f"expected header {FORMAT_HEADER!r}")
    nodes = []
    links = {}
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "node":
            _, nid, kind, role, cap = parts
            if role not in ROLES:
                raise ValueError(f"bad role {role!r}")
            nodes.append(Node(int(nid), ChipletKind(kind), role, int(cap)))
        elif parts[0] == "link":
            _, a, b, bw = parts
            links[_norm(int(a), int(b))] = float(bw)
        else:
            raise ValueError(f"bad line {ln!r}")
    return NoiTopology(nodes, links)


def save(t: NoiTopology, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_text(t))


def load(path) -> NoiTopology:
    with open(path) as fh:
        return from_text(fh.read())


def to_dot(t: NoiTopology, reference: NoiTopology | None = None) -> str:
    """DOT export. With a reference topology, edges are colored by category:
    blue = common, green = only in t, red = only in the reference."""
    out = ["graph noi {"]
    for n in t.nodes:
        shape = "box" if n.role == "memory" else "ellipse"
        out.append(f'  {n.node_id} [label="{n.kind.value}:{n.node_id}" shape={shape}];')
    mine = set(t.links)
    ref = set(reference.links) if reference is not None else set()
    for a, b in sorted(mine | ref):
        if reference is None:
            color = "black"
        elif (a, b) in mine and (a, b) in ref:
            color = "blue"
        elif (a, b) in mine:
            color = "green"
        else:
            color = "red"
        style = ' style=dashed' if (a, b) not in mine else ""
        out.append(f"  {a} -- {b} [color={color}{style}];")
    out.append("}")
    return "\n".join(out) + "\n"


def dot_edge_categories(t: NoiTopology, reference: NoiTopology):
    """Partition of the union of edge sets into (common, only_t, only_ref)."""
    mine, ref = set(t.links), set(reference.links)
    return sorted(mine & ref), sorted(mine - ref), sorted(ref - mine)
