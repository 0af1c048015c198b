"""Network DAGs, model groups, scenarios, and chromosome decoding.

A network is a DAG of layers with tensor-sized edges. Partitioning cuts a
subset of edges and groups the remaining weakly connected layers into
subgraphs, the unit of compilation, profiling, and dispatch.
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

DEFAULT_INPUT_BYTES = 602_112    # 224x224x3 fp32 frame
DEFAULT_OUTPUT_BYTES = 65_536


class DecodeError(ValueError):
    """Chromosome array does not fit the network it is decoded against."""


@dataclass(frozen=True)
class Layer:
    id: int
    op_kind: str
    param_bytes: int = 0
    mac_count: int = 0


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    tensor_bytes: int


class NetworkGraph:
    """Immutable layer DAG. Edges are kept sorted by (src, dst) so that the
    edge index is a stable gene position for partition chromosomes; layers are
    kept sorted by id so the layer index is a stable gene position for
    mapping chromosomes."""

    def __init__(
        self,
        name: str,
        layers: Iterable[Layer],
        edges: Iterable[Edge],
        input_bytes: int = DEFAULT_INPUT_BYTES,
        output_bytes: int = DEFAULT_OUTPUT_BYTES,
    ):
        self.name = name
        self.layers = tuple(sorted(layers, key=lambda l: l.id))
        self.edges = tuple(sorted(edges, key=lambda e: (e.src, e.dst)))
        self.input_bytes = input_bytes
        self.output_bytes = output_bytes
        self._pos = {l.id: i for i, l in enumerate(self.layers)}

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def layer_pos(self, layer_id: int) -> int:
        return self._pos[layer_id]

    @cached_property
    def in_edges(self) -> tuple[tuple[int, ...], ...]:
        """Edge indices entering each layer position."""
        acc: list[list[int]] = [[] for _ in self.layers]
        for ei, e in enumerate(self.edges):
            if e.dst in self._pos:
                acc[self._pos[e.dst]].append(ei)
        return tuple(tuple(x) for x in acc)

    @cached_property
    def out_edges(self) -> tuple[tuple[int, ...], ...]:
        """Edge indices leaving each layer position."""
        acc: list[list[int]] = [[] for _ in self.layers]
        for ei, e in enumerate(self.edges):
            if e.src in self._pos:
                acc[self._pos[e.src]].append(ei)
        return tuple(tuple(x) for x in acc)

    @cached_property
    def source_positions(self) -> tuple[int, ...]:
        return tuple(i for i, ins in enumerate(self.in_edges) if not ins)

    @cached_property
    def sink_positions(self) -> tuple[int, ...]:
        return tuple(i for i, outs in enumerate(self.out_edges) if not outs)

    def __repr__(self) -> str:
        return f"NetworkGraph({self.name!r}, {self.n_layers} layers, {self.n_edges} edges)"


@dataclass(frozen=True)
class Subgraph:
    """Weakly connected set of layers dispatched as one unit.

    boundary_in / boundary_out hold (edge index, peer subgraph index) pairs
    for cut edges crossing into / out of this subgraph. Client-side tensors
    are flagged separately: a subgraph containing a network source layer
    receives the network input from the host, one containing a sink layer
    returns the network output to the host.
    """

    network: str
    layer_ids: tuple[int, ...]
    boundary_in: tuple[tuple[int, int], ...]
    boundary_out: tuple[tuple[int, int], ...]
    has_host_input: bool
    has_host_output: bool


@dataclass(frozen=True)
class PartitionedNetwork:
    network: str
    subgraphs: tuple[Subgraph, ...]
    cut_bits: tuple[int, ...]
    repaired: bool = False

    @property
    def n_subgraphs(self) -> int:
        return len(self.subgraphs)


@dataclass(frozen=True)
class ModelGroup:
    id: int
    networks: tuple[str, ...]


@dataclass(frozen=True)
class Scenario:
    groups: tuple[ModelGroup, ...]
    catalog_ref: str = ""
    seed: int = 0

    @property
    def network_names(self) -> tuple[str, ...]:
        return tuple(n for g in self.groups for n in g.networks)


def validate_network(graph: NetworkGraph) -> list[str]:
    """Return a list of invariant violations; empty means the graph is valid."""
    problems: list[str] = []
    ids = [l.id for l in graph.layers]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        problems.append(f"duplicate layer id(s): {dupes}")
    for l in graph.layers:
        if l.param_bytes < 0 or l.mac_count < 0:
            problems.append(f"layer {l.id}: negative param_bytes or mac_count")
    known = set(ids)
    dangling = False
    for e in graph.edges:
        if e.src == e.dst:
            problems.append(f"self-loop on layer {e.src}")
        if e.src not in known or e.dst not in known:
            problems.append(f"dangling edge {e.src}->{e.dst}")
            dangling = True
        if e.tensor_bytes <= 0:
            problems.append(f"edge {e.src}->{e.dst}: tensor_bytes must be > 0")
    if not dangling and not any(p.startswith("self-loop") for p in problems):
        if _has_cycle(graph):
            problems.append("cycle among layers")
        if graph.n_layers > 1 and _n_weak_components(graph) > 1:
            problems.append("graph is not weakly connected")
    return problems


def _has_cycle(graph: NetworkGraph) -> bool:
    indeg = [len(ins) for ins in graph.in_edges]
    queue = [i for i, d in enumerate(indeg) if d == 0]
    seen = 0
    while queue:
        i = queue.pop()
        seen += 1
        for ei in graph.out_edges[i]:
            j = graph.layer_pos(graph.edges[ei].dst)
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    return seen != graph.n_layers


def _n_weak_components(graph: NetworkGraph) -> int:
    uf = _UnionFind(graph.n_layers)
    for e in graph.edges:
        uf.union(graph.layer_pos(e.src), graph.layer_pos(e.dst))
    return len({uf.find(i) for i in range(graph.n_layers)})


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # anchor on the smaller root for deterministic component labels
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def decode_partition(graph: NetworkGraph, cut_bits: Sequence[int]) -> PartitionedNetwork:
    """Split a network into subgraphs along the edges whose bit is 1.

    Subgraphs are the weakly connected components left after removing cut
    edges. If cutting creates a cycle among components, all components on
    each cyclic strongly connected set are merged so the quotient graph is
    always a DAG; the result is flagged as repaired. Output subgraphs are
    topologically ordered.
    """
    if len(cut_bits) != graph.n_edges:
        raise DecodeError(
            f"{graph.name}: expected {graph.n_edges} partition bits, got {len(cut_bits)}"
        )
    n = graph.n_layers
    uf = _UnionFind(n)
    for ei, e in enumerate(graph.edges):
        if not cut_bits[ei]:
            uf.union(graph.layer_pos(e.src), graph.layer_pos(e.dst))

    comp_of = [uf.find(i) for i in range(n)]
    repaired = False
    while True:
        labels = sorted(set(comp_of))
        relabel = {c: i for i, c in enumerate(labels)}
        comp_of = [relabel[c] for c in comp_of]
        n_comp = len(labels)
        quotient: list[set[int]] = [set() for _ in range(n_comp)]
        for ei, e in enumerate(graph.edges):
            if cut_bits[ei]:
                a = comp_of[graph.layer_pos(e.src)]
                b = comp_of[graph.layer_pos(e.dst)]
                if a != b:
                    quotient[a].add(b)
        sccs = _tarjan_sccs(n_comp, quotient)
        if all(len(s) == 1 for s in sccs):
            break
        repaired = True
        merge = {}
        for scc in sccs:
            tgt = min(scc)
            for c in scc:
                merge[c] = tgt
        comp_of = [merge[c] for c in comp_of]

    order = _topo_order_components(graph, comp_of, cut_bits)
    rank = {c: i for i, c in enumerate(order)}

    members: list[list[int]] = [[] for _ in order]
    for pos, c in enumerate(comp_of):
        members[rank[c]].append(pos)
    b_in: list[list[tuple[int, int]]] = [[] for _ in order]
    b_out: list[list[tuple[int, int]]] = [[] for _ in order]
    for ei, e in enumerate(graph.edges):
        if cut_bits[ei]:
            a = rank[comp_of[graph.layer_pos(e.src)]]
            b = rank[comp_of[graph.layer_pos(e.dst)]]
            if a != b:
                b_out[a].append((ei, b))
                b_in[b].append((ei, a))
    sources = set(graph.source_positions)
    sinks = set(graph.sink_positions)
    subgraphs = tuple(
        Subgraph(
            network=graph.name,
            layer_ids=tuple(graph.layers[p].id for p in sorted(ms)),
            boundary_in=tuple(sorted(b_in[i])),
            boundary_out=tuple(sorted(b_out[i])),
            has_host_input=any(p in sources for p in ms),
            has_host_output=any(p in sinks for p in ms),
        )
        for i, ms in enumerate(members)
    )
    return PartitionedNetwork(graph.name, subgraphs, tuple(int(b) for b in cut_bits), repaired)


def _tarjan_sccs(n: int, adj: list[set[int]]) -> list[list[int]]:
    """Iterative Tarjan strongly connected components."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(sorted(adj[root])))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(sorted(adj[w]))))
                    advanced = True
                    break
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
            if not advanced:
                work.pop()
                if work:
                    low[work[-1][0]] = min(low[work[-1][0]], low[v])
                if low[v] == index[v]:
                    scc = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        scc.append(w)
                        if w == v:
                            break
                    sccs.append(scc)
    return sccs


def _topo_order_components(
    graph: NetworkGraph, comp_of: list[int], cut_bits: Sequence[int]
) -> list[int]:
    """Kahn's algorithm over the quotient DAG, ties broken by the smallest
    layer position a component contains (deterministic across runs)."""
    import heapq

    comps = sorted(set(comp_of))
    key = {c: min(i for i, cc in enumerate(comp_of) if cc == c) for c in comps}
    succ: dict[int, set[int]] = {c: set() for c in comps}
    indeg = {c: 0 for c in comps}
    for ei, e in enumerate(graph.edges):
        if cut_bits[ei]:
            a = comp_of[graph.layer_pos(e.src)]
            b = comp_of[graph.layer_pos(e.dst)]
            if a != b and b not in succ[a]:
                succ[a].add(b)
                indeg[b] += 1
    heap = [(key[c], c) for c in comps if indeg[c] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, c = heapq.heappop(heap)
        order.append(c)
        for d in sorted(succ[c]):
            indeg[d] -= 1
            if indeg[d] == 0:
                heapq.heappush(heap, (key[d], d))
    if len(order) != len(comps):
        raise AssertionError("quotient graph not acyclic after repair")
    return order


def decode_mapping(
    pn: PartitionedNetwork, layer_prefs: Sequence[int], graph: NetworkGraph, n_processors: int
) -> tuple[int, ...]:
    """Assign each subgraph the processor receiving the most layer votes.

    layer_prefs holds one processor index per layer (layer gene order). Ties
    go to the lowest processor index.
    """
    if len(layer_prefs) != graph.n_layers:
        raise DecodeError(
            f"{graph.name}: expected {graph.n_layers} mapping genes, got {len(layer_prefs)}"
        )
    for p in layer_prefs:
        if not 0 <= p < n_processors:
            raise DecodeError(f"{graph.name}: processor index {p} out of range")
    out = []
    for sg in pn.subgraphs:
        votes = [0] * n_processors
        for lid in sg.layer_ids:
            votes[layer_prefs[graph.layer_pos(lid)]] += 1
        out.append(max(range(n_processors), key=lambda p: (votes[p], -p)))
    return tuple(out)


def subgraph_hash(sg: Subgraph, graph: NetworkGraph) -> bytes:
    """Content hash of a subgraph, invariant to layer id numbering.

    Per-layer digests are built bottom-up from op kind, parameter size, the
    sorted digests of in-subgraph predecessors, and the sorted sizes of
    tensors entering from outside the subgraph; the subgraph digest combines
    the digests of its internal sink layers. Structurally identical subgraphs
    hash equal, so cached profiling results can be shared.
    """
    inside = {graph.layer_pos(lid) for lid in sg.layer_ids}
    digests: dict[int, bytes] = {}
    pending = sorted(inside)
    while pending:
        rest = []
        for pos in pending:
            pred_digests = []
            boundary_sizes = []
            ready = True
            for ei in graph.in_edges[pos]:
                e = graph.edges[ei]
                spos = graph.layer_pos(e.src)
                if spos in inside:
                    if spos not in digests:
                        ready = False
                        break
                    pred_digests.append(digests[spos])
                else:
                    boundary_sizes.append(e.tensor_bytes)
            if not ready:
                rest.append(pos)
                continue
            layer = graph.layers[pos]
            h = hashlib.blake2b(digest_size=32)
            op = layer.op_kind.encode("utf-8")
            h.update(struct.pack("<I", len(op)))
            h.update(op)
            h.update(struct.pack("<q", layer.param_bytes))
            h.update(struct.pack("<I", len(pred_digests)))
            for d in sorted(pred_digests):
                h.update(d)
            h.update(struct.pack("<I", len(boundary_sizes)))
            for s in sorted(boundary_sizes):
                h.update(struct.pack("<q", s))
            digests[pos] = h.digest()
        if len(rest) == len(pending):
            raise AssertionError("cycle inside subgraph")
        pending = rest

    sink_digests = []
    for pos in inside:
        if not any(graph.layer_pos(graph.edges[ei].dst) in inside for ei in graph.out_edges[pos]):
            sink_digests.append(digests[pos])
    h = hashlib.blake2b(digest_size=32)
    h.update(struct.pack("<I", len(sink_digests)))
    for d in sorted(sink_digests):
        h.update(d)
    return h.digest()


def generate_scenario(
    catalog_names: Sequence[str],
    n_groups: int,
    models_per_group: int,
    seed: int,
    catalog_ref: str = "",
) -> Scenario:
    """Sample model groups without replacement, deterministically per seed."""
    need = n_groups * models_per_group
    if need > len(catalog_names):
        raise ValueError(
            f"catalog has {len(catalog_names)} models, scenario needs {need}"
        )
    rng = random.Random(seed)
    picks = rng.sample(list(catalog_names), need)
    groups = tuple(
        ModelGroup(id=g, networks=tuple(picks[g * models_per_group : (g + 1) * models_per_group]))
        for g in range(n_groups)
    )
    return Scenario(groups=groups, catalog_ref=catalog_ref, seed=seed)
