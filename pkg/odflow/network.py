"""
    network module.

    Directed networks, the canonical test topologies, edge-list ingestion
    and bounded loop-free path enumeration.

    Node ids are 0-based inside the package and 1-based in every file,
    label and report, so that they read like the numbered figures of grid
    networks (node 1 top-left, row-major).
"""
import logging
import os
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .cache import SimpleCache
from .odflowerrors import InputError, NetworkError
from .utils import parse_grid

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
BUILTIN_NETWORKS = {"geant": "geant.txt"}

CACHE = SimpleCache()


def enable_cache(cache_object=None):
    """ enable memoization of enumerate_paths

    Parameters:
    -----------
    cache_object: object, optional
        A Django compliant cache object. If None (default), a SimpleCache
        object is used.
    """
    global CACHE
    CACHE = cache_object if cache_object is not None else SimpleCache()


def disable_cache():
    global CACHE
    CACHE = None


@dataclass(frozen=True)
class Network(object):
    """ Directed graph with stable link order.

    Parameters:
    -----------
    node_count: int
        Number of nodes, ids are 0 .. node_count - 1
    links: sequence of (tail, head)
        0-based directed links; their position is the link index used by
        every tensor and flow series.
    name: str
        Free text label
    """
    node_count: int
    links: tuple
    name: str = ""
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if int(self.node_count) < 1:
            raise NetworkError("a network needs at least one node")
        object.__setattr__(self, "node_count", int(self.node_count))
        links = tuple((int(a), int(b)) for a, b in self.links)
        index = {}
        for k, (a, b) in enumerate(links):
            check_link(a, b, self.node_count, index)
            index[(a, b)] = k
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "_index", index)

    @property
    def n_links(self):
        return len(self.links)

    @property
    def tails(self):
        return np.array([a for a, _ in self.links], dtype=int)

    @property
    def heads(self):
        return np.array([b for _, b in self.links], dtype=int)

    def has_link(self, tail, head):
        return (tail, head) in self._index

    def link_index(self, tail, head):
        try:
            return self._index[(tail, head)]
        except KeyError:
            raise NetworkError("no link %i->%i in %s"
                               % (tail + 1, head + 1, self.name or "network"))

    def link_label(self, k):
        a, b = self.links[k]
        return "%i->%i" % (a + 1, b + 1)

    def incidence(self):
        """ (in, out) node-by-link 0/1 matrices: in[n, l] = 1 when link l
        ends at n, out[n, l] = 1 when it starts at n.
        """
        h_in = np.zeros((self.node_count, self.n_links))
        h_out = np.zeros((self.node_count, self.n_links))
        k = np.arange(self.n_links)
        h_in[self.heads, k] = 1.0
        h_out[self.tails, k] = 1.0
        return h_in, h_out

    def to_digraph(self):
        g = nx.DiGraph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(self.links)
        return g

    def reversed(self):
        """ Same nodes, every link turned around, link order kept """
        return Network(self.node_count, [(b, a) for a, b in self.links],
                       name=(self.name + "-reversed") if self.name
                       else "reversed")


def check_link(tail, head, node_count, seen=(), line=None):
    if tail == head:
        raise NetworkError("self-loop on node %i" % (tail + 1), line)
    for node in (tail, head):
        if not 0 <= node < node_count:
            raise NetworkError("node %i out of range 1..%i"
                               % (node + 1, node_count), line)
    if (tail, head) in seen:
        raise NetworkError("duplicate link %i->%i" % (tail + 1, head + 1),
                           line)


def build_grid(rows, cols, bidirectional=True):
    """ 4-neighbour lattice with row-major node ids.

    The unidirectional lattice only has rightward and downward links, so
    every path runs from the top-left corner towards the bottom-right one.
    Links are listed node by node, in the order right, down, left, up.
    """
    if rows < 2 or cols < 2:
        raise NetworkError("grid needs at least 2 rows and 2 columns, "
                           "got %ix%i" % (rows, cols))
    links = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                links.append((u, u + 1))
            if r + 1 < rows:
                links.append((u, u + cols))
            if bidirectional:
                if c > 0:
                    links.append((u, u - 1))
                if r > 0:
                    links.append((u, u - cols))
    name = "grid-%ix%i-%s" % (rows, cols, "bi" if bidirectional else "uni")
    return Network(rows * cols, links, name=name)


def build_chain(n=3):
    """ Directed chain 1 -> 2 -> ... -> n """
    if n < 2:
        raise NetworkError("a chain needs at least 2 nodes")
    return Network(n, [(k, k + 1) for k in range(n - 1)], name="chain-%i" % n)


def load_edge_list(text, name="edge-list"):
    """ Parses an edge-list document.

    The first non-comment line reads "nodes <N>", every following line
    "<tail> <head>" with 1-based ids. "#" starts a comment.
    """
    node_count = None
    links = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if node_count is None:
            if len(fields) != 2 or fields[0] != "nodes":
                raise NetworkError("expected 'nodes <N>' header", lineno)
            try:
                node_count = int(fields[1])
            except ValueError:
                raise NetworkError("bad node count %r" % fields[1], lineno)
            if node_count < 1:
                raise NetworkError("node count must be positive", lineno)
            continue
        if len(fields) != 2:
            raise NetworkError("malformed link line %r" % raw.strip(), lineno)
        try:
            tail, head = int(fields[0]) - 1, int(fields[1]) - 1
        except ValueError:
            raise NetworkError("malformed link line %r" % raw.strip(), lineno)
        check_link(tail, head, node_count, seen, lineno)
        seen.add((tail, head))
        links.append((tail, head))
    if node_count is None:
        raise NetworkError("missing 'nodes <N>' header")
    return Network(node_count, links, name=name)


def read_edge_list(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except IOError as e:
        raise InputError("cannot read edge list %s: %s" % (path, e))
    name = os.path.splitext(os.path.basename(path))[0]
    return load_edge_list(text, name=name)


def dump_edge_list(net):
    lines = ["# %s" % (net.name or "network"), "nodes %i" % net.node_count]
    lines.extend("%i %i" % (a + 1, b + 1) for a, b in net.links)
    return "\n".join(lines) + "\n"


def builtin_network(name):
    try:
        filename = BUILTIN_NETWORKS[name.lower()]
    except KeyError:
        raise NetworkError("unknown built-in network %r (known: %s)"
                           % (name, ", ".join(sorted(BUILTIN_NETWORKS))))
    return read_edge_list(os.path.join(DATA_DIR, filename))


def network_from_spec(spec):
    """ Network from a short text description.

    Accepted forms: "3x3uni", "3x3bi", "8x8bi" (any RxC), "grid:RxC:bi",
    "grid:RxC:uni", "chain", "chain:N", a built-in name such as "geant", or
    the path of an edge-list file.
    """
    text = spec.strip()
    low = text.lower()
    if low in BUILTIN_NETWORKS:
        return builtin_network(low)
    if low == "chain":
        return build_chain(3)
    if low.startswith("chain:"):
        try:
            return build_chain(int(low.split(":", 1)[1]))
        except ValueError:
            raise NetworkError("cannot interpret network %r" % spec)
    if low.startswith("grid:"):
        parts = low.split(":")
        try:
            rows, cols = parse_grid(parts[1])
        except (ValueError, IndexError):
            raise NetworkError("cannot interpret network %r" % spec)
        bidirectional = len(parts) < 3 or parts[2] != "uni"
        return build_grid(rows, cols, bidirectional)
    for suffix, bidirectional in (("bi", True), ("uni", False)):
        if low.endswith(suffix) and "x" in low[:-len(suffix)]:
            try:
                rows, cols = parse_grid(low[:-len(suffix)])
            except ValueError:
                break
            return build_grid(rows, cols, bidirectional)
    if os.path.exists(text):
        return read_edge_list(text)
    raise NetworkError("cannot interpret network %r" % spec)


@dataclass(frozen=True)
class Path(object):
    """ Loop-free path: node ids and the link indices joining them """
    nodes: tuple
    links: tuple

    @property
    def length(self):
        return len(self.links)

    @property
    def origin(self):
        return self.nodes[0]

    @property
    def destination(self):
        return self.nodes[-1]

    def label(self):
        return "-".join(str(n + 1) for n in self.nodes)


def make_path(net, nodes, tau_max=None):
    nodes = tuple(int(n) for n in nodes)
    if len(nodes) < 2:
        raise NetworkError("a path needs at least one link")
    if len(set(nodes)) != len(nodes):
        raise NetworkError("path %s is not loop-free"
                           % "-".join(str(n + 1) for n in nodes))
    if tau_max is not None and len(nodes) - 1 > tau_max:
        raise NetworkError("path %s is longer than tau_max=%i"
                           % ("-".join(str(n + 1) for n in nodes), tau_max))
    links = tuple(net.link_index(a, b) for a, b in zip(nodes[:-1], nodes[1:]))
    return Path(nodes, links)


@dataclass(frozen=True)
class PathSet(object):
    """ Paths of at most tau_max links, sorted by node sequence.

    od_pairs and origins are derived from the paths: od_pairs in
    lexicographic (origin, destination) order, origins ascending. This
    order indexes OD flow series and the origin axis of assignment tensors.
    """
    network: Network
    tau_max: int
    paths: tuple
    od_pairs: tuple = field(init=False)
    origins: tuple = field(init=False)
    _od_index: dict = field(init=False, repr=False, compare=False, hash=False)
    _origin_index: dict = field(init=False, repr=False, compare=False,
                                hash=False)

    def __post_init__(self):
        if self.tau_max < 1:
            raise NetworkError("tau_max must be >= 1")
        paths = tuple(sorted(set(self.paths), key=lambda p: p.nodes))
        for p in paths:
            if p.length > self.tau_max:
                raise NetworkError("path %s is longer than tau_max=%i"
                                   % (p.label(), self.tau_max))
        od_pairs = tuple(sorted(set((p.origin, p.destination) for p in paths)))
        origins = tuple(sorted(set(o for o, _ in od_pairs)))
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "od_pairs", od_pairs)
        object.__setattr__(self, "origins", origins)
        object.__setattr__(self, "_od_index",
                           dict((od, k) for k, od in enumerate(od_pairs)))
        object.__setattr__(self, "_origin_index",
                           dict((o, k) for k, o in enumerate(origins)))

    @classmethod
    def from_node_sequences(cls, network, tau_max, sequences):
        return cls(network, tau_max,
                   tuple(make_path(network, s, tau_max) for s in sequences))

    @property
    def n_paths(self):
        return len(self.paths)

    def od_index(self, origin, destination):
        return self._od_index[(origin, destination)]

    def origin_index(self, origin):
        return self._origin_index[origin]

    def path_od(self):
        """ OD-pair position of every path """
        return np.array([self._od_index[(p.origin, p.destination)]
                         for p in self.paths], dtype=int)

    def path_origin(self):
        """ origin position of every path """
        return np.array([self._origin_index[p.origin] for p in self.paths],
                        dtype=int)

    def paths_of_od(self):
        """ tuple of path positions for every OD pair """
        groups = [[] for _ in self.od_pairs]
        for k, p in enumerate(self.paths):
            groups[self._od_index[(p.origin, p.destination)]].append(k)
        return tuple(tuple(g) for g in groups)

    def od_labels(self):
        return ["%i~%i" % (o + 1, d + 1) for o, d in self.od_pairs]

    def origin_labels(self):
        return ["%i" % (o + 1) for o in self.origins]

    def reversed(self):
        """ PathSet of the reversed network holding every path backwards """
        rev = self.network.reversed()
        return PathSet.from_node_sequences(rev, self.tau_max,
                                           [p.nodes[::-1] for p in self.paths])


def enumerate_paths(net, tau_max):
    """ All loop-free directed paths with 1 .. tau_max links.

    Results are memoized per (network, tau_max) while the cache is enabled.
    """
    if tau_max < 1:
        raise NetworkError("tau_max must be >= 1")
    key = ("paths", net, int(tau_max))
    if CACHE is not None:
        cached = CACHE.get(key)
        if cached is not None:
            return cached
    g = net.to_digraph()
    sequences = []
    for source in range(net.node_count):
        reach = nx.single_source_shortest_path_length(g, source,
                                                      cutoff=tau_max)
        for target in sorted(reach):
            if target == source:
                continue
            sequences.extend(tuple(p) for p in
                             nx.all_simple_paths(g, source, target,
                                                 cutoff=tau_max))
    paths = PathSet.from_node_sequences(net, tau_max, sequences)
    logger.debug("%s: %i paths, %i OD pairs, %i origins (tau_max=%i)",
                 net.name or "network", paths.n_paths, len(paths.od_pairs),
                 len(paths.origins), tau_max)
    if CACHE is not None:
        CACHE.set(key, paths)
    return paths
