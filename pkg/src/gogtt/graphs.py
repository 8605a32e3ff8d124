"""Finite combinatorial graphs presented by an involution and a retraction.

A graph is a finite set of integer ids together with an involution
``bar`` and an idempotent retraction ``tau`` onto the fixed points of
``bar``.  Fixed points are the vertices; every other element is an
oriented edge, and ``tau`` sends it to its terminal vertex.  The
unoriented edge underlying an oriented edge ``e`` is the orbit
``{e, bar(e)}``.

All ids are opaque small integers and every canonical order used below is
ascending-id, so the algorithms built on top of this module are
deterministic.  Graphs are immutable; operations return new graphs.
"""

from __future__ import annotations

from collections import deque

from .errors import ValidationError


class Graph:
    """A finite graph as (elements, bar, tau)."""

    __slots__ = ("elements", "bar_map", "tau_map", "_vertices", "_edges")

    def __init__(self, elements, bar_map, tau_map):
        self.elements = frozenset(elements)
        self.bar_map = dict(bar_map)
        self.tau_map = dict(tau_map)
        self._validate()
        self._vertices = tuple(sorted(x for x in self.elements if self.bar_map[x] == x))
        self._edges = tuple(sorted(x for x in self.elements if self.bar_map[x] != x))

    def _validate(self):
        for x in self.elements:
            if x not in self.bar_map or x not in self.tau_map:
                raise ValidationError(f"element {x} missing bar/tau")
            if self.bar_map[self.bar_map[x]] != x:
                raise ValidationError(f"bar not an involution at {x}")
            t = self.tau_map[x]
            if t not in self.elements or self.tau_map[t] != t:
                raise ValidationError(f"tau not a retraction at {x}")
            if self.bar_map[t] != t:
                raise ValidationError(f"tau({x}) is not a vertex")
        for x in self.elements:
            if self.bar_map[x] == x and self.tau_map[x] != x:
                raise ValidationError(f"vertex {x} with tau(x) != x")

    # -- basic structure -------------------------------------------------

    @property
    def vertices(self):
        return self._vertices

    @property
    def oriented_edges(self):
        return self._edges

    def unoriented_edges(self):
        """One representative per bar-orbit, the smaller id."""
        return tuple(e for e in self._edges if e < self.bar_map[e])

    def bar(self, x):
        return self.bar_map[x]

    def tau(self, x):
        return self.tau_map[x]

    def is_vertex(self, x):
        return self.bar_map[x] == x

    def terminal(self, e):
        return self.tau_map[e]

    def initial(self, e):
        return self.tau_map[self.bar_map[e]]

    def star(self, v):
        """Oriented edges with terminal vertex v, ascending id."""
        if v not in self.elements or not self.is_vertex(v):
            raise ValidationError(f"unknown vertex id {v}")
        return [e for e in self._edges if self.tau_map[e] == v]

    def valence(self, v):
        return len(self.star(v))

    # -- construction helpers --------------------------------------------

    @classmethod
    def from_pairs(cls, n_vertices, pairs, first_id=0):
        """Build a graph with vertices ``first_id..first_id+n-1`` and one
        unoriented edge per (initial, terminal) pair.

        Returns (graph, oriented edge ids in pair order); the returned
        orientation has ``tau(e) = terminal``.
        """
        verts = list(range(first_id, first_id + n_vertices))
        elements = set(verts)
        bar_map = {v: v for v in verts}
        tau_map = {v: v for v in verts}
        next_id = first_id + n_vertices
        edge_ids = []
        for (u, v) in pairs:
            e, eb = next_id, next_id + 1
            next_id += 2
            elements.update((e, eb))
            bar_map[e], bar_map[eb] = eb, e
            tau_map[e], tau_map[eb] = v, u
            edge_ids.append(e)
        return cls(elements, bar_map, tau_map), edge_ids

    # -- connectivity ----------------------------------------------------

    def components(self):
        """Vertex sets of connected components, each sorted, in id order."""
        seen = set()
        comps = []
        for v in self._vertices:
            if v in seen:
                continue
            comp = [v]
            seen.add(v)
            queue = deque([v])
            while queue:
                w = queue.popleft()
                for e in self.star(w):
                    u = self.initial(e)
                    if u not in seen:
                        seen.add(u)
                        comp.append(u)
                        queue.append(u)
            comps.append(sorted(comp))
        return comps

    def is_connected(self):
        return len(self.components()) <= 1

    def spanning_tree(self, root):
        """Maximal subtree by BFS from root, taking smallest edge ids first.

        Returns a frozenset of oriented edge ids closed under bar.
        """
        if not self.is_connected():
            raise ValidationError("graph is not connected")
        if root not in self._vertices:
            raise ValidationError(f"unknown vertex id {root}")
        tree = set()
        reached = {root}
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for e in self.star(v):
                u = self.initial(e)
                if u not in reached:
                    reached.add(u)
                    tree.add(e)
                    tree.add(self.bar_map[e])
                    queue.append(u)
        return frozenset(tree)

    def betti_number(self):
        return len(self._edges) // 2 - len(self._vertices) + len(self.components())

    # -- subdivision and collapse ----------------------------------------

    def _fresh_ids(self, count):
        start = (max(self.elements) + 1) if self.elements else 0
        return list(range(start, start + count))

    def subdivide(self, e, k):
        """Replace the unoriented edge of e by a path of k edges.

        Returns (graph, renaming) where renaming maps e and bar(e) to the
        lists of new oriented edge ids spelling the same traversal.
        k = 1 returns the graph unchanged with the identity renaming.
        """
        if k < 1:
            raise ValidationError("subdivision count must be >= 1")
        if self.is_vertex(e):
            raise ValidationError(f"{e} is a vertex")
        eb = self.bar_map[e]
        if k == 1:
            return self, {e: [e], eb: [eb]}
        u, v = self.initial(e), self.terminal(e)
        fresh = self._fresh_ids(3 * k - 1)
        new_verts = fresh[: k - 1]
        new_edges = fresh[k - 1 :]
        elements = set(self.elements) - {e, eb}
        bar_map = {x: y for x, y in self.bar_map.items() if x not in (e, eb)}
        tau_map = {x: y for x, y in self.tau_map.items() if x not in (e, eb)}
        for w in new_verts:
            elements.add(w)
            bar_map[w] = w
            tau_map[w] = w
        chain = [u] + new_verts + [v]
        forward = []
        for i in range(k):
            a, ab = new_edges[2 * i], new_edges[2 * i + 1]
            elements.update((a, ab))
            bar_map[a], bar_map[ab] = ab, a
            tau_map[a], tau_map[ab] = chain[i + 1], chain[i]
            forward.append(a)
        renaming = {e: forward, eb: [bar_map[a] for a in reversed(forward)]}
        return Graph(elements, bar_map, tau_map), renaming

    def collapse(self, edges):
        """Collapse the subgraph spanned by the given oriented edges.

        Each component of the spanned subgraph becomes a single vertex (the
        least vertex id of the component).  Returns (graph, GraphMorphism).
        """
        closed = set()
        for e in edges:
            if self.is_vertex(e):
                raise ValidationError(f"{e} is a vertex")
            closed.add(e)
            closed.add(self.bar_map[e])
        # components of the spanned subgraph
        rep = {}
        for v in self._vertices:
            rep[v] = v
        adj = {}
        for e in closed:
            adj.setdefault(self.terminal(e), set()).add(self.initial(e))
        seen = set()
        for v in sorted(adj):
            if v in seen:
                continue
            comp = {v}
            queue = deque([v])
            seen.add(v)
            while queue:
                w = queue.popleft()
                for u in adj.get(w, ()):
                    if u not in seen:
                        seen.add(u)
                        comp.add(u)
                        queue.append(u)
            r = min(comp)
            for w in comp:
                rep[w] = r
        elements = set()
        bar_map = {}
        tau_map = {}
        mapping = {}
        for v in self._vertices:
            mapping[v] = rep[v]
            elements.add(rep[v])
            bar_map[rep[v]] = rep[v]
            tau_map[rep[v]] = rep[v]
        for e in self._edges:
            if e in closed:
                mapping[e] = rep[self.terminal(e)]
            else:
                mapping[e] = e
                elements.add(e)
        for e in self._edges:
            if e not in closed:
                bar_map[e] = self.bar_map[e]
                tau_map[e] = rep[self.terminal(e)]
        quotient = Graph(elements, bar_map, tau_map)
        return quotient, GraphMorphism(self, quotient, mapping)

    def __eq__(self, other):
        return (
            isinstance(other, Graph)
            and self.elements == other.elements
            and self.bar_map == other.bar_map
            and self.tau_map == other.tau_map
        )

    def __hash__(self):
        return hash((self.elements, tuple(sorted(self.tau_map.items()))))

    def __repr__(self):
        return f"Graph(V={len(self._vertices)}, E={len(self._edges) // 2})"


class GraphMorphism:
    """A map of graphs commuting with bar and tau.

    Sends vertices to vertices and each edge either to an edge or to a
    vertex (a collapsed edge).
    """

    __slots__ = ("source", "target", "mapping")

    def __init__(self, source, target, mapping):
        self.source = source
        self.target = target
        self.mapping = dict(mapping)
        for x in source.elements:
            if x not in self.mapping:
                raise ValidationError(f"morphism undefined on {x}")
            y = self.mapping[x]
            if y not in target.elements:
                raise ValidationError(f"morphism image {y} not in target")
        for x in source.elements:
            y = self.mapping[x]
            if self.mapping[source.bar_map[x]] != target.bar_map[y]:
                raise ValidationError(f"morphism does not commute with bar at {x}")
            if self.mapping[source.tau_map[x]] != target.tau_map[y]:
                raise ValidationError(f"morphism does not commute with tau at {x}")
            if source.is_vertex(x) and not target.is_vertex(y):
                raise ValidationError(f"vertex {x} not sent to a vertex")

    def __call__(self, x):
        return self.mapping[x]

    def collapses(self, e):
        return self.target.is_vertex(self.mapping[e])

    def compose(self, earlier):
        """self o earlier."""
        if earlier.target is not self.source and earlier.target != self.source:
            raise ValidationError("composition mismatch")
        return GraphMorphism(
            earlier.source,
            self.target,
            {x: self.mapping[y] for x, y in earlier.mapping.items()},
        )

    def is_isomorphism(self):
        return len(set(self.mapping.values())) == len(self.target.elements) == len(
            self.source.elements
        )


class DirectedMultigraph:
    """Directed multigraph on vertices 0..n-1, used for irreducibility tests."""

    __slots__ = ("n", "arcs")

    def __init__(self, n, arcs):
        self.n = n
        self.arcs = {}
        for (i, j), m in dict(arcs).items():
            if m < 0:
                raise ValidationError("negative multiplicity")
            if not (0 <= i < n and 0 <= j < n):
                raise ValidationError("arc endpoint out of range")
            if m:
                self.arcs[(i, j)] = m

    @classmethod
    def from_matrix(cls, matrix):
        """Arcs j -> i with multiplicity matrix[i][j]."""
        n = len(matrix)
        arcs = {}
        for i in range(n):
            for j in range(n):
                if matrix[i][j]:
                    arcs[(j, i)] = matrix[i][j]
        return cls(n, arcs)

    def _reach(self, start, forward=True):
        adj = {}
        for (i, j) in self.arcs:
            a, b = (i, j) if forward else (j, i)
            adj.setdefault(a, set()).add(b)
        seen = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in adj.get(v, ()):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    def is_strongly_connected(self):
        if self.n <= 1:
            return True
        return (
            len(self._reach(0, True)) == self.n
            and len(self._reach(0, False)) == self.n
        )
