"""Graphs of groups, their paths, homotopy and normal forms.

A path alternates group elements and oriented edges,
``g0 e1 g1 e2 ... ek gk``, with each ``gi`` in the vertex group where it
sits.  Two moves generate homotopy rel endpoints: removing backtracks
``e 1 ebar`` whose middle element lies in the edge-group image, and
pushing edge-group elements across an edge.  Fixing a coset transversal
for every oriented edge singles out one representative per homotopy
class, computed by a left-to-right sweep; loop equality, multiplication
and inversion all reduce to it.  The fundamental group itself is never
materialized: statements about the universal object are evaluated
through these normal forms.
"""

from __future__ import annotations

from .errors import (
    Undecided,
    UnsupportedCollapse,
    ValidationError,
)
from .graphs import Graph
from .groups import (
    CosetTransversal,
    GroupHandle,
    Monomorphism,
    image_membership,
)


class GraphOfGroups:
    """A connected graph with vertex/edge groups and edge monomorphisms."""

    def __init__(self, graph, vertex_groups, edge_groups, monos, transversals=None):
        self.graph = graph
        self.vertex_groups = dict(vertex_groups)
        self.edge_groups = {}
        for e, h in dict(edge_groups).items():
            self.edge_groups[min(e, graph.bar(e))] = h
        self.monos = dict(monos)
        self._transversals = dict(transversals or {})

    # ------------------------------------------------------------------

    def vertex_group(self, v):
        return self.vertex_groups[v]

    def edge_group(self, e):
        return self.edge_groups[min(e, self.graph.bar(e))]

    def mono(self, e):
        return self.monos[e]

    def transversal(self, e):
        if e not in self._transversals:
            self._transversals[e] = CosetTransversal(self.monos[e])
        return self._transversals[e]

    def identity_at(self, v):
        return self.vertex_groups[v].identity()

    def all_groups_trivial(self):
        return all(h.is_trivial_group() for h in self.vertex_groups.values()) and all(
            h.is_trivial_group() for h in self.edge_groups.values()
        )

    def trivial_edge_groups(self):
        return all(h.is_trivial_group() for h in self.edge_groups.values())

    def validate(self):
        """Structural report; empty list means valid."""
        problems = []
        g = self.graph
        if not g.vertices:
            problems.append("graph must be connected and nonempty")
            return problems
        if not g.is_connected():
            problems.append("graph must be connected and nonempty")
        for v in g.vertices:
            if v not in self.vertex_groups:
                problems.append(f"vertex {v} has no group")
        for e in g.unoriented_edges():
            if min(e, g.bar(e)) not in self.edge_groups:
                problems.append(f"edge {e} has no group")
        for e in g.oriented_edges:
            m = self.monos.get(e)
            if m is None:
                problems.append(f"edge {e} has no monomorphism")
                continue
            if m.source is not self.edge_group(e):
                problems.append(f"mono of {e} does not start at the edge group")
            if m.target is not self.vertex_groups[g.tau(e)]:
                problems.append(f"mono of {e} does not end at the vertex group")
            if m.source.order_of_group() is not None:
                if len(m.image_elements()) != m.source.order_of_group():
                    problems.append(f"mono not injective on edge {e}")
        for e in g.oriented_edges:
            if e in self.monos:
                try:
                    t = self.transversal(e)
                    s, h = t.rep(self.vertex_groups[g.tau(e)].identity())
                    if not (s.is_identity() and h.is_identity()):
                        problems.append(f"transversal of {e} does not contain 1")
                except Undecided:
                    pass
        return problems

    def __repr__(self):
        return f"GraphOfGroups({self.graph!r})"


def trivial_gog(graph):
    """The graph of groups with every group trivial."""
    triv = GroupHandle.trivial()
    vg = {v: triv for v in graph.vertices}
    eg = {e: triv for e in graph.unoriented_edges()}
    monos = {e: Monomorphism(triv, triv, [], check=False) for e in graph.oriented_edges}
    return GraphOfGroups(graph, vg, eg, monos)


class GoGPath:
    """An alternating sequence g0 e1 g1 ... ek gk with vertex endpoints."""

    __slots__ = ("gog", "start", "items")

    def __init__(self, gog, start, items, check=True):
        self.gog = gog
        self.start = start
        self.items = tuple(items)
        if check:
            self._validate()

    def _validate(self):
        g = self.gog.graph
        if len(self.items) % 2 == 0:
            raise ValidationError("path must alternate elements and edges")
        v = self.start
        for i, item in enumerate(self.items):
            if i % 2 == 0:
                if item.handle is not self.gog.vertex_groups[v]:
                    raise ValidationError(f"group letter {i} not in the group at {v}")
            else:
                if g.initial(item) != v:
                    raise ValidationError(f"edge {item} does not start at {v}")
                v = g.tau(item)

    @staticmethod
    def constant(gog, v, g=None):
        return GoGPath(gog, v, [g if g is not None else gog.identity_at(v)])

    @property
    def end(self):
        g = self.gog.graph
        if len(self.items) == 1:
            return self.start
        return g.tau(self.items[-2])

    def edges(self):
        return [self.items[i] for i in range(1, len(self.items), 2)]

    def letters(self):
        return [self.items[i] for i in range(0, len(self.items), 2)]

    def edge_count(self):
        return len(self.items) // 2

    def is_loop(self):
        return self.start == self.end

    def __mul__(self, other):
        if other.gog is not self.gog or other.start != self.end:
            raise ValidationError("paths do not compose")
        merged = self.items[-1] * other.items[0]
        return GoGPath(
            self.gog, self.start, self.items[:-1] + (merged,) + other.items[1:], check=False
        )

    def reverse(self):
        g = self.gog.graph
        items = []
        for i in range(len(self.items) - 1, -1, -1):
            if i % 2 == 0:
                items.append(self.items[i].inverse())
            else:
                items.append(g.bar(self.items[i]))
        return GoGPath(self.gog, self.end, items, check=False)

    def __eq__(self, other):
        return (
            isinstance(other, GoGPath)
            and other.gog is self.gog
            and other.start == self.start
            and other.items == self.items
        )

    def __hash__(self):
        return hash((self.start, tuple((x.key if hasattr(x, "key") else x) for x in self.items)))

    def __repr__(self):
        parts = []
        for i, item in enumerate(self.items):
            if i % 2 == 0:
                if not item.is_identity() or len(self.items) == 1:
                    parts.append(repr(item))
            else:
                parts.append(f"e{item}")
        return " ".join(parts) if parts else "1"


# ----------------------------------------------------------------------
# homotopy


def tighten(path):
    """Remove backtracks e g ebar whose middle g lies in the edge-group
    image, until none remain.  Never lengthens the path; idempotent."""
    gog = path.gog
    g = gog.graph
    items = list(path.items)
    j = 0
    while 2 * j + 3 < len(items):
        e = items[2 * j + 1]
        e2 = items[2 * j + 3]
        mid = items[2 * j + 2]
        if e2 == g.bar(e):
            h = image_membership(gog.mono(e), mid)
            if h is not None:
                carried = gog.mono(g.bar(e))(h)
                merged = items[2 * j] * carried * items[2 * j + 4]
                items[2 * j : 2 * j + 5] = [merged]
                j = max(0, j - 1)
                continue
        j += 1
    return GoGPath(gog, path.start, items, check=False)


def normal_form(path):
    """The unique representative of the homotopy class rel endpoints.

    Left-to-right sweep: each letter before an edge is replaced by its
    coset representative, the edge-group remainder is pushed across, and
    trivial backtracks are deleted.
    """
    gog = path.gog
    g = gog.graph
    items = list(path.items)
    j = 0
    while 2 * j + 1 < len(items):
        e = items[2 * j + 1]
        t = gog.transversal(g.bar(e))
        s, h = t.rep(items[2 * j])
        items[2 * j] = s
        items[2 * j + 2] = gog.mono(e)(h) * items[2 * j + 2]
        if s.is_identity() and j >= 1 and items[2 * j - 1] == g.bar(e):
            merged = items[2 * j - 2] * items[2 * j + 2]
            items[2 * j - 2 : 2 * j + 3] = [merged]
            j -= 1
        else:
            j += 1
    return GoGPath(gog, path.start, items, check=False)


def paths_homotopic(a, b):
    return a.start == b.start and normal_form(a) == normal_form(b)


def loops_equal(a, b):
    if not (a.is_loop() and b.is_loop()):
        raise ValidationError("loops required")
    if a.start != b.start:
        raise ValidationError("basepoint mismatch")
    return normal_form(a) == normal_form(b)


def loop_mul(a, b):
    if a.start != b.start or not (a.is_loop() and b.is_loop()):
        raise ValidationError("basepoint mismatch")
    return normal_form(a * b)


def loop_inv(a):
    if not a.is_loop():
        raise ValidationError("loop required")
    return normal_form(a.reverse())


def trivial_loop(gog, v):
    return GoGPath.constant(gog, v)


# ----------------------------------------------------------------------
# random homotopy moves (test oracle support)


def random_homotopy_move(path, rng):
    """One random homotopy move applied to the path."""
    gog = path.gog
    g = gog.graph
    items = list(path.items)
    choices = []
    # insertion points
    for i in range(0, len(items), 2):
        v = path.start if i == 0 else g.tau(items[i - 1])
        for e in g.star(v):
            choices.append(("insert", i, g.bar(e)))
    # push moves
    for i in range(1, len(items), 2):
        eg = gog.edge_group(items[i])
        if eg.order_of_group() is not None and eg.order_of_group() > 1:
            choices.append(("push", i, None))
    # removals
    for i in range(1, len(items) - 2, 2):
        if items[i + 2] == g.bar(items[i]):
            choices.append(("remove", i, None))
    if not choices:
        return path
    kind, i, edge = rng.choice(choices)
    if kind == "insert":
        v2 = g.tau(edge)
        one2 = gog.identity_at(v2)
        v = path.start if i == 0 else g.tau(items[i - 1])
        one = gog.identity_at(v)
        items[i : i + 1] = [items[i], edge, one2, g.bar(edge), one]
    elif kind == "push":
        e = items[i]
        eg = gog.edge_group(e)
        h = rng.choice(eg.elements())
        items[i - 1] = items[i - 1] * gog.mono(g.bar(e))(h)
        items[i + 1] = gog.mono(e)(h).inverse() * items[i + 1]
    else:
        e = items[i]
        h = image_membership(gog.mono(e), items[i + 1])
        if h is not None:
            carried = gog.mono(g.bar(e))(h)
            merged = items[i - 1] * carried * items[i + 3]
            items[i - 1 : i + 4] = [merged]
    return GoGPath(gog, path.start, items, check=False)


# ----------------------------------------------------------------------
# presentation


class Presentation:
    """Generators and relators read off a spanning tree.

    Relator kinds: "vertex" (backend relations), "edge" (edge-group
    compatibility across an edge), "bar" (reversal), "tree" (spanning
    tree edges die).  Words are token lists; "e<n>" tokens are edge
    letters, anything else is a vertex-group generator, and a "^-1"
    suffix marks inversion.
    """

    def __init__(self, generators, relators, tree):
        self.generators = list(generators)
        self.relators = list(relators)
        self.tree = frozenset(tree)

    def simplified(self):
        """Eliminate tree letters and reversal letters."""
        dead = {f"e{e}" for e in self.tree}
        bars = {}
        for kind, word in self.relators:
            if kind == "bar":
                bars[word[0]] = word[1]
        out_rel = []
        for kind, word in self.relators:
            if kind in ("bar", "tree"):
                continue
            w = [t for t in word if t.split("^")[0] not in dead]
            w2 = []
            for t in w:
                base, inv = (t[:-3], True) if t.endswith("^-1") else (t, False)
                if base in bars:
                    base, inv = bars[base], not inv
                w2.append(base + "^-1" if inv else base)
            if w2:
                out_rel.append((kind, w2))
        gens = [
            t
            for t in self.generators
            if t not in dead and t not in bars and f"{t}" not in dead
        ]
        return Presentation(gens, out_rel, frozenset())


def _backend_presentation(handle):
    """Generator names and relator token lists for one vertex group."""
    gens = [repr(g) for g in handle.generators()]
    relators = []
    if handle.tag == "cyclic" and handle.order:
        relators.append([handle.gen_name] * handle.order)
    elif handle.tag == "finite":
        els = handle.elements()
        for a in els:
            for b in els:
                if a.is_identity() or b.is_identity():
                    continue
                c = a * b
                word = [repr(a), repr(b)]
                if not c.is_identity():
                    word.append(repr(c) + "^-1")
                relators.append(word)
    elif handle.tag == "freeprod":
        for f in handle.factors:
            g2, r2 = _backend_presentation(f)
            relators.extend(r2)
    return gens, relators


def presentation(gog, basepoint):
    """Generators and the three relator families over a BFS spanning tree."""
    g = gog.graph
    tree = g.spanning_tree(basepoint)
    gens = []
    relators = []
    for v in g.vertices:
        names, rels = _backend_presentation(gog.vertex_groups[v])
        gens.extend(names)
        relators.extend(("vertex", r) for r in rels)
    for e in g.oriented_edges:
        gens.append(f"e{e}")
    for e in g.unoriented_edges():
        eb = g.bar(e)
        relators.append(("bar", [f"e{eb}", f"e{e}"]))
        eg = gog.edge_group(e)
        for h in eg.generators():
            left = repr(gog.mono(eb)(h))
            right = repr(gog.mono(e)(h))
            word = []
            if left != "1":
                word.append(left)
            word.append(f"e{e}")
            if right != "1":
                word.append(right + "^-1")
            word.append(f"e{e}^-1")
            relators.append(("edge", word))
    for e in tree:
        if e < g.bar(e):
            relators.append(("tree", [f"e{e}"]))
    # expose only the tree's unoriented representatives in .tree
    return Presentation(gens, relators, {e for e in tree})


# ----------------------------------------------------------------------
# subgraphs and collapses


def subgraph_of_groups(gog, vertices, edges):
    """The restriction to a connected subgraph."""
    g = gog.graph
    closed = set()
    for e in edges:
        closed.add(e)
        closed.add(g.bar(e))
    verts = set(vertices) | {g.tau(x) for x in closed}
    elements = verts | closed
    if not elements:
        raise ValidationError("subgraph must be nonempty")
    sub = Graph(
        elements,
        {x: g.bar(x) for x in elements},
        {x: g.tau(x) for x in elements},
    )
    return GraphOfGroups(
        sub,
        {v: gog.vertex_groups[v] for v in sub.vertices},
        {e: gog.edge_group(e) for e in sub.unoriented_edges()},
        {e: gog.monos[e] for e in sub.oriented_edges},
    )


class CollapseData:
    """How a subgraph collapse rebuilt the structure.

    For each collapsed component: the representative vertex, the new
    vertex group, per-vertex embeddings into it, and per-collapsed-edge
    path contributions (elements of the new vertex group).
    """

    def __init__(self):
        self.components = []
        self.vertex_embed = {}
        self.edge_element = {}
        self.graph_morphism = None


def component_pi1(gog, verts, edges_closed, name="K"):
    """(handle, {v: embedding}, {oriented edge: contribution element}).

    Supported shapes: a single vertex; components with trivial edge
    groups (free product of the vertex groups with a free group); trees
    that shrink to one vertex by absorbing edges whose monomorphism is an
    isomorphism on the leaf side.
    """
    g = gog.graph
    verts = sorted(verts)
    root = verts[0]
    if not edges_closed:
        h = gog.vertex_groups[root]
        return h, {root: Monomorphism.identity(h)}, {}
    unoriented = {e for e in edges_closed if e < g.bar(e)}
    beta = len(unoriented) - len(verts) + 1
    if all(gog.edge_group(e).is_trivial_group() for e in unoriented):
        sub = subgraph_of_groups(gog, verts, unoriented)
        tree = sub.graph.spanning_tree(root)
        factors = []
        factor_of_vertex = {}
        for v in verts:
            h = gog.vertex_groups[v]
            if not h.is_trivial_group():
                factor_of_vertex[v] = len(factors)
                factors.append(h)
        free_part = None
        nontree = [e for e in sorted(unoriented) if e not in tree]
        if beta:
            free_part = GroupHandle.free(f"{name}_free", beta, gen_names=[f"t{e}" for e in nontree])
            factors.append(free_part)
        if not factors:
            h = GroupHandle.trivial(name)
            triv = h
            embeds = {v: Monomorphism(gog.vertex_groups[v], h, [], check=False) for v in verts}
            return h, embeds, {e: h.identity() for e in edges_closed}
        if len(factors) == 1:
            h = factors[0]
        else:
            h = GroupHandle.free_product(name, factors)
        embeds = {}
        for v in verts:
            vg = gog.vertex_groups[v]
            if v in factor_of_vertex:
                i = factor_of_vertex[v]
                if h is factors[i]:
                    embeds[v] = Monomorphism.identity(h)
                else:
                    images = [h.embed_factor(i, x) for x in vg.generators()]
                    embeds[v] = Monomorphism(vg, h, images, check=False)
            else:
                embeds[v] = Monomorphism(vg, h, [], check=False)
        edge_elem = {}
        for e in edges_closed:
            if e in tree:
                edge_elem[e] = h.identity()
            else:
                rep = min(e, g.bar(e))
                t_idx = nontree.index(rep)
                gen = free_part.generators()[t_idx]
                val = gen if e == rep else gen.inverse()
                if h is free_part:
                    edge_elem[e] = val
                else:
                    edge_elem[e] = h.embed_factor(len(factors) - 1, val)
        return h, embeds, edge_elem
    # tree of groups with absorbable edges
    if beta != 0:
        raise UnsupportedCollapse(
            "collapse of a component with loops and nontrivial edge groups"
        )
    live_verts = set(verts)
    live_edges = set(unoriented)
    embeds = {v: None for v in verts}
    edge_elem = {e: None for e in edges_closed}
    chain = {v: [] for v in verts}  # pending edges absorbed from v upward
    while len(live_verts) > 1:
        progress = False
        for v in sorted(live_verts):
            incident = [
                e
                for e in live_edges
                if g.tau(e) == v or g.tau(g.bar(e)) == v
            ]
            if len(incident) != 1:
                continue
            e = incident[0]
            toward_v = e if g.tau(e) == v else g.bar(e)
            m_leaf = gog.monos[toward_v]
            if m_leaf.source.order_of_group() is not None:
                iso = len(m_leaf.image_elements()) == m_leaf.target.order_of_group()
            else:
                iso = m_leaf.is_surjective()
            if not iso:
                continue
            # absorb v across e into the neighbor
            live_verts.discard(v)
            live_edges.discard(e)
            chain[g.tau(g.bar(toward_v))].append((v, toward_v))
            progress = True
            break
        if not progress:
            raise UnsupportedCollapse("tree of groups does not absorb to one vertex")
    top = next(iter(live_verts))
    h = gog.vertex_groups[top]

    def build_embed(v):
        if v == top:
            return Monomorphism.identity(h)
        # walk the absorption chain from v to the top
        for w, pending in chain.items():
            for (leaf, toward_leaf) in pending:
                if leaf == v:
                    m_leaf = gog.monos[toward_leaf]
                    m_other = gog.monos[g.bar(toward_leaf)]
                    into_w = _invert_then(m_leaf, m_other)
                    return build_embed(w).compose(into_w)
        raise UnsupportedCollapse(f"no absorption path from {v}")

    for v in verts:
        embeds[v] = build_embed(v)
    for e in edges_closed:
        edge_elem[e] = h.identity()
    return h, embeds, edge_elem


def _invert_then(m_iso, m_other):
    """m_other o (m_iso)^{-1} as a monomorphism."""
    src = m_iso.target
    images = []
    for gen in src.generators():
        pre = image_membership(m_iso, gen)
        if pre is None:
            raise UnsupportedCollapse("absorption mono is not onto")
        images.append(m_other(pre))
    return Monomorphism(src, m_other.target, images, check=False)


def collapse_subgraph(gog, edges, name="K"):
    """Collapse the subgraph spanned by the edges.

    Returns (new GraphOfGroups, CollapseData).  Each component becomes a
    vertex whose group is the component's fundamental group, when that
    lands in a supported backend.
    """
    g = gog.graph
    closed = set()
    for e in edges:
        closed.add(e)
        closed.add(g.bar(e))
    if not closed:
        data = CollapseData()
        data.graph_morphism = None
        return gog, data
    quotient, gm = g.collapse(closed)
    # group the collapsed pieces by component representative
    comp_of = {}
    for e in closed:
        comp_of.setdefault(gm(e), set()).add(e)
    data = CollapseData()
    data.graph_morphism = gm
    new_vgroups = {}
    for v in quotient.vertices:
        new_vgroups[v] = gog.vertex_groups.get(v)
    for rep, comp_edges in sorted(comp_of.items()):
        verts = {g.tau(x) for x in comp_edges}
        handle, embeds, edge_elem = component_pi1(
            gog, verts, comp_edges, name=f"{name}{rep}"
        )
        new_vgroups[rep] = handle
        data.components.append((rep, sorted(verts), handle))
        data.vertex_embed.update(embeds)
        data.edge_element.update(edge_elem)
    for v in quotient.vertices:
        if new_vgroups[v] is None:
            new_vgroups[v] = gog.vertex_groups[v]
    new_egroups = {}
    new_monos = {}
    for e in quotient.unoriented_edges():
        new_egroups[e] = gog.edge_group(e)
    for e in quotient.oriented_edges:
        old_m = gog.monos[e]
        embed = data.vertex_embed.get(g.tau(e))
        new_monos[e] = embed.compose(old_m) if embed is not None else old_m
    new_gog = GraphOfGroups(quotient, new_vgroups, new_egroups, new_monos)
    return new_gog, data


def collapse_path(data, new_gog, path):
    """Push a path through a subgraph collapse."""
    gm = data.graph_morphism
    if gm is None:
        return path
    g = path.gog.graph
    items = list(path.items)
    out = []
    start = gm(path.start)

    def embed_letter(x, v):
        emb = data.vertex_embed.get(v)
        return emb(x) if emb is not None else x

    v = path.start
    acc = embed_letter(items[0], v)
    for i in range(1, len(items), 2):
        e = items[i]
        nxt = items[i + 1]
        if gm.collapses(e):
            acc = acc * data.edge_element[e]
            v = g.tau(e)
            acc = acc * embed_letter(nxt, v)
        else:
            out.append(acc)
            out.append(gm(e))
            v = g.tau(e)
            acc = embed_letter(nxt, v)
    out.append(acc)
    return GoGPath(new_gog, start, out)


def pi1_free_product_summary(gog):
    """Grushko-style description for trivial edge groups, e.g. "F2 * C2"."""
    if not gog.trivial_edge_groups():
        raise Undecided("summary needs trivial edge groups")
    beta = gog.graph.betti_number()
    parts = []
    for v in gog.graph.vertices:
        h = gog.vertex_groups[v]
        if not h.is_trivial_group():
            o = h.order_of_group()
            if h.tag == "cyclic" and o:
                parts.append(f"C{o}")
            elif h.tag == "cyclic":
                parts.append("Z")
            elif h.tag == "free":
                beta += h.rank
            elif o is not None:
                parts.append(h.name)
            else:
                parts.append(h.name)
    parts.sort()
    if beta:
        parts.insert(0, f"F{beta}")
    return " * ".join(parts) if parts else "1"
