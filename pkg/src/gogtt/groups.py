"""Pluggable group backends with a solvable word problem.

Four backends: finite multiplication tables, cyclic groups (finite or
infinite), free groups of finite rank, and free products of other
backends.  Every element carries a canonical normal form, so equality is
key comparison.  Monomorphisms between handles, coset transversals, and
image membership are provided for the combinations the rest of the
package constructs; combinations with no decision procedure raise
``Undecided`` rather than guessing.
"""

from __future__ import annotations

import math
import re

from .errors import (
    HandleMismatch,
    Undecided,
    UnrepresentableGroup,
    ValidationError,
)

_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z_0-9]*|\^|-?\d+|\*)")


class GroupHandle:
    """A group given by one of the supported backends.

    tag is one of "finite", "cyclic", "free", "freeprod".
    """

    def __init__(self, tag, name, **data):
        self.tag = tag
        self.name = name
        self.__dict__.update(data)
        if tag == "finite":
            self._verify_table()
            self._inv = self._invert_table()
            self._gens = None
            self._words = None
        elif tag == "cyclic":
            if self.order is not None and self.order < 1:
                raise ValidationError("cyclic order must be >= 1 or None")
        elif tag == "free":
            if self.rank < 0:
                raise ValidationError("free rank must be >= 0")
        elif tag == "freeprod":
            self.factors = tuple(self.factors)
            seen = {}
            for i, f in enumerate(self.factors):
                for tok in f._token_names():
                    if tok in seen:
                        raise ValidationError(
                            f"generator name {tok!r} used by two factors"
                        )
                    seen[tok] = i
            self._token_to_factor = seen
        else:
            raise ValidationError(f"unknown backend {tag}")

    # ------------------------------------------------------------------
    # constructors

    @staticmethod
    def finite(name, element_names, table):
        """Finite group from a multiplication table.

        element_names[0] must be the identity; table[i][j] is the index of
        element i * element j.
        """
        return GroupHandle(
            "finite",
            name,
            element_names=tuple(element_names),
            table=tuple(tuple(row) for row in table),
        )

    @staticmethod
    def cyclic(name, order, gen_name=None):
        """Cyclic group of the given order (None means infinite)."""
        return GroupHandle("cyclic", name, order=order, gen_name=gen_name or name.lower())

    @staticmethod
    def free(name, rank, gen_names=None):
        if gen_names is None:
            base = ["x", "y", "z"]
            gen_names = base[:rank] if rank <= 3 else [f"x{i+1}" for i in range(rank)]
        if len(gen_names) != rank:
            raise ValidationError("rank / generator name mismatch")
        return GroupHandle("free", name, rank=rank, gen_names=tuple(gen_names))

    @staticmethod
    def free_product(name, factors):
        return GroupHandle("freeprod", name, factors=tuple(factors))

    @staticmethod
    def trivial(name="1"):
        return GroupHandle.finite(name, ("1",), ((0,),))

    # ------------------------------------------------------------------
    # table verification

    def _verify_table(self):
        n = len(self.element_names)
        if len(self.table) != n or any(len(r) != n for r in self.table):
            raise ValidationError("table is not square")
        for i in range(n):
            if self.table[0][i] != i or self.table[i][0] != i:
                raise ValidationError("element 0 is not the identity")
        for i in range(n):
            if not any(self.table[i][j] == 0 for j in range(n)):
                raise ValidationError(f"element {i} has no inverse")
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if self.table[self.table[i][j]][k] != self.table[i][self.table[j][k]]:
                        raise ValidationError("table is not associative")

    def _invert_table(self):
        n = len(self.element_names)
        inv = [0] * n
        for i in range(n):
            for j in range(n):
                if self.table[i][j] == 0:
                    inv[i] = j
        return tuple(inv)

    # ------------------------------------------------------------------
    # element basics

    def identity(self):
        if self.tag == "finite":
            return Element(self, 0)
        if self.tag == "cyclic":
            return Element(self, 0)
        if self.tag == "free":
            return Element(self, ())
        return Element(self, ())

    def is_trivial_group(self):
        if self.tag == "finite":
            return len(self.element_names) == 1
        if self.tag == "cyclic":
            return self.order == 1
        if self.tag == "free":
            return self.rank == 0
        return all(f.is_trivial_group() for f in self.factors)

    def order_of_group(self):
        """Group order, or None when infinite."""
        if self.tag == "finite":
            return len(self.element_names)
        if self.tag == "cyclic":
            return self.order
        if self.tag == "free":
            return 1 if self.rank == 0 else None
        total = 1
        nontrivial = 0
        for f in self.factors:
            o = f.order_of_group()
            if o is None:
                return None
            if o > 1:
                nontrivial += 1
                total *= o
        if nontrivial >= 2:
            return None
        return total

    def elements(self):
        """All elements; only for finite backends."""
        o = self.order_of_group()
        if o is None:
            raise Undecided(f"cannot enumerate infinite group {self.name}")
        if self.tag == "finite":
            return [Element(self, i) for i in range(o)]
        if self.tag == "cyclic":
            return [Element(self, i) for i in range(o)]
        if self.tag == "free":
            return [self.identity()]
        out = [self.identity()]
        for i, f in enumerate(self.factors):
            if f.is_trivial_group():
                continue
            out.extend(
                Element(self, ((i, x.key),)) for x in f.elements() if x.key != f.identity().key
            )
        return out

    def generators(self):
        if self.tag == "finite":
            self._ensure_words()
            return [Element(self, i) for i in self._gens]
        if self.tag == "cyclic":
            return [] if self.order == 1 else [Element(self, 1)]
        if self.tag == "free":
            return [Element(self, (i + 1,)) for i in range(self.rank)]
        out = []
        for i, f in enumerate(self.factors):
            for g in f.generators():
                out.append(self.embed_factor(i, g))
        return out

    def _ensure_words(self):
        """Greedy generating set for a finite table, with a word per element."""
        if self._gens is not None:
            return
        n = len(self.element_names)
        gens = []
        words = {0: ()}
        while len(words) < n:
            nxt = min(i for i in range(n) if i not in words)
            gens.append(nxt)
            g_idx = len(gens) - 1
            frontier = list(words.items())
            while frontier:
                new = []
                for i, w in frontier:
                    for sign, j in ((1, nxt), (-1, self._inv[nxt])):
                        k = self.table[i][j]
                        if k not in words:
                            words[k] = w + ((g_idx + 1) * sign,)
                            new.append((k, words[k]))
                frontier = new
        self._gens = tuple(gens)
        self._words = words

    def word_in_generators(self, x):
        """x as a list of signed 1-based generator indices."""
        if x.handle is not self:
            raise HandleMismatch("wrong handle")
        if self.tag == "finite":
            self._ensure_words()
            return list(self._words[x.key])
        if self.tag == "cyclic":
            k = x.key
            return [1] * k if k >= 0 else [-1] * (-k)
        if self.tag == "free":
            return list(x.key)
        out = []
        offset = 0
        offsets = []
        for f in self.factors:
            offsets.append(offset)
            offset += len(f.generators())
        for (i, key) in x.key:
            f = self.factors[i]
            for letter in f.word_in_generators(Element(f, key)):
                out.append(letter + offsets[i] if letter > 0 else letter - offsets[i])
        return out

    def embed_factor(self, i, g):
        """Embed a factor element into a free product."""
        if self.tag != "freeprod":
            raise ValidationError("not a free product")
        f = self.factors[i]
        if g.handle is not f:
            raise HandleMismatch("element not of factor")
        if g.key == f.identity().key:
            return self.identity()
        return Element(self, ((i, g.key),))

    # ------------------------------------------------------------------
    # arithmetic on normal forms

    def _mul_keys(self, a, b):
        if self.tag == "finite":
            return self.table[a][b]
        if self.tag == "cyclic":
            s = a + b
            return s % self.order if self.order else s
        if self.tag == "free":
            out = list(a)
            for letter in b:
                if out and out[-1] == -letter:
                    out.pop()
                else:
                    out.append(letter)
            return tuple(out)
        out = list(a)
        for syll in b:
            if out and out[-1][0] == syll[0]:
                i = syll[0]
                f = self.factors[i]
                merged = f._mul_keys(out[-1][1], syll[1])
                out.pop()
                if merged != f.identity().key:
                    out.append((i, merged))
            else:
                out.append(syll)
        return tuple(out)

    def _inv_key(self, a):
        if self.tag == "finite":
            return self._inv[a]
        if self.tag == "cyclic":
            return (-a) % self.order if self.order else -a
        if self.tag == "free":
            return tuple(-x for x in reversed(a))
        return tuple(
            (i, self.factors[i]._inv_key(k)) for (i, k) in reversed(a)
        )

    def _sort_key(self, a):
        """Total order on normal forms; the identity is least."""
        if self.tag == "finite":
            return (a,)
        if self.tag == "cyclic":
            if self.order:
                return (a,)
            return (abs(a), 0 if a >= 0 else 1)
        if self.tag == "free":
            out = [len(a)]
            for letter in a:
                out.extend((abs(letter), 0 if letter > 0 else 1))
            return tuple(out)
        out = [len(a)]
        for (i, k) in a:
            inner = self.factors[i]._sort_key(k)
            out.append(i)
            out.append(len(inner))
            out.extend(inner)
        return tuple(out)

    # ------------------------------------------------------------------
    # parsing and printing

    def _token_names(self):
        if self.tag == "finite":
            return [n for n in self.element_names if n != "1"]
        if self.tag == "cyclic":
            return [] if self.order == 1 else [self.gen_name]
        if self.tag == "free":
            return list(self.gen_names)
        return [t for f in self.factors for t in f._token_names()]

    def _atom(self, name):
        if self.tag == "finite":
            if name in self.element_names:
                return Element(self, self.element_names.index(name))
        elif self.tag == "cyclic":
            if name == self.gen_name and self.order != 1:
                return Element(self, 1)
        elif self.tag == "free":
            if name in self.gen_names:
                return Element(self, (self.gen_names.index(name) + 1,))
        else:
            i = self._token_to_factor.get(name)
            if i is not None:
                return self.embed_factor(i, self.factors[i]._atom(name))
        raise ValidationError(f"unknown element literal {name!r} in {self.name}")

    def parse(self, text):
        """Parse an element literal: atoms, ``*`` products, ``^`` powers."""
        text = text.strip()
        if text in ("1", ""):
            return self.identity()
        pos = 0
        tokens = []
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m:
                raise ValidationError(f"cannot tokenize {text!r} at {pos}")
            tokens.append(m.group(1))
            pos = m.end()
        result = self.identity()
        i = 0
        while i < len(tokens):
            tok = tokens[i]
            if tok == "*":
                i += 1
                continue
            if tok == "1":
                i += 1
                continue
            atom = self._atom(tok)
            i += 1
            if i < len(tokens) and tokens[i] == "^":
                if i + 1 >= len(tokens):
                    raise ValidationError("dangling ^")
                atom = atom ** int(tokens[i + 1])
                i += 2
            result = result * atom
        return result

    def format(self, x):
        if x.handle is not self:
            raise HandleMismatch("wrong handle")
        if self.tag == "finite":
            return self.element_names[x.key]
        if self.tag == "cyclic":
            k = x.key
            if k == 0:
                return "1"
            if k == 1:
                return self.gen_name
            return f"{self.gen_name}^{k}"
        if self.tag == "free":
            if not x.key:
                return "1"
            parts = []
            for letter in x.key:
                name = self.gen_names[abs(letter) - 1]
                parts.append(name if letter > 0 else f"{name}^-1")
            return "*".join(parts)
        if not x.key:
            return "1"
        parts = []
        for (i, k) in x.key:
            parts.append(self.factors[i].format(Element(self.factors[i], k)))
        return "*".join(parts)

    def __repr__(self):
        return f"<{self.name}>"


class Element:
    """A group element in canonical normal form."""

    __slots__ = ("handle", "key")

    def __init__(self, handle, key):
        self.handle = handle
        self.key = key

    def _check(self, other):
        if not isinstance(other, Element) or other.handle is not self.handle:
            raise HandleMismatch("elements of different groups")

    def __mul__(self, other):
        self._check(other)
        return Element(self.handle, self.handle._mul_keys(self.key, other.key))

    def inverse(self):
        return Element(self.handle, self.handle._inv_key(self.key))

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        result = self.handle.identity()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        return (
            isinstance(other, Element)
            and other.handle is self.handle
            and other.key == self.key
        )

    def __hash__(self):
        return hash((id(self.handle), self.key))

    def is_identity(self):
        return self.key == self.handle.identity().key

    def sort_key(self):
        return self.handle._sort_key(self.key)

    def order(self):
        """Element order, None when infinite."""
        h = self.handle
        if h.tag == "finite":
            n, x, k = 1, self, h.identity()
            while not x.is_identity():
                x = x * self
                n += 1
            return n
        if h.tag == "cyclic":
            if self.key == 0:
                return 1
            if h.order is None:
                return None
            return h.order // math.gcd(h.order, self.key)
        if h.tag == "free":
            return 1 if not self.key else None
        key = self.key
        # cyclically reduce
        while len(key) >= 2 and key[0][0] == key[-1][0]:
            i = key[0][0]
            f = h.factors[i]
            merged = f._mul_keys(key[-1][1], key[0][1])
            if merged == f.identity().key:
                key = key[1:-1]
            else:
                key = ((i, merged),) + key[1:-1]
        if not key:
            return 1
        if len(key) == 1:
            i, k = key[0]
            return Element(h.factors[i], k).order()
        return None

    def syllables(self):
        """Free-product syllables as factor elements."""
        h = self.handle
        if h.tag != "freeprod":
            raise ValidationError("not a free product element")
        return [(i, Element(h.factors[i], k)) for (i, k) in self.key]

    def __repr__(self):
        return self.handle.format(self)


# ----------------------------------------------------------------------
# homomorphisms


class Homomorphism:
    """A homomorphism given by images of the source generators."""

    def __init__(self, source, target, gen_images, check=True):
        self.source = source
        self.target = target
        self.gen_images = list(gen_images)
        for g in self.gen_images:
            if g.handle is not target:
                raise HandleMismatch("image not in target group")
        if len(self.gen_images) != len(source.generators()):
            raise ValidationError("one image per source generator required")
        self._image_map = None
        if check:
            self._verify_relations()

    @staticmethod
    def identity(handle):
        return Monomorphism(handle, handle, handle.generators(), check=False)

    def _verify_relations(self):
        src = self.source
        if src.tag == "finite":
            src._ensure_words()
            for a in src.elements():
                for b in src.elements():
                    if not self(a * b) == self(a) * self(b):
                        raise ValidationError("not a homomorphism")
        elif src.tag == "cyclic" and src.order is not None:
            if self.gen_images and not (self.gen_images[0] ** src.order).is_identity():
                raise ValidationError("generator image order does not divide cyclic order")
        elif src.tag == "freeprod":
            # relations live inside the factors
            idx = 0
            for f in src.factors:
                n = len(f.generators())
                Homomorphism(f, self.target, self.gen_images[idx : idx + n])
                idx += n

    def __call__(self, x):
        if x.handle is not self.source:
            raise HandleMismatch("element not in source group")
        result = self.target.identity()
        for letter in self.source.word_in_generators(x):
            img = self.gen_images[abs(letter) - 1]
            result = result * (img if letter > 0 else img.inverse())
        return result

    def image_elements(self):
        """The image subgroup, enumerated; finite sources only."""
        if self._image_map is None:
            o = self.source.order_of_group()
            if o is None:
                raise Undecided("cannot enumerate image of an infinite group")
            self._image_map = {}
            for x in self.source.elements():
                y = self(x)
                self._image_map.setdefault(y.key, x)
        return self._image_map

    def compose(self, earlier):
        """self o earlier."""
        if earlier.target is not self.source:
            raise HandleMismatch("composition mismatch")
        images = [self(g) for g in earlier.gen_images]
        cls = (
            Monomorphism
            if isinstance(self, Monomorphism) and isinstance(earlier, Monomorphism)
            else Homomorphism
        )
        return cls(earlier.source, self.target, images, check=False)

    def is_surjective(self):
        t = self.target
        if t.order_of_group() is not None:
            if self.source.order_of_group() is not None:
                return len(self.image_elements()) == t.order_of_group()
            # infinite source onto finite target: generate
            seen = {t.identity().key}
            frontier = [t.identity()]
            gens = [g for g in self.gen_images] + [g.inverse() for g in self.gen_images]
            while frontier:
                new = []
                for x in frontier:
                    for g in gens:
                        y = x * g
                        if y.key not in seen:
                            seen.add(y.key)
                            new.append(y)
                frontier = new
            return len(seen) == t.order_of_group()
        if t.tag == "cyclic":
            d = 0
            for g in self.gen_images:
                d = math.gcd(d, abs(g.key))
            return d == 1
        if t.tag == "free":
            return _stallings_is_full(t, self.gen_images)
        raise Undecided(f"surjectivity onto {t.name} not implemented")


class Monomorphism(Homomorphism):
    """An injective homomorphism.

    Injectivity is verified exhaustively for finite sources and checked on
    sample words otherwise; ``is_injective_exact`` decides it where a
    procedure exists.
    """

    def __init__(self, source, target, gen_images, check=True):
        super().__init__(source, target, gen_images, check=check)
        if check:
            self._verify_injective()

    def _verify_injective(self):
        o = self.source.order_of_group()
        if o is not None:
            if len(self.image_elements()) != o:
                raise ValidationError("not injective")
            return
        verdict = _injectivity_verdict(self)
        if verdict is False:
            raise ValidationError("not injective")
        if verdict is None:
            _spot_check_injective(self)

    def preimage(self, y):
        """Preimage of y, or None; exact for finite sources."""
        return image_membership(self, y)


def _injectivity_verdict(hom):
    """True/False when decidable, None otherwise (infinite sources)."""
    src, tgt = hom.source, hom.target
    if src.order_of_group() is not None:
        return len(hom.image_elements()) == src.order_of_group()
    if src.tag == "cyclic":  # infinite cyclic
        g = hom.gen_images[0]
        return g.order() is None
    if src.tag == "free":
        if src.rank == 0:
            return True
        if tgt.tag == "free":
            basis, _ = _stallings_fold(tgt, hom.gen_images)
            return basis is not None and len(basis) == src.rank
        if tgt.order_of_group() is not None or tgt.tag == "cyclic":
            return src.rank == 1 and hom.gen_images[0].order() is None
        return None
    if src.tag == "freeprod":
        # injective on each factor is necessary; sufficient only with work
        return None
    return None


def _spot_check_injective(hom, samples=64, seed=11):
    import random

    rng = random.Random(seed)
    gens = hom.source.generators()
    if not gens:
        return
    seen = {}
    for _ in range(samples):
        w = hom.source.identity()
        for _ in range(rng.randint(1, 5)):
            g = rng.choice(gens)
            w = w * (g if rng.random() < 0.5 else g.inverse())
        y = hom(w)
        if y.key in seen and seen[y.key] != w.key:
            raise ValidationError("monomorphism spot-check failed: collision found")
        seen[y.key] = w.key


# ----------------------------------------------------------------------
# coset transversals


class CosetTransversal:
    """Left coset representatives for the image of a monomorphism.

    rep(g) returns (s, h) with g = s * m(h), where s is the chosen
    representative of g's coset: the member with the least normal form.
    The identity always represents its own coset.
    """

    def __init__(self, mono):
        self.mono = mono
        self._table = None
        self._memo = {}

    def rep(self, g):
        if g.handle is not self.mono.target:
            raise HandleMismatch("element not in target group")
        if g.key in self._memo:
            return self._memo[g.key]
        out = self._compute(g)
        s, h = out
        assert s * self.mono(h) == g
        self._memo[g.key] = out
        return out

    def _compute(self, g):
        m = self.mono
        tgt = m.target
        if m.source.is_trivial_group():
            return (g, m.source.identity())
        if tgt.order_of_group() is not None:
            image = m.image_elements()
            coset = [g * Element(tgt, k) for k in image]
            s = min(coset, key=lambda x: x.sort_key())
            h_img = s.inverse() * g
            h = image[h_img.key]
            return (s, h)
        if tgt.tag == "cyclic" and m.source.tag in ("cyclic", "free"):
            d = abs(m.gen_images[0].key) if m.gen_images else 0
            if d == 0:
                raise Undecided("trivial image inside an infinite cyclic group")
            r = g.key % d
            s = Element(tgt, r)
            q = (g.key - r) // (d if m.gen_images[0].key > 0 else -d)
            h = _power_of_gen(m.source, q)
            return (s, h)
        raise Undecided(
            f"no transversal procedure for {m.source.name} inside {tgt.name}"
        )

    def representative_of_coset(self, g):
        return self.rep(g)[0]


def _power_of_gen(handle, q):
    gens = handle.generators()
    return gens[0] ** q


# ----------------------------------------------------------------------
# image membership


def image_membership(mono, g):
    """An element h with mono(h) = g, or None when g is not in the image.

    Exact for finite sources, and for cyclic, finite and free targets.
    Raises Undecided for backend combinations with no procedure.
    """
    m = mono
    if g.handle is not m.target:
        raise HandleMismatch("element not in target group")
    if m.source.order_of_group() is not None:
        image = m.image_elements()
        h = image.get(g.key)
        return h
    tgt = m.target
    if tgt.order_of_group() is not None:
        word = _finite_subgroup_word(tgt, m.gen_images, g)
        if word is None:
            return None
        return _eval_word(m.source, word)
    if tgt.tag == "cyclic":
        exps = [img.key for img in m.gen_images]
        sol = _solve_exponents(exps, g.key)
        if sol is None:
            return None
        h = m.source.identity()
        gens = m.source.generators()
        for c, x in zip(sol, gens):
            h = h * x ** c
        if m(h) == g:
            return h
        return None
    if tgt.tag == "free":
        word = _free_membership_word(tgt, m.gen_images, g)
        if word is None:
            return None
        h = _eval_word(m.source, word)
        assert m(h) == g
        return h
    raise Undecided(
        f"membership in a {tgt.tag} target is not implemented for infinite sources"
    )


def _eval_word(handle, word):
    gens = handle.generators()
    out = handle.identity()
    for letter in word:
        g = gens[abs(letter) - 1]
        out = out * (g if letter > 0 else g.inverse())
    return out


def _finite_subgroup_word(tgt, images, g):
    """Word in the given images equal to g; BFS over the subgroup."""
    ident = tgt.identity()
    words = {ident.key: ()}
    frontier = [ident]
    steps = [(i + 1, img) for i, img in enumerate(images)] + [
        (-(i + 1), img.inverse()) for i, img in enumerate(images)
    ]
    while frontier:
        new = []
        for x in frontier:
            for letter, img in steps:
                y = x * img
                if y.key not in words:
                    words[y.key] = words[x.key] + (letter,)
                    new.append(y)
        frontier = new
    return words.get(g.key)


def _solve_exponents(exps, k):
    """Integers c_i with sum c_i * exps[i] == k, else None."""
    cur_g = 0
    cur_coeffs = [0] * len(exps)
    for i, a in enumerate(exps):
        if a == 0:
            continue
        if cur_g == 0:
            cur_g = abs(a)
            cur_coeffs = [0] * len(exps)
            cur_coeffs[i] = 1 if a > 0 else -1
            continue
        g2, u, v = _ext_gcd(cur_g, abs(a))
        cur_coeffs = [u * c for c in cur_coeffs]
        cur_coeffs[i] += v if a > 0 else -v
        cur_g = g2
    if cur_g == 0:
        return [0] * len(exps) if k == 0 else None
    if k % cur_g != 0:
        return None
    scale = k // cur_g
    return [c * scale for c in cur_coeffs]


def _ext_gcd(a, b):
    if b == 0:
        return a, 1, 0
    g, u, v = _ext_gcd(b, a % b)
    return g, v, u - (a // b) * v


# ----------------------------------------------------------------------
# Stallings folding in a free group, with provenance words

class _FoldGraph:
    """Labeled graph for subgroup folding inside a free group.

    Each edge carries a provenance word in the abstract generators of the
    subgroup; folds keep provenance consistent by gauge moves, so tracing
    an element of the subgroup yields an expression in those generators.
    """

    def __init__(self, free_handle, images):
        self.handle = free_handle
        self.parent = [0]
        self.edges = []  # [u, v, letter>0, prov tuple]
        for i, img in enumerate(images):
            word = list(img.key)
            if not word:
                continue
            prev = 0
            for j, letter in enumerate(word):
                last = j == len(word) - 1
                nxt = 0 if last else self._new_vertex()
                prov = (i + 1,) if j == 0 else ()
                if letter > 0:
                    self.edges.append([prev, nxt, letter, prov])
                else:
                    self.edges.append([nxt, prev, -letter, _inv_word(prov)])
                prev = nxt
        self._fold()

    def _new_vertex(self):
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, v):
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def _union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        # keep the base vertex 0 as a root
        if rb == 0 or (ra != 0 and rb < ra):
            ra, rb = rb, ra
        self.parent[rb] = ra
        return ra

    def _gauge(self, v, gamma):
        """Multiply provenance so loop readings are unchanged; v != base."""
        for e in self.edges:
            if self.find(e[1]) == v:
                e[3] = _mul_word(e[3], gamma)
            if self.find(e[0]) == v:
                e[3] = _mul_word(_inv_word(gamma), e[3])

    def _fold(self):
        changed = True
        while changed:
            changed = False
            buckets = {}
            for e in self.edges:
                u, v = self.find(e[0]), self.find(e[1])
                buckets.setdefault((u, e[2]), []).append(e)
                buckets.setdefault((-v - 1, e[2]), []).append(e)
            for key, group in buckets.items():
                if len(group) < 2:
                    continue
                e1, e2 = group[0], group[1]
                if e1 is e2:
                    continue
                out_side = key[0] >= 0
                # align provenance
                if out_side:
                    t1, t2 = self.find(e1[1]), self.find(e2[1])
                    if t1 != t2:
                        target = t2 if t2 != 0 else t1
                        if target != 0:
                            if target == t2:
                                self._gauge(t2, _mul_word(_inv_word(e2[3]), e1[3]))
                            else:
                                self._gauge(t1, _mul_word(_inv_word(e1[3]), e2[3]))
                        self._union(t1, t2)
                    # after gauging the provenances agree when foldable
                else:
                    s1, s2 = self.find(e1[0]), self.find(e2[0])
                    if s1 != s2:
                        target = s2 if s2 != 0 else s1
                        if target != 0:
                            if target == s2:
                                self._gauge(
                                    s2, _inv_word(_mul_word(e1[3], _inv_word(e2[3])))
                                )
                            else:
                                self._gauge(
                                    s1, _inv_word(_mul_word(e2[3], _inv_word(e1[3])))
                                )
                        self._union(s1, s2)
                self.edges.remove(e2)
                changed = True
                break

    def trace(self, key):
        """Follow a reduced target word from the base; provenance or None."""
        v = 0
        prov = ()
        for letter in key:
            nxt = None
            for e in self.edges:
                u, w = self.find(e[0]), self.find(e[1])
                if letter > 0 and u == v and e[2] == letter:
                    nxt, prov = w, _mul_word(prov, e[3])
                    break
                if letter < 0 and w == v and e[2] == -letter:
                    nxt, prov = u, _mul_word(prov, _inv_word(e[3]))
                    break
            if nxt is None:
                return None
            v = nxt
        if v != 0:
            return None
        return prov

    def basis(self):
        """A free basis of the subgroup: (label words, provenance words)."""
        tree = {0: ((), ())}  # vertex -> (label word to base, prov word)
        frontier = [0]
        tree_edges = set()
        while frontier:
            new = []
            for v in frontier:
                for e in self.edges:
                    u, w = self.find(e[0]), self.find(e[1])
                    lab = (e[2],)
                    if u == v and w not in tree:
                        tree[w] = (_mul_word(tree[v][0], lab), _mul_word(tree[v][1], e[3]))
                        tree_edges.add(id(e))
                        new.append(w)
                    elif w == v and u not in tree:
                        tree[u] = (
                            _mul_word(tree[v][0], _inv_word(lab)),
                            _mul_word(tree[v][1], _inv_word(e[3])),
                        )
                        tree_edges.add(id(e))
                        new.append(u)
            frontier = new
        labels, provs = [], []
        for e in self.edges:
            if id(e) in tree_edges:
                continue
            u, w = self.find(e[0]), self.find(e[1])
            lab = _mul_word(_mul_word(tree[u][0], (e[2],)), _inv_word(tree[w][0]))
            prov = _mul_word(_mul_word(tree[u][1], e[3]), _inv_word(tree[w][1]))
            labels.append(lab)
            provs.append(prov)
        return labels, provs


def _mul_word(a, b):
    out = list(a)
    for letter in b:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def _inv_word(a):
    return tuple(-x for x in reversed(a))


def _free_membership_word(tgt, images, g):
    graph = _FoldGraph(tgt, images)
    return graph.trace(g.key)


def _stallings_fold(tgt, images):
    graph = _FoldGraph(tgt, images)
    labels, provs = graph.basis()
    return labels, provs


def _stallings_is_full(tgt, images):
    """Whether the images generate the whole free group."""
    graph = _FoldGraph(tgt, images)
    # full iff the folded graph is a one-vertex rose carrying every letter
    live = {graph.find(e[0]) for e in graph.edges} | {
        graph.find(e[1]) for e in graph.edges
    } | {0}
    if len(live) != 1:
        return False
    letters = {e[2] for e in graph.edges}
    return letters == set(range(1, tgt.rank + 1)) and len(graph.edges) == tgt.rank


# ----------------------------------------------------------------------
# subgroup closures


def subgroup_closure(target, elements, name=None):
    """The subgroup generated by the given elements, as a backend.

    Returns (handle, mono into target).  Raises UnrepresentableGroup when
    the subgroup does not fit a backend.
    """
    elements = [g for g in elements if not g.is_identity()]
    name = name or "H"
    if not elements:
        h = GroupHandle.trivial(name)
        return h, Monomorphism(h, target, [], check=False)
    if target.order_of_group() is not None:
        return _finite_closure(target, elements, name)
    if target.tag == "cyclic":
        d = 0
        for g in elements:
            d = math.gcd(d, abs(g.key))
        h = GroupHandle.cyclic(name, None, gen_name=name.lower())
        return h, Monomorphism(h, target, [Element(target, d)], check=False)
    if target.tag == "free":
        labels, _ = _stallings_fold(target, elements)
        h = GroupHandle.free(name, len(labels))
        images = [Element(target, w) for w in labels]
        return h, Monomorphism(h, target, images, check=False)
    if target.tag == "freeprod":
        factors = {i for g in elements for (i, _) in g.key}
        if len(factors) == 1:
            i = factors.pop()
            if all(len(g.key) == 1 for g in elements):
                f = target.factors[i]
                sub, m = subgroup_closure(
                    f, [Element(f, g.key[0][1]) for g in elements], name
                )
                images = [target.embed_factor(i, m(x)) for x in sub.generators()]
                return sub, Monomorphism(sub, target, images, check=False)
        if len(elements) == 1:
            g = elements[0]
            o = g.order()
            h = GroupHandle.cyclic(name, o, gen_name=name.lower())
            return h, Monomorphism(h, target, [g], check=False)
        raise UnrepresentableGroup(
            f"subgroup of {target.name} generated by {elements} has no backend"
        )
    raise UnrepresentableGroup(f"no closure procedure in {target.name}")


def _finite_closure(target, elements, name):
    ident = target.identity()
    seen = {ident.key: ident}
    frontier = [ident]
    gens = elements + [g.inverse() for g in elements]
    while frontier:
        new = []
        for x in frontier:
            for g in gens:
                y = x * g
                if y.key not in seen:
                    seen[y.key] = y
                    new.append(y)
        frontier = new
    members = sorted(seen.values(), key=lambda x: x.sort_key())
    index = {x.key: i for i, x in enumerate(members)}
    table = [[index[(a * b).key] for b in members] for a in members]
    names = [target.format(x) for x in members]
    h = GroupHandle.finite(name, names, table)
    h._ensure_words()
    images = [members[i] for i in h._gens]
    return h, Monomorphism(h, target, images, check=False)


# ----------------------------------------------------------------------
# common handles


def C(n, name=None, gen_name=None):
    return GroupHandle.cyclic(name or f"C{n}", n, gen_name=gen_name)


def Z(name="Z", gen_name=None):
    return GroupHandle.cyclic(name, None, gen_name=gen_name or name.lower())
