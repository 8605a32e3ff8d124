import random

import pytest

from gogtt.errors import HandleMismatch, Undecided, ValidationError
from gogtt.groups import (
    C,
    CosetTransversal,
    Element,
    GroupHandle,
    Homomorphism,
    Monomorphism,
    Z,
    image_membership,
    subgroup_closure,
)


def klein_four():
    # <a, b | a2 = b2 = (ab)2 = 1>
    names = ["1", "a", "b", "ab"]
    table = [
        [0, 1, 2, 3],
        [1, 0, 3, 2],
        [2, 3, 0, 1],
        [3, 2, 1, 0],
    ]
    return GroupHandle.finite("V4", names, table)


def c2_star_c3():
    return GroupHandle.free_product("C2*C3", [C(2, "A", gen_name="a"), C(3, "B", gen_name="c")])


def test_c2_relation():
    g = C(2, gen_name="a")
    a = g.parse("a")
    assert (a * a).is_identity()


def test_free_reduction():
    f = GroupHandle.free("F2", 2)
    x, y = f.generators()
    assert x * y * y.inverse() == x


def test_free_product_normal_form_reduction():
    g = c2_star_c3()
    a = g.parse("a")
    c = g.parse("c")
    # a*c * c^2 = a (c^3 = 1)
    assert (a * c) * (c * c) == a
    assert g.format((a * c) * c) == "a*c^2"


def test_handle_mismatch():
    with pytest.raises(HandleMismatch):
        C(2).identity() * C(3).identity()


def test_bad_table_rejected():
    with pytest.raises(ValidationError):
        GroupHandle.finite("bad", ["1", "a"], [[0, 1], [1, 1]])


def test_group_axioms_random():
    rng = random.Random(3)
    handles = [klein_four(), C(5), Z(), GroupHandle.free("F2", 2), c2_star_c3()]
    for h in handles:
        gens = h.generators()
        if not gens:
            continue

        def rand_elt():
            w = h.identity()
            for _ in range(rng.randint(0, 4)):
                g = rng.choice(gens)
                w = w * (g if rng.random() < 0.5 else g.inverse())
            return w

        for _ in range(25):
            a, b, c = rand_elt(), rand_elt(), rand_elt()
            assert (a * b) * c == a * (b * c)
            assert a * h.identity() == a
            assert (a * a.inverse()).is_identity()


def test_element_order():
    g = c2_star_c3()
    assert g.parse("a").order() == 2
    assert g.parse("c").order() == 3
    assert g.parse("a*c").order() is None
    assert Z().parse("z").order() is None
    assert klein_four().parse("ab").order() == 2


def test_parse_powers():
    f = GroupHandle.free("F2", 2)
    w = f.parse("x*y^-1")
    assert w.key == (1, -2)
    assert f.format(w) == "x*y^-1"


def test_mono_c2_into_v4():
    v4 = klein_four()
    c2 = C(2, gen_name="x")
    m = Monomorphism(c2, v4, [v4.parse("a")])
    assert m(c2.parse("x")) == v4.parse("a")
    # membership
    assert image_membership(m, v4.parse("b")) is None
    assert image_membership(m, v4.parse("a")) == c2.parse("x")


def test_mono_rejects_noninjective():
    v4 = klein_four()
    c4 = C(4, gen_name="x")
    with pytest.raises(ValidationError):
        Monomorphism(c4, v4, [v4.parse("a")])


def test_coset_rep_trivial_edge_group():
    g = c2_star_c3()
    triv = GroupHandle.trivial()
    m = Monomorphism(triv, g, [])
    t = CosetTransversal(m)
    w = g.parse("a*c")
    s, h = t.rep(w)
    assert s == w and h.is_identity()


def test_coset_rep_identity_coset():
    v4 = klein_four()
    c2 = C(2, gen_name="x")
    m = Monomorphism(c2, v4, [v4.parse("a")])
    t = CosetTransversal(m)
    s, h = t.rep(v4.parse("a"))
    assert s.is_identity() and h == c2.parse("x")


def test_coset_rep_v4():
    v4 = klein_four()
    c2 = C(2, gen_name="x")
    m = Monomorphism(c2, v4, [v4.parse("a")])
    t = CosetTransversal(m)
    s, h = t.rep(v4.parse("ab"))
    # transversal of <a> is {1, b}
    assert s == v4.parse("b")
    assert h == c2.parse("x")


def test_coset_partition_consistency():
    v4 = klein_four()
    c2 = C(2, gen_name="x")
    m = Monomorphism(c2, v4, [v4.parse("a")])
    t = CosetTransversal(m)
    for g in v4.elements():
        s, h = t.rep(g)
        assert s * m(h) == g
        # rep is constant on the coset
        for k in c2.elements():
            s2, _ = t.rep(g * m(k))
            assert s2 == s


def test_membership_exponent_divisibility():
    # x -> x^2 into Z
    z = Z()
    f1 = GroupHandle.free("F1", 1)
    m = Monomorphism(f1, z, [z.parse("z^2")])
    assert image_membership(m, z.parse("z^3")) is None
    h = image_membership(m, z.parse("z^4"))
    assert h is not None and m(h) == z.parse("z^4")


def test_membership_identity():
    z = Z()
    f1 = GroupHandle.free("F1", 1)
    m = Monomorphism(f1, z, [z.parse("z^2")])
    assert image_membership(m, z.identity()).is_identity()


def test_membership_free_target():
    f2 = GroupHandle.free("F2", 2)
    f1 = GroupHandle.free("S", 1, gen_names=["s"])
    x, y = f2.generators()
    m = Monomorphism(f1, f2, [x * y])
    w = (x * y) ** 3
    h = image_membership(m, w)
    assert h is not None and m(h) == w
    assert image_membership(m, x) is None


def test_membership_free_target_rank2_subgroup():
    f2 = GroupHandle.free("F2", 2)
    x, y = f2.generators()
    src = GroupHandle.free("H", 2, gen_names=["p", "q"])
    m = Monomorphism(src, f2, [x * x, y])
    g = x * x * y * x * x
    h = image_membership(m, g)
    assert h is not None and m(h) == g
    assert image_membership(m, x) is None
    assert image_membership(m, x * y * x) is None


def test_membership_freeprod_target_undecided():
    g = c2_star_c3()
    f1 = GroupHandle.free("F1", 1)
    m = Monomorphism(f1, g, [g.parse("a*c")], check=False)
    with pytest.raises(Undecided):
        image_membership(m, g.parse("a"))


def test_subgroup_closure_finite():
    v4 = klein_four()
    h, m = subgroup_closure(v4, [v4.parse("a")])
    assert h.order_of_group() == 2
    assert m(h.generators()[0]) == v4.parse("a")


def test_subgroup_closure_cyclic_infinite():
    z = Z()
    h, m = subgroup_closure(z, [z.parse("z^4"), z.parse("z^6")])
    assert h.order_of_group() is None
    assert m(h.generators()[0]) == z.parse("z^2")


def test_subgroup_closure_free():
    f2 = GroupHandle.free("F2", 2)
    x, y = f2.generators()
    h, m = subgroup_closure(f2, [x * x, y * x * x * y.inverse()])
    assert h.tag == "free" and h.rank == 2
    for g in m.gen_images:
        assert image_membership(m, g) is not None


def test_subgroup_closure_freeprod_single_factor():
    g = c2_star_c3()
    h, m = subgroup_closure(g, [g.parse("c")])
    assert h.order_of_group() == 3
    assert m(h.generators()[0]) == g.parse("c")


def test_finite_image_order_divides():
    v4 = klein_four()
    for gen in ["a", "b", "ab"]:
        c2 = C(2, gen_name="x")
        m = Monomorphism(c2, v4, [v4.parse(gen)])
        assert v4.order_of_group() % len(m.image_elements()) == 0


def test_normal_form_idempotent_random():
    rng = random.Random(5)
    g = c2_star_c3()
    gens = g.generators()
    for _ in range(50):
        w = g.identity()
        for _ in range(rng.randint(0, 6)):
            x = rng.choice(gens)
            w = w * (x if rng.random() < 0.5 else x.inverse())
        # normal form of a normal form is itself: rebuild from the key
        again = Element(g, g._mul_keys(w.key, ()))
        assert again == w


def test_surjectivity_checks():
    f2 = GroupHandle.free("F2", 2)
    x, y = f2.generators()
    m = Homomorphism(GroupHandle.free("S", 2, gen_names=["p", "q"]), f2, [x, x * y])
    assert m.is_surjective()
    m2 = Homomorphism(GroupHandle.free("S", 1, gen_names=["p"]), f2, [x])
    assert not m2.is_surjective()
