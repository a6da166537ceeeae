import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classfair.instance import (
    GENERATORS,
    Instance,
    InstanceError,
    Span,
    gen_cef_impossibility,
    gen_cnsw_counterexample,
    gen_divisible_hardness,
    gen_price_of_fairness,
    gen_random_bipartite,
    gen_upper_triangular,
    load_instance,
    make_instance,
    save_instance,
)


def test_smallest_instance():
    inst = make_instance(1, [0], [[0]])
    assert inst.num_edges == 1
    assert inst.num_agents == 1 and inst.num_items == 1


def test_single_contested_item():
    inst = make_instance(2, [0, 1], [[0, 1]])
    assert inst.class_neighbors[0] == ((0,), (1,))


@pytest.mark.parametrize(
    "k, agents, items, fragment",
    [
        (2, [0], [], "class 1"),
        (2, [0, 2], [[0]], "agent 1"),
        (1, [0, 0], [[0, 0]], "item 0"),
        (1, [0], [[3]], "item 0"),
        (0, [], [], "num_classes"),
        (1, [0], [None], "item 0"),
    ],
)
def test_rejects_invalid(k, agents, items, fragment):
    with pytest.raises(InstanceError, match=fragment):
        make_instance(k, agents, items)


def test_from_dict_rejects_gapped_ids():
    doc = {"num_classes": 1, "agents": [{"id": 0, "class": 0}, {"id": 2, "class": 0}], "items": []}
    with pytest.raises(InstanceError, match="agent id 2"):
        Instance.from_dict(doc)
    doc = {"num_classes": 1, "agents": [{"id": 0, "class": 0}], "items": [{"id": 1, "neighbors": [0]}]}
    with pytest.raises(InstanceError, match="item id 1"):
        Instance.from_dict(doc)


def test_from_json_rejects_garbage():
    with pytest.raises(InstanceError):
        Instance.from_json("{not json")
    with pytest.raises(InstanceError):
        Instance.from_json("[]")


def test_upper_triangular():
    assert gen_upper_triangular(3).num_edges == 6
    one = gen_upper_triangular(1)
    assert one.neighbors == ((0,),)
    assert [gen_upper_triangular(4).degree(o) for o in range(4)] == [4, 3, 2, 1]


def test_cef_impossibility():
    inst = gen_cef_impossibility(3)
    assert inst.degree(0) == 4
    assert inst.class_sizes() == (3, 3)
    one = gen_cef_impossibility(1)
    assert one.class_neighbors[0] == ((0,), (1,))
    for n in (1, 4, 9):
        inst = gen_cef_impossibility(n)
        for a in inst.class_agents[1]:
            assert len(inst.agent_items[a]) == 1


def test_divisible_hardness_small():
    inst = gen_divisible_hardness(3)
    assert inst.num_items == 6
    assert [len(inst.class_neighbors[o][0]) for o in range(6)] == [3, 3, 2, 2, 1, 1]
    assert all(len(inst.class_neighbors[o][1]) == 3 for o in range(6))
    one = gen_divisible_hardness(1)
    assert one.num_items == 2 and all(tuple(nb) == (0, 1) for nb in one.neighbors)


def test_divisible_hardness_large_is_compact():
    inst = gen_divisible_hardness(100_000)
    assert isinstance(inst.neighbors[0], Span)
    assert inst.degree(0) == 200_000
    assert inst.has_edge(99_999, 0) and not inst.has_edge(99_999, 2)
    assert inst.covers(5, 0, 99_998) and not inst.covers(5, 0, 99_999)


@pytest.mark.parametrize("k, p, q", [(2, 1, 2), (3, 1, 1), (5, 2, 3), (50, 1, 2)])
def test_price_of_fairness_shape(k, p, q):
    inst = gen_price_of_fairness(k, p, q)
    assert inst.num_items == p * (k - 1) + q + q * (k - 1)
    assert inst.class_sizes() == tuple([q] * (k - 1) + [q * (k - 1)])


def test_price_of_fairness_examples():
    inst = gen_price_of_fairness(2, 1, 2)
    assert inst.class_sizes() == (2, 2)
    # p(k-1)+q = 3 items adjacent to everyone, then one group of q = 2
    assert sum(1 for nb in inst.neighbors if len(nb) == 4) == 3
    assert inst.num_items == 5
    inst = gen_price_of_fairness(3, 1, 1)
    assert inst.class_sizes() == (1, 1, 2)
    assert inst.num_items == 3 + 2


def test_cnsw_counterexample():
    inst = gen_cnsw_counterexample()
    assert inst.num_agents == 8 and inst.num_items == 6
    assert inst.degree(0) == 5
    assert inst.class_neighbors[4][1] == () and inst.class_neighbors[5][1] == ()


def test_random_bipartite():
    full = gen_random_bipartite(2, 3, 4, 1.0, seed=7)
    assert full.num_edges == 6 * 4
    empty = gen_random_bipartite(2, 3, 4, 0.0, seed=7)
    assert empty.num_edges == 0 and empty.num_items == 4
    assert gen_random_bipartite(3, [1, 2, 3], 5, 0.4, seed=11) == gen_random_bipartite(3, [1, 2, 3], 5, 0.4, seed=11)
    with pytest.raises(InstanceError):
        gen_random_bipartite(2, [1], 3, 0.5, seed=1)
    with pytest.raises(InstanceError):
        gen_random_bipartite(2, 1, 3, 1.5, seed=1)


@pytest.mark.parametrize("bad", [0, -1, 1.5, True])
def test_generators_reject_bad_sizes(bad):
    with pytest.raises(InstanceError):
        gen_upper_triangular(bad)


def test_json_round_trip_exact(tmp_path):
    for inst in [gen_cnsw_counterexample(), gen_divisible_hardness(4), gen_random_bipartite(3, 2, 6, 0.5, 3)]:
        text = inst.to_json()
        back = Instance.from_json(text)
        assert back == inst
        assert back.to_json() == text
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        assert load_instance(path) == inst


def test_json_is_one_record_per_line():
    text = gen_upper_triangular(3).to_json()
    lines = text.splitlines()
    assert sum('"neighbors"' in ln for ln in lines) == 3
    assert json.loads(text)["num_classes"] == 1


def test_generators_registry():
    assert set(GENERATORS) == {
        "upper_triangular",
        "cef_impossibility",
        "divisible_hardness",
        "price_of_fairness",
        "cnsw_counterexample",
        "random_bipartite",
    }


def test_span_behaves_like_sequence():
    s = Span(range(2, 5), range(8, 10))
    assert list(s) == [2, 3, 4, 8, 9]
    assert len(s) == 5 and s[3] == 8 and s[-1] == 9
    assert 4 in s and 5 not in s
    assert s == (2, 3, 4, 8, 9)
    assert s.covers(2, 5) and not s.covers(2, 6)


@settings(max_examples=60, deadline=None)
@given(
    k=st.integers(1, 4),
    per=st.integers(1, 4),
    m=st.integers(1, 8),
    p=st.floats(0, 1),
    seed=st.integers(0, 2**32),
)
def test_random_round_trip_property(k, per, m, p, seed):
    inst = gen_random_bipartite(k, per, m, p, seed)
    back = Instance.from_json(inst.to_json())
    assert back == inst
    for o, nb in enumerate(inst.neighbors):
        for a in nb:
            assert inst.has_edge(a, o)
            assert a in inst.class_neighbors[o][inst.agent_class[a]]
