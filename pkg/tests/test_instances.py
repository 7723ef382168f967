import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recharging_bandits.instances import (
    KINDS,
    Instance,
    InstanceError,
    PayoffFunction,
    constant,
    evaluate,
    generate,
    heaviside,
    load,
    save,
)


def test_evaluate_heaviside_below_and_above_threshold():
    f = heaviside(1.0, 2)
    assert evaluate(f, 1) == 0.0
    assert evaluate(f, 7) == 1.0
    assert f.recovery_time == 2


def test_evaluate_table_lookup():
    f = PayoffFunction((0.2, 0.5, 0.5))
    assert evaluate(f, 2) == 0.5


def test_evaluate_rejects_zero_delay():
    with pytest.raises(ValueError):
        evaluate(constant(0.3), 0)


def test_payoff_function_invariants():
    with pytest.raises(InstanceError) as exc:
        PayoffFunction((0.5, 0.4))
    assert exc.value.delay == 2
    with pytest.raises(InstanceError):
        PayoffFunction((0.1, 1.2))
    # estimates may be non-monotone
    assert PayoffFunction((0.5, 0.4), strict=False).values == (0.5, 0.4)


def test_instance_budget_and_bound():
    with pytest.raises(InstanceError):
        Instance((constant(1.0), constant(0.5)), 2, 1)
    with pytest.raises(InstanceError):
        Instance((heaviside(1.0, 3), constant(0.5)), 1, 2)


def test_table_pads_with_plateau():
    inst = Instance((heaviside(0.7, 2), constant(0.6)), 1, 4)
    np.testing.assert_array_equal(inst.table(), [[0, 0.7, 0.7, 0.7], [0.6] * 4])


def test_generate_is_deterministic():
    assert generate("heaviside", 2, 2, 7) == generate("heaviside", 2, 2, 7)
    assert generate("heaviside", 5, 4, 1) != generate("heaviside", 5, 4, 2)


def test_generate_random_monotone_sorted():
    inst = generate("random-monotone", 5, 4, 1)
    for f in inst.arms:
        assert list(f.values) == sorted(f.values)


def test_generate_concave_increments_non_increasing():
    inst = generate("concave", 3, 8, 3)
    for f in inst.arms:
        inc = np.diff(f.values)
        assert np.all(np.diff(inc) <= 1e-12)


def test_generate_rejects_budget_at_n():
    with pytest.raises(InstanceError):
        generate("heaviside", 3, 2, 0, k=3)


@settings(max_examples=60, deadline=None)
@given(
    kind=st.sampled_from(KINDS),
    n=st.integers(2, 8),
    tau_max=st.integers(1, 8),
    seed=st.integers(0, 2**31 - 1),
)
def test_generated_arms_respect_invariants(kind, n, tau_max, seed):
    inst = generate(kind, n, tau_max, seed)
    for f in inst.arms:
        v = np.array(f.values)
        assert np.all((0 <= v) & (v <= 1))
        assert np.all(np.diff(v) >= 0)
        assert f.recovery_time <= inst.tau_max
        assert evaluate(f, inst.tau_max + 5) == v[-1]


def test_round_trip(tmp_path):
    inst = Instance((heaviside(1.0, 2), constant(0.6)), 1, 2)
    save(inst, tmp_path / "i.json")
    assert load(tmp_path / "i.json") == inst


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), kind=st.sampled_from(KINDS))
def test_round_trip_is_bit_exact(tmp_path_factory, seed, kind):
    inst = generate(kind, 4, 5, seed)
    path = tmp_path_factory.mktemp("rt") / "i.json"
    save(inst, path)
    back = load(path)
    for a, b in zip(inst.arms, back.arms):
        assert a.values == b.values


def _write(tmp_path, doc):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    return p


def test_load_names_arm_and_delay_on_monotonicity_error(tmp_path):
    doc = {"n": 2, "k": 1, "tau_max": 2, "arms": [{"recovery_time": 1, "values": [0.3]},
                                                  {"recovery_time": 2, "values": [0.5, 0.4]}]}
    with pytest.raises(InstanceError) as exc:
        load(_write(tmp_path, doc))
    assert (exc.value.arm, exc.value.delay) == (1, 2)


def test_load_rejects_budget_equal_to_n(tmp_path):
    doc = {"n": 2, "k": 2, "tau_max": 1, "arms": [{"recovery_time": 1, "values": [0.3]}] * 2}
    with pytest.raises(InstanceError, match="budget"):
        load(_write(tmp_path, doc))


def test_load_rejects_malformed(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(InstanceError):
        load(p)
    with pytest.raises(InstanceError):
        load(_write(tmp_path, {"n": 2, "k": 1}))
    with pytest.raises(InstanceError) as exc:
        load(_write(tmp_path, {"n": 1, "k": 1, "tau_max": 1, "arms": [{"values": [1.5]}]}))
    assert exc.value.arm == 0
