import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitlist6.addr import parse_ipv6, prefix_of
from hitlist6.backscan import (
    AliasInference,
    FileProber,
    MockResponder,
    ProbeKind as K,
    ProbePlan,
    ProbeResponse,
    clients_in_aliased,
    compare_alias_lists,
    infer_aliased,
    merge_inferences,
    plan_interval,
    plan_intervals,
    read_plan,
    read_responses,
    read_verdicts,
    write_plan,
    write_responses,
    write_summary,
    write_verdicts,
)
from hitlist6.errors import UnplannedResponseError
from hitlist6.observations import Observation
from hitlist6.prefixmap import PrefixTable, build_table

NET = 0x20010DB8 << 32  # top 64 bits of 2001:db8::/64


def client(net_off: int, iid: int) -> int:
    return ((NET + net_off) << 64) | iid


def test_distinct_slash64s():
    plan = plan_interval([client(1, 5), client(2, 5)], 0, 1)
    assert len(plan) == 4
    assert len(plan.of_kind(K.RANDOM)) == 2


def test_shared_slash64():
    plan = plan_interval([client(1, 5), client(1, 6)], 0, 1)
    assert len(plan) == 3


def test_plan_deterministic_and_seed_sensitive():
    cl = [client(i, 7) for i in range(50)]
    assert plan_interval(cl, 600, 42).targets == plan_interval(list(reversed(cl)), 600, 42).targets
    assert plan_interval(cl, 600, 42).targets != plan_interval(cl, 600, 43).targets
    assert plan_interval(cl, 600, 42).targets != plan_interval(cl, 1200, 42).targets


def test_empty_clients_rejected():
    with pytest.raises(ValueError):
        plan_interval([], 0, 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, (1 << 64) - 1)), min_size=1, max_size=40),
       st.integers(0, 1000))
def test_plan_soundness(raw, seed):
    clients = {client(n, i) for n, i in raw}
    plan = plan_interval(clients, 0, seed)
    nets = {c >> 64 for c in clients}
    assert len(plan) <= len(clients) + len(nets)
    assert set(plan.of_kind(K.CLIENT)) == clients
    for t, origin in plan.derived_from.items():
        assert t in origin and t not in clients
    assert {p.base >> 64 for p in plan.derived_from.values()} == nets


def test_collision_redraw_gives_up_with_warning(monkeypatch, caplog):
    import hitlist6.backscan as bs

    class Stuck(random.Random):
        def getrandbits(self, k):
            return 5

    monkeypatch.setattr(bs, "_interval_rng", lambda seed, start: Stuck())
    plan = plan_interval([client(1, 5)], 0, 0)
    assert len(plan) == 1
    assert "no free random target" in caplog.text


def test_intervals_split_on_600s():
    obs = [Observation(t, client(t // 600, 1), "v") for t in (0, 599, 600, 1300)]
    plans = plan_intervals(obs, 0)
    assert [p.interval_start for p in plans] == [0, 600, 1200]
    assert len(plan_intervals(obs, 0, interval_seconds=3600)) == 1


def test_random_response_means_aliased():
    plan = plan_interval([client(1, 5), client(2, 5)], 0, 3)
    rnd = plan.of_kind(K.RANDOM)
    resp = [ProbeResponse(t, t == rnd[0]) for t in plan.targets]
    inf = infer_aliased(plan, resp)
    assert [v.evidence for v in inf.verdicts] == [rnd[0]]
    assert inf.verdicts[0].prefix == prefix_of(rnd[0], 64)
    assert inf.random_hit_rate == 0.5 and inf.client_hit_rate == 0.0


def test_client_only_responses():
    plan = plan_interval([client(i, 5) for i in range(3)], 0, 3)
    resp = [ProbeResponse(t, plan.targets[t].kind is K.CLIENT) for t in plan.targets]
    inf = infer_aliased(plan, resp)
    assert inf.verdicts == [] and inf.client_hit_rate == 1.0


def test_unplanned_response():
    plan = plan_interval([client(1, 5)], 0, 3)
    with pytest.raises(UnplannedResponseError) as ei:
        infer_aliased(plan, [ProbeResponse(client(9, 9), True)])
    assert ei.value.kind == "unplanned-response"
    with pytest.raises(UnplannedResponseError):
        infer_aliased(plan, [ProbeResponse(client(1, 5), True, K.RANDOM)])


def test_mock_responder_fifty_aliased():
    clients = [client(i, 0x1000 + i) for i in range(200)]
    aliased = [str(prefix_of(client(i, 0), 64)) for i in range(0, 200, 4)]
    plan = plan_interval(clients, 0, 11)
    inf = infer_aliased(plan, MockResponder(aliased).probe(plan))
    assert sorted(str(v.prefix) for v in inf.verdicts) == sorted(aliased)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.booleans(), min_size=8, max_size=8), st.lists(st.booleans(), min_size=8, max_size=8))
def test_verdicts_monotone_in_evidence(a, b):
    plan = plan_interval([client(i, 1) for i in range(4)], 0, 5)
    targets = sorted(plan.targets)
    base = infer_aliased(plan, [ProbeResponse(t, x) for t, x in zip(targets, a)])
    more = infer_aliased(plan, [ProbeResponse(t, x or y) for t, x, y in zip(targets, a, b)])
    assert {v.prefix for v in base.verdicts} <= {v.prefix for v in more.verdicts}


def _verdicts(n):
    plan = plan_interval([client(i, 1) for i in range(n)], 0, 0)
    return infer_aliased(plan, [ProbeResponse(t, True) for t in plan.targets]).verdicts


def test_compare_known_and_new():
    verdicts = _verdicts(10)
    ext = PrefixTable()
    for v in verdicts[:8]:
        ext.add_v6(v.prefix.base, 64, True)
    cmp = compare_alias_lists(verdicts, ext.freeze())
    assert (cmp.known, cmp.new) == (8, 2)
    assert cmp.new_prefixes == [v.prefix for v in verdicts[8:]]


def test_compare_covering_slash48_and_empty():
    verdicts = _verdicts(3)
    ext = build_table([(str(prefix_of(verdicts[0].evidence, 48)), True)])
    assert compare_alias_lists(verdicts, ext).known == 3
    assert compare_alias_lists(verdicts, PrefixTable().freeze()).new == 3


def test_clients_in_aliased():
    verdicts = _verdicts(1)
    net = verdicts[0].prefix.base >> 64
    cl = [(net << 64) | i for i in range(1, 4)]
    assert clients_in_aliased(cl, verdicts)[0] == 3
    assert clients_in_aliased([client(50, 1)], verdicts)[0] == 0
    asmap = build_table([("2001:db8::/32", 65000)])
    assert clients_in_aliased(cl, verdicts, asmap)[1] == {65000: 3}


def test_merge_keeps_all_prefixes():
    a = _verdicts(2)
    plan = plan_interval([client(7, 1)], 600, 0)
    b = infer_aliased(plan, [ProbeResponse(t, True) for t in plan.targets])
    m = merge_inferences([AliasInference(a, 2, 2, 2, 2), b])
    assert len(m.verdicts) == 3 and m.client_targets == 3


def test_file_formats_round_trip(tmp_path):
    plan = plan_interval([client(1, 5), client(2, 6)], 1200, 9)
    write_plan(tmp_path / "plan.csv", plan)
    assert (tmp_path / "plan.csv").read_text().splitlines()[0] == "target,kind,origin_slash64"
    again = read_plan(tmp_path / "plan.csv", 1200)
    assert again.targets == plan.targets

    resp = MockResponder([str(prefix_of(client(1, 0), 64))], client_rate=0.5, seed=1).probe(plan)
    write_responses(tmp_path / "resp.csv", resp)
    lines = (tmp_path / "resp.csv").read_text().splitlines()
    assert lines[0] == "target,responded" and {l.rsplit(",", 1)[1] for l in lines[1:]} <= {"0", "1"}
    back = read_responses(tmp_path / "resp.csv")
    assert [(r.target, r.responded) for r in back] == [(r.target, r.responded) for r in resp]

    # file-based prober: the plan is written out, responses read back
    fp = FileProber(tmp_path / "out_plan.csv", tmp_path / "resp.csv")
    inf = infer_aliased(plan, fp.probe(plan))
    assert (tmp_path / "out_plan.csv").exists()
    assert len(inf.verdicts) == 1

    write_verdicts(tmp_path / "v.csv", inf.verdicts)
    assert read_verdicts(tmp_path / "v.csv") == inf.verdicts
    write_summary(tmp_path / "s.json", inf)
    s = json.loads((tmp_path / "s.json").read_text())
    assert set(s) == {"client_hit_rate", "random_hit_rate", "aliased_64_count", "known", "new"}
    assert s["aliased_64_count"] == 1


def test_mock_rates_are_seeded():
    plan = plan_interval([client(i, 1) for i in range(100)], 0, 0)
    a = MockResponder([], client_rate=0.5, random_rate=0.1, seed=4).probe(plan)
    b = MockResponder([], client_rate=0.5, random_rate=0.1, seed=4).probe(plan)
    assert a == b
    inf = infer_aliased(plan, a)
    assert 0.3 < inf.client_hit_rate < 0.7


def test_parse_helpers_used_in_fixtures():
    assert client(0, 1) == parse_ipv6("2001:db8::1")
    assert isinstance(ProbePlan(0).targets, dict)
