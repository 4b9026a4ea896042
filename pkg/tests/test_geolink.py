import csv
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hitlist6.eui64 import MacAddress, Oui
from hitlist6.geolink import (
    CountryGrid,
    GeoBssid,
    OffsetHistogram,
    OffsetModel,
    apply_offset,
    geolocate_corpus,
    infer_models,
    infer_offset,
    read_geo_corpus,
    read_models,
    read_tallies,
    tally_offsets,
    write_geo_corpus,
    write_models,
    write_results,
    write_tallies,
)
from hitlist6.synth import plant_bssid_corpus
from oracles import brute_offsets

OUI = 0x001A2B
X = (OUI << 24) | 0x100


def g(mac, lat=1.0, lon=2.0):
    return GeoBssid.make(mac, lat, lon)


def test_tally_examples():
    assert dict(tally_offsets([X], [g(X + 1)], OUI)) == {1: 1}
    assert dict(tally_offsets([X], [g(X + 1), g(X - 2)], OUI)) == {1: 1, -2: 1}


def test_tally_ignores_other_ouis():
    other = (0x3C4D5E << 24) | 0x100
    assert dict(tally_offsets([X, other], [g(X + 1), g(other + 7)], OUI)) == {1: 1}


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 4000), min_size=1, max_size=40), st.lists(st.integers(0, 4000), min_size=1, max_size=40))
def test_tally_matches_brute_force(w, b):
    wired = [(OUI << 24) | n for n in w]
    bssids = [(OUI << 24) | n for n in b]
    assert dict(tally_offsets(wired, bssids, OUI)) == brute_offsets(wired, bssids)


def test_tally_chunking_matches_brute_force(monkeypatch):
    import hitlist6.geolink as gl

    monkeypatch.setattr(gl, "_CHUNK_PAIRS", 50)
    rng = random.Random(2)
    wired = [(OUI << 24) | rng.randrange(1 << 24) for _ in range(60)]
    bssids = [(OUI << 24) | rng.randrange(1 << 24) for _ in range(70)]
    assert dict(tally_offsets(wired, bssids, OUI)) == brute_offsets(wired, bssids)


def test_planted_plus_four_mode():
    wired, geo, _ = plant_bssid_corpus([{"oui": "00:1a:2b", "offset": 4, "devices": 600, "decoys": 6000}], seed=3)
    hist = tally_offsets(wired, geo, OUI)
    assert hist[4] == 600
    assert infer_offset(hist, 600 * 6600).offset == 4


@pytest.mark.parametrize("hist,pairs,expected", [
    ({1: 800, -3: 200}, 1000, (1, 800)),
    ({2: 300, -2: 300}, 600, (2, 300)),
    ({3: 300, -2: 300}, 600, (-2, 300)),
    ({5: 10, 7: 10, -9: 3}, 600, (5, 10)),
    ({0: 900, -4: 2}, 1000, (-4, 2)),
])
def test_infer_offset(hist, pairs, expected):
    m = infer_offset(hist, pairs, oui=OUI)
    assert (m.offset, m.support) == expected
    assert m.pair_count == pairs and m.oui == OUI


def test_infer_offset_below_min_pairs():
    assert infer_offset({1: 499}, 499) is None
    assert infer_offset({1: 499}, 500) is not None
    assert infer_offset({0: 100}, 1000) is None


@given(st.dictionaries(st.integers(-1000, 1000), st.integers(1, 50), min_size=1, max_size=30))
def test_support_never_exceeds_pairs(hist):
    pairs = max(500, sum(hist.values()))
    m = infer_offset(OffsetHistogram.from_dict(hist), pairs)
    if m is not None:
        assert m.support <= m.pair_count
        assert m.offset != 0 and abs(m.offset) < 1 << 24
        # the chosen side's count is maximal over the whole histogram
        assert m.support == max(v for k, v in hist.items() if k != 0)


def test_apply_offset():
    m = OffsetModel(Oui(OUI), 1, 1, 1000)
    assert apply_offset((OUI << 24) | 0x10, m) == (OUI << 24) | 0x11
    assert apply_offset((OUI << 24) | 0xFFFFFF, m) is None
    assert apply_offset((OUI << 24) | 0x0, OffsetModel(Oui(OUI), -1, 1, 1000)) is None
    assert apply_offset(X, OffsetModel(Oui(OUI), 0, 1, 1000)) == X
    with pytest.raises(ValueError):
        apply_offset(0x3C4D5E000001, m)


@given(st.integers(-5000, 5000), st.integers(0, (1 << 24) - 1), st.integers(0, (1 << 24) - 1))
def test_apply_offset_injective(off, a, b):
    m = OffsetModel(Oui(OUI), off, 1, 1000)
    ra, rb = apply_offset((OUI << 24) | a, m), apply_offset((OUI << 24) | b, m)
    if ra is not None and rb is not None and a != b:
        assert ra != rb


def test_recovery_and_geolocation():
    plant = [
        {"oui": "00:1a:2b", "offset": 1, "devices": 600, "decoys": 6000},
        {"oui": "3c:4d:5e", "offset": -5, "devices": 600, "decoys": 6000},
        {"oui": "f0:9f:c2", "offset": 4096, "devices": 600, "decoys": 6000},
    ]
    wired, geo, truth = plant_bssid_corpus(plant, seed=1)
    models = infer_models(wired, geo)
    assert {str(o): m.offset for o, m in models.items()} == {"00:1a:2b": 1, "3c:4d:5e": -5, "f0:9f:c2": 4096}
    res = geolocate_corpus(wired, geo, models)
    got = {r.mac: (r.lat, r.lon) for r in res.results}
    assert got == truth


def test_min_pair_boundary_in_infer_models():
    # one wired MAC against 499 BSSIDs at distinct offsets, one at +1
    wired = [X]
    geo = [g(X + 1)] + [g(X + 10 + i) for i in range(498)]
    assert infer_models(wired, geo) == {}
    geo.append(g(X + 9999))
    assert infer_models(wired, geo)[Oui(OUI)].pair_count == 500


def test_geolocate_gaps():
    m = {Oui(OUI): OffsetModel(Oui(OUI), 1, 5, 1000)}
    geo = [g(X + 1, 10.0, 20.0)]
    other = (0x3C4D5E << 24) | 5
    res = geolocate_corpus([X, X + 5, other], geo, m, CountryGrid([(0, 20, 10, 30, "DE")]))
    assert [(r.mac, r.matched_bssid) for r in res.results] == [(X, X + 1)]
    assert res.per_country == {"DE": 1}


def test_coordinate_validation():
    with pytest.raises(ValueError):
        GeoBssid.make(1, 91.0, 0.0)
    with pytest.raises(ValueError):
        GeoBssid.make(1, 0.0, -180.5)


def test_country_grid(tmp_path):
    grid = CountryGrid([(50, 55, 5, 15, "DE"), (40, 45, -80, -70, "US")])
    assert grid.country(52, 13) == "DE"
    assert grid.country(0, 0) is None
    grid.to_csv(tmp_path / "grid.csv")
    assert CountryGrid.from_csv(tmp_path / "grid.csv").country(42, -75) == "US"


def test_file_round_trips(tmp_path):
    geo = [g(X + 1, 52.5, 13.4), g(X + 2, -33.9, 151.2)]
    write_geo_corpus(tmp_path / "geo.csv", geo)
    assert read_geo_corpus(tmp_path / "geo.csv") == geo

    models = {Oui(OUI): OffsetModel(Oui(OUI), 1, 1, 2)}
    write_models(tmp_path / "m.csv", models)
    assert read_models(tmp_path / "m.csv") == models
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "oui,offset,support,pair_count"

    write_tallies(tmp_path / "t.csv", [X], geo)
    hist, pairs = read_tallies(tmp_path / "t.csv")[Oui(OUI)]
    assert hist == {1: 1, 2: 1} and pairs == 2

    res = geolocate_corpus([X], geo, models)
    write_results(tmp_path / "r.csv", res.results)
    row = next(csv.DictReader(open(tmp_path / "r.csv")))
    assert row["mac"] == str(MacAddress(X)) and row["bssid"] == str(MacAddress(X + 1))
    assert row["offset"] == "1" and float(row["lat"]) == 52.5
