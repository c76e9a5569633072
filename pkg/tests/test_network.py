import dataclasses

import numpy as np
import pytest

from chargenet.errors import InstanceFormatError
from chargenet.network import (GeneratorConfig, generate_instance,
                               load_instance, save_instance,
                               shortest_distance)

from conftest import DATA


def test_round_trip(tmp_path, toy_a):
    out = tmp_path / "copy.txt"
    save_instance(toy_a, out)
    again = load_instance(out)
    assert again.nodes == toy_a.nodes
    assert len(again.arcs) == len(toy_a.arcs)
    for a, b in zip(again.arcs, toy_a.arcs):
        assert (a.id, a.tail, a.head) == (b.id, b.tail, b.head)
        assert a.length == pytest.approx(b.length, rel=1e-12)
        assert a.capacity == pytest.approx(b.capacity, rel=1e-12)
        assert a.fftime == pytest.approx(b.fftime, rel=1e-12)
    assert [ (o.origin, o.dest) for o in again.ods ] == \
           [ (o.origin, o.dest) for o in toy_a.ods ]
    assert again.params == toy_a.params
    assert again.price_grid == toy_a.price_grid


def test_missing_file_is_format_error(tmp_path):
    with pytest.raises(InstanceFormatError, match="cannot read"):
        load_instance(tmp_path / "nope.txt")


def test_unknown_section(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("[wat]\n1\n")
    with pytest.raises(InstanceFormatError, match=r"unknown section"):
        load_instance(p)


def test_content_before_section(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1, 2\n[nodes]\n")
    with pytest.raises(InstanceFormatError, match="before any section"):
        load_instance(p)


def test_missing_params_key(tmp_path, toy_a):
    p = tmp_path / "inst.txt"
    save_instance(toy_a, p)
    text = p.read_text().replace("alpha = ", "# alpha = ")
    p.write_text(text)
    with pytest.raises(InstanceFormatError, match="missing params"):
        load_instance(p)


def test_unknown_params_key(tmp_path, toy_a):
    p = tmp_path / "inst.txt"
    save_instance(toy_a, p)
    with open(p, "a") as fh:
        fh.write("mystery = 3\n")
    with pytest.raises(InstanceFormatError, match="unknown params"):
        load_instance(p)


def test_bad_arc_row(tmp_path, toy_a):
    p = tmp_path / "inst.txt"
    save_instance(toy_a, p)
    text = p.read_text().replace("1, 1, 2, 9.7, 9, 17.9",
                                 "1, 1, 2, 9.7, 9")
    p.write_text(text)
    with pytest.raises(InstanceFormatError, match="arc row"):
        load_instance(p)


def test_validate_duplicate_ids(toy_a):
    dup = dataclasses.replace(
        toy_a, arcs=toy_a.arcs + [dataclasses.replace(toy_a.arcs[0])])
    with pytest.raises(InstanceFormatError, match="arc id"):
        dup.validate()


def test_validate_unknown_od_node(toy_a):
    bad = dataclasses.replace(
        toy_a, ods=[dataclasses.replace(toy_a.ods[0], dest=99)])
    with pytest.raises(InstanceFormatError):
        bad.validate()


def test_validate_kappa_range(toy_a):
    bad = dataclasses.replace(
        toy_a, params=dataclasses.replace(toy_a.params, kappa=1.0))
    with pytest.raises(InstanceFormatError):
        bad.validate()


def test_fftime_override(tmp_path, toy_a):
    p = tmp_path / "inst.txt"
    save_instance(toy_a, p)
    text = p.read_text().replace("1, 1, 2, 9.7, 9, 17.9",
                                 "1, 1, 2, 9.7, 9, 17.9, 20.0, 25.0")
    p.write_text(text)
    inst = load_instance(p)
    arc = inst.arcs[0]
    assert arc.fftime_at(0) == 20.0
    assert arc.fftime_at(1) == 25.0
    assert inst.arcs[1].fftime_at(0) == inst.arcs[1].fftime


def test_generator_deterministic(tmp_path):
    a = generate_instance(GeneratorConfig(seed=5))
    b = generate_instance(GeneratorConfig(seed=5))
    pa, pb = tmp_path / "a.txt", tmp_path / "b.txt"
    save_instance(a, pa)
    save_instance(b, pb)
    assert pa.read_text() == pb.read_text()
    c = generate_instance(GeneratorConfig(seed=6))
    save_instance(c, tmp_path / "c.txt")
    assert (tmp_path / "c.txt").read_text() != pa.read_text()


def test_generator_templates_validate():
    hyp = generate_instance(GeneratorConfig(seed=1))
    toy = generate_instance(GeneratorConfig(seed=1, template="toy"))
    assert len(hyp.sites) > 0 and len(toy.sites) == 2
    assert hyp.params.T == 5 and toy.params.T == 2
    # validate() already ran inside generate_instance; run again to be sure
    hyp.validate()
    toy.validate()


def test_generator_demand_levels():
    lo = generate_instance(GeneratorConfig(seed=4, demand_level="low"))
    med = generate_instance(GeneratorConfig(seed=4, demand_level="medium"))
    g_lo = sum(sum(od.intercepts) for od in lo.ods)
    g_med = sum(sum(od.intercepts) for od in med.ods)
    assert g_med > g_lo
    with pytest.raises(Exception, match="demand level"):
        generate_instance(GeneratorConfig(seed=4, demand_level="extreme"))


def test_shortest_distance(toy_a):
    dist = shortest_distance(toy_a, 1)
    # direct check against the two routes of the diamond
    assert dist[2] == pytest.approx(9.7)
    assert dist[4] == pytest.approx(min(9.7 + 9.1, 10.1 + 8.7))
    assert dist[1] == 0.0


def test_omega_table_monotone(toy_a):
    omega = toy_a.omega_table()
    vals = omega[1:]
    assert omega[0] == 0.0
    assert all(0 < w <= 1 for w in vals)
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
