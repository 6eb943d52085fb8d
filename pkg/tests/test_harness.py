import csv
import io
import json
import math

import numpy as np
import pytest

from helly_quant.errors import InvalidConfig
from helly_quant.harness import (CSV_COLUMNS, GenConfig, SweepEntry, dumps, gen_family, gen_multiset,
                                 load_sweep_config, run_sweep)
from helly_quant.helly import ConvexFamily, enumerate_good_tuples
from helly_quant.transversal import build_ellipsoid_hypergraph, integral_transversal_number
from helly_quant.tverberg import EllipsoidMultiset


def _rows(rep):
    text = rep.csv_text().split("\n", 1)[1]
    return list(csv.DictReader(io.StringIO(text)))


def test_common_core_contains_square():
    fam = gen_family(GenConfig("common_core", 10, 2, 3))
    corners = [(-1, -1), (-1, 1), (1, -1), (1, 1)]
    assert fam.n == 10
    assert all(P.contains_point(c) for P in fam.members for c in corners)


def test_clusters_structure():
    fam = gen_family(GenConfig("clusters", 12, 2, 5))
    rep = enumerate_good_tuples(fam, 5, math.pi)
    assert len(rep.good) == 2 * math.comb(6, 5)
    hg = build_ellipsoid_hypergraph(fam, math.pi)
    assert integral_transversal_number(hg) == 2


@pytest.mark.parametrize("kind", ["common_core", "clusters", "random_boxes", "random_rotated_slabs"])
def test_generation_deterministic(kind):
    a = dumps(gen_family(GenConfig(kind, 8, 2, 77)).to_json())
    b = dumps(gen_family(GenConfig(kind, 8, 2, 77)).to_json())
    c = dumps(gen_family(GenConfig(kind, 8, 2, 78)).to_json())
    assert a == b and a != c
    back = ConvexFamily.from_json(json.loads(a))
    assert dumps(back.to_json()) == a


def test_d3_generation():
    fam = gen_family(GenConfig("random_rotated_slabs", 5, 3, 1))
    assert fam.dim == 3 and all(P.bounded for P in fam.members)


def test_hexagon_multiset():
    ms = gen_multiset(GenConfig("tverberg_hexagon", 7, 2, 0))
    assert ms.m == 7 and np.allclose(ms.items[-1].center, 0)
    assert EllipsoidMultiset.from_json(json.loads(dumps(ms.to_json()))).m == 7
    with pytest.raises(InvalidConfig):
        gen_family(GenConfig("tverberg_hexagon", 7, 2, 0))


@pytest.mark.parametrize("kw", [dict(kind="nope", n=5), dict(kind="clusters", n=0),
                                dict(kind="clusters", n=5, d=5), dict(kind="clusters", n=99),
                                dict(kind="clusters", n=5, ratio=2.0),
                                dict(kind="tverberg_hexagon", n=7, d=3)])
def test_invalid_configs(kw):
    with pytest.raises(InvalidConfig):
        GenConfig(**kw)


def test_sweep_common_core_beta_one(tmp_path):
    rep = run_sweep([GenConfig("common_core", n, 2, 1) for n in (8, 10, 12)], "qfh-large",
                    out_dir=tmp_path)
    rows = _rows(rep)
    assert [float(r["beta_achieved"]) for r in rows] == [1.0, 1.0, 1.0]
    assert rep.all_verified and not rep.any_certificate_failure
    assert (tmp_path / "report.csv").read_text().startswith("# format_version=1\n")
    assert list(rows[0]) == list(CSV_COLUMNS)
    for r in rows:
        cert = json.loads((tmp_path / "certificates" / f"{r['label']}.json").read_text())
        assert json.loads(dumps(cert)) == cert
        assert cert["result"]["subfamily"] == list(range(int(r["n"])))


def test_sweep_cluster_ratio_trend():
    rep = run_sweep([GenConfig("clusters", 10, 2, 3, ratio=x) for x in (0.5, 0.7, 0.9)], "qfh-large")
    rows = _rows(rep)
    alphas = [float(r["alpha"]) for r in rows]
    betas = [float(r["beta_achieved"]) for r in rows]
    assert alphas == sorted(alphas) and betas == sorted(betas)
    assert all(r["verified"] == "1" for r in rows)


@pytest.mark.slow
def test_sweep_pq_small_two_clusters():
    rep = run_sweep([GenConfig("clusters", 14, 2, s) for s in (3, 8)], "pq-small")
    assert [r["H_achieved"] for r in _rows(rep)] == ["2", "2"]


def test_sweep_records_errors_as_rows():
    rep = run_sweep([GenConfig("random_boxes", 6, 2, 0, spread=30.0),
                     SweepEntry(GenConfig("common_core", 5, 2, 0), v=100.0)], "qfh-large")
    rows = _rows(rep)
    assert [r["status"] for r in rows] == ["error:NoGoodTuple", "error:NoGoodTuple"]
    assert rep.certificates[rows[0]["label"]]["result"]["error"] == "NoGoodTuple"


def test_sweep_rejects_unknown_pipeline_and_duplicates():
    with pytest.raises(InvalidConfig):
        run_sweep([GenConfig("common_core", 5)], "nope")
    with pytest.raises(InvalidConfig):
        run_sweep([GenConfig("common_core", 5)] * 2, "qfh-large")


def test_sweep_tverberg_and_parallel_workers():
    entries = [GenConfig("tverberg_hexagon", 7, 2, 0, spread=s) for s in (0.5, 1.0)]
    serial = run_sweep(entries, "tverberg")
    parallel = run_sweep(entries, "tverberg", workers=2)
    assert serial.csv_text() == parallel.csv_text()
    assert all(r["verified"] == "1" for r in _rows(serial))


def test_load_sweep_config(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"pipeline": "qfh-large",
                                "instances": [{"kind": "common_core", "n": 6, "v": 2.0}]}))
    pipeline, entries = load_sweep_config(path)
    assert pipeline == "qfh-large" and entries[0].v == 2.0 and entries[0].gen.n == 6
    path.write_text(json.dumps({"instances": []}))
    with pytest.raises(InvalidConfig):
        load_sweep_config(path)


def test_shipped_configs_load():
    from pathlib import Path
    paths = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.json"))
    assert len(paths) >= 5
    for p in paths:
        pipeline, entries = load_sweep_config(p)
        assert entries and pipeline
