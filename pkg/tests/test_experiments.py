import csv
import io
import json
import math

import numpy as np
import pytest

from oracles import bd_cap_ratio
from puritycrit import experiments as ex
from puritycrit.matcore import PartitionScheme


def test_sweep_result_csv_format(tmp_path):
    res = ex.SweepResult("demo", {"x": [0.1, 1 / 3], "ok": [True, False], "n": [1, None]},
                         {"seed": 1}, {"value": np.float64(0.5)})
    text = res.to_csv()
    assert text == "x,ok,n\n0.1,true,1\n0.3333333333333333,false,\n"
    csv_path, json_path = res.write(tmp_path / "sub" / "demo")
    assert csv_path.read_bytes() == text.encode("utf-8")
    side = json.loads(json_path.read_text())
    assert side["summary"]["value"] == 0.5
    assert side["metadata"]["seed"] == 1
    # repr floats parse back exactly
    rows = list(csv.DictReader(io.StringIO(text)))
    assert float(rows[1]["x"]) == 1 / 3


def test_jsonable_nonfinite():
    assert ex.jsonable({"a": np.nan, "b": np.arange(2)}) == {"a": None, "b": [0, 1]}


def test_werner_sweep_thresholds():
    res = ex.werner_sweep(101)
    s = res.summary
    assert s["criterion_threshold"] == pytest.approx(1 / math.sqrt(3), abs=1e-9)
    assert s["chsh_threshold"] == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    assert s["separability_threshold"] == pytest.approx(1 / 3, abs=1e-9)
    assert s["purity_at_separability"] == pytest.approx(1 / 3, abs=1e-9)
    assert s["max_route_difference"] <= 1e-9
    assert res.n_rows == 101


def test_grid_validation():
    with pytest.raises(ValueError):
        ex.werner_sweep(1)
    with pytest.raises(ValueError):
        ex.werner_sweep([0.5, 1.5])


def test_bd_sampler_inside_tetrahedron():
    rng = ex.substream(0, 0)
    ts = ex.sample_bd_tetrahedron(20000, rng)
    # tetrahedron faces: t11 - t22 + t33 <= 1 etc.; equivalently all Bell weights >= 0
    w = np.linalg.solve(np.vstack([ex.BD_VERTICES.T, np.ones(4)]), np.vstack([ts.T, np.ones(len(ts))]))
    assert w.min() >= -1e-12
    # uniform: the mean is the centroid
    assert np.abs(ts.mean(axis=0)).max() < 0.02


def test_bd_references():
    assert ex.BD_RATIO_CAP_VOLUME == pytest.approx(bd_cap_ratio(), abs=1e-14)
    assert ex.BD_RATIO_PRINTED_FORMULA == pytest.approx(0.2377, abs=1e-4)


def test_bd_geometry_small_and_worker_independent():
    a = ex.bd_geometry(40000, seed=3, batch=10000, workers=1)
    b = ex.bd_geometry(40000, seed=3, batch=10000, workers=4)
    assert a.ratio == b.ratio and a.entangled_fraction == b.entangled_fraction
    assert a.audit_samples == 400 and a.audit_failures == 0
    assert abs(a.ratio - ex.BD_RATIO_CAP_VOLUME) < 4 * a.stderr
    with pytest.raises(ValueError):
        ex.bd_geometry(0)


def test_n_meas_counts():
    rng = np.random.default_rng(0)
    assert (ex.n_meas(np.full(9, 0.1), rng, 8) == 9).all()
    counts = ex.n_meas(np.array([0.6, 0.6, 0.0, 0.0]), rng, 16)
    assert set(counts.tolist()) <= {2, 3, 4}
    assert (ex.n_meas(np.array([2.0]), rng, 4) == 1).all()
    assert set(ex.n_meas(np.array([2.0, 0, 0]), rng, 64).tolist()) == {1, 2, 3}


def test_nmeas_scan_small():
    res = ex.nmeas_scan(3, bins=4, states_per_bin=6, shuffles=4, seed=1)
    assert res.summary["tensor_entries"] == 27
    assert res.summary["purities_needed"] == 7
    assert res.summary["max_route_difference"] <= 1e-9
    assert res.summary["below_one_always_saturated"]
    with pytest.raises(ValueError):
        ex.nmeas_scan(9)


def test_two_qubit_batch_stats_match_library():
    from puritycrit.matcore import DensityMatrix
    from puritycrit.puritylink import tnorm2_direct
    from puritycrit.states import negativity

    m = ex.hs_two_qubit_batch(20, ex.substream(0, 1))
    neg, t2p, t2d = ex.two_qubit_batch_stats(m)
    p = PartitionScheme.parse("0|1")
    for i in range(20):
        rho = DensityMatrix((2, 2), m[i])
        assert neg[i] == pytest.approx(negativity(rho, [1]), abs=1e-12)
        assert t2p[i] == pytest.approx(tnorm2_direct(rho, p), abs=1e-12)
        assert t2d[i] == pytest.approx(t2p[i], abs=1e-12)


def test_negativity_scan_small():
    res = ex.negativity_scan(3000, seed=2, batch=4096)
    s = res.summary
    assert s["samples"] == 3000
    assert sum(res.columns["count"]) == 3000
    assert s["max_route_difference"] <= 1e-9
    assert s["werner_detection_negativity"] == pytest.approx((math.sqrt(3) - 1) / 2)


def test_ghz_sweep():
    res = ex.ghz_sweep(4, 41)
    assert len(res.summary["partitions"]) == 15
    assert res.summary["gme_threshold"] == pytest.approx(7 / 15)
    finest = res.column("delta[0|1|2|3]")
    assert finest[0] == pytest.approx(1.0)   # prod(d_l - 1) for the maximally mixed state
    assert finest[-1] < 0
    assert res.summary["crossings"]["0|1|2|3"] == pytest.approx(1 / 3, abs=1e-9)
    sub = ex.ghz_sweep(3, 11, ["0|1|2", "0,1|2"])
    assert sub.summary["partitions"] == ["0|1|2", "0,1|2"]


def test_cost_table():
    res = ex.cost_table(ex.table_one_dims(6))
    assert res.columns["tensor_entries"][0] == 729
    assert res.columns["purities"][0] == 63
    assert ex.measurement_cost((3, 3, 3)) == (512, 7)
    assert ex.measurement_cost((4, 4, 4)) == (3375, 7)
    with pytest.raises(ValueError):
        ex.table_one_dims(3, arbitrary=(2, 3))


@pytest.mark.parametrize("n,expected", [(2, 0.5), (3, 0.25), (4, 0.125)])
def test_mm_reduction_threshold(n, expected):
    assert ex.mm_reduction_threshold(n) == expected
    rng = np.random.default_rng(n)
    assert ex.mm_reduction_residual(n, rng.uniform(2.0 ** -n, 1, 20)) <= 1e-12


@pytest.mark.parametrize("da,db,expected", [(10, 10, 0.82), (2, 2, 0.5), (100, 2, 0.5)])
def test_qudit_bound(da, db, expected):
    assert ex.qudit_bound_check(da, db) == pytest.approx(expected)


def test_qudit_bound_attained():
    # a state with maximally mixed reductions sits exactly at the edge at this purity
    from puritycrit.puritylink import purity_map_from_values
    from puritycrit.criteria import ksep_delta_tilde

    da, db = 3, 4
    p = ex.qudit_bound_check(da, db)
    pm = purity_map_from_values((da, db), {(0,): 1 / da, (1,): 1 / db, (0, 1): p})
    assert ksep_delta_tilde(pm) == pytest.approx(0.0, abs=1e-12)


def test_mean_purity_formulas():
    assert ex.hs_mean_purity(2) == pytest.approx(0.8)
    assert ex.bures_mean_purity(2) == pytest.approx(0.875)
    assert ex.bures_mean_purity_printed(2) > 1


def test_convexity_and_implications_small():
    assert ex.convexity_check((2, 2), 30, seed=1) <= 1e-9
    rep = ex.implication_chain(90, seed=1, frames_per_state=2)
    assert rep.chsh_without_ksep == 0 and rep.frames_without_ksep == 0
