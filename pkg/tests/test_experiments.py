import json

import numpy as np
import pytest

from floquet_ep import experiments as ex
from floquet_ep.errors import ConfigError
from floquet_ep.floquet import predict_ep


def cfg(**kw):
    doc = {"model": {"preset": "longhi3", "parameters": {"Omega": 1, "R0": 0.2}}, "omega_abs": 0.25}
    doc.update(kw)
    return ex.config_from_dict(doc)


def test_config_defaults_and_round_trip():
    c = cfg()
    assert (c.direction, c.cycles, c.initial, c.samples_per_cycle) == ("both", 300, 0, 200)
    assert c.hamiltonian(1).omega == 0.25 and c.hamiltonian(-1).omega == -0.25
    echo = c.to_dict()
    assert echo["initial"] == {"adiabatic_index": 1}
    again = ex.config_from_dict(echo)
    assert again.to_dict() == echo


@pytest.mark.parametrize(
    "doc",
    [
        {"model": {"preset": "longhi3"}, "omega_abs": 0.25, "bogus": 1},
        {"model": {"preset": "longhi3", "parameters": {"Omega": 1, "X": 2}}, "omega_abs": 0.25},
        {"model": {"preset": "longhi3"}, "omega_abs": -0.25},
        {"model": {"preset": "longhi3"}, "omega_abs": 0.25, "direction": "up"},
        {"model": {"preset": "longhi3"}, "omega_abs": 0.25, "initial": {"adiabatic_index": 4}},
        {"model": {"preset": "longhi3"}, "omega_abs": 0.25, "initial": {"adiabatic_index": 0}},
        {"model": {"preset": "sqrt2", "parameters": {"R0": 2.0}}, "omega_abs": 0.25},
        {"model": {"h0": [[[0, 0], [1, 0]]]}, "omega_abs": 0.25},
        {"model": {"preset": "longhi3"}},
    ],
)
def test_config_rejections(doc):
    with pytest.raises(ConfigError):
        ex.config_from_dict(doc)


def test_explicit_matrix_config():
    doc = {
        "model": {
            "h0": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]],
            "drives": [{"matrix": [[[0, 0], [0, 0]], [[1, 0], [0, 0]]], "harmonics": {"1": [0.3, 0]}}],
        },
        "omega_abs": 0.3,
        "initial": {"vector": [[1, 0], [0, 0]]},
    }
    c = ex.config_from_dict(doc)
    h = c.hamiltonian(-1)
    assert h.dim == 2 and h.omega == -0.3
    np.testing.assert_allclose(h(0.0), [[0, 1], [1.3, 0]])
    assert ex.config_from_dict(c.to_dict()).to_dict() == c.to_dict()


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        ex.load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        ex.load_config(bad)


@pytest.mark.parametrize("direction", ["cw", "ccw"])
@pytest.mark.parametrize("index", [1, 2, 3])
def test_single_cycle_returns(direction, index):
    res = ex.run_single_cycle(cfg(cycles=1, initial={"adiabatic_index": index}), direction)
    assert 0.95 <= res.fidelity <= 1.05
    assert res.leakage < 0.05
    assert res.trajectory.reconstruction_error() < 1e-6


def test_single_cycle_undriven():
    c = ex.config_from_dict({"model": {"preset": "longhi3", "parameters": {"R0": 0}}, "omega_abs": 0.25,
                             "cycles": 1, "initial": {"adiabatic_index": 2}})
    res = ex.run_single_cycle(c)
    assert res.fidelity == pytest.approx(1, abs=1e-8)


def test_single_cycle_dip():
    res = ex.run_single_cycle(cfg(cycles=1), "cw")
    mid = len(res.trajectory.times) // 2
    assert res.trajectory.populations[mid, 0] == pytest.approx(np.exp(-0.4), abs=0.02)


@pytest.mark.parametrize("index", [1, 2, 3])
def test_single_cycle_never_chiral(index):
    res = ex.run_chirality(cfg(cycles=1, initial={"adiabatic_index": index}))
    assert not res.chiral
    assert res.dominant_cw == res.dominant_ccw == index - 1


def test_chirality_fractions_normalised():
    res = ex.run_chirality(cfg(cycles=40))
    for v in res.dominance_fractions.values():
        assert np.all((v >= 0) & (v <= 1))
        assert abs(v.sum() - 1) < 1e-12


def test_chirality_middle_state_even_resonance():
    # from the middle level the Floquet EP pushes each direction to its survivor
    res = ex.run_chirality(cfg(cycles=500, initial={"adiabatic_index": 2}))
    rep = predict_ep([-1, 0, 1], 0.25)
    assert res.chiral
    assert (res.dominant_cw, res.dominant_ccw) == (rep.dominant_cw[0], rep.dominant_ccw[0])


def test_chirality_off_resonance():
    for i in (1, 2, 3):
        res = ex.run_chirality(cfg(omega_abs=0.26, cycles=300, initial={"adiabatic_index": i}))
        assert not res.chiral
        assert res.dominant_cw == res.dominant_ccw == i - 1


def test_chirality_odd_resonance_middle_state():
    c = ex.config_from_dict({"model": {"preset": "longhi3", "parameters": {"Omega": 1, "R0": 0.3}},
                             "omega_abs": 2 / 7, "cycles": 300, "initial": {"adiabatic_index": 2}})
    res = ex.run_chirality(c)
    assert not res.chiral
    assert res.dominant_cw == res.dominant_ccw == 1


def test_dominance_invariant_under_rescaling():
    base = cfg(cycles=60)
    frame_e = ex.frame_along(base.hamiltonian(1), [0.0, 1.0], "analytic_longhi3")[0].e
    v = 0.3 * frame_e[0] + 0.8j * frame_e[1]
    a = ex.run_chirality(cfg(cycles=60, initial={"vector": [[z.real, z.imag] for z in v]}))
    w = (2.5 - 1j) * v
    b = ex.run_chirality(cfg(cycles=60, initial={"vector": [[z.real, z.imag] for z in w]}))
    for k in ("cw", "ccw"):
        np.testing.assert_allclose(a.dominance_fractions[k], b.dominance_fractions[k], atol=1e-12)


def test_renormalisation_leaves_fractions_unchanged(monkeypatch):
    c = ex.config_from_dict({"model": {"preset": "longhi3", "parameters": {"Omega": 1, "R0": 0.3}},
                             "omega_abs": 2 / 7, "cycles": 200, "direction": "ccw",
                             "initial": {"vector": [[1, 0], [0.5, 0], [0.2, 0.1]]}})
    raw = ex.run_direction(c, -1)
    assert not np.any(raw.log_scale)
    monkeypatch.setattr(ex, "RENORM_LIMIT", 0.5)
    scaled = ex.run_direction(c, -1)
    assert np.any(scaled.log_scale != 0)
    np.testing.assert_allclose(scaled.fractions, raw.fractions, atol=1e-12)
    # stored populations times exp(2 log_scale) recover the raw ones
    np.testing.assert_allclose(scaled.populations * np.exp(2 * scaled.log_scale)[:, None], raw.populations, rtol=1e-9)


def test_full_record_rows():
    c = cfg(cycles=2, samples_per_cycle=8, outputs={"record": "full"})
    run = ex.run_direction(c, 1)
    assert len(run.times) == 2 * 8 + 1
    np.testing.assert_allclose(np.diff(run.times), run.times[1])


def test_sweep_examples():
    rows = ex.run_sweep(cfg(), [0.24, 0.25, 0.26], dominance=False)
    assert [r.ep_flag for r in rows] == [False, True, False]
    rows = ex.run_sweep(cfg(model={"preset": "longhi3", "parameters": {"R0": 0.3}}), [2 / 7], dominance=False)
    assert rows[0].ep_flag and rows[0].orders == [2] and rows[0].subsets == [(0, 2)]
    assert ex.run_sweep(cfg(), []) == []


def test_sweep_concurrent_equals_serial():
    grid = [0.24, 0.25, 0.26, 2 / 7]
    c = cfg(cycles=20)
    serial = ex.run_sweep(c, grid, workers=1)
    threaded = ex.run_sweep(c, grid, workers=4)
    assert [r.summary() for r in serial] == [r.summary() for r in threaded]
    assert [r.omega_abs for r in threaded] == grid


def test_sweep_records_row_errors():
    rows = ex.run_sweep(cfg(), [0.25, -1.0], dominance=False)
    assert rows[0].error is None
    assert rows[1].error is not None and "ConfigError" in rows[1].error


def test_emit_csv_shape(tmp_path):
    run = ex.run_direction(cfg(cycles=1), 1)
    paths = ex.emit(run, tmp_path, "x", ("csv",))
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "t,f1_sq,f2_sq,f3_sq,norm_scale"
    assert len(lines) == 3


def test_emit_chirality_json_keys(tmp_path):
    c = cfg(cycles=5)
    res = ex.run_chirality(c)
    paths = ex.emit(res, tmp_path, "c", ("csv", "json"), c)
    doc = json.loads((tmp_path / "c_summary.json").read_text())
    assert {"dominant_cw", "dominant_ccw", "chiral", "quasi_energies", "subsets", "version", "config"} <= set(doc)
    assert doc["subsets"] == [[1, 2, 3]]
    assert sorted(p.name for p in paths) == ["c_ccw.csv", "c_cw.csv", "c_summary.json"]


def test_emit_byte_identical(tmp_path):
    c = cfg(cycles=5)
    a = ex.emit(ex.run_chirality(c), tmp_path / "a", "r", ("csv", "json"), c)
    b = ex.emit(ex.run_chirality(c), tmp_path / "b", "r", ("csv", "json"), c)
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_csv_number_format():
    text = ex.trajectory_csv([0.1 + 0.2], [[1 / 3, 2.0]], [0.0])
    assert text.splitlines()[1] == "0.3,0.333333333333333,2,0"
