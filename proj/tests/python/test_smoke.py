# SPDX-License-Identifier: Apache-2.0
#
# beamsim: link-level beam management and CSI feedback simulator
# Licensed under the Apache License, Version 2.0; see
# http://www.apache.org/licenses/LICENSE-2.0 for the full text.
"""End-to-end smoke checks for the python bindings.

These do not re-test the numerics (the native test suite owns that); they
verify that the binding layer round-trips arrays and configuration, that the
main pipeline stages are callable from python, and that errors surface as
the expected exception types.
"""

import json
import math

import numpy as np
import pytest

import beamsim as bs


def tiny_scenario():
    sc = bs.ScenarioConfig()
    sc.tx_array = bs.ArrayGeometry(2, 2)
    sc.n_rx = 2
    sc.n_users = 6
    sc.n_slots = 4
    sc.n_subcarriers = 16
    sc.frame_slots = 64
    sc.n_clusters = 2
    sc.paths_per_cluster = 3
    return sc


def tiny_experiment():
    cfg = bs.ExperimentConfig()
    cfg.scenario = tiny_scenario()
    cfg.l_max = 4
    cfg.p_csi = 2
    cfg.l_csi = 2
    cfg.o_h = 2
    cfg.o_v = 2
    cfg.drops = 1
    cfg.user_min = 2
    cfg.user_max = 3
    cfg.grid_x = 2
    cfg.grid_y = 2
    cfg.csirs.nrb = 4
    cfg.csirs.zp_per_rb = 2
    cfg.seed = 77
    cfg.validate()
    return cfg


def test_version_and_config_round_trips():
    assert bs.__version__ == "0.1.0"

    sc = tiny_scenario()
    text = sc.to_json()
    parsed = json.loads(text)
    assert parsed["n_users"] == 6
    back = bs.ScenarioConfig.from_json(text)
    assert back.config_hash() == sc.config_hash()

    cfg = tiny_experiment()
    again = bs.ExperimentConfig.from_json(cfg.to_json())
    assert json.loads(again.to_json()) == json.loads(cfg.to_json())

    with pytest.raises(ValueError):
        bs.ScenarioConfig.from_json("this is not json")
    bad = tiny_experiment()
    bad.user_min = 9
    bad.user_max = 2
    with pytest.raises(ValueError):
        bad.validate()


def test_channel_generation_is_deterministic():
    sc = tiny_scenario()
    h = bs.generate_channels(sc)
    assert (h.n_users, h.n_slots, h.n_subcarriers) == (6, 4, 16)
    assert (h.n_rx, h.n_tx) == (2, 4)

    slab = h.at(0, 0, 0)
    assert slab.shape == (2, 4)
    assert slab.dtype == np.complex128

    twin = bs.generate_channels(sc)
    assert np.array_equal(h.at(3, 1, 5), twin.at(3, 1, 5))

    sc.rng_seed = 99
    other = bs.generate_channels(sc)
    assert not np.array_equal(h.at(0, 0, 0), other.at(0, 0, 0))

    assert bs.mean_entry_power(h, 0) > 0.0

    sub = h.select_users([1, 4])
    assert sub.n_users == 2
    assert np.array_equal(sub.at(0, 2, 3), h.at(1, 2, 3))


def test_codebook_constructions():
    geom = bs.ArrayGeometry(2, 2)
    fb = bs.feedback_codebook(geom, 2, 2)
    assert fb.kind == bs.CodebookKind.feedback
    assert fb.w.shape == (4, 16)
    norms = np.linalg.norm(fb.w, axis=0)
    assert np.allclose(norms, 2.0)

    d = bs.dft_matrix(4)
    assert np.allclose(d.conj().T @ d, np.eye(4), atol=1e-12)

    block = bs.orthogonal_subset(fb, 1, 0)
    gram = block.w.conj().T @ block.w
    assert np.allclose(gram, 4.0 * np.eye(4), atol=1e-12)

    flat = bs.global_column(fb, 1, 1, 2)
    assert bs.oversampling_of(fb, flat) == (1, 1)

    ssb = bs.random_dft_ssb(fb, 3, seed=9)
    assert ssb.w.shape == (4, 3)
    assert ssb.fb_cols.shape == (3,)

    assert bs.single_antenna(4).w.shape == (4, 1)

    a = bs.array_response(geom, 0.3, math.pi / 2)
    assert a.shape == (4,)
    assert np.isclose(np.linalg.norm(a), 1.0)


def test_quantize_and_reconstruct():
    geom = bs.ArrayGeometry(2, 2)
    fb = bs.feedback_codebook(geom, 2, 2)
    rng = np.random.default_rng(5)
    h = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))

    rep = bs.quantize_type2(h, fb, 2)
    assert rep.q.shape == (2, 2)
    assert np.allclose(rep.a[:, 0], 1.0)
    assert np.all(np.abs(rep.a) <= 1.0 + 1e-12)

    rows = bs.reconstruct_pmi(rep, fb)
    assert rows.shape == (2, 4)

    # Layout conversion: C-order and F-order inputs describe the same matrix.
    rep_f = bs.quantize_type2(np.asfortranarray(h), fb, 2)
    assert np.array_equal(rep.q, rep_f.q)
    assert np.array_equal(rep.a, rep_f.a)

    bits = bs.count_bits(fb, 2, 2, 1, 2)
    assert bits.total() == bits.combination + bits.oversampling + bits.amplitude + \
        bits.phase + bits.cri + bits.rank + bits.cqi
    assert bs.nchoosek(4, 2) == 6
    assert bs.ceil_log2(6) == 3

    with pytest.raises(ValueError):
        bs.quantize_type2(h[:, :3], fb, 2)


def test_downlink_precoding_and_scheduling():
    rng = np.random.default_rng(11)
    hhat = [rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4)) for _ in range(2)]

    pre = bs.rzf_precode(hhat, [1, 1], 0.1)
    assert pre[0].shape == (4, 1)
    power = sum(np.linalg.norm(f) ** 2 for f in pre)
    assert np.isclose(power, 4.0)

    sinr = bs.lmmse_sinr(hhat[0], pre, 0, 0.1)
    assert sinr.shape == (1,)
    assert sinr[0] > 0.0

    assert bs.sum_se_at(hhat, pre, 0.1) > 0.0

    sched = bs.schedule_users(hhat, 0.1)
    assert len(sched.ranks) == 2
    assert sched.objective > 0.0
    assert len(sched.precoders) == 2


def test_beam_training_pipeline():
    sc = tiny_scenario()
    h = bs.generate_channels(sc)
    geom = sc.tx_array
    fb = bs.feedback_codebook(geom, 2, 2)

    ssb = bs.random_dft_ssb(fb, 4, seed=11)
    reports = bs.ssb_round(h, ssb, sc, seed=3)
    assert len(reports) == 6
    assert reports[0].rsrp.shape == (4,)
    assert all(r.best_beam < 4 for r in reports)

    rsv = bs.rsv_codebook(h, 0, 4, 0, 16)
    assert rsv.w.shape == (4, 4)

    csirs = bs.decompose_ssb_to_csirs(ssb, fb, reports, 2)
    assert csirs.n_codewords() == 2

    rs = bs.CsiRsConfig()
    rs.nrb = 4
    rs.zp_per_rb = 2
    meas = bs.csirs_round(h, csirs, sc, rs, 0, seed=5)
    assert len(meas) == 6
    assert meas[0].eff_est[0].shape == (2, 2)
    assert meas[0].snr >= 0.0

    lift = bs.reconstruct_channel(meas[0].eff_est[0], csirs)
    assert lift.shape == (2, 4)

    baseline = bs.non_pmi_baseline(meas, csirs, 2)
    assert 1 <= len(baseline.users) <= 2

    bits = bs.count_bits(fb, 2, 2, 1, 2).total()
    bud = bs.budget(sc, 4, 2, rs, [bits] * 6)
    assert bud.frame_slots == 64
    assert bud.t_bm.shape == (bud.bm_symbols(),)

    rep = bs.quantize_type2(lift, fb, 2)
    rows = bs.reconstruct_pmi(rep, fb)
    pre = bs.rzf_precode([rows, rows], [1, 0], bs.noise_scale_of(sc))
    eff = bs.effective_sum_se(h, [0, 1], pre, bud, sc)
    assert eff >= 0.0
    assert math.isfinite(eff)

    pilots = bs.dft_matrix(4)[:, :2]
    x = np.array([[1.0 + 1j], [2.0 - 0.5j]])
    est = bs.estimate_ls(pilots @ x, pilots)
    assert np.allclose(est.value, x, atol=1e-12)
    assert est.residual_ms < 1e-20
    assert bs.ls_mse_law(2.0, 8, 4) == pytest.approx(0.25)


def test_beamspace_round_trip():
    geom = bs.ArrayGeometry(2, 2)
    grids = bs.beamspace_grids(geom, 2, 2)
    assert grids.ax.shape == (2, 2)

    fb = bs.feedback_codebook(geom, 2, 2)
    ssb = bs.random_dft_ssb(fb, 2, seed=21)
    cube = bs.beams_to_cube(ssb, geom, grids)
    assert cube.shape == (2, 2, 4)

    back = bs.cube_to_beams(cube, geom, grids, bs.CodebookKind.ssb)
    assert np.allclose(back.w, ssb.w, atol=1e-9)

    image = bs.to_beamspace(ssb.w[:, 0], geom, grids)
    f = bs.from_beamspace(image, geom, grids)
    assert np.allclose(f, ssb.w[:, 0], atol=1e-9)


def test_mlp_training_and_io(tmp_path):
    rng = np.random.default_rng(3)
    x = rng.standard_normal((64, 12))
    y = rng.standard_normal((16, 12))
    ts = bs.TrainingSet(x, y, l_max=2, n_x0=2, n_y0=2)
    assert ts.n_samples() == 12

    path = tmp_path / "set.bin"
    bs.save_training_set(str(path), ts)
    loaded = bs.load_training_set(str(path))
    assert np.array_equal(loaded.inputs, x)
    assert np.array_equal(loaded.targets, y)

    mc = bs.MlpConfig()
    mc.in_dim = 64
    mc.out_dim = 16
    mc.beams = 2
    mc.hidden = [24]
    mc.dropout = [0.0]
    mc.lr = 1e-2
    mc.epochs = 30
    mc.batch = 4
    mc.val_fraction = 0.25
    mc.patience = 100
    mc.seed = 5
    mc.validate()
    assert bs.MlpConfig.from_json(mc.to_json()).to_json() == mc.to_json()

    net = bs.Mlp(mc)
    before = net.evaluate(x, y)
    result = net.fit(ts)
    after = net.evaluate(x, y)
    assert after < before
    assert result.steps > 0
    assert result.train_loss.shape == result.val_loss.shape
    assert net.steps() == result.steps

    pred = net.predict(x)
    assert pred.shape == (16, 12)
    # float32 inputs are accepted; the cast truncates, so compare loosely.
    assert np.allclose(net.predict(x.astype(np.float32)), net.predict(x), atol=1e-4)

    loss, grad = bs.cosine_loss(pred, y, 2)
    assert math.isfinite(loss)
    assert grad.shape == pred.shape

    ckpt = tmp_path / "net.bin"
    net.save(str(ckpt))
    clone = bs.Mlp.load(str(ckpt))
    assert clone.steps() == net.steps()
    assert np.array_equal(clone.predict(x), pred)
    assert np.array_equal(clone.weight(0), net.weight(0))

    with pytest.raises(RuntimeError):
        bs.Mlp.load(str(tmp_path / "missing.bin"))
    bad = bs.MlpConfig.from_json(mc.to_json())
    bad.beams = 5
    with pytest.raises(ValueError):
        bad.validate()


def test_experiment_harness(tmp_path):
    cfg = tiny_experiment()
    cfg.output_dir = str(tmp_path)

    csv = tmp_path / "ssb.csv"
    res = bs.run_ssb_experiment(cfg, 2, csv_path=str(csv))
    assert res.kinds == ["no_bf", "dft", "rsv"]
    for kind in res.kinds:
        samples = res.samples_dbm[kind]
        assert samples.size >= 2
        assert np.all(np.isfinite(samples))
    assert csv.read_text().startswith("kind,percentile,rsrp_dbm")

    ts = bs.build_dataset(cfg, 4)
    assert ts.n_samples() == 4
    assert ts.inputs.shape[0] == 2 * cfg.l_max * (cfg.grid_x + 2) * (cfg.grid_y + 2)
    assert ts.targets.shape[0] == 2 * cfg.l_max * cfg.grid_x * cfg.grid_y

    mc = bs.default_mlp_config(ts, seed=9)
    assert mc.in_dim == ts.inputs.shape[0]
    assert mc.out_dim == ts.targets.shape[0]
    mc.hidden = [16]
    mc.dropout = [0.0]
    mc.epochs = 2
    mc.batch = 2

    ckpt = tmp_path / "model.ckpt"
    hist = tmp_path / "history.csv"
    net, history = bs.run_training(cfg, ts, mc, str(ckpt), str(hist))
    assert ckpt.exists()
    assert hist.read_text().startswith("epoch,step,lr,train_loss,val_loss")
    assert net.steps() == history.steps > 0

    points = bs.run_csirs_sweep(cfg, "l_csi", [1, 2], str(tmp_path / "sweep.csv"))
    assert [p.value for p in points] == [1, 2]
    assert all(math.isfinite(p.pmi) and p.pmi > 0 for p in points)
    assert points[0].bits_pmi < points[1].bits_pmi

    site = bs.run_site_transfer(cfg, 123, 0.5, net, net.steps(), 2, 4)
    assert site.agnostic_delta.shape == (2,)
    assert site.tuned_delta.shape == (2,)
    assert site.steps_used <= site.steps_budget

    assert bs.percentile(np.array([3.0, 1.0, 2.0]), 50) == 2.0
    assert float(bs.format_double(0.1)) == 0.1
    with pytest.raises(ValueError):
        bs.run_csirs_sweep(cfg, "bogus", [1, 2])
    with pytest.raises(RuntimeError):
        bs.format_double(float("nan"))
