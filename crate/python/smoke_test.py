"""Smoke test for the esn_dr extension module.

Build and copy the module next to this script first:

    cargo build -p esn-dr-python
    cp target/debug/libesn_dr_py.so python/esn_dr.so
"""

import json
import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import esn_dr  # noqa: E402


def check_signals():
    x = esn_dr.mackey_glass(3000, subsample=10)
    assert len(x) == 3000
    assert esn_dr.autocorr_first_zero(x) > 0
    u, y = esn_dr.narma(500, order=10, seed=1)
    assert len(u) == len(y) == 500
    traj = np.array(esn_dr.lorenz(2000))
    assert traj.shape == (2000, 3)
    emb = esn_dr.delay_embed(list(range(10)), 3, 2)
    assert len(emb) == 10 - 2 * 2
    assert emb[0] == [0.0, 2.0, 4.0]


def check_nrmse():
    y = list(np.sin(np.linspace(0, 20, 200)))
    assert esn_dr.nrmse(y, y) == 0.0
    mean = [float(np.mean(y))] * len(y)
    assert abs(esn_dr.nrmse(mean, y) - 1.0) < 1e-12


def check_pca():
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(200, 5)) @ rng.normal(size=(5, 5))
    pca = esn_dr.Pca(rows.tolist(), 3)
    comps = np.array(pca.components)
    assert np.allclose(comps @ comps.T, np.eye(3), atol=1e-8)
    proj = np.array(pca.project(rows.tolist()))
    assert proj.shape == (200, 3)
    kpca = esn_dr.KernelPca(rows[:100].tolist(), 4, 0.1)
    ins = np.array(kpca.in_sample_projection())
    oos = np.array(kpca.project(rows[:100].tolist()))
    assert np.allclose(ins, oos, atol=1e-8)


def check_pipeline():
    x = esn_dr.mackey_glass(2500, subsample=10)
    inputs, targets = x[:-1], x[1:]
    theta = esn_dr.Hyperparameters(n_reservoir=80.0, ridge_lambda=1e-6, dim_fraction=0.5)
    assert theta.n_reservoir == 80.0
    net = esn_dr.Pipeline.fit(theta, "ridge/pca", inputs[:2000], targets[:2000], seed=3)
    assert net.projected_dim == 40
    pred = net.predict(inputs[2000:2100])
    err = esn_dr.nrmse(pred, targets[2000:2100])
    assert math.isfinite(err) and err < 1.0, err
    try:
        esn_dr.Pipeline.fit(theta, "lasso/pca", inputs, targets)
    except esn_dr.EsnDrError as e:
        assert "Config" in str(e)
    else:
        raise AssertionError("bad pipeline kind accepted")


def check_invariants():
    traj = esn_dr.lorenz(5000)
    m = json.loads(esn_dr.measure_invariants([list(p) for p in traj], 0.01))
    assert 1.5 < m["d2"]["d2"] < 2.5, m
    assert m["lle"] > 0.0, m


def check_experiment():
    cfg = """
version = 1
readout = "ridge"
dimred = "none"
ensemble = 2

[task]
kind = "narma"
length = 1500
discard = 0
subsample = 1

[theta]
n_reservoir = 50.0
noise = 0.0
input_scaling = 0.5
teacher_scaling = 0.5
feedback_scaling = 0.0
spectral_radius = 0.9
dim_fraction = 1.0
kernel_gamma = 0.1
ridge_lambda = 1e-6
svr_c = 1.0
svr_nu = 0.5
"""
    rec = json.loads(esn_dr.run_experiment(cfg))
    assert len(rec["test_errors"]) == 2
    assert rec["test_nrmse_mean"] > 0.0


if __name__ == "__main__":
    for check in [check_signals, check_nrmse, check_pca, check_pipeline, check_invariants, check_experiment]:
        check()
        print(f"ok {check.__name__}")
    print("smoke test passed")
