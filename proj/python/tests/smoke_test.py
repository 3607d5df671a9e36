"""End-to-end smoke checks for the python module.

Kept intentionally light: module import, a tiny fit, generation with an exact
location-family ATE, the copula pair sampler, and a CLI round trip.
"""

import math
import os
import subprocess
import tempfile

import numpy as np

import _frugalflows as ffc


def test_simulate_and_estimate():
    sample = ffc.simulate_dgp("m1", ate=1.0, n=4000, seed=3)
    assert sample["z"].shape == (4000, 4)
    assert sample["true_ate"] == 1.0
    est = ffc.estimate_ates(sample["z"], sample["t"], sample["y"])
    assert est["dom"] > 1.2  # confounded difference of means
    assert abs(est["or"] - 1.0) < 0.3


def test_fit_generate_roundtrip():
    sample = ffc.simulate_dgp("m1", ate=1.0, n=2500, seed=5)
    fit = ffc.fit_frugal_flow(
        sample["z"], sample["t"], sample["y"], kinds=sample["kinds"],
        learning_rate=2e-2, max_epochs=120, patience=40, knots=6,
        flow_layers=2, hidden_width=12, hidden_depth=1, seed=5,
    )
    assert 0.2 < fit.estimated_ate < 1.8

    gen = fit.generate(n=3000, seed=9, rho=0.0, margin="gaussian", ate=1000.0,
                       sigma=1.0, propensity="randomized", randomized_p=0.5)
    t, y = gen["t"], gen["y"]
    dom = y[t == 1].mean() - y[t == 0].mean()
    se = math.sqrt(y[t == 1].var() / (t == 1).sum() + y[t == 0].var() / (t == 0).sum())
    assert abs(dom - 1000.0) < 4 * se

    ranks = fit.causal_margin_ranks(sample["y"], sample["t"])
    assert ffc.ks_uniform(ranks) < 0.15

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "model.ffm")
        fit.save(path)
        again = ffc.FrugalFit.load(path)
        assert again.estimated_ate == fit.estimated_ate


def test_copula_pair_and_conversion():
    u1, u2 = ffc.gaussian_copula_pair(0.5, 50000, seed=11)
    assert ffc.ks_uniform(u1) < 0.01
    r = np.corrcoef(u1, u2)[0, 1]
    assert 0.4 < r < 0.55
    assert abs(ffc.spearman_to_pearson(0.5) - 0.51764) < 1e-4


def test_validation_errors_surface_as_python_exceptions():
    try:
        ffc.gaussian_copula_pair(1.5, 10, seed=1)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for |rho| >= 1")


def test_cli_available():
    cli = os.environ.get("FRUGALFLOWS_CLI")
    if not cli:
        return
    with tempfile.TemporaryDirectory() as tmp:
        cfg = os.path.join(tmp, "dgp.cfg")
        with open(cfg, "w") as f:
            f.write("[dgp]\nname = m2\nate = 1\nn = 500\nseed = 2\n")
        out = os.path.join(tmp, "data.csv")
        res = subprocess.run([cli, "simulate-dgp", "--config", cfg, "--out", out],
                             capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        assert "true_ate 1" in res.stdout
        assert os.path.exists(out)


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} smoke tests passed")


if __name__ == "__main__":
    main()
