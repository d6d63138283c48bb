import json
import math

import numpy as np
import pytest

import annulus_sb as sb

BENCH = sb.Annulus(5, 2.0, 3.0, 1.0)
QUARTIC = sb.Nonlinearity.power(4)


def test_version():
    assert sb.__version__ == "0.1.0"
    assert dict(sb.version_info())["annulus_sb"] == sb.__version__


def test_grid_volume():
    g = sb.Grid(BENCH, 32, 32)
    assert g.weights.shape == g.shape
    assert g.integrate(np.ones(g.shape)) == pytest.approx(BENCH.volume, rel=1e-10)
    # ω_4 (R1^5 - R0^5) / 5 with ω_4 = 8π²/3
    assert BENCH.volume == pytest.approx(8 * math.pi**2 / 3 * (3**5 - 2**5) / 5, rel=1e-12)


def test_radial_and_stability():
    p = sb.solve_radial(BENCH, QUARTIC)
    assert p["u"][0] == pytest.approx(0.0, abs=1e-10)
    assert p["u"].min() >= 0.0
    s = sb.stability(BENCH, QUARTIC)
    assert s["verdict"] == "Breaking"
    assert s["D"] < 0
    assert s["delta_required"] == pytest.approx(2.6)


def test_cone_and_orlicz():
    g = sb.Grid(BENCH, 32, 16)
    u = sb.random_cone_field(g, 3)
    assert sb.in_cone(g, u)
    assert not sb.in_cone(g, -u - 1.0)
    p = sb.project_cone(g, np.random.default_rng(0).normal(size=g.shape))
    assert np.allclose(sb.project_cone(g, p), p, atol=1e-12)
    n = sb.luxemburg_norm(g, u)
    assert sb.luxemburg_norm(g, 3 * u) == pytest.approx(3 * n, rel=1e-8)
    t = sb.tm_probe(g, 0.2, samples=10, seed=5)
    assert t["saturated_count"] == 0
    assert len(t["values"]) == 10


def test_mountain_pass():
    g = sb.Grid(BENCH, 64, 32)
    r = sb.mountain_pass(g, QUARTIC)
    assert r["converged"]
    assert not r["is_radial"]
    assert 0 < r["energy"] < r["radial_energy"]
    assert r["energy"] == pytest.approx(sb.energy(g, QUARTIC, r["u"]), rel=1e-12)


def test_errors(tmp_path):
    with pytest.raises(ValueError):
        sb.Annulus(5, 3.0, 2.0)
    with pytest.raises(sb.SolverError):
        sb.solve_radial(BENCH, sb.Nonlinearity.linear(0.0))
    with pytest.raises(sb.ConfigError):
        sb.run("radial", "[annulus\n", str(tmp_path))


def test_run(tmp_path):
    cfg = "[annulus]\nN = 5\nR0 = 2\nR1 = 3\nlambda = 1\n[nonlinearity]\np = 4\n"
    r = sb.run("radial", cfg, str(tmp_path / "a"))
    assert r["exit_code"] == 0
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["command"] == "radial"
    assert sb.run("radial", cfg + "[grid]\nnr = 2\n", str(tmp_path / "b"))["exit_code"] == 2
