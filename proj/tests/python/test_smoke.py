import math
import os
from pathlib import Path

import numpy as np
import pytest

import isac_lab

CONFIGS = Path(os.environ.get("ISAC_CONFIG_DIR", Path(__file__).resolve().parents[2] / "configs"))


def test_version():
    code, out, _ = isac_lab.run_cli(["version"])
    assert code == 0
    assert out.strip() == f"isac-lab {isac_lab.__version__}"


def test_monostatic_geometry():
    pg = isac_lab.path_geometry([1000.0, 0.0], [1000.0, 0.0], True, [300.0, 200.0], 3e8)
    r = math.hypot(700.0, 200.0)
    assert pg.range_t == pytest.approx(r, rel=1e-14)
    assert pg.g == pytest.approx([-1400.0 / r, 400.0 / r], rel=1e-14)
    assert pg.tau == pytest.approx(2 * r / 3e8, rel=1e-14)


def test_schedule_and_bandwidth():
    s = isac_lab.make_schedule("linear", pulses=4, f0=28e9, span=2e9, centered=True)
    assert s["carrier_offset"] == pytest.approx(28e9)
    assert s["carriers"] == pytest.approx([-1e9, -1e9 / 3, 1e9 / 3, 1e9])
    assert isac_lab.flat_comb_beta(1024, 1.62e3) == pytest.approx(478.9e3, rel=1e-4)
    f = np.linspace(-24e6, 24e6, 20001)
    assert isac_lab.effective_bandwidth(f, np.ones_like(f)) == pytest.approx(48e6 / math.sqrt(12), rel=1e-4)
    assert isac_lab.sigma_from_snr(20.0) == pytest.approx(0.01)


def test_bound_and_fim_check():
    cfg = isac_lab.Config.from_file(str(CONFIGS / "nominal.cfg"))
    b = isac_lab.bound(cfg)
    assert b["cov"].shape == (4, 4)
    assert np.allclose(b["cov"], b["cov"].T, rtol=1e-12, atol=0)
    assert b["pos_trace"] == pytest.approx(np.trace(b["cov"][:2, :2]))
    mono3 = isac_lab.bound(cfg, "monostatic3")
    assert b["pos_trace"] < mono3["pos_trace"]

    desk = isac_lab.Config.from_file(str(CONFIGS / "desk.cfg"))
    assert isac_lab.fim_check(desk) < 1e-3


def test_config_errors():
    with pytest.raises(isac_lab.ConfigError, match="schedule.nope"):
        isac_lab.Config.from_text("schedule.nope = 1\n")
    code, _, err = isac_lab.run_cli(["heatmap", "--config", "/missing/file.cfg"])
    assert code == 1
    assert "/missing/file.cfg" in err


def test_config_dump_round_trip():
    cfg = isac_lab.Config.from_file(str(CONFIGS / "mc_scaled.cfg"))
    again = isac_lab.Config.from_text(cfg.dump())
    assert again.dump() == cfg.dump()
    assert cfg.trials == 200
    assert cfg.snr_db == [-10.0, 0.0, 25.0, 30.0]
