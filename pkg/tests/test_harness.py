import math

import numpy as np
import pytest

from vesubdiff.errors import ConfigError
from vesubdiff.harness import (ExperimentConfig, FinalState, RateTable, rate, run_final,
                               run_invariant_suite, run_sweep, two_mesh_spatial_error,
                               two_mesh_temporal_error)
from vesubdiff.mesh import build_graded_mesh
from vesubdiff.space import SpatialGrid


def test_minimal_config_defaults():
    cfg = ExperimentConfig(example=1, alpha0=0.5)
    assert cfg.ladder() == [64, 128, 256, 512]
    assert cfg.run_resolutions() == [32, 64, 128, 256, 512]
    assert cfg.fixed_resolution == 32
    assert cfg.grading == 3.0
    assert cfg.dim == 1
    space = ExperimentConfig(example=2, alpha0=0.3, alphaT=0.7, axis="space")
    assert space.ladder() == [32, 64, 128, 256]
    assert space.fixed_resolution == 128
    assert space.dim == 2
    assert space.file_stem() == "example2_space_0.3_0.7"


@pytest.mark.parametrize("kwargs,key", [
    (dict(example=4, alpha0=0.5), "example"),
    (dict(example=1, alpha0=1.0), "alpha0"),
    (dict(example=2, alpha0=0.5), "alphaT"),
    (dict(example=1, alpha0=0.5, axis="diag"), "axis"),
    (dict(example=1, alpha0=0.5, levels=1), "levels"),
    (dict(example=1, alpha0=0.5, r=0.5), "r"),
    (dict(example=1, alpha0=0.5, N=33), "N"),
    (dict(example=1, alpha0=0.5, J=0), "J"),
    (dict(example=1, alpha0=0.5, d=3), "d"),
    (dict(example=3, alpha0=0.5, mu=1.0), "mu"),
    (dict(example=3, alpha0=0.5, w2=2.0), "w2"),
])
def test_config_errors_name_key(kwargs, key):
    with pytest.raises(ConfigError) as exc:
        ExperimentConfig(**kwargs)
    assert exc.value.key == key


def test_exponent_leaving_unit_interval_rejected():
    with pytest.raises(ValueError):
        ExperimentConfig(example=1, alpha0=0.9)


def _state(d, J, N, values, r=1.0):
    return FinalState(SpatialGrid(d, J), build_graded_mesh(N, 1.0, r), np.asarray(values, float))


def test_temporal_error_single_node():
    err = two_mesh_temporal_error(_state(1, 2, 4, [0.3]), _state(1, 2, 8, [0.4]))
    assert err == pytest.approx(math.sqrt(0.5) * 0.1, rel=1e-14)


def test_temporal_error_mismatches():
    with pytest.raises(ConfigError):
        two_mesh_temporal_error(_state(1, 2, 4, [0.0]), _state(1, 4, 8, [0.0] * 3))
    with pytest.raises(ConfigError):
        two_mesh_temporal_error(_state(1, 2, 4, [0.0]), _state(1, 2, 12, [0.0]))
    with pytest.raises(ConfigError):
        two_mesh_temporal_error(_state(1, 2, 4, [0.0]), _state(1, 2, 8, [0.0], r=2.0))


def test_spatial_error_samples_coarse_nodes():
    grid_f = SpatialGrid(2, 4)
    fine_vals = np.zeros(grid_f.m)
    coarse = _state(2, 2, 8, [1.0])
    # fine node (0.5, 0.5) coincides with the coarse node
    idx = int(np.flatnonzero((grid_f.nodes == 0.5).all(axis=1))[0])
    fine_vals[idx] = 0.75
    fine_vals[0] = 100.0  # not a coarse node, must be ignored
    err = two_mesh_spatial_error(coarse, _state(2, 4, 8, fine_vals))
    assert err == pytest.approx(0.5 * 0.25, rel=1e-14)
    with pytest.raises(ConfigError):
        two_mesh_spatial_error(coarse, _state(2, 4, 16, fine_vals))


def test_rate_and_table_formatting():
    assert rate(4.0, 1.0) == 2.0
    t = RateTable.from_errors("time", [32, 64], [3.2820e-5, 9.5333e-6], title="demo")
    assert t.rates[0] is None
    assert t.rates[1] == pytest.approx(math.log2(3.2820e-5 / 9.5333e-6))
    md = t.to_markdown()
    assert "3.2820 × 10⁻⁵" in md and "| 64 | 9.5333 × 10⁻⁶ | 1.78 |" in md
    assert "| 32 | 3.2820 × 10⁻⁵ | * |" in md
    lines = t.to_csv().splitlines()
    assert lines[0] == "resolution,error,rate"
    res, err, r = lines[1].split(",")
    assert res == "32" and r == "" and float(err) == 3.2820e-5  # round-trip exact
    assert len(err.split("e")[0].replace(".", "")) == 17
    assert float(lines[2].split(",")[2]) == t.rates[1]
    with pytest.raises(ValueError):
        RateTable.from_errors("time", [1], [0.0])


def test_short_temporal_sweep_row_values():
    # runs at N = 64 and 128; the 128 row holds their two-mesh difference
    table = run_sweep(ExperimentConfig(example=1, alpha0=0.5, N=128, levels=2))
    assert table.rows[0].resolution == 128
    assert table.errors[0] == pytest.approx(9.4374e-6, rel=1e-4)
    assert table.rows[1].resolution == 256
    assert table.errors[1] == pytest.approx(3.1504e-6, rel=1e-4)
    assert round(table.rates[1], 2) == 1.58


def test_parallel_sweep_is_identical():
    cfg = ExperimentConfig(example=2, alpha0=0.4, alphaT=0.8, axis="space", J=8, N=16, levels=2)
    assert run_sweep(cfg, jobs=2).to_csv() == run_sweep(cfg, jobs=1).to_csv()


def test_run_final_shapes():
    st = run_final(ExperimentConfig(example=2, alpha0=0.6, alphaT=0.4), 8, 4)
    assert st.final.shape == (9,)
    assert st.mesh.N == 8


def test_invariant_suite_passes():
    report = run_invariant_suite()
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    assert report["passed"], failed
    names = {c["name"] for c in report["checks"]}
    assert "complementary_kernel_orthogonality" in names
    assert any(n.startswith("telescoping") for n in names)
