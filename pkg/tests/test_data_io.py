import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from dppcell.data_io import (
    PRESETS,
    DataError,
    Dataset,
    estimate_intensity,
    load_config,
    load_pattern,
    model_from_config,
    preset,
    save_pattern,
)
from dppcell.kernels import Family
from dppcell.simulation import PointPattern, SimConfig, Window, sample_dpp


def write(path, text):
    path.write_text(text)
    return path


def test_toy_file_with_explicit_window(tmp_path):
    f = write(tmp_path / "toy.csv", "x_km,y_km\n1,1\n2.5,3\n9,9.5\n")
    ds = load_pattern(f, window=(10, 10))
    assert len(ds.pattern) == 3
    assert ds.warnings == [] and ds.name == "toy"
    assert_allclose(estimate_intensity(ds), 0.03)


def test_out_of_window_point_is_dropped_with_warning(tmp_path):
    f = write(tmp_path / "p.csv", "x_km,y_km\n1,1\n2,2\n11,3\n")
    ds = load_pattern(f, window=(10, 10))
    assert len(ds.pattern) == 2
    assert len(ds.warnings) == 1


def test_duplicates_removed_and_counted(tmp_path):
    f = write(tmp_path / "d.csv", "x_km,y_km\n1,1\n1,1\n2,2\n")
    ds = load_pattern(f, window=(5, 5))
    assert len(ds.pattern) == 2 and ds.duplicates_removed == 1


def test_bounding_box_window_and_custom_columns(tmp_path):
    f = write(tmp_path / "c.csv", "id,east,north\na,0.5,1\nb,3.5,2\n")
    ds = load_pattern(f, x_col="east", y_col="north")
    assert ds.pattern.window.as_list() == [0.5, 3.5, 1.0, 2.0]


@pytest.mark.parametrize("text", ["x_km,y_km\n1,abc\n", "a,b\n1,2\n", "x_km,y_km\n", ""])
def test_bad_files(tmp_path, text):
    f = write(tmp_path / "bad.csv", text)
    with pytest.raises(DataError):
        load_pattern(f, window=(10, 10))


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_pattern(tmp_path / "nope.csv")


def test_empty_after_filtering(tmp_path):
    f = write(tmp_path / "e.csv", "x_km,y_km\n20,20\n")
    with pytest.raises(DataError):
        load_pattern(f, window=(10, 10))


def test_intensity_of_reference_deployments():
    rng = np.random.default_rng(0)
    for n, side, lam in ((115, 16.0, 0.4492), (184, 28.0, 0.2347)):
        pat = PointPattern(rng.uniform(0, side, (n, 2)), Window.square(side))
        assert abs(estimate_intensity(pat) - lam) < 5e-5


def test_save_load_round_trip(tmp_path):
    pat = sample_dpp(SimConfig(preset("houston-gauss"), Window.square(16.0), rng_seed=4))
    save_pattern(pat, tmp_path / "p.csv")
    back = load_pattern(tmp_path / "p.csv", window=pat.window)
    assert_allclose(back.pattern.points, pat.points, rtol=0, atol=0)
    save_pattern(back, tmp_path / "q.csv")
    assert (tmp_path / "p.csv").read_bytes() == (tmp_path / "q.csv").read_bytes()


def test_presets_exact_parameters():
    m = preset("houston-gauss")
    assert (m.family, m.lam, m.alpha, m.nu) == (Family.GAUSS, 0.4492, 0.8417, None)
    m = preset("la-gengamma")
    assert (m.family, m.lam, m.alpha, m.nu) == (Family.GENGAMMA, 0.2347, 3.446, 2.505)
    m = preset("houston-cauchy")
    assert (m.family, m.lam, m.alpha, m.nu) == (Family.CAUCHY, 0.4492, 1.558, 3.424)
    assert all(preset(n).existence.ok for n in PRESETS)
    with pytest.raises(KeyError):
        preset("paris-gauss")


def test_model_configs(tmp_path):
    j = tmp_path / "m.json"
    j.write_text(json.dumps({"model": {"family": "cauchy", "lambda": 0.2347, "alpha": 2.13, "nu": 3.344}}))
    t = tmp_path / "m.toml"
    t.write_text('family = "gauss"\nlambda = 0.4492\nalpha = 0.8417\n')
    assert model_from_config(j) == preset("la-cauchy")
    assert model_from_config(t) == preset("houston-gauss")
    assert model_from_config({"preset": "la-gauss"}) == preset("la-gauss")
    with pytest.raises(DataError):
        model_from_config({"alpha": 1.0})
    bad = tmp_path / "bad.toml"
    bad.write_text("family = \n")
    with pytest.raises(DataError):
        load_config(bad)


def test_dataset_requires_points():
    with pytest.raises(DataError):
        Dataset(PointPattern(np.empty((0, 2)), Window.square(1.0)))
