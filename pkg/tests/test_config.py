import numpy as np
import pytest

from toric_hcsck.config import RunConfig, config_from_dict, load_config
from toric_hcsck.errors import ConfigError


def write(tmp_path, text):
    p = tmp_path / "run.toml"
    p.write_text(text)
    return p


def test_defaults_validate():
    cfg = RunConfig().validate()
    P = cfg.build_polytope()
    assert P.dim == 1
    np.testing.assert_allclose(cfg.build_affine(P), [2.0, 0.0], atol=1e-12)


def test_full_file(tmp_path):
    cfg = load_config(write(tmp_path, """
seed = 3
threads = 2
[polytope]
preset = "square"
[deformation]
kind = "polynomial"
[[deformation.terms]]
exponent = [2, 0]
re = 0.05
[[deformation.terms]]
exponent = [1, 1]
im = 0.02
[spectral]
name = "hyperkahler"
[solver]
degree = 6
t_schedule = [0.0, 0.5, 1.0]
[stability]
n_probes = 100
[siegel]
n = 3
trials = 20
"""))
    cfg.validate()
    assert (cfg.seed, cfg.threads, cfg.degree, cfg.n_probes, cfg.siegel_n, cfg.siegel_trials) == (3, 2, 6, 100, 3, 20)
    H = cfg.build_deformation(2)
    np.testing.assert_allclose(H.at([[0.3, 0.4]])[0], [[0.1, 0.02j], [0.02j, 0.0]])


def test_facet_polytope_and_explicit_affine():
    cfg = config_from_dict({
        "polytope": {"facets": [{"normal": [1, 0], "offset": 0}, {"normal": [0, 1], "offset": 0}, {"normal": [-1, -1], "offset": -1}]},
        "affine": {"mode": "explicit", "coeffs": [6, 0, 0]},
        "deformation": {"kind": "constant", "matrix_re": [[0.1, 0], [0, 0.1]]},
    }).validate()
    assert cfg.build_polytope().volume == pytest.approx(0.5)


def test_polynomial_spectral():
    k = config_from_dict({"spectral": {"name": "polynomial", "coeffs": [0, 1, 1]}}).build_spectral()
    assert float(k.dk(1.0)) == pytest.approx(3.0)


@pytest.mark.parametrize(
    "data",
    [
        {"bogus": 1},
        {"solver": {"degre": 4}},
        {"siegel": {"m": 2}},
        {"solver": {"degree": 1}},
        {"solver": {"degree": 6, "quad_order": 8}},
        {"threads": 0},
        {"solver": {"t_schedule": [0.0, 1.5]}},
        {"polytope": {"preset": "hexagon"}},
        {"polytope": {"facets": [{"normal": [2, 0], "offset": 0}, {"normal": [0, 1], "offset": 0}, {"normal": [-1, -1], "offset": -1}]}},
        {"spectral": {"name": "cubic"}},
        {"deformation": {"kind": "wavy"}},
        {"affine": {"mode": "explicit", "coeffs": [1.0]}},
        {"polytope": "square"},
    ],
)
def test_bad_configs(data):
    with pytest.raises(ConfigError):
        config_from_dict(data).validate()


def test_invalid_toml(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, "seed = = 1"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


def test_scalar_constant_means_multiple_of_identity():
    H = config_from_dict({"polytope": {"preset": "square"}, "deformation": {"kind": "constant", "re": 0.2, "im": 0.1}}).build_deformation(2)
    np.testing.assert_allclose(H.at([[0.5, 0.5]])[0], (0.2 + 0.1j) * np.eye(2))
