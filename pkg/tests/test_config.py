from fractions import Fraction

import pytest

from subheat import config
from subheat.errors import ConfigError

BASIC = """
[subordinator]
name = relativistic
alpha = 1/2

[run]
n = 3
K = 4
normalization = paper
formats = json, txt

[zeta]
z = 0, -1, 0.5+1j

[verify]
t_min = 1e-3
t_max = 1e-1
t_count = 8

[simulate]
suites = laplace, arcsine
paths = 2000
lambdas = 1, 2
"""


def test_parse_full():
    cfg = config.parse(BASIC)
    assert cfg.subordinator.alpha == Fraction(1, 2)
    assert (cfg.n, cfg.K, cfg.normalization) == (3, 4, "paper")
    assert cfg.formats == ("json", "txt")
    assert cfg.z_points == (0, -1, 0.5 + 1j)
    assert len(cfg.t_grid) == 8 and cfg.t_grid[0] == pytest.approx(1e-3)
    assert cfg.suites == ("laplace", "arcsine") and cfg.paths == 2000 and cfg.lambdas == (1.0, 2.0)
    spec = cfg.subordinator.build()
    assert spec.catalog_id == "relativistic"


def test_overrides():
    cfg = config.parse(BASIC).with_overrides(normalization="direct", seed=None)
    assert cfg.normalization == "direct" and cfg.seed == 0


def test_custom_density():
    cfg = config.parse("[subordinator]\nname = custom\nalpha = 1/3\ndensity = truncated-stable\np = 1.0, 0, 0\n")
    spec = cfg.subordinator.build()
    assert spec.alpha == Fraction(1, 3) and spec.p == (1.0, 0.0, 0.0)
    assert float(spec.density(0.5)) == pytest.approx(0.5 ** (-4 / 3))


@pytest.mark.parametrize("text", [
    "",
    "[run]\nn = 2\n",
    "[subordinator]\nname = nope\n",
    "[subordinator]\nname = relativistic\nalpha = 1/2\n[run]\nnormalization = other\n",
    "[subordinator]\nname = relativistic\nalpha = 1/2\n[run]\nformats = pdf\n",
    "[subordinator]\nname = relativistic\nalpha = 1/2\n[simulate]\nsuites = plot\n",
    "[subordinator]\nname = relativistic\nalpha = 1/2\n[zeta]\nz = x\n",
    "[subordinator]\nname = custom\nalpha = 1/2\n",
    "not an ini",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        config.parse(text).subordinator.build()


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "absent.ini")
