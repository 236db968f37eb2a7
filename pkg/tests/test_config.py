import pytest

from coaltangent.config import load_config, parse_pairs, read_pairs
from coaltangent.errors import DomainError


def test_file_and_cli_precedence(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# comment\nseed = 11\nalpha = 1.7  # trailing\nepsilons = 0.1, 0.01\n"
                 "kingman_z.samples = 50\nrates.alphas = 1.2,1.4\n")
    cfg = load_config(str(p), seed=12, out=str(tmp_path / "o"))
    assert cfg.seed == 12 and cfg.alpha == 1.7
    assert cfg.epsilons == (0.1, 0.01)
    assert cfg.overrides == {"kingman_z.samples": 50, "rates.alphas": (1.2, 1.4)}
    assert isinstance(cfg.overrides["kingman_z.samples"], int)


def test_seed_required():
    with pytest.raises(DomainError):
        parse_pairs([("alpha", "1.5")])


@pytest.mark.parametrize("pairs", [
    [("seed", "1"), ("alpah", "1.5")],
    [("seed", "1"), ("rates.nope", "3")],
    [("seed", "1"), ("nosuite.n", "3")],
    [("seed", "x")],
    [("seed", "1"), ("alpha", "2.5")],
    [("seed", "1"), ("rs", "0.5, 1.0")],
    [("seed", "1"), ("threads", "0")],
    [("seed", "-1")],
])
def test_bad_configs(pairs):
    with pytest.raises(DomainError):
        parse_pairs(pairs)


def test_malformed_line(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("seed 3\n")
    with pytest.raises(DomainError):
        read_pairs(str(p))


def test_hex_seed_and_kingman():
    cfg = parse_pairs([("seed", "0xff"), ("model", "kingman")])
    assert cfg.seed == 255 and cfg.model == "kingman"
