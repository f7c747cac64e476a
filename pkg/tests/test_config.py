import pytest

from localrace.config import (
    CONTROLLER_KEYS,
    apply_overrides,
    format_pairs,
    load_controller_config,
    load_ftg_config,
    parse_grid,
    parse_pairs,
    read_grid,
    read_pairs,
)
from localrace.errors import ConfigParseError, UnknownKey


def test_base_preset_values():
    gains, limits = load_controller_config("base")
    assert (gains.k_ang, gains.k_dist, gains.k_soft, gains.k_damp, gains.k_rate, gains.L_max) == (
        0.6,
        0.5,
        5.0,
        1.0,
        -0.013,
        0.2,
    )
    assert (limits.v_min, limits.v_max) == (2.0, 4.0)


def test_optimal_preset_values():
    gains, limits = load_controller_config("optimal")
    assert (gains.k_ang, gains.k_dist, gains.k_soft, gains.k_damp, gains.k_rate, gains.L_max) == (
        0.30,
        0.5,
        10.0,
        10.0,
        0.005,
        0.85,
    )
    assert (limits.v_min, limits.v_max) == (2.75, 10.0)


def test_ftg_preset():
    params = load_ftg_config("ftg")
    assert params.min_gap_width == 10 and isinstance(params.min_gap_width, int)


def test_presets_have_exact_keys():
    assert tuple(read_pairs("base")) == CONTROLLER_KEYS or set(read_pairs("base")) == set(CONTROLLER_KEYS)
    assert set(read_pairs("optimal")) == set(CONTROLLER_KEYS)


def test_parse_comments_and_blanks():
    assert parse_pairs("# head\n\na = 1  # trailing\n b=2.5\n") == {"a": 1.0, "b": 2.5}


@pytest.mark.parametrize("text", ["a 1", "a = x", "a = 1\na = 2", "= 3", "a ="])
def test_parse_errors(text):
    with pytest.raises(ConfigParseError):
        parse_pairs(text)


def test_missing_and_extra_keys(tmp_path):
    values = read_pairs("base")
    del values["k_ang"]
    p = tmp_path / "c.cfg"
    p.write_text(format_pairs(values), encoding="utf-8")
    with pytest.raises(ConfigParseError):
        load_controller_config(p)
    values["k_ang"] = 0.6
    values["extra"] = 1.0
    p.write_text(format_pairs(values), encoding="utf-8")
    with pytest.raises(ConfigParseError):
        load_controller_config(p)


def test_invalid_values_rejected(tmp_path):
    values = apply_overrides(read_pairs("base"), {"v_min": 5.0})
    p = tmp_path / "c.cfg"
    p.write_text(format_pairs(values), encoding="utf-8")
    with pytest.raises(ConfigParseError):
        load_controller_config(p)


def test_fractional_gap_width_rejected(tmp_path):
    values = apply_overrides(read_pairs("ftg"), {"min_gap_width": 2.5})
    p = tmp_path / "f.cfg"
    p.write_text(format_pairs(values), encoding="utf-8")
    with pytest.raises(ConfigParseError):
        load_ftg_config(p)


def test_format_round_trip():
    values = read_pairs("optimal")
    assert parse_pairs(format_pairs(values)) == values


def test_overrides():
    base = read_pairs("base")
    merged = apply_overrides(base, {"L_max": 0.4})
    assert merged["L_max"] == 0.4 and base["L_max"] == 0.2
    with pytest.raises(UnknownKey):
        apply_overrides(base, {"k_bogus": 1.0})


def test_grid_parsing():
    rows = parse_grid("-\nL_max=0.4\nL_max=0.6 v_max=5  # c\n\n")
    assert rows == [{}, {"L_max": 0.4}, {"L_max": 0.6, "v_max": 5.0}]
    with pytest.raises(ConfigParseError):
        parse_grid("L_max")
    with pytest.raises(ConfigParseError):
        parse_grid("L_max=abc")


def test_tuning_arc_reaches_optimal():
    rows = read_grid("tuning_arc")
    assert len(rows) == 6 and rows[0] == {}
    assert apply_overrides(read_pairs("base"), rows[-1]) == read_pairs("optimal")
    for prev, cur in zip(rows, rows[1:]):
        assert set(prev.items()) <= set(cur.items())
