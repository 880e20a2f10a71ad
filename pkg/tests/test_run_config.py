import pytest

from wedgeflow.errors import ConfigError
from wedgeflow.services.run_config import load_config, parse_config, parse_sections, serialize_config


def test_defaults_fill_unset_keys(straight_cfg):
    assert straight_cfg.tracking.seed == 0
    assert straight_cfg.tracking.mu == pytest.approx(1e-4)
    assert straight_cfg.tracking.delta == 0.01
    assert straight_cfg.inflow.mode == "steps"
    assert straight_cfg.vertices == ((0.0, 0.0),)
    assert straight_cfg.functionals.k_minus == 4.0


def test_process_defaults_do_not_override_the_file(perturbed_text):
    cfg = parse_config(perturbed_text, defaults={"tracking": {"seed": 99, "max_events": 500}})
    assert cfg.tracking.seed == 7
    assert cfg.tracking.max_events == 500


def test_serialize_round_trip(perturbed_cfg):
    assert parse_config(serialize_config(perturbed_cfg)) == perturbed_cfg


def test_repeated_keys_collect_rows(perturbed_text):
    sections = parse_sections(perturbed_text)
    assert len(sections["inflow"]["row"]) == 2
    assert len(sections["boundary"]["vertex"]) == 3


def test_comments_and_blank_lines_are_ignored(straight_text):
    assert parse_config("# header\n\n" + straight_text + "\n# trailer\n") == parse_config(straight_text)


@pytest.mark.parametrize("line,fragment", [
    ("colour.red = 1", "unknown section"),
    ("tracking.eps = 0.01", "repeated key"),
    ("no equals sign here", "expected"),
    ("eps = 0.01", "no section prefix"),
])
def test_malformed_lines(straight_text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(straight_text + line + "\n")
    assert fragment in info.value.describe()


def test_subsonic_row_is_rejected(straight_text):
    text = straight_text.replace("inflow.row = -1,", "inflow.row = -3, 0.8, 0.0, 1, 1.4\ninflow.row = -1,")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert "supersonic" in info.value.describe()


def test_x_subsonic_row_is_rejected(straight_text):
    text = straight_text.replace("inflow.row = -1,", "inflow.row = -3, 0.5, 2.0, 1, 1.4\ninflow.row = -1,")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert "u > c" in info.value.describe()


def test_total_variation_bound(perturbed_text):
    with pytest.raises(ConfigError) as info:
        parse_config(perturbed_text + "tracking.tv_bound = 1e-5\n")
    assert "smallness" in info.value.describe()


def test_negative_inflow_angle_is_rejected():
    text = "inflow.row = -1, 3.0, -0.2, 1, 1.4\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert ">= 0" in info.value.describe()


def test_detached_inflow_angle_is_rejected():
    # Mach 2 at 25 degrees exceeds the largest attached deflection
    text = "inflow.row = -1, 1.8126155740732999, 0.8452365234813989, 1, 1.4\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert "critical vertex angle" in info.value.describe()


def test_first_face_must_be_horizontal(straight_text):
    with pytest.raises(ConfigError) as info:
        parse_config(straight_text + "boundary.vertex = 0.5, 0.1\n")
    assert "horizontal" in info.value.describe()


def test_rows_must_increase(straight_text):
    text = straight_text.replace("inflow.row = -1,", "inflow.row = -0.5, 3, 0, 1, 1.4\ninflow.row = -1,")
    with pytest.raises(ConfigError):
        parse_config(text)


def test_row_length_is_checked():
    with pytest.raises(ConfigError) as info:
        parse_config("inflow.row = -1, 3.0, 0.0, 1\n")
    assert "expected 5 values" in info.value.describe()


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(tmp_path / "absent.cfg")
    assert "cannot read" in info.value.describe()
