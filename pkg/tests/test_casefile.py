import pytest

from planewave.casefile import parse_case, parse_case_text, serialize_case, write_case
from planewave.dynamics import Event
from planewave.errors import CaseFileError, DegenerateBranchError, ValidationError

MINIMAL = """\
[system]
name = "two-bus"
base_mva = 100.0
frequency_hz = 60.0

[[buses]]
id = 1
kind = "slack"
v_set_pu = 1.0

[[buses]]
id = 2
kind = "load"
load_p_pu = 0.5

[[branches]]
from = 1
to = 2
r_pu = 0.01
x_pu = 0.1
length_m = 50000.0

[[generators]]
bus = 1
tech = "SG"
h_s = 4.0
rating_mva = 100.0
t_v_s = 0.5
z_m_pu = [0.0, 0.2]
source_z_pu = [0.0, 0.2]
"""


@pytest.mark.parametrize("name", ["wscc9", "ne39"])
def test_benchmark_round_trip(name, request):
    case = request.getfixturevalue(name)
    again = parse_case_text(serialize_case(case), "again")
    assert again == case
    assert serialize_case(again) == serialize_case(case)


def test_minimal_case_defaults():
    case = parse_case_text(MINIMAL)
    assert case.name == "two-bus"
    assert case.network.branches[0].length == 50000.0
    assert case.generators[0].z_source == 0.2j
    assert case.options.dt == 1e-3


def test_file_round_trip(tmp_path):
    case = parse_case_text(MINIMAL)
    path = write_case(case, tmp_path / "c.toml")
    assert parse_case(path) == case


def test_zero_reactance_names_branch():
    text = MINIMAL.replace("x_pu = 0.1", "x_pu = 0.0")
    with pytest.raises(DegenerateBranchError, match="1-2"):
        parse_case_text(text)


def test_gfm_without_droop_is_rejected():
    text = MINIMAL.replace('tech = "SG"', 'tech = "GFM_droop"')
    with pytest.raises(CaseFileError, match="droop"):
        parse_case_text(text)


def test_unknown_key_reports_line():
    text = MINIMAL.replace("r_pu = 0.01", "r_pu = 0.01\nresistance = 3")
    with pytest.raises(CaseFileError) as info:
        parse_case_text(text)
    assert "resistance" in str(info.value)
    assert info.value.line == text.splitlines().index("resistance = 3") + 1


def test_unknown_section_rejected():
    with pytest.raises(CaseFileError, match="widgets"):
        parse_case_text(MINIMAL + "\n[widgets]\nn = 1\n")


def test_generator_at_missing_bus():
    with pytest.raises(ValidationError, match="bus"):
        parse_case_text(MINIMAL.replace("bus = 1\ntech", "bus = 7\ntech"))


def test_malformed_toml():
    with pytest.raises(CaseFileError):
        parse_case_text("[system\nname = 1")


def test_events_round_trip():
    text = MINIMAL + """
[[events]]
kind = "load_step"
time_s = 0.1
bus = 2
dp_pu = 0.05
"""
    case = parse_case_text(text)
    assert case.events == (Event.load_step(0.1, 2, 0.05),)
    assert parse_case_text(serialize_case(case)) == case


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        parse_case(tmp_path / "absent.toml")
