import pytest

from kosmann.specfile import FIXTURES, SpecError, fixture_path, load_spec, loads_spec

HEAD = '''name = "t"
signature = "++"
[chart.p]
coords = ["x", "y"]
box = [[-1, 1], [-1, 1]]
'''


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_load(name):
    spec = load_spec(name)
    assert spec.name == name
    assert spec.coframe is not None or spec.metric
    assert load_spec(fixture_path(name)).name == name


def test_schwarzschild_layout():
    spec = load_spec("schwarzschild")
    assert len(spec.charts) == 1 and spec.main_chart.dim == 4
    assert spec.signature.p == 1 and spec.signature.q == 3


def _diag(text):
    with pytest.raises(SpecError) as info:
        loads_spec(text)
    return info.value.diagnostics


def test_wrong_row_count_names_the_block():
    diags = _diag(HEAD + '[coframe]\np = [["1", "0"]]\n')
    assert any(line in (6, 7) and "[coframe]" in msg and "2x2" in msg for line, msg in diags)


def test_expression_typo_reports_line_and_offset():
    diags = _diag(HEAD + '[coframe]\np = [["1", "0"], ["0", "sin(x"]]\n')
    assert any(line == 7 and "offset 5" in msg for line, msg in diags)


def test_unknown_chart():
    diags = _diag(HEAD + '[coframe]\np = [["1", "0"], ["0", "1"]]\n[vectorfield.v]\nq = ["1", "0"]\n')
    assert any(line == 9 and "unknown chart 'q'" in msg for line, msg in diags)


def test_toml_syntax_error():
    assert _diag("name = \n")[0][0] == 1


def test_missing_file():
    with pytest.raises(SpecError, match="cannot read file"):
        load_spec("no_such_fixture")
