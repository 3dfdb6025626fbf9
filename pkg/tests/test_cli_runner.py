import json
from pathlib import Path

import pytest

from quadrtop.cli_runner.corpus import by_name, corpus, quadric_expectation
from quadrtop.cli_runner.main import check_entry, main
from quadrtop.cli_runner.oracle import default_eps, oracle_b0
from quadrtop.cli_runner.problem import SchemaError, parse_problem, problem_from_dict, quadric_problem
from quadrtop.quad_core import QuadraticForm

CORPUS_DIR = Path(__file__).resolve().parent.parent / "corpus"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ------------------------------------------------------------------ parsing


@pytest.mark.parametrize("path", sorted(CORPUS_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_corpus_files_match_builtin(path):
    spec = parse_problem(path)
    assert spec.name == path.stem
    assert spec.to_json() == by_name(path.stem).spec.to_json()


def test_every_builtin_has_a_file():
    assert {e.spec.name for e in corpus()} == {p.stem for p in CORPUS_DIR.glob("*.json")}


def test_wrong_form_count():
    with pytest.raises(SchemaError, match="k\\+1 = 2"):
        problem_from_dict({"n": 1, "k": 1, "forms": [[1, 0, 1]]})


def test_asymmetric_matrix_names_entry():
    data = {"n": 1, "k": 0, "forms": [[[1, 2], [3, 1]]]}
    with pytest.raises(SchemaError, match=r"form 0 .*\(0,1\)"):
        problem_from_dict(data)


def test_bad_triangle_length():
    with pytest.raises(SchemaError, match="upper-triangle"):
        problem_from_dict({"n": 1, "k": 0, "forms": [[1, 0]]})


def test_unknown_option_and_cone():
    with pytest.raises(SchemaError, match="unknown options"):
        problem_from_dict({"n": 1, "k": 0, "forms": [[1, 0, -1]], "options": {"depth": 3}})
    with pytest.raises(SchemaError, match="cone type"):
        problem_from_dict({"n": 1, "k": 0, "forms": [[1, 0, -1]], "cone": "ball"})


def test_missing_field():
    with pytest.raises(SchemaError, match="'forms'"):
        problem_from_dict({"n": 1, "k": 0})


def test_toml_input(tmp_path):
    path = tmp_path / "circle.toml"
    path.write_text('n = 2\nk = 0\nforms = [[[1, 0, 0], [0, 1, 0], [0, 0, "-1"]]]\n[options]\nmesh_depth = 1\n')
    spec = parse_problem(path)
    assert spec.forms[0] == QuadraticForm.diagonal([1, 1, -1])
    assert spec.options["mesh_depth"] == 1
    assert spec.name == "circle"


def test_literal_json_and_fractions():
    spec = parse_problem('{"n": 1, "k": 0, "forms": [["1/2", 0, -1]]}')
    assert spec.forms[0].entries[0][0] == QuadraticForm.diagonal(["1/2", -1]).entries[0][0]


def test_unparsable_text():
    with pytest.raises(SchemaError, match="cannot parse"):
        parse_problem("{not json")


def test_quadric_problem_bounds():
    assert quadric_problem(1, 2, 2).forms[0] == QuadraticForm.diagonal([1, -1, -1])
    with pytest.raises(SchemaError):
        quadric_problem(2, 2, 2)


@pytest.mark.parametrize(
    "a, b, n, betti, incl",
    [
        (1, 1, 1, [2, 0], [1, 0]),
        (1, 2, 2, [1, 1, 0], [1, 0, 0]),
        (2, 2, 3, [1, 2, 1, 0], [1, 1, 0, 0]),
        (1, 1, 2, [1, 2, 0], [1, 1, 0]),
    ],
)
def test_quadric_expectation(a, b, n, betti, incl):
    assert quadric_expectation(a, b, n) == (betti, incl)


# -------------------------------------------------------------------- CLI


def test_betti_command(capsys):
    code, out, _ = run_cli(capsys, "betti", "--quadric", "1,1,2")
    assert code == 0
    assert json.loads(out)["betti"] == [1, 2, 0]


def test_inclusion_command(capsys):
    code, out, _ = run_cli(capsys, "inclusion", "--example", "twisted_cubic")
    assert code == 0
    assert json.loads(out) == {"inclusion_rank": [1, 1, 0, 0], "exact": True}


def test_analyze_json_and_markdown(capsys):
    path = str(CORPUS_DIR / "example11.json")
    code, out, _ = run_cli(capsys, "analyze", "--input", path)
    assert code == 0
    rep = json.loads(out)
    assert rep["betti"]["betti"] == [3, 0, 0]
    assert rep["spectral_table"]["pages"]["2"] == [[0, 0, 1], [0, 3, 0], [0, 0, 0], [1, 0, 0]]
    assert "timings_s" not in rep["diagnostics"]
    code, out, _ = run_cli(capsys, "analyze", "--input", path, "--emit", "md")
    assert code == 0
    assert out.startswith("# example11 (n=2, k=2)")
    assert "**E3**" in out
    assert "Betti numbers: [3, 0, 0] (exact)" in out


def test_hyperplane_command(capsys):
    code, out, _ = run_cli(capsys, "hyperplane", "--quadric", "2,1,2", "--normal", "1,0,0")
    assert code == 0
    g2 = json.loads(out)
    assert g2["totals_upper_bound"] == [0, 2, 0]
    assert g2["normal"] == ["1", "0", "0"]


def test_mesh_dump(capsys):
    code, out, _ = run_cli(capsys, "mesh", "dump", "--quadric", "1,1,1")
    assert code == 0
    assert json.loads(out)


def test_missing_file_exit_code(capsys, tmp_path):
    code, _, err = run_cli(capsys, "betti", "--input", str(tmp_path / "none.json"))
    assert code == 2
    assert err.startswith("error:")


def test_schema_error_exit_code(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 1, "k": 1, "forms": [[1, 0, 1]]}')
    code, _, err = run_cli(capsys, "betti", "--input", str(path))
    assert code == 2
    assert "k+1" in err


def test_unknown_example_exit_code(capsys):
    assert run_cli(capsys, "betti", "--example", "nonesuch")[0] == 2


def test_unresolved_mesh_exit_code(capsys):
    code, _, err = run_cli(capsys, "betti", "--example", "twisted_cubic", "--mesh-depth", "0", "--max-refine", "0")
    assert code == 3
    assert "--max-refine" in err


def test_analyze_is_deterministic(capsys):
    argv = ("analyze", "--example", "gamma_v", "--normal", "1,0,0,0,0,1")
    first = run_cli(capsys, *argv)[1]
    second = run_cli(capsys, *argv)[1]
    assert first == second


def test_check_entry_reports_pass():
    res = check_entry(by_name("example11"))
    assert res["pass"]
    assert res["checks"]["betti"] and res["checks"]["inclusion_rank"]


# ------------------------------------------------------------------- oracle


@pytest.mark.parametrize(
    "name, components",
    [("example11", 3), ("quadric_1_1_1", 2), ("two_quadrics_orthant", 1), ("two_quadrics_points", 4)],
)
def test_oracle_components(name, components):
    res = oracle_b0(by_name(name).spec, samples=5000)
    assert res.components == components


def test_oracle_on_whole_space():
    spec = problem_from_dict({"n": 2, "k": 0, "forms": [[0] * 6]})
    assert oracle_b0(spec, samples=3000).components == 1


def test_oracle_empty_set():
    assert oracle_b0(by_name("hopf1").spec, samples=3000).components == 0


def test_default_eps_shrinks_with_density():
    assert default_eps(2, 100) > default_eps(2, 10000)
    assert default_eps(3, 10**9) == 0.15


def test_oracle_command(capsys):
    code, out, _ = run_cli(capsys, "oracle-b0", "--example", "example11", "--samples", "4000")
    assert code == 0
    assert json.loads(out)["components"] == 3
