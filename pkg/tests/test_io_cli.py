import json

import numpy as np
import pytest

from metrised import algebra as alg
from metrised import constructions as cons
from metrised import io
from metrised.analysis import AnalysisConfig, analyze
from metrised.cli import main, make_fixture


def test_round_trip_is_bit_exact(tmp_path):
    for A in (cons.sym_jordan(3), cons.spin_factor([[0.3, 0.1], [0.1, 0.7]]),
              cons.random_metrised(3, np.random.default_rng(1))):
        p = tmp_path / "a.json"
        io.save(A, p, {"note": "x"})
        B = io.load(p)
        assert B == A and B.label == A.label
        assert json.loads(p.read_text())["metadata"] == {"note": "x"}


def test_size_mismatch_names_field():
    d = io.to_dict(cons.rsquare())
    d["structure"] = d["structure"][:-1]
    with pytest.raises(io.AlgebraFileError) as exc:
        io.from_dict(d)
    assert exc.value.field == "structure"
    d = io.to_dict(cons.rsquare())
    d["gram"] = [1.0, 0.0, "a", 1.0]
    with pytest.raises(io.AlgebraFileError) as exc:
        io.from_dict(d)
    assert exc.value.field == "gram"


@pytest.mark.parametrize("mutate,field", [
    (lambda d: d.update(dim=0), "dim"),
    (lambda d: d.update(schema_version=9), "schema_version"),
    (lambda d: d.pop("gram"), "gram"),
    (lambda d: d.update(label=3), "label"),
])
def test_bad_documents(mutate, field):
    d = io.to_dict(cons.rsquare())
    mutate(d)
    with pytest.raises(io.AlgebraFileError) as exc:
        io.from_dict(d)
    assert exc.value.field == field


def test_invalid_json_and_missing_file(tmp_path):
    with pytest.raises(io.AlgebraFileError):
        io.loads("{not json")
    with pytest.raises(io.AlgebraFileError):
        io.load(tmp_path / "missing.json")


def test_asymmetric_structure_warns_and_symmetrizes():
    d = io.to_dict(cons.rsquare())
    d["structure"][1] = 0.25  # C[0,0,1] stays, C[0,1,0] perturbed
    d["structure"][2] = 0.5
    with pytest.warns(alg.AsymmetryWarning):
        A = io.from_dict(d)
    np.testing.assert_array_equal(A.structure, A.structure.transpose(1, 0, 2))


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("argv,dim", [
    (["spin-factor", "--dim", "3"], 4),
    (["spin-factor", "--form", "[[2, 0], [0, 1]]"], 3),
    (["sym-jordan", "--n", "3"], 6),
    (["rsquare"], 2),
])
def test_fixture_kinds(tmp_path, capsys, argv, dim):
    p = tmp_path / "f.json"
    code, _, _ = run(["fixture", *argv, "--out", p], capsys)
    assert code == 0
    A = io.load(p)
    assert A.dim == dim and alg.validate(A).passed


def test_fixture_direct_sum(tmp_path, capsys):
    a, b, out = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "s.json"
    make_fixture("rsquare", {}, a)
    make_fixture("sym-jordan", {"n": 2}, b)
    code, _, _ = run(["fixture", "direct-sum", "--left", a, "--right", b, "--out", out], capsys)
    assert code == 0 and io.load(out).dim == 5


def test_fixture_bad_parameters(tmp_path, capsys):
    code, _, err = run(["fixture", "spin-factor", "--out", tmp_path / "x.json"], capsys)
    assert code == 2 and "--dim" in err
    code, _, _ = run(["fixture", "spin-factor", "--form", "[[1, 2], [2, 1]]",
                      "--out", tmp_path / "x.json"], capsys)
    assert code == 2


def test_analyze_exit_ok_and_report(tmp_path, capsys):
    p = tmp_path / "spin.json"
    make_fixture("spin-factor", {"dim": 2}, p)
    code, out, _ = run(["analyze", p, "--format", "machine"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["status"] == "ok" and "timings" not in rep
    assert all(c["passed"] for c in rep["residuals"].values())
    assert rep["stages"]["isomorphism"]["verdict"] is True


def test_analyze_non_minimal_skips(tmp_path, capsys):
    p = tmp_path / "sym3.json"
    make_fixture("sym-jordan", {"n": 3}, p)
    code, out, _ = run(["analyze", p, "--format", "machine", "--multistart", 60], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["stages"]["minimality"]["is_minimal"] is False
    assert set(rep["skipped"]) == {"identities", "isomorphism"}


def test_exit_code_parse(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{oops")
    code, _, err = run(["analyze", p], capsys)
    assert code == 2 and "error" in err


def test_exit_code_axiom(tmp_path, capsys):
    A = cons.spin_factor(np.eye(2))
    G = A.gram.copy()
    G[0, 1] = G[1, 0] = 0.3
    p = tmp_path / "bad_gram.json"
    io.save(A.with_gram(G), p)
    code, _, err = run(["validate", p], capsys)
    assert code == 3 and "[validate]" in err


def test_exit_code_non_unital(tmp_path, capsys):
    p = tmp_path / "zero.json"
    io.save(cons.zero_algebra(2), p)
    code, _, err = run(["analyze", p], capsys)
    assert code == 4 and "non-unital" in err


def test_exit_code_search(tmp_path, capsys):
    # R has a unit but no nontrivial idempotent
    p = tmp_path / "r.json"
    io.save(cons.real_line(), p)
    code, _, err = run(["analyze", p], capsys)
    assert code == 5


def test_machine_report_deterministic(tmp_path, capsys):
    p = tmp_path / "s.json"
    make_fixture("spin-factor", {"dim": 3}, p)
    outs = []
    for i in range(2):
        o = tmp_path / f"r{i}.json"
        code, _, _ = run(["analyze", p, "--format", "machine", "--seed", 3, "--out", o], capsys)
        assert code == 0
        outs.append(o.read_bytes())
    assert outs[0] == outs[1]


def test_strict_halves_tolerances():
    cfg = AnalysisConfig.make(strict=True)
    assert cfg.search.classify_tol == 5e-9 and cfg.tolerances.axiom == 5e-10


def test_human_report_lists_spectrum(tmp_path, capsys):
    p = tmp_path / "s.json"
    make_fixture("spin-factor", {"dim": 2}, p)
    code, out, _ = run(["idempotents", p], capsys)
    assert code == 0
    assert "L_c on c-perp" in out and "extremal" in out and "minimality" not in out


def test_isomorphism_command(tmp_path, capsys):
    p = tmp_path / "s.json"
    make_fixture("sym-jordan", {"n": 2}, p)
    code, out, _ = run(["isomorphism", p, "--format", "machine"], capsys)
    assert code == 0 and json.loads(out)["stages"]["isomorphism"]["verdict"]
    q = tmp_path / "t.json"
    make_fixture("sym-jordan", {"n": 3}, q)
    code, out, _ = run(["isomorphism", q, "--format", "machine"], capsys)
    assert code == 0 and "isomorphism" in json.loads(out)["skipped"]


def test_analyze_api_stop_after():
    rep = analyze(cons.rsquare(), stop_after="validate")
    assert list(rep.stages) == ["validate"] and rep.ok
