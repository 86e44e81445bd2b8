"""Document formats and the command-line interface."""

from __future__ import annotations

import json
from fractions import Fraction

import pytest

from troplf import ExtendedNumber, NEG_INF, homogenize
from troplf.cli_io import (
    DocumentError,
    format_entry,
    format_rational,
    main,
    parse_certificate,
    parse_entry,
    parse_instance,
    serialize_certificate,
    serialize_instance,
)

from conftest import make_instance

EX1 = "data/example1.json"
EX2 = "data/example2.json"
EX3 = "data/example3.json"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- scalar tokens ---------------------------------------------------------


def test_parse_entry_tokens():
    assert parse_entry(3) == ExtendedNumber.finite(3)
    assert parse_entry("3/2") == ExtendedNumber.finite(Fraction(3, 2))
    assert parse_entry(" -4 ") == ExtendedNumber.finite(-4)
    assert parse_entry("-inf") == NEG_INF
    for bad in ("+inf", "nan", "1.5.2", "", True, None, [1]):
        with pytest.raises(DocumentError):
            parse_entry(bad)


def test_format_rational_canonical():
    assert format_rational(Fraction(4, 2)) == "2"
    assert format_rational(Fraction(-3, 6)) == "-1/2"
    assert format_entry(NEG_INF) == "-inf"


# --- instance documents ----------------------------------------------------


def test_round_trip_instances(example1, example2, example3):
    for inst in (example1, example2, example3):
        doc = serialize_instance(inst)
        again = parse_instance(json.loads(json.dumps(doc)))
        assert not again.maximize
        assert serialize_instance(again.instance) == doc


def test_parse_homogeneous_form_matches_original():
    with open(EX3, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    assert "C" in doc and "D" in doc
    parsed = parse_instance(doc)
    H = homogenize(parsed.instance)
    assert (H.m, H.n) == (len(doc["C"]), len(doc["C"][0]) - 1)


def test_parse_rejects_malformed_documents():
    with pytest.raises(DocumentError):
        parse_instance([])
    with pytest.raises(DocumentError):
        parse_instance({"objective": "maximise"})
    with pytest.raises(DocumentError):
        parse_instance({"A": [[0]], "B": [[0]], "c": [0], "d": [0], "p": "x", "q": [0]})
    with pytest.raises(DocumentError):
        parse_instance({"C": [[0, 0]], "D": [[0, 0]], "u": [0], "v": [0, 0]})


# --- certificate documents -------------------------------------------------


def test_certificate_round_trip(example2):
    from troplf import make_optimality_certificate

    H = homogenize(example2)
    cert = make_optimality_certificate(H, Fraction(0))
    doc = serialize_certificate(cert)
    assert doc["type"] == "optimality" and doc["lambda"] == "0"
    assert all(isinstance(i, int) and i >= 1 for i in doc["tau"])
    again = parse_certificate(json.loads(json.dumps(doc)), H.m, H.n)
    assert again.tau == cert.tau and again.lam == cert.lam
    assert again.witness == cert.witness


def test_certificate_parse_rejects_bad_shapes(example2):
    H = homogenize(example2)
    with pytest.raises(DocumentError):
        parse_certificate({"type": "optimality", "lambda": "0", "tau": [8, 4]}, H.m, H.n)
    with pytest.raises(DocumentError):
        parse_certificate({"type": "optimality", "lambda": "-inf", "tau": [8, 4, 4]}, H.m, H.n)
    with pytest.raises(DocumentError):
        parse_certificate({"type": "mystery"}, H.m, H.n)
    with pytest.raises(DocumentError):
        parse_certificate({"type": "unboundedness", "sigma": [1] * 3}, H.m, H.n)


# --- solve command ---------------------------------------------------------


def test_solve_example2_with_trace(capsys):
    code, out, _ = run(capsys, "solve", EX2, "--lambda0", "15")
    assert code == 0
    lines = out.splitlines()
    assert "optimal 0" in lines
    assert "lambda* = 0" in lines
    traced = [l for l in lines if l.startswith("iteration")]
    assert [l.split()[4] for l in traced] == ["15", "4", "1", "0"]


def test_solve_example1_maximization(capsys):
    code, out, _ = run(capsys, "solve", EX1)
    assert code == 0
    assert "optimal 5" in out
    assert "lambda* = -5" in out
    assert "witness x = (1 2)" in out


def test_solve_example3_homogeneous(capsys):
    code, out, _ = run(capsys, "solve", EX3)
    assert code == 0
    assert "optimal -4" in out
    assert "witness x = (2 1 -inf)" in out


def test_solve_infeasible_exit_code(capsys, tmp_path):
    path = tmp_path / "infeasible.json"
    path.write_text(json.dumps({
        "A": [[0]], "B": [[0]], "c": [0], "d": [0],
        "p": [1], "q": ["-inf"], "r": 0, "s": "-inf",
    }))
    code, out, _ = run(capsys, "solve", str(path))
    assert code == 2 and "infeasible" in out


def test_solve_unbounded_exit_code(capsys, tmp_path):
    path = tmp_path / "unbounded.json"
    path.write_text(json.dumps({
        "A": [[0, "-inf"], ["-inf", 0]], "B": [[0, "-inf"], ["-inf", 0]],
        "c": [0, -1], "d": [0, 0],
        "p": ["-inf", "-inf"], "q": [0, 0], "r": "-inf", "s": 0,
    }))
    code, out, _ = run(capsys, "solve", str(path))
    assert code == 3 and "unbounded" in out


def test_solve_usage_errors(capsys):
    code, _, err = run(capsys, "solve", EX2, "--method", "sorcery")
    assert code == 1 and "error" in err
    code, _, err = run(capsys, "solve", "no/such/file.json")
    assert code == 1 and "error" in err


def test_solve_methods_agree_on_examples(capsys):
    for method in ("newton", "bisection", "negative-newton"):
        code, out, _ = run(capsys, "solve", EX2, "--method", method)
        assert code == 0 and "lambda* = 0" in out


# --- check command ---------------------------------------------------------


def test_check_round_trip(capsys, tmp_path):
    cert_path = tmp_path / "cert.json"
    code, _, _ = run(capsys, "solve", EX2, "--cert-out", str(cert_path))
    assert code == 0
    code, out, _ = run(capsys, "check", EX2, str(cert_path))
    assert code == 0 and "accept" in out


def test_check_rejects_wrong_lambda(capsys, tmp_path):
    cert_path = tmp_path / "cert.json"
    run(capsys, "solve", EX2, "--cert-out", str(cert_path))
    doc = json.loads(cert_path.read_text())
    doc["lambda"] = "-1"
    doc.pop("witness", None)
    cert_path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "check", EX2, str(cert_path))
    assert code == 4 and "reject" in out and "phi" in out


def test_check_truncated_tau_is_usage_error(capsys, tmp_path):
    cert_path = tmp_path / "cert.json"
    run(capsys, "solve", EX2, "--cert-out", str(cert_path))
    doc = json.loads(cert_path.read_text())
    doc["tau"] = doc["tau"][:-1]
    cert_path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "check", EX2, str(cert_path))
    assert code == 1 and "error" in err


def test_check_unboundedness_certificate(capsys, tmp_path):
    inst_path = tmp_path / "unbounded.json"
    inst_path.write_text(json.dumps({
        "A": [[0, "-inf"], ["-inf", 0]], "B": [[0, "-inf"], ["-inf", 0]],
        "c": [0, -1], "d": [0, 0],
        "p": ["-inf", "-inf"], "q": [0, 0], "r": "-inf", "s": 0,
    }))
    cert_path = tmp_path / "cert.json"
    code, _, _ = run(capsys, "solve", str(inst_path), "--cert-out", str(cert_path))
    assert code == 3
    assert json.loads(cert_path.read_text())["type"] == "unboundedness"
    code, out, _ = run(capsys, "check", str(inst_path), str(cert_path))
    assert code == 0 and "accept" in out


# --- game-value command ----------------------------------------------------


def test_game_value_goldens(capsys):
    code, out, _ = run(capsys, "game-value", EX2, "--lambda", "15", "--node", "3")
    assert code == 0 and out.strip() == "11/2"
    code, out, _ = run(capsys, "game-value", EX2, "--lambda", "0")
    assert code == 0 and out.strip() == "0"


def test_game_value_node_out_of_range(capsys):
    code, _, err = run(capsys, "game-value", EX2, "--lambda", "0", "--node", "99")
    assert code == 1 and "node" in err


# --- spectral command ------------------------------------------------------


def test_spectral_example2_table(capsys, example2):
    code, out, _ = run(capsys, "spectral", EX2)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "piece,lo,hi,alpha,beta,k"
    pieces = [l.split(",") for l in lines[1:] if l.startswith("piece,")]
    H = homogenize(example2)
    bound = 8 * H.M * (H.k_bound + 1) ** 4 + 2
    assert 1 <= len(pieces) <= bound
    # some piece straddles the optimum lambda* = 0 with value 0 there
    def covers_zero(row):
        lo, hi = row[1], row[2]
        lo_ok = lo == "-inf" or Fraction(lo) <= 0
        hi_ok = hi == "+inf" or Fraction(hi) >= 0
        return lo_ok and hi_ok

    crossing = [row for row in pieces if covers_zero(row)]
    assert any(Fraction(row[3]) == 0 for row in crossing)  # alpha/k + 0*beta = 0
    samples = [l.split(",") for l in lines if l.startswith("sample,") and len(l.split(",")) == 3]
    assert samples and all(len(row) == 3 for row in samples)


def test_spectral_constant_instance_flat(capsys, tmp_path):
    path = tmp_path / "flat.json"
    path.write_text(json.dumps({
        "A": [[0]], "B": [[0]], "c": ["-inf"], "d": [0],
        "p": ["-inf"], "q": [0], "r": 0, "s": "-inf",
    }))
    code, out, _ = run(capsys, "spectral", str(path))
    assert code == 0
    pieces = [l.split(",") for l in out.splitlines()[1:] if l.startswith("piece,")]
    assert pieces and all(row[4] == "0" for row in pieces)


def test_spectral_out_file(capsys, tmp_path):
    target = tmp_path / "spec.csv"
    code, out, _ = run(capsys, "spectral", EX2, "--out", str(target))
    assert code == 0 and out == ""
    assert target.read_text().startswith("piece,lo,hi,alpha,beta,k")


# --- determinism ------------------------------------------------------------


def test_solve_output_deterministic(capsys):
    _, out1, _ = run(capsys, "solve", EX2, "--method", "bisection")
    _, out2, _ = run(capsys, "solve", EX2, "--method", "bisection")
    assert out1 == out2
