"""Command-line front end: exit codes, document structure, determinism,
fault injection."""

import json

import pytest

from spectral_ends import cli


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_invalid_flags_exit_2(capsys, tmp_path):
    # missing required --geometry
    code, _, _ = _run(["mesh", "--refine", "1"], capsys)
    assert code == cli.EXIT_FLAGS
    # scan grid reaching into the upper half-plane
    code, _, err = _run(
        ["resonance-scan", "--geometry", "rect-test", "--re", "1:2:11",
         "--im", "-0.1:0.1:11"],
        capsys,
    )
    assert code == cli.EXIT_FLAGS
    # geometry parameter that the preset does not accept
    code, _, err = _run(
        ["eigen", "--geometry", "bent-waveguide", "--eps", "0.3", "--refine", "1"],
        capsys,
    )
    assert code == cli.EXIT_FLAGS and "unused" in err
    # --search without --J
    code, _, _ = _run(
        ["eigen", "--geometry", "rect-test", "--refine", "1", "--search", "0.5:2"],
        capsys,
    )
    assert code == cli.EXIT_FLAGS
    # malformed range
    code, _, _ = _run(
        ["resonance-scan", "--geometry", "rect-test", "--re", "1:2", "--im", "-1:0:5"],
        capsys,
    )
    assert code == cli.EXIT_FLAGS


def test_mesh_out_and_check(capsys, tmp_path):
    path = tmp_path / "m.txt"
    code, _, _ = _run(
        ["mesh", "--geometry", "rect-test", "--refine", "2", "--out", str(path)], capsys
    )
    assert code == 0
    from spectral_ends.mesh import read_mesh

    m = read_mesh(path)
    assert m.num_nodes > 0
    code, out, _ = _run(
        ["mesh", "--geometry", "cshape-cavity", "--eps", "0.2", "--refine", "1",
         "--check"],
        capsys,
    )
    assert code == 0
    assert "min angle" in out and "relative error" in out


def test_eigen_document_structure_and_determinism(capsys, tmp_path):
    argv = [
        "eigen", "--geometry", "rect-test", "--refine", "2",
        "--lambda-max", "30", "--M", "3",
    ]
    docs = []
    for out_name in ("a.json", "b.json"):
        path = tmp_path / out_name
        code, _, _ = _run(argv + ["--output", str(path)], capsys)
        assert code == 0
        docs.append(json.loads(path.read_text()))
    for doc in docs:
        assert doc["command"] == "eigen"
        # config echo carries every default that influenced the run
        for key in ("geometry", "refine", "lambda_max", "M", "lambda0", "tol", "J"):
            assert key in doc["config"]
        assert doc["config"]["J"] == "auto"
        assert doc["counts"]["mu"] >= 1 and doc["counts"]["nu"] >= 1
        assert doc["thresholds"][0] == pytest.approx(9.8696044, abs=1e-6)
        # the half-strip has no trapped modes: zero findings is a success
        assert doc["findings"] == []
        assert doc["windows"][0]["count_bound_K"] >= 0
    # bit-identical apart from timings
    for doc in docs:
        doc.pop("timings")
    assert docs[0] == docs[1]


def test_resonance_scan_writes_csv(capsys, tmp_path):
    out = tmp_path / "scan.json"
    csv = tmp_path / "scan.csv"
    code, _, _ = _run(
        ["resonance-scan", "--geometry", "rect-test", "--refine", "1",
         "--lambda-max", "30", "--M", "2", "--re", "3:4:5", "--im", "-0.1:0:3",
         "--levels", "1", "--csv", str(csv), "--output", str(out)],
        capsys,
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["command"] == "resonance-scan"
    assert doc["config"]["grid"]["re"] == [3.0, 4.0, 5]
    assert "estimates" in doc and "pole_hazards" in doc
    lines = csv.read_text().splitlines()
    assert lines[0] == "re,im,cond,logabsdet"
    assert len(lines) == 1 + 5 * 3


def test_validate_passes_and_fault_injection_fails(capsys):
    code, out, _ = _run(["validate"], capsys)
    assert code == 0
    assert "rectangle-ntd" in out and "FAIL" not in out
    code, out, _ = _run(["validate", "--inject-fault", "branch-sign"], capsys)
    assert code == cli.EXIT_VALIDATE
    assert "FAIL" in out
