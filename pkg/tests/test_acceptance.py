"""Acceptance gate: benchmark eigenvalues, embedded eigenvalues, resonances,
the acceleration property, and the validation command.

Reference values are published benchmark results for these geometries; the
obstructed-strip tables are quoted in wavenumber units (sqrt of the spectral
parameter), so those gates compare sqrt_lambda.
"""

import json
import math
import time

import numpy as np
import pytest

from spectral_ends import cli, ntd
from spectral_ends.pipeline import RunConfig, build

PI2_4 = math.pi**2 / 4.0


def _run_json(argv, tmp_path_factory, name):
    path = tmp_path_factory.mktemp("acc") / f"{name}.json"
    code = cli.main(argv + ["--output", str(path)])
    assert code == 0, f"exit {code} for {argv}"
    return json.loads(path.read_text())


# -- criterion 1: bent waveguide trapped mode ------------------------------


@pytest.fixture(scope="module")
def bent_docs(tmp_path_factory):
    docs = []
    for refine, lmax in ((3, 50), (4, 100)):
        start = time.monotonic()
        doc = _run_json(
            ["eigen", "--geometry", "bent-waveguide", "--refine", str(refine),
             "--lambda-max", str(lmax), "--J", "0"],
            tmp_path_factory, f"bent{refine}",
        )
        doc["_elapsed"] = time.monotonic() - start
        docs.append(doc)
    return docs


def test_bent_waveguide_trapped_mode(bent_docs):
    values = []
    for doc in bent_docs:
        below = [f["lambda"] for f in doc["findings"] if f["lambda"] < PI2_4]
        assert len(below) == 1
        assert below[0] == pytest.approx(2.346, abs=0.01)
        assert doc["_elapsed"] < 300.0
        values.append(below[0])
    assert abs(values[0] - values[1]) <= 0.002


# -- criterion 2: obstructed strip embedded eigenvalues --------------------


@pytest.fixture(scope="module")
def obstructed_docs(tmp_path_factory):
    out = {}
    for radius in ("0.3", "0.5"):
        out[radius] = _run_json(
            ["eigen", "--geometry", "obstructed-strip", "--delta", "0",
             "--radius", radius, "--refine", "4", "--lambda-max", "100",
             "--J", "1"],
            tmp_path_factory, f"obstructed{radius}",
        )
    return out


@pytest.mark.parametrize(
    "radius,expected,published",
    [("0.3", 1.5049, 1.5048), ("0.5", 1.3914, 1.3913)],
)
def test_obstructed_strip_embedded_eigenvalue(obstructed_docs, radius, expected, published):
    doc = obstructed_docs[radius]
    flagged = [f for f in doc["findings"] if f["embedded_flag"]]
    assert len(flagged) == 1
    k = flagged[0]["sqrt_lambda"]
    assert k == pytest.approx(expected, abs=0.003)
    assert k == pytest.approx(published, abs=0.004)
    # findings never exceed the counting bound
    for w in doc["windows"]:
        assert len(w["findings"]) <= w["count_bound_K"]


# -- criterion 3: obstructed strip resonances -------------------------------


@pytest.fixture(scope="module")
def obstructed_scans(tmp_path_factory):
    out = {}
    for name, delta, radius, re, im in (
        ("r03", "0.1", "0.3", "2.2:2.35:101", "-0.01:0:51"),
        ("r05", "0.2", "0.5", "1.9:2.1:101", "-0.03:0:51"),
    ):
        out[name] = _run_json(
            ["resonance-scan", "--geometry", "obstructed-strip",
             "--delta", delta, "--radius", radius, "--refine", "4",
             "--lambda-max", "100", "--re", re, "--im", im, "--workers", "4"],
            tmp_path_factory, f"scan_{name}",
        )
    return out


@pytest.mark.parametrize(
    "name,re_k,re_tol,im_lo,im_hi",
    [
        ("r03", 1.508, 0.005, 0.5e-4, 2e-4),
        ("r05", 1.418, 0.006, 3e-3, 5e-3),
    ],
)
def test_obstructed_strip_resonance(obstructed_scans, name, re_k, re_tol, im_lo, im_hi):
    doc = obstructed_scans[name]
    hits = [
        e for e in doc["estimates"]
        if abs(e["sqrt_lambda"]["re"] - re_k) <= re_tol
        and im_lo <= abs(e["sqrt_lambda"]["im"]) <= im_hi
    ]
    assert hits, f"no estimate matched among {doc['estimates']}"


# -- criterion 4: c-shaped cavity resonance + pole hazard -------------------


@pytest.fixture(scope="module")
def cshape_doc(tmp_path_factory):
    return _run_json(
        ["resonance-scan", "--geometry", "cshape-cavity", "--eps", "0.3",
         "--rart", "1.5", "--refine", "4", "--lambda-max", "50",
         "--re", "5.1:5.3:101", "--im", "-0.02:0:51", "--workers", "4"],
        tmp_path_factory, "cshape",
    )


def test_cshape_first_resonance(cshape_doc):
    hits = [
        e for e in cshape_doc["estimates"]
        if abs(e["lambda"]["re"] - 5.199) <= 0.01
        and 3e-3 <= abs(e["lambda"]["im"]) <= 8e-3
    ]
    assert hits, f"no estimate matched among {cshape_doc['estimates']}"


def test_cshape_neumann_pole_is_annotated(cshape_doc):
    # the interior Neumann eigenvalue near 5.187 must surface as a hazard
    hazards = [h for h in cshape_doc["pole_hazards"] if abs(h - 5.187) <= 0.01]
    assert hazards
    annotated = [
        e for e in cshape_doc["estimates"]
        if e["nearby_neumann_pole"] is not None
        and abs(e["nearby_neumann_pole"] - 5.187) <= 0.01
    ]
    assert annotated


# -- criterion 5: gaussian potential (property level) -----------------------


@pytest.fixture(scope="module")
def gaussian_doc(tmp_path_factory):
    return _run_json(
        ["resonance-scan", "--geometry", "gaussian-potential", "--rart", "6",
         "--refine", "3", "--lambda-max", "50",
         "--re", "3.95:4.45:101", "--im", "-0.002:0:51", "--workers", "4"],
        tmp_path_factory, "gaussian",
    )


def test_gaussian_potential_resonance_with_instability_warning(gaussian_doc):
    hits = [
        e for e in gaussian_doc["estimates"]
        if 4.0 <= e["lambda"]["re"] <= 4.5 and abs(e["lambda"]["im"]) <= 2e-3
    ]
    assert hits, f"no estimate in the box among {gaussian_doc['estimates']}"
    # estimates in this regime are pole/zero artifacts of the truncation and
    # must carry an instability warning
    assert any(e["unresolved_pole_pair"] or e["boundary_warning"] for e in hits)


# -- criterion 6: acceleration of the interior NtD expansion ----------------


def test_rectangle_ntd_acceleration():
    import dataclasses

    acc = build(RunConfig(geometry="rect-test", refine=4, lambda_max=200.0, M=3))
    low = build(RunConfig(geometry="rect-test", refine=4, lambda_max=50.0, M=3))
    direct_data = dataclasses.replace(low.data, R0=None)
    for lam in (-2.0, 0.5, 1.5):
        gamma = np.sqrt(np.arange(1, 4) ** 2 * math.pi**2 - lam)
        exact = np.diag(1.0 / (gamma * np.tanh(gamma)))
        scale = np.abs(exact).max()
        acc_err = np.abs(ntd.interior_ntd(acc.data, lam, acc.data.full) - exact).max() / scale
        dir_err = (
            np.abs(ntd.interior_ntd(direct_data, lam, direct_data.full) - exact).max()
            / scale
        )
        assert acc_err <= 1e-2
        assert dir_err >= 5 * acc_err


# -- criterion 7: validation command ----------------------------------------


def test_validate_command_passes_quickly(capsys):
    start = time.monotonic()
    code = cli.main(["validate"])
    elapsed = time.monotonic() - start
    out = capsys.readouterr().out
    assert code == 0
    assert elapsed <= 120.0
    for suite in ("rectangle-ntd", "wronskian", "counting-identity",
                  "branch-continuity", "monotonicity", "pencil-determinant"):
        assert f"PASS  {suite}" in out
