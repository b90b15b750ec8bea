import json
import math
import pathlib

import numpy as np
import pytest

import lexifactor as lf

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_svd_matches_numpy():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(30, 12))
    U, S, V = lf.jacobi_svd(A)
    np.testing.assert_allclose(U @ np.diag(S) @ V.T, A, atol=1e-10)
    np.testing.assert_allclose(S, np.linalg.svd(A, compute_uv=False), rtol=1e-10)
    np.testing.assert_allclose(U.T @ U, np.eye(12), atol=1e-10)


def test_rescale_logprob():
    assert lf.rescale_logprob({"a": math.log(0.5), "b": math.log(0.5)}, "a", 1.0, 2.0) == pytest.approx(math.log(0.5))
    d = {"a": math.log(0.7), "b": math.log(0.2), "c": math.log(0.1)}
    assert lf.rescale_logprob(d, "b", 1.0, 1.0) == pytest.approx(math.log(0.2))
    # Doubling the temperature halves every logit: p_b ~ sqrt(0.2) / sum sqrt(p).
    expected = math.log(math.sqrt(0.2) / (math.sqrt(0.7) + math.sqrt(0.2) + math.sqrt(0.1)))
    assert lf.rescale_logprob(d, "b", 1.0, 2.0) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        lf.rescale_logprob(d, "zz", 1.0, 2.0)


def test_synthesize_and_align():
    b = lf.synthesize(96, mu=8.0, noise_sigma=0.0, seed=3)
    assert b["matrix"].shape == (96, len(lf.default_lexicon()))
    d = lf.factor_decomposition(b["matrix"], 5)
    assert d["U"].shape == (96, 5)
    assert d["explained_cumulative"][4] == pytest.approx(1.0)
    a = lf.align_components(d["U"], b["labels"])
    assert sorted(a["assignment"]) == sorted(lf.TRAITS)
    aligned = a["aligned"]
    predicted = (aligned >= 0).astype(int)
    assert (predicted == b["labels"]).mean() == 1.0


def test_lasso_zero_at_lambda_max():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(50, 6))
    y = X[:, 0] + 0.1 * rng.normal(size=50)
    top = lf.lambda_max(X, y)
    assert not lf.fit_lasso(X, y, top)["weights"].any()
    m = lf.fit_lasso(X, y, 0.01 * top)
    assert m["converged"]
    assert m["weights"][0] > 0


def test_reference_tables():
    rows = json.loads((ROOT / "tests/fixtures/table1_rows.json").read_text())["rows"]
    assert lf.render_report_table(rows) == (ROOT / "tests/golden/table1.md").read_text()
    P = np.array(json.loads((ROOT / "tests/fixtures/table5_accuracy.json").read_text())["P"])
    r = lf.assign_from_accuracy(P)
    assert r["assignment"] == ["EXT", "OPN", "AGR", "NEU", "CON"]
    assert r["grid"] == (ROOT / "tests/golden/table5.md").read_text()


def test_cli_and_misc(tmp_path):
    code, out, _ = lf.run_cli(["synth", "--stories", "12", "--seed", "2", "--out-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "matrix.tsv").exists()
    assert lf.run_cli(["frobnicate"])[0] == 2
    assert lf.toy_tokenize("talkative") == ["tal", "kat", "ive"]
    assert "kind" in {w for w, _, _ in lf.default_lexicon()}
    assert lf.build_prompt("I like parties.").endswith('"')
