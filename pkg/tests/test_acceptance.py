"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. The published-number reproduction criterion is conditional on release
artifacts (COGSCORE_RELEASE_DIR) and reports as skipped without them.
"""

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

import cogscore.stats as cstats
from cogscore import cli, scorers, textnorm
from cogscore.dataset import CategoryCorpus
from cogscore.providers import CaptionCorpus

from oracles import brute_rank, partial_corr_precision, pearson_direct
from synth import SynthParams, generate_fixture


def _pass(name):
    print(f"ACCEPTANCE {name}: PASS")


def _run_cli(paths, command, extra=()):
    args = [
        command,
        "--labels", str(paths["labels"]),
        "--captions", str(paths["captions"]),
        "--embeddings-text", str(paths["embeddings_text"]),
        "--embeddings-image", str(paths["embeddings_image"]),
        "--lexicon", str(paths["lexicon"]),
        "--out", str(paths["out"]),
        *extra,
    ]
    return cli.main(args)


def _table_values(out_dir, stem):
    doc = json.loads((Path(out_dir) / f"{stem}.json").read_text())
    return {
        row["name"]: dict(zip(doc["columns"], (c["value"] for c in row["cells"])))
        for row in doc["rows"]
    }


def test_c1_rank_statistics_oracle_equivalence():
    """spearman matches a brute-force rank-then-Pearson oracle to 1e-12
    on 1,000 random vectors (lengths 3-500, with and without ties)."""
    rng = np.random.default_rng(101)
    start = time.monotonic()
    for trial in range(1000):
        n = int(rng.integers(3, 501))
        if trial % 2 == 0:  # heavy ties
            x = rng.integers(0, 6, size=n).astype(float)
            y = rng.integers(0, 6, size=n).astype(float)
        else:
            x = rng.normal(size=n)
            y = rng.normal(size=n)
        rx = cstats.rank_transform(x)
        assert float(rx.sum()) == pytest.approx(n * (n + 1) / 2, rel=1e-12)
        if len(set(x.tolist())) < 2 or len(set(y.tolist())) < 2:
            continue
        expected = pearson_direct(brute_rank(x), brute_rank(y))
        assert cstats.spearman(x, y) == pytest.approx(expected, abs=1e-12)
    elapsed = time.monotonic() - start
    assert elapsed < 10.0, f"rank oracle sweep took {elapsed:.1f}s"
    _pass(f"C1 rank-statistics oracle equivalence ({elapsed:.1f}s)")


def test_c2_partial_correlation_oracle_equivalence():
    """Residual regression matches the precision-matrix formula to 1e-9 on
    200 random full-rank 4-variable fixtures (n=50); empty controls equals
    Pearson exactly."""
    rng = np.random.default_rng(202)
    names = ("a", "b", "c", "d")
    for _ in range(200):
        base = rng.normal(size=(4, 50))
        # mild cross-loading keeps the fixtures correlated but full-rank
        mixing = np.eye(4) + 0.3 * rng.normal(size=(4, 4))
        data = dict(zip(names, mixing @ base))
        got = cstats.partial_correlation(data, "a", "b", ["c", "d"])
        want = partial_corr_precision(data, "a", "b")
        assert got == pytest.approx(want, abs=1e-9)
    series = {"a": rng.normal(size=40), "b": rng.normal(size=40)}
    assert cstats.partial_correlation(series, "a", "b", []) == cstats.pearson(
        series["a"], series["b"]
    )
    _pass("C2 partial-correlation oracle equivalence")


def test_c3_scorer_formula_checks():
    """The worked scorer examples: visibility 1-1/4, semantic 1-1/sqrt(2),
    uniqueness monotone in count, concreteness extremal zero."""
    corpus = CaptionCorpus(
        image_id="img",
        sentences=tuple(textnorm.normalize(t) for t in ("a red car", "a car", "a house", "a tree")),
        texts=("a red car", "a car", "a house", "a tree"),
    )
    assert scorers.visibility_score(("red",), corpus) == 0.75
    all_hit = CaptionCorpus("i", (("red",),) * 3, ("red",) * 3)
    assert scorers.visibility_score(("red",), all_hit) == 0.0
    no_hit = CaptionCorpus("i", (("blue",),) * 5, ("blue",) * 5)
    assert scorers.visibility_score(("red",), no_hit) == 1.0

    assert scorers.semantic_score([1.0, 1.0], [1.0, 0.0]) == pytest.approx(
        1 - 1 / math.sqrt(2)
    )
    assert scorers.semantic_score([2.0, 0.0], [5.0, 0.0]) == pytest.approx(0.0)
    assert scorers.semantic_score([1.0, 0.0], [0.0, 3.0]) == pytest.approx(1.0)

    rng = np.random.default_rng(303)
    for _ in range(100):
        low = int(rng.integers(1, 200))
        high = low + int(rng.integers(1, 200))
        rest = int(rng.integers(1, 500))
        corpus = CategoryCorpus(
            category="cat", label_counts={"lo": low, "hi": high, "x": rest},
            total=low + high + rest,
        )
        assert scorers.uniqueness_score(("hi",), corpus) < scorers.uniqueness_score(
            ("lo",), corpus
        )
    ten = CategoryCorpus("cat", {"w": 10}, 10)
    assert scorers.uniqueness_score(("w",), ten) == 0.0
    sparse = CategoryCorpus("cat", {"w": 1, "x": 999}, 1000)
    assert scorers.uniqueness_score(("w",), sparse) == pytest.approx(0.999)
    nine = CategoryCorpus("cat", {"x": 9}, 9)
    assert scorers.uniqueness_score(("new",), nine) == pytest.approx(0.9)

    lexicon = scorers.ConcretenessLexicon(entries={"brick": 5.0, "idea": 1.5}, scale_max=5.0)
    assert scorers.concreteness_score(("brick",), lexicon) == 0.0
    assert scorers.concreteness_score(("idea",), lexicon) == pytest.approx(3.5)
    assert scorers.concreteness_score(("unknownword",), lexicon) is None
    _pass("C3 scorer formula checks")


def test_c4_combination_contract():
    """One-hot weights reproduce the construct's exact rank ordering on 100
    randomized score matrices; calibration clamps negatives and sums to 1."""
    rng = np.random.default_rng(404)
    parts = ("v", "s", "u", "c")
    for _ in range(100):
        n = int(rng.integers(20, 61))
        raw = {p: rng.uniform(0.0, 2.0, size=n) for p in parts}
        hot = parts[int(rng.integers(0, 4))]
        weights = scorers.WeightVector(
            weights={p: 1.0 if p == hot else 0.0 for p in parts}, rho={}
        )
        normalizers = {p: (float(raw[p].min()), float(raw[p].max())) for p in parts}
        combined = []
        for i in range(n):
            scores = scorers.ScoreSet(
                theta_v=float(raw["v"][i]),
                theta_s=float(raw["s"][i]),
                theta_u=float(raw["u"][i]),
                theta_c=float(raw["c"][i]),
            )
            combined.append(scorers.combine(scores, weights, normalizers))
        assert np.array_equal(np.argsort(combined), np.argsort(raw[hot]))

        targets = rng.normal(size=n).tolist()
        columns = {p: raw[p].tolist() for p in parts}
        wv = scorers.calibrate_weights(columns, targets, list(parts))
        assert sum(wv.weights.values()) == pytest.approx(1.0)
        for p in parts:
            assert wv.weights[p] >= 0.0
        if any(r > 0 for r in wv.rho.values()):
            # negative correlations clamp to zero weight
            for p in parts:
                if wv.rho[p] < 0:
                    assert wv.weights[p] == 0.0
        else:
            # documented fallback: uniform weights when nothing correlates
            assert all(w == pytest.approx(0.25) for w in wv.weights.values())
    _pass("C4 combination contract")


# Frozen output of tests/oracle_pipeline.py on the seed-13 fixture
# (regenerate with: python3 tests/oracle_pipeline.py <fixture_dir>).
E2E_EXPECTED = {
    "full": {
        "theta_c": {"all": 0.2970017239, "cat0": 0.3543507195, "cat1": 0.3526206179, "cat2": 0.2829350784, "cat3": 0.1984515168},
        "theta_s": {"all": 0.2291228793, "cat0": 0.2714703876, "cat1": 0.1747038749, "cat2": 0.1944608419, "cat3": 0.2784110914},
        "theta_u": {"all": 0.2624438805, "cat0": 0.2957474767, "cat1": 0.2455757487, "cat2": 0.2840220624, "cat3": 0.2427173497},
        "theta_v": {"all": 0.4672260075, "cat0": 0.4957742583, "cat1": 0.4541728073, "cat2": 0.4985990129, "cat3": 0.4197367429},
        "theta_v+s": {"all": 0.5068566497, "cat0": 0.5395221956, "cat1": 0.4857181904, "cat2": 0.5298336242, "cat3": 0.4702058683},
        "theta_v+s+u": {"all": 0.5792260028, "cat0": 0.6259567163, "cat1": 0.5768773543, "cat2": 0.5877989173, "cat3": 0.5241743296},
        "theta_v+s+u+c": {"all": 0.6457893992, "cat0": 0.6781214545, "cat1": 0.6315505623, "cat2": 0.6543405932, "cat3": 0.6065676352},
    },
    "high_agreement": {
        "theta_c": {"all": 0.4057717984, "cat0": 0.4302914867, "cat1": 0.4981812749, "cat2": 0.4236689761, "cat3": 0.2609168061},
        "theta_s": {"all": 0.3531211264, "cat0": 0.313496463, "cat1": 0.3176143597, "cat2": 0.3251474198, "cat3": 0.4480663619},
        "theta_u": {"all": 0.3949897583, "cat0": 0.3935535096, "cat1": 0.4407539976, "cat2": 0.3937101565, "cat3": 0.376808339},
        "theta_v": {"all": 0.7010182432, "cat0": 0.7563133472, "cat1": 0.6226383314, "cat2": 0.72452796, "cat3": 0.6851246793},
        "theta_v+s": {"all": 0.7657038583, "cat0": 0.7858622916, "cat1": 0.7096277945, "cat2": 0.7747151598, "cat3": 0.7698812998},
        "theta_v+s+u": {"all": 0.8678926503, "cat0": 0.8867215222, "cat1": 0.8645938804, "cat2": 0.8560337984, "cat3": 0.8501687297},
        "theta_v+s+u+c": {"all": 0.9449767887, "cat0": 0.953889112, "cat1": 0.9421359088, "cat2": 0.9350042769, "cat3": 0.9404161666},
    },
}

CONSTRUCT_ROWS = ("theta_v", "theta_s", "theta_u", "theta_c")
COMBO_ROWS = ("theta_v+s", "theta_v+s+u", "theta_v+s+u+c")


@pytest.fixture(scope="module")
def e2e_run(tmp_path_factory):
    fixture_dir = tmp_path_factory.mktemp("e2e")
    start = time.monotonic()
    paths = generate_fixture(fixture_dir)
    assert _run_cli(paths, "evaluate") == 0
    elapsed = time.monotonic() - start
    return paths, elapsed


def test_c5_end_to_end_synthetic_reproduction(e2e_run):
    """(a) every table cell within +-0.05 of the independent oracle's frozen
    values; (b) the high-agreement variant strictly increases every
    construct's correlation; runtime < 60 s."""
    paths, elapsed = e2e_run
    assert elapsed < 60.0, f"end-to-end run took {elapsed:.1f}s"
    full = _table_values(paths["out"], "table2")
    high = _table_values(paths["out"], "table3")
    for variant, got in (("full", full), ("high_agreement", high)):
        for row, cells in E2E_EXPECTED[variant].items():
            for column, want in cells.items():
                assert got[row][column] == pytest.approx(want, abs=0.05), (
                    f"{variant} {row} {column}"
                )
    for row in CONSTRUCT_ROWS:
        assert high[row]["all"] > full[row]["all"], row
    _pass(f"C5 end-to-end synthetic reproduction ({elapsed:.1f}s)")


def test_c6_complementarity_null_check():
    """Four independent-noise constructs (n=10,000) produce a partial
    correlation matrix with all off-diagonals below 0.1."""
    rng = np.random.default_rng(606)
    columns = {name: rng.normal(size=10_000).tolist() for name in ("v", "s", "u", "c")}
    matrix = cstats.construct_partial_matrix(columns)
    off = matrix.values[~np.eye(4, dtype=bool)]
    assert float(np.max(np.abs(off))) < 0.1
    _pass("C6 complementarity null check")


def test_c7_monte_carlo_alignment_direction(e2e_run):
    """The 4-construct combination is at least as aligned as the best
    individual construct (within 0.01) in the synthetic fixture."""
    paths, _ = e2e_run
    for stem in ("table2", "table3"):
        values = _table_values(paths["out"], stem)
        best_individual = max(values[row]["all"] for row in CONSTRUCT_ROWS)
        assert values["theta_v+s+u+c"]["all"] >= best_individual - 0.01
    _pass("C7 Monte Carlo alignment direction")


RELEASE_ENV = "COGSCORE_RELEASE_DIR"


def test_c8_published_number_reproduction():
    """Conditional: exact Table 1 counts and published correlation values,
    given the released dataset plus matching caption/embedding artifacts."""
    release = os.environ.get(RELEASE_ENV)
    if not release:
        pytest.skip(
            f"{RELEASE_ENV} not set: release artifacts unavailable, criterion "
            "reported but not gating"
        )
    release_dir = Path(release)
    paths = {
        "labels": release_dir / "labels.jsonl",
        "captions": release_dir / "captions.jsonl",
        "embeddings_text": release_dir / "embeddings_text.jsonl",
        "embeddings_image": release_dir / "embeddings_image.jsonl",
        "lexicon": release_dir / "lexicon.tsv",
        "out": release_dir / "out",
    }
    assert _run_cli(paths, "report") == 0

    table1 = json.loads((paths["out"] / "table1.json").read_text())
    all_row = next(r for r in table1["rows"] if r["name"] == "all")
    images, labels_n, vocab = (c["value"] for c in all_row["cells"][:3])
    assert (images, labels_n, vocab) == (4093, 45609, 6583)

    full = _table_values(paths["out"], "table2")
    published = {
        "theta_v": 0.225, "theta_s": 0.228, "theta_u": 0.168, "theta_c": 0.160,
        "theta_v+s": 0.250, "theta_v+s+u": 0.261, "theta_v+s+u+c": 0.271,
    }
    for row, want in published.items():
        assert full[row]["all"] == pytest.approx(want, abs=0.03), row

    table4 = _table_values(paths["out"], "table4")
    assert table4["theta_v"]["theta_s"] == pytest.approx(0.343, abs=0.05)
    _pass("C8 published-number reproduction")


def test_c9_performance_at_release_scale(tmp_path):
    """Scoring plus evaluating 45,609 records completes in under 5 minutes."""
    params = SynthParams(
        seed=29,
        n_categories=4,
        images_per_category=1024,
        total_records=45_609,
        captions_per_image=5,
        vocab_per_category=1800,
    )
    paths = generate_fixture(tmp_path, params)  # generation is not timed
    start = time.monotonic()
    assert _run_cli(paths, "evaluate") == 0
    elapsed = time.monotonic() - start
    assert elapsed < 300.0, f"evaluation took {elapsed:.1f}s"
    lines = sum(1 for _ in (paths["out"] / "scores.jsonl").open())
    assert lines == 45_609
    _pass(f"C9 performance at release scale ({elapsed:.1f}s for 45,609 records)")
