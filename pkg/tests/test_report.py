import pytest

from cogscore import report, scorers, stats
from cogscore.dataset import StatsTable, StatsRow
from cogscore.errors import SchemaError
from cogscore.report import Cell, TableDoc

from conftest import make_labelset
from oracles import spearman_oracle


def matrix_from(rows):
    """rows: (image_id, label, theta dict)"""
    out = []
    for image_id, label, thetas in rows:
        out.append(
            scorers.ScoreRow(
                image_id=image_id,
                label=label,
                scores=scorers.ScoreSet(**thetas),
            )
        )
    return scorers.ScoreMatrix(out)


@pytest.fixture
def aligned_fixture():
    """Mean ratings strictly track theta_v within and across categories."""
    rows = []
    matrix_rows = []
    counter = 0
    for cat, images in (("furn", ("f1", "f2")), ("deco", ("d1", "d2"))):
        for image_id in images:
            for j in range(3):
                rating = (counter + j) % 5
                label = f"w{image_id}{j}"
                rows.append((image_id, cat, label, (rating,)))
                matrix_rows.append(
                    (
                        image_id,
                        label,
                        {
                            "theta_v": rating / 4.0,
                            "theta_s": float((j * 7 + counter) % 5),
                            "theta_u": float((j * 3 + counter) % 4),
                            "theta_c": float(j),
                        },
                    )
                )
            counter += 1
    return make_labelset(rows), matrix_from(matrix_rows)


class TestCorrelationTable:
    def test_perfect_alignment_row_is_one(self, aligned_fixture):
        labels, matrix = aligned_fixture
        table = report.correlation_table(labels, matrix, combinations=[("v", "s")])
        for column in table.columns:
            cell = table.cell("theta_v", column)
            assert cell.n >= 3
            assert cell.value == pytest.approx(1.0)

    def test_all_column_is_pooled_not_averaged(self):
        # perfect within-category alignment, reversed across categories
        rows = []
        matrix_rows = []
        spec = {
            "a": [(0, 0.90), (1, 0.95), (2, 1.00)],
            "b": [(2, 0.10), (3, 0.15), (4, 0.20)],
        }
        for cat, entries in spec.items():
            for j, (rating, theta) in enumerate(entries):
                image_id = f"{cat}img"
                label = f"w{cat}{j}"
                rows.append((image_id, cat, label, (rating,)))
                matrix_rows.append(
                    (image_id, label, {"theta_v": theta, "theta_s": 1.0 - theta, "theta_u": 0.5 + theta, "theta_c": None})
                )
        labels = make_labelset(rows)
        matrix = matrix_from(matrix_rows)
        table = report.correlation_table(labels, matrix, combinations=[("v", "s")])
        per_cat = [table.cell("theta_v", c).value for c in ("a", "b")]
        pooled = table.cell("theta_v", "all").value
        assert per_cat == [pytest.approx(1.0), pytest.approx(1.0)]
        # independent check of the pooled value
        vs = [t for _, entries in spec.items() for _, t in entries]
        rs = [float(r) for _, entries in spec.items() for r, _ in entries]
        assert pooled == pytest.approx(spearman_oracle(vs, rs))
        assert pooled < 0 < sum(per_cat) / 2

    def test_high_agreement_variant_filters(self):
        rows = []
        matrix_rows = []
        # agreeing image: two raters give identical vectors; disagreeing: reversed
        for image_id, vec_b in (("good", [0, 1, 2, 3]), ("bad", [3, 2, 1, 0])):
            for j, r_a in enumerate([0, 1, 2, 3]):
                label = f"w{image_id}{j}"
                rows.append((image_id, "cat", label, (r_a, vec_b[j]), ("ra", "rb")))
                matrix_rows.append(
                    (image_id, label, {"theta_v": j / 3, "theta_s": 0.1 * j, "theta_u": 0.2, "theta_c": None})
                )
        labels = make_labelset(rows)
        matrix = matrix_from(matrix_rows)
        full = report.correlation_table(labels, matrix, "full", combinations=[("v", "s")])
        high = report.correlation_table(labels, matrix, "high_agreement", 0.75, combinations=[("v", "s")])
        assert full.meta["records"] == 8
        assert high.meta["records"] == 4
        assert high.meta["threshold"] == 0.75

    def test_combination_rows_present_and_weights_logged(self, aligned_fixture):
        labels, matrix = aligned_fixture
        table = report.correlation_table(
            labels, matrix, combinations=[("v", "s"), ("v", "s", "u", "c")]
        )
        names = [name for name, _ in table.rows]
        assert names == [
            "theta_v",
            "theta_s",
            "theta_u",
            "theta_c",
            "theta_v+s",
            "theta_v+s+u+c",
        ]
        assert set(table.weights) == {"v+s", "v+s+u+c"}
        for weights in table.weights.values():
            assert sum(weights.values()) == pytest.approx(1.0)

    def test_per_category_fit(self, aligned_fixture):
        labels, matrix = aligned_fixture
        table = report.correlation_table(
            labels, matrix, combinations=[("v", "s")], per_category_fit=True
        )
        # per-category weight entries logged alongside the global one
        assert {"v+s", "v+s[furn]", "v+s[deco]"} <= set(table.weights)
        for column in table.columns:
            cell = table.cell("theta_v+s", column)
            assert cell.n >= 3 and cell.value is not None

    def test_unknown_variant(self, aligned_fixture):
        labels, matrix = aligned_fixture
        with pytest.raises(SchemaError):
            report.correlation_table(labels, matrix, "nope")

    def test_small_cells_render_missing(self):
        rows = [("i1", "tiny", f"w{j}", (j,)) for j in range(2)]
        matrix_rows = [
            ("i1", f"w{j}", {"theta_v": j / 4, "theta_s": 0.5, "theta_u": 0.5, "theta_c": None})
            for j in range(2)
        ]
        table = report.correlation_table(
            make_labelset(rows), matrix_from(matrix_rows), combinations=[]
        )
        cell = table.cell("theta_v", "tiny")
        assert cell.value is None and cell.n == 2
        rendered = report.render(table, "csv").decode()
        assert "—" in rendered


SMALL_DOC = TableDoc(
    name="t",
    columns=("c1",),
    col_kinds=("corr",),
    rows=(("r1", (Cell(value=0.5, n=5),)),),
    meta={"variant": "full"},
)


class TestRender:
    def test_csv_single_row(self):
        rendered = report.render(SMALL_DOC, "csv").decode()
        lines = rendered.strip().split("\n")
        assert lines == ["row,c1", "r1,0.500"]

    def test_deterministic(self, aligned_fixture):
        labels, matrix = aligned_fixture
        table = report.correlation_table(labels, matrix, combinations=[("v", "s")])
        for fmt in ("csv", "markdown", "json"):
            assert report.render(table, fmt) == report.render(table, fmt)

    def test_markdown_parse_back(self):
        rows = tuple(
            (f"r{i}", tuple(Cell(value=0.1 * i + 0.01 * j, n=9) for j in range(5)))
            for i in range(4)
        )
        doc = TableDoc(
            name="grid",
            columns=tuple(f"c{j}" for j in range(5)),
            col_kinds=tuple("corr" for _ in range(5)),
            rows=rows,
            meta={},
        )
        lines = report.render(doc, "markdown").decode().strip().split("\n")
        assert len(lines) == 2 + 4  # header + separator + rows
        header = [h.strip() for h in lines[0].strip("|").split("|")]
        assert header == ["row", "c0", "c1", "c2", "c3", "c4"]
        for i, line in enumerate(lines[2:]):
            cells = [c.strip() for c in line.strip("|").split("|")]
            assert len(cells) == 6
            assert cells[0] == f"r{i}"
            for j, value in enumerate(cells[1:]):
                assert value == f"{0.1 * i + 0.01 * j:.3f}"

    def test_json_round_trip_exact(self, aligned_fixture):
        labels, matrix = aligned_fixture
        table = report.correlation_table(labels, matrix, combinations=[("v", "s")])
        doc = report.to_doc(table)
        parsed = report.doc_from_json(report.render(table, "json"))
        assert parsed == doc

    def test_json_carries_full_precision_and_n(self):
        value = 1 / 3
        doc = TableDoc(
            name="t", columns=("c",), col_kinds=("corr",),
            rows=(("r", (Cell(value=value, n=7),)),), meta={},
        )
        parsed = report.doc_from_json(report.render(doc, "json"))
        assert parsed.rows[0][1][0].value == value  # bit-exact via JSON repr round trip
        assert parsed.rows[0][1][0].n == 7

    def test_stats_table_render(self):
        table = StatsTable(
            rows=(
                StatsRow("furn", 2, 6, 5, 1.75, 0.94),
                StatsRow("all", 2, 6, 5, 1.75, 0.94),
            )
        )
        rendered = report.render(table, "csv").decode()
        assert "furn,2,6,5,1.75,0.94" in rendered

    def test_correlation_matrix_render(self, rng):
        columns = {name: rng.normal(size=40).tolist() for name in ("v", "s", "u")}
        matrix = stats.construct_partial_matrix(columns)
        doc = report.to_doc(matrix)
        assert doc.columns == ("v", "s", "u")
        assert report.doc_from_json(report.render(matrix, "json")) == doc

    def test_unknown_format(self):
        with pytest.raises(SchemaError):
            report.render(SMALL_DOC, "xml")
