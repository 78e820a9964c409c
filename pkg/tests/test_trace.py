"""Tests for the CSV trace and the final-iterate sidecar."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from riptrm.bench.analytic import build_analytic_1d
from riptrm.bench.trace import (
    COLUMNS,
    read_final_sidecar,
    read_trace_csv,
    records_from_trace,
    sidecar_path,
    write_final_sidecar,
    write_trace_csv,
)
from riptrm.errors import TraceFormatError
from riptrm.manifolds.sphere import Sphere
from riptrm.problem.models import PrimalDualPair
from riptrm.solver.models import OuterConfig, VirtualClock
from riptrm.solver.outer import outer_solve

if TYPE_CHECKING:
    from pathlib import Path

    from riptrm.bench.trace import RunRecord


@pytest.fixture()
def records() -> list[RunRecord]:
    """Rows of a short analytic run."""
    problem, w0 = build_analytic_1d()
    result = outer_solve(problem, w0, OuterConfig(max_outer=3), clock=VirtualClock())
    return records_from_trace(result.trace)


class TestRecordsFromTrace:
    """Flattening solver events into rows."""

    def test_rows_follow_the_events(self, records: list[RunRecord]) -> None:
        outer_rows = [r for r in records if r.is_outer]

        assert records[0].is_outer
        assert records[0].status == "initial"
        assert [r.outer_iter for r in outer_rows] == [0, 1, 2, 3]
        assert records[-1].is_outer

    def test_inner_rows_carry_step_data(self, records: list[RunRecord]) -> None:
        inner = [r for r in records if not r.is_outer]

        assert inner
        assert all(r.d_norm is not None and r.min_eig_H is None for r in inner)
        assert all(r.inner_iter is not None and r.inner_iter >= 0 for r in inner)


class TestTraceCsv:
    """Writing and parsing the CSV."""

    def test_round_trip(self, tmp_path: Path, records: list[RunRecord]) -> None:
        # Arrange
        path = tmp_path / "trace.csv"

        # Act
        write_trace_csv(path, records)
        parsed = read_trace_csv(path)

        # Assert
        assert parsed == records

    def test_header_and_booleans(
        self, tmp_path: Path, records: list[RunRecord]
    ) -> None:
        path = tmp_path / "trace.csv"

        write_trace_csv(path, records)
        lines = path.read_text(encoding="utf-8").splitlines()

        assert lines[0] == ",".join(COLUMNS)
        assert len(lines) == len(records) + 1
        assert any(",true," in line for line in lines[1:])

    def test_wrong_header_raises(self, tmp_path: Path) -> None:
        path = tmp_path / "trace.csv"
        path.write_text("outer_iter,mu\n1,0.1\n", encoding="utf-8")

        with pytest.raises(TraceFormatError, match="expected header"):
            read_trace_csv(path)

    def test_unparsable_field_names_the_row(
        self, tmp_path: Path, records: list[RunRecord]
    ) -> None:
        # Arrange
        path = tmp_path / "trace.csv"
        write_trace_csv(path, records)
        lines = path.read_text(encoding="utf-8").splitlines()
        lines[2] = "abc" + lines[2][lines[2].index(",") :]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")

        # Act & Assert
        with pytest.raises(TraceFormatError, match="Row 3: cannot parse 'abc'"):
            read_trace_csv(path)

    def test_short_row_raises(self, tmp_path: Path) -> None:
        path = tmp_path / "trace.csv"
        path.write_text(",".join(COLUMNS) + "\n1,2\n", encoding="utf-8")

        with pytest.raises(TraceFormatError, match="Row 2: expected"):
            read_trace_csv(path)

    def test_missing_file_raises(self, tmp_path: Path) -> None:
        with pytest.raises(TraceFormatError, match="Cannot read trace"):
            read_trace_csv(tmp_path / "absent.csv")

    def test_required_column_must_not_be_empty(
        self, tmp_path: Path, records: list[RunRecord]
    ) -> None:
        path = tmp_path / "trace.csv"
        write_trace_csv(path, records[:1])
        header, row = path.read_text(encoding="utf-8").splitlines()
        path.write_text(f"{header}\n,{row.split(',', 1)[1]}\n", encoding="utf-8")

        with pytest.raises(TraceFormatError, match="'outer_iter' must not be empty"):
            read_trace_csv(path)


class TestFinalSidecar:
    """The JSON file holding the final iterate and settings."""

    def test_sidecar_name(self, tmp_path: Path) -> None:
        out = tmp_path / "run.csv"

        assert sidecar_path(out).name == "run.csv.final.json"

    def test_round_trip(self, tmp_path: Path) -> None:
        # Arrange
        sphere = Sphere(3)
        w = PrimalDualPair(x=sphere.sample_point(4), lam=np.array([0.5, 2.0]))
        out = tmp_path / "run.csv"

        # Act
        write_final_sidecar(out, sphere, w, {"problem": "analytic-1d", "seed": 4})
        settings, loaded = read_final_sidecar(out, sphere)

        # Assert
        assert settings == {"problem": "analytic-1d", "seed": 4}
        assert loaded is not None
        np.testing.assert_array_equal(loaded.x, w.x)
        np.testing.assert_array_equal(loaded.lam, w.lam)

    def test_settings_only(self, tmp_path: Path) -> None:
        out = tmp_path / "run.csv"
        write_final_sidecar(
            out, Sphere(3), PrimalDualPair(x=Sphere(3).sample_point(0), lam=[]), {}
        )

        settings, loaded = read_final_sidecar(out)

        assert settings == {}
        assert loaded is None

    def test_missing_sidecar_raises(self, tmp_path: Path) -> None:
        with pytest.raises(TraceFormatError, match="Cannot read final iterate"):
            read_final_sidecar(tmp_path / "run.csv")
