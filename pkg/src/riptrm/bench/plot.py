"""Generate a gnuplot script that draws a trace CSV."""

from __future__ import annotations

from typing import TYPE_CHECKING

from riptrm.bench.trace import COLUMNS

if TYPE_CHECKING:
    from pathlib import Path


def _column(name: str) -> int:
    return COLUMNS.index(name) + 1


def _outer_only(name: str) -> str:
    """Gnuplot expression for column ``name`` on outer-summary rows, else NaN."""
    return f"(strcol({_column('inner_iter')}) eq '' ? ${_column(name)} : NaN)"


def _quote(text: str) -> str:
    return "'" + text.replace("'", "''") + "'"


def gnuplot_script(csv_path: Path, title: str = "") -> str:
    """Two stacked panels over elapsed time, both from the outer-summary rows.

    The top panel shows the KKT residual on a log axis; the bottom one shows
    ``atan`` of the second-order measure together with the zero line.
    """
    data = _quote(str(csv_path))
    time_col = _column("elapsed_s")
    measure = _outer_only("second_order_measure")
    return "\n".join(
        [
            "set datafile separator ','",
            f"set multiplot layout 2,1 title {_quote(title or csv_path.stem)}",
            "set xlabel 'elapsed time [s]'",
            "set ylabel 'KKT residual'",
            "set logscale y",
            "set format y '10^{%T}'",
            f"plot {data} using {time_col}:{_outer_only('residual_total')} "
            "with linespoints title 'residual'",
            "unset logscale y",
            "set format y '%g'",
            "set ylabel 'atan(second-order measure)'",
            "set yrange [-pi/2:pi/2]",
            f"plot {data} using {time_col}:(atan({measure})) "
            "with linespoints title 'second order', 0 with lines dt 2 notitle",
            "unset multiplot",
            "",
        ]
    )


def write_plot_script(path: Path, csv_path: Path, title: str = "") -> None:
    path.write_text(gnuplot_script(csv_path, title), encoding="utf-8")
