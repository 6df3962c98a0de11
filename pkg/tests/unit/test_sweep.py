"""Tests for the gate-count sweep."""

import csv

import pytest

from qfacerec.core.errors import QubitBudgetError
from qfacerec.core.sweep import COLUMNS, TRACE_WIDTH, gate_count_sweep, linear_fit, write_sweep_csv


def test_qft_rows_follow_closed_form():
    """Test QFT rows log m(m+1)/2 gates."""
    rows = gate_count_sweep([2, 3, 4, 5], [2], families=["qft"])
    assert [(row.n, row.log.total) for row in rows] == [(2, 3), (3, 6), (4, 10), (5, 15)]


def test_trace_counts_linear_in_dimension():
    """Test trace gate counts fit a line in N with R² > 0.99."""
    rows = gate_count_sweep([3], list(range(2, 9)), families=["trace"])
    fit = linear_fit(rows, "trace", 3)
    assert fit.r_squared > 0.99
    assert fit.slope == pytest.approx(TRACE_WIDTH * (TRACE_WIDTH + 1) / 2)


def test_determinant_counts_grow_with_dimension():
    """Test determinant rows exist per N and grow with it."""
    rows = gate_count_sweep([3], [2, 3, 4], families=["determinant"])
    totals = [row.log.total for row in rows]
    assert [row.N for row in rows] == [2, 3, 4]
    assert totals == sorted(totals)
    assert totals[0] < totals[-1]
    assert linear_fit(rows, "determinant", 3).r_squared > 0.9


def test_all_families_grid():
    """Test every family appears at every grid point."""
    rows = gate_count_sweep([2, 3], [2, 4])
    families = {(row.family, row.n, row.N) for row in rows}
    assert ("qft", 2, 1) in families
    assert ("hhl", 3, 4) in families
    assert len(rows) == 2 * (1 + 3 * 2)


def test_budget_checked_before_running():
    """Test a grid point over the qubit budget raises."""
    with pytest.raises(QubitBudgetError):
        gate_count_sweep([8], [4], max_qubits=10)


def test_unknown_family():
    """Test unknown families raise."""
    with pytest.raises(ValueError):
        gate_count_sweep([2], [2], families=["grover"])


def test_empty_grid():
    """Test an empty grid raises."""
    with pytest.raises(ValueError):
        gate_count_sweep([], [2])


def test_linear_fit_needs_two_points():
    """Test a single row cannot be fitted."""
    rows = gate_count_sweep([2], [2], families=["trace"])
    with pytest.raises(ValueError):
        linear_fit(rows, "trace", 2)


def test_write_sweep_csv(tmp_path):
    """Test the CSV has the fixed header and one line per row."""
    rows = gate_count_sweep([2], [2, 3], families=["qft", "trace"])
    path = write_sweep_csv(rows, tmp_path / "out" / "gate_counts.csv")
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        records = list(reader)
    assert reader.fieldnames == COLUMNS
    assert len(records) == len(rows)
    assert records[0]["family"] == "qft"
    assert int(records[0]["total"]) == 3
