"""
Tests for plain-text report formatting.
"""

import math
import re

import numpy as np
import pandas as pd

from ee_models.formatting import ReportComponents, ReportFormatters, ReportTemplates
from ee_models.models import ModelFit


def test_table_layout():
    table = ReportComponents.create_table(["name", "value"], [["a", "1"], ["bb", "22"]],
                                          title="T")
    lines = table.split("\n")
    assert lines[0] == "+" + "-" * (len(lines[2]) - 2) + "+"
    assert "| name | value |" in lines
    assert "| a    |     1 |" in lines
    assert all(len(line) == len(lines[0]) for line in lines)


def test_multiline_cells():
    table = ReportComponents.create_table(["a", "b"], [["x\ny", "1"]], align_right=False)
    assert "| y |   |" in table


def test_key_value_grid():
    grid = ReportComponents.create_key_value_grid({"a": 1, "long key": "v", "c": 3}, columns=2)
    assert grid.split("\n") == ["a: 1  long key: v", "c: 3"]


def test_number_formats():
    assert ReportFormatters.format_number(math.nan) == "NA"
    assert ReportFormatters.format_number(None) == "NA"
    assert ReportFormatters.format_number(-math.inf) == "-Inf"
    assert ReportFormatters.format_number(0.123456789) == "0.1235"
    assert ReportFormatters.format_pvalue(1e-7) == "<1e-04"
    assert ReportFormatters.format_pvalue(0.25) == "0.2500"
    assert ReportFormatters.format_interval((0.5, 2.0)) == "[0.5, 2]"
    assert ReportFormatters.format_seconds(62.5) == "1m 02.5s"
    assert ReportFormatters.format_seconds(3.14159) == "3.14s"


def test_fit_summary():
    fit = ModelFit(names=("end.1", "overdisp"), coefficients=np.array([0.5, -1.0]),
                   cov=np.diag([0.01, 0.04]), loglik=-100.0, converged=True, n_obs=50,
                   fixed=("overdisp",), extra={"aicNote": "plain AIC"})
    text = ReportTemplates.fit_summary("hhh4 fit", fit)
    assert text.startswith("hhh4 fit")
    assert "logLik:" in text and "-100" in text
    assert "fixed at start values: overdisp" in text
    assert "note: plain AIC" in text


def test_score_and_permutation_summaries():
    means = pd.DataFrame({"logs": [1.09], "rps": [0.736]}, index=pd.Index(["all"], name="set"))
    text = ReportTemplates.score_summary(means)
    assert "| all |" in text and "0.736" in text
    summary = ReportTemplates.permutation_summary({"diffObs": 0.00782, "pVal.permut": 0.863,
                                                   "pVal.t": 0.7})
    assert "diffObs: 0.00782" in summary


def test_pit_and_simulation_summaries():
    text = ReportTemplates.pit_summary([0.5, 1.5])
    assert "(0.00, 0.50]" in text and "(0.50, 1.00]" in text
    sim = ReportTemplates.simulation_summary("hhh4", [10, 20], seed=7)
    assert re.search(r"mean size:\s+15\b", sim)
    assert "seed:" in sim
