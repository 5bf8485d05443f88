"""
Report templates for fits, comparisons, scores and simulations.
"""
from typing import Any, Dict, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from ..models.base import ModelFit
from .components import ReportComponents
from .formatters import ReportFormatters


class ReportTemplates:
    """Plain-text templates for the report.txt of every CLI run."""

    @staticmethod
    def coefficient_table(table: pd.DataFrame, title: Optional[str] = None) -> str:
        """Template for a coefficient table.

        Args:
            table: Rows with name, estimate, se and optionally z and p

        Returns:
            Formatted table string
        """
        fmt = ReportFormatters.format_number
        headers = ["name", "estimate", "se"]
        has_test = "p" in table.columns
        if has_test:
            headers += ["z", "p"]
        rows = []
        for rec in table.to_dict("records"):
            row = [str(rec["name"]), fmt(rec["estimate"]), fmt(rec["se"])]
            if has_test:
                row += [fmt(rec["z"], 3), ReportFormatters.format_pvalue(rec["p"])]
            rows.append(row)
        return ReportComponents.create_table(headers, rows, title)

    @staticmethod
    def fit_summary(title: str, fit: ModelFit, table: Optional[pd.DataFrame] = None,
                    extra: Optional[Mapping[str, Any]] = None) -> str:
        """Template for a fitted model: likelihood statistics and coefficients."""
        fmt = ReportFormatters.format_number
        stats = {
            "logLik": fmt(fit.loglik, 8),
            "AIC": fmt(fit.aic, 8),
            "BIC": fmt(fit.bic, 8),
            "df": fit.df,
            "nobs": fit.n_obs,
            "converged": fit.converged,
            "iterations": fit.iterations,
        }
        stats.update(extra or {})
        lines = [title, "", ReportComponents.create_key_value_grid(stats), ""]
        lines.append(ReportTemplates.coefficient_table(
            fit.coef_table() if table is None else table))
        if fit.fixed:
            lines.extend(["", f"fixed at start values: {', '.join(fit.fixed)}"])
        note = fit.extra.get("aicNote")
        if note:
            lines.extend(["", f"note: {note}"])
        return "\n".join(lines)

    @staticmethod
    def aic_table(table: pd.DataFrame) -> str:
        fmt = ReportFormatters.format_number
        rows = [[str(r["model"]), str(r["df"]), fmt(r["AIC"], 8)]
                for r in table.to_dict("records")]
        return ReportComponents.create_table(["model", "df", "AIC"], rows, "Model comparison")

    @staticmethod
    def profile_summary(profiles: Mapping[str, Mapping[str, Any]], level: float = 0.95) -> str:
        """Template for profile-likelihood intervals next to Wald intervals."""
        fmt = ReportFormatters.format_interval
        rows = []
        for name, result in profiles.items():
            failed = int(result["grid"]["failed"].sum())
            rows.append([name, fmt(result["hl"]), fmt(result["wald"]), str(failed)])
        return ReportComponents.create_table(
            ["parameter", f"profile {level:.0%}", f"Wald {level:.0%}", "failed"],
            rows, "Profile likelihood")

    @staticmethod
    def score_summary(means: pd.DataFrame, title: str = "Mean scores") -> str:
        fmt = ReportFormatters.format_number
        index = means.index.name or "set"
        headers = [index, *means.columns]
        rows = [[str(label), *[fmt(v) for v in values]]
                for label, values in zip(means.index, means.to_numpy())]
        return ReportComponents.create_table(headers, rows, title)

    @staticmethod
    def permutation_summary(result: Mapping[str, float]) -> str:
        return ReportComponents.create_key_value_grid({
            "diffObs": ReportFormatters.format_number(result["diffObs"]),
            "pVal.permut": ReportFormatters.format_pvalue(result["pVal.permut"]),
            "pVal.t": ReportFormatters.format_pvalue(result["pVal.t"]),
        }, columns=3)

    @staticmethod
    def pit_summary(heights: Sequence[float]) -> str:
        n = len(heights)
        rows = [[str(j + 1), f"({j / n:.2f}, {(j + 1) / n:.2f}]",
                 ReportFormatters.format_number(h)] for j, h in enumerate(heights)]
        return ReportComponents.create_table(["bin", "interval", "height"], rows, "PIT histogram")

    @staticmethod
    def simulation_summary(kind: str, sizes: Sequence[int], seed: int) -> str:
        """Template for final sizes of simulated replicates."""
        sizes = np.asarray(sizes)
        stats: Dict[str, Any] = {
            "model": kind,
            "replicates": sizes.size,
            "seed": seed,
            "mean size": ReportFormatters.format_number(
                float(sizes.mean()) if sizes.size else None),
            "min size": int(sizes.min()) if sizes.size else "NA",
            "max size": int(sizes.max()) if sizes.size else "NA",
        }
        return "Simulation\n\n" + ReportComponents.create_key_value_grid(stats)
