"""
Number formatting for report tables.
"""
import math
from typing import Optional, Tuple


class ReportFormatters:
    """Core formatting functions for estimates and statistics."""

    @staticmethod
    def format_number(value: Optional[float], digits: int = 4) -> str:
        """Format a value with significant digits; NaN and None as "NA".

        Args:
            value: Number to format
            digits: Significant digits

        Returns:
            Formatted string
        """
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return "NA"
        if isinstance(value, float) and math.isinf(value):
            return "Inf" if value > 0 else "-Inf"
        return f"{value:.{digits}g}"

    @staticmethod
    def format_pvalue(p: Optional[float]) -> str:
        """Format a p-value, printing tiny values as an upper bound."""
        if p is None or math.isnan(p):
            return "NA"
        if p < 1e-4:
            return "<1e-04"
        return f"{p:.4f}"

    @staticmethod
    def format_interval(interval: Tuple[float, float], digits: int = 4) -> str:
        lo, hi = interval
        return (f"[{ReportFormatters.format_number(lo, digits)}, "
                f"{ReportFormatters.format_number(hi, digits)}]")

    @staticmethod
    def format_seconds(seconds: float) -> str:
        """Format a wall-clock duration as e.g. "1m 02.5s"."""
        minutes, rest = divmod(float(seconds), 60.0)
        if minutes >= 1:
            return f"{int(minutes)}m {rest:04.1f}s"
        return f"{rest:.2f}s"
