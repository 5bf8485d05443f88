"""
Reusable plain-text components for reports.
"""
from typing import Any, List, Mapping, Optional


class ReportComponents:
    """Reusable building blocks for plain-text report output."""

    @staticmethod
    def create_table(headers: List[str], rows: List[List[str]], title: Optional[str] = None,
                     align_right: bool = True) -> str:
        """Create an ASCII table with optional title.

        Args:
            headers: List of column headers
            rows: List of row data
            title: Optional table title
            align_right: Right-align every column except the first

        Returns:
            Formatted table string
        """
        widths = [len(header) for header in headers]
        for row in rows:
            for i, cell in enumerate(row):
                cell_lines = str(cell).split('\n')
                widths[i] = max(widths[i], max(len(line) for line in cell_lines))

        separator = "+" + "+".join("-" * (w + 2) for w in widths) + "+"
        total_width = sum(widths) + 3 * len(widths) + 1

        result = []
        if title:
            padding = (total_width - len(title) - 2) // 2
            title_separator = "+" + "-" * (total_width - 2) + "+"
            result.extend([
                title_separator,
                "|" + " " * padding + title + " " * (total_width - padding - len(title) - 2) + "|",
            ])

        def cell_text(text: str, col: int) -> str:
            if align_right and col > 0:
                return f" {text:>{widths[col]}} "
            return f" {text:<{widths[col]}} "

        header = "|" + "|".join(cell_text(h, i) for i, h in enumerate(headers)) + "|"
        result.extend([separator, header, separator])

        # Multi-line cells are padded to the tallest cell of the row
        for row in rows:
            cell_lines = [str(cell).split('\n') for cell in row]
            max_lines = max(len(lines) for lines in cell_lines)
            for lines in cell_lines:
                lines.extend([''] * (max_lines - len(lines)))
            for line_idx in range(max_lines):
                parts = [cell_text(lines[line_idx], col) for col, lines in enumerate(cell_lines)]
                result.append("|" + "|".join(parts) + "|")

        result.append(separator)
        return "\n".join(result)

    @staticmethod
    def create_key_value_grid(data: Mapping[str, Any], columns: int = 2) -> str:
        """Create a grid of key-value pairs.

        Args:
            data: Dictionary of key-value pairs
            columns: Number of columns in grid

        Returns:
            Formatted grid string
        """
        items = [(f"{key}:", str(val)) for key, val in data.items()]
        rows = [items[i:i + columns] for i in range(0, len(items), columns)]

        key_widths = [0] * columns
        val_widths = [0] * columns
        for row in rows:
            for i, (key, val) in enumerate(row):
                key_widths[i] = max(key_widths[i], len(key))
                val_widths[i] = max(val_widths[i], len(val))

        result = []
        for row in rows:
            formatted = [f"{key:<{key_widths[i]}} {val:<{val_widths[i]}}"
                         for i, (key, val) in enumerate(row)]
            result.append("  ".join(formatted).rstrip())
        return "\n".join(result)
