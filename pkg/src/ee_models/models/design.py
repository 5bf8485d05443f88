"""
Design helpers shared by the engines: formula terms, harmonic season
columns and treatment-coded dummies.
"""
import re
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

_TERM = re.compile(r"^\s*(?:(log)\(\s*([A-Za-z_][\w.]*)\s*\)|([A-Za-z_][\w.]*))\s*$")


def parse_term(term: str) -> Tuple[str, bool]:
    """Split "name" or "log(name)" into (name, is_log).

    Raises:
        ValueError: For any other expression
    """
    match = _TERM.match(term)
    if match is None:
        raise ValueError(f"invalid term '{term}': expected 'name' or 'log(name)'")
    if match.group(1):
        return match.group(2), True
    return match.group(3), False


def term_values(term: str, variables: Dict[str, np.ndarray]) -> np.ndarray:
    """Evaluate a term against named arrays; log requires positive values."""
    name, is_log = parse_term(term)
    if name not in variables:
        raise ValueError(f"covariate '{name}' of term '{term}' not found")
    values = np.asarray(variables[name], dtype=float)
    if not is_log:
        return values
    if np.any(values <= 0):
        raise ValueError(f"invalid term '{term}': '{name}' has nonpositive values")
    return np.log(values)


def _fmt(value: float) -> str:
    return f"{value:g}"


def season_names(S: int, period: float, timevar: str = "t") -> List[str]:
    names = []
    for s in range(1, S + 1):
        freq = "2 * pi" if s == 1 else f"{2 * s} * pi"
        names.append(f"sin({freq} * {timevar}/{_fmt(period)})")
        names.append(f"cos({freq} * {timevar}/{_fmt(period)})")
    return names


def season_columns(time: np.ndarray, S: int, period: float,
                   timevar: str = "t") -> Dict[str, np.ndarray]:
    """sin(s w t), cos(s w t) for s = 1..S with w = 2 pi / period.

    Raises:
        ValueError: If S < 1 or period <= 0
    """
    if S < 1:
        raise ValueError(f"number of harmonics S must be at least 1, got {S}")
    if not period > 0:
        raise ValueError(f"period must be positive, got {period}")
    time = np.asarray(time, dtype=float)
    omega = 2 * np.pi / period
    names = season_names(S, period, timevar)
    columns = {}
    for s in range(1, S + 1):
        columns[names[2 * s - 2]] = np.sin(s * omega * time)
        columns[names[2 * s - 1]] = np.cos(s * omega * time)
    return columns


def amplitude_shift(gamma: float, delta: float) -> Tuple[float, float]:
    """(A, phi) with gamma sin(wt) + delta cos(wt) = A sin(wt + phi)."""
    return float(np.hypot(gamma, delta)), float(np.arctan2(delta, gamma))


def treatment_dummies(values: pd.Series, name: str,
                      levels: Optional[Sequence[str]] = None) -> Dict[str, np.ndarray]:
    """0/1 columns for every level but the first, named <name><level>."""
    as_str = values.astype(str)
    if levels is None:
        if isinstance(values.dtype, pd.CategoricalDtype):
            levels = [str(c) for c in values.cat.categories]
        else:
            levels = sorted(pd.unique(as_str))
    return {f"{name}{level}": (as_str == level).to_numpy(dtype=float) for level in levels[1:]}


def is_categorical(values: pd.Series) -> bool:
    return not pd.api.types.is_numeric_dtype(values) or isinstance(values.dtype,
                                                                   pd.CategoricalDtype)
