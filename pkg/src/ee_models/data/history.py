"""
SIR event histories in counting-process format.

The observation period (t0, T] is split into consecutive blocks at every
infection, removal and endemic-covariate change. Within a block every
individual's state, covariates and epidemic terms are constant, so the
twinSIR intensities are piecewise constant.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist

from ..config.models import DistanceBasisSpec, PairIndicatorSpec

logger = logging.getLogger("ee-models.data")

BREAK_TOLERANCE = 1e-9
TABLE_COLUMNS = ("BLOCK", "id", "start", "stop", "atRiskY", "event", "Revent", "x", "y")
INFECTIOUS_COLUMN = "infectious"


@dataclass(frozen=True)
class DistanceBasis:
    """Indicator B(u) = 1(u in interval) of the pairwise distance u."""

    lower: float = 0.0
    upper: float = np.inf
    lower_closed: bool = True
    upper_closed: bool = False

    @classmethod
    def from_spec(cls, spec: DistanceBasisSpec) -> "DistanceBasis":
        return cls(spec.lower, spec.upper, spec.lowerClosed, spec.upperClosed)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        above = u >= self.lower if self.lower_closed else u > self.lower
        below = u <= self.upper if self.upper_closed else u < self.upper
        return (above & below).astype(float)


@dataclass(frozen=True)
class PairIndicator:
    """w_ij = 1 when individuals i and j both have ``value`` in ``column``."""

    column: str
    value: Any

    @classmethod
    def from_spec(cls, spec: PairIndicatorSpec) -> "PairIndicator":
        return cls(spec.column, spec.value)

    def matrix(self, individuals: pd.DataFrame) -> np.ndarray:
        if self.column not in individuals.columns:
            raise ValueError(f"pair covariate column '{self.column}' not found in individuals")
        hit = (individuals[self.column].astype(str) == str(self.value)).to_numpy()
        return np.outer(hit, hit).astype(float)


Basis = Union[DistanceBasis, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class EventHistory:
    """Block-structured SIR data.

    Arrays indexed (block, individual): ``at_risk`` (Y_i(t)), ``infectious``
    and every entry of ``columns`` (endemic covariates z_i(t) and epidemic
    terms x_i(t)). ``event[b]`` / ``revent[b]`` give the individual infected /
    removed at the stop time of block b, or -1.
    """

    individuals: pd.DataFrame
    t0: float
    T: float
    block_bounds: np.ndarray
    at_risk: np.ndarray
    infectious: np.ndarray
    event: np.ndarray
    revent: np.ndarray
    columns: Dict[str, np.ndarray]
    term_names: Tuple[str, ...] = ()
    infection_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    removal_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis_fns: Dict[str, Basis] = field(default_factory=dict)
    pair_covariates: Dict[str, PairIndicator] = field(default_factory=dict)
    time_varying: Optional[pd.DataFrame] = None

    @property
    def n_blocks(self) -> int:
        return int(self.block_bounds.shape[0])

    @property
    def n_individuals(self) -> int:
        return len(self.individuals)

    @property
    def ids(self) -> list[str]:
        return [str(i) for i in self.individuals["id"]]

    @property
    def durations(self) -> np.ndarray:
        return self.block_bounds[:, 1] - self.block_bounds[:, 0]

    @property
    def coords(self) -> np.ndarray:
        return self.individuals[["x", "y"]].to_numpy(dtype=float)

    @cached_property
    def distances(self) -> np.ndarray:
        return cdist(self.coords, self.coords)

    def term_matrices(self, names: Sequence[str]) -> np.ndarray:
        """(blocks, individuals, len(names)) stack of the named columns."""
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise ValueError(f"term '{missing[0]}' not found in the event history")
        if not names:
            return np.zeros((self.n_blocks, self.n_individuals, 0))
        return np.stack([self.columns[n] for n in names], axis=-1)

    @cached_property
    def table(self) -> pd.DataFrame:
        """Long format: one row per (block, individual)."""
        B, N = self.n_blocks, self.n_individuals
        rows = {
            "BLOCK": np.repeat(np.arange(1, B + 1), N),
            "id": np.tile(self.individuals["id"].to_numpy(), B),
            "start": np.repeat(self.block_bounds[:, 0], N),
            "stop": np.repeat(self.block_bounds[:, 1], N),
            "atRiskY": self.at_risk.astype(int).ravel(),
            INFECTIOUS_COLUMN: self.infectious.astype(int).ravel(),
            "event": np.zeros(B * N, dtype=int),
            "Revent": np.zeros(B * N, dtype=int),
            "x": np.tile(self.individuals["x"].to_numpy(float), B),
            "y": np.tile(self.individuals["y"].to_numpy(float), B),
        }
        blocks = np.arange(B)
        hit = self.event >= 0
        rows["event"][blocks[hit] * N + self.event[hit]] = 1
        hit = self.revent >= 0
        rows["Revent"][blocks[hit] * N + self.revent[hit]] = 1
        out = pd.DataFrame(rows)
        for col in self.individuals.columns:
            if col not in ("id", "x", "y") and col not in self.columns:
                out[col] = np.tile(self.individuals[col].to_numpy(), B)
        for name, values in self.columns.items():
            out[name] = values.ravel()
        return out


def _break_points(times: np.ndarray, t0: float, T: float) -> np.ndarray:
    inside = times[np.isfinite(times) & (times > t0) & (times <= T)]
    points = np.unique(np.concatenate([[t0], inside, [T]]))
    keep = np.concatenate([[True], np.diff(points) > BREAK_TOLERANCE])
    return points[keep]


def _column_values(
    individuals: pd.DataFrame,
    changes: Optional[pd.DataFrame],
    starts: np.ndarray,
    id_index: Dict[str, int],
) -> Dict[str, np.ndarray]:
    """Numeric individual covariates per block, updated by time-varying changes."""
    B, N = len(starts), len(individuals)
    values: Dict[str, np.ndarray] = {}
    for col in individuals.columns:
        if col in ("id", "x", "y") or not pd.api.types.is_numeric_dtype(individuals[col]):
            continue
        values[col] = np.tile(individuals[col].to_numpy(float), (B, 1))
    if changes is None:
        return values
    for col in changes.columns:
        if col in ("id", "time"):
            continue
        if col not in values:
            values[col] = np.zeros((B, N))
    ordered = changes.sort_values("time", kind="stable")
    for _, row in ordered.iterrows():
        i = id_index.get(str(row["id"]))
        if i is None:
            raise ValueError(f"covariate change for unknown individual '{row['id']}'")
        later = starts >= float(row["time"]) - BREAK_TOLERANCE
        for col in changes.columns:
            if col not in ("id", "time"):
                values[col][later, i] = float(row[col])
    return values


def build_event_history(
    individuals: pd.DataFrame,
    t0: float = 0.0,
    infection_times: Union[str, Sequence[float], None] = "tI",
    removal_times: Union[str, Sequence[float], None] = "tR",
    basis_fns: Optional[Mapping[str, Basis]] = None,
    pair_covariates: Optional[Mapping[str, PairIndicator]] = None,
    keep_cols: Optional[Sequence[str]] = None,
    T: Optional[float] = None,
    id_col: str = "id",
    coords_cols: Tuple[str, str] = ("x", "y"),
    covariate_changes: Optional[pd.DataFrame] = None,
) -> EventHistory:
    """Build an EventHistory from one row per individual.

    Args:
        individuals: One row per individual with id, coordinates and covariates
        t0: Start of observation; individuals with tI <= t0 are initially
            infectious, with tR <= t0 initially removed
        infection_times: Column name or values of tI (NaN: never infected)
        removal_times: Column name or values of tR (NaN: never removed)
        basis_fns: Distance bases B_m; term m is sum_{j in I(t)} B_m(|s_i - s_j|)
        pair_covariates: Pair indicators w_ijk; term k is sum_{j in I(t)} w_ijk
        keep_cols: Individual columns to keep (default all)
        T: End of observation (default: last infection or removal time)
        id_col: Identifier column
        coords_cols: Coordinate columns (fixed over time)
        covariate_changes: Optional rows (id, time, covariates...) giving new
            covariate values from ``time`` on; blocks break there too

    Returns:
        EventHistory

    Raises:
        ValueError: On tR <= tI, t0 < 0, tied event times, unknown columns or
            a missing T without events
    """
    if t0 < 0:
        raise ValueError(f"t0 must be nonnegative, got {t0}")
    for col in (id_col, *coords_cols):
        if col not in individuals.columns:
            raise ValueError(f"individuals are missing column '{col}'")

    def times_of(spec: Union[str, Sequence[float], None], name: str) -> np.ndarray:
        if spec is None:
            return np.full(len(individuals), np.nan)
        if isinstance(spec, str):
            if spec not in individuals.columns:
                return np.full(len(individuals), np.nan)
            return individuals[spec].to_numpy(dtype=float)
        values = np.asarray(spec, dtype=float)
        if values.shape != (len(individuals),):
            raise ValueError(f"{name} has {values.size} entries for {len(individuals)} individuals")
        return values

    tI = times_of(infection_times, "infection times")
    tR = times_of(removal_times, "removal times")
    both = np.isfinite(tI) & np.isfinite(tR)
    bad = np.flatnonzero(both & (tR <= tI))
    if bad.size:
        k = bad[0]
        raise ValueError(f"individual '{individuals[id_col].iloc[k]}' has removal time "
                         f"{tR[k]} <= infection time {tI[k]}")

    changes = None
    if covariate_changes is not None:
        changes = covariate_changes.copy()
        missing = [c for c in ("id", "time") if c not in changes.columns]
        if missing:
            raise ValueError(f"covariate changes are missing column '{missing[0]}'")

    event_times = np.concatenate([tI, tR])
    future = event_times[np.isfinite(event_times) & (event_times > t0)]
    if T is None:
        if future.size == 0:
            raise ValueError("T must be given when there are no events after t0")
        T = float(future.max())
    if future.size and future.max() > T + BREAK_TOLERANCE:
        raise ValueError(f"event at time {future.max()} after the end of observation T={T}")
    if not T > t0:
        raise ValueError(f"T={T} must exceed t0={t0}")
    ordered = np.sort(future)
    if ordered.size > 1 and np.any(np.diff(ordered) <= BREAK_TOLERANCE):
        k = int(np.flatnonzero(np.diff(ordered) <= BREAK_TOLERANCE)[0])
        raise ValueError(f"tied event times at {ordered[k]}; break ties before building")

    change_times = changes["time"].to_numpy(float) if changes is not None else np.zeros(0)
    points = _break_points(np.concatenate([future, change_times]), t0, T)
    starts, stops = points[:-1], points[1:]

    ind = individuals.rename(columns={id_col: "id", coords_cols[0]: "x", coords_cols[1]: "y"})
    if keep_cols is not None:
        unknown = [c for c in keep_cols if c not in individuals.columns]
        if unknown:
            raise ValueError(f"keep column '{unknown[0]}' not found in individuals")
        ind = ind[["id", "x", "y", *keep_cols]]
    else:
        drop = [c for c in (infection_times, removal_times) if isinstance(c, str) and c in ind]
        ind = ind.drop(columns=drop)
    ind = ind.reset_index(drop=True)
    ind["id"] = ind["id"].astype(str)
    id_index = {u: k for k, u in enumerate(ind["id"])}

    tI_inf = np.where(np.isfinite(tI), tI, np.inf)
    tR_inf = np.where(np.isfinite(tR), tR, np.inf)
    s, e = starts[:, None], stops[:, None]
    infectious = (tI_inf[None, :] <= s + BREAK_TOLERANCE) & (tR_inf[None, :] >= e - BREAK_TOLERANCE)
    at_risk = (tI_inf[None, :] >= e - BREAK_TOLERANCE) & ~(tR_inf[None, :] <= s + BREAK_TOLERANCE)

    def who(times: np.ndarray) -> np.ndarray:
        out = np.full(len(stops), -1, dtype=np.int64)
        for i, t in enumerate(times):
            if np.isfinite(t) and t > t0:
                out[int(np.argmin(np.abs(stops - t)))] = i
        return out

    columns = _column_values(ind, changes, starts, id_index)
    bases = dict(basis_fns or {})
    pairs = dict(pair_covariates or {})
    clash = [n for n in (*bases, *pairs)
             if n in columns or n in (*TABLE_COLUMNS, INFECTIOUS_COLUMN)]
    if clash:
        raise ValueError(f"epidemic term '{clash[0]}' clashes with an existing column")

    distances = cdist(ind[["x", "y"]].to_numpy(float), ind[["x", "y"]].to_numpy(float))
    infectious_f = infectious.astype(float)
    for name, basis in bases.items():
        weights = np.asarray(basis(distances), dtype=float)
        np.fill_diagonal(weights, 0.0)
        columns[name] = infectious_f @ weights.T
    for name, pair in pairs.items():
        weights = pair.matrix(ind)
        np.fill_diagonal(weights, 0.0)
        columns[name] = infectious_f @ weights.T

    history = EventHistory(
        individuals=ind,
        t0=float(t0),
        T=float(T),
        block_bounds=np.column_stack([starts, stops]),
        at_risk=at_risk,
        infectious=infectious,
        event=who(tI),
        revent=who(tR),
        columns=columns,
        term_names=tuple([*bases, *pairs]),
        infection_times=tI,
        removal_times=tR,
        basis_fns=bases,
        pair_covariates=pairs,
        time_varying=changes,
    )
    logger.debug(f"built event history with {history.n_blocks} blocks of "
                 f"{history.n_individuals} individuals")
    return history


def from_table(table: pd.DataFrame, t0: Optional[float] = None) -> EventHistory:
    """Rebuild an EventHistory from its long-format table.

    Numeric columns beyond the fixed ones are kept as per-row variables;
    infection and removal times are read off the event columns. Individuals
    infectious at the start get tI = t0: those flagged in the ``infectious``
    column, or, for tables without it, everyone not at risk in the first
    block who is never infected (infectious until their removal or T).

    Raises:
        ValueError: On missing columns or blocks with differing individuals
    """
    missing = [c for c in TABLE_COLUMNS if c not in table.columns]
    if missing:
        raise ValueError(f"event history table is missing column '{missing[0]}'")
    tab = table.sort_values(["BLOCK", "id"], kind="stable").reset_index(drop=True)
    tab["id"] = tab["id"].astype(str)
    blocks = tab.drop_duplicates("BLOCK")[["start", "stop"]].to_numpy(float)
    B = len(blocks)
    first_ids = tab.loc[tab["BLOCK"] == tab["BLOCK"].iloc[0], "id"].to_numpy()
    N = len(first_ids)
    if len(tab) != B * N:
        raise ValueError("every block must list the same individuals")
    ids = tab["id"].to_numpy().reshape(B, N)
    if not (ids == first_ids[None, :]).all():
        raise ValueError("every block must list the same individuals")
    if np.any(np.abs(blocks[1:, 0] - blocks[:-1, 1]) > BREAK_TOLERANCE):
        raise ValueError("event history blocks are not consecutive")

    at_risk = tab["atRiskY"].to_numpy(int).reshape(B, N).astype(bool)
    ev = tab["event"].to_numpy(int).reshape(B, N)
    rev = tab["Revent"].to_numpy(int).reshape(B, N)
    if np.any(ev.sum(axis=1) > 1) or np.any(rev.sum(axis=1) > 1):
        raise ValueError("at most one event and one Revent per block")
    event = np.where(ev.any(axis=1), ev.argmax(axis=1), -1)
    revent = np.where(rev.any(axis=1), rev.argmax(axis=1), -1)

    start = float(blocks[0, 0]) if t0 is None else float(t0)
    tI = np.full(N, np.nan)
    tR = np.full(N, np.nan)
    tI[event[event >= 0]] = blocks[event >= 0, 1]
    tR[revent[revent >= 0]] = blocks[revent >= 0, 1]
    if INFECTIOUS_COLUMN in tab.columns:
        flagged = tab[INFECTIOUS_COLUMN].to_numpy(int).reshape(B, N).astype(bool)
        initially_infectious = flagged[0] & np.isnan(tI)
    else:
        # never at risk and never infected: infectious from the start, until tR or T
        initially_infectious = ~at_risk[0] & np.isnan(tI)
    tI[initially_infectious] = start

    infectious = np.zeros((B, N), dtype=bool)
    for i in range(N):
        if np.isfinite(tI[i]):
            end = tR[i] if np.isfinite(tR[i]) else np.inf
            infectious[:, i] = (blocks[:, 0] >= tI[i] - BREAK_TOLERANCE) & (
                blocks[:, 1] <= end + BREAK_TOLERANCE)

    fixed = {*TABLE_COLUMNS, INFECTIOUS_COLUMN}
    first = tab.iloc[:N]
    individuals = first[["id", "x", "y"]].reset_index(drop=True)
    columns: Dict[str, np.ndarray] = {}
    for col in tab.columns:
        if col in fixed:
            continue
        if pd.api.types.is_numeric_dtype(tab[col]):
            columns[col] = tab[col].to_numpy(float).reshape(B, N)
        else:
            individuals[col] = first[col].to_numpy()

    return EventHistory(
        individuals=individuals,
        t0=start,
        T=float(blocks[-1, 1]),
        block_bounds=blocks,
        at_risk=at_risk,
        infectious=infectious,
        event=event,
        revent=revent,
        columns=columns,
        infection_times=tI,
        removal_times=tR,
    )


def summarize_history(history: EventHistory) -> Dict[str, Any]:
    """Population size, infections, removals and block count."""
    return {
        "individuals": history.n_individuals,
        "blocks": history.n_blocks,
        "observationPeriod": (history.t0, history.T),
        "initiallyInfectious": int(history.infectious[0].sum()),
        "initiallySusceptible": int(history.at_risk[0].sum()),
        "infections": int((history.event >= 0).sum()),
        "removals": int((history.revent >= 0).sum()),
        "finallySusceptible": int(history.at_risk[-1].sum()
                                  - (history.event[-1] >= 0)),
        "epidemicTerms": list(history.term_names),
    }
