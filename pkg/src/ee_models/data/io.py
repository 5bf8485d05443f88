"""
Readers and writers for the on-disk data formats.

- Counts / popFrac / covariate grids: CSV with a header row of unit ids and
  one row per time point
- Events: CSV with columns time,x,y,type,eps_t,eps_s[,tile] plus marks
- stgrid: CSV with start,stop,tile,area plus covariate columns
- Map and window: GeoJSON FeatureCollection, unit id in feature property "id"
- Adjacency: edge list, one "idA,idB" pair per line
- Individuals and event histories: CSV

Every writer emits the layout its reader accepts.
"""
import json
import os
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
from shapely.geometry import mapping

from ..geometry import PolygonSet, adjacency_from_edges
from .counts import CountSeries
from .history import EventHistory, from_table


def _require(path: str) -> None:
    if not os.path.exists(path):
        raise ValueError(f"input file not found: {path}")


def read_grid(path: str) -> Tuple[np.ndarray, List[str]]:
    """T x U grid and its unit ids from a CSV with a header row of unit ids."""
    _require(path)
    frame = pd.read_csv(path, dtype=float)
    return frame.to_numpy(dtype=float), [str(c) for c in frame.columns]


def read_counts(path: str) -> Tuple[np.ndarray, List[str]]:
    counts, ids = read_grid(path)
    return counts, ids


def read_covariates(directory: str, unit_ids: Sequence[str]) -> Dict[str, np.ndarray]:
    """Every <name>.csv in the directory as a grid named <name>, columns in unit order."""
    if not os.path.isdir(directory):
        raise ValueError(f"covariate directory not found: {directory}")
    grids = {}
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".csv"):
            continue
        frame = pd.read_csv(os.path.join(directory, name), dtype=float)
        missing = [u for u in unit_ids if u not in frame.columns]
        if missing:
            raise ValueError(f"covariate {name} has no column for unit '{missing[0]}'")
        grids[name[: -len(".csv")]] = frame[list(unit_ids)].to_numpy(dtype=float)
    return grids


def write_grid(values: np.ndarray, unit_ids: Sequence[str], path: str) -> None:
    pd.DataFrame(np.asarray(values), columns=list(unit_ids)).to_csv(path, index=False)


def write_counts(series: CountSeries, path: str) -> None:
    write_grid(series.counts, series.unit_ids, path)


def read_events(path: str) -> pd.DataFrame:
    _require(path)
    frame = pd.read_csv(path)
    for col in ("type", "tile"):
        if col in frame.columns:
            frame[col] = frame[col].astype(str)
    return frame


def write_events(events: pd.DataFrame, path: str) -> None:
    events.to_csv(path, index=False)


def read_stgrid(path: str) -> pd.DataFrame:
    _require(path)
    frame = pd.read_csv(path)
    if "tile" in frame.columns:
        frame["tile"] = frame["tile"].astype(str)
    return frame


def read_geojson(path: str) -> Dict[str, PolygonSet]:
    """Polygons of a FeatureCollection keyed by the "id" property."""
    _require(path)
    with open(path) as f:
        try:
            collection = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid GeoJSON in {path}: {e}")
    features = collection.get("features") if collection.get("type") == "FeatureCollection" \
        else [collection]
    tiles: Dict[str, PolygonSet] = {}
    for k, feature in enumerate(features or []):
        props = feature.get("properties") or {}
        key = str(props.get("id", feature.get("id", k + 1)))
        if key in tiles:
            raise ValueError(f"duplicated feature id '{key}' in {path}")
        tiles[key] = PolygonSet.from_geojson(feature)
    if not tiles:
        raise ValueError(f"no polygon features in {path}")
    return tiles


def read_window(path: str) -> PolygonSet:
    """Observation window as the union of all features."""
    tiles = read_geojson(path)
    if len(tiles) == 1:
        return next(iter(tiles.values()))
    return PolygonSet.union(tiles.values())


def write_geojson(tiles: Mapping[str, PolygonSet], path: str) -> None:
    features = [
        {"type": "Feature", "properties": {"id": key}, "geometry": mapping(poly.geometry)}
        for key, poly in tiles.items()
    ]
    with open(path, "w") as f:
        json.dump({"type": "FeatureCollection", "features": features}, f)


def read_adjacency(path: str, unit_ids: Sequence[str]) -> np.ndarray:
    """Boolean adjacency from an edge list ("idA,idB" per line, blank lines ignored)."""
    _require(path)
    edges = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'idA,idB', got '{line}'")
            edges.append((parts[0], parts[1]))
    return adjacency_from_edges(edges, [str(u) for u in unit_ids])


def read_individuals(path: str) -> pd.DataFrame:
    _require(path)
    frame = pd.read_csv(path)
    if "id" in frame.columns:
        frame["id"] = frame["id"].astype(str)
    return frame


def read_history(path: str) -> EventHistory:
    _require(path)
    return from_table(pd.read_csv(path))


def write_history(history: EventHistory, path: str) -> None:
    history.table.to_csv(path, index=False)


def read_pop_frac(path: str, unit_ids: Sequence[str]) -> np.ndarray:
    """popFrac grid (or a single row per unit) with columns put in ``unit_ids`` order."""
    _require(path)
    frame = pd.read_csv(path, dtype=float)
    frame.columns = [str(c) for c in frame.columns]
    missing = [u for u in unit_ids if u not in frame.columns]
    if missing:
        raise ValueError(f"popFrac in {path} has no column for unit '{missing[0]}'")
    values = frame[list(unit_ids)].to_numpy(dtype=float)
    return values[0] if len(values) == 1 else values


def write_adjacency(order: np.ndarray, unit_ids: Sequence[str], path: str) -> None:
    """Edge list of first-order neighbours, each pair once."""
    with open(path, "w") as f:
        for i, j in zip(*np.nonzero(np.triu(np.asarray(order) == 1))):
            f.write(f"{unit_ids[i]},{unit_ids[j]}\n")
