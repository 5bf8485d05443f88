"""
Adjacency graphs and neighbourhood orders between regions.
"""
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
from shapely.strtree import STRtree

from .polygons import PolygonSet


def adjacency_from_edges(edges: Iterable[Tuple[str, str]], unit_ids: Sequence[str]) -> np.ndarray:
    """Symmetric boolean adjacency matrix from an "idA,idB" edge list.

    Raises:
        ValueError: If an edge names an unknown unit
    """
    index = {uid: k for k, uid in enumerate(unit_ids)}
    adjacency = np.zeros((len(unit_ids), len(unit_ids)), dtype=bool)
    for a, b in edges:
        if a not in index or b not in index:
            missing = a if a not in index else b
            raise ValueError(f"adjacency edge names unit '{missing}' not found in unit ids")
        if a != b:
            adjacency[index[a], index[b]] = adjacency[index[b], index[a]] = True
    return adjacency


def adjacency_from_map(tiles: Mapping[str, PolygonSet], unit_ids: Sequence[str]) -> np.ndarray:
    """Regions sharing at least one boundary point are neighbours."""
    geoms = [tiles[uid].geometry for uid in unit_ids]
    tree = STRtree(geoms)
    adjacency = np.zeros((len(geoms), len(geoms)), dtype=bool)
    for i, geom in enumerate(geoms):
        for j in tree.query(geom, predicate="intersects"):
            if j != i:
                adjacency[i, j] = adjacency[j, i] = True
    return adjacency


def nb_order(adjacency: np.ndarray, maxlag: Optional[int] = None) -> np.ndarray:
    """Neighbourhood orders by breadth-first search on the adjacency graph.

    Entry (j, i) is the number of edges on a shortest path from region j to
    region i, capped at ``maxlag``. The diagonal is 0, as are pairs in
    different connected components.

    Args:
        adjacency: U x U symmetric boolean matrix with zero diagonal
        maxlag: Cap for the orders (default U - 1, i.e. no cap)

    Returns:
        U x U integer matrix of orders

    Raises:
        ValueError: If the adjacency is not square and symmetric or maxlag < 1
    """
    adjacency = np.asarray(adjacency)
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {adjacency.shape}")
    adjacency = adjacency.astype(bool)
    if not np.array_equal(adjacency, adjacency.T):
        raise ValueError("asymmetric adjacency")
    n = adjacency.shape[0]
    cap = max(n - 1, 1) if maxlag is None else int(maxlag)
    if cap < 1:
        raise ValueError(f"maxlag must be at least 1, got {maxlag}")

    graph = nx.from_numpy_array(adjacency.astype(int))
    graph.remove_edges_from(nx.selfloop_edges(graph))
    order = np.zeros((n, n), dtype=np.int64)
    for j, lengths in nx.all_pairs_shortest_path_length(graph):
        for i, d in lengths.items():
            order[j, i] = min(d, cap)
    return order
