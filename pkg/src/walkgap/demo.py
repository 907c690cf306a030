"""Bundled synthetic fixture: 8 amenities, a 10x10 destination grid and a 15x15
street lattice with 12 seeded barriers, laid over central Dublin.

The committed files under ``walkgap/data/demo`` are exactly what
:func:`write_demo` produces; a test keeps the two in sync.
"""

from __future__ import annotations

import io
import math
from importlib import resources
from pathlib import Path
from typing import List

import numpy as np

from walkgap.export import write_amenities_csv, write_grid_csv, write_houses_csv
from walkgap.geo import BoundingBox, GeoPoint
from walkgap.grid import GridSpec, generate_grid
from walkgap.ingest import AmenityOrigin, Category, HouseRecord
from walkgap.routing.synthetic import StreetGraph, lattice_graph

SEED = 20170501
SOUTH_WEST = GeoPoint(53.32, -6.31)
ROWS = COLS = 15
LAT_STEP, LON_STEP = 0.004, 0.0066
N_BARRIERS = 12
GRID_SPEC = GridSpec(BoundingBox(53.3205, 53.3205 + 9.5 * 0.0054, -6.3095, -6.3095 + 9.5 * 0.009), 0.0054, 0.009)

_NAMES = {
    Category.PrimarySchool: "St Brigid's National School",
    Category.SecondarySchool: "Belvedere Secondary",
    Category.University: "Trinity College",
    Category.Religious: "St Audoen's Church",
    Category.Medical: "Mater Clinic",
    Category.Retail: "Ilac Shopping Centre",
    Category.SportsClub: "Liffey Rowing Club",
    Category.Garda: "Pearse Street Garda Station",
}


def _connected(graph: StreetGraph) -> bool:
    seen, stack = {0}, [0]
    while stack:
        u = stack.pop()
        for v, _ in graph.neighbors(u):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(graph.nodes)


def demo_graph() -> StreetGraph:
    rng = np.random.default_rng(SEED)
    base = lattice_graph(SOUTH_WEST, ROWS, COLS, LAT_STEP, LON_STEP)
    while True:
        picks = rng.choice(len(base.edges), size=N_BARRIERS, replace=False)
        graph = base.without(base.edges[int(i)] for i in sorted(picks))
        if _connected(graph):
            return graph


def demo_origins() -> List[AmenityOrigin]:
    rng = np.random.default_rng(SEED + 1)
    out = []
    for i, cat in enumerate(Category):
        lat = round(SOUTH_WEST.lat + LAT_STEP * float(rng.uniform(3, 11)), 6)
        lon = round(SOUTH_WEST.lon + LON_STEP * float(rng.uniform(3, 11)), 6)
        out.append(AmenityOrigin(i, _NAMES[cat], cat, GeoPoint(lat, lon), int(rng.integers(1, 18))))
    return out


def demo_grid():
    return generate_grid(GRID_SPEC)


def demo_houses(n: int = 240) -> List[HouseRecord]:
    """Houses scattered over the lattice with a plausible log-price surface."""
    rng = np.random.default_rng(SEED + 2)
    centre = GeoPoint(53.3472, -6.2592)
    out = []
    for k in range(n):
        lat = round(SOUTH_WEST.lat + LAT_STEP * (ROWS - 1) * float(rng.uniform()), 6)
        lon = round(SOUTH_WEST.lon + LON_STEP * (COLS - 1) * float(rng.uniform()), 6)
        new = int(rng.uniform() < 0.25)
        dkm = math.hypot((lat - centre.lat) * 111.19, (lon - centre.lon) * 66.4)
        log_price = 12.9 + 0.3 * new - 0.05 * dkm + float(rng.normal(0, 0.25))
        out.append(HouseRecord(GeoPoint(lat, lon), f"{k + 1} Demo Street", new, round(math.exp(log_price), -2)))
    return out


def write_demo(directory) -> List[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = []

    def put(name, writer, *args):
        buf = io.StringIO()
        writer(*args, buf)
        p = d / name
        p.write_bytes(buf.getvalue().encode("utf-8"))
        files.append(p)

    put("amenities.csv", write_amenities_csv, demo_origins())
    put("grid.csv", write_grid_csv, demo_grid())
    put("houses.csv", write_houses_csv, demo_houses())
    graph_path = d / "graph.json"
    demo_graph().dump(str(graph_path))
    files.append(graph_path)
    return files


def demo_path(name: str) -> str:
    """Filesystem path of a bundled demo file."""
    return str(resources.files("walkgap") / "data" / "demo" / name)
