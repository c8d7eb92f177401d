"""Synthetic facility datasets for tests, demos and benchmarks."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .ingest import CountyStats, Facility, Kind, write_counties, write_facilities

# roughly California
DEFAULT_BBOX = (32.5, 42.0, -124.4, -114.1)


def random_dataset(n: int, seed: int = 0, pphc_share: float = 0.3, n_counties: int = 5, bbox=DEFAULT_BBOX):
    rng = np.random.default_rng(seed)
    lat0, lat1, lon0, lon1 = bbox
    counties = [
        CountyStats(f"County {c}", int(rng.integers(20_000, 3_000_000)), 0) for c in range(n_counties)
    ]
    # vehicle ratio between 0.4 and 1.2 so some counties hit the cap
    counties = [
        CountyStats(c.county, c.population, int(c.population * rng.uniform(0.4, 1.2))) for c in counties
    ]
    facilities = []
    for i in range(n):
        kind = Kind.PPHC if rng.random() < pphc_share else Kind.FQHC
        facilities.append(
            Facility(
                f"f{i:03d}",
                f"Site {i}",
                kind,
                round(float(rng.uniform(lat0, lat1)), 6),
                round(float(rng.uniform(lon0, lon1)), 6),
                counties[int(rng.integers(n_counties))].county,
            )
        )
    return facilities, counties


def square_dataset(side_deg: float = 0.1):
    """Four facilities on the corners of a small square near the equator."""
    county = CountyStats("Square", 10_000, 8_000)
    corners = [(0.0, 0.0), (0.0, side_deg), (side_deg, side_deg), (side_deg, 0.0)]
    facilities = [
        Facility(f"s{i}", f"Corner {i}", Kind.FQHC, lat, lon, county.county)
        for i, (lat, lon) in enumerate(corners)
    ]
    return facilities, [county]


def bridged_dataset(seed: int = 0, rows: int = 6, cols: int = 7, spacing_deg: float = 0.2):
    """FQHC grid densified by PPHCs, plus a remote FQHC cluster reached through a PPHC chain.

    Removing the PPHCs roughly doubles every spanning-tree edge in the grid
    and leaves the remote cluster attached only by a long edge.
    """
    rng = np.random.default_rng(seed)
    jitter = spacing_deg * 0.05
    urban = CountyStats("Urban", 2_000_000, 1_600_000)
    rural = CountyStats("Rural", 150_000, 90_000)
    facilities = []

    def add(kind, lat, lon, county):
        i = len(facilities)
        lat += float(rng.uniform(-jitter, jitter))
        lon += float(rng.uniform(-jitter, jitter))
        facilities.append(
            Facility(f"{kind.value.lower()}{i:03d}", f"{kind.value} {i}", kind, round(lat, 6), round(lon, 6), county.county)
        )

    lat0, lon0 = 36.0, -120.0
    for r in range(rows):
        for c in range(cols):
            add(Kind.FQHC, lat0 + r * spacing_deg, lon0 + c * spacing_deg, urban)
            if c + 1 < cols:
                add(Kind.PPHC, lat0 + r * spacing_deg, lon0 + (c + 0.5) * spacing_deg, urban)
    # remote cluster east of the grid
    east = lon0 + (cols - 1) * spacing_deg
    gap = 8
    for r in range(2):
        for c in range(2):
            add(Kind.FQHC, lat0 + r * spacing_deg, east + (gap + c) * spacing_deg, rural)
    for step in range(1, 2 * gap):
        add(Kind.PPHC, lat0, east + step * spacing_deg / 2, rural)
    return facilities, [urban, rural]


def write_dataset(directory, facilities, counties, **config) -> Path:
    """Write ``facilities.csv``, ``counties.csv`` and ``config.toml``; returns the config path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "facilities.csv", "w", encoding="utf-8", newline="") as fh:
        write_facilities(facilities, fh)
    with open(directory / "counties.csv", "w", encoding="utf-8", newline="") as fh:
        write_counties(counties, fh)
    settings = {
        "facilities": "facilities.csv",
        "counties": "counties.csv",
        "cache": "travel_cache.jsonl",
        "output_dir": "out",
        "provider": "synthetic",
    }
    settings.update(config)
    lines = []
    tables = {}
    for key, value in settings.items():
        if isinstance(value, dict):
            tables[key] = value
        elif isinstance(value, bool):
            lines.append(f"{key} = {'true' if value else 'false'}")
        elif isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        else:
            lines.append(f"{key} = {value!r}")
    for name, table in tables.items():
        lines.append(f"\n[{name}]")
        lines.extend(f"{k} = {float(v)!r}" for k, v in table.items())
    path = directory / "config.toml"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
