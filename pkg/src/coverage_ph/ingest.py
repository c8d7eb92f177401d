"""Facility and county tables, great-circle distance, geographic k-NN."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TextIO

from .errors import ValidationError

EARTH_RADIUS_KM = 6371.0
DEFAULT_K = 35

FACILITY_FIELDS = ("id", "name", "kind", "lat", "lon", "county")
COUNTY_FIELDS = ("county", "population", "registered_vehicles")


class Kind(str, enum.Enum):
    PPHC = "PPHC"
    FQHC = "FQHC"


@dataclass(frozen=True)
class Facility:
    id: str
    name: str
    kind: Kind
    lat: float
    lon: float
    county: str

    @property
    def latlon(self) -> tuple[float, float]:
        return (self.lat, self.lon)


@dataclass(frozen=True)
class CountyStats:
    county: str
    population: int
    registered_vehicles: int


@dataclass(frozen=True)
class NeighborGraph:
    """Directed k-NN lists keyed by facility id, nearest first."""

    k: int
    adjacency: Mapping[str, tuple[str, ...]]

    def undirected_pairs(self) -> list[tuple[str, str]]:
        """Union of the directed lists as sorted ``(a, b)`` pairs with ``a < b``."""
        pairs = set()
        for fid, nbrs in self.adjacency.items():
            for other in nbrs:
                pairs.add((fid, other) if fid < other else (other, fid))
        return sorted(pairs)


def county_key(name: str) -> str:
    return name.strip().casefold()


def _read_rows(source: TextIO | str, required: Sequence[str]) -> Iterable[tuple[int, dict]]:
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.DictReader(source)
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [f for f in required if f not in header]
    if missing:
        raise ValidationError(f"header is missing columns: {', '.join(missing)}")
    reader.fieldnames = header
    # line 1 is the header
    for lineno, row in enumerate(reader, start=2):
        yield lineno, {k: (v.strip() if isinstance(v, str) else v) for k, v in row.items()}


def parse_facilities(source: TextIO | str) -> list[Facility]:
    """Parse a ``id,name,kind,lat,lon,county`` table, preserving row order."""
    out: list[Facility] = []
    seen: set[str] = set()
    for lineno, row in _read_rows(source, FACILITY_FIELDS):
        fid = row["id"]
        if not fid:
            raise ValidationError(f"row {lineno}: empty facility id")
        if fid in seen:
            raise ValidationError(f"duplicate facility id {fid}")
        seen.add(fid)
        try:
            kind = Kind(row["kind"].upper())
        except ValueError:
            raise ValidationError(f"row {lineno}: unknown facility kind {row['kind']!r}") from None
        try:
            lat, lon = float(row["lat"]), float(row["lon"])
        except (TypeError, ValueError):
            raise ValidationError(f"row {lineno}: coordinates are not numbers") from None
        if not -90.0 <= lat <= 90.0:
            raise ValidationError(f"row {lineno}: latitude out of range ({lat})")
        if not -180.0 <= lon <= 180.0:
            raise ValidationError(f"row {lineno}: longitude out of range ({lon})")
        if not row["county"]:
            raise ValidationError(f"row {lineno}: empty county")
        out.append(Facility(fid, row["name"] or "", kind, lat, lon, row["county"]))
    return out


def parse_counties(source: TextIO | str) -> dict[str, CountyStats]:
    """Parse a county table into a dict keyed by normalized county name."""
    table: dict[str, CountyStats] = {}
    for lineno, row in _read_rows(source, COUNTY_FIELDS):
        key = county_key(row["county"])
        if not key:
            raise ValidationError(f"row {lineno}: empty county")
        if key in table:
            raise ValidationError(f"duplicate county {row['county']}")
        try:
            population = int(row["population"])
            vehicles = int(row["registered_vehicles"])
        except (TypeError, ValueError):
            raise ValidationError(f"row {lineno}: counts must be integers") from None
        if population <= 0:
            raise ValidationError(f"row {lineno}: population must be positive")
        if vehicles < 0:
            raise ValidationError(f"row {lineno}: registered_vehicles must be non-negative")
        table[key] = CountyStats(row["county"], population, vehicles)
    return table


def write_facilities(facilities: Iterable[Facility], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(FACILITY_FIELDS)
    for f in facilities:
        writer.writerow([f.id, f.name, f.kind.value, repr(f.lat), repr(f.lon), f.county])


def write_counties(counties: Iterable[CountyStats], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COUNTY_FIELDS)
    for c in counties:
        writer.writerow([c.county, c.population, c.registered_vehicles])


def lookup_county(counties: Mapping[str, CountyStats], facility: Facility) -> CountyStats:
    try:
        return counties[county_key(facility.county)]
    except KeyError:
        raise ValidationError(
            f"facility {facility.id}: county {facility.county!r} not in county table"
        ) from None


def check_counties(facilities: Iterable[Facility], counties: Mapping[str, CountyStats]) -> None:
    for f in facilities:
        lookup_county(counties, f)


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in km between two ``(lat, lon)`` points in degrees."""
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, h)))


def k_nearest(facilities: Sequence[Facility], k: int = DEFAULT_K) -> NeighborGraph:
    """Per-facility lists of the ``min(k, n-1)`` nearest other facilities.

    Ties in distance go to the smaller facility id.
    """
    n = len(facilities)
    if n < 2:
        raise ValidationError("k-nearest neighbors needs at least 2 facilities")
    if k < 1:
        raise ValidationError("k must be a positive integer")
    dist = [[haversine_km(a.latlon, b.latlon) for b in facilities] for a in facilities]
    ids = [f.id for f in facilities]
    adjacency = {}
    for i, fid in enumerate(ids):
        order = sorted((j for j in range(n) if j != i), key=lambda j: (dist[i][j], ids[j]))
        adjacency[fid] = tuple(ids[j] for j in order[:k])
    return NeighborGraph(k, adjacency)
