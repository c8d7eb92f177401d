"""Travel times between facilities and the symmetrized travel-time dissimilarity.

One-way durations come from a routing provider and are kept in a
:class:`TravelCache` (seconds, as returned). Everything downstream works in
minutes. For a facility pair the per-mode round trip is the sum of the two
one-way legs; the origin-weighted time mixes the fastest option for people
with a car and the fastest car-free option, weighted by the origin county's
vehicle-access ratio; the final dissimilarity averages both directions with
county populations as weights.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence, TextIO

from .errors import (
    CacheError,
    IncompleteCacheError,
    ProviderError,
    StrandedPairError,
    ValidationError,
)
from .ingest import (
    DEFAULT_K,
    CountyStats,
    Facility,
    Kind,
    NeighborGraph,
    haversine_km,
    k_nearest,
    lookup_county,
)

log = logging.getLogger(__name__)

API_KEY_ENV = "ROUTING_API_KEY"
API_ENDPOINT_ENV = "ROUTING_API_ENDPOINT"
ROUTES_ENDPOINT = "https://routes.googleapis.com/directions/v2:computeRoutes"


class Mode(str, enum.Enum):
    CAR = "car"
    TRANSIT = "transit"
    WALK = "walk"


MODES = (Mode.CAR, Mode.TRANSIT, Mode.WALK)
DEFAULT_SPEEDS_KMH = {Mode.CAR: 65.0, Mode.TRANSIT: 30.0, Mode.WALK: 5.0}


class Scenario(str, enum.Enum):
    ALL = "all"
    FQHC_ONLY = "fqhc"


@dataclass(frozen=True)
class ModeTimes:
    """Round-trip minutes per mode; ``None`` means no route for that mode."""

    car: float | None = None
    transit: float | None = None
    walk: float | None = None

    def __post_init__(self):
        for name in ("car", "transit", "walk"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} time must be finite and >= 0, got {v}")


# --------------------------------------------------------------------------
# providers


class RoutingProvider(Protocol):
    name: str

    def duration_seconds(
        self, origin: tuple[float, float], dest: tuple[float, float], mode: Mode
    ) -> float | None:
        """One-way duration in seconds, or ``None`` when the mode has no route."""


def synthetic_mode_time(
    a: Facility, b: Facility, mode: Mode, speeds: Mapping[Mode, float] | None = None
) -> float:
    """Minutes to cover the great-circle distance at a fixed per-mode speed."""
    speeds = DEFAULT_SPEEDS_KMH if speeds is None else speeds
    return haversine_km(a.latlon, b.latlon) / speeds[Mode(mode)] * 60.0


@dataclass
class SyntheticProvider:
    speeds: Mapping[Mode, float] = field(default_factory=lambda: dict(DEFAULT_SPEEDS_KMH))
    name: str = "synthetic"
    calls: int = 0

    def duration_seconds(self, origin, dest, mode):
        self.calls += 1
        km = haversine_km(origin, dest)
        return km / self.speeds[Mode(mode)] * 3600.0


class RoutesApiProvider:
    """HTTPS adapter for a Google-style ``computeRoutes`` endpoint."""

    name = "routes-api"
    _travel_modes = {Mode.CAR: "DRIVE", Mode.TRANSIT: "TRANSIT", Mode.WALK: "WALK"}

    def __init__(self, api_key=None, endpoint=None, session=None, timeout=30.0):
        self.api_key = api_key or os.environ.get(API_KEY_ENV)
        if not self.api_key:
            raise ValidationError(f"live routing provider requires {API_KEY_ENV}")
        self.endpoint = endpoint or os.environ.get(API_ENDPOINT_ENV) or ROUTES_ENDPOINT
        if session is None:
            import requests

            session = requests.Session()
        self.session = session
        self.timeout = timeout

    @staticmethod
    def _waypoint(latlon):
        return {"location": {"latLng": {"latitude": latlon[0], "longitude": latlon[1]}}}

    def request_body(self, origin, dest, mode):
        return {
            "origin": self._waypoint(origin),
            "destination": self._waypoint(dest),
            "travelMode": self._travel_modes[Mode(mode)],
        }

    @staticmethod
    def parse_response(payload: dict) -> float | None:
        routes = payload.get("routes") or []
        if not routes:
            return None
        duration = routes[0].get("duration")
        if duration is None:
            return None
        return float(str(duration).rstrip("s"))

    def duration_seconds(self, origin, dest, mode):
        headers = {
            "Content-Type": "application/json",
            "X-Goog-Api-Key": self.api_key,
            "X-Goog-FieldMask": "routes.duration",
        }
        try:
            resp = self.session.post(
                self.endpoint,
                json=self.request_body(origin, dest, mode),
                headers=headers,
                timeout=self.timeout,
            )
        except Exception as exc:  # transport errors of whatever HTTP client is injected
            raise ProviderError(f"request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        return self.parse_response(resp.json())


# --------------------------------------------------------------------------
# cache


@dataclass(frozen=True)
class CacheRecord:
    origin: str
    dest: str
    mode: Mode
    seconds: float | None
    provider: str
    fetched: str

    @property
    def key(self):
        return (self.origin, self.dest, self.mode)

    @property
    def minutes(self) -> float | None:
        return None if self.seconds is None else self.seconds / 60.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "o": self.origin,
                "d": self.dest,
                "mode": self.mode.value,
                "seconds": self.seconds,
                "provider": self.provider,
                "fetched": self.fetched,
            },
            sort_keys=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "CacheRecord":
        raw = json.loads(line)
        seconds = raw["seconds"]
        if seconds is not None:
            seconds = float(seconds)
            if not (math.isfinite(seconds) and seconds >= 0):
                raise CacheError(f"invalid duration {seconds} for {raw['o']}->{raw['d']}")
        return cls(raw["o"], raw["d"], Mode(raw["mode"]), seconds, raw["provider"], raw["fetched"])


class TravelCache:
    """One-way durations keyed by ``(origin id, dest id, mode)``.

    Writes are thread-safe. Re-writing a key with the same duration is a
    no-op; a different duration for an existing key raises ``CacheError``.
    """

    def __init__(self, records: Iterable[CacheRecord] = ()):
        self._entries: dict[tuple[str, str, Mode], CacheRecord] = {}
        self._lock = threading.Lock()
        for r in records:
            self.put(r)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        o, d, m = key
        return (o, d, Mode(m)) in self._entries

    def get(self, origin: str, dest: str, mode: Mode) -> CacheRecord | None:
        return self._entries.get((origin, dest, Mode(mode)))

    def put(self, record: CacheRecord) -> None:
        with self._lock:
            old = self._entries.get(record.key)
            if old is not None:
                if old.seconds != record.seconds:
                    raise CacheError(
                        f"conflicting durations for {record.origin}->{record.dest} "
                        f"[{record.mode.value}]: {old.seconds} vs {record.seconds}"
                    )
                return
            self._entries[record.key] = record

    def records(self) -> list[CacheRecord]:
        return [self._entries[k] for k in sorted(self._entries, key=lambda k: (k[0], k[1], k[2].value))]

    def dump(self, stream: TextIO) -> None:
        for r in self.records():
            stream.write(r.to_json() + "\n")

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
            self.dump(fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "TravelCache":
        path = Path(path)
        if not path.exists():
            return cls()
        records = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(CacheRecord.from_json(line))
                except (KeyError, ValueError) as exc:
                    raise CacheError(f"{path}:{lineno}: malformed cache record ({exc})") from exc
        return cls(records)


# --------------------------------------------------------------------------
# fetching


def fetch_one_way(
    provider: RoutingProvider,
    cache: TravelCache,
    origin: Facility,
    dest: Facility,
    mode: Mode,
    retries: int = 3,
    backoff: float = 0.5,
) -> float | None:
    """One-way minutes from ``origin`` to ``dest``; cache first, provider on miss."""
    mode = Mode(mode)
    hit = cache.get(origin.id, dest.id, mode)
    if hit is not None:
        return hit.minutes
    last: Exception | None = None
    for attempt in range(retries):
        try:
            seconds = provider.duration_seconds(origin.latlon, dest.latlon, mode)
            break
        except ProviderError as exc:
            last = exc
            log.warning("attempt %d for %s->%s [%s] failed: %s", attempt + 1, origin.id, dest.id, mode.value, exc)
            if backoff:
                time.sleep(backoff * 2**attempt)
    else:
        raise ProviderError(f"{origin.id}->{dest.id} [{mode.value}]: {last}")
    if seconds is not None and not (math.isfinite(seconds) and seconds >= 0):
        raise ProviderError(f"{origin.id}->{dest.id} [{mode.value}]: invalid duration {seconds}")
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    cache.put(CacheRecord(origin.id, dest.id, mode, seconds, provider.name, stamp))
    return None if seconds is None else seconds / 60.0


@dataclass
class FetchSummary:
    fetched: int = 0
    cached: int = 0
    failures: list[str] = field(default_factory=list)

    def __str__(self):
        s = f"{self.fetched} fetched, {self.cached} cached"
        if self.failures:
            s += f", {len(self.failures)} failed"
        return s


def required_legs(pairs: Iterable[tuple[str, str]], modes: Sequence[Mode] = MODES):
    for a, b in pairs:
        for m in modes:
            yield (a, b, m)
            yield (b, a, m)


def fetch_legs(
    provider: RoutingProvider,
    cache: TravelCache,
    facilities: Mapping[str, Facility],
    pairs: Iterable[tuple[str, str]],
    max_workers: int = 8,
    retries: int = 3,
    backoff: float = 0.5,
) -> FetchSummary:
    """Make sure both directed legs of every pair are cached for every mode."""
    summary = FetchSummary()
    todo = []
    for o, d, m in required_legs(pairs):
        if (o, d, m) in cache:
            summary.cached += 1
        else:
            todo.append((o, d, m))

    def work(leg):
        o, d, m = leg
        fetch_one_way(provider, cache, facilities[o], facilities[d], m, retries, backoff)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        futures = [(leg, pool.submit(work, leg)) for leg in todo]
        for leg, fut in futures:
            try:
                fut.result()
                summary.fetched += 1
            except ProviderError as exc:
                summary.failures.append(str(exc))
    return summary


# --------------------------------------------------------------------------
# the dissimilarity


def round_trip_mode_time(x: Facility, y: Facility, cache: TravelCache, mode: Mode) -> float | None:
    """Minutes out and back by one mode; ``None`` if either leg has no route."""
    legs = []
    missing = []
    for o, d in ((x.id, y.id), (y.id, x.id)):
        rec = cache.get(o, d, mode)
        if rec is None:
            missing.append((o, d, Mode(mode).value))
        legs.append(rec)
    if missing:
        raise IncompleteCacheError(missing)
    if legs[0].seconds is None or legs[1].seconds is None:
        return None
    return legs[0].minutes + legs[1].minutes


def mode_times(x: Facility, y: Facility, cache: TravelCache) -> ModeTimes:
    return ModeTimes(*(round_trip_mode_time(x, y, cache, m) for m in MODES))


def vehicle_access_ratio(county: CountyStats) -> float:
    """Share of the county with a car: registrations per resident, capped at 1."""
    return min(1.0, county.registered_vehicles / county.population)


def origin_weighted_time(modes: ModeTimes, access: float, pair: tuple[str, str] | None = None) -> float:
    """Expected travel time from the origin's point of view.

    ``access`` of the population takes the fastest of all modes, the rest
    the fastest of transit and walking. Absent modes are skipped.
    """
    carless = [t for t in (modes.transit, modes.walk) if t is not None]
    if not carless:
        where = f" for {pair[0]}-{pair[1]}" if pair else ""
        raise StrandedPairError(f"carless population stranded{where}: no transit or walking route")
    best_carless = min(carless)
    best = best_carless if modes.car is None else min(modes.car, best_carless)
    return access * best + (1.0 - access) * best_carless


def symmetrized_dissimilarity(d_xy: float, d_yx: float, pop_x: int, pop_y: int) -> float:
    """Population-weighted average of the two directed travel times."""
    lo, hi = (d_xy, d_yx) if d_xy <= d_yx else (d_yx, d_xy)
    value = (pop_x * d_xy + pop_y * d_yx) / (pop_x + pop_y)
    # rounding can push the average a hair outside [lo, hi]
    return min(max(value, lo), hi)


def pair_dissimilarity(
    x: Facility, y: Facility, counties: Mapping[str, CountyStats], cache: TravelCache
) -> float:
    cx, cy = lookup_county(counties, x), lookup_county(counties, y)
    times = mode_times(x, y, cache)
    d_xy = origin_weighted_time(times, vehicle_access_ratio(cx), (x.id, y.id))
    d_yx = origin_weighted_time(times, vehicle_access_ratio(cy), (y.id, x.id))
    return symmetrized_dissimilarity(d_xy, d_yx, cx.population, cy.population)


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Sparse symmetric dissimilarity over ``ids`` (vertex order).

    ``entries`` maps index pairs ``(i, j)`` with ``i < j`` to minutes. Pairs
    not present never form an edge.
    """

    ids: tuple[str, ...]
    entries: Mapping[tuple[int, int], float]
    scenario: Scenario = Scenario.ALL

    @property
    def n(self) -> int:
        return len(self.ids)

    def get(self, i: int, j: int) -> float | None:
        if i == j:
            return 0.0
        return self.entries.get((i, j) if i < j else (j, i))

    def by_id(self) -> list[tuple[str, str, float]]:
        rows = []
        for (i, j), v in self.entries.items():
            a, b = sorted((self.ids[i], self.ids[j]))
            rows.append((a, b, v))
        rows.sort()
        return rows

    def write_csv(self, stream: TextIO) -> None:
        stream.write("id_a,id_b,minutes\n")
        for a, b, v in self.by_id():
            stream.write(f"{a},{b},{v!r}\n")

    @classmethod
    def from_dense(cls, dist, ids=None, scenario=Scenario.ALL) -> "DissimilarityMatrix":
        """Complete matrix from a square array-like; ``inf``/``nan`` entries are dropped."""
        n = len(dist)
        ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(n))
        entries = {}
        for i in range(n):
            for j in range(i + 1, n):
                v = float(dist[i][j])
                if math.isfinite(v):
                    entries[(i, j)] = v
        return cls(ids, entries, scenario)


def scenario_facilities(facilities: Sequence[Facility], scenario: Scenario) -> list[Facility]:
    if Scenario(scenario) is Scenario.FQHC_ONLY:
        return [f for f in facilities if f.kind is Kind.FQHC]
    return list(facilities)


def scenario_pairs(
    facilities: Sequence[Facility],
    scenario: Scenario,
    k: int = DEFAULT_K,
    induced: bool = False,
) -> tuple[list[Facility], list[tuple[str, str]]]:
    """Facilities in the scenario and the unordered id pairs that get an edge.

    By default the neighbor graph is recomputed on the scenario's own
    facilities; ``induced=True`` keeps the graph of the full set and drops
    pairs touching removed facilities.
    """
    subset = scenario_facilities(facilities, scenario)
    if len(subset) < 2:
        raise ValidationError(f"scenario {Scenario(scenario).value} has fewer than 2 facilities")
    if induced:
        keep = {f.id for f in subset}
        pairs = [p for p in k_nearest(facilities, k).undirected_pairs() if p[0] in keep and p[1] in keep]
    else:
        pairs = k_nearest(subset, k).undirected_pairs()
    return subset, pairs


def build_dissimilarity_matrix(
    facilities: Sequence[Facility],
    counties: Mapping[str, CountyStats],
    cache: TravelCache,
    *,
    k: int = DEFAULT_K,
    scenario: Scenario = Scenario.ALL,
    graph: NeighborGraph | None = None,
    provider: RoutingProvider | None = None,
    induced: bool = False,
    max_workers: int = 8,
) -> DissimilarityMatrix:
    """Assemble the sparse dissimilarity matrix for a scenario.

    With ``provider`` set, legs missing from ``cache`` are fetched first;
    otherwise a missing leg raises :class:`IncompleteCacheError`. A given
    ``graph`` overrides the neighbor computation (its pairs are restricted
    to the scenario's facilities).
    """
    scenario = Scenario(scenario)
    if graph is None:
        subset, pairs = scenario_pairs(facilities, scenario, k, induced)
    else:
        subset = scenario_facilities(facilities, scenario)
        keep = {f.id for f in subset}
        pairs = [p for p in graph.undirected_pairs() if p[0] in keep and p[1] in keep]
    by_id = {f.id: f for f in subset}
    for f in subset:
        lookup_county(counties, f)

    if provider is not None:
        summary = fetch_legs(provider, cache, by_id, pairs, max_workers=max_workers)
        if summary.failures:
            raise ProviderError("; ".join(summary.failures))
    missing = [(o, d, m.value) for o, d, m in required_legs(pairs) if (o, d, m) not in cache]
    if missing:
        raise IncompleteCacheError(missing)

    index = {f.id: i for i, f in enumerate(subset)}
    entries = {}
    for a, b in pairs:
        i, j = index[a], index[b]
        if i > j:
            i, j = j, i
        entries[(i, j)] = pair_dissimilarity(subset[i], subset[j], counties, cache)
    return DissimilarityMatrix(tuple(f.id for f in subset), entries, scenario)
