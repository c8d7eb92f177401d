"""``coverage-ph`` command line: fetch travel times, analyze a scenario, compare scenarios."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig, load_config
from .errors import CacheError, ProviderError, StrandedPairError, ValidationError
from .export import diagram_svg, write_geojson, write_pairs_csv
from .ingest import Facility, check_counties, parse_counties, parse_facilities
from .persistence import Diagram, compute_diagram, extract_death_simplices
from .stats import compare_deaths
from .traveltime import (
    FetchSummary,
    RoutesApiProvider,
    Scenario,
    SyntheticProvider,
    TravelCache,
    build_dissimilarity_matrix,
    fetch_legs,
    scenario_facilities,
    scenario_pairs,
)

log = logging.getLogger("coverage_ph")

EXIT_OK, EXIT_VALIDATION, EXIT_PROVIDER = 0, 1, 2

REPORT_SCHEMA = {
    "type": "object",
    "required": ["scenario_a", "scenario_b", "n_a", "n_b", "trim_threshold", "tests"],
    "properties": {
        "scenario_a": {"type": "string"},
        "scenario_b": {"type": "string"},
        "n_a": {"type": "integer", "minimum": 2},
        "n_b": {"type": "integer", "minimum": 2},
        "trim_threshold": {"type": "number", "minimum": 0},
        "tests": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "statistic", "p_one_tailed", "alternative"],
                "properties": {
                    "name": {"type": "string"},
                    "statistic": {"type": ["number", "string"]},
                    "p_one_tailed": {"type": "number", "minimum": 0, "maximum": 1},
                    "alternative": {"type": "string"},
                },
            },
        },
    },
}


def load_datasets(config: RunConfig):
    with open(config.facilities, encoding="utf-8", newline="") as fh:
        facilities = parse_facilities(fh)
    with open(config.counties, encoding="utf-8", newline="") as fh:
        counties = parse_counties(fh)
    check_counties(facilities, counties)
    return facilities, counties


def make_provider(config: RunConfig):
    if config.provider == "live":
        return RoutesApiProvider()
    return SyntheticProvider(speeds=dict(config.speeds))


def fetch_pairs(facilities, config: RunConfig) -> list[tuple[str, str]]:
    """Pairs needed by both scenarios under the configured neighbor mode."""
    pairs = set(scenario_pairs(facilities, Scenario.ALL, config.k)[1])
    if len(scenario_facilities(facilities, Scenario.FQHC_ONLY)) >= 2:
        pairs.update(scenario_pairs(facilities, Scenario.FQHC_ONLY, config.k, config.induced)[1])
    return sorted(pairs)


def cmd_fetch(config: RunConfig, provider=None) -> FetchSummary:
    facilities, _ = load_datasets(config)
    provider = provider if provider is not None else make_provider(config)
    cache = TravelCache.load(config.cache)
    by_id = {f.id: f for f in facilities}
    try:
        summary = fetch_legs(provider, cache, by_id, fetch_pairs(facilities, config), config.max_workers)
    finally:
        cache.save(config.cache)
    print(summary)
    if summary.failures:
        for msg in summary.failures:
            log.error("%s", msg)
        raise ProviderError(f"{len(summary.failures)} legs failed; partial cache saved to {config.cache}")
    return summary


@dataclass
class Analysis:
    diagram: Diagram
    facilities: list[Facility]
    outputs: dict[str, Path]


def death_values(diagram: Diagram, source: str) -> list[float]:
    return diagram.finite_deaths(0 if source == "h0" else None)


def cmd_analyze(config: RunConfig, scenario: Scenario | None = None, echo: bool = True) -> Analysis:
    scenario = Scenario(scenario or config.scenario)
    facilities, counties = load_datasets(config)
    cache = TravelCache.load(config.cache)
    matrix = build_dissimilarity_matrix(
        facilities, counties, cache, k=config.k, scenario=scenario, induced=config.induced
    )
    diagram = compute_diagram(matrix)
    subset = scenario_facilities(facilities, scenario)
    features = extract_death_simplices(diagram.pairs, subset, config.death_filter)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tag = scenario.value
    paths = {
        "dissimilarity": out / f"dissimilarity_{tag}.csv",
        "pairs": out / f"pairs_{tag}.csv",
        "geojson": out / f"death_simplices_{tag}.geojson",
        "svg": out / f"diagram_{tag}.svg",
    }
    with open(paths["dissimilarity"], "w", encoding="utf-8", newline="") as fh:
        matrix.write_csv(fh)
    with open(paths["pairs"], "w", encoding="utf-8", newline="") as fh:
        write_pairs_csv(diagram, fh)
    with open(paths["geojson"], "w", encoding="utf-8", newline="") as fh:
        write_geojson(features, fh)
    with open(paths["svg"], "w", encoding="utf-8", newline="") as fh:
        fh.write(diagram_svg(diagram, mean_dim=0 if config.death_source == "h0" else None))

    if echo:
        s = diagram.summary()
        print(f"scenario {tag}: {s['n_vertices']} facilities, {len(matrix.entries)} edges")
        print(f"  H0 pairs {s['h0_pairs']} ({s['h0_essential']} essential), mean finite death {s['mean_death_h0']:.2f} min")
        print(f"  H1 pairs {s['h1_pairs']} ({s['h1_essential']} essential), mean finite death {s['mean_death_h1']:.2f} min")
        print(f"  pooled mean finite death {s['mean_death_pooled']:.2f} min")
        print(f"  connectivity horizon {s['connectivity_horizon']:.2f} min")
        print(f"  {len(features)} death simplices at or above {config.death_filter:g} min -> {paths['geojson']}")
    return Analysis(diagram, subset, paths)


def cmd_compare(config: RunConfig, echo: bool = True) -> dict:
    a = cmd_analyze(config, Scenario.ALL, echo=echo)
    b = cmd_analyze(config, Scenario.FQHC_ONLY, echo=echo)
    try:
        comparison = compare_deaths(
            death_values(a.diagram, config.death_source),
            death_values(b.diagram, config.death_source),
            Scenario.ALL.value,
            Scenario.FQHC_ONLY.value,
            config.trim,
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    report = comparison.report()
    report["death_source"] = config.death_source
    for t in report["tests"]:
        if isinstance(t["statistic"], float) and abs(t["statistic"]) == float("inf"):
            t["statistic"] = "inf" if t["statistic"] > 0 else "-inf"
    path = Path(config.output_dir) / "significance_report.json"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    if echo:
        print(f"mean finite death ({config.death_source}): all {a.diagram.mean_death(0 if config.death_source == 'h0' else None):.2f} min, "
              f"fqhc {b.diagram.mean_death(0 if config.death_source == 'h0' else None):.2f} min")
        print(f"after trimming at {config.trim:g} min: n_all={report['n_a']}, n_fqhc={report['n_b']}")
        for t in report["tests"]:
            print(f"  {t['name']}: statistic {t['statistic']}, one-tailed p {t['p_one_tailed']:.4g}")
        print(f"report -> {path}")
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coverage-ph", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML run configuration")
    common.add_argument("--scenario", choices=[s.value for s in Scenario])
    common.add_argument("--provider", choices=["live", "synthetic"])
    common.add_argument("--k", type=int)
    common.add_argument("--trim", type=float, help="drop deaths at or below this many minutes")
    common.add_argument("--death-filter", type=float, help="minimum death for the map export")
    common.add_argument("--induced", action="store_true", default=None,
                        help="restrict the full-set neighbor graph instead of recomputing it per scenario")
    common.add_argument("--death-source", choices=["h0", "pooled"])
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fetch", parents=[common], help="fill the travel-time cache")
    sub.add_parser("analyze", parents=[common], help="persistence for one scenario")
    sub.add_parser("compare", parents=[common], help="test all-facilities vs FQHC-only deaths")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config).with_overrides(
            scenario=Scenario(args.scenario) if args.scenario else None,
            provider=args.provider,
            k=args.k,
            trim=args.trim,
            death_filter=args.death_filter,
            induced=args.induced,
            death_source=args.death_source,
        )
        config.validate(check_env=args.command == "fetch")
        if args.command == "fetch":
            cmd_fetch(config)
        elif args.command == "analyze":
            cmd_analyze(config)
        else:
            cmd_compare(config)
    except (ProviderError, CacheError, StrandedPairError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
