"""File outputs: pairs CSV, death-simplex GeoJSON, persistence diagram SVG."""

from __future__ import annotations

import json
import math
from typing import Iterable, TextIO
from xml.sax.saxutils import escape

from .persistence import DeathFeature, Diagram, PersistencePair

VERTEX_SEP = ";"


def _fmt(x: float) -> str:
    return "inf" if x == math.inf else repr(float(x))


def write_pairs_csv(diagram: Diagram, stream: TextIO) -> None:
    stream.write("dim,birth,death,birth_vertices,death_vertices\n")
    ids = diagram.ids
    for p in sorted(diagram.pairs, key=_pair_key):
        bv = VERTEX_SEP.join(ids[v] for v in p.birth_simplex)
        dv = "" if p.death_simplex is None else VERTEX_SEP.join(ids[v] for v in p.death_simplex)
        stream.write(f"{p.dim},{_fmt(p.birth)},{_fmt(p.death)},{bv},{dv}\n")


def _pair_key(p: PersistencePair):
    return (p.dim, p.death, p.birth, p.birth_simplex, p.death_simplex or ())


def read_pairs_csv(stream: TextIO) -> list[dict]:
    import csv

    rows = []
    for row in csv.DictReader(stream):
        rows.append(
            {
                "dim": int(row["dim"]),
                "birth": float(row["birth"]),
                "death": float(row["death"]),
                "birth_vertices": tuple(filter(None, row["birth_vertices"].split(VERTEX_SEP))),
                "death_vertices": tuple(filter(None, row["death_vertices"].split(VERTEX_SEP))),
            }
        )
    return rows


def death_geojson(features: Iterable[DeathFeature]) -> dict:
    """H0 deaths become LineStrings, H1 deaths closed Polygons; coordinates are ``[lon, lat]``."""
    out = []
    for f in features:
        ring = [[lon, lat] for lat, lon in f.coords]
        if f.dim == 0:
            geometry = {"type": "LineString", "coordinates": ring}
        else:
            geometry = {"type": "Polygon", "coordinates": [ring + [ring[0]]]}
        out.append(
            {
                "type": "Feature",
                "geometry": geometry,
                "properties": {"dim": f.dim, "birth": f.birth, "death": f.death, "ids": list(f.ids)},
            }
        )
    return {"type": "FeatureCollection", "features": out}


def write_geojson(features: Iterable[DeathFeature], stream: TextIO) -> None:
    json.dump(death_geojson(features), stream, indent=1)
    stream.write("\n")


def diagram_svg(diagram: Diagram, size: int = 480, mean_dim: int | None = 0) -> str:
    """Birth/death scatter with the diagonal, an ``inf`` band and a dotted mean-death line.

    H0 points are circles, H1 points crosses.
    """
    margin = 48
    plot = size - 2 * margin
    finite = [v for p in diagram.pairs for v in (p.birth, p.death) if v != math.inf]
    top = max(finite) if finite else 1.0
    top = top * 1.1 if top > 0 else 1.0
    inf_y = margin - 14

    def sx(v):
        return margin + plot * v / top

    def sy(v):
        return inf_y if v == math.inf else margin + plot * (1 - v / top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<title>{escape(diagram.scenario)}</title>',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<line x1="{sx(0):.2f}" y1="{sy(0):.2f}" x2="{sx(top):.2f}" y2="{sy(top):.2f}" stroke="gray"/>',
        f'<line x1="{margin}" y1="{inf_y}" x2="{margin + plot}" y2="{inf_y}" stroke="lightgray" stroke-dasharray="2,2"/>',
        f'<text x="{margin - 30}" y="{inf_y + 4}" font-size="10">inf</text>',
        f'<rect x="{margin}" y="{margin}" width="{plot}" height="{plot}" fill="none" stroke="black"/>',
        f'<text x="{size / 2}" y="{size - 12}" font-size="12" text-anchor="middle">birth (min)</text>',
        f'<text x="14" y="{size / 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {size / 2})">death (min)</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = top * frac
        parts.append(f'<text x="{sx(v):.2f}" y="{margin + plot + 14}" font-size="9" text-anchor="middle">{v:.0f}</text>')
        parts.append(f'<text x="{margin - 4}" y="{sy(v) + 3:.2f}" font-size="9" text-anchor="end">{v:.0f}</text>')
    mean = diagram.mean_death(mean_dim)
    if not math.isnan(mean):
        parts.append(
            f'<line x1="{margin}" y1="{sy(mean):.2f}" x2="{margin + plot}" y2="{sy(mean):.2f}" '
            f'stroke="purple" stroke-dasharray="1,3"><title>mean death {mean:.2f}</title></line>'
        )
    for p in sorted(diagram.pairs, key=_pair_key):
        x, y = sx(p.birth), sy(p.death)
        if p.dim == 0:
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="none" stroke="steelblue"/>')
        else:
            parts.append(
                f'<path d="M{x - 3:.2f},{y - 3:.2f}L{x + 3:.2f},{y + 3:.2f}'
                f'M{x - 3:.2f},{y + 3:.2f}L{x + 3:.2f},{y - 3:.2f}" stroke="darkorange"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
