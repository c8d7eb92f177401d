import io
import json
import math
import xml.etree.ElementTree as ET

from coverage_ph.export import death_geojson, diagram_svg, read_pairs_csv, write_pairs_csv
from coverage_ph.ingest import Facility, Kind
from coverage_ph.persistence import DeathFeature, compute_diagram, extract_death_simplices
from coverage_ph.traveltime import DissimilarityMatrix

R2 = math.sqrt(2)
SQUARE = [[0, 1, R2, 1], [1, 0, 1, R2], [R2, 1, 0, 1], [1, R2, 1, 0]]


def square_diagram():
    m = DissimilarityMatrix.from_dense(SQUARE)
    m = DissimilarityMatrix(("a", "b", "c", "d"), m.entries, "square")
    return compute_diagram(m, "square")


def test_pairs_csv_round_trip():
    diag = square_diagram()
    buf = io.StringIO()
    write_pairs_csv(diag, buf)
    rows = read_pairs_csv(io.StringIO(buf.getvalue()))
    assert len(rows) == len(diag.pairs)
    assert sorted((r["dim"], r["birth"], r["death"]) for r in rows) == sorted(
        (p.dim, p.birth, p.death) for p in diag.pairs
    )
    (essential,) = [r for r in rows if r["death"] == math.inf]
    assert essential["death_vertices"] == () and essential["birth_vertices"] == ("a",)
    assert ",inf," in buf.getvalue()


def test_geojson_lon_lat_order():
    f0 = DeathFeature(0, 0.0, 200.0, ("p", "q"), ((34.0, -118.0), (35.0, -119.0)))
    f1 = DeathFeature(1, 5.0, 300.0, ("p", "q", "r"), ((34.0, -118.0), (35.0, -119.0), (36.0, -120.0)))
    geo = death_geojson([f0, f1])
    line, poly = geo["features"]
    assert line["geometry"] == {"type": "LineString", "coordinates": [[-118.0, 34.0], [-119.0, 35.0]]}
    ring = poly["geometry"]["coordinates"][0]
    assert ring[0] == ring[-1] == [-118.0, 34.0] and len(ring) == 4
    assert poly["properties"] == {"dim": 1, "birth": 5.0, "death": 300.0, "ids": ["p", "q", "r"]}
    json.dumps(geo)


def test_extracted_features_export():
    diag = square_diagram()
    facs = [Facility(i, "", Kind.FQHC, 34.0 + k, -118.0 - k, "X") for k, i in enumerate("abcd")]
    geo = death_geojson(extract_death_simplices(diag.pairs, facs, 1.2))
    (feat,) = geo["features"]
    assert feat["geometry"]["type"] == "Polygon"


def test_svg_is_well_formed():
    svg = diagram_svg(square_diagram())
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    ns = "{http://www.w3.org/2000/svg}"
    assert len(root.findall(f"{ns}circle")) == 4
    assert len(root.findall(f"{ns}path")) == 1
    assert any(el.get("stroke") == "purple" for el in root.iter(f"{ns}line"))
