"""Coverage gaps between facilities from persistent homology of travel times."""

from .filtration import Filtration, Simplex, build_filtration
from .ingest import CountyStats, Facility, Kind, haversine_km, k_nearest, parse_counties, parse_facilities
from .persistence import Diagram, PersistencePair, compute_diagram, compute_h0, compute_h1
from .traveltime import DissimilarityMatrix, Mode, Scenario, TravelCache, build_dissimilarity_matrix

__version__ = "0.1.0"
