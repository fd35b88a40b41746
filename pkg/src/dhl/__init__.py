"""Dynamic exact shortest-path distances on road networks.

A balanced separator tree fixes a vertex order, a shortcut graph over that
order is maintained under edge-weight changes, and 2-hop labels derived from
it answer exact distance queries.
"""

from .estimator import DynamicDistanceIndex
from .graph import (INFINITY, DimacsParseError, Graph, GraphError, UpdateBatch, WeightUpdate,
                    parse_dimacs_co, parse_dimacs_gr, read_dimacs)
from .indexfile import IndexFormatError, load, save
from .labelling import HierarchicalIndex, Labelling, build_labels, query, query_many
from .maintenance import MaintenanceReport, apply_batch, dhl_decrease, dhl_increase
from .query_hierarchy import HierarchyError, QueryHierarchy, build_query_hierarchy
from .separator import Separator, find_separator
from .update_hierarchy import UpdateHierarchy, build_update_hierarchy, dhu_decrease, dhu_increase

__version__ = "0.1.0"

__all__ = [
    "INFINITY", "DimacsParseError", "DynamicDistanceIndex", "Graph", "GraphError", "HierarchicalIndex",
    "HierarchyError", "IndexFormatError", "Labelling", "MaintenanceReport", "QueryHierarchy", "Separator",
    "UpdateBatch", "UpdateHierarchy", "WeightUpdate", "apply_batch", "build_labels", "build_query_hierarchy",
    "build_update_hierarchy", "dhl_decrease", "dhl_increase", "dhu_decrease", "dhu_increase", "find_separator",
    "load", "parse_dimacs_co", "parse_dimacs_gr", "query", "query_many", "read_dimacs", "save",
]
