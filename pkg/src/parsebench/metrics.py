"""Per-parse counters shared by all engines.

A Counters instance belongs to exactly one parse context; engines create a
fresh one per invocation (or accept one from the benchmark harness). Never
share an instance between concurrent parses.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass
class Counters:
    unify_attempts: int = 0
    unify_successes: int = 0
    categories_built: int = 0  # storage proxy: materialized category terms
    edges_created: int = 0     # BU-LC active edges
    items_created: int = 0     # CE chart items
    vertices_created: int = 0  # GLR stack vertices
    nodes_created: int = 0     # forest nodes
    cache_hits: int = 0
    cache_misses: int = 0

    def allocations(self) -> int:
        """Total storage proxy: everything the parse materialized."""
        return (self.categories_built + self.edges_created + self.items_created
                + self.vertices_created + self.nodes_created)

    def snapshot(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
