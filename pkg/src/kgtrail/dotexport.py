"""Graphviz DOT rendering of explored subgraphs.

Output is deterministic: nodes and edges are emitted in sorted order, so
the same subgraphs always produce byte-identical text.  Topic entities are
drawn as boxes, everything else as the default shape.
"""

from __future__ import annotations

from collections.abc import Sequence

from .model import Subgraph, subgraph_triples


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(subgraphs: Sequence[Subgraph], name: str = "exploration") -> str:
    """Render subgraphs as one directed graph.

    Edges point from triple head to triple tail regardless of the direction
    the path traversed them, so the drawing shows stored facts.
    """
    labels: dict[str, str] = {}
    topics: set[str] = set()
    edges: set[tuple[str, str, str]] = set()
    for subgraph in subgraphs:
        topics.add(subgraph.topic.id)
        labels.setdefault(subgraph.topic.id, subgraph.topic.display)
        for path in subgraph.paths:
            for entity in path.entities():
                labels.setdefault(entity.id, entity.display)
        for triple, _direction in subgraph_triples(subgraph):
            labels.setdefault(triple.head.id, triple.head.display)
            labels.setdefault(triple.tail.id, triple.tail.display)
            edges.add((triple.head.id, triple.tail.id, triple.relation.name))

    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    for entity_id in sorted(labels, key=lambda i: (labels[i], i)):
        attributes = f'label="{_escape(labels[entity_id])}"'
        if entity_id in topics:
            attributes += " shape=box"
        lines.append(f'  "{_escape(entity_id)}" [{attributes}];')
    for head, tail, relation in sorted(edges):
        lines.append(f'  "{_escape(head)}" -> "{_escape(tail)}" [label="{_escape(relation)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
