from __future__ import annotations

from typing import Sequence

from ..topology import ComponentInstanceTree
from .resolve import Outcome, RouteRequest


def _q(s: object) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _route_edges(outcome: Outcome) -> list[tuple]:
    # capability flow runs provider -> consumer, the reverse of the hop chain
    monikers = [h.moniker for h in reversed(outcome.hops)]
    edges = []
    for a, b in zip(monikers, monikers[1:]):
        if a != b:
            edges.append((a, b))
    return edges


def export_dot(tree: ComponentInstanceTree, results: Sequence[tuple[RouteRequest, Outcome]] = ()) -> str:
    """Render the instance tree plus route hops as a DOT digraph.

    Tree edges are solid. Each route becomes dashed edges numbered from 1 in
    the direction the capability travels; failed routes are drawn red up to
    the break.
    """
    lines = ["digraph routes {", "  rankdir=TB;", "  node [shape=box];"]
    for inst in tree:
        lines.append(f"  {_q(inst.moniker)} [label={_q(inst.moniker.leaf or '/')}];")
    for inst in tree:
        for child in inst.children.values():
            lines.append(f"  {_q(inst.moniker)} -> {_q(child.moniker)} [style=solid];")
    for req, outcome in results:
        color = "blue" if outcome.ok else "red"
        tip = f"{req.cap_type}/{req.name}"
        for n, (a, b) in enumerate(_route_edges(outcome), start=1):
            lines.append(
                f"  {_q(a)} -> {_q(b)} [style=dashed, color={color}, label={_q(n)}, tooltip={_q(tip)}];"
            )
        if not outcome.ok:
            lines.append(f"  {_q(outcome.at)} [color=red];")
    lines.append("}")
    return "\n".join(lines) + "\n"
