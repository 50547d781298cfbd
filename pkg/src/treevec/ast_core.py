"""AST data model, JSON interchange, and tree statistics.

Trees are immutable: nodes are stored in a flat tuple indexed by id, and
ids are always assigned in preorder (root is 0). Interchange documents use
the schema ``{"root": int, "nodes": [{"id", "kind", "text", "children"}]}``;
unknown extra fields are ignored and ids are renumbered on import.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import SchemaError


@dataclass(frozen=True)
class AstNode:
    id: int
    kind: str
    text: str | None
    children: tuple[int, ...]


@dataclass(frozen=True)
class Ast:
    root: int
    nodes: tuple[AstNode, ...]
    # Optional provenance, parallel to `nodes`: byte ranges into the source
    # text and 1-based line numbers of each node's first token.
    source_span: tuple[tuple[int, int], ...] | None = None
    lines: tuple[int, ...] | None = None

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> AstNode:
        return self.nodes[node_id]

    def children_of(self, node_id: int) -> tuple[int, ...]:
        return self.nodes[node_id].children

    def line_of(self, node_id: int) -> int | None:
        if self.lines is None:
            return None
        return self.lines[node_id]


def validate_ast(ast: Ast) -> None:
    """Check the structural invariants; raises SchemaError on violation."""
    n = ast.node_count
    if n < 1:
        raise SchemaError("tree has no nodes")
    if ast.root != 0:
        raise SchemaError(f"root id must be 0 in preorder numbering, got {ast.root}")
    for i, node in enumerate(ast.nodes):
        if node.id != i:
            raise SchemaError(f"node at slot {i} carries id {node.id}")
    seen_child = set()
    for node in ast.nodes:
        for c in node.children:
            if not 0 <= c < n:
                raise SchemaError(f"node {node.id} references missing child {c}")
            if c in seen_child:
                raise SchemaError(f"node {c} has more than one parent")
            seen_child.add(c)
    if ast.root in seen_child:
        raise SchemaError("root node has a parent")
    if len(seen_child) != n - 1:
        raise SchemaError("tree is not connected: unreachable nodes present")


def ast_stats(ast: Ast) -> dict:
    """Depth (in nodes along the longest root-to-leaf path), node count, and
    the number of nodes carrying a lexical token."""
    depth = 0
    stack = [(ast.root, 1)]
    while stack:
        nid, d = stack.pop()
        if d > depth:
            depth = d
        for c in ast.nodes[nid].children:
            stack.append((c, d + 1))
    token_count = sum(1 for node in ast.nodes if node.text is not None)
    return {"depth": depth, "node_count": ast.node_count, "token_count": token_count}


def structurally_equal(a: Ast, b: Ast) -> bool:
    """Equality of shape, kinds, and token strings (provenance ignored).

    Both trees are preorder-numbered, so structural equality reduces to a
    slot-by-slot comparison.
    """
    if a.node_count != b.node_count:
        return False
    for na, nb in zip(a.nodes, b.nodes):
        if na.kind != nb.kind or na.text != nb.text or na.children != nb.children:
            return False
    return True


def export_ast_json(ast: Ast) -> dict:
    """Serialize to the interchange schema (a plain JSON-ready dict)."""
    return {
        "root": ast.root,
        "nodes": [
            {"id": n.id, "kind": n.kind, "text": n.text, "children": list(n.children)}
            for n in ast.nodes
        ],
    }


def import_ast_json(doc: dict) -> Ast:
    """Build an Ast from an interchange document.

    Node ids in the document may be arbitrary; they are renumbered to
    contiguous preorder. Raises SchemaError for missing fields, dangling
    child references, shared children, cycles, or unreachable nodes.
    """
    if not isinstance(doc, dict):
        raise SchemaError("document must be an object")
    if "root" not in doc or "nodes" not in doc:
        raise SchemaError("document must carry 'root' and 'nodes'")
    raw = {}
    for entry in doc["nodes"]:
        if not isinstance(entry, dict):
            raise SchemaError("node entry must be an object")
        if "id" not in entry or "kind" not in entry:
            raise SchemaError("node entry must carry 'id' and 'kind'")
        nid = entry["id"]
        if not isinstance(nid, int):
            raise SchemaError(f"node id must be an integer, got {nid!r}")
        if nid in raw:
            raise SchemaError(f"duplicate node id {nid}")
        text = entry.get("text")
        if text is not None and not isinstance(text, str):
            raise SchemaError(f"node {nid} text must be a string or null")
        kind = entry["kind"]
        if not isinstance(kind, str) or not kind:
            raise SchemaError(f"node {nid} kind must be a non-empty string")
        children = entry.get("children", [])
        if not isinstance(children, list):
            raise SchemaError(f"node {nid} children must be a list")
        raw[nid] = (kind, text, children)
    root = doc["root"]
    if root not in raw:
        raise SchemaError(f"root id {root} not among nodes")

    # Preorder renumbering with cycle/sharing detection.
    order: list[int] = []
    new_id: dict[int, int] = {}
    on_path: set[int] = set()
    stack: list[tuple[int, bool]] = [(root, False)]
    while stack:
        nid, done = stack.pop()
        if done:
            on_path.discard(nid)
            continue
        if nid in on_path:
            raise SchemaError(f"cycle detected through node {nid}")
        if nid in new_id:
            raise SchemaError(f"node {nid} has more than one parent")
        if nid not in raw:
            raise SchemaError(f"dangling child reference {nid}")
        new_id[nid] = len(order)
        order.append(nid)
        on_path.add(nid)
        stack.append((nid, True))
        for c in reversed(raw[nid][2]):
            stack.append((c, False))
    if len(order) != len(raw):
        raise SchemaError("tree is not connected: unreachable nodes present")

    nodes = []
    for nid in order:
        kind, text, children = raw[nid]
        nodes.append(
            AstNode(
                id=new_id[nid],
                kind=kind,
                text=text,
                children=tuple(new_id[c] for c in children),
            )
        )
    ast = Ast(root=0, nodes=tuple(nodes))
    validate_ast(ast)
    return ast


def dumps_ast(ast: Ast, indent: int | None = None) -> str:
    return json.dumps(export_ast_json(ast), indent=indent)


def loads_ast(text: str) -> Ast:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return import_ast_json(doc)
