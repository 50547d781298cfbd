"""Split an AST into an ordered sequence of statement subtrees.

A statement subtree is rooted at a node whose kind belongs to the root
identifier set and contains every descendant reachable without crossing
another statement root or a block container. Block boundary markers are
emitted so the flat sequence still reflects branch structure:

  * an ``If`` branch that is a Compound block contributes a single-token
    ``Compound`` marker on entry and an ``End`` marker on exit;
  * an ``else`` branch contributes an ``Else`` marker before its body;
  * free-standing Compound blocks in statement position are marked the
    same way as branches;
  * the body block of ``While``/``For``/``FunctionDef`` is transparent: its
    statements are visited with no surrounding markers.

With these rules the loop-with-branch example program splits into
``While, If, Compound, Assign(3), Assign(4), Assign(5), End, Else,
Assign(8), Assign(9)``: one subtree per statement, markers only around the
branch block.

Granularities: ``statement`` (the above), ``program`` (the whole AST as a
single subtree), and ``token`` (one single-node subtree per AST node).
All functions here are pure; Ast values are immutable and safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast_core import Ast
from .errors import EmptyIdentifierSet, UnknownProfile

MINILANG_STATEMENT_KINDS = frozenset(
    {"Program", "FunctionDef", "Decl", "Assign", "If", "While", "For", "Return", "ExprStmt"}
)
MINILANG_BLOCK_KINDS = frozenset({"Compound"})

# Statements whose body block is transparent (no Compound/End markers).
_BODY_HOLDERS = frozenset({"While", "For", "FunctionDef"})

# Simple statements get a source line suffix in display labels, e.g. Assign(3).
_NUMBERED_KINDS = frozenset({"Assign", "Decl", "Return", "ExprStmt"})

END_LABEL = "End"
ELSE_LABEL = "Else"


@dataclass(frozen=True)
class RootIdentifierSet:
    """Statement-root kinds plus the block kinds that produce markers."""

    kinds: frozenset[str]
    delimiters: frozenset[str] = MINILANG_BLOCK_KINDS


def default_identifiers(language_profile: str, kinds=None, delimiters=None) -> RootIdentifierSet:
    """Root identifiers for a language profile.

    ``minilang`` is the bundled parser's statement set; ``generic-json``
    echoes user-supplied kinds for externally imported trees.
    """
    if language_profile == "minilang":
        return RootIdentifierSet(kinds=MINILANG_STATEMENT_KINDS)
    if language_profile == "generic-json":
        if not kinds:
            raise EmptyIdentifierSet("generic-json profile needs explicit statement kinds")
        return RootIdentifierSet(
            kinds=frozenset(kinds),
            delimiters=frozenset(delimiters) if delimiters is not None else MINILANG_BLOCK_KINDS,
        )
    raise UnknownProfile(f"unknown language profile {language_profile!r}")


@dataclass(frozen=True)
class StatementSubtree:
    """One element of the sequence.

    ``member_ids`` is empty for synthetic markers (Compound/End/Else);
    ``root_id`` then anchors the marker to the block or branch node it
    came from. For real subtrees ``member_ids`` lists the covered nodes in
    preorder, starting with ``root_id``.
    """

    root_id: int
    member_ids: tuple[int, ...]
    label: str
    ast: Ast

    @property
    def is_marker(self) -> bool:
        return not self.member_ids

    def member_children(self, node_id: int) -> tuple[int, ...]:
        members = frozenset(self.member_ids)
        return tuple(c for c in self.ast.children_of(node_id) if c in members)

    def display_label(self) -> str:
        if self.is_marker or self.label not in _NUMBERED_KINDS:
            return self.label
        line = self.ast.line_of(self.root_id)
        return self.label if line is None else f"{self.label}({line})"


@dataclass(frozen=True)
class SubtreeSequence:
    items: tuple[StatementSubtree, ...]
    source_ast: Ast

    def __len__(self) -> int:
        return len(self.items)

    def labels(self) -> list[str]:
        return [s.label for s in self.items]

    def display_labels(self) -> list[str]:
        return [s.display_label() for s in self.items]


def _collect_members(ast: Ast, root_id: int, stop_kinds: frozenset[str]) -> tuple[int, ...]:
    """Preorder members of the subtree at root_id, not descending into
    nodes whose kind is in stop_kinds."""
    members = []
    stack = [root_id]
    while stack:
        nid = stack.pop()
        members.append(nid)
        for c in reversed(ast.children_of(nid)):
            if ast.node(c).kind not in stop_kinds:
                stack.append(c)
    return tuple(members)


def split(ast: Ast, identifiers: RootIdentifierSet, granularity: str = "statement") -> SubtreeSequence:
    """Transform an AST into its subtree sequence at the given granularity."""
    if granularity == "program":
        all_ids = _collect_members(ast, ast.root, frozenset())
        root_kind = ast.node(ast.root).kind
        items = (StatementSubtree(ast.root, all_ids, root_kind, ast),)
        return SubtreeSequence(items=items, source_ast=ast)
    if granularity == "token":
        order = _collect_members(ast, ast.root, frozenset())
        items = tuple(
            StatementSubtree(nid, (nid,), ast.node(nid).kind, ast) for nid in order
        )
        return SubtreeSequence(items=items, source_ast=ast)
    if granularity != "statement":
        raise ValueError(f"unknown granularity {granularity!r}")
    if not identifiers.kinds:
        raise EmptyIdentifierSet("statement granularity needs a non-empty identifier set")

    kinds = identifiers.kinds
    blocks = identifiers.delimiters
    stop = kinds | blocks
    out: list[StatementSubtree] = []

    def marker(label: str, anchor: int) -> None:
        out.append(StatementSubtree(anchor, (), label, ast))

    def visit_statement(nid: int) -> None:
        node = ast.node(nid)
        members = _collect_members(ast, nid, stop)
        out.append(StatementSubtree(nid, members, node.kind, ast))
        member_set = frozenset(members)
        if node.kind == "If" and len(node.children) >= 2:
            then_branch = node.children[1]
            visit_branch(then_branch)
            if len(node.children) >= 3:
                marker(ELSE_LABEL, nid)
                visit_branch(node.children[2])
            return
        if node.kind in _BODY_HOLDERS and node.children:
            body = node.children[-1]
            if ast.node(body).kind in blocks:
                for c in ast.children_of(body):
                    dispatch(c)
                return
        # Generic continuation: recurse into boundary children (nested
        # statement roots or block nodes that were cut out of the members),
        # in preorder encounter order.
        for child in _boundary_children(nid, member_set):
            dispatch(child)

    def _boundary_children(nid: int, member_set: frozenset[int]):
        found = []

        def walk(cur: int) -> None:
            for c in ast.children_of(cur):
                if c in member_set:
                    walk(c)
                else:
                    found.append(c)

        walk(nid)
        return found

    def visit_branch(nid: int) -> None:
        if ast.node(nid).kind in blocks:
            marked_block(nid)
        else:
            dispatch(nid)

    def marked_block(nid: int) -> None:
        marker("Compound", nid)
        for c in ast.children_of(nid):
            dispatch(c)
        marker(END_LABEL, nid)

    def dispatch(nid: int) -> None:
        node = ast.node(nid)
        if node.kind in kinds:
            visit_statement(nid)
        elif node.kind in blocks:
            marked_block(nid)
        else:
            # Not a statement root: scan below for nested roots.
            for c in node.children:
                dispatch(c)

    dispatch(ast.root)
    return SubtreeSequence(items=tuple(out), source_ast=ast)


def subtree_depth(subtree: StatementSubtree) -> int:
    """Longest root-to-leaf path inside the subtree, counted in nodes.
    Markers count as a single virtual node."""
    if subtree.is_marker:
        return 1
    members = frozenset(subtree.member_ids)
    ast = subtree.ast
    best = 0
    stack = [(subtree.root_id, 1)]
    while stack:
        nid, d = stack.pop()
        if d > best:
            best = d
        for c in ast.children_of(nid):
            if c in members:
                stack.append((c, d + 1))
    return best


def subtree_node_count(subtree: StatementSubtree) -> int:
    return 1 if subtree.is_marker else len(subtree.member_ids)
