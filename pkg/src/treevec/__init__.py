"""Code vectors from statement subtree sequences.

Parse (or import) an AST, split it into a statement subtree sequence,
encode each subtree bottom-up with a gated recursive unit, run a
bidirectional gated recurrent unit over the sequence, and max-pool into a
single code vector. Batches of trees are evaluated level-synchronously so
the whole batch advances one recursion depth per grouped step.
"""

__version__ = "0.1.0"

from .ast_core import (
    Ast,
    AstNode,
    ast_stats,
    export_ast_json,
    import_ast_json,
    structurally_equal,
)
from .minilang import parse_minilang
from .splitter import (
    RootIdentifierSet,
    StatementSubtree,
    SubtreeSequence,
    default_identifiers,
    split,
    subtree_depth,
)

__all__ = [
    "Ast",
    "AstNode",
    "ast_stats",
    "export_ast_json",
    "import_ast_json",
    "structurally_equal",
    "parse_minilang",
    "RootIdentifierSet",
    "StatementSubtree",
    "SubtreeSequence",
    "default_identifiers",
    "split",
    "subtree_depth",
    "__version__",
]
