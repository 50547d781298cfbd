"""Recursive-descent parser for the bundled C-like mini-language.

Grammar (statements produce the node kinds the splitter keys on):

    program    : (function | statement)* EOF
    function   : 'int' IDENT '(' params? ')' compound
    params     : 'int' IDENT (',' 'int' IDENT)*
    statement  : compound | decl | if | while | for | return
               | assign | exprstmt
    compound   : '{' statement* '}'
    decl       : 'int' IDENT ('=' expr)? ';'
    assign     : IDENT '=' expr ';'
    if         : 'if' '(' expr ')' statement ('else' statement)?
    while      : 'while' '(' expr ')' statement
    for        : 'for' '(' forclause? ';' expr? ';' forclause? ')' statement
    forclause  : IDENT '=' expr                 -> kind AssignExpr
    return     : 'return' expr? ';'
    exprstmt   : expr ';'
    expr       : additive (RELOP additive)?     RELOP: < > <= >= == !=
    additive   : term (('+' | '-') term)*
    term       : unary (('*' | '/' | '%') unary)*
    unary      : '-' unary | primary
    primary    : INT | IDENT | IDENT '(' args? ')' | '(' expr ')'

A program with a single top-level item is returned unwrapped; otherwise the
items hang under a Program node. Node ids are assigned in preorder so that
identical source always yields an identical tree.
"""

from __future__ import annotations

import re

from .ast_core import Ast, AstNode
from .errors import ParseError

KEYWORDS = {"int", "if", "else", "while", "for", "return"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|!=|[-+*/%<>=;,(){}])
    """,
    re.VERBOSE,
)


class _Token:
    __slots__ = ("kind", "value", "line", "col", "pos")

    def __init__(self, kind, value, line, col, pos):
        self.kind = kind  # 'int' | 'ident' | keyword/operator literal | 'eof'
        self.value = value
        self.line = line
        self.col = col
        self.pos = pos

    def __repr__(self):
        return f"_Token({self.kind!r}, {self.value!r}, {self.line}:{self.col})"


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {source[pos]!r}",
                line,
                pos - line_start + 1,
                source[pos],
            )
        group = m.lastgroup
        text = m.group()
        if group in ("ws", "comment"):
            line += text.count("\n")
            if "\n" in text:
                line_start = m.start() + text.rindex("\n") + 1
        else:
            col = m.start() - line_start + 1
            if group == "int":
                tokens.append(_Token("int_lit", text, line, col, m.start()))
            elif group == "ident":
                kind = text if text in KEYWORDS else "ident"
                tokens.append(_Token(kind, text, line, col, m.start()))
            else:
                tokens.append(_Token(text, text, line, col, m.start()))
        pos = m.end()
    tokens.append(_Token("eof", "", line, n - line_start + 1, n))
    return tokens


class _Node:
    """Mutable build-time node; flattened to AstNode at the end."""

    __slots__ = ("kind", "text", "children", "line", "start", "end")

    def __init__(self, kind, text=None, children=None, line=0, start=0, end=0):
        self.kind = kind
        self.text = text
        self.children = children if children is not None else []
        self.line = line
        self.start = start
        self.end = end


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    # token plumbing -----------------------------------------------------

    def peek(self, ahead=0) -> _Token:
        j = min(self.i + ahead, len(self.tokens) - 1)
        return self.tokens[j]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def expect(self, kind) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"expected {kind!r} but found {tok.value or 'end of input'!r}",
                tok.line,
                tok.col,
                tok.value,
            )
        return self.next()

    def fail(self, message) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col, tok.value)

    # grammar ------------------------------------------------------------

    def parse_program(self) -> _Node:
        start = self.peek()
        items = []
        while self.peek().kind != "eof":
            if self.peek().kind == "int" and self.peek(2).kind == "(":
                items.append(self.parse_function())
            else:
                items.append(self.parse_statement())
        if not items:
            raise self.fail("empty input")
        if len(items) == 1:
            return items[0]
        node = _Node("Program", line=start.line, start=start.pos)
        node.children = items
        node.end = items[-1].end
        return node

    def parse_function(self) -> _Node:
        kw = self.expect("int")
        name = self.expect("ident")
        node = _Node("FunctionDef", text=name.value, line=kw.line, start=kw.pos)
        self.expect("(")
        if self.peek().kind != ")":
            while True:
                self.expect("int")
                pname = self.expect("ident")
                node.children.append(
                    _Node("Param", text=pname.value, line=pname.line,
                          start=pname.pos, end=pname.pos + len(pname.value))
                )
                if self.peek().kind != ",":
                    break
                self.next()
        self.expect(")")
        body = self.parse_compound()
        node.children.append(body)
        node.end = body.end
        return node

    def parse_statement(self) -> _Node:
        tok = self.peek()
        if tok.kind == "{":
            return self.parse_compound()
        if tok.kind == "int":
            return self.parse_decl()
        if tok.kind == "if":
            return self.parse_if()
        if tok.kind == "while":
            return self.parse_while()
        if tok.kind == "for":
            return self.parse_for()
        if tok.kind == "return":
            return self.parse_return()
        if tok.kind == "ident" and self.peek(1).kind == "=":
            return self.parse_assign()
        if tok.kind in ("ident", "int_lit", "(", "-"):
            node = _Node("ExprStmt", line=tok.line, start=tok.pos)
            node.children.append(self.parse_expr())
            end = self.expect(";")
            node.end = end.pos + 1
            return node
        raise self.fail(f"expected a statement, found {tok.value or 'end of input'!r}")

    def parse_compound(self) -> _Node:
        open_tok = self.expect("{")
        node = _Node("Compound", line=open_tok.line, start=open_tok.pos)
        while self.peek().kind != "}":
            if self.peek().kind == "eof":
                raise self.fail("unterminated block: missing '}'")
            node.children.append(self.parse_statement())
        close = self.expect("}")
        node.end = close.pos + 1
        return node

    def parse_decl(self) -> _Node:
        kw = self.expect("int")
        name = self.expect("ident")
        node = _Node("Decl", text=name.value, line=kw.line, start=kw.pos)
        if self.peek().kind == "=":
            self.next()
            node.children.append(self.parse_expr())
        end = self.expect(";")
        node.end = end.pos + 1
        return node

    def parse_assign(self) -> _Node:
        name = self.expect("ident")
        node = _Node("Assign", line=name.line, start=name.pos)
        target = _Node("Identifier", text=name.value, line=name.line,
                       start=name.pos, end=name.pos + len(name.value))
        self.expect("=")
        node.children = [target, self.parse_expr()]
        end = self.expect(";")
        node.end = end.pos + 1
        return node

    def parse_forclause(self) -> _Node:
        name = self.expect("ident")
        node = _Node("AssignExpr", line=name.line, start=name.pos)
        target = _Node("Identifier", text=name.value, line=name.line,
                       start=name.pos, end=name.pos + len(name.value))
        self.expect("=")
        node.children = [target, self.parse_expr()]
        node.end = node.children[-1].end
        return node

    def parse_if(self) -> _Node:
        kw = self.expect("if")
        node = _Node("If", line=kw.line, start=kw.pos)
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_statement()
        node.children = [cond, then]
        node.end = then.end
        if self.peek().kind == "else":
            self.next()
            other = self.parse_statement()
            node.children.append(other)
            node.end = other.end
        return node

    def parse_while(self) -> _Node:
        kw = self.expect("while")
        node = _Node("While", line=kw.line, start=kw.pos)
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        body = self.parse_statement()
        node.children = [cond, body]
        node.end = body.end
        return node

    def parse_for(self) -> _Node:
        kw = self.expect("for")
        node = _Node("For", line=kw.line, start=kw.pos)
        self.expect("(")
        if self.peek().kind != ";":
            node.children.append(self.parse_forclause())
        self.expect(";")
        if self.peek().kind != ";":
            node.children.append(self.parse_expr())
        self.expect(";")
        if self.peek().kind != ")":
            node.children.append(self.parse_forclause())
        self.expect(")")
        body = self.parse_statement()
        node.children.append(body)
        node.end = body.end
        return node

    def parse_return(self) -> _Node:
        kw = self.expect("return")
        node = _Node("Return", line=kw.line, start=kw.pos)
        if self.peek().kind != ";":
            node.children.append(self.parse_expr())
        end = self.expect(";")
        node.end = end.pos + 1
        return node

    def parse_expr(self) -> _Node:
        left = self.parse_additive()
        tok = self.peek()
        if tok.kind in ("<", ">", "<=", ">=", "==", "!="):
            self.next()
            right = self.parse_additive()
            node = _Node("BinaryOp", text=tok.kind, line=left.line, start=left.start)
            node.children = [left, right]
            node.end = right.end
            return node
        return left

    def parse_additive(self) -> _Node:
        left = self.parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.next()
            right = self.parse_term()
            node = _Node("BinaryOp", text=op.kind, line=left.line, start=left.start)
            node.children = [left, right]
            node.end = right.end
            left = node
        return left

    def parse_term(self) -> _Node:
        left = self.parse_unary()
        while self.peek().kind in ("*", "/", "%"):
            op = self.next()
            right = self.parse_unary()
            node = _Node("BinaryOp", text=op.kind, line=left.line, start=left.start)
            node.children = [left, right]
            node.end = right.end
            left = node
        return left

    def parse_unary(self) -> _Node:
        tok = self.peek()
        if tok.kind == "-":
            self.next()
            operand = self.parse_unary()
            node = _Node("UnaryOp", text="-", line=tok.line, start=tok.pos)
            node.children = [operand]
            node.end = operand.end
            return node
        return self.parse_primary()

    def parse_primary(self) -> _Node:
        tok = self.peek()
        if tok.kind == "int_lit":
            self.next()
            return _Node("Constant", text=tok.value, line=tok.line,
                         start=tok.pos, end=tok.pos + len(tok.value))
        if tok.kind == "ident":
            self.next()
            if self.peek().kind == "(":
                node = _Node("Call", text=tok.value, line=tok.line, start=tok.pos)
                self.next()
                if self.peek().kind != ")":
                    while True:
                        node.children.append(self.parse_expr())
                        if self.peek().kind != ",":
                            break
                        self.next()
                close = self.expect(")")
                node.end = close.pos + 1
                return node
            return _Node("Identifier", text=tok.value, line=tok.line,
                         start=tok.pos, end=tok.pos + len(tok.value))
        if tok.kind == "(":
            self.next()
            node = self.parse_expr()
            self.expect(")")
            return node
        raise self.fail(f"expected an expression, found {tok.value or 'end of input'!r}")


def _flatten(root: _Node) -> Ast:
    nodes: list[AstNode] = []
    spans: list[tuple[int, int]] = []
    lines: list[int] = []

    def assign(node: _Node) -> int:
        nid = len(nodes)
        nodes.append(None)  # placeholder, children numbered next
        spans.append((node.start, node.end))
        lines.append(node.line)
        child_ids = tuple(assign(c) for c in node.children)
        nodes[nid] = AstNode(id=nid, kind=node.kind, text=node.text, children=child_ids)
        return nid

    assign(root)
    return Ast(root=0, nodes=tuple(nodes), source_span=tuple(spans), lines=tuple(lines))


def parse_minilang(source: str) -> Ast:
    """Parse mini-language source text into an Ast.

    Deterministic: byte-identical input gives an identical tree, including
    id assignment. Raises ParseError with line/column on malformed input.
    """
    return _flatten(_Parser(source).parse_program())
