"""Synthetic mini-language corpora for tests, experiments, and benchmarks.

The classification corpus has four classes built from two structural bits
that are invisible to degenerate encoders:

  * order bit: whether the ``+`` marker assignment comes before or after
    the ``*`` marker assignment. Statement token multisets are identical
    either way, so a model without the sequence encoder cannot see it.
  * shape bit: one assignment's right-hand side is either a left-leaning
    chain of subtractions or a balanced tree over the same five operands.
    Token multisets per statement are identical, so a model that averages
    token embeddings instead of encoding the subtree cannot see it.

Everything else (identifier names, constants, filler statements) is
label-independent lexical noise. Clone-detection pairs come from eight
structural templates: instances of one template differ only by renamed
identifiers and fresh constants.
"""

from __future__ import annotations

import string

from .minilang import KEYWORDS

_LETTERS = list(string.ascii_lowercase)

# Closed identifier pool shared by all generated programs: names are noise,
# but a bounded vocabulary keeps train and test token distributions equal.
_NAME_POOL = tuple(
    a + b for a in string.ascii_lowercase for b in "aeioux" if a + b not in KEYWORDS
)


class _Names:
    """Random identifiers from the shared pool, unique within one program."""

    def __init__(self, rng):
        self.rng = rng
        self.order = list(rng.permutation(len(_NAME_POOL)))

    def fresh(self) -> str:
        return _NAME_POOL[self.order.pop()]


def _const(rng, lo=0, hi=100) -> str:
    return str(int(rng.integers(lo, hi)))


def _filler(rng, names: _Names) -> str:
    pick = int(rng.integers(3))
    if pick == 0:
        return f"int {names.fresh()} = {_const(rng)};"
    if pick == 1:
        return f"{names.fresh()} = {names.fresh()};"
    return f"{names.fresh()} = {names.fresh()} - {_const(rng)};"


def classification_sample(rng, label: int) -> str:
    """One program of the given class (0..3)."""
    if not 0 <= label <= 3:
        raise ValueError("label must be in 0..3")
    order_bit = label % 2
    shape_bit = label // 2
    names = _Names(rng)

    plus = f"{names.fresh()} = {names.fresh()} + {names.fresh()};"
    times = f"{names.fresh()} = {names.fresh()} * {names.fresh()};"
    markers = [plus, times] if order_bit == 0 else [times, plus]

    ops = [names.fresh() for _ in range(5)]
    target = names.fresh()
    if shape_bit == 0:
        shape = f"{target} = {ops[0]} - {ops[1]} - {ops[2]} - {ops[3]} - {ops[4]};"
    else:
        shape = (
            f"{target} = ({ops[0]} - {ops[1]})"
            f" - (({ops[2]} - {ops[3]}) - {ops[4]});"
        )

    statements = [markers[0]]
    for _ in range(int(rng.integers(0, 3))):
        statements.append(_filler(rng, names))
    statements.append(markers[1])
    for _ in range(int(rng.integers(0, 3))):
        statements.append(_filler(rng, names))
    statements.insert(int(rng.integers(0, len(statements) + 1)), shape)
    for _ in range(int(rng.integers(0, 2))):
        statements.insert(0, _filler(rng, names))

    body = "\n    ".join(statements)
    return f"int {names.fresh()}() {{\n    {body}\n}}\n"


def make_classification_corpus(n: int, rng) -> list[tuple[str, int]]:
    """Balanced 4-class corpus of n programs, shuffled."""
    samples = [(classification_sample(rng, i % 4), i % 4) for i in range(n)]
    order = rng.permutation(n)
    return [samples[i] for i in order]


# ---------------------------------------------------------------------------
# clone templates


def _t_sum_while(rng, nm):
    s, i, f = nm.fresh(), nm.fresh(), nm.fresh()
    return (
        f"int {f}() {{\n    int {s} = 0;\n    int {i} = 0;\n"
        f"    while ({i} < {_const(rng, 5, 50)}) {{\n"
        f"        {s} = {s} + {i};\n        {i} = {i} + 1;\n    }}\n"
        f"    return {s};\n}}\n"
    )


def _t_product_for(rng, nm):
    p, i, f = nm.fresh(), nm.fresh(), nm.fresh()
    return (
        f"int {f}() {{\n    int {p} = 1;\n"
        f"    for ({i} = 1; {i} < {_const(rng, 3, 12)}; {i} = {i} + 1) {{\n"
        f"        {p} = {p} * {i};\n    }}\n    return {p};\n}}\n"
    )


def _t_branch_max(rng, nm):
    a, b, m, f = nm.fresh(), nm.fresh(), nm.fresh(), nm.fresh()
    return (
        f"int {f}() {{\n    int {a} = {_const(rng)};\n    int {b} = {_const(rng)};\n"
        f"    int {m} = 0;\n    if ({a} < {b}) {{\n        {m} = {b};\n    }}\n"
        f"    else {{\n        {m} = {a};\n    }}\n    return {m};\n}}\n"
    )


def _t_nested_loops(rng, nm):
    i, j, t, f = nm.fresh(), nm.fresh(), nm.fresh(), nm.fresh()
    return (
        f"int {f}() {{\n    int {t} = 0;\n    int {i} = 0;\n"
        f"    while ({i} < {_const(rng, 3, 10)}) {{\n        int {j} = 0;\n"
        f"        while ({j} < {_const(rng, 3, 10)}) {{\n"
        f"            {t} = {t} + {i} * {j};\n            {j} = {j} + 1;\n        }}\n"
        f"        {i} = {i} + 1;\n    }}\n    return {t};\n}}\n"
    )


def _t_countdown(rng, nm):
    n, s, f = nm.fresh(), nm.fresh(), nm.fresh()
    return (
        f"int {f}() {{\n    int {n} = {_const(rng, 10, 90)};\n    int {s} = 0;\n"
        f"    while ({n} > 0) {{\n        {n} = {n} - 1;\n        {s} = {s} + 2;\n    }}\n"
        f"    return {s};\n}}\n"
    )


def _t_ladder(rng, nm):
    x, y, f = nm.fresh(), nm.fresh(), nm.fresh()
    return (
        f"int {f}() {{\n    int {x} = {_const(rng)};\n    int {y} = 0;\n"
        f"    if ({x} < 10) {{\n        {y} = {y} + 1;\n    }}\n"
        f"    else {{\n        if ({x} < 100) {{\n            {y} = {y} + 2;\n        }}\n"
        f"        else {{\n            {y} = {y} + 3;\n        }}\n    }}\n"
        f"    return {y};\n}}\n"
    )


def _t_guarded_for(rng, nm):
    s, i, f = nm.fresh(), nm.fresh(), nm.fresh()
    k = _const(rng, 2, 9)
    return (
        f"int {f}() {{\n    int {s} = 0;\n"
        f"    for ({i} = 0; {i} < {_const(rng, 10, 40)}; {i} = {i} + 1) {{\n"
        f"        if ({i} < {k}) {{\n            {s} = {s} + {i};\n        }}\n"
        f"        else {{\n            {s} = {s} - 1;\n        }}\n    }}\n"
        f"    return {s};\n}}\n"
    )


def _t_helper_call(rng, nm):
    a, b, h, r, f = nm.fresh(), nm.fresh(), nm.fresh(), nm.fresh(), nm.fresh()
    return (
        f"int {h}(int {a}, int {b}) {{\n    return {a} + {b} - {_const(rng)};\n}}\n"
        f"int {f}() {{\n    int {r} = 0;\n    {r} = {h}({_const(rng)}, {_const(rng)});\n"
        f"    return {r};\n}}\n"
    )


CLONE_TEMPLATES = (
    _t_sum_while,
    _t_product_for,
    _t_branch_max,
    _t_nested_loops,
    _t_countdown,
    _t_ladder,
    _t_guarded_for,
    _t_helper_call,
)


def clone_template_instance(rng, template_index: int) -> str:
    return CLONE_TEMPLATES[template_index](rng, _Names(rng))


def make_clone_corpus(n_pairs: int, rng) -> tuple[dict[str, str], list[tuple[str, str, int]]]:
    """Programs table plus labeled pairs; half clones, half non-clones.

    Every pair uses two freshly generated programs, so no program is
    shared between pairs.
    """
    programs: dict[str, str] = {}
    pairs: list[tuple[str, str, int]] = []

    def register(source: str) -> str:
        pid = f"p{len(programs):06d}"
        programs[pid] = source
        return pid

    ntemp = len(CLONE_TEMPLATES)
    for k in range(n_pairs):
        if k % 2 == 0:
            t = int(rng.integers(ntemp))
            a = register(clone_template_instance(rng, t))
            b = register(clone_template_instance(rng, t))
            pairs.append((a, b, 1))
        else:
            t1 = int(rng.integers(ntemp))
            t2 = int(rng.integers(ntemp - 1))
            if t2 >= t1:
                t2 += 1
            a = register(clone_template_instance(rng, t1))
            b = register(clone_template_instance(rng, t2))
            pairs.append((a, b, 0))
    order = rng.permutation(len(pairs))
    return programs, [pairs[i] for i in order]


def bench_corpus(n: int, rng) -> list[str]:
    """Homogeneous corpus: same template and sizes, names varied."""
    out = []
    for _ in range(n):
        nm = _Names(rng)
        s, i, a, b, f = nm.fresh(), nm.fresh(), nm.fresh(), nm.fresh(), nm.fresh()
        out.append(
            f"int {f}() {{\n    int {s} = 0;\n    int {a} = 3;\n    int {b} = 4;\n"
            f"    int {i} = 0;\n    while ({i} < 10) {{\n"
            f"        if ({a} < {b}) {{\n            {s} = {s} + {a} * {i};\n        }}\n"
            f"        else {{\n            {s} = {s} - {b};\n        }}\n"
            f"        {i} = {i} + 1;\n    }}\n    return {s};\n}}\n"
        )
    return out


# ---------------------------------------------------------------------------
# grammar-directed random programs (round-trip fuzzing)


def random_expr(rng, names: _Names, depth: int) -> str:
    if depth <= 0 or rng.random() < 0.4:
        return names.fresh() if rng.random() < 0.6 else _const(rng)
    pick = int(rng.integers(4))
    if pick == 0:
        op = rng.choice(["+", "-", "*", "/", "%"])
        return f"{random_expr(rng, names, depth - 1)} {op} {random_expr(rng, names, depth - 1)}"
    if pick == 1:
        return f"({random_expr(rng, names, depth - 1)})"
    if pick == 2:
        return f"-{random_expr(rng, names, depth - 1)}"
    args = ", ".join(random_expr(rng, names, depth - 1) for _ in range(int(rng.integers(0, 3))))
    return f"{names.fresh()}({args})"


def random_statement(rng, names: _Names, depth: int) -> str:
    pick = int(rng.integers(8)) if depth > 0 else int(rng.integers(3))
    if pick == 0:
        return f"{names.fresh()} = {random_expr(rng, names, 2)};"
    if pick == 1:
        init = f" = {random_expr(rng, names, 2)}" if rng.random() < 0.7 else ""
        return f"int {names.fresh()}{init};"
    if pick == 2:
        return f"return {random_expr(rng, names, 1)};"
    if pick == 3:
        cond = f"{random_expr(rng, names, 1)} < {random_expr(rng, names, 1)}"
        body = random_statement(rng, names, depth - 1)
        if rng.random() < 0.5:
            other = random_statement(rng, names, depth - 1)
            return f"if ({cond}) {body} else {other}"
        return f"if ({cond}) {body}"
    if pick == 4:
        cond = f"{random_expr(rng, names, 1)} < {_const(rng)}"
        return f"while ({cond}) {random_statement(rng, names, depth - 1)}"
    if pick == 5:
        v = names.fresh()
        body = random_statement(rng, names, depth - 1)
        return f"for ({v} = 0; {v} < {_const(rng)}; {v} = {v} + 1) {body}"
    if pick == 6:
        inner = " ".join(
            random_statement(rng, names, depth - 1)
            for _ in range(int(rng.integers(1, 4)))
        )
        return f"{{ {inner} }}"
    return f"{random_expr(rng, names, 2)};"


def random_program(rng, max_statements: int = 5, depth: int = 2) -> str:
    names = _Names(rng)
    if rng.random() < 0.5:
        body = "\n    ".join(
            random_statement(rng, names, depth)
            for _ in range(int(rng.integers(1, max_statements + 1)))
        )
        params = ""
        if rng.random() < 0.5:
            params = ", ".join(f"int {names.fresh()}" for _ in range(int(rng.integers(1, 3))))
        return f"int {names.fresh()}({params}) {{\n    {body}\n}}\n"
    return "\n".join(
        random_statement(rng, names, depth)
        for _ in range(int(rng.integers(1, max_statements + 1)))
    )
