"""Parse declarative kernel-description files into scalar graphs.

The format describes one implicit loop over ``i`` in ``[0, size)``:

    # dot product with a shifted operand
    size 8
    array src0 input size
    array src1 input size
    array dest output 1
    acc total
    loop:
        total += src0[s(i)] * src1[i]
    end:
        dest[0] = total

``array NAME ROLE LENGTH`` declares a buffer (role input/output/inout,
length an integer or ``size``); ``acc NAME`` declares a scalar accumulator
starting at 0.  Statements assign (``=``) or accumulate (``+=``) into an
array element or an accumulator.  Index expressions use ``i``, integers,
``+ - * %``, ``/`` (integer division) and the access helpers ``s(...)``
(circular shift by 2) and ``r(...)`` (xor scramble); value expressions
combine array reads, accumulators and numeric literals with ``+ - * /``.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass

from .kernels import random_index, shift_index
from .scalar_ir import ArrayDecl, GraphBuilder, ScalarGraph


class KernelDescError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


_VALUE_OPS = {ast.Add: "add", ast.Sub: "sub", ast.Mult: "mul", ast.Div: "div"}


@dataclass
class _Statement:
    line_no: int
    target: ast.expr
    value: ast.expr
    accumulate: bool


def _parse_statement(line_no: int, text: str) -> _Statement:
    accumulate = "+=" in text
    sep = "+=" if accumulate else "="
    lhs, _, rhs = text.partition(sep)
    if not rhs.strip():
        raise KernelDescError(line_no, f"expected '<target> {sep} <expression>'")
    try:
        target = ast.parse(lhs.strip(), mode="eval").body
        value = ast.parse(rhs.strip(), mode="eval").body
    except SyntaxError as exc:
        raise KernelDescError(line_no, f"bad expression: {exc.msg}") from None
    return _Statement(line_no, target, value, accumulate)


class _Kernel:
    def __init__(self):
        self.size: int | None = None
        self.arrays: list[ArrayDecl] = []
        self.accumulators: list[str] = []
        self.loop: list[_Statement] = []
        self.epilogue: list[_Statement] = []


def _parse(text: str) -> _Kernel:
    kernel = _Kernel()
    section = "decl"
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "loop:":
            section = "loop"
            continue
        if line == "end:":
            section = "end"
            continue
        if section == "decl":
            fields = line.split()
            if fields[0] == "size" and len(fields) == 2:
                kernel.size = int(fields[1])
            elif fields[0] == "array" and len(fields) == 4:
                name, role, length = fields[1:]
                if role not in ("input", "output", "inout"):
                    raise KernelDescError(line_no, f"bad array role {role!r}")
                if kernel.size is None:
                    raise KernelDescError(line_no, "declare size before arrays")
                n = kernel.size if length == "size" else int(length)
                kernel.arrays.append(ArrayDecl(name, role, n))
            elif fields[0] == "acc" and len(fields) == 2:
                kernel.accumulators.append(fields[1])
            else:
                raise KernelDescError(line_no, f"unrecognized declaration {line!r}")
        else:
            stmt = _parse_statement(line_no, line)
            (kernel.loop if section == "loop" else kernel.epilogue).append(stmt)
    if kernel.size is None:
        raise KernelDescError(0, "missing 'size' declaration")
    if not kernel.arrays:
        raise KernelDescError(0, "no arrays declared")
    return kernel


def _eval_index(expr: ast.expr, i: int, size: int, line_no: int) -> int:
    def rec(node) -> int:
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return node.value
        if isinstance(node, ast.Name):
            if node.id == "i":
                return i
            if node.id == "size":
                return size
            raise KernelDescError(line_no, f"unknown index name {node.id!r}")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            if len(node.args) != 1:
                raise KernelDescError(line_no, f"{node.func.id}() takes one argument")
            arg = rec(node.args[0])
            if node.func.id == "s":
                return shift_index(arg, size)
            if node.func.id == "r":
                return random_index(arg, size)
            raise KernelDescError(line_no, f"unknown index function {node.func.id!r}")
        if isinstance(node, ast.BinOp):
            a, b = rec(node.left), rec(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                return a // b
            if isinstance(node.op, ast.Mod):
                return a % b
            if isinstance(node.op, ast.FloorDiv):
                return a // b
        raise KernelDescError(line_no, "unsupported index expression")

    return rec(expr)


def build_from_description(text: str) -> ScalarGraph:
    kernel = _parse(text)
    size = kernel.size
    builder = GraphBuilder(kernel.arrays)
    array_names = {a.name for a in kernel.arrays}
    acc_values = {name: builder.const(0.0) for name in kernel.accumulators}

    def eval_value(node: ast.expr, i: int, line_no: int):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return builder.const(float(node.value))
        if isinstance(node, ast.Name):
            if node.id in acc_values:
                return acc_values[node.id]
            raise KernelDescError(line_no, f"unknown value name {node.id!r}")
        if isinstance(node, ast.Subscript):
            if not (isinstance(node.value, ast.Name) and node.value.id in array_names):
                raise KernelDescError(line_no, "subscript must name a declared array")
            return builder.load(node.value.id, _eval_index(node.slice, i, size, line_no))
        if isinstance(node, ast.BinOp) and type(node.op) in _VALUE_OPS:
            return builder.op(_VALUE_OPS[type(node.op)],
                              eval_value(node.left, i, line_no),
                              eval_value(node.right, i, line_no))
        raise KernelDescError(line_no, "unsupported value expression")

    def run(stmt: _Statement, i: int) -> None:
        value = eval_value(stmt.value, i, stmt.line_no)
        if isinstance(stmt.target, ast.Name) and stmt.target.id in acc_values:
            if stmt.accumulate:
                value = builder.op("add", acc_values[stmt.target.id], value)
            acc_values[stmt.target.id] = value
            return
        if isinstance(stmt.target, ast.Subscript) and \
                isinstance(stmt.target.value, ast.Name) and \
                stmt.target.value.id in array_names:
            array = stmt.target.value.id
            index = _eval_index(stmt.target.slice, i, size, stmt.line_no)
            if stmt.accumulate:
                value = builder.op("add", builder.load(array, index), value)
            builder.store(array, index, value)
            return
        raise KernelDescError(stmt.line_no, "target must be an array element or accumulator")

    for i in range(size):
        for stmt in kernel.loop:
            run(stmt, i)
    for stmt in kernel.epilogue:
        run(stmt, 0)
    return builder.finish()
