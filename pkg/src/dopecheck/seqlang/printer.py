"""Pretty printer producing source that parses back to the same tree."""
from __future__ import annotations

from ..values import fmt
from .ast import Assign, If, NondetAssign, Program, Seq, Skip, Stmt, While

INDENT = "  "


def _block(s: Stmt, depth: int) -> list[str]:
    items = s.flatten() if isinstance(s, Seq) else [s]
    lines: list[str] = []
    for n, item in enumerate(items):
        chunk = _stmt(item, depth)
        if n < len(items) - 1:
            chunk[-1] += ";"
        lines.extend(chunk)
    return lines


def _stmt(s: Stmt, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, Skip):
        return [pad + "skip"]
    if isinstance(s, Assign):
        return [f"{pad}{s.var} := {s.expr.render()}"]
    if isinstance(s, NondetAssign):
        return [f"{pad}{s.var} :in [{s.lo.render()}, {s.hi.render()}]"]
    if isinstance(s, If):
        out = [f"{pad}if {s.cond.render()} {{", *_block(s.then, depth + 1)]
        if isinstance(s.else_, Skip):
            out.append(pad + "}")
        else:
            out += [pad + "} else {", *_block(s.else_, depth + 1), pad + "}"]
        return out
    if isinstance(s, While):
        return [f"{pad}while {s.cond.render()} {{", *_block(s.body, depth + 1), pad + "}"]
    return _block(s, depth)


def format_stmt(s: Stmt) -> str:
    return "\n".join(_block(s, 0))


def format_program(p: Program) -> str:
    lines = [f"const {name} = {fmt(v)};" for name, v in p.consts]
    for d in p.decls:
        dom = f" in {d.grid.bracket()}" if d.grid is not None else ""
        lines.append(f"{d.role} {d.name}{dom};")
    lines.extend(_block(p.body, 0))
    return "\n".join(lines) + "\n"
