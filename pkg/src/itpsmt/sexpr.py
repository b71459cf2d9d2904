"""Minimal s-expression reader: text -> nested lists of token strings."""

from __future__ import annotations


class SexprError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0) -> None:
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line = line
        self.col = col


def tokenize(text: str):
    """Yield (token, line, col); comments run from ';' to end of line."""
    line, col = 1, 0
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 0
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            col += 1
            yield (c, line, col)
            i += 1
        else:
            start = i
            startcol = col + 1
            while i < n and text[i] not in " \t\r\n();":
                i += 1
                col += 1
            yield (text[start:i], line, startcol)


def parse_all(text: str) -> list:
    """Parse every top-level s-expression in `text`."""
    out: list = []
    stack: list[list] = []
    for tok, line, col in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise SexprError("unbalanced ')'", line, col)
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                out.append(done)
        else:
            if stack:
                stack[-1].append(tok)
            else:
                out.append(tok)
    if stack:
        raise SexprError("unbalanced '('")
    return out


def unparse(node) -> str:
    if isinstance(node, list):
        return f"({' '.join(unparse(x) for x in node)})"
    return str(node)
