"""Minimal s-expression reader shared by the SMT model decoder and the
bundled solver front end."""

from __future__ import annotations

from typing import Iterator, Union

SExpr = Union[str, list]


class SExprError(Exception):
    pass


def tokenize(text: str) -> Iterator[str]:
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c in "()":
            yield c
            i += 1
            continue
        if c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SExprError("unterminated |symbol|")
            yield text[i : j + 1]
            i = j + 1
            continue
        if c == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise SExprError("unterminated string")
            yield text[i : j + 1]
            i = j + 1
            continue
        j = i
        while j < n and text[j] not in " \t\r\n();|\"":
            j += 1
        yield text[i:j]
        i = j


def parse_all(text: str) -> list[SExpr]:
    """Parse a sequence of top-level s-expressions."""
    stack: list[list] = []
    top: list[SExpr] = []
    for tok in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise SExprError("unbalanced ')'")
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                top.append(done)
        else:
            if stack:
                stack[-1].append(tok)
            else:
                top.append(tok)
    if stack:
        raise SExprError("unbalanced '('")
    return top


def strip_pipes(sym: str) -> str:
    if len(sym) >= 2 and sym.startswith("|") and sym.endswith("|"):
        return sym[1:-1]
    return sym
