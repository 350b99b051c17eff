"""Datalog rules and s-expression semijoin plans."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

from ..errors import QuerySyntaxFault, UnsafeQueryFault

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"


@dataclass(frozen=True)
class Atom:
    relation: str  # symbol in the database schema
    alias: str  # unique name inside the query
    vars: tuple

    def __str__(self) -> str:
        return f"{self.alias}({', '.join(self.vars)})"


@dataclass(frozen=True)
class ConjunctiveQuery:
    head_name: str
    head: tuple
    atoms: tuple

    @property
    def free(self) -> tuple:
        return self.head

    @property
    def variables(self) -> tuple:
        """All body variables in order of first occurrence."""
        seen: dict = {}
        for a in self.atoms:
            for v in a.vars:
                seen.setdefault(v, None)
        return tuple(seen)

    @property
    def is_join_query(self) -> bool:
        return set(self.head) == set(self.variables)

    def atom(self, alias: str) -> Atom:
        for a in self.atoms:
            if a.alias == alias:
                return a
        raise KeyError(alias)

    def with_atoms(self, atoms) -> "ConjunctiveQuery":
        return ConjunctiveQuery(self.head_name, self.head, tuple(atoms))

    def __str__(self) -> str:
        return f"{self.head_name}({', '.join(self.head)}) :- {', '.join(map(str, self.atoms))}."


@dataclass(frozen=True)
class SemijoinPlan:
    """Expression node: op in {rel, select, project, rename, union, diff, sjoin}."""

    op: str
    children: tuple = ()
    args: tuple = field(default=())

    def relations(self) -> set:
        if self.op == "rel":
            return {self.args[0]}
        out = set()
        for c in self.children:
            out |= c.relations()
        return out

    def __str__(self) -> str:
        if self.op == "rel":
            return self.args[0]
        inner = " ".join([str(c) for c in self.children] + [_fmt_arg(a) for a in self.args])
        return f"({self.op} {inner})"


def _fmt_arg(a) -> str:
    if isinstance(a, tuple) and len(a) == 2 and a[0] == "const":
        v = a[1]
        return str(v) if isinstance(v, int) else f"'{v}'"
    return str(a)


# ------------------------------------------------------------------ datalog

_TOKEN = re.compile(rf"\s*(?:(?P<ident>{_IDENT})|(?P<arrow>:-|<-)|(?P<punct>[(),.])|(?P<other>\S))")


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%", 1)[0] for line in text.splitlines())


def _tokens(text: str):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            break
        kind = mt.lastgroup
        val = mt.group(kind)
        if kind == "other":
            line = text.count("\n", 0, mt.start(kind)) + 1
            raise QuerySyntaxFault(f"line {line}: unexpected character {val!r}")
        out.append((kind, val, mt.start(kind)))
        pos = mt.end()
    return out


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


def _parse_atom(toks, i, text):
    if i >= len(toks) or toks[i][0] != "ident":
        raise QuerySyntaxFault(f"line {_line_of(text, toks[i][2] if i < len(toks) else len(text))}: expected a relation name")
    name = toks[i][1]
    i += 1
    if i >= len(toks) or toks[i][1] != "(":
        raise QuerySyntaxFault(f"line {_line_of(text, toks[i - 1][2])}: expected '(' after {name}")
    i += 1
    args = []
    while True:
        if i >= len(toks):
            raise QuerySyntaxFault(f"line {_line_of(text, len(text))}: unterminated atom {name}")
        kind, val, p = toks[i]
        if val == ")" and not args:
            i += 1
            break
        if kind != "ident":
            raise QuerySyntaxFault(f"line {_line_of(text, p)}: expected a variable in {name}, found {val!r}")
        args.append(val)
        i += 1
        if i < len(toks) and toks[i][1] == ",":
            i += 1
            continue
        if i < len(toks) and toks[i][1] == ")":
            i += 1
            break
        raise QuerySyntaxFault(f"line {_line_of(text, p)}: expected ',' or ')' in {name}")
    return name, tuple(args), i


def parse_rule(text: str) -> ConjunctiveQuery:
    text = _strip_comments(text)
    toks = _tokens(text)
    if not toks:
        raise QuerySyntaxFault("empty query")
    head_name, head, i = _parse_atom(toks, 0, text)
    if i >= len(toks) or toks[i][0] != "arrow":
        raise QuerySyntaxFault(f"line {_line_of(text, toks[min(i, len(toks) - 1)][2])}: expected ':-'")
    i += 1
    body = []
    while True:
        name, args, i = _parse_atom(toks, i, text)
        body.append((name, args))
        if i < len(toks) and toks[i][1] == ",":
            i += 1
            continue
        break
    if i < len(toks) and toks[i][1] == ".":
        i += 1
    if i != len(toks):
        raise QuerySyntaxFault(f"line {_line_of(text, toks[i][2])}: trailing input {toks[i][1]!r}")
    return build_query(head_name, head, body)


def build_query(head_name: str, head, body) -> ConjunctiveQuery:
    head = tuple(head)
    if len(set(head)) != len(head):
        raise QuerySyntaxFault(f"repeated variable in head {head_name}{head}")
    for name, args in body:
        if len(set(args)) != len(args):
            raise QuerySyntaxFault(f"repeated variable in atom {name}({', '.join(args)})")
    counts = Counter(name for name, _ in body)
    used = set(counts)
    seen: Counter = Counter()
    atoms = []
    for name, args in body:
        if counts[name] > 1:
            seen[name] += 1
            alias = f"{name}_{seen[name]}"
            while alias in used:
                alias += "_"
            used.add(alias)
        else:
            alias = name
        atoms.append(Atom(name, alias, tuple(args)))
    q = ConjunctiveQuery(head_name, head, tuple(atoms))
    missing = [v for v in head if v not in q.variables]
    if missing:
        raise UnsafeQueryFault(f"head variables {missing} do not occur in the body")
    return q


# -------------------------------------------------------------------- plans

_PLAN_TOKEN = re.compile(rf"\s*(?:(?P<lp>\()|(?P<rp>\))|(?P<int>\d+)|(?P<str>'[^']*'|\"[^\"]*\")|(?P<ident>{_IDENT})|(?P<other>\S))")
_ARITY = {"union": 2, "diff": 2, "sjoin": 2}


def _plan_tokens(text: str):
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        mt = _PLAN_TOKEN.match(text, pos)
        if mt is None:
            break
        kind = mt.lastgroup
        if kind == "other":
            raise QuerySyntaxFault(f"line {_line_of(text, mt.start(kind))}: unexpected {mt.group(kind)!r}")
        out.append((kind, mt.group(kind), mt.start(kind)))
        pos = mt.end()
    return out


def parse_plan(text: str) -> SemijoinPlan:
    text = _strip_comments(text)
    toks = _plan_tokens(text)
    if not toks:
        raise QuerySyntaxFault("empty plan")
    node, i = _plan_expr(toks, 0, text)
    if i != len(toks):
        raise QuerySyntaxFault(f"line {_line_of(text, toks[i][2])}: trailing input {toks[i][1]!r}")
    return node


def _plan_expr(toks, i, text):
    if i >= len(toks):
        raise QuerySyntaxFault("unexpected end of plan")
    kind, val, p = toks[i]
    if kind == "ident":
        return SemijoinPlan("rel", (), (val,)), i + 1
    if kind != "lp":
        raise QuerySyntaxFault(f"line {_line_of(text, p)}: expected '(' or a relation name, found {val!r}")
    i += 1
    if i >= len(toks) or toks[i][0] != "ident":
        raise QuerySyntaxFault(f"line {_line_of(text, p)}: expected an operator name")
    op = toks[i][1].lower()
    i += 1
    if op in ("join", "product", "cross"):
        raise QuerySyntaxFault(f"line {_line_of(text, p)}: {op} is not part of the semijoin algebra")
    if op in _ARITY:
        left, i = _plan_expr(toks, i, text)
        right, i = _plan_expr(toks, i, text)
        node = SemijoinPlan(op, (left, right))
    elif op in ("select", "project", "rename"):
        child, i = _plan_expr(toks, i, text)
        args = []
        while i < len(toks) and toks[i][0] != "rp":
            k, v, _ = toks[i]
            if k == "int":
                args.append(("const", int(v)))
            elif k == "str":
                args.append(("const", v[1:-1]))
            elif k == "ident":
                args.append(v)
            else:
                raise QuerySyntaxFault(f"line {_line_of(text, toks[i][2])}: unexpected {v!r} in {op}")
            i += 1
        if op == "select" and (len(args) != 2 or not isinstance(args[0], str)):
            raise QuerySyntaxFault(f"line {_line_of(text, p)}: select takes an attribute and an attribute or constant")
        if op == "rename" and (len(args) != 2 or not all(isinstance(a, str) for a in args)):
            raise QuerySyntaxFault(f"line {_line_of(text, p)}: rename takes two attribute names")
        if op == "project" and not all(isinstance(a, str) for a in args):
            raise QuerySyntaxFault(f"line {_line_of(text, p)}: project takes attribute names")
        node = SemijoinPlan(op, (child,), tuple(args))
    else:
        raise QuerySyntaxFault(f"line {_line_of(text, p)}: unknown plan operator {op!r}")
    if i >= len(toks) or toks[i][0] != "rp":
        raise QuerySyntaxFault(f"line {_line_of(text, p)}: missing ')' for {op}")
    return node, i + 1


def parse_query(text: str):
    """A datalog rule (contains ':-') or an s-expression semijoin plan."""
    body = _strip_comments(text).strip()
    if ":-" in body or "<-" in body:
        return parse_rule(body)
    return parse_plan(body)
