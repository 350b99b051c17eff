"""Relations as cell arrays, access settings, tokens and dictionaries."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BoundsFault, LoadFault, ParameterFault, PreconditionFault, SettingFault
from .kernel import NONE, Machine, SharedArray

LINK_SLOTS = ("partner", "representative", "projection", "group_lo", "group_hi", "pred", "succ",
              "origin", "image")


class Setting(str, Enum):
    GENERAL = "general"
    ORDERED = "ordered"
    DICTIONARY = "dictionary"

    @classmethod
    def parse(cls, text) -> "Setting":
        if isinstance(text, Setting):
            return text
        try:
            return cls(str(text).lower())
        except ValueError:
            raise ParameterFault(f"unknown setting {text!r}") from None


# ------------------------------------------------------------------ domains


class Domain:
    """How payload words compare.  Algorithms only use ``eq`` and ``cmp``."""

    setting: Setting

    def eq(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def cmp(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def ordered(self) -> bool:
        return self.setting is not Setting.GENERAL


class IntDomain(Domain):
    """Dictionary setting: payloads are small naturals."""

    def __init__(self, bound: int, size: int | None = None):
        self.setting = Setting.DICTIONARY
        self.bound = int(bound)
        self.size = int(bound if size is None else size)

    def eq(self, a, b):
        return np.asarray(a) == np.asarray(b)

    def cmp(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        return (a > b).astype(np.int64) - (a < b).astype(np.int64)


class TokenDomain(Domain):
    """General/ordered setting: payloads are token ids resolved through the store."""

    def __init__(self, store: "TokenStore", setting: Setting):
        self.setting = setting
        self.store = store

    def eq(self, a, b):
        v = self.store.values
        return np.asarray(v[np.asarray(a)] == v[np.asarray(b)], dtype=bool)

    def cmp(self, a, b):
        if self.setting is Setting.GENERAL:
            raise SettingFault("LessThan is not available in the general setting")
        v = self.store.values
        x, y = v[np.asarray(a)], v[np.asarray(b)]
        return np.asarray(x > y, dtype=np.int64) - np.asarray(x < y, dtype=np.int64)


def lex_cmp(domain: Domain, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise lexicographic comparison of two (n, k) payload blocks."""
    n = a.shape[0]
    out = np.zeros(n, dtype=np.int64)
    undecided = np.ones(n, dtype=bool)
    for col in range(a.shape[1]):
        c = domain.cmp(a[:, col], b[:, col])
        out = np.where(undecided, c, out)
        undecided &= c == 0
    return out


def rows_equal(domain: Domain, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    out = np.ones(n, dtype=bool)
    for col in range(a.shape[1]):
        out &= domain.eq(a[:, col], b[:, col])
    return out


# ------------------------------------------------------------------- tokens


@dataclass(frozen=True)
class Token:
    relation: str
    i: int
    j: int


@dataclass
class TokenStore:
    """Values of all tokens laid out relation by relation, attribute by attribute.

    Token (R, i, j) has id ``offsets[(R, j)] + i``; this layout is the D array of
    the dictionary construction.
    """

    values: np.ndarray
    offsets: dict
    sizes: dict

    def id_of(self, tok: Token) -> int:
        key = (tok.relation, tok.j)
        if key not in self.offsets or not 0 <= tok.i < self.sizes[tok.relation]:
            raise BoundsFault(f"token {tok} out of range")
        return self.offsets[key] + tok.i

    def token(self, tid: int) -> Token:
        for (rel, j), off in self.offsets.items():
            if off <= tid < off + self.sizes[rel]:
                return Token(rel, tid - off, j)
        raise BoundsFault(f"token id {tid} out of range")

    def __len__(self) -> int:
        return len(self.values)


# ----------------------------------------------------------- relation array


class RelationArray:
    """A relation stored in shared memory: one cell per slot with an inhabited
    flag, a payload row and named link slots."""

    def __init__(self, m: Machine, attrs: Sequence[str], payload: SharedArray, inhabited: SharedArray,
                 domain: Domain, ordered_by: Sequence[str] | None = None, name: str = ""):
        if len(set(attrs)) != len(attrs):
            raise ParameterFault(f"duplicate attribute names in {attrs}")
        self.m = m
        self.attrs = tuple(attrs)
        self.payload_arr = payload
        self.inhabited_arr = inhabited
        self.domain = domain
        self.ordered_by = tuple(ordered_by) if ordered_by is not None else None
        self.fully_linked = False
        self.name = name
        self.links: dict[str, SharedArray] = {}
        self.flags: dict[str, np.ndarray] = {}

    # --- construction
    @classmethod
    def empty(cls, m: Machine, attrs: Sequence[str], length: int, domain: Domain, name: str = "",
              ordered_by=None) -> "RelationArray":
        pay = m.alloc(length, len(attrs), name=f"{name}.payload")
        inh = m.alloc(length, dtype=np.int8, name=f"{name}.inhabited")
        return cls(m, attrs, pay, inh, domain, ordered_by, name)

    @classmethod
    def from_rows(cls, m: Machine, attrs: Sequence[str], rows: Iterable[Sequence[int]], domain: Domain,
                  name: str = "", ordered_by=None) -> "RelationArray":
        rows = [tuple(int(v) for v in r) for r in rows]
        k = len(attrs)
        if any(len(r) != k for r in rows):
            raise ParameterFault("row arity does not match the schema")
        data = np.array(rows, dtype=np.int64).reshape(len(rows), k)
        pay = m.adopt(data, name=f"{name}.payload")
        inh = m.adopt(np.ones(len(rows), dtype=np.int8), name=f"{name}.inhabited")
        return cls(m, attrs, pay, inh, domain, ordered_by, name)

    def derive(self, attrs=None, payload=None, inhabited=None, ordered_by="same", name=None) -> "RelationArray":
        """New array object sharing storage unless replacements are given."""
        r = RelationArray(self.m, self.attrs if attrs is None else attrs,
                          self.payload_arr if payload is None else payload,
                          self.inhabited_arr if inhabited is None else inhabited, self.domain,
                          self.ordered_by if ordered_by == "same" else ordered_by,
                          self.name if name is None else name)
        return r

    # --- views
    @property
    def length(self) -> int:
        return self.payload_arr.length

    def __len__(self) -> int:
        return self.length

    @property
    def arity(self) -> int:
        return len(self.attrs)

    @property
    def payload(self) -> np.ndarray:
        return self.payload_arr.data

    @property
    def inhabited(self) -> np.ndarray:
        return self.inhabited_arr.data.astype(bool)

    def columns(self, X: Sequence[str]) -> np.ndarray:
        try:
            idx = [self.attrs.index(a) for a in X]
        except ValueError:
            raise ParameterFault(f"unknown attribute in {list(X)} for schema {self.attrs}") from None
        return self.payload[:, idx]

    def proper_count(self) -> int:
        return int(self.inhabited_arr.data.sum())

    def rows(self) -> list[tuple]:
        """Proper tuples in cell order."""
        sel = self.inhabited
        return [tuple(int(v) for v in r) for r in self.payload[sel]]

    def tuple_set(self) -> set[tuple]:
        return set(self.rows())

    def is_concise(self) -> bool:
        rows = self.rows()
        return len(rows) == len(set(rows))

    def link(self, slot: str) -> SharedArray:
        if slot not in LINK_SLOTS:
            raise ParameterFault(f"unknown link slot {slot!r}")
        if slot not in self.links:
            self.links[slot] = self.m.alloc(self.length, fill=NONE, name=f"{self.name}.{slot}")
        return self.links[slot]

    def link_data(self, slot: str) -> np.ndarray:
        return self.link(slot).data

    # --- order metadata
    @property
    def fully_ordered(self) -> bool:
        return self.ordered_by is not None and set(self.ordered_by) == set(self.attrs)

    def order_for(self, X: Iterable[str]) -> tuple | None:
        """Attribute list ordering X if the array is ordered by a list starting with X."""
        X = set(X)
        if not X:
            return ()
        if self.ordered_by is None:
            return None
        prefix = self.ordered_by[:len(X)]
        return tuple(prefix) if set(prefix) == X and len(prefix) == len(X) else None

    def check_ordered(self, X: Sequence[str]) -> bool:
        """Scan check of X-orderedness over inhabited cells (for tests/validation)."""
        cols = self.columns(X)[self.inhabited]
        if cols.shape[0] < 2:
            return True
        c = lex_cmp(self.domain, cols[:-1], cols[1:])
        return bool((c <= 0).all())

    def __repr__(self) -> str:
        return f"RelationArray({self.name!r}, attrs={self.attrs}, length={self.length}, proper={self.proper_count()})"


# ----------------------------------------------------------------- database


@dataclass
class Database:
    m: Machine
    relations: dict
    setting: Setting
    c_val: int
    size: int
    tokens: TokenStore | None = None
    schemas: dict = field(default_factory=dict)
    order_indexes: dict = field(default_factory=dict)

    @property
    def domain(self) -> Domain:
        return next(iter(self.relations.values())).domain if self.relations else IntDomain(0)

    @property
    def value_bound(self) -> int:
        return self.c_val * self.size

    def __getitem__(self, name: str) -> RelationArray:
        try:
            return self.relations[name]
        except KeyError:
            raise ParameterFault(f"unknown relation {name!r}") from None

    def in_size(self) -> int:
        """IN: total number of tuples."""
        return sum(r.proper_count() for r in self.relations.values())


def compute_c_val(schemas: dict) -> int:
    return max(1, sum(len(a) for a in schemas.values()))


def dictionary_database(m: Machine, schemas: dict, data: dict, ordered_by: dict | None = None,
                        validate: bool = True) -> Database:
    """Build a dictionary-setting database from host rows (naturals)."""
    ordered_by = ordered_by or {}
    c_val = compute_c_val(schemas)
    size = sum(len(data[n]) * len(schemas[n]) for n in schemas)
    dom = IntDomain(c_val * size, size)
    rels = {}
    for name in sorted(schemas):
        rows = [tuple(int(v) for v in r) for r in data[name]]
        if validate:
            _validate_rows(name, rows, schemas[name])
            for r in rows:
                for v in r:
                    if not 1 <= v <= dom.bound:
                        raise LoadFault(f"{name}: value {v} outside [1, {dom.bound}]")
        rel = RelationArray.from_rows(m, schemas[name], rows, dom, name=name,
                                      ordered_by=ordered_by.get(name))
        if rel.ordered_by is not None and not rel.check_ordered(rel.ordered_by):
            raise LoadFault(f"{name}: rows are not ordered by {list(rel.ordered_by)}")
        rels[name] = rel
    return Database(m, rels, Setting.DICTIONARY, c_val, size, schemas=dict(schemas))


def token_database(m: Machine, schemas: dict, data: dict, setting: Setting = Setting.GENERAL,
                   ordered_by: dict | None = None) -> Database:
    """General or ordered setting: cells carry token ids, values live in a TokenStore."""
    setting = Setting.parse(setting)
    ordered_by = ordered_by or {}
    values: list = []
    offsets: dict = {}
    sizes: dict = {}
    for name in sorted(schemas):
        rows = [tuple(r) for r in data[name]]
        _validate_rows(name, rows, schemas[name])
        sizes[name] = len(rows)
        for j in range(len(schemas[name])):
            offsets[(name, j)] = len(values)
            values.extend(r[j] for r in rows)
    store = TokenStore(np.array(values + [None], dtype=object)[:-1], offsets, sizes)
    dom = TokenDomain(store, setting)
    rels = {}
    for name in sorted(schemas):
        k = len(schemas[name])
        ids = np.array([[offsets[(name, j)] + i for j in range(k)] for i in range(sizes[name])],
                       dtype=np.int64).reshape(sizes[name], k)
        pay = m.adopt(ids, name=f"{name}.payload")
        inh = m.adopt(np.ones(sizes[name], dtype=np.int8), name=f"{name}.inhabited")
        rel = RelationArray(m, schemas[name], pay, inh, dom, ordered_by.get(name), name)
        if rel.ordered_by is not None:
            if setting is Setting.GENERAL:
                raise SettingFault("ordered arrays need the ordered setting")
            if not rel.check_ordered(rel.ordered_by):
                raise LoadFault(f"{name}: rows are not ordered by {list(rel.ordered_by)}")
        rels[name] = rel
    size = sum(sizes[n] * len(schemas[n]) for n in schemas)
    db = Database(m, rels, setting, compute_c_val(schemas), size, store, schemas=dict(schemas))
    if setting is Setting.ORDERED:
        db.order_indexes = _attribute_order_indexes(db)
    return db


def _attribute_order_indexes(db: Database) -> dict:
    """Index arrays A_{R,X_j}: tuple indices of R sorted by an attribute list starting
    with its j-th attribute.  They belong to the input representation of the
    attribute-wise ordered setting and are prepared by the loader."""
    out = {}
    vals = db.tokens.values
    for name, rel in db.relations.items():
        k = rel.arity
        rows = [tuple(vals[t] for t in row) for row in rel.payload]
        for j in range(k):
            order = [j] + [x for x in range(k) if x != j]
            out[(name, j)] = np.array(sorted(range(len(rows)), key=lambda i: tuple(rows[i][x] for x in order)),
                                      dtype=np.int64)
    return out


def _validate_rows(name: str, rows: list, attrs) -> None:
    k = len(attrs)
    for n, r in enumerate(rows):
        if len(r) != k:
            raise LoadFault(f"{name}: row {n + 1} has {len(r)} values, schema has {k}")
    if len(set(rows)) != len(rows):
        raise LoadFault(f"{name}: duplicate rows (inputs must be concise)")


# ------------------------------------------------------------ elemental ops


def _token_value(db: Database, R: str, i: int, j: int):
    rel = db[R]
    if not 0 <= i < rel.length or not 0 <= j < rel.arity:
        raise BoundsFault(f"({R},{i},{j}) out of range")
    word = int(rel.payload[i, j])
    return db.tokens.values[word] if db.tokens is not None else word


def elemental(db: Database, op: str, *args):
    """Equal(R,i,j,S,k,l) | EqualConst(R,i,j,c) | LessThan(R,i,j,S,k,l) | Output(R,i,j) | NumTuples(R).

    Indices are 0-based.  Every call is one processor step.
    """
    db.m.charge_round(1)
    if op == "Equal":
        R, i, j, S, k, l = args
        return _token_value(db, R, i, j) == _token_value(db, S, k, l)
    if op == "EqualConst":
        R, i, j, c = args
        return _token_value(db, R, i, j) == c
    if op == "LessThan":
        if db.setting is Setting.GENERAL:
            raise SettingFault("LessThan is not available in the general setting")
        R, i, j, S, k, l = args
        return _token_value(db, R, i, j) < _token_value(db, S, k, l)
    if op == "Output":
        R, i, j = args
        return _token_value(db, R, i, j)
    if op == "NumTuples":
        (R,) = args
        return db[R].length
    raise ParameterFault(f"unknown elemental operation {op!r}")


# --------------------------------------------------------------- dictionary


@dataclass
class Dictionary:
    """``rep[t]`` is the representative token id of token t; keys are 1-based
    positions of representatives in the backing array."""

    store: TokenStore
    rep: np.ndarray
    backing: np.ndarray  # token id held by each backing cell
    key_by_token: np.ndarray

    def key_of(self, tok: Token | int) -> int:
        tid = self.store.id_of(tok) if isinstance(tok, Token) else int(tok)
        if not 0 <= tid < len(self.key_by_token):
            raise BoundsFault(f"token id {tid} out of range")
        return int(self.key_by_token[tid])

    def key_output(self, key: int):
        if not 1 <= key <= len(self.backing):
            raise ParameterFault(f"unknown key {key}")
        tid = int(self.backing[key - 1])
        if tid == NONE:
            raise ParameterFault(f"unknown key {key}")
        return self.store.values[tid]

    @property
    def keys(self) -> set:
        return set(int(k) for k in self.key_by_token)


def build_dictionary_general(m: Machine, db: Database) -> Dictionary:
    """Pairwise duplicate detection over all tokens using only Equal; |D|^2 work."""
    if db.tokens is None:
        raise SettingFault("dictionary construction needs a token database")
    vals = db.tokens.values
    n = len(vals)
    with m.phase("dictionary_general"):
        dup = m.alloc(n, dtype=np.int8, name="dup")
        rep = m.alloc(n, fill=NONE, name="rep")
        chunk = max(1, (1 << 22) // max(n, 1))
        eq_rows = []
        # round 1: processor (i, j), i < j, marks j when Equal(D[i], D[j])
        with m.round(n * n) as r:
            for c0 in range(0, n, chunk):
                blk = np.asarray(vals[c0:c0 + chunk, None] == vals[None, :], dtype=bool)
                ii, jj = np.nonzero(blk)
                ii = ii + c0
                keep = ii < jj
                r.write(dup, jj[keep], 1)
                eq_rows.append((ii[keep], jj[keep]))
        first = dup.data == 0
        # round 2: processor (i, j) with i a first occurrence links j to i
        with m.round(n * n) as r:
            for ii, jj in eq_rows:
                ok = first[ii]
                r.write(rep, jj[ok], ii[ok], ii[ok])
            idx = np.flatnonzero(first)
            r.write(rep, idx, idx)
        rep_ids = rep.data.copy()
        with m.round(n):
            keys = rep_ids + 1
        d = Dictionary(db.tokens, rep_ids, np.arange(n), keys)
        m.free(rep, dup)
    return d


def build_dictionary_aordered(m: Machine, db: Database, indexes: dict | None = None, eps=0.5) -> Dictionary:
    """Dictionary from per-attribute ordered index arrays; work O(|D|^(1+eps))."""
    from .array_ops import dedup_ordered, full_links, search_ordered_into_B

    if db.tokens is None or db.setting is not Setting.ORDERED:
        raise SettingFault("attribute-wise ordered construction needs the ordered setting")
    indexes = db.order_indexes if indexes is None else indexes
    store = db.tokens
    dom = TokenDomain(store, Setting.ORDERED)
    pairs = sorted(store.offsets)
    n = len(store)
    with m.phase("dictionary_aordered"):
        segs = []
        base = 0
        for (R, j) in pairs:
            if (R, j) not in indexes:
                raise PreconditionFault(f"missing ordered index array for ({R}, attribute {j})")
            perm = np.asarray(indexes[(R, j)], dtype=np.int64)
            cells = store.offsets[(R, j)] + perm
            with m.round(len(perm)):
                pass
            arr = RelationArray.from_rows(m, ("v",), cells.reshape(-1, 1), dom, name=f"C[{R},{j}]",
                                          ordered_by=("v",))
            if not arr.check_ordered(("v",)):
                raise PreconditionFault(f"index array for ({R}, {j}) is not ordered")
            dedup_ordered(arr, eps)
            full_links(arr, eps)
            segs.append((base, arr))
            base += arr.length
        backing = np.full(base, NONE, dtype=np.int64)
        key = np.full(n, NONE, dtype=np.int64)
        probe = RelationArray.from_rows(m, ("v",), np.arange(n).reshape(-1, 1), dom, name="D")
        for off, arr in segs:
            if arr.length == 0:
                m.charge_round(n)
                continue
            lo, _ = search_ordered_into_B(probe, arr, ("v",), eps)
            hit = lo != NONE
            hit[hit] = rows_equal(dom, probe.payload[hit], arr.payload[lo[hit]])
            reps = np.where(hit, arr.link_data("representative")[np.maximum(lo, 0)], NONE)
            reps = np.where(hit & (reps == NONE), lo, reps)
            inh = arr.inhabited
            backing[off:off + arr.length] = np.where(inh, arr.payload[:, 0], NONE)
            with m.round(n):
                take = (key == NONE) & hit
                key = np.where(take, off + reps + 1, key)
        rep_tok = backing[key - 1]
    return Dictionary(store, rep_tok, backing, key)


def translate(m: Machine, db: Database, d: Dictionary) -> Database:
    """Replace every token by its key: a dictionary-setting copy of the database."""
    rels = {}
    dom = IntDomain(db.c_val * db.size, db.size)
    with m.phase("translate"):
        for name, rel in db.relations.items():
            pay = m.alloc(rel.length, rel.arity, name=f"{name}.keys")
            with m.round(rel.length * max(rel.arity, 1)) as r:
                r.write_all(pay, d.key_by_token[rel.payload] if rel.length else pay.data)
            inh = m.adopt(rel.inhabited_arr.data.copy(), name=f"{name}.inhabited")
            rels[name] = RelationArray(m, rel.attrs, pay, inh, dom, None, name)
    return Database(m, rels, Setting.DICTIONARY, db.c_val, db.size, None, dict(db.schemas))


# ------------------------------------------------------------------- files


def _read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise LoadFault(f"{path}: {e}") from None
    lines = text.splitlines()
    if not lines:
        raise LoadFault(f"{path}:1: missing header row")
    rows = []
    for no, line in enumerate(lines, 1):
        if '"' in line:
            raise LoadFault(f"{path}:{no}: quoted fields are not supported")
        if no > 1 and line == "":
            continue
        rows.append(line.split(","))
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header) or len(set(header)) != len(header):
        raise LoadFault(f"{path}:1: invalid header {rows[0]}")
    body = rows[1:]
    for no, r in enumerate(body, 2):
        if len(r) != len(header):
            raise LoadFault(f"{path}:{no}: expected {len(header)} fields, found {len(r)}")
    return header, body


def _parse_natural(path: Path, no: int, s: str) -> int:
    s = s.strip()
    if not s.isdigit():
        raise LoadFault(f"{path}:{no}: {s!r} is not a natural number")
    return int(s)


def read_relation_file(path, setting: Setting) -> tuple[list[str], list[tuple]]:
    path = Path(path)
    header, body = _read_csv(path)
    if setting is Setting.DICTIONARY:
        rows = [tuple(_parse_natural(path, no, v) for v in r) for no, r in enumerate(body, 2)]
    else:
        rows = [tuple(r) for r in body]
    seen = set()
    for no, r in enumerate(rows, 2):
        if r in seen:
            raise LoadFault(f"{path}:{no}: duplicate row {r}")
        seen.add(r)
    return header, rows


def load_relation(m: Machine, source, setting: Setting | str = Setting.DICTIONARY, name: str | None = None,
                  schema: Sequence[str] | None = None) -> RelationArray:
    """Single relation from a CSV file; dictionary setting parses naturals."""
    setting = Setting.parse(setting)
    path = Path(source)
    header, rows = read_relation_file(path, setting)
    if schema is not None and list(schema) != header:
        raise LoadFault(f"{path}:1: header {header} does not match schema {list(schema)}")
    name = name or path.stem
    if setting is Setting.DICTIONARY:
        return dictionary_database(m, {name: tuple(header)}, {name: rows})[name]
    return token_database(m, {name: tuple(header)}, {name: rows}, setting)[name]


def load_database(m: Machine, manifest, setting: Setting | str | None = None) -> Database:
    manifest = Path(manifest)
    try:
        spec = json.loads(manifest.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise LoadFault(f"{manifest}: {e}") from None
    st = Setting.parse(setting if setting is not None else spec.get("setting", "dictionary"))
    schemas, data, orders = {}, {}, {}
    for entry in spec.get("relations", []):
        try:
            name, file = entry["name"], entry["file"]
        except (KeyError, TypeError):
            raise LoadFault(f"{manifest}: relation entries need 'name' and 'file'") from None
        header, rows = read_relation_file(manifest.parent / file, st)
        schemas[name] = tuple(header)
        data[name] = rows
        if entry.get("ordered_by"):
            orders[name] = tuple(entry["ordered_by"])
            if not set(orders[name]) <= set(header):
                raise LoadFault(f"{manifest}: ordered_by of {name} names unknown attributes")
    if st is Setting.DICTIONARY:
        return dictionary_database(m, schemas, data, orders)
    return token_database(m, schemas, data, st, orders)


def to_output(rel: RelationArray, db: Database | None = None, dictionary: Dictionary | None = None) -> list[tuple]:
    """Proper tuples as host rows, decoding keys or tokens into values."""
    rows = rel.rows()
    if dictionary is not None:
        return [tuple(dictionary.key_output(v) for v in r) for r in rows]
    if db is not None and db.tokens is not None and rel.domain.setting is not Setting.DICTIONARY:
        vals = db.tokens.values
        return [tuple(vals[v] for v in r) for r in rows]
    return rows


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for r in rows:
        cells = [str(v) for v in r]
        if any("," in c or "\n" in c for c in cells):
            raise LoadFault(f"value with a comma or newline cannot be written: {r}")
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
