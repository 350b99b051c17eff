"""Command-line front end: evaluate queries, run scaling benchmarks, check primitives."""
from __future__ import annotations

import json
import sys
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import oracle as O
from .errors import PramFault, SizeAssertionFault
from .kernel import Machine, MachineConfig, WriteMode
from .primitives import (approx_compact, approx_prefix_sums, padded_sort, predecessor_links, schedule_tasks,
                         successor_links)
from .dbops import Variant
from .query import (ConjunctiveQuery, EvalStats, SemijoinPlan, evaluate, load_ghd, parse_query, to_dictionary)
from .relstore import (Setting, dictionary_database, load_database, read_relation_file, to_output,
                       token_database, write_csv)
from .workloads import FAMILIES

REPORT_VERSION = 1


# ------------------------------------------------------------------ report


@dataclass
class RunReport:
    query_id: str
    method: str
    setting: str
    parameters: dict
    metrics: dict
    result_cardinality: int
    oracle_match: bool | None
    phases: list
    assertions: list
    meta: dict = field(default_factory=dict)
    error: str | None = None

    def to_json(self) -> str:
        body = asdict(self)
        body["report_version"] = REPORT_VERSION
        return json.dumps(body, sort_keys=True, indent=2, default=str) + "\n"


def phase_table(m: Machine) -> list:
    """Phases aggregated by label in first-seen order (work and depth summed)."""
    agg: OrderedDict = OrderedDict()
    for p in m.metrics.phases:
        e = agg.setdefault(p.label, {"label": p.label, "calls": 0, "work": 0, "depth": 0, "space": 0})
        e["calls"] += 1
        e["work"] += p.work
        e["depth"] += p.depth
        e["space"] = max(e["space"], p.space)
    return list(agg.values())


def _machine(mode: str, seed: int) -> Machine:
    return Machine(MachineConfig(write_mode=WriteMode.parse(mode), arbitrary_seed=int(seed)))


def _params(eps, lam, mode, seed, **extra) -> dict:
    out = {"epsilon": str(eps), "lambda": str(lam), "mode": WriteMode.parse(mode).value, "seed": int(seed)}
    out.update({k: v for k, v in extra.items() if v is not None})
    return out


def _fraction(text: str) -> Fraction:
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"{text!r} is not a rational number") from None
    if f <= 0:
        raise click.BadParameter("must be positive")
    return f


def _manifest_rows(manifest: Path, setting: Setting) -> tuple[dict, dict]:
    spec = json.loads(manifest.read_text(encoding="utf-8"))
    schemas, data = {}, {}
    for entry in spec.get("relations", []):
        header, rows = read_relation_file(manifest.parent / entry["file"], setting)
        schemas[entry["name"]] = tuple(header)
        data[entry["name"]] = rows
    return schemas, data


def _const_mapper(setting: Setting, dictionary):
    """Plan constants as the machine sees them: raw CSV text in the token
    settings, dictionary keys once a token database has been translated."""
    if setting is Setting.DICTIONARY:
        return None
    if dictionary is None:
        return str
    key_of = {}
    for tid, v in enumerate(dictionary.store.values):
        key_of.setdefault(str(v), int(dictionary.key_by_token[tid]))
    return lambda c: key_of.get(str(c), 0)  # keys are >= 1, so 0 selects nothing


def _rewrite_constants(plan: SemijoinPlan, key) -> SemijoinPlan:
    if key is None:
        return plan
    kids = tuple(_rewrite_constants(c, key) for c in plan.children)
    args = plan.args
    if plan.op == "select" and isinstance(args[1], tuple):
        args = (args[0], ("const", key(args[1][1])))
    return SemijoinPlan(plan.op, kids, args)


# --------------------------------------------------------------------- cli


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Constant-depth parallel query evaluation on a simulated CRCW PRAM."""


@main.command("eval")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("query_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--setting", type=click.Choice(["dictionary", "ordered", "general"]), default=None,
              help="Data setting (default: the manifest's, else dictionary).")
@click.option("--epsilon", "eps", default="1/2", show_default=True)
@click.option("--lambda", "lam", default="1/2", show_default=True)
@click.option("--mode", type=click.Choice(["arbitrary", "priority", "common"]), default="arbitrary",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Arbitrary-write resolution seed.")
@click.option("--method", type=click.Choice(["auto", "acyclic", "free_connex", "ghd", "wcoj", "plan"]),
              default="auto", show_default=True)
@click.option("--variant", default="DictionaryHash", show_default=True, help="Operator variant for plans.")
@click.option("--attr-order", default=None, help="Comma-separated attribute order for wcoj.")
@click.option("--ghd", "ghd_file", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None)
@click.option("--verify/--no-verify", default=False, help="Compare with the sequential oracle.")
@click.option("--oracle-cap", type=int, default=O.DEFAULT_CAP, show_default=True)
@click.option("--results", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the result CSV here.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the JSON report here instead of stdout.")
def cmd_eval(manifest, query_file, setting, eps, lam, mode, seed, method, variant, attr_order, ghd_file, verify,
             oracle_cap, results, out):
    """Evaluate QUERY_FILE (datalog rule or s-expression plan) on MANIFEST."""
    eps_f, lam_f = _fraction(eps), _fraction(lam)
    m = _machine(mode, seed)
    try:
        db = load_database(m, manifest, setting)
        q = parse_query(query_file.read_text(encoding="utf-8"))
        ghd = load_ghd(ghd_file) if ghd_file is not None else None
        order = [a.strip() for a in attr_order.split(",")] if attr_order else None
    except PramFault as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    st = db.setting
    stats = EvalStats()
    dictionary = None
    error = None
    rows = []
    head: tuple = ()
    try:
        run_db, run_q = db, q
        hashed = isinstance(q, SemijoinPlan) and Variant.parse(variant) is Variant.DICTIONARY_HASH
        if st is not Setting.DICTIONARY and (isinstance(q, ConjunctiveQuery) or hashed):
            run_db, dictionary = to_dictionary(db, eps_f)
        if isinstance(q, SemijoinPlan):
            q = _rewrite_constants(q, _const_mapper(st, None))
            run_q = _rewrite_constants(q, _const_mapper(st, dictionary)) if dictionary is not None else q
        res = evaluate(run_q, run_db, method, lam_f, eps_f, ghd=ghd, attr_order=order, variant=variant,
                       stats=stats)
        head = tuple(res.attrs)
        rows = to_output(res, db, dictionary)
    except SizeAssertionFault as exc:
        error = str(exc)
    except PramFault as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    match = None
    if verify and error is None:
        try:
            schemas, data = _manifest_rows(manifest, st)
            exp = O.oracle_eval(q, O.plain_database(schemas, data), cap=oracle_cap)
            match = O.PlainRelation.of(head, rows).same_as(exp)
        except PramFault as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
    if results is not None and error is None:
        write_csv(results, head, sorted(rows, key=lambda r: tuple(str(v) for v in r)))
    report = RunReport(
        query_id=query_file.stem,
        method=stats.meta.get("method", method),
        setting=st.value,
        parameters=_params(eps_f, lam_f, mode, seed, variant=variant if isinstance(q, SemijoinPlan) else None,
                           attr_order=order),
        metrics={"work": m.metrics.work, "depth": m.metrics.depth, "space": m.metrics.space},
        result_cardinality=len(rows),
        oracle_match=match,
        phases=phase_table(m),
        assertions=[asdict(c) for c in stats.checks],
        meta={k: v for k, v in stats.meta.items() if k != "method"},
        error=error,
    )
    _emit(report.to_json(), out)
    if error is not None or match is False:
        sys.exit(1)


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ------------------------------------------------------------------- bench


def run_family(family: str, n: int, seed: int, eps, lam, mode: str = "arbitrary") -> dict:
    """One benchmark point: build the instance, evaluate it, return integer metrics."""
    inst = FAMILIES[family](n, seed)
    m = _machine(mode, seed)
    db = dictionary_database(m, inst.schemas, inst.data)
    q = parse_query(inst.query)
    base = m.metrics.copy()
    stats = EvalStats()
    res = evaluate(q, db, "auto", lam, eps, stats=stats)
    return {"n": n, "IN": inst.in_size, "OUT": res.proper_count(), "cells": res.length,
            "work": m.metrics.work - base.work, "depth": m.metrics.depth - base.depth, "space": m.metrics.space}


def loglog_slope(xs, ys) -> float:
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


@main.command("bench")
@click.argument("family", type=click.Choice(sorted(FAMILIES)))
@click.option("--sizes", default="256,512,1024,2048", show_default=True, help="Comma-separated n values.")
@click.option("--repetitions", "reps", type=int, default=1, show_default=True)
@click.option("--epsilon", "eps", default="1/2", show_default=True)
@click.option("--lambda", "lam", default="1/2", show_default=True)
@click.option("--mode", type=click.Choice(["arbitrary", "priority", "common"]), default="arbitrary")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
def cmd_bench(family, sizes, reps, eps, lam, mode, seed, fmt, out):
    """Scaling table (n, work, depth, space) with the least-squares log-log slope of work vs IN."""
    eps_f, lam_f = _fraction(eps), _fraction(lam)
    ns = [int(s) for s in sizes.split(",") if s.strip()]
    rows = []
    try:
        for n in ns:
            for r in range(reps):
                row = run_family(family, n, seed + r, eps_f, lam_f, mode)
                row["rep"] = r
                rows.append(row)
    except PramFault as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    slope = loglog_slope([r["IN"] for r in rows], [r["work"] for r in rows]) if len(set(ns)) > 1 else None
    depth_constant = len({r["depth"] for r in rows}) == 1
    if fmt == "csv":
        cols = ["n", "rep", "IN", "OUT", "cells", "work", "depth", "space"]
        lines = [",".join(cols)] + [",".join(str(r[c]) for c in cols) for r in rows]
        lines.append(f"# slope={'' if slope is None else f'{slope:.4f}'} depth_constant={str(depth_constant).lower()}")
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps({"report_version": REPORT_VERSION, "family": family,
                           "parameters": _params(eps_f, lam_f, mode, seed), "rows": rows,
                           "slope": None if slope is None else f"{slope:.4f}",
                           "depth_constant": depth_constant}, sort_keys=True, indent=2) + "\n"
    _emit(text, out)


# -------------------------------------------------------------- primitives


PRIMITIVES = ("prefix-sums", "compact", "padded-sort", "links", "schedule")


def check_primitive(name: str, n: int, eps, lam, seed: int = 0, mode: str = "arbitrary", c: int = 2,
                    max_value: int | None = None) -> tuple[bool, str]:
    """Run one primitive on a seeded random input and check its invariants.

    Returns (passed, message); the message names a counterexample on failure."""
    rng = np.random.default_rng(seed)
    m = _machine(mode, seed)
    lam = Fraction(lam)
    if name == "prefix-sums":
        A = rng.integers(0, 1000, size=n)
        B = approx_prefix_sums(m, A, lam, eps)
        exact = np.cumsum(A) if n else np.zeros(0, dtype=np.int64)
        for i in range(n):
            if not (exact[i] <= B[i] <= (1 + lam) * int(exact[i])):
                return False, f"index {i}: B={int(B[i])}, exact={int(exact[i])}"
            prev = int(B[i - 1]) if i else 0
            if int(B[i]) - prev < int(A[i]):
                return False, f"index {i}: B[i]-B[i-1]={int(B[i]) - prev} < A[i]={int(A[i])}"
        return True, f"{n} prefix sums consistent"
    if name == "compact":
        present = rng.random(n) < 0.1 if n else np.zeros(0, dtype=bool)
        comp = approx_compact(m, present, lam, eps)
        k = int(present.sum())
        if comp.length > (1 + lam) * k:
            return False, f"length {comp.length} > (1+lambda)*{k}"
        src = comp.src[comp.src >= 0]
        if list(src) != list(np.flatnonzero(present)):
            return False, "order or membership not preserved"
        return True, f"{k} items in {comp.length} cells"
    if name == "padded-sort":
        hi = n if max_value is None else max_value
        A = rng.integers(0, max(hi, 1), size=n) if n else np.zeros(0, dtype=np.int64)
        if max_value is not None and n:
            A[0] = max_value
        ps = padded_sort(m, A, lam, eps, c)
        got = [int(A[i]) for i in ps.order if i >= 0]
        if ps.length > (1 + lam) * n:
            return False, f"length {ps.length} > (1+lambda)*{n}"
        if got != sorted(int(v) for v in A):
            return False, "output is not the sorted input multiset"
        return True, f"{n} values sorted into {ps.length} cells"
    if name == "links":
        present = rng.random(n) < 0.3 if n else np.zeros(0, dtype=bool)
        pred = predecessor_links(m, present, eps)
        succ = successor_links(m, present, eps)
        last = -1
        for i in range(n):
            if pred[i] != last:
                return False, f"pred[{i}]={int(pred[i])}, expected {last}"
            if present[i]:
                last = i
        nxt = -1
        for i in range(n - 1, -1, -1):
            if succ[i] != nxt:
                return False, f"succ[{i}]={int(succ[i])}, expected {nxt}"
            if present[i]:
                nxt = i
        return True, f"links over {int(present.sum())} of {n} cells"
    if name == "schedule":
        sizes = rng.integers(0, 8, size=n) if n else np.zeros(0, dtype=np.int64)
        s = schedule_tasks(m, sizes, lam, eps)
        total = int(sizes.sum())
        if s.length > (1 + lam) * total:
            return False, f"schedule length {s.length} > (1+lambda)*{total}"
        counts = np.bincount(s.task[s.task >= 0], minlength=n) if n else np.zeros(0)
        bad = np.flatnonzero(counts[:n] < sizes)
        if bad.size:
            i = int(bad[0])
            return False, f"task {i} got {int(counts[i])} < {int(sizes[i])} processors"
        return True, f"{n} tasks, total {total}, schedule {s.length}"
    raise click.BadParameter(f"unknown primitive {name!r}")


@main.command("primitives")
@click.argument("name", type=click.Choice(PRIMITIVES))
@click.option("-n", "n", type=int, default=4096, show_default=True)
@click.option("--epsilon", "eps", default="1/2", show_default=True)
@click.option("--lambda", "lam", default="1/2", show_default=True)
@click.option("--mode", type=click.Choice(["arbitrary", "priority", "common"]), default="arbitrary")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--c", "c", type=int, default=2, show_default=True, help="padded-sort: values must be below n^c.")
@click.option("--max-value", type=int, default=None, help="padded-sort: force this value into the input.")
def cmd_primitives(name, n, eps, lam, mode, seed, c, max_value):
    """Run the invariant checks of one primitive at size N."""
    try:
        ok, msg = check_primitive(name, n, _fraction(eps), _fraction(lam), seed, mode, c, max_value)
    except PramFault as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(f"{name} n={n}: {'PASS' if ok else 'FAIL'} ({msg})")
    if not ok:
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover
    main()
