"""Experiment drivers and report persistence.

Every randomized driver derives one stream per trial from
``SeedSequence([seed, trial])`` so that results do not depend on how trials
are spread over worker processes.  Reports never contain timings.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cctree import (
    SupersatParams, aleph_log2, build_collinear_cctree, build_krset_cctree, progress_violations, supersat_hypergraph,
)
from .container import CONTAINER_VARIANT
from .errors import InvalidParams, RichFlatPresent, TooLarge, TooSmall
from .evasive import EvasiveParams, bezout_threshold, check_slice_consistency, construct_evasive, degree_schedule, slice_bound
from .fieldcore import FieldCtx, field_of_order
from .geom import (
    PointSet, affine_rank, count_collinear_triples, count_collinear_triples_brute, moment_curve,
    supersat_lower_bound, supersat_lower_bound_exact,
)
from .hyper import (
    DEFAULT_MIS_CAP, collinear_triple_hypergraph, max_independent_set_exact,
    max_independent_set_heuristic, random_maximal_independent_set,
)

BAND_CAVEAT = (
    "bands use the nominal exponents -3/2 and -1/2; the q^(+-o(1)) factors of the asymptotic "
    "statement cannot be fixed at a finite q"
)


@dataclass
class ExperimentConfig:
    command: str = ""
    q: int | None = None
    n: int = 2
    k: int = 1
    d: int = 1
    r: int = 3
    p: float | None = None
    trials: int = 20
    seed: int | None = None
    eps: float = 0.5
    c: float = 0.01
    c_prime: float = 2.0
    theta: float = 2.0
    out: str | None = None
    format: str = "json"
    workers: int = 1
    samples: int = 10**4
    process: str = "collinear"
    densities: tuple = (0.0, 0.1, 0.25, 0.5, 0.75, 1.0)

    def require_seed(self):
        if self.seed is None:
            raise InvalidParams(f"{self.command or 'this command'} is randomized and needs a seed")


@dataclass
class Report:
    kind: str
    meta: dict
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    passed: bool = True

    def as_dict(self) -> dict:
        return {"kind": self.kind, "meta": self.meta, "rows": self.rows, "summary": self.summary, "passed": self.passed}


def trial_rng(seed: int, *index) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + [int(i) for i in index]))


def _pmap(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _meta(cfg: ExperimentConfig, *names) -> dict:
    return {n: getattr(cfg, n) for n in names}


# -- alpha ------------------------------------------------------------------------

def classify_band(p: float, q: int) -> str:
    if p < q**-1.5:
        return "sparse"
    if p <= q**-0.5:
        return "middle"
    return "dense"


def _alpha_solve(job):
    q, idx, exact = job
    ctx = field_of_order(q)
    S = PointSet.from_indices(ctx, 2, idx)
    H = collinear_triple_hypergraph(S)
    if exact:
        a, _ = max_independent_set_exact(H)
    else:
        a, _ = max_independent_set_heuristic(H, np.random.default_rng(0))
    return a


def run_alpha(cfg: ExperimentConfig) -> Report:
    """Size of the largest collinear-triple-free subset of a p-random subset of F_q^2."""
    cfg.require_seed()
    q, p = cfg.q, cfg.p
    if q is None or p is None or not 0 <= p <= 1:
        raise InvalidParams("alpha needs q and 0 <= p <= 1")
    ctx = field_of_order(q)
    moment = set(moment_curve(ctx, 2).indices().tolist())
    exact = p * q * q <= DEFAULT_MIS_CAP
    samples = []
    for t in range(cfg.trials):
        rng = trial_rng(cfg.seed, t)
        idx = tuple(np.flatnonzero(rng.random(q * q) < p).tolist())
        samples.append(idx)
    distinct = sorted(set(samples))
    solved = dict(zip(distinct, _pmap(_alpha_solve, [(q, s, exact) for s in distinct], cfg.workers)))
    rows = []
    for t, idx in enumerate(samples):
        a = solved[idx]
        m = len(moment.intersection(idx))
        rows.append({
            "trial": t, "size": len(idx), "alpha": a, "moment": m,
            "cap": min(len(idx), 2 * q), "sandwich": m <= a <= min(len(idx), 2 * q),
        })
    alphas = [r["alpha"] for r in rows]
    summary = {
        "mode": "exact" if exact else "heuristic",
        "lower_bound_only": not exact,
        "mean_alpha": float(np.mean(alphas)) if alphas else 0.0,
        "min_alpha": min(alphas, default=0),
        "max_alpha": max(alphas, default=0),
        "mean_size": float(np.mean([r["size"] for r in rows])) if rows else 0.0,
        "band": classify_band(p, q),
        "band_caveat": BAND_CAVEAT,
        "distinct_samples": len(distinct),
        "trial_independent": len(set(alphas)) <= 1,
    }
    passed = all(r["sandwich"] for r in rows)
    return Report("alpha", _meta(cfg, "q", "p", "trials", "seed"), rows, summary, passed)


# -- general position ----------------------------------------------------------------

def violating_sets(ctx: FieldCtx, n: int) -> list[int]:
    """(n+1)-subsets of F_q^n lying in a hyperplane, as bitmasks over point indices."""
    P = PointSet.full(ctx, n)
    pts = P.points
    return [
        sum(1 << i for i in T)
        for T in itertools.combinations(range(len(pts)), n + 1)
        if affine_rank(ctx, [pts[i] for i in T]) <= n - 1
    ]


def count_general_position(ctx: FieldCtx, n: int, limit: int = 25) -> int:
    """Subsets of F_q^n with no n+1 points on a hyperplane, by enumerating every subset."""
    N = ctx.q**n
    if N > limit:
        raise TooLarge(f"2^{N} subsets are beyond exhaustive reach")
    bad = np.array(violating_sets(ctx, n), dtype=np.int64)
    total = 0
    chunk = 1 << 20
    for start in range(0, 1 << N, chunk):
        masks = np.arange(start, min(1 << N, start + chunk), dtype=np.int64)
        good = np.ones(len(masks), dtype=bool)
        for b in bad.tolist():
            good &= (masks & b) != b
        total += int(good.sum())
    return total


def general_position_oracle(ctx: FieldCtx, n: int, max_terms: int = 22) -> int:
    """Inclusion-exclusion over the violating sets: sum over families T of (-1)^|T| 2^(N - |union T|)."""
    N = ctx.q**n
    bad = violating_sets(ctx, n)
    if len(bad) > max_terms:
        raise TooLarge(f"{len(bad)} violating sets give too many inclusion-exclusion terms")
    total = 0

    def rec(i, union, sign):
        nonlocal total
        if i == len(bad):
            total += sign * (1 << (N - union.bit_count()))
            return
        rec(i + 1, union, sign)
        rec(i + 1, union | bad[i], -sign)

    rec(0, 0, 1)
    return total


def run_count_gp(cfg: ExperimentConfig) -> Report:
    ctx = field_of_order(cfg.q)
    count = count_general_position(ctx, cfg.n)
    oracle = general_position_oracle(ctx, cfg.n)
    row = {"q": cfg.q, "n": cfg.n, "count": count, "oracle": oracle, "moment_floor": 2**cfg.q}
    passed = count == oracle and count >= 2**cfg.q
    return Report("count-gp", _meta(cfg, "q", "n"), [row], {"agree": count == oracle}, passed)


# -- supersaturation --------------------------------------------------------------------

def _triple_row(job):
    q, seed, t, density = job
    ctx = field_of_order(q)
    rng = trial_rng(seed, t)
    idx = np.flatnonzero(rng.random(q * q) < density)
    P = PointSet.from_indices(ctx, 2, idx)
    bucket = count_collinear_triples(P)
    brute = count_collinear_triples_brute(P)
    bound = supersat_lower_bound_exact(len(P), q)
    return {
        "q": q, "trial": t, "density": density, "m": len(P), "count": bucket, "brute": brute,
        "bound": float(bound), "agree": bucket == brute, "above_bound": bucket >= bound,
    }


def run_triple_sweep(q: int, seed: int, trials: int, densities, workers: int = 1) -> list[dict]:
    """Exact collinear-triple counts of random subsets against the supersaturation bound."""
    if q > 13:
        raise InvalidParams("the triple sweep is limited to q <= 13")
    jobs = [(q, seed, t, densities[t % len(densities)]) for t in range(trials)]
    rows = _pmap(_triple_row, jobs, workers)
    full = PointSet.full(field_of_order(q), 2)
    n_full = count_collinear_triples(full)
    rows.append({
        "q": q, "trial": -1, "density": 1.0, "m": q * q, "count": n_full,
        "brute": count_collinear_triples_brute(full), "bound": supersat_lower_bound(q * q, q),
        "agree": n_full == (q * q + q) * math.comb(q, 3), "above_bound": n_full >= supersat_lower_bound_exact(q * q, q),
    })
    return rows


def _certificate_row(job):
    q, n, k, r, theta, c, seed, t, density = job
    ctx = field_of_order(q)
    sp = SupersatParams(k, r, theta, c)
    rng = trial_rng(seed, t)
    for attempt in itertools.count():
        idx = np.flatnonzero(rng.random(q**n) < density)
        P = PointSet.from_indices(ctx, n, idx)
        try:
            H, cert = supersat_hypergraph(P, sp, rng)
            break
        except (TooSmall, RichFlatPresent):
            if attempt > 100:
                raise
    bad_edges = sum(1 for e in H.edges().tolist() if affine_rank(ctx, [P.points[i] for i in e]) > k)
    row = {"q": q, "trial": t, "m": len(P), "edges": cert.edges, "invalid_edges": bad_edges, "resamples": attempt}
    for rec in cert.rows:
        i = rec["i"]
        row[f"delta{i}"] = rec["delta"]
        row[f"target{i}"] = rec["target"]
        row[f"margin{i}"] = rec["margin"]
    row.update({
        "delta1": cert.delta1, "delta1_target": cert.delta1_target, "theta_needed": cert.theta_needed,
        "tau": cert.tau, "sparse_branch": cert.sparse_branch, "clamped": cert.clamped,
        "codegree_ok": all(x["holds"] for x in cert.rows),
    })
    return row


def run_certificate_sweep(q: int, n: int, k: int, r: int, theta: float, c: float, seed: int, trials: int,
                          density: float = 0.5, workers: int = 1) -> list[dict]:
    jobs = [(q, n, k, r, theta, c, seed, t, density) for t in range(trials)]
    return _pmap(_certificate_row, jobs, workers)


def run_supersat_sweep(cfg: ExperimentConfig) -> Report:
    cfg.require_seed()
    rows = [dict(part="triples", **x) for x in run_triple_sweep(cfg.q, cfg.seed, cfg.trials, cfg.densities, cfg.workers)]
    density = cfg.p if cfg.p is not None else 0.5
    cert = run_certificate_sweep(cfg.q, cfg.n, cfg.k, cfg.r, cfg.theta, cfg.c, cfg.seed, cfg.trials, density, cfg.workers)
    rows += [dict(part="certificate", **x) for x in cert]
    tri = [x for x in rows if x["part"] == "triples"]
    summary = {
        "triples_agree": all(x["agree"] for x in tri),
        "triples_above_bound": all(x["above_bound"] for x in tri),
        "certificate_invalid_edges": sum(x["invalid_edges"] for x in cert),
        "max_delta_top": max((x.get(f"delta{cfg.r}", 0) for x in cert), default=0),
    }
    passed = summary["triples_agree"] and summary["triples_above_bound"] and summary["certificate_invalid_edges"] == 0
    return Report("supersat", _meta(cfg, "q", "n", "k", "r", "theta", "c", "trials", "seed"), rows, summary, passed)


# -- evasive campaign -----------------------------------------------------------------------

def _evasive_trial(job):
    n, k, d, q, seed, t = job
    sched = degree_schedule(n, k, d)
    r = bezout_threshold(sched)
    params = EvasiveParams(n, k, d, r, q)
    cand, sched, verdict, chart, used = construct_evasive(params, trial_rng(seed, t), attempts=1, verify_r=r)
    bound = slice_bound(params)
    row = {
        "trial": t, "size": len(cand), "ratio": len(cand) / q ** (n - k), "verified": verdict.evasive,
        "max_intersection": verdict.max_intersection, "chart": chart, "slice_bound": bound,
        "slice_ratio": len(cand) / bound if bound else 0.0,
    }
    row["slice_ok"] = check_slice_consistency(cand, params, verdict) if verdict.evasive else None
    return row


def run_evasive_campaign(cfg: ExperimentConfig) -> Report:
    """Random zero-locus constructions over many seeds, verified against the Bezout threshold."""
    cfg.require_seed()
    n, k, d, q = cfg.n, cfg.k, cfg.d, cfg.q
    sched = degree_schedule(n, k, d)
    r = bezout_threshold(sched)
    if q <= r:
        raise InvalidParams(f"q = {q} must exceed the verification threshold r = {r}")
    rows = _pmap(_evasive_trial, [(n, k, d, q, cfg.seed, t) for t in range(cfg.trials)], cfg.workers)
    good = [x for x in rows if x["verified"]]
    big = [x for x in good if x["size"] >= q ** (n - k) / 2]
    summary = {
        "schedule": sched.as_dict(), "r_schedule": sched.r_value, "r_verified": r,
        "success_rate": len(good) / len(rows) if rows else 0.0,
        "large_success_rate": len(big) / len(rows) if rows else 0.0,
        "mean_ratio": float(np.mean([x["ratio"] for x in good])) if good else 0.0,
        "slice_violations": sum(1 for x in good if not x["slice_ok"]),
    }
    return Report("evasive", _meta(cfg, "n", "k", "d", "q", "trials", "seed"), rows, summary,
                  summary["slice_violations"] == 0)


# -- container-clique trees ------------------------------------------------------------------

def _collinear_chunk(job):
    q, eps, c_prime, c, seed, indices = job
    T, _, _ = build_collinear_cctree(field_of_order(q), eps, c_prime, c, lazy=True)
    H = T.process.H
    uncovered = []
    for i in indices:
        I = random_maximal_independent_set(H, trial_rng(seed, i))
        leaf = T.descend(I)
        if I & ~leaf.union():
            if not any(I & ~x.union() == 0 for x in T.leaves()):
                uncovered.append(i)
    bad_cliques = []
    checked: set = set()
    for x in T.nodes:
        for L in x.labels[1:]:
            if L not in checked:
                checked.add(L)
                if not H.is_clique(L):
                    bad_cliques.append(x.path)
    nodes = {x.path: (x.depth, x.case, x.labels[0].bit_count(), [L.bit_count() for L in x.labels[1:]]) for x in T.nodes}
    edges_of = T.process.edges_of
    progress = [T.nodes[i].path for i in progress_violations(T, edges_of, (1 + eps) * q)]
    return {"uncovered": uncovered, "bad_cliques": bad_cliques, "nodes": nodes, "progress": progress,
            "clamped": T.process.clamped}


def _merge_tree_stats(nodes: dict, r: int) -> dict:
    leaves = [v for v in nodes.values() if v[1] == "leaf"]
    nu = len(leaves)
    chi = max((v[2] for v in leaves), default=0)
    kappa = max((s for v in nodes.values() for s in v[3]), default=0)
    lam = max((len(v[3]) for v in nodes.values()), default=0)
    height = max((v[0] for v in nodes.values()), default=0)
    return {"nu": nu, "chi": chi, "kappa": kappa, "lambda": lam, "height": height, "nodes": len(nodes),
            "aleph_log2": aleph_log2(nu, chi, kappa, lam, r) if nu else None}


def run_collinear_tree(cfg: ExperimentConfig) -> Report:
    """Lazy collinear tree routed by sampled maximal independent sets, split over workers."""
    cfg.require_seed()
    q = cfg.q
    parts = max(1, cfg.workers)
    jobs = [(q, cfg.eps, cfg.c_prime, cfg.c, cfg.seed, list(range(w, cfg.samples, parts))) for w in range(parts)]
    results = _pmap(_collinear_chunk, jobs, cfg.workers)
    nodes: dict = {}
    for res in results:
        nodes.update(res["nodes"])
    stats = _merge_tree_stats(nodes, 3)
    leaf_bound = (1 + cfg.eps) * q
    summary = dict(stats)
    summary.update({
        "partial": True,
        "samples": cfg.samples,
        "uncovered": sorted(i for res in results for i in res["uncovered"]),
        "bad_cliques": len({p for res in results for p in res["bad_cliques"]}),
        "progress_violations": len({p for res in results for p in res["progress"]}),
        "leaves_below_bound": all(v[2] < leaf_bound for v in nodes.values() if v[1] == "leaf"),
        "leaf_bound": leaf_bound,
        "lambda_ratio": stats["lambda"] / (math.sqrt(q) * math.log(q)),
        "height_ratio": stats["height"] / math.log(q),
        "tau_clamped": any(res["clamped"] for res in results),
    })
    passed = not summary["uncovered"] and summary["bad_cliques"] == 0 and summary["leaves_below_bound"] \
        and summary["progress_violations"] == 0
    meta = _meta(cfg, "q", "eps", "c", "c_prime", "samples", "seed", "process")
    meta["container_variant"] = CONTAINER_VARIANT
    return Report("cctree", meta, [], summary, passed)


def run_krset_tree(cfg: ExperimentConfig) -> Report:
    cfg.require_seed()
    ctx = field_of_order(cfg.q)
    T, stats, log = build_krset_cctree(ctx, cfg.n, cfg.k, cfg.r, cfg.theta, cfg.c, seed=cfg.seed)
    proc = T.process
    leaf_bound = 2 * cfg.theta * cfg.q ** (cfg.n - cfg.k)
    flats = [int(sum(1 << int(v) for v in m)) for m in proc.flat_members]
    in_flat = all(any(L & ~F == 0 for F in flats) for x in T.nodes for L in x.labels[1:])
    H = proc.H
    uncovered = []
    leaf_unions = [x.union() for x in T.leaves()]
    for i in range(cfg.samples):
        I = random_maximal_independent_set(H, trial_rng(cfg.seed, i))
        if not any(I & ~U == 0 for U in leaf_unions):
            uncovered.append(i)
    children_ok = all(
        (x.case != "deletion" or len(x.children) == 1) and (x.case != "container" or len(x.children) == x.log["containers"])
        for x in T.nodes
    )
    summary = stats.as_dict()
    summary.update({
        "leaf_bound": leaf_bound,
        "leaves_below_bound": all(x.labels[0].bit_count() < leaf_bound for x in T.leaves()),
        "cliques_in_flats": in_flat,
        "children_ok": children_ok,
        "operations": T.operations,
        "samples": cfg.samples,
        "uncovered": uncovered,
        "aleph_finite": math.isfinite(stats.aleph_log2),
    })
    passed = summary["leaves_below_bound"] and in_flat and children_ok and not uncovered and summary["aleph_finite"]
    rows = [{"node": x.id, "parent": x.parent, "case": x.case, "c0": x.labels[0].bit_count(), "length": x.length}
            for x in T.nodes]
    meta = _meta(cfg, "q", "n", "k", "r", "theta", "c", "samples", "seed", "process")
    meta["container_variant"] = CONTAINER_VARIANT
    return Report("cctree", meta, rows, summary, passed)


def run_cctree(cfg: ExperimentConfig) -> Report:
    if cfg.process == "collinear":
        return run_collinear_tree(cfg)
    if cfg.process == "krset":
        return run_krset_tree(cfg)
    raise InvalidParams(f"unknown tree process {cfg.process!r}")


# -- persistence ---------------------------------------------------------------------------------

def _round(x):
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.6g}")
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return str(x)


def _cell(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (list, dict)):
        return json.dumps(x, sort_keys=True, separators=(",", ":"))
    return str(x)


def _parse_cell(s: str):
    if s == "null":
        return None
    if not s:
        return s
    if s in ("true", "false"):
        return s == "true"
    if s[0] in "[{":
        return json.loads(s)
    if s.lstrip("-") in ("inf", "nan"):
        return s
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def report_to_json(report: Report) -> str:
    return json.dumps(_round(report.as_dict()), sort_keys=True, indent=1) + "\n"


def report_to_csv(report: Report) -> str:
    data = _round(report.as_dict())
    buf = io.StringIO()
    buf.write(f"#kind={data['kind']}\n")
    buf.write(f"#passed={_cell(data['passed'])}\n")
    for k in sorted(data["meta"]):
        buf.write(f"#meta {k}={_cell(data['meta'][k])}\n")
    for k in sorted(data["summary"]):
        buf.write(f"#summary {k}={_cell(data['summary'][k])}\n")
    cols = sorted({c for row in data["rows"] for c in row})
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in data["rows"]:
        w.writerow([_cell(row[c]) if c in row else "" for c in cols])
    return buf.getvalue()


def export_report(report: Report, path: str, format: str = "json") -> str:
    if format == "json":
        text = report_to_json(report)
    elif format == "csv":
        text = report_to_csv(report)
    else:
        raise InvalidParams(f"unknown report format {format!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text


def read_report(path: str) -> Report:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        d = json.loads(text)
        return Report(d["kind"], d["meta"], d["rows"], d["summary"], d["passed"])
    kind, passed, meta, summary = "", True, {}, {}
    body = []
    for ln in text.splitlines():
        if ln.startswith("#kind="):
            kind = ln[6:]
        elif ln.startswith("#passed="):
            passed = _parse_cell(ln[8:])
        elif ln.startswith("#meta "):
            k, _, v = ln[6:].partition("=")
            meta[k] = _parse_cell(v)
        elif ln.startswith("#summary "):
            k, _, v = ln[9:].partition("=")
            summary[k] = _parse_cell(v)
        else:
            body.append(ln)
    rows = []
    reader = csv.reader(body)
    header = next(reader, None)
    if header:
        for rec in reader:
            rows.append({c: _parse_cell(v) for c, v in zip(header, rec) if v != ""})
    return Report(kind, meta, rows, summary, passed)
