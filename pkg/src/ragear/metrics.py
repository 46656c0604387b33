"""Ranking-quality and judge-agreement metrics.

Graded 0-5 judgments are binarized at a threshold for MRR/P@k/MAP@k and
used as-is (linear gain) for nDCG. Agreement between two judges is
measured per query with tie-corrected Kendall's tau, Spearman's rho,
extrapolated rank-biased overlap and Jaccard over the relevant sets.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

# judgments: query_id -> {course_id: graded score 0..5}
Judgments = dict[str, dict[str, int]]
# run: query_id -> ordered [(course_id, score)]
Run = dict[str, list[tuple[str, float]]]


@dataclass
class EvalConfig:
    relevance_threshold: int = 3
    cutoffs: tuple[int, ...] = (1, 3, 5)
    rbo_p: float = 0.9
    ndcg_exponential_gain: bool = False

    def __post_init__(self):
        if not 1 <= self.relevance_threshold <= 5:
            raise ValueError("relevance_threshold must be in 1..5")
        if list(self.cutoffs) != sorted(set(self.cutoffs)) or any(
            c < 1 for c in self.cutoffs
        ):
            raise ValueError("cutoffs must be positive and ascending")
        if not 0.0 < self.rbo_p < 1.0:
            raise ValueError("rbo_p must be in (0, 1)")


def _score(judged: dict[str, int], course_id: str) -> int:
    # Unjudged pairs count as score 0.
    return judged.get(course_id, 0)


def _relevant(judged: dict[str, int], course_id: str, cfg: EvalConfig) -> bool:
    return _score(judged, course_id) >= cfg.relevance_threshold


def reciprocal_rank(
    ranking: Sequence[str], judged: dict[str, int], cfg: EvalConfig
) -> float:
    for pos, course_id in enumerate(ranking, start=1):
        if _relevant(judged, course_id, cfg):
            return 1.0 / pos
    return 0.0


def precision_at_k(
    ranking: Sequence[str], judged: dict[str, int], cfg: EvalConfig, k: int
) -> float:
    hits = sum(1 for cid in ranking[:k] if _relevant(judged, cid, cfg))
    return hits / k


def average_precision_at_k(
    ranking: Sequence[str], judged: dict[str, int], cfg: EvalConfig, k: int
) -> float:
    total_relevant = sum(
        1 for s in judged.values() if s >= cfg.relevance_threshold
    )
    if total_relevant == 0:
        return 0.0
    hits = 0
    acc = 0.0
    for pos, course_id in enumerate(ranking[:k], start=1):
        if _relevant(judged, course_id, cfg):
            hits += 1
            acc += hits / pos
    return acc / total_relevant


def ndcg_at_k(
    ranking: Sequence[str], judged: dict[str, int], cfg: EvalConfig, k: int
) -> float:
    def gain(score: int) -> float:
        return float(2**score - 1) if cfg.ndcg_exponential_gain else float(score)

    dcg = sum(
        gain(_score(judged, cid)) / math.log2(pos + 1)
        for pos, cid in enumerate(ranking[:k], start=1)
    )
    ideal = sorted(judged.values(), reverse=True)[:k]
    idcg = sum(
        gain(s) / math.log2(pos + 1) for pos, s in enumerate(ideal, start=1)
    )
    return dcg / idcg if idcg > 0 else 0.0


def mrr(run: Run, judgments: Judgments, cfg: EvalConfig) -> float:
    values = [
        reciprocal_rank([cid for cid, _ in run[q]], judgments.get(q, {}), cfg)
        for q in run
    ]
    return statistics.fmean(values) if values else 0.0


def map_at_k(run: Run, judgments: Judgments, cfg: EvalConfig, k: int) -> float:
    values = [
        average_precision_at_k(
            [cid for cid, _ in run[q]], judgments.get(q, {}), cfg, k
        )
        for q in run
    ]
    return statistics.fmean(values) if values else 0.0


# -- rank correlation and agreement --------------------------------------


def kendall_tau(a: Sequence[float], b: Sequence[float]) -> Optional[float]:
    """Tie-corrected tau-b; None when either input is fully tied."""
    _check_pair(a, b)
    n = len(a)
    concordant = discordant = 0
    ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = a[i] - a[j]
            db = b[i] - b[j]
            if da == 0 and db == 0:
                continue
            if da == 0:
                ties_a += 1
            elif db == 0:
                ties_b += 1
            elif (da > 0) == (db > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    ta = n0 - concordant - discordant - ties_b  # pairs tied in a
    tb = n0 - concordant - discordant - ties_a  # pairs tied in b
    denom = math.sqrt((n0 - ta) * (n0 - tb))
    if denom == 0:
        return None
    return (concordant - discordant) / denom


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for pos in range(i, j + 1):
            ranks[order[pos]] = avg
        i = j + 1
    return ranks


def spearman_rho(a: Sequence[float], b: Sequence[float]) -> Optional[float]:
    """Pearson correlation of average ranks; None when fully tied."""
    _check_pair(a, b)
    ra, rb = _average_ranks(a), _average_ranks(b)
    n = len(ra)
    ma, mb = sum(ra) / n, sum(rb) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    va = sum((x - ma) ** 2 for x in ra)
    vb = sum((y - mb) ** 2 for y in rb)
    if va == 0 or vb == 0:
        return None
    return cov / math.sqrt(va * vb)


def _check_pair(a, b):
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValueError("need at least 2 elements")


def rbo_ext(s: Sequence[str], t: Sequence[str], p: float) -> float:
    """Extrapolated rank-biased overlap at depth max(|s|, |t|).

    A shorter list contributes its full prefix beyond its end, freezing
    its agreement at the last observed depth.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    if len(set(s)) != len(s):
        raise ValueError("duplicate ids in first list")
    if len(set(t)) != len(t):
        raise ValueError("duplicate ids in second list")
    k = max(len(s), len(t))
    if k == 0:
        return 1.0
    seen_s: set[str] = set()
    seen_t: set[str] = set()
    acc = 0.0
    x_k = 0
    for d in range(1, k + 1):
        if d <= len(s):
            seen_s.add(s[d - 1])
        if d <= len(t):
            seen_t.add(t[d - 1])
        x_d = len(seen_s & seen_t)
        acc += (x_d / d) * p**d
        x_k = x_d
    return (x_k / k) * p**k + ((1 - p) / p) * acc


def jaccard_relevant(
    judged1: dict[str, int], judged2: dict[str, int], cfg: EvalConfig
) -> float:
    set1 = {c for c, s in judged1.items() if s >= cfg.relevance_threshold}
    set2 = {c for c, s in judged2.items() if s >= cfg.relevance_threshold}
    union = set1 | set2
    if not union:
        return 1.0  # agreement on emptiness
    return len(set1 & set2) / len(union)


@dataclass
class AgreementReport:
    kendall: tuple[float, float]  # (mean, std)
    spearman: tuple[float, float]
    rbo: tuple[float, float]
    jaccard: tuple[float, float]
    n_queries: int

    def to_dict(self) -> dict:
        return {
            "n_queries": self.n_queries,
            "kendall_tau": {"mean": self.kendall[0], "std": self.kendall[1]},
            "spearman_rho": {"mean": self.spearman[0], "std": self.spearman[1]},
            "rbo": {"mean": self.rbo[0], "std": self.rbo[1]},
            "jaccard": {"mean": self.jaccard[0], "std": self.jaccard[1]},
        }


def _mean_std(values: list[float]) -> tuple[float, float]:
    if not values:
        return float("nan"), float("nan")
    mean = statistics.fmean(values)
    std = statistics.pstdev(values) if len(values) > 1 else 0.0
    return mean, std


def _ranked_by_score(judged: dict[str, int]) -> list[str]:
    return [c for c, _ in sorted(judged.items(), key=lambda t: (-t[1], t[0]))]


def agreement(
    j1: Judgments, j2: Judgments, cfg: EvalConfig
) -> AgreementReport:
    """Per-query agreement between two judges, averaged across queries.

    Queries must be common to both sides; tau/rho are computed over each
    query's common course set and all-tied queries are excluded from
    their means.
    """
    queries = sorted(set(j1) & set(j2))
    if not queries:
        raise ValueError("judges share no queries")
    taus, rhos, rbos, jaccards = [], [], [], []
    for q in queries:
        common = sorted(set(j1[q]) & set(j2[q]))
        jaccards.append(jaccard_relevant(j1[q], j2[q], cfg))
        rbos.append(
            rbo_ext(_ranked_by_score(j1[q]), _ranked_by_score(j2[q]), cfg.rbo_p)
        )
        if len(common) >= 2:
            a = [float(j1[q][c]) for c in common]
            b = [float(j2[q][c]) for c in common]
            tau = kendall_tau(a, b)
            rho = spearman_rho(a, b)
            if tau is not None:
                taus.append(tau)
            if rho is not None:
                rhos.append(rho)
    return AgreementReport(
        kendall=_mean_std(taus),
        spearman=_mean_std(rhos),
        rbo=_mean_std(rbos),
        jaccard=_mean_std(jaccards),
        n_queries=len(queries),
    )


# -- multi-method comparison ----------------------------------------------


@dataclass
class MetricReport:
    baseline: str
    methods: list[str]
    # metric name -> method -> mean value
    means: dict[str, dict[str, float]] = field(default_factory=dict)
    # metric name -> method -> relative % delta vs baseline (None for baseline)
    deltas: dict[str, dict[str, Optional[float]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "methods": self.methods,
            "means": self.means,
            "deltas": self.deltas,
        }


def metric_names(cfg: EvalConfig) -> list[str]:
    names = ["MRR"]
    names += [f"Precision@{k}" for k in cfg.cutoffs]
    names += [f"nDCG@{k}" for k in cfg.cutoffs]
    names += [f"MAP@{k}" for k in cfg.cutoffs]
    return names


def _method_means(
    run: Run, judgments: Judgments, cfg: EvalConfig
) -> dict[str, float]:
    out = {"MRR": mrr(run, judgments, cfg)}
    for k in cfg.cutoffs:
        per_query = lambda fn: statistics.fmean(
            fn([cid for cid, _ in run[q]], judgments.get(q, {}), cfg, k)
            for q in run
        )
        out[f"Precision@{k}"] = per_query(precision_at_k)
        out[f"nDCG@{k}"] = per_query(ndcg_at_k)
        out[f"MAP@{k}"] = per_query(average_precision_at_k)
    return out


def compare_methods(
    runs: dict[str, Run],
    judgments: Judgments,
    cfg: EvalConfig,
    baseline: str,
) -> MetricReport:
    if baseline not in runs:
        raise ValueError(f"baseline {baseline!r} not among runs")
    query_sets = {m: set(r) for m, r in runs.items()}
    reference = query_sets[baseline]
    for method, qs in query_sets.items():
        if qs != reference:
            raise ValueError(
                f"query set of {method!r} differs from baseline's"
            )
    if not reference:
        raise ValueError("runs contain no queries")

    methods = sorted(runs, key=lambda m: (m != baseline, m))
    report = MetricReport(baseline=baseline, methods=methods)
    per_method = {m: _method_means(runs[m], judgments, cfg) for m in methods}
    for name in metric_names(cfg):
        report.means[name] = {m: per_method[m][name] for m in methods}
        base_val = per_method[baseline][name]
        deltas: dict[str, Optional[float]] = {}
        for m in methods:
            if m == baseline:
                deltas[m] = None
            elif base_val == 0:
                deltas[m] = float("nan")
            else:
                deltas[m] = (per_method[m][name] - base_val) / base_val * 100.0
        report.deltas[name] = deltas
    return report


def render_report_table(report: MetricReport, cfg: EvalConfig) -> str:
    """Aligned text table: metric rows, method columns, delta% in parens."""
    headers = ["METRIC"] + [m.upper() for m in report.methods]
    rows = []
    for name in metric_names(cfg):
        row = [name]
        for m in report.methods:
            val = report.means[name][m]
            delta = report.deltas[name][m]
            if delta is None:
                row.append(f"{val:.3f}")
            else:
                row.append(f"{val:.3f} ({delta:+.2f}%)")
        rows.append(row)
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in rows))
        for i in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


# -- qrels I/O -------------------------------------------------------------


def read_qrels(lines) -> Judgments:
    """Whitespace-separated `query_id course_id score` lines."""
    judgments: Judgments = {}
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"qrels line {line_no}: expected 3 fields")
        query_id, course_id, score = parts
        score = int(score)
        if not 0 <= score <= 5:
            raise ValueError(f"qrels line {line_no}: score {score} out of 0..5")
        per_query = judgments.setdefault(query_id, {})
        if course_id in per_query:
            raise ValueError(
                f"qrels line {line_no}: duplicate pair ({query_id}, {course_id})"
            )
        per_query[course_id] = score
    return judgments


def write_qrels(out, judgments: Judgments):
    for query_id in sorted(judgments):
        for course_id in sorted(judgments[query_id]):
            out.write(f"{query_id} {course_id} {judgments[query_id][course_id]}\n")
