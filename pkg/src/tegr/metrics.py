"""Recognition metrics and the aligned per-level report table."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Outcome:
    true_goal: str
    argmax: frozenset[str]
    n_hypotheses: int


@dataclass
class MetricRates:
    tp: int
    fp: int
    fn: int
    tn: int
    tpr: float
    fpr: float
    fnr: float
    f1: float
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn, "tpr": self.tpr,
                "fpr": self.fpr, "fnr": self.fnr, "f1": self.f1, "flags": self.flags}


def confusion(o: Outcome) -> tuple[int, int, int, int]:
    """Per-problem (TP, FP, FN, TN): a hypothesis counts as recognized iff it is in the argmax set."""
    tp = 1 if o.true_goal in o.argmax else 0
    fp = len(o.argmax - {o.true_goal})
    fn = 1 - tp
    tn = (o.n_hypotheses - 1) - fp
    return tp, fp, fn, tn


def rates_from_counts(tp: int, fp: int, fn: int, tn: int) -> MetricRates:
    flags = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            flags.append(f"{name}: zero denominator")
            return 0.0
        return num / den

    tpr = ratio(tp, tp + fn, "tpr")
    fpr = ratio(fp, fp + tn, "fpr")
    f1 = ratio(2 * tp, 2 * tp + fp + fn, "f1")
    return MetricRates(tp, fp, fn, tn, tpr, fpr, 1.0 - tpr, f1, flags)


def metric_rates(outcomes: Iterable[Outcome | tuple]) -> MetricRates:
    """Aggregate confusion counts over problems, then apply the rate definitions."""
    tp = fp = fn = tn = 0
    seen = False
    for o in outcomes:
        if not isinstance(o, Outcome):
            o = Outcome(o[0], frozenset(o[1]), int(o[2]))
        seen = True
        a, b, c, d = confusion(o)
        tp, fp, fn, tn = tp + a, fp + b, fn + c, tn + d
    if not seen:
        raise ValueError("metric_rates needs at least one outcome")
    return rates_from_counts(tp, fp, fn, tn)


def ranked_first(step_rankings: Sequence, true_goal: str) -> float:
    """Fraction of steps whose argmax is exactly the true goal (ties do not count).

    A step is anything with an ``argmax`` attribute, a plain argmax list, or a
    goal -> posterior mapping.
    """
    if not step_rankings:
        raise ValueError("ranked_first needs at least one step")
    hits = 0
    for step in step_rankings:
        if hasattr(step, "argmax"):
            top = list(step.argmax)
        elif isinstance(step, dict):
            best = max(step.values())
            top = [g for g, v in step.items() if v == best]
        else:
            top = list(step)
        hits += top == [true_goal]
    return hits / len(step_rankings)


TABLE_COLUMNS = ("Domain", "Family", "|G|", "Obs(%)", "|Obs|", "Time(s)", "TPR", "FPR", "FNR", "F1")


def format_table(rows: Sequence[dict]) -> str:
    """Aligned text table: one row per (domain, family, observability level)."""
    cells = [list(TABLE_COLUMNS)]
    for r in rows:
        cells.append([
            r["domain"], r["family"], f"{r['hypotheses']:.1f}", str(r["level"]), f"{r['observations']:.2f}",
            f"{r['time']:.3f}", f"{r['tpr']:.3f}", f"{r['fpr']:.3f}", f"{r['fnr']:.3f}", f"{r['f1']:.3f}",
        ])
    widths = [max(len(row[i]) for row in cells) for i in range(len(TABLE_COLUMNS))]
    lines = []
    for k, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


__all__ = ["Outcome", "MetricRates", "confusion", "metric_rates", "rates_from_counts", "ranked_first",
           "format_table", "TABLE_COLUMNS"]
