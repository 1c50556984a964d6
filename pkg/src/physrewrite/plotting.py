"""Figures that accompany the grade and analyze reports."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .terms import Num, apply_subst, vars_of  # noqa: E402
from .weights import weight_value  # noqa: E402


def _log2(w) -> float:
    sub = {v: Num(1) for v in vars_of(w)}
    v = weight_value(apply_subst(w, sub))
    return math.log2(v) if isinstance(v, int) else float(math.log2(float(v)))


def grade_figure(report, path) -> Path:
    """Assigned mark against ground truth per student; fails drawn in red."""
    grades = report.grades
    xs = range(len(grades))
    fig, ax = plt.subplots(figsize=(max(6, 0.45 * len(grades)), 3.5))
    ax.bar(xs, [float(g.mark) for g in grades], color=["#c0392b" if g.failed else "#2e86c1" for g in grades])
    truth = [(i, float(g.ground_truth)) for i, g in enumerate(grades) if g.ground_truth is not None]
    if truth:
        ax.scatter([i for i, _ in truth], [t for _, t in truth], marker="_", s=300, color="black", label="ground truth")
        ax.legend(loc="upper right")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([g.student_id for g in grades], rotation=70, ha="right", fontsize=7)
    ax.set_ylabel("mark")
    ax.set_ylim(0, float(report.max_mark) * 1.15 or 1)
    ax.set_title(f"{report.question_id}: {report.fails} fails" + (" (T' loaded)" if report.tprime else ""))
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out)
    plt.close(fig)
    return out


def analysis_figure(analysis, path) -> Path:
    """log2 weight of each rule's left and right side with variables at 1."""
    reps = analysis.orientedness
    lhs = [_log2(r.obligation[0]) for r in reps]
    rhs = [_log2(r.obligation[1]) for r in reps]
    xs = range(len(reps))
    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(reps)), 3.5))
    ax.plot(xs, lhs, "o", label="lhs", color="#2e86c1")
    ax.plot(xs, rhs, "x", label="rhs", color="#d35400")
    for i, r in enumerate(reps):
        if not r.oriented:
            ax.axvspan(i - 0.4, i + 0.4, color="#c0392b", alpha=0.15)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([r.rule_id for r in reps], rotation=80, fontsize=6)
    ax.set_ylabel("log2 weight")
    ax.set_title(analysis.summary(), fontsize=8)
    ax.legend()
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out)
    plt.close(fig)
    return out
