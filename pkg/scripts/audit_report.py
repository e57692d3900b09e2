"""Recompute report.json tables from the outcomes.jsonl and bursts.jsonl intermediates.

Shares no code with the pipeline: statistics come from the standard library and scipy.
Exit status is 1 when any cell disagrees.
"""

import argparse
import json
import math
import re
import statistics
import sys
from collections import defaultdict
from pathlib import Path

from scipy import special, stats

DAY = 86400.0
RTOL, ATOL = 1e-9, 1e-12

# report feature name -> outcomes.jsonl field, when they differ
RENAMED = {"burst_length": "n_posts", "word_count": "mean_word_count"}
OPS = {">=": lambda a, b: a >= b, ">": lambda a, b: a > b, "<=": lambda a, b: a <= b,
       "<": lambda a, b: a < b, "==": lambda a, b: a == b}


def read_jsonl(path):
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def mean(xs):
    return math.fsum(xs) / len(xs)


def ks(a, b):
    d = stats.ks_2samp(a, b, method="asymp").statistic
    ne = len(a) * len(b) / (len(a) + len(b))
    lam = (math.sqrt(ne) + 0.12 + 0.11 / math.sqrt(ne)) * d
    return float(d), float(special.kolmogorov(lam))


class Auditor:
    def __init__(self):
        self.n_checked = 0
        self.mismatches = []

    def check(self, where, expected, got):
        self.n_checked += 1
        if expected is None or got is None:
            ok = expected is None and got is None
        elif isinstance(expected, bool) or isinstance(got, bool):
            ok = expected == got
        else:
            ok = math.isclose(float(expected), float(got), rel_tol=RTOL, abs_tol=ATOL)
        if not ok:
            self.mismatches.append(f"{where}: report {got!r} != recomputed {expected!r}")


def audit_comparison(a, report, outs):
    rows = report.get("comparison")
    if rows is None:
        a.check("comparison.present", True, not any(o["moc"] for o in outs) or all(o["moc"] for o in outs))
        return
    for row in rows:
        key = RENAMED.get(row["feature"], row["feature"])
        pos = [float(o[key]) for o in outs if o["moc"] and o[key] is not None]
        neg = [float(o[key]) for o in outs if not o["moc"] and o[key] is not None]
        w = f"comparison[{row['feature']}]"
        a.check(w + ".n_pos", len(pos), row["n_pos"])
        a.check(w + ".n_neg", len(neg), row["n_neg"])
        a.check(w + ".pos_mean", mean(pos), row["pos_mean"])
        a.check(w + ".neg_mean", mean(neg), row["neg_mean"])
        a.check(w + ".pos_median", statistics.median(pos), row["pos_median"])
        a.check(w + ".neg_median", statistics.median(neg), row["neg_median"])
        d, p = ks(pos, neg)
        a.check(w + ".d_stat", d, row["d_stat"])
        if report["config"]["ks_method"] == "asymptotic":
            a.check(w + ".p_value", p, row["p_value"])


def _threshold(spec, outs):
    m = re.fullmatch(r"(\w+)(>=|<=|==|>|<)(\S+)", spec)
    feat, op, val = m.groups()
    vals = [float(o[feat]) for o in outs if o[feat] is not None]
    if val == "mean":
        thr = mean(vals)
    elif val == "median":
        thr = statistics.median(vals)
    else:
        thr = float(val)
    return feat, op, thr


def audit_robustness(a, report, outs):
    named = {"persistence": "n_posts>=15", "ces_given": "ces_given>0", "ses_given": "ses_given>0",
             "engagement": "engagement>=0.75", "affect_pos": "affect_pos_own>=mean"}
    for row in report["robustness"]:
        feat, op, thr = _threshold(named.get(row["name"], row["name"]), outs)
        inside = [float(o["mood_change"]) for o in outs if o[feat] is not None and OPS[op](float(o[feat]), thr)]
        outside = [float(o["mood_change"]) for o in outs if not (o[feat] is not None and OPS[op](float(o[feat]), thr))]
        w = f"robustness[{row['name']}]"
        a.check(w + ".threshold", thr, row["threshold"])
        a.check(w + ".n_conditioned", len(inside), row["n_conditioned"])
        a.check(w + ".n_complement", len(outside), row["n_complement"])
        mc, mo = mean(inside), mean(outside)
        a.check(w + ".mean_conditioned", mc, row["mean_conditioned"])
        a.check(w + ".mean_complement", mo, row["mean_complement"])
        a.check(w + ".positive_rate_conditioned", sum(v > 0 for v in inside) / len(inside),
                row["positive_rate_conditioned"])
        a.check(w + ".positive_rate_complement", sum(v > 0 for v in outside) / len(outside),
                row["positive_rate_complement"])
        a.check(w + ".ratio", mc / mo if mo > 0 else None, row["ratio"])
        d, p = ks(inside, outside)
        a.check(w + ".d_stat", d, row["d_stat"])
        a.check(w + ".p_value", p, row["p_value"])


def audit_cohort(a, report, outs):
    c = report["cohort"]
    pos = [o for o in outs if o["moc"]]
    neg = [o for o in outs if not o["moc"]]
    users = {o["user_id"] for o in outs}
    a.check("cohort.n_users", len(users), c["n_users"])
    a.check("cohort.n_bursts", len(outs), c["n_bursts"])
    a.check("cohort.n_positive_bursts", len(pos), c["n_positive_bursts"])
    a.check("cohort.pct_users_with_moc", 100 * len({o["user_id"] for o in pos}) / len(users),
            c["pct_users_with_moc"])
    a.check("cohort.pct_bursts_with_moc", 100 * len(pos) / len(outs), c["pct_bursts_with_moc"])
    a.check("cohort.mean_moc_position_frac",
            mean([o["moc_position_frac"] for o in pos]) if pos else None, c["mean_moc_position_frac"])
    a.check("cohort.mean_posts_before_moc",
            mean([o["posts_before_moc"] for o in pos]) if pos else None, c["mean_posts_before_moc"])
    for side, group in (("positive", pos), ("negative", neg)):
        for key, field in (("start_on_reply_rate", "starts_on_reply"), ("end_on_reply_rate", "ends_on_reply")):
            exp = sum(o[field] for o in group) / len(group) if group else None
            a.check(f"cohort.{key}.{side}", exp, c[key][side])
        moods = [o["first_mood_group"] for o in group if o["first_mood_group"] is not None]
        for g in range(1, 7):
            exp = moods.count(g) / len(moods) if moods else 0.0
            a.check(f"cohort.initial_mood_distribution.{side}[{g}]", exp,
                    c["initial_mood_distribution"][side][g - 1])


def audit_bursts(a, report, bursts, outs):
    b = report["bursts"]
    by_user = defaultdict(list)
    for r in bursts:
        by_user[r["user_id"]].append(r)
    sizes = [r["n_posts"] for r in bursts]
    a.check("bursts.n", len(bursts), b["n"])
    a.check("bursts.n_users", len(by_user), b["n_users"])
    a.check("bursts.mean_posts", mean(sizes), b["mean_posts"])
    a.check("bursts.median_posts", statistics.median(sizes), b["median_posts"])
    a.check("bursts.mean_span_days", mean([(r["end"] - r["start"]) / DAY for r in bursts]), b["mean_span_days"])
    a.check("bursts.mean_bursts_per_user", len(bursts) / len(by_user), b["mean_bursts_per_user"])
    n_intra = sum(s - 1 for s in sizes)
    intra = math.fsum(r["end"] - r["start"] for r in bursts) / n_intra if n_intra else 0.0
    gaps = []
    for rs in by_user.values():
        rs = sorted(rs, key=lambda r: r["burst_index"])
        gaps += [nxt["start"] - prv["end"] for prv, nxt in zip(rs, rs[1:])]
    inter = mean(gaps) if gaps else 0.0
    a.check("bursts.mean_intra", intra, b["mean_intra"])
    a.check("bursts.mean_inter", inter, b["mean_inter"])
    a.check("bursts.ratio_inter_intra", inter / intra if intra > 0 else 0.0, b["ratio_inter_intra"])
    # the two intermediates must describe the same bursts
    keyed = {(r["user_id"], r["burst_index"]): r["n_posts"] for r in bursts}
    a.check("intermediates.same_bursts", True,
            keyed == {(o["user_id"], o["burst_index"]): o["n_posts"] for o in outs})


def audit_histograms(a, report, outs):
    for feat, rows in report["histograms"].items():
        pos = defaultdict(int)
        neg = defaultdict(int)
        for o in outs:
            if o[feat] is not None:
                (pos if o["moc"] else neg)[math.floor(o[feat])] += 1
        for row in rows:
            a.check(f"hist[{feat}][{row['bin']}].pos", pos.get(row["bin"], 0), row["pos_count"])
            a.check(f"hist[{feat}][{row['bin']}].neg", neg.get(row["bin"], 0), row["neg_count"])
        a.check(f"hist[{feat}].total", sum(pos.values()) + sum(neg.values()),
                sum(r["pos_count"] + r["neg_count"] for r in rows))


def audit(out_dir):
    out_dir = Path(out_dir)
    report = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    outs = read_jsonl(out_dir / "outcomes.jsonl")
    bursts = read_jsonl(out_dir / "bursts.jsonl")
    a = Auditor()
    audit_comparison(a, report, outs)
    audit_robustness(a, report, outs)
    audit_cohort(a, report, outs)
    audit_bursts(a, report, bursts, outs)
    audit_histograms(a, report, outs)
    return a


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", help="directory holding report.json and the intermediates")
    args = ap.parse_args()
    a = audit(args.out_dir)
    for m in a.mismatches:
        print("MISMATCH", m)
    print(f"{a.n_checked} cells checked, {len(a.mismatches)} mismatches")
    sys.exit(1 if a.mismatches else 0)


if __name__ == "__main__":
    main()
