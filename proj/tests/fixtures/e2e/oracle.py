#!/usr/bin/env python3
"""Independent oracle for the end-to-end evaluation fixture.

Recomputes every score with exact rational arithmetic, solves the threshold
by sweeping all candidates, counts accepted trials with plain loops and
writes the expected report files into expected/. Shares no code with the
C++ implementation.
"""
import csv
import json
import math
import os
from decimal import Decimal, ROUND_HALF_UP
from fractions import Fraction
from math import isqrt

HERE = os.path.dirname(os.path.abspath(__file__))


def read_csv(name):
    with open(os.path.join(HERE, name), newline="") as f:
        return list(csv.reader(f))


def exact_sqrt(q):
    n, d = q.numerator, q.denominator
    rn, rd = isqrt(n), isqrt(d)
    assert rn * rn == n and rd * rd == d, "fixture norms must be exact"
    return Fraction(rn, rd)


def cosine(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    return dot / (exact_sqrt(sum(a * a for a in u)) * exact_sqrt(sum(b * b for b in v)))


def load_manifest(name):
    refs, probes = {}, {}
    for role, kind, ident, subject, ca, cb, path in read_csv(name)[1:]:
        entry = {"kind": kind, "subject": subject, "contributors": (ca, cb)}
        if role == "reference":
            refs.setdefault(ident, dict(entry, samples=[]))["samples"].append(path)
        else:
            probes[ident] = dict(entry, sample=path)
    return refs, probes


def g17(x):
    return "%.17g" % x


def percent(count, total):
    return float(Fraction(100 * count, total))


def one_decimal(p):
    return str(Decimal(repr(p)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def evaluate(manifest, emb, target):
    refs, probes = load_manifest(manifest)
    model = {}
    for ident, m in refs.items():
        vecs = [emb[s] for s in m["samples"]]
        model[ident] = [sum(c) / len(vecs) for c in zip(*vecs)]
    dump, genuine, impostor, morph = [], [], [], {}
    for mid in sorted(refs):
        for pid in sorted(probes):
            m, p = refs[mid], probes[pid]
            s = cosine(model[mid], emb[p["sample"]])
            if m["kind"] == "bonafide" and p["kind"] == "bonafide":
                kind = "genuine" if m["subject"] == p["subject"] else "zero_effort"
                (genuine if kind == "genuine" else impostor).append(s)
            elif m["kind"] != p["kind"]:
                morph_side, other = (m, p) if m["kind"] == "morph" else (p, m)
                if other["subject"] not in morph_side["contributors"]:
                    continue
                kind = "morph_attack"
                key = mid if m["kind"] == "morph" else pid
                morph.setdefault(key, {}).setdefault(other["subject"], []).append(s)
            else:
                continue
            dump.append(f"{kind},{mid},{pid},{g17(float(s))}")

    t_target = Fraction(target)
    scores = sorted(set(impostor))
    above = float(scores[-1])
    candidates = [Fraction(x) for x in sorted(set(float(s) for s in scores))]
    candidates.append(Fraction(math.nextafter(above, math.inf)))
    threshold = None
    for t in candidates:
        accepted = 0
        for s in impostor:
            if float(s) >= t:
                accepted += 1
        if Fraction(accepted, len(impostor)) <= t_target:
            threshold = t
            break
    t = threshold

    def accepted(values):
        return sum(1 for s in values if Fraction(float(s)) >= t)

    successes = 0
    for subjects in morph.values():
        assert len(subjects) == 2
        if all(max(Fraction(float(x)) for x in xs) >= t for xs in subjects.values()):
            successes += 1
    return {
        "threshold": float(t),
        "mmpmr": percent(successes, len(morph)),
        "fmr": percent(accepted(impostor), len(impostor)),
        "fnmr": percent(len(genuine) - accepted(genuine), len(genuine)),
        "dump": "kind,model_id,probe_id,score\n" + "".join(line + "\n" for line in dump),
    }


def main():
    with open(os.path.join(HERE, "config.json")) as f:
        cfg = json.load(f)
    ev = cfg["evaluation"]
    emb = {}
    for name in ev["embeddings"]:
        for row in read_csv(name)[1:]:
            emb[row[0]] = [Fraction(x) for x in row[2:]]
    target = cfg["target_fmr"]
    r = evaluate(ev["manifests"]["references"], emb, target)
    p = evaluate(ev["manifests"]["probes"], emb, target)

    out = os.path.join(HERE, "expected")
    os.makedirs(out, exist_ok=True)
    cell = f"{one_decimal(r['mmpmr'])} | {one_decimal(p['mmpmr'])}"
    rows = [["Dataset", "FRS", ev["tool"]], [ev["dataset"], ev["frs"], cell]]
    widths = [max(len(row[c]) for row in rows) for c in range(3)]
    lines = [f"MMPMR @ FMR = {one_decimal(target * 100.0)}% (morphs as references | morphs as probes) [%]"]
    for row in rows:
        lines.append("  ".join(v.ljust(widths[c]) if c < 2 else v for c, v in enumerate(row)))
    with open(os.path.join(out, "report.txt"), "w", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    with open(os.path.join(out, "report.csv"), "w", newline="\n") as f:
        f.write("dataset,frs,tool,mmpmr_ref,mmpmr_probe,threshold_ref,threshold_probe,"
                "fmr_ref,fmr_probe,fnmr_ref,fnmr_probe\n")
        fields = [ev["dataset"], ev["frs"], ev["tool"]]
        for key in ("mmpmr", "threshold", "fmr", "fnmr"):
            fields += [g17(r[key]), g17(p[key])]
        f.write(",".join(fields) + "\n")
    for name, res in (("references", r), ("probes", p)):
        with open(os.path.join(out, f"scores_{name}.csv"), "w", newline="\n") as f:
            f.write(res["dump"])


if __name__ == "__main__":
    main()
