#!/usr/bin/env python3
"""Writes the synthetic evaluation scenario used by the end-to-end test.

Six subjects S1..S6, each with two enrollment samples (one per direction)
and two probe samples, and four morphs. Every embedding has 64 components of +-1/8, so vectors are
unit length and every cosine score is an exact multiple of 1/64.

Run from this directory; output is committed.
"""
import random

DIM = 64
SUBJECTS = [f"S{i}" for i in range(1, 7)]
MORPHS = {"M1": ("S1", "S2"), "M2": ("S3", "S4"), "M3": ("S5", "S6"), "M4": ("S1", "S4")}
# Components taken from the first contributor; the rest come from the second.
SHARE = {"M1": 32, "M2": 54, "M3": 36, "M4": 44}
# Probe samples of S6 are heavily perturbed so some genuine trials fail.
NOISY = {"S6"}


def flip(rng, vec, n):
    out = list(vec)
    for k in rng.sample(range(DIM), n):
        out[k] = -out[k]
    return out


def main():
    rng = random.Random(3)
    identity = {s: [rng.choice((1, -1)) for _ in range(DIM)] for s in SUBJECTS}
    rows = []  # (sample_id, owner, signs)
    for s in SUBJECTS:
        for e in ("enroll", "enroll2"):
            rows.append((f"bf/{s}_{e}.png", s, flip(rng, identity[s], rng.randint(2, 6))))
        for k in (1, 2):
            noise = rng.randint(24, 28) if s in NOISY else rng.randint(3, 12)
            rows.append((f"bf/{s}_probe{k}.png", s, flip(rng, identity[s], noise)))
    for m, (a, b) in MORPHS.items():
        mask = set(rng.sample(range(DIM), SHARE[m]))
        signs = [identity[a][k] if k in mask else identity[b][k] for k in range(DIM)]
        rows.append((f"morph/{m}.png", m, flip(rng, signs, rng.randint(2, 8))))

    with open("embeddings.csv", "w", newline="\n") as f:
        f.write("sample_id,owner_id," + ",".join(f"v{k}" for k in range(DIM)) + "\n")
        for sample, owner, signs in rows:
            f.write(f"{sample},{owner}," + ",".join("0.125" if v > 0 else "-0.125" for v in signs) + "\n")

    header = "role,kind,id,subject,contributor_a,contributor_b,path\n"
    with open("manifest_references.csv", "w", newline="\n") as f:
        f.write(header)
        for s in SUBJECTS:
            f.write(f"reference,bonafide,{s}_ref,{s},,,bf/{s}_enroll.png\n")
        for m, (a, b) in MORPHS.items():
            f.write(f"reference,morph,{m},,{a},{b},morph/{m}.png\n")
        for s in SUBJECTS:
            for k in (1, 2):
                f.write(f"probe,bonafide,{s}_p{k},{s},,,bf/{s}_probe{k}.png\n")
    with open("manifest_probes.csv", "w", newline="\n") as f:
        f.write(header)
        for s in SUBJECTS:
            f.write(f"reference,bonafide,{s}_ref,{s},,,bf/{s}_enroll2.png\n")
        for s in SUBJECTS:
            for k in (1, 2):
                f.write(f"probe,bonafide,{s}_p{k},{s},,,bf/{s}_probe{k}.png\n")
        for m, (a, b) in MORPHS.items():
            f.write(f"probe,morph,{m},,{a},{b},morph/{m}.png\n")


if __name__ == "__main__":
    main()
