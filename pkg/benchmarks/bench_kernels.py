"""Time the compiled and pure-Python similarity kernels on the synthetic corpus.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Both backends must return identical pair lists; the script exits non-zero
if they disagree.
"""
from __future__ import annotations

import argparse
import sys
import time
from importlib import resources

from mdresolve.kernels import backends
from mdresolve.schema import load_instance, load_schema
from mdresolve.similarity import TfIdfCorpus, _tfidf_rows


def _columns():
    root = resources.files("mdresolve") / "data" / "synthetic"
    schema = load_schema((root / "schema.txt").read_text())
    inst = load_instance(schema, {
        rel: root / f"{rel.lower()}.csv"
        for rel in ("Author", "Paper", "PaperAuthor", "Conference", "Journal")
    })
    names = sorted({v for v in inst.column("Author", "name") if v is not None})
    titles = sorted({v for v in inst.column("Paper", "title") if v is not None})
    years = sorted({str(v) for v in inst.column("Paper", "year") if v is not None})
    return names, titles, years


def _timed(fn, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    names, titles, years = _columns()
    rows = _tfidf_rows(titles, TfIdfCorpus(titles))
    # single-pair kernels run over every pair of the first 150 names
    sample = names[:150]
    pairs = [(a, b) for i, a in enumerate(sample) for b in sample[i + 1:]]

    cases = {
        "jw_pairs": lambda k: k.jw_pairs(names, 0.85),
        "edit_pairs": lambda k: k.edit_pairs(years, 0.5),
        "cosine_pairs": lambda k: k.cosine_pairs(*rows, 0.5),
        "jaro_winkler": lambda k: [k.jaro_winkler(a, b) for a, b in pairs],
        "levenshtein": lambda k: [k.levenshtein(a, b) for a, b in pairs],
    }
    found = backends()
    print(f"inputs: {len(names)} names, {len(titles)} titles, {len(years)} years, {len(pairs)} name pairs")
    print(f"backends: {', '.join(found)}")
    print(f"{'kernel':<14}" + "".join(f"{b:>12}" for b in found) + ("    speedup" if len(found) > 1 else ""))
    status = 0
    for name, case in cases.items():
        times, results = {}, {}
        for backend, mod in found.items():
            times[backend], results[backend] = _timed(lambda: case(mod), args.repeat)
        line = f"{name:<14}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in found)
        if "cython" in found:
            line += f"  {times['python'] / times['cython']:>8.1f}x"
            if results["python"] != results["cython"]:
                line += "  MISMATCH"
                status = 1
        print(line)
    return status


if __name__ == "__main__":
    sys.exit(main())
