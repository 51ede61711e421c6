"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--rows 20000] [--repeat 3]

Reports the best wall time per task and backend, and checks that both
backends return identical models.
"""

import argparse
import time

import numpy as np

from sigdetect import ModelSpec, available_backends, fit_ensemble, use_backend
from sigdetect.cluster import fit_kmeans
from sigdetect.persistence import dumps_model
from sigdetect.synthetic import wobble_table
from sigdetect.tree import grow_tree


def best_time(func, repeat):
    best, result = np.inf, None
    for _ in range(repeat):
        start = time.perf_counter()
        result = func()
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    table = wobble_table(n=args.rows, seed=0)
    X, is_on = table.features, table.on_mask
    tasks = {
        "noisy tree, depth 8": lambda: grow_tree(X, is_on, 0.2, "noisy", max_depth=8),
        "lima tree, depth 8": lambda: grow_tree(X, is_on, 0.2, "lima", max_depth=8),
        "forest T=20, depth 6": lambda: fit_ensemble(
            table, ModelSpec("noisy-tree", 0.2, max_depth=6, n_estimators=20), seed=0),
        "k-means k=64": lambda: fit_kmeans(X, 64, seed=0),
    }
    backends = available_backends()
    print(f"rows={args.rows} features={X.shape[1]} backends={backends}")
    print(f"{'task':24s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for name, task in tasks.items():
        times, outputs = {}, {}
        for backend in backends:
            with use_backend(backend):
                times[backend], outputs[backend] = best_time(task, args.repeat)
        row = f"{name:24s}" + "".join(f"{times[b]:11.3f}s" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:9.1f}x"
            out = [outputs[b] for b in backends]
            if hasattr(out[0], "members"):
                same = dumps_model(out[0]) == dumps_model(out[1])
            elif isinstance(out[0], np.ndarray):
                same = np.array_equal(out[0], out[1])
            else:
                same = all(np.array_equal(getattr(out[0], f), getattr(out[1], f))
                           for f in ("feature", "threshold", "left", "right"))
            row += "" if same else "   (outputs differ!)"
        print(row)


if __name__ == "__main__":
    main()
