#!/usr/bin/env python3
"""Benchmark nearest-neighbor negative sampling at configurable scale.

Builds a synthetic pool of clinical-looking terms, indexes it, and times
`nearest_excluding` queries across a thread pool (the distance kernel releases
the GIL, so threads scale nearly linearly). When --queries is smaller than the
target workload, the script also prints the linear projection for the full
100,000-query run over a 100,000-term pool.

Example quick check (about a minute on one core):

    python3 scripts/benchmark_sampling.py --pool-size 20000 --queries 2000 --jobs 1

Full-scale run (8 cores, budget: 10 minutes):

    python3 scripts/benchmark_sampling.py --pool-size 100000 --queries 100000 --jobs 8
"""

import argparse
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ontosim.editdist import build_index, nearest_excluding

TARGET_POOL = 100_000
TARGET_QUERIES = 100_000

FIRST = ["fracture", "disorder", "neoplasm", "infection", "injury", "stenosis",
         "absence", "hypertrophy", "atrophy", "dysplasia", "rupture", "edema"]
SECOND = ["femur", "tibia", "humerus", "radius", "kidney", "liver", "spleen",
          "retina", "cornea", "aorta", "trachea", "bladder", "pancreas"]


def synthetic_pool(size: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    pool = set()
    while len(pool) < size:
        term = (f"{rng.choice(FIRST)} of {rng.choice(SECOND)} "
                f"type {rng.integers(100_000):05d}")
        pool.add(term)
    return sorted(pool)


def run(pool, queries: int, jobs: int, seed: int) -> float:
    rng = np.random.default_rng(seed + 1)
    index = build_index(pool)
    jobs_queries = [
        (pool[rng.integers(len(pool))], pool[rng.integers(len(pool))])
        for _ in range(queries)
    ]
    nearest_excluding(index, pool[0], (pool[0],))  # compile before timing

    def work(chunk):
        for q, partner in chunk:
            nearest_excluding(index, q, (q, partner))

    chunks = [jobs_queries[i::jobs] for i in range(jobs)]
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        list(ex.map(work, chunks))
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pool-size", type=int, default=TARGET_POOL)
    parser.add_argument("--queries", type=int, default=TARGET_QUERIES)
    parser.add_argument("--jobs", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    print(f"building pool of {args.pool_size} terms ...")
    pool = synthetic_pool(args.pool_size, args.seed)
    t_build = time.perf_counter()
    build_index(pool)
    print(f"index build: {time.perf_counter() - t_build:.2f}s")

    print(f"running {args.queries} queries on {args.jobs} thread(s) ...")
    elapsed = run(pool, args.queries, args.jobs, args.seed)
    per_query = elapsed / args.queries
    print(f"total: {elapsed:.2f}s  per query: {per_query * 1000:.2f}ms "
          f"({args.jobs} thread(s))")

    if args.pool_size != TARGET_POOL or args.queries != TARGET_QUERIES:
        scale = (TARGET_POOL / args.pool_size) * (TARGET_QUERIES / args.queries)
        projected = elapsed * scale
        print(f"projected {TARGET_QUERIES} queries over {TARGET_POOL} terms "
              f"at {args.jobs} thread(s): {projected:.0f}s")


if __name__ == "__main__":
    main()
