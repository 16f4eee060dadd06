"""Run the synthetic benchmark lineup and print the metrics table.

python3 demos/run_benchmark.py            # locked default corpus, ~10s
python3 demos/run_benchmark.py --quick    # smaller corpus for a smoke run
"""
import sys
import time

from nuggetbase.evalharness import SYSTEM_NAMES, SyntheticCorpusSpec, run_eval

spec = SyntheticCorpusSpec()
if "--quick" in sys.argv:
    spec = SyntheticCorpusSpec(n_entities=10, changes_per_entity=4, seed=42)

t0 = time.time()
report = run_eval(spec, systems=SYSTEM_NAMES, k=20, progress=lambda name: print("...", name, file=sys.stderr))

cols = [
    ("recall@20", "nugget_recall_at_k"),
    ("temporal", "temporal_correctness"),
    ("conflict", "conflict_rate"),
    ("governance", "governance_score"),
    ("ctx tokens", "median_context_tokens"),
    ("p50 ms", "latency_p50_ms"),
]
print(f"\ncorpus: {spec.n_entities} entities x {spec.changes_per_entity} changes, seed {spec.seed}")
print(f"{'system':<18}" + "".join(f"{h:>12}" for h, _ in cols))
for name in SYSTEM_NAMES:
    m = report["systems"][name]
    row = "".join(f"{m[key]:>12.3f}" for _, key in cols)
    print(f"{name:<18}{row}")
print(f"\ntotal {time.time() - t0:.1f}s")
