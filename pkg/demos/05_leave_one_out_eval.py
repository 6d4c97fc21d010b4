"""The full leave-one-task-out protocol over several seeds.

Every task takes a turn as the cold-start target while the rest serve as
history; seeds vary both probe subsampling and the stochastic fits. The
aggregate Pearson correlation is the headline number.
"""

import tempfile
from pathlib import Path

from fennec import NmfConfig, SynthBenchConfig, generate_benchmark, leave_one_out_eval

workdir = Path(tempfile.mkdtemp(prefix="fennec_demo_"))
manifest = generate_benchmark(
    workdir, SynthBenchConfig(num_models=20, num_tasks=6, k=3, seed=9,
                              min_samples=200, max_samples=260)
)
print(f"benchmark at {workdir}")

summary = leave_one_out_eval(manifest, master_seed=0, num_seeds=3,
                             probe_size=180, nmf_cfg=NmfConfig(k=3))

print(f"\nmean Pearson over {len(summary.runs)} folds: "
      f"{summary.mean_pearson:.4f} +/- {summary.std_pearson:.4f}")
print(f"offline work: {summary.offline_seconds:.2f}s, online ranking: {summary.online_seconds*1e3:.1f}ms")
print("\nper-task means:")
for task_id, stats in sorted(summary.per_task.items()):
    print(f"  {task_id}: {stats['mean']:.4f} +/- {stats['std']:.4f}")
