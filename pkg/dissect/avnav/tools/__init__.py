from dissect.avnav.tools.bench import BenchResult, bench_csv, throughput_bench
from dissect.avnav.tools.replay import render_episode, write_replay

__all__ = [
    "BenchResult",
    "bench_csv",
    "render_episode",
    "throughput_bench",
    "write_replay",
]
