import pytest

from dissect.avnav.config import RunConfig
from dissect.avnav.exception import ConfigError
from dissect.avnav.tools.bench import ENV_ONLY, ENV_POLICY, BenchResult, bench_csv, throughput_bench


def test_bench_result():
    result = BenchResult(ENV_ONLY, 2, 2.0, 10, 30)

    assert result.decisions_per_second == 5.0
    assert result.steps_per_second == 15.0
    assert result.per_env_rate == 2.5
    assert result.row() == ["env", "2", "2.000", "10", "30", "5.00", "15.00"]


def test_bench_csv():
    text = bench_csv([BenchResult(ENV_ONLY, 1, 1.0, 4, 8), BenchResult(ENV_POLICY, 1, 2.0, 4, 8)])
    assert text.splitlines() == [
        "mode,num_envs,seconds,decisions,steps,decisions_per_second,steps_per_second",
        "env,1,1.000,4,8,4.00,8.00",
        "env+policy,1,2.000,4,8,2.00,4.00",
    ]


def test_throughput_bench():
    config = RunConfig(num_envs=2, max_steps=10, scenario="clean")
    results = throughput_bench(config, 0.05, warmup=0.0)

    assert [result.mode for result in results] == [ENV_ONLY, ENV_POLICY]
    for result in results:
        assert result.num_envs == 2
        assert result.seconds >= 0.05
        assert result.decisions >= 2
        assert result.steps >= result.decisions


@pytest.mark.parametrize("duration, warmup", [(0.0, 0.0), (-1.0, 0.0), (0.1, -0.5)])
def test_throughput_bench_invalid(duration: float, warmup: float):
    with pytest.raises(ConfigError):
        throughput_bench(RunConfig(), duration, warmup)
