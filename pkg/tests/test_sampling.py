import pytest

from core.errors import VerificationError
from workers.sampling import SampleWorker, check_memory_safety, get_memory_usage_mb, run_samples


def test_results_keep_point_order():
    assert run_samples(lambda v: v * v, range(25), workers=3) == [v * v for v in range(25)]
    assert run_samples(lambda v: v, []) == []


def test_progress_reports_completion():
    calls = []
    worker = SampleWorker(lambda v: v + 1, workers=2, progress=lambda done, total: calls.append((done, total)))
    assert worker.run(range(10)) == list(range(1, 11))
    assert calls[-1] == (10, 10)


def test_worker_count_is_at_least_one():
    assert SampleWorker(lambda v: v, workers=0).workers == 1


def test_cancelled_worker_stops():
    worker = SampleWorker(lambda v: v, operation='Degree reduction')
    worker.cancel()
    with pytest.raises(VerificationError) as info:
        worker.run([1, 2, 3])
    assert info.value.error_type == 'cancelled'


def test_memory_usage_from_process(mocker):
    process = mocker.patch('psutil.Process')
    process.return_value.memory_info.return_value.rss = 50 * 1024 * 1024
    assert get_memory_usage_mb() == pytest.approx(50.0)


def test_memory_guard(mocker):
    mocker.patch('workers.sampling.get_memory_usage_mb', return_value=4096.0)
    assert not check_memory_safety('Sampling', max_mb=2048)
    assert check_memory_safety('Sampling', max_mb=8192)
    mocker.patch('workers.sampling.get_memory_usage_mb', return_value=None)
    assert check_memory_safety('Sampling', max_mb=1)


def test_memory_guard_aborts_sampling(mocker):
    mocker.patch('workers.sampling.check_memory_safety', return_value=False)
    func = mocker.Mock(return_value=0.0)
    with pytest.raises(VerificationError) as info:
        run_samples(func, [1, 2])
    assert info.value.error_type == 'memory'
    func.assert_not_called()


def test_memory_guard_between_batches(mocker):
    mocker.patch('workers.sampling.check_memory_safety', side_effect=[True, False])
    with pytest.raises(VerificationError) as info:
        run_samples(lambda v: v, range(3), workers=1)
    assert 'aborted after 3 samples' in str(info.value)
