import hashlib

import pytest

from mbvp.errors import ConfigError, KernelAbort, UsageError
from mbvp.kernel import Kernel, ProcState


def trace_recorder(log):
    def sink(t, name, kind):
        log.append((t, name, kind))
    return sink


def test_register_indices_in_call_order():
    k = Kernel()
    a = k.register(lambda: None, "a")
    b = k.register(lambda: None, "b")
    assert (a.index, b.index) == (0, 1)


def test_duplicate_name_rejected():
    k = Kernel()
    k.register(lambda: None, "a")
    with pytest.raises(ConfigError):
        k.register(lambda: None, "a")


def test_register_after_finish_rejected():
    k = Kernel()
    k.register(lambda: None, "a")
    k.run()
    with pytest.raises(ConfigError, match="finished"):
        k.register(lambda: None, "b")


def test_empty_run_returns_zero():
    k = Kernel()
    assert k.run() == 0
    assert k.now() == 0


def test_wait_advances_time():
    k = Kernel()
    seen = []

    def body():
        k.wait(5)
        seen.append(k.now())

    k.register(body, "p")

    def starter():
        pass

    # process starts at t=0, resumes at 15 after a second wait
    def body2():
        k.wait(10)
        k.wait(5)
        seen.append(("b2", k.now()))

    k.register(body2, "q")
    k.run()
    assert seen == [5, ("b2", 15)]
    assert k.now() == 15


def test_equal_timestamp_order_is_registration_order():
    k = Kernel()
    order = []

    def mk(tag):
        def body():
            k.wait(20)
            order.append(tag)
        return body

    for tag in "abcde":
        k.register(mk(tag), tag)
    k.run()
    assert order == list("abcde")


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_fifo_fairness_exhaustive(n):
    k = Kernel()
    order = []

    def mk(i):
        def body():
            k.wait(7)
            order.append(i)
        return body

    for i in range(n):
        k.register(mk(i), f"p{i}")
    k.run()
    assert order == list(range(n))


def test_wait_zero_requeues_behind_pending():
    # p0 wait(0) must run after p1 which was already scheduled at t=0
    k = Kernel()
    order = []

    def p0():
        order.append("p0-first")
        k.wait(0)
        order.append("p0-second")

    def p1():
        order.append("p1")

    k.register(p0, "p0")
    k.register(p1, "p1")
    k.run()
    assert order == ["p0-first", "p1", "p0-second"]


def test_wait_outside_process_is_usage_error():
    k = Kernel()
    with pytest.raises(UsageError):
        k.wait(1)


def test_run_until_limit_stops_before_late_events():
    k = Kernel()
    resumes = []

    def body():
        for _ in range(3):
            k.wait(10)
            resumes.append(k.now())

    p = k.register(body, "p")
    final = k.run_until(25)
    assert final == 20
    assert resumes == [10, 20]
    assert p.state == ProcState.WAITING


def test_run_until_idle_returns_last_event_time():
    k = Kernel()

    def body():
        k.wait(40)

    k.register(body, "p")
    assert k.run_until(100) == 40


def test_deadlock_flagged():
    k = Kernel()

    def body():
        k.block()

    k.register(body, "stuck")
    t = k.run()
    assert t == 0
    assert k.blocked_remain
    assert not k.finished


def test_wake_from_block():
    k = Kernel()
    log = []

    def sleeper():
        log.append("sleep")
        k.block()
        log.append(("woke", k.now()))

    def waker():
        k.wait(30)
        k.wake(p)

    p = k.register(sleeper, "sleeper")
    k.register(waker, "waker")
    k.run()
    assert log == ["sleep", ("woke", 30)]


def test_wake_cancels_pending_wait():
    k = Kernel()
    log = []

    def sleeper():
        k.wait(1000)
        log.append(k.now())

    def waker():
        k.wait(10)
        k.wake(p)

    p = k.register(sleeper, "sleeper")
    k.register(waker, "waker")
    k.run()
    assert log == [10]       # not 1000: the wait was cancelled


def test_faulting_process_aborts_with_name():
    k = Kernel()

    def bad():
        k.wait(5)
        raise RuntimeError("boom")

    k.register(bad, "badproc")
    with pytest.raises(KernelAbort) as ei:
        k.run()
    assert ei.value.process_name == "badproc"
    assert isinstance(ei.value.__cause__, RuntimeError)


def test_process_conservation():
    k = Kernel()
    samples = []

    def observer():
        for _ in range(4):
            counts = k.state_counts()
            samples.append(sum(counts.values()))
            k.wait(5)

    def finisher():
        k.wait(2)

    def blocker():
        k.block()

    k.register(observer, "obs")
    k.register(finisher, "fin")
    k.register(blocker, "blk")
    k.run()
    assert all(total == 3 for total in samples)


def test_time_monotonic_and_trace_deterministic():
    def build():
        log = []
        k = Kernel(trace=trace_recorder(log))

        def worker(i):
            def body():
                for n in range(1, 4):
                    k.wait(n * (i + 1))
            return body

        for i in range(3):
            k.register(worker(i), f"w{i}")
        k.run()
        return log

    log1, log2 = build(), build()
    times = [t for t, _, _ in log1]
    assert times == sorted(times)
    h1 = hashlib.sha256(repr(log1).encode()).hexdigest()
    h2 = hashlib.sha256(repr(log2).encode()).hexdigest()
    assert h1 == h2


def test_trace_line_format(tmp_path):
    from mbvp.kernel import file_trace_sink
    path = tmp_path / "trace.txt"
    with open(path, "w", newline="") as f:
        k = Kernel(trace=file_trace_sink(f))

        def body():
            k.wait(5)

        k.register(body, "proc_a")
        k.run()
    lines = path.read_bytes().split(b"\n")
    assert lines[0] == b"0\tproc_a\tstart"
    assert lines[1] == b"5\tproc_a\tresume"


def test_registration_during_run():
    k = Kernel()
    order = []

    def child():
        order.append(("child", k.now()))

    def parent():
        k.wait(10)
        k.register(child, "child")
        order.append(("parent", k.now()))
        k.wait(1)

    k.register(parent, "parent")
    k.run()
    # child was enqueued at t=10 and ran once parent suspended
    assert ("child", 10) in order
