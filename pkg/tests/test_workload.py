import io
import math

import numpy as np
import pytest
from scipy import stats

from vpmoti.analyzer import find_dvas
from vpmoti.core import Circle, Rect
from vpmoti.workload import (
    AxisSpec,
    WorkloadConfig,
    gen_objects,
    gen_queries,
    gen_update_stream,
    generate,
    parse_skew,
    read_workload,
    sample_velocities,
    two_axis,
    write_workload,
)


def angle_mod_180(v):
    return math.degrees(math.atan2(v[1], v[0])) % 180


def test_zero_jitter_is_axis_aligned():
    objs = gen_objects(WorkloadConfig(n_objects=5000), two_axis(0.0, 0.0), 0.0, np.random.default_rng(1))
    for o in objs:
        assert o.vel.x == 0 or abs(o.vel.y) < 1e-12 * abs(o.vel.x) or abs(o.vel.x) < 1e-12 * abs(o.vel.y)


def test_uniform_directions_chi_square():
    axes, of = parse_skew("uniform")
    objs = gen_objects(WorkloadConfig(n_objects=100_000), axes, of, np.random.default_rng(2))
    theta = np.array([math.atan2(o.vel.y, o.vel.x) for o in objs]) % (2 * math.pi)
    counts = np.bincount((theta / (2 * math.pi) * 16).astype(int), minlength=16)
    assert stats.chisquare(counts).pvalue > 0.01


def test_object_bounds():
    cfg = WorkloadConfig(n_objects=5000, v_max=37.0)
    objs = gen_objects(cfg, two_axis(), 0.1, np.random.default_rng(3))
    assert all(0 < o.vel.norm() <= 37.0 + 1e-9 for o in objs)
    assert all(cfg.domain.contains(o.pos) and o.t_ref == 0 for o in objs)


def test_mixture_weights_validated():
    with pytest.raises(ValueError):
        gen_objects(WorkloadConfig(n_objects=5), [AxisSpec(0, 0.8)], 0.5)
    with pytest.raises(ValueError):
        parse_skew("custom:0:0.7,90:0.6")
    with pytest.raises(ValueError):
        parse_skew("diagonal")


def test_parse_skew():
    axes, of = parse_skew("custom:30:0.5,120:0.3", jitter_deg=3)
    assert of == pytest.approx(0.2)
    assert [round(math.degrees(a.angle)) for a in axes] == [30, 120]
    assert len(parse_skew("four-axis")[0]) == 4


@pytest.fixture(scope="module")
def stream():
    cfg = WorkloadConfig(n_objects=10_000, seed=4)
    rng = np.random.default_rng(4)
    classes = []
    objs = gen_objects(cfg, two_axis(), 0.1, rng, classes)
    start, ups = gen_update_stream(cfg, objs, two_axis(), 0.1, classes, rng)
    return cfg, start, ups


def test_update_stream_properties(stream):
    cfg, start, ups = stream
    times = [t for t, _ in ups]
    assert times == sorted(times) and times[-1] <= cfg.duration
    assert abs(len(ups) - 40_000) <= 0.05 * 40_000
    last = {o.id: o.t_ref for o in start}
    for t, o in ups:
        assert 0 < t - last[o.id] <= cfg.max_update_interval
        assert o.t_ref == t
        last[o.id] = t


def test_objects_stay_inside(stream):
    cfg, start, ups = stream
    cur = {o.id: o for o in start}
    ext = cfg.domain.extent.inflate(1e-6)
    for t, o in ups:
        old = cur[o.id]
        # the previous leg ends inside
        x = old.pos.x + old.vel.x * (t - old.t_ref)
        y = old.pos.y + old.vel.y * (t - old.t_ref)
        assert ext.contains_point((x, y))
        assert ext.contains_point(o.pos)
        cur[o.id] = o


def test_reflection_keeps_axis():
    cfg = WorkloadConfig(n_objects=2000, seed=5)
    axes = two_axis(0.0, 0.0, angles_deg=(0.0, 60.0))
    rng = np.random.default_rng(5)
    classes = []
    objs = gen_objects(cfg, axes, 0.0, rng, classes)
    start, ups = gen_update_stream(cfg.with_(p_switch=0.0), objs, axes, 0.0, classes, rng)
    for o in start + [o for _, o in ups]:
        a = angle_mod_180(o.vel)
        assert min(abs(a - 0), abs(a - 180), abs(a - 60)) < 1e-9


def test_query_examples():
    cfg = WorkloadConfig(predictive_time=0)
    qs = gen_queries(cfg, 1000, rng=np.random.default_rng(6))
    assert all(q.t1 == issue and q.kind == "slice" for issue, q in qs)
    assert all(isinstance(q.shape, Circle) and q.shape.radius == 500 for _, q in qs)
    assert [t for t, _ in qs] == sorted(t for t, _ in qs)
    assert all(cfg.warmup <= t <= cfg.duration for t, _ in qs)
    rects = gen_queries(WorkloadConfig(), 200, shape="rect", rng=np.random.default_rng(6))
    for _, q in rects:
        assert isinstance(q.shape, Rect)
        assert q.shape.width == pytest.approx(1000) and q.shape.height == pytest.approx(1000)


def test_query_kinds():
    cfg = WorkloadConfig(v_max=50)
    for issue, q in gen_queries(cfg, 300, time_kind="moving", rng=np.random.default_rng(7)):
        assert q.kind == "moving" and q.t2 - q.t1 == pytest.approx(cfg.interval_length)
        assert 0 <= q.t1 - issue <= cfg.predictive_time
        assert q.qvel.norm() <= 50 + 1e-9
    with pytest.raises(ValueError):
        gen_queries(cfg, 1, shape="hexagon")
    with pytest.raises(ValueError):
        gen_queries(cfg, 1, time_kind="continuous")


def serialize(wl) -> str:
    buf = io.StringIO()
    write_workload(buf, wl.objects, wl.updates, wl.queries)
    return buf.getvalue()


def test_determinism_and_round_trip():
    cfg = WorkloadConfig(n_objects=500, seed=11)
    a = generate(cfg, two_axis(), 0.1, 50, time_kind="moving")
    b = generate(cfg, two_axis(), 0.1, 50, time_kind="moving")
    text = serialize(a)
    assert text == serialize(b)
    assert text != serialize(generate(cfg.with_(seed=12), two_axis(), 0.1, 50, time_kind="moving"))
    assert text.splitlines()[0] == "#vpmoti-workload v1"
    objs, ups, qs = read_workload(io.StringIO(text))
    assert len(objs) == 500 and len(ups) == len(a.updates) and len(qs) == 50
    for (t0, o0), (t1, o1) in zip(a.updates, ups):
        assert t0 == pytest.approx(t1, abs=1e-6) and o0.id == o1.id
        assert o0.vel.x == pytest.approx(o1.vel.x, abs=1e-6)
    for (_, q0), (_, q1) in zip(a.queries, qs):
        assert q0.kind == q1.kind and q0.qvel.x == pytest.approx(q1.qvel.x, abs=1e-6)
    # reparsed text serializes to the same bytes
    buf = io.StringIO()
    write_workload(buf, objs, ups, qs)
    assert buf.getvalue() == text


def test_read_rejects_garbage():
    with pytest.raises(ValueError):
        read_workload(io.StringIO("hello\n"))
    with pytest.raises(ValueError, match="line 2"):
        read_workload(io.StringIO("#vpmoti-workload v1\nX 1 2\n"))


def test_query_stream_independent_of_query_params():
    cfg = WorkloadConfig(n_objects=300, seed=13)
    a = generate(cfg, two_axis(), 0.1, 10, shape="circle")
    b = generate(cfg, two_axis(), 0.1, 500, shape="rect")
    assert a.objects == b.objects and a.updates == b.updates


@pytest.mark.parametrize("angles", [(0.0, 90.0), (20.0, 80.0)])
@pytest.mark.parametrize("jitter", [1.0, 5.0])
def test_generated_samples_recover_axes(angles, jitter):
    cfg = WorkloadConfig(n_objects=20_000, seed=int(jitter))
    objs = gen_objects(cfg, two_axis(jitter, 0.1, angles), 0.1, np.random.default_rng(cfg.seed))
    parts = find_dvas(sample_velocities(objs, 10_000), 2)
    got = [angle_mod_180(p.pc1) for p in parts]
    for a in angles:
        assert min(min(abs(a - g), 180 - abs(a - g)) for g in got) <= 5
