"""Euler simulation of the full two-dimensional diffusion on the glued strips.

The height is simulated in level units (the vertical drift and noise are
state independent there, and the gluing lines sit at integers); the abscissa
keeps its raw scale, with volatility sqrt(2) q**Y per the half-plane factor
of the generator, evaluated at the pre-step height.  Per step:

    dY = (1 - alpha)/log q dt + (sqrt 2 / log q) dB2
    dx = sqrt 2 * q**Y dB1

State is anchored at the last-touched line: a path stores that line's level,
the height offset rel in (-1, 1) relative to it, and which side of the line
the current excursion occupies (an up-excursion also stores which of the p
forward branches it entered; branches are drawn uniformly at every
departure).  When the offset reaches +-1 the path commits to a neighboring
line: that is a skeleton event, the anchor moves, and the event is recorded
so the tree position can be replayed afterwards.

Line touches and boundary hits are located by linear interpolation inside
the step and the abscissa increment is scaled by sqrt of the step fraction.
Steps that end inside the strip may still have crossed +-1 in between; a
Brownian-bridge test catches those excursions, which removes the dominant
exit-time overshoot of the plain endpoint rule.  Departures from a line draw
the side with up-probability gamma = beta p/(beta p + 1) and restart at
|N(0, 2 dt / log^2 q)| from the line.

Tree vertices never enter the hot loop: they are rebuilt from the recorded
event stream, which keeps the stepping fully vectorized across paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .closed_forms import ModelParams
from .space import HTParams, HTPoint, ht_distance, origin
from .tree import TreePoint, TreeVertex

_SNAP = 1e-12
_HARD_ITER_CAP = 1_000_000_000
_BLOCK = 256
_COMPACT_EVERY = 64
_SQRT2 = math.sqrt(2.0)


class NumericalError(RuntimeError):
    """The height moved by a whole level in one step: dt is too large."""


@dataclass(frozen=True)
class SimConfig:
    """Step size, horizon and recording cadence for path runs."""

    dt: float = 1e-4
    horizon: float = 1.0
    record_stride: int = 1
    seed: int | None = None

    def __post_init__(self):
        if not 0.0 < self.dt <= 1e-2:
            raise ValueError("dt must lie in (0, 1e-2]")
        if self.horizon < self.dt:
            raise ValueError("horizon must be at least dt")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass
class _Coeffs:
    dt: float
    sdt: float
    mu_dt: float
    vol_sdt: float
    vol2_dt: float
    x_scale: float
    log_q: float
    gamma: float
    near_cut: float  # distance from the boundary below which the bridge test runs


def _coeffs(params: ModelParams, dt: float) -> _Coeffs:
    log_q = params.log_q
    vol_sdt = math.sqrt(2.0) / log_q * math.sqrt(dt)
    return _Coeffs(
        dt=dt,
        sdt=math.sqrt(dt),
        mu_dt=(1.0 - params.alpha) / log_q * dt,
        vol_sdt=vol_sdt,
        vol2_dt=vol_sdt * vol_sdt,
        x_scale=_SQRT2 * math.sqrt(dt),
        log_q=log_q,
        gamma=params.beta * params.p / (params.beta * params.p + 1.0),
        near_cut=min(5.0 * vol_sdt, 0.5),
    )


class _Arrays:
    """Mutable per-path state: anchor level, offset, abscissa, clock,
    on-line flag, excursion side and branch (plus an optional running
    maximum of the sideways displacement)."""

    __slots__ = ("level", "rel", "x", "t", "on_line", "side", "child", "xmax", "x0")

    def __init__(self, n: int, level: int, x: float, rel: float, track_max=False):
        self.level = np.full(n, level, dtype=np.int64)
        self.rel = np.full(n, float(rel))
        self.x = np.full(n, float(x))
        self.t = np.zeros(n)
        self.on_line = np.full(n, rel == 0.0)
        self.side = np.full(n, 0 if rel == 0.0 else -1, dtype=np.int8)
        self.child = np.zeros(n, dtype=np.int16)
        self.xmax = np.zeros(n) if track_max else None
        self.x0 = np.full(n, float(x)) if track_max else None

    def compress(self, keep: np.ndarray) -> None:
        for name in self.__slots__:
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, value[keep])


class _DrawBlock:
    """Pre-drawn blocks of step noise to amortize generator call overhead.
    Block depth shrinks for wide path batches to bound the memory held in
    raw draws.  On compaction the surviving columns are kept, so removing
    paths does not disturb the others' draws."""

    def __init__(self, rng: np.random.Generator, p: int):
        self.rng = rng
        self.p = p
        self.rows = 0
        self.i = 0
        self.n = -1

    def next(self, n: int):
        if self.i >= self.rows or n != self.n:
            self.rows = max(8, min(_BLOCK, 2_000_000 // max(n, 1)))
            shape = (self.rows, n)
            self.z1 = self.rng.standard_normal(shape)
            self.z2 = self.rng.standard_normal(shape)
            self.us = self.rng.random(shape)
            self.ub = self.rng.random(shape)
            self.uc = self.rng.integers(0, self.p, size=shape, dtype=np.int16)
            self.i = 0
            self.n = n
        i = self.i
        self.i += 1
        return self.z1[i], self.z2[i], self.us[i], self.ub[i], self.uc[i]

    def compress(self, keep: np.ndarray) -> None:
        if self.n != -1 and self.i < self.rows:
            for name in ("z1", "z2", "us", "ub", "uc"):
                setattr(self, name, getattr(self, name)[:, keep])
            self.n = int(keep.sum()) if keep.dtype == bool else keep.size
        else:
            self.n = -1


class _Buf:
    """Growable flat buffer for the event stream."""

    def __init__(self, dtype):
        self.a = np.empty(1024, dtype)
        self.n = 0

    def extend(self, vals: np.ndarray) -> None:
        m = vals.size
        while self.n + m > self.a.size:
            self.a = np.concatenate([self.a, np.empty(self.a.size, self.a.dtype)])
        self.a[self.n : self.n + m] = vals
        self.n += m

    def data(self) -> np.ndarray:
        return self.a[: self.n].copy()


def _advance(st: _Arrays, co: _Coeffs, z1, z2, u_side, u_bridge, u_child):
    """One synchronized Euler step over all paths.

    Returns (event_ids, event_dirs): the paths that committed to a new line
    this step and the direction they moved.  The anchor level, offsets,
    abscissae, clocks and excursion bookkeeping are updated in place.
    """
    rel0 = st.rel
    new_rel = rel0 + (co.vol_sdt * z2 + co.mu_dt)

    lin = np.nonzero(st.on_line)[0]
    if lin.size:
        mags = np.abs(z2[lin]) * co.vol_sdt
        up = u_side[lin] < co.gamma
        new_rel[lin] = np.where(up, mags, -mags)
        st.side[lin] = np.where(up, 1, -1)
        st.child[lin] = np.where(up, u_child[lin], st.child[lin])

    absn = np.abs(new_rel)
    if bool((absn >= 2.0).any()):
        raise NumericalError("height moved more than one level in one step")

    crossed = (rel0 > 0.0) != (new_rel > 0.0)
    crossed |= absn < _SNAP
    if lin.size:
        crossed[lin] = False
    hit = (absn >= 1.0) & ~crossed

    # bridge test: did an inside-to-inside step cross the boundary in between?
    near = (absn > 1.0 - co.near_cut) & ~crossed & ~hit
    nid = np.nonzero(near)[0]
    if nid.size:
        s = np.sign(new_rel[nid])
        gap = (1.0 - s * rel0[nid]) * (1.0 - s * new_rel[nid])
        fired = u_bridge[nid] < np.exp(-2.0 * gap / co.vol2_dt)
        bridge_ids = nid[fired]
    else:
        bridge_ids = nid

    cid = np.nonzero(crossed)[0]
    hid = np.nonzero(hit)[0]
    frac = np.ones_like(rel0)
    if cid.size:
        frac[cid] = np.clip(rel0[cid] / (rel0[cid] - new_rel[cid]), 0.0, 1.0)
    if hid.size:
        tgt = np.sign(new_rel[hid])
        frac[hid] = np.clip((tgt - rel0[hid]) / (new_rel[hid] - rel0[hid]), 0.0, 1.0)
    if bridge_ids.size:
        frac[bridge_ids] = 0.5

    # abscissa and clock; split steps get the sqrt-scaled noise share
    dx = np.exp(co.log_q * (st.level + rel0))
    dx *= co.x_scale
    dx *= z1
    part = np.concatenate([cid, hid, bridge_ids])
    if part.size:
        dx[part] *= np.sqrt(frac[part])
    st.x += dx
    if st.xmax is not None:
        np.maximum(st.xmax, np.abs(st.x - st.x0), out=st.xmax)
    st.t += co.dt
    if part.size:
        st.t[part] -= co.dt * (1.0 - frac[part])

    event_ids = np.concatenate([hid, bridge_ids])
    if event_ids.size > 1:
        event_ids = np.sort(event_ids)
    dirs = np.where(new_rel[event_ids] > 0, 1, -1).astype(np.int64)

    st.rel = new_rel
    if cid.size:
        st.rel[cid] = 0.0
        st.side[cid] = 0
    if event_ids.size:
        st.rel[event_ids] = 0.0
        st.side[event_ids] = 0
        st.level[event_ids] += dirs
    st.on_line.fill(False)
    st.on_line[cid] = True
    st.on_line[event_ids] = True
    return event_ids, dirs


@dataclass
class BatchRun:
    """Final states and the event stream of a fixed-horizon batch."""

    params: ModelParams
    dt: float
    horizon: float
    start_level: int
    t: np.ndarray
    x: np.ndarray
    level: np.ndarray
    rel: np.ndarray
    on_line: np.ndarray
    side: np.ndarray
    child: np.ndarray
    n_events: np.ndarray
    zero_visits: np.ndarray
    ev_path: np.ndarray
    ev_dir: np.ndarray
    ev_child: np.ndarray
    ev_time: np.ndarray
    checkpoint_times: np.ndarray | None = None
    checkpoint_x: np.ndarray | None = None

    @property
    def y(self) -> np.ndarray:
        return self.level + self.rel

    @property
    def n_paths(self) -> int:
        return self.t.size


def run_batch(
    params: ModelParams,
    config: SimConfig,
    n_paths: int,
    rng: np.random.Generator,
    checkpoints=None,
    start_level: int = 0,
    start_x: float = 0.0,
) -> BatchRun:
    """Simulate n_paths paths from a line start up to the horizon.

    Every path is reported at its first state with clock >= horizon (the
    overshoot is below one step).  Skeleton events are returned as a flat
    stream (path id, direction, branch, clock), in per-path time order.
    """
    co = _coeffs(params, config.dt)
    st = _Arrays(n_paths, start_level, start_x, 0.0)
    idx = np.arange(n_paths)

    out = _Arrays(n_paths, start_level, start_x, 0.0)
    out_t = out.t
    n_events = np.zeros(n_paths, dtype=np.int64)
    zero_visits = np.zeros(n_paths, dtype=np.int64)
    ev_path, ev_dir = _Buf(np.int64), _Buf(np.int64)
    ev_child, ev_time = _Buf(np.int16), _Buf(float)

    cps = None if checkpoints is None else np.asarray(checkpoints, dtype=float)
    if cps is not None:
        if cps.size and (np.any(np.diff(cps) <= 0) or cps[-1] > config.horizon):
            raise ValueError("checkpoints must be increasing and within the horizon")
        cp_x = np.zeros((n_paths, cps.size))
        cp_ptr = np.zeros(n_paths, dtype=np.int64)
        cps_ext = np.append(cps, np.inf)

    draws = _DrawBlock(rng, params.p)
    recorded = np.zeros(n_paths, dtype=bool)  # over current (compacted) slots
    max_iter = min(_HARD_ITER_CAP, int(2 * config.horizon / config.dt) + 100_000)
    iters = 0
    while idx.size:
        iters += 1
        if iters > max_iter:
            raise RuntimeError("horizon run exceeded its iteration budget")
        z1, z2, us, ub, uc = draws.next(idx.size)
        eids, dirs = _advance(st, co, z1, z2, us, ub, uc)
        if eids.size:
            live = ~recorded[eids]
            eids, dirs = eids[live], dirs[live]
        if eids.size:
            g = idx[eids]
            ev_path.extend(g)
            ev_dir.extend(dirs)
            ev_child.extend(st.child[eids])
            ev_time.extend(st.t[eids])
            n_events[g] += 1
            zero_visits[g] += st.level[eids] == 0
        if cps is not None and cps.size:
            while True:
                due = np.take(cps_ext, np.minimum(cp_ptr[idx], cps.size))
                hit = ~recorded & (st.t >= due)
                if not hit.any():
                    break
                h = np.nonzero(hit)[0]
                g = idx[h]
                cp_x[g, cp_ptr[g]] = st.x[h]
                cp_ptr[g] += 1
        done = ~recorded & (st.t >= config.horizon)
        if done.any():
            d = np.nonzero(done)[0]
            g = idx[d]
            out_t[g] = st.t[d]
            out.x[g] = st.x[d]
            out.level[g] = st.level[d]
            out.rel[g] = st.rel[d]
            out.on_line[g] = st.on_line[d]
            out.side[g] = st.side[d]
            out.child[g] = st.child[d]
            recorded[d] = True
        if iters % _COMPACT_EVERY == 0 and recorded.any():
            keep = ~recorded
            st.compress(keep)
            draws.compress(keep)
            idx = idx[keep]
            recorded = np.zeros(idx.size, dtype=bool)

    return BatchRun(
        params=params,
        dt=config.dt,
        horizon=config.horizon,
        start_level=start_level,
        t=out_t,
        x=out.x,
        level=out.level,
        rel=out.rel,
        on_line=out.on_line,
        side=out.side,
        child=out.child,
        n_events=n_events,
        zero_visits=zero_visits,
        ev_path=ev_path.data(),
        ev_dir=ev_dir.data(),
        ev_child=ev_child.data(),
        ev_time=ev_time.data(),
        checkpoint_times=cps,
        checkpoint_x=cp_x if cps is not None else None,
    )


@dataclass
class FirstExit:
    """First committed line change per path: clock, direction, branch and
    abscissa at the moment of the event."""

    tau: np.ndarray
    side: np.ndarray
    child: np.ndarray
    x: np.ndarray
    max_abs_dx: np.ndarray | None = None


def first_exit_batch(
    params: ModelParams,
    n: int,
    rng: np.random.Generator,
    dt: float = 1e-4,
    start_level: int = 0,
    start_x: float = 0.0,
    start_rel: float = 0.0,
    track_max: bool = False,
) -> FirstExit:
    """Run paths until their first skeleton event and record it.

    From a line start this samples the one-step transition of the induced
    walk (exit time, which neighboring line, branch, exit abscissa); from an
    interior start (start_rel in (-1, 0)) it samples the star exit.  With
    track_max the running maximum of |x - x0| is recorded as well.
    """
    if not -1.0 < start_rel <= 0.0:
        raise ValueError("start_rel must lie in (-1, 0]")
    co = _coeffs(params, dt)
    st = _Arrays(n, start_level, start_x, start_rel, track_max=track_max)
    out_t = np.empty(n)
    out_side = np.empty(n, dtype=np.int8)
    out_child = np.empty(n, dtype=np.int16)
    out_x = np.empty(n)
    out_max = np.empty(n) if track_max else None
    idx = np.arange(n)
    recorded = np.zeros(n, dtype=bool)

    draws = _DrawBlock(rng, params.p)
    iters = 0
    while idx.size:
        iters += 1
        if iters > _HARD_ITER_CAP:
            raise RuntimeError("first-exit sampler did not terminate")
        z1, z2, us, ub, uc = draws.next(idx.size)
        eids, dirs = _advance(st, co, z1, z2, us, ub, uc)
        if eids.size:
            live = ~recorded[eids]
            eids, dirs = eids[live], dirs[live]
        if eids.size:
            g = idx[eids]
            out_t[g] = st.t[eids]
            out_side[g] = dirs
            out_child[g] = st.child[eids]
            out_x[g] = st.x[eids]
            if track_max:
                out_max[g] = st.xmax[eids]
            recorded[eids] = True
            # keep finished paths harmlessly jiggling near the line until the
            # next compaction; their later events are filtered out above
            st.rel[eids] = 0.0
            st.on_line[eids] = True
        if iters % _COMPACT_EVERY == 0 and recorded.any():
            keep = ~recorded
            st.compress(keep)
            draws.compress(keep)
            idx = idx[keep]
            recorded = np.zeros(idx.size, dtype=bool)
    return FirstExit(tau=out_t, side=out_side, child=out_child, x=out_x, max_abs_dx=out_max)


def rebuild_vertices(p: int, dirs, childs, start: TreeVertex | None = None) -> list[TreeVertex]:
    """Anchor vertices after each event: start vertex, then one move per
    event (down to the predecessor or up into the recorded branch)."""
    v = start if start is not None else TreeVertex.root(p)
    out = [v]
    for d, c in zip(dirs, childs):
        v = v.successors()[int(c)] if d > 0 else v.predecessor()
        out.append(v)
    return out


def _events_by_path(run: BatchRun):
    order = np.argsort(run.ev_path, kind="stable")
    starts = np.searchsorted(run.ev_path[order], np.arange(run.n_paths + 1))
    return order, starts


def _tree_point(anchor: TreeVertex, side: int, child: int, rel: float) -> TreePoint:
    if side == 0 or rel == 0.0:
        return TreePoint.at_vertex(anchor)
    if side > 0:
        return TreePoint(anchor.successors()[int(child)], rel)
    return TreePoint(anchor, 1.0 + rel)


def final_tree_points(run: BatchRun, start: TreeVertex | None = None) -> list[TreePoint]:
    """Replay the event stream and return each path's final tree position."""
    p = run.params.p
    base = start if start is not None else TreeVertex.root(p)
    order, starts = _events_by_path(run)
    points = []
    for i in range(run.n_paths):
        sl = order[starts[i] : starts[i + 1]]
        anchor = rebuild_vertices(p, run.ev_dir[sl], run.ev_child[sl], base)[-1]
        points.append(
            _tree_point(anchor, int(run.side[i]), int(run.child[i]), float(run.rel[i]))
        )
    return points


# -- scalar state and single-step API ---------------------------------------


@dataclass(frozen=True)
class PathState:
    """Scalar mirror of one simulated path, carrying the actual tree vertex
    of its anchoring line."""

    line_vertex: TreeVertex
    x: float
    rel: float
    clock: float
    n_events: int
    on_line: bool
    exc_side: int
    child: int

    @classmethod
    def at_origin(cls, params: ModelParams) -> "PathState":
        return cls(TreeVertex.root(params.p), 0.0, 0.0, 0.0, 0, True, 0, 0)

    @classmethod
    def from_point(cls, zf: HTPoint) -> "PathState":
        w = zf.w
        if w.is_vertex:
            return cls(w.upper, zf.x, 0.0, 0.0, 0, True, 0, 0)
        return cls(w.upper, zf.x, w.offset - 1.0, 0.0, 0, False, -1, 0)

    @property
    def y(self) -> float:
        return self.line_vertex.level + self.rel

    @property
    def strip_vertex(self) -> TreeVertex:
        if self.exc_side > 0:
            return self.line_vertex.successors()[self.child]
        return self.line_vertex

    @property
    def tree_point(self) -> TreePoint:
        return _tree_point(self.line_vertex, self.exc_side, self.child, self.rel)

    @property
    def point(self) -> HTPoint:
        return HTPoint(self.x, self.tree_point)


def step_euler(
    state: PathState,
    params: ModelParams,
    config: SimConfig,
    rng: np.random.Generator,
) -> PathState:
    """Advance a scalar path state by one Euler step (same transition as the
    batched kernel, applied to a one-path bundle)."""
    co = _coeffs(params, config.dt)
    st = _Arrays(1, state.line_vertex.level, state.x, -0.5)
    st.rel[0] = state.rel
    st.t[0] = state.clock
    st.on_line[0] = state.on_line
    st.side[0] = state.exc_side
    st.child[0] = state.child
    z = rng.standard_normal(2)
    us, ub = rng.random(2)
    uc = rng.integers(0, params.p, size=1, dtype=np.int16)
    eids, dirs = _advance(st, co, z[:1], z[1:], np.array([us]), np.array([ub]), uc)

    vertex = state.line_vertex
    n_events = state.n_events
    if eids.size:
        if dirs[0] > 0:
            vertex = vertex.successors()[int(st.child[0])]
        else:
            vertex = vertex.predecessor()
        n_events += 1
    return PathState(
        line_vertex=vertex,
        x=float(st.x[0]),
        rel=float(st.rel[0]),
        clock=float(st.t[0]),
        n_events=n_events,
        on_line=bool(st.on_line[0]),
        exc_side=int(st.side[0]),
        child=int(st.child[0]),
    )


@dataclass(frozen=True)
class TrajectoryRecord:
    """One recorded sample of a trajectory."""

    t: float
    x: float
    y: float
    vertex: TreeVertex
    n_events: int
    dist: float | None = None


def simulate_path(
    params: ModelParams,
    config: SimConfig,
    rng: np.random.Generator,
    start: HTPoint | None = None,
    with_distance: bool = False,
) -> list[TrajectoryRecord]:
    """Simulate one path to the horizon, recording every record_stride steps
    (plus the initial and final states)."""
    geo = HTParams(params.q, params.p)
    state = (
        PathState.at_origin(params) if start is None else PathState.from_point(start)
    )

    def record(s: PathState) -> TrajectoryRecord:
        d = ht_distance(geo, s.point, origin(geo)) if with_distance else None
        return TrajectoryRecord(s.clock, s.x, s.y, s.strip_vertex, s.n_events, d)

    records = [record(state)]
    steps = 0
    budget = min(_HARD_ITER_CAP, int(2 * config.horizon / config.dt) + 100_000)
    while state.clock < config.horizon:
        state = step_euler(state, params, config, rng)
        steps += 1
        if steps % config.record_stride == 0 and state.clock < config.horizon:
            records.append(record(state))
        if steps > budget:
            raise RuntimeError("path run exceeded its iteration budget")
    records.append(record(state))
    return records


def distance_to_origin(params: ModelParams, x: float, w: TreePoint) -> float:
    """Distance from (x, w) to the base point."""
    geo = HTParams(params.q, params.p)
    return ht_distance(geo, HTPoint(float(x), w), origin(geo))
