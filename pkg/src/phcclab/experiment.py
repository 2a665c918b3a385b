"""Build, run and report one scenario; sweep a parameter across runs."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .baselines import HstcpController, RenoController, VegasController
from .metrics import (
    ExperimentReport, FlowReport, FlowTrace, avg_queue_size, coefficient_of_variation,
    jain_fi, throughput_series, utilization,
)
from .phcc import PhccController
from .scenario import ScenarioConfig, SweepSpec, apply_param, serialize
from .sim.engine import NS_PER_S, Engine, to_ns
from .sim.topology import DumbbellConfig, build_dumbbell
from .tcp.connection import Connection, Sink
from .tcp.controller import CongestionController
from .tcp.rtt import RttEstimator

log = logging.getLogger(__name__)

FLOWS_HEADER = ("time_s", "flow_id", "throughput_bps", "cwnd_pkts", "rtt_s", "phase")
QUEUE_HEADER = ("time_s", "occupancy_pkts")
SWEEP_HEADER = ("param", "value", "flow_id", "cc", "throughput_bps", "utilization",
                "jain_fi", "avg_queue_pkts", "queue_drops", "error")


def make_controller(name: str, cfg: ScenarioConfig) -> CongestionController:
    tcp = cfg.tcp
    common = dict(cwnd_min=tcp.cwnd_min, cwnd_max=tcp.cwnd_max, initial_cwnd=tcp.initial_cwnd)
    if name == "phcc":
        ctl: CongestionController = PhccController(cfg.phcc, **common)
    elif name == "reno":
        ctl = RenoController(initial_ssthresh=cfg.reno.initial_ssthresh, **common)
    elif name == "hstcp":
        ctl = HstcpController(initial_ssthresh=cfg.reno.initial_ssthresh, **common)
    elif name == "vegas":
        v = cfg.vegas
        ctl = VegasController(v.alpha, v.beta, v.gamma,
                              initial_ssthresh=cfg.reno.initial_ssthresh, **common)
    else:
        raise ValueError(f"unknown controller {name!r}")
    ctl.rtt = RttEstimator(rto_floor=tcp.rto_floor_s, rto_cap=tcp.rto_cap_s)
    return ctl


@dataclass
class RunResult:
    report: ExperimentReport
    traces: list[FlowTrace]
    queue_samples: list[tuple[float, int]]
    topology: object | None
    connections: list[Connection]


def run_experiment(cfg: ScenarioConfig, *, trace: bool = False, debug: bool = False) -> RunResult:
    engine = Engine(trace=trace)
    topo = build_dumbbell(DumbbellConfig(
        n_flows=len(cfg.flows),
        bottleneck_bps=cfg.bottleneck_bps,
        bottleneck_delay_s=cfg.bottleneck_delay_s,
        buffer_pkts=cfg.buffer_pkts,
        access_bps=cfg.access_bps,
        access_delay_s=[f.access_delay_s for f in cfg.flows],
        loss_prob=cfg.loss_prob,
        seed=cfg.seed,
    ), engine)

    traces = [FlowTrace(i) for i in range(len(cfg.flows))]
    conns = []
    for i, spec in enumerate(cfg.flows):
        conn = Connection(i, make_controller(spec.cc, cfg), topo,
                          dupack_threshold=cfg.tcp.dupack_threshold,
                          packet_bytes=cfg.packet_bytes, debug=debug)
        topo.attach(i, conn, Sink(i, traces[i]))
        conn.start(spec.start_s)
        conns.append(conn)

    queue_samples: list[tuple[float, int]] = []
    step = to_ns(cfg.sample_interval_s)

    def sample():
        t = engine.now / NS_PER_S
        queue_samples.append((t, topo.queue.occupancy))
        for conn, tr in zip(conns, traces):
            tr.cwnd.append((t, conn.controller.cwnd))
            tr.rtt.append((t, conn.rtt.srtt))
            tr.phase.append((t, conn.controller.state_label))
        engine.schedule(step, sample)

    engine.schedule_at(step, sample)
    end_ns = to_ns(cfg.duration_s)
    stats = engine.run_until(end_ns)

    conserved = True
    in_net = topo.in_network()
    for i, c in enumerate(topo.counters):
        if c.sent != c.delivered + c.dropped + in_net[i]:
            conserved = False
            log.error("flow %d violates packet conservation: %s in-network=%d", i, c, in_net[i])

    duration = cfg.duration_s
    flow_reports = []
    for i, (spec, conn, tr) in enumerate(zip(cfg.flows, conns, traces)):
        thr = tr.mean_throughput(cfg.warmup_s, duration)
        series = [bps for t, bps in throughput_series(tr, 1.0, duration) if t > cfg.warmup_s]
        c = topo.counters[i]
        flow_reports.append(FlowReport(
            flow_id=i, cc=spec.cc, start_s=spec.start_s, throughput_bps=thr,
            packets_sent=c.sent, packets_delivered=c.delivered,
            queue_drops=c.dropped_queue, random_drops=c.dropped_random,
            retransmits=conn.retransmits, timeouts=conn.timeouts,
            fast_retransmits=conn.fast_retransmits,
            throughput_cv=coefficient_of_variation(series),
        ))
    thr = [f.throughput_bps for f in flow_reports]
    aggregate = sum(thr)
    report = ExperimentReport(
        name=cfg.name,
        seed=cfg.seed,
        duration_s=duration,
        warmup_s=cfg.warmup_s,
        config_hash=cfg.config_hash(),
        capacity_bps=cfg.bottleneck_bps,
        flows=flow_reports,
        aggregate_throughput_bps=aggregate,
        utilization=utilization(thr, cfg.bottleneck_bps),
        jain_fi=jain_fi(thr) if aggregate > 0 else 0.0,
        avg_queue_pkts=avg_queue_size(topo.queue.area(end_ns) / NS_PER_S, duration),
        max_queue_pkts=topo.queue.max_occupancy,
        queue_drops=topo.queue.drops,
        random_drops=topo.loss.drops,
        events_processed=stats.events_processed,
        trace_digest=engine.trace_digest() if trace else None,
        extra={"conservation_ok": conserved},
    )
    return RunResult(report, traces, queue_samples, topo, conns)


# -- outputs ----------------------------------------------------------------

def flows_csv(traces: list[FlowTrace], interval: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FLOWS_HEADER)
    rows = []
    for tr in traces:
        for (t, cwnd), (_, rtt), (_, phase) in zip(tr.cwnd, tr.rtt, tr.phase):
            bps = 8 * tr.bytes_between(t - interval, t) / interval
            rows.append((t, tr.flow_id, bps, cwnd, rtt, phase))
    rows.sort(key=lambda r: (r[0], r[1]))
    for t, fid, bps, cwnd, rtt, phase in rows:
        w.writerow((f"{t:.3f}", fid, f"{bps:.1f}", f"{cwnd:.3f}", f"{rtt:.6f}", phase))
    return buf.getvalue()


def queue_csv(samples: list[tuple[float, int]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(QUEUE_HEADER)
    for t, occ in samples:
        w.writerow((f"{t:.3f}", occ))
    return buf.getvalue()


def summary_json(report: ExperimentReport) -> str:
    return json.dumps(dataclasses.asdict(report), indent=2, sort_keys=True) + "\n"


def emit_outputs(result: RunResult, outdir, *, interval: float = 1.0, force: bool = False,
                 config: ScenarioConfig | None = None) -> list[Path]:
    out = Path(outdir)
    names = ("flows.csv", "queue.csv", "summary.json")
    if not force and any((out / n).exists() for n in names):
        raise FileExistsError(f"{out} already holds results (use --force to overwrite)")
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "flows.csv": flows_csv(result.traces, interval),
        "queue.csv": queue_csv(result.queue_samples),
        "summary.json": summary_json(result.report),
    }
    if config is not None:
        files["scenario.resolved"] = serialize(config)
    paths = []
    for name, text in files.items():
        p = out / name
        p.write_text(text)
        paths.append(p)
    return paths


# -- sweeps -----------------------------------------------------------------

@dataclass
class SweepOutcome:
    value: object
    config: ScenarioConfig | None
    report: ExperimentReport | None
    error: str | None = None


def _run_one(cfg: ScenarioConfig) -> RunResult:
    res = run_experiment(cfg)
    # the live simulator holds closures; only the recorded results cross processes
    return RunResult(res.report, res.traces, res.queue_samples, None, [])


def run_sweep(spec: SweepSpec, outdir=None, *, jobs: int = 1, force: bool = False) -> list[SweepOutcome]:
    """Run one experiment per value. Failures are recorded and the sweep continues."""
    outcomes: list[SweepOutcome] = []
    configs = []
    for v in spec.values:
        try:
            configs.append((v, apply_param(spec.base, spec.param, v)))
        except Exception as exc:  # bad value: record, keep sweeping
            configs.append((v, exc))

    runnable = [(v, c) for v, c in configs if isinstance(c, ScenarioConfig)]
    results: dict[int, RunResult | Exception] = {}
    if jobs > 1 and len(runnable) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = {i: pool.submit(_run_one, c) for i, (_, c) in enumerate(runnable)}
            for i, fut in futs.items():
                try:
                    results[i] = fut.result()
                except Exception as exc:
                    results[i] = exc
    else:
        for i, (_, c) in enumerate(runnable):
            try:
                results[i] = _run_one(c)
            except Exception as exc:
                results[i] = exc

    it = iter(range(len(runnable)))
    for v, c in configs:
        if not isinstance(c, ScenarioConfig):
            outcomes.append(SweepOutcome(v, None, None, f"{type(c).__name__}: {c}"))
            continue
        res = results[next(it)]
        if isinstance(res, Exception):
            log.error("sweep %s=%r failed: %s", spec.param, v, res)
            outcomes.append(SweepOutcome(v, c, None, f"{type(res).__name__}: {res}"))
            continue
        outcomes.append(SweepOutcome(v, c, res.report))
        if outdir is not None:
            emit_outputs(res, Path(outdir) / f"{spec.param}={v}", interval=c.sample_interval_s,
                         force=force, config=c)
    if outdir is not None:
        Path(outdir).mkdir(parents=True, exist_ok=True)
        (Path(outdir) / "sweep.csv").write_text(sweep_csv(spec.param, outcomes))
    return outcomes


def sweep_csv(param: str, outcomes: list[SweepOutcome]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for o in outcomes:
        if o.report is None:
            w.writerow((param, o.value, "", "", "", "", "", "", "", o.error))
            continue
        r = o.report
        for f in r.flows:
            w.writerow((param, o.value, f.flow_id, f.cc, f"{f.throughput_bps:.1f}",
                        f"{r.utilization:.6f}", f"{r.jain_fi:.6f}", f"{r.avg_queue_pkts:.3f}",
                        f.queue_drops, ""))
    return buf.getvalue()
