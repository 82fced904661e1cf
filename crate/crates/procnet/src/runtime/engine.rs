//! The execution engine: rendezvous channels, the deterministic cooperative
//! scheduler, an optional multi-threaded mode, and cost instrumentation.
//!
//! Channels are unbuffered: a send completes only together with the matching
//! receive. Buffering, if ever wanted, must be an explicit FIFO process,
//! never a channel property.
//!
//! The cooperative scheduler runs in epochs. Within one epoch every process
//! completes at most one communication step, where a step is either a single
//! channel operation or one declared parallel group (the vector transfer of a
//! whole carrier counts as one step, matching the hardware view of a vector
//! as a one-cycle parallel transfer). Rendezvous completion is gated on both
//! participants having a step available, which makes the set of rendezvous
//! completed in each epoch independent of the polling order; the scheduler
//! seed therefore shuffles only unobservable within-epoch ordering.

use std::collections::{BTreeMap, HashMap};
use std::future::Future;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::pin::Pin;
use std::sync::{Arc, Condvar, Mutex};
use std::task::{Context, Poll, Waker};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::errors::{BlockedPort, DeadlockReport, Direction, RunError};
use super::shape::Shape;
use super::value::{Kind, StreamMsg, Value};

pub type TaskId = usize;
pub type ChanId = usize;
type OpId = u64;

/// How to drive the network.
#[derive(Clone, Copy, Debug)]
pub enum RunMode {
    /// Deterministic single-threaded scheduler; the seed shuffles the
    /// within-epoch polling order.
    Cooperative { seed: u64 },
    /// One OS thread per process. Outputs are identical to cooperative runs;
    /// epoch-based metrics are not produced in this mode.
    Threaded,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: RunMode,
    /// Abort if this many epochs elapse without quiescing.
    pub epoch_limit: u64,
    /// Record the per-epoch, per-process activity timeline.
    pub record_timeline: bool,
}

impl RunConfig {
    pub fn cooperative(seed: u64) -> RunConfig {
        RunConfig {
            mode: RunMode::Cooperative { seed },
            epoch_limit: 10_000_000,
            record_timeline: true,
        }
    }

    pub fn threaded() -> RunConfig {
        RunConfig {
            mode: RunMode::Threaded,
            epoch_limit: u64::MAX,
            record_timeline: false,
        }
    }
}

/// Communication counts and steady-state measurements for one run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub total_channel_events: u64,
    pub per_process_events: BTreeMap<String, u64>,
    pub per_channel_events: BTreeMap<String, u64>,
    /// Scheduler epochs in which at least one rendezvous completed
    /// (0 in threaded mode).
    pub epochs: u64,
    /// Peak number of simultaneously active fold jobs, sampled at epoch
    /// boundaries.
    pub in_flight_max: u64,
}

/// Per-epoch activity: which processes communicated, and how many times.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Timeline {
    pub task_names: Vec<String>,
    /// One entry per epoch: sorted `(task index, event count)` pairs.
    pub epochs: Vec<Vec<(TaskId, u64)>>,
}

impl Timeline {
    /// Number of epochs in which at least two distinct processes matching
    /// `prefixes[i]` (for different `i`) communicated.
    pub fn epochs_with_concurrent_activity(&self, prefixes: &[&str]) -> usize {
        self.epochs
            .iter()
            .filter(|bucket| {
                let mut hit = vec![false; prefixes.len()];
                for (t, _) in bucket.iter() {
                    for (i, p) in prefixes.iter().enumerate() {
                        if self.task_names[*t].starts_with(p) {
                            hit[i] = true;
                        }
                    }
                }
                hit.iter().filter(|h| **h).count() >= 2
            })
            .count()
    }
}

/// Result of a successful run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub outputs: BTreeMap<String, Value>,
    pub report: CostReport,
    pub timeline: Timeline,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ModeRt {
    Coop,
    Threaded,
}

struct SubOp {
    chan: ChanId,
    port: String,
    dir: Direction,
    payload: Option<StreamMsg>,
    result: Option<StreamMsg>,
    done: bool,
}

struct Op {
    task: TaskId,
    subs: Vec<SubOp>,
    remaining: usize,
    waker: Option<Waker>,
}

pub(crate) struct ChanRt {
    pub name: String,
    pub kind: Kind,
    pub stream: bool,
    eot_seen: bool,
    events: u64,
    parked_send: Option<OpId>,
    parked_recv: Option<OpId>,
    queued_match: bool,
}

pub(crate) struct TaskRt {
    pub name: String,
    stepped_epoch: u64,
    stepped_op: OpId,
    done: bool,
    queued: bool,
    events: u64,
    job_in: Option<ChanId>,
    job_out: Option<ChanId>,
    job_active: bool,
}

pub(crate) struct Core {
    mode: ModeRt,
    chans: Vec<ChanRt>,
    tasks: Vec<TaskRt>,
    ops: HashMap<OpId, Op>,
    next_op: OpId,
    epoch: u64,
    active_epochs: u64,
    completions_in_epoch: u64,
    event_seq: u64,
    wake_q: Vec<TaskId>,
    match_q: Vec<ChanId>,
    fault: Option<RunError>,
    aborting: bool,
    outputs: Vec<(String, Option<Value>)>,
    outputs_missing: usize,
    total_events: u64,
    in_flight: u64,
    in_flight_max: u64,
    record_timeline: bool,
    timeline: Vec<BTreeMap<TaskId, u64>>,
}

pub(crate) struct Engine {
    pub(crate) core: Mutex<Core>,
    cv: Condvar,
}

impl Core {
    fn budget_ok(&self, task: TaskId, op: OpId) -> bool {
        match self.mode {
            ModeRt::Threaded => true,
            ModeRt::Coop => {
                let t = &self.tasks[task];
                t.stepped_epoch != self.epoch || t.stepped_op == op
            }
        }
    }

    fn queue_match(&mut self, c: ChanId) {
        if !self.chans[c].queued_match {
            self.chans[c].queued_match = true;
            self.match_q.push(c);
        }
    }

    fn wake_task(&mut self, t: TaskId) {
        if self.mode == ModeRt::Coop && !self.tasks[t].queued && !self.tasks[t].done {
            self.tasks[t].queued = true;
            self.wake_q.push(t);
        }
    }

    fn set_fault(&mut self, e: RunError) {
        if self.fault.is_none() {
            self.fault = Some(e);
        }
        // Wake every parked op so threads can observe the abort.
        let wakers: Vec<Waker> = self
            .ops
            .values_mut()
            .filter_map(|o| o.waker.take())
            .collect();
        let tasks: Vec<TaskId> = self.ops.values().map(|o| o.task).collect();
        for t in tasks {
            self.wake_task(t);
        }
        for w in wakers {
            w.wake();
        }
    }

    /// Attempt the rendezvous on channel `c`. Returns true if it completed.
    fn try_match(&mut self, c: ChanId) -> bool {
        if self.fault.is_some() || self.aborting {
            return false;
        }
        let (Some(sid), Some(rid)) = (self.chans[c].parked_send, self.chans[c].parked_recv) else {
            return false;
        };
        let s_task = self.ops[&sid].task;
        let r_task = self.ops[&rid].task;
        if !self.budget_ok(s_task, sid) || !self.budget_ok(r_task, rid) {
            self.queue_match(c);
            return false;
        }

        // Take the payload out of the sender sub-op.
        let payload = {
            let op = self.ops.get_mut(&sid).unwrap();
            let sub = op.subs.iter_mut().find(|s| s.chan == c && !s.done).unwrap();
            sub.payload.take().unwrap()
        };

        // Enforce the channel discipline before delivering.
        let ch = &mut self.chans[c];
        let violation = match &payload {
            StreamMsg::Data(v) => {
                if ch.stream && ch.eot_seen {
                    Some(RunError::StreamProtocol {
                        channel: ch.name.clone(),
                        detail: "data message after EOT".into(),
                    })
                } else if !ch.kind.admits(v) {
                    Some(RunError::TypeMismatch {
                        channel: ch.name.clone(),
                        expected: ch.kind.to_string(),
                        got: v.kind().to_string(),
                    })
                } else {
                    None
                }
            }
            StreamMsg::Eot => {
                if !ch.stream {
                    Some(RunError::StreamProtocol {
                        channel: ch.name.clone(),
                        detail: "EOT on a non-stream channel".into(),
                    })
                } else if ch.eot_seen {
                    Some(RunError::StreamProtocol {
                        channel: ch.name.clone(),
                        detail: "second EOT".into(),
                    })
                } else {
                    ch.eot_seen = true;
                    None
                }
            }
        };
        if let Some(e) = violation {
            self.set_fault(e);
            return false;
        }

        let is_data = matches!(payload, StreamMsg::Data(_));

        // Deliver and mark both sub-ops done.
        self.chans[c].parked_send = None;
        self.chans[c].parked_recv = None;
        for (oid, deliver) in [(sid, None), (rid, Some(payload))] {
            let op = self.ops.get_mut(&oid).unwrap();
            let sub = op.subs.iter_mut().find(|s| s.chan == c && !s.done).unwrap();
            if let Some(m) = deliver {
                sub.result = Some(m);
            }
            sub.done = true;
            op.remaining -= 1;
        }

        // Instrumentation.
        self.chans[c].events += 1;
        self.total_events += 1;
        self.event_seq += 1;
        self.completions_in_epoch += 1;
        self.tasks[s_task].events += 1;
        self.tasks[r_task].events += 1;
        if self.record_timeline {
            if let Some(bucket) = self.timeline.last_mut() {
                *bucket.entry(s_task).or_insert(0) += 1;
                *bucket.entry(r_task).or_insert(0) += 1;
            }
        }
        if is_data {
            if self.tasks[r_task].job_in == Some(c) && !self.tasks[r_task].job_active {
                self.tasks[r_task].job_active = true;
                self.in_flight += 1;
                if self.mode == ModeRt::Threaded {
                    self.in_flight_max = self.in_flight_max.max(self.in_flight);
                }
            }
            if self.tasks[s_task].job_out == Some(c) && self.tasks[s_task].job_active {
                self.tasks[s_task].job_active = false;
                self.in_flight -= 1;
            }
        }

        // Charge the step budgets.
        if self.mode == ModeRt::Coop {
            for (t, oid) in [(s_task, sid), (r_task, rid)] {
                self.tasks[t].stepped_epoch = self.epoch;
                self.tasks[t].stepped_op = oid;
            }
        }

        // Wake tasks whose whole operation finished.
        for oid in [sid, rid] {
            if self.ops[&oid].remaining == 0 {
                let (t, waker) = {
                    let op = self.ops.get_mut(&oid).unwrap();
                    (op.task, op.waker.take())
                };
                self.wake_task(t);
                if let Some(w) = waker {
                    w.wake();
                }
            }
        }
        true
    }

    fn issue(&mut self, task: TaskId, subs: Vec<SubOp>) -> OpId {
        let id = self.next_op;
        self.next_op += 1;
        let mut touched: Vec<ChanId> = Vec::with_capacity(subs.len());
        for sub in &subs {
            let ch = &mut self.chans[sub.chan];
            match sub.dir {
                Direction::Send => {
                    assert!(
                        ch.parked_send.is_none(),
                        "two concurrent senders on channel {}",
                        ch.name
                    );
                    ch.parked_send = Some(id);
                }
                Direction::Recv => {
                    assert!(
                        ch.parked_recv.is_none(),
                        "two concurrent receivers on channel {}",
                        ch.name
                    );
                    ch.parked_recv = Some(id);
                }
            }
            touched.push(sub.chan);
        }
        let remaining = subs.len();
        self.ops.insert(
            id,
            Op {
                task,
                subs,
                remaining,
                waker: None,
            },
        );
        touched.sort_unstable();
        for c in touched {
            self.try_match(c);
        }
        id
    }

    fn op_done(&self, id: OpId) -> bool {
        self.ops.get(&id).map(|o| o.remaining == 0).unwrap_or(true)
    }

    fn finish_op(&mut self, id: OpId) -> Vec<StreamMsg> {
        let op = self.ops.remove(&id).expect("op finished twice");
        op.subs
            .into_iter()
            .filter(|s| s.dir == Direction::Recv)
            .map(|s| s.result.expect("recv sub missing result"))
            .collect()
    }

    fn deadlock_report(&self) -> DeadlockReport {
        let mut blocked: Vec<BlockedPort> = self
            .ops
            .values()
            .flat_map(|op| {
                let task = &self.tasks[op.task];
                op.subs.iter().filter(|s| !s.done).map(|s| BlockedPort {
                    process: task.name.clone(),
                    port: s.port.clone(),
                    channel: self.chans[s.chan].name.clone(),
                    direction: s.dir,
                })
            })
            .collect();
        blocked.sort_by(|a, b| (&a.process, &a.port, &a.channel).cmp(&(&b.process, &b.port, &b.channel)));
        let missing_outputs = self
            .outputs
            .iter()
            .filter(|(_, v)| v.is_none())
            .map(|(n, _)| n.clone())
            .collect();
        DeadlockReport {
            blocked,
            missing_outputs,
        }
    }

    fn cost_report(&self) -> CostReport {
        CostReport {
            total_channel_events: self.total_events,
            per_process_events: self
                .tasks
                .iter()
                .map(|t| (t.name.clone(), t.events))
                .collect(),
            per_channel_events: self
                .chans
                .iter()
                .map(|c| (c.name.clone(), c.events))
                .collect(),
            epochs: self.active_epochs,
            in_flight_max: self.in_flight_max,
        }
    }

    fn timeline(&self) -> Timeline {
        Timeline {
            task_names: self.tasks.iter().map(|t| t.name.clone()).collect(),
            epochs: self
                .timeline
                .iter()
                .map(|bucket| bucket.iter().map(|(t, n)| (*t, *n)).collect())
                .collect(),
        }
    }
}

/// Declaration of a channel handed to the engine.
pub(crate) struct ChanInit {
    pub name: String,
    pub kind: Kind,
    pub stream: bool,
}

/// Declaration of a task handed to the engine.
pub(crate) struct TaskInit {
    pub name: String,
    pub job_marker: Option<(ChanId, ChanId)>,
}

impl Engine {
    pub(crate) fn new(
        chans: Vec<ChanInit>,
        tasks: Vec<TaskInit>,
        outputs: Vec<String>,
        cfg: &RunConfig,
    ) -> Arc<Engine> {
        let mode = match cfg.mode {
            RunMode::Cooperative { .. } => ModeRt::Coop,
            RunMode::Threaded => ModeRt::Threaded,
        };
        let outputs_missing = outputs.len();
        let mut timeline = Vec::new();
        if mode == ModeRt::Threaded && cfg.record_timeline {
            timeline.push(BTreeMap::new());
        }
        Arc::new(Engine {
            core: Mutex::new(Core {
                mode,
                chans: chans
                    .into_iter()
                    .map(|c| ChanRt {
                        name: c.name,
                        kind: c.kind,
                        stream: c.stream,
                        eot_seen: false,
                        events: 0,
                        parked_send: None,
                        parked_recv: None,
                        queued_match: false,
                    })
                    .collect(),
                tasks: tasks
                    .into_iter()
                    .map(|t| TaskRt {
                        name: t.name,
                        stepped_epoch: 0,
                        stepped_op: 0,
                        done: false,
                        queued: false,
                        events: 0,
                        job_in: t.job_marker.map(|(i, _)| i),
                        job_out: t.job_marker.map(|(_, o)| o),
                        job_active: false,
                    })
                    .collect(),
                ops: HashMap::new(),
                next_op: 1,
                epoch: 0,
                active_epochs: 0,
                completions_in_epoch: 0,
                event_seq: 0,
                wake_q: Vec::new(),
                match_q: Vec::new(),
                fault: None,
                aborting: false,
                outputs: outputs.into_iter().map(|n| (n, None)).collect(),
                outputs_missing,
                total_events: 0,
                in_flight: 0,
                in_flight_max: 0,
                record_timeline: cfg.record_timeline,
                timeline,
            }),
            cv: Condvar::new(),
        })
    }
}

/// A single-channel piece of a pending operation, as specified by `Ctx`.
pub(crate) struct SubSpec {
    pub chan: ChanId,
    pub port: String,
    pub dir: Direction,
    pub payload: Option<StreamMsg>,
}

/// Future for one communication step (a single op or a parallel group).
pub(crate) struct OpFuture {
    eng: Arc<Engine>,
    task: TaskId,
    spec: Option<Vec<SubSpec>>,
    op: Option<OpId>,
}

impl Future for OpFuture {
    type Output = Result<Vec<StreamMsg>, RunError>;

    fn poll(self: Pin<&mut Self>, cx: &mut Context<'_>) -> Poll<Self::Output> {
        let this = self.get_mut();
        let mut core = this.eng.core.lock().unwrap();
        if core.aborting {
            return Poll::Ready(Err(RunError::Aborted));
        }
        if let Some(f) = &core.fault {
            return Poll::Ready(Err(f.clone()));
        }
        match this.op {
            None => {
                let subs = this
                    .spec
                    .take()
                    .expect("op future polled after completion")
                    .into_iter()
                    .map(|s| SubOp {
                        chan: s.chan,
                        port: s.port,
                        dir: s.dir,
                        payload: s.payload,
                        result: None,
                        done: false,
                    })
                    .collect();
                let id = core.issue(this.task, subs);
                if let Some(f) = &core.fault {
                    return Poll::Ready(Err(f.clone()));
                }
                if core.op_done(id) {
                    return Poll::Ready(Ok(core.finish_op(id)));
                }
                this.op = Some(id);
                if let Some(op) = core.ops.get_mut(&id) {
                    op.waker = Some(cx.waker().clone());
                }
                Poll::Pending
            }
            Some(id) => {
                if core.op_done(id) {
                    this.op = None;
                    return Poll::Ready(Ok(core.finish_op(id)));
                }
                if let Some(op) = core.ops.get_mut(&id) {
                    op.waker = Some(cx.waker().clone());
                }
                Poll::Pending
            }
        }
    }
}

/// Per-task handle used by process bodies to communicate through their
/// declared ports. A process touches no channel other than its ports.
#[derive(Clone)]
pub struct Ctx {
    pub(crate) eng: Arc<Engine>,
    pub(crate) task: TaskId,
    pub(crate) ports: Arc<BTreeMap<String, PortRt>>,
}

/// A resolved port: its shape and the leaf channels in carrier order.
#[derive(Clone, Debug)]
pub struct PortRt {
    pub shape: Shape,
    pub chans: Vec<ChanId>,
    pub dir: Direction,
}

impl Ctx {
    fn port(&self, name: &str) -> &PortRt {
        self.ports
            .get(name)
            .unwrap_or_else(|| panic!("process references undeclared port {name:?}"))
    }

    fn op(&self, spec: Vec<SubSpec>) -> OpFuture {
        OpFuture {
            eng: self.eng.clone(),
            task: self.task,
            spec: Some(spec),
            op: None,
        }
    }

    fn single(&self, name: &str, dir: Direction, payload: Option<StreamMsg>, stream: bool) -> Vec<SubSpec> {
        let p = self.port(name);
        assert_eq!(
            p.chans.len(),
            1,
            "port {name:?} is not a single channel; use bundle operations"
        );
        let is_stream = matches!(p.shape, Shape::Stream(_));
        assert_eq!(
            is_stream, stream,
            "port {name:?}: stream/item operation mismatch"
        );
        vec![SubSpec {
            chan: p.chans[0],
            port: name.to_string(),
            dir,
            payload,
        }]
    }

    /// Send one value on a single-channel item port.
    pub async fn send(&self, port: &str, v: Value) -> Result<(), RunError> {
        self.op(self.single(port, Direction::Send, Some(StreamMsg::Data(v)), false))
            .await?;
        Ok(())
    }

    /// Receive one value from a single-channel item port.
    pub async fn recv(&self, port: &str) -> Result<Value, RunError> {
        let mut msgs = self
            .op(self.single(port, Direction::Recv, None, false))
            .await?;
        match msgs.pop() {
            Some(StreamMsg::Data(v)) => Ok(v),
            _ => unreachable!("item channel delivered a non-data message"),
        }
    }

    /// Send a tagged message on a stream port.
    pub async fn send_msg(&self, port: &str, m: StreamMsg) -> Result<(), RunError> {
        self.op(self.single(port, Direction::Send, Some(m), true))
            .await?;
        Ok(())
    }

    /// Receive the next tagged message from a stream port.
    pub async fn recv_msg(&self, port: &str) -> Result<StreamMsg, RunError> {
        let mut msgs = self
            .op(self.single(port, Direction::Recv, None, true))
            .await?;
        Ok(msgs.pop().expect("stream recv returned no message"))
    }

    fn bundle_subs(
        &self,
        port: &str,
        dir: Direction,
        v: Option<&Value>,
    ) -> Result<Vec<SubSpec>, RunError> {
        let p = self.port(port);
        assert!(
            !matches!(p.shape, Shape::Stream(_)),
            "port {port:?} is a stream; use message operations"
        );
        let leaves = match v {
            Some(v) => p
                .shape
                .flatten(v)
                .map_err(RunError::Build)?
                .into_iter()
                .map(|x| Some(StreamMsg::Data(x)))
                .collect(),
            None => vec![None; p.chans.len()],
        };
        Ok(p.chans
            .iter()
            .zip(leaves)
            .map(|(&chan, payload)| SubSpec {
                chan,
                port: port.to_string(),
                dir,
                payload,
            })
            .collect())
    }

    /// Send a whole structured value across all leaves of a port as one
    /// parallel step.
    pub async fn send_bundle(&self, port: &str, v: &Value) -> Result<(), RunError> {
        let subs = self.bundle_subs(port, Direction::Send, Some(v))?;
        self.op(subs).await?;
        Ok(())
    }

    /// Receive a whole structured value from all leaves of a port as one
    /// parallel step.
    pub async fn recv_bundle(&self, port: &str) -> Result<Value, RunError> {
        let subs = self.bundle_subs(port, Direction::Recv, None)?;
        let msgs = self.op(subs).await?;
        let leaves: Vec<Value> = msgs
            .into_iter()
            .map(|m| match m {
                StreamMsg::Data(v) => v,
                StreamMsg::Eot => unreachable!("item channel delivered EOT"),
            })
            .collect();
        self.port(port).shape.unflatten(&leaves).map_err(RunError::Build)
    }

    /// Send on several ports concurrently as one step (the parallel produce
    /// of a gathered record).
    pub async fn send_parts(&self, parts: Vec<(&str, Value)>) -> Result<(), RunError> {
        let mut subs = Vec::new();
        for (port, v) in &parts {
            subs.extend(self.bundle_subs(port, Direction::Send, Some(v))?);
        }
        self.op(subs).await?;
        Ok(())
    }

    /// Receive from several ports concurrently as one step (interleaved
    /// independent receives). Returns one structured value per port.
    pub async fn recv_parts(&self, ports: &[&str]) -> Result<Vec<Value>, RunError> {
        let mut subs = Vec::new();
        let mut counts = Vec::new();
        for port in ports {
            let s = self.bundle_subs(port, Direction::Recv, None)?;
            counts.push(s.len());
            subs.extend(s);
        }
        let msgs = self.op(subs).await?;
        let mut leaves: Vec<Value> = msgs
            .into_iter()
            .map(|m| match m {
                StreamMsg::Data(v) => v,
                StreamMsg::Eot => unreachable!("item channel delivered EOT"),
            })
            .collect();
        let mut out = Vec::with_capacity(ports.len());
        for (port, n) in ports.iter().zip(counts) {
            let rest = leaves.split_off(n);
            let v = self
                .port(port)
                .shape
                .unflatten(&leaves)
                .map_err(RunError::Build)?;
            out.push(v);
            leaves = rest;
        }
        Ok(out)
    }

    /// Deposit a finished external output (boundary store processes only).
    pub(crate) fn deposit_output(&self, idx: usize, v: Value) {
        let mut core = self.eng.core.lock().unwrap();
        let slot = &mut core.outputs[idx].1;
        assert!(slot.is_none(), "output deposited twice");
        *slot = Some(v);
        core.outputs_missing -= 1;
        drop(core);
        self.eng.cv.notify_all();
    }
}

pub(crate) type TaskFuture = Pin<Box<dyn Future<Output = Result<(), RunError>> + Send>>;

fn panic_message(e: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = e.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = e.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

fn record_body_result(eng: &Arc<Engine>, task: TaskId, res: Result<(), RunError>) {
    let mut core = eng.core.lock().unwrap();
    core.tasks[task].done = true;
    if let Err(e) = res {
        if !matches!(e, RunError::Aborted) && core.fault.is_none() {
            core.set_fault(e);
        }
    }
}

/// Drive the network on the deterministic single-threaded scheduler.
pub(crate) fn run_cooperative(
    eng: &Arc<Engine>,
    mut futs: Vec<Option<TaskFuture>>,
    seed: u64,
    epoch_limit: u64,
) -> Result<(), RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    {
        let mut core = eng.core.lock().unwrap();
        let n = core.tasks.len();
        for t in 0..n {
            core.tasks[t].queued = true;
            core.wake_q.push(t);
        }
    }

    loop {
        // Epoch start: reset the step budgets (implicit in the epoch counter)
        // and retry rendezvous that were gated on a budget.
        let pending = {
            let mut core = eng.core.lock().unwrap();
            core.epoch += 1;
            core.completions_in_epoch = 0;
            if core.record_timeline {
                core.timeline.push(BTreeMap::new());
            }
            let mut q = std::mem::take(&mut core.match_q);
            q.sort_unstable();
            q.dedup();
            q
        };
        {
            let mut core = eng.core.lock().unwrap();
            for c in pending {
                core.chans[c].queued_match = false;
                core.try_match(c);
            }
        }

        // Drain the wake queue, polling in seed-shuffled order.
        loop {
            let mut batch = {
                let mut core = eng.core.lock().unwrap();
                std::mem::take(&mut core.wake_q)
            };
            if batch.is_empty() {
                break;
            }
            batch.sort_unstable();
            batch.dedup();
            batch.shuffle(&mut rng);
            for t in batch {
                let skip = {
                    let mut core = eng.core.lock().unwrap();
                    core.tasks[t].queued = false;
                    core.tasks[t].done || core.fault.is_some()
                };
                if skip {
                    continue;
                }
                let Some(mut fut) = futs[t].take() else {
                    continue;
                };
                let mut cx = Context::from_waker(Waker::noop());
                match catch_unwind(AssertUnwindSafe(|| fut.as_mut().poll(&mut cx))) {
                    Err(p) => {
                        let name = {
                            let core = eng.core.lock().unwrap();
                            core.tasks[t].name.clone()
                        };
                        record_body_result(
                            eng,
                            t,
                            Err(RunError::Process {
                                process: name,
                                detail: panic_message(p),
                            }),
                        );
                    }
                    Ok(Poll::Ready(res)) => record_body_result(eng, t, res),
                    Ok(Poll::Pending) => futs[t] = Some(fut),
                }
            }
            let faulted = {
                let core = eng.core.lock().unwrap();
                core.fault.is_some()
            };
            if faulted {
                break;
            }
        }

        // Epoch end: check for faults, quiescence, and sample in-flight depth.
        let mut core = eng.core.lock().unwrap();
        if let Some(f) = core.fault.clone() {
            return Err(f);
        }
        if core.completions_in_epoch == 0 {
            if core.outputs_missing == 0 {
                return Ok(());
            }
            return Err(RunError::Deadlock(core.deadlock_report()));
        }
        core.active_epochs += 1;
        core.in_flight_max = core.in_flight_max.max(core.in_flight);
        if core.epoch >= epoch_limit {
            return Err(RunError::EpochLimit(epoch_limit));
        }
    }
}

struct ThreadWaker(std::thread::Thread);

impl std::task::Wake for ThreadWaker {
    fn wake(self: Arc<Self>) {
        self.0.unpark();
    }
}

fn block_on_parking(mut fut: TaskFuture) -> Result<(), RunError> {
    let waker = Waker::from(Arc::new(ThreadWaker(std::thread::current())));
    let mut cx = Context::from_waker(&waker);
    loop {
        match fut.as_mut().poll(&mut cx) {
            Poll::Ready(v) => return v,
            Poll::Pending => std::thread::park(),
        }
    }
}

/// Drive the network with one OS thread per process.
pub(crate) fn run_threaded(
    eng: &Arc<Engine>,
    futs: Vec<Option<TaskFuture>>,
) -> Result<(), RunError> {
    let mut handles = Vec::new();
    for (t, fut) in futs.into_iter().enumerate() {
        let Some(fut) = fut else { continue };
        let eng = eng.clone();
        handles.push(std::thread::spawn(move || {
            let res = match catch_unwind(AssertUnwindSafe(|| block_on_parking(fut))) {
                Ok(r) => r,
                Err(p) => {
                    let name = {
                        let core = eng.core.lock().unwrap();
                        core.tasks[t].name.clone()
                    };
                    Err(RunError::Process {
                        process: name,
                        detail: panic_message(p),
                    })
                }
            };
            record_body_result(&eng, t, res);
            eng.cv.notify_all();
        }));
    }

    // Wait until the outputs are complete, a fault fires, or progress stalls.
    let stall_limit = Duration::from_secs(10);
    let mut core = eng.core.lock().unwrap();
    let mut last_seq = core.event_seq;
    let mut last_progress = Instant::now();
    loop {
        if core.fault.is_some() || core.outputs_missing == 0 {
            break;
        }
        if core.tasks.iter().all(|t| t.done) {
            break;
        }
        let (c, _) = eng
            .cv
            .wait_timeout(core, Duration::from_millis(50))
            .unwrap();
        core = c;
        if core.event_seq != last_seq {
            last_seq = core.event_seq;
            last_progress = Instant::now();
        } else if last_progress.elapsed() > stall_limit {
            let report = core.deadlock_report();
            core.set_fault(RunError::Deadlock(report));
            break;
        }
    }
    let fault = core.fault.clone();
    core.aborting = true;
    let wakers: Vec<Waker> = core
        .ops
        .values_mut()
        .filter_map(|o| o.waker.take())
        .collect();
    drop(core);
    for w in wakers {
        w.wake();
    }
    for h in handles {
        let _ = h.join();
    }
    match fault {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

/// Collect the outcome after a successful run.
pub(crate) fn collect_outcome(eng: &Arc<Engine>) -> RunOutcome {
    let core = eng.core.lock().unwrap();
    RunOutcome {
        outputs: core
            .outputs
            .iter()
            .map(|(n, v)| (n.clone(), v.clone().expect("missing output after success")))
            .collect(),
        report: core.cost_report(),
        timeline: core.timeline(),
    }
}
