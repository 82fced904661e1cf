//! The process library: producers, primitive item processes, and the
//! higher-order combinators (map, zipWith, mapWith and the two fold
//! refinements) in their stream and vector settings.
//!
//! Primitive item processes loop forever: like hardware blocks they process
//! one production per iteration and simply stay parked once the network goes
//! quiescent. Stream-framed processes terminate on EOT. The dual of `prd`,
//! `store`, is realised by the run boundary: every external output is
//! collected by a `store/<name>` task and returned from the run.

use super::engine::Ctx;
use super::errors::BuildError;
use super::process::{Composite, Process};
use super::shape::Shape;
use super::value::{Kind, StreamMsg, Value};

fn xor_value(a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::W16(x), Value::W16(y)) => Value::W16(x ^ y),
        (Value::W32(x), Value::W32(y)) => Value::W32(x ^ y),
        (Value::W64(x), Value::W64(y)) => Value::W64(x ^ y),
        (Value::W128(x), Value::W128(y)) => Value::W128(x ^ y),
        _ => panic!("exor on mismatched operands"),
    }
}

/// Producer: sends `value` structured per `shape` (vector leaves in a single
/// parallel step; streams as `Data*` then `Eot`), then terminates.
pub fn prd(shape: &Shape, value: Value) -> Process {
    let is_stream = matches!(shape, Shape::Stream(_));
    Process::atomic("prd", &[], &[("out", shape.clone())], move |ctx: Ctx| {
        let value = value.clone();
        async move {
            if is_stream {
                for item in value.into_list() {
                    ctx.send_msg("out", StreamMsg::Data(item)).await?;
                }
                ctx.send_msg("out", StreamMsg::Eot).await?;
            } else {
                ctx.send_bundle("out", &value).await?;
            }
            Ok(())
        }
    })
}

/// Producer that re-emits `value` every time it is consumed (constant
/// sources). Not defined for stream shapes.
pub fn prd_repeat(shape: &Shape, value: Value) -> Process {
    assert!(
        !shape.contains_stream(),
        "prd_repeat is not defined for stream carriers"
    );
    Process::atomic("prd", &[], &[("out", shape.clone())], move |ctx: Ctx| {
        let value = value.clone();
        async move {
            loop {
                ctx.send_bundle("out", &value).await?;
            }
        }
    })
}

/// Item forwarder.
pub fn id_p(kind: Kind) -> Process {
    let shape = Shape::Item(kind);
    Process::atomic(
        "id",
        &[("in", shape.clone())],
        &[("out", shape)],
        |ctx: Ctx| async move {
            loop {
                let v = ctx.recv("in").await?;
                ctx.send("out", v).await?;
            }
        },
    )
}

/// One-input item process applying `f` per production.
pub fn lift1(
    name: &str,
    kin: Kind,
    kout: Kind,
    f: impl Fn(Value) -> Value + Send + Sync + 'static,
) -> Process {
    let f = std::sync::Arc::new(f);
    Process::atomic(
        name,
        &[("in", Shape::Item(kin))],
        &[("out", Shape::Item(kout))],
        move |ctx: Ctx| {
            let f = f.clone();
            async move {
                loop {
                    let v = ctx.recv("in").await?;
                    ctx.send("out", f(v)).await?;
                }
            }
        },
    )
}

/// Two-input item process: gathers both inputs in one parallel step,
/// applies `f`, sends the result.
pub fn lift2(
    name: &str,
    ka: Kind,
    kb: Kind,
    kout: Kind,
    f: impl Fn(Value, Value) -> Value + Send + Sync + 'static,
) -> Process {
    let f = std::sync::Arc::new(f);
    Process::atomic(
        name,
        &[("a", Shape::Item(ka)), ("b", Shape::Item(kb))],
        &[("out", Shape::Item(kout))],
        move |ctx: Ctx| {
            let f = f.clone();
            async move {
                loop {
                    let mut vs = ctx.recv_parts(&["a", "b"]).await?;
                    let b = vs.pop().unwrap();
                    let a = vs.pop().unwrap();
                    ctx.send("out", f(a, b)).await?;
                }
            }
        },
    )
}

/// Bitwise XOR of two items.
pub fn exor_p(kind: Kind) -> Process {
    lift2("exor", kind.clone(), kind.clone(), kind, |a, b| {
        xor_value(&a, &b)
    })
}

/// Join two 32-bit items into one 64-bit item, first input most significant.
/// Synchronises on both inputs before producing.
pub fn concat_p() -> Process {
    lift2("concat", Kind::W32, Kind::W32, Kind::W64, |a, b| {
        Value::W64(crate::words::concat32(a.as_w32(), b.as_w32()))
    })
    .rename("concat")
}

/// Join two 16-bit halves into a 32-bit item, first input most significant.
pub fn join16_p() -> Process {
    lift2("join16", Kind::W16, Kind::W16, Kind::W32, |a, b| {
        Value::W32(crate::words::concat16(a.as_w16(), b.as_w16()))
    })
}

/// Split a 32-bit item into (most-significant, least-significant) halves.
pub fn split32_p() -> Process {
    Process::atomic(
        "split32",
        &[("in", Shape::Item(Kind::W32))],
        &[("l", Shape::item16()), ("r", Shape::item16())],
        |ctx: Ctx| async move {
            loop {
                let v = ctx.recv("in").await?.as_w32();
                let (l, r) = crate::words::split32(v);
                ctx.send_parts(vec![("l", Value::W16(l)), ("r", Value::W16(r))])
                    .await?;
            }
        },
    )
}

/// Copy one carrier to `k` output carriers, all in one parallel step.
pub fn ibroadcast(k: usize, shape: &Shape) -> Process {
    assert!(
        !shape.contains_stream(),
        "ibroadcast is not defined for stream carriers"
    );
    Process::atomic(
        "ibroadcast",
        &[("in", shape.clone())],
        &[("out", Shape::vector(k, shape.clone()))],
        move |ctx: Ctx| async move {
            loop {
                let v = ctx.recv_bundle("in").await?;
                ctx.send_bundle("out", &Value::List(vec![v; k])).await?;
            }
        },
    )
}

/// Standard matrix transpose on a vector of vectors of 16-bit items.
pub fn transpose_p(rows: usize, cols: usize) -> Process {
    Process::atomic(
        "transpose",
        &[("in", Shape::vector(rows, Shape::vec16(cols)))],
        &[("out", Shape::vector(cols, Shape::vec16(rows)))],
        move |ctx: Ctx| async move {
            loop {
                let v = ctx.recv_bundle("in").await?;
                let m = v.as_list();
                let t: Vec<Value> = (0..cols)
                    .map(|c| {
                        Value::List((0..rows).map(|r| m[r].as_list()[c].clone()).collect())
                    })
                    .collect();
                ctx.send_bundle("out", &Value::List(t)).await?;
            }
        },
    )
}

/// The [2, 3, 3] subkey grouping of one round's eight subkeys.
pub fn group_shape() -> Shape {
    Shape::Group(vec![Shape::vec16(2), Shape::vec16(3), Shape::vec16(3)])
}

/// A pack: two consecutive rounds' groups merged, six groups total.
pub fn pack_shape() -> Shape {
    Shape::Group(vec![
        Shape::vec16(2),
        Shape::vec16(3),
        Shape::vec16(3),
        Shape::vec16(2),
        Shape::vec16(3),
        Shape::vec16(3),
    ])
}

/// Reshape a round's 8 subkeys into the [pair, triple, triple] grouping.
pub fn group_p() -> Process {
    Process::atomic(
        "group",
        &[("in", Shape::vec16(8))],
        &[("out", group_shape())],
        |ctx: Ctx| async move {
            loop {
                let v = ctx.recv_bundle("in").await?;
                let xs = v.as_list();
                let g = Value::List(vec![
                    Value::List(xs[0..2].to_vec()),
                    Value::List(xs[2..5].to_vec()),
                    Value::List(xs[5..8].to_vec()),
                ]);
                ctx.send_bundle("out", &g).await?;
            }
        },
    )
}

/// Merge consecutive round pairs into 4 packs of 6 groups.
pub fn merge_p() -> Process {
    Process::atomic(
        "merge",
        &[("in", Shape::vector(8, group_shape()))],
        &[("out", Shape::vector(4, pack_shape()))],
        |ctx: Ctx| async move {
            loop {
                let v = ctx.recv_bundle("in").await?;
                let rounds = v.as_list();
                let packs: Vec<Value> = (0..4)
                    .map(|p| {
                        let mut groups = rounds[2 * p].as_list().to_vec();
                        groups.extend(rounds[2 * p + 1].as_list().to_vec());
                        Value::List(groups)
                    })
                    .collect();
                ctx.send_bundle("out", &Value::List(packs)).await?;
            }
        },
    )
}

/// Rotate the lanes of an 8-element vector left by `n` positions
/// (the list-level "shift"; element i of the output is element
/// (i + n) mod len of the input).
pub fn shift_list_p(len: usize, n: usize) -> Process {
    Process::atomic(
        "shift_list",
        &[("in", Shape::vec16(len))],
        &[("out", Shape::vec16(len))],
        move |ctx: Ctx| async move {
            loop {
                let v = ctx.recv_bundle("in").await?;
                let xs = v.as_list();
                let rot: Vec<Value> = (0..len).map(|i| xs[(i + n) % len].clone()).collect();
                ctx.send_bundle("out", &Value::List(rot)).await?;
            }
        },
    )
}

/// Rotate a 16-bit item left by `n` bits (the bit-level shift).
pub fn shiftl_p(n: u32) -> Process {
    assert!(n < 16, "shiftl_p rotation count out of range: {n}");
    lift1("shiftl", Kind::W16, Kind::W16, move |v| {
        Value::W16(crate::words::rotl16(v.as_w16(), n))
    })
}

/// Feed: compose P's sole output into Q's sole input over a hidden carrier.
/// The result's external ports are P's inputs and Q's outputs.
pub fn feed(p: Process, q: Process) -> Result<Process, BuildError> {
    let out = p.sole_output()?.clone();
    let inp = q.sole_input()?.clone();
    if out.shape != inp.shape {
        return Err(BuildError::ShapeMismatch {
            from: format!("{}.{}", p.name, out.name),
            from_shape: out.shape.to_string(),
            to: format!("{}.{}", q.name, inp.name),
            to_shape: inp.shape.to_string(),
        });
    }
    let mut c = Composite::new(&format!("{}~{}", p.name, q.name));
    for d in &p.inputs {
        c = c.input(&d.name, d.shape.clone());
    }
    for d in &q.outputs {
        c = c.output(&d.name, d.shape.clone());
    }
    let p_inputs: Vec<String> = p.inputs.iter().map(|d| d.name.clone()).collect();
    let q_outputs: Vec<String> = q.outputs.iter().map(|d| d.name.clone()).collect();
    let (pn, qn) = (p.name.clone(), q.name.clone());
    let pi = c.add(if pn == qn { p.rename("lhs") } else { p });
    let qi = c.add(if pn == qn { q.rename("rhs") } else { q });
    c.wire((pi, &out.name), (qi, &inp.name));
    for name in &p_inputs {
        c.bind_input(name, (pi, name));
    }
    for name in &q_outputs {
        c.bind_output((qi, name), name);
    }
    c.build()
}

/// Piping between stages; identical to feed.
pub fn pipe(p: Process, q: Process) -> Result<Process, BuildError> {
    feed(p, q)
}

/// Width-annotated piping: the hidden carrier must be a `width`-element
/// vector.
pub fn pipe_n(width: usize, p: Process, q: Process) -> Result<Process, BuildError> {
    let out_shape = p.sole_output()?.shape.clone();
    match &out_shape {
        Shape::Vector(n, _) if *n == width => feed(p, q),
        other => Err(BuildError::Invalid(format!(
            "pipe_n expected a {width}-wide vector between {} and {}, found {other}",
            p.name, q.name
        ))),
    }
}

/// Stream map: applies `f` (an item-to-item process) to every data element
/// of a stream; EOT passes through and terminates the process.
pub fn smap(f: Process) -> Result<Process, BuildError> {
    let fin = f.sole_input()?.clone();
    let fout = f.sole_output()?.clone();
    let (Shape::Item(kin), Shape::Item(kout)) = (fin.shape.clone(), fout.shape.clone()) else {
        return Err(BuildError::Invalid(format!(
            "smap requires an item-to-item process, got {} -> {}",
            fin.shape, fout.shape
        )));
    };
    let mut c = Composite::new("smap")
        .input("in", Shape::Stream(kin.clone()))
        .output("out", Shape::Stream(kout.clone()));
    let shell = c.add(Process::atomic(
        "shell",
        &[
            ("in", Shape::Stream(kin.clone())),
            ("from_f", Shape::Item(kout.clone())),
        ],
        &[
            ("out", Shape::Stream(kout)),
            ("to_f", Shape::Item(kin)),
        ],
        |ctx: Ctx| async move {
            loop {
                match ctx.recv_msg("in").await? {
                    StreamMsg::Eot => {
                        ctx.send_msg("out", StreamMsg::Eot).await?;
                        return Ok(());
                    }
                    StreamMsg::Data(v) => {
                        ctx.send("to_f", v).await?;
                        let r = ctx.recv("from_f").await?;
                        ctx.send_msg("out", StreamMsg::Data(r)).await?;
                    }
                }
            }
        },
    ));
    let fi = c.add(f.rename("f"));
    c.wire((shell, "to_f"), (fi, &fin.name));
    c.wire((fi, &fout.name), (shell, "from_f"));
    c.bind_input("in", (shell, "in"));
    c.bind_output((shell, "out"), "out");
    c.build()
}

/// Vector map: `n` replicas of `f` in parallel, replica i wired
/// element-i-in to element-i-out.
pub fn vmap(n: usize, f: impl Fn() -> Process) -> Result<Process, BuildError> {
    let procs: Vec<Process> = (0..n).map(|_| f()).collect();
    vmapwith(procs).map(|p| p.rename("vmap"))
}

/// Vector map with one distinct process per lane. All lanes must share the
/// same input and output shapes.
pub fn vmapwith(lanes: Vec<Process>) -> Result<Process, BuildError> {
    if lanes.is_empty() {
        return Err(BuildError::Invalid("vmapwith requires at least one lane".into()));
    }
    let n = lanes.len();
    let in0 = lanes[0].sole_input()?.clone();
    let out0 = lanes[0].sole_output()?.clone();
    for lane in &lanes {
        if lane.sole_input()?.shape != in0.shape || lane.sole_output()?.shape != out0.shape {
            return Err(BuildError::Invalid(
                "vmapwith lanes must share input/output shapes".into(),
            ));
        }
    }
    let mut c = Composite::new("vmapwith")
        .input("in", Shape::vector(n, in0.shape.clone()))
        .output("out", Shape::vector(n, out0.shape.clone()));
    for (i, lane) in lanes.into_iter().enumerate() {
        let in_name = lane.sole_input()?.name.clone();
        let out_name = lane.sole_output()?.name.clone();
        let li = c.add(lane.rename(&format!("f{i}")));
        c.bind_input_path(("in", &[i]), (li, &in_name, &[]));
        c.bind_output_path((li, &out_name, &[]), ("out", &[i]));
    }
    c.build()
}

/// Vector zipWith: element i of the output is `f(a[i], b[i])`, all lanes
/// concurrent. `f` must be a two-input, one-output item process.
pub fn vzipwith(n: usize, f: impl Fn() -> Process) -> Result<Process, BuildError> {
    let sample = f();
    if sample.inputs.len() != 2 {
        return Err(BuildError::Invalid(format!(
            "vzipwith requires a two-input process, {} has {}",
            sample.name,
            sample.inputs.len()
        )));
    }
    let ka = sample.inputs[0].clone();
    let kb = sample.inputs[1].clone();
    let out = sample.sole_output()?.clone();
    let mut c = Composite::new("vzipwith")
        .input("a", Shape::vector(n, ka.shape.clone()))
        .input("b", Shape::vector(n, kb.shape.clone()))
        .output("out", Shape::vector(n, out.shape.clone()));
    for i in 0..n {
        let li = c.add(f().rename(&format!("f{i}")));
        c.bind_input_path(("a", &[i]), (li, &ka.name, &[]));
        c.bind_input_path(("b", &[i]), (li, &kb.name, &[]));
        c.bind_output_path((li, &out.name, &[]), ("out", &[i]));
    }
    c.build()
}

/// How fold stages obtain their per-stage element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElemFeed {
    /// Receive the element once and reuse it for every job.
    Latch,
    /// Receive a fresh element for every job.
    PerJob,
}

fn fold_f_ports(f: &Process) -> Result<(String, Kind, String, Shape, String), BuildError> {
    if f.inputs.len() != 2 {
        return Err(BuildError::Invalid(format!(
            "fold function {} must have exactly two inputs (accumulator, element)",
            f.name
        )));
    }
    let acc = &f.inputs[0];
    let Shape::Item(acc_kind) = acc.shape.clone() else {
        return Err(BuildError::Invalid(format!(
            "fold accumulator port {}.{} must be an item",
            f.name, acc.name
        )));
    };
    let elem = &f.inputs[1];
    let out = f.sole_output()?;
    if out.shape != Shape::Item(acc_kind.clone()) {
        return Err(BuildError::Invalid(format!(
            "fold function {} output shape must match its accumulator",
            f.name
        )));
    }
    Ok((
        acc.name.clone(),
        acc_kind,
        elem.name.clone(),
        elem.shape.clone(),
        out.name.clone(),
    ))
}

fn fold_stage(
    f: Process,
    acc_kind: &Kind,
    elem_shape: &Shape,
    feed_mode: ElemFeed,
) -> Result<Process, BuildError> {
    let (acc_name, _, elem_name, _, out_name) = fold_f_ports(&f)?;
    let stream = Shape::Stream(acc_kind.clone());
    let item = Shape::Item(acc_kind.clone());
    let mut c = Composite::new("stage")
        .input("prev", stream.clone())
        .input("elem", elem_shape.clone())
        .output("next", stream.clone());
    let shell = c.add(Process::atomic_with_job_marker(
        "shell",
        &[
            ("prev", stream.clone()),
            ("elem", elem_shape.clone()),
            ("from_f", item.clone()),
        ],
        &[
            ("next", stream),
            ("to_f", item.clone()),
            ("elem_f", elem_shape.clone()),
        ],
        "prev",
        "next",
        move |ctx: Ctx| async move {
            let mut latched: Option<Value> = None;
            if feed_mode == ElemFeed::Latch {
                latched = Some(ctx.recv_bundle("elem").await?);
            }
            loop {
                match ctx.recv_msg("prev").await? {
                    StreamMsg::Eot => {
                        ctx.send_msg("next", StreamMsg::Eot).await?;
                        return Ok(());
                    }
                    StreamMsg::Data(acc) => {
                        let e = match &latched {
                            Some(e) => e.clone(),
                            None => ctx.recv_bundle("elem").await?,
                        };
                        ctx.send_parts(vec![("to_f", acc), ("elem_f", e)]).await?;
                        let r = ctx.recv("from_f").await?;
                        ctx.send_msg("next", StreamMsg::Data(r)).await?;
                    }
                }
            }
        },
    ));
    let fi = c.add(f.rename("f"));
    c.wire((shell, "to_f"), (fi, &acc_name));
    c.wire((shell, "elem_f"), (fi, &elem_name));
    c.wire((fi, &out_name), (shell, "from_f"));
    c.bind_input("prev", (shell, "prev"));
    c.bind_input("elem", (shell, "elem"));
    c.bind_output((shell, "next"), "next");
    c.build()
}

/// Vector-setting left fold: `n` replicas of `f` chained into a spatial
/// pipeline. Replica i receives the accumulator from replica i-1 and element
/// i of the input vector; with a stream of successive fold jobs, up to `n`
/// jobs are in flight concurrently.
pub fn vvfoldl(
    n: usize,
    make_f: impl Fn() -> Process,
    feed_mode: ElemFeed,
) -> Result<Process, BuildError> {
    let sample = make_f();
    let (_, acc_kind, _, elem_shape, _) = fold_f_ports(&sample)?;
    let stream = Shape::Stream(acc_kind.clone());
    let mut c = Composite::new("vvfoldl")
        .input("init", stream.clone())
        .input("elems", Shape::vector(n, elem_shape.clone()))
        .output("out", stream);
    let mut prev: Option<usize> = None;
    for i in 0..n {
        let stage = fold_stage(make_f(), &acc_kind, &elem_shape, feed_mode)?;
        let si = c.add(stage.rename(&format!("stage{i}")));
        c.bind_input_path(("elems", &[i]), (si, "elem", &[]));
        match prev {
            None => c.bind_input("init", (si, "prev")),
            Some(p) => c.wire((p, "next"), (si, "prev")),
        }
        prev = Some(si);
    }
    c.bind_output((prev.expect("n >= 1"), "next"), "out");
    c.build()
}

/// Stream-setting left fold: a single `f` instance holds the accumulator and
/// consumes stream elements one at a time, emitting the accumulator after the
/// element stream's EOT. Only one job is in flight at a time. The element
/// stream is consumed once and cached for subsequent jobs.
pub fn svfoldl(f: Process, feed_mode: ElemFeed) -> Result<Process, BuildError> {
    if feed_mode == ElemFeed::PerJob {
        return Err(BuildError::Invalid(
            "svfoldl cannot re-receive elements per job: a stream carries one EOT".into(),
        ));
    }
    let (acc_name, acc_kind, elem_name, elem_shape, out_name) = fold_f_ports(&f)?;
    let elem_kind = elem_shape.payload_kind()?;
    let stream = Shape::Stream(acc_kind.clone());
    let item = Shape::Item(acc_kind.clone());
    let mut c = Composite::new("svfoldl")
        .input("init", stream.clone())
        .input("elems", Shape::Stream(elem_kind.clone()))
        .output("out", stream.clone());
    let shell = c.add(Process::atomic_with_job_marker(
        "shell",
        &[
            ("init", stream.clone()),
            ("elems", Shape::Stream(elem_kind)),
            ("from_f", item.clone()),
        ],
        &[
            ("out", stream),
            ("to_f", item),
            ("elem_f", elem_shape.clone()),
        ],
        "init",
        "out",
        |ctx: Ctx| async move {
            let mut cache: Option<Vec<Value>> = None;
            loop {
                match ctx.recv_msg("init").await? {
                    StreamMsg::Eot => {
                        ctx.send_msg("out", StreamMsg::Eot).await?;
                        return Ok(());
                    }
                    StreamMsg::Data(mut acc) => {
                        if cache.is_none() {
                            let mut es = Vec::new();
                            while let StreamMsg::Data(e) = ctx.recv_msg("elems").await? {
                                es.push(e);
                            }
                            cache = Some(es);
                        }
                        for e in cache.as_ref().unwrap() {
                            ctx.send_parts(vec![("to_f", acc), ("elem_f", e.clone())])
                                .await?;
                            acc = ctx.recv("from_f").await?;
                        }
                        ctx.send_msg("out", StreamMsg::Data(acc)).await?;
                    }
                }
            }
        },
    ));
    let fi = c.add(f.rename("f"));
    c.wire((shell, "to_f"), (fi, &acc_name));
    c.wire((shell, "elem_f"), (fi, &elem_name));
    c.wire((fi, &out_name), (shell, "from_f"));
    c.bind_input("init", (shell, "init"));
    c.bind_input("elems", (shell, "elems"));
    c.bind_output((shell, "out"), "out");
    c.build()
}
