//! Elaboration of a process tree into a flat, executable network, plus the
//! run entry points. The network graph is fixed before execution: processes,
//! channels and the port-to-channel wiring never change during a run.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde_json::json;

use super::engine::{
    collect_outcome, run_cooperative, run_threaded, ChanId, ChanInit, Ctx, Engine, PortRt,
    RunConfig, RunMode, RunOutcome, TaskInit,
};
use super::errors::{BuildError, Direction, RunError};
use super::process::{BodyFn, CompositeDef, ProcKind, Process, Sel};
use super::shape::Shape;
use super::value::{StreamMsg, Value};

#[derive(Clone, Debug)]
pub struct ChanDecl {
    pub name: String,
    pub kind: super::value::Kind,
    pub stream: bool,
    pub sender: Option<(usize, String)>,
    pub receiver: Option<(usize, String)>,
}

pub(crate) struct TaskDecl {
    pub name: String,
    pub ports: BTreeMap<String, PortRt>,
    pub body: BodyFn,
    pub job_marker: Option<(String, String)>,
}

/// A port of the network left unwired during elaboration.
#[derive(Clone, Debug)]
pub struct Dangling {
    pub process: String,
    pub port: String,
    pub channel: String,
}

/// A fully elaborated process network, ready to run any number of times.
pub struct Network {
    pub name: String,
    pub(crate) chans: Vec<ChanDecl>,
    pub(crate) tasks: Vec<TaskDecl>,
    pub inputs: Vec<(String, Shape)>,
    pub outputs: Vec<(String, Shape)>,
    pub(crate) input_chans: Vec<Vec<ChanId>>,
    pub(crate) output_chans: Vec<Vec<ChanId>>,
    pub dangling: Vec<Dangling>,
}

struct Elaborator {
    chans: Vec<ChanDecl>,
    tasks: Vec<TaskDecl>,
    dangling: Vec<Dangling>,
}

impl Elaborator {
    fn alloc_chan(&mut self, name: String, kind: super::value::Kind, stream: bool) -> ChanId {
        self.chans.push(ChanDecl {
            name,
            kind,
            stream,
            sender: None,
            receiver: None,
        });
        self.chans.len() - 1
    }

    fn elaborate(
        &mut self,
        proc_: &Process,
        path: &str,
        ext: BTreeMap<String, Vec<ChanId>>,
    ) -> Result<(), BuildError> {
        match &proc_.kind {
            ProcKind::Atomic { body, job_marker } => {
                let task_id = self.tasks.len();
                let mut ports = BTreeMap::new();
                for (decl, dir) in proc_
                    .inputs
                    .iter()
                    .map(|d| (d, Direction::Recv))
                    .chain(proc_.outputs.iter().map(|d| (d, Direction::Send)))
                {
                    let chans = ext
                        .get(&decl.name)
                        .cloned()
                        .expect("elaboration missed a port");
                    for (leaf, chan) in decl.shape.leaves().iter().zip(&chans) {
                        let slot = match dir {
                            Direction::Recv => &mut self.chans[*chan].receiver,
                            Direction::Send => &mut self.chans[*chan].sender,
                        };
                        debug_assert!(slot.is_none(), "channel endpoint registered twice");
                        *slot = Some((task_id, format!("{}{}", decl.name, leaf.label)));
                    }
                    ports.insert(
                        decl.name.clone(),
                        PortRt {
                            shape: decl.shape.clone(),
                            chans,
                            dir,
                        },
                    );
                }
                self.tasks.push(TaskDecl {
                    name: path.to_string(),
                    ports,
                    body: body.clone(),
                    job_marker: job_marker.clone(),
                });
                Ok(())
            }
            ProcKind::Composite(def) => self.elaborate_composite(proc_, def, path, ext),
        }
    }

    fn elaborate_composite(
        &mut self,
        proc_: &Process,
        def: &CompositeDef,
        path: &str,
        ext: BTreeMap<String, Vec<ChanId>>,
    ) -> Result<(), BuildError> {
        // One slot per leaf channel of every child port.
        let mut slots: HashMap<(usize, String), Vec<Option<ChanId>>> = HashMap::new();
        for (ci, child) in def.children.iter().enumerate() {
            for decl in child.inputs.iter().chain(&child.outputs) {
                slots.insert(
                    (ci, decl.name.clone()),
                    vec![None; decl.shape.leaf_count()],
                );
            }
        }

        let child_port_shape = |ci: usize, sel: &Sel, input: bool| -> Result<Shape, BuildError> {
            let child = &def.children[ci];
            let base = if input {
                child.input_shape(&sel.port)?
            } else {
                child.output_shape(&sel.port)?
            };
            Ok(base.clone())
        };

        let fill = |slots: &mut HashMap<(usize, String), Vec<Option<ChanId>>>,
                        ci: usize,
                        base: &Shape,
                        sel: &Sel,
                        chans: &[ChanId]|
         -> Result<(), BuildError> {
            let (off, len) = base.leaf_range(&sel.path)?;
            assert_eq!(len, chans.len());
            let slot = slots.get_mut(&(ci, sel.port.clone())).unwrap();
            for (i, c) in chans.iter().enumerate() {
                if slot[off + i].is_some() {
                    return Err(BuildError::DoubleWired(format!(
                        "{path}/{}.{}",
                        def.children[ci].name, sel.port
                    )));
                }
                slot[off + i] = Some(*c);
            }
            Ok(())
        };

        // External bindings: slices of the composite's own carriers.
        for (binds, decls, input) in [
            (&def.in_binds, &proc_.inputs, true),
            (&def.out_binds, &proc_.outputs, false),
        ] {
            for b in binds {
                let outer = decls
                    .iter()
                    .find(|d| d.name == b.outer.port)
                    .expect("validated bind");
                let outer_chans = &ext[&b.outer.port];
                let (off, len) = outer.shape.leaf_range(&b.outer.path)?;
                let base = child_port_shape(b.inner.0, &b.inner.1, input)?;
                fill(
                    &mut slots,
                    b.inner.0,
                    &base,
                    &b.inner.1,
                    &outer_chans[off..off + len],
                )?;
            }
        }

        // Internal wires allocate fresh channels, named after their source.
        for w in &def.wires {
            let from_base = child_port_shape(w.from.0, &w.from.1, false)?;
            let sub = from_base.sub_shape(&w.from.1.path)?.clone();
            let from_child = &def.children[w.from.0].name;
            let mut chans = Vec::with_capacity(sub.leaf_count());
            for leaf in sub.leaves() {
                let mut label = w.from.1.port.clone();
                for i in &w.from.1.path {
                    label.push_str(&format!("[{i}]"));
                }
                label.push_str(&leaf.label);
                let name = format!("{path}/{from_child}.{label}");
                chans.push(self.alloc_chan(name, leaf.kind, leaf.stream));
            }
            fill(&mut slots, w.from.0, &from_base, &w.from.1, &chans)?;
            let to_base = child_port_shape(w.to.0, &w.to.1, true)?;
            fill(&mut slots, w.to.0, &to_base, &w.to.1, &chans)?;
        }

        // Assemble per-child carriers; unfilled leaves become dangling
        // channels that will block forever and show up in deadlock reports.
        for (ci, child) in def.children.iter().enumerate() {
            let child_path = format!("{path}/{}", child.name);
            let mut child_ext = BTreeMap::new();
            for decl in child.inputs.iter().chain(&child.outputs) {
                let slot = slots.remove(&(ci, decl.name.clone())).unwrap();
                let leaves = decl.shape.leaves();
                let mut chans = Vec::with_capacity(slot.len());
                for (i, s) in slot.into_iter().enumerate() {
                    match s {
                        Some(c) => chans.push(c),
                        None => {
                            let name = format!(
                                "{child_path}.{}{}:unwired",
                                decl.name, leaves[i].label
                            );
                            let c = self.alloc_chan(
                                name.clone(),
                                leaves[i].kind.clone(),
                                leaves[i].stream,
                            );
                            self.dangling.push(Dangling {
                                process: child_path.clone(),
                                port: decl.name.clone(),
                                channel: name,
                            });
                            chans.push(c);
                        }
                    }
                }
                child_ext.insert(decl.name.clone(), chans);
            }
            self.elaborate(child, &child_path, child_ext)?;
        }
        Ok(())
    }
}

impl Network {
    /// Elaborate a process tree. The root's ports become the network's
    /// external carriers.
    pub fn from_process(root: &Process) -> Result<Network, BuildError> {
        let mut el = Elaborator {
            chans: Vec::new(),
            tasks: Vec::new(),
            dangling: Vec::new(),
        };
        let mut ext = BTreeMap::new();
        let mut input_chans = Vec::new();
        let mut output_chans = Vec::new();
        for (decl, is_input) in root
            .inputs
            .iter()
            .map(|d| (d, true))
            .chain(root.outputs.iter().map(|d| (d, false)))
        {
            decl.shape.check_wellformed()?;
            let side = if is_input { "in" } else { "out" };
            let chans: Vec<ChanId> = decl
                .shape
                .leaves()
                .into_iter()
                .map(|leaf| {
                    el.alloc_chan(
                        format!("{side}.{}{}", decl.name, leaf.label),
                        leaf.kind,
                        leaf.stream,
                    )
                })
                .collect();
            if is_input {
                input_chans.push(chans.clone());
            } else {
                output_chans.push(chans.clone());
            }
            ext.insert(decl.name.clone(), chans);
        }
        el.elaborate(root, &root.name, ext)?;
        Ok(Network {
            name: root.name.clone(),
            chans: el.chans,
            tasks: el.tasks,
            inputs: root
                .inputs
                .iter()
                .map(|d| (d.name.clone(), d.shape.clone()))
                .collect(),
            outputs: root
                .outputs
                .iter()
                .map(|d| (d.name.clone(), d.shape.clone()))
                .collect(),
            input_chans,
            output_chans,
            dangling: el.dangling,
        })
    }

    /// Error if any port was left unwired.
    pub fn validate(&self) -> Result<(), BuildError> {
        if let Some(d) = self.dangling.first() {
            return Err(BuildError::Invalid(format!(
                "unwired port {}.{} (channel {})",
                d.process, d.port, d.channel
            )));
        }
        Ok(())
    }

    pub fn process_names(&self) -> impl Iterator<Item = &str> {
        self.tasks.iter().map(|t| t.name.as_str())
    }

    pub fn channel_count(&self) -> usize {
        self.chans.len()
    }

    /// Dump the elaborated graph (processes, ports, channels, wiring).
    pub fn dump_json(&self) -> serde_json::Value {
        let endpoint = |e: &Option<(usize, String)>| match e {
            Some((t, port)) => json!({ "process": self.tasks[*t].name, "port": port }),
            None => serde_json::Value::Null,
        };
        json!({
            "network": self.name,
            "processes": self.tasks.iter().map(|t| {
                json!({
                    "name": t.name,
                    "ports": t.ports.iter().map(|(n, p)| json!({
                        "name": n,
                        "direction": match p.dir { Direction::Recv => "in", Direction::Send => "out" },
                        "shape": p.shape.to_string(),
                        "channels": p.chans.iter().map(|c| &self.chans[*c].name).collect::<Vec<_>>(),
                    })).collect::<Vec<_>>(),
                })
            }).collect::<Vec<_>>(),
            "channels": self.chans.iter().map(|c| json!({
                "name": c.name,
                "kind": c.kind.to_string(),
                "stream": c.stream,
                "from": endpoint(&c.sender),
                "to": endpoint(&c.receiver),
            })).collect::<Vec<_>>(),
            "inputs": self.inputs.iter().map(|(n, s)| json!({"name": n, "shape": s.to_string()})).collect::<Vec<_>>(),
            "outputs": self.outputs.iter().map(|(n, s)| json!({"name": n, "shape": s.to_string()})).collect::<Vec<_>>(),
        })
    }

    /// Run with the deterministic cooperative scheduler.
    pub fn run(&self, inputs: &[(&str, Value)], seed: u64) -> Result<RunOutcome, RunError> {
        self.run_with(inputs, &RunConfig::cooperative(seed))
    }

    /// Run under an explicit configuration (scheduler mode, limits).
    pub fn run_with(
        &self,
        inputs: &[(&str, Value)],
        cfg: &RunConfig,
    ) -> Result<RunOutcome, RunError> {
        for (name, _) in inputs {
            if !self.inputs.iter().any(|(n, _)| n == name) {
                return Err(RunError::UnknownInput(name.to_string()));
            }
        }

        let chan_inits: Vec<ChanInit> = self
            .chans
            .iter()
            .map(|c| ChanInit {
                name: c.name.clone(),
                kind: c.kind.clone(),
                stream: c.stream,
            })
            .collect();

        let mut task_inits: Vec<TaskInit> = Vec::new();
        let mut bodies: Vec<(BodyFn, Arc<BTreeMap<String, PortRt>>)> = Vec::new();
        for t in &self.tasks {
            let marker = match &t.job_marker {
                None => None,
                Some((pin, pout)) => {
                    let cin = t.ports.get(pin).and_then(|p| p.chans.first()).copied();
                    let cout = t.ports.get(pout).and_then(|p| p.chans.first()).copied();
                    cin.zip(cout)
                }
            };
            task_inits.push(TaskInit {
                name: t.name.clone(),
                job_marker: marker,
            });
            bodies.push((t.body.clone(), Arc::new(t.ports.clone())));
        }

        // Boundary producers for external inputs.
        for (i, (name, shape)) in self.inputs.iter().enumerate() {
            let value = inputs
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| RunError::MissingInput(name.clone()))?;
            let port = PortRt {
                shape: shape.clone(),
                chans: self.input_chans[i].clone(),
                dir: Direction::Send,
            };
            let is_stream = matches!(shape, Shape::Stream(_));
            task_inits.push(TaskInit {
                name: format!("env/in/{name}"),
                job_marker: None,
            });
            bodies.push((
                super::process::body(move |ctx: Ctx| {
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
                }),
                Arc::new(BTreeMap::from([(String::from("out"), port)])),
            ));
        }

        // Boundary collectors for external outputs.
        let mut output_names = Vec::new();
        for (i, (name, shape)) in self.outputs.iter().enumerate() {
            let port = PortRt {
                shape: shape.clone(),
                chans: self.output_chans[i].clone(),
                dir: Direction::Recv,
            };
            let is_stream = matches!(shape, Shape::Stream(_));
            let slot = output_names.len();
            output_names.push(name.clone());
            task_inits.push(TaskInit {
                name: format!("env/out/{name}"),
                job_marker: None,
            });
            bodies.push((
                super::process::body(move |ctx: Ctx| async move {
                    let v = if is_stream {
                        let mut items = Vec::new();
                        while let StreamMsg::Data(v) = ctx.recv_msg("in").await? {
                            items.push(v);
                        }
                        Value::List(items)
                    } else {
                        ctx.recv_bundle("in").await?
                    };
                    ctx.deposit_output(slot, v);
                    Ok(())
                }),
                Arc::new(BTreeMap::from([(String::from("in"), port)])),
            ));
        }

        let eng = Engine::new(chan_inits, task_inits, output_names, cfg);
        let futs = bodies
            .into_iter()
            .enumerate()
            .map(|(task, (body, ports))| {
                Some(body(Ctx {
                    eng: eng.clone(),
                    task,
                    ports,
                }))
            })
            .collect();

        match cfg.mode {
            RunMode::Cooperative { seed } => run_cooperative(&eng, futs, seed, cfg.epoch_limit)?,
            RunMode::Threaded => run_threaded(&eng, futs)?,
        }
        Ok(collect_outcome(&eng))
    }
}
