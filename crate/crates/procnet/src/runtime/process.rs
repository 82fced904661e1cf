//! Process blueprints: atomic behaviours with typed ports, and composites
//! that wire children together. A composite is a static wiring plan; the
//! whole tree is elaborated into a flat network before execution.

use std::future::Future;
use std::pin::Pin;
use std::sync::Arc;

use super::engine::Ctx;
use super::errors::{BuildError, RunError};
use super::shape::Shape;

/// A named, typed port.
#[derive(Clone, Debug)]
pub struct PortDecl {
    pub name: String,
    pub shape: Shape,
}

pub type BodyFn =
    Arc<dyn Fn(Ctx) -> Pin<Box<dyn Future<Output = Result<(), RunError>> + Send>> + Send + Sync>;

/// Wrap an async closure as a process body.
pub fn body<F, Fut>(f: F) -> BodyFn
where
    F: Fn(Ctx) -> Fut + Send + Sync + 'static,
    Fut: Future<Output = Result<(), RunError>> + Send + 'static,
{
    Arc::new(move |ctx| Box::pin(f(ctx)))
}

/// Selects a port or a sub-carrier of a port (`path` steps into
/// vectors/groups).
#[derive(Clone, Debug)]
pub struct Sel {
    pub port: String,
    pub path: Vec<usize>,
}

impl Sel {
    pub fn port(name: &str) -> Sel {
        Sel {
            port: name.to_string(),
            path: Vec::new(),
        }
    }

    pub fn path(name: &str, path: &[usize]) -> Sel {
        Sel {
            port: name.to_string(),
            path: path.to_vec(),
        }
    }

    fn label(&self) -> String {
        let mut s = self.port.clone();
        for i in &self.path {
            s.push_str(&format!("[{i}]"));
        }
        s
    }
}

/// Connects a child output (sub-)carrier to a child input (sub-)carrier.
#[derive(Clone, Debug)]
pub struct Wire {
    pub from: (usize, Sel),
    pub to: (usize, Sel),
}

/// Connects a composite port to a child port.
#[derive(Clone, Debug)]
pub struct Bind {
    pub outer: Sel,
    pub inner: (usize, Sel),
}

pub(crate) struct CompositeDef {
    pub children: Vec<Process>,
    pub wires: Vec<Wire>,
    pub in_binds: Vec<Bind>,
    pub out_binds: Vec<Bind>,
}

pub(crate) enum ProcKind {
    Atomic {
        body: BodyFn,
        /// `(input port, output port)` delimiting one fold job, for
        /// in-flight instrumentation.
        job_marker: Option<(String, String)>,
    },
    Composite(CompositeDef),
}

/// A process blueprint: named input and output ports plus either an atomic
/// behaviour or an internal wiring of children.
pub struct Process {
    pub name: String,
    pub inputs: Vec<PortDecl>,
    pub outputs: Vec<PortDecl>,
    pub(crate) kind: ProcKind,
}

fn decls(ports: &[(&str, Shape)]) -> Vec<PortDecl> {
    ports
        .iter()
        .map(|(n, s)| PortDecl {
            name: n.to_string(),
            shape: s.clone(),
        })
        .collect()
}

impl Process {
    /// An atomic process: the behaviour communicates only via its ports.
    pub fn atomic<F, Fut>(
        name: &str,
        inputs: &[(&str, Shape)],
        outputs: &[(&str, Shape)],
        f: F,
    ) -> Process
    where
        F: Fn(Ctx) -> Fut + Send + Sync + 'static,
        Fut: Future<Output = Result<(), RunError>> + Send + 'static,
    {
        Process {
            name: name.to_string(),
            inputs: decls(inputs),
            outputs: decls(outputs),
            kind: ProcKind::Atomic {
                body: body(f),
                job_marker: None,
            },
        }
    }

    /// Atomic process whose receive on `job_in` / send on `job_out` delimit
    /// one in-flight fold job.
    pub fn atomic_with_job_marker<F, Fut>(
        name: &str,
        inputs: &[(&str, Shape)],
        outputs: &[(&str, Shape)],
        job_in: &str,
        job_out: &str,
        f: F,
    ) -> Process
    where
        F: Fn(Ctx) -> Fut + Send + Sync + 'static,
        Fut: Future<Output = Result<(), RunError>> + Send + 'static,
    {
        Process {
            name: name.to_string(),
            inputs: decls(inputs),
            outputs: decls(outputs),
            kind: ProcKind::Atomic {
                body: body(f),
                job_marker: Some((job_in.to_string(), job_out.to_string())),
            },
        }
    }

    pub fn rename(mut self, name: &str) -> Process {
        self.name = name.to_string();
        self
    }

    pub fn input_shape(&self, port: &str) -> Result<&Shape, BuildError> {
        self.inputs
            .iter()
            .find(|p| p.name == port)
            .map(|p| &p.shape)
            .ok_or_else(|| BuildError::NoSuchPort(format!("{}.{}", self.name, port)))
    }

    pub fn output_shape(&self, port: &str) -> Result<&Shape, BuildError> {
        self.outputs
            .iter()
            .find(|p| p.name == port)
            .map(|p| &p.shape)
            .ok_or_else(|| BuildError::NoSuchPort(format!("{}.{}", self.name, port)))
    }

    /// The sole input port, for single-input composition operators.
    pub fn sole_input(&self) -> Result<&PortDecl, BuildError> {
        if self.inputs.len() == 1 {
            Ok(&self.inputs[0])
        } else {
            Err(BuildError::Invalid(format!(
                "{} has {} inputs; feed requires exactly one",
                self.name,
                self.inputs.len()
            )))
        }
    }

    /// The sole output port, for single-output composition operators.
    pub fn sole_output(&self) -> Result<&PortDecl, BuildError> {
        if self.outputs.len() == 1 {
            Ok(&self.outputs[0])
        } else {
            Err(BuildError::Invalid(format!(
                "{} has {} outputs; feed requires exactly one",
                self.name,
                self.outputs.len()
            )))
        }
    }
}

/// Builder for composite processes.
pub struct Composite {
    name: String,
    inputs: Vec<PortDecl>,
    outputs: Vec<PortDecl>,
    children: Vec<Process>,
    wires: Vec<Wire>,
    in_binds: Vec<Bind>,
    out_binds: Vec<Bind>,
}

impl Composite {
    pub fn new(name: &str) -> Composite {
        Composite {
            name: name.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            children: Vec::new(),
            wires: Vec::new(),
            in_binds: Vec::new(),
            out_binds: Vec::new(),
        }
    }

    pub fn input(mut self, name: &str, shape: Shape) -> Composite {
        self.inputs.push(PortDecl {
            name: name.to_string(),
            shape,
        });
        self
    }

    pub fn output(mut self, name: &str, shape: Shape) -> Composite {
        self.outputs.push(PortDecl {
            name: name.to_string(),
            shape,
        });
        self
    }

    /// Add a child process; returns its index for wiring.
    pub fn add(&mut self, p: Process) -> usize {
        self.children.push(p);
        self.children.len() - 1
    }

    pub fn wire(&mut self, from: (usize, &str), to: (usize, &str)) {
        self.wires.push(Wire {
            from: (from.0, Sel::port(from.1)),
            to: (to.0, Sel::port(to.1)),
        });
    }

    pub fn wire_path(&mut self, from: (usize, &str, &[usize]), to: (usize, &str, &[usize])) {
        self.wires.push(Wire {
            from: (from.0, Sel::path(from.1, from.2)),
            to: (to.0, Sel::path(to.1, to.2)),
        });
    }

    pub fn bind_input(&mut self, outer: &str, inner: (usize, &str)) {
        self.in_binds.push(Bind {
            outer: Sel::port(outer),
            inner: (inner.0, Sel::port(inner.1)),
        });
    }

    pub fn bind_input_path(&mut self, outer: (&str, &[usize]), inner: (usize, &str, &[usize])) {
        self.in_binds.push(Bind {
            outer: Sel::path(outer.0, outer.1),
            inner: (inner.0, Sel::path(inner.1, inner.2)),
        });
    }

    pub fn bind_output(&mut self, inner: (usize, &str), outer: &str) {
        self.out_binds.push(Bind {
            outer: Sel::port(outer),
            inner: (inner.0, Sel::port(inner.1)),
        });
    }

    pub fn bind_output_path(&mut self, inner: (usize, &str, &[usize]), outer: (&str, &[usize])) {
        self.out_binds.push(Bind {
            outer: Sel::path(outer.0, outer.1),
            inner: (inner.0, Sel::path(inner.1, inner.2)),
        });
    }

    fn child(&self, i: usize) -> Result<&Process, BuildError> {
        self.children
            .get(i)
            .ok_or_else(|| BuildError::NoSuchChild(format!("#{i} of {}", self.name)))
    }

    fn sel_shape<'a>(
        &self,
        base: &'a Shape,
        sel: &Sel,
    ) -> Result<&'a Shape, BuildError> {
        base.sub_shape(&sel.path)
    }

    /// Validate shapes and multiplicity, then freeze into a `Process`.
    /// Completeness (every port wired) is not enforced here; unwired ports
    /// become dangling channels that deadlock at run time with a diagnostic.
    pub fn build(self) -> Result<Process, BuildError> {
        for p in self.inputs.iter().chain(&self.outputs) {
            p.shape.check_wellformed()?;
        }
        {
            let mut names: Vec<&str> = self.children.iter().map(|c| c.name.as_str()).collect();
            names.sort_unstable();
            for w in names.windows(2) {
                if w[0] == w[1] {
                    return Err(BuildError::DuplicateName(format!(
                        "{}/{}",
                        self.name, w[0]
                    )));
                }
            }
        }

        // Leaf fill maps: child input ports and composite outputs must each be
        // driven at most once; child output ports and composite inputs must
        // each feed at most one destination.
        let mut fills: std::collections::HashMap<String, Vec<bool>> = Default::default();
        let mut mark =
            |key: String, range: (usize, usize), total: usize| -> Result<(), BuildError> {
                let slots = fills.entry(key.clone()).or_insert_with(|| vec![false; total]);
                for s in &mut slots[range.0..range.0 + range.1] {
                    if *s {
                        return Err(BuildError::DoubleWired(key.clone()));
                    }
                    *s = true;
                }
                Ok(())
            };

        for w in &self.wires {
            let from_proc = self.child(w.from.0)?;
            let to_proc = self.child(w.to.0)?;
            let from_base = from_proc.output_shape(&w.from.1.port)?;
            let to_base = to_proc.input_shape(&w.to.1.port)?;
            let from_shape = self.sel_shape(from_base, &w.from.1)?;
            let to_shape = self.sel_shape(to_base, &w.to.1)?;
            if from_shape != to_shape {
                return Err(BuildError::ShapeMismatch {
                    from: format!("{}.{}", from_proc.name, w.from.1.label()),
                    from_shape: from_shape.to_string(),
                    to: format!("{}.{}", to_proc.name, w.to.1.label()),
                    to_shape: to_shape.to_string(),
                });
            }
            mark(
                format!("out:{}.{}", w.from.0, w.from.1.port),
                from_base.leaf_range(&w.from.1.path)?,
                from_base.leaf_count(),
            )?;
            mark(
                format!("in:{}.{}", w.to.0, w.to.1.port),
                to_base.leaf_range(&w.to.1.path)?,
                to_base.leaf_count(),
            )?;
        }

        for (binds, outer_ports, inner_is_input) in [
            (&self.in_binds, &self.inputs, true),
            (&self.out_binds, &self.outputs, false),
        ] {
            for b in binds {
                let outer_decl = outer_ports
                    .iter()
                    .find(|p| p.name == b.outer.port)
                    .ok_or_else(|| {
                        BuildError::NoSuchPort(format!("{}.{}", self.name, b.outer.port))
                    })?;
                let child = self.child(b.inner.0)?;
                let inner_base = if inner_is_input {
                    child.input_shape(&b.inner.1.port)?
                } else {
                    child.output_shape(&b.inner.1.port)?
                };
                let outer_shape = self.sel_shape(&outer_decl.shape, &b.outer)?;
                let inner_shape = self.sel_shape(inner_base, &b.inner.1)?;
                if outer_shape != inner_shape {
                    return Err(BuildError::ShapeMismatch {
                        from: format!("{}.{}", self.name, b.outer.label()),
                        from_shape: outer_shape.to_string(),
                        to: format!("{}.{}", child.name, b.inner.1.label()),
                        to_shape: inner_shape.to_string(),
                    });
                }
                let side = if inner_is_input { "in" } else { "out" };
                mark(
                    format!("{side}:{}.{}", b.inner.0, b.inner.1.port),
                    inner_base.leaf_range(&b.inner.1.path)?,
                    inner_base.leaf_count(),
                )?;
                let ext_side = if inner_is_input { "extin" } else { "extout" };
                mark(
                    format!("{ext_side}:{}", b.outer.port),
                    outer_decl.shape.leaf_range(&b.outer.path)?,
                    outer_decl.shape.leaf_count(),
                )?;
            }
        }

        Ok(Process {
            name: self.name,
            inputs: self.inputs,
            outputs: self.outputs,
            kind: ProcKind::Composite(CompositeDef {
                children: self.children,
                wires: self.wires,
                in_binds: self.in_binds,
                out_binds: self.out_binds,
            }),
        })
    }
}
