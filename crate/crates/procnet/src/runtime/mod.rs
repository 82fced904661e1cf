//! A CSP-inspired process-network runtime.
//!
//! Values move over typed rendezvous channels grouped into *carriers*: an
//! item is one channel, a vector communicates its elements over independent
//! parallel channels, and a stream sends a collection sequentially as tagged
//! `Data`/`Eot` messages on a single channel. Processes are blueprints with
//! named, shaped ports; composites wire children over hidden carriers and the
//! whole tree is elaborated into a flat static graph before execution.
//!
//! Execution is driven either by a deterministic single-threaded cooperative
//! scheduler (seedable run order, epoch-based cost accounting) or by an
//! optional one-thread-per-process mode. Networks here are deterministic
//! dataflow: outputs are identical for every seed and in both modes.
//!
//! ```
//! use procnet::runtime::combinators::{lift1, smap};
//! use procnet::runtime::{run_process, Kind, Value};
//!
//! let double = lift1("double", Kind::W16, Kind::W16, |v| Value::W16(v.as_w16() * 2));
//! let map = smap(double).unwrap();
//! let out = run_process(&map, &[("in", Value::from_w16s([1, 2, 3]))], 0).unwrap();
//! assert_eq!(out.outputs["out"], Value::from_w16s([2, 4, 6]));
//! ```

pub mod combinators;
mod engine;
mod errors;
mod network;
mod process;
mod shape;
mod value;

pub use engine::{ChanId, CostReport, Ctx, PortRt, RunConfig, RunMode, RunOutcome, TaskId, Timeline};
pub use errors::{BlockedPort, BuildError, DeadlockReport, Direction, RunError};
pub use network::{ChanDecl, Dangling, Network};
pub use process::{body, Bind, BodyFn, Composite, PortDecl, Process, Sel, Wire};
pub use shape::{Leaf, Shape};
pub use value::{Kind, StreamMsg, Value};

/// Convenience harness: wrap a process with producers for every input and
/// run it, returning the collected outputs.
pub fn run_process(
    proc_: &Process,
    inputs: &[(&str, Value)],
    seed: u64,
) -> Result<RunOutcome, RunError> {
    let net = Network::from_process(proc_)?;
    net.run(inputs, seed)
}
