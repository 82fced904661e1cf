//! Process-network refinement runtime with a KASUMI case study.
//!
//! The crate has three layers:
//!
//! * [`runtime`]: a CSP-inspired process-network engine with carriers
//!   (items, vectors, streams), rendezvous channels, higher-order process
//!   combinators, a deterministic seedable scheduler and communication-cost
//!   instrumentation.
//! * [`kasumi_ref`]: a sequential, bit-exact KASUMI reference built on
//!   [`words`].
//! * [`kasumi_net`]: four refined KASUMI designs realised as channel
//!   networks (pipelined or stream-folded, each in fine-grained and
//!   coarse-grained F-block variants), verified against the reference, with
//!   [`perf`] comparing their communication costs.

pub mod kasumi_net;
pub mod kasumi_ref;
pub mod perf;
pub mod runtime;
pub mod words;
