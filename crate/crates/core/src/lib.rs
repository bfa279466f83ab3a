//! Requestor-optimal crowdsourcing mechanisms that are misreport- and
//! collusion-proof for two-type worker populations.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the worker-type model, cost and revenue families, the
//!   [`Mechanism`](model::Mechanism) type and every expected-utility routine.
//! * [`constraints`] turns a candidate task allocation into linear
//!   participation/incentive rows over the extra rewards, plus the
//!   allocation-only collusion predicate.
//! * [`lp`] is a small exact simplex with a deterministic tie-break.
//! * [`optimizer`] enumerates allocations and keeps the utility maximiser.
//! * [`adversary`] independently re-derives every utility by brute-force
//!   enumeration and searches for profitable deviations.
//! * [`experiment`] holds the JSON config, sweep and reproduction harness
//!   used by the `mechproof` binary.
//!
//! All model arithmetic is carried out over exact rationals ([`Q`]). Cost
//! evaluations at non-integer task counts that have no rational value fall
//! back to `f64` and are compared with the global tolerance [`EPSILON`].

pub mod adversary;
pub mod constraints;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod lp;
pub mod model;
pub mod optimizer;

pub use error::{Error, Result};
pub use exact::{Q, EPSILON};
