//! Simulator for generative-AI serving in an edge-cloud cellular network.
//!
//! Users in one cell send generation prompts. Each prompt is served either by
//! a small LLM at the base station's edge server or by a large LLM in the
//! cloud, then downloaded over a proportional-fair scheduled downlink. The
//! crate models the delay and quality of that choice and evaluates
//! offloading policies, chiefly an in-context-learning agent that asks an
//! LLM (or a deterministic mock) to decide from a prompt of past examples.
//!
//! ```text
//!  workload ──► radio (PF, capacity) ──► policy ──► delay ──► objective
//!                                          ▲                     │
//!                                          └──── feedback ◄──────┘
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod delay;
pub mod error;
pub mod icl;
pub mod llm_client;
pub mod objective;
pub mod policies;
pub mod profiles;
pub mod radio;
pub mod runner;
pub mod workload;

pub use error::{Result, SimError};
