//! Chat-completion client with bounded concurrency and retry, plus a
//! [`PolicySet`](arena_core::PolicySet) that asks a model for every decision.

mod client;
mod config;
mod policy;

pub use client::{Gateway, GatewayError};
pub use config::{Adapter, GatewayConfig};
pub use policy::LlmPolicySet;
