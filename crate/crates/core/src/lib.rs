//! Bug-inducing commit identification from fix commits.
//!
//! A fix commit's modified methods are tracked back through history; a
//! commit that touched enough of them is a *work item*, and the newest work
//! item before the issue was reported is taken as the bug-inducing commit.
//! When no work item qualifies, blame-based candidates are filtered instead.

pub mod error;
pub mod eval;
pub mod git;
pub mod methods;
pub mod predict;
pub mod szz;
pub mod workitem;

pub use error::{Error, Result};
