//! Certifying Bell nonlocality of sources that are not i.i.d.
//!
//! A run of rounds is reduced to a G-string marking rounds that raise the
//! Bell expression. A settings-blind filter program selects a substring,
//! and a block-sampling test decides whether the selected rounds violate
//! the local bound with a quantified confidence.

pub mod bell;
pub mod bounds;
pub mod certification;
pub mod cli;
pub mod error;
pub mod io;
pub mod programs;
pub mod quantum;
pub mod seed;

pub use error::{Error, Result};
