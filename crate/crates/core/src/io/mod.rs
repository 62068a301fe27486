//! File formats: round records, inequality definitions and scenario configs.

pub mod config;
pub mod inequality;
pub mod records;
