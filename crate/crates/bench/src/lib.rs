//! Workload generation, trace replay and oracle-checked reporting for the
//! `dynmsf` estimators.

pub mod gen;
pub mod run;
pub mod trace;
