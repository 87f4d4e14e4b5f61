//! Hash configuration compiler: AHCL front end, translation to interlaced
//! Petri nets, and reachability based analyses.

pub mod ahcl;
pub mod analyze;
pub mod behavior;
pub mod interop;
pub mod petri;
pub mod translate;
