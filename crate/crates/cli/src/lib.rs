//! File formats, verification and benchmark suites and the command-line
//! front end for the congested clique Steiner tree simulator.

pub mod bench;
pub mod record;
pub mod solve;
pub mod stp;
pub mod verify;
