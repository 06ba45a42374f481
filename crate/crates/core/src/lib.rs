//! Exact arithmetic for Chevalley and Steinberg groups of simply-laced type
//! over small commutative rings, with microweight representations used as an
//! equality oracle.

pub mod ring;
pub mod rootsys;
pub mod chevalley;
pub mod steinberg;
pub mod verify;
pub mod suites;
pub mod affine;
pub mod tulenbaev;
pub mod cli;
