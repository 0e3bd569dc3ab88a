pub mod harness;
pub mod io;
