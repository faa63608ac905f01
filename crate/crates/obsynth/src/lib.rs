//! Text formats, the DIMACS bridge, external solvers and the command-line
//! front end around [`obsynth_core`].

pub mod format;
pub mod dimacs;
pub mod external;
pub mod constraints;
pub mod document;
pub mod cli;
