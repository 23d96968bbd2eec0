pub mod chain;
pub mod experiment;
pub mod fock;
pub mod io;
pub mod propagator;
pub mod recurrence;
pub mod synth;
pub mod weyl;
