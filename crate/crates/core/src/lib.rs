pub(crate) mod linalg;
pub mod model;
pub mod recurrence;
pub mod tolerances;
pub mod polyroots;
pub mod fock_oracle;
pub mod jacobi;
pub mod electrostatics;
pub mod sumrules;
pub mod cli;
