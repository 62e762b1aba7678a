//! Command-line front end for the fractional viscoelastic wave solver:
//! config parsing/validation, artifact export, and the acceptance checklist
//! shared between `fracwave check` and the `acceptance` test target.

pub mod checks;
pub mod config;
pub mod export;
