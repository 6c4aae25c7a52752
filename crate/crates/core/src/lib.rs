//! Pseudo-spectral solver and verification harness for the periodic
//! Navier-Stokes-Cahn-Hilliard system with a logarithmic potential.

pub mod checks;
pub mod commands;
pub mod diagnostics;
pub mod dynamics;
pub mod envelope;
pub mod io;
pub mod oracle;
pub mod potential;
pub mod spectral;
