//! Toolkit for PGA-family instruction sequences: parsing and rendering the
//! PGA, PGLD and PGLDdii dialects, projecting between them, extracting the
//! behaviour (thread) of a program, composing threads with services, and
//! deciding behavioural equivalence.

pub mod cli;
pub mod pga;
pub mod projections;
pub mod services;
pub mod syntax;
pub mod threads;
