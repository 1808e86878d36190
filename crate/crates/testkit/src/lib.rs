//! Test support: random construction and session generators, and an
//! independent equation-solving oracle for the geometry kernel.
//!
//! Nothing in here calls the kernel's evaluator; the oracle works from the
//! raw step list with its own representation of lines (two points) and its
//! own intersection routes (parametric forms and the radical axis).

pub mod gen;
pub mod oracle;
pub mod script;
