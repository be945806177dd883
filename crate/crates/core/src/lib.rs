//! Floating-point error workbench core.
//!
//! Expressions are parsed from math text or FPCore, measured against a
//! correctly rounded MPFR oracle on seeded samples, attributed to individual
//! operations, and rewritten by a rule-driven search. Numeric code is generic
//! over the target format through [`FloatFormat`]; binary64 is the default.

pub mod analysis;
pub mod error;
pub mod eval;
pub mod expr;
pub mod float;
pub mod oracle;
pub mod rewriter;
pub mod sampler;
pub mod session;

pub use error::{Error, Result};
pub use expr::{emit_fpcore, emit_latex, emit_math, parse_fpcore, parse_math, Expr, Op, Spec, SpecKey, VarRange};
pub use float::{bits, parse_f64, ulps, FloatFormat};

pub type Sample64 = sampler::Sample<f64>;
pub type Sample32 = sampler::Sample<f32>;
pub type ErrorReport64 = analysis::ErrorReport<f64>;
pub type ErrorReport32 = analysis::ErrorReport<f32>;
pub type LocalErrorTree64 = analysis::LocalErrorTree<f64>;
pub type LocalErrorTree32 = analysis::LocalErrorTree<f32>;
pub type Program64 = eval::Program<f64>;
pub type Program32 = eval::Program<f32>;
