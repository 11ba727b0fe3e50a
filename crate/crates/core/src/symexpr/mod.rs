//! Minimal computer-algebra kernel over t, x_1..x_n, ψ, ψ*.

mod calculus;
mod eval;
mod expr;
mod num;
mod parse;
mod simplify;
mod zero;

pub use calculus::{conjugate, desugar, differentiate, substitute, substitute_function, substitute_many, Lambda};
pub use eval::{eval_numeric, SamplePoint, DEFAULT_PSI_MIN};
pub use expr::{Expr, Func, Node, Var};
pub use num::{Num, Rat};
pub use parse::{parse, parse_with, ParseOptions, DEFAULT_FUNCTION_SYMBOLS};
pub use simplify::simplify;
pub use zero::{
    eval_with_scale, is_zero, multi_indices, numeric_zero, sample_value, SamplerConfig, Witness, ZeroVerdict,
    DEFAULT_SAMPLES, MAX_RETRIES,
};
