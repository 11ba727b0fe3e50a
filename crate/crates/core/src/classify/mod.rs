//! Group classification: classifying-equation analysis, reduction to the
//! canonical tables, and the catalogue of extensions.

mod casebook;
mod engine;
mod quintuple;
mod routes;
mod selftest;

pub use casebook::{
    case, casebook, eta0_free, eta0_linear, eval_constant, param_value, theta_witnesses, CaseInstance, CaseRecord,
    ConstraintCheck, ConstraintStatus, Group, Ideal, Params, BOUNDARY_TOL,
};

pub use engine::{
    classify, is_linear, lemma2_check, normalize, subclass_classify, ClassificationResult, ClassifyOptions, Lemma2Verdict,
    Normalized, KERNEL_ONLY, SUBCLASS_ROWS,
};
pub use quintuple::{
    lemma1_canonicalize, matrix_rank, minor_conditions, satisfied_classifying_eqs, tilde, ClassifyingEq, EqBasis,
    Lemma1Form,
};
pub use selftest::{case_seed, casebook_selftest, check_instance, instances, GeneratorCheck, SelfTestOptions, SelfTestReport};
