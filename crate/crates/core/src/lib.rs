//! Symbolic prolongation engine for (2+1)-dimensional integrable spin
//! models: canonical differential-polynomial arithmetic, graded exterior
//! calculus with ideal-membership certificates, the closure procedure that
//! extracts prolongation constraints from a Backlund ansatz, a free Lie
//! algebra with Lyndon normalization plus sl(2,C) and loop-algebra targets,
//! and a seeded numeric oracle backing every symbolic-zero claim.

pub mod error;
pub mod expr;
pub mod exterior;
pub mod jet;
pub mod liealg;
pub mod oracle;
pub mod param;
pub mod parse;
pub mod problem;
pub mod prolong;
pub mod report;
pub mod runner;
pub mod symbol;
pub mod vec3;

pub use error::{ExprError, ExteriorError, JetError, OracleError, ProblemError, ProlongError};
pub use expr::{Binding, Expr, ExprCtx, FnInstance, RewriteRule, TermKey};
pub use param::{Coeff, ParamPow, ParamRing, SquareValue};
pub use symbol::{FnDecl, FnId, Symbol, SymbolId, SymbolRole, SymbolTable};
