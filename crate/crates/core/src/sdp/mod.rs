//! Small conic modelling layer and a primal-dual interior-point solver for
//! linear programs with semidefinite blocks.

pub mod embed;
pub mod expr;
pub mod ipm;
pub mod problem;

pub use embed::{embed_hermitian, hermitian_defect};
pub use expr::{LinExpr, Var};
pub use ipm::{solve, IterInfo, Kkt, SolveOptions, SolveReport, SolveStatus};
pub use problem::{CExpr, ComplexVecVar, ConeProblem, HermitianVar, Lmi, PsdBlock};
