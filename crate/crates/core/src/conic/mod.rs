//! Cone programs over products of zero, nonnegative and second-order cones,
//! the builders used to assemble them and an embedded interior-point solver.

mod cones;
mod linalg;
mod program;
mod solver;

pub use program::{
    AffineExpr, BlockId, ComplexAffine, ConeBlock, ConeKind, ConicProgram, ProgramBuilder,
    ProgramError, ProgramStats, Sense, VarId,
};
pub use solver::{solve, Residuals, Solution, SolveStatus, SolverSettings};
