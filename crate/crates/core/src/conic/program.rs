use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("variable {var} is not declared (program has {n} variables)")]
    UnknownVariable { var: usize, n: usize },
    #[error("second-order cone block needs at least 2 rows, got {0}")]
    ConeTooSmall(usize),
    #[error("constant term must be nonnegative, got {0}")]
    NegativeConstant(f64),
    #[error("empty constraint block")]
    EmptyBlock,
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
}

/// Handle to a scalar decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a constraint block, in insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockId(pub(crate) usize);

impl BlockId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Sparse real affine expression `sum_j a_j x_j + c`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineExpr {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, 1.0)
    }

    pub fn term(v: VarId, coef: f64) -> Self {
        Self {
            terms: vec![(v.0, coef)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: VarId, coef: f64) -> &mut Self {
        self.terms.push((v.0, coef));
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    /// Adds `coef * other` in place.
    pub fn add_scaled(&mut self, other: &AffineExpr, coef: f64) -> &mut Self {
        self.terms
            .extend(other.terms.iter().map(|&(j, a)| (j, a * coef)));
        self.constant += coef * other.constant;
        self
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    /// Merged `(variable, coefficient)` pairs sorted by variable, zeros dropped.
    pub fn coefficients(&self) -> Vec<(usize, f64)> {
        let mut t = self.terms.clone();
        t.sort_by_key(|&(j, _)| j);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(t.len());
        for (j, a) in t {
            match out.last_mut() {
                Some(last) if last.0 == j => last.1 += a,
                _ => out.push((j, a)),
            }
        }
        out.retain(|&(_, a)| a != 0.0);
        out
    }

    /// True when the expression is identically zero.
    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.coefficients().is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>() + self.constant
    }

    fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|&(j, _)| j).max()
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.terms.iter().all(|&(_, a)| a.is_finite())
    }
}

impl From<VarId> for AffineExpr {
    fn from(v: VarId) -> Self {
        AffineExpr::var(v)
    }
}

impl From<f64> for AffineExpr {
    fn from(c: f64) -> Self {
        AffineExpr::constant(c)
    }
}

impl Add for AffineExpr {
    type Output = AffineExpr;
    fn add(mut self, rhs: AffineExpr) -> AffineExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for AffineExpr {
    type Output = AffineExpr;
    fn sub(mut self, rhs: AffineExpr) -> AffineExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Mul<f64> for AffineExpr {
    type Output = AffineExpr;
    fn mul(mut self, rhs: f64) -> AffineExpr {
        for t in &mut self.terms {
            t.1 *= rhs;
        }
        self.constant *= rhs;
        self
    }
}

impl Neg for AffineExpr {
    type Output = AffineExpr;
    fn neg(self) -> AffineExpr {
        self * -1.0
    }
}

/// Complex affine form carried as its real and imaginary parts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexAffine {
    pub re: AffineExpr,
    pub im: AffineExpr,
}

impl ComplexAffine {
    pub fn new(re: AffineExpr, im: AffineExpr) -> Self {
        Self { re, im }
    }

    pub fn real(re: AffineExpr) -> Self {
        Self {
            re,
            im: AffineExpr::zero(),
        }
    }

    /// `|form(x)|^2`.
    pub fn norm_sqr_at(&self, x: &[f64]) -> f64 {
        let a = self.re.eval(x);
        let b = self.im.eval(x);
        a * a + b * b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    /// All rows equal to zero.
    Zero,
    /// All rows nonnegative.
    NonNegative,
    /// `row_0 >= ||(row_1, ..., row_{m-1})||`.
    SecondOrder,
}

impl ConeKind {
    /// Distance-like violation of `values` against the cone; zero when inside.
    pub fn violation(self, values: &[f64]) -> f64 {
        match self {
            ConeKind::Zero => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            ConeKind::NonNegative => values.iter().fold(0.0, |m, &v| m.max(-v)),
            ConeKind::SecondOrder => {
                let tail = values[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                (tail - values[0]).max(0.0)
            }
        }
    }

    pub fn contains(self, values: &[f64], tol: f64) -> bool {
        self.violation(values) <= tol
    }
}

/// One constraint block: `rows(x) in cone`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub rows: Vec<AffineExpr>,
    pub group: &'static str,
}

impl ConeBlock {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.eval(x)).collect()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        self.kind.violation(&self.eval(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Linear objective over a product of zero, nonnegative and second-order cones.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub(crate) num_vars: usize,
    pub(crate) sense: Sense,
    pub(crate) objective: AffineExpr,
    pub(crate) blocks: Vec<ConeBlock>,
}

/// Size summary of a program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramStats {
    pub variables: usize,
    pub blocks: usize,
    pub rows: usize,
    pub soc_blocks: usize,
    pub soc_dimension_total: usize,
    pub blocks_by_group: Vec<(&'static str, usize)>,
}

impl ProgramStats {
    pub fn group_count(&self, group: &str) -> usize {
        self.blocks_by_group
            .iter()
            .find(|(g, _)| *g == group)
            .map_or(0, |&(_, c)| c)
    }
}

impl ConicProgram {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &AffineExpr {
        &self.objective
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn block(&self, id: BlockId) -> &ConeBlock {
        &self.blocks[id.0]
    }

    pub fn num_rows(&self) -> usize {
        self.blocks.iter().map(ConeBlock::dim).sum()
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Largest cone violation over all blocks at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.violation(x))
            .fold(0.0, f64::max)
    }

    pub fn stats(&self) -> ProgramStats {
        let mut groups: Vec<(&'static str, usize)> = Vec::new();
        for b in &self.blocks {
            match groups.iter_mut().find(|(g, _)| *g == b.group) {
                Some(e) => e.1 += 1,
                None => groups.push((b.group, 1)),
            }
        }
        let soc: Vec<&ConeBlock> = self
            .blocks
            .iter()
            .filter(|b| b.kind == ConeKind::SecondOrder)
            .collect();
        ProgramStats {
            variables: self.num_vars,
            blocks: self.blocks.len(),
            rows: self.num_rows(),
            soc_blocks: soc.len(),
            soc_dimension_total: soc.iter().map(|b| b.dim()).sum(),
            blocks_by_group: groups,
        }
    }
}

/// Debug dump, one block per line: `SOC m | row; row; ...`. Not a stable format.
impl fmt::Display for ConicProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sense = match self.sense {
            Sense::Minimize => "min",
            Sense::Maximize => "max",
        };
        writeln!(f, "{sense} {} | vars {}", fmt_expr(&self.objective), self.num_vars)?;
        for b in &self.blocks {
            let tag = match b.kind {
                ConeKind::Zero => "ZERO",
                ConeKind::NonNegative => "NONNEG",
                ConeKind::SecondOrder => "SOC",
            };
            let rows: Vec<String> = b.rows.iter().map(fmt_expr).collect();
            writeln!(f, "{tag} {} | {} | {}", b.dim(), b.group, rows.join("; "))?;
        }
        Ok(())
    }
}

fn fmt_expr(e: &AffineExpr) -> String {
    let mut parts: Vec<String> = e
        .coefficients()
        .iter()
        .map(|&(j, a)| format!("{a:+.6e}*x{j}"))
        .collect();
    if e.constant != 0.0 || parts.is_empty() {
        parts.push(format!("{:+.6e}", e.constant));
    }
    parts.join(" ")
}

/// Incremental construction of a [`ConicProgram`].
#[derive(Debug, Clone)]
pub struct ProgramBuilder {
    num_vars: usize,
    sense: Sense,
    objective: AffineExpr,
    blocks: Vec<ConeBlock>,
    group: &'static str,
}

impl Default for ProgramBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self {
            num_vars: 0,
            sense: Sense::Minimize,
            objective: AffineExpr::zero(),
            blocks: Vec::new(),
            group: "default",
        }
    }

    pub fn add_var(&mut self) -> VarId {
        self.num_vars += 1;
        VarId(self.num_vars - 1)
    }

    pub fn add_vars(&mut self, count: usize) -> Vec<VarId> {
        (0..count).map(|_| self.add_var()).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Label attached to blocks added from now on.
    pub fn set_group(&mut self, group: &'static str) {
        self.group = group;
    }

    pub fn minimize(&mut self, objective: AffineExpr) {
        self.sense = Sense::Minimize;
        self.objective = objective;
    }

    pub fn maximize(&mut self, objective: AffineExpr) {
        self.sense = Sense::Maximize;
        self.objective = objective;
    }

    fn check(&self, e: &AffineExpr) -> Result<(), ProgramError> {
        if let Some(j) = e.max_var() {
            if j >= self.num_vars {
                return Err(ProgramError::UnknownVariable {
                    var: j,
                    n: self.num_vars,
                });
            }
        }
        if !e.is_finite() {
            return Err(ProgramError::NonFinite("affine row"));
        }
        Ok(())
    }

    /// Adds `rows(x) in kind`.
    pub fn add_block(
        &mut self,
        kind: ConeKind,
        rows: Vec<AffineExpr>,
    ) -> Result<BlockId, ProgramError> {
        if rows.is_empty() {
            return Err(ProgramError::EmptyBlock);
        }
        if kind == ConeKind::SecondOrder && rows.len() < 2 {
            return Err(ProgramError::ConeTooSmall(rows.len()));
        }
        for r in &rows {
            self.check(r)?;
        }
        self.blocks.push(ConeBlock {
            kind,
            rows,
            group: self.group,
        });
        Ok(BlockId(self.blocks.len() - 1))
    }

    pub fn add_nonneg(&mut self, expr: AffineExpr) -> Result<BlockId, ProgramError> {
        self.add_block(ConeKind::NonNegative, vec![expr])
    }

    pub fn add_equality(&mut self, expr: AffineExpr) -> Result<BlockId, ProgramError> {
        self.add_block(ConeKind::Zero, vec![expr])
    }

    /// `||tail(x)|| <= head(x)`.
    pub fn add_soc(
        &mut self,
        head: AffineExpr,
        tail: Vec<AffineExpr>,
    ) -> Result<BlockId, ProgramError> {
        let mut rows = Vec::with_capacity(tail.len() + 1);
        rows.push(head);
        rows.extend(tail);
        self.add_block(ConeKind::SecondOrder, rows)
    }

    /// Encodes `sum_j |form_j|^2 + constant^2 <= bound` as the rotated cone
    /// `||(forms, constant, (bound - 1)/2)|| <= (bound + 1)/2`.
    ///
    /// Complex forms contribute a real and an imaginary row; rows that are
    /// identically zero (including a zero constant) are left out.
    pub fn add_quadratic_upper_bound(
        &mut self,
        forms: &[ComplexAffine],
        constant: f64,
        bound: AffineExpr,
    ) -> Result<BlockId, ProgramError> {
        self.add_quadratic_upper_bound_balanced(forms, constant, bound, 1.0)
    }

    /// As [`add_quadratic_upper_bound`](Self::add_quadratic_upper_bound) with
    /// the product split as `(bound / alpha) * alpha`:
    /// `||(forms, constant, (bound/alpha - alpha)/2)|| <= (bound/alpha + alpha)/2`.
    /// Choosing `alpha` near `sqrt(bound)` keeps the cone entries balanced.
    pub fn add_quadratic_upper_bound_balanced(
        &mut self,
        forms: &[ComplexAffine],
        constant: f64,
        bound: AffineExpr,
        alpha: f64,
    ) -> Result<BlockId, ProgramError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ProgramError::NonFinite("balancing scale"));
        }
        if !constant.is_finite() {
            return Err(ProgramError::NonFinite("constant"));
        }
        if constant < 0.0 {
            return Err(ProgramError::NegativeConstant(constant));
        }
        let scaled = bound * (1.0 / alpha);
        let mut head = scaled.clone() * 0.5;
        head.add_constant(0.5 * alpha);
        let mut tail = Vec::with_capacity(2 * forms.len() + 2);
        for f in forms {
            for part in [&f.re, &f.im] {
                if !part.is_zero() {
                    tail.push(part.clone());
                }
            }
        }
        if constant > 0.0 {
            tail.push(AffineExpr::constant(constant));
        }
        let mut last = scaled * 0.5;
        last.add_constant(-0.5 * alpha);
        tail.push(last);
        self.add_soc(head, tail)
    }

    /// Encodes `t <= (prod_k r_k)^(1/N)` with a binary tree of hyperbolic
    /// constraints `u^2 <= a b`, each written `||(2u, a - b)|| <= a + b`.
    /// Leaves beyond `N` are padded with `t` itself. Returns the blocks added.
    pub fn add_geometric_mean_epigraph(
        &mut self,
        r: &[VarId],
        t: VarId,
    ) -> Result<Vec<BlockId>, ProgramError> {
        for v in r.iter().chain(std::iter::once(&t)) {
            self.check(&AffineExpr::var(*v))?;
        }
        if r.is_empty() {
            return Err(ProgramError::EmptyBlock);
        }
        if r.len() == 1 {
            let id = self.add_nonneg(AffineExpr::var(r[0]) - AffineExpr::var(t))?;
            return Ok(vec![id]);
        }
        let leaves = r.len().next_power_of_two();
        let mut level: Vec<VarId> = r.to_vec();
        level.resize(leaves, t);
        let mut ids = Vec::with_capacity(leaves - 1);
        while level.len() > 1 {
            let is_root = level.len() == 2;
            let mut next = Vec::with_capacity(level.len() / 2);
            for pair in level.chunks(2) {
                let u = if is_root { t } else { self.add_var() };
                let (a, b) = (AffineExpr::var(pair[0]), AffineExpr::var(pair[1]));
                let id = self.add_soc(
                    a.clone() + b.clone(),
                    vec![AffineExpr::term(u, 2.0), a - b],
                )?;
                ids.push(id);
                next.push(u);
            }
            level = next;
        }
        Ok(ids)
    }

    pub fn build(self) -> ConicProgram {
        ConicProgram {
            num_vars: self.num_vars,
            sense: self.sense,
            objective: self.objective,
            blocks: self.blocks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bound_unit_disc() {
        let mut b = ProgramBuilder::new();
        let x = b.add_var();
        let id = b
            .add_quadratic_upper_bound(
                &[ComplexAffine::real(AffineExpr::var(x))],
                0.0,
                AffineExpr::constant(1.0),
            )
            .unwrap();
        let p = b.build();
        for (v, inside) in [(0.5, true), (1.0, true), (-0.99, true), (1.01, false), (-2.0, false)] {
            assert_eq!(p.block(id).violation(&[v]) <= 1e-12, inside, "x = {v}");
        }
    }

    #[test]
    fn quadratic_bound_constant_only() {
        let mut b = ProgramBuilder::new();
        let s = b.add_var();
        let id = b
            .add_quadratic_upper_bound(&[], 1.5, AffineExpr::var(s))
            .unwrap();
        let p = b.build();
        assert!(p.block(id).violation(&[2.25]) <= 1e-12);
        assert!(p.block(id).violation(&[3.0]) <= 1e-12);
        assert!(p.block(id).violation(&[2.2]) > 0.0);
        assert_eq!(
            ProgramBuilder::new().add_quadratic_upper_bound(&[], -1.0, AffineExpr::zero()),
            Err(ProgramError::NegativeConstant(-1.0))
        );
    }

    #[test]
    fn geomean_block_counts() {
        for (n, blocks) in [(1, 1), (2, 1), (3, 3), (4, 3), (5, 7), (8, 7)] {
            let mut b = ProgramBuilder::new();
            let r = b.add_vars(n);
            let t = b.add_var();
            let ids = b.add_geometric_mean_epigraph(&r, t).unwrap();
            assert_eq!(ids.len(), blocks, "n = {n}");
            // internal nodes other than the root are new variables
            assert_eq!(b.num_vars(), n + 1 + blocks.saturating_sub(1));
        }
    }

    #[test]
    fn unknown_variable_rejected() {
        let mut b = ProgramBuilder::new();
        let err = b.add_nonneg(AffineExpr::var(VarId(3))).unwrap_err();
        assert_eq!(err, ProgramError::UnknownVariable { var: 3, n: 0 });
        let x = b.add_var();
        assert_eq!(
            b.add_block(ConeKind::SecondOrder, vec![AffineExpr::var(x)]),
            Err(ProgramError::ConeTooSmall(1))
        );
    }

    #[test]
    fn dump_has_one_line_per_block() {
        let mut b = ProgramBuilder::new();
        let x = b.add_var();
        b.add_soc(AffineExpr::var(x), vec![3.0.into(), 4.0.into()]).unwrap();
        b.add_nonneg(AffineExpr::var(x)).unwrap();
        b.minimize(AffineExpr::var(x));
        let text = b.build().to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("SOC 3 |"));
        assert!(lines[2].starts_with("NONNEG 1 |"));
    }
}
