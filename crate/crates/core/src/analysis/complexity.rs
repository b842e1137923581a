//! Per-iteration size and cost estimates of the interior-point subproblem.

use crate::mma::Variant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityEstimate {
    pub constraint_count: u64,
    pub variable_count: u64,
    pub soc_dimension_total: u64,
    /// `ceil(sqrt(constraints))`, the usual interior-point iteration bound.
    pub iteration_bound: u64,
}

impl ComplexityEstimate {
    /// Per-iteration cost proxy `variables^2 * soc_dimension`.
    pub fn flops(&self) -> f64 {
        (self.variable_count as f64).powi(2) * self.soc_dimension_total as f64
    }
}

fn ceil_count(x: f64) -> u64 {
    // formulas with decimal coefficients land a hair off integers
    let r = x.round();
    let v = if (x - r).abs() < 1e-6 { r } else { x.ceil() };
    v.max(0.0) as u64
}

/// Constraint, variable and cone-dimension counts for `N` users, `T`
/// antennas and `c` geometric-mean blocks.
pub fn complexity_estimate(users: usize, antennas: usize, c: usize, variant: Variant) -> ComplexityEstimate {
    let n = users as f64;
    let nt = n * antennas as f64;
    let c = c as f64;
    let (constraints, variables, soc) = match variant {
        Variant::Cnoma => (
            0.5 * n.powi(3) + 0.5 * n * n + 2.0 * n + c,
            3.5 * n * n + 1.5 * n + 2.0 * nt + c - 1.0,
            1.833 * n.powi(3) + 3.0 * n * n + 8.0 * n + nt + 3.0 * c - 5.83333,
        ),
        Variant::Anoma => (
            0.5 * n.powi(3) - 0.5 * n * n + 3.0 * n + c,
            2.0 * n * n + 3.0 * n + 2.0 * nt + c - 1.0,
            1.5 * n.powi(3) - n * n + 10.5 * n + nt + 3.0 * c - 4.0,
        ),
    };
    let constraint_count = ceil_count(constraints);
    ComplexityEstimate {
        constraint_count,
        variable_count: ceil_count(variables),
        soc_dimension_total: ceil_count(soc),
        iteration_bound: (constraint_count as f64).sqrt().ceil() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_examples() {
        assert_eq!(complexity_estimate(3, 3, 0, Variant::Cnoma).constraint_count, 24);
        assert_eq!(complexity_estimate(3, 3, 0, Variant::Anoma).constraint_count, 18);
        assert_eq!(complexity_estimate(3, 3, 0, Variant::Cnoma).iteration_bound, 5);
    }

    #[test]
    fn full_formulation_costs_more() {
        for n in 2..=8 {
            for t in [4, 8] {
                let a = complexity_estimate(n, t, 10, Variant::Anoma);
                let c = complexity_estimate(n, t, 10, Variant::Cnoma);
                assert!(c.flops() >= a.flops(), "N={n} T={t}");
            }
        }
    }
}
