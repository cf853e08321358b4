//! Sketched approximate matrix multiplication, exact and sketched ridge
//! regression, and the diagnostic quantities the guarantees are stated in.

use alloc::format;
use alloc::vec::Vec;

// Needed for sqrt/ln/etc. in no_std builds; shadowed by std's inherent
// methods when tests link std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::decomp::{qr_thin, singular_values, solve_spd};
use crate::error::{Error, Result};
use crate::matrix::{gram, matmul_tn, matvec, vec_norm, DenseMatrix};
use crate::partition::PartitionedMatrix;
use crate::sketch::{SketchDescriptor, SketchOperator};

/// Ridge regression instance `min_x ||A x - b||^2 + lambda ||x||^2` with the
/// data row-partitioned and `b` partitioned identically.
#[derive(Debug, Clone)]
pub struct RidgeProblem {
    a: PartitionedMatrix,
    b: PartitionedMatrix,
    lambda: f64,
}

impl RidgeProblem {
    pub fn new(a: PartitionedMatrix, b: &[f64], lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument {
                op: "RidgeProblem::new",
                reason: format!("lambda must be positive and finite, got {lambda}"),
            });
        }
        if b.len() != a.total_rows() {
            return Err(Error::ShapeMismatch {
                op: "RidgeProblem::new",
                left: (a.total_rows(), a.cols()),
                right: (b.len(), 1),
            });
        }
        let b = PartitionedMatrix::from_vector(b, &a.block_rows())?;
        Ok(Self { a, b, lambda })
    }

    pub fn a(&self) -> &PartitionedMatrix {
        &self.a
    }

    pub fn b(&self) -> &PartitionedMatrix {
        &self.b
    }

    pub fn b_vector(&self) -> Vec<f64> {
        self.b.flatten().into_data()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a.total_rows(), self.a.cols())
    }

    /// The unsketched objective `f(x) = ||A x - b||^2 + lambda ||x||^2`,
    /// evaluated blockwise in a fixed order.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.a.cols() {
            return Err(Error::ShapeMismatch {
                op: "objective",
                left: (self.a.total_rows(), self.a.cols()),
                right: (x.len(), 1),
            });
        }
        let mut resid_sq = 0.0;
        for (a_j, b_j) in self.a.blocks().iter().zip(self.b.blocks()) {
            let ax = matvec(a_j, x)?;
            for (axi, bi) in ax.iter().zip(b_j.data()) {
                let r = axi - bi;
                resid_sq += r * r;
            }
        }
        let xn = vec_norm(x);
        Ok(resid_sq + self.lambda * xn * xn)
    }

    /// Residual `r = b - A x` as a partitioned column.
    fn residual(&self, x: &[f64]) -> Result<PartitionedMatrix> {
        let mut blocks = Vec::with_capacity(self.a.num_blocks());
        for (a_j, b_j) in self.a.blocks().iter().zip(self.b.blocks()) {
            let ax = matvec(a_j, x)?;
            let data: Vec<f64> = b_j.data().iter().zip(&ax).map(|(b, v)| b - v).collect();
            blocks.push(DenseMatrix::from_vec_unchecked(a_j.rows(), 1, data));
        }
        PartitionedMatrix::from_blocks(blocks)
    }
}

/// A ridge solution; `objective` always holds the UNsketched `f(x)` so
/// sketched and exact solutions compare directly.
#[derive(Debug, Clone)]
pub struct RidgeSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub is_sketched: bool,
    pub sketch: Option<SketchDescriptor>,
}

/// Exact solve via the normal equations `(A^T A + lambda I) x = A^T b`.
pub fn ridge_exact(p: &RidgeProblem) -> Result<RidgeSolution> {
    let flat = p.a.flatten();
    let g = gram(&flat).add_scaled_identity(p.lambda)?;
    let rhs = matmul_tn(&flat, &p.b.flatten())?;
    let x = solve_spd(&g, &rhs)?.into_data();
    let objective = p.objective(&x)?;
    Ok(RidgeSolution {
        x,
        objective,
        is_sketched: false,
        sketch: None,
    })
}

/// Sketched solve: `((SA)^T SA + lambda I) x = (SA)^T S b`. The reported
/// objective is the unsketched `f(x_hat)` — the quantity the (1 + eps)
/// guarantee bounds.
pub fn ridge_sketched(s: &SketchOperator, p: &RidgeProblem) -> Result<RidgeSolution> {
    let sa = s.apply(&p.a)?;
    let sb = s.apply(&p.b)?;
    let g = gram(&sa).add_scaled_identity(p.lambda)?;
    let rhs = matmul_tn(&sa, &sb)?;
    let x = solve_spd(&g, &rhs)?.into_data();
    let objective = p.objective(&x)?;
    Ok(RidgeSolution {
        x,
        objective,
        is_sketched: true,
        sketch: Some(s.descriptor()),
    })
}

/// Sketched product `(SW)^T (SY)`: two applies and one small `m x p`
/// product, never touching the full-height data again.
pub fn approx_matmul(
    s: &SketchOperator,
    w: &PartitionedMatrix,
    y: &PartitionedMatrix,
) -> Result<DenseMatrix> {
    if w.block_rows() != y.block_rows() {
        return Err(Error::PartitionMismatch {
            expected: w.block_rows(),
            found: y.block_rows(),
        });
    }
    let sw = s.apply(w)?;
    let sy = s.apply(y)?;
    matmul_tn(&sw, &sy)
}

/// Relative spectral error `||P_hat - W^T Y|| / (||W|| ||Y||)` of an
/// approximate product.
pub fn matmul_error(
    w: &PartitionedMatrix,
    y: &PartitionedMatrix,
    p_hat: &DenseMatrix,
) -> Result<f64> {
    if p_hat.shape() != (w.cols(), y.cols()) {
        return Err(Error::ShapeMismatch {
            op: "matmul_error",
            left: (w.cols(), y.cols()),
            right: p_hat.shape(),
        });
    }
    let wf = w.flatten();
    let yf = y.flatten();
    if wf.is_zero() {
        return Err(Error::ZeroMatrix { op: "matmul_error" });
    }
    if yf.is_zero() {
        return Err(Error::ZeroMatrix { op: "matmul_error" });
    }
    let exact = matmul_tn(&wf, &yf)?;
    let err = singular_values(&p_hat.sub(&exact)?)?[0];
    let nw = singular_values(&wf)?[0];
    let ny = singular_values(&yf)?[0];
    Ok(err / (nw * ny))
}

/// Embedding deviation `||(SU)^T (SU) - I||_2` for an orthonormal `U`.
pub fn embedding_deviation(s: &SketchOperator, u: &PartitionedMatrix) -> Result<f64> {
    let flat = u.flatten();
    let d = flat.cols();
    let deviation = gram(&flat)
        .sub(&DenseMatrix::identity(d))?
        .frobenius_norm();
    if deviation > 1e-8 * (d as f64).sqrt().max(1.0) {
        return Err(Error::NotOrthonormal { deviation });
    }
    let su = s.apply(u)?;
    let delta = gram(&su).sub(&DenseMatrix::identity(d))?;
    Ok(singular_values(&delta)?[0])
}

/// The two structural quantities the ridge guarantee rests on, plus the
/// epsilon-free scale of the second threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StructuralConditions {
    /// `||U_1^T S^T S U_1 - U_1^T U_1||_2`; the guarantee wants <= 1/4.
    pub lhs9: f64,
    /// `||U_1^T S^T S r* - U_1^T r*||_2`.
    pub lhs10: f64,
    /// `sqrt(f(x*)/2)`; multiply by `sqrt(eps)` for the lhs10 threshold.
    pub rhs10_unit: f64,
}

/// Evaluate the structural conditions for a sketch on a ridge problem.
///
/// `U_1` is the first `N` rows of an orthobasis of the stacked matrix
/// `[A; sqrt(lambda) I_d]`, and `r* = b - A x*`.
pub fn structural_conditions(
    s: &SketchOperator,
    p: &RidgeProblem,
) -> Result<StructuralConditions> {
    let (n, d) = p.dims();
    let flat = p.a.flatten();
    let stacked = flat.vstack(&DenseMatrix::identity(d).scaled(p.lambda.sqrt()))?;
    let (q, _) = qr_thin(&stacked)?;
    let u1 = q.submatrix(0, n, 0, d);
    let u1_parts = p.a.partition_like(&u1)?;

    let star = ridge_exact(p)?;
    let r_star = p.residual(&star.x)?;

    let su1 = s.apply(&u1_parts)?;
    let sr = s.apply(&r_star)?;

    let lhs9_mat = matmul_tn(&su1, &su1)?.sub(&gram(&u1))?;
    let lhs9 = singular_values(&lhs9_mat)?[0];

    let exact_cross = matmul_tn(&u1, &r_star.flatten())?;
    let sketch_cross = matmul_tn(&su1, &sr)?;
    let lhs10 = sketch_cross.sub(&exact_cross)?.frobenius_norm();

    Ok(StructuralConditions {
        lhs9,
        lhs10,
        rhs10_unit: (star.objective / 2.0).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::PartitionedMatrix;
    use crate::random::{gaussian_matrix, RandomSource};
    use crate::sketch::identity_blocks;

    fn toy_problem() -> RidgeProblem {
        let a = gaussian_matrix(50, 5, 1.0, RandomSource::from_seed(21)).unwrap();
        let parts = PartitionedMatrix::split_even(&a, 5).unwrap();
        let b = crate::random::gaussian_vector(50, 1.0, RandomSource::from_seed(22)).unwrap();
        RidgeProblem::new(parts, &b, 0.3).unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero_solution_and_objective() {
        let a = gaussian_matrix(12, 3, 1.0, RandomSource::from_seed(1)).unwrap();
        let parts = PartitionedMatrix::split_even(&a, 3).unwrap();
        let p = RidgeProblem::new(parts, &[0.0; 12], 1.0).unwrap();
        let sol = ridge_exact(&p).unwrap();
        assert!(sol.x.iter().all(|&v| v == 0.0));
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn identity_design_has_closed_form() {
        // A = I_2, b = (2,2), lambda = 1: x* = b/(1+lambda) = (1,1), f = 4.
        let parts = PartitionedMatrix::split(&DenseMatrix::identity(2), &[1, 1]).unwrap();
        let p = RidgeProblem::new(parts, &[2.0, 2.0], 1.0).unwrap();
        let sol = ridge_exact(&p).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
        assert!((sol.objective - 4.0).abs() < 1e-12);
    }

    #[test]
    fn first_order_optimality_on_random_problem() {
        let p = toy_problem();
        let sol = ridge_exact(&p).unwrap();
        // grad = 2 A^T (A x - b) + 2 lambda x must vanish.
        let flat = p.a().flatten();
        let ax = matvec(&flat, &sol.x).unwrap();
        let b = p.b_vector();
        let resid: Vec<f64> = ax.iter().zip(&b).map(|(a, bb)| a - bb).collect();
        let mut grad = matvec(&flat.transpose(), &resid).unwrap();
        for (g, x) in grad.iter_mut().zip(&sol.x) {
            *g = 2.0 * *g + 2.0 * p.lambda() * x;
        }
        let atb = matvec(&flat.transpose(), &b).unwrap();
        assert!(vec_norm(&grad) <= 1e-8 * vec_norm(&atb));
    }

    #[test]
    fn identity_sketch_reproduces_exact_solution() {
        let p = toy_problem();
        let s = identity_blocks(&p.a().block_rows());
        let exact = ridge_exact(&p).unwrap();
        let sketched = ridge_sketched(&s, &p).unwrap();
        let ratio = sketched.objective / exact.objective;
        assert!((ratio - 1.0).abs() < 1e-10);
        for (a, b) in exact.x.iter().zip(&sketched.x) {
            assert_eq!(a, b, "identity sketch must give a bit-equal solve");
        }
        assert!(sketched.is_sketched);
    }

    #[test]
    fn sketched_objective_dominates_exact_optimum() {
        let p = toy_problem();
        let exact = ridge_exact(&p).unwrap();
        for trial in 0..3u64 {
            let s = crate::sketch::build_dense_gaussian(
                20,
                50,
                RandomSource::new(500 + trial, 0),
            )
            .unwrap();
            let sk = ridge_sketched(&s, &p).unwrap();
            assert!(sk.objective >= exact.objective * (1.0 - 1e-10));
        }
    }

    #[test]
    fn approx_matmul_identity_is_bit_equal_to_exact() {
        let w = PartitionedMatrix::split_even(
            &gaussian_matrix(30, 4, 1.0, RandomSource::from_seed(31)).unwrap(),
            3,
        )
        .unwrap();
        let y = PartitionedMatrix::split_even(
            &gaussian_matrix(30, 2, 1.0, RandomSource::from_seed(32)).unwrap(),
            3,
        )
        .unwrap();
        let s = identity_blocks(&w.block_rows());
        let approx = approx_matmul(&s, &w, &y).unwrap();
        let exact = matmul_tn(&w.flatten(), &y.flatten()).unwrap();
        assert_eq!(approx.data(), exact.data());
        assert_eq!(matmul_error(&w, &y, &approx).unwrap(), 0.0);
    }

    #[test]
    fn matmul_error_recovers_constructed_perturbation() {
        let w = PartitionedMatrix::split_even(
            &gaussian_matrix(20, 3, 1.0, RandomSource::from_seed(41)).unwrap(),
            2,
        )
        .unwrap();
        let y = PartitionedMatrix::split_even(
            &gaussian_matrix(20, 2, 1.0, RandomSource::from_seed(42)).unwrap(),
            2,
        )
        .unwrap();
        let exact = matmul_tn(&w.flatten(), &y.flatten()).unwrap();
        let nw = singular_values(&w.flatten()).unwrap()[0];
        let ny = singular_values(&y.flatten()).unwrap()[0];
        let eps = 0.37;
        // Rank-one unit-norm perturbation, scaled to relative size eps.
        let u = [0.6, 0.0, 0.8];
        let v = [0.0, 1.0];
        let e = DenseMatrix::from_fn(3, 2, |i, j| eps * nw * ny * u[i] * v[j]);
        let p_hat = exact.add(&e).unwrap();
        let err = matmul_error(&w, &y, &p_hat).unwrap();
        assert!((err - eps).abs() < 1e-10);
    }

    #[test]
    fn matmul_error_transpose_symmetry() {
        let w = PartitionedMatrix::split_even(
            &gaussian_matrix(15, 3, 1.0, RandomSource::from_seed(51)).unwrap(),
            3,
        )
        .unwrap();
        let y = PartitionedMatrix::split_even(
            &gaussian_matrix(15, 4, 1.0, RandomSource::from_seed(52)).unwrap(),
            3,
        )
        .unwrap();
        let s = crate::sketch::build_dense_gaussian(10, 15, RandomSource::from_seed(53)).unwrap();
        let p_hat = approx_matmul(&s, &w, &y).unwrap();
        let e1 = matmul_error(&w, &y, &p_hat).unwrap();
        let e2 = matmul_error(&y, &w, &p_hat.transpose()).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn embedding_deviation_zero_for_identity_sketch() {
        let g = gaussian_matrix(40, 4, 1.0, RandomSource::from_seed(61)).unwrap();
        let (q, _) = qr_thin(&g).unwrap();
        let u = PartitionedMatrix::split_even(&q, 4).unwrap();
        let s = identity_blocks(&u.block_rows());
        let dev = embedding_deviation(&s, &u).unwrap();
        assert!(dev < 1e-12);
    }

    #[test]
    fn embedding_deviation_rejects_non_orthonormal() {
        let g = gaussian_matrix(40, 4, 1.0, RandomSource::from_seed(62)).unwrap();
        let u = PartitionedMatrix::split_even(&g, 4).unwrap();
        let s = identity_blocks(&u.block_rows());
        assert!(matches!(
            embedding_deviation(&s, &u),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn structural_conditions_vanish_for_identity_sketch() {
        let p = toy_problem();
        let s = identity_blocks(&p.a().block_rows());
        let c = structural_conditions(&s, &p).unwrap();
        assert!(c.lhs9 < 1e-10, "lhs9 = {}", c.lhs9);
        assert!(c.lhs10 < 1e-10, "lhs10 = {}", c.lhs10);
        assert!(c.rhs10_unit > 0.0);
    }

    #[test]
    fn huge_lambda_sends_structural_terms_to_zero() {
        let a = gaussian_matrix(30, 3, 1.0, RandomSource::from_seed(71)).unwrap();
        let parts = PartitionedMatrix::split_even(&a, 3).unwrap();
        let b = crate::random::gaussian_vector(30, 1.0, RandomSource::from_seed(72)).unwrap();
        let p = RidgeProblem::new(parts, &b, 1e12).unwrap();
        let s = crate::sketch::build_dense_gaussian(10, 30, RandomSource::from_seed(73)).unwrap();
        let c = structural_conditions(&s, &p).unwrap();
        // ||U_1|| -> 0, so both left-hand sides collapse.
        assert!(c.lhs9 < 1e-6, "lhs9 = {}", c.lhs9);
        assert!(c.lhs10 < 1e-3 * c.rhs10_unit, "lhs10 = {}", c.lhs10);
    }

    #[test]
    fn objective_recomputation_matches_reported_value() {
        let p = toy_problem();
        let s = crate::sketch::build_dense_gaussian(25, 50, RandomSource::from_seed(81)).unwrap();
        let sol = ridge_sketched(&s, &p).unwrap();
        let recomputed = p.objective(&sol.x).unwrap();
        assert!((recomputed - sol.objective).abs() <= 1e-10 * recomputed.max(1.0));
    }

    #[test]
    fn matmul_error_rejects_zero_inputs() {
        let w = PartitionedMatrix::split_even(&DenseMatrix::zeros(10, 2), 2).unwrap();
        let y = PartitionedMatrix::split_even(
            &gaussian_matrix(10, 2, 1.0, RandomSource::from_seed(91)).unwrap(),
            2,
        )
        .unwrap();
        let p_hat = DenseMatrix::zeros(2, 2);
        assert!(matches!(
            matmul_error(&w, &y, &p_hat),
            Err(Error::ZeroMatrix { .. })
        ));
    }

    #[test]
    fn matmul_warns_on_partition_mismatch() {
        let w = PartitionedMatrix::split(&DenseMatrix::zeros(10, 2), &[5, 5]).unwrap();
        let y = PartitionedMatrix::split(&DenseMatrix::zeros(10, 2), &[4, 6]).unwrap();
        let s = identity_blocks(&[5, 5]);
        assert!(matches!(
            approx_matmul(&s, &w, &y),
            Err(Error::PartitionMismatch { .. })
        ));
    }
}
