//! Least-squares machinery shared by every model: the 1-padded design, the
//! ridge solve with an unpenalized intercept, the hat matrix and low-rank
//! updates of the inverse scatter.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray_linalg::cholesky::CholeskyFactorized;
use ndarray_linalg::{CholeskyInto, Diag, Factorize, InverseC, ReciprocalConditionNum, Solve, SolveTriangular, UPLO};

use crate::error::{invalid, Error, Result};

/// Reciprocal condition estimates below this are treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Feature matrix with a trailing column of ones for the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDesign {
    xa: Array2<f64>,
}

impl AugmentedDesign {
    /// Wraps an already augmented matrix, checking that the last column is
    /// exactly one.
    pub fn from_augmented(xa: Array2<f64>) -> Result<Self> {
        if xa.ncols() == 0 || xa.nrows() == 0 {
            return Err(invalid("augmented design must be non-empty"));
        }
        if xa.column(xa.ncols() - 1).iter().any(|&v| v != 1.0) {
            return Err(invalid("last column of an augmented design must be all ones"));
        }
        Ok(Self { xa })
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.xa.view()
    }

    pub fn n_samples(&self) -> usize {
        self.xa.nrows()
    }

    /// Number of original features (columns minus the intercept).
    pub fn n_features(&self) -> usize {
        self.xa.ncols() - 1
    }

    pub fn rows(&self, indices: &[usize]) -> Array2<f64> {
        self.xa.select(Axis(0), indices)
    }
}

/// Appends a column of ones.
pub fn augment(features: ArrayView2<'_, f64>) -> Result<AugmentedDesign> {
    let (n, p) = features.dim();
    if n == 0 {
        return Err(invalid("cannot augment an empty matrix"));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(invalid("features contain non-finite values"));
    }
    let mut xa = Array2::<f64>::ones((n, p + 1));
    xa.slice_mut(s![.., ..p]).assign(&features);
    Ok(AugmentedDesign { xa })
}

/// Ridge penalty `λ` applied to every coefficient except the intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeSpec {
    lambda: f64,
}

impl RidgeSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(invalid(format!("ridge penalty must be finite and >= 0, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Diagonal of the penalty mask for `dim` coefficients: ones, last entry zero.
    pub fn penalty_mask(&self, dim: usize) -> Array1<f64> {
        let mut m = Array1::ones(dim);
        if dim > 0 {
            m[dim - 1] = 0.0;
        }
        m
    }

    /// `X̃ᵀX̃ + λ I₀`.
    pub fn regularized_scatter(&self, design: &AugmentedDesign) -> Array2<f64> {
        let xa = design.matrix();
        let mut a = xa.t().dot(&xa);
        let d = a.nrows();
        for i in 0..d - 1 {
            a[[i, i]] += self.lambda;
        }
        a
    }
}

/// Regression weights: `(P+1) × R`, last row the intercepts.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub beta: Array2<f64>,
}

impl ModelWeights {
    /// Feature weights of response column `col`.
    pub fn weights(&self, col: usize) -> ArrayView1<'_, f64> {
        let p = self.beta.nrows() - 1;
        self.beta.slice(s![..p, col])
    }

    pub fn bias(&self, col: usize) -> f64 {
        self.beta[[self.beta.nrows() - 1, col]]
    }

    /// Feature-weight block `B` (intercept row dropped).
    pub fn feature_block(&self) -> ArrayView2<'_, f64> {
        let p = self.beta.nrows() - 1;
        self.beta.slice(s![..p, ..])
    }

    pub fn predict(&self, design: &AugmentedDesign) -> Array2<f64> {
        design.matrix().dot(&self.beta)
    }
}

/// Lower Cholesky factor of the regularized scatter, guarded at `λ = 0` by a
/// reciprocal-condition estimate.
pub(crate) fn factor_regularized(a: Array2<f64>, lambda: f64) -> Result<Array2<f64>> {
    if lambda == 0.0 {
        let rcond = match a.factorize() {
            Ok(lu) => lu.rcond()?,
            Err(_) => 0.0,
        };
        if !(rcond > RCOND_THRESHOLD) {
            return Err(Error::Singular { rcond });
        }
    }
    a.cholesky_into(UPLO::Lower).map_err(|_| Error::Singular { rcond: 0.0 })
}

/// Solves `L Lᵀ X = B` for a lower Cholesky factor.
pub(crate) fn cholesky_solve(l: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let z = l.solve_triangular(UPLO::Lower, Diag::NonUnit, b)?;
    let lt = l.t().to_owned();
    Ok(lt.solve_triangular(UPLO::Upper, Diag::NonUnit, &z)?)
}

/// Penalized least squares for one response vector.
pub fn fit_ridge(design: &AugmentedDesign, response: ArrayView1<'_, f64>, ridge: &RidgeSpec) -> Result<ModelWeights> {
    let y = response.to_owned().insert_axis(Axis(1));
    fit_ridge_multi(design, y.view(), ridge)
}

/// Penalized least squares for an `N × R` response matrix, one column of
/// weights per response column.
pub fn fit_ridge_multi(
    design: &AugmentedDesign,
    response: ArrayView2<'_, f64>,
    ridge: &RidgeSpec,
) -> Result<ModelWeights> {
    if response.nrows() != design.n_samples() {
        return Err(invalid(format!(
            "response has {} rows, design has {}",
            response.nrows(),
            design.n_samples()
        )));
    }
    let l = factor_regularized(ridge.regularized_scatter(design), ridge.lambda())?;
    let rhs = design.matrix().t().dot(&response);
    Ok(ModelWeights {
        beta: cholesky_solve(&l, &rhs)?,
    })
}

/// `H = X̃ S X̃ᵀ` with `S = (X̃ᵀX̃ + λI₀)⁻¹`. Both are kept: `H` drives every
/// cross-validation update, `S` is only needed for explicit weight updates.
#[derive(Debug, Clone, PartialEq)]
pub struct HatMatrix {
    h: Array2<f64>,
    s: Array2<f64>,
    lambda: f64,
}

impl HatMatrix {
    pub fn new(design: &AugmentedDesign, ridge: &RidgeSpec) -> Result<Self> {
        let l = factor_regularized(ridge.regularized_scatter(design), ridge.lambda())?;
        // H = Zᵀ Z with Z = L⁻¹ X̃ᵀ is symmetric positive semidefinite by construction.
        let z = l.solve_triangular(UPLO::Lower, Diag::NonUnit, &design.matrix().t().to_owned())?;
        let h = z.t().dot(&z);
        let h = (&h + &h.t()) * 0.5;
        let s = CholeskyFactorized {
            factor: l,
            uplo: UPLO::Lower,
        }
        .invc()?;
        let s = (&s + &s.t()) * 0.5;
        Ok(Self {
            h,
            s,
            lambda: ridge.lambda(),
        })
    }

    pub fn h(&self) -> ArrayView2<'_, f64> {
        self.h.view()
    }

    /// Regularized inverse scatter `S`.
    pub fn s(&self) -> ArrayView2<'_, f64> {
        self.s.view()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_samples(&self) -> usize {
        self.h.nrows()
    }

    /// Fitted values `H y`.
    pub fn fit(&self, y: ArrayView1<'_, f64>) -> Array1<f64> {
        self.h.dot(&y)
    }

    pub fn fit_multi(&self, y: ArrayView2<'_, f64>) -> Array2<f64> {
        self.h.dot(&y)
    }
}

pub fn hat_matrix(design: &AugmentedDesign, ridge: &RidgeSpec) -> Result<HatMatrix> {
    HatMatrix::new(design, ridge)
}

/// Inverse regularized scatter of the training rows, obtained from the full
/// `S` by removing the test rows `X̃_Te`:
/// `S + S X̃_Teᵀ (I − X̃_Te S X̃_Teᵀ)⁻¹ X̃_Te S`.
///
/// The cross-validation routines never call this; it backs the weight-update
/// property tests.
pub fn woodbury_train_inverse(s_full: ArrayView2<'_, f64>, design_test: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (m, d) = design_test.dim();
    if s_full.dim() != (d, d) {
        return Err(invalid("inverse scatter and test rows disagree on dimension"));
    }
    if m == 0 {
        return Ok(s_full.to_owned());
    }
    let xs = design_test.dot(&s_full); // m × d
    let mut g = -xs.dot(&design_test.t());
    for i in 0..m {
        g[[i, i]] += 1.0;
    }
    let lu = g.factorize()?;
    let rcond = lu.rcond()?;
    if !(rcond > RCOND_THRESHOLD) {
        return Err(Error::SingularFold { fold: None, rcond });
    }
    let mut correction = Array2::<f64>::zeros((m, d));
    for (j, col) in xs.columns().into_iter().enumerate() {
        correction.column_mut(j).assign(&lu.solve(&col.to_owned())?);
    }
    Ok(&s_full + &xs.t().dot(&correction))
}

/// Ridge penalty equivalent to shrinkage `λ_s` for a scatter with trace
/// scale `ν`: `λ_s / (1 − λ_s) · ν`.
pub fn shrink_to_ridge(lambda_shrink: f64, nu: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda_shrink) {
        return Err(invalid(format!("shrinkage must lie in [0, 1), got {lambda_shrink}")));
    }
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(invalid(format!("trace scale must be positive, got {nu}")));
    }
    Ok(lambda_shrink / (1.0 - lambda_shrink) * nu)
}

/// `trace(S_w) / P`.
pub fn scatter_trace_scale(within_scatter: ArrayView2<'_, f64>) -> Result<f64> {
    let (r, c) = within_scatter.dim();
    if r != c || r == 0 {
        return Err(invalid(format!("scatter must be square and non-empty, got {r}×{c}")));
    }
    Ok(within_scatter.diag().sum() / r as f64)
}
