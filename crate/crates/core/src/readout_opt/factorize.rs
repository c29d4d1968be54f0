//! Nonnegative symmetric factorization `G ≈ FᵀF` with `F ≥ 0`.
//!
//! Multi-start projected gradient on `‖FᵀF - G‖²_F` with a backtracking
//! line search (Barzilai-Borwein trial steps). Once the residual is small,
//! a projected Levenberg-Marquardt polish on the free entries drives it to
//! rounding level; plain gradient steps converge only sublinearly when `G`
//! is rank deficient.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interaction::GramMatrix;
use crate::tolerance;

/// Restarts are evaluated in fixed-size batches so the chosen restart does
/// not depend on the thread count.
const BATCH: usize = 8;
const ARMIJO: f64 = 1e-4;
const POLISH_EVERY: usize = 200;
const POLISH_BELOW: f64 = 1e-2;
const POLISH_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizeOptions {
    /// Rows of `F`; defaults to `n(n+1)/2`.
    pub max_outcomes: Option<usize>,
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_iterations: usize,
    pub gradient_tol: f64,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        Self {
            max_outcomes: None,
            restarts: 32,
            tol: tolerance::OPTIMIZATION,
            seed: 0,
            max_iterations: 100_000,
            gradient_tol: 1e-10,
        }
    }
}

/// `F[m][a]`, nonnegative, with `FᵀF ≈ Re(G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegFactorization {
    pub f: DMatrix<f64>,
    /// `‖FᵀF - Re(G)‖_F`.
    pub residual: f64,
    pub seed: u64,
    /// Index of the restart that produced `f`.
    pub restart: usize,
    pub iterations: usize,
}

impl NonnegFactorization {
    pub fn outcomes(&self) -> usize {
        self.f.nrows()
    }
}

/// Frobenius residual `‖FᵀF - target‖_F`.
pub fn factorization_residual(f: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    (f.transpose() * f - target).norm()
}

/// Searches for `F ≥ 0` with `FᵀF = Re(G)`.
///
/// Fails fast with [`Error::GramNotNonnegative`] if some entry of `G` is not
/// real and nonnegative, and with [`Error::FactorizationNotFound`] (carrying
/// the best residual) if no restart gets below `opts.tol`.
pub fn cp_factorize(g: &GramMatrix, opts: &FactorizeOptions) -> Result<NonnegFactorization> {
    let (row, col, worst) = g.worst_nonnegativity();
    if worst > tolerance::VALIDITY {
        let z = g.get(row, col);
        return Err(Error::GramNotNonnegative {
            row,
            col,
            re: z.re,
            im: z.im,
        });
    }
    let n = g.n();
    let outcomes = opts.max_outcomes.unwrap_or(n * (n + 1) / 2);
    if outcomes == 0 || opts.restarts == 0 {
        return Err(Error::InvalidParameter(
            "factorization needs at least one outcome and one restart".into(),
        ));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {} must be positive",
            opts.tol
        )));
    }
    let target = g.matrix().map(|z| z.re.max(0.0));
    let target = (&target + target.transpose()) * 0.5;
    let stop = (opts.tol * 1e-4).max(1e-14);

    let mut best: Option<NonnegFactorization> = None;
    for start in (0..opts.restarts).step_by(BATCH) {
        let end = (start + BATCH).min(opts.restarts);
        let results: Vec<NonnegFactorization> = (start..end)
            .into_par_iter()
            .map(|k| single_restart(&target, outcomes, opts, stop, k))
            .collect();
        for r in results {
            if best.as_ref().is_none_or(|b| r.residual < b.residual) {
                best = Some(r);
            }
        }
        if best.as_ref().is_some_and(|b| b.residual <= opts.tol) {
            break;
        }
    }
    let best = best.expect("at least one restart");
    if best.residual <= opts.tol {
        Ok(best)
    } else {
        Err(Error::FactorizationNotFound {
            best_residual: best.residual,
            tol: opts.tol,
        })
    }
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn objective(f: &DMatrix<f64>, target: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let e = f.transpose() * f - target;
    (e.norm_squared(), e)
}

fn project(f: &mut DMatrix<f64>) {
    f.apply(|x| *x = x.max(0.0));
}

fn single_restart(
    target: &DMatrix<f64>,
    outcomes: usize,
    opts: &FactorizeOptions,
    stop: f64,
    restart: usize,
) -> NonnegFactorization {
    let n = target.nrows();
    let mut rng = restart_rng(opts.seed, restart);
    let mut f = DMatrix::from_fn(outcomes, n, |_, _| rng.random::<f64>());
    for mut col in f.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        } else {
            col[0] = 1.0;
        }
    }

    let (mut value, err) = objective(&f, target);
    let mut grad = &f * &err * 4.0;
    let mut step = 0.25;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        if value.sqrt() <= stop {
            break;
        }
        let mut pg = &f - &grad;
        project(&mut pg);
        if (&pg - &f).norm() < opts.gradient_tol {
            break;
        }
        iterations += 1;

        // Backtracking along the projection arc.
        let mut alpha = step;
        let (next, next_value, next_err) = loop {
            let mut cand = &f - &grad * alpha;
            project(&mut cand);
            let (v, e) = objective(&cand, target);
            let decrease = grad.dot(&(&f - &cand));
            if v <= value - ARMIJO * decrease || alpha < 1e-20 {
                break (cand, v, e);
            }
            alpha *= 0.5;
        };
        let next_grad = &next * next_err * 4.0;
        let s = &next - &f;
        let y = &next_grad - &grad;
        let sy = s.dot(&y);
        step = if sy > 0.0 {
            (s.norm_squared() / sy).clamp(1e-10, 1e10)
        } else {
            (alpha * 2.0).min(1e10)
        };
        f = next;
        value = next_value;
        grad = next_grad;

        if iterations % POLISH_EVERY == 0 && value.sqrt() < POLISH_BELOW {
            let mut polished = f.clone();
            let v = polish(&mut polished, target);
            if v < value {
                f = polished;
                let (v2, e2) = objective(&f, target);
                value = v2;
                grad = &f * e2 * 4.0;
            }
        }
    }
    if value.sqrt() > stop && value.sqrt() < POLISH_BELOW {
        let mut polished = f.clone();
        if polish(&mut polished, target) < value {
            f = polished;
        }
    }
    NonnegFactorization {
        residual: factorization_residual(&f, target),
        f,
        seed: opts.seed,
        restart,
        iterations,
    }
}

/// Eigenvalues of the target below this are treated as exact zeros.
const NULL_EIGENVALUE: f64 = 1e-13;

/// Orthonormal basis (as columns) of the numerical null space of `target`.
fn null_space(target: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = target.clone().symmetric_eigen();
    let cols: Vec<_> = (0..target.nrows())
        .filter(|&k| eig.eigenvalues[k].abs() < NULL_EIGENVALUE)
        .map(|k| eig.eigenvectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(target.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Upper triangle of `FᵀF - T` (off-diagonal entries weighted by √2, so the
/// squared norm is `‖FᵀF - T‖²_F`), followed by the entries of `F·N`.
///
/// An exact factorization has `F·N = 0`. Without those rows the residual
/// along a null vector `v` is `‖Fv‖²`, which is flat to fourth order and
/// stalls the iteration when `T` is singular.
fn residual_vector(f: &DMatrix<f64>, target: &DMatrix<f64>, null: &DMatrix<f64>) -> DVector<f64> {
    let n = target.nrows();
    let e = f.transpose() * f - target;
    let w = std::f64::consts::SQRT_2;
    let tri = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .map(|(i, j)| if i == j { e[(i, j)] } else { w * e[(i, j)] });
    let fn_ = f * null;
    DVector::from_iterator(n * (n + 1) / 2 + fn_.len(), tri.chain(fn_.iter().copied()))
}

/// Projected Levenberg-Marquardt in its minimum-norm (dual) form on the
/// entries of `F` that are not pinned at zero. Returns the final squared
/// factorization residual.
fn polish(f: &mut DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    let (rows, n) = f.shape();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let null = null_space(target);
    let equations = pairs.len() + rows * null.ncols();
    let w = std::f64::consts::SQRT_2;
    let mut r = residual_vector(f, target, &null);
    let mut value = r.norm_squared();
    let mut lambda = 1e-6;
    for _ in 0..POLISH_STEPS {
        if value.sqrt() <= 1e-15 {
            break;
        }
        // Jacobian over all entries, column index m + rows·k for F[m][k].
        let mut jac = DMatrix::<f64>::zeros(equations, rows * n);
        for (p, &(i, j)) in pairs.iter().enumerate() {
            let scale = if i == j { 1.0 } else { w };
            for m in 0..rows {
                jac[(p, m + rows * i)] += scale * f[(m, j)];
                jac[(p, m + rows * j)] += scale * f[(m, i)];
            }
        }
        // Row (m, c) of F·N, stored column-major after the pair rows.
        for c in 0..null.ncols() {
            for m in 0..rows {
                for k in 0..n {
                    jac[(pairs.len() + m + rows * c, m + rows * k)] = null[(k, c)];
                }
            }
        }
        // Pin entries at zero whose descent direction points outward.
        let grad = jac.transpose() * &r;
        for idx in 0..rows * n {
            let (m, k) = (idx % rows, idx / rows);
            if f[(m, k)] <= 0.0 && grad[idx] > 0.0 {
                jac.column_mut(idx).fill(0.0);
            }
        }
        let jjt = &jac * jac.transpose();
        let mut accepted = false;
        for _ in 0..12 {
            let system = &jjt + DMatrix::identity(equations, equations) * lambda;
            let Some(solved) = system.cholesky().map(|c| c.solve(&r)) else {
                lambda *= 10.0;
                continue;
            };
            let delta = jac.transpose() * solved;
            let mut cand = f.clone();
            for idx in 0..rows * n {
                let (m, k) = (idx % rows, idx / rows);
                cand[(m, k)] = (cand[(m, k)] - delta[idx]).max(0.0);
            }
            let cand_r = residual_vector(&cand, target, &null);
            let cand_value = cand_r.norm_squared();
            if cand_value < value {
                *f = cand;
                r = cand_r;
                value = cand_value;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    factorization_residual(f, target).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_to_complex;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn gram(rows: &[&[f64]]) -> GramMatrix {
        let n = rows.len();
        GramMatrix::new(real_to_complex(&DMatrix::from_fn(n, n, |i, j| rows[i][j]))).unwrap()
    }

    #[test]
    fn two_by_two_nonnegative_gram() {
        let c = FRAC_PI_4.cos();
        let g = gram(&[&[1.0, c], &[c, 1.0]]);
        let fact = cp_factorize(&g, &FactorizeOptions::default()).unwrap();
        assert!(fact.residual < 1e-8);
        assert!(fact.f.iter().all(|x| *x >= 0.0));
        assert_eq!(fact.outcomes(), 3);
        for col in fact.f.column_iter() {
            assert_abs_diff_eq!(col.norm(), 1.0, epsilon = 1e-6);
        }
        // The triangular factor is one valid answer; check it with the same oracle.
        let tri = DMatrix::from_row_slice(2, 2, &[1.0, c, 0.0, (1.0 - c * c).sqrt()]);
        assert!(factorization_residual(&tri, &g.matrix().map(|z| z.re)) < 1e-15);
    }

    #[test]
    fn identity_and_all_ones() {
        let g = gram(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let fact = cp_factorize(&g, &FactorizeOptions::default()).unwrap();
        assert!(fact.residual < 1e-8);

        let g = gram(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let opts = FactorizeOptions {
            max_outcomes: Some(1),
            ..Default::default()
        };
        let fact = cp_factorize(&g, &opts).unwrap();
        assert_eq!(fact.f.shape(), (1, 2));
        assert_abs_diff_eq!(fact.f[(0, 0)], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fact.f[(0, 1)], 1.0, epsilon = 1e-8);
        let fact = cp_factorize(&g, &FactorizeOptions::default()).unwrap();
        assert!(fact.residual < 1e-8);
    }

    #[test]
    fn reported_residual_is_recomputable() {
        let g = gram(&[&[1.0, 0.3, 0.6], &[0.3, 1.0, 0.2], &[0.6, 0.2, 1.0]]);
        let fact = cp_factorize(&g, &FactorizeOptions::default()).unwrap();
        let target = g.matrix().map(|z| z.re);
        assert_eq!(fact.residual, factorization_residual(&fact.f, &target));
    }

    #[test]
    fn rejects_complex_or_negative_gram() {
        let z = num_complex::Complex64::new(0.0, 0.5);
        let g = GramMatrix::new(crate::linalg::CMatrix::from_row_slice(
            2,
            2,
            &[crate::linalg::ONE, z, z.conj(), crate::linalg::ONE],
        ))
        .unwrap();
        assert!(matches!(
            cp_factorize(&g, &FactorizeOptions::default()),
            Err(Error::GramNotNonnegative { .. })
        ));
        let g = gram(&[&[1.0, -0.4], &[-0.4, 1.0]]);
        assert!(matches!(
            cp_factorize(&g, &FactorizeOptions::default()),
            Err(Error::GramNotNonnegative { .. })
        ));
    }

    #[test]
    fn singular_gram_converges() {
        // Four nonnegative unit vectors in three dimensions: rank-3 Gram.
        let v = DMatrix::from_row_slice(
            3,
            4,
            &[0.8, 0.1, 0.0, 0.5, 0.6, 0.7, 0.3, 0.0, 0.0, 0.7, 0.95, 0.87],
        );
        let v = DMatrix::from_columns(&v.column_iter().map(|c| c.normalize()).collect::<Vec<_>>());
        let g = GramMatrix::new(real_to_complex(&(v.transpose() * &v))).unwrap();
        let fact = cp_factorize(&g, &FactorizeOptions::default()).unwrap();
        assert!(fact.residual < 1e-9, "residual {}", fact.residual);
    }

    #[test]
    fn too_few_outcomes_reports_best_residual() {
        // Identity needs three orthogonal nonnegative columns.
        let g = gram(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let opts = FactorizeOptions {
            max_outcomes: Some(2),
            restarts: 4,
            max_iterations: 2_000,
            ..Default::default()
        };
        match cp_factorize(&g, &opts) {
            Err(Error::FactorizationNotFound { best_residual, .. }) => assert!(best_residual > 0.1),
            other => panic!("expected FactorizationNotFound, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = gram(&[&[1.0, 0.5, 0.1], &[0.5, 1.0, 0.7], &[0.1, 0.7, 1.0]]);
        let opts = FactorizeOptions {
            seed: 42,
            ..Default::default()
        };
        assert_eq!(
            cp_factorize(&g, &opts).unwrap(),
            cp_factorize(&g, &opts).unwrap()
        );
    }
}
