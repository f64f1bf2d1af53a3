//! Sensitivity of the pencil `(L, D)` to perturbations.
//!
//! Eigenvalues are compared as homogeneous pairs `<lambda, 1>` under the
//! chordal metric. For a definite pair, a symmetric perturbation
//! `[dL, dD]` with norm below `mu(L, D)` moves every eigenvalue by at most
//! `||[dL, dD]||_2 / mu(L, D)` in that metric, and `mu(L, D) >= D_min` when
//! `D` is a positive diagonal. Eigenspaces move by a `sin Theta` bound that
//! scales with the residual `(dL Z1, dD Z1)` over the separation between
//! the retained and the perturbed complementary eigenvalues.

mod study;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

pub use study::{scenario_study, RobustnessStudy, ScenarioRecord, StudyConfig};

use crate::error::{Error, Result};
use crate::geig::{generalized_eig, sin_theta_frobenius, symmetric_eig};

/// Chordal distance between generalized eigenvalues `<alpha, beta>`.
pub fn chordal_distance(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    let na = a.0.hypot(a.1);
    let nb = b.0.hypot(b.1);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidArgument("<0, 0> is not a generalized eigenvalue".into()));
    }
    Ok(((b.1 * a.0 - b.0 * a.1).abs() / (na * nb)).min(1.0))
}

/// Chordal distance between two finite eigenvalues.
pub fn chordal_eigenvalues(lambda: f64, other: f64) -> f64 {
    chordal_distance((lambda, 1.0), (other, 1.0)).expect("<lambda, 1> is never <0, 0>")
}

/// `D_min`, a certified lower bound on `mu(L, D)` for a positive diagonal `D`.
pub fn mu_lower_bound(damping: &[f64]) -> f64 {
    damping.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Sampled upper estimate of `mu(L, D) = min_{|x| = 1} sqrt((x^T L x)^2 + (x^T D x)^2)`
/// from `samples` random unit vectors. Diagnostic only.
pub fn mu_sampled(laplacian: &DMatrix<f64>, damping: &[f64], samples: usize, seed: u64) -> f64 {
    let n = damping.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let x: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let x = &x / x.norm();
        let xl = x.dot(&(laplacian * &x));
        let xd: f64 = x.iter().zip(damping).map(|(v, d)| d * v * v).sum();
        best = best.min(xl.hypot(xd));
    }
    best
}

fn spectral_norm_symmetric(m: &DMatrix<f64>) -> Result<f64> {
    Ok(symmetric_eig(m)?.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PencilPerturbationReport {
    pub mu_lower_bound: f64,
    pub spectral_radius_dl: f64,
    /// `rho(dL) / D_min`.
    pub bound: f64,
    /// Largest chordal movement, pairing eigenvalues in sorted order.
    pub observed_max_chordal: f64,
    /// Whether `||dL||_2 < D_min`, the hypothesis under which the bound holds.
    pub applicable: bool,
    pub holds: bool,
}

/// Compare the spectra of `(L, D)` and `(L + dL, D)` against the chordal bound.
pub fn eigenvalue_bound_check(
    l: &DMatrix<f64>,
    damping: &[f64],
    dl: &DMatrix<f64>,
) -> Result<PencilPerturbationReport> {
    if dl.shape() != l.shape() {
        return Err(Error::InvalidArgument("perturbation has the wrong shape".into()));
    }
    let spectral_radius_dl = spectral_norm_symmetric(dl)?;
    let mu = mu_lower_bound(damping);
    let before = generalized_eig(l, damping)?.eigenvalues;
    let after = generalized_eig(&(l + dl), damping)?.eigenvalues;
    let observed_max_chordal = before
        .iter()
        .zip(&after)
        .map(|(a, b)| chordal_eigenvalues(*a, *b))
        .fold(0.0, f64::max);
    let bound = spectral_radius_dl / mu;
    Ok(PencilPerturbationReport {
        mu_lower_bound: mu,
        spectral_radius_dl,
        bound,
        observed_max_chordal,
        applicable: spectral_radius_dl < mu,
        holds: observed_max_chordal <= bound + 1e-12,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinThetaReport {
    /// `||sin Theta||_F` between the leading `l`-dimensional eigenspaces.
    pub observed: f64,
    /// Upper estimate of the bound, with both `mu` values replaced by their
    /// `D_min` lower bounds.
    pub bound: f64,
    /// Smallest chordal distance between the `l` leading eigenvalues of
    /// `(L, D)` and the trailing `n - l` eigenvalues of the perturbed pair.
    pub delta: f64,
    pub pencil_norm: f64,
    pub residual_norm: f64,
}

/// Eigenspace perturbation check for `(L, D) -> (L + dL, D + diag(dd))`.
///
/// The residual `(dL Z1, dD Z1)` uses an orthonormal basis `Z1` of the leading
/// eigenspace.
pub fn sin_theta_check(
    l: &DMatrix<f64>,
    damping: &[f64],
    dl: &DMatrix<f64>,
    dd: &[f64],
    ell: usize,
) -> Result<SinThetaReport> {
    let n = damping.len();
    if ell == 0 || ell > n {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension must be in 1..={n} (got {ell})"
        )));
    }
    if dd.len() != n || dl.shape() != l.shape() {
        return Err(Error::InvalidArgument("perturbation has the wrong shape".into()));
    }
    let perturbed_damping: Vec<f64> = damping.iter().zip(dd).map(|(d, e)| d + e).collect();
    let base = generalized_eig(l, damping)?;
    let moved = generalized_eig(&(l + dl), &perturbed_damping)?;

    let z1 = base.leading(ell);
    let observed = sin_theta_frobenius(&z1, &moved.leading(ell));

    let delta = base.eigenvalues[..ell]
        .iter()
        .flat_map(|a| {
            moved.eigenvalues[ell..]
                .iter()
                .map(move |b| chordal_eigenvalues(*a, *b))
        })
        .fold(f64::INFINITY, f64::min);
    if !(delta > 0.0) {
        return Err(Error::Numerical(format!(
            "eigenvalue groups overlap (separation {delta:e}); the eigenspace bound does not apply"
        )));
    }

    let d = DMatrix::from_diagonal(&DVector::from_column_slice(damping));
    let pencil_norm = spectral_norm_symmetric(&(l * l + &d * &d))?.sqrt();
    let q1 = crate::geig::orthonormal_basis(&z1);
    let ddm = DMatrix::from_diagonal(&DVector::from_column_slice(dd));
    let residual_norm = ((dl * &q1).norm_squared() + (ddm * &q1).norm_squared()).sqrt();
    let mu = mu_lower_bound(damping);
    let mu_tilde = mu_lower_bound(&perturbed_damping);
    if !(mu_tilde > 0.0) {
        return Err(Error::InvalidArgument("perturbed damping must stay positive".into()));
    }
    let bound = if delta.is_infinite() {
        0.0
    } else {
        pencil_norm / (mu * mu_tilde) * residual_norm / delta
    };
    Ok(SinThetaReport {
        observed,
        bound,
        delta,
        pencil_norm,
        residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn two_node(w: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[w, -w, -w, w])
    }

    #[test]
    fn chordal_examples() {
        assert_eq!(chordal_distance((1.0, 1.0), (1.0, 1.0)).unwrap(), 0.0);
        assert_relative_eq!(
            chordal_distance((1.0, 1.0), (2.0, 1.0)).unwrap(),
            1.0 / 10f64.sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(chordal_distance((1.0, 0.0), (0.0, 1.0)).unwrap(), 1.0);
        assert!(chordal_distance((0.0, 0.0), (1.0, 1.0)).is_err());
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_lower_bound(&[25.0, 1.2, 30.0]), 1.2);
        assert_eq!(mu_lower_bound(&[1.0; 4]), 1.0);
        assert_eq!(mu_lower_bound(&[50.0, 2.4, 60.0]), 2.0 * 1.2);
    }

    #[test]
    fn sampled_mu_is_above_the_bound() {
        let l = two_node(1.0);
        let d = [1.5, 4.0];
        let est = mu_sampled(&l, &d, 2000, 1);
        assert!(est >= mu_lower_bound(&d));
        let grid = (0..20_000)
            .map(|i| {
                let t = i as f64 * std::f64::consts::PI / 20_000.0;
                let (s, c) = t.sin_cos();
                ((c - s).powi(2)).hypot(1.5 * c * c + 4.0 * s * s)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(est >= grid - 1e-9);
        assert!(est - grid < 1e-2, "{est} vs {grid}");
    }

    #[test]
    fn two_node_bound_example() {
        let rep = eigenvalue_bound_check(&two_node(1.0), &[1.0, 1.0], &two_node(0.1)).unwrap();
        assert_relative_eq!(rep.bound, 0.2, epsilon = 1e-12);
        assert!((rep.observed_max_chordal - 0.03701).abs() < 1e-5);
        assert!(rep.applicable && rep.holds);
    }

    #[test]
    fn zero_perturbation() {
        let rep = eigenvalue_bound_check(&two_node(1.0), &[1.0, 2.0], &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(rep.bound, 0.0);
        assert!(rep.observed_max_chordal < 1e-15 && rep.holds);
        let st = sin_theta_check(&two_node(1.0), &[1.0, 2.0], &DMatrix::zeros(2, 2), &[0.0; 2], 1).unwrap();
        assert!(st.observed < 1e-12);
    }

    #[test]
    fn full_space_has_no_angle() {
        let st = sin_theta_check(&two_node(1.0), &[1.0, 2.0], &two_node(0.3), &[0.1, -0.2], 2).unwrap();
        assert!(st.observed < 1e-12);
        assert!(st.delta.is_infinite());
    }

    fn random_laplacian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || rng.random_bool(0.3) {
                    let w = scale * rng.random_range(0.1..1.0);
                    l[(i, i)] += w;
                    l[(j, j)] += w;
                    l[(i, j)] -= w;
                    l[(j, i)] -= w;
                }
            }
        }
        l
    }

    proptest! {
        #[test]
        fn chordal_is_a_metric(a in (-5.0f64..5.0, 0.1f64..5.0), b in (-5.0f64..5.0, 0.1f64..5.0), c in (-5.0f64..5.0, 0.1f64..5.0)) {
            let ab = chordal_distance(a, b).unwrap();
            let ba = chordal_distance(b, a).unwrap();
            let bc = chordal_distance(b, c).unwrap();
            let ac = chordal_distance(a, c).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn eigenvalue_bound_holds(seed in 0u64..5000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = random_laplacian(&mut rng, 8, 5.0);
            let d: Vec<f64> = (0..8).map(|_| rng.random_range(0.5..3.0)).collect();
            let dl = random_laplacian(&mut rng, 8, 0.2);
            let rep = eigenvalue_bound_check(&l, &d, &dl).unwrap();
            if rep.applicable {
                prop_assert!(rep.holds, "{rep:?}");
            }
        }
    }
}
