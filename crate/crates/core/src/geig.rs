//! Dense symmetric eigensolver and the generalized problem `L x = lambda D x`
//! for a diagonal positive `D`.
//!
//! The symmetric kernel is Householder reduction to tridiagonal form followed
//! by the implicit QL iteration. The generalized problem is reduced to the
//! symmetric matrix `S = D^{-1/2} L D^{-1/2}`; if `S u = lambda u` then
//! `x = D^{-1/2} u` solves the pencil and the columns come out D-orthonormal.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ascending eigenvalues and the paired eigenvectors (one per column).
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenSolution {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// First `k` eigenvector columns.
    pub fn leading(&self, k: usize) -> DMatrix<f64> {
        self.eigenvectors.columns(0, k).into_owned()
    }

    pub fn write_spectrum_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "eigenvalue"])?;
        for (i, lambda) in self.eigenvalues.iter().enumerate() {
            w.write_record([(i + 1).to_string(), crate::io::fmt_f64(*lambda)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Relative asymmetry accepted by [`symmetric_eig`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Full spectrum of a dense symmetric matrix with orthonormal eigenvectors.
pub fn symmetric_eig(s: &DMatrix<f64>) -> Result<EigenSolution> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, not square",
            n,
            s.ncols()
        )));
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let asym = max_abs(&(s - s.transpose()));
    if asym > SYMMETRY_TOLERANCE * max_abs(s) {
        return Err(Error::NotSymmetric(asym));
    }
    if n == 0 {
        return Ok(EigenSolution {
            eigenvalues: vec![],
            eigenvectors: DMatrix::zeros(0, 0),
        });
    }
    // Work on the symmetrized matrix so round-off asymmetry cannot leak in.
    let mut v = (s + s.transpose()) * 0.5;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let eigenvalues = order.iter().map(|&i| d[i]).collect();
    let mut eigenvectors = v.select_columns(&order);
    for mut col in eigenvectors.column_iter_mut() {
        fix_sign(col.as_mut_slice());
    }
    Ok(EigenSolution {
        eigenvalues,
        eigenvectors,
    })
}

/// Make the entry of largest magnitude positive; ties go to the lowest index.
fn fix_sign(col: &mut [f64]) {
    let mut best = 0;
    for (i, x) in col.iter().enumerate() {
        if x.abs() > col[best].abs() {
            best = i;
        }
    }
    if col[best] < 0.0 {
        col.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Householder tridiagonalization. On return `v` holds the accumulated
/// orthogonal transform, `d` the diagonal and `e[1..]` the subdiagonal.
#[allow(clippy::needless_range_loop)]
fn tred2(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL iteration on the tridiagonal matrix from [`tred2`].
fn tql2(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    const MAX_SWEEPS: usize = 60;
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::Numerical(format!(
                        "QL iteration did not converge for eigenvalue {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn check_damping(l: &DMatrix<f64>, d: &[f64]) -> Result<()> {
    if l.nrows() != d.len() || l.ncols() != d.len() {
        return Err(Error::InvalidArgument(format!(
            "pencil dimensions differ: L is {}x{}, D has {} entries",
            l.nrows(),
            l.ncols(),
            d.len()
        )));
    }
    if let Some((i, x)) = d.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "damping entry {i} must be > 0 (got {x})"
        )));
    }
    Ok(())
}

/// Solve `L x = lambda D x` for diagonal positive `D`.
///
/// Eigenvalues are ascending; eigenvectors satisfy `x_i^T D x_j = delta_ij`.
pub fn generalized_eig(l: &DMatrix<f64>, d: &[f64]) -> Result<EigenSolution> {
    check_damping(l, d)?;
    let inv_sqrt: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let s = DMatrix::from_fn(l.nrows(), l.ncols(), |i, j| inv_sqrt[i] * l[(i, j)] * inv_sqrt[j]);
    let sym = symmetric_eig(&s)?;
    let mut x = sym.eigenvectors;
    for (i, mut row) in x.row_iter_mut().enumerate() {
        row *= inv_sqrt[i];
    }
    // Re-normalize in the D-norm to remove the round-off of the scaling.
    for mut col in x.column_iter_mut() {
        let norm = col.iter().zip(d).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
        col /= norm;
    }
    Ok(EigenSolution {
        eigenvalues: sym.eigenvalues,
        eigenvectors: x,
    })
}

/// `max_i || L x_i - lambda_i D x_i ||_2`.
pub fn eig_residual(l: &DMatrix<f64>, d: &[f64], sol: &EigenSolution) -> f64 {
    let dm = DMatrix::from_diagonal(&DVector::from_column_slice(d));
    sol.eigenvectors
        .column_iter()
        .zip(&sol.eigenvalues)
        .map(|(x, &lambda)| (l * x - (&dm * x) * lambda).norm())
        .fold(0.0, f64::max)
}

/// `max_{i,j} | x_i^T D x_j - delta_ij |`.
pub fn d_orthonormality_error(d: &[f64], x: &DMatrix<f64>) -> f64 {
    let dm = DMatrix::from_diagonal(&DVector::from_column_slice(d));
    let gram = x.transpose() * dm * x;
    let eye = DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
    max_abs(&(gram - eye))
}

/// Orthonormal basis of the column span of `a` (thin QR).
pub fn orthonormal_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().qr().q()
}

/// Frobenius norm of the sines of the principal angles between the column
/// spans of two matrices with the same number of columns.
pub fn sin_theta_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = orthonormal_basis(a);
    let qb = orthonormal_basis(b);
    let cosines = (qa.transpose() * qb).singular_values();
    cosines
        .iter()
        .map(|c| (1.0 - c.min(1.0).powi(2)).max(0.0))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    fn reconstruction_error(s: &DMatrix<f64>, sol: &EigenSolution) -> f64 {
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(sol.eigenvalues.clone()));
        (s - &sol.eigenvectors * lambda * sol.eigenvectors.transpose()).norm()
    }

    #[test]
    fn identity() {
        let sol = symmetric_eig(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(sol.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_permuted() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let sol = symmetric_eig(&s).unwrap();
        assert_eq!(sol.eigenvalues, vec![1.0, 2.0, 3.0]);
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(sol.eigenvectors, expected);
    }

    #[test]
    fn random_twenty_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_symmetric(20, &mut rng);
        let sol = symmetric_eig(&s).unwrap();
        let v = &sol.eigenvectors;
        assert!(max_abs(&(v.transpose() * v - DMatrix::identity(20, 20))) <= 1e-9);
        assert!(reconstruction_error(&s, &sol) <= 1e-9 * s.norm().max(1.0));
        assert!(sol.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn matches_nalgebra_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [1, 2, 5, 13] {
            let s = random_symmetric(n, &mut rng);
            let ours = symmetric_eig(&s).unwrap().eigenvalues;
            let mut theirs: Vec<f64> = s.clone().symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            for (a, b) in ours.iter().zip(&theirs) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn asymmetric_rejected() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(symmetric_eig(&s), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn sign_convention() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let sol = symmetric_eig(&s).unwrap();
        // Equal magnitudes: the first entry decides.
        for col in sol.eigenvectors.column_iter() {
            assert!(col[0] > 0.0);
        }
    }

    #[test]
    fn two_node_pencil() {
        let l = DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]);
        let d = [1.0, 2.0];
        let sol = generalized_eig(&l, &d).unwrap();
        assert!(sol.eigenvalues[0].abs() < 1e-12);
        assert_relative_eq!(sol.eigenvalues[1], 3.0, epsilon = 1e-12);
        assert!(d_orthonormality_error(&d, &sol.eigenvectors) < 1e-12);
        assert!(eig_residual(&l, &d, &sol) < 1e-12);
    }

    #[test]
    fn identity_damping_matches_symmetric() {
        let l = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        let a = generalized_eig(&l, &[1.0; 3]).unwrap();
        let b = symmetric_eig(&l).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert_relative_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn two_islands_have_two_zero_eigenvalues() {
        let mut l = DMatrix::zeros(6, 6);
        for (i, j) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
            l[(i, i)] += 1.0;
            l[(j, j)] += 1.0;
            l[(i, j)] -= 1.0;
            l[(j, i)] -= 1.0;
        }
        let sol = generalized_eig(&l, &[1.0, 2.0, 3.0, 1.5, 2.5, 1.0]).unwrap();
        assert!(sol.eigenvalues[0].abs() < 1e-9 && sol.eigenvalues[1].abs() < 1e-9);
        assert!(sol.eigenvalues[2] > 0.1);
    }

    #[test]
    fn nonpositive_damping_rejected() {
        let l = DMatrix::zeros(2, 2);
        assert!(generalized_eig(&l, &[1.0, 0.0]).is_err());
        assert!(generalized_eig(&l, &[1.0]).is_err());
    }

    #[test]
    fn corrupted_eigenvalue_residual() {
        let l = DMatrix::from_row_slice(2, 2, &[2.0, -2.0, -2.0, 2.0]);
        let d = [1.0, 2.0];
        let mut sol = generalized_eig(&l, &d).unwrap();
        let dx = DMatrix::from_diagonal(&DVector::from_column_slice(&d)) * sol.eigenvectors.column(1);
        sol.eigenvalues[1] += 1.0;
        assert_relative_eq!(eig_residual(&l, &d, &sol), dx.norm(), epsilon = 1e-12);
    }

    #[test]
    fn spectrum_csv() {
        let sol = symmetric_eig(&DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]))).unwrap();
        let mut buf = Vec::new();
        sol.write_spectrum_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("index,eigenvalue"));
        assert_eq!(text.lines().nth(1), Some("1,1.0000000000000000e0"));
    }

    #[test]
    fn sin_theta_of_identical_and_orthogonal_spans() {
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(3, 1, &[0.0, 2.0, 0.0]);
        assert!(sin_theta_frobenius(&a, &(&a * 3.0)) < 1e-12);
        assert_relative_eq!(sin_theta_frobenius(&a, &b), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn rayleigh_quotients_and_scaling(seed in 0u64..1000, n in 2usize..12, c in 0.1f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut l = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i + 1..n {
                    if j == i + 1 || rng.random_bool(0.3) {
                        let w = rng.random_range(0.1..5.0);
                        l[(i, i)] += w;
                        l[(j, j)] += w;
                        l[(i, j)] -= w;
                        l[(j, i)] -= w;
                    }
                }
            }
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..30.0)).collect();
            let sol = generalized_eig(&l, &d).unwrap();
            for (x, &lambda) in sol.eigenvectors.column_iter().zip(&sol.eigenvalues) {
                let num = x.dot(&(&l * x));
                let den: f64 = x.iter().zip(&d).map(|(v, w)| w * v * v).sum();
                prop_assert!((num / den - lambda).abs() <= 1e-8);
            }
            let scaled: Vec<f64> = d.iter().map(|x| c * x).collect();
            let sol_c = generalized_eig(&l, &scaled).unwrap();
            for (a, b) in sol.eigenvalues.iter().zip(&sol_c.eigenvalues) {
                prop_assert!((a / c - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }
    }
}
