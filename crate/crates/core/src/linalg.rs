//! Dense complex linear algebra kernels shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Truncation order of the Taylor core in [`matrix_exponential`]. With the
/// argument scaled to 1-norm <= 0.5 the series remainder is ~1e-23.
const EXP_TAYLOR_ORDER: u32 = 18;
const EXP_SCALE_TARGET: f64 = 0.5;

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum())
        .fold(0.0, f64::max)
}

pub fn is_finite_mat(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Matrix exponential by scaling-and-squaring around a fixed-order truncated
/// Taylor core evaluated in Horner form. No eigendecomposition is used, so
/// non-normal inputs (boosts, nilpotents) are handled uniformly.
pub fn matrix_exponential(x: &CMat) -> Result<CMat> {
    if x.nrows() != x.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix exponential requires a square matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    if !is_finite_mat(x) {
        return Err(Error::InvalidArgument(
            "matrix exponential requires finite entries".into(),
        ));
    }
    let n = x.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }

    let norm = one_norm(x);
    let squarings = if norm <= EXP_SCALE_TARGET {
        0
    } else {
        (norm / EXP_SCALE_TARGET).log2().ceil() as u32
    };
    let scaled = x.map(|z| z / C64::from(2f64.powi(squarings as i32)));

    let eye = CMat::identity(n, n);
    let mut acc = eye.clone();
    for k in (1..=EXP_TAYLOR_ORDER).rev() {
        acc = &eye + (&scaled * acc).map(|z| z / C64::from(k as f64));
    }

    let mut result = acc;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// Orthonormal basis of the null space of `a`, with singular values below
/// `rel_tol * sigma_max` treated as zero. Columns of the returned matrix are
/// the basis vectors; the matrix has zero columns when the null space is
/// trivial.
pub fn null_space(a: &CMat, rel_tol: f64) -> CMat {
    let ncols = a.ncols();
    if ncols == 0 {
        return CMat::zeros(0, 0);
    }
    // Pad to at least square so the thin SVD carries a full set of right
    // singular vectors.
    let padded = if a.nrows() < ncols {
        let mut p = CMat::zeros(ncols, ncols);
        p.view_mut((0, 0), (a.nrows(), ncols)).copy_from(a);
        p
    } else {
        a.clone()
    };

    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("SVD with v_t requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let threshold = rel_tol * sigma_max;

    let mut basis: Vec<CVec> = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= threshold {
            basis.push(v_t.row(i).map(|z| z.conj()).transpose());
        }
    }
    let mut out = CMat::zeros(ncols, basis.len());
    for (j, v) in basis.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Least-squares solve of `a x = b` through the SVD pseudo-inverse.
pub fn lstsq(a: &CMat, b: &CVec) -> Result<CVec> {
    let svd = a.clone().svd(true, true);
    svd.solve(&CMat::from_column_slice(b.len(), 1, b.as_slice()), 1e-13)
        .map(|m| m.column(0).into_owned())
        .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))
}

/// Largest principal-angle sine between the column spans of `a` and `b`
/// (both with orthonormal columns). Zero means identical subspaces.
pub fn subspace_gap(a: &CMat, b: &CMat) -> f64 {
    let gap_one_way = |p: &CMat, q: &CMat| -> f64 {
        // || (I - P P^H) Q ||_2
        let resid = q - p * (p.adjoint() * q);
        resid.svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
    };
    gap_one_way(a, b).max(gap_one_way(b, a))
}

/// Deterministic pseudo-random unitary from a seeded QR factorization.
pub fn random_unitary(n: usize, seed: u64) -> CMat {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let g = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let qr = g.qr();
    qr.q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn taylor_exp(x: &CMat, terms: u32) -> CMat {
        let n = x.nrows();
        let mut sum = CMat::identity(n, n);
        let mut term = CMat::identity(n, n);
        for k in 1..=terms {
            term = (&term * x).map(|z| z / C64::from(k as f64));
            sum += &term;
        }
        sum
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = CMat::zeros(3, 3);
        let e = matrix_exponential(&z).unwrap();
        assert_eq!(e, CMat::identity(3, 3));
    }

    #[test]
    fn exp_of_nilpotent_terminates() {
        let mut n = CMat::zeros(2, 2);
        n[(0, 1)] = C64::from(1.0);
        let e = matrix_exponential(&n).unwrap();
        let mut want = CMat::identity(2, 2);
        want[(0, 1)] = C64::from(1.0);
        assert!(max_abs(&(e - want)) < 1e-15);
    }

    #[test]
    fn exp_rotation_matches_long_taylor_series() {
        // so(2) generator scaled by theta = 0.3.
        let theta = 0.3;
        let mut x = CMat::zeros(2, 2);
        x[(0, 1)] = C64::from(-theta);
        x[(1, 0)] = C64::from(theta);
        let e = matrix_exponential(&x).unwrap();
        let oracle = taylor_exp(&x, 30);
        assert!(max_abs(&(e.clone() - oracle)) < 1e-12);
        assert_abs_diff_eq!(e[(0, 0)].re, theta.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(e[(1, 0)].re, theta.sin(), epsilon = 1e-14);
    }

    #[test]
    fn exp_inverse_residual_below_tolerance_at_large_norm() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..5 {
            let x = CMat::from_fn(4, 4, |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let x = x.map(|z| z * C64::from(10.0 / one_norm(&x.clone())));
            let e = matrix_exponential(&x).unwrap();
            let e_neg = matrix_exponential(&x.map(|z| -z)).unwrap();
            let resid = max_abs(&(&e * &e_neg - CMat::identity(4, 4)));
            assert!(resid < 1e-10, "residual {resid}");
        }
    }

    #[test]
    fn exp_rejects_non_square_and_non_finite() {
        let rect = CMat::zeros(2, 3);
        assert!(matrix_exponential(&rect).is_err());
        let mut bad = CMat::zeros(2, 2);
        bad[(0, 0)] = C64::new(f64::NAN, 0.0);
        assert!(matrix_exponential(&bad).is_err());
    }

    #[test]
    fn null_space_of_wide_matrix_is_complete() {
        // One constraint row on C^3: null space has dimension 2.
        let mut a = CMat::zeros(1, 3);
        a[(0, 0)] = C64::from(1.0);
        a[(0, 1)] = C64::from(1.0);
        a[(0, 2)] = C64::from(1.0);
        let ns = null_space(&a, 1e-8);
        assert_eq!(ns.ncols(), 2);
        assert!(max_abs(&(&a * &ns)) < 1e-14);
        // Orthonormal columns.
        let gram = ns.adjoint() * &ns;
        assert!(max_abs(&(gram - CMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let u = random_unitary(5, 3);
        let resid = max_abs(&(u.adjoint() * &u - CMat::identity(5, 5)));
        assert!(resid < 1e-12);
    }
}
