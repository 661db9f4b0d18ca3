//! Dense complex linear algebra used across the crate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub type C64 = num_complex::Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn sign(odd: bool) -> f64 {
    if odd {
        -1.0
    } else {
        1.0
    }
}

/// Largest absolute entry (0 for empty input).
pub fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_mat(m: &CMat) -> f64 {
    max_abs(m.as_slice())
}

pub fn dist(a: &CVec, b: &CVec) -> f64 {
    max_abs((a - b).as_slice())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Column-major flattening of a matrix into a vector.
pub fn flatten(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Singular values and the full right singular basis (columns of V).
fn svd_with_v(m: &CMat) -> (Vec<f64>, CMat) {
    let (r, cols) = m.shape();
    let padded = if r < cols {
        let mut p = CMat::zeros(cols, cols);
        p.view_mut((0, 0), (r, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("v requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    (sv, vt.adjoint())
}

/// Orthonormal basis (as columns) of the null space of `m`.
/// A singular value counts as zero when it is at most `rel` times the largest one.
pub fn null_space(m: &CMat, rel: f64) -> CMat {
    let cols = m.ncols();
    if cols == 0 {
        return CMat::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return CMat::identity(cols, cols);
    }
    let (sv, v) = svd_with_v(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..cols)
        .filter(|&k| smax < 1e-300 || sv[k] <= rel * smax)
        .collect();
    let mut out = CMat::zeros(cols, keep.len());
    for (j, &k) in keep.iter().enumerate() {
        out.set_column(j, &v.column(k));
    }
    out
}

pub fn rank(m: &CMat, rel: f64) -> usize {
    m.ncols() - null_space(m, rel).ncols()
}

/// Minimum-norm least-squares solution of `a x = b`, with the residual norm.
pub fn lstsq(a: &CMat, b: &CVec) -> (CVec, f64) {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return (CVec::zeros(n), b.norm());
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let ub = u.adjoint() * b;
    let mut y = CVec::zeros(vt.nrows());
    for k in 0..vt.nrows() {
        let s = svd.singular_values[k];
        if s > 1e-12 * smax && s > 0.0 {
            y[k] = ub[k] / s;
        }
    }
    let x = vt.adjoint() * y;
    let res = (a * &x - b).norm();
    (x, res)
}

/// Eigen-decomposition of a Hermitian matrix (the Hermitian part is used).
/// Eigenvalues ascending, eigenvectors as matching columns.
pub fn herm_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (j, &k) in idx.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(k));
    }
    (vals, vecs)
}

pub fn expm(m: &CMat) -> CMat {
    m.exp()
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    max_abs_mat(&(m - m.adjoint())) <= tol
}

/// Random complex vector with real and imaginary parts uniform in [-1, 1].
pub fn random_cvec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_cmat<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let a = random_cmat(rng, n);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

/// Random unitary exp(iH) for a random Hermitian H.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let h = random_hermitian(rng, n);
    expm(&(h * I))
}

pub fn seeded(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
