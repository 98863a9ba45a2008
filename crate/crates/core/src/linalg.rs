//! Dense complex linear algebra used throughout the crate.
//!
//! Thin wrappers over LAPACK (through `ndarray-linalg`) that fix the
//! conventions the rest of the code relies on: singular values descending,
//! Hermitian eigenvalues ascending, rank decided relative to the largest
//! singular value, and row-major vectorisation `vec(X)[a*n + b] = X[a, b]`.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eig, Eigh, Inverse, JobSvd, LeastSquaresSvd, SVDDC, UPLO};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{MpsError, Result};

pub type C64 = Complex64;
pub type Mat = Array2<C64>;

/// Default relative tolerance for keeping singular values.
pub const TOL_RANK: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn eye(n: usize) -> Mat {
    Mat::eye(n)
}

pub fn zeros(r: usize, c: usize) -> Mat {
    Mat::zeros((r, c))
}

pub fn dagger(a: &ArrayView2<C64>) -> Mat {
    a.t().mapv(|z| z.conj())
}

pub fn dag(a: &Mat) -> Mat {
    dagger(&a.view())
}

pub fn from_real(rows: &[&[f64]]) -> Mat {
    let r = rows.len();
    let cols = rows.first().map_or(0, |x| x.len());
    Mat::from_shape_fn((r, cols), |(i, j)| cr(rows[i][j]))
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
                .assign(&b.mapv(|z| z * aij));
        }
    }
    out
}

pub fn fro_norm(a: &Mat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &Mat) -> C64 {
    a.diag().sum()
}

pub fn is_finite(a: &Mat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest singular value (operator 2-norm).
pub fn op_norm(a: &Mat) -> Result<f64> {
    Ok(svd_thin(a)?.1.first().copied().unwrap_or(0.0))
}

/// Thin SVD `a = U diag(s) Vt` with `s` descending. Handles empty matrices.
pub fn svd_thin(a: &Mat) -> Result<(Mat, Vec<f64>, Mat)> {
    let (m, n) = a.dim();
    let k = m.min(n);
    if k == 0 {
        return Ok((zeros(m, 0), Vec::new(), zeros(0, n)));
    }
    let a = a.as_standard_layout().to_owned();
    let (u, s, vt) = a.svddc(JobSvd::Some)?;
    let u = u.ok_or_else(|| MpsError::Numerical("svd returned no U".into()))?;
    let vt = vt.ok_or_else(|| MpsError::Numerical("svd returned no Vt".into()))?;
    Ok((u, s.to_vec(), vt))
}

/// Number of singular values strictly above `tol * s[0]`.
pub fn rank_of(s: &[f64], tol: f64) -> usize {
    match s.first() {
        Some(&s0) if s0 > 0.0 => s.iter().take_while(|&&x| x > tol * s0).count(),
        _ => 0,
    }
}

pub fn rank(a: &Mat, tol: f64) -> Result<usize> {
    Ok(rank_of(&svd_thin(a)?.1, tol))
}

/// Orthonormal basis (as columns) of the column span of `a`.
pub fn orth(a: &Mat, tol: f64) -> Result<Mat> {
    let (u, s, _) = svd_thin(a)?;
    let r = rank_of(&s, tol);
    Ok(u.slice(s![.., ..r]).to_owned())
}

/// Orthonormal basis (as columns) of the null space of `a`, deciding rank with
/// an absolute-or-relative threshold `tol * max(s[0], 1)`.
pub fn null_space(a: &Mat, tol: f64) -> Result<Mat> {
    let (m, n) = a.dim();
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    if m == 0 {
        return Ok(eye(n));
    }
    let a = a.as_standard_layout().to_owned();
    let (_, s, vt) = a.svddc(JobSvd::All)?;
    let vt = vt.ok_or_else(|| MpsError::Numerical("svd returned no Vt".into()))?;
    let scale = s.first().copied().unwrap_or(0.0).max(1.0);
    let r = s.iter().filter(|&&x| x > tol * scale).count();
    Ok(dag(&vt.slice(s![r.., ..]).to_owned()))
}

/// The `k` right singular vectors of `a` with the smallest singular values
/// (as columns), plus those singular values (ascending).
pub fn smallest_right_singular(a: &Mat, k: usize) -> Result<(Mat, Vec<f64>)> {
    let (m, n) = a.dim();
    if k > n {
        return Err(MpsError::InvalidInput(format!("asked for {k} singular vectors of a {m}x{n} matrix")));
    }
    let a = a.as_standard_layout().to_owned();
    let (_, s, vt) = a.svddc(JobSvd::All)?;
    let vt = vt.ok_or_else(|| MpsError::Numerical("svd returned no Vt".into()))?;
    let mut sv: Vec<f64> = s.to_vec();
    sv.resize(n, 0.0);
    let cols: Vec<usize> = (n - k..n).rev().collect();
    let picked = vt.select(Axis(0), &cols);
    Ok((dag(&picked), cols.iter().map(|&c| sv[c]).collect()))
}

/// Eigen-decomposition of a Hermitian matrix (the input is symmetrised first).
/// Eigenvalues ascending; eigenvectors as columns.
pub fn eigh(a: &Mat) -> Result<(Vec<f64>, Mat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    // column-major copy: the row-major path hands LAPACK the conjugate
    let mut h = Mat::zeros(a.raw_dim().f());
    h.assign(&(a + &dag(a)).mapv(|z| z * 0.5));
    let (w, v) = h.eigh(UPLO::Lower)?;
    Ok((w.to_vec(), v))
}

/// Eigen-decomposition of a general square matrix, sorted by descending modulus
/// (ties by descending real part then imaginary part, so the order is stable).
pub fn eig_sorted(a: &Mat) -> Result<(Vec<C64>, Mat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), zeros(0, 0)));
    }
    let a = a.as_standard_layout().to_owned();
    let (w, v) = a.eig()?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| {
        let (a, b) = (w[i], w[j]);
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal))
            .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let vals = idx.iter().map(|&i| w[i]).collect();
    let vecs = v.select(Axis(1), &idx);
    Ok((vals, vecs))
}

/// Minimum-norm least-squares solution of `a x = b` (b may have several columns).
pub fn lstsq(a: &Mat, b: &Mat) -> Result<Mat> {
    let a = a.as_standard_layout().to_owned();
    let b = b.as_standard_layout().to_owned();
    let res = a.least_squares(&b)?;
    Ok(res.solution)
}

pub fn inv(a: &Mat) -> Result<Mat> {
    Ok(a.as_standard_layout().to_owned().inv()?)
}

/// Row-major vectorisation of a square matrix.
pub fn vec_of(a: &Mat) -> Array1<C64> {
    Array1::from_iter(a.iter().copied())
}

/// Inverse of [`vec_of`] for an `n x n` matrix.
pub fn unvec(v: &[C64], n: usize) -> Mat {
    Mat::from_shape_fn((n, n), |(i, j)| v[i * n + j])
}

/// Moore-Penrose pseudo-inverse with relative singular value cutoff.
pub fn pinv(a: &Mat, tol: f64) -> Result<Mat> {
    let (u, s, vt) = svd_thin(a)?;
    let r = rank_of(&s, tol);
    let mut out = zeros(a.ncols(), a.nrows());
    for k in 0..r {
        let vk = vt.row(k).mapv(|z| z.conj());
        let uk = u.column(k).mapv(|z| z.conj());
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                out[[i, j]] += vk[i] * uk[j] / s[k];
            }
        }
    }
    Ok(out)
}

/// Apply `f` to the eigenvalues of a Hermitian matrix.
pub fn herm_fn(a: &Mat, f: impl Fn(f64) -> f64) -> Result<Mat> {
    let (w, v) = eigh(a)?;
    let d = Array1::from_iter(w.iter().map(|&x| cr(f(x))));
    let scaled = &v * &d.view().insert_axis(Axis(0));
    Ok(scaled.dot(&dag(&v)))
}

/// Complete the orthonormal columns of `iso` (n x k) to an n x n unitary whose
/// first k columns are `iso`.
pub fn complete_unitary(iso: &Mat) -> Result<Mat> {
    let (n, k) = iso.dim();
    if k > n {
        return Err(MpsError::InvalidInput(format!(
            "cannot complete {k} columns in dimension {n}"
        )));
    }
    let mut out = zeros(n, n);
    out.slice_mut(s![.., ..k]).assign(iso);
    if k == n {
        return Ok(out);
    }
    // Orthogonal complement = null space of iso^dagger.
    let comp = null_space(&dag(iso), 1e-10)?;
    if comp.ncols() != n - k {
        return Err(MpsError::Numerical(format!(
            "column completion found {} complementary columns, expected {}",
            comp.ncols(),
            n - k
        )));
    }
    out.slice_mut(s![.., k..]).assign(&comp);
    Ok(out)
}

/// ‖U†U − 𝟙‖_F.
pub fn unitarity_residual(u: &Mat) -> f64 {
    let n = u.ncols();
    fro_norm(&(dag(u).dot(u) - eye(n)))
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> Mat {
    Mat::from_shape_fn((r, c), |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    let g = random_complex(rng, n, n);
    let (q, r) = gram_schmidt_qr(&g);
    let mut q = q;
    for j in 0..n {
        let d = r[[j, j]];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { cr(1.0) };
        q.column_mut(j).mapv_inplace(|z| z * ph);
    }
    q
}

/// Modified Gram-Schmidt QR for a full-column-rank square or tall matrix.
fn gram_schmidt_qr(a: &Mat) -> (Mat, Mat) {
    let (m, n) = a.dim();
    let mut q = a.clone();
    let mut r = zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let qi = q.column(i).to_owned();
            let proj: C64 = qi.iter().zip(q.column(j)).map(|(x, y)| x.conj() * y).sum();
            r[[i, j]] = proj;
            let mut cj = q.column_mut(j);
            for t in 0..m {
                cj[t] -= proj * qi[t];
            }
        }
        let nrm = q.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        r[[j, j]] = cr(nrm);
        if nrm > 0.0 {
            q.column_mut(j).mapv_inplace(|z| z / nrm);
        }
    }
    (q, r)
}

/// Hermitian inner product ⟨a, b⟩ = Σ conj(a_i) b_i.
pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest principal angle sine between two subspaces given by orthonormal
/// column bases; 0 iff the spans coincide (requires equal dimensions).
pub fn subspace_distance(a: &Mat, b: &Mat) -> Result<f64> {
    if a.ncols() != b.ncols() || a.nrows() != b.nrows() {
        return Ok(1.0);
    }
    if a.ncols() == 0 {
        return Ok(0.0);
    }
    // ‖(1 - P_b) P_a‖ = ‖a - b b† a‖
    let resid = a - &b.dot(&dag(b).dot(a));
    op_norm(&resid)
}
