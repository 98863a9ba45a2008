//! One site of a matrix product state: `d` matrices of shape `d_left x d_right`.

use ndarray::{s, Array3, ArrayView2, Axis};

use crate::error::{invalid, mismatch, Result};
use crate::linalg::{cr, dag, eye, fro_norm, kron, zeros, Mat, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    data: Array3<C64>,
}

impl SiteTensor {
    /// Wrap an `(i, alpha, beta)` array. All entries must be finite.
    pub fn new(data: Array3<C64>) -> Result<Self> {
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("site tensor has non-finite entries");
        }
        if data.len_of(Axis(0)) == 0 {
            return invalid("site tensor needs d >= 1");
        }
        Ok(Self { data })
    }

    pub fn from_matrices(mats: &[Mat]) -> Result<Self> {
        let Some(first) = mats.first() else {
            return invalid("site tensor needs at least one matrix");
        };
        let (dl, dr) = first.dim();
        let mut data = Array3::zeros((mats.len(), dl, dr));
        for (i, m) in mats.iter().enumerate() {
            if m.dim() != (dl, dr) {
                return mismatch(format!(
                    "matrix {i} has shape {:?}, expected {:?}",
                    m.dim(),
                    (dl, dr)
                ));
            }
            data.index_axis_mut(Axis(0), i).assign(m);
        }
        Self::new(data)
    }

    pub fn zeros(d: usize, dl: usize, dr: usize) -> Self {
        Self { data: Array3::zeros((d, dl, dr)) }
    }

    /// Tensor of a product state site: `d x 1 x 1` holding `v`.
    pub fn product(v: &[C64]) -> Result<Self> {
        let data = Array3::from_shape_fn((v.len(), 1, 1), |(i, _, _)| v[i]);
        Self::new(data)
    }

    pub fn d(&self) -> usize {
        self.data.len_of(Axis(0))
    }

    pub fn d_left(&self) -> usize {
        self.data.len_of(Axis(1))
    }

    pub fn d_right(&self) -> usize {
        self.data.len_of(Axis(2))
    }

    pub fn data(&self) -> &Array3<C64> {
        &self.data
    }

    pub fn mat(&self, i: usize) -> ArrayView2<'_, C64> {
        self.data.index_axis(Axis(0), i)
    }

    pub fn matrices(&self) -> Vec<Mat> {
        (0..self.d()).map(|i| self.mat(i).to_owned()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.d_left() == self.d_right()
    }

    pub fn scaled(&self, f: C64) -> Self {
        Self { data: self.data.mapv(|z| z * f) }
    }

    /// `L A_i R` for every `i`.
    pub fn sandwich(&self, left: &Mat, right: &Mat) -> Result<Self> {
        if left.ncols() != self.d_left() || right.nrows() != self.d_right() {
            return mismatch(format!(
                "cannot sandwich {}x{} tensor between {:?} and {:?}",
                self.d_left(),
                self.d_right(),
                left.dim(),
                right.dim()
            ));
        }
        let mats: Vec<Mat> = (0..self.d()).map(|i| left.dot(&self.mat(i)).dot(right)).collect();
        Self::from_matrices(&mats)
    }

    pub fn mul_right(&self, right: &Mat) -> Result<Self> {
        self.sandwich(&eye(self.d_left()), right)
    }

    pub fn mul_left(&self, left: &Mat) -> Result<Self> {
        self.sandwich(left, &eye(self.d_right()))
    }

    /// Σ_i A_i A_i†.
    pub fn gram_right(&self) -> Mat {
        let mut out = zeros(self.d_left(), self.d_left());
        for i in 0..self.d() {
            let a = self.mat(i);
            out = out + a.dot(&a.t().mapv(|z| z.conj()));
        }
        out
    }

    /// Σ_i A_i† X A_i.
    pub fn dual_map(&self, x: &Mat) -> Mat {
        let mut out = zeros(self.d_right(), self.d_right());
        for i in 0..self.d() {
            let a = self.mat(i).to_owned();
            out = out + dag(&a).dot(x).dot(&a);
        }
        out
    }

    /// Σ_i A_i X A_i†.
    pub fn map(&self, x: &Mat) -> Mat {
        let mut out = zeros(self.d_left(), self.d_left());
        for i in 0..self.d() {
            let a = self.mat(i).to_owned();
            out = out + a.dot(x).dot(&dag(&a));
        }
        out
    }

    /// ‖Σ_i A_i A_i† − 𝟙‖_F.
    pub fn isometry_residual(&self) -> f64 {
        fro_norm(&(self.gram_right() - eye(self.d_left())))
    }

    /// Σ_i A_i ⊗ conj(A_i), row-major vectorisation.
    pub fn transfer_matrix(&self) -> Mat {
        let (dl, dr) = (self.d_left(), self.d_right());
        let mut out = zeros(dl * dl, dr * dr);
        for i in 0..self.d() {
            let a = self.mat(i).to_owned();
            out = out + kron(&a, &a.mapv(|z| z.conj()));
        }
        out
    }

    /// `(d * d_left) x d_right` matrix with rows indexed `(i, alpha)`.
    pub fn unfold_left(&self) -> Mat {
        let (d, dl, dr) = self.data.dim();
        self.data
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((d * dl, dr))
            .expect("contiguous reshape")
    }

    /// `d_left x (d * d_right)` matrix with columns indexed `(i, beta)`.
    pub fn unfold_right(&self) -> Mat {
        let (d, dl, dr) = self.data.dim();
        let mut out = zeros(dl, d * dr);
        for i in 0..d {
            out.slice_mut(s![.., i * dr..(i + 1) * dr]).assign(&self.mat(i));
        }
        out
    }

    pub fn from_unfold_left(m: &Mat, d: usize) -> Result<Self> {
        let (rows, dr) = m.dim();
        if rows % d != 0 {
            return mismatch(format!("{rows} rows not divisible by d={d}"));
        }
        let data = m
            .as_standard_layout()
            .to_owned()
            .into_shape_with_order((d, rows / d, dr))
            .expect("contiguous reshape");
        Self::new(data)
    }

    pub fn from_unfold_right(m: &Mat, d: usize) -> Result<Self> {
        let cols = m.ncols();
        if !cols.is_multiple_of(d) {
            return mismatch(format!("{cols} columns not divisible by d={d}"));
        }
        let dr = cols / d;
        let mats: Vec<Mat> = (0..d).map(|i| m.slice(s![.., i * dr..(i + 1) * dr]).to_owned()).collect();
        Self::from_matrices(&mats)
    }

    /// Block-diagonal direct sum with another tensor of the same `d`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.d() != other.d() {
            return mismatch("direct sum of tensors with different d");
        }
        let (l1, r1) = (self.d_left(), self.d_right());
        let (l2, r2) = (other.d_left(), other.d_right());
        let mut data = Array3::zeros((self.d(), l1 + l2, r1 + r2));
        data.slice_mut(s![.., ..l1, ..r1]).assign(&self.data);
        data.slice_mut(s![.., l1.., r1..]).assign(&other.data);
        Self::new(data)
    }

    /// Merge two neighbouring sites into one with physical dimension `d1 * d2`;
    /// index `(i, j)` maps to `i * d2 + j` and carries `A_i B_j`.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.d_right() != other.d_left() {
            return mismatch("merged tensors do not share a bond");
        }
        let mut mats = Vec::with_capacity(self.d() * other.d());
        for i in 0..self.d() {
            let a = self.mat(i);
            for j in 0..other.d() {
                mats.push(a.dot(&other.mat(j)));
            }
        }
        Self::from_matrices(&mats)
    }

    /// Zero-pad the bonds to `dl x dr`.
    pub fn padded(&self, dl: usize, dr: usize) -> Result<Self> {
        if dl < self.d_left() || dr < self.d_right() {
            return invalid("padding cannot shrink a tensor");
        }
        let mut data = Array3::zeros((self.d(), dl, dr));
        data.slice_mut(s![.., ..self.d_left(), ..self.d_right()]).assign(&self.data);
        Self::new(data)
    }

    /// Phase `e^{i theta}` that makes the largest-magnitude entry of the first
    /// nonzero physical matrix real and positive (earliest flat index wins
    /// ties). Returns 1 for the zero tensor.
    pub fn phase_anchor(&self) -> C64 {
        for i in 0..self.d() {
            let m = self.mat(i);
            let max = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
            if max == 0.0 {
                continue;
            }
            let pick = m.iter().find(|z| z.norm() >= max * (1.0 - 1e-12)).copied().unwrap_or(cr(1.0));
            return pick / pick.norm();
        }
        cr(1.0)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.data.dim() != other.data.dim() {
            return f64::INFINITY;
        }
        self.data.iter().zip(other.data.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_real;

    fn aklt_like() -> SiteTensor {
        SiteTensor::from_matrices(&[
            from_real(&[&[1.0, 0.0], &[0.0, -1.0]]),
            from_real(&[&[0.0, 1.0], &[0.0, 0.0]]),
            from_real(&[&[0.0, 0.0], &[1.0, 0.0]]),
        ])
        .unwrap()
    }

    #[test]
    fn unfold_roundtrip() {
        let t = aklt_like();
        let l = SiteTensor::from_unfold_left(&t.unfold_left(), 3).unwrap();
        let r = SiteTensor::from_unfold_right(&t.unfold_right(), 3).unwrap();
        assert_eq!(l, t);
        assert_eq!(r, t);
    }

    #[test]
    fn transfer_matches_map() {
        let t = aklt_like();
        let x = from_real(&[&[0.3, 1.0], &[-2.0, 0.7]]);
        let e = t.transfer_matrix();
        let vx = x.clone().into_shape_with_order(4).unwrap();
        let via_matrix = e.dot(&vx).into_shape_with_order((2, 2)).unwrap();
        assert!(fro_norm(&(via_matrix - t.map(&x))) < 1e-14);
    }

    #[test]
    fn merge_multiplies() {
        let t = aklt_like();
        let m = t.merge(&t).unwrap();
        assert_eq!(m.d(), 9);
        assert_eq!(m.mat(3 + 2).to_owned(), t.mat(1).dot(&t.mat(2)));
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = from_real(&[&[1.0]]);
        m[[0, 0]] = C64::new(f64::NAN, 0.0);
        assert!(SiteTensor::from_matrices(&[m]).is_err());
    }
}
