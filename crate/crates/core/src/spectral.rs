//! Sample matrices, symmetric eigendecomposition, and causal projectors.
//!
//! Inputs arrive either as a batch of embedding rows or as an image. Images
//! are cut into non-overlapping `k×k×C` patches, one patch per row, so both
//! kinds end up as an `n×p` [`SampleMatrix`] whose covariance is analysed.

use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Default side length of the square patches cut from images.
pub const DEFAULT_PATCH_SIDE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    EmbeddingBatch,
    ImagePatches,
}

/// Everything needed to put patch rows back into an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGeometry {
    pub patch_side: usize,
    pub channels: usize,
    /// Height and width actually covered by patches (after cropping).
    pub height: usize,
    pub width: usize,
    pub original_height: usize,
    pub original_width: usize,
}

impl PatchGeometry {
    pub fn cropped(&self) -> bool {
        self.height != self.original_height || self.width != self.original_width
    }
}

/// A dense `H×W×C` image stored row-major with the channel index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let expected = height * width * channels;
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: data.len() });
        }
        Ok(Self { height, width, channels, data })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self { height, width, channels, data }
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

/// An `n×p` observation matrix (rows are observations).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Mat<f64>,
    centered: bool,
    provenance: Provenance,
    geometry: Option<PatchGeometry>,
}

impl SampleMatrix {
    /// Wraps an embedding batch. Requires `n ≥ 2` and `p ≥ 2`.
    pub fn new(data: Mat<f64>) -> Result<Self> {
        Self::with_provenance(data, Provenance::EmbeddingBatch, None)
    }

    pub fn with_provenance(
        data: Mat<f64>,
        provenance: Provenance,
        geometry: Option<PatchGeometry>,
    ) -> Result<Self> {
        if data.nrows() < 2 || data.ncols() < 2 {
            return Err(Error::Degenerate(format!(
                "sample matrix must be at least 2x2, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if provenance == Provenance::ImagePatches {
            let geom = geometry.ok_or_else(|| {
                Error::Contract("image-patch sample matrix requires patch geometry".into())
            })?;
            let p = geom.patch_side * geom.patch_side * geom.channels;
            if p != data.ncols() {
                return Err(Error::DimensionMismatch { expected: p, found: data.ncols() });
            }
        }
        Ok(Self { data, centered: false, provenance, geometry })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(linalg::from_rows(rows)?)
    }

    pub fn data(&self) -> MatRef<'_, f64> {
        self.data.as_ref()
    }

    pub fn into_data(self) -> Mat<f64> {
        self.data
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn geometry(&self) -> Option<PatchGeometry> {
        self.geometry
    }

    pub fn column_means(&self) -> Vec<f64> {
        linalg::column_means(self.data.as_ref())
    }

    /// Returns a copy with every column mean removed.
    pub fn centered(&self) -> SampleMatrix {
        let means = self.column_means();
        SampleMatrix {
            data: linalg::subtract_row(self.data.as_ref(), &means),
            centered: true,
            provenance: self.provenance,
            geometry: self.geometry,
        }
    }

    /// Same metadata, new payload of identical shape.
    pub(crate) fn replace_data(&self, data: Mat<f64>, centered: bool) -> SampleMatrix {
        debug_assert_eq!((data.nrows(), data.ncols()), (self.nrows(), self.ncols()));
        SampleMatrix { data, centered, provenance: self.provenance, geometry: self.geometry }
    }
}

/// `(1/n)·XᵀX`, optionally after removing column means.
pub fn covariance(sample: &SampleMatrix, center: bool) -> Result<Mat<f64>> {
    let n = sample.nrows();
    if n < 2 {
        return Err(Error::Degenerate(format!("covariance needs n >= 2, got {n}")));
    }
    let scale = 1.0 / n as f64;
    if center && !sample.is_centered() {
        let c = sample.centered();
        Ok(linalg::scaled_gram(c.data(), scale))
    } else {
        Ok(linalg::scaled_gram(sample.data(), scale))
    }
}

/// Eigenvalues in descending order with matching, sign-canonical eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: Mat<f64>,
    /// `(n, p)` of the data the decomposed matrix came from; `(p, p)` for a raw matrix.
    pub source_dims: (usize, usize),
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        linalg::col_to_vec(self.eigenvectors.as_ref(), i)
    }

    /// `VΛVᵀ`.
    pub fn reconstruct(&self) -> Mat<f64> {
        let v = self.eigenvectors.as_ref();
        let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        &scaled * v.transpose()
    }
}

/// Tolerance used when checking (and repairing) input symmetry.
const SYMMETRY_TOL: f64 = 1e-9;
/// Magnitudes within this distance of the largest one count as ties.
const SIGN_TIE_TOL: f64 = 1e-12;

fn check_square_symmetric(m: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    if !linalg::all_finite(m) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    let p = m.nrows();
    let scale = linalg::max_abs(m).max(1.0);
    let mut worst = 0.0f64;
    for j in 0..p {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(Error::Contract(format!("matrix is not symmetric (max asymmetry {worst:e})")));
    }
    Ok(Mat::from_fn(p, p, |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
}

/// Flips `v` so its largest-magnitude component is positive; the lowest
/// index wins among (numerically) tied magnitudes.
pub fn canonicalize_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if let Some(lead) = v.iter().position(|x| x.abs() >= peak - SIGN_TIE_TOL) {
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn symmetric_eig(m: MatRef<'_, f64>) -> Result<SpectralDecomposition> {
    let sym = check_square_symmetric(m)?;
    let p = sym.nrows();
    let evd = sym
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigendecomposition did not converge: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer returns ascending order.
    let eigenvalues: Vec<f64> = (0..p).rev().map(|i| s[i]).collect();
    let mut eigenvectors = Mat::<f64>::zeros(p, p);
    let mut col = vec![0.0; p];
    for (dst, src) in (0..p).rev().enumerate() {
        for (i, c) in col.iter_mut().enumerate() {
            *c = u[(i, src)];
        }
        canonicalize_sign(&mut col);
        for (i, c) in col.iter().enumerate() {
            eigenvectors[(i, dst)] = *c;
        }
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors, source_dims: (p, p) })
}

/// Descending eigenvalues only; much cheaper than [`symmetric_eig`].
pub fn symmetric_eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let sym = check_square_symmetric(m)?;
    let mut ev = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigenvalue solver did not converge: {e:?}")))?;
    ev.reverse();
    Ok(ev)
}

/// Covariance followed by [`symmetric_eig`], recording the source shape.
pub fn decompose_sample(sample: &SampleMatrix, center: bool) -> Result<SpectralDecomposition> {
    let cov = covariance(sample, center)?;
    let mut d = symmetric_eig(cov.as_ref())?;
    d.source_dims = (sample.nrows(), sample.ncols());
    Ok(d)
}

/// Cuts an image into non-overlapping `k×k` patches, one flattened patch per row.
///
/// Patches are ordered row-major over the patch grid; each is flattened as
/// `(dy, dx, channel)` with the channel fastest. Dimensions that are not a
/// multiple of `k` are cropped at the bottom/right and the geometry records it.
pub fn patch_matrix(image: &Image, patch_side: usize) -> Result<SampleMatrix> {
    let k = patch_side;
    if k == 0 || k > image.height.min(image.width) {
        return Err(Error::Domain(format!(
            "patch side {k} must be in 1..={}",
            image.height.min(image.width)
        )));
    }
    let rows_of_patches = image.height / k;
    let cols_of_patches = image.width / k;
    let geometry = PatchGeometry {
        patch_side: k,
        channels: image.channels,
        height: rows_of_patches * k,
        width: cols_of_patches * k,
        original_height: image.height,
        original_width: image.width,
    };
    let n = rows_of_patches * cols_of_patches;
    let p = k * k * image.channels;
    let mut data = Mat::<f64>::zeros(n, p);
    for py in 0..rows_of_patches {
        for px in 0..cols_of_patches {
            let row = py * cols_of_patches + px;
            let mut col = 0;
            for dy in 0..k {
                for dx in 0..k {
                    for c in 0..image.channels {
                        data[(row, col)] = image.at(py * k + dy, px * k + dx, c);
                        col += 1;
                    }
                }
            }
        }
    }
    SampleMatrix::with_provenance(data, Provenance::ImagePatches, Some(geometry))
}

/// Inverse of [`patch_matrix`]; returns the (possibly cropped) image.
pub fn reassemble(sample: &SampleMatrix) -> Result<Image> {
    let geom = match (sample.provenance(), sample.geometry()) {
        (Provenance::ImagePatches, Some(g)) => g,
        _ => return Err(Error::Contract("sample matrix carries no patch geometry".into())),
    };
    let k = geom.patch_side;
    let cols_of_patches = geom.width / k;
    let expected_rows = (geom.height / k) * cols_of_patches;
    if sample.nrows() != expected_rows {
        return Err(Error::DimensionMismatch { expected: expected_rows, found: sample.nrows() });
    }
    let mut data = vec![0.0; geom.height * geom.width * geom.channels];
    let x = sample.data();
    for row in 0..sample.nrows() {
        let (py, px) = (row / cols_of_patches, row % cols_of_patches);
        let mut col = 0;
        for dy in 0..k {
            for dx in 0..k {
                for c in 0..geom.channels {
                    let (y, xx) = (py * k + dy, px * k + dx);
                    data[(y * geom.width + xx) * geom.channels + c] = x[(row, col)];
                    col += 1;
                }
            }
        }
    }
    Image::new(geom.height, geom.width, geom.channels, data)
}

/// Orthogonal projector onto the span of an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalProjector {
    basis: Mat<f64>,
}

/// Orthonormality tolerance for projector bases.
pub const BASIS_TOL: f64 = 1e-8;

impl CausalProjector {
    pub fn from_basis(basis: Mat<f64>) -> Result<Self> {
        if basis.ncols() == 0 {
            return Err(Error::EmptySubspace);
        }
        let defect = linalg::orthonormality_defect(basis.as_ref());
        if defect >= BASIS_TOL {
            return Err(Error::Contract(format!("basis is not orthonormal (defect {defect:e})")));
        }
        Ok(Self { basis })
    }

    pub fn basis(&self) -> MatRef<'_, f64> {
        self.basis.as_ref()
    }

    /// Retained dimension `k`.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// `P = EEᵀ`.
    pub fn matrix(&self) -> Mat<f64> {
        &self.basis * self.basis.transpose()
    }
}

/// Projector onto the eigenvectors at `indices`.
pub fn build_projector(decomp: &SpectralDecomposition, indices: &[usize]) -> Result<CausalProjector> {
    if indices.is_empty() {
        return Err(Error::EmptySubspace);
    }
    let p = decomp.dim();
    if let Some(&bad) = indices.iter().find(|&&i| i >= p) {
        return Err(Error::Domain(format!("eigenvector index {bad} out of range 0..{p}")));
    }
    let v = decomp.eigenvectors.as_ref();
    let basis = Mat::from_fn(p, indices.len(), |i, j| v[(i, indices[j])]);
    CausalProjector::from_basis(basis)
}

/// `E(Eᵀe)`.
pub fn project(vector: &[f64], projector: &CausalProjector) -> Result<Vec<f64>> {
    let p = projector.dim();
    if vector.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: vector.len() });
    }
    let e = projector.basis();
    let coeffs: Vec<f64> = (0..e.ncols())
        .map(|j| (0..p).map(|i| e[(i, j)] * vector[i]).sum())
        .collect();
    Ok((0..p).map(|i| (0..e.ncols()).map(|j| e[(i, j)] * coeffs[j]).sum()).collect())
}

/// Projects every row; metadata (including patch geometry) is kept.
pub fn project_rows(sample: &SampleMatrix, projector: &CausalProjector) -> Result<SampleMatrix> {
    let projected = project_matrix_rows(sample.data(), projector)?;
    Ok(sample.replace_data(projected, sample.is_centered()))
}

pub(crate) fn project_matrix_rows(x: MatRef<'_, f64>, projector: &CausalProjector) -> Result<Mat<f64>> {
    if x.ncols() != projector.dim() {
        return Err(Error::DimensionMismatch { expected: projector.dim(), found: x.ncols() });
    }
    let e = projector.basis();
    Ok((x * e) * e.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    fn random_symmetric(p: usize, seed: u64) -> Mat<f64> {
        let mut rng = crate::rng::rng_from_seed(seed);
        let a = Mat::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        Mat::from_fn(p, p, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
    }

    #[test]
    fn covariance_of_identity_rows() {
        let s = SampleMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let c = covariance(&s, false).unwrap();
        assert_eq!(c[(0, 0)], 0.5);
        assert_eq!(c[(1, 1)], 0.5);
        assert_eq!(c[(0, 1)], 0.0);
        assert_eq!(c[(1, 0)], 0.0);
    }

    #[test]
    fn covariance_is_symmetric_psd() {
        let mut rng = crate::rng::rng_from_seed(3);
        let x = Mat::from_fn(9, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c = covariance(&SampleMatrix::new(x).unwrap(), true).unwrap();
        let ev = symmetric_eigenvalues(c.as_ref()).unwrap();
        assert!(*ev.last().unwrap() >= -1e-10);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(c[(i, j)], c[(j, i)]);
            }
        }
    }

    #[test]
    fn sample_matrix_rejects_tiny() {
        assert!(matches!(SampleMatrix::new(Mat::zeros(1, 4)), Err(Error::Degenerate(_))));
        assert!(matches!(SampleMatrix::new(Mat::zeros(4, 1)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn eig_of_diagonal() {
        let m = Mat::from_fn(3, 3, |i, j| if i == j { [1.0, 3.0, 2.0][i] } else { 0.0 });
        let d = symmetric_eig(m.as_ref()).unwrap();
        assert_eq!(d.eigenvalues.len(), 3);
        for (got, want) in d.eigenvalues.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        // Permuted identity: eigenvalue 3 lives on e1, 2 on e2, 1 on e0.
        let expected_axis = [1, 2, 0];
        for (col, &axis) in expected_axis.iter().enumerate() {
            for i in 0..3 {
                let want = if i == axis { 1.0 } else { 0.0 };
                assert!((d.eigenvectors[(i, col)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eig_of_rank_one() {
        let v = [0.6, -0.8, 0.0, 0.0];
        let m = Mat::from_fn(4, 4, |i, j| v[i] * v[j]);
        let d = symmetric_eig(m.as_ref()).unwrap();
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!(d.eigenvalues[1..].iter().all(|x| x.abs() < 1e-12));
        // canonical: largest magnitude (-0.8) made positive
        let top = d.eigenvector(0);
        assert!((top[0] + 0.6).abs() < 1e-12 && (top[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn eig_random_reconstructs() {
        let m = random_symmetric(8, 11);
        let d = symmetric_eig(m.as_ref()).unwrap();
        assert!(d.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        assert!(linalg::orthonormality_defect(d.eigenvectors.as_ref()) < 1e-8);
        let r = d.reconstruct();
        let diff = Mat::from_fn(8, 8, |i, j| r[(i, j)] - m[(i, j)]);
        assert!(linalg::max_abs(diff.as_ref()) < 1e-7 * linalg::max_abs(m.as_ref()));
    }

    #[test]
    fn eig_rejects_bad_input() {
        let mut m = random_symmetric(3, 1);
        m[(0, 1)] += 1e-3;
        assert!(matches!(symmetric_eig(m.as_ref()), Err(Error::Contract(_))));
        let mut m = random_symmetric(3, 1);
        m[(2, 2)] = f64::NAN;
        assert!(matches!(symmetric_eig(m.as_ref()), Err(Error::Numeric(_))));
    }

    #[test]
    fn eig_is_deterministic() {
        let m = random_symmetric(12, 5);
        assert_eq!(symmetric_eig(m.as_ref()).unwrap(), symmetric_eig(m.as_ref()).unwrap());
    }

    #[test]
    fn canonical_sign_tie_prefers_lowest_index() {
        let mut v = vec![-0.5, 0.5, -0.5, 0.5];
        canonicalize_sign(&mut v);
        assert_eq!(v, vec![0.5, -0.5, 0.5, -0.5]);
    }

    #[test]
    fn patch_shape_and_round_trip() {
        let img = Image::from_fn(4, 4, 1, |y, x, _| (y * 4 + x) as f64);
        let s = patch_matrix(&img, 2).unwrap();
        assert_eq!((s.nrows(), s.ncols()), (4, 4));
        // first patch is the top-left 2x2 block
        assert_eq!(crate::linalg::row_to_vec(s.data(), 0), vec![0.0, 1.0, 4.0, 5.0]);
        assert_eq!(reassemble(&s).unwrap(), img);
    }

    #[test]
    fn patch_round_trip_multichannel_bit_exact() {
        let img = Image::from_fn(6, 9, 3, |y, x, c| (y as f64).sin() * 1e-3 + x as f64 / 7.0 - c as f64);
        let s = patch_matrix(&img, 3).unwrap();
        assert_eq!(s.ncols(), 27);
        let back = reassemble(&s).unwrap();
        assert!(img.data.iter().zip(&back.data).all(|(a, b)| a.to_bits() == b.to_bits()));
        let again = patch_matrix(&back, 3).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn patch_crops_non_divisible() {
        let img = Image::from_fn(5, 7, 1, |y, x, _| (y * 7 + x) as f64);
        let s = patch_matrix(&img, 2).unwrap();
        let g = s.geometry().unwrap();
        assert!(g.cropped());
        assert_eq!((g.height, g.width), (4, 6));
        let back = reassemble(&s).unwrap();
        assert_eq!((back.height, back.width), (4, 6));
        assert_eq!(back.at(3, 5, 0), img.at(3, 5, 0));
    }

    #[test]
    fn patch_side_too_large() {
        let img = Image::from_fn(4, 6, 1, |_, _, _| 0.0);
        assert!(matches!(patch_matrix(&img, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_image_has_zero_centered_covariance() {
        let img = Image::from_fn(8, 8, 2, |_, _, _| 0.7);
        let s = patch_matrix(&img, 2).unwrap();
        let c = covariance(&s, true).unwrap();
        assert_eq!(linalg::max_abs(c.as_ref()), 0.0);
    }

    #[test]
    fn reassemble_requires_geometry() {
        let s = SampleMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert!(matches!(reassemble(&s), Err(Error::Contract(_))));
    }

    #[test]
    fn full_basis_projector_is_identity() {
        let d = symmetric_eig(random_symmetric(6, 2).as_ref()).unwrap();
        let proj = build_projector(&d, &[0, 1, 2, 3, 4, 5]).unwrap();
        let p = proj.matrix();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p[(i, j)] - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rank_one_projector_and_trace() {
        let d = symmetric_eig(random_symmetric(5, 4).as_ref()).unwrap();
        let proj = build_projector(&d, &[2]).unwrap();
        let v = d.eigenvector(2);
        let p = proj.matrix();
        for i in 0..5 {
            for j in 0..5 {
                assert!((p[(i, j)] - v[i] * v[j]).abs() < 1e-12);
            }
        }
        let proj = build_projector(&d, &[0, 3, 4]).unwrap();
        let tr: f64 = (0..5).map(|i| proj.matrix()[(i, i)]).sum();
        assert!((tr - 3.0).abs() < 1e-8);
    }

    #[test]
    fn projector_errors() {
        let d = symmetric_eig(random_symmetric(4, 4).as_ref()).unwrap();
        assert!(matches!(build_projector(&d, &[]), Err(Error::EmptySubspace)));
        assert!(matches!(build_projector(&d, &[4]), Err(Error::Domain(_))));
        let proj = build_projector(&d, &[0]).unwrap();
        assert!(matches!(project(&[1.0, 2.0], &proj), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn project_in_span_and_orthogonal() {
        let d = symmetric_eig(random_symmetric(5, 9).as_ref()).unwrap();
        let proj = build_projector(&d, &[0, 1]).unwrap();
        let v0 = d.eigenvector(0);
        let v1 = d.eigenvector(1);
        let inside: Vec<f64> = v0.iter().zip(&v1).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let out = project(&inside, &proj).unwrap();
        assert!(out.iter().zip(&inside).all(|(a, b)| (a - b).abs() < 1e-9));
        let ortho = d.eigenvector(3);
        assert!(project(&ortho, &proj).unwrap().iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn project_rows_full_and_rank_one() {
        let x = SampleMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 2.0]]).unwrap();
        let d = symmetric_eig(random_symmetric(3, 1).as_ref()).unwrap();
        let full = project_rows(&x, &build_projector(&d, &[0, 1, 2]).unwrap()).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert!((full.data()[(i, j)] - x.data()[(i, j)]).abs() < 1e-12);
            }
        }
        let one = project_rows(&x, &build_projector(&d, &[1]).unwrap()).unwrap();
        let v = d.eigenvector(1);
        for i in 0..2 {
            let row = linalg::row_to_vec(one.data(), i);
            let coef = linalg::dot(&row, &v);
            assert!(row.iter().zip(&v).all(|(r, vi)| (r - coef * vi).abs() < 1e-12));
        }
    }

    #[test]
    fn project_rows_keeps_geometry() {
        let img = Image::from_fn(4, 4, 1, |y, x, _| (y + 2 * x) as f64);
        let s = patch_matrix(&img, 2).unwrap();
        let d = decompose_sample(&s, true).unwrap();
        let out = project_rows(&s, &build_projector(&d, &[0]).unwrap()).unwrap();
        assert_eq!(out.geometry(), s.geometry());
        let back = reassemble(&out).unwrap();
        assert_eq!((back.height, back.width, back.channels), (4, 4, 1));
    }
}
