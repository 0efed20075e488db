//! Gaussian kernels, kernel centering and centered kernel-target alignment.
//!
//! The alignment of two centered Gram matrices is the normalised Frobenius
//! inner product `<Cx, Cy>_F / (|Cx|_F |Cy|_F)`, an empirical estimate of the
//! Hilbert-Schmidt independence criterion between inputs and labels.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::Labels;
use crate::error::{Error, Result};

/// Multiplier of the squared Euclidean distance in `exp(-sigma * |x - x'|^2)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(Bandwidth(sigma))
        } else {
            Err(Error::Parameter(format!("bandwidth must be positive and finite, got {sigma}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Bandwidth {
    type Error = Error;

    fn try_from(sigma: f64) -> Result<Self> {
        Bandwidth::new(sigma)
    }
}

impl From<Bandwidth> for f64 {
    fn from(b: Bandwidth) -> f64 {
        b.0
    }
}

/// Dense symmetric `m x m` Gram matrix, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl KernelMatrix {
    /// Wraps a square matrix. The caller guarantees symmetry.
    pub fn from_entries(m: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != m * m {
            return Err(Error::Input(format!("{} entries for a {m}x{m} kernel", entries.len())));
        }
        Ok(KernelMatrix { m, entries })
    }

    pub fn from_array(k: ArrayView2<'_, f64>) -> Result<Self> {
        let (r, c) = k.dim();
        if r != c {
            return Err(Error::Input(format!("kernel must be square, got {r}x{c}")));
        }
        Self::from_entries(r, k.iter().copied().collect())
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.m, self.m), self.entries.clone()).unwrap()
    }

    pub fn scaled(&self, factor: f64) -> KernelMatrix {
        KernelMatrix { m: self.m, entries: self.entries.iter().map(|v| v * factor).collect() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CenteredKernelMatrix {
    m: usize,
    entries: Vec<f64>,
    frobenius_norm: f64,
}

impl CenteredKernelMatrix {
    pub fn size(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm
    }

    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.m, self.m), self.entries.clone()).unwrap()
    }

    pub fn negated(&self) -> CenteredKernelMatrix {
        CenteredKernelMatrix {
            m: self.m,
            entries: self.entries.iter().map(|v| -v).collect(),
            frobenius_norm: self.frobenius_norm,
        }
    }
}

/// Gaussian Gram matrix of the rows of `x`.
pub fn gaussian_kernel(x: ArrayView2<'_, f64>, sigma: Bandwidth) -> Result<KernelMatrix> {
    let (m, d) = x.dim();
    let packed: Vec<f64> = x.iter().copied().collect();
    gaussian_kernel_packed(&packed, m, d, sigma)
}

/// Gaussian Gram matrix of `m` packed row-major points of dimension `d`.
pub fn gaussian_kernel_packed(points: &[f64], m: usize, d: usize, sigma: Bandwidth) -> Result<KernelMatrix> {
    if m < 2 || d < 1 {
        return Err(Error::Input(format!("gaussian kernel needs at least 2 points of dimension >= 1, got {m}x{d}")));
    }
    if points.len() != m * d {
        return Err(Error::Input(format!("{} values for {m} points of dimension {d}", points.len())));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite input to gaussian kernel".into()));
    }
    let s = sigma.get();
    let mut entries = vec![0.0; m * m];
    for (i, row) in entries.chunks_exact_mut(m).enumerate() {
        let a = &points[i * d..(i + 1) * d];
        row[i] = 1.0;
        for (j, b) in points.chunks_exact(d).enumerate().skip(i + 1) {
            row[j] = -s * squared_distance(a, b);
        }
        for v in &mut row[i + 1..] {
            *v = v.exp();
        }
    }
    mirror_upper(&mut entries, m);
    Ok(KernelMatrix { m, entries })
}

/// Linear Gram matrix `X X^T`.
pub fn linear_kernel(x: ArrayView2<'_, f64>) -> Result<KernelMatrix> {
    let m = x.nrows();
    if m < 2 || x.ncols() < 1 {
        return Err(Error::Input(format!("linear kernel needs at least 2 points, got {m}")));
    }
    let entries = (0..m).flat_map(|i| (0..m).map(move |j| x.row(i).dot(&x.row(j)))).collect();
    Ok(KernelMatrix { m, entries })
}

/// Uncentered label statistic `(1/m^2) sum_ij y_i y_j K_ij`.
pub fn label_statistic(k: &KernelMatrix, y: &[f64]) -> Result<f64> {
    let m = k.m;
    if y.len() != m {
        return Err(Error::Input(format!("{} labels for a {m}x{m} kernel", y.len())));
    }
    let mut s = 0.0;
    for (i, row) in k.entries.chunks_exact(m).enumerate() {
        s += y[i] * row.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(s / (m * m) as f64)
}

/// Copies the strict upper triangle onto the lower one, tile by tile.
fn mirror_upper(entries: &mut [f64], m: usize) {
    const TILE: usize = 32;
    for bi in (0..m).step_by(TILE) {
        for bj in (bi..m).step_by(TILE) {
            for i in bi..(bi + TILE).min(m) {
                for j in (i + 1).max(bj)..(bj + TILE).min(m) {
                    entries[j * m + i] = entries[i * m + j];
                }
            }
        }
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorise without reassociation flags.
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| (x - y) * (x - y)).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let t = x[l] - y[l];
            acc[l] += t * t;
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Which kernel is placed on the labels before centering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LabelKernelKind {
    /// Outer product `y y^T` for binary labels, class delta for multiclass.
    #[default]
    Auto,
    /// `1` when two samples share a class, `0` otherwise.
    Delta,
}

pub fn label_kernel(y: &Labels) -> Result<KernelMatrix> {
    label_kernel_with(y, LabelKernelKind::Auto)
}

pub fn label_kernel_with(y: &Labels, kind: LabelKernelKind) -> Result<KernelMatrix> {
    let m = y.len();
    if m < 2 {
        return Err(Error::Input(format!("label kernel needs at least 2 labels, got {m}")));
    }
    if y.distinct_classes() < 2 {
        return Err(Error::DegenerateLabels(
            "all labels belong to one class; the centered label kernel is zero".into(),
        ));
    }
    let mut entries = vec![0.0; m * m];
    match (y, kind) {
        (Labels::Binary { values }, LabelKernelKind::Auto) => {
            for i in 0..m {
                for j in 0..m {
                    entries[i * m + j] = values[i] * values[j];
                }
            }
        }
        _ => {
            let ids = y.class_ids();
            for i in 0..m {
                for j in 0..m {
                    entries[i * m + j] = if ids[i] == ids[j] { 1.0 } else { 0.0 };
                }
            }
        }
    }
    Ok(KernelMatrix { m, entries })
}

/// `H K H` with `H = I - 11^T / m`, computed by subtracting row and column
/// means and adding back the grand mean.
pub fn center(k: &KernelMatrix) -> Result<CenteredKernelMatrix> {
    let m = k.m;
    if m < 2 {
        return Err(Error::Input(format!("centering needs m >= 2, got {m}")));
    }
    let inv = 1.0 / m as f64;
    let row_means: Vec<f64> = k.entries.chunks_exact(m).map(|row| row.iter().sum::<f64>() * inv).collect();
    let grand = row_means.iter().sum::<f64>() * inv;
    let mut entries = vec![0.0; m * m];
    let mut sq = 0.0;
    for i in 0..m {
        let ri = row_means[i] - grand;
        let (src, dst) = (&k.entries[i * m..(i + 1) * m], &mut entries[i * m..(i + 1) * m]);
        // Symmetric input: column means equal row means.
        let v = src[i] - ri - row_means[i];
        dst[i] = v;
        sq += v * v;
        let mut off = 0.0;
        for j in (i + 1)..m {
            let v = src[j] - ri - row_means[j];
            dst[j] = v;
            off += v * v;
        }
        sq += 2.0 * off;
    }
    mirror_upper(&mut entries, m);
    Ok(CenteredKernelMatrix { m, entries, frobenius_norm: sq.sqrt() })
}

/// Centered norms below this multiple of `m` are treated as zero.
pub const DEGENERATE_NORM_FACTOR: f64 = 1e-12;

pub fn alignment(cx: &CenteredKernelMatrix, cy: &CenteredKernelMatrix) -> Result<f64> {
    if cx.m != cy.m {
        return Err(Error::Input(format!("alignment of kernels with different sizes {} and {}", cx.m, cy.m)));
    }
    let threshold = DEGENERATE_NORM_FACTOR * cx.m as f64;
    for c in [cx, cy] {
        if c.frobenius_norm.is_nan() || c.frobenius_norm < threshold {
            return Err(Error::DegenerateKernel { norm: c.frobenius_norm, threshold });
        }
    }
    let inner: f64 = cx.entries.iter().zip(&cy.entries).map(|(a, b)| a * b).sum();
    Ok((inner / (cx.frobenius_norm * cy.frobenius_norm)).clamp(-1.0, 1.0))
}

/// Alignment between a Gaussian kernel on `x` and the label kernel on `y`.
pub fn kernel_target_alignment(
    x: ArrayView2<'_, f64>,
    y: &Labels,
    sigma: Bandwidth,
    kind: LabelKernelKind,
) -> Result<f64> {
    let cx = center(&gaussian_kernel(x, sigma)?)?;
    let cy = center(&label_kernel_with(y, kind)?)?;
    alignment(&cx, &cy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| rng.gen::<f64>())
    }

    fn sym_psd(m: usize, seed: u64) -> KernelMatrix {
        let b = random_matrix(m, m, seed);
        let k = b.dot(&b.t());
        KernelMatrix::from_array(k.view()).unwrap()
    }

    #[test]
    fn identical_rows_give_ones() {
        let x = Array2::from_shape_fn((4, 3), |(_, j)| j as f64 * 0.3);
        let k = gaussian_kernel(x.view(), Bandwidth::new(1.0).unwrap()).unwrap();
        assert!(k.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn ln2_bandwidth_halves() {
        let x = array![[0.0], [1.0]];
        let k = gaussian_kernel(x.view(), Bandwidth::new(2f64.ln()).unwrap()).unwrap();
        assert!((k.get(0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(k.get(0, 0), 1.0);
    }

    #[test]
    fn gaussian_matches_scalar_loop() {
        let x = random_matrix(5, 3, 11);
        let sigma = 0.7;
        let k = gaussian_kernel(x.view(), Bandwidth::new(sigma).unwrap()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let mut d = 0.0;
                for c in 0..3 {
                    d += (x[[i, c]] - x[[j, c]]).powi(2);
                }
                assert!((k.get(i, j) - (-sigma * d).exp()).abs() < 1e-12);
                assert_eq!(k.get(i, j), k.get(j, i));
            }
        }
    }

    #[test]
    fn gaussian_rejects_bad_input() {
        let x = array![[0.0], [f64::NAN]];
        assert!(matches!(gaussian_kernel(x.view(), Bandwidth::new(1.0).unwrap()), Err(Error::Input(_))));
        assert!(matches!(Bandwidth::new(0.0), Err(Error::Parameter(_))));
        assert!(matches!(Bandwidth::new(-1.0), Err(Error::Parameter(_))));
        assert!(matches!(Bandwidth::new(f64::INFINITY), Err(Error::Parameter(_))));
    }

    #[test]
    fn label_kernels() {
        let y = Labels::binary(vec![1.0, 1.0, -1.0]).unwrap();
        let k = label_kernel(&y).unwrap();
        assert_eq!(k.to_array(), array![[1.0, 1.0, -1.0], [1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]);
        let y = Labels::multiclass(vec![0, 1, 0], 2).unwrap();
        let k = label_kernel(&y).unwrap();
        assert_eq!(k.to_array(), array![[1.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]);
        let y = Labels::binary(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(label_kernel(&y), Err(Error::DegenerateLabels(_))));
    }

    #[test]
    fn binary_delta_and_outer_align_identically() {
        let x = random_matrix(9, 2, 5);
        let y = Labels::binary(vec![1., -1., 1., 1., -1., -1., 1., -1., 1.]).unwrap();
        let s = Bandwidth::new(1.3).unwrap();
        let a = kernel_target_alignment(x.view(), &y, s, LabelKernelKind::Auto).unwrap();
        let b = kernel_target_alignment(x.view(), &y, s, LabelKernelKind::Delta).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn centering_constant_is_zero() {
        let k = KernelMatrix::from_entries(4, vec![2.5; 16]).unwrap();
        let c = center(&k).unwrap();
        assert!(c.as_slice().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn centering_identity_is_projector() {
        let k = KernelMatrix::from_array(Array2::eye(3).view()).unwrap();
        let c = center(&k).unwrap();
        let expected = array![
            [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0],
            [-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0],
            [-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0]
        ];
        for (a, b) in c.to_array().iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn centering_matches_triple_product() {
        let m = 6;
        let k = sym_psd(m, 21);
        let h = Array2::<f64>::eye(m) - Array2::from_elem((m, m), 1.0 / m as f64);
        let oracle = h.dot(&k.to_array()).dot(&h);
        let c = center(&k).unwrap();
        for (a, b) in c.to_array().iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let frob = oracle.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((c.frobenius_norm() - frob).abs() < 1e-12);
        for i in 0..m {
            let row: f64 = (0..m).map(|j| c.get(i, j)).sum();
            assert!(row.abs() < 1e-9 * m as f64);
        }
    }

    #[test]
    fn self_alignment_and_sign_flip() {
        let c = center(&sym_psd(7, 3)).unwrap();
        assert!((alignment(&c, &c).unwrap() - 1.0).abs() < 1e-12);
        assert!((alignment(&c, &c.negated()).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn alignment_matches_double_sum() {
        let a = center(&sym_psd(8, 100)).unwrap();
        let b = center(&sym_psd(8, 101)).unwrap();
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for i in 0..8 {
            for j in 0..8 {
                ab += a.get(i, j) * b.get(i, j);
                aa += a.get(i, j) * a.get(i, j);
                bb += b.get(i, j) * b.get(i, j);
            }
        }
        let oracle = ab / (aa.sqrt() * bb.sqrt());
        assert!((alignment(&a, &b).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn degenerate_alignment_is_error_not_nan() {
        let zero = center(&KernelMatrix::from_entries(3, vec![1.0; 9]).unwrap()).unwrap();
        let other = center(&sym_psd(3, 1)).unwrap();
        assert!(matches!(alignment(&zero, &other), Err(Error::DegenerateKernel { .. })));
        let small = center(&sym_psd(4, 1)).unwrap();
        assert!(matches!(alignment(&small, &other), Err(Error::Input(_))));
    }

    #[test]
    fn scaling_kernel_keeps_alignment() {
        let k = sym_psd(6, 8);
        let y = Labels::binary(vec![1., -1., 1., -1., -1., 1.]).unwrap();
        let cy = center(&label_kernel(&y).unwrap()).unwrap();
        let a = alignment(&center(&k).unwrap(), &cy).unwrap();
        let b = alignment(&center(&k.scaled(4.0)).unwrap(), &cy).unwrap();
        assert_eq!(a, b);
    }
}
