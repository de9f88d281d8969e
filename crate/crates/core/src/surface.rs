//! Surface geometry, Jakes spatial correlation and the reduced-correlation
//! trace moments that drive the Gamma / Exponential gain fits.

use crate::error::{Error, Result};
use crate::specfun::bessel_j0;
use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;
use std::io::Write;

/// Eigenvalues below this fraction of the largest one are clamped to zero
/// before the square root is taken.
pub const EIGEN_FLOOR_RATIO: f64 = 1e-12;

/// Uniform planar array of `mx × mz` elements spanning `wx·λ × wz·λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGeometry {
    mx: usize,
    mz: usize,
    wx: f64,
    wz: f64,
    wavelength: f64,
}

impl SurfaceGeometry {
    pub fn new(mx: usize, mz: usize, wx: f64, wz: f64, wavelength: f64) -> Result<Self> {
        if mx < 1 || mz < 1 {
            return Err(Error::config(format!("element counts must be >= 1, got {mx}x{mz}")));
        }
        if !(wx > 0.0 && wz > 0.0) || !wx.is_finite() || !wz.is_finite() {
            return Err(Error::config(format!("aperture must be positive, got {wx}x{wz} wavelengths")));
        }
        if !(wavelength > 0.0) || !wavelength.is_finite() {
            return Err(Error::config(format!("wavelength must be positive, got {wavelength}")));
        }
        Ok(SurfaceGeometry { mx, mz, wx, wz, wavelength })
    }

    /// Square array with the given element spacing expressed in wavelengths.
    pub fn square_with_spacing(side: usize, spacing_wavelengths: f64, wavelength: f64) -> Result<Self> {
        let w = side as f64 * spacing_wavelengths;
        SurfaceGeometry::new(side, side, w, w, wavelength)
    }

    pub fn mx(&self) -> usize {
        self.mx
    }
    pub fn mz(&self) -> usize {
        self.mz
    }
    pub fn aperture_wavelengths(&self) -> (f64, f64) {
        (self.wx, self.wz)
    }
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }
    pub fn len(&self) -> usize {
        self.mx * self.mz
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Element spacings `(d_x, d_z)` in meters.
    pub fn spacing(&self) -> (f64, f64) {
        (
            self.wx * self.wavelength / self.mx as f64,
            self.wz * self.wavelength / self.mz as f64,
        )
    }

    /// Row-major, 0-based: `(i mod M_x, ⌊i / M_x⌋)`.
    pub fn index_to_coords(&self, i: usize) -> Result<(usize, usize)> {
        if i >= self.len() {
            return Err(Error::Index { index: i, len: self.len() });
        }
        Ok((i % self.mx, i / self.mx))
    }

    /// Euclidean distance between elements `i` and `l`, in meters.
    pub fn element_distance(&self, i: usize, l: usize) -> Result<f64> {
        let (xi, zi) = self.index_to_coords(i)?;
        let (xl, zl) = self.index_to_coords(l)?;
        let (dx, dz) = self.spacing();
        let ox = xi.abs_diff(xl) as f64;
        let oz = zi.abs_diff(zl) as f64;
        Ok(((dx * ox).powi(2) + (dz * oz).powi(2)).sqrt())
    }
}

/// Jakes correlation matrix with its PSD square root.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    j: DMatrix<f64>,
    j_sqrt: DMatrix<f64>,
    eigen_floor: f64,
    clamped_mass: f64,
    rank: usize,
}

impl CorrelationMatrix {
    /// Wraps an arbitrary symmetric correlation matrix (unit diagonal).
    pub fn from_matrix(j: DMatrix<f64>) -> Result<Self> {
        let n = j.nrows();
        if n == 0 || j.ncols() != n {
            return Err(Error::Dimension { expected: n.max(1), got: j.ncols() });
        }
        for r in 0..n {
            for c in 0..r {
                if j[(r, c)] != j[(c, r)] {
                    return Err(Error::domain("correlation matrix is not symmetric"));
                }
            }
        }
        let eig = SymmetricEigen::try_new(j.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Numeric("symmetric eigendecomposition failed".into()))?;
        let max_eig = eig.eigenvalues.max();
        if !(max_eig > 0.0) {
            return Err(Error::Numeric("correlation matrix has no positive eigenvalue".into()));
        }
        let eigen_floor = EIGEN_FLOOR_RATIO * max_eig;
        let mut clamped_mass = 0.0;
        let mut rank = 0;
        let roots = eig.eigenvalues.map(|l| {
            if l < 0.0 {
                clamped_mass += -l;
            }
            if l < eigen_floor {
                0.0
            } else {
                rank += 1;
                l.sqrt()
            }
        });
        let u = &eig.eigenvectors;
        let mut scaled = u.clone();
        for (mut col, r) in scaled.column_iter_mut().zip(roots.iter()) {
            col *= *r;
        }
        let raw = scaled * u.transpose();
        let j_sqrt = (&raw + raw.transpose()) * 0.5;
        Ok(CorrelationMatrix { j, j_sqrt, eigen_floor, clamped_mass, rank })
    }

    pub fn identity(n: usize) -> Self {
        CorrelationMatrix {
            j: DMatrix::identity(n, n),
            j_sqrt: DMatrix::identity(n, n),
            eigen_floor: EIGEN_FLOOR_RATIO,
            clamped_mass: 0.0,
            rank: n,
        }
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }
    pub fn j_sqrt(&self) -> &DMatrix<f64> {
        &self.j_sqrt
    }
    pub fn eigen_floor(&self) -> f64 {
        self.eigen_floor
    }
    /// Sum of |λ| over the negative eigenvalues that were clamped away.
    pub fn clamped_mass(&self) -> f64 {
        self.clamped_mass
    }
    /// Number of eigenvalues kept above the floor.
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    /// Frobenius norm of `J_sqrt² - J`.
    pub fn sqrt_residual(&self) -> f64 {
        (&self.j_sqrt * &self.j_sqrt - &self.j).norm()
    }

    /// Row-major CSV, full precision scientific notation, no header.
    pub fn write_csv<W: Write>(&self, mut out: W, which: MatrixKind) -> Result<()> {
        let m = match which {
            MatrixKind::Correlation => &self.j,
            MatrixKind::SquareRoot => &self.j_sqrt,
        };
        for r in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|c| crate::harness::output::fmt_real(m[(r, c)])).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Correlation,
    SquareRoot,
}

/// `J[i][l] = J0(2π d_il / λ)`, filled from the upper triangle so the
/// stored matrix is exactly symmetric.
pub fn build_correlation(geometry: &SurfaceGeometry) -> Result<CorrelationMatrix> {
    let n = geometry.len();
    let mut j = DMatrix::<f64>::identity(n, n);
    let k = 2.0 * PI / geometry.wavelength();
    for i in 0..n {
        for l in (i + 1)..n {
            let v = bessel_j0(k * geometry.element_distance(i, l)?)?;
            j[(i, l)] = v;
            j[(l, i)] = v;
        }
    }
    CorrelationMatrix::from_matrix(j)
}

/// Ordered set of active element indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionSet {
    indices: Vec<usize>,
}

impl SelectionSet {
    /// `indices` must be non-empty, distinct and below `m`.
    pub fn new(indices: Vec<usize>, m: usize) -> Result<Self> {
        if indices.is_empty() || indices.len() > m {
            return Err(Error::config(format!(
                "selection size must be in [1, {m}], got {}",
                indices.len()
            )));
        }
        let mut seen = vec![false; m];
        for &i in &indices {
            if i >= m {
                return Err(Error::Index { index: i, len: m });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::config(format!("element {i} selected twice")));
            }
        }
        Ok(SelectionSet { indices })
    }

    /// Every element of an `m`-element surface, in index order.
    pub fn all(m: usize) -> Self {
        SelectionSet { indices: (0..m).collect() }
    }

    /// All elements OFF.
    pub fn none() -> Self {
        SelectionSet { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
    pub fn len(&self) -> usize {
        self.indices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Principal submatrix of `J` on the selected indices.
pub fn reduce_correlation(j: &CorrelationMatrix, sel: &SelectionSet) -> Result<DMatrix<f64>> {
    let n = j.dim();
    if let Some(&bad) = sel.indices().iter().find(|&&i| i >= n) {
        return Err(Error::Index { index: bad, len: n });
    }
    let idx = sel.indices();
    Ok(DMatrix::from_fn(idx.len(), idx.len(), |r, c| j.j()[(idx[r], idx[c])]))
}

/// `tr(A^p)` for symmetric `A` and `p ∈ {2, 4}`, via Frobenius norms.
pub fn trace_power(a: &DMatrix<f64>, p: u32) -> Result<f64> {
    match p {
        2 => Ok(a.norm_squared()),
        4 => Ok((a * a).norm_squared()),
        _ => Err(Error::domain(format!("trace_power supports p = 2 or 4, got {p}"))),
    }
}

/// `(tr(A²), tr(A⁴))` in one pass.
pub fn trace_moments(a: &DMatrix<f64>) -> (f64, f64) {
    (a.norm_squared(), (a * a).norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn half_wave(side: usize) -> SurfaceGeometry {
        SurfaceGeometry::square_with_spacing(side, 0.5, 0.125).unwrap()
    }

    #[test]
    fn coords_follow_row_major_order() {
        let g = SurfaceGeometry::new(20, 20, 3.0, 3.0, 0.125).unwrap();
        assert_eq!(g.index_to_coords(0).unwrap(), (0, 0));
        assert_eq!(g.index_to_coords(20).unwrap(), (0, 1));
        assert_eq!(g.index_to_coords(25).unwrap(), (5, 1));
        assert!(matches!(g.index_to_coords(400), Err(Error::Index { index: 400, len: 400 })));
    }

    #[test]
    fn distances() {
        let g = SurfaceGeometry::new(4, 3, 2.0, 3.0, 0.5).unwrap();
        let (dx, dz) = g.spacing();
        assert_eq!(g.element_distance(5, 5).unwrap(), 0.0);
        assert_relative_eq!(g.element_distance(5, 6).unwrap(), dx);
        assert_relative_eq!(g.element_distance(5, 9).unwrap(), dz);
        assert_relative_eq!(g.element_distance(0, 5).unwrap(), (dx * dx + dz * dz).sqrt());
        // offsets (3, 2) would go negative if the row term were not squared
        assert_relative_eq!(g.element_distance(0, 11).unwrap(), ((3.0 * dx).powi(2) + (2.0 * dz).powi(2)).sqrt());
    }

    #[test]
    fn geometry_validation() {
        assert!(SurfaceGeometry::new(0, 3, 1.0, 1.0, 1.0).is_err());
        assert!(SurfaceGeometry::new(3, 3, 0.0, 1.0, 1.0).is_err());
        assert!(SurfaceGeometry::new(3, 3, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn half_wavelength_neighbors() {
        let c = build_correlation(&half_wave(4)).unwrap();
        for i in 0..16 {
            assert_eq!(c.j()[(i, i)], 1.0);
        }
        assert!((c.j()[(0, 1)] - (-0.304_242_177_644_093)).abs() < 1e-12);
        assert!((c.j()[(0, 4)] - (-0.304_242_177_644_093)).abs() < 1e-12);
    }

    #[test]
    fn single_element() {
        let c = build_correlation(&half_wave(1)).unwrap();
        assert_eq!(c.j().as_slice(), &[1.0]);
        assert_relative_eq!(c.j_sqrt()[(0, 0)], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn dense_fris_correlation_invariants() {
        let g = SurfaceGeometry::new(20, 20, 3.0, 3.0, 0.125).unwrap();
        let c = build_correlation(&g).unwrap();
        let j = c.j();
        assert_eq!(j, &j.transpose());
        assert!(j.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(c.sqrt_residual() <= 1e-8 * 400.0, "residual {}", c.sqrt_residual());
        assert!(c.clamped_mass() <= 1e-6 * 400.0);
        let eig = SymmetricEigen::new(c.j_sqrt().clone());
        assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
        assert!(c.rank() < 400);
    }

    #[test]
    fn reduction_examples() {
        let j = CorrelationMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).unwrap();
        let r = reduce_correlation(&j, &SelectionSet::all(2)).unwrap();
        assert_eq!(&r, j.j());
        let single = reduce_correlation(&j, &SelectionSet::new(vec![1], 2).unwrap()).unwrap();
        assert_eq!(single.as_slice(), &[1.0]);
    }

    #[test]
    fn trace_power_examples() {
        assert_eq!(trace_power(&DMatrix::identity(7, 7), 2).unwrap(), 7.0);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        // oracle: explicit 2x2 products
        let a2 = [[1.25, 1.0], [1.0, 1.25]];
        let tr2 = a2[0][0] + a2[1][1];
        let tr4 = a2[0][0] * a2[0][0] + a2[0][1] * a2[1][0] + a2[1][0] * a2[0][1] + a2[1][1] * a2[1][1];
        assert_eq!(tr2, 2.5);
        assert_eq!(tr4, 5.125);
        assert_relative_eq!(trace_power(&a, 2).unwrap(), tr2, max_relative = 1e-15);
        assert_relative_eq!(trace_power(&a, 4).unwrap(), tr4, max_relative = 1e-15);
        assert!(trace_power(&a, 3).is_err());
    }

    #[test]
    fn selection_validation() {
        assert!(SelectionSet::new(vec![], 4).is_err());
        assert!(SelectionSet::new(vec![1, 1], 4).is_err());
        assert!(SelectionSet::new(vec![4], 4).is_err());
        assert!(SelectionSet::new(vec![0, 1, 2, 3, 0], 4).is_err());
        assert_eq!(SelectionSet::new(vec![3, 0], 4).unwrap().indices(), &[3, 0]);
    }

    #[test]
    fn csv_dump_is_row_major() {
        let j = CorrelationMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 1.0])).unwrap();
        let mut buf = Vec::new();
        j.write_csv(&mut buf, MatrixKind::Correlation).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1e0,2.5e-1\n2.5e-1,1e0\n");
    }

    proptest! {
        #[test]
        fn reduction_equals_selection_sandwich(mx in 1usize..5, mz in 1usize..5, w in 0.3f64..3.0, seed in any::<u64>()) {
            let g = SurfaceGeometry::new(mx, mz, w, w * 0.7, 0.125).unwrap();
            let m = g.len();
            let c = build_correlation(&g).unwrap();
            let mut idx: Vec<usize> = (0..m).collect();
            // cheap deterministic shuffle
            let mut s = seed | 1;
            for i in (1..m).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                idx.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let m_on = 1 + (seed as usize % m);
            idx.truncate(m_on);
            let sel = SelectionSet::new(idx.clone(), m).unwrap();
            let mut s_mat = DMatrix::<f64>::zeros(m_on, m);
            for (r, &i) in idx.iter().enumerate() {
                s_mat[(r, i)] = 1.0;
            }
            let sandwich = &s_mat * c.j() * s_mat.transpose();
            let reduced = reduce_correlation(&c, &sel).unwrap();
            prop_assert_eq!(reduced, sandwich);
        }

        #[test]
        fn fourth_moment_dominates(mx in 1usize..6, mz in 1usize..6, w in 0.2f64..4.0) {
            let g = SurfaceGeometry::new(mx, mz, w, w, 0.125).unwrap();
            let c = build_correlation(&g).unwrap();
            let (t2, t4) = trace_moments(c.j());
            let n = g.len() as f64;
            prop_assert!(t4 >= t2 * t2 / n * (1.0 - 1e-12));
            prop_assert!(t2 * t2 / t4 <= n * (1.0 + 1e-12));
        }
    }
}
