//! Dense complex operators bound to a [`SystemLayout`].
//!
//! Entries are row-major over the layout's tensor order. The Hermitian
//! eigendecomposition is the single primitive behind every matrix
//! function; powers and logarithms act on the support only, with
//! eigenvalues below `support_tol` (relative to the largest) mapped to
//! zero rather than raised to negative powers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::layout::{SystemLabel, SystemLayout};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative tolerance for accepting a matrix as Hermitian.
pub const HERM_TOL: f64 = 1e-9;
/// Default relative support cutoff for matrix powers.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Default tolerance on |trace − 1| for states.
pub const TRACE_TOL: f64 = 1e-10;
/// Default tolerance on negative eigenvalues for states.
pub const PSD_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dense square operator on a labelled layout.
#[derive(Clone, PartialEq)]
pub struct Operator {
    layout: SystemLayout,
    entries: CMatrix,
}

impl std::fmt::Debug for Operator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Operator{:?} {}x{}", self.layout, self.entries.nrows(), self.entries.ncols())
    }
}

impl Operator {
    pub fn new(layout: SystemLayout, entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::LayoutMismatch(format!(
                "entries are {}x{}, not square",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() != layout.dim() {
            return Err(Error::LayoutMismatch(format!(
                "layout dimension {} but matrix side {}",
                layout.dim(),
                entries.nrows()
            )));
        }
        Ok(Operator { layout, entries })
    }

    pub fn identity(layout: SystemLayout) -> Self {
        let d = layout.dim();
        Operator {
            layout,
            entries: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(layout: SystemLayout) -> Self {
        let d = layout.dim();
        Operator {
            layout,
            entries: CMatrix::zeros(d, d),
        }
    }

    /// Diagonal operator from real values.
    pub fn diag(layout: SystemLayout, values: &[f64]) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::LayoutMismatch("diagonal length".into()));
        }
        let m = CMatrix::from_diagonal(&CVector::from_iterator(
            values.len(),
            values.iter().map(|&v| cr(v)),
        ));
        Operator::new(layout, m)
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            layout: self.layout.clone(),
            entries: self.entries.adjoint(),
        }
    }

    /// Max-norm (largest entry magnitude).
    pub fn max_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-norm of `self − other` (layouts must agree exactly).
    pub fn max_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.layout, other.layout, "layout mismatch in max_diff");
        (&self.entries - &other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest magnitude among the entries of `self − self†`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let d = (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `(self + self†)/2`.
    pub fn hermitized(&self) -> Operator {
        let h = (&self.entries + self.entries.adjoint()).scale(0.5);
        Operator {
            layout: self.layout.clone(),
            entries: h,
        }
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator {
            layout: self.layout.clone(),
            entries: self.entries.scale(s),
        }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        assert_eq!(self.layout, other.layout, "layout mismatch in add");
        Operator {
            layout: self.layout.clone(),
            entries: &self.entries + &other.entries,
        }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        assert_eq!(self.layout, other.layout, "layout mismatch in sub");
        Operator {
            layout: self.layout.clone(),
            entries: &self.entries - &other.entries,
        }
    }

    pub fn matmul(&self, other: &Operator) -> Operator {
        assert_eq!(self.layout, other.layout, "layout mismatch in matmul");
        Operator {
            layout: self.layout.clone(),
            entries: &self.entries * &other.entries,
        }
    }

    /// Kronecker product with concatenated layout. Rejects label
    /// collisions, naming the colliding label.
    pub fn tensor(&self, other: &Operator) -> Result<Operator> {
        let layout = self.layout.concat(&other.layout)?;
        Ok(Operator {
            layout,
            entries: self.entries.kronecker(&other.entries),
        })
    }

    /// Marginal on the kept factors; layout order preserved.
    pub fn partial_trace(&self, keep: &[SystemLabel]) -> Result<Operator> {
        let keep_layout = self.layout.restricted_to(keep)?;
        let trace_layout = self.layout.without(keep)?;
        let kd = keep_layout.dim();
        let strides = self.layout.strides();
        let keep_pos: Vec<usize> = self
            .layout
            .factors()
            .iter()
            .enumerate()
            .filter(|(_, (l, _))| keep.contains(l))
            .map(|(i, _)| i)
            .collect();
        let tr_pos: Vec<usize> = self
            .layout
            .factors()
            .iter()
            .enumerate()
            .filter(|(_, (l, _))| !keep.contains(l))
            .map(|(i, _)| i)
            .collect();

        // base index of each kept multi-index / traced multi-index
        let kept_bases: Vec<usize> = (0..kd)
            .map(|ki| {
                let multi = keep_layout.multi_index(ki);
                multi
                    .iter()
                    .zip(&keep_pos)
                    .map(|(m, &p)| m * strides[p])
                    .sum()
            })
            .collect();
        let td = trace_layout.dim();
        let traced_bases: Vec<usize> = (0..td)
            .map(|ti| {
                let multi = trace_layout.multi_index(ti);
                multi
                    .iter()
                    .zip(&tr_pos)
                    .map(|(m, &p)| m * strides[p])
                    .sum()
            })
            .collect();

        let mut out = CMatrix::zeros(kd, kd);
        for i in 0..kd {
            for j in 0..kd {
                let mut acc = Complex64::new(0.0, 0.0);
                for &t in &traced_bases {
                    acc += self.entries[(kept_bases[i] + t, kept_bases[j] + t)];
                }
                out[(i, j)] = acc;
            }
        }
        Operator::new(keep_layout, out)
    }

    /// Relabels the factors in-place order, i.e. conjugates by the basis
    /// permutation realising `new_order`. Spectrum is preserved.
    pub fn permute_systems(&self, new_order: &[SystemLabel]) -> Result<Operator> {
        if new_order.len() != self.layout.len() {
            return Err(Error::NotPermutation);
        }
        let mut seen = vec![false; new_order.len()];
        for l in new_order {
            let p = self.layout.position(l).map_err(|_| Error::NotPermutation)?;
            if seen[p] {
                return Err(Error::NotPermutation);
            }
            seen[p] = true;
        }
        let new_layout = SystemLayout::new(
            new_order
                .iter()
                .map(|l| {
                    let p = self.layout.position(l).unwrap();
                    self.layout.factors()[p].clone()
                })
                .collect(),
        )?;
        // position in the old layout of each new factor
        let old_pos: Vec<usize> = new_order
            .iter()
            .map(|l| self.layout.position(l).unwrap())
            .collect();
        let old_strides = self.layout.strides();
        let d = self.dim();
        // map new linear index -> old linear index
        let mut index_map = vec![0usize; d];
        for (ni, item) in index_map.iter_mut().enumerate() {
            let multi = new_layout.multi_index(ni);
            *item = multi
                .iter()
                .zip(&old_pos)
                .map(|(m, &p)| m * old_strides[p])
                .sum();
        }
        let mut out = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] = self.entries[(index_map[i], index_map[j])];
            }
        }
        Operator::new(new_layout, out)
    }

    /// Eigendecomposition of a Hermitian operator. Eigenvalues descending,
    /// columns of the returned matrix are the matching orthonormal
    /// eigenvectors. Rejects inputs with relative asymmetry above
    /// [`HERM_TOL`].
    pub fn herm_eig(&self) -> Result<(Vec<f64>, CMatrix)> {
        let scale = self.max_norm().max(1.0);
        let res = self.hermiticity_residual();
        if res > HERM_TOL * scale {
            return Err(Error::NotHermitian(res));
        }
        let h = self.hermitized();
        let eig = h.entries.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("eigenvalues are finite")
        });
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let d = self.dim();
        let mut vectors = CMatrix::zeros(d, d);
        for (col, &k) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(k));
        }
        Ok((values, vectors))
    }

    /// Applies a spectral function to a Hermitian operator.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Operator> {
        let (vals, vecs) = self.herm_eig()?;
        let fv = CVector::from_iterator(vals.len(), vals.iter().map(|&v| cr(f(v))));
        let m = &vecs * CMatrix::from_diagonal(&fv) * vecs.adjoint();
        Operator::new(self.layout.clone(), m)
    }

    /// `self^p` on the support: eigenvalues at or below
    /// `support_tol · λ_max` map to zero, the rest to `λ^p`. Rejects
    /// non-PSD inputs (eigenvalue below `−PSD_TOL` relative).
    pub fn power_on_support(&self, p: f64, support_tol: f64) -> Result<Operator> {
        let (vals, vecs) = self.herm_eig()?;
        let lmax = vals.first().copied().unwrap_or(0.0).max(0.0);
        let floor = -PSD_TOL * lmax.max(1.0);
        if let Some(&min) = vals.last() {
            if min < floor {
                return Err(Error::NotPositive(min));
            }
        }
        let cut = support_tol * lmax;
        let fv = CVector::from_iterator(
            vals.len(),
            vals.iter().map(|&v| {
                if v <= cut {
                    cr(0.0)
                } else {
                    cr(v.powf(p))
                }
            }),
        );
        let m = &vecs * CMatrix::from_diagonal(&fv) * vecs.adjoint();
        Operator::new(self.layout.clone(), m)
    }

    /// `log2(self)` on the support (support eigenvalues untouched by the
    /// cutoff are logged; null directions map to zero).
    pub fn log2_on_support(&self, support_tol: f64) -> Result<Operator> {
        let (vals, vecs) = self.herm_eig()?;
        let lmax = vals.first().copied().unwrap_or(0.0).max(0.0);
        let cut = support_tol * lmax;
        let fv = CVector::from_iterator(
            vals.len(),
            vals.iter()
                .map(|&v| if v <= cut { cr(0.0) } else { cr(v.log2()) }),
        );
        let m = &vecs * CMatrix::from_diagonal(&fv) * vecs.adjoint();
        Operator::new(self.layout.clone(), m)
    }

    /// Projector onto the null space (eigenvalues ≤ `support_tol · λ_max`).
    pub fn kernel_projector(&self, support_tol: f64) -> Result<Operator> {
        let (vals, vecs) = self.herm_eig()?;
        let lmax = vals.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let cut = support_tol * lmax;
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for (k, &v) in vals.iter().enumerate() {
            if v.abs() <= cut {
                let col = vecs.column(k);
                for i in 0..d {
                    for j in 0..d {
                        m[(i, j)] += col[i] * col[j].conj();
                    }
                }
            }
        }
        Operator::new(self.layout.clone(), m)
    }

    /// Real inner product `Re tr(A† B)`; for Hermitian operators this is
    /// the Hilbert-Schmidt inner product.
    pub fn inner(&self, other: &Operator) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// Smallest eigenvalue of a Hermitian operator.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = self.herm_eig()?;
        Ok(vals.last().copied().unwrap_or(0.0))
    }
}

/// Fréchet derivative of a spectral function applied to a direction, via
/// the divided-difference (Daleckii-Krein) formula: given the
/// eigendecomposition `(vals, vecs)` of the base point and the direction
/// `target` expressed in the SAME outer basis, returns
/// `V [ (V†·target·V) ∘ Φ ] V†` with `Φ_ij = (f(λ_i) − f(λ_j))/(λ_i − λ_j)`
/// and `Φ_ii = f'(λ_i)`. `target` here is the raw direction matrix (not yet
/// rotated); rotation happens internally when `rotated` is false.
pub fn frechet_map(
    vals: &[f64],
    vecs: &CMatrix,
    target_rotated: &CMatrix,
    f: impl Fn(f64) -> f64,
    fp: impl Fn(f64) -> f64,
) -> CMatrix {
    let d = vals.len();
    let scale = vals.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    let mut t = target_rotated.clone();
    for i in 0..d {
        for j in 0..d {
            let phi = if (vals[i] - vals[j]).abs() <= 1e-12 * scale {
                fp(0.5 * (vals[i] + vals[j]))
            } else {
                (f(vals[i]) - f(vals[j])) / (vals[i] - vals[j])
            };
            t[(i, j)] *= cr(phi);
        }
    }
    vecs * t * vecs.adjoint()
}

// JSON form: {"layout":[["A",2],["B",2]],"entries":[[[re,im],...],...]}
#[derive(Serialize, Deserialize)]
struct OperatorWire {
    layout: SystemLayout,
    entries: Vec<Vec<[f64; 2]>>,
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let entries = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let z = self.entries[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        OperatorWire {
            layout: self.layout.clone(),
            entries,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = OperatorWire::deserialize(deserializer)?;
        let d = wire.layout.dim();
        if wire.entries.len() != d || wire.entries.iter().any(|row| row.len() != d) {
            return Err(D::Error::custom("entries shape does not match layout"));
        }
        let m = CMatrix::from_fn(d, d, |i, j| {
            let [re, im] = wire.entries[i][j];
            c(re, im)
        });
        Operator::new(wire.layout, m).map_err(D::Error::custom)
    }
}

/// Positive, trace-one (or subnormalised) operator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityMatrix {
    op: Operator,
    trace_tol: f64,
    psd_tol: f64,
}

impl DensityMatrix {
    /// Normalised state: Hermitian, PSD and unit trace within tolerance.
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerances(op, TRACE_TOL, PSD_TOL)
    }

    pub fn with_tolerances(op: Operator, trace_tol: f64, psd_tol: f64) -> Result<Self> {
        let dm = Self::check_positive(op, psd_tol)?;
        let tr = dm.op.trace().re;
        if (tr - 1.0).abs() > trace_tol {
            return Err(Error::BadTrace(tr, 1.0));
        }
        Ok(DensityMatrix {
            trace_tol,
            psd_tol,
            ..dm
        })
    }

    /// Subnormalised positive operator (trace ≤ 1), for conditional states.
    pub fn subnormalized(op: Operator) -> Result<Self> {
        let dm = Self::check_positive(op, PSD_TOL)?;
        let tr = dm.op.trace().re;
        if tr > 1.0 + TRACE_TOL {
            return Err(Error::BadTrace(tr, 1.0));
        }
        Ok(dm)
    }

    fn check_positive(op: Operator, psd_tol: f64) -> Result<Self> {
        let scale = op.max_norm().max(1.0);
        let res = op.hermiticity_residual();
        if res > psd_tol * scale {
            return Err(Error::NotHermitian(res));
        }
        let min = op.hermitized().min_eigenvalue()?;
        if min < -psd_tol * scale {
            return Err(Error::NotPositive(min));
        }
        Ok(DensityMatrix {
            op,
            trace_tol: TRACE_TOL,
            psd_tol,
        })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn layout(&self) -> &SystemLayout {
        self.op.layout()
    }

    pub fn trace(&self) -> f64 {
        self.op.trace().re
    }

    /// Marginal as a density matrix.
    pub fn partial_trace(&self, keep: &[SystemLabel]) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            op: self.op.partial_trace(keep)?,
            trace_tol: self.trace_tol,
            psd_tol: self.psd_tol,
        })
    }

    /// Purification on `layout ∪ purifier`. The purifier dimension equals
    /// the state dimension (rank padded up), and the marginal on the
    /// original layout reproduces the state.
    pub fn purify(&self, purifier_label: impl Into<SystemLabel>) -> Result<PureState> {
        let tr = self.trace();
        if (tr - 1.0).abs() > self.trace_tol {
            return Err(Error::BadTrace(tr, 1.0));
        }
        let (vals, vecs) = self.op.herm_eig()?;
        let d = self.op.dim();
        let layout = self
            .op
            .layout()
            .concat(&SystemLayout::single(purifier_label.into(), d))?;
        let mut amp = CVector::zeros(d * d);
        for (k, &v) in vals.iter().enumerate() {
            if v <= 0.0 {
                continue;
            }
            let s = v.sqrt();
            let col = vecs.column(k);
            for i in 0..d {
                // |v_k⟩ ⊗ |k⟩ in row-major order: index i*d + k
                amp[i * d + k] += col[i] * s;
            }
        }
        PureState::new(layout, amp)
    }
}

/// Unit vector on a layout.
#[derive(Clone, Debug)]
pub struct PureState {
    layout: SystemLayout,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(layout: SystemLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::LayoutMismatch("amplitude length".into()));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(PureState { layout, amplitudes })
    }

    /// Computational basis state |index⟩.
    pub fn basis(layout: SystemLayout, index: usize) -> Self {
        let d = layout.dim();
        let mut amp = CVector::zeros(d);
        amp[index] = cr(1.0);
        PureState {
            layout,
            amplitudes: amp,
        }
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn projector(&self) -> Operator {
        let d = self.layout.dim();
        let m = CMatrix::from_fn(d, d, |i, j| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        });
        Operator::new(self.layout.clone(), m).expect("projector dims")
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::new(self.projector()).expect("pure projector is a state")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use proptest::prelude::*;
    use rand::Rng;

    fn qubit_pair() -> SystemLayout {
        SystemLayout::of(&[("A", 2), ("B", 2)])
    }

    #[test]
    fn tensor_identity_case() {
        let a = Operator::identity(SystemLayout::single("A", 2));
        let b = Operator::identity(SystemLayout::single("B", 2));
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.layout(), &qubit_pair());
        assert!(t.max_diff(&Operator::identity(qubit_pair())) == 0.0);
    }

    #[test]
    fn tensor_diagonal_case() {
        let a = Operator::diag(SystemLayout::single("A", 2), &[1.0, 0.0]).unwrap();
        let b = Operator::diag(SystemLayout::single("B", 2), &[0.5, 0.5]).unwrap();
        let t = a.tensor(&b).unwrap();
        let expect = Operator::diag(qubit_pair(), &[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(t.max_diff(&expect) < 1e-15);
    }

    #[test]
    fn tensor_rejects_collision() {
        let a = Operator::identity(SystemLayout::single("A", 2));
        let err = a.tensor(&a).unwrap_err();
        assert!(matches!(err, Error::LabelCollision(l) if l == "A"));
    }

    #[test]
    fn tensor_trace_multiplicative() {
        let mut rng = crate::rng::root(7);
        for _ in 0..100 {
            let a = random::random_operator(&SystemLayout::single("A", 2), &mut rng);
            let b = random::random_operator(&SystemLayout::single("B", 2), &mut rng);
            let t = a.tensor(&b).unwrap();
            let lhs = t.trace();
            let rhs = a.trace() * b.trace();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_product() {
        let mut rng = crate::rng::root(8);
        let a = random::random_density(&SystemLayout::single("A", 2), 2, &mut rng);
        let b = random::random_operator(&SystemLayout::single("B", 3), &mut rng);
        let t = a.op().tensor(&b).unwrap();
        let back = t.partial_trace(&["A".into()]).unwrap();
        let expect = a.op().scale(1.0).entries() * b.trace();
        let diff = (back.entries() - expect)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn partial_trace_bell_marginal() {
        let bell = bell_state();
        let m = bell.projector().partial_trace(&["A".into()]).unwrap();
        let expect = Operator::diag(SystemLayout::single("A", 2), &[0.5, 0.5]).unwrap();
        assert!(m.max_diff(&expect) < 1e-15);
    }

    #[test]
    fn partial_trace_all_labels() {
        let mut rng = crate::rng::root(9);
        let a = random::random_operator(&qubit_pair(), &mut rng);
        let m = a.partial_trace(&[]).unwrap();
        assert_eq!(m.dim(), 1);
        assert!((m.entries()[(0, 0)] - a.trace()).norm() < 1e-12);
    }

    pub(crate) fn bell_state() -> PureState {
        let layout = qubit_pair();
        let mut amp = CVector::zeros(4);
        amp[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
        amp[3] = cr(std::f64::consts::FRAC_1_SQRT_2);
        PureState::new(layout, amp).unwrap()
    }

    #[test]
    fn permute_identity_and_swap() {
        let mut rng = crate::rng::root(10);
        let a = random::random_operator(&SystemLayout::single("A", 2), &mut rng);
        let b = random::random_operator(&SystemLayout::single("B", 2), &mut rng);
        let t = a.tensor(&b).unwrap();
        let same = t.permute_systems(&["A".into(), "B".into()]).unwrap();
        assert!(t.max_diff(&same) == 0.0);
        let swapped = t.permute_systems(&["B".into(), "A".into()]).unwrap();
        let expect = b.tensor(&a).unwrap();
        assert!(swapped.max_diff(&expect) < 1e-15);
        let back = swapped.permute_systems(&["A".into(), "B".into()]).unwrap();
        assert!(t.max_diff(&back) == 0.0);
    }

    #[test]
    fn permute_rejects_non_permutation() {
        let t = Operator::identity(qubit_pair());
        assert!(matches!(
            t.permute_systems(&["A".into(), "A".into()]),
            Err(Error::NotPermutation)
        ));
        assert!(matches!(
            t.permute_systems(&["A".into(), "C".into()]),
            Err(Error::NotPermutation)
        ));
    }

    #[test]
    fn herm_eig_diag_and_pauli() {
        let d = Operator::diag(SystemLayout::single("A", 2), &[3.0, 1.0]).unwrap();
        let (vals, vecs) = d.herm_eig().unwrap();
        assert_eq!(vals, vec![3.0, 1.0]);
        assert!((vecs[(0, 0)].norm() - 1.0).abs() < 1e-12);

        let x = Operator::new(
            SystemLayout::single("A", 2),
            CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]),
        )
        .unwrap();
        let (vals, _) = x.herm_eig().unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn herm_eig_random_unitary_residual() {
        let mut rng = crate::rng::root(11);
        let layout = SystemLayout::single("A", 6);
        let h = random::random_hermitian(&layout, &mut rng);
        let (vals, vecs) = h.herm_eig().unwrap();
        let unit = (&vecs * vecs.adjoint() - CMatrix::identity(6, 6))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(unit < 1e-10);
        let diag = CMatrix::from_diagonal(&CVector::from_iterator(6, vals.iter().map(|&v| cr(v))));
        let recon = &vecs * diag * vecs.adjoint();
        let err = (h.entries() - recon).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10 * h.max_norm());
    }

    #[test]
    fn herm_eig_rejects_nonhermitian() {
        let m = Operator::new(
            SystemLayout::single("A", 2),
            CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]),
        )
        .unwrap();
        assert!(matches!(m.herm_eig(), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn power_on_support_cases() {
        let layout = SystemLayout::single("A", 2);
        let id = Operator::identity(layout.clone());
        for p in [-0.5, 0.3, 2.0] {
            assert!(id.power_on_support(p, SUPPORT_TOL).unwrap().max_diff(&id) < 1e-12);
        }
        let a = Operator::diag(layout.clone(), &[4.0, 0.0]).unwrap();
        let r = a.power_on_support(0.5, SUPPORT_TOL).unwrap();
        assert!(r.max_diff(&Operator::diag(layout.clone(), &[2.0, 0.0]).unwrap()) < 1e-12);
        let b = Operator::diag(layout.clone(), &[4.0, 1.0]).unwrap();
        let r = b.power_on_support(-0.5, SUPPORT_TOL).unwrap();
        assert!(r.max_diff(&Operator::diag(layout.clone(), &[0.5, 1.0]).unwrap()) < 1e-12);
        let neg = Operator::diag(layout, &[1.0, -0.5]).unwrap();
        assert!(matches!(
            neg.power_on_support(0.5, SUPPORT_TOL),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn purify_cases() {
        // pure state purifies trivially
        let layout = SystemLayout::single("A", 2);
        let pure = PureState::basis(layout.clone(), 0).to_density();
        let psi = pure.purify("P").unwrap();
        let marginal = psi.projector().partial_trace(&["A".into()]).unwrap();
        assert!(marginal.max_diff(pure.op()) < 1e-12);

        // maximally mixed qubit gives a maximally entangled purification
        let mixed = DensityMatrix::new(
            Operator::diag(layout.clone(), &[0.5, 0.5]).unwrap(),
        )
        .unwrap();
        let psi = mixed.purify("P").unwrap();
        let marginal = psi.projector().partial_trace(&["A".into()]).unwrap();
        assert!(marginal.max_diff(mixed.op()) < 1e-12);
        let other = psi.projector().partial_trace(&["P".into()]).unwrap();
        assert!(other.max_diff(&Operator::diag(SystemLayout::single("P", 2), &[0.5, 0.5]).unwrap()) < 1e-12);

        // random rank-3 state on d=4
        let mut rng = crate::rng::root(12);
        let layout4 = SystemLayout::single("A", 4);
        let rho = random::random_density(&layout4, 3, &mut rng);
        let psi = rho.purify("P").unwrap();
        let marginal = psi.projector().partial_trace(&["A".into()]).unwrap();
        assert!(marginal.max_diff(rho.op()) < 1e-10);
    }

    #[test]
    fn purify_marginals_up_to_d8() {
        let mut rng = crate::rng::root(13);
        for d in [2usize, 3, 5, 8] {
            let layout = SystemLayout::single("A", d);
            let rank = rng.gen_range(1..=d);
            let rho = random::random_density(&layout, rank, &mut rng);
            let psi = rho.purify("P").unwrap();
            let marginal = psi.projector().partial_trace(&["A".into()]).unwrap();
            assert!(marginal.max_diff(rho.op()) < 1e-10, "d={d} rank={rank}");
        }
    }

    #[test]
    fn density_matrix_validation() {
        let layout = SystemLayout::single("A", 2);
        let bad_trace = Operator::diag(layout.clone(), &[0.7, 0.7]).unwrap();
        assert!(matches!(DensityMatrix::new(bad_trace), Err(Error::BadTrace(_, _))));
        let not_psd = Operator::diag(layout.clone(), &[1.5, -0.5]).unwrap();
        assert!(matches!(DensityMatrix::new(not_psd), Err(Error::NotPositive(_))));
        let sub = Operator::diag(layout, &[0.3, 0.3]).unwrap();
        assert!(DensityMatrix::subnormalized(sub).is_ok());
    }

    #[test]
    fn operator_json_round_trip() {
        let layout = qubit_pair();
        let mut rng = crate::rng::root(14);
        let a = random::random_operator(&layout, &mut rng);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.starts_with(r#"{"layout":[["A",2],["B",2]],"entries":"#));
        let back: Operator = serde_json::from_str(&s).unwrap();
        assert_eq!(back.layout(), a.layout());
        assert!(back.max_diff(&a) == 0.0);
        // deterministic bytes
        assert_eq!(s, serde_json::to_string(&back).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_permute_preserves_spectrum(seed in 0u64..1000) {
            let mut rng = crate::rng::root(seed);
            let layout = SystemLayout::of(&[("A", 2), ("B", 3), ("C", 2)]);
            let h = random::random_hermitian(&layout, &mut rng);
            let p = h.permute_systems(&["C".into(), "A".into(), "B".into()]).unwrap();
            let (v1, _) = h.herm_eig().unwrap();
            let (v2, _) = p.herm_eig().unwrap();
            for (a, b) in v1.iter().zip(v2.iter()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn prop_power_identities(seed in 0u64..1000) {
            let mut rng = crate::rng::root(seed);
            let layout = SystemLayout::single("A", 4);
            let rho = random::random_density(&layout, 3, &mut rng);
            let p1 = rho.op().power_on_support(1.0, SUPPORT_TOL).unwrap();
            prop_assert!(p1.max_diff(rho.op()) < 1e-10);
            let half = rho.op().power_on_support(0.5, SUPPORT_TOL).unwrap();
            let sq = half.power_on_support(2.0, SUPPORT_TOL).unwrap();
            prop_assert!(sq.max_diff(rho.op()) < 1e-9);
        }

        #[test]
        fn prop_tensor_partial_trace_adjoint(seed in 0u64..1000) {
            let mut rng = crate::rng::root(seed);
            let a = random::random_density(&SystemLayout::single("A", 3), 3, &mut rng);
            let b = random::random_density(&SystemLayout::single("B", 2), 2, &mut rng);
            let t = a.op().tensor(b.op()).unwrap();
            let ra = t.partial_trace(&["A".into()]).unwrap();
            prop_assert!(ra.max_diff(a.op()) < 1e-12);
            let rb = t.partial_trace(&["B".into()]).unwrap();
            prop_assert!(rb.max_diff(b.op()) < 1e-12);
        }
    }
}
