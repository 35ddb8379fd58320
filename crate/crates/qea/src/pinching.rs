//! Spectral pinching maps and spectrum counting.
//!
//! The pinching map of a Hermitian operator projects onto its eigenspaces:
//! `P_σ(ω) = Σ_λ P_λ ω P_λ`. Eigenvalues are clustered by a sorted-gap
//! scan with a relative tolerance, since exact degeneracy detection is
//! numerically meaningless; spectrum-count bounds are only asserted for
//! exactly representable constructions plus cluster-tolerant counts.

use crate::error::Result;
use crate::operator::{CMatrix, Operator};

/// Default relative eigenvalue clustering tolerance.
pub const CLUSTER_TOL: f64 = 1e-9;

/// Mutually orthogonal eigenprojectors of a Hermitian operator, one per
/// distinct (clustered) eigenvalue.
#[derive(Clone, Debug)]
pub struct PinchingMap {
    projectors: Vec<Operator>,
    eigenvalues: Vec<f64>,
    source: String,
}

impl PinchingMap {
    pub fn projectors(&self) -> &[Operator] {
        &self.projectors
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Description of the generating operator.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Number of distinct eigenvalue clusters.
    pub fn spectrum_size(&self) -> usize {
        self.projectors.len()
    }

    /// `Σ P ω P`; trace preserving, dimension must match.
    pub fn pinch(&self, omega: &Operator) -> Result<Operator> {
        let mut acc = Operator::zeros(omega.layout().clone());
        for p in &self.projectors {
            // projectors live on the source layout; act entrywise
            let m = p.entries() * omega.entries() * p.entries();
            acc = acc.add(&Operator::new(omega.layout().clone(), m)?);
        }
        Ok(acc)
    }
}

/// Clusters sorted-descending eigenvalues; a new cluster starts when the
/// gap to the previous eigenvalue exceeds `cluster_tol · max|λ|`.
fn cluster(values: &[f64], cluster_tol: f64) -> Vec<(usize, usize)> {
    if values.is_empty() {
        return vec![];
    }
    let scale = values.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(f64::MIN_POSITIVE);
    let tol = cluster_tol * scale;
    let mut spans = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if (values[i - 1] - values[i]).abs() > tol {
            spans.push((start, i));
            start = i;
        }
    }
    spans.push((start, values.len()));
    spans
}

/// Builds the pinching map of a Hermitian operator with the given relative
/// clustering tolerance.
pub fn pinching_map(sigma: &Operator, cluster_tol: f64) -> Result<PinchingMap> {
    let (vals, vecs) = sigma.herm_eig()?;
    let spans = cluster(&vals, cluster_tol);
    let d = sigma.dim();
    let mut projectors = Vec::with_capacity(spans.len());
    let mut eigenvalues = Vec::with_capacity(spans.len());
    for (lo, hi) in spans {
        let mut p = CMatrix::zeros(d, d);
        for k in lo..hi {
            let col = vecs.column(k);
            for i in 0..d {
                for j in 0..d {
                    p[(i, j)] += col[i] * col[j].conj();
                }
            }
        }
        projectors.push(Operator::new(sigma.layout().clone(), p)?);
        let mean = vals[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        eigenvalues.push(mean);
    }
    Ok(PinchingMap {
        projectors,
        eigenvalues,
        source: format!("{:?}", sigma),
    })
}

/// Number of distinct eigenvalue clusters of a Hermitian operator.
pub fn distinct_spectrum_count(a: &Operator, cluster_tol: f64) -> Result<usize> {
    let (vals, _) = a.herm_eig()?;
    Ok(cluster(&vals, cluster_tol).len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::SystemLayout;
    use crate::random;

    #[test]
    fn identity_single_projector() {
        let id = Operator::identity(SystemLayout::single("A", 2));
        let p = pinching_map(&id, CLUSTER_TOL).unwrap();
        assert_eq!(p.spectrum_size(), 1);
        assert!(p.projectors()[0].max_diff(&id) < 1e-12);
    }

    #[test]
    fn nondegenerate_diag_two_projectors() {
        let a = Operator::diag(SystemLayout::single("A", 2), &[2.0, 1.0]).unwrap();
        let p = pinching_map(&a, CLUSTER_TOL).unwrap();
        assert_eq!(p.spectrum_size(), 2);
        for q in p.projectors() {
            assert!((q.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn clustering_semantics() {
        let eps = 1e-6;
        let a = Operator::diag(SystemLayout::single("A", 3), &[1.0, 1.0 + eps / 2.0, 3.0]).unwrap();
        // cluster_tol = eps (relative to ‖a‖ = 3): merges the two close ones
        let p = pinching_map(&a, eps).unwrap();
        assert_eq!(p.spectrum_size(), 2);
        assert_eq!(distinct_spectrum_count(&a, eps).unwrap(), 2);
        // tight tolerance resolves all three
        assert_eq!(distinct_spectrum_count(&a, 1e-9).unwrap(), 3);
    }

    #[test]
    fn projector_invariants() {
        let mut rng = crate::rng::root(21);
        let layout = SystemLayout::single("A", 5);
        let h = random::random_hermitian(&layout, &mut rng);
        let p = pinching_map(&h, CLUSTER_TOL).unwrap();
        let d = 5;
        // orthogonality, idempotence, completeness
        let mut sum = Operator::zeros(layout.clone());
        for (i, pi) in p.projectors().iter().enumerate() {
            let sq = pi.matmul(pi);
            assert!(sq.max_diff(pi) < 1e-10);
            for (j, pj) in p.projectors().iter().enumerate() {
                if i != j {
                    let prod = pi.matmul(pj);
                    assert!(prod.max_norm() < 1e-10);
                }
            }
            sum = sum.add(pi);
        }
        assert!(sum.max_diff(&Operator::identity(layout)) < 1e-10);
        let _ = d;
    }

    #[test]
    fn pinch_by_identity_and_diagonal() {
        let mut rng = crate::rng::root(22);
        let layout = SystemLayout::single("A", 3);
        let omega = random::random_hermitian(&layout, &mut rng);

        let id = Operator::identity(layout.clone());
        let p = pinching_map(&id, CLUSTER_TOL).unwrap();
        assert!(p.pinch(&omega).unwrap().max_diff(&omega) < 1e-12);

        let diag = Operator::diag(layout.clone(), &[3.0, 2.0, 1.0]).unwrap();
        let p = pinching_map(&diag, CLUSTER_TOL).unwrap();
        let pinched = p.pinch(&omega).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(pinched.entries()[(i, j)].norm() < 1e-12);
                } else {
                    assert!((pinched.entries()[(i, j)] - omega.entries()[(i, j)]).norm() < 1e-12);
                }
            }
        }
        // trace preserved
        assert!((pinched.trace() - omega.trace()).norm() < 1e-10);
    }

    #[test]
    fn pinch_invariance_on_source() {
        let mut rng = crate::rng::root(23);
        let layout = SystemLayout::single("A", 4);
        let sigma = random::random_psd(&layout, 4, &mut rng);
        let p = pinching_map(&sigma, CLUSTER_TOL).unwrap();
        assert!(p.pinch(&sigma).unwrap().max_diff(&sigma) < 1e-10);
    }

    #[test]
    fn tensor_power_spectrum_bounds() {
        let mut rng = crate::rng::root(24);
        let layout = SystemLayout::single("A", 2);
        let d = 2usize;
        for n in 1..=5usize {
            let rho = random::random_density(&layout, 2, &mut rng);
            let mut power = rho.op().clone();
            let mut cur_layout = SystemLayout::single("A1", 2);
            power = Operator::new(cur_layout.clone(), power.entries().clone()).unwrap();
            for k in 2..=n {
                let next = Operator::new(
                    SystemLayout::single(format!("A{k}").as_str(), 2),
                    rho.op().entries().clone(),
                )
                .unwrap();
                power = power.tensor(&next).unwrap();
                cur_layout = power.layout().clone();
            }
            let _ = cur_layout;
            let count = distinct_spectrum_count(&power, CLUSTER_TOL).unwrap();
            let bound = (n + 1).pow((d - 1) as u32);
            assert!(count <= bound, "n={n}: count {count} > bound {bound}");
        }
    }

    #[test]
    fn pinched_tensor_power_permutation_invariant_bound() {
        let mut rng = crate::rng::root(25);
        let d = 2usize;
        for n in 1..=4usize {
            let base = SystemLayout::single("A", 2);
            let rho = random::random_density(&base, 2, &mut rng);
            let sig = random::random_density(&base, 2, &mut rng);
            let mut rho_n = Operator::new(SystemLayout::single("A1", 2), rho.op().entries().clone()).unwrap();
            let mut sig_n = Operator::new(SystemLayout::single("A1", 2), sig.op().entries().clone()).unwrap();
            for k in 2..=n {
                let label = format!("A{k}");
                rho_n = rho_n
                    .tensor(&Operator::new(SystemLayout::single(label.as_str(), 2), rho.op().entries().clone()).unwrap())
                    .unwrap();
                sig_n = sig_n
                    .tensor(&Operator::new(SystemLayout::single(label.as_str(), 2), sig.op().entries().clone()).unwrap())
                    .unwrap();
            }
            let p = pinching_map(&rho_n, CLUSTER_TOL).unwrap();
            let pinched = p.pinch(&sig_n).unwrap();
            let count = distinct_spectrum_count(&pinched, 1e-7).unwrap();
            let bound = (n + d).pow((d * (d + 1) / 2) as u32);
            assert!(count <= bound, "n={n}: count {count} > bound {bound}");
        }
    }
}
