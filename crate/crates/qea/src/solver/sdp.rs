//! Dense primal-dual interior-point solver for small SDPs over products of
//! Hermitian PSD cones.
//!
//! Standard form:
//! ```text
//!   min ⟨C, X⟩   s.t.  ⟨A_k, X⟩ = b_k  (k = 1..m),   X ⪰ 0 (block diagonal)
//! ```
//! with the real inner product `⟨A, B⟩ = Re tr(A†B)`. The dual is
//! `max b·y` with `Z = C − Σ y_k A_k ⪰ 0`. Infeasible start, Nesterov-Todd
//! scaling, normal-equations solve with dense Cholesky, Mehrotra-style
//! adaptive centering. Problem sides are capped at 64; everything here is
//! tiny and robustness beats scale.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{cr, CMatrix};

/// Hard cap on PSD block side length.
pub const MAX_SIDE: usize = 64;

/// Block-diagonal Hermitian matrix, stored block by block.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    pub blocks: Vec<CMatrix>,
}

impl BlockMatrix {
    pub fn zeros(dims: &[usize]) -> Self {
        BlockMatrix {
            blocks: dims.iter().map(|&d| CMatrix::zeros(d, d)).collect(),
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        BlockMatrix {
            blocks: dims.iter().map(|&d| CMatrix::identity(d, d)).collect(),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn inner(&self, other: &BlockMatrix) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum::<f64>())
            .sum()
    }

    pub fn axpy(&mut self, s: f64, other: &BlockMatrix) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b.scale(s);
        }
    }

    pub fn scale(&self, s: f64) -> BlockMatrix {
        BlockMatrix {
            blocks: self.blocks.iter().map(|b| b.scale(s)).collect(),
        }
    }

    pub fn add(&self, other: &BlockMatrix) -> BlockMatrix {
        BlockMatrix {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &BlockMatrix) -> BlockMatrix {
        BlockMatrix {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    fn hermitize(&mut self) {
        for b in self.blocks.iter_mut() {
            let h = (b.clone() + b.adjoint()).scale(0.5);
            *b = h;
        }
    }

    /// Per-block Hermitian eigendecomposition (values ascending per nalgebra).
    fn eig(&self) -> Vec<(DVector<f64>, CMatrix)> {
        self.blocks
            .iter()
            .map(|b| {
                let e = b.clone().symmetric_eigen();
                (e.eigenvalues, e.eigenvectors)
            })
            .collect()
    }

    fn min_eig(&self) -> f64 {
        self.eig()
            .iter()
            .flat_map(|(v, _)| v.iter().copied().collect::<Vec<_>>())
            .fold(f64::INFINITY, f64::min)
    }

    fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Linear SDP in standard primal form over block PSD cones.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub objective: BlockMatrix,
    pub constraints: Vec<BlockMatrix>,
    pub rhs: Vec<f64>,
}

impl SdpProblem {
    pub fn new(
        block_dims: Vec<usize>,
        objective: BlockMatrix,
        constraints: Vec<BlockMatrix>,
        rhs: Vec<f64>,
    ) -> Result<Self> {
        for &d in &block_dims {
            if d > MAX_SIDE {
                return Err(Error::DimensionGuard(format!(
                    "block side {d} exceeds cap {MAX_SIDE}"
                )));
            }
        }
        if constraints.len() != rhs.len() {
            return Err(Error::LayoutMismatch("constraint/rhs count".into()));
        }
        let check_dims = |m: &BlockMatrix| -> Result<()> {
            if m.dims() != block_dims {
                return Err(Error::LayoutMismatch("block dims".into()));
            }
            for b in &m.blocks {
                let scale = b.iter().map(|z| z.norm()).fold(1.0, f64::max);
                let asym = (b.clone() - b.adjoint())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                if asym > 1e-9 * scale {
                    return Err(Error::NotHermitian(asym));
                }
            }
            Ok(())
        };
        check_dims(&objective)?;
        for a in &constraints {
            check_dims(a)?;
        }
        Ok(SdpProblem {
            block_dims,
            objective,
            constraints,
            rhs,
        })
    }

    fn apply(&self, x: &BlockMatrix) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints.iter().map(|a| a.inner(x)),
        )
    }

    fn apply_adjoint(&self, y: &DVector<f64>) -> BlockMatrix {
        let mut acc = BlockMatrix::zeros(&self.block_dims);
        for (k, a) in self.constraints.iter().enumerate() {
            acc.axpy(y[k], a);
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

/// Primal/dual values and convergence data for one solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

impl SolveReport {
    pub fn infinite(status: SdpStatus) -> Self {
        SolveReport {
            primal: f64::INFINITY,
            dual: f64::INFINITY,
            gap: 0.0,
            iterations: 0,
            status,
        }
    }
}

/// Full solution: primal block matrix, dual vector, dual slack.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: BlockMatrix,
    pub y: DVector<f64>,
    pub z: BlockMatrix,
    pub report: SolveReport,
}

fn psd_sqrt_and_invsqrt(vals: &DVector<f64>, vecs: &CMatrix) -> (CMatrix, CMatrix) {
    let d = vals.len();
    let floor = vals.iter().fold(0.0f64, |a, &b| a.max(b)) * 1e-14 + f64::MIN_POSITIVE;
    let mut s = CMatrix::zeros(d, d);
    let mut si = CMatrix::zeros(d, d);
    for k in 0..d {
        let v = vals[k].max(floor);
        let r = v.sqrt();
        let col = vecs.column(k);
        for i in 0..d {
            for j in 0..d {
                let outer = col[i] * col[j].conj();
                s[(i, j)] += outer * cr(r);
                si[(i, j)] += outer * cr(1.0 / r);
            }
        }
    }
    (s, si)
}

/// Largest step `α ∈ (0, 1]` with `X + α ΔX ⪰ 0`, damped by `0.98`.
fn psd_step(x: &BlockMatrix, dx: &BlockMatrix) -> f64 {
    let mut alpha = 1.0f64;
    for (xb, db) in x.blocks.iter().zip(&dx.blocks) {
        let e = xb.clone().symmetric_eigen();
        let (s, si) = psd_sqrt_and_invsqrt(&e.eigenvalues, &e.eigenvectors);
        let _ = s;
        let m = &si * db * &si;
        let mh = (m.clone() + m.adjoint()).scale(0.5);
        let lmin = mh.symmetric_eigen().eigenvalues.min();
        if lmin < 0.0 {
            alpha = alpha.min(-0.98 / lmin);
        }
    }
    alpha.min(1.0)
}

/// Solves the SDP by an infeasible-start primal-dual path following method
/// with NT scaling. `tol` bounds the final duality gap and the feasibility
/// residuals (absolute, relative to data scale).
pub fn sdp_solve(p: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    let dims = p.block_dims.clone();
    let nu: f64 = dims.iter().map(|&d| d as f64).sum::<f64>().max(1.0);
    let m = p.constraints.len();

    let data_scale = p
        .objective
        .max_abs()
        .max(p.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs())))
        .max(1.0);

    let mut x = BlockMatrix::identity(&dims);
    let mut z = BlockMatrix::identity(&dims);
    let mut y = DVector::<f64>::zeros(m);

    let max_iter = 200;
    let mut iterations = 0;
    let mut status = SdpStatus::MaxIter;

    for it in 0..max_iter {
        iterations = it;
        let rp = DVector::from_iterator(m, p.rhs.iter().copied()) - p.apply(&x);
        let rd = p.objective.sub(&z).sub(&p.apply_adjoint(&y));
        let mu = x.inner(&z) / nu;

        let rp_norm = rp.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let rd_norm = rd.max_abs();
        if mu <= tol * data_scale && rp_norm <= tol * data_scale && rd_norm <= tol * data_scale {
            status = SdpStatus::Optimal;
            break;
        }
        // crude divergence test: unbounded multipliers with stuck residuals
        if y.iter().fold(0.0f64, |a, &b| a.max(b.abs())) > 1e12 * data_scale {
            status = SdpStatus::Infeasible;
            break;
        }

        // NT scaling per block: W = X^{1/2} (X^{1/2} Z X^{1/2})^{-1/2} X^{1/2}
        let mut w = Vec::with_capacity(dims.len());
        for (xb, zb) in x.blocks.iter().zip(&z.blocks) {
            let ex = xb.clone().symmetric_eigen();
            let (xs, _) = psd_sqrt_and_invsqrt(&ex.eigenvalues, &ex.eigenvectors);
            let mmat = &xs * zb * &xs;
            let mh = (mmat.clone() + mmat.adjoint()).scale(0.5);
            let em = mh.symmetric_eigen();
            let (_, mis) = psd_sqrt_and_invsqrt(&em.eigenvalues, &em.eigenvectors);
            let wb = &xs * &mis * &xs;
            w.push((wb.clone() + wb.adjoint()).scale(0.5));
        }
        let w = BlockMatrix { blocks: w };

        // Schur complement M_{jk} = ⟨A_j, W A_k W⟩
        let waw: Vec<BlockMatrix> = p
            .constraints
            .iter()
            .map(|a| BlockMatrix {
                blocks: a
                    .blocks
                    .iter()
                    .zip(&w.blocks)
                    .map(|(ab, wb)| wb * ab * wb)
                    .collect(),
            })
            .collect();
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            for k in j..m {
                let v = p.constraints[j].inner(&waw[k]);
                schur[(j, k)] = v;
                schur[(k, j)] = v;
            }
        }
        let ridge = 1e-13 * (schur.trace().abs() / m.max(1) as f64 + 1.0);
        let chol = match Cholesky::new(schur.clone()) {
            Some(c) => c,
            None => {
                let mut s2 = schur.clone();
                for i in 0..m {
                    s2[(i, i)] += ridge * 1e3;
                }
                Cholesky::new(s2).ok_or_else(|| {
                    Error::Solver("Schur complement not positive definite".into())
                })?
            }
        };

        let zinv: Vec<CMatrix> = z
            .blocks
            .iter()
            .map(|zb| {
                let e = zb.clone().symmetric_eigen();
                let (_, zi) = psd_sqrt_and_invsqrt(&e.eigenvalues, &e.eigenvectors);
                (&zi * &zi).clone()
            })
            .collect();
        let zinv = BlockMatrix { blocks: zinv };

        // direction for centering parameter sigma
        let solve_dir = |sigma: f64| -> (BlockMatrix, DVector<f64>, BlockMatrix) {
            // Rc = sigma*mu*Z^{-1} - X
            let mut rc = zinv.scale(sigma * mu);
            rc.axpy(-1.0, &x);
            // rhs_y = Rp - A(Rc) + A(W Rd W)
            let wrdw = BlockMatrix {
                blocks: rd
                    .blocks
                    .iter()
                    .zip(&w.blocks)
                    .map(|(rb, wb)| wb * rb * wb)
                    .collect(),
            };
            let rhs = &rp - p.apply(&rc) + p.apply(&wrdw);
            let dy = chol.solve(&rhs);
            let dz = rd.sub(&p.apply_adjoint(&dy));
            // dX = Rc - W dZ W
            let wdzw = BlockMatrix {
                blocks: dz
                    .blocks
                    .iter()
                    .zip(&w.blocks)
                    .map(|(db, wb)| wb * db * wb)
                    .collect(),
            };
            let mut dx = rc.clone();
            dx.axpy(-1.0, &wdzw);
            dx.hermitize();
            let mut dzh = dz;
            dzh.hermitize();
            (dx, dy, dzh)
        };

        // predictor
        let (dxa, _, dza) = solve_dir(0.0);
        let ap = psd_step(&x, &dxa);
        let ad = psd_step(&z, &dza);
        let mut xa = x.clone();
        xa.axpy(ap, &dxa);
        let mut za = z.clone();
        za.axpy(ad, &dza);
        let mu_aff = xa.inner(&za) / nu;
        let sigma = (mu_aff / mu).powi(3).clamp(1e-8, 0.99);

        // corrector
        let (dx, dy, dz) = solve_dir(sigma);
        let ap = psd_step(&x, &dx);
        let ad = psd_step(&z, &dz);
        x.axpy(ap, &dx);
        y += dy.scale(ad);
        z.axpy(ad, &dz);
        x.hermitize();
        z.hermitize();

        // keep iterates safely in the cone
        if x.min_eig() <= 0.0 || z.min_eig() <= 0.0 {
            return Err(Error::Solver("iterate left the PSD cone".into()));
        }
    }

    let primal = p.objective.inner(&x);
    let dual = DVector::from_iterator(m, p.rhs.iter().copied()).dot(&y);
    let report = SolveReport {
        primal,
        dual,
        gap: (primal - dual).abs(),
        iterations,
        status,
    };
    Ok(SdpSolution { x, y, z, report })
}

/// Orthonormal basis of the real vector space of `d×d` Hermitian matrices
/// under `⟨A,B⟩ = Re tr(A†B)`: diagonal units, then symmetric and
/// antisymmetric off-diagonal pairs.
pub fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(i, i)] = cr(1.0);
        basis.push(m);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = cr(s);
            m[(j, i)] = cr(s);
            basis.push(m);
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = Complex64::new(0.0, -s);
            m[(j, i)] = Complex64::new(0.0, s);
            basis.push(m);
        }
    }
    basis
}

/// Orthonormal Hermitian basis of the orthogonal complement of `anchor`
/// within the Hermitian matrices (Gram-Schmidt against the normalised
/// anchor, discarding the near-zero leftovers).
pub fn hermitian_basis_orthogonal_to(anchor: &CMatrix) -> Vec<CMatrix> {
    let d = anchor.nrows();
    let norm = anchor.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let a = anchor.scale(1.0 / norm);
    let mut out = Vec::with_capacity(d * d - 1);
    for h in hermitian_basis(d) {
        let c: f64 = h.iter().zip(a.iter()).map(|(x, y)| (x.conj() * y).re).sum();
        let mut r = h.clone();
        r -= a.scale(c);
        // re-orthogonalise against what we already kept
        for q in &out {
            let c2: f64 = r
                .iter()
                .zip(q as &CMatrix)
                .map(|(x, y): (&Complex64, &Complex64)| (x.conj() * y).re)
                .sum();
            r -= (q as &CMatrix).scale(c2);
        }
        let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if rn > 1e-8 {
            out.push(r.scale(1.0 / rn));
        }
    }
    debug_assert_eq!(out.len(), d * d - 1);
    out
}
