//! Max-divergence programs: `D_max` between states and its
//! marginal-constrained extension variant, both solved primal-dual.

use nalgebra::DVector;

use super::sdp::{
    hermitian_basis, hermitian_basis_orthogonal_to, sdp_solve, BlockMatrix, SdpProblem,
    SdpStatus, SolveReport,
};
use crate::error::{Error, Result};
use crate::layout::SystemLabel;
use crate::operator::{CMatrix, DensityMatrix, Operator, SUPPORT_TOL};

/// Support-violation threshold: `tr(Π_ker(σ) ρ)` above this means `+∞`.
pub const SUPPORT_VIOLATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct DmaxResult {
    /// `D_max` in bits (`+∞` on support violation).
    pub value: f64,
    pub report: SolveReport,
}

/// Isometry onto the support of a PSD matrix (columns = eigenvectors with
/// eigenvalue above the relative cutoff) and the support dimension.
fn support_isometry(sigma: &Operator) -> Result<CMatrix> {
    let (vals, vecs) = sigma.herm_eig()?;
    let lmax = vals.first().copied().unwrap_or(0.0).max(0.0);
    let cut = SUPPORT_TOL * lmax;
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > cut).collect();
    let d = sigma.dim();
    let mut w = CMatrix::zeros(d, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        w.set_column(col, &vecs.column(k));
    }
    Ok(w)
}

fn support_violation(rho: &Operator, kernel_proj: &Operator) -> f64 {
    (kernel_proj.entries() * rho.entries()).trace().re
}

/// `D_max(ρ‖σ) = log₂ min{λ : ρ ≤ λσ}` in bits, with both sides of the SDP
/// solved. Returns `+∞` (status `infeasible`) when `supp(ρ) ⊄ supp(σ)`.
pub fn dmax(rho: &DensityMatrix, sigma: &Operator) -> Result<DmaxResult> {
    let sigma = sigma.permute_systems(&rho.layout().labels().cloned().collect::<Vec<_>>())?;
    let kernel = sigma.kernel_projector(SUPPORT_TOL)?;
    if support_violation(rho.op(), &kernel) > SUPPORT_VIOLATION_TOL {
        return Ok(DmaxResult {
            value: f64::INFINITY,
            report: SolveReport::infinite(SdpStatus::Infeasible),
        });
    }
    let w = support_isometry(&sigma)?;
    let rho_c = w.adjoint() * rho.op().entries() * &w;
    let sig_c = w.adjoint() * sigma.entries() * &w;
    let t = sig_c.trace().re;
    let sig_n = sig_c.scale(1.0 / t);

    // standard primal = the max side: min ⟨−ρ, X⟩ s.t. ⟨σ̃, X⟩ = 1, X ⪰ 0
    let d = rho_c.nrows();
    let dims = vec![d];
    let c = BlockMatrix {
        blocks: vec![-rho_c.clone()],
    };
    let a = BlockMatrix {
        blocks: vec![(sig_n.clone() + sig_n.adjoint()).scale(0.5)],
    };
    let p = SdpProblem::new(dims, c, vec![a], vec![1.0])?;
    let sol = sdp_solve(&p, 1e-10)?;

    // min-side optimum λ* = −(dual of the encoded program), then rescale σ
    let lambda_min_side = -sol.report.dual / t;
    let lambda_max_side = -sol.report.primal / t;
    let report = SolveReport {
        primal: lambda_min_side,
        dual: lambda_max_side,
        gap: (lambda_min_side - lambda_max_side).abs(),
        iterations: sol.report.iterations,
        status: sol.report.status,
    };
    Ok(DmaxResult {
        value: lambda_min_side.max(f64::MIN_POSITIVE).log2(),
        report,
    })
}

#[derive(Clone, Debug)]
pub struct DmaxExtensionResult {
    /// `inf_{σ̂: σ̂_A = σ_A} D_max(ρ_AR ‖ σ̂_AR)` in bits.
    pub value: f64,
    /// Optimal extension, normalised to a state.
    pub optimizer: Option<DensityMatrix>,
    pub report: SolveReport,
}

/// Marginal-constrained max-divergence: minimises `tr θ` over `θ ⪰ ρ_AR`
/// with `θ_A ∝ σ_A`. The `A` part is identified by the labels of
/// `sigma_a`; the rest of the state's layout is the extension system.
pub fn dmax_extension(rho_ar: &DensityMatrix, sigma_a: &Operator) -> Result<DmaxExtensionResult> {
    let a_labels: Vec<SystemLabel> = sigma_a.layout().labels().cloned().collect();
    let r_labels: Vec<SystemLabel> = rho_ar
        .layout()
        .labels()
        .filter(|l| !a_labels.contains(l))
        .cloned()
        .collect();
    let mut order = a_labels.clone();
    order.extend(r_labels.iter().cloned());
    let rho_p = rho_ar.op().permute_systems(&order)?;
    let sigma_a = sigma_a.permute_systems(&a_labels)?;
    let d_r: usize = r_labels
        .iter()
        .map(|l| rho_ar.layout().dim_of(l).unwrap())
        .product::<usize>()
        .max(1);

    let kernel_a = sigma_a.kernel_projector(SUPPORT_TOL)?;
    let lifted_kernel = kernel_a.entries().kronecker(&CMatrix::identity(d_r, d_r));
    if (lifted_kernel * rho_p.entries()).trace().re > SUPPORT_VIOLATION_TOL {
        return Ok(DmaxExtensionResult {
            value: f64::INFINITY,
            optimizer: None,
            report: SolveReport::infinite(SdpStatus::Infeasible),
        });
    }

    // compress A to the support of σ_A
    let w = support_isometry(&sigma_a)?;
    let lift = w.kronecker(&CMatrix::identity(d_r, d_r));
    let rho_c = lift.adjoint() * rho_p.entries() * &lift;
    let sig_c = w.adjoint() * sigma_a.entries() * &w;
    let t = sig_c.trace().re;
    let sig_n = sig_c.scale(1.0 / t);
    let ra = sig_n.nrows();
    let d = ra * d_r;

    // blocks: θ, slack S with θ − S = ρ and θ_A ⟂ (complement of σ̃)
    let dims = vec![d, d];
    let mut c = BlockMatrix::zeros(&dims);
    c.blocks[0] = CMatrix::identity(d, d);
    let mut constraints = Vec::new();
    let mut rhs = Vec::new();
    for g in hermitian_basis(d) {
        let mut a = BlockMatrix::zeros(&dims);
        a.blocks[0] = g.clone();
        a.blocks[1] = -g.clone();
        constraints.push(a);
        rhs.push(g.iter().zip(rho_c.iter()).map(|(x, y)| (x.conj() * y).re).sum());
    }
    for h in hermitian_basis_orthogonal_to(&sig_n) {
        let mut a = BlockMatrix::zeros(&dims);
        a.blocks[0] = h.kronecker(&CMatrix::identity(d_r, d_r));
        constraints.push(a);
        rhs.push(0.0);
    }
    let p = SdpProblem::new(dims, c, constraints, rhs)?;
    let sol = sdp_solve(&p, 1e-10)?;

    let lambda = sol.report.primal / t;
    let lambda_dual = sol.report.dual / t;
    let report = SolveReport {
        primal: lambda,
        dual: lambda_dual,
        gap: (lambda - lambda_dual).abs(),
        iterations: sol.report.iterations,
        status: sol.report.status,
    };

    // optimizer: σ̂ = θ/ tr θ lifted back to the original layout
    let theta = &sol.x.blocks[0];
    let tr_theta = theta.trace().re;
    let sigma_hat_entries = &lift * theta.scale(1.0 / tr_theta) * lift.adjoint();
    let layout_p = rho_p.layout().clone();
    let sigma_hat = Operator::new(layout_p, sigma_hat_entries)?
        .permute_systems(&rho_ar.layout().labels().cloned().collect::<Vec<_>>())?;
    let optimizer = DensityMatrix::with_tolerances(sigma_hat, 1e-6, 1e-7).ok();

    Ok(DmaxExtensionResult {
        value: lambda.max(f64::MIN_POSITIVE).log2(),
        optimizer,
        report,
    })
}

/// Conditional min-entropy SDP: `min tr σ_B` subject to
/// `1_A ⊗ σ_B ⪰ ρ_AB`. Returns the optimum (not yet in bits) together
/// with the optimiser and the solve report.
pub fn min_entropy_program(
    rho_ab: &DensityMatrix,
    a_labels: &[SystemLabel],
) -> Result<(f64, Operator, SolveReport)> {
    let b_labels: Vec<SystemLabel> = rho_ab
        .layout()
        .labels()
        .filter(|l| !a_labels.contains(l))
        .cloned()
        .collect();
    let mut order = a_labels.to_vec();
    order.extend(b_labels.iter().cloned());
    let rho_p = rho_ab.op().permute_systems(&order)?;
    let d_a: usize = a_labels
        .iter()
        .map(|l| rho_ab.layout().dim_of(l).unwrap())
        .product::<usize>()
        .max(1);
    let d_b = rho_p.dim() / d_a;
    let d = rho_p.dim();

    // blocks: σ_B, slack S_AB with 1 ⊗ σ − S = ρ
    let dims = vec![d_b, d];
    let mut c = BlockMatrix::zeros(&dims);
    c.blocks[0] = CMatrix::identity(d_b, d_b);
    let mut constraints = Vec::new();
    let mut rhs = Vec::new();
    let id_a = CMatrix::identity(d_a, d_a);
    for g in hermitian_basis(d) {
        let gm = nalgebra::DMatrix::from_fn(d, d, |i, j| g[(i, j)]);
        // ⟨G, 1 ⊗ σ⟩ = ⟨Tr_A-style reduction of G, σ⟩
        let mut red = CMatrix::zeros(d_b, d_b);
        for ai in 0..d_a {
            for bi in 0..d_b {
                for bj in 0..d_b {
                    red[(bi, bj)] += gm[(ai * d_b + bi, ai * d_b + bj)];
                }
            }
        }
        let mut a = BlockMatrix::zeros(&dims);
        a.blocks[0] = (red.clone() + red.adjoint()).scale(0.5);
        a.blocks[1] = -g.clone();
        constraints.push(a);
        rhs.push(g.iter().zip(rho_p.entries().iter()).map(|(x, y)| (x.conj() * y).re).sum());
        let _ = &id_a;
    }
    let p = SdpProblem::new(dims, c, constraints, rhs)?;
    let sol = sdp_solve(&p, 1e-10)?;
    let b_layout = rho_p.layout().restricted_to(&b_labels)?;
    let sigma = Operator::new(b_layout, sol.x.blocks[0].clone())?;
    Ok((sol.report.primal, sigma, sol.report))
}

/// Weak-duality guard used by tests: primal ≥ dual − slack on min programs.
pub fn weak_duality_ok(report: &SolveReport, slack: f64) -> bool {
    report.primal >= report.dual - slack
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::SystemLayout;
    use crate::operator::cr;
    use crate::random;

    #[test]
    fn dmax_of_state_with_itself_is_zero() {
        let mut rng = crate::rng::root(41);
        for _ in 0..5 {
            let rho = random::random_density(&SystemLayout::single("A", 3), 3, &mut rng);
            let r = dmax(&rho, rho.op()).unwrap();
            assert!(r.value.abs() < 1e-7, "value {}", r.value);
            assert!(r.report.gap < 1e-7);
            assert!(weak_duality_ok(&r.report, 1e-9));
        }
    }

    #[test]
    fn dmax_classical_ratio() {
        let layout = SystemLayout::single("A", 2);
        let rho = DensityMatrix::new(Operator::diag(layout.clone(), &[0.75, 0.25]).unwrap()).unwrap();
        let sigma = Operator::diag(layout, &[0.5, 0.5]).unwrap();
        let r = dmax(&rho, &sigma).unwrap();
        assert!((r.value - 1.5f64.log2()).abs() < 1e-7);
    }

    #[test]
    fn dmax_disjoint_support_infinite() {
        let layout = SystemLayout::single("A", 2);
        let rho = DensityMatrix::new(Operator::diag(layout.clone(), &[1.0, 0.0]).unwrap()).unwrap();
        let sigma = Operator::diag(layout, &[0.0, 1.0]).unwrap();
        let r = dmax(&rho, &sigma).unwrap();
        assert!(r.value.is_infinite());
        assert_eq!(r.report.status, SdpStatus::Infeasible);
    }

    #[test]
    fn extension_with_trivial_r_matches_dmax() {
        let mut rng = crate::rng::root(42);
        let layout = SystemLayout::of(&[("A", 2), ("R", 1)]);
        let rho = random::random_density(&layout, 2, &mut rng);
        let sigma = random::random_density(&SystemLayout::single("A", 2), 2, &mut rng);
        let ext = dmax_extension(&rho, sigma.op()).unwrap();
        let marg = rho.partial_trace(&["A".into()]).unwrap();
        let flat = dmax(&marg, sigma.op()).unwrap();
        assert!((ext.value - flat.value).abs() < 1e-6);
    }

    #[test]
    fn extension_equals_marginal_dmax() {
        // Uhlmann property for D_max: the extension program collapses to
        // the single-system value
        let mut rng = crate::rng::root(43);
        for _ in 0..5 {
            let layout = SystemLayout::of(&[("A", 2), ("R", 2)]);
            let rho = random::random_density(&layout, 4, &mut rng);
            let sigma = random::random_density(&SystemLayout::single("A", 2), 2, &mut rng);
            let ext = dmax_extension(&rho, sigma.op()).unwrap();
            let marg = rho.partial_trace(&["A".into()]).unwrap();
            let flat = dmax(&marg, sigma.op()).unwrap();
            assert!(
                (ext.value - flat.value).abs() < 1e-6,
                "ext {} vs flat {}",
                ext.value,
                flat.value
            );
            assert!(ext.report.gap < 1e-7);
            assert!(flat.report.gap < 1e-7);
            // optimizer has the right marginal
            let opt = ext.optimizer.unwrap();
            let opt_a = opt.partial_trace(&["A".into()]).unwrap();
            assert!(opt_a.op().max_diff(sigma.op()) < 1e-5);
        }
    }

    #[test]
    fn commuting_extension_closed_form() {
        // classical case: σ̂ = σ_A ρ_A^{-1} ρ_AR attains the optimum
        let layout = SystemLayout::of(&[("A", 2), ("R", 2)]);
        let rho = DensityMatrix::new(
            Operator::diag(layout.clone(), &[0.4, 0.1, 0.2, 0.3]).unwrap(),
        )
        .unwrap();
        let sigma = Operator::diag(SystemLayout::single("A", 2), &[0.6, 0.4]).unwrap();
        let ext = dmax_extension(&rho, &sigma).unwrap();
        let marg = rho.partial_trace(&["A".into()]).unwrap();
        let flat = dmax(&marg, &sigma).unwrap();
        assert!((ext.value - flat.value).abs() < 1e-6);
        // explicit commuting optimizer: diag entries σ_a/ρ_a · ρ_{ar}
        let explicit = Operator::diag(
            layout,
            &[
                0.6 / 0.5 * 0.4,
                0.6 / 0.5 * 0.1,
                0.4 / 0.5 * 0.2,
                0.4 / 0.5 * 0.3,
            ],
        )
        .unwrap();
        let d_explicit = dmax(&rho, &explicit).unwrap();
        assert!((d_explicit.value - flat.value).abs() < 1e-6);
        let _ = cr(0.0);
    }

    #[test]
    fn min_entropy_program_bell() {
        let layout = SystemLayout::of(&[("A", 2), ("B", 2)]);
        let mut amp = crate::operator::CVector::zeros(4);
        amp[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
        amp[3] = cr(std::f64::consts::FRAC_1_SQRT_2);
        let bell = crate::operator::PureState::new(layout, amp).unwrap().to_density();
        let (opt, _, report) = min_entropy_program(&bell, &["A".into()]).unwrap();
        assert!((opt - 2.0).abs() < 1e-7, "optimum {opt}");
        assert!(report.gap < 1e-7);
        assert!(weak_duality_ok(&report, 1e-9));
    }
}
