//! Seeded random instances: Haar pure states, densities of given rank,
//! Hermitian operators, and channels from Haar isometries.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::KrausChannel;
use crate::layout::SystemLayout;
use crate::operator::{c, CMatrix, CVector, DensityMatrix, Operator, PureState};

fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random pure state.
pub fn haar_pure(layout: &SystemLayout, rng: &mut impl Rng) -> PureState {
    let d = layout.dim();
    let mut amp = CVector::from_fn(d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    amp /= Complex64::new(amp.norm(), 0.0);
    PureState::new(layout.clone(), amp).expect("normalized")
}

/// Random density matrix of the given rank (Haar purification traced down).
pub fn random_density(layout: &SystemLayout, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let d = layout.dim();
    let rank = rank.clamp(1, d);
    let g = ginibre(d, rank, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let op = Operator::new(layout.clone(), m.scale(1.0 / tr)).expect("square");
    DensityMatrix::new(op).expect("normalized PSD")
}

/// Random Hermitian operator with entries of order one.
pub fn random_hermitian(layout: &SystemLayout, rng: &mut impl Rng) -> Operator {
    let d = layout.dim();
    let g = ginibre(d, d, rng);
    let h = (&g + g.adjoint()).scale(0.5);
    Operator::new(layout.clone(), h).expect("square")
}

/// Random PSD operator (not normalised).
pub fn random_psd(layout: &SystemLayout, rank: usize, rng: &mut impl Rng) -> Operator {
    let d = layout.dim();
    let rank = rank.clamp(1, d);
    let g = ginibre(d, rank, rng);
    Operator::new(layout.clone(), &g * g.adjoint()).expect("square")
}

/// Random general (non-Hermitian) operator; entries standard complex Gaussian.
pub fn random_operator(layout: &SystemLayout, rng: &mut impl Rng) -> Operator {
    let d = layout.dim();
    Operator::new(layout.clone(), ginibre(d, d, rng)).expect("square")
}

/// Haar-random isometry `d_in → d_out` (requires `d_out ≥ d_in`), via QR.
pub fn haar_isometry(d_out: usize, d_in: usize, rng: &mut impl Rng) -> CMatrix {
    assert!(d_out >= d_in, "isometry needs d_out ≥ d_in");
    let g = ginibre(d_out, d_in, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix phases so the diagonal of R is positive; keeps the distribution Haar
    for j in 0..d_in {
        let rjj = r[(j, j)];
        if rjj.norm() > 0.0 {
            let phase = rjj / Complex64::new(rjj.norm(), 0.0);
            for i in 0..d_out {
                q[(i, j)] *= phase.conj();
            }
        }
    }
    q.columns(0, d_in).into_owned()
}

/// Random trace-preserving channel with the given number of Kraus operators,
/// obtained by slicing a Haar isometry into the environment.
pub fn random_tp_channel(
    in_layout: &SystemLayout,
    out_layout: &SystemLayout,
    kraus_count: usize,
    rng: &mut impl Rng,
) -> KrausChannel {
    let d_in = in_layout.dim();
    let d_out = out_layout.dim();
    let v = haar_isometry(d_out * kraus_count, d_in, rng);
    let kraus: Vec<CMatrix> = (0..kraus_count)
        .map(|k| {
            CMatrix::from_fn(d_out, d_in, |i, j| v[(i * kraus_count + k, j)])
        })
        .collect();
    KrausChannel::new(in_layout.clone(), out_layout.clone(), kraus).expect("valid channel")
}

/// Random unitary channel.
pub fn random_unitary_channel(layout: &SystemLayout, rng: &mut impl Rng) -> KrausChannel {
    let d = layout.dim();
    let u = haar_isometry(d, d, rng);
    KrausChannel::new(layout.clone(), layout.clone(), vec![u]).expect("unitary channel")
}
