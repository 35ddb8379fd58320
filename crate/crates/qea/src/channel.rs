//! Completely positive maps between layouts.
//!
//! Kraus form is primary; the Choi form (convention: `J = (ch ⊗ id)` applied
//! to the unnormalised maximally entangled operator, with the input
//! duplicate on the right, duplicate factors labelled `<name>*`) backs the
//! linear checks. Non-trace-preserving maps are first class; the TP flag
//! only gates operations that require it (Stinespring).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{SystemLabel, SystemLayout};
use crate::operator::{c, cr, CMatrix, Operator};

/// Residual below which `Σ K†K = 1` is accepted as trace preserving.
pub const TP_TOL: f64 = 1e-10;
/// Default absolute max-norm tolerance for the non-signalling check.
pub const NS_TOL: f64 = 1e-8;

#[derive(Clone)]
pub struct KrausChannel {
    in_layout: SystemLayout,
    out_layout: SystemLayout,
    kraus: Vec<CMatrix>,
    trace_preserving: bool,
}

impl std::fmt::Debug for KrausChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "KrausChannel{:?}->{:?} ({} kraus, tp={})",
            self.in_layout,
            self.out_layout,
            self.kraus.len(),
            self.trace_preserving
        )
    }
}

impl KrausChannel {
    pub fn new(
        in_layout: SystemLayout,
        out_layout: SystemLayout,
        kraus: Vec<CMatrix>,
    ) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::LayoutMismatch("empty Kraus set".into()));
        }
        let (d_out, d_in) = (out_layout.dim(), in_layout.dim());
        for k in &kraus {
            if k.nrows() != d_out || k.ncols() != d_in {
                return Err(Error::LayoutMismatch(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    k.nrows(),
                    k.ncols(),
                    d_out,
                    d_in
                )));
            }
        }
        let mut ch = KrausChannel {
            in_layout,
            out_layout,
            kraus,
            trace_preserving: false,
        };
        ch.trace_preserving = ch.tp_residual() <= TP_TOL;
        Ok(ch)
    }

    /// `‖Σ K†K − 1‖_max`.
    pub fn tp_residual(&self) -> f64 {
        let d_in = self.in_layout.dim();
        let mut acc = CMatrix::zeros(d_in, d_in);
        for k in &self.kraus {
            acc += k.adjoint() * k;
        }
        acc -= CMatrix::identity(d_in, d_in);
        acc.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn identity(layout: SystemLayout) -> Self {
        let d = layout.dim();
        KrausChannel {
            in_layout: layout.clone(),
            out_layout: layout,
            kraus: vec![CMatrix::identity(d, d)],
            trace_preserving: true,
        }
    }

    pub fn unitary(layout: SystemLayout, u: CMatrix) -> Result<Self> {
        KrausChannel::new(layout.clone(), layout, vec![u])
    }

    /// Fully depolarizing channel: `ρ ↦ tr(ρ) · 1/d`.
    pub fn depolarizing(layout: SystemLayout) -> Self {
        let d = layout.dim();
        let s = 1.0 / (d as f64).sqrt();
        let mut kraus = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut k = CMatrix::zeros(d, d);
                k[(i, j)] = cr(s);
                kraus.push(k);
            }
        }
        KrausChannel {
            in_layout: layout.clone(),
            out_layout: layout,
            kraus,
            trace_preserving: true,
        }
    }

    /// Replacer map `S_A: ω_AR ↦ 1_A ⊗ ω_R`, as a map on the `A` factor
    /// alone. Not trace preserving: the output trace scales by `dim`.
    pub fn replacer(label: impl Into<SystemLabel>, dim: usize) -> Self {
        let layout = SystemLayout::single(label.into(), dim);
        let mut kraus = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut k = CMatrix::zeros(dim, dim);
                k[(i, j)] = cr(1.0);
                kraus.push(k);
            }
        }
        KrausChannel {
            in_layout: layout.clone(),
            out_layout: layout,
            kraus,
            trace_preserving: dim == 1,
        }
    }

    /// Channel that traces out the given factors of `layout`.
    pub fn trace_out(layout: &SystemLayout, drop: &[SystemLabel]) -> Result<Self> {
        let keep = layout.without(drop)?;
        let drop_layout = layout.restricted_to(drop)?;
        let dd = drop_layout.dim();
        let kd = keep.dim();
        let strides = layout.strides();
        let keep_pos: Vec<usize> = layout
            .factors()
            .iter()
            .enumerate()
            .filter(|(_, (l, _))| !drop.contains(l))
            .map(|(i, _)| i)
            .collect();
        let drop_pos: Vec<usize> = layout
            .factors()
            .iter()
            .enumerate()
            .filter(|(_, (l, _))| drop.contains(l))
            .map(|(i, _)| i)
            .collect();
        let mut kraus = Vec::with_capacity(dd);
        for t in 0..dd {
            let t_multi = drop_layout.multi_index(t);
            let t_base: usize = t_multi.iter().zip(&drop_pos).map(|(m, &p)| m * strides[p]).sum();
            let mut k = CMatrix::zeros(kd, layout.dim());
            for i in 0..kd {
                let i_multi = keep.multi_index(i);
                let i_base: usize = i_multi.iter().zip(&keep_pos).map(|(m, &p)| m * strides[p]).sum();
                k[(i, i_base + t_base)] = cr(1.0);
            }
            kraus.push(k);
        }
        KrausChannel::new(layout.clone(), keep, kraus)
    }

    pub fn in_layout(&self) -> &SystemLayout {
        &self.in_layout
    }

    pub fn out_layout(&self) -> &SystemLayout {
        &self.out_layout
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// Applies the channel to the factors `acting_on` of `rho`, identity on
    /// the spectators. `acting_on` must list exactly the channel's input
    /// labels (any order); dimensions must match. The output layout is the
    /// spectators (original order) followed by the channel's output layout.
    pub fn apply(&self, rho: &Operator, acting_on: &[SystemLabel]) -> Result<Operator> {
        let in_labels: Vec<SystemLabel> = self.in_layout.labels().cloned().collect();
        if acting_on.len() != in_labels.len()
            || in_labels.iter().any(|l| !acting_on.contains(l))
        {
            return Err(Error::LayoutMismatch(
                "acting_on must match the channel input labels".into(),
            ));
        }
        for (l, d) in self.in_layout.factors() {
            if rho.layout().dim_of(l)? != *d {
                return Err(Error::LayoutMismatch(format!(
                    "factor {l} has dimension {} in the state but {} in the channel",
                    rho.layout().dim_of(l)?,
                    d
                )));
            }
        }
        let spectators: Vec<SystemLabel> = rho
            .layout()
            .labels()
            .filter(|l| !acting_on.contains(l))
            .cloned()
            .collect();
        // reorder so that the channel input factors sit last, in channel order
        let mut order = spectators.clone();
        order.extend(in_labels.iter().cloned());
        let permuted = rho.permute_systems(&order)?;
        let spec_layout = permuted.layout().restricted_to(&spectators)?;
        let ds = spec_layout.dim();
        let id_spec = CMatrix::identity(ds, ds);
        let out_layout = spec_layout.concat(&self.out_layout)?;
        let d_out = out_layout.dim();
        let mut acc = CMatrix::zeros(d_out, d_out);
        for k in &self.kraus {
            let big = id_spec.kronecker(k);
            acc += &big * permuted.entries() * big.adjoint();
        }
        Operator::new(out_layout, acc)
    }

    /// Choi matrix `J = (ch ⊗ id)(Φ)` with `Φ` the unnormalised maximally
    /// entangled operator; input duplicate labels carry a `*` suffix and
    /// sit to the right of the output factors.
    pub fn choi(&self) -> Result<ChoiMatrix> {
        let dup = SystemLayout::new(
            self.in_layout
                .factors()
                .iter()
                .map(|(l, d)| (l.dup(), *d))
                .collect(),
        )?;
        let layout = self.out_layout.concat(&dup)?;
        let (d_out, d_in) = (self.out_layout.dim(), self.in_layout.dim());
        let n = d_out * d_in;
        let mut j = CMatrix::zeros(n, n);
        for k in &self.kraus {
            // w[(o, i)] = K[o, i]; J += w w†
            let w: Vec<Complex64> = (0..n)
                .map(|idx| k[(idx / d_in, idx % d_in)])
                .collect();
            for r in 0..n {
                if w[r].norm_sqr() == 0.0 {
                    continue;
                }
                for s in 0..n {
                    j[(r, s)] += w[r] * w[s].conj();
                }
            }
        }
        let matrix = Operator::new(layout, j)?;
        Ok(ChoiMatrix {
            in_layout: self.in_layout.clone(),
            out_layout: self.out_layout.clone(),
            matrix,
            trace_preserving: self.trace_preserving,
        })
    }

    /// `self ∘ other` (apply `other` first). Requires `other.out_layout ==
    /// self.in_layout`.
    pub fn compose(&self, other: &KrausChannel) -> Result<KrausChannel> {
        if self.in_layout != other.out_layout {
            return Err(Error::LayoutMismatch(
                "compose: inner layouts do not chain".into(),
            ));
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a * b);
            }
        }
        KrausChannel::new(other.in_layout.clone(), self.out_layout.clone(), kraus)
    }

    /// Tensor product of two channels on disjoint labels.
    pub fn tensor(&self, other: &KrausChannel) -> Result<KrausChannel> {
        let in_layout = self.in_layout.concat(&other.in_layout)?;
        let out_layout = self.out_layout.concat(&other.out_layout)?;
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(a.kronecker(b));
            }
        }
        KrausChannel::new(in_layout, out_layout, kraus)
    }

    /// n-fold tensor power; factor labels get `_k` suffixes per copy.
    pub fn tensor_power(&self, n: usize) -> Result<KrausChannel> {
        assert!(n >= 1);
        let relabel = |layout: &SystemLayout, k: usize| -> SystemLayout {
            SystemLayout::new(
                layout
                    .factors()
                    .iter()
                    .map(|(l, d)| (SystemLabel::new(format!("{}_{k}", l.as_str())), *d))
                    .collect(),
            )
            .expect("relabelled layout")
        };
        let mut acc = KrausChannel {
            in_layout: relabel(&self.in_layout, 1),
            out_layout: relabel(&self.out_layout, 1),
            kraus: self.kraus.clone(),
            trace_preserving: self.trace_preserving,
        };
        for k in 2..=n {
            let copy = KrausChannel {
                in_layout: relabel(&self.in_layout, k),
                out_layout: relabel(&self.out_layout, k),
                kraus: self.kraus.clone(),
                trace_preserving: self.trace_preserving,
            };
            acc = acc.tensor(&copy)?;
        }
        Ok(acc)
    }

    /// Stinespring isometry `V = Σ_k K_k ⊗ |k⟩_env` with the environment as
    /// the last factor; `Tr_env(VρV†)` reproduces the channel. Requires a
    /// trace-preserving channel.
    pub fn stinespring(&self, env_label: impl Into<SystemLabel>) -> Result<(CMatrix, SystemLayout)> {
        let res = self.tp_residual();
        if res > TP_TOL {
            return Err(Error::NotTracePreserving(res));
        }
        let n_env = self.kraus.len();
        let (d_out, d_in) = (self.out_layout.dim(), self.in_layout.dim());
        let mut v = CMatrix::zeros(d_out * n_env, d_in);
        for (k, kr) in self.kraus.iter().enumerate() {
            for o in 0..d_out {
                for i in 0..d_in {
                    v[(o * n_env + k, i)] = kr[(o, i)];
                }
            }
        }
        let layout = self
            .out_layout
            .concat(&SystemLayout::single(env_label.into(), n_env))?;
        Ok((v, layout))
    }

    /// Non-signalling check for a channel `m: R E → A R' E'`. `r_label`
    /// names the R input factor and `traced_out` the output factors (A and
    /// R') that are discarded before the check. On a pass the extracted
    /// channel `E → E'` is returned; it is CP by construction and TP when
    /// `m` is.
    pub fn check_nonsignalling(
        &self,
        r_label: &SystemLabel,
        traced_out: &[SystemLabel],
        tol: f64,
    ) -> Result<NonSignallingReport> {
        self.in_layout.position(r_label)?;
        for l in traced_out {
            self.out_layout.position(l)?;
        }
        let tr = KrausChannel::trace_out(&self.out_layout, traced_out)?;
        let n = tr.compose(self)?;
        let j = n.choi()?;
        let d_r = self.in_layout.dim_of(r_label)?;
        let r_dup = r_label.dup();
        // candidate: (Tr_{R*} J)/d_R ⊗ 1_{R*}, factors re-ordered to match J
        let reduced = j.matrix.partial_trace(
            &j.matrix
                .layout()
                .labels()
                .filter(|l| **l != r_dup)
                .cloned()
                .collect::<Vec<_>>(),
        )?;
        let candidate = reduced
            .scale(1.0 / d_r as f64)
            .tensor(&Operator::identity(SystemLayout::single(r_dup.clone(), d_r)))?
            .permute_systems(&j.matrix.layout().labels().cloned().collect::<Vec<_>>())?;
        let residual = j.matrix.max_diff(&candidate);
        let passes = residual <= tol;
        let extracted = if passes {
            let e_in = self.in_layout.without(std::slice::from_ref(r_label))?;
            let e_out = n.out_layout.clone();
            let choi = ChoiMatrix {
                in_layout: e_in.clone(),
                out_layout: e_out,
                matrix: reduced.scale(1.0 / d_r as f64),
                trace_preserving: self.trace_preserving,
            };
            Some(choi.to_kraus(1e-12)?)
        } else {
            None
        };
        Ok(NonSignallingReport {
            passes,
            residual,
            extracted,
        })
    }
}

/// Result of [`KrausChannel::check_nonsignalling`].
#[derive(Debug)]
pub struct NonSignallingReport {
    pub passes: bool,
    pub residual: f64,
    pub extracted: Option<KrausChannel>,
}

/// Choi form of a channel.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub in_layout: SystemLayout,
    pub out_layout: SystemLayout,
    /// Operator on `out ⊗ in-duplicate`.
    pub matrix: Operator,
    pub trace_preserving: bool,
}

impl ChoiMatrix {
    /// Canonical Kraus operators from the Choi eigendecomposition,
    /// discarding eigenvalues at or below `rank_tol · λ_max`. Rejects a
    /// Choi matrix that fails PSD beyond tolerance.
    pub fn to_kraus(&self, rank_tol: f64) -> Result<KrausChannel> {
        let (vals, vecs) = self.matrix.herm_eig()?;
        let lmax = vals.first().copied().unwrap_or(0.0).max(0.0);
        if let Some(&min) = vals.last() {
            if min < -1e-9 * lmax.max(1.0) {
                return Err(Error::NotPositive(min));
            }
        }
        let (d_out, d_in) = (self.out_layout.dim(), self.in_layout.dim());
        let cut = rank_tol * lmax;
        let mut kraus = Vec::new();
        for (k, &v) in vals.iter().enumerate() {
            if v <= cut {
                continue;
            }
            let s = v.sqrt();
            let col = vecs.column(k);
            let m = CMatrix::from_fn(d_out, d_in, |o, i| col[o * d_in + i] * s);
            kraus.push(m);
        }
        if kraus.is_empty() {
            // zero map; keep one explicit zero Kraus operator
            kraus.push(CMatrix::zeros(d_out, d_in));
        }
        KrausChannel::new(self.in_layout.clone(), self.out_layout.clone(), kraus)
    }

    /// `Tr_out J` compared against `1_in`; the TP defect in max-norm.
    pub fn tp_residual(&self) -> Result<f64> {
        let dup_labels: Vec<SystemLabel> = self
            .matrix
            .layout()
            .labels()
            .filter(|l| self.out_layout.labels().all(|o| o != *l))
            .cloned()
            .collect();
        let reduced = self.matrix.partial_trace(&dup_labels)?;
        let d = reduced.dim();
        let diff = reduced.sub(&Operator::identity(
            reduced.layout().clone(),
        ));
        let _ = d;
        Ok(diff.max_norm())
    }
}

/// Serialization mirror of the operator JSON with a `kraus` list.
#[derive(Serialize, Deserialize)]
pub struct KrausChannelWire {
    pub in_layout: SystemLayout,
    pub out_layout: SystemLayout,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

impl Serialize for KrausChannel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let kraus = self
            .kraus
            .iter()
            .map(|k| {
                (0..k.nrows())
                    .map(|i| (0..k.ncols()).map(|j| [k[(i, j)].re, k[(i, j)].im]).collect())
                    .collect()
            })
            .collect();
        KrausChannelWire {
            in_layout: self.in_layout.clone(),
            out_layout: self.out_layout.clone(),
            kraus,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KrausChannel {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = KrausChannelWire::deserialize(deserializer)?;
        let (d_out, d_in) = (wire.out_layout.dim(), wire.in_layout.dim());
        let kraus: Vec<CMatrix> = wire
            .kraus
            .iter()
            .map(|k| {
                if k.len() != d_out || k.iter().any(|row| row.len() != d_in) {
                    return Err(D::Error::custom("kraus shape does not match layouts"));
                }
                Ok(CMatrix::from_fn(d_out, d_in, |i, j| {
                    let [re, im] = k[i][j];
                    c(re, im)
                }))
            })
            .collect::<std::result::Result<_, _>>()?;
        KrausChannel::new(wire.in_layout, wire.out_layout, kraus).map_err(D::Error::custom)
    }
}
