//! n-th roots of unitaries.
//!
//! A [`BranchFunction`] picks, on each arc of the circle, which of the `n` roots
//! `e^{i(α+2πk)/n}` is taken. Applying it through the functional calculus gives a
//! root that lies in the algebra generated by `u`. [`general_root_search`] instead
//! builds roots blockwise on degenerate eigenspaces, which may leave that algebra.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::operator::{Operator, Unitary, C64};
use crate::spectral::{
    apply_circle_function, normalize_angle, phase, spectral_decompose, SpectralDecomposition,
};

/// Default bound on `‖vⁿ − u‖`.
pub const DEFAULT_ROOT_TOL: f64 = 1e-9;

const SEAM_TOL: f64 = 1e-12;

/// Half-open arc `[start, end)` traversed counterclockwise, carrying branch index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchArc {
    pub start: f64,
    pub end: f64,
    pub k: u32,
}

impl BranchArc {
    fn length(&self, only: bool) -> f64 {
        let len = (self.end - self.start).rem_euclid(TAU);
        if only && len < SEAM_TOL {
            TAU
        } else {
            len
        }
    }
}

#[derive(Deserialize)]
struct RawBranch {
    n: u32,
    arcs: Vec<BranchArc>,
}

/// Piecewise-constant choice of n-th root on the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBranch")]
pub struct BranchFunction {
    n: u32,
    arcs: Vec<BranchArc>,
    #[serde(skip)]
    lengths: Vec<f64>,
}

impl TryFrom<RawBranch> for BranchFunction {
    type Error = LabError;
    fn try_from(raw: RawBranch) -> Result<Self> {
        BranchFunction::from_arcs(raw.n, raw.arcs)
    }
}

impl BranchFunction {
    /// Validates that the arcs tile the circle and every `k < n`.
    pub fn from_arcs(n: u32, arcs: Vec<BranchArc>) -> Result<Self> {
        if n < 2 {
            return Err(LabError::InvalidBranch(format!("root order {n} < 2")));
        }
        if arcs.is_empty() {
            return Err(LabError::InvalidBranch("no arcs".into()));
        }
        let mut arcs: Vec<BranchArc> = arcs
            .into_iter()
            .map(|a| {
                if !(a.start.is_finite() && a.end.is_finite()) {
                    return Err(LabError::InvalidBranch("non-finite arc endpoint".into()));
                }
                if a.k >= n {
                    return Err(LabError::InvalidBranch(format!("branch index {} >= n = {n}", a.k)));
                }
                Ok(BranchArc { start: normalize_angle(a.start), end: normalize_angle(a.end), k: a.k })
            })
            .collect::<Result<_>>()?;
        arcs.sort_by(|a, b| a.start.total_cmp(&b.start));
        let count = arcs.len();
        for i in 0..count {
            let next = arcs[(i + 1) % count].start;
            let gap = (next - arcs[i].end).rem_euclid(TAU);
            if gap.min(TAU - gap) > SEAM_TOL {
                return Err(LabError::InvalidBranch(format!(
                    "arc ending at {} is not followed by an arc starting there",
                    arcs[i].end
                )));
            }
            // snap so boundary membership is decided by one exact number
            arcs[i].end = next;
        }
        let lengths: Vec<f64> = arcs.iter().map(|a| a.length(count == 1)).collect();
        if lengths.iter().any(|&l| l <= 0.0) {
            return Err(LabError::InvalidBranch("empty arc".into()));
        }
        let total: f64 = lengths.iter().sum();
        if (total - TAU).abs() > 1e-9 {
            return Err(LabError::InvalidBranch(format!("arcs cover {total} rad, not 2π")));
        }
        Ok(BranchFunction { n, arcs, lengths })
    }

    /// `k ≡ 0`: root angle `α/n` for `α ∈ (−π, π]`.
    pub fn principal(n: u32) -> Result<Self> {
        BranchFunction::constant(n, 0)
    }

    pub fn constant(n: u32, k: u32) -> Result<Self> {
        BranchFunction::from_arcs(n, vec![BranchArc { start: PI, end: PI, k }])
    }

    /// Branch `k` on `[start, end)` and the principal branch elsewhere.
    pub fn flipped(n: u32, start: f64, end: f64, k: u32) -> Result<Self> {
        BranchFunction::from_arcs(
            n,
            vec![BranchArc { start, end, k }, BranchArc { start: end, end: start, k: 0 }],
        )
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn arcs(&self) -> &[BranchArc] {
        &self.arcs
    }

    /// Branch index at angle `α`; a boundary angle belongs to the arc starting there.
    pub fn branch_index(&self, alpha: f64) -> u32 {
        let alpha = normalize_angle(alpha);
        for (arc, &len) in self.arcs.iter().zip(&self.lengths) {
            if (alpha - arc.start).rem_euclid(TAU) < len {
                return arc.k;
            }
        }
        // only reachable through rounding at a seam; the arcs tile the circle
        self.arcs[0].k
    }

    /// Unnormalized root angle `(α + 2πk(α))/n`.
    pub fn root_angle(&self, alpha: f64) -> f64 {
        let alpha = normalize_angle(alpha);
        (alpha + TAU * self.branch_index(alpha) as f64) / self.n as f64
    }

    /// `φ(e^{iα})`.
    pub fn root_value(&self, alpha: f64) -> C64 {
        phase(normalize_angle(self.root_angle(alpha)))
    }

    /// The decomposition of `φ(u)`: same eigenvectors, root angles.
    pub fn apply_to_spectrum(&self, d: &SpectralDecomposition) -> SpectralDecomposition {
        d.map_angles(|a| self.root_angle(a))
    }
}

/// `φ(u)` for the branch `b`.
pub fn nth_root_branch(u: &Unitary, b: &BranchFunction) -> Result<Unitary> {
    let d = spectral_decompose(u)?;
    nth_root_from_spectrum(&d, b)
}

pub fn nth_root_from_spectrum(d: &SpectralDecomposition, b: &BranchFunction) -> Result<Unitary> {
    Unitary::new(apply_circle_function(d, |a| b.root_value(a))?)
}

/// The correction unitary `(ξ/η)(u)`, pointwise quotient of two branches of the same
/// order. Its eigenvalues are n-th roots of unity.
pub fn correction_unitary(
    d: &SpectralDecomposition,
    xi: &BranchFunction,
    eta: &BranchFunction,
) -> Result<Unitary> {
    if xi.order() != eta.order() {
        return Err(LabError::InvalidBranch(format!(
            "branch orders differ: {} vs {}",
            xi.order(),
            eta.order()
        )));
    }
    let n = xi.order() as i64;
    Unitary::new(apply_circle_function(d, |a| {
        let dk = xi.branch_index(a) as i64 - eta.branch_index(a) as i64;
        crate::operator::root_of_unity(dk, n as u64)
    })?)
}

/// Per-cluster recipe for [`general_root_search`].
#[derive(Debug, Clone, PartialEq)]
pub enum MixerBlock {
    /// The principal scalar root `e^{iα/n}` on the whole cluster.
    Principal,
    /// An explicit block in the cluster eigenbasis; its n-th power must be `e^{iα}·I`.
    Block(Operator),
}

/// Builds `v = Σ_c V_c M_c V_c†` over the degeneracy clusters of `u`.
///
/// `mixer` must give one entry per cluster, in the ascending-angle cluster order of
/// [`spectral_decompose`].
pub fn general_root_search(u: &Unitary, n: u32, mixer: &[MixerBlock]) -> Result<Unitary> {
    if n < 2 {
        return Err(LabError::InvalidOrder(n));
    }
    let d = spectral_decompose(u)?;
    if mixer.len() != d.clusters().len() {
        return Err(LabError::InvalidArgument(format!(
            "mixer has {} blocks, u has {} clusters",
            mixer.len(),
            d.clusters().len()
        )));
    }
    let dim = u.dim();
    let mut v = DMatrix::<C64>::zeros(dim, dim);
    for (c, (members, block)) in d.clusters().iter().zip(mixer).enumerate() {
        let k = members.len();
        let alpha = d.angles()[members[0]];
        let basis = DMatrix::from_fn(dim, k, |i, j| d.vectors()[(i, members[j])]);
        let m = match block {
            MixerBlock::Principal => {
                DMatrix::from_diagonal_element(k, k, phase(alpha / n as f64))
            }
            MixerBlock::Block(m) => {
                if m.dim() != k {
                    return Err(LabError::Mixer {
                        cluster: c,
                        reason: format!("block dim {} but cluster dim {k}", m.dim()),
                    });
                }
                let target = Operator::scalar(k, phase(alpha));
                let dev = m.pow(n).distance(&target)?;
                if !(dev <= DEFAULT_ROOT_TOL) {
                    return Err(LabError::Mixer {
                        cluster: c,
                        reason: format!("block^{n} deviates from e^(i{alpha})·I by {dev:e}"),
                    });
                }
                m.matrix().clone()
            }
        };
        v += &basis * m * basis.adjoint();
    }
    Unitary::new(Operator::new(v)?)
}

/// Outcome of [`root_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    /// `‖vⁿ − u‖`.
    pub residual: f64,
    /// `max_c ‖[v, P_c]‖` over the spectral projections of `u`.
    pub commutation_residual: f64,
    /// Distance from `v` to the algebra `C*(u) = span{P_c}`.
    pub algebra_residual: f64,
    /// `algebra_residual ≤ 1e-9`: `v` is a circle function of `u`.
    pub in_generated_algebra: bool,
}

pub fn root_residual(v: &Unitary, u: &Unitary, n: u32) -> Result<RootReport> {
    if n == 0 {
        return Err(LabError::InvalidOrder(n));
    }
    crate::operator::ensure_same_dim(v, u)?;
    let residual = v.pow(n).distance(u)?;
    let d = spectral_decompose(u)?;
    let mut commutation: f64 = 0.0;
    let mut nearest = Operator::zeros(u.dim());
    for (c, members) in d.clusters().iter().enumerate() {
        let p = d.cluster_projector(c);
        commutation = commutation.max(v.commutator_norm(&p)?);
        // HS projection of v onto P_c: tr(P_c v) / rank
        let coeff = (&p * v.as_operator()).trace() / members.len() as f64;
        nearest = &nearest + &p.scale(coeff);
    }
    let algebra_residual = v.distance(&nearest)?;
    Ok(RootReport {
        residual,
        commutation_residual: commutation,
        algebra_residual,
        in_generated_algebra: algebra_residual <= DEFAULT_ROOT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_unitary_seeded;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn diag_unitary(entries: &[C64]) -> Unitary {
        Unitary::new(Operator::diagonal(entries).unwrap()).unwrap()
    }

    fn clock4() -> Unitary {
        diag_unitary(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)])
    }

    #[test]
    fn branch_validation() {
        assert!(BranchFunction::principal(1).is_err());
        assert!(BranchFunction::constant(2, 2).is_err());
        let gap = vec![
            BranchArc { start: 0.0, end: 1.0, k: 0 },
            BranchArc { start: 1.5, end: 0.0, k: 1 },
        ];
        assert!(BranchFunction::from_arcs(2, gap).is_err());
        let f = BranchFunction::flipped(2, 0.5, 1.0, 1).unwrap();
        assert_eq!(f.branch_index(0.5), 1);
        assert_eq!(f.branch_index(0.75), 1);
        assert_eq!(f.branch_index(1.0), 0);
        assert_eq!(f.branch_index(-3.0), 0);
        // arc across the seam
        let w = BranchFunction::flipped(3, 3.0, -3.0, 2).unwrap();
        assert_eq!(w.branch_index(PI), 2);
        assert_eq!(w.branch_index(-3.05), 2);
        assert_eq!(w.branch_index(0.0), 0);
    }

    #[test]
    fn branch_json_shape() {
        let b: BranchFunction = serde_json::from_str(
            r#"{"n": 2, "arcs": [{"start": 0.5, "end": 1.0, "k": 1}, {"start": 1.0, "end": 0.5, "k": 0}]}"#,
        )
        .unwrap();
        assert_eq!(b, BranchFunction::flipped(2, 0.5, 1.0, 1).unwrap());
        let text = serde_json::to_string(&b).unwrap();
        let back: BranchFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, b);
        assert!(serde_json::from_str::<BranchFunction>(r#"{"n": 2, "arcs": []}"#).is_err());
    }

    #[test]
    fn scalar_roots() {
        let one = diag_unitary(&[c(1.0, 0.0)]);
        let p = BranchFunction::principal(2).unwrap();
        assert_eq!(nth_root_branch(&one, &p).unwrap().as_operator(), one.as_operator());

        let minus = diag_unitary(&[c(-1.0, 0.0)]);
        assert_eq!(nth_root_branch(&minus, &p).unwrap().entry(0, 0), c(0.0, 1.0));
        let k1 = BranchFunction::constant(2, 1).unwrap();
        // (π + 2π)/2 = 3π/2
        let r = nth_root_branch(&minus, &k1).unwrap().entry(0, 0);
        assert_abs_diff_eq!(r.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn principal_root_of_clock4() {
        let u = clock4();
        let v = nth_root_branch(&u, &BranchFunction::principal(2).unwrap()).unwrap();
        let expected = Operator::diagonal(&[
            c(1.0, 0.0),
            C64::from_polar(1.0, FRAC_PI_4),
            c(0.0, 1.0),
            C64::from_polar(1.0, -FRAC_PI_4),
        ])
        .unwrap();
        assert!(v.distance(&expected).unwrap() < 1e-15);
        let rep = root_residual(&v, &u, 2).unwrap();
        assert!(rep.residual <= 1e-12);
        assert!(rep.in_generated_algebra);
    }

    #[test]
    fn mixer_roots_of_identity() {
        let i2 = Unitary::identity(2);
        let x = Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let v = general_root_search(&i2, 2, &[MixerBlock::Block(x.clone())]).unwrap();
        assert_eq!(v.as_operator(), &x);
        let rep = root_residual(&v, &i2, 2).unwrap();
        assert_eq!(rep.residual, 0.0);
        assert!(!rep.in_generated_algebra);

        let z = Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        let v = general_root_search(&i2, 2, &[MixerBlock::Block(z.clone())]).unwrap();
        assert_eq!(v.as_operator(), &z);
        assert!(!root_residual(&v, &i2, 2).unwrap().in_generated_algebra);
    }

    #[test]
    fn mixer_on_minus_identity() {
        let u = diag_unitary(&[c(-1.0, 0.0), c(-1.0, 0.0)]);
        let rot = Operator::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        // i·R squares to +I, so it is not a square root of −I
        let bad = general_root_search(&u, 2, &[MixerBlock::Block(rot.scale(c(0.0, 1.0)))]);
        assert!(matches!(bad, Err(LabError::Mixer { cluster: 0, .. })));
        let v = general_root_search(&u, 2, &[MixerBlock::Block(rot.clone())]).unwrap();
        assert_eq!(v.pow(2), Operator::scalar(2, c(-1.0, 0.0)));
        assert!(!root_residual(&v, &u, 2).unwrap().in_generated_algebra);
    }

    #[test]
    fn mixer_errors() {
        let i2 = Unitary::identity(2);
        let r = general_root_search(&i2, 2, &[MixerBlock::Block(Operator::identity(3))]);
        assert!(matches!(r, Err(LabError::Mixer { .. })));
        let r = general_root_search(&i2, 2, &[MixerBlock::Principal, MixerBlock::Principal]);
        assert!(matches!(r, Err(LabError::InvalidArgument(_))));
        assert!(matches!(general_root_search(&i2, 1, &[]), Err(LabError::InvalidOrder(1))));
    }

    #[test]
    fn order_one_residual() {
        let u = random_unitary_seeded(5, 3).unwrap();
        let rep = root_residual(&u, &u, 1).unwrap();
        assert_eq!(rep.residual, 0.0);
        assert!(root_residual(&u, &Unitary::identity(4), 2).is_err());
    }

    #[test]
    fn correction_unitary_links_two_branches() {
        let u = random_unitary_seeded(8, 17).unwrap();
        let d = spectral_decompose(&u).unwrap();
        let xi = BranchFunction::flipped(3, -1.0, 2.0, 2).unwrap();
        let eta = BranchFunction::flipped(3, 0.5, -2.5, 1).unwrap();
        let a = nth_root_from_spectrum(&d, &xi).unwrap();
        let b = nth_root_from_spectrum(&d, &eta).unwrap();
        let w = correction_unitary(&d, &xi, &eta).unwrap();
        let quotient = a.as_operator() * b.adjoint().as_operator();
        assert!(quotient.distance(&w).unwrap() < 1e-9);
        assert!(w.pow(3).distance(&Operator::identity(8)).unwrap() < 1e-12);
        assert!(a.commutator_norm(&b).unwrap() < 1e-12);
        let p2 = BranchFunction::principal(2).unwrap();
        assert!(correction_unitary(&d, &xi, &p2).is_err());
    }
}
