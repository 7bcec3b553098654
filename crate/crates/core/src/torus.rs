//! Clock-and-shift representations of the rational noncommutative torus.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exec::{self, Execution};
use crate::operator::{ensure_same_dim, root_of_unity, Operator, Unitary, C64};
use crate::tower::{embed_compact_function, CompactFunction, RootTower};

/// Default dimension guard for generated representations.
pub const DEFAULT_MAX_DIM: usize = 128;

#[derive(Deserialize)]
struct RawParams {
    p: i64,
    q: u64,
}

/// `θ = p/q` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct TorusParams {
    p: i64,
    q: u64,
    #[serde(skip)]
    was_coprime: bool,
}

impl TryFrom<RawParams> for TorusParams {
    type Error = LabError;
    fn try_from(raw: RawParams) -> Result<Self> {
        TorusParams::new(raw.p, raw.q)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl TorusParams {
    /// Reduces `p/q`; `q = 0` is rejected.
    pub fn new(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(LabError::InvalidTorus("q must be positive".into()));
        }
        let g = gcd(p.unsigned_abs(), q);
        Ok(TorusParams { p: p / g as i64, q: q / g, was_coprime: g == 1 })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Whether the parameters were already in lowest terms when given.
    pub fn was_coprime(&self) -> bool {
        self.was_coprime
    }

    pub fn theta(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// `e^{2πiθ}`.
    pub fn phase(&self) -> C64 {
        root_of_unity(self.p, self.q)
    }

    /// `θ/2` in lowest terms.
    pub fn halved(&self) -> Result<TorusParams> {
        let q2 = self
            .q
            .checked_mul(2)
            .ok_or_else(|| LabError::InvalidTorus("q overflows".into()))?;
        TorusParams::new(self.p, q2)
    }
}

/// `U = diag(1, ω, …, ω^{q−1})` and the cyclic shift `V e_j = e_{j+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusRep {
    pub params: TorusParams,
    pub u: Unitary,
    pub v: Unitary,
    /// `‖UV − e^{2πiθ}VU‖`.
    pub commutation_residual: f64,
    /// `‖U^q − I‖`.
    pub order_residual_u: f64,
    /// `‖V^q − I‖`.
    pub order_residual_v: f64,
}

pub fn clock(params: TorusParams) -> Result<Unitary> {
    let q = params.q;
    let d: Vec<C64> = (0..q as i64).map(|j| root_of_unity(j * params.p, q)).collect();
    Unitary::new(Operator::diagonal(&d)?)
}

pub fn shift(dim: usize) -> Unitary {
    let mut m = nalgebra::DMatrix::<C64>::zeros(dim, dim);
    for j in 0..dim {
        m[((j + 1) % dim, j)] = C64::new(1.0, 0.0);
    }
    Unitary::new(Operator::from_matrix_unchecked(m)).expect("permutation matrices are unitary")
}

pub fn clock_shift(params: TorusParams) -> Result<TorusRep> {
    clock_shift_with_max(params, DEFAULT_MAX_DIM)
}

pub fn clock_shift_with_max(params: TorusParams, max_dim: usize) -> Result<TorusRep> {
    let dim = params.q as usize;
    if dim > max_dim {
        return Err(LabError::DimensionLimit { dim, max: max_dim });
    }
    let u = clock(params)?;
    let v = shift(dim);
    let commutation_residual = twisted_commutator(&u, &v, params.phase());
    let id = Operator::identity(dim);
    let order_residual_u = (&u.pow(params.q as u32) - &id).operator_norm();
    let order_residual_v = (&v.pow(params.q as u32) - &id).operator_norm();
    Ok(TorusRep { params, u, v, commutation_residual, order_residual_u, order_residual_v })
}

fn twisted_commutator(a: &Operator, b: &Operator, phase: C64) -> f64 {
    (&(a * b) - &(b * a).scale(phase)).operator_norm()
}

/// `e^{2πiθ}`, exact when `4θ` is an integer.
pub fn theta_phase(theta: f64) -> C64 {
    let quarter = 4.0 * theta;
    if quarter.fract() == 0.0 && quarter.abs() < 1e15 {
        return root_of_unity(quarter as i64, 4);
    }
    C64::from_polar(1.0, std::f64::consts::TAU * theta)
}

/// `‖ab − e^{2πiθ}ba‖`.
pub fn commutation_residual(a: &Unitary, b: &Unitary, theta: f64) -> Result<f64> {
    ensure_same_dim(a, b)?;
    if !theta.is_finite() {
        return Err(LabError::InvalidArgument(format!("theta {theta}")));
    }
    Ok(twisted_commutator(a, b, theta_phase(theta)))
}

/// `(π*_u(f₁)π*_v(f₂), π*_v(f₁)π*_u(f₂))` at a common tower level.
pub fn covering_generator_products(
    u_tower: &RootTower,
    v_tower: &RootTower,
    f1: &CompactFunction,
    f2: &CompactFunction,
    level: usize,
) -> Result<(Operator, Operator)> {
    if u_tower.dim() != v_tower.dim() {
        return Err(LabError::DimensionMismatch { left: u_tower.dim(), right: v_tower.dim() });
    }
    let uf1 = embed_compact_function(u_tower, f1, level)?;
    let vf2 = embed_compact_function(v_tower, f2, level)?;
    let vf1 = embed_compact_function(v_tower, f1, level)?;
    let uf2 = embed_compact_function(u_tower, f2, level)?;
    Ok((&uf1 * &vf2, &vf1 * &uf2))
}

/// A square root of the identity that anticommutes with a second unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct AnticommutingWitness {
    pub u: Unitary,
    pub u1: Unitary,
    pub v: Unitary,
    /// `‖u₁² − u‖`.
    pub square_residual: f64,
    /// `‖u₁v + vu₁‖`.
    pub anticommutator_residual: f64,
}

/// `u = I₂`, `u₁ = σ_x`, `v = σ_z`: all entries are integers, so both residuals
/// vanish exactly.
pub fn anticommuting_root_example() -> AnticommutingWitness {
    let u = Unitary::identity(2);
    let u1 = shift(2);
    let v = Unitary::new(Operator::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).expect("2x2"))
        .expect("σ_z is unitary");
    let square_residual = (&u1.pow(2) - u.as_operator()).operator_norm();
    let anticommutator_residual =
        (&(u1.as_operator() * v.as_operator()) + &(v.as_operator() * u1.as_operator())).operator_norm();
    AnticommutingWitness { u, u1, v, square_residual, anticommutator_residual }
}

/// Result of mapping `A_θ → A_{θ/2}` by `u ↦ (u′)²`, `v ↦ v′`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaHalvingReport {
    pub source: TorusParams,
    pub target: TorusParams,
    pub source_dim: usize,
    pub target_dim: usize,
    /// `‖UV − e^{2πiθ}VU‖` for the source pair.
    pub source_relation_residual: f64,
    /// `‖u′v′ − e^{iπθ}v′u′‖`.
    pub target_relation_residual: f64,
    /// `‖(u′)²v′ − e^{2πiθ}v′(u′)²‖`: the image satisfies the source relation.
    pub image_relation_residual: f64,
    /// `‖((u′)²)^q − I‖`.
    pub image_order_residual: f64,
    /// `‖(v′)^{2q} − I‖`.
    pub shift_order_residual: f64,
}

impl ThetaHalvingReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.source_relation_residual,
            self.target_relation_residual,
            self.image_relation_residual,
            self.image_order_residual,
            self.shift_order_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn theta_halving_embedding(params: TorusParams, max_dim: usize) -> Result<ThetaHalvingReport> {
    let target = params.halved()?;
    let source_rep = clock_shift_with_max(params, max_dim)?;
    let target_rep = clock_shift_with_max(target, max_dim)?;
    let u2 = target_rep.u.pow(2);
    let v = target_rep.v.as_operator();
    let id = Operator::identity(target_rep.u.dim());
    Ok(ThetaHalvingReport {
        source: params,
        target,
        source_dim: source_rep.u.dim(),
        target_dim: target_rep.u.dim(),
        source_relation_residual: source_rep.commutation_residual,
        target_relation_residual: target_rep.commutation_residual,
        image_relation_residual: twisted_commutator(&u2, v, params.phase()),
        image_order_residual: (&u2.pow(params.q as u32) - &id).operator_norm(),
        shift_order_residual: (&v.pow(2 * params.q as u32) - &id).operator_norm(),
    })
}

/// `steps` successive halvings starting from `params`.
pub fn theta_halving_tower(params: TorusParams, steps: usize, max_dim: usize) -> Result<Vec<ThetaHalvingReport>> {
    let mut out = Vec::with_capacity(steps);
    let mut current = params;
    for _ in 0..steps {
        let r = theta_halving_embedding(current, max_dim)?;
        current = r.target;
        out.push(r);
    }
    Ok(out)
}

/// Relation and order residuals of one clock/shift pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub p: i64,
    pub q: u64,
    pub relation: f64,
    pub order_u: f64,
    pub order_v: f64,
}

/// All coprime `0 ≤ p < q ≤ max_q`, evaluated independently.
pub fn relation_sweep(max_q: u64, exec: Execution) -> Result<Vec<RelationRecord>> {
    let params: Vec<TorusParams> = (1..=max_q)
        .flat_map(|q| (0..q as i64).map(move |p| (p, q)))
        .filter(|&(p, q)| gcd(p.unsigned_abs(), q) == 1)
        .map(|(p, q)| TorusParams::new(p, q))
        .collect::<Result<_>>()?;
    exec::try_map(exec, &params, |&tp| {
        let rep = clock_shift_with_max(tp, usize::MAX)?;
        Ok(RelationRecord {
            p: tp.p,
            q: tp.q,
            relation: rep.commutation_residual,
            order_u: rep.order_residual_u,
            order_v: rep.order_residual_v,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::BranchFunction;
    use crate::span::generate_span;
    use crate::tower::build_tower;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn params_reduce() {
        let t = TorusParams::new(2, 6).unwrap();
        assert_eq!((t.p(), t.q(), t.was_coprime()), (1, 3, false));
        assert_eq!(TorusParams::new(0, 5).unwrap().q(), 1);
        assert_eq!(TorusParams::new(-2, 4).unwrap().p(), -1);
        assert!(TorusParams::new(1, 0).is_err());
        let j: TorusParams = serde_json::from_str(r#"{"p": 1, "q": 3}"#).unwrap();
        assert_eq!(j, TorusParams::new(1, 3).unwrap());
        assert!(serde_json::from_str::<TorusParams>(r#"{"p": 1, "q": 0}"#).is_err());
    }

    #[test]
    fn clock_shift_examples() {
        let r = clock_shift(TorusParams::new(0, 1).unwrap()).unwrap();
        assert_eq!(r.u.as_operator(), &Operator::identity(1));
        assert_eq!(r.v.as_operator(), &Operator::identity(1));
        assert_eq!(r.commutation_residual, 0.0);

        let r = clock_shift(TorusParams::new(1, 2).unwrap()).unwrap();
        assert_eq!(r.u.as_operator(), &Operator::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap());
        assert_eq!(r.v.as_operator(), &Operator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap());
        let uv = r.u.as_operator() * r.v.as_operator();
        let vu = r.v.as_operator() * r.u.as_operator();
        assert_eq!(uv, -&vu);

        let r = clock_shift(TorusParams::new(1, 3).unwrap()).unwrap();
        assert!(r.commutation_residual <= 1e-12);
        assert!(clock_shift_with_max(TorusParams::new(1, 9).unwrap(), 8).is_err());
    }

    #[test]
    fn commutation_residual_examples() {
        let d1 = Unitary::new(Operator::diagonal(&[c(0.0, 1.0), c(-1.0, 0.0)]).unwrap()).unwrap();
        let d2 = Unitary::new(Operator::diagonal(&[c(-1.0, 0.0), c(0.0, -1.0)]).unwrap()).unwrap();
        assert_eq!(commutation_residual(&d1, &d2, 0.0).unwrap(), 0.0);

        let r = clock_shift(TorusParams::new(1, 2).unwrap()).unwrap();
        assert!(commutation_residual(&r.u, &r.v, 0.5).unwrap() <= 1e-12);
        // oracle: ZX − XZ = [[0, 2], [−2, 0]], singular values 2 and 2
        let oracle = Operator::from_real_rows(&[&[0.0, 2.0], &[-2.0, 0.0]]).unwrap();
        let direct = &(r.u.as_operator() * r.v.as_operator()) - &(r.v.as_operator() * r.u.as_operator());
        assert_eq!(direct, oracle);
        let got = commutation_residual(&r.u, &r.v, 0.0).unwrap();
        assert!(got > 1.0);
        assert!((got - 2.0).abs() < 1e-14);
        assert!((oracle.frobenius_norm() - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn anticommuting_witness_is_exact() {
        let w = anticommuting_root_example();
        assert_eq!(w.u1.pow(2), Operator::identity(2));
        assert_eq!(w.square_residual, 0.0);
        assert_eq!(w.anticommutator_residual, 0.0);
        assert!((&(w.u1.as_operator() * w.v.as_operator()) + &(w.v.as_operator() * w.u1.as_operator())).is_zero());
        // the principal root of I₂ is I₂ itself, which commutes with v
        let p = crate::roots::nth_root_branch(&w.u, &BranchFunction::principal(2).unwrap()).unwrap();
        assert_eq!(p.commutator_norm(&w.v).unwrap(), 0.0);
    }

    #[test]
    fn theta_halving_examples() {
        let r = theta_halving_embedding(TorusParams::new(1, 3).unwrap(), 128).unwrap();
        assert_eq!(r.target_dim, 6);
        assert_eq!((r.target.p(), r.target.q()), (1, 6));
        assert!(r.image_relation_residual <= 1e-10);
        assert!(r.max_residual() <= 1e-10);

        let r = theta_halving_embedding(TorusParams::new(0, 1).unwrap(), 128).unwrap();
        assert_eq!(r.max_residual(), 0.0);

        // even numerator: θ/2 = 2/6 = 1/3 stays at dimension 3
        let r = theta_halving_embedding(TorusParams::new(2, 3).unwrap(), 128).unwrap();
        assert_eq!(r.target_dim, 3);
        assert!(r.max_residual() <= 1e-10);

        let tower = theta_halving_tower(TorusParams::new(1, 3).unwrap(), 3, 128).unwrap();
        let dims: Vec<usize> = tower.iter().map(|r| r.source_dim).collect();
        assert_eq!(dims, vec![3, 6, 12]);
        assert!(theta_halving_tower(TorusParams::new(1, 3).unwrap(), 3, 16).is_err());
    }

    #[test]
    fn covering_products() {
        let p = vec![BranchFunction::principal(2).unwrap()];
        let hat = CompactFunction::hat(0.0, 1.0, c(1.0, 0.0)).unwrap();

        // θ = 0: both generators diagonal
        let u = Unitary::new(Operator::diagonal(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]).unwrap()).unwrap();
        let v = Unitary::new(
            Operator::diagonal(&[C64::from_polar(1.0, 0.3), C64::from_polar(1.0, -1.1), C64::from_polar(1.0, 2.0)])
                .unwrap(),
        )
        .unwrap();
        let tu = build_tower(&u, 2, &p).unwrap();
        let tv = build_tower(&v, 2, &p).unwrap();
        let (a, b) = covering_generator_products(&tu, &tv, &hat, &hat, 1).unwrap();
        assert!(a.commutator_norm(&b).unwrap() <= 1e-10);
        let (z1, z2) = covering_generator_products(&tu, &tv, &CompactFunction::zero(), &hat, 1).unwrap();
        assert!(z1.is_zero() && z2.is_zero());

        // θ = 1/2: brute-force 2x2 oracle, P_Z = diag(1,0), P_X = ½[[1,1],[1,1]]
        let rep = clock_shift(TorusParams::new(1, 2).unwrap()).unwrap();
        let tu = build_tower(&rep.u, 1, &p).unwrap();
        let tv = build_tower(&rep.v, 1, &p).unwrap();
        let (a, b) = covering_generator_products(&tu, &tv, &hat, &hat, 1).unwrap();
        let oracle_a = Operator::from_real_rows(&[&[0.5, 0.5], &[0.0, 0.0]]).unwrap();
        let oracle_b = Operator::from_real_rows(&[&[0.5, 0.0], &[0.5, 0.0]]).unwrap();
        assert!(a.distance(&oracle_a).unwrap() < 1e-12);
        assert!(b.distance(&oracle_b).unwrap() < 1e-12);
        assert!(a.distance(&b).unwrap() > 0.01);

        let t3 = build_tower(&Unitary::identity(3), 1, &p).unwrap();
        assert!(covering_generator_products(&tu, &t3, &hat, &hat, 1).is_err());
    }

    #[test]
    fn clock_shift_words_span_full_matrix_algebra() {
        for q in 1..=6u64 {
            for p in 0..q as i64 {
                if gcd(p.unsigned_abs(), q) != 1 {
                    continue;
                }
                let rep = clock_shift(TorusParams::new(p, q).unwrap()).unwrap();
                let gens = [rep.u.as_operator().clone(), rep.v.as_operator().clone()];
                let s = generate_span(&gens, 2 * q as usize).unwrap();
                assert_eq!(s.span_dim(), (q * q) as usize, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn sweep_modes_agree() {
        let a = relation_sweep(10, Execution::Sequential).unwrap();
        let b = relation_sweep(10, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        // φ(1) + … + φ(10) = 32
        assert_eq!(a.len(), 32);
        assert!(a.iter().all(|r| r.relation <= 1e-10 && r.order_u <= 1e-10 && r.order_v <= 1e-10));
    }
}
