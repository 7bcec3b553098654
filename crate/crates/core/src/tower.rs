//! Dyadic square-root towers over a unitary and the embedding of compactly
//! supported functions on the line.
//!
//! A function `f` supported in `[−2ⁿ, 2ⁿ]` is sent to `g(u_ℓ)` with
//! `g(e^{iα}) = f(2^ℓ · α/π)` for any level `ℓ ≥ n`. Along a principal tower the
//! level-`ℓ` eigenangles are exactly `α/2^ℓ`, so the image does not depend on `ℓ`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exec::{self, Execution};
use crate::operator::{ensure_same_dim, Operator, Unitary, C64, ZERO};
use crate::roots::{BranchFunction, DEFAULT_ROOT_TOL};
use crate::spectral::{apply_circle_function, phase, spectral_decompose, SpectralDecomposition};
use crate::span::GeneratedAlgebraSpan;

pub const MAX_TOWER_DEPTH: usize = 48;

#[derive(Serialize, Deserialize)]
struct RawCompact {
    support_exponent: u32,
    breakpoints: Vec<f64>,
    values: Vec<[f64; 2]>,
}

/// Continuous piecewise-linear function with support in `[−2ⁿ, 2ⁿ]`.
///
/// Vanishes outside `[breakpoints[0], breakpoints[last]]`; the end values must be 0.
/// No breakpoints means the zero function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCompact", into = "RawCompact")]
pub struct CompactFunction {
    support_exponent: u32,
    breakpoints: Vec<f64>,
    values: Vec<C64>,
}

impl TryFrom<RawCompact> for CompactFunction {
    type Error = LabError;
    fn try_from(raw: RawCompact) -> Result<Self> {
        let values = raw.values.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        CompactFunction::new(raw.support_exponent, raw.breakpoints, values)
    }
}

impl From<CompactFunction> for RawCompact {
    fn from(f: CompactFunction) -> Self {
        RawCompact {
            support_exponent: f.support_exponent,
            breakpoints: f.breakpoints,
            values: f.values.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl CompactFunction {
    pub fn new(support_exponent: u32, breakpoints: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        let bad = |m: String| Err(LabError::InvalidFunction(m));
        if support_exponent > MAX_TOWER_DEPTH as u32 {
            return bad(format!("support exponent {support_exponent} too large"));
        }
        if breakpoints.len() != values.len() {
            return bad(format!("{} breakpoints but {} values", breakpoints.len(), values.len()));
        }
        if breakpoints.iter().any(|x| !x.is_finite())
            || values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return bad("non-finite breakpoint or value".into());
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("breakpoints must be strictly increasing".into());
        }
        if let (Some(&lo), Some(&hi)) = (breakpoints.first(), breakpoints.last()) {
            let r = exp2(support_exponent);
            if lo < -r || hi > r {
                return bad(format!("breakpoints leave [-{r}, {r}]"));
            }
            if values[0] != ZERO || values[values.len() - 1] != ZERO {
                return bad("end values must be exactly 0".into());
            }
        }
        Ok(CompactFunction { support_exponent, breakpoints, values })
    }

    pub fn zero() -> Self {
        CompactFunction { support_exponent: 0, breakpoints: Vec::new(), values: Vec::new() }
    }

    /// Hat of the given height at `center`, vanishing outside `center ± half_width`,
    /// with the smallest support exponent that contains it.
    pub fn hat(center: f64, half_width: f64, height: C64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(LabError::InvalidFunction(format!("half width {half_width}")));
        }
        let reach = (center - half_width).abs().max((center + half_width).abs());
        let n = smallest_exponent(reach)?;
        CompactFunction::new(
            n,
            vec![center - half_width, center, center + half_width],
            vec![ZERO, height, ZERO],
        )
    }

    pub fn support_exponent(&self) -> u32 {
        self.support_exponent
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> C64 {
        let b = &self.breakpoints;
        if b.is_empty() || !(x > b[0] && x < b[b.len() - 1]) {
            return ZERO;
        }
        let hi = b.partition_point(|&t| t <= x);
        let lo = hi - 1;
        if b[lo] == x {
            return self.values[lo];
        }
        let t = (x - b[lo]) / (b[hi] - b[lo]);
        self.values[lo] * (1.0 - t) + self.values[hi] * t
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `a·self + b·other`, exact on the merged breakpoints.
    pub fn linear_combination(&self, a: C64, other: &CompactFunction, b: C64) -> CompactFunction {
        let xs = merge(&self.breakpoints, &other.breakpoints);
        let ys = xs.iter().map(|&x| self.eval(x) * a + other.eval(x) * b).collect();
        CompactFunction {
            support_exponent: self.support_exponent.max(other.support_exponent),
            breakpoints: xs,
            values: ys,
        }
    }

    /// Pointwise product re-sampled on the merged breakpoints plus midpoints. Exact at
    /// those nodes; in between the true product is quadratic.
    pub fn product(&self, other: &CompactFunction) -> CompactFunction {
        let merged = merge(&self.breakpoints, &other.breakpoints);
        let mut xs = Vec::with_capacity(2 * merged.len());
        for (i, &x) in merged.iter().enumerate() {
            xs.push(x);
            if let Some(&next) = merged.get(i + 1) {
                xs.push(0.5 * (x + next));
            }
        }
        let ys: Vec<C64> = xs.iter().map(|&x| self.eval(x) * other.eval(x)).collect();
        CompactFunction {
            support_exponent: self.support_exponent.max(other.support_exponent),
            breakpoints: xs,
            values: ys,
        }
    }
}

fn merge(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut xs: Vec<f64> = a.iter().chain(b).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn exp2(n: u32) -> f64 {
    (n as i32 as f64).exp2()
}

fn smallest_exponent(reach: f64) -> Result<u32> {
    (0..=MAX_TOWER_DEPTH as u32)
        .find(|&n| reach <= exp2(n))
        .ok_or_else(|| LabError::InvalidFunction(format!("support reach {reach} too large")))
}

/// `u_0 = u` and `u_k² = u_{k−1}` for `k = 1..=depth`.
///
/// All levels share the eigenbasis of the base; each level's spectrum is the branch
/// image of the previous one.
#[derive(Debug, Clone)]
pub struct RootTower {
    levels: Vec<Unitary>,
    spectra: Vec<SpectralDecomposition>,
    branches: Vec<BranchFunction>,
    residuals: Vec<f64>,
}

/// Builds a tower of square roots. `branches` holds one branch per level or a single
/// branch reused at every level; all must have order 2.
pub fn build_tower(u: &Unitary, depth: usize, branches: &[BranchFunction]) -> Result<RootTower> {
    if !(1..=MAX_TOWER_DEPTH).contains(&depth) {
        return Err(LabError::DepthOutOfRange(depth));
    }
    let branches: Vec<BranchFunction> = match branches.len() {
        1 => vec![branches[0].clone(); depth],
        n if n == depth => branches.to_vec(),
        n => {
            return Err(LabError::InvalidArgument(format!(
                "{n} branches for a tower of depth {depth}"
            )))
        }
    };
    if let Some(b) = branches.iter().find(|b| b.order() != 2) {
        return Err(LabError::InvalidBranch(format!("tower branches need order 2, got {}", b.order())));
    }
    let base = spectral_decompose(u)?;
    let mut levels = vec![u.clone()];
    let mut spectra = vec![base];
    let mut residuals = Vec::with_capacity(depth);
    for (k, b) in branches.iter().enumerate() {
        let next = b.apply_to_spectrum(&spectra[k]);
        let op = apply_circle_function(&next, phase)?;
        let level = Unitary::new(op)?;
        let r = level.pow(2).distance(&levels[k])?;
        if !(r <= DEFAULT_ROOT_TOL) {
            return Err(LabError::ToleranceExceeded {
                what: format!("tower level {} squaring residual", k + 1),
                value: r,
                tol: DEFAULT_ROOT_TOL,
            });
        }
        residuals.push(r);
        levels.push(level);
        spectra.push(next);
    }
    Ok(RootTower { levels, spectra, branches, residuals })
}

impl RootTower {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim()
    }

    pub fn base(&self) -> &Unitary {
        &self.levels[0]
    }

    /// `u_level`; level 0 is the base.
    pub fn level(&self, level: usize) -> Result<&Unitary> {
        self.levels.get(level).ok_or(LabError::LevelOutOfRange { level, depth: self.depth() })
    }

    pub fn spectrum(&self, level: usize) -> Result<&SpectralDecomposition> {
        self.spectra.get(level).ok_or(LabError::LevelOutOfRange { level, depth: self.depth() })
    }

    pub fn branches(&self) -> &[BranchFunction] {
        &self.branches
    }

    /// `‖u_k² − u_{k−1}‖` for `k = 1..=depth`.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

/// `i(f)` computed at tower level `level`.
pub fn embed_compact_function(t: &RootTower, f: &CompactFunction, level: usize) -> Result<Operator> {
    embed_with(t, level, f.support_exponent(), |x| f.eval(x))
}

/// Embeds an arbitrary function of the line with the stated support exponent.
pub fn embed_with<F>(t: &RootTower, level: usize, support_exponent: u32, f: F) -> Result<Operator>
where
    F: Fn(f64) -> C64,
{
    let spectrum = t.spectrum(level)?;
    if support_exponent as usize > level {
        return Err(LabError::SupportExceedsDepth { support: support_exponent, level });
    }
    let scale = exp2(level as u32) / std::f64::consts::PI;
    apply_circle_function(spectrum, |a| f(scale * a))
}

/// `‖i_a(f) − i_b(f)‖` for two tower levels.
pub fn level_independence_residual(
    t: &RootTower,
    f: &CompactFunction,
    level_a: usize,
    level_b: usize,
) -> Result<f64> {
    let a = embed_compact_function(t, f, level_a)?;
    let b = embed_compact_function(t, f, level_b)?;
    a.distance(&b)
}

/// One `level_independence_residual` evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelPairResidual {
    pub function: usize,
    pub level_a: usize,
    pub level_b: usize,
    pub residual: f64,
}

/// Every valid level pair `(a, b)`, `support ≤ a < b ≤ depth`, for every function.
pub fn level_independence_sweep(
    t: &RootTower,
    functions: &[CompactFunction],
    exec: Execution,
) -> Result<Vec<LevelPairResidual>> {
    let mut jobs = Vec::new();
    for (i, f) in functions.iter().enumerate() {
        let lo = f.support_exponent() as usize;
        if lo > t.depth() {
            return Err(LabError::SupportExceedsDepth { support: f.support_exponent(), level: t.depth() });
        }
        for a in lo..=t.depth() {
            for b in a + 1..=t.depth() {
                jobs.push((i, a, b));
            }
        }
    }
    // one embedding per (function, level), then pairwise distances
    let mut cells = Vec::new();
    for (i, f) in functions.iter().enumerate() {
        for level in f.support_exponent() as usize..=t.depth() {
            cells.push((i, level));
        }
    }
    let embedded = exec::try_map(exec, &cells, |&(i, level)| embed_compact_function(t, &functions[i], level))?;
    let lookup = |i: usize, level: usize| -> &Operator {
        let idx = cells.iter().position(|&c| c == (i, level)).expect("cell computed");
        &embedded[idx]
    };
    exec::try_map(exec, &jobs, |&(i, a, b)| {
        Ok(LevelPairResidual { function: i, level_a: a, level_b: b, residual: lookup(i, a).distance(lookup(i, b))? })
    })
}

/// Membership of `b·c` and `c·b` in the covering span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipEntry {
    pub base: usize,
    pub cover: usize,
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub entries: Vec<MembershipEntry>,
    pub max_residual: f64,
}

/// Checks that multiplying covering operators by base-algebra words on either side
/// stays inside `span`.
pub fn multiplier_membership_check(
    base_words: &[Operator],
    cover_ops: &[Operator],
    span: &GeneratedAlgebraSpan,
    exec: Execution,
) -> Result<MembershipReport> {
    let dim = span.dim();
    for op in base_words.iter().chain(cover_ops) {
        ensure_same_dim(op, &Operator::zeros(dim))?;
    }
    let pairs: Vec<(usize, usize)> = (0..base_words.len())
        .flat_map(|b| (0..cover_ops.len()).map(move |c| (b, c)))
        .collect();
    let entries = exec::try_map(exec, &pairs, |&(b, c)| {
        let (x, y) = (&base_words[b], &cover_ops[c]);
        Ok(MembershipEntry {
            base: b,
            cover: c,
            left: span.membership_residual(&(x * y))?,
            right: span.membership_residual(&(y * x))?,
        })
    })?;
    let max_residual = entries.iter().map(|e| e.left.max(e.right)).fold(0.0, f64::max);
    Ok(MembershipReport { entries, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::root_of_unity;
    use crate::span::generate_span;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn clock(q: u64) -> Unitary {
        let d: Vec<C64> = (0..q as i64).map(|j| root_of_unity(j, q)).collect();
        Unitary::new(Operator::diagonal(&d).unwrap()).unwrap()
    }

    fn principal() -> Vec<BranchFunction> {
        vec![BranchFunction::principal(2).unwrap()]
    }

    fn unit_hat() -> CompactFunction {
        CompactFunction::hat(0.0, 1.0, c(1.0, 0.0)).unwrap()
    }

    #[test]
    fn compact_function_validation_and_eval() {
        let f = unit_hat();
        assert_eq!(f.support_exponent(), 0);
        assert_eq!(f.eval(0.0), c(1.0, 0.0));
        assert_eq!(f.eval(0.5), c(0.5, 0.0));
        assert_eq!(f.eval(1.0), ZERO);
        assert_eq!(f.eval(-7.0), ZERO);
        assert!(CompactFunction::new(0, vec![-2.0, 0.0, 1.0], vec![ZERO, ZERO, ZERO]).is_err());
        assert!(CompactFunction::new(1, vec![-1.0, 0.0], vec![ZERO, c(1.0, 0.0)]).is_err());
        assert!(CompactFunction::new(1, vec![0.0, 0.0], vec![ZERO, ZERO]).is_err());
        assert_eq!(CompactFunction::hat(1.0, 1.0, c(1.0, 0.0)).unwrap().support_exponent(), 1);
        assert_eq!(CompactFunction::hat(0.0, 3.0, c(1.0, 0.0)).unwrap().support_exponent(), 2);
    }

    #[test]
    fn compact_function_json_shape() {
        let f: CompactFunction = serde_json::from_str(
            r#"{"support_exponent": 0, "breakpoints": [-1, 0, 1], "values": [[0,0],[1,0],[0,0]]}"#,
        )
        .unwrap();
        assert_eq!(f, unit_hat());
        let back: CompactFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn tower_examples() {
        let one = Unitary::identity(1);
        let t = build_tower(&one, 3, &principal()).unwrap();
        for k in 0..=3 {
            assert_eq!(t.level(k).unwrap().as_operator(), &Operator::identity(1));
        }

        let minus = Unitary::new(Operator::diagonal(&[c(-1.0, 0.0)]).unwrap()).unwrap();
        let t = build_tower(&minus, 2, &principal()).unwrap();
        assert_eq!(t.level(1).unwrap().entry(0, 0), c(0.0, 1.0));
        let z = t.level(2).unwrap().entry(0, 0);
        assert_abs_diff_eq!(z.arg(), PI / 4.0, epsilon = 1e-15);

        let t = build_tower(&clock(3), 1, &principal()).unwrap();
        let expected = Operator::diagonal(&[
            c(1.0, 0.0),
            C64::from_polar(1.0, PI / 3.0),
            C64::from_polar(1.0, -PI / 3.0),
        ])
        .unwrap();
        assert!(t.level(1).unwrap().distance(&expected).unwrap() < 1e-15);
    }

    #[test]
    fn tower_errors() {
        let u = clock(3);
        assert_eq!(build_tower(&u, 0, &principal()).unwrap_err(), LabError::DepthOutOfRange(0));
        assert_eq!(build_tower(&u, 49, &principal()).unwrap_err(), LabError::DepthOutOfRange(49));
        let cube = vec![BranchFunction::principal(3).unwrap()];
        assert!(matches!(build_tower(&u, 2, &cube), Err(LabError::InvalidBranch(_))));
        let two = vec![BranchFunction::principal(2).unwrap(); 2];
        assert!(build_tower(&u, 3, &two).is_err());
    }

    #[test]
    fn embedding_examples() {
        let u = Unitary::new(Operator::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap()).unwrap();
        let t = build_tower(&u, 1, &principal()).unwrap();
        let f = unit_hat();
        let e0 = embed_compact_function(&t, &f, 0).unwrap();
        assert_eq!(e0, Operator::diagonal(&[c(1.0, 0.0), ZERO]).unwrap());
        let e1 = embed_compact_function(&t, &f, 1).unwrap();
        assert_eq!(e1, e0);
        assert!(embed_compact_function(&t, &CompactFunction::zero(), 1).unwrap().is_zero());

        let wide = CompactFunction::hat(0.0, 2.0, c(1.0, 0.0)).unwrap();
        assert_eq!(
            embed_compact_function(&t, &wide, 0).unwrap_err(),
            LabError::SupportExceedsDepth { support: 1, level: 0 }
        );
        assert!(matches!(
            embed_compact_function(&t, &f, 2),
            Err(LabError::LevelOutOfRange { level: 2, depth: 1 })
        ));
    }

    #[test]
    fn principal_levels_agree_flipped_levels_do_not() {
        let u = clock(8);
        let f = unit_hat();
        let t = build_tower(&u, 3, &principal()).unwrap();
        assert!(level_independence_residual(&t, &f, 0, 3).unwrap() <= 1e-10);
        assert_eq!(level_independence_residual(&t, &CompactFunction::zero(), 0, 2).unwrap(), 0.0);

        // flip level 1 on an arc holding the eigenangle π/4, which f sees as f(1/4)
        let flip = BranchFunction::flipped(2, 0.5, 1.0, 1).unwrap();
        let p = BranchFunction::principal(2).unwrap();
        let t = build_tower(&u, 3, &[flip, p.clone(), p]).unwrap();
        let r = level_independence_residual(&t, &f, 0, 3).unwrap();
        // (π/4 + 2π)/2 = 9π/8 ↦ −7π/8 lands outside the support: 0.75 is lost
        assert_abs_diff_eq!(r, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn sweep_covers_all_pairs() {
        let t = build_tower(&clock(4), 3, &principal()).unwrap();
        let fs = [unit_hat(), CompactFunction::hat(0.5, 1.5, c(0.0, 2.0)).unwrap()];
        let r = level_independence_sweep(&t, &fs, Execution::default()).unwrap();
        // f0: levels 0..=3 → 6 pairs; f1 (support 1): levels 1..=3 → 3 pairs
        assert_eq!(r.len(), 9);
        assert!(r.iter().all(|p| p.residual < 1e-12));
    }

    #[test]
    fn multiplier_examples() {
        let u = clock(4);
        let t = build_tower(&u, 2, &principal()).unwrap();
        let hats: Vec<Operator> = [-0.5, 0.0, 0.5]
            .iter()
            .map(|&c0| embed_compact_function(&t, &CompactFunction::hat(c0, 0.5, c(1.0, 0.0)).unwrap(), 1).unwrap())
            .collect();
        let mut gens = hats.clone();
        gens.push(u.as_operator().clone());
        let span = generate_span(&gens, 2).unwrap();

        let ident = multiplier_membership_check(&[Operator::identity(4)], &hats, &span, Execution::default()).unwrap();
        assert!(ident.max_residual <= 1e-9);
        assert_eq!(ident.entries.len(), 3);
        let base = multiplier_membership_check(&[u.as_operator().clone()], &hats, &span, Execution::default()).unwrap();
        assert!(base.max_residual <= 1e-8);

        let mut shift = Operator::zeros(4);
        for j in 0..4 {
            shift = &shift + &Operator::matrix_unit(4, (j + 1) % 4, j);
        }
        let commutative = generate_span(&[u.as_operator().clone()], 4).unwrap();
        let neg = multiplier_membership_check(&[shift], &hats, &commutative, Execution::default()).unwrap();
        assert!(neg.max_residual > 0.01);
        assert!(multiplier_membership_check(&[Operator::identity(3)], &hats, &span, Execution::default()).is_err());
    }
}
