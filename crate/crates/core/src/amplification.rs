//! Finite amplification check of the branch-change isomorphism
//! `A{ξ(u)} ⊗ M_m → A{η(u)} ⊗ M_m`.
//!
//! Domain words are products of letters `a_i, a_i†, ξ(u), ξ(u)†` tensored with a
//! matrix unit of `M_m`. The map `T` substitutes `η(u)·w` for `ξ(u)`, where
//! `w = (ξ/η)(u)` is the correction unitary computed on its own from the spectrum
//! of `u`. `T` is extended linearly from a basis of domain words; the reported
//! residuals compare that extension with direct (letter-substituted) evaluation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exec;
use crate::operator::{ensure_same_dim, Operator, Unitary, ZERO};
use crate::random::rng_from_seed;
use crate::roots::{correction_unitary, nth_root_from_spectrum, BranchFunction};
use crate::span::{span_over_letters, with_adjoints, OperatorBasis, SpanOptions};
use crate::spectral::{apply_circle_function, spectral_decompose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoOptions {
    /// Sampled words per residual kind.
    pub samples: usize,
    /// Upper bound on `3 · samples`.
    pub sample_budget: usize,
    pub seed: u64,
    pub span: SpanOptions,
}

impl Default for IsoOptions {
    fn default() -> Self {
        IsoOptions { samples: 64, sample_budget: 10_000, seed: 0, span: SpanOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoReport {
    /// `max ‖T(st) − T(s)T(t)‖`.
    pub multiplicativity: f64,
    /// `max ‖T(s†) − T(s)†‖`.
    pub adjoint: f64,
    /// `max ‖T((a⊗I)s) − (a⊗I)T(s)‖`.
    pub left_module: f64,
    pub domain_span_dim: usize,
    pub image_span_dim: usize,
    /// Largest membership residual of a sampled product in the domain span.
    pub domain_closure: f64,
    /// `‖ξ(u)·η(u)† − w‖`.
    pub correction_defect: f64,
    /// `‖ξ(u) − q(η(u))‖` with the quotient `q = ξ/η` evaluated on the spectrum of
    /// `η(u)` instead of `u` (a literal reading of the composition).
    pub literal_composition_gap: f64,
    /// Membership residual of `ξ(u)^i`, `i = 1..n−1`, in the span of `A`.
    pub root_outside_base: Vec<f64>,
    /// The two branches agree on the spectrum, so `T` is the identity.
    pub identity_map: bool,
}

impl IsoReport {
    pub fn bijective(&self) -> bool {
        self.domain_span_dim == self.image_span_dim
    }
}

pub fn amplification_iso_check(
    a_generators: &[Operator],
    u: &Unitary,
    xi: &BranchFunction,
    eta: &BranchFunction,
    m: usize,
    word_cap: usize,
) -> Result<IsoReport> {
    amplification_iso_check_with(a_generators, u, xi, eta, m, word_cap, IsoOptions::default())
}

/// A sampled amplified word: letters on `C^d` and a matrix unit `E_{rs}` on `C^m`.
#[derive(Debug, Clone)]
struct Word {
    letters: Vec<usize>,
    r: usize,
    s: usize,
}

struct Letters {
    domain: Vec<Operator>,
    image: Vec<Operator>,
    dim: usize,
    m: usize,
}

impl Letters {
    fn eval(table: &[Operator], dim: usize, letters: &[usize]) -> Operator {
        letters.iter().fold(Operator::identity(dim), |acc, &l| &acc * &table[l])
    }

    fn amplify(&self, h: &Operator, w: &Word) -> Operator {
        h.kron(&Operator::matrix_unit(self.m, w.r, w.s))
    }

    fn domain(&self, w: &Word) -> Operator {
        self.amplify(&Letters::eval(&self.domain, self.dim, &w.letters), w)
    }

    fn image(&self, w: &Word) -> Operator {
        self.amplify(&Letters::eval(&self.image, self.dim, &w.letters), w)
    }
}

/// Linear extension of `T` from a basis of domain words.
struct LinearMap {
    basis: OperatorBasis,
    images: Vec<Operator>,
    identity: bool,
}

impl LinearMap {
    fn apply(&self, x: &Operator) -> Operator {
        if self.identity {
            return x.clone();
        }
        let y = self.basis.input_coordinates(x);
        let mut acc = Operator::zeros(x.dim());
        for (c, img) in y.iter().zip(&self.images) {
            if *c != ZERO {
                acc = &acc + &img.scale(*c);
            }
        }
        acc
    }
}

#[allow(clippy::too_many_arguments)]
pub fn amplification_iso_check_with(
    a_generators: &[Operator],
    u: &Unitary,
    xi: &BranchFunction,
    eta: &BranchFunction,
    m: usize,
    word_cap: usize,
    opts: IsoOptions,
) -> Result<IsoReport> {
    if xi.order() != eta.order() {
        return Err(LabError::InvalidBranch(format!(
            "branch orders differ: {} vs {}",
            xi.order(),
            eta.order()
        )));
    }
    if m < 1 || word_cap < 1 {
        return Err(LabError::InvalidArgument(format!("m = {m}, word cap = {word_cap}")));
    }
    let needed = 3 * opts.samples;
    if needed > opts.sample_budget {
        return Err(LabError::SampleBudgetExceeded { needed, budget: opts.sample_budget });
    }
    for a in a_generators {
        ensure_same_dim(a, u)?;
    }
    let dim = u.dim();
    let n = xi.order();

    let spectrum = spectral_decompose(u)?;
    let z = nth_root_from_spectrum(&spectrum, xi)?;
    let y = nth_root_from_spectrum(&spectrum, eta)?;
    let w = correction_unitary(&spectrum, xi, eta)?;
    let correction_defect = (&(z.as_operator() * y.adjoint().as_operator()) - w.as_operator()).operator_norm();
    let yw = y.as_operator() * w.as_operator();

    let y_spectrum = spectral_decompose(&y)?;
    let quotient_on_roots = apply_circle_function(&y_spectrum, |b| {
        crate::operator::root_of_unity(xi.branch_index(b) as i64 - eta.branch_index(b) as i64, n as u64)
    })?;
    let literal_composition_gap = (&(&quotient_on_roots * y.as_operator()) - z.as_operator()).operator_norm();

    let base_letters = with_adjoints(a_generators);
    let g = base_letters.len();
    let mut domain = base_letters.clone();
    domain.push(z.as_operator().clone());
    domain.push(z.adjoint().into_operator());
    let mut image = base_letters.clone();
    image.push(yw.clone());
    image.push(yw.adjoint());
    let identity = spectrum.angles().iter().all(|&a| xi.branch_index(a) == eta.branch_index(a));
    let letters = Letters { domain, image, dim, m };

    let base_span = span_over_letters(a_generators.to_vec(), base_letters.clone(), dim, word_cap, opts.span)?;
    let root_outside_base = (1..n).map(|i| base_span.basis().membership_residual(&z.pow(i))).collect();

    // domain words of length ≤ 2L so that products of sampled words stay inside
    let h_span = span_over_letters(Vec::new(), letters.domain.clone(), dim, 2 * word_cap, opts.span)?;
    let words: Vec<Word> = h_span
        .words()
        .iter()
        .flat_map(|l| {
            (0..m).flat_map(move |r| (0..m).map(move |s| Word { letters: l.clone(), r, s }))
        })
        .collect();
    let amp_dim = dim * m;
    let mut basis = OperatorBasis::new(amp_dim, opts.span.rank_tol);
    let mut images = Vec::with_capacity(words.len());
    let mut image_basis = OperatorBasis::new(amp_dim, opts.span.rank_tol);
    let evaluated = exec::map(opts.span.exec, &words, |w| (letters.domain(w), letters.image(w)));
    for (d_op, i_op) in evaluated {
        if basis.insert(&d_op) {
            image_basis.insert(&i_op);
            images.push(i_op);
        }
    }
    let t = LinearMap { basis, images, identity };

    let mut rng = rng_from_seed(opts.seed);
    let letter_count = letters.domain.len();
    let mut sample = |alphabet: usize| Word {
        letters: (0..rng.random_range(0..=word_cap)).map(|_| rng.random_range(0..alphabet)).collect(),
        r: rng.random_range(0..m),
        s: rng.random_range(0..m),
    };
    let pairs: Vec<(Word, Word)> = (0..opts.samples).map(|_| (sample(letter_count), sample(letter_count))).collect();
    let singles: Vec<Word> = (0..opts.samples).map(|_| sample(letter_count)).collect();
    let module: Vec<(Vec<usize>, Word)> = (0..opts.samples)
        .map(|_| {
            let a = sample(g.max(1));
            let a = if g == 0 { Vec::new() } else { a.letters };
            (a, sample(letter_count))
        })
        .collect();

    let ident_m = Operator::identity(m);
    let mult = exec::map(opts.span.exec, &pairs, |(s, tt)| {
        let st = &letters.domain(s) * &letters.domain(tt);
        let direct = &letters.image(s) * &letters.image(tt);
        let closure = t.basis.membership_residual(&st);
        ((&t.apply(&st) - &direct).operator_norm(), closure)
    });
    let adj = exec::map(opts.span.exec, &singles, |s| {
        let lhs = t.apply(&letters.domain(s).adjoint());
        (&lhs - &letters.image(s).adjoint()).operator_norm()
    });
    let left = exec::map(opts.span.exec, &module, |(a, s)| {
        let a_amp = Letters::eval(&letters.domain, dim, a).kron(&ident_m);
        let lhs = t.apply(&(&a_amp * &letters.domain(s)));
        (&lhs - &(&a_amp * &letters.image(s))).operator_norm()
    });

    let max = |xs: &[f64]| xs.iter().cloned().fold(0.0, f64::max);
    let (mult_res, closure): (Vec<f64>, Vec<f64>) = mult.into_iter().unzip();
    Ok(IsoReport {
        multiplicativity: max(&mult_res),
        adjoint: max(&adj),
        left_module: max(&left),
        domain_span_dim: t.basis.len(),
        image_span_dim: image_basis.len(),
        domain_closure: max(&closure),
        correction_defect,
        literal_composition_gap,
        root_outside_base,
        identity_map: identity,
    })
}
