//! Word spans of operator algebras, orthonormalized in the Hilbert–Schmidt inner
//! product.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exec::{self, Execution};
use crate::operator::{ensure_same_dim, Operator, C64, ZERO};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;
pub const DEFAULT_WORD_BUDGET: usize = 10_000;

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Incrementally built Hilbert–Schmidt orthonormal basis.
///
/// Every basis element is also tracked as a combination of the accepted inputs,
/// so span members can be expanded back over the inputs (see
/// [`OperatorBasis::input_coordinates`]).
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dim: usize,
    rank_tol: f64,
    basis: Vec<Vec<C64>>,
    // basis[i] = Σ_j coeffs[i][j] · inputs[j]
    coeffs: Vec<Vec<C64>>,
}

impl OperatorBasis {
    pub fn new(dim: usize, rank_tol: f64) -> Self {
        OperatorBasis { dim, rank_tol, basis: Vec::new(), coeffs: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Modified Gram–Schmidt with one reorthogonalization pass. Returns the
    /// coefficients `⟨q_i, x⟩` and the residual.
    fn project_out(&self, x: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let mut r = x.to_vec();
        let mut c = vec![ZERO; self.basis.len()];
        for _ in 0..2 {
            for (i, q) in self.basis.iter().enumerate() {
                let t = inner(q, &r);
                c[i] += t;
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= t * qi;
                }
            }
        }
        (c, r)
    }

    /// Inserts `x` unless its residual is below `rank_tol · max(1, ‖x‖_F)`.
    pub fn insert(&mut self, x: &Operator) -> bool {
        assert_eq!(x.dim(), self.dim, "operator dimension mismatch");
        let xs = x.matrix().as_slice();
        let scale = norm(xs).max(1.0);
        let (c, r) = self.project_out(xs);
        let rn = norm(&r);
        if !(rn >= self.rank_tol * scale) {
            return false;
        }
        let inv = 1.0 / rn;
        let q: Vec<C64> = r.iter().map(|z| z * inv).collect();
        // q = (x − Σ c_i b_i)/rn with b_i = Σ_j coeffs[i][j] x_j
        let k = self.basis.len();
        let mut row = vec![ZERO; k + 1];
        row[k] = C64::new(inv, 0.0);
        for (ci, coeffs) in c.iter().zip(&self.coeffs) {
            for (j, a) in coeffs.iter().enumerate() {
                row[j] -= ci * a * inv;
            }
        }
        self.basis.push(q);
        self.coeffs.push(row);
        true
    }

    /// Hilbert–Schmidt coordinates `⟨q_i, x⟩`.
    pub fn coordinates(&self, x: &Operator) -> Vec<C64> {
        let xs = x.matrix().as_slice();
        self.basis.iter().map(|q| inner(q, xs)).collect()
    }

    /// Coefficients `y` with `Proj(x) = Σ_j y_j · input_j`.
    pub fn input_coordinates(&self, x: &Operator) -> Vec<C64> {
        let c = self.project_out(x.matrix().as_slice()).0;
        let mut y = vec![ZERO; self.basis.len()];
        for (ci, coeffs) in c.iter().zip(&self.coeffs) {
            for (j, a) in coeffs.iter().enumerate() {
                y[j] += ci * a;
            }
        }
        y
    }

    /// `‖x − Proj(x)‖_F / max(1, ‖x‖_F)`.
    pub fn membership_residual(&self, x: &Operator) -> f64 {
        let xs = x.matrix().as_slice();
        let (_, r) = self.project_out(xs);
        norm(&r) / norm(xs).max(1.0)
    }

    /// `max |⟨q_i, q_j⟩ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(a, b) - target).norm());
            }
        }
        worst
    }

    pub fn element(&self, i: usize) -> Operator {
        let m = nalgebra::DMatrix::from_column_slice(self.dim, self.dim, &self.basis[i]);
        Operator::from_matrix_unchecked(m)
    }

    pub fn elements(&self) -> Vec<Operator> {
        (0..self.len()).map(|i| self.element(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanOptions {
    pub rank_tol: f64,
    /// Maximum number of candidate words evaluated.
    pub word_budget: usize,
    pub exec: Execution,
}

impl Default for SpanOptions {
    fn default() -> Self {
        SpanOptions {
            rank_tol: DEFAULT_RANK_TOL,
            word_budget: DEFAULT_WORD_BUDGET,
            exec: Execution::default(),
        }
    }
}

/// The span of all words of length `≤ word_cap` in the generators and their
/// adjoints (the empty word being the identity).
#[derive(Debug, Clone)]
pub struct GeneratedAlgebraSpan {
    generators: Vec<Operator>,
    word_cap: usize,
    basis: OperatorBasis,
    words: Vec<Vec<usize>>,
    words_enumerated: usize,
}

/// Word span with default options.
pub fn generate_span(generators: &[Operator], word_cap: usize) -> Result<GeneratedAlgebraSpan> {
    generate_span_with(generators, word_cap, SpanOptions::default())
}

/// Breadth-first word enumeration. Letters are the generators in order followed by
/// their adjoints. A layer only extends words accepted into the basis at the previous
/// layer: a rejected word is a combination of accepted shorter words, so its
/// extensions add nothing new.
pub fn generate_span_with(
    generators: &[Operator],
    word_cap: usize,
    opts: SpanOptions,
) -> Result<GeneratedAlgebraSpan> {
    let first = generators
        .first()
        .ok_or_else(|| LabError::InvalidArgument("generate_span needs at least one generator".into()))?;
    for g in generators {
        ensure_same_dim(first, g)?;
    }
    span_over_letters(generators.to_vec(), with_adjoints(generators), first.dim(), word_cap, opts)
}

pub(crate) fn with_adjoints(generators: &[Operator]) -> Vec<Operator> {
    generators.iter().cloned().chain(generators.iter().map(Operator::adjoint)).collect()
}

/// Span over an explicit alphabet; `dim` is needed when the alphabet is empty.
pub(crate) fn span_over_letters(
    generators: Vec<Operator>,
    letters: Vec<Operator>,
    dim: usize,
    word_cap: usize,
    opts: SpanOptions,
) -> Result<GeneratedAlgebraSpan> {
    if word_cap < 1 {
        return Err(LabError::InvalidArgument("word cap must be >= 1".into()));
    }
    let full = dim * dim;
    let mut basis = OperatorBasis::new(dim, opts.rank_tol);
    let mut words: Vec<Vec<usize>> = Vec::new();
    let identity = Operator::identity(dim);
    basis.insert(&identity);
    words.push(Vec::new());
    let mut frontier: Vec<(Vec<usize>, Operator)> = vec![(Vec::new(), identity)];
    let mut enumerated = 1usize;

    for _ in 1..=word_cap {
        if frontier.is_empty() || basis.len() == full || letters.is_empty() {
            break;
        }
        let candidates: Vec<(usize, usize)> = (0..frontier.len())
            .flat_map(|w| (0..letters.len()).map(move |l| (w, l)))
            .collect();
        enumerated += candidates.len();
        if enumerated > opts.word_budget {
            return Err(LabError::WordBudgetExceeded { needed: enumerated, budget: opts.word_budget });
        }
        let products = exec::map(opts.exec, &candidates, |&(w, l)| &frontier[w].1 * &letters[l]);
        let mut next = Vec::new();
        for ((w, l), op) in candidates.into_iter().zip(products) {
            if basis.len() == full {
                break;
            }
            if basis.insert(&op) {
                let mut word = frontier[w].0.clone();
                word.push(l);
                words.push(word.clone());
                next.push((word, op));
            }
        }
        frontier = next;
    }

    Ok(GeneratedAlgebraSpan { generators, word_cap, basis, words, words_enumerated: enumerated })
}

impl GeneratedAlgebraSpan {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn span_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn word_cap(&self) -> usize {
        self.word_cap
    }

    pub fn generators(&self) -> &[Operator] {
        &self.generators
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    /// Letter sequences of the accepted words, aligned with the basis.
    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    pub fn words_enumerated(&self) -> usize {
        self.words_enumerated
    }

    pub fn membership_residual(&self, x: &Operator) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(LabError::DimensionMismatch { left: self.dim(), right: x.dim() });
        }
        Ok(self.basis.membership_residual(x))
    }

    pub fn report(&self) -> SpanReport {
        let mut summary = BTreeMap::new();
        summary.insert("orthonormality_defect".to_string(), self.basis.orthonormality_defect());
        let worst = self
            .generators
            .iter()
            .map(|g| self.basis.membership_residual(g))
            .fold(0.0, f64::max);
        summary.insert("max_generator_residual".to_string(), worst);
        summary.insert("words_enumerated".to_string(), self.words_enumerated as f64);
        SpanReport { span_dim: self.span_dim(), word_cap: self.word_cap, residual_summary: summary }
    }
}

/// Serialized form: `{"span_dim", "word_cap", "residual_summary"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanReport {
    pub span_dim: usize,
    pub word_cap: usize,
    pub residual_summary: BTreeMap<String, f64>,
}

/// `membership_residual(span, x)` as a free function.
pub fn membership_residual(span: &GeneratedAlgebraSpan, x: &Operator) -> Result<f64> {
    span.membership_residual(x)
}
