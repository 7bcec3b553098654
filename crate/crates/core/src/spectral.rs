//! Spectral decomposition of unitaries and functional calculus on the circle.
//!
//! Eigenvectors come from a Cayley transform: the unitary is rotated so that `−1`
//! sits in the widest spectral gap, mapped to the Hermitian `i(I−u)(I+u)^{-1}`
//! (eigenvalues `tan(α/2)`, a monotone image of the angles) and diagonalized there.
//! Eigenangles are read back from Rayleigh quotients of the original unitary.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};

use crate::error::{LabError, Result};
use crate::operator::{Operator, Unitary, C64, ONE, ZERO};

pub const DEFAULT_CLUSTER_GAP: f64 = 1e-8;
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;

/// Maps any real angle into `(−π, π]`.
pub fn normalize_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// `e^{iθ}`, exact when `θ` is exactly a multiple of `π/2` in `[−π, π]`.
pub fn phase(theta: f64) -> C64 {
    if theta == 0.0 {
        ONE
    } else if theta == PI / 2.0 {
        C64::new(0.0, 1.0)
    } else if theta == -PI / 2.0 {
        C64::new(0.0, -1.0)
    } else if theta == PI || theta == -PI {
        C64::new(-1.0, 0.0)
    } else {
        C64::from_polar(1.0, theta)
    }
}

/// Distance on the circle between two angles.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Angles closer than this (circularly) share an eigenspace.
    pub cluster_gap: f64,
    /// Bound on reconstruction and orthonormality defects, on top of the cluster spread.
    pub tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { cluster_gap: DEFAULT_CLUSTER_GAP, tol: DEFAULT_SPECTRAL_TOL }
    }
}

/// `u = V · diag(e^{iα_j}) · V†` with ascending angles in `(−π, π]`.
///
/// Members of a degeneracy cluster share one angle (the circular mean of the
/// measured ones); their eigenvectors are the standard basis vectors projected onto
/// the cluster eigenspace in index order, so the basis is reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    angles: Vec<f64>,
    vectors: DMatrix<C64>,
    clusters: Vec<Vec<usize>>,
    reconstruction_error: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Eigenvectors as columns.
    pub fn vectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    /// `‖V diag(e^{iα}) V† − u‖` measured when the decomposition was built.
    pub fn reconstruction_error(&self) -> f64 {
        self.reconstruction_error
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        self.angles.iter().map(|&a| phase(a)).collect()
    }

    pub fn reconstruct(&self) -> Operator {
        self.synthesize(&self.eigenvalues())
    }

    /// `‖V†V − I‖`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        Operator::from_matrix_unchecked(g - DMatrix::identity(self.dim(), self.dim()))
            .operator_norm()
    }

    /// Orthogonal projection onto the eigenspace of cluster `c`.
    pub fn cluster_projector(&self, c: usize) -> Operator {
        let d = self.dim();
        let mut p = DMatrix::<C64>::zeros(d, d);
        for &j in &self.clusters[c] {
            let v = self.vectors.column(j);
            p += v * v.adjoint();
        }
        Operator::from_matrix_unchecked(p)
    }

    pub fn cluster_projectors(&self) -> Vec<Operator> {
        (0..self.clusters.len()).map(|c| self.cluster_projector(c)).collect()
    }

    /// `V · diag(values) · V†`.
    pub(crate) fn synthesize(&self, values: &[C64]) -> Operator {
        let mut scaled = self.vectors.clone();
        for (j, &z) in values.iter().enumerate() {
            scaled.column_mut(j).apply(|x| *x *= z);
        }
        Operator::from_matrix_unchecked(scaled * self.vectors.adjoint())
    }

    /// Same eigenbasis, angles replaced by `f(α)` (renormalized), re-sorted
    /// ascending. `f` must not merge distinct clusters.
    pub(crate) fn map_angles(&self, f: impl Fn(f64) -> f64) -> SpectralDecomposition {
        let mapped: Vec<f64> = self.angles.iter().map(|&a| normalize_angle(f(a))).collect();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| mapped[a].total_cmp(&mapped[b]).then(a.cmp(&b)));
        let mut position = vec![0; self.dim()];
        for (new, &old) in order.iter().enumerate() {
            position[old] = new;
        }
        let angles = order.iter().map(|&j| mapped[j]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.vectors[(i, order[j])]);
        let mut clusters: Vec<Vec<usize>> = self
            .clusters
            .iter()
            .map(|c| {
                let mut c: Vec<usize> = c.iter().map(|&j| position[j]).collect();
                c.sort_unstable();
                c
            })
            .collect();
        clusters.sort_by_key(|c| c[0]);
        SpectralDecomposition {
            angles,
            vectors,
            clusters,
            reconstruction_error: self.reconstruction_error,
        }
    }
}

/// Spectral decomposition with default options (`cluster_gap = 1e-8`).
pub fn spectral_decompose(u: &Unitary) -> Result<SpectralDecomposition> {
    spectral_decompose_with(u, SpectralOptions::default())
}

pub fn spectral_decompose_with(u: &Unitary, opts: SpectralOptions) -> Result<SpectralDecomposition> {
    if !(opts.cluster_gap >= 0.0) {
        return Err(LabError::InvalidArgument(format!("cluster_gap {}", opts.cluster_gap)));
    }
    let d = u.dim();
    let um = u.matrix();
    let rotation = C64::from_polar(1.0, PI - widest_gap_midpoint(um)?);
    let rotated = um * rotation;

    // H = i (I + u')^{-1} (I − u')
    let id = DMatrix::<C64>::identity(d, d);
    let lu = (&id + &rotated).lu();
    let solved = lu
        .solve(&(&id - &rotated))
        .ok_or_else(|| LabError::Spectral("Cayley transform is singular".into()))?;
    let h = solved * C64::new(0.0, 1.0);
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let q = h
        .try_symmetric_eigen(f64::EPSILON, eigen_sweeps(d))
        .ok_or_else(|| LabError::Spectral("eigensolver did not converge".into()))?
        .eigenvectors;

    let raw: Vec<f64> = (0..d).map(|j| rayleigh_angle(um, &q.column(j).clone_owned())).collect();
    let clusters = cluster_angles(&raw, opts.cluster_gap);

    let mut vectors = DMatrix::<C64>::zeros(d, d);
    let mut angles = Vec::with_capacity(d);
    let mut out_clusters = Vec::with_capacity(clusters.len());
    let mut spread: f64 = 0.0;
    let mut next = 0;
    for members in &clusters {
        let basis = DMatrix::from_fn(d, members.len(), |i, k| q[(i, members[k])]);
        let rebased = standard_rebasis(&basis);
        let mean: C64 = members.iter().map(|&j| C64::from_polar(1.0, raw[j])).sum();
        let angle = normalize_angle(mean.arg());
        for &j in members {
            spread = spread.max(circular_distance(raw[j], angle));
        }
        let mut idx = Vec::with_capacity(members.len());
        for k in 0..members.len() {
            vectors.set_column(next, &rebased.column(k));
            angles.push(angle);
            idx.push(next);
            next += 1;
        }
        out_clusters.push(idx);
    }

    let mut sd = SpectralDecomposition { angles, vectors, clusters: out_clusters, reconstruction_error: 0.0 };
    let err = (&sd.reconstruct() - u.as_operator()).operator_norm();
    sd.reconstruction_error = err;
    let ortho = sd.orthonormality_defect();
    let bound = opts.tol + 2.0 * spread;
    if !(err <= bound) || !(ortho <= opts.tol) {
        return Err(LabError::Spectral(format!(
            "reconstruction error {err:e}, orthonormality defect {ortho:e} (bound {bound:e})"
        )));
    }
    Ok(sd)
}

/// Applies `g(α)` to every eigenangle: `V · diag(g(α_j)) · V†`.
///
/// A function taking the same value `c` on the whole spectrum yields exactly `c·I`.
pub fn apply_circle_function<G>(d: &SpectralDecomposition, g: G) -> Result<Operator>
where
    G: Fn(f64) -> C64,
{
    let values = eval_on_spectrum(d, g)?;
    if values.iter().all(|&z| z == values[0]) {
        return Ok(Operator::scalar(d.dim(), values[0]));
    }
    Ok(d.synthesize(&values))
}

pub(crate) fn eval_on_spectrum<G>(d: &SpectralDecomposition, g: G) -> Result<Vec<C64>>
where
    G: Fn(f64) -> C64,
{
    d.angles
        .iter()
        .map(|&a| {
            let z = g(a);
            if z.re.is_finite() && z.im.is_finite() {
                Ok(z)
            } else {
                Err(LabError::Evaluation { angle: a })
            }
        })
        .collect()
}

/// Iteration cap for the Hermitian eigensolver (nalgebra's default is unbounded).
fn eigen_sweeps(d: usize) -> usize {
    100 * d.max(10)
}

/// Midpoint of the widest circular gap among the candidate angles `±acos(λ)`,
/// `λ` ranging over the eigenvalues of `(u + u†)/2`.
fn widest_gap_midpoint(u: &DMatrix<C64>) -> Result<f64> {
    let herm = (u + u.adjoint()) * C64::new(0.5, 0.0);
    let cosines = herm
        .try_symmetric_eigen(f64::EPSILON, eigen_sweeps(u.nrows()))
        .ok_or_else(|| LabError::Spectral("eigensolver did not converge".into()))?
        .eigenvalues;
    let mut cand: Vec<f64> = cosines
        .iter()
        .flat_map(|&c| {
            let a = c.clamp(-1.0, 1.0).acos();
            [a, -a]
        })
        .collect();
    cand.sort_by(f64::total_cmp);
    let mut best = (cand[0] + TAU - cand[cand.len() - 1], cand[cand.len() - 1]);
    for w in cand.windows(2) {
        let gap = w[1] - w[0];
        if gap > best.0 {
            best = (gap, w[0]);
        }
    }
    Ok(normalize_angle(best.1 + best.0 / 2.0))
}

fn rayleigh_angle(u: &DMatrix<C64>, v: &DVector<C64>) -> f64 {
    let uv = u * v;
    normalize_angle(v.dotc(&uv).arg())
}

/// Sorts angles and groups them by single linkage at `gap`, including across the
/// `±π` seam. Returns clusters of original indices in ascending-angle order.
fn cluster_angles(raw: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &j in &order {
        match clusters.last_mut() {
            Some(c) if raw[j] - raw[*c.last().unwrap()] < gap => c.push(j),
            _ => clusters.push(vec![j]),
        }
    }
    if clusters.len() > 1 {
        let first = raw[clusters[0][0]];
        let last = raw[*clusters.last().unwrap().last().unwrap()];
        if first + TAU - last < gap {
            let head = clusters.remove(0);
            clusters.last_mut().unwrap().extend(head);
        }
    }
    // the seam cluster's mean sits near ±π; keep clusters ordered by that mean
    let key = |c: &Vec<usize>| -> f64 {
        let m: C64 = c.iter().map(|&j| C64::from_polar(1.0, raw[j])).sum();
        normalize_angle(m.arg())
    };
    clusters.sort_by(|a, b| key(a).total_cmp(&key(b)));
    clusters
}

/// Orthonormal basis of `span(basis)` obtained by projecting `e_0, e_1, …` onto it
/// in index order. Each accepted vector has a real positive component at its
/// originating index.
fn standard_rebasis(basis: &DMatrix<C64>) -> DMatrix<C64> {
    let (d, k) = basis.shape();
    let threshold = 0.5 / (d as f64).sqrt();
    let mut chosen: Vec<DVector<C64>> = Vec::with_capacity(k);
    let candidate = |i: usize, chosen: &[DVector<C64>]| -> DVector<C64> {
        // P e_i = B (B† e_i) = B · conj(row i of B)
        let coeffs = basis.row(i).adjoint();
        let mut r = basis * coeffs;
        for _ in 0..2 {
            for v in chosen {
                let c = v.dotc(&r);
                r.axpy(-c, v, ONE);
            }
        }
        r
    };
    for i in 0..d {
        if chosen.len() == k {
            break;
        }
        let r = candidate(i, &chosen);
        let n = r.norm();
        if n >= threshold {
            chosen.push(r.unscale(n));
        }
    }
    while chosen.len() < k {
        let (best, r) = (0..d)
            .map(|i| (i, candidate(i, &chosen)))
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()).then(b.0.cmp(&a.0)))
            .expect("dim >= 1");
        let _ = best;
        let n = r.norm();
        chosen.push(r.unscale(n));
    }
    let mut out = DMatrix::<C64>::from_element(d, k, ZERO);
    for (j, v) in chosen.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_unitary_seeded;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn angle_normalization() {
        assert_eq!(normalize_angle(-PI), PI);
        assert_eq!(normalize_angle(PI), PI);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI / 2.0), -PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(circular_distance(PI - 0.1, -PI + 0.1), 0.2, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_input_keeps_standard_basis() {
        let u = Unitary::new(Operator::diagonal(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]).unwrap())
            .unwrap();
        let d = spectral_decompose(&u).unwrap();
        assert_eq!(d.angles(), &[0.0, PI / 2.0, PI]);
        assert_eq!(d.vectors(), &DMatrix::identity(3, 3));
        assert_eq!(d.clusters().len(), 3);
    }

    #[test]
    fn rotation_has_conjugate_angles() {
        let phi = PI / 3.0;
        let (s, co) = phi.sin_cos();
        let r = Unitary::new(Operator::from_real_rows(&[&[co, -s], &[s, co]]).unwrap()).unwrap();
        let d = spectral_decompose(&r).unwrap();
        assert_abs_diff_eq!(d.angles()[0], -phi, epsilon = 1e-14);
        assert_abs_diff_eq!(d.angles()[1], phi, epsilon = 1e-14);
    }

    #[test]
    fn identity_is_one_cluster() {
        let d = spectral_decompose(&Unitary::identity(4)).unwrap();
        assert_eq!(d.angles(), &[0.0; 4]);
        assert_eq!(d.clusters(), &[vec![0, 1, 2, 3]]);
        assert_eq!(d.vectors(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn seam_cluster_is_merged() {
        let eps = 1e-10;
        let u = Operator::diagonal(&[
            C64::from_polar(1.0, PI - eps),
            c(0.0, 1.0),
            C64::from_polar(1.0, -PI + eps),
        ])
        .unwrap();
        let d = spectral_decompose(&Unitary::new(u).unwrap()).unwrap();
        assert_eq!(d.clusters().len(), 2);
        let seam = d.clusters().iter().find(|c| c.len() == 2).unwrap();
        for &j in seam {
            assert!(circular_distance(d.angles()[j], PI) < 1e-9);
        }
    }

    #[test]
    fn random_unitaries_reconstruct() {
        for (dim, seed) in [(1, 1), (2, 2), (7, 3), (32, 4), (64, 5)] {
            let u = random_unitary_seeded(dim, seed).unwrap();
            let d = spectral_decompose(&u).unwrap();
            assert!(d.reconstruction_error() < 1e-11, "dim {dim}: {}", d.reconstruction_error());
            assert!(d.orthonormality_defect() < 1e-12);
            assert!(d.angles().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn degenerate_random_spectrum_is_clustered() {
        // u = W diag(i, i, i, -1, -1) W†
        let w = random_unitary_seeded(5, 11).unwrap();
        let diag = Operator::diagonal(&[c(0.0, 1.0), c(0.0, 1.0), c(0.0, 1.0), c(-1.0, 0.0), c(-1.0, 0.0)])
            .unwrap();
        let u = Unitary::new(&(w.as_operator() * &diag) * w.adjoint().as_operator()).unwrap();
        let d = spectral_decompose(&u).unwrap();
        let sizes: Vec<usize> = d.clusters().iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![3, 2]);
        assert!(d.reconstruction_error() < 1e-12);
    }

    #[test]
    fn circle_functions() {
        let u = Unitary::new(Operator::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap()).unwrap();
        let d = spectral_decompose(&u).unwrap();
        let half = apply_circle_function(&d, |a| C64::from_polar(1.0, a / 2.0)).unwrap();
        assert_abs_diff_eq!(half.entry(0, 0).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(half.entry(1, 1).im, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(half.entry(1, 1).re, 0.0, epsilon = 1e-15);

        let k = apply_circle_function(&d, |_| c(2.0, -1.0)).unwrap();
        assert_eq!(k, Operator::scalar(2, c(2.0, -1.0)));
        assert_eq!(apply_circle_function(&d, |_| ONE).unwrap(), Operator::identity(2));

        let bad = apply_circle_function(&d, |a| c(1.0 / (a - PI), 0.0));
        assert!(matches!(bad, Err(LabError::Evaluation { .. })));
    }

    #[test]
    fn circle_function_matches_polynomial() {
        let u = random_unitary_seeded(6, 21).unwrap();
        let d = spectral_decompose(&u).unwrap();
        // p(z) = 2 − 3z + z^3
        let g = apply_circle_function(&d, |a| {
            let z = C64::from_polar(1.0, a);
            c(2.0, 0.0) - z * 3.0 + z * z * z
        })
        .unwrap();
        let p = &(&Operator::scalar(6, c(2.0, 0.0)) - &u.scale(c(3.0, 0.0))) + &u.pow(3);
        assert!(g.distance(&p).unwrap() < 1e-12);
    }
}
