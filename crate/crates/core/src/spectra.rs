//! Negative spectrum of the Dirichlet-box operator `H = -d^2/dx^2 - V`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigensolver::BlockTridiagonal;
use crate::error::{invalid, Result};
use crate::grid::{richardson, Grid};
use crate::linalg::CMatrix;
use crate::potentials::{sample, MatrixPotentialField, PotentialSpec};

/// Eigenvalues at or above `-DEFAULT_EPS_CUT` are treated as continuum.
pub const DEFAULT_EPS_CUT: f64 = 1e-6;

/// Three-point discretization of `H` with Dirichlet ends: diagonal blocks
/// `(2/h^2) I - V(x_i)`, off-diagonal blocks `(-1/h^2) I`.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    grid: Grid,
    pub(crate) matrix: BlockTridiagonal,
}

impl DiscretizedOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.matrix.m
    }

    pub fn dimension(&self) -> usize {
        self.matrix.dim()
    }

    /// Upper bound on the spectral norm (Gershgorin).
    pub fn norm_bound(&self) -> f64 {
        self.matrix.norm_bound()
    }

    /// Dense copy, with index `i * M + j` for node `i`, channel `j`.
    pub fn to_dense(&self) -> CMatrix {
        let n = self.dimension();
        let mut out = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            for (i, v) in self.matrix.apply(&e).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// `H x` for a node-major vector.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.apply(x)
    }

    /// All eigenvalues of the discrete operator strictly below `upper`.
    pub fn eigenvalues_below(&self, upper: f64) -> Result<Vec<f64>> {
        self.matrix.eigenvalues_below(upper)
    }
}

/// Builds the block-tridiagonal operator for a sampled potential.
pub fn assemble(field: &MatrixPotentialField) -> DiscretizedOperator {
    let grid = *field.grid();
    let m = field.channels();
    let inv_h2 = 1.0 / grid.spacing().powi(2);
    let mut blocks = Vec::with_capacity(grid.len() * m * m);
    for v in field.samples() {
        for r in 0..m {
            for c in 0..m {
                let kinetic = if r == c { 2.0 * inv_h2 } else { 0.0 };
                blocks.push(Complex64::new(kinetic, 0.0) - v[(r, c)]);
            }
        }
    }
    DiscretizedOperator { grid, matrix: BlockTridiagonal { m, blocks, coupling: -inv_h2 } }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub h: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n_interior: usize,
    #[serde(rename = "M")]
    pub channels: usize,
    pub eps_cut: f64,
    pub richardson_applied: bool,
    /// Bound-state counts differed between the two refinement levels.
    pub count_mismatch: bool,
    /// Two retained eigenvalues are closer than their error estimates.
    pub near_degenerate: bool,
}

/// Negative eigenvalues (ascending) with per-eigenvalue error estimates.
///
/// Eigenvectors, when present, live on the grid described by `meta` in
/// node-major layout and are orthonormal in the grid quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub negatives: Vec<f64>,
    pub error_estimates: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.negatives.is_empty()
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.meta.half_width, self.meta.n_interior).expect("spectrum grid was valid")
    }

    pub fn total_error(&self) -> f64 {
        self.error_estimates.iter().sum()
    }
}

/// Quadrature inner product of two node-major vector functions.
pub fn quadrature_inner(weights: &[f64], channels: usize, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.chunks(channels)
        .zip(b.chunks(channels))
        .zip(weights)
        .map(|((ra, rb), w)| ra.iter().zip(rb).map(|(x, y)| x.conj() * y).sum::<Complex64>() * *w)
        .sum()
}

/// Largest entry of `|G - I|` for the quadrature Gram matrix of `functions`.
pub fn gram_defect(grid: &Grid, channels: usize, functions: &[Vec<Complex64>]) -> f64 {
    let w = grid.weights();
    let mut worst: f64 = 0.0;
    for (i, a) in functions.iter().enumerate() {
        for (j, b) in functions.iter().enumerate().skip(i) {
            let g = quadrature_inner(&w, channels, a, b);
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).norm());
        }
    }
    worst
}

/// Modified Gram-Schmidt in the quadrature inner product; `None` on a
/// pivot below `min_norm`.
pub(crate) fn quadrature_mgs(
    weights: &[f64],
    channels: usize,
    functions: &mut [Vec<Complex64>],
    min_norm: f64,
) -> std::result::Result<(), (usize, f64)> {
    for i in 0..functions.len() {
        let (done, rest) = functions.split_at_mut(i);
        let f = &mut rest[0];
        for q in done.iter() {
            let p = quadrature_inner(weights, channels, q, f);
            f.iter_mut().zip(q).for_each(|(x, y)| *x -= p * y);
        }
        let norm = quadrature_inner(weights, channels, f, f).re.max(0.0).sqrt();
        if !(norm >= min_norm) {
            return Err((i, norm));
        }
        f.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(())
}

/// All eigenvalues of `op` below `-eps_cut`, ascending.
pub fn negative_eigenvalues(op: &DiscretizedOperator, eps_cut: f64, want_vectors: bool) -> Result<Spectrum> {
    if !(eps_cut > 0.0) {
        return invalid(format!("eps_cut must be positive, got {eps_cut}"));
    }
    let negatives = op.matrix.eigenvalues_below(-eps_cut)?;
    let tol = 4.0 * f64::EPSILON * op.norm_bound();
    let error_estimates = negatives.iter().map(|l| tol.max(4.0 * f64::EPSILON * l.abs())).collect();
    let eigenvectors = if want_vectors && !negatives.is_empty() {
        let mut vecs = op.matrix.eigenvectors(&negatives)?;
        let m = op.channels();
        let w = op.grid.weights();
        for v in vecs.iter_mut() {
            let norm = quadrature_inner(&w, m, v, v).re.sqrt();
            v.iter_mut().for_each(|z| *z /= norm);
        }
        if gram_defect(&op.grid, m, &vecs) > 1e-10 {
            quadrature_mgs(&w, m, &mut vecs, 0.0).map_err(|(i, n)| {
                crate::Error::SolverFailure(format!("eigenvector {i} lost its norm ({n:e}) in reorthogonalization"))
            })?;
        }
        Some(vecs)
    } else if want_vectors {
        Some(Vec::new())
    } else {
        None
    };
    let grid = op.grid;
    let near_degenerate = has_near_degenerate(&negatives, &vec![tol; negatives.len()]);
    Ok(Spectrum {
        negatives,
        error_estimates,
        eigenvectors,
        meta: SpectrumMeta {
            h: grid.spacing(),
            half_width: grid.half_width(),
            n_interior: grid.len(),
            channels: op.channels(),
            eps_cut,
            richardson_applied: false,
            count_mismatch: false,
            near_degenerate,
        },
    })
}

fn has_near_degenerate(values: &[f64], errors: &[f64]) -> bool {
    values.windows(2).zip(errors.windows(2)).any(|(v, e)| v[1] - v[0] <= e[0] + e[1])
}

/// Spectrum at `grid` and at the refined grid, combined by order-2
/// Richardson extrapolation.
///
/// Eigenvalues are paired by sorted order. When the two levels disagree on
/// the number of bound states, only the deepest common set is kept and
/// `meta.count_mismatch` is raised. Eigenvectors, if requested, come from
/// the unrefined grid.
pub fn converged_spectrum(spec: &PotentialSpec, grid: &Grid, eps_cut: f64, want_vectors: bool) -> Result<Spectrum> {
    let coarse = negative_eigenvalues(&assemble(&sample(spec, grid)?), eps_cut, want_vectors)?;
    let fine = negative_eigenvalues(&assemble(&sample(spec, &grid.refined())?), eps_cut, false)?;
    Ok(combine_levels(coarse, &fine))
}

pub(crate) fn combine_levels(coarse: Spectrum, fine: &Spectrum) -> Spectrum {
    let common = coarse.len().min(fine.len());
    let count_mismatch = coarse.len() != fine.len();
    let mut negatives = Vec::with_capacity(common);
    let mut error_estimates = Vec::with_capacity(common);
    let mut kept = Vec::with_capacity(common);
    for k in 0..common {
        let (vh, vh2) = (coarse.negatives[k], fine.negatives[k]);
        let extrapolated = richardson(vh, vh2, 2).expect("order 2 is valid");
        if extrapolated < -coarse.meta.eps_cut {
            negatives.push(extrapolated);
            error_estimates.push((vh - vh2).abs() + coarse.error_estimates[k]);
            kept.push(k);
        }
    }
    let eigenvectors = coarse.eigenvectors.map(|v| kept.iter().map(|&k| v[k].clone()).collect());
    let near_degenerate = has_near_degenerate(&negatives, &error_estimates);
    Spectrum {
        negatives,
        error_estimates,
        eigenvectors,
        meta: SpectrumMeta {
            richardson_applied: true,
            count_mismatch,
            near_degenerate,
            ..coarse.meta
        },
    }
}

/// `sum |lambda_n|^gamma` over the negative eigenvalues.
pub fn riesz_mean(spectrum: &Spectrum, gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return invalid(format!("gamma must be >= 0, got {gamma}"));
    }
    Ok(spectrum.negatives.iter().map(|l| l.abs().powf(gamma)).sum())
}
