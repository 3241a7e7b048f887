//! Eigenvalues of Hermitian block-tridiagonal matrices
//!
//! ```text
//!   [ A_1  cI            ]
//!   [ cI   A_2  cI       ]
//!   [      cI   A_3  ... ]
//! ```
//!
//! with Hermitian `M x M` diagonal blocks and a real scalar coupling `c`.
//! Eigenvalues come from bisection on the inertia of `H - sigma I`, counted
//! through the block LDL* recurrence `D_i = A_i - sigma I - c^2 D_{i-1}^{-1}`
//! (Sylvester's law of inertia). Eigenvectors come from inverse iteration
//! with a partially pivoted banded LU factorization.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::ZERO;

/// Flat row-major storage of the diagonal blocks plus the scalar coupling.
#[derive(Debug, Clone)]
pub(crate) struct BlockTridiagonal {
    pub m: usize,
    pub blocks: Vec<Complex64>,
    pub coupling: f64,
}

impl BlockTridiagonal {
    pub fn n_blocks(&self) -> usize {
        self.blocks.len() / (self.m * self.m)
    }

    pub fn dim(&self) -> usize {
        self.n_blocks() * self.m
    }

    fn block(&self, i: usize) -> &[Complex64] {
        let mm = self.m * self.m;
        &self.blocks[i * mm..(i + 1) * mm]
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let (m, nb) = (self.m, self.n_blocks());
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..nb {
            let b = self.block(i);
            let neighbours = if nb == 1 { 0.0 } else if i == 0 || i == nb - 1 { 1.0 } else { 2.0 };
            for r in 0..m {
                let radius: f64 = (0..m).filter(|&c| c != r).map(|c| b[r * m + c].norm()).sum::<f64>()
                    + neighbours * self.coupling.abs();
                lo = lo.min(b[r * m + r].re - radius);
                hi = hi.max(b[r * m + r].re + radius);
            }
        }
        (lo, hi)
    }

    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    fn pivmin(&self) -> f64 {
        f64::MIN_POSITIVE * self.coupling.powi(2).max(1.0) * 1e4
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        if self.m == 1 {
            self.count_below_scalar(sigma)
        } else {
            self.count_below_block(sigma)
        }
    }

    fn count_below_scalar(&self, sigma: f64) -> usize {
        let c2 = self.coupling * self.coupling;
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut d = 1.0;
        for (i, a) in self.blocks.iter().enumerate() {
            d = a.re - sigma - if i == 0 { 0.0 } else { c2 / d };
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn count_below_block(&self, sigma: f64) -> usize {
        let m = self.m;
        let c2 = self.coupling * self.coupling;
        let pivmin = self.pivmin();
        let mut work = vec![ZERO; m * m];
        let mut count = 0;
        for i in 0..self.n_blocks() {
            let a = self.block(i);
            // Rebuild D_i from the Hermitian part of the previous inverse; rounding
            // asymmetry is otherwise amplified by c^2 block after block.
            for r in 0..m {
                for c in r..m {
                    let prev = if i == 0 { ZERO } else { (work[r * m + c] + work[c * m + r].conj()) * (0.5 * c2) };
                    let shift = if r == c { sigma } else { 0.0 };
                    let v = a[r * m + c] - shift - prev;
                    work[r * m + c] = v;
                    work[c * m + r] = v.conj();
                }
            }
            for r in 0..m {
                work[r * m + r].im = 0.0;
            }
            count += sweep_inverse(&mut work, m, pivmin);
        }
        count
    }

    /// All eigenvalues strictly below `upper`, ascending, each to about
    /// machine precision relative to its own magnitude.
    pub fn eigenvalues_below(&self, upper: f64) -> Result<Vec<f64>> {
        let (lo, _) = self.gershgorin();
        let lo = lo - 1e-8 * (1.0 + lo.abs());
        if !(lo.is_finite() && upper.is_finite()) {
            return Err(Error::SolverFailure(format!("non-finite bracket [{lo}, {upper}]")));
        }
        if upper <= lo {
            return Ok(Vec::new());
        }
        let total = self.count_below(upper);
        let mut out = Vec::with_capacity(total);
        let floor = 1e-3 * f64::EPSILON * self.norm_bound();
        let mut stack = vec![(lo, upper, 0usize, total)];
        while let Some((a, b, ca, cb)) = stack.pop() {
            if cb == ca {
                continue;
            }
            let width_tol = (2.0 * f64::EPSILON * a.abs().max(b.abs())).max(floor).max(f64::MIN_POSITIVE);
            if b - a <= width_tol {
                out.extend(std::iter::repeat_n(0.5 * (a + b), cb - ca));
                continue;
            }
            let mid = 0.5 * (a + b);
            let cm = self.count_below(mid).clamp(ca, cb);
            // Push the upper half first so the lower half is resolved first.
            stack.push((mid, b, cm, cb));
            stack.push((a, mid, ca, cm));
        }
        out.sort_by(f64::total_cmp);
        if out.len() != total {
            return Err(Error::SolverFailure(format!(
                "bisection isolated {} of {} eigenvalues",
                out.len(),
                total
            )));
        }
        Ok(out)
    }

    /// Eigenvectors (Euclidean-orthonormal, node-major layout) for the given
    /// eigenvalues, by shifted inverse iteration.
    pub fn eigenvectors(&self, eigenvalues: &[f64]) -> Result<Vec<Vec<Complex64>>> {
        let n = self.dim();
        let norm = self.norm_bound().max(1.0);
        let cluster_gap = 1e-8 * norm;
        let mut vectors: Vec<Vec<Complex64>> = Vec::with_capacity(eigenvalues.len());
        let mut cluster_start = 0;
        for (k, &lambda) in eigenvalues.iter().enumerate() {
            if k > 0 && lambda - eigenvalues[k - 1] > cluster_gap {
                cluster_start = k;
            }
            let lu = BandedLu::factor(self, lambda, f64::EPSILON * norm);
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ k as u64);
            let mut x: Vec<Complex64> =
                (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            normalize(&mut x);
            for _ in 0..3 {
                lu.solve(&mut x);
                for prev in &vectors[cluster_start..k] {
                    let p: Complex64 = prev.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
                    for (xi, pi) in x.iter_mut().zip(prev) {
                        *xi -= p * pi;
                    }
                }
                if !normalize(&mut x) {
                    return Err(Error::SolverFailure(format!("inverse iteration collapsed at eigenvalue {lambda}")));
                }
            }
            let residual = self.residual(&x, lambda);
            if !(residual <= 1e-6 * norm) {
                return Err(Error::SolverFailure(format!(
                    "inverse iteration residual {residual:e} at eigenvalue {lambda} (|H| ~ {norm:e})"
                )));
            }
            vectors.push(x);
        }
        Ok(vectors)
    }

    /// `|(H - lambda) x|_2`.
    pub fn residual(&self, x: &[Complex64], lambda: f64) -> f64 {
        let y = self.apply(x);
        y.iter().zip(x).map(|(y, x)| (y - x * lambda).norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let (m, nb) = (self.m, self.n_blocks());
        let mut y = vec![ZERO; x.len()];
        for i in 0..nb {
            let b = self.block(i);
            for r in 0..m {
                let mut acc = ZERO;
                for c in 0..m {
                    acc += b[r * m + c] * x[i * m + c];
                }
                if i > 0 {
                    acc += x[(i - 1) * m + r] * self.coupling;
                }
                if i + 1 < nb {
                    acc += x[(i + 1) * m + r] * self.coupling;
                }
                y[i * m + r] = acc;
            }
        }
        y
    }
}

fn normalize(x: &mut [Complex64]) -> bool {
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return false;
    }
    x.iter_mut().for_each(|z| *z /= norm);
    true
}

/// In-place Gauss-Jordan inversion of a Hermitian `m x m` matrix with
/// diagonal pivoting. Returns the number of negative pivots, which equals
/// the number of negative eigenvalues. Tiny pivots are replaced by `-pivmin`.
fn sweep_inverse(a: &mut [Complex64], m: usize, pivmin: f64) -> usize {
    let mut swept = [false; 64];
    debug_assert!(m <= 64);
    let mut negatives = 0;
    for _ in 0..m {
        let k = (0..m)
            .filter(|&k| !swept[k])
            .max_by(|&p, &q| a[p * m + p].re.abs().total_cmp(&a[q * m + q].re.abs()))
            .expect("unswept pivot");
        swept[k] = true;
        let mut d = a[k * m + k].re;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            negatives += 1;
        }
        let p = 1.0 / d;
        a[k * m + k] = Complex64::new(p, 0.0);
        for j in (0..m).filter(|&j| j != k) {
            a[k * m + j] *= p;
        }
        for i in (0..m).filter(|&i| i != k) {
            let aik = a[i * m + k];
            for j in (0..m).filter(|&j| j != k) {
                let akj = a[k * m + j];
                a[i * m + j] -= aik * akj;
            }
            a[i * m + k] = -aik * p;
        }
    }
    negatives
}

/// LU factorization with partial pivoting of `H - shift I` in band storage.
struct BandedLu {
    n: usize,
    kl: usize,
    width: usize,
    ab: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    fn factor(h: &BlockTridiagonal, shift: f64, tiny: f64) -> Self {
        let (m, n) = (h.m, h.dim());
        let (kl, ku) = (m, m);
        let width = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, width, ab: vec![ZERO; n * width], pivots: vec![0; n] };
        for blk in 0..h.n_blocks() {
            let b = h.block(blk);
            for r in 0..m {
                let row = blk * m + r;
                for c in 0..m {
                    let v = b[r * m + c] - if r == c { shift } else { 0.0 };
                    lu.set(row, blk * m + c, v);
                }
                if blk > 0 {
                    lu.set(row, row - m, Complex64::new(h.coupling, 0.0));
                }
                if blk + 1 < h.n_blocks() {
                    lu.set(row, row + m, Complex64::new(h.coupling, 0.0));
                }
            }
        }
        let reach = kl + ku;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let p = (k..=last_row).max_by(|&p, &q| lu.get(p, k).norm().total_cmp(&lu.get(q, k).norm())).unwrap();
            lu.pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (lu.idx(k, j), lu.idx(p, j));
                    lu.ab.swap(a, b);
                }
            }
            if lu.get(k, k).norm() < tiny {
                lu.set(k, k, Complex64::new(tiny, 0.0));
            }
            let pivot = lu.get(k, k);
            for r in k + 1..=last_row {
                let l = lu.get(r, k) / pivot;
                lu.set(r, k, l);
                if l != ZERO {
                    for j in k + 1..=last_col {
                        let v = lu.get(r, j) - l * lu.get(k, j);
                        lu.set(r, j, v);
                    }
                }
            }
        }
        lu
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j + self.kl - i < self.width);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.ab[self.idx(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let k = self.idx(i, j);
        self.ab[k] = v;
    }

    fn solve(&self, x: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for r in k + 1..=(k + self.kl).min(n - 1) {
                x[r] -= self.get(r, k) * xk;
            }
        }
        let reach = self.width - self.kl - 1;
        for k in (0..n).rev() {
            let mut acc = x[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                acc -= self.get(k, j) * x[j];
            }
            x[k] = acc / self.get(k, k);
        }
    }
}
