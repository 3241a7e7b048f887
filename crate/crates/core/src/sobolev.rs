//! Orthonormal systems of vector functions, the diagonal of their
//! projection kernel `U(x, y) = sum_n phi_n(x) phi_n(y)^*`, and checks of
//!
//! ```text
//! \int Tr[U(x,x)^3] dx <= sum_n sum_j \int |phi_n'(x,j)|^2 dx
//! ```
//!
//! together with the scalar Agmon inequality `|f(x)|^2 <= \int |f f'|`.
//!
//! Vector functions are stored node-major: component `j` at node `i` is
//! `data[i * M + j]`.

use num_complex::Complex64;
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::linalg::{self, CMatrix, ZERO};
use crate::spectra::{gram_defect, quadrature_mgs, Spectrum};

/// Node pairs sampled by [`projection_defect`].
pub const DEFAULT_DEFECT_PAIRS: usize = 64;

/// `N` vector functions in `M` channels on a grid.
///
/// Systems built by [`gram_schmidt`] or [`OrthonormalSystem::from_spectrum`]
/// are orthonormal in the grid quadrature; [`OrthonormalSystem::from_raw`]
/// skips that check so that defect detectors can be exercised.
#[derive(Debug, Clone)]
pub struct OrthonormalSystem {
    grid: Grid,
    channels: usize,
    functions: Vec<Vec<Complex64>>,
}

impl OrthonormalSystem {
    pub fn from_raw(grid: Grid, channels: usize, functions: Vec<Vec<Complex64>>) -> Result<Self> {
        if channels == 0 {
            return invalid("need at least one channel");
        }
        if let Some(f) = functions.iter().find(|f| f.len() != grid.len() * channels) {
            return invalid(format!("function has {} values, expected {}", f.len(), grid.len() * channels));
        }
        Ok(Self { grid, channels, functions })
    }

    /// The eigenfunctions carried by a spectrum.
    pub fn from_spectrum(spectrum: &Spectrum) -> Result<Self> {
        let vectors = spectrum
            .eigenvectors
            .clone()
            .ok_or_else(|| Error::InvalidArgument("spectrum carries no eigenvectors".into()))?;
        Self::from_raw(spectrum.grid(), spectrum.meta.channels, vectors)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[Vec<Complex64>] {
        &self.functions
    }

    pub fn gram_defect(&self) -> f64 {
        gram_defect(&self.grid, self.channels, &self.functions)
    }

    /// Every function multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let functions = self.functions.iter().map(|f| f.iter().map(|z| z * factor).collect()).collect();
        Self { functions, ..self.clone() }
    }

    /// Applies the constant matrix `w` to the channel vector at every node.
    pub fn rotated(&self, w: &CMatrix) -> Result<Self> {
        if w.nrows() != self.channels || !w.is_square() {
            return invalid("rotation must be M x M");
        }
        let m = self.channels;
        let functions = self
            .functions
            .iter()
            .map(|f| {
                f.chunks(m)
                    .flat_map(|v| (0..m).map(move |r| (0..m).map(|c| w[(r, c)] * v[c]).sum::<Complex64>()))
                    .collect()
            })
            .collect();
        Ok(Self { functions, ..self.clone() })
    }

    /// Component `j` of function `n` as a scalar grid function.
    pub fn component(&self, n: usize, j: usize) -> GridFunction {
        let values = self.functions[n].iter().skip(j).step_by(self.channels).copied().collect();
        GridFunction { grid: self.grid, values }
    }

    /// `U(x_a, x_b)` assembled from the stored functions.
    pub fn kernel(&self, a: usize, b: usize) -> CMatrix {
        let m = self.channels;
        let mut u = CMatrix::from_element(m, m, ZERO);
        for f in &self.functions {
            let (fa, fb) = (&f[a * m..(a + 1) * m], &f[b * m..(b + 1) * m]);
            for j in 0..m {
                for k in 0..m {
                    u[(j, k)] += fa[j] * fb[k].conj();
                }
            }
        }
        u
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass, in the grid
/// quadrature inner product.
pub fn gram_schmidt(grid: &Grid, channels: usize, raw: Vec<Vec<Complex64>>) -> Result<OrthonormalSystem> {
    let mut sys = OrthonormalSystem::from_raw(*grid, channels, raw)?;
    let w = grid.weights();
    let scale: Vec<f64> = sys
        .functions
        .iter()
        .map(|f| crate::spectra::quadrature_inner(&w, channels, f, f).re.sqrt())
        .collect();
    for (i, f) in sys.functions.iter_mut().enumerate() {
        if !(scale[i] > 0.0) {
            return Err(Error::RankDeficient { index: i, norm: scale[i] });
        }
        f.iter_mut().for_each(|z| *z /= scale[i]);
    }
    for _ in 0..2 {
        quadrature_mgs(&w, channels, &mut sys.functions, 1e-12)
            .map_err(|(index, norm)| Error::RankDeficient { index, norm })?;
    }
    Ok(sys)
}

/// `n` smooth random vector functions: per channel a complex multiple of a
/// modulated Gaussian `exp(i k x) exp(-(x - c)^2 / (2 w^2))`, with centers
/// in `[-5, 5]`, widths in `[0.5, 2]` and `k` in `[-2, 2]`.
pub fn random_bump_functions(grid: &Grid, n: usize, channels: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = Uniform::new_inclusive(-5.0, 5.0).expect("valid range");
    let widths = Uniform::new_inclusive(0.5, 2.0).expect("valid range");
    let waves = Uniform::new_inclusive(-2.0, 2.0).expect("valid range");
    let x = grid.nodes();
    (0..n)
        .map(|_| {
            let params: Vec<(Complex64, f64, f64, f64)> = (0..channels)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    (Complex64::new(re, im), centers.sample(&mut rng), widths.sample(&mut rng), waves.sample(&mut rng))
                })
                .collect();
            x.iter()
                .flat_map(|&xi| {
                    params.iter().map(move |&(c, center, width, k)| {
                        c * Complex64::from_polar((-(xi - center).powi(2) / (2.0 * width * width)).exp(), k * xi)
                    })
                })
                .collect()
        })
        .collect()
}

/// Seeded random orthonormal system of `n` functions in `channels` channels.
pub fn random_system(grid: &Grid, n: usize, channels: usize, seed: u64) -> Result<OrthonormalSystem> {
    gram_schmidt(grid, channels, random_bump_functions(grid, n, channels, seed))
}

/// `U(x_i, x_i)` at every node.
#[derive(Debug, Clone)]
pub struct KernelDiagonal {
    grid: Grid,
    channels: usize,
    values: Vec<CMatrix>,
}

impl KernelDiagonal {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[CMatrix] {
        &self.values
    }

    /// `\int Tr[U(x,x)] dx`, which is `N` for an orthonormal system.
    pub fn trace_integral(&self) -> f64 {
        let tr: Vec<f64> = self.values.iter().map(|u| linalg::trace(u).re).collect();
        self.grid.integrate(&tr)
    }
}

pub fn kernel_diagonal(sys: &OrthonormalSystem) -> KernelDiagonal {
    let m = sys.channels;
    let values = (0..sys.grid.len())
        .map(|i| {
            let mut u = CMatrix::from_element(m, m, ZERO);
            for f in &sys.functions {
                let v = &f[i * m..(i + 1) * m];
                for j in 0..m {
                    u[(j, j)] += Complex64::new(v[j].norm_sqr(), 0.0);
                    for k in j + 1..m {
                        let z = v[j] * v[k].conj();
                        u[(j, k)] += z;
                        u[(k, j)] += z.conj();
                    }
                }
            }
            u
        })
        .collect();
    KernelDiagonal { grid: sys.grid, channels: m, values }
}

/// Largest Frobenius norm of `\int U(x,y) U(y,z) dy - U(x,z)` over sampled
/// node pairs.
///
/// Pair end points are drawn with probability proportional to `Tr U(x,x)`,
/// so the sample concentrates where the kernel lives; the pair at the
/// maximum of `Tr U(x,x)` is always included.
pub fn projection_defect(sys: &OrthonormalSystem, pairs: usize, seed: u64) -> f64 {
    if sys.is_empty() || pairs == 0 {
        return 0.0;
    }
    let diag = kernel_diagonal(sys);
    let mass: Vec<f64> = diag.values.iter().map(|u| linalg::trace(u).re.max(0.0)).collect();
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let cumulative: Vec<f64> = mass
        .iter()
        .scan(0.0, |acc, &v| {
            *acc += v / total;
            Some(*acc)
        })
        .collect();
    let peak = mass.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let u: f64 = rng.random();
        cumulative.partition_point(|&c| c < u).min(mass.len() - 1)
    };
    let mut sampled = vec![(peak, peak)];
    sampled.extend((1..pairs).map(|_| (draw(), draw())));

    let w = sys.grid.weights();
    let m = sys.channels;
    sampled
        .into_iter()
        .map(|(a, z)| {
            let mut acc = CMatrix::from_element(m, m, ZERO);
            for (y, wy) in w.iter().enumerate() {
                acc += (sys.kernel(a, y) * sys.kernel(y, z)).map(|v| v * *wy);
            }
            linalg::frobenius(&(acc - sys.kernel(a, z)))
        })
        .fold(0.0, f64::max)
}

/// `\int Tr[U(x,x)^3] dx`.
pub fn sobolev_lhs(kernel: &KernelDiagonal) -> f64 {
    let cubes: Vec<f64> = kernel.values.iter().map(|u| linalg::trace(&(u * u * u)).re).collect();
    kernel.grid.integrate(&cubes)
}

/// `sum_n sum_j \int |phi_n'(x, j)|^2 dx` with the central-difference stencil.
pub fn kinetic_energy(sys: &OrthonormalSystem) -> f64 {
    (0..sys.len())
        .flat_map(|n| (0..sys.channels).map(move |j| (n, j)))
        .map(|(n, j)| {
            let d = sys.component(n, j).differentiate();
            let sq: Vec<f64> = d.values.iter().map(|z| z.norm_sqr()).collect();
            sys.grid.integrate(&sq)
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevMeta {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub channels: usize,
    pub h: f64,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub gram_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub meta: SobolevMeta,
}

pub fn check_sobolev(sys: &OrthonormalSystem) -> SobolevReport {
    let lhs = sobolev_lhs(&kernel_diagonal(sys));
    let rhs = kinetic_energy(sys);
    SobolevReport {
        lhs,
        rhs,
        slack: rhs - lhs,
        pass: lhs <= rhs + 1e-8 * (1.0 + rhs),
        meta: SobolevMeta {
            n: sys.len(),
            channels: sys.channels,
            h: sys.grid.spacing(),
            half_width: sys.grid.half_width(),
            gram_defect: sys.gram_defect(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgmonReport {
    pub sup_sq: f64,
    pub integral: f64,
    pub pass: bool,
}

/// `max_i |f(x_i)|^2 <= \int |f f'| dx` up to `1e-6`.
pub fn agmon_check(f: &GridFunction) -> AgmonReport {
    let sup_sq = f.values.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let d = f.differentiate();
    let prod: Vec<f64> = f.values.iter().zip(&d.values).map(|(a, b)| (a * b).norm()).collect();
    let integral = f.grid.integrate(&prod);
    AgmonReport { sup_sq, integral, pass: sup_sq <= integral + 1e-6 }
}
