//! Potential families `V(x) >= 0` (scalar and Hermitian matrix valued) and
//! their samples on a [`Grid`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::linalg::{self, CMatrix, ZERO};

/// Node eigenvalues above this are treated as zero in fractional powers.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// One term `B * exp(-((x - center) / width)^2)` of a Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBump {
    pub matrix: CMatrix,
    pub center: f64,
    pub width: f64,
}

/// A family of potentials together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// `s (s + 1) b^2 sech^2(b x)`, eigenvalues `-b^2 (s - k)^2` for `k < s`.
    PoschlTeller { s: f64, b: f64 },
    /// `depth` on `|x| <= width / 2`, zero outside.
    SquareWell { depth: f64, width: f64 },
    /// `amplitude * exp(-((x - center) / width)^2)`.
    GaussianWell { amplitude: f64, width: f64, center: f64 },
    /// Block-diagonal direct sum of the given potentials.
    MatrixDiagonal { blocks: Vec<PotentialSpec> },
    /// `W* V_base W` for a constant unitary `W`.
    MatrixConjugated { base: Box<PotentialSpec>, unitary: CMatrix },
    /// Sum of PSD matrices times Gaussian profiles.
    MatrixGaussianMix { bumps: Vec<GaussianBump> },
    /// Piecewise-linear interpolation of PSD samples, zero outside `[nodes[0], nodes[last]]`.
    CustomSampled { nodes: Vec<f64>, samples: Vec<CMatrix> },
}

impl PotentialSpec {
    pub fn poschl_teller(s: f64, b: f64) -> Self {
        Self::PoschlTeller { s, b }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::PoschlTeller { .. } => "poschl_teller",
            Self::SquareWell { .. } => "square_well",
            Self::GaussianWell { .. } => "gaussian_well",
            Self::MatrixDiagonal { .. } => "matrix_diagonal",
            Self::MatrixConjugated { .. } => "matrix_conjugated",
            Self::MatrixGaussianMix { .. } => "matrix_gaussian_mix",
            Self::CustomSampled { .. } => "custom_sampled",
        }
    }

    /// Number of channels `M`.
    pub fn channels(&self) -> usize {
        match self {
            Self::PoschlTeller { .. } | Self::SquareWell { .. } | Self::GaussianWell { .. } => 1,
            Self::MatrixDiagonal { blocks } => blocks.iter().map(Self::channels).sum(),
            Self::MatrixConjugated { unitary, .. } => unitary.nrows(),
            Self::MatrixGaussianMix { bumps } => bumps.first().map_or(1, |b| b.matrix.nrows()),
            Self::CustomSampled { samples, .. } => samples.first().map_or(1, |s| s.nrows()),
        }
    }

    /// Checks that every parameter yields a Hermitian PSD potential.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be finite, got {v}"))
            }
        };
        match self {
            Self::PoschlTeller { s, b } => {
                finite("s", *s)?;
                finite("b", *b)?;
                if *s <= 0.0 || *b <= 0.0 {
                    return invalid(format!("poschl_teller needs s > 0 and b > 0, got s={s}, b={b}"));
                }
            }
            Self::SquareWell { depth, width } => {
                finite("depth", *depth)?;
                finite("width", *width)?;
                if *depth < 0.0 || *width <= 0.0 {
                    return invalid(format!("square_well needs depth >= 0 and width > 0, got {depth}, {width}"));
                }
            }
            Self::GaussianWell { amplitude, width, center } => {
                finite("amplitude", *amplitude)?;
                finite("width", *width)?;
                finite("center", *center)?;
                if *amplitude < 0.0 || *width <= 0.0 {
                    return invalid(format!(
                        "gaussian_well needs amplitude >= 0 and width > 0, got {amplitude}, {width}"
                    ));
                }
            }
            Self::MatrixDiagonal { blocks } => {
                if blocks.is_empty() {
                    return invalid("matrix_diagonal needs at least one block");
                }
                blocks.iter().try_for_each(Self::validate)?;
            }
            Self::MatrixConjugated { base, unitary } => {
                base.validate()?;
                if unitary.nrows() != base.channels() || !unitary.is_square() {
                    return invalid(format!(
                        "unitary is {}x{} but base potential has {} channels",
                        unitary.nrows(),
                        unitary.ncols(),
                        base.channels()
                    ));
                }
                let defect = unitary.adjoint() * unitary - CMatrix::identity(unitary.nrows(), unitary.nrows());
                if defect.iter().any(|z| z.norm() > 1e-10) {
                    return invalid("conjugating matrix is not unitary");
                }
            }
            Self::MatrixGaussianMix { bumps } => {
                if bumps.is_empty() {
                    return invalid("matrix_gaussian_mix needs at least one bump");
                }
                let m = bumps[0].matrix.nrows();
                for bump in bumps {
                    finite("center", bump.center)?;
                    finite("width", bump.width)?;
                    if bump.width <= 0.0 {
                        return invalid(format!("bump width must be positive, got {}", bump.width));
                    }
                    check_psd_matrix(&bump.matrix, m)?;
                }
            }
            Self::CustomSampled { nodes, samples } => {
                if nodes.len() < 2 || nodes.len() != samples.len() {
                    return invalid("custom_sampled needs >= 2 nodes and one matrix per node");
                }
                if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
                    return invalid("custom_sampled nodes must be finite and strictly increasing");
                }
                let m = samples[0].nrows();
                samples.iter().try_for_each(|s| check_psd_matrix(s, m))?;
            }
        }
        Ok(())
    }

    /// `V(x)` for a single-channel potential.
    pub fn scalar_value(&self, x: f64) -> Option<f64> {
        match self {
            Self::PoschlTeller { s, b } => Some(s * (s + 1.0) * b * b / (b * x).cosh().powi(2)),
            Self::SquareWell { depth, width } => Some(if x.abs() <= 0.5 * width { *depth } else { 0.0 }),
            Self::GaussianWell { amplitude, width, center } => {
                Some(amplitude * (-((x - center) / width).powi(2)).exp())
            }
            _ if self.channels() == 1 => Some(self.value(x)[(0, 0)].re),
            _ => None,
        }
    }

    /// `V(x)` as an `M x M` matrix.
    pub fn value(&self, x: f64) -> CMatrix {
        match self {
            Self::PoschlTeller { .. } | Self::SquareWell { .. } | Self::GaussianWell { .. } => {
                let v = self.scalar_value(x).expect("scalar family");
                CMatrix::from_element(1, 1, Complex64::new(v, 0.0))
            }
            Self::MatrixDiagonal { blocks } => {
                let m = self.channels();
                let mut out = CMatrix::from_element(m, m, ZERO);
                let mut offset = 0;
                for block in blocks {
                    let v = block.value(x);
                    let k = v.nrows();
                    out.view_mut((offset, offset), (k, k)).copy_from(&v);
                    offset += k;
                }
                out
            }
            Self::MatrixConjugated { base, unitary } => unitary.adjoint() * base.value(x) * unitary,
            Self::MatrixGaussianMix { bumps } => {
                let m = self.channels();
                bumps.iter().fold(CMatrix::from_element(m, m, ZERO), |acc, b| {
                    let g = (-((x - b.center) / b.width).powi(2)).exp();
                    acc + b.matrix.map(|z| z * g)
                })
            }
            Self::CustomSampled { nodes, samples } => {
                let m = self.channels();
                let last = nodes.len() - 1;
                if x < nodes[0] || x > nodes[last] {
                    return CMatrix::from_element(m, m, ZERO);
                }
                let k = nodes.partition_point(|&t| t <= x).clamp(1, last);
                let t = (x - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
                samples[k - 1].map(|z| z * (1.0 - t)) + samples[k].map(|z| z * t)
            }
        }
    }

    /// Stable string form, used as a cache key.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("potential specs always serialize")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        Ok(spec)
    }
}

fn check_psd_matrix(m: &CMatrix, channels: usize) -> Result<()> {
    if m.nrows() != channels || !m.is_square() {
        return invalid(format!("expected a {channels}x{channels} matrix, got {}x{}", m.nrows(), m.ncols()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return invalid("matrix entries must be finite");
    }
    if linalg::hermiticity_defect(m) > 1e-12 * (1.0 + linalg::frobenius(m)) {
        return invalid("matrix is not Hermitian");
    }
    let min = linalg::hermitian_eigenvalues(&linalg::hermitian_part(m))[0];
    if min < -PSD_TOLERANCE {
        return invalid(format!("matrix is not positive semidefinite (eigenvalue {min:e})"));
    }
    Ok(())
}

// JSON schema: {"family": string, "params": object, "M": integer}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    family: String,
    params: Value,
    #[serde(rename = "M")]
    channels: usize,
}

#[derive(Serialize, Deserialize)]
struct PtParams {
    s: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct SquareParams {
    depth: f64,
    width: f64,
}

#[derive(Serialize, Deserialize)]
struct GaussParams {
    amplitude: f64,
    width: f64,
    center: f64,
}

#[derive(Serialize, Deserialize)]
struct DiagonalParams {
    blocks: Vec<PotentialSpec>,
}

#[derive(Serialize, Deserialize)]
struct ConjugatedParams {
    base: PotentialSpec,
    unitary: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct BumpParams {
    matrix: Vec<Vec<[f64; 2]>>,
    center: f64,
    width: f64,
}

#[derive(Serialize, Deserialize)]
struct MixParams {
    bumps: Vec<BumpParams>,
}

#[derive(Serialize, Deserialize)]
struct CustomParams {
    nodes: Vec<f64>,
    samples: Vec<Vec<Vec<[f64; 2]>>>,
}

impl Serialize for PotentialSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        let params = match self {
            Self::PoschlTeller { s, b } => serde_json::to_value(PtParams { s: *s, b: *b }),
            Self::SquareWell { depth, width } => {
                serde_json::to_value(SquareParams { depth: *depth, width: *width })
            }
            Self::GaussianWell { amplitude, width, center } => serde_json::to_value(GaussParams {
                amplitude: *amplitude,
                width: *width,
                center: *center,
            }),
            Self::MatrixDiagonal { blocks } => serde_json::to_value(DiagonalParams { blocks: blocks.clone() }),
            Self::MatrixConjugated { base, unitary } => serde_json::to_value(ConjugatedParams {
                base: (**base).clone(),
                unitary: linalg::to_pairs(unitary),
            }),
            Self::MatrixGaussianMix { bumps } => serde_json::to_value(MixParams {
                bumps: bumps
                    .iter()
                    .map(|b| BumpParams { matrix: linalg::to_pairs(&b.matrix), center: b.center, width: b.width })
                    .collect(),
            }),
            Self::CustomSampled { nodes, samples } => serde_json::to_value(CustomParams {
                nodes: nodes.clone(),
                samples: samples.iter().map(linalg::to_pairs).collect(),
            }),
        }
        .map_err(S::Error::custom)?;
        RawSpec { family: self.family().to_string(), params, channels: self.channels() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PotentialSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpec::deserialize(deserializer)?;
        fn params<T: serde::de::DeserializeOwned, E: serde::de::Error>(v: Value) -> std::result::Result<T, E> {
            serde_json::from_value(v).map_err(E::custom)
        }
        fn matrix<E: serde::de::Error>(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMatrix, E> {
            linalg::from_pairs(rows).ok_or_else(|| E::custom("matrix must be square and non-empty"))
        }
        let spec = match raw.family.as_str() {
            "poschl_teller" => {
                let p: PtParams = params(raw.params)?;
                Self::PoschlTeller { s: p.s, b: p.b }
            }
            "square_well" => {
                let p: SquareParams = params(raw.params)?;
                Self::SquareWell { depth: p.depth, width: p.width }
            }
            "gaussian_well" => {
                let p: GaussParams = params(raw.params)?;
                Self::GaussianWell { amplitude: p.amplitude, width: p.width, center: p.center }
            }
            "matrix_diagonal" => {
                let p: DiagonalParams = params(raw.params)?;
                Self::MatrixDiagonal { blocks: p.blocks }
            }
            "matrix_conjugated" => {
                let p: ConjugatedParams = params(raw.params)?;
                Self::MatrixConjugated { base: Box::new(p.base), unitary: matrix(&p.unitary)? }
            }
            "matrix_gaussian_mix" => {
                let p: MixParams = params(raw.params)?;
                let bumps = p
                    .bumps
                    .into_iter()
                    .map(|b| Ok(GaussianBump { matrix: matrix(&b.matrix)?, center: b.center, width: b.width }))
                    .collect::<std::result::Result<_, D::Error>>()?;
                Self::MatrixGaussianMix { bumps }
            }
            "custom_sampled" => {
                let p: CustomParams = params(raw.params)?;
                let samples = p.samples.iter().map(|s| matrix(s)).collect::<std::result::Result<_, D::Error>>()?;
                Self::CustomSampled { nodes: p.nodes, samples }
            }
            other => return Err(D::Error::custom(format!("unknown potential family `{other}`"))),
        };
        if spec.channels() != raw.channels {
            return Err(D::Error::custom(format!(
                "declared M = {} but parameters describe {} channels",
                raw.channels,
                spec.channels()
            )));
        }
        spec.validate().map_err(D::Error::custom)?;
        Ok(spec)
    }
}

/// A potential sampled at the interior nodes of a grid.
#[derive(Debug, Clone)]
pub struct MatrixPotentialField {
    grid: Grid,
    channels: usize,
    samples: Vec<CMatrix>,
    eigenvalues: Vec<Vec<f64>>,
}

impl MatrixPotentialField {
    /// Builds a field from node samples, symmetrizing each one.
    ///
    /// Positive semidefiniteness is not required here; it is checked where
    /// fractional powers are taken.
    pub fn from_samples(grid: Grid, samples: Vec<CMatrix>) -> Result<Self> {
        if samples.len() != grid.len() {
            return invalid(format!("{} samples for {} nodes", samples.len(), grid.len()));
        }
        let channels = samples.first().map_or(1, |s| s.nrows());
        if samples.iter().any(|s| s.nrows() != channels || s.ncols() != channels) {
            return invalid("all samples must be square with a common size");
        }
        let samples: Vec<CMatrix> = samples.iter().map(linalg::hermitian_part).collect();
        let eigenvalues = samples.iter().map(linalg::hermitian_eigenvalues).collect();
        Ok(Self { grid, channels, samples, eigenvalues })
    }

    pub fn zero(grid: Grid, channels: usize) -> Self {
        let samples = vec![CMatrix::from_element(channels, channels, ZERO); grid.len()];
        let eigenvalues = vec![vec![0.0; channels]; grid.len()];
        Self { grid, channels, samples, eigenvalues }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[CMatrix] {
        &self.samples
    }

    /// Ascending eigenvalues of the sample at node `i`.
    pub fn node_eigenvalues(&self, i: usize) -> &[f64] {
        &self.eigenvalues[i]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|e| e[e.len() - 1]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOLERANCE
    }

    /// Largest Hermiticity defect over the nodes (zero after symmetrization).
    pub fn hermiticity_defect(&self) -> f64 {
        self.samples.iter().map(linalg::hermiticity_defect).fold(0.0, f64::max)
    }

    fn check_psd(&self) -> Result<()> {
        for (i, ev) in self.eigenvalues.iter().enumerate() {
            if ev[0] < -PSD_TOLERANCE {
                return Err(Error::NotPsd { x: self.grid.node(i), eigenvalue: ev[0] });
            }
        }
        Ok(())
    }

    /// `Tr[V(x_i)^p]` at every node.
    pub fn trace_power(&self, p: f64) -> Result<Vec<f64>> {
        self.check_psd()?;
        Ok(self.eigenvalues.iter().map(|ev| ev.iter().map(|&mu| mu.max(0.0).powf(p)).sum()).collect())
    }
}

/// Samples `spec` at the grid nodes.
pub fn sample(spec: &PotentialSpec, grid: &Grid) -> Result<MatrixPotentialField> {
    spec.validate()?;
    let samples = grid.nodes().into_iter().map(|x| spec.value(x)).collect();
    let field = MatrixPotentialField::from_samples(*grid, samples)?;
    field.check_psd()?;
    Ok(field)
}

/// `\int Tr[V(x)^p] dx` by node-wise eigendecomposition and grid quadrature.
pub fn trace_power_integral(field: &MatrixPotentialField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return invalid(format!("trace power must be >= 1, got {p}"));
    }
    Ok(field.grid.integrate(&field.trace_power(p)?))
}

/// Seeded random `matrix_gaussian_mix` with `bumps` PSD terms of size `channels`.
///
/// Each term is `B_k = a_k A_k A_k^* / |A_k A_k^*|` with complex normal `A_k`,
/// amplitude `a_k` in `[1, 10]`, center in `[-5, 5]` and width in `[0.5, 3]`.
pub fn random_psd_potential(channels: usize, bumps: usize, seed: u64) -> Result<PotentialSpec> {
    if channels == 0 || bumps == 0 {
        return invalid("random potential needs M >= 1 and K >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(bumps);
    for _ in 0..bumps {
        let a = DMatrix::from_fn(channels, channels, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let b = linalg::hermitian_part(&(&a * a.adjoint()));
        let top = *linalg::hermitian_eigenvalues(&b).last().expect("non-empty");
        let amplitude = rng.random_range(1.0..=10.0);
        let matrix = b.map(|z| z * (amplitude / top));
        let matrix = linalg::hermitian_part(&matrix);
        let center = rng.random_range(-5.0..=5.0);
        let width = rng.random_range(0.5..=3.0);
        out.push(GaussianBump { matrix, center, width });
    }
    Ok(PotentialSpec::MatrixGaussianMix { bumps: out })
}
