//! Derivative-free search for potentials that maximize the Lieb-Thirring ratio
//! `sum |lambda_n|^gamma / \int V^{gamma + 1/2}` within a parameter family.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::c_thm1;
use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::ltcheck::check_lt_1d;
use crate::potentials::{GaussianBump, PotentialSpec};

/// Centres of the two bumps in [`SearchFamily::TwoGaussian`].
pub const TWO_BUMP_CENTERS: [f64; 2] = [-1.5, 1.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchFamily {
    /// `(s, b)`.
    #[serde(rename = "pt", alias = "poschl_teller")]
    PoschlTeller,
    /// `(amplitude, width)`, centred at the origin.
    GaussianWell,
    /// `(a1, w1, a2, w2)` with bumps at [`TWO_BUMP_CENTERS`].
    TwoGaussian,
    /// `(depth, width)`.
    SquareWell,
}

impl SearchFamily {
    pub fn n_params(self) -> usize {
        match self {
            Self::TwoGaussian => 4,
            _ => 2,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Self::PoschlTeller => &["s", "b"],
            Self::GaussianWell => &["amplitude", "width"],
            Self::TwoGaussian => &["a1", "w1", "a2", "w2"],
            Self::SquareWell => &["depth", "width"],
        }
    }

    pub fn build(self, p: &[f64]) -> Result<PotentialSpec> {
        if p.len() != self.n_params() {
            return invalid(format!("{self:?} takes {} parameters, got {}", self.n_params(), p.len()));
        }
        let spec = match self {
            Self::PoschlTeller => PotentialSpec::PoschlTeller { s: p[0], b: p[1] },
            Self::GaussianWell => PotentialSpec::GaussianWell { amplitude: p[0], width: p[1], center: 0.0 },
            Self::SquareWell => PotentialSpec::SquareWell { depth: p[0], width: p[1] },
            Self::TwoGaussian => PotentialSpec::MatrixGaussianMix {
                bumps: TWO_BUMP_CENTERS
                    .iter()
                    .zip(p.chunks(2))
                    .map(|(&center, aw)| GaussianBump {
                        matrix: DMatrix::from_element(1, 1, Complex64::new(aw[0], 0.0)),
                        center,
                        width: aw[1],
                    })
                    .collect(),
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub family: SearchFamily,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub gamma: f64,
    /// Points with a different number of bound states count as failed.
    #[serde(default)]
    pub bound_states: Option<usize>,
}

impl SearchSpace {
    pub fn new(family: SearchFamily, lower: Vec<f64>, upper: Vec<f64>, gamma: f64) -> Result<Self> {
        let space = Self { family, lower, upper, gamma, bound_states: None };
        space.validate()?;
        Ok(space)
    }

    /// Bounds must be finite with `lower <= upper`; equal bounds pin a parameter.
    pub fn validate(&self) -> Result<()> {
        let n = self.family.n_params();
        if self.lower.len() != n || self.upper.len() != n {
            return invalid(format!("{:?} needs {n} bounds per side", self.family));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return invalid(format!("bad bounds [{lo}, {hi}] for parameter {i}"));
            }
        }
        if !(self.gamma >= 1.0) {
            return invalid(format!("gamma must be >= 1, got {}", self.gamma));
        }
        Ok(())
    }

    /// Indices of parameters with `lower < upper`.
    pub fn free(&self) -> Vec<usize> {
        (0..self.lower.len()).filter(|&i| self.lower[i] < self.upper[i]).collect()
    }

    pub fn clamp(&self, p: &mut [f64]) {
        for (i, v) in p.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub params: Vec<f64>,
    /// `None` when the solver or a constraint rejected the point.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub family: SearchFamily,
    pub gamma: f64,
    pub best_params: Vec<f64>,
    pub best_ratio: f64,
    pub evaluations: usize,
    pub trace: Vec<Evaluation>,
    /// The best point exceeded the one-dimensional constant and was re-evaluated on `h/2`.
    pub rerun_finer: bool,
}

impl SearchResult {
    /// Trace as `params...,ratio` rows, empty ratio for failed points.
    pub fn trace_csv(&self) -> String {
        let mut out = self.family.param_names().join(",");
        out.push_str(",ratio\n");
        for e in &self.trace {
            let row: Vec<String> = e.params.iter().map(|p| format!("{p:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push(',');
            if let Some(r) = e.ratio {
                out.push_str(&format!("{r:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Memoized ratio evaluation keyed by the serialized spec and the grid.
pub struct Objective {
    space: SearchSpace,
    grid: Grid,
    cache: Mutex<HashMap<String, Option<f64>>>,
}

impl Objective {
    pub fn new(space: SearchSpace, grid: Grid) -> Result<Self> {
        space.validate()?;
        Ok(Self { space, grid, cache: Mutex::new(HashMap::new()) })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn ratio(&self, params: &[f64]) -> Option<f64> {
        self.ratio_on(params, &self.grid)
    }

    fn ratio_on(&self, params: &[f64], grid: &Grid) -> Option<f64> {
        let spec = self.space.family.build(params).ok()?;
        let key = format!("{}|{}|{}|{}", spec.to_json_string(), grid.half_width(), grid.len(), self.space.gamma);
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return *hit;
        }
        let value = check_lt_1d(&spec, grid, self.space.gamma).ok().and_then(|r| {
            let ok = self.space.bound_states.is_none_or(|n| n == r.bound_states);
            (ok && r.ratio.is_finite()).then_some(r.ratio)
        });
        self.cache.lock().expect("cache lock").insert(key, value);
        value
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    a.partial_cmp(b) == Some(std::cmp::Ordering::Less)
}

/// Larger ratio wins; equal ratios go to the lexicographically smaller point.
fn better(a: &Evaluation, b: &Evaluation) -> bool {
    match (a.ratio, b.ratio) {
        (Some(x), Some(y)) => x > y || (x == y && lex_less(&a.params, &b.params)),
        (Some(_), None) => true,
        _ => false,
    }
}

fn finish(objective: &Objective, trace: Vec<Evaluation>) -> Result<SearchResult> {
    let best = trace
        .iter()
        .fold(None::<&Evaluation>, |acc, e| match acc {
            Some(b) if !better(e, b) => Some(b),
            _ => Some(e),
        })
        .filter(|e| e.ratio.is_some())
        .ok_or_else(|| Error::SearchFailure(format!("all {} evaluations failed", trace.len())))?;
    let space = &objective.space;
    let mut best_ratio = best.ratio.expect("filtered");
    let mut rerun_finer = false;
    if space.gamma == 1.0 && best_ratio > c_thm1() + 1e-6 {
        rerun_finer = true;
        best_ratio = objective
            .ratio_on(&best.params, &objective.grid.refined())
            .ok_or_else(|| Error::SearchFailure("re-evaluation on the finer grid failed".into()))?;
    }
    Ok(SearchResult {
        family: space.family,
        gamma: space.gamma,
        best_params: best.params.clone(),
        best_ratio,
        evaluations: trace.len(),
        trace,
        rerun_finer,
    })
}

/// Lattice of `points` values per free parameter (pinned parameters take one
/// value), evaluated in parallel; the trace is in lattice order.
pub fn sweep(objective: &Objective, points: usize) -> Result<SearchResult> {
    let space = &objective.space;
    let free = space.free();
    if free.len() > 3 {
        return invalid(format!("sweep takes at most 3 free parameters, got {}", free.len()));
    }
    if points < 2 && !free.is_empty() {
        return invalid("sweep needs at least 2 points per free axis");
    }
    let total = points.pow(free.len() as u32);
    let lattice: Vec<Vec<f64>> = (0..total)
        .map(|mut k| {
            let mut p = space.lower.clone();
            for &i in free.iter().rev() {
                let j = k % points;
                k /= points;
                let t = j as f64 / (points - 1) as f64;
                p[i] = if j + 1 == points { space.upper[i] } else { space.lower[i] + t * (space.upper[i] - space.lower[i]) };
            }
            p
        })
        .collect();
    let trace = lattice.into_par_iter().map(|params| Evaluation { ratio: objective.ratio(&params), params }).collect();
    finish(objective, trace)
}

/// Nelder-Mead maximization over the free parameters, clamped to the box.
pub fn nelder_mead(objective: &Objective, start: &[f64], budget: usize) -> Result<SearchResult> {
    let space = &objective.space;
    if start.len() != space.lower.len() {
        return invalid("start point has the wrong number of parameters");
    }
    let mut start = start.to_vec();
    space.clamp(&mut start);
    let free = space.free();
    let n = free.len();
    let mut trace = Vec::new();
    let eval = |p: Vec<f64>, trace: &mut Vec<Evaluation>| -> Evaluation {
        let e = Evaluation { ratio: objective.ratio(&p), params: p };
        trace.push(e.clone());
        e
    };
    let first = eval(start.clone(), &mut trace);
    if budget < n + 1 || n == 0 {
        return finish(objective, trace);
    }

    let mut simplex = vec![first];
    for &i in &free {
        let step = 0.1 * (space.upper[i] - space.lower[i]);
        let mut p = start.clone();
        p[i] = if p[i] + step <= space.upper[i] { p[i] + step } else { p[i] - step };
        simplex.push(eval(p, &mut trace));
    }
    let point = |base: &[f64], toward: &[f64], t: f64| -> Vec<f64> {
        let mut p: Vec<f64> = base.iter().zip(toward).map(|(b, c)| b + t * (c - b)).collect();
        space.clamp(&mut p);
        p
    };
    let diameter = |s: &[Evaluation]| {
        let mut d: f64 = 0.0;
        for a in s {
            for b in s {
                let dist = a.params.iter().zip(&b.params).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                d = d.max(dist);
            }
        }
        d
    };
    while trace.len() < budget && diameter(&simplex) >= 1e-6 {
        simplex.sort_by(|a, b| {
            if better(a, b) {
                std::cmp::Ordering::Less
            } else if better(b, a) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let worst = simplex[n].clone();
        let mut centroid = vec![0.0; start.len()];
        for e in &simplex[..n] {
            for (c, p) in centroid.iter_mut().zip(&e.params) {
                *c += p / n as f64;
            }
        }
        let reflected = eval(point(&centroid, &worst.params, -1.0), &mut trace);
        if better(&reflected, &simplex[0]) {
            let expanded = eval(point(&centroid, &worst.params, -2.0), &mut trace);
            simplex[n] = if better(&expanded, &reflected) { expanded } else { reflected };
            continue;
        }
        if better(&reflected, &simplex[n - 1]) {
            simplex[n] = reflected;
            continue;
        }
        let (toward, base_eval) =
            if better(&reflected, &worst) { (point(&centroid, &worst.params, -1.0), &reflected) } else { (worst.params.clone(), &worst) };
        let contracted = eval(point(&centroid, &toward, 0.5), &mut trace);
        if better(&contracted, base_eval) || contracted.ratio == base_eval.ratio && contracted.ratio.is_some() {
            simplex[n] = contracted;
            continue;
        }
        let best = simplex[0].params.clone();
        for e in simplex.iter_mut().skip(1) {
            if trace.len() >= budget {
                break;
            }
            *e = eval(point(&best, &e.params, 0.5), &mut trace);
        }
    }
    finish(objective, trace)
}

/// `restarts` Nelder-Mead runs from seeded random starts, run concurrently.
pub fn nelder_mead_restarts(
    objective: &Objective,
    restarts: usize,
    seed: u64,
    budget: usize,
) -> Result<Vec<SearchResult>> {
    let space = &objective.space;
    let starts: Vec<Vec<f64>> = (0..restarts as u64)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            space.lower.iter().zip(&space.upper).map(|(&lo, &hi)| if lo < hi { rng.random_range(lo..hi) } else { lo }).collect()
        })
        .collect();
    starts.into_par_iter().map(|s| nelder_mead(objective, &s, budget)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{c_keller, lt_classical, ratio_r};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn pt_space(lo: f64, hi: f64) -> SearchSpace {
        SearchSpace::new(SearchFamily::PoschlTeller, vec![lo, 1.0], vec![hi, 1.0], 1.0).unwrap()
    }

    fn grid() -> Grid {
        Grid::with_spacing(20.0, 0.01).unwrap()
    }

    #[test]
    fn sweep_single_bound_state_family() {
        let obj = Objective::new(pt_space(0.1, 1.0), grid()).unwrap();
        let r = sweep(&obj, 91).unwrap();
        assert_eq!(r.evaluations, 91);
        assert_abs_diff_eq!(r.best_params[0], 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(r.best_ratio, c_keller(), epsilon = 1e-4);
        assert!(!r.rerun_finer);
    }

    #[test]
    fn sweep_many_bound_states_peaks_at_one() {
        let obj = Objective::new(pt_space(1.0, 5.0), Grid::with_spacing(20.0, 0.02).unwrap()).unwrap();
        let r = sweep(&obj, 9).unwrap();
        assert_abs_diff_eq!(r.best_params[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.best_ratio, 2.0 / (2f64.powf(1.5) * PI), epsilon = 1e-4);
        let ratios: Vec<f64> = r.trace.iter().map(|e| e.ratio.unwrap()).collect();
        assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    }

    #[test]
    fn degenerate_box_is_one_evaluation() {
        let obj = Objective::new(pt_space(0.5, 0.5), grid()).unwrap();
        let r = sweep(&obj, 7).unwrap();
        assert_eq!(r.evaluations, 1);
        let r = nelder_mead(&obj, &[0.5, 1.0], 100).unwrap();
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn zero_budget_returns_start() {
        let obj = Objective::new(pt_space(0.1, 1.0), grid()).unwrap();
        let r = nelder_mead(&obj, &[0.4, 1.0], 0).unwrap();
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.best_params, vec![0.4, 1.0]);
    }

    #[test]
    fn nelder_mead_finds_half() {
        let obj = Objective::new(pt_space(0.1, 1.0), grid()).unwrap();
        let r = nelder_mead(&obj, &[0.4, 1.0], 200).unwrap();
        assert_abs_diff_eq!(r.best_params[0], 0.5, epsilon = 1e-4);
        assert_abs_diff_eq!(r.best_ratio, c_keller(), epsilon = 1e-5);
        assert!(obj.cache_len() < r.evaluations, "cache should absorb revisits");
    }

    #[test]
    fn nelder_mead_improves_on_sweep_seed() {
        let obj = Objective::new(pt_space(0.1, 1.0), grid()).unwrap();
        let s = sweep(&obj, 10).unwrap();
        let r = nelder_mead(&obj, &s.best_params, 100).unwrap();
        assert!(r.best_ratio >= s.best_ratio);
    }

    #[test]
    fn restarts_agree() {
        let space = SearchSpace::new(SearchFamily::PoschlTeller, vec![0.1, 0.5], vec![1.0, 2.0], 1.0).unwrap();
        let obj = Objective::new(space, Grid::with_spacing(20.0, 0.02).unwrap()).unwrap();
        let runs = nelder_mead_restarts(&obj, 5, 17, 150).unwrap();
        let best: Vec<f64> = runs.iter().map(|r| r.best_ratio).collect();
        let spread = best.iter().cloned().fold(f64::MIN, f64::max) - best.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-3, "{best:?}");
    }

    #[test]
    fn two_bump_family_stays_below_bound() {
        let space =
            SearchSpace::new(SearchFamily::TwoGaussian, vec![0.1, 0.3, 0.1, 0.3], vec![3.0, 2.0, 3.0, 2.0], 1.0).unwrap();
        let obj = Objective::new(space, Grid::with_spacing(20.0, 0.02).unwrap()).unwrap();
        let r = nelder_mead(&obj, &[1.0, 1.0, 0.5, 0.8], 60).unwrap();
        assert!(r.trace.iter().filter_map(|e| e.ratio).all(|x| x <= c_thm1()));
    }

    #[test]
    fn gamma_three_halves_below_constant() {
        let space = SearchSpace::new(SearchFamily::PoschlTeller, vec![0.2, 1.0], vec![3.0, 1.0], 1.5).unwrap();
        let obj = Objective::new(space, Grid::with_spacing(20.0, 0.02).unwrap()).unwrap();
        let r = sweep(&obj, 8).unwrap();
        assert!(r.best_ratio <= ratio_r() * lt_classical(1, 1.5).unwrap());
    }

    #[test]
    fn bound_state_constraint_rejects_points() {
        let mut space = pt_space(0.5, 2.5);
        space.bound_states = Some(2);
        let obj = Objective::new(space, Grid::with_spacing(20.0, 0.02).unwrap()).unwrap();
        let r = sweep(&obj, 5).unwrap();
        assert!(r.trace.iter().filter(|e| e.ratio.is_none()).count() >= 2);
        assert!(r.best_params[0] > 1.0);
    }

    #[test]
    fn all_failed_is_search_failure() {
        let mut space = pt_space(0.2, 0.4);
        space.bound_states = Some(3);
        let obj = Objective::new(space, Grid::with_spacing(20.0, 0.05).unwrap()).unwrap();
        assert!(matches!(sweep(&obj, 3), Err(Error::SearchFailure(_))));
    }

    #[test]
    fn space_validation() {
        assert!(SearchSpace::new(SearchFamily::PoschlTeller, vec![1.0, 1.0], vec![0.5, 1.0], 1.0).is_err());
        assert!(SearchSpace::new(SearchFamily::PoschlTeller, vec![0.0, 1.0], vec![f64::INFINITY, 1.0], 1.0).is_err());
        assert!(SearchSpace::new(SearchFamily::TwoGaussian, vec![0.0; 2], vec![1.0; 2], 1.0).is_err());
    }

    #[test]
    fn trace_csv_shape() {
        let obj = Objective::new(pt_space(0.5, 0.5), grid()).unwrap();
        let csv = sweep(&obj, 2).unwrap().trace_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "s,b,ratio");
        assert_eq!(lines.len(), 2);
    }
}
