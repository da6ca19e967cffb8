//! Closed-form degree and gap bounds, the lifting transform
//! `h = f - lambda sum_i (g_i - 1)^{2k} g_i` with a grid search for `k`,
//! Lojasiewicz exponent fits and the rounded hypercube
//! `p_d = 1 - 1/d - sum_i X_i^{2d}`.
//!
//! The constants `c, c0, c1, c2` are existential in the underlying theorems,
//! so every function here takes them as inputs and every report echoes them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{argument, Error, Result};
use crate::poly::Polynomial;
use crate::semialg::{grid_min, grid_min_by, GridSpec, SemialgebraicSystem, DEFAULT_FEASIBILITY_TOL};

/// Exponents above this saturate `exp` to `+inf`.
pub const EXP_SATURATION: f64 = 700.0;
pub const MAX_LIFT_DEGREE: u32 = 1000;
pub const MAX_LIFT_TERMS: f64 = 1e6;
/// Relative slack on the `f*/2` test in [`find_lifting_k`].
pub const LIFTING_SLACK: f64 = 1e-6;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundInputs {
    pub c: f64,
    pub d: u32,
    pub n: usize,
    pub norm_f: f64,
    pub f_star: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
}

impl BoundInputs {
    pub fn new(c: f64, d: u32, n: usize, norm_f: f64, f_star: f64) -> Self {
        Self {
            c,
            d,
            n,
            norm_f,
            f_star,
            k: None,
        }
    }

    pub fn with_k(mut self, k: u64) -> Self {
        self.k = Some(k);
        self
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return argument(format!("c must be positive, got {}", self.c));
        }
        if self.d < 1 {
            return argument("degree d must be at least 1");
        }
        if self.n < 1 {
            return argument("dimension n must be at least 1");
        }
        if !(self.norm_f > 0.0 && self.norm_f.is_finite()) {
            return argument(format!("norm of f must be positive, got {}", self.norm_f));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if !(self.f_star > 0.0 && self.f_star.is_finite()) {
            return argument(format!("f* must be positive, got {}", self.f_star));
        }
        Ok(())
    }

    fn d(&self) -> f64 {
        self.d as f64
    }

    fn n(&self) -> f64 {
        self.n as f64
    }

    /// `d^2 n^d ||f|| / f*`.
    pub fn inner_term(&self) -> f64 {
        self.d().powi(2) * self.n().powf(self.d()) * self.norm_f / self.f_star
    }
}

/// `c d^2 (1 + (d^2 n^d ||f|| / f*)^c)`: a level `k` at which `f` lies in the
/// preordering `T(g, k)` when `S` sits in the open unit hypercube.
pub fn schmuedgen_degree_bound(b: &BoundInputs) -> Result<f64> {
    b.validate()?;
    Ok(b.c * b.d().powi(2) * (1.0 + b.inner_term().powf(b.c)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PutinarBound {
    /// `+inf` when saturated.
    #[serde(serialize_with = "finite_or_null")]
    pub value: f64,
    /// `(d^2 n^d ||f|| / f*)^c`, the argument of `exp`.
    pub exponent: f64,
    pub saturated: bool,
}

/// `c exp((d^2 n^d ||f|| / f*)^c)`, saturating to `+inf` past `exp(700)`.
pub fn putinar_degree_bound(b: &BoundInputs) -> Result<PutinarBound> {
    b.validate()?;
    let exponent = b.inner_term().powf(b.c);
    if exponent > EXP_SATURATION {
        return Ok(PutinarBound {
            value: f64::INFINITY,
            exponent,
            saturated: true,
        });
    }
    Ok(PutinarBound {
        value: b.c * exponent.exp(),
        exponent,
        saturated: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum GapBound {
    Valid { value: f64 },
    /// `k` is at or below `c exp((2 d^2 n^d)^c)`; nothing is asserted there.
    NotApplicable {
        #[serde(serialize_with = "finite_or_null")]
        threshold: f64,
    },
}

impl GapBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            GapBound::Valid { value } => Some(*value),
            GapBound::NotApplicable { .. } => None,
        }
    }
}

/// Validity threshold `c exp((2 d^2 n^d)^c)` of [`gap_bound`].
pub fn gap_threshold(b: &BoundInputs) -> Result<f64> {
    b.validate_common()?;
    let e = (2.0 * b.d().powi(2) * b.n().powf(b.d())).powf(b.c);
    Ok(b.c * e.exp())
}

/// `f* - f_k* <= 6 d^3 n^{2d} ||f|| / (log(k/c))^{1/c}` for `k` above the
/// threshold. Does not use `f*`.
pub fn gap_bound(b: &BoundInputs) -> Result<GapBound> {
    let Some(k) = b.k else {
        return argument("gap bound needs a level k");
    };
    let threshold = gap_threshold(b)?;
    let k = k as f64;
    if !(k > threshold) {
        return Ok(GapBound::NotApplicable { threshold });
    }
    let value = 6.0 * b.d().powi(3) * b.n().powf(2.0 * b.d()) * b.norm_f
        / (k / b.c).ln().powf(1.0 / b.c);
    Ok(GapBound::Valid { value })
}

/// `h = f - lambda sum_i (g_i - 1)^{2k} g_i`, expanded.
pub fn lifting_transform(
    f: &Polynomial,
    s: &SemialgebraicSystem,
    lambda: f64,
    k: u32,
) -> Result<Polynomial> {
    let n = s.dimension();
    if f.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.dimension(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return argument(format!("lambda must be nonnegative, got {lambda}"));
    }
    if k < 1 {
        return argument("lifting needs k >= 1");
    }
    if lambda == 0.0 || s.is_empty() {
        return Ok(f.clone());
    }
    let degree = s
        .constraints()
        .iter()
        .map(|g| (2 * k as u64 + 1) * g.degree() as u64)
        .max()
        .unwrap_or(0)
        .max(f.degree() as u64);
    if degree > MAX_LIFT_DEGREE as u64 {
        return Err(Error::Capacity(format!(
            "lifted polynomial has degree {degree} (max {MAX_LIFT_DEGREE})"
        )));
    }
    let dense = dense_term_count(n, degree);
    if dense > MAX_LIFT_TERMS {
        return Err(Error::Capacity(format!(
            "lifted polynomial may have {dense:.0} terms (max {MAX_LIFT_TERMS:.0})"
        )));
    }
    let mut sum = Polynomial::zero(n);
    for g in s.constraints() {
        let shifted = g.add_constant(-1.0);
        sum = sum.add(&shifted.pow(2 * k).mul(g)?)?;
    }
    f.sub(&sum.scale(lambda))
}

fn dense_term_count(n: usize, d: u64) -> f64 {
    let k = (n as u64).min(d);
    let top = n as u64 + d;
    (0..k).fold(1.0, |acc, i| acc * (top - i) as f64 / (i + 1) as f64)
}

/// `h(x)` without expanding `h`.
pub fn lifting_value(f: &Polynomial, s: &SemialgebraicSystem, lambda: f64, k: u32, x: &[f64]) -> f64 {
    let e = 2.0 * k as f64;
    let sub: f64 = s
        .constraints()
        .iter()
        .map(|g| {
            let v = g.eval_unchecked(x);
            (v - 1.0).abs().powf(e) * v
        })
        .sum();
    f.eval_unchecked(x) - lambda * sub
}

fn require_unit_box(grid: &GridSpec, n: usize) -> Result<()> {
    grid.validate(n)?;
    if grid.bounds.iter().any(|&b| b != (-1.0, 1.0)) {
        return argument("lifting grid must cover [-1, 1]^n");
    }
    Ok(())
}

/// Grid estimate of `f*` on `S` intersected with the unit box; must be positive.
fn positive_f_star(f: &Polynomial, s: &SemialgebraicSystem, grid: &GridSpec) -> Result<f64> {
    let f_star = grid_min(f, s, grid)?.minimum_value;
    if !(f_star > 0.0) {
        return argument(format!(
            "lifting needs f* > 0 on S in [-1,1]^n, grid minimum is {f_star}"
        ));
    }
    Ok(f_star)
}

/// Checks `g_i <= 1` at every grid point of the unit box.
fn check_generators_at_most_one(s: &SemialgebraicSystem, grid: &GridSpec) -> Result<()> {
    let mut bad: Option<(usize, Vec<f64>, f64)> = None;
    grid.for_each_point(|_, x| {
        if bad.is_some() {
            return;
        }
        for (i, g) in s.constraints().iter().enumerate() {
            let v = g.eval_unchecked(x);
            if v > 1.0 + DEFAULT_FEASIBILITY_TOL {
                bad = Some((i + 1, x.to_vec(), v));
                return;
            }
        }
    });
    match bad {
        None => Ok(()),
        Some((i, x, v)) => argument(format!(
            "g{i} = {} exceeds 1 on [-1,1]^n: g{i}({x:?}) = {v}",
            s.constraints()[i - 1]
        )),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftingSearch {
    pub lambda: f64,
    /// Grid minimum of `f` on `S` in the unit box.
    pub f_star: f64,
    /// Smallest `k` with `min h >= f*/2` on the grid, if any up to `k_max`.
    pub k: Option<u32>,
    /// Grid minimum of `h` over the box for `k = 1, 2, ...` as tried.
    pub min_h: Vec<f64>,
}

/// Smallest `k <= k_max` such that the grid minimum of `h` over `[-1,1]^n`
/// is at least `f*/2` (up to a relative `1e-6`).
pub fn find_lifting_k(
    f: &Polynomial,
    s: &SemialgebraicSystem,
    lambda: f64,
    grid: &GridSpec,
    k_max: u32,
) -> Result<LiftingSearch> {
    let n = s.dimension();
    if f.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.dimension(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return argument(format!("lambda must be nonnegative, got {lambda}"));
    }
    if k_max < 1 {
        return argument("k_max must be at least 1");
    }
    require_unit_box(grid, n)?;
    check_generators_at_most_one(s, grid)?;
    let f_star = positive_f_star(f, s, grid)?;
    let target = 0.5 * f_star * (1.0 - LIFTING_SLACK);
    let everywhere = SemialgebraicSystem::unconstrained(n);
    let mut min_h = Vec::new();
    for k in 1..=k_max {
        let m = grid_min_by(|x| lifting_value(f, s, lambda, k, x), &everywhere, grid, 0.0)?.minimum_value;
        min_h.push(m);
        if m >= target {
            return Ok(LiftingSearch {
                lambda,
                f_star,
                k: Some(k),
                min_h,
            });
        }
    }
    Ok(LiftingSearch {
        lambda,
        f_star,
        k: None,
        min_h,
    })
}

/// `L = d^2 n^{d-1} ||f|| / f*`, `lambda = c1 d^2 n^{d-1} ||f|| L^{c2}` and the
/// smallest `k >= 1` with `2k + 1 >= c0 (1 + L^{c0})`.
pub fn lifting_constants(
    d: u32,
    n: usize,
    norm_f: f64,
    f_star: f64,
    c0: f64,
    c1: f64,
    c2: f64,
) -> Result<(f64, f64, u64)> {
    for (name, v) in [("c0", c0), ("c1", c1), ("c2", c2)] {
        if !(v > 0.0 && v.is_finite()) {
            return argument(format!("{name} must be positive, got {v}"));
        }
    }
    if n < 1 {
        return argument("dimension n must be at least 1");
    }
    if !(f_star > 0.0) || !(norm_f >= 0.0) {
        return argument("lifting needs f* > 0 and ||f|| >= 0");
    }
    let scale = (d as f64).powi(2) * (n as f64).powi(d as i32 - 1) * norm_f;
    let l = scale / f_star;
    let lambda = c1 * scale * l.powf(c2);
    let rhs = c0 * (1.0 + l.powf(c0));
    if !(rhs <= 1e15) {
        return Err(Error::Capacity(format!(
            "2k + 1 >= {rhs:e} needs an impractically large k"
        )));
    }
    let mut k = (((rhs - 1.0) / 2.0).ceil() as u64).max(1);
    while ((2 * k + 1) as f64) < rhs {
        k += 1;
    }
    while k > 1 && ((2 * k - 1) as f64) >= rhs {
        k -= 1;
    }
    Ok((l, lambda, k))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LiftingParameters {
    #[serde(rename = "L")]
    pub l: f64,
    pub lambda: f64,
    pub k: u64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub d: u32,
    pub n: usize,
    pub norm_f: f64,
    pub f_star: f64,
    /// Grid minimum of `h` over `[-1,1]^n` at these `lambda` and `k`.
    pub empirical_min_h: f64,
    /// Whether that minimum reaches `f*/2`.
    pub claim_holds_on_grid: bool,
}

/// `L`, `lambda` and `k` from the constants, with `f*` taken from the grid
/// oracle, plus the grid minimum of the resulting `h` for comparison.
pub fn lifting_parameters(
    f: &Polynomial,
    s: &SemialgebraicSystem,
    c0: f64,
    c1: f64,
    c2: f64,
    grid: &GridSpec,
) -> Result<LiftingParameters> {
    let n = s.dimension();
    if f.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.dimension(),
        });
    }
    require_unit_box(grid, n)?;
    let f_star = positive_f_star(f, s, grid)?;
    let d = f.degree();
    let norm_f = f.weighted_norm();
    let (l, lambda, k) = lifting_constants(d, n, norm_f, f_star, c0, c1, c2)?;
    let k32 = u32::try_from(k).unwrap_or(u32::MAX);
    let everywhere = SemialgebraicSystem::unconstrained(n);
    let empirical_min_h =
        grid_min_by(|x| lifting_value(f, s, lambda, k32, x), &everywhere, grid, 0.0)?.minimum_value;
    Ok(LiftingParameters {
        l,
        lambda,
        k,
        c0,
        c1,
        c2,
        d,
        n,
        norm_f,
        f_star,
        empirical_min_h,
        claim_holds_on_grid: empirical_min_h >= 0.5 * f_star * (1.0 - LIFTING_SLACK),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LojasiewiczFit {
    pub c2_exponent: f64,
    pub c3_scale: f64,
    /// Infeasible samples used in the fit.
    pub sample_count: usize,
    pub max_violation: f64,
    /// `dist(x, S)` is measured to the nearest feasible grid point; half a
    /// cell diagonal.
    pub dist_error_bound: f64,
    /// Slope and scale of the least-squares line before `c3` was inflated.
    pub fitted_c3: f64,
    pub envelope_points: usize,
    pub seed: u64,
}

const ENVELOPE_BINS: usize = 16;

/// Fits `dist(x, S)^{c2} <= c3 * (-min(g_i(x), 0))` on random samples of the
/// grid box outside `S`.
///
/// The slope `c2` comes from least squares on the lower envelope of
/// `log(-min g)` against `log dist`; `c3` is then raised until every sample
/// satisfies the inequality.
pub fn lojasiewicz_estimate(
    s: &SemialgebraicSystem,
    grid: &GridSpec,
    samples: usize,
    seed: u64,
) -> Result<LojasiewiczFit> {
    let n = s.dimension();
    grid.validate(n)?;
    if samples == 0 {
        return argument("need at least one sample");
    }
    let feasible = grid.feasible_points(s, DEFAULT_FEASIBILITY_TOL);
    if feasible.is_empty() {
        return Err(Error::InfeasibleAtResolution {
            points: grid.points_per_axis,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let mut x = vec![0.0; n];
    for _ in 0..samples {
        for (xi, (lo, hi)) in x.iter_mut().zip(&grid.bounds) {
            *xi = rng.random_range(*lo..=*hi);
        }
        let violation = -s.min_value_unchecked(&x).min(0.0);
        if !(violation > 0.0) {
            continue;
        }
        let dist = feasible
            .iter()
            .map(|y| y.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        if dist > 0.0 {
            pairs.push((dist, violation));
        }
    }
    if pairs.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} infeasible samples out of {samples}; S may fill the box",
            pairs.len()
        )));
    }
    let logs: Vec<(f64, f64)> = pairs.iter().map(|&(d, v)| (d.ln(), v.ln())).collect();
    let lo = logs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = logs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / ENVELOPE_BINS as f64;
    let mut envelope: Vec<Option<(f64, f64)>> = vec![None; ENVELOPE_BINS];
    for &(ld, lv) in &logs {
        let bin = if width > 0.0 {
            (((ld - lo) / width) as usize).min(ENVELOPE_BINS - 1)
        } else {
            0
        };
        if envelope[bin].is_none_or(|(_, best)| lv < best) {
            envelope[bin] = Some((ld, lv));
        }
    }
    let env: Vec<(f64, f64)> = envelope.into_iter().flatten().collect();
    if env.len() < 2 {
        return Err(Error::DegenerateFit(
            "all samples are at the same distance from S".into(),
        ));
    }
    let m = env.len() as f64;
    let mx = env.iter().map(|p| p.0).sum::<f64>() / m;
    let my = env.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = env.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = env.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if !(slope > 0.0 && slope.is_finite()) {
        return Err(Error::DegenerateFit(format!(
            "fitted exponent {slope} is not positive"
        )));
    }
    let intercept = my - slope * mx;
    // log v = c2 log dist + b  <=>  dist^{c2} = e^{-b} v
    let fitted_c3 = (-intercept).exp();
    let needed = pairs
        .iter()
        .map(|&(d, v)| d.powf(slope) / v)
        .fold(0.0, f64::max);
    let c3 = fitted_c3.max(needed * (1.0 + 1e-12));
    let max_violation = pairs
        .iter()
        .map(|&(d, v)| (d.powf(slope) - c3 * v).max(0.0))
        .fold(0.0, f64::max);
    Ok(LojasiewiczFit {
        c2_exponent: slope,
        c3_scale: c3,
        sample_count: pairs.len(),
        max_violation,
        dist_error_bound: 0.5 * grid.cell_diagonal(),
        fitted_c3,
        envelope_points: env.len(),
        seed,
    })
}

/// `p_d = 1 - 1/d - sum_i X_i^{2d}`.
pub fn rounded_hypercube(n: usize, d: u32) -> Result<Polynomial> {
    if n < 1 || d < 1 {
        return argument("rounded hypercube needs n >= 1 and d >= 1");
    }
    let mut p = Polynomial::constant(n, 1.0 - 1.0 / d as f64);
    for i in 0..n {
        p = p.sub(&Polynomial::variable(n, i).pow(2 * d))?;
    }
    Ok(p)
}

/// Margin by which feasible grid points must stay inside `(-1, 1)^n`.
pub const CONTAINMENT_MARGIN: f64 = 1e-9;

/// Smallest `d <= d_max` with `p_d > 0` at every feasible grid point.
pub fn round_hypercube_degree(
    s: &SemialgebraicSystem,
    grid: &GridSpec,
    d_max: u32,
) -> Result<Option<(u32, Polynomial)>> {
    let n = s.dimension();
    grid.validate(n)?;
    let feasible = grid.feasible_points(s, DEFAULT_FEASIBILITY_TOL);
    if feasible.is_empty() {
        return Err(Error::InfeasibleAtResolution {
            points: grid.points_per_axis,
        });
    }
    if let Some(x) = feasible
        .iter()
        .find(|x| x.iter().any(|v| v.abs() > 1.0 - CONTAINMENT_MARGIN))
    {
        return argument(format!(
            "S is not inside the open hypercube: feasible grid point {x:?}"
        ));
    }
    for d in 1..=d_max {
        let e = 2 * d as i32;
        let shift = 1.0 - 1.0 / d as f64;
        let ok = feasible
            .iter()
            .all(|x| shift - x.iter().map(|v| v.powi(e)).sum::<f64>() > 0.0);
        if ok {
            return Ok(Some((d, rounded_hypercube(n, d)?)));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub inputs: BoundInputs,
    pub schmuedgen: f64,
    pub putinar: PutinarBound,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapBound>,
}

pub fn bounds_report(b: &BoundInputs) -> Result<BoundsReport> {
    Ok(BoundsReport {
        inputs: *b,
        schmuedgen: schmuedgen_degree_bound(b)?,
        putinar: putinar_degree_bound(b)?,
        gap: b.k.map(|_| gap_bound(b)).transpose()?,
    })
}

fn finite_or_null<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> Polynomial {
        Polynomial::parse_with_dimension(s, n).unwrap()
    }

    fn sys(n: usize, gs: &[&str]) -> SemialgebraicSystem {
        SemialgebraicSystem::parse(n, gs).unwrap()
    }

    #[test]
    fn schmuedgen_examples() {
        let v = |c, d, n, nf, fs| schmuedgen_degree_bound(&BoundInputs::new(c, d, n, nf, fs)).unwrap();
        assert_eq!(v(1.0, 1, 1, 1.0, 1.0), 2.0);
        assert_eq!(v(1.0, 2, 1, 1.0, 1.0), 20.0);
        assert_eq!(v(2.0, 1, 2, 1.0, 2.0), 4.0);
        assert!(schmuedgen_degree_bound(&BoundInputs::new(0.0, 1, 1, 1.0, 1.0)).is_err());
        assert!(schmuedgen_degree_bound(&BoundInputs::new(1.0, 1, 1, 1.0, -1.0)).is_err());
        assert!(schmuedgen_degree_bound(&BoundInputs::new(1.0, 0, 1, 1.0, 1.0)).is_err());
    }

    #[test]
    fn putinar_examples() {
        let b = putinar_degree_bound(&BoundInputs::new(1.0, 1, 1, 1.0, 1.0)).unwrap();
        assert!((b.value - std::f64::consts::E).abs() < 1e-12);
        assert!(!b.saturated);
        let b = putinar_degree_bound(&BoundInputs::new(1.0, 1, 1, 1.0, 2.0)).unwrap();
        assert!((b.value - 0.5f64.exp()).abs() < 1e-12);
        let b = putinar_degree_bound(&BoundInputs::new(1.0, 10, 3, 1.0, 1.0)).unwrap();
        assert!(b.saturated && b.value.is_infinite());
    }

    #[test]
    fn gap_examples() {
        let b = BoundInputs::new(1.0, 1, 1, 1.0, 1.0);
        let g = gap_bound(&b.with_k(8)).unwrap().value().unwrap();
        assert!((g - 6.0 / 8f64.ln()).abs() < 1e-12);
        assert!((g - 2.8854).abs() < 1e-4);
        match gap_bound(&b.with_k(7)).unwrap() {
            GapBound::NotApplicable { threshold } => {
                assert!((threshold - 2f64.exp()).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
        let g = gap_bound(&BoundInputs::new(1.0, 1, 1, 2.0, 1.0).with_k(8)).unwrap();
        assert!((g.value().unwrap() - 12.0 / 8f64.ln()).abs() < 1e-12);
        assert!(gap_bound(&b).is_err());
    }

    #[test]
    fn gap_decreases_along_geometric_sweep() {
        let b = BoundInputs::new(1.0, 1, 1, 1.0, 1.0);
        let mut prev = f64::INFINITY;
        let mut k = 8u64;
        while k < 1 << 60 {
            let g = gap_bound(&b.with_k(k)).unwrap().value().unwrap();
            assert!(g < prev);
            prev = g;
            k *= 4;
        }
        assert!(prev < 0.2);
    }

    #[test]
    fn putinar_dominates_schmuedgen_on_fixture_grid() {
        for c in [1.0, 1.5, 2.0] {
            for d in 1..=3 {
                for n in 1..=3 {
                    for fs in [0.25, 0.5, 1.0] {
                        let b = BoundInputs::new(c, d, n, 1.0, fs);
                        if b.inner_term() < 1.0 {
                            continue;
                        }
                        let pb = putinar_degree_bound(&b).unwrap();
                        assert!(pb.value >= schmuedgen_degree_bound(&b).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn lifting_transform_examples() {
        let s = sys(1, &["1 - x1^2"]);
        let f = p("x1 + 2", 1);
        assert_eq!(lifting_transform(&f, &s, 0.0, 1).unwrap(), f);
        assert_eq!(
            lifting_transform(&f, &s, 1.0, 1).unwrap(),
            p("x1 + 2 - x1^4 + x1^6", 1)
        );
        assert_eq!(
            lifting_transform(&f, &SemialgebraicSystem::unconstrained(1), 1.0, 3).unwrap(),
            f
        );
        assert!(lifting_transform(&f, &s, -1.0, 1).is_err());
        assert!(lifting_transform(&f, &s, 1.0, 0).is_err());
        assert!(matches!(
            lifting_transform(&f, &s, 1.0, 400),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn lifting_value_matches_expansion() {
        let s = sys(2, &["1 - x1^2", "x2"]);
        let f = p("x1*x2 + 3", 2);
        let h = lifting_transform(&f, &s, 0.7, 2).unwrap();
        GridSpec::unit(2, 9, 0).for_each_point(|_, x| {
            let a = h.evaluate(x).unwrap();
            let b = lifting_value(&f, &s, 0.7, 2, x);
            assert!((a - b).abs() < 1e-12, "{x:?}");
        });
    }

    #[test]
    fn find_lifting_k_examples() {
        let s = sys(1, &["1 - x1^2"]);
        let f = p("x1 + 2", 1);
        let grid = GridSpec::unit(1, 1001, 0);
        let r = find_lifting_k(&f, &s, 0.1, &grid, 5).unwrap();
        assert_eq!(r.k, Some(1));
        assert!((r.f_star - 1.0).abs() < 1e-12);
        assert_eq!(find_lifting_k(&f, &s, 0.0, &grid, 5).unwrap().k, Some(1));
        let r = find_lifting_k(&f, &s, 1e6, &grid, 3).unwrap();
        assert_eq!(r.k, None);
        assert_eq!(r.min_h.len(), 3);
    }

    #[test]
    fn find_lifting_k_rejects_large_generators() {
        let s = sys(1, &["2 - x1^2"]);
        let err = find_lifting_k(&p("x1 + 2", 1), &s, 0.1, &GridSpec::unit(1, 11, 0), 3).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("g1") && msg.contains("exceeds 1"), "{msg}");
        let s = sys(1, &["1 - x1^2"]);
        assert!(find_lifting_k(&p("x1", 1), &s, 0.1, &GridSpec::unit(1, 11, 0), 3).is_err());
    }

    #[test]
    fn find_lifting_k_monotone_in_lambda() {
        let s = sys(1, &["1 - x1^2"]);
        let f = p("x1 + 2", 1);
        let grid = GridSpec::unit(1, 401, 0);
        let mut prev = 0;
        for lambda in [0.0, 0.1, 1.0, 10.0, 100.0, 1000.0] {
            let k = find_lifting_k(&f, &s, lambda, &grid, 400).unwrap().k.unwrap();
            assert!(k >= prev, "lambda {lambda}: {k} < {prev}");
            prev = k;
        }
    }

    #[test]
    fn lifting_constant_examples() {
        let (l, lambda, _) = lifting_constants(1, 1, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((l, lambda), (1.0, 1.0));
        assert_eq!(lifting_constants(1, 1, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap().2, 1);
        // L = 2 with c0 = 3: 2k + 1 >= 27
        assert_eq!(lifting_constants(1, 1, 2.0, 1.0, 3.0, 1.0, 1.0).unwrap().2, 13);
        assert!(lifting_constants(1, 1, 1.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn lifting_parameters_example() {
        // f = x + 1 on S = [0, 1]: ||f|| = 1, f* = 1
        let s = sys(1, &["x1"]);
        let lp = lifting_parameters(&p("x1 + 1", 1), &s, 1.0, 1.0, 1.0, &GridSpec::unit(1, 101, 0)).unwrap();
        assert_eq!((lp.l, lp.lambda, lp.k), (1.0, 1.0, 1));
        assert!(lp.empirical_min_h.is_finite());
    }

    #[test]
    fn lojasiewicz_linear() {
        let fit = lojasiewicz_estimate(&sys(1, &["x1"]), &GridSpec::unit(1, 101, 0), 1000, 42).unwrap();
        assert!((fit.c2_exponent - 1.0).abs() < 0.05, "{fit:?}");
        assert!((fit.c3_scale - 1.0).abs() < 0.05, "{fit:?}");
        assert_eq!(fit.max_violation, 0.0);
    }

    #[test]
    fn lojasiewicz_cubic() {
        let fit = lojasiewicz_estimate(&sys(1, &["x1^3"]), &GridSpec::unit(1, 101, 0), 1000, 42).unwrap();
        assert!((fit.c2_exponent - 3.0).abs() < 0.1, "{fit:?}");
        assert_eq!(fit.max_violation, 0.0);
    }

    #[test]
    fn lojasiewicz_disc_on_wider_box() {
        let grid = GridSpec::unit(1, 401, 0).with_box(vec![(-2.0, 2.0)]);
        let fit = lojasiewicz_estimate(&sys(1, &["1 - x1^2"]), &grid, 2000, 42).unwrap();
        assert!((fit.c2_exponent - 1.0).abs() < 0.1, "{fit:?}");
        assert_eq!(fit.max_violation, 0.0);
    }

    #[test]
    fn lojasiewicz_degenerate_and_seeded() {
        let full = sys(1, &["4 - x1^2"]);
        assert!(matches!(
            lojasiewicz_estimate(&full, &GridSpec::unit(1, 11, 0), 100, 1),
            Err(Error::DegenerateFit(_))
        ));
        let s = sys(1, &["x1"]);
        let a = lojasiewicz_estimate(&s, &GridSpec::unit(1, 51, 0), 300, 7).unwrap();
        let b = lojasiewicz_estimate(&s, &GridSpec::unit(1, 51, 0), 300, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn round_hypercube_examples() {
        let grid = GridSpec::unit(1, 101, 0);
        let (d, pd) = round_hypercube_degree(&sys(1, &["x1", "-x1"]), &grid, 10).unwrap().unwrap();
        assert_eq!(d, 2);
        assert_eq!(pd, p("0.5 - x1^4", 1));
        let (d, _) = round_hypercube_degree(&sys(1, &["0.25 - x1^2"]), &grid, 10).unwrap().unwrap();
        assert_eq!(d, 2);
        let corner = sys(2, &["x1^2 - 0.9801", "0.9801 - x1^2", "x2^2 - 0.9801", "0.9801 - x2^2"]);
        let g2 = GridSpec::unit(2, 201, 0);
        assert!(round_hypercube_degree(&corner, &g2, 5).unwrap().is_none());
        assert!(round_hypercube_degree(&corner, &g2, 400).unwrap().is_some());
        assert!(round_hypercube_degree(&sys(1, &["1 - x1^2"]), &grid, 10).is_err());
    }

    #[test]
    fn report_serializes_saturation_as_null() {
        let r = bounds_report(&BoundInputs::new(1.0, 10, 3, 1.0, 1.0)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["putinar"]["value"].is_null());
        assert_eq!(v["putinar"]["saturated"], true);
        let r = bounds_report(&BoundInputs::new(1.0, 1, 1, 1.0, 1.0).with_k(7)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["gap"]["status"], "not-applicable");
    }
}
