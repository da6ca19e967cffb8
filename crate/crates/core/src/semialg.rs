//! Basic closed semialgebraic sets `S(g) = { x : g_1(x) >= 0, ..., g_m(x) >= 0 }`
//! and brute-force grid oracles over them.

use std::cmp::Ordering;

use crate::certificate::Certificate;
use crate::error::{argument, Error, Result};
use crate::poly::{Monomial, Polynomial};
use crate::sos::{self, Membership, MembershipMode, MembershipProblem, SosOptions};

/// Slack allowed on `g_i(x) >= 0` when testing grid points.
pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;

/// Constraint tuple `(g_1, ..., g_m)`. The unit generator `g_0 = 1` is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct SemialgebraicSystem {
    n: usize,
    constraints: Vec<Polynomial>,
}

impl SemialgebraicSystem {
    pub fn new(n: usize, constraints: Vec<Polynomial>) -> Result<Self> {
        if n == 0 {
            return argument("dimension must be at least 1");
        }
        for g in &constraints {
            if g.dimension() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: g.dimension(),
                });
            }
        }
        Ok(Self { n, constraints })
    }

    /// `S = R^n`.
    pub fn unconstrained(n: usize) -> Self {
        Self {
            n,
            constraints: Vec::new(),
        }
    }

    /// Parses constraint strings in `n` variables.
    pub fn parse(n: usize, constraints: &[&str]) -> Result<Self> {
        let gs = constraints
            .iter()
            .map(|s| Polynomial::parse_with_dimension(s, n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, gs)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn constraints(&self) -> &[Polynomial] {
        &self.constraints
    }

    /// Number of constraints `m`.
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Generator `g_i` with `g_0 = 1`.
    pub fn generator(&self, i: usize) -> Option<Polynomial> {
        if i == 0 {
            Some(Polynomial::constant(self.n, 1.0))
        } else {
            self.constraints.get(i - 1).cloned()
        }
    }

    /// `g^delta = prod_i g_i^{delta_i}` for `delta` in `{0,1}^m`.
    pub fn product(&self, delta: &[u8]) -> Result<Polynomial> {
        if delta.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: delta.len(),
            });
        }
        let mut acc = Polynomial::constant(self.n, 1.0);
        for (g, &d) in self.constraints.iter().zip(delta) {
            match d {
                0 => {}
                1 => acc = acc.mul(g)?,
                _ => return argument(format!("delta entries must be 0 or 1, got {d}")),
            }
        }
        Ok(acc)
    }

    /// `min_i g_i(x)`, or `+inf` without constraints.
    pub(crate) fn min_value_unchecked(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|g| g.eval_unchecked(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        if tol < 0.0 {
            return argument("tolerance must be nonnegative");
        }
        Ok(self.min_value_unchecked(x) >= -tol)
    }

    /// Replaces each `g_i` by `g_i(r x)`.
    pub fn rescale(&self, r: f64) -> Result<Self> {
        let gs = self
            .constraints
            .iter()
            .map(|g| g.rescale(r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n, gs)
    }
}

/// `x` lies in `S(g(r x))` exactly when `r x` lies in `S(g)`.
pub fn rescale_system(s: &SemialgebraicSystem, r: f64) -> Result<SemialgebraicSystem> {
    s.rescale(r)
}

/// A tensor grid over an axis-aligned box, with optional zoom-in rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub points_per_axis: usize,
    pub bounds: Vec<(f64, f64)>,
    pub refinement_rounds: usize,
}

impl GridSpec {
    /// Grid over `[-1, 1]^n`.
    pub fn unit(n: usize, points_per_axis: usize, refinement_rounds: usize) -> Self {
        Self {
            points_per_axis,
            bounds: vec![(-1.0, 1.0); n],
            refinement_rounds,
        }
    }

    /// 101 points per axis for `n <= 2`, 21 for `n = 3`, about `10^6`
    /// points in total beyond that; three refinement rounds.
    pub fn default_for(n: usize) -> Self {
        let points = match n {
            0..=2 => 101,
            3 => 21,
            _ => ((1e6f64).powf(1.0 / n as f64).floor() as usize).max(2),
        };
        Self::unit(n, points, 3)
    }

    pub fn with_box(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.points_per_axis < 2 {
            return argument("grid needs at least 2 points per axis");
        }
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.bounds.len(),
            });
        }
        if let Some((i, _)) = self
            .bounds
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
        {
            return argument(format!("grid box axis {} needs lo < hi", i + 1));
        }
        let total = (self.points_per_axis as f64).powi(n as i32);
        if total > 5e7 {
            return Err(Error::Capacity(format!("grid of {total:.0} points")));
        }
        Ok(())
    }

    /// Diagonal of one grid cell.
    pub fn cell_diagonal(&self) -> f64 {
        let k = (self.points_per_axis - 1) as f64;
        self.bounds
            .iter()
            .map(|(lo, hi)| ((hi - lo) / k).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn point_count(&self) -> usize {
        self.points_per_axis.pow(self.bounds.len() as u32)
    }

    /// Calls `visit(index, point)` for every grid point, first axis slowest.
    pub fn for_each_point(&self, mut visit: impl FnMut(&[usize], &[f64])) {
        let n = self.bounds.len();
        let k = self.points_per_axis;
        let steps: Vec<f64> = self
            .bounds
            .iter()
            .map(|(lo, hi)| (hi - lo) / (k - 1) as f64)
            .collect();
        let mut idx = vec![0usize; n];
        let mut x: Vec<f64> = self.bounds.iter().map(|b| b.0).collect();
        for _ in 0..self.point_count() {
            visit(&idx, &x);
            for axis in (0..n).rev() {
                idx[axis] += 1;
                if idx[axis] < k {
                    x[axis] = if idx[axis] == k - 1 {
                        self.bounds[axis].1
                    } else {
                        self.bounds[axis].0 + idx[axis] as f64 * steps[axis]
                    };
                    break;
                }
                idx[axis] = 0;
                x[axis] = self.bounds[axis].0;
            }
        }
    }

    /// All grid points of `S`, in visiting order.
    pub fn feasible_points(&self, s: &SemialgebraicSystem, tol: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        self.for_each_point(|_, x| {
            if s.min_value_unchecked(x) >= -tol {
                out.push(x.to_vec());
            }
        });
        out
    }
}

/// Best grid estimate of `f* = min { f(x) : x in S }`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimizationResult {
    pub minimum_value: f64,
    pub argmin: Vec<f64>,
    /// Feasible points evaluated over all rounds.
    pub feasible_count: usize,
}

fn index_order(a: &[usize], b: &[usize]) -> Ordering {
    let ma = Monomial::new(a.iter().map(|&v| v as u32).collect());
    let mb = Monomial::new(b.iter().map(|&v| v as u32).collect());
    ma.cmp(&mb)
}

/// Exhaustive grid search for the minimum of `f` over `S` intersected with the
/// grid box. Each refinement round re-grids a box of width `2/points` times
/// the previous width around the incumbent. Ties go to the smallest grid index
/// in graded order, so the result never depends on visiting order.
pub fn grid_min(
    f: &Polynomial,
    s: &SemialgebraicSystem,
    grid: &GridSpec,
) -> Result<MinimizationResult> {
    grid_min_with_tol(f, s, grid, DEFAULT_FEASIBILITY_TOL)
}

pub fn grid_min_with_tol(
    f: &Polynomial,
    s: &SemialgebraicSystem,
    grid: &GridSpec,
    tol: f64,
) -> Result<MinimizationResult> {
    let n = s.dimension();
    if f.dimension() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.dimension(),
        });
    }
    grid_min_by(|x| f.eval_unchecked(x), s, grid, tol)
}

/// [`grid_min_with_tol`] for any function evaluated pointwise.
pub(crate) fn grid_min_by(
    eval: impl Fn(&[f64]) -> f64,
    s: &SemialgebraicSystem,
    grid: &GridSpec,
    tol: f64,
) -> Result<MinimizationResult> {
    grid.validate(s.dimension())?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible_count = 0;
    let mut current = grid.clone();
    for round in 0..=grid.refinement_rounds {
        let mut round_best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
        current.for_each_point(|idx, x| {
            if s.min_value_unchecked(x) < -tol {
                return;
            }
            feasible_count += 1;
            let v = eval(x);
            let better = match &round_best {
                None => true,
                Some((bv, bidx, _)) => {
                    v < *bv || (v == *bv && index_order(idx, bidx) == Ordering::Less)
                }
            };
            if better {
                round_best = Some((v, idx.to_vec(), x.to_vec()));
            }
        });
        if let Some((v, _, x)) = round_best {
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, x));
            }
        }
        let Some((_, center)) = &best else {
            break;
        };
        if round == grid.refinement_rounds {
            break;
        }
        let factor = 2.0 / grid.points_per_axis as f64;
        current.bounds = current
            .bounds
            .iter()
            .zip(&grid.bounds)
            .zip(center)
            .map(|(((lo, hi), (glo, ghi)), &c)| {
                let half = 0.5 * (hi - lo) * factor;
                ((c - half).max(*glo), (c + half).min(*ghi))
            })
            .collect();
        if current.bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            break;
        }
    }
    match best {
        Some((minimum_value, argmin)) => Ok(MinimizationResult {
            minimum_value,
            argmin,
            feasible_count,
        }),
        None => Err(Error::InfeasibleAtResolution {
            points: grid.points_per_axis,
        }),
    }
}

/// Searches for `N - |x|^2` in the truncated quadratic module `M(g, k)`.
///
/// `Ok(Some(_))` is a verified proof that `M(g)` is archimedean. `Ok(None)`
/// only means nothing was found at level `k`.
pub fn archimedean_witness(
    s: &SemialgebraicSystem,
    big_n: f64,
    k: u32,
    opts: &SosOptions,
) -> Result<Option<Certificate>> {
    if k < 2 {
        return argument("archimedean search needs level k >= 2");
    }
    if !(big_n > 0.0) {
        return argument("N must be positive");
    }
    let n = s.dimension();
    let mut target = Polynomial::constant(n, big_n);
    for i in 0..n {
        target = target.sub(&Polynomial::variable(n, i).pow(2))?;
    }
    let problem = MembershipProblem {
        target,
        system: s.clone(),
        level: k,
        mode: MembershipMode::QuadraticModule,
    };
    match sos::module_membership(&problem, opts)? {
        Membership::Found(c) => Ok(Some(c)),
        Membership::NotFound(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(n: usize, gs: &[&str]) -> SemialgebraicSystem {
        SemialgebraicSystem::parse(n, gs).unwrap()
    }

    #[test]
    fn contains_examples() {
        let s = sys(1, &["1 - x1^2"]);
        assert!(s.contains(&[0.0], 0.0).unwrap());
        assert!(!s.contains(&[2.0], 0.0).unwrap());
        let point = sys(1, &["x1", "-x1"]);
        assert!(point.contains(&[0.0], 0.0).unwrap());
        assert!(s.contains(&[0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn grid_min_examples() {
        let s = sys(1, &["1 - x1^2"]);
        let g = GridSpec::unit(1, 101, 0);
        let r = grid_min(&Polynomial::parse("x1^2").unwrap(), &s, &g).unwrap();
        assert_eq!(r.minimum_value, 0.0);
        assert_eq!(r.argmin, vec![0.0]);
        let r = grid_min(&Polynomial::parse("x1").unwrap(), &s, &g).unwrap();
        assert_eq!(r.minimum_value, -1.0);
        assert_eq!(r.argmin, vec![-1.0]);

        let s2 = sys(2, &["1 - x1^2", "1 - x2^2"]);
        let r = grid_min(
            &Polynomial::parse("x1 + x2 + 2").unwrap(),
            &s2,
            &GridSpec::unit(2, 51, 0),
        )
        .unwrap();
        assert_eq!(r.minimum_value, 0.0);
        assert_eq!(r.argmin, vec![-1.0, -1.0]);
        assert_eq!(r.feasible_count, 51 * 51);
    }

    #[test]
    fn grid_points_hit_box_ends_exactly() {
        let g = GridSpec::unit(1, 101, 0);
        let mut xs = Vec::new();
        g.for_each_point(|_, x| xs.push(x[0]));
        assert_eq!(xs.len(), 101);
        assert_eq!(xs[0], -1.0);
        assert_eq!(xs[50], 0.0);
        assert_eq!(xs[100], 1.0);
    }

    #[test]
    fn infeasible_at_resolution() {
        // S = {0.005} falls between grid points
        let s = sys(1, &["x1 - 0.005", "0.005 - x1"]);
        let r = grid_min(&Polynomial::parse("x1").unwrap(), &s, &GridSpec::unit(1, 101, 2));
        assert!(matches!(r, Err(Error::InfeasibleAtResolution { points: 101 })));
    }

    #[test]
    fn ties_prefer_smallest_graded_index() {
        // f = x1^2 x2^2 vanishes on both axes; the first minimizer in graded
        // index order is index (5, 0), i.e. the point (0, -1)
        let s = SemialgebraicSystem::unconstrained(2);
        let r = grid_min(
            &Polynomial::parse("x1^2*x2^2").unwrap(),
            &s,
            &GridSpec::unit(2, 11, 0),
        )
        .unwrap();
        assert_eq!(r.minimum_value, 0.0);
        assert_eq!(r.argmin, vec![0.0, -1.0]);
    }

    #[test]
    fn refinement_improves_offgrid_minimum() {
        let f = Polynomial::parse("x1^2 - 0.6*x1").unwrap();
        let s = SemialgebraicSystem::unconstrained(1);
        let coarse = grid_min(&f, &s, &GridSpec::unit(1, 6, 0)).unwrap();
        let fine = grid_min(&f, &s, &GridSpec::unit(1, 6, 4)).unwrap();
        assert!(fine.minimum_value <= coarse.minimum_value);
        assert!((fine.minimum_value + 0.09).abs() < 1e-4);
    }

    #[test]
    fn rescale_examples() {
        let s = sys(1, &["1 - x1^2"]);
        assert_eq!(rescale_system(&s, 1.0).unwrap(), s);
        assert_eq!(rescale_system(&s, 2.0).unwrap(), sys(1, &["1 - 4*x1^2"]));
        let s4 = rescale_system(&sys(1, &["4 - x1^2"]), 4.0).unwrap();
        assert_eq!(s4, sys(1, &["4 - 16*x1^2"]));
        assert!(s4.contains(&[0.5], 0.0).unwrap());
        assert!(!s4.contains(&[0.51], 0.0).unwrap());
        assert!(rescale_system(&s, 0.0).is_err());
    }

    #[test]
    fn delta_products() {
        let s = sys(2, &["x1", "x2"]);
        assert_eq!(s.product(&[1, 1]).unwrap(), Polynomial::parse("x1*x2").unwrap());
        assert_eq!(s.product(&[0, 0]).unwrap(), Polynomial::constant(2, 1.0));
        assert!(s.product(&[2, 0]).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::unit(1, 1, 0).validate(1).is_err());
        assert!(GridSpec::unit(1, 5, 0).validate(2).is_err());
        assert!(GridSpec::unit(1, 5, 0)
            .with_box(vec![(1.0, 1.0)])
            .validate(1)
            .is_err());
        assert_eq!(GridSpec::default_for(3).points_per_axis, 21);
        assert_eq!(GridSpec::default_for(2).points_per_axis, 101);
    }
}
