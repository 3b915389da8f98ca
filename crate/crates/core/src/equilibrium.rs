//! Pure-strategy equilibria of the contest game.
//!
//! Contestant `i` values the prize at `v_i`, pays its effort at unit cost
//! and earns `v_i p_i(x) - x_i`. Effort above `v_i` is dominated, so every
//! search runs over `[0, v_i]`. The payoff is handled without derivatives at
//! zero effort, where `r x^(r-1)` blows up for `r < 1`.

use serde::Serialize;

use crate::error::{CsfError, Result};
use crate::impact::{Family, ImpactSpec};

/// The contest game over a CSF family.
#[derive(Clone, Debug)]
pub struct ContestGame {
    spec: ImpactSpec,
    v: Vec<f64>,
}

impl ContestGame {
    pub fn new(spec: ImpactSpec, v: Vec<f64>) -> Result<Self> {
        spec.check_arity(v.len())?;
        if let Some((j, bad)) = v.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(CsfError::InvalidParameter(format!(
                "prize value v[{j}] = {bad} must be positive"
            )));
        }
        Ok(ContestGame { spec, v })
    }

    pub fn spec(&self) -> &ImpactSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    fn others(&self, i: usize, x: &[f64]) -> Result<f64> {
        (0..self.n())
            .filter(|&j| j != i)
            .map(|j| self.spec.impact_f64(j, x[j]))
            .sum()
    }

    /// `v_i p_i - y` with the rest of the impact `rest`. When nobody has any
    /// impact the payoff is its limit as `y` falls to zero: the whole prize.
    fn payoff_given(&self, i: usize, y: f64, rest: f64) -> Result<f64> {
        let own = self.spec.impact_f64(i, y)?;
        let total = own + rest;
        if total > 0.0 {
            Ok(self.v[i] * own / total - y)
        } else {
            Ok(self.v[i])
        }
    }

    /// Payoff of contestant `i` at profile `x`.
    pub fn payoff(&self, i: usize, x: &[f64]) -> Result<f64> {
        if x.len() != self.n() {
            return Err(CsfError::LengthMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        self.payoff_given(i, x[i], self.others(i, x)?)
    }

    /// `d/dy` of the payoff for `y > 0`, analytic for parametric families.
    fn slope(&self, i: usize, y: f64, rest: f64) -> Result<f64> {
        let own = self.spec.impact_f64(i, y)?;
        let df = match (self.spec.params(i), self.spec.r()) {
            (Some((a, _)), Some(r)) => a * r * y.powf(r - 1.0),
            _ => {
                let h = 1e-6 * y.max(1e-3);
                let lo = (y - h).max(0.0);
                (self.spec.impact_f64(i, y + h)? - self.spec.impact_f64(i, lo)?) / (y + h - lo)
            }
        };
        let total = own + rest;
        Ok(self.v[i] * df * rest / (total * total) - 1.0)
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const COARSE_UNIFORM: usize = 256;
const COARSE_LOG: usize = 64;

/// Payoff-maximizing effort of contestant `i` against the other entries of
/// `x` (the entry `x[i]` is ignored).
///
/// A coarse scan of `[0, v_i]` picks a bracket, golden-section search
/// narrows it, a bisection on the sign of the slope polishes an interior
/// optimum, and the two endpoints are audited last. Payoffs equal to within
/// `1e-12` resolve toward the smaller effort.
pub fn best_response(game: &ContestGame, i: usize, x: &[f64]) -> Result<f64> {
    if i >= game.n() {
        return Err(CsfError::IndexOutOfRange {
            index: i,
            n: game.n(),
        });
    }
    if x.len() != game.n() {
        return Err(CsfError::LengthMismatch {
            expected: game.n(),
            got: x.len(),
        });
    }
    let hi = game.v[i];
    let rest = game.others(i, x)?;
    let u = |y: f64| game.payoff_given(i, y, rest);

    let mut grid: Vec<f64> = (0..=COARSE_UNIFORM)
        .map(|k| hi * k as f64 / COARSE_UNIFORM as f64)
        .collect();
    grid.extend((0..COARSE_LOG).map(|k| hi * 10f64.powf(-12.0 + 12.0 * k as f64 / COARSE_LOG as f64)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|&y| u(y)).collect::<Result<_>>()?;
    let mut best = 0;
    for k in 1..grid.len() {
        if values[k] > values[best] {
            best = k;
        }
    }

    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let (mut c, mut d) = (b - GOLDEN * (b - a), a + GOLDEN * (b - a));
    let (mut uc, mut ud) = (u(c)?, u(d)?);
    for _ in 0..200 {
        if b - a <= 1e-13 * hi.max(1.0) {
            break;
        }
        if uc >= ud {
            b = d;
            d = c;
            ud = uc;
            c = b - GOLDEN * (b - a);
            uc = u(c)?;
        } else {
            a = c;
            c = d;
            uc = ud;
            d = a + GOLDEN * (b - a);
            ud = u(d)?;
        }
    }
    let mut interior = 0.5 * (a + b);

    // Widen to the coarse neighbours and bisect on the slope if it changes sign.
    let (mut lo, mut up) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    if lo == 0.0 {
        lo = up * 1e-15;
    }
    if up > lo && game.slope(i, lo, rest)? > 0.0 && game.slope(i, up, rest)? < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if mid <= lo || mid >= up {
                break;
            }
            if game.slope(i, mid, rest)? > 0.0 {
                lo = mid;
            } else {
                up = mid;
            }
        }
        let polished = 0.5 * (lo + up);
        if u(polished)? >= u(interior)? {
            interior = polished;
        }
    }

    let mut choice = 0.0;
    let mut value = u(0.0)?;
    for y in [grid[best], interior, hi] {
        let uy = u(y)?;
        let tie = 1e-12 * value.abs().max(uy.abs()).max(1.0);
        if uy > value + tie || (uy >= value - tie && y < choice) {
            choice = y;
            value = uy;
        }
    }
    Ok(choice)
}

/// Settings for [`solve_nash`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Weight on the new best response in each update.
    pub damping: f64,
    /// Smaller weights tried in order, each with a fresh iteration budget,
    /// when `damping` does not settle. Strongly asymmetric games cycle at 0.5.
    pub fallback_damping: Vec<f64>,
    pub max_iterations: usize,
    /// Stop once no effort moves by more than this.
    pub tolerance: f64,
    /// Audit grid size per contestant.
    pub audit_points: usize,
    /// Largest payoff gain from deviating that still counts as verified.
    pub audit_tolerance: f64,
    /// Starting efforts; `v_i / 2` when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            damping: 0.5,
            fallback_damping: vec![0.25, 0.1, 0.02],
            max_iterations: 10_000,
            tolerance: 1e-8,
            audit_points: 1000,
            audit_tolerance: 1e-6,
            start: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    /// Iteration settled and no contestant gains on the audit grid.
    Converged,
    /// Iteration settled on a point that fails the audit.
    NotVerified,
    /// The iteration limit was reached; the result holds the last iterate.
    NoConvergence,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub x_star: Vec<f64>,
    pub payoffs: Vec<f64>,
    pub status: SolveStatus,
    pub converged: bool,
    pub verified: bool,
    /// Iterations over all attempts.
    pub iterations: usize,
    /// Damping of the last attempt.
    pub damping: f64,
    /// Largest effort change in the final iteration.
    pub last_change: f64,
    /// Largest payoff gain any contestant finds on the audit grid.
    pub max_gain: f64,
    /// `x_i = 0`.
    pub boundary_flags: Vec<bool>,
    /// Set whenever `r > 1`, where pure equilibria need not exist.
    pub existence_warning: bool,
}

/// Largest gain from a unilateral deviation to a point of the audit grid.
pub fn audit(game: &ContestGame, x: &[f64], points: usize) -> Result<f64> {
    let points = points.max(2);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..game.n() {
        let rest = game.others(i, x)?;
        let current = game.payoff_given(i, x[i], rest)?;
        for k in 0..points {
            let y = game.v[i] * k as f64 / (points - 1) as f64;
            worst = worst.max(game.payoff_given(i, y, rest)? - current);
        }
    }
    Ok(worst.max(0.0))
}

fn jacobi(game: &ContestGame, x: &[f64]) -> Result<Vec<f64>> {
    (0..game.n()).map(|i| best_response(game, i, x)).collect()
}

struct Attempt {
    x: Vec<f64>,
    converged: bool,
    iterations: usize,
    last_change: f64,
}

fn iterate(game: &ContestGame, config: &SolverConfig, start: &[f64], damping: f64) -> Result<Attempt> {
    let mut x = start.to_vec();
    let mut iterations = 0;
    let mut last_change = f64::INFINITY;
    while iterations < config.max_iterations {
        iterations += 1;
        let br = jacobi(game, &x)?;
        last_change = 0.0;
        for (xi, bi) in x.iter_mut().zip(&br) {
            let next = *xi + damping * (bi - *xi);
            last_change = last_change.max((next - *xi).abs());
            *xi = next;
        }
        if last_change < config.tolerance {
            return Ok(Attempt {
                x,
                converged: true,
                iterations,
                last_change,
            });
        }
    }
    Ok(Attempt {
        x,
        converged: false,
        iterations,
        last_change,
    })
}

/// Damped simultaneous best-response iteration, followed by one undamped
/// step and an audit of the result. If the iteration does not settle, it
/// restarts from the same point with each of `config.fallback_damping`.
pub fn solve_nash(game: &ContestGame, config: &SolverConfig) -> Result<EquilibriumResult> {
    let schedule: Vec<f64> = std::iter::once(config.damping)
        .chain(config.fallback_damping.iter().copied())
        .collect();
    if schedule.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) {
        return Err(CsfError::InvalidParameter("damping must lie in (0, 1]".into()));
    }
    let start = match &config.start {
        Some(s) if s.len() != game.n() => {
            return Err(CsfError::LengthMismatch {
                expected: game.n(),
                got: s.len(),
            })
        }
        Some(s) if s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) => {
            return Err(CsfError::InvalidProfile(
                "start efforts must be non-negative".into(),
            ))
        }
        Some(s) => s.clone(),
        None => game.v.iter().map(|v| v / 2.0).collect(),
    };
    let mut iterations = 0;
    let mut damping = config.damping;
    let mut attempt = None;
    for &w in &schedule {
        let run = iterate(game, config, &start, w)?;
        iterations += run.iterations;
        damping = w;
        let settled = run.converged;
        attempt = Some(run);
        if settled {
            break;
        }
    }
    let Attempt {
        mut x,
        converged,
        last_change,
        ..
    } = attempt.expect("the schedule is never empty");
    if converged {
        x = jacobi(game, &x)?;
    }
    let max_gain = audit(game, &x, config.audit_points)?;
    let verified = max_gain <= config.audit_tolerance;
    let status = match (converged, verified) {
        (false, _) => SolveStatus::NoConvergence,
        (true, true) => SolveStatus::Converged,
        (true, false) => SolveStatus::NotVerified,
    };
    let payoffs = (0..game.n()).map(|i| game.payoff(i, &x)).collect::<Result<_>>()?;
    Ok(EquilibriumResult {
        boundary_flags: x.iter().map(|v| *v == 0.0).collect(),
        existence_warning: game.spec.r().is_some_and(|r| r > 1.0),
        x_star: x,
        payoffs,
        status,
        converged,
        verified,
        iterations,
        damping,
        last_change,
        max_gain,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticRow {
    pub b: f64,
    pub x_star: Vec<f64>,
    pub total: f64,
    pub status: SolveStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparativeStatic {
    pub n: usize,
    pub r: f64,
    pub v: f64,
    pub rows: Vec<StaticRow>,
    /// Total effort never rises along the grid (slack `1e-6`).
    pub monotone: bool,
    /// Every row converged and passed the audit.
    pub all_verified: bool,
}

/// Equilibrium total effort of the symmetric luck contest `f = b + x^r` as
/// the common head start `b` moves over `b_grid`.
pub fn comparative_static_b(
    n: usize,
    r: f64,
    v: f64,
    b_grid: &[f64],
    config: &SolverConfig,
) -> Result<ComparativeStatic> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(CsfError::InvalidParameter(format!(
            "comparative statics need 0 < r <= 1, got {r}"
        )));
    }
    let rows = b_grid
        .iter()
        .map(|&b| {
            let game = ContestGame::new(ImpactSpec::symmetric_luck(b, r)?, vec![v; n])?;
            let res = solve_nash(&game, config)?;
            Ok(StaticRow {
                b,
                total: res.x_star.iter().sum(),
                x_star: res.x_star,
                status: res.status,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| w[1].total <= w[0].total + 1e-6);
    let all_verified = rows.iter().all(|r| r.status == SolveStatus::Converged);
    Ok(ComparativeStatic {
        n,
        r,
        v,
        rows,
        monotone,
        all_verified,
    })
}

/// `true` for the families where every contestant shares one impact.
pub fn is_symmetric(spec: &ImpactSpec) -> bool {
    match spec.family() {
        Family::SymmetricLuck { .. } | Family::Ratio => true,
        Family::PowerPlusConstant { a, b, .. } => {
            a.windows(2).all(|w| w[0] == w[1]) && b.windows(2).all(|w| w[0] == w[1])
        }
        Family::Linear { b } => b.windows(2).all(|w| w[0] == w[1]),
        Family::Tullock { a, .. } => a.windows(2).all(|w| w[0] == w[1]),
        Family::Custom(c) => c.is_shared(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tullock2(r: f64) -> ContestGame {
        ContestGame::new(ImpactSpec::tullock(vec![1.0, 1.0], r).unwrap(), vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn best_response_examples() {
        let g = tullock2(1.0);
        assert_abs_diff_eq!(best_response(&g, 0, &[0.0, 0.25]).unwrap(), 0.25, epsilon = 1e-8);
        assert_eq!(best_response(&g, 0, &[0.0, 0.0]).unwrap(), 0.0);
        let luck = ContestGame::new(ImpactSpec::symmetric_luck(0.1, 1.0).unwrap(), vec![1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(
            best_response(&luck, 1, &[0.15, 0.0]).unwrap(),
            0.15,
            epsilon = 1e-8
        );
    }

    #[test]
    fn small_r_best_response_is_interior() {
        let g = tullock2(0.3);
        let y = best_response(&g, 0, &[0.0, 0.2]).unwrap();
        assert!(y > 0.0 && y < 1.0);
        let u = |z: f64| g.payoff(0, &[z, 0.2]).unwrap();
        for k in 0..=1000 {
            assert!(u(k as f64 / 1000.0) <= u(y) + 1e-9);
        }
    }

    #[test]
    fn tullock_equilibrium() {
        let res = solve_nash(&tullock2(1.0), &SolverConfig::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Converged);
        assert_abs_diff_eq!(res.x_star[0], 0.25, epsilon = 1e-7);
        assert_abs_diff_eq!(res.x_star[1], 0.25, epsilon = 1e-7);
        assert!(!res.existence_warning);
    }

    #[test]
    fn corner_equilibrium_with_large_head_start() {
        let g = ContestGame::new(ImpactSpec::symmetric_luck(0.3, 1.0).unwrap(), vec![1.0, 1.0]).unwrap();
        let res = solve_nash(&g, &SolverConfig::default()).unwrap();
        assert_eq!(res.x_star, vec![0.0, 0.0]);
        assert_eq!(res.boundary_flags, vec![true, true]);
        assert!(res.verified);
    }

    #[test]
    fn steep_tullock_is_flagged() {
        let res = solve_nash(&tullock2(2.0), &SolverConfig::default()).unwrap();
        assert!(res.existence_warning);
    }

    #[test]
    fn head_starts_crowd_out_effort() {
        let table =
            comparative_static_b(2, 1.0, 1.0, &[0.0, 0.1, 0.2, 0.3], &SolverConfig::default()).unwrap();
        let totals: Vec<f64> = table.rows.iter().map(|r| r.total).collect();
        for (got, want) in totals.iter().zip([0.5, 0.3, 0.1, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-6);
        }
        assert!(table.monotone && table.all_verified);
        assert!(comparative_static_b(2, 2.0, 1.0, &[0.0], &SolverConfig::default()).is_err());
    }

    #[test]
    fn rejects_bad_games() {
        let spec = ImpactSpec::tullock(vec![1.0, 1.0], 1.0).unwrap();
        assert!(ContestGame::new(spec.clone(), vec![1.0, 0.0]).is_err());
        assert!(ContestGame::new(spec, vec![1.0, 1.0, 1.0]).is_err());
    }
}
