//! Discretized moment problems solved as finite linear programs.
//!
//! Restricting the support to a finite grid `x_1 < … < x_N` turns a moment
//! problem into `max/min Σ g(x_j) p_j` subject to `Σ h_i(x_j) p_j = m_i`,
//! `p ≥ 0`. The LP has one row per moment (at most a handful) and one column
//! per grid point, so it is solved by a revised two-phase simplex that keeps
//! the basis inverse dense and recomputes it every pivot.
//!
//! Pricing is Dantzig's rule with ties to the lowest index; after a run of
//! degenerate pivots it switches to Bland's rule, which cannot cycle.

use serde::Serialize;

use crate::error::{GmpError, Result};
use crate::gmp::{DiscreteDistribution, GmpInstance, Sense};
use crate::one_exp::OneExpInstance;
use crate::one_t::OneTInstance;
use crate::upm::UpmInstance;

const PIVOT_TOL: f64 = 1e-11;
const INFEASIBLE_TOL: f64 = 1e-9;
const DEGENERATE_STREAK: usize = 50;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
    /// Extra points added to the uniform grid, typically a solver's support.
    pub refine_around: Vec<f64>,
}

impl GridSpec {
    pub fn uniform(lo: f64, hi: f64, n_points: usize) -> Self {
        Self {
            lo,
            hi,
            n_points,
            refine_around: Vec::new(),
        }
    }

    pub fn seeded(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.refine_around.extend(points);
        self
    }

    /// Sorted, deduplicated grid points.
    pub fn points(&self) -> Vec<f64> {
        let n = self.n_points;
        let step = (self.hi - self.lo) / (n - 1) as f64;
        let mut pts: Vec<f64> = (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.hi
                } else {
                    self.lo + i as f64 * step
                }
            })
            .chain(self.refine_around.iter().copied().filter(|x| *x >= 0.0))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn validate(&self, rows: usize) -> Result<()> {
        if !(self.lo >= 0.0 && self.lo < self.hi && self.hi.is_finite()) {
            return Err(GmpError::Domain(format!("grid [{}, {}]", self.lo, self.hi)));
        }
        if self.n_points < rows + 1 {
            return Err(GmpError::Domain(format!(
                "grid needs at least {} points, got {}",
                rows + 1,
                self.n_points
            )));
        }
        if let Some(x) = self.refine_around.iter().find(|x| !x.is_finite()) {
            return Err(GmpError::NonFinite(format!("grid seed {x}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    /// Optimal objective including the instance offset (NaN unless optimal).
    pub value: f64,
    /// Basic optimal distribution, at most one point per moment row.
    pub dist: Option<DiscreteDistribution>,
    /// LP duals, one per moment row, in the sign convention of the instance.
    pub duals: Vec<f64>,
    pub status: LpStatus,
    pub grid: GridSpec,
    pub pivots: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Refinement {
    pub result: OracleResult,
    /// Oracle value per round, starting with the base grid.
    pub values: Vec<f64>,
    pub converged: bool,
}

/// Dense `m × m` inverse by Gauss–Jordan elimination with partial pivoting.
fn invert(mut a: Vec<f64>, m: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    for col in 0..m {
        let piv =
            (col..m).max_by(|&r, &s| a[r * m + col].abs().total_cmp(&a[s * m + col].abs()))?;
        if a[piv * m + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..m {
                a.swap(piv * m + k, col * m + k);
                inv.swap(piv * m + k, col * m + k);
            }
        }
        let d = a[col * m + col];
        for k in 0..m {
            a[col * m + k] /= d;
            inv[col * m + k] /= d;
        }
        for r in 0..m {
            if r != col {
                let f = a[r * m + col];
                if f != 0.0 {
                    for k in 0..m {
                        a[r * m + k] -= f * a[col * m + k];
                        inv[r * m + k] -= f * inv[col * m + k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// `max c·p` subject to `A p = b`, `p ≥ 0` with `A` stored column-major.
struct Lp {
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

struct LpSolution {
    status: LpStatus,
    basis: Vec<usize>,
    x_basic: Vec<f64>,
    y: Vec<f64>,
    pivots: usize,
}

impl Lp {
    /// Column `j`, with indices `n..n+m` the artificial identity columns.
    fn col(&self, j: usize, out: &mut [f64]) {
        if j < self.n {
            out.copy_from_slice(&self.a[j * self.m..(j + 1) * self.m]);
        } else {
            out.fill(0.0);
            out[j - self.n] = 1.0;
        }
    }

    fn basis_inverse(&self, basis: &[usize]) -> Result<Vec<f64>> {
        let m = self.m;
        let mut bm = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (k, &j) in basis.iter().enumerate() {
            self.col(j, &mut col);
            for i in 0..m {
                bm[i * m + k] = col[i];
            }
        }
        invert(bm, m).ok_or_else(|| GmpError::NonFinite("singular simplex basis".into()))
    }

    /// Runs simplex iterations from `basis` for the objective `cost` (length `n + m`).
    fn iterate(
        &self,
        basis: &mut [usize],
        cost: &[f64],
        phase_two: bool,
        pivots: &mut usize,
    ) -> Result<LpStatus> {
        let m = self.m;
        let cscale = cost.iter().fold(1.0_f64, |a, c| a.max(c.abs()));
        let dtol = 1e-12 * cscale;
        let mut degenerate = 0;
        let mut col = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        loop {
            let binv = self.basis_inverse(basis)?;
            let xb: Vec<f64> = (0..m)
                .map(|i| (0..m).map(|k| binv[i * m + k] * self.b[k]).sum())
                .collect();
            let y: Vec<f64> = (0..m)
                .map(|k| (0..m).map(|i| cost[basis[i]] * binv[i * m + k]).sum())
                .collect();

            let bland = degenerate >= DEGENERATE_STREAK;
            let mut entering: Option<(usize, f64)> = None;
            for (j, &cj) in cost.iter().enumerate().take(self.n) {
                let aj = &self.a[j * m..(j + 1) * m];
                let d = cj - aj.iter().zip(&y).map(|(a, y)| a * y).sum::<f64>();
                if d > dtol && !basis.contains(&j) {
                    match entering {
                        None => entering = Some((j, d)),
                        Some((_, best)) if !bland && d > best => entering = Some((j, d)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((j, _)) = entering else {
                return Ok(LpStatus::Optimal);
            };

            self.col(j, &mut col);
            for i in 0..m {
                alpha[i] = (0..m).map(|k| binv[i * m + k] * col[k]).sum();
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let artificial_block =
                    phase_two && basis[i] >= self.n && alpha[i].abs() > PIVOT_TOL;
                let ratio = if artificial_block {
                    0.0
                } else if alpha[i] > PIVOT_TOL {
                    xb[i].max(0.0) / alpha[i]
                } else {
                    continue;
                };
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best || (ratio == best && basis[i] < basis[r]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            degenerate = if ratio <= 1e-15 { degenerate + 1 } else { 0 };
            basis[r] = j;
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(GmpError::NonFinite(format!(
                    "simplex exceeded {MAX_PIVOTS} pivots"
                )));
            }
        }
    }

    fn solve(&self) -> Result<LpSolution> {
        let (m, n) = (self.m, self.n);
        let mut basis: Vec<usize> = (n..n + m).collect();
        let mut pivots = 0;

        let mut phase1 = vec![0.0; n + m];
        phase1[n..].fill(-1.0);
        self.iterate(&mut basis, &phase1, false, &mut pivots)?;
        let binv = self.basis_inverse(&basis)?;
        let xb: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|k| binv[i * m + k] * self.b[k]).sum())
            .collect();
        let infeas: f64 = basis
            .iter()
            .zip(&xb)
            .filter(|(j, _)| **j >= n)
            .map(|(_, x)| x.abs())
            .sum();
        if infeas > INFEASIBLE_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                basis,
                x_basic: xb,
                y: vec![f64::NAN; m],
                pivots,
            });
        }

        // pivot zero-level artificials out where a structural column allows it
        let mut col = vec![0.0; m];
        for r in 0..m {
            if basis[r] < n {
                continue;
            }
            let binv = self.basis_inverse(&basis)?;
            let swap = (0..n).filter(|j| !basis.contains(j)).find(|&j| {
                self.col(j, &mut col);
                let ar: f64 = (0..m).map(|k| binv[r * m + k] * col[k]).sum();
                ar.abs() > 1e-9
            });
            if let Some(j) = swap {
                basis[r] = j;
                pivots += 1;
            }
        }

        let mut phase2 = self.c.clone();
        phase2.extend(std::iter::repeat_n(0.0, m));
        let status = self.iterate(&mut basis, &phase2, true, &mut pivots)?;
        let binv = self.basis_inverse(&basis)?;
        let x_basic: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|k| binv[i * m + k] * self.b[k]).sum())
            .collect();
        let y: Vec<f64> = (0..m)
            .map(|k| (0..m).map(|i| phase2[basis[i]] * binv[i * m + k]).sum())
            .collect();
        Ok(LpSolution {
            status,
            basis,
            x_basic,
            y,
            pivots,
        })
    }
}

/// Solves `inst` restricted to the points of `grid`.
pub fn oracle_solve(inst: &GmpInstance, grid: &GridSpec) -> Result<OracleResult> {
    let m = inst.hs.len();
    grid.validate(m)?;
    let pts = grid.points();
    let n = pts.len();
    let sign = inst.sense.dual_sign();

    let mut a = Vec::with_capacity(n * m);
    for &x in &pts {
        for h in &inst.hs {
            a.push(h.eval(x));
        }
    }
    if let Some(bad) = a.iter().find(|v| !v.is_finite()) {
        return Err(GmpError::NonFinite(format!(
            "moment function value {bad} on the grid"
        )));
    }
    // equilibrate rows and make the right-hand side nonnegative
    let mut row_scale = vec![0.0_f64; m];
    for j in 0..n {
        for i in 0..m {
            row_scale[i] = row_scale[i].max(a[j * m + i].abs());
        }
    }
    let mut b = inst.ms.clone();
    for i in 0..m {
        let mut s = if row_scale[i] > 0.0 {
            1.0 / row_scale[i]
        } else {
            1.0
        };
        if b[i] < 0.0 {
            s = -s;
        }
        row_scale[i] = s;
        b[i] *= s;
        for j in 0..n {
            a[j * m + i] *= s;
        }
    }
    let c: Vec<f64> = pts.iter().map(|&x| sign * inst.g.eval(x)).collect();
    if let Some(bad) = c.iter().find(|v| !v.is_finite()) {
        return Err(GmpError::NonFinite(format!(
            "objective value {bad} on the grid"
        )));
    }

    let lp = Lp { m, n, a, b, c };
    let sol = lp.solve()?;
    if sol.status != LpStatus::Optimal {
        return Ok(OracleResult {
            value: f64::NAN,
            dist: None,
            duals: vec![f64::NAN; m],
            status: sol.status,
            grid: grid.clone(),
            pivots: sol.pivots,
        });
    }

    let atoms: Vec<(f64, f64)> = sol
        .basis
        .iter()
        .zip(&sol.x_basic)
        .filter(|(j, p)| **j < n && **p > 0.0)
        .map(|(j, p)| (pts[*j], *p))
        .collect();
    let mass: f64 = atoms.iter().map(|a| a.1).sum();
    let dist = DiscreteDistribution::new(atoms.iter().map(|&(x, p)| (x, p / mass)))?;
    let value = sign
        * sol
            .basis
            .iter()
            .zip(&sol.x_basic)
            .filter(|(j, _)| **j < n)
            .map(|(j, p)| lp.c[*j] * p)
            .sum::<f64>()
        + inst.offset;
    let duals = sol
        .y
        .iter()
        .zip(&row_scale)
        .map(|(y, s)| sign * y * s)
        .collect();
    Ok(OracleResult {
        value,
        dist: Some(dist),
        duals,
        status: LpStatus::Optimal,
        grid: grid.clone(),
        pivots: sol.pivots,
    })
}

/// Re-solves with the grid spacing halved each round (`n → 2n − 1`, so every
/// earlier point is kept) until successive values differ by at most
/// `target_tol` or `max_rounds` refinements have been made.
pub fn refine_until(
    inst: &GmpInstance,
    base_grid: &GridSpec,
    target_tol: f64,
    max_rounds: usize,
) -> Result<Refinement> {
    if !(target_tol > 0.0) {
        return Err(GmpError::Domain(format!("target tolerance {target_tol}")));
    }
    let mut grid = base_grid.clone();
    let mut result = oracle_solve(inst, &grid)?;
    let mut values = vec![result.value];
    let mut converged = false;
    for _ in 0..max_rounds {
        grid.n_points = 2 * grid.n_points - 1;
        result = oracle_solve(inst, &grid)?;
        let prev = values[values.len() - 1];
        values.push(result.value);
        if (result.value - prev).abs() <= target_tol {
            converged = true;
            break;
        }
    }
    Ok(Refinement {
        result,
        values,
        converged,
    })
}

/// Grid on `[0, 1.05 M1 max{t q̂/(t−1), M̂^{1/(t−1)}}]`, wide enough for either branch.
pub fn default_grid_1t(inst: &OneTInstance, n_points: usize) -> GridSpec {
    let t = inst.t;
    let reach = (t * inst.qhat() / (t - 1.0)).max(inst.anchor());
    GridSpec::uniform(0.0, 1.05 * inst.m1 * reach, n_points)
}

/// Grid on `[0, 1.5 (q̂ + 1 + ln Me)/t]`.
pub fn default_grid_1e(inst: &OneExpInstance, n_points: usize) -> GridSpec {
    let hi = (inst.qhat() + 1.0 + inst.me.ln()) * 1.5 / inst.t;
    GridSpec::uniform(0.0, hi, n_points)
}

/// Grid on `[0, 2 (v₁ bound + 2)]`, covering the default family member.
pub fn default_grid_upm(inst: &UpmInstance, n_points: usize) -> GridSpec {
    GridSpec::uniform(0.0, 2.0 * (inst.family_lower_bound() + 2.0), n_points)
}

/// Sense-adjusted reduced cost `σ(g(x) − Σ y_i h_i(x))` of a grid column.
pub fn reduced_cost(inst: &GmpInstance, duals: &[f64], x: f64) -> f64 {
    let lin: f64 = duals.iter().zip(&inst.hs).map(|(y, h)| y * h.eval(x)).sum();
    match inst.sense {
        Sense::Max => inst.g.eval(x) - lin,
        Sense::Min => lin - inst.g.eval(x),
    }
}
