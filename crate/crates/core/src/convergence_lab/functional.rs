use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::comparison::build_triple;
use super::config::ExperimentConfig;
use crate::error::{invalid, Result};
use crate::linalg::C64;
use crate::spectral_triple::{norm_2x2, Block, TruncatedTriple};

#[derive(Clone, Debug, Serialize)]
pub struct FunctionalRow {
    pub n: usize,
    pub deviation: f64,
    pub level_ball: usize,
    /// B(R) ⊆ G_n, where both operators coincide.
    pub saturated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionalSeries {
    pub f_id: String,
    pub radius: f64,
    pub window_ball: usize,
    pub rows: Vec<FunctionalRow>,
    pub non_increasing: bool,
    pub strictly_decreasing: bool,
}

/// ‖P_n f(D_n) P_n − f(D)‖ on ℓ²(window) ⊗ E, where D_n lives on the window ∩ G_n.
///
/// Both operators are block diagonal over the group basis, so the norm is the largest 2×2
/// block difference.
pub fn functional_deviation(window: &TruncatedTriple, n: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    let fc = |x: f64| C64::new(f(x), 0.0);
    let level = window.level_part(n);
    let fw = window.functional_calculus(&fc);
    let fl = level.functional_calculus(&fc);
    let zero: Block = [[C64::new(0.0, 0.0); 2]; 2];
    window
        .ball
        .elements()
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let inner = level.index_of(g).map(|j| fl.blocks[j]).unwrap_or(zero);
            let w = fw.blocks[i];
            let d = [[w[0][0] - inner[0][0], w[0][1] - inner[0][1]], [w[1][0] - inner[1][0], w[1][1] - inner[1][1]]];
            norm_2x2(&d)
        })
        .fold(0.0, f64::max)
}

/// Deviation series over the configured levels, one per radius (matched windows B(R)).
pub fn functional_calculus_convergence(cfg: &ExperimentConfig, f_id: &str, f: &dyn Fn(f64) -> f64) -> Result<Vec<FunctionalSeries>> {
    cfg.validate()?;
    let group = cfg.group()?;
    let mut out = Vec::new();
    for &radius in &cfg.radii {
        let window = build_triple(cfg, &group, radius)?;
        let rows: Vec<FunctionalRow> = cfg
            .levels
            .iter()
            .map(|&n| {
                let level_ball = window.ball.restrict_level(n).len();
                FunctionalRow {
                    n,
                    deviation: functional_deviation(&window, n, f),
                    level_ball,
                    saturated: level_ball == window.len(),
                }
            })
            .collect();
        let non_increasing = rows.windows(2).all(|w| w[1].deviation <= w[0].deviation);
        let strictly_decreasing = rows.windows(2).all(|w| w[1].deviation < w[0].deviation);
        out.push(FunctionalSeries {
            f_id: f_id.to_string(),
            radius,
            window_ball: window.len(),
            rows,
            non_increasing,
            strictly_decreasing,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct DynamicsRow {
    pub n: usize,
    pub radius: f64,
    pub times: usize,
    /// sup_t ‖e^{itD_n}ξ − e^{itD}ξ‖ over sampled ξ ∈ ℓ²(G_n-ball) ⊗ E with DN ≤ 1.
    pub level_deviation: f64,
    /// Largest sampled ‖(1 − P_n)ξ‖ for ξ in the window with DN ≤ 1.
    pub tail_max: f64,
    /// 1 / min{|D| on the window outside G_n}; zero once the window lies in G_n.
    pub tail_bound: f64,
    pub lipschitz_checks: usize,
    pub lipschitz_violations: usize,
    /// max(‖e^{itD}ξ − e^{isD}ξ‖ − |t − s|), for D = D_n.
    pub worst_lipschitz_excess: f64,
}

impl DynamicsRow {
    pub fn holds(&self, slack: f64) -> bool {
        self.lipschitz_violations == 0 && self.level_deviation <= slack && self.tail_max <= self.tail_bound * (1.0 + 1e-12)
    }
}

/// Random vector with DN(ξ) = ‖ξ‖ + ‖Dξ‖ ≤ 1.
pub fn sample_dn_unit<R: Rng>(triple: &TruncatedTriple, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..triple.dim()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let dn = triple.dn_norm(&v);
    let u: f64 = rng.gen_range(0.0..=1.0);
    v.into_iter().map(|x| x * (u / dn)).collect()
}

pub fn default_times(cfg: &ExperimentConfig) -> Vec<f64> {
    let tmax = 1.0 / cfg.eps;
    (0..cfg.time_points).map(|k| tmax * k as f64 / (cfg.time_points - 1) as f64).collect()
}

fn diff_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn dynamics_deviation(cfg: &ExperimentConfig, times: &[f64]) -> Result<Vec<DynamicsRow>> {
    cfg.validate()?;
    let tmax = 1.0 / cfg.eps;
    if times.is_empty() || times.iter().any(|t| !(0.0..=tmax).contains(t)) {
        return Err(invalid(format!("times must lie in [0, 1/ε] = [0, {tmax}]")));
    }
    let group = cfg.group()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xD1A_0000);
    let mut rows = Vec::new();
    for &radius in &cfg.radii {
        let window = build_triple(cfg, &group, radius)?;
        let window_ops: Vec<_> = times.iter().map(|&t| window.unitary_dynamics(t)).collect();
        for &n in &cfg.levels {
            let level = window.level_part(n);
            let level_ops: Vec<_> = times.iter().map(|&t| level.unitary_dynamics(t)).collect();

            let mut level_deviation: f64 = 0.0;
            for _ in 0..cfg.samples.max(1) {
                let xi = sample_dn_unit(&level, &mut rng);
                let lifted = window.lift_from(&level, &xi);
                for (ul, uw) in level_ops.iter().zip(&window_ops) {
                    let a = window.lift_from(&level, &ul.apply(&xi));
                    level_deviation = level_deviation.max(diff_norm(&a, &uw.apply(&lifted)));
                }
            }

            let de = window.clifford.dim_e;
            let outside: Vec<usize> = (0..window.len()).filter(|&i| level.index_of(&window.ball.elements()[i]).is_none()).collect();
            let gap = outside
                .iter()
                .map(|&i| window.lh_values()[i].hypot(window.f_values()[i]))
                .fold(f64::INFINITY, f64::min);
            let tail_bound = if outside.is_empty() { 0.0 } else { 1.0 / gap };
            let mut tail_max: f64 = 0.0;
            for _ in 0..cfg.samples.max(1) {
                let xi = sample_dn_unit(&window, &mut rng);
                let tail = outside.iter().flat_map(|&i| &xi[i * de..(i + 1) * de]).map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                tail_max = tail_max.max(tail);
            }

            let mut violations = 0;
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..cfg.dynamics_samples {
                let xi = sample_dn_unit(&level, &mut rng);
                let s = rng.gen_range(0.0..=tmax);
                let t = rng.gen_range(0.0..=tmax);
                let gap = diff_norm(&level.unitary_dynamics(t).apply(&xi), &level.unitary_dynamics(s).apply(&xi));
                let excess = gap - (t - s).abs();
                worst = worst.max(excess);
                if excess > cfg.tolerances.slack {
                    violations += 1;
                }
            }
            rows.push(DynamicsRow {
                n,
                radius,
                times: times.len(),
                level_deviation,
                tail_max,
                tail_bound,
                lipschitz_checks: cfg.dynamics_samples,
                lipschitz_violations: violations,
                worst_lipschitz_excess: worst,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convergence_lab::config::FunctionPreset;

    #[test]
    fn zero_function_and_saturation() {
        let mut cfg = ExperimentConfig::solenoid(2, 1);
        cfg.radii = vec![8.0];
        cfg.levels = vec![1, 2, 3, 4];
        let zero = functional_calculus_convergence(&cfg, "zero", &|x| FunctionPreset::Zero.eval(x)).unwrap();
        assert!(zero[0].rows.iter().all(|r| r.deviation == 0.0));
        let s = functional_calculus_convergence(&cfg, "lorentzian", &|x| FunctionPreset::Lorentzian.eval(x)).unwrap();
        let rows = &s[0].rows;
        assert!(s[0].non_increasing);
        // levels 3 and 4 already contain B(8)
        assert!(rows[2].saturated && rows[3].saturated);
        assert_eq!(rows[2].deviation, 0.0);
        assert_eq!(rows[3].deviation, 0.0);
    }

    #[test]
    fn lorentzian_regression_values() {
        // outside G_1 the smallest |D| in B(8) is at 1/4: √(1/16 + 16); outside G_2 at 1/8: √(1/64 + 64)
        let mut cfg = ExperimentConfig::solenoid(2, 1);
        cfg.radii = vec![8.0];
        cfg.levels = vec![1, 2];
        let s = functional_calculus_convergence(&cfg, "lorentzian", &|x| 1.0 / (1.0 + x * x)).unwrap();
        let want = [1.0 / (1.0 + 1.0 / 16.0 + 16.0), 1.0 / (1.0 + 1.0 / 64.0 + 64.0)];
        for (r, w) in s[0].rows.iter().zip(want) {
            assert!((r.deviation - w).abs() < 1e-15, "{} vs {}", r.deviation, w);
        }
    }

    #[test]
    fn dynamics_rows() {
        let mut cfg = ExperimentConfig::solenoid(2, 1);
        cfg.radii = vec![4.0];
        cfg.samples = 5;
        cfg.dynamics_samples = 200;
        let times = default_times(&cfg);
        assert_eq!(times[0], 0.0);
        let rows = dynamics_deviation(&cfg, &times).unwrap();
        for r in &rows {
            assert!(r.holds(1e-10), "{r:?}");
            assert_eq!(r.level_deviation, 0.0);
        }
        assert!(rows[1].tail_bound < rows[0].tail_bound);
        assert!(dynamics_deviation(&cfg, &[0.0, 100.0]).is_err());
    }
}
