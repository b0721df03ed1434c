use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::group_geometry::{enumerate_ball, hausdorff_subgroup_distance, Ball, CircleMetric, Group, VecNorm};
use crate::linalg::{vec_norm, CsrMatrix, C64};
use crate::spectral_triple::{op_norm_witness, TruncatedTriple, TruncationTag};
use crate::twisted_algebra::{self_adjoint_part, AlgebraElement, Cocycle};

/// One sampled element compared across the G_n-ball and the larger window.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub n: usize,
    pub radius: f64,
    pub f_id: String,
    /// ‖[M_{𝕃_H}, f]‖, ‖[M_𝔽, f]‖, ‖[M_{𝕃_H+𝔽}, f]‖ on the G_n-ball (attained lower values).
    pub lh_commutator: f64,
    pub f_commutator: f64,
    pub sum_commutator: f64,
    /// Certified lower value of L_n(f) and the ℓ¹-type upper value.
    pub level_lower: f64,
    pub level_upper: f64,
    pub window_lower: f64,
    pub window_upper: f64,
    /// window_lower / level_lower; None when L_n(f) vanishes.
    pub ratio: Option<f64>,
    pub inequalities_hold: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelComparison {
    pub n: usize,
    pub radius: f64,
    pub window_radius: f64,
    pub level_ball: usize,
    pub window_ball: usize,
    pub samples: usize,
    pub hausdorff: f64,
    pub diameter_proxy: f64,
    /// C·h_n, the value of ε/C attached to this level.
    pub eps_over_c: f64,
    /// 1/(1 − C·h_n) when C·h_n < 1/2.
    pub predicted_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub undefined_ratios: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct ComparisonTable {
    pub levels: Vec<LevelComparison>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn violations(&self) -> usize {
        self.levels.iter().map(|l| l.violations).sum()
    }
}

/// Eigenvectors of γ₁γ₂ on ℂ².
fn clifford_directions() -> [[C64; 2]; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [[C64::new(s, 0.0), C64::new(0.0, s)], [C64::new(s, 0.0), C64::new(0.0, -s)]]
}

fn tensor(v: &[C64], e: &[C64; 2]) -> Vec<C64> {
    v.iter().flat_map(|x| [x * e[0], x * e[1]]).collect()
}

/// Re-indexes a dim-2 vector on `sub` into `big` (zero elsewhere).
fn lift2(big: &Ball, sub: &Ball, x: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); 2 * big.len()];
    for (j, g) in sub.elements().iter().enumerate() {
        let i = big.index_of(g).expect("sub-ball inside the window");
        out[2 * i] = x[2 * j];
        out[2 * i + 1] = x[2 * j + 1];
    }
    out
}

fn attained(m: &CsrMatrix, x: &[C64]) -> f64 {
    let n = vec_norm(x);
    if n == 0.0 {
        0.0
    } else {
        vec_norm(&m.apply(x)) / n
    }
}

/// Compares one element f ∈ C_c(G_n) on the G_n-ball `level` and on `window` ⊇ level.
///
/// Every lower value is attained by an explicit vector. The Dirac lower value on the level is
/// also evaluated on v⊗e for the witnesses v of the scalar commutators, which makes the three
/// scalar inequalities hold up to rounding; lifting the Dirac witnesses into the window does
/// the same for L_n ≤ L_window.
pub fn compare_element(level: &TruncatedTriple, window: &TruncatedTriple, f: &AlgebraElement, tol: f64, rel: f64) -> ComparisonRow {
    let group = &level.ball.group;
    let fs = self_adjoint_part(group, &level.sigma, f);
    let lh = level.lh_values();
    let fv = level.f_values();
    let sum: Vec<f64> = lh.iter().zip(fv).map(|(a, b)| a + b).collect();
    let (xe, xv) = op_norm_witness(&level.multiplication_commutator(lh, &fs), tol);
    let (ye, yv) = op_norm_witness(&level.multiplication_commutator(fv, &fs), tol);
    let (se, sv) = op_norm_witness(&level.multiplication_commutator(&sum, &fs), tol);

    let c_level = level.commutator_core(&fs);
    let (ce, cv) = op_norm_witness(&c_level, tol);
    let mut witnesses = vec![cv];
    for v in [&xv, &yv, &sv] {
        for e in clifford_directions() {
            witnesses.push(tensor(v, &e));
        }
    }
    let level_lower = witnesses.iter().map(|w| attained(&c_level, w)).fold(ce.lower, f64::max);

    let c_window = window.commutator_core(&fs);
    let (we, _) = op_norm_witness(&c_window, tol);
    let window_lower = witnesses
        .iter()
        .map(|w| attained(&c_window, &lift2(&window.ball, &level.ball, w)))
        .fold(we.lower, f64::max);

    let level_upper = level.seminorm_bracket(&fs, tol).upper;
    let window_upper = window.seminorm_bracket(&fs, tol).upper;
    let slack = 1.0 + rel;
    let inequalities_hold = xe.lower <= level_lower * slack
        && ye.lower <= level_lower * slack
        && se.lower <= 2.0 * level_lower * slack
        && level_lower <= window_lower * slack;
    ComparisonRow {
        n: match level.tag {
            TruncationTag::Level(n) => n,
            TruncationTag::Window => usize::MAX,
        },
        radius: level.ball.radius,
        f_id: String::new(),
        lh_commutator: xe.lower,
        f_commutator: ye.lower,
        sum_commutator: se.lower,
        level_lower,
        level_upper,
        window_lower,
        window_upper,
        ratio: (level_lower > 0.0).then(|| window_lower / level_lower),
        inequalities_hold,
    }
}

pub(crate) fn random_level_element(group: &Group, sigma: &Cocycle, rng: &mut ChaCha8Rng, ball: &Ball, terms: usize, trace_zero: bool) -> AlgebraElement {
    let f = AlgebraElement::random(group, rng, ball.elements(), terms);
    let f = self_adjoint_part(group, sigma, &f);
    if trace_zero {
        let e = group.identity();
        let t = f.get(&e);
        f.sub(group, &AlgebraElement::new(group, [(e, t)]))
    } else {
        f
    }
}

pub(crate) fn h_leaf(cfg: &ExperimentConfig) -> (VecNorm, CircleMetric) {
    (cfg.h_norm, cfg.circle)
}

/// Dirac triple on the ball B(radius) of the configured group and lengths.
pub fn build_triple(cfg: &ExperimentConfig, group: &Group, radius: f64) -> Result<TruncatedTriple> {
    let ball = enumerate_ball(group, &cfg.ball_length(), radius, cfg.budget)?;
    TruncatedTriple::dirac(ball, cfg.h_length(), cfg.f_length(), cfg.cocycle(group)?, cfg.dim_e, TruncationTag::Window)
}

/// Distance h_n from the window ball to G_n, preferring the closed form.
pub(crate) fn level_distance(cfg: &ExperimentConfig, group: &Group, n: usize, radius: f64) -> Result<f64> {
    let est = hausdorff_subgroup_distance(group, &cfg.ball_length(), h_leaf(cfg), n, radius, cfg.budget)?;
    Ok(est.exact.unwrap_or(est.enumerated))
}

/// Inter-level seminorm comparison over every configured (n, R).
pub fn seminorm_comparison(cfg: &ExperimentConfig) -> Result<ComparisonTable> {
    cfg.validate()?;
    let group = cfg.group()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = ComparisonTable::default();
    for &radius in &cfg.radii {
        let window_radius = cfg.window_factor * radius;
        let window = build_triple(cfg, &group, window_radius)?;
        let inner = window.with_ball(window.ball.restrict_radius(radius), TruncationTag::Window);
        let c = cfg.diameter_proxy_for(&group, window_radius)?;
        for &n in &cfg.levels {
            let level = inner.level_part(n);
            let h = level_distance(cfg, &group, n, window_radius)?;
            let mut summary = LevelComparison {
                n,
                radius,
                window_radius,
                level_ball: level.len(),
                window_ball: window.len(),
                samples: cfg.samples,
                hausdorff: h,
                diameter_proxy: c,
                eps_over_c: c * h,
                predicted_ratio: (c * h < 0.5).then(|| 1.0 / (1.0 - c * h)),
                max_ratio: None,
                undefined_ratios: 0,
                violations: 0,
            };
            for k in 0..cfg.samples {
                let f = random_level_element(&group, &window.sigma, &mut rng, &level.ball, cfg.terms, cfg.trace_zero);
                let mut row = compare_element(&level, &window, &f, cfg.tolerances.norm, cfg.tolerances.compare);
                row.f_id = format!("n{n}-r{radius}-s{k}");
                match row.ratio {
                    Some(r) => summary.max_ratio = Some(summary.max_ratio.map_or(r, |m: f64| m.max(r))),
                    None => summary.undefined_ratios += 1,
                }
                if !row.inequalities_hold {
                    summary.violations += 1;
                }
                table.rows.push(row);
            }
            log::info!(
                "seminorm comparison n={n} R={radius}: max ratio {:?}, violations {}",
                summary.max_ratio,
                summary.violations
            );
            table.levels.push(summary);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convergence_lab::config::ExperimentConfig;

    fn pair(cfg: &ExperimentConfig, n: usize, r: f64) -> (TruncatedTriple, TruncatedTriple) {
        let g = cfg.group().unwrap();
        let window = build_triple(cfg, &g, 4.0 * r).unwrap();
        let level = window.with_ball(window.ball.restrict_radius(r), TruncationTag::Window).level_part(n);
        (level, window)
    }

    #[test]
    fn identity_gives_zero_and_undefined_ratio() {
        let cfg = ExperimentConfig::solenoid(2, 1);
        let (level, window) = pair(&cfg, 1, 2.0);
        let g = &level.ball.group;
        let row = compare_element(&level, &window, &AlgebraElement::delta(g.identity()), 1e-10, 1e-12);
        assert_eq!(row.level_lower, 0.0);
        assert_eq!(row.window_lower, 0.0);
        assert!(row.ratio.is_none());
        assert!(row.inequalities_hold);
    }

    #[test]
    fn deltas_in_the_level_never_violate() {
        let cfg = ExperimentConfig::solenoid(2, 1);
        for r in [1.0, 2.0, 4.0] {
            let (level, window) = pair(&cfg, 2, r);
            for g in level.ball.elements().iter().filter(|g| !g.is_identity()) {
                let row = compare_element(&level, &window, &AlgebraElement::delta(g.clone()), 1e-10, 1e-12);
                assert!(row.inequalities_hold, "{g:?} at r={r}: {row:?}");
                assert!(row.level_lower <= row.window_lower * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn sampled_table_has_no_violations() {
        let mut cfg = ExperimentConfig::solenoid(2, 1);
        cfg.samples = 12;
        cfg.radii = vec![2.0];
        let t = seminorm_comparison(&cfg).unwrap();
        assert_eq!(t.rows.len(), 24);
        assert_eq!(t.violations(), 0);
        for l in &t.levels {
            assert!(l.max_ratio.unwrap() >= 1.0 - 1e-12);
        }
    }
}
