use std::time::Instant;

use serde::Serialize;

use super::certificate::{bridge_builder_certificate, CertificateLevel, CertificateReport};
use super::comparison::{build_triple, h_leaf, seminorm_comparison, ComparisonTable, LevelComparison};
use super::config::{ExperimentConfig, FamilyKind};
use super::functional::{default_times, dynamics_deviation, functional_calculus_convergence, DynamicsRow, FunctionalSeries};
use super::Verdict;
use crate::error::{invalid, Result};
use crate::group_geometry::{ball_cardinality, doubling_report, hausdorff_subgroup_distance, DoublingReport, Group, HausdorffEstimate};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

/// Ball count of the tower group ℤ(α) at radius α_d.
#[derive(Clone, Debug, Serialize)]
pub struct AlphaRow {
    pub d: usize,
    pub alpha: f64,
    pub ball: usize,
    /// α_d bounds every 𝕃_H value, so the ball is exactly the α_d-th roots.
    pub in_regime: bool,
}

/// One non-identity element of the window, as (𝕃_H, log 𝔽) with its level.
#[derive(Clone, Debug, Serialize)]
pub struct GeometryPoint {
    pub length_h: f64,
    pub log_f: f64,
    pub level: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Everything measured at one (n, R).
#[derive(Clone, Debug, Serialize)]
pub struct LevelRow {
    pub n: usize,
    pub radius: f64,
    pub hausdorff: Option<HausdorffEstimate>,
    pub seminorm: Option<LevelComparison>,
    pub functional: Vec<(String, f64)>,
    pub dynamics: Option<DynamicsRow>,
    pub certificate: Option<CertificateLevel>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub suite: String,
    pub config: ExperimentConfig,
    pub doubling: Option<DoublingReport>,
    pub alpha_rows: Vec<AlphaRow>,
    /// Window of the first radius, canonical element order.
    pub geometry: Vec<GeometryPoint>,
    /// Spectrum of the truncated Dirac operator on that window, ascending with multiplicity.
    pub spectrum: Vec<f64>,
    pub hausdorff: Vec<HausdorffEstimate>,
    pub comparison: Option<ComparisonTable>,
    pub functional: Vec<FunctionalSeries>,
    pub dynamics: Vec<DynamicsRow>,
    pub certificate: Option<CertificateReport>,
    pub rows: Vec<LevelRow>,
    pub criteria: Vec<CriterionOutcome>,
    pub timings: Vec<StageTiming>,
    pub verdict: Verdict,
    /// Set when a stage errored; the report then holds the stages completed before it.
    pub error: Option<String>,
}

impl ConvergenceReport {
    fn new(suite: &str, cfg: &ExperimentConfig) -> Self {
        ConvergenceReport {
            suite: suite.into(),
            config: cfg.clone(),
            doubling: None,
            alpha_rows: vec![],
            geometry: vec![],
            spectrum: vec![],
            hausdorff: vec![],
            comparison: None,
            functional: vec![],
            dynamics: vec![],
            certificate: None,
            rows: vec![],
            criteria: vec![],
            timings: vec![],
            verdict: Verdict::Pass,
            error: None,
        }
    }

    fn criterion(&mut self, name: &str, verdict: Verdict, detail: impl Into<String>) {
        self.criteria.push(CriterionOutcome {
            name: name.into(),
            verdict,
            detail: detail.into(),
        });
        self.verdict = self.verdict.combine(verdict);
    }

    fn assemble_rows(&mut self) {
        let mut rows = Vec::new();
        for &radius in &self.config.radii {
            for &n in &self.config.levels {
                let window = self.config.window_factor * radius;
                rows.push(LevelRow {
                    n,
                    radius,
                    hausdorff: self.hausdorff.iter().find(|h| h.n == n && h.window_radius == window).cloned(),
                    seminorm: self
                        .comparison
                        .as_ref()
                        .and_then(|t| t.levels.iter().find(|l| l.n == n && l.radius == radius).cloned()),
                    functional: self
                        .functional
                        .iter()
                        .filter(|s| s.radius == radius)
                        .filter_map(|s| s.rows.iter().find(|r| r.n == n).map(|r| (s.f_id.clone(), r.deviation)))
                        .collect(),
                    dynamics: self.dynamics.iter().find(|d| d.n == n && d.radius == radius).cloned(),
                    certificate: self
                        .certificate
                        .as_ref()
                        .and_then(|c| c.levels.iter().find(|l| l.n == n && l.radius == radius).cloned()),
                });
            }
        }
        self.rows = rows;
    }
}

type Sink<'a> = &'a mut dyn FnMut(&ConvergenceReport);

/// Runs one stage, timing it and handing the partial report to the sink.
fn stage<T>(report: &mut ConvergenceReport, sink: &mut Sink<'_>, name: &str, f: impl FnOnce(&mut ConvergenceReport) -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f(report);
    report.timings.push(StageTiming {
        stage: name.into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    if let Err(e) = &out {
        report.error = Some(format!("{name}: {e}"));
        report.verdict = Verdict::Fail;
    }
    report.assemble_rows();
    sink(report);
    out
}

fn common_stages(report: &mut ConvergenceReport, cfg: &ExperimentConfig, group: &Group, sink: &mut Sink<'_>) -> Result<()> {
    stage(report, sink, "geometry", |r| {
        let triple = build_triple(cfg, group, cfg.window_factor * cfg.radii[0])?;
        let base = group.log_base();
        r.geometry = triple
            .ball
            .elements()
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.is_identity())
            .map(|(i, g)| GeometryPoint {
                length_h: triple.lh_values()[i],
                log_f: triple.f_values()[i].ln() / base.ln(),
                level: group.level(g),
            })
            .collect();
        r.spectrum = triple.spectrum_values();
        Ok(())
    })?;

    stage(report, sink, "hausdorff", |r| {
        let mut ok = true;
        for &radius in &cfg.radii {
            for &n in &cfg.levels {
                let est = hausdorff_subgroup_distance(group, &cfg.ball_length(), h_leaf(cfg), n, cfg.window_factor * radius, cfg.budget)?;
                // the enumerated value never exceeds the global supremum
                if let Some(x) = est.exact {
                    ok &= est.enumerated <= x * (1.0 + 1e-12);
                }
                r.hausdorff.push(est);
            }
        }
        r.criterion("hausdorff", Verdict::from_bool(ok), "window distance to G_n bounded by the closed form");
        Ok(())
    })?;

    stage(report, sink, "seminorm_comparison", |r| {
        let t = seminorm_comparison(cfg)?;
        let v = t.violations();
        let checked = t.rows.len();
        r.criterion(
            "seminorm_inequalities",
            Verdict::from_bool(v == 0),
            format!("{v} violations over {checked} samples of ‖[M_H,f]‖, ‖[M_F,f]‖ ≤ L_n, ‖[M_H+F,f]‖ ≤ 2L_n, L_n ≤ L_window"),
        );
        r.comparison = Some(t);
        Ok(())
    })?;

    stage(report, sink, "functional_calculus", |r| {
        let mut ok = true;
        for preset in &cfg.functions {
            let p = *preset;
            let series = functional_calculus_convergence(cfg, p.id(), &move |x| p.eval(x))?;
            for s in &series {
                ok &= s.non_increasing;
                ok &= s.rows.iter().all(|row| !row.saturated || row.deviation == 0.0);
            }
            r.functional.extend(series);
        }
        r.criterion(
            "functional_calculus",
            Verdict::from_bool(ok),
            "deviation non-increasing in n and zero once the window lies in G_n",
        );
        Ok(())
    })?;

    stage(report, sink, "dynamics", |r| {
        let rows = dynamics_deviation(cfg, &default_times(cfg))?;
        let ok = rows.iter().all(|d| d.holds(cfg.tolerances.slack));
        let checks: usize = rows.iter().map(|d| d.lipschitz_checks).sum();
        r.criterion(
            "dynamics",
            Verdict::from_bool(ok),
            format!("{checks} Lipschitz-in-time checks; level and window dynamics agree on G_n-supported vectors"),
        );
        r.dynamics = rows;
        Ok(())
    })?;

    stage(report, sink, "bridge_builder_certificate", |r| {
        let cert = bridge_builder_certificate(cfg, cfg.eps)?;
        let top = *cfg.levels.last().expect("validated");
        let verdict = cert
            .levels
            .iter()
            .filter(|l| l.n == top)
            .map(|l| l.verdict)
            .fold(Verdict::Pass, Verdict::combine);
        r.criterion(
            "bridge_builder",
            verdict,
            format!("ε = {}, C = {}, verdict at the top level n = {top} (lower levels are reported as a sweep)", cert.eps, cert.diameter_proxy),
        );
        r.certificate = Some(cert);
        Ok(())
    })?;
    Ok(())
}

/// Solenoid suite: doubling at radii p^k, then the shared stages.
pub fn run_solenoid_suite(cfg: &ExperimentConfig, sink: &mut dyn FnMut(&ConvergenceReport)) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if cfg.family != FamilyKind::Solenoid {
        return Err(invalid("the solenoid suite needs family = solenoid"));
    }
    let group = cfg.group()?;
    let (p, d) = (cfg.p.unwrap_or(2), cfg.d.unwrap_or(1));
    let mut report = ConvergenceReport::new("solenoid", cfg);
    let mut sink: Sink<'_> = sink;
    let top = *cfg.levels.last().expect("validated");
    let res = stage(&mut report, &mut sink, "doubling", |r| {
        let radii: Vec<f64> = (0..=top).map(|k| (p as f64).powi(k as i32)).collect();
        let bound = (p as f64).powi(2 * d as i32);
        let rep = doubling_report(&group, &cfg.ball_length(), p as f64, &radii, Some(bound), cfg.budget)?;
        let ok = rep.within_bound == Some(true);
        r.criterion("doubling", Verdict::from_bool(ok), format!("max ratio {} against p^(2d) = {bound}", rep.max_ratio));
        r.doubling = Some(rep);
        Ok(())
    })
    .and_then(|_| common_stages(&mut report, cfg, &group, &mut sink));
    res.map(|_| report)
}

/// Bunce-Deddens suite: ball counts on ℤ(α) at α_d, then the shared stages on ℤ(α)×ℤ.
pub fn run_bd_suite(cfg: &ExperimentConfig, sink: &mut dyn FnMut(&ConvergenceReport)) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if cfg.family != FamilyKind::BunceDeddens {
        return Err(invalid("the Bunce-Deddens suite needs family = bunce_deddens"));
    }
    let group = cfg.group()?;
    let alpha = cfg.alpha.clone().expect("validated");
    let mut report = ConvergenceReport::new("bunce_deddens", cfg);
    let mut sink: Sink<'_> = sink;
    let res = stage(&mut report, &mut sink, "tower_balls", |r| {
        let roots = Group::roots_of_unity(&alpha)?;
        let len = cfg.ball_length();
        // largest 𝕃_H value on ℤ(α): the length of −1
        let h_sup = cfg.circle.of_turns(0.5);
        let mut ok = true;
        for (i, &a) in alpha.iter().enumerate() {
            let ball = ball_cardinality(&roots, &len, a as f64, cfg.budget)?;
            let in_regime = a as f64 >= h_sup;
            if in_regime {
                ok &= ball as u64 == a;
            }
            r.alpha_rows.push(AlphaRow {
                d: i + 1,
                alpha: a as f64,
                ball,
                in_regime,
            });
        }
        let rows: Vec<String> = r.alpha_rows.iter().map(|x| format!("B[{}] = {}", x.alpha, x.ball)).collect();
        r.criterion("tower_balls", Verdict::from_bool(ok), rows.join(", "));
        let radii: Vec<f64> = alpha.iter().map(|&a| a as f64 / 2.0).filter(|&x| x >= h_sup).collect();
        if !radii.is_empty() {
            r.doubling = Some(doubling_report(&roots, &len, 2.0, &radii, None, cfg.budget)?);
        }
        Ok(())
    })
    .and_then(|_| common_stages(&mut report, cfg, &group, &mut sink));
    res.map(|_| report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_radii_is_a_validation_error() {
        let mut cfg = ExperimentConfig::solenoid(2, 1);
        cfg.radii.clear();
        assert!(matches!(run_solenoid_suite(&cfg, &mut |_| {}), Err(crate::Error::Validation { .. })));
    }

    #[test]
    fn partial_results_reach_the_sink_on_error() {
        // window 4·16 = 64 exceeds the tower α_3 = 8, so the first shared stage errors
        let mut cfg = ExperimentConfig::bunce_deddens(&[2, 4, 8]);
        cfg.radii = vec![16.0];
        let mut seen = Vec::new();
        let res = run_bd_suite(&cfg, &mut |r| seen.push((r.timings.len(), r.error.clone())));
        assert!(res.is_err());
        let (stages, err) = seen.last().unwrap();
        assert_eq!(*stages, 2);
        assert!(err.as_deref().unwrap().starts_with("geometry"));
        assert_eq!(seen[0].0, 1);
    }
}
