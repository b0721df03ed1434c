use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};
use serde::Serialize;

use solenoid_triples::cli_io::{self, distance_table_csv, emit_plotdata, fmt_f64, CsvTable, RunManifest, OUT_ENV};
use solenoid_triples::convergence_lab::{
    build_triple, run_bd_suite, run_solenoid_suite, seminorm_comparison, ConvergenceReport, CriterionOutcome, ExperimentConfig, FamilyKind,
    Verdict,
};
use solenoid_triples::group_geometry::{doubling_report, hausdorff_subgroup_distance, Group};
use solenoid_triples::quantum_metric::{interval_example, nbar_example, ExampleReport, FiniteQcms, TunnelSpec};
use solenoid_triples::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "solenoid-triples", version, about = "Truncated spectral triples on solenoid and Bunce-Deddens groups")]
struct Cli {
    /// TOML (or .json) experiment config; family defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cardinality budget for ball enumeration.
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Operator-norm bracket tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ball-growth ratios |B(θr)| / |B(r)|.
    Doubling,
    /// Distance from the window ball to each subgroup G_n.
    Hausdorff,
    /// Spectrum of the truncated Dirac operator on B(R) for the first radius.
    Spectrum,
    /// Inter-level seminorm comparison on random self-adjoint elements.
    Seminorm,
    /// Distance table (or W₁ between two states) of points on a line.
    Kantorovich {
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        points: Vec<f64>,
        #[arg(long, value_delimiter = ',', requires = "psi")]
        phi: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', requires = "phi")]
        psi: Option<Vec<f64>>,
    },
    /// Tunnel between two point sets on a line, bridged by the nearest-point map B → A.
    Tunnel {
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        b: Vec<f64>,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// [0,1] against its dilation by n near 1.
    ExampleInterval {
        #[arg(long)]
        n: usize,
        /// Grid cells; defaults to 4n².
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// ℕ̄ against its level-n quotients.
    ExampleNbar {
        #[arg(long)]
        n: usize,
        /// Truncation of the limit space; defaults to n + 3.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        bridge_eps: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Every solenoid diagnostic plus certificates, with manifest and plot data
    SuiteSolenoid,
    /// Every Bunce-Deddens diagnostic plus certificates, with manifest and plot data
    SuiteBd,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Doubling => "doubling",
            Command::Hausdorff => "hausdorff",
            Command::Spectrum => "spectrum",
            Command::Seminorm => "seminorm",
            Command::Kantorovich { .. } => "kantorovich",
            Command::Tunnel { .. } => "tunnel",
            Command::ExampleInterval { .. } => "example-interval",
            Command::ExampleNbar { .. } => "example-nbar",
            Command::SuiteSolenoid => "suite-solenoid",
            Command::SuiteBd => "suite-bd",
        }
    }
}

struct Ctx {
    name: &'static str,
    out: PathBuf,
    format: Format,
    manifest: RunManifest,
}

impl Ctx {
    fn criterion(&mut self, name: &str, verdict: Verdict, detail: impl Into<String>) {
        self.manifest.summary.push(CriterionOutcome {
            name: name.into(),
            verdict,
            detail: detail.into(),
        });
        self.manifest.verdict = self.manifest.verdict.combine(verdict);
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<()> {
        cli_io::write_json(&self.out.join(format!("{}.json", self.name)), value)
    }

    fn csv(&self, suffix: &str, table: &CsvTable) -> Result<()> {
        let file = if suffix.is_empty() { format!("{}.csv", self.name) } else { format!("{}_{suffix}.csv", self.name) };
        table.write(&self.out.join(file))
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => cli_io::load_config(p)?,
        None if matches!(cli.command, Command::SuiteBd) => ExperimentConfig::bunce_deddens(&[2, 4, 8]),
        None => ExperimentConfig::solenoid(2, 1),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(b) = cli.budget {
        cfg.budget = b;
    }
    if let Some(t) = cli.tol {
        cfg.tolerances.norm = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn uses_config(c: &Command) -> bool {
    !matches!(c, Command::Kantorovich { .. } | Command::Tunnel { .. } | Command::ExampleInterval { .. } | Command::ExampleNbar { .. })
}

fn doubling(ctx: &mut Ctx, cfg: &ExperimentConfig) -> Result<()> {
    let group = cfg.group()?;
    let top = *cfg.levels.last().expect("validated");
    let rep = match cfg.family {
        FamilyKind::Solenoid => {
            let (p, d) = (cfg.p.unwrap_or(2) as f64, cfg.d.unwrap_or(1) as i32);
            let radii: Vec<f64> = (0..=top).map(|k| p.powi(k as i32)).collect();
            doubling_report(&group, &cfg.ball_length(), p, &radii, Some(p.powi(2 * d)), cfg.budget)?
        }
        _ => {
            let alpha = cfg.alpha.clone().unwrap_or_default();
            let roots = Group::roots_of_unity(&alpha)?;
            let h_sup = cfg.circle.of_turns(0.5);
            let radii: Vec<f64> = alpha.iter().map(|&a| a as f64 / 2.0).filter(|&r| r >= h_sup && r >= 1.0).collect();
            doubling_report(&roots, &cfg.ball_length(), 2.0, &radii, None, cfg.budget)?
        }
    };
    let verdict = rep.within_bound.map_or(Verdict::Pass, Verdict::from_bool);
    ctx.criterion("doubling", verdict, format!("max ratio {}", rep.max_ratio));
    match ctx.format {
        Format::Json => ctx.json(&rep),
        Format::Csv => {
            let mut t = CsvTable::new(&["radius", "inner", "outer", "ratio"]);
            for r in &rep.rows {
                t.push(vec![fmt_f64(r.r), r.inner.to_string(), r.outer.to_string(), fmt_f64(r.ratio)]);
            }
            ctx.csv("", &t)
        }
    }
}

fn hausdorff(ctx: &mut Ctx, cfg: &ExperimentConfig) -> Result<()> {
    let group = cfg.group()?;
    let mut rows = Vec::new();
    let mut ok = true;
    for &radius in &cfg.radii {
        for &n in &cfg.levels {
            let est = hausdorff_subgroup_distance(&group, &cfg.ball_length(), (cfg.h_norm, cfg.circle), n, radius, cfg.budget)?;
            if let Some(x) = est.exact {
                ok &= est.enumerated <= x * (1.0 + 1e-12);
            }
            rows.push(est);
        }
    }
    ctx.criterion("hausdorff", Verdict::from_bool(ok), "enumerated distance within the closed form");
    match ctx.format {
        Format::Json => ctx.json(&rows),
        Format::Csv => {
            let mut t = CsvTable::new(&["n", "window_radius", "enumerated", "exact"]);
            for e in &rows {
                t.push(vec![e.n.to_string(), fmt_f64(e.window_radius), fmt_f64(e.enumerated), e.exact.map(fmt_f64).unwrap_or_default()]);
            }
            ctx.csv("", &t)
        }
    }
}

fn spectrum(ctx: &mut Ctx, cfg: &ExperimentConfig) -> Result<()> {
    let group = cfg.group()?;
    let triple = build_triple(cfg, &group, cfg.radii[0])?;
    let spec = triple.spectrum_values();
    ctx.criterion("spectrum", Verdict::Pass, format!("{} eigenvalues on a ball of {} elements", spec.len(), triple.len()));
    match ctx.format {
        Format::Json => ctx.json(&spec),
        Format::Csv => {
            let mut t = CsvTable::new(&["index", "eigenvalue"]);
            for (i, v) in spec.iter().enumerate() {
                t.push(vec![i.to_string(), fmt_f64(*v)]);
            }
            ctx.csv("", &t)
        }
    }
}

fn seminorm(ctx: &mut Ctx, cfg: &ExperimentConfig) -> Result<()> {
    let table = seminorm_comparison(cfg)?;
    let v = table.violations();
    ctx.criterion("seminorm_inequalities", Verdict::from_bool(v == 0), format!("{v} violations over {} samples", table.rows.len()));
    match ctx.format {
        Format::Json => ctx.json(&table),
        Format::Csv => {
            let mut t = CsvTable::new(&["sample", "n", "radius", "lh_commutator", "f_commutator", "sum_commutator", "level_lower", "window_lower", "ratio", "holds"]);
            for r in &table.rows {
                t.push(vec![
                    r.f_id.clone(),
                    r.n.to_string(),
                    fmt_f64(r.radius),
                    fmt_f64(r.lh_commutator),
                    fmt_f64(r.f_commutator),
                    fmt_f64(r.sum_commutator),
                    fmt_f64(r.level_lower),
                    fmt_f64(r.window_lower),
                    r.ratio.map(fmt_f64).unwrap_or_default(),
                    r.inequalities_hold.to_string(),
                ]);
            }
            ctx.csv("", &t)
        }
    }
}

#[derive(Serialize)]
struct KantorovichOut {
    points: Vec<f64>,
    distances: Vec<Vec<f64>>,
    w1: Option<f64>,
    w1_exact: Option<String>,
}

fn kantorovich(ctx: &mut Ctx, points: &[f64], phi: Option<&[f64]>, psi: Option<&[f64]>) -> Result<()> {
    let q = FiniteQcms::line(points)?;
    let distances = q.distance_table()?;
    let (w1, w1_exact) = match (phi, psi) {
        (Some(a), Some(b)) => (Some(q.kantorovich(a, b)?), q.kantorovich_exact(a, b)?.map(|r| r.to_string())),
        _ => (None, None),
    };
    if let Some(w) = w1 {
        info!("W1 = {w}");
    }
    ctx.criterion("kantorovich", Verdict::Pass, w1.map_or("distance table".into(), |w| format!("W1 = {w}")));
    let out = KantorovichOut { points: points.to_vec(), distances, w1, w1_exact };
    match ctx.format {
        Format::Json => ctx.json(&out),
        Format::Csv => {
            let labels: Vec<String> = points.iter().map(|x| x.to_string()).collect();
            ctx.csv("", &distance_table_csv(&labels, &out.distances))?;
            if let Some(w) = out.w1 {
                let mut t = CsvTable::new(&["w1", "w1_exact"]);
                t.push(vec![fmt_f64(w), out.w1_exact.clone().unwrap_or_default()]);
                ctx.csv("w1", &t)?;
            }
            Ok(())
        }
    }
}

fn tunnel(ctx: &mut Ctx, a: &[f64], b: &[f64], eps: f64, samples: usize, seed: u64) -> Result<()> {
    let map: Vec<usize> = b
        .iter()
        .map(|y| {
            (0..a.len())
                .min_by(|&i, &j| (a[i] - y).abs().total_cmp(&(a[j] - y).abs()))
                .ok_or_else(|| Error::InvalidArgument("A has no points".into()))
        })
        .collect::<Result<_>>()?;
    let spec = TunnelSpec::from_point_map(FiniteQcms::line(a)?, FiniteQcms::line(b)?, &map, eps)?;
    let ext = spec.extent_bounds(samples, seed)?;
    ctx.criterion(
        "tunnel_extent",
        Verdict::Pass,
        format!("extent in [{}, {}] (exact lower: {})", ext.lower, ext.upper, ext.lower_is_exact),
    );
    match ctx.format {
        Format::Json => ctx.json(&ext),
        Format::Csv => {
            let mut t = CsvTable::new(&["epsilon", "lower", "upper", "lower_is_exact", "states_evaluated"]);
            t.push(vec![fmt_f64(ext.epsilon), fmt_f64(ext.lower), fmt_f64(ext.upper), ext.lower_is_exact.to_string(), ext.states_evaluated.to_string()]);
            ctx.csv("", &t)
        }
    }
}

/// Checks the stated seminorm values (within `tol`), the quotient conditions and, when
/// `extent_applies`, the extent bound.
fn example(ctx: &mut Ctx, rep: &ExampleReport, tol: f64, extent_applies: bool) -> Result<()> {
    for s in &rep.seminorm_values {
        let ok = (s.value - s.expected).abs() <= tol;
        ctx.criterion(&s.name, Verdict::from_bool(ok), format!("{} (expected {})", s.value, s.expected));
    }
    let q = rep.quotient_checks.iter().all(|c| c.holds);
    ctx.criterion("quotient_checks", Verdict::from_bool(q), format!("{} checks", rep.quotient_checks.len()));
    if extent_applies {
        ctx.criterion(
            "extent",
            Verdict::from_bool(rep.extent_upper <= rep.target_upper * (1.0 + 1e-12)),
            format!("upper {} against {}", rep.extent_upper, rep.target_upper),
        );
    }
    if let Some(bb) = &rep.bridge_builder {
        info!("bridge-builder check at ε = {}: {}", bb.eps, bb.holds);
    }
    match ctx.format {
        Format::Json => ctx.json(rep),
        Format::Csv => {
            let mut t = CsvTable::new(&["quantity", "value", "expected"]);
            for s in &rep.seminorm_values {
                t.push(vec![s.name.clone(), fmt_f64(s.value), fmt_f64(s.expected)]);
            }
            t.push(vec!["extent_lower".into(), fmt_f64(rep.extent_lower), String::new()]);
            t.push(vec!["extent_upper".into(), fmt_f64(rep.extent_upper), fmt_f64(rep.target_upper)]);
            if let Some(bb) = &rep.bridge_builder {
                t.push(vec!["bridge_builder_holds".into(), bb.holds.to_string(), String::new()]);
            }
            ctx.csv("", &t)
        }
    }
}

fn suite(ctx: &mut Ctx, cfg: &ExperimentConfig) -> Result<()> {
    let out = ctx.out.clone();
    let base = ctx.manifest.clone();
    let mut last: Option<ConvergenceReport> = None;
    let result = {
        // persist the manifest after every stage so a failure leaves the partial record
        let mut sink = |r: &ConvergenceReport| {
            let mut m = base.clone();
            m.absorb(r);
            if let Err(e) = m.write(&out) {
                error!("cannot write manifest: {e}");
            }
            if let Err(e) = emit_plotdata(r, &out) {
                error!("cannot write plot data: {e}");
            }
            last = Some(r.clone());
        };
        if ctx.name == "suite-bd" {
            run_bd_suite(cfg, &mut sink)
        } else {
            run_solenoid_suite(cfg, &mut sink)
        }
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            if let Some(partial) = &last {
                ctx.manifest.absorb(partial);
            }
            return Err(e);
        }
    };
    ctx.manifest.absorb(&report);
    match ctx.format {
        Format::Json => ctx.json(&report),
        Format::Csv => {
            let mut t = CsvTable::new(&["criterion", "verdict", "detail"]);
            for c in &report.criteria {
                t.push(vec![c.name.clone(), verdict_str(c.verdict).into(), c.detail.clone()]);
            }
            ctx.csv("criteria", &t)
        }
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Undecided => "UNDECIDED",
    }
}

fn dispatch(cli: &Cli, ctx: &mut Ctx, cfg: Option<&ExperimentConfig>) -> Result<()> {
    let seed = cli.seed.unwrap_or_else(|| ExperimentConfig::solenoid(2, 1).seed);
    let need = || cfg.ok_or_else(|| Error::InvalidArgument("no config".into()));
    match &cli.command {
        Command::Doubling => doubling(ctx, need()?),
        Command::Hausdorff => hausdorff(ctx, need()?),
        Command::Spectrum => spectrum(ctx, need()?),
        Command::Seminorm => seminorm(ctx, need()?),
        Command::SuiteSolenoid | Command::SuiteBd => suite(ctx, need()?),
        Command::Kantorovich { points, phi, psi } => kantorovich(ctx, points, phi.as_deref(), psi.as_deref()),
        Command::Tunnel { a, b, eps, samples } => tunnel(ctx, a, b, *eps, *samples, seed),
        Command::ExampleInterval { n, m, samples } => {
            let m = m.unwrap_or(4 * n * n);
            let rep = interval_example(*n, m, *samples, seed)?;
            example(ctx, &rep, 2.0 / m as f64, true)
        }
        Command::ExampleNbar { n, m, eps, bridge_eps, samples } => {
            let rep = nbar_example(*n, m.unwrap_or(n + 3), *eps, *bridge_eps, *samples, seed)?;
            let applies = 1.0 / (*n as f64 + 1.0) < eps / 2.0;
            example(ctx, &rep, 0.0, applies)
        }
    }
}

fn run(cli: &Cli) -> std::result::Result<Verdict, (Error, Option<PathBuf>)> {
    let name = cli.command.name();
    let cfg = if uses_config(&cli.command) {
        match load(cli) {
            Ok(c) => Some(c),
            Err(e) => {
                // nothing ran, but the failure is still recorded
                let out = cli_io::output_dir(cli.out.as_deref());
                let mut m = RunManifest::new(name, None);
                m.seed = cli.seed;
                m.error = Some(e.to_string());
                m.verdict = Verdict::Fail;
                let written = m.write(&out).is_ok();
                return Err((e, written.then_some(out)));
            }
        }
    } else {
        None
    };
    let out = cli_io::output_dir(
        cli.out
            .as_deref()
            .or_else(|| cfg.as_ref().and_then(|c| c.output.dir.as_deref()).map(Path::new)),
    );
    let mut manifest = RunManifest::new(name, cfg.as_ref());
    if cfg.is_none() {
        manifest.seed = cli.seed;
    }
    let mut ctx = Ctx {
        name,
        out: out.clone(),
        format: cli.format,
        manifest,
    };
    let res = dispatch(cli, &mut ctx, cfg.as_ref());
    if let Err(e) = &res {
        ctx.manifest.error.get_or_insert_with(|| e.to_string());
        ctx.manifest.verdict = Verdict::Fail;
    }
    let written = ctx.manifest.write(&out);
    if !cli.quiet {
        for c in &ctx.manifest.summary {
            println!("{:<9} {}: {}", verdict_str(c.verdict), c.name, c.detail);
        }
    }
    match (res, written) {
        (Err(e), _) => Err((e, Some(out))),
        (Ok(()), Err(e)) => Err((e, Some(out))),
        (Ok(()), Ok(path)) => {
            info!("manifest written to {}", path.display());
            Ok(ctx.manifest.verdict)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(&cli) {
        Ok(v) => {
            if !cli.quiet {
                println!("verdict: {}", verdict_str(v));
            }
            ExitCode::from(v.exit_code() as u8)
        }
        Err((e, out)) => {
            eprintln!("error: {e}");
            if let Some(dir) = out {
                eprintln!("manifest and any partial results in {}", dir.display());
            }
            ExitCode::from(1)
        }
    }
}
