//! Configuration loading, CSV/JSON persistence, run manifests and plot series.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::convergence_lab::{ConvergenceReport, CriterionOutcome, ExperimentConfig, StageTiming, Verdict};
use crate::error::{Error, Result};

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "SOLENOID_TRIPLES_OUT";
pub const DEFAULT_OUT: &str = "out";

/// Full precision (17 significant digits) so that baselines compare bit for bit.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let upto = &text[..offset.min(text.len())];
    let line = upto.matches('\n').count() + 1;
    let col = upto.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

pub fn parse_config_toml(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        Error::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config_json(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a TOML config, or JSON when the extension is `.json`; defaults are filled and the
/// result validated.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => parse_config_json(&text),
        _ => parse_config_toml(&text),
    }
}

pub fn config_to_toml(cfg: &ExperimentConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::InvalidArgument(format!("cannot serialize config: {e}")))
}

/// `--out`, else the environment override, else `./out`.
pub fn output_dir(cli: Option<&Path>) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

/// A CSV table with a header row; comma separated, LF terminated, UTF-8.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Distance matrix with a label column.
pub fn distance_table_csv(labels: &[String], table: &[Vec<f64>]) -> CsvTable {
    let mut header = vec!["point".to_string()];
    header.extend(labels.iter().cloned());
    let mut t = CsvTable { header, rows: vec![] };
    for (l, row) in labels.iter().zip(table) {
        let mut r = vec![l.clone()];
        r.extend(row.iter().map(|&x| fmt_f64(x)));
        t.rows.push(r);
    }
    t
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: String,
    pub seed: Option<u64>,
    pub config: Option<ExperimentConfig>,
    /// The same config as TOML text, for exact reloading.
    pub config_toml: Option<String>,
    pub timings: Vec<StageTiming>,
    pub summary: Vec<CriterionOutcome>,
    pub verdict: Verdict,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: Option<&ExperimentConfig>) -> Self {
        RunManifest {
            command: command.into(),
            artifact_version: env!("CARGO_PKG_VERSION").into(),
            seed: config.map(|c| c.seed),
            config: config.cloned(),
            config_toml: config.and_then(|c| config_to_toml(c).ok()),
            timings: vec![],
            summary: vec![],
            verdict: Verdict::Pass,
            error: None,
        }
    }

    pub fn absorb(&mut self, report: &ConvergenceReport) {
        self.timings = report.timings.clone();
        self.summary = report.criteria.clone();
        self.verdict = report.verdict;
        self.error = report.error.clone();
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        write_json(&path, self)?;
        Ok(path)
    }
}

/// Writes one CSV series per figure into `dir`. Missing stages give header-only files.
pub fn emit_plotdata(report: &ConvergenceReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut put = |name: &str, t: CsvTable| -> Result<()> {
        let p = dir.join(name);
        t.write(&p)?;
        out.push(p);
        Ok(())
    };

    let mut geo = CsvTable::new(&["length_h", "log_f", "level"]);
    for g in &report.geometry {
        geo.push(vec![fmt_f64(g.length_h), fmt_f64(g.log_f), g.level.to_string()]);
    }
    put("geometry.csv", geo)?;

    let mut spec: Vec<f64> = report.spectrum.clone();
    spec.sort_by(|a, b| a.total_cmp(b));
    let mut st = CsvTable::new(&["index", "eigenvalue"]);
    for (i, v) in spec.iter().enumerate() {
        st.push(vec![i.to_string(), fmt_f64(*v)]);
    }
    put("spectrum.csv", st)?;

    let mut fc = CsvTable::new(&["function", "radius", "n", "deviation"]);
    for s in &report.functional {
        for r in &s.rows {
            fc.push(vec![s.f_id.clone(), fmt_f64(s.radius), r.n.to_string(), fmt_f64(r.deviation)]);
        }
    }
    put("functional_calculus.csv", fc)?;

    let mut sr = CsvTable::new(&["n", "radius", "max_ratio", "predicted_ratio", "hausdorff", "violations"]);
    if let Some(t) = &report.comparison {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        for l in &t.levels {
            sr.push(vec![
                l.n.to_string(),
                fmt_f64(l.radius),
                opt(l.max_ratio),
                opt(l.predicted_ratio),
                fmt_f64(l.hausdorff),
                l.violations.to_string(),
            ]);
        }
    }
    put("seminorm_ratio.csv", sr)?;

    let mut dy = CsvTable::new(&["n", "radius", "level_deviation", "tail_max", "tail_bound", "lipschitz_violations"]);
    for d in &report.dynamics {
        dy.push(vec![
            d.n.to_string(),
            fmt_f64(d.radius),
            fmt_f64(d.level_deviation),
            fmt_f64(d.tail_max),
            fmt_f64(d.tail_bound),
            d.lipschitz_violations.to_string(),
        ]);
    }
    put("dynamics.csv", dy)?;

    let mut db = CsvTable::new(&["radius", "inner", "outer", "ratio"]);
    if let Some(d) = &report.doubling {
        for r in &d.rows {
            db.push(vec![fmt_f64(r.r), r.inner.to_string(), r.outer.to_string(), fmt_f64(r.ratio)]);
        }
    }
    put("doubling.csv", db)?;

    let mut ce = CsvTable::new(&["n", "radius", "pass", "fail", "undecided", "verdict"]);
    if let Some(c) = &report.certificate {
        for l in &c.levels {
            ce.push(vec![
                l.n.to_string(),
                fmt_f64(l.radius),
                l.pass.to_string(),
                l.fail.to_string(),
                l.undecided.to_string(),
                format!("{:?}", l.verdict).to_uppercase(),
            ]);
        }
    }
    put("certificate.csv", ce)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convergence_lab::FamilyKind;

    #[test]
    fn minimal_toml_fills_defaults() {
        let cfg = parse_config_toml("family = \"solenoid\"\np = 2\nd = 1\n").unwrap();
        let want = ExperimentConfig::solenoid(2, 1);
        assert_eq!(cfg, want);
        assert_eq!(cfg.radii, vec![4.0]);
        assert_eq!(cfg.family, FamilyKind::Solenoid);
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_config_toml("family = \"solenoid\"\np = = 2\n") {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column >= 4);
            }
            other => panic!("{other:?}"),
        }
        match parse_config_toml("family = \"solenoid\"\np = 2\ncolour = 3\n") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("colour"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        match parse_config_toml("family = \"solenoid\"\np = 2\nradii = [4.0, 2.0]\n") {
            Err(Error::Validation { field, message }) => {
                assert_eq!(field, "radii");
                assert_eq!(message, "radii not increasing");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config_json("{\"family\": \"solenoid\",\n \"p\": }"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn toml_and_json_round_trip_exactly() {
        let mut cfg = ExperimentConfig::solenoid(3, 2);
        cfg.eps = 0.1;
        cfg.radii = vec![1.0 / 3.0, 2.5, 7.0];
        cfg.tolerances.norm = 1e-11;
        cfg.diameter_proxy = Some(std::f64::consts::PI);
        cfg.cocycle = crate::twisted_algebra::CocycleSpec::Bicharacter {
            theta: vec![vec![0.0, 0.1], vec![-0.1, 0.0]],
        };
        cfg.output.dir = Some("results".into());
        let text = config_to_toml(&cfg).unwrap();
        let back = parse_config_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.radii[0].to_bits(), cfg.radii[0].to_bits());
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_config_json(&json).unwrap(), cfg);
        let bd = ExperimentConfig::bunce_deddens(&[2, 4, 8]);
        assert_eq!(parse_config_toml(&config_to_toml(&bd).unwrap()).unwrap(), bd);
    }

    #[test]
    fn csv_format() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["x,y".into(), fmt_f64(0.1)]);
        let s = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(s, "a,b\n\"x,y\",1.0000000000000001e-1\n");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
