use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use screenmin::error_power::EXACT_MAX_M;
use screenmin::screen::selected_count_pmf;
use screenmin::{
    adaptive_gamma, adaptive_screenmin, bonferroni_max, bonferroni_power, cbar, default_threshold,
    expected_selected, fwer_approx, fwer_exact, holm_max, oracle_threshold, p0, power_approx,
    power_exact, run_grid, AdjustBasis, AlternativeLaw, Error, PairMixture, ProcedureResult,
    SimulationConfig, SimulationSummary, ThresholdKind,
};

use crate::io::{fmt_f64, fmt_opt, read_pvalues, write_results};

#[derive(Debug, Parser)]
#[command(
    name = "screenmin",
    version,
    about = "Screen-then-test procedures for union hypotheses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply a procedure to an id,p1,p2 table.
    Analyze(AnalyzeArgs),
    /// Run a seeded simulation study from a JSON config.
    Simulate(SimulateArgs),
    /// Solve for the oracle selection threshold of a pair mixture.
    Oracle(OracleArgs),
    /// Tabulate curves as plot-ready CSV.
    Curves(CurvesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Screenmin,
    Adaptive,
    Bonferroni,
    Holm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Basis {
    Max,
    Min,
}

fn parse_threshold(s: &str) -> std::result::Result<ThresholdKind, String> {
    match s.parse::<ThresholdKind>() {
        Ok(ThresholdKind::Oracle) => Err(
            "the oracle threshold needs a model; run the `oracle` command and pass fixed:<c>"
                .into(),
        ),
        Ok(kind) => Ok(kind),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV with header id,p1,p2.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = Method::Screenmin)]
    pub method: Method,
    /// Selection threshold for `screenmin`: default, adaptive or fixed:<c>.
    #[arg(long, value_parser = parse_threshold)]
    pub threshold: Option<ThresholdKind>,
    /// p-value multiplied by |S| in the adjusted p-value.
    #[arg(long, value_enum, default_value_t = Basis::Max)]
    pub basis: Basis,
    /// Results CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the summary block to this file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads, overriding the config.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MixtureArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub pi0: f64,
    #[arg(long)]
    pub pi1: f64,
    #[arg(long)]
    pub pi2: f64,
    #[arg(long)]
    pub snr: f64,
}

impl MixtureArgs {
    fn mixture(&self) -> Result<PairMixture> {
        check_alpha(self.alpha)?;
        Ok(PairMixture::new(
            self.m,
            self.pi0,
            self.pi1,
            self.pi2,
            AlternativeLaw::new(self.snr)?,
        )?)
    }
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub mixture: MixtureArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveKind {
    /// P0(u, c) against SNR, one column per c.
    P0VsSnr,
    /// Plug-in FWER and power against a log grid of c.
    FwerPowerVsC,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long, value_enum)]
    pub kind: CurveKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Testing threshold u (p0-vs-snr).
    #[arg(long, default_value_t = 0.05)]
    pub u: f64,
    /// Selection thresholds, one curve each (p0-vs-snr).
    #[arg(long = "c", value_delimiter = ',', default_values_t = [5e-4, 2.5e-2, 5e-2])]
    pub cs: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub snr_min: f64,
    #[arg(long, default_value_t = 6.0)]
    pub snr_max: f64,
    /// FWER level (fwer-power-vs-c).
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 0.7)]
    pub pi0: f64,
    #[arg(long, default_value_t = 0.25)]
    pub pi1: f64,
    #[arg(long, default_value_t = 0.05)]
    pub pi2: f64,
    /// Alternative SNR (fwer-power-vs-c).
    #[arg(long, default_value_t = 2.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub c_min: f64,
    #[arg(long, default_value_t = 0.05)]
    pub c_max: f64,
    #[arg(long, default_value_t = 121)]
    pub points: usize,
    /// Add exact FWER and power columns (fwer-power-vs-c).
    #[arg(long)]
    pub exact: bool,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Analyze(args) => analyze(&args, stdout),
        Command::Simulate(args) => simulate(&args, stdout),
        Command::Oracle(args) => oracle(&args, stdout),
        Command::Curves(args) => curves(&args, stdout),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("--alpha {alpha} is outside (0, 1)");
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

/// Ordered `key=value` lines.
#[derive(Debug, Default)]
struct Summary(Vec<(&'static str, String)>);

impl Summary {
    fn put(&mut self, key: &'static str, value: impl ToString) -> &mut Self {
        self.0.push((key, value.to_string()));
        self
    }

    fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

pub fn analyze_result(args: &AnalyzeArgs) -> Result<(ProcedureResult, String)> {
    check_alpha(args.alpha)?;
    if args.threshold.is_some() && args.method != Method::Screenmin {
        bail!("--threshold only applies to --method screenmin");
    }
    if args.basis == Basis::Min && args.method != Method::Screenmin {
        bail!("--basis only applies to --method screenmin");
    }
    let pmat = read_pvalues(&args.input)?;
    let alpha = args.alpha;
    let mut summary = Summary::default();
    let result = match args.method {
        Method::Screenmin => {
            let kind = args.threshold.unwrap_or(ThresholdKind::Default);
            let c = match kind {
                ThresholdKind::Default => default_threshold(alpha, pmat.len()),
                ThresholdKind::Adaptive => adaptive_gamma(&pmat.minima(), alpha).gamma,
                ThresholdKind::Fixed(c) => c,
                ThresholdKind::Oracle => unreachable!("rejected while parsing"),
            };
            let basis = match args.basis {
                Basis::Max => AdjustBasis::Max,
                Basis::Min => AdjustBasis::Min,
            };
            summary.put("method", "screenmin").put("threshold", kind);
            screenmin::procedures::screenmin_with_basis(&pmat, alpha, c, basis)
        }
        Method::Adaptive => {
            let a = adaptive_gamma(&pmat.minima(), alpha);
            summary
                .put("method", "adaptive")
                .put("threshold", "adaptive")
                .put("gamma_divisor", a.divisor);
            adaptive_screenmin(&pmat, alpha)
        }
        Method::Bonferroni => {
            summary.put("method", "bonferroni").put("threshold", "NA");
            bonferroni_max(&pmat, alpha)
        }
        Method::Holm => {
            summary.put("method", "holm").put("threshold", "NA");
            holm_max(&pmat, alpha)
        }
    };
    summary
        .put("alpha", fmt_f64(alpha))
        .put("m", pmat.len())
        .put("selection_threshold", fmt_opt(result.selection_threshold))
        .put("testing_threshold", fmt_opt(result.testing_threshold))
        .put("selected", result.selected_count)
        .put("rejections", result.rejection_count());
    Ok((result, summary.render()))
}

fn analyze(args: &AnalyzeArgs, stdout: &mut dyn Write) -> Result<()> {
    let (result, summary) = analyze_result(args)?;
    write_results(&args.out, &result)?;
    if let Some(path) = &args.summary {
        std::fs::write(path, &summary).with_context(|| format!("writing {}", path.display()))?;
    }
    stdout.write_all(summary.as_bytes())?;
    Ok(())
}

pub const SIMULATION_HEADER: [&str; 15] = [
    "pi0",
    "pi1",
    "pi2",
    "method",
    "replications",
    "fwer",
    "fwer_se",
    "power",
    "power_se",
    "mean_selected",
    "mean_threshold",
    "fwer_events",
    "false_rejections",
    "true_rejections",
    "seed",
];

pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: SimulationConfig = serde_json::from_str(&text)
        .with_context(|| format!("invalid config {}", path.display()))?;
    config.validate()?;
    Ok(config)
}

pub fn write_simulation<W: Write>(sink: W, summaries: &[SimulationSummary]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(sink);
    wtr.write_record(SIMULATION_HEADER)?;
    for s in summaries {
        for m in &s.methods {
            wtr.write_record([
                fmt_f64(s.config.pi0),
                fmt_f64(s.config.pi1),
                fmt_f64(s.config.pi2),
                m.method.to_string(),
                m.replications.to_string(),
                fmt_f64(m.fwer),
                fmt_f64(m.fwer_se),
                fmt_opt(m.power),
                fmt_opt(m.power_se),
                fmt_f64(m.mean_selected),
                fmt_opt(m.mean_threshold),
                m.fwer_events.to_string(),
                m.false_rejections.to_string(),
                m.true_rejections.to_string(),
                s.config.seed.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut config = load_config(&args.config)?;
    if args.workers.is_some() {
        config.workers = args.workers;
        config.validate()?;
    }
    let summaries = run_grid(&config)?;
    write_simulation(create(&args.out)?, &summaries)?;
    let rows: usize = summaries.iter().map(|s| s.methods.len()).sum();
    writeln!(stdout, "rows={rows}")?;
    writeln!(stdout, "out={}", args.out.display())?;
    Ok(())
}

/// Key-value report of the oracle threshold and its diagnostics.
pub fn oracle_report(args: &MixtureArgs) -> Result<String> {
    let mix = args.mixture()?;
    let alpha = args.alpha;
    let law = mix.law();
    let has_power = mix.type_counts().both_false > 0;
    let mut s = Summary::default();
    match oracle_threshold(alpha, &mix) {
        Ok(choice) => {
            let d = choice.diagnostics.expect("oracle reports diagnostics");
            s.put("status", "ok")
                .put("c_star", fmt_f64(choice.value))
                .put("constraint_binds", d.constraint_binds)
                .put("smallest_root", fmt_opt(d.smallest_root))
                .put("g_c_star", fmt_f64(d.fwer_approx))
                .put("expected_selected", fmt_f64(d.expected_selected))
                .put("testing_threshold", fmt_f64(d.testing_threshold))
                .put("power_approx", fmt_opt(d.power_approx));
        }
        Err(Error::Infeasible) => {
            s.put("status", "infeasible");
            for key in [
                "c_star",
                "smallest_root",
                "g_c_star",
                "expected_selected",
                "testing_threshold",
                "power_approx",
            ] {
                s.put(key, "NA");
            }
            s.put("constraint_binds", "NA");
        }
        Err(e) => return Err(e.into()),
    }
    s.put("cbar", fmt_f64(cbar(alpha, &mix)))
        .put(
            "default_threshold",
            fmt_f64(default_threshold(alpha, mix.m())),
        )
        .put(
            "bonferroni_power",
            fmt_opt(has_power.then(|| bonferroni_power(alpha, mix.m(), law))),
        );
    Ok(s.render())
}

fn oracle(args: &OracleArgs, stdout: &mut dyn Write) -> Result<()> {
    stdout.write_all(oracle_report(&args.mixture)?.as_bytes())?;
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

pub fn write_curves<W: Write>(args: &CurvesArgs, sink: W) -> Result<()> {
    if args.points == 0 {
        bail!("--points must be at least 1");
    }
    let mut wtr = csv::Writer::from_writer(sink);
    match args.kind {
        CurveKind::P0VsSnr => {
            if !(args.u > 0.0 && args.u <= 1.0) {
                bail!("--u {} is outside (0, 1]", args.u);
            }
            if !(args.snr_min >= 0.0 && args.snr_max >= args.snr_min && args.snr_max.is_finite()) {
                bail!("need 0 <= --snr-min <= --snr-max");
            }
            if args.cs.is_empty() || args.cs.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
                bail!("every --c must lie in (0, 1)");
            }
            let mut header = vec!["snr".to_string()];
            header.extend(args.cs.iter().map(|c| format!("p0_c_{c}")));
            wtr.write_record(&header)?;
            for snr in linspace(args.snr_min, args.snr_max, args.points) {
                let law = AlternativeLaw::new(snr)?;
                let mut record = vec![fmt_f64(snr)];
                record.extend(args.cs.iter().map(|&c| fmt_f64(p0(args.u, c, law))));
                wtr.write_record(&record)?;
            }
        }
        CurveKind::FwerPowerVsC => {
            check_alpha(args.alpha)?;
            let mix = PairMixture::new(
                args.m,
                args.pi0,
                args.pi1,
                args.pi2,
                AlternativeLaw::new(args.snr)?,
            )?;
            if !(args.c_min > 0.0 && args.c_max < 1.0 && args.c_min <= args.c_max) {
                bail!("need 0 < --c-min <= --c-max < 1");
            }
            if args.exact && args.m > EXACT_MAX_M {
                bail!("--exact supports m up to {EXACT_MAX_M}");
            }
            let mut header = vec!["c", "expected_selected", "fwer_approx", "power_approx"];
            if args.exact {
                header.extend(["fwer_exact", "power_exact", "prob_none_selected"]);
            }
            wtr.write_record(&header)?;
            for c in logspace(args.c_min, args.c_max, args.points) {
                let mut record = vec![
                    fmt_f64(c),
                    fmt_f64(expected_selected(c, &mix)),
                    fmt_f64(fwer_approx(c, args.alpha, &mix)),
                    fmt_opt(power_approx(c, args.alpha, &mix).ok()),
                ];
                if args.exact {
                    record.push(fmt_f64(fwer_exact(c, args.alpha, &mix)));
                    record.push(fmt_opt(power_exact(c, args.alpha, &mix).ok()));
                    record.push(fmt_f64(selected_count_pmf(c, &mix)[0]));
                }
                wtr.write_record(&record)?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

fn curves(args: &CurvesArgs, stdout: &mut dyn Write) -> Result<()> {
    write_curves(args, create(&args.out)?)?;
    writeln!(stdout, "rows={}", args.points)?;
    writeln!(stdout, "out={}", args.out.display())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("screenmin").chain(args.iter().copied()))
    }

    #[test]
    fn threshold_flag_parsing() {
        let cli = parse(&[
            "analyze",
            "--input",
            "x",
            "--out",
            "y",
            "--threshold",
            "fixed:0.01",
        ])
        .unwrap();
        match cli.command {
            Command::Analyze(a) => assert_eq!(a.threshold, Some(ThresholdKind::Fixed(0.01))),
            _ => unreachable!(),
        }
        assert!(parse(&[
            "analyze",
            "--input",
            "x",
            "--out",
            "y",
            "--threshold",
            "fixed:1.5"
        ])
        .is_err());
        assert!(parse(&[
            "analyze",
            "--input",
            "x",
            "--out",
            "y",
            "--threshold",
            "oracle"
        ])
        .is_err());
        assert!(parse(&["analyze", "--input", "x", "--out", "y", "--method", "bonf"]).is_err());
    }

    #[test]
    fn curve_kind_parsing() {
        assert!(parse(&["curves", "--kind", "p0-vs-snr", "--out", "z"]).is_ok());
        assert!(parse(&["curves", "--kind", "fwer-power-vs-c", "--out", "z"]).is_ok());
        assert!(parse(&["curves", "--kind", "p0-vs-snrr", "--out", "z"]).is_err());
    }

    fn cli_mixture(pi: [f64; 3], snr: f64) -> MixtureArgs {
        MixtureArgs {
            alpha: 0.05,
            m: 100,
            pi0: pi[0],
            pi1: pi[1],
            pi2: pi[2],
            snr,
        }
    }

    fn field<'a>(report: &'a str, key: &str) -> &'a str {
        report
            .lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .unwrap_or_else(|| panic!("missing {key}"))
    }

    #[test]
    fn oracle_report_example() {
        let report = oracle_report(&cli_mixture([0.7, 0.25, 0.05], 2.0)).unwrap();
        let c: f64 = field(&report, "c_star").parse().unwrap();
        let cbar: f64 = field(&report, "cbar").parse().unwrap();
        let pow: f64 = field(&report, "power_approx").parse().unwrap();
        let bonf: f64 = field(&report, "bonferroni_power").parse().unwrap();
        assert!(c < cbar);
        assert!(pow > bonf);
    }

    #[test]
    fn oracle_report_without_false_pairs() {
        let report = oracle_report(&cli_mixture([0.7, 0.3, 0.0], 2.0)).unwrap();
        assert_eq!(field(&report, "power_approx"), "NA");
        assert_eq!(field(&report, "bonferroni_power"), "NA");
    }

    #[test]
    fn oracle_report_null_signal() {
        let report = oracle_report(&cli_mixture([0.7, 0.25, 0.05], 0.0)).unwrap();
        assert!(field(&report, "cbar").parse::<f64>().unwrap() > 0.0);
        assert!(["ok", "infeasible"].contains(&field(&report, "status")));
    }

    #[test]
    fn oracle_report_rejects_bad_mixture() {
        assert!(oracle_report(&cli_mixture([0.7, 0.25, 0.5], 2.0)).is_err());
    }
}
