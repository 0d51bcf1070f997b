use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ecvt::calibrate::{
    misfit_csv, rejection_csv, run_misfit, run_rejection_study, MisfitConfig, MisfitResult, RejectionConfig,
};
use ecvt::plot::{line_chart_svg, validation_csv, validation_svg, Series};
use ecvt::synthetic::{
    gen_additive, gen_regression_problem, gen_sensitivity, AdditiveSpec, RegressionSpec, SensitivitySpec,
};
use ecvt::table::{load_table, write_table, LoadOptions};
use ecvt::{
    align_predictions, load_predictions, run_fit, run_validation, Error, PredictionKind, PredictionVector,
    ValidateConfig, ValidationOutput,
};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_REJECTED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ecvt",
    version,
    about = "Validated intraclass correlation for item-level model testing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the ICC of a table and test the additive model by resampling.
    Validate {
        table: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Plot title; defaults to the file stem.
        #[arg(long)]
        name: Option<String>,
    },
    /// Judge item-level model predictions against the ICC interval.
    Fit {
        table: PathBuf,
        predictions: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Judge the fit even when the validity test rejects the additive model.
        #[arg(long)]
        override_invalid: bool,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        name: Option<String>,
    },
    /// Generate artificial data tables.
    Synth {
        #[arg(value_enum)]
        model: SynthModel,
        #[arg(long, default_value_t = 360)]
        m: usize,
        #[arg(long, default_value_t = 120)]
        n: usize,
        /// Variance ratio of item effects to noise.
        #[arg(long, default_value_t = 0.0625)]
        q: f64,
        /// Deviation ratio of participant sensitivities (sensitivity model only).
        #[arg(long, default_value_t = 0.0)]
        u: f64,
        #[arg(long, default_value_t = 20)]
        k0: usize,
        #[arg(long, default_value_t = 60)]
        kmax: usize,
        #[arg(long, env = "ECVT_SEED")]
        seed: Option<u64>,
        /// Output table; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Regression only: write the predictor columns (exact basis, then noise).
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long, value_parser = parse_delimiter, default_value = ",")]
        delimiter: u8,
    },
    /// Repeated-run calibration studies on artificial data.
    Calibrate {
        #[arg(value_enum)]
        study: Study,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long = "T", default_value_t = 500)]
        replicates: usize,
        #[arg(long, default_value_t = 12)]
        target_k: usize,
        #[arg(long, env = "ECVT_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Numeric code marking absent cells (NA and empty fields are always absent).
    #[arg(long)]
    missing: Option<f64>,
    /// Field delimiter; detected from the first line if omitted.
    #[arg(long, value_parser = parse_delimiter)]
    delimiter: Option<u8>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.95,0.99,0.999")]
    conf: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Resampling replicates per group size.
    #[arg(long = "T", default_value_t = 500)]
    replicates: usize,
    #[arg(long, default_value_t = 12)]
    target_k: usize,
    #[arg(long, env = "ECVT_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Simulation,
    Predictor,
}

impl From<KindArg> for PredictionKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Simulation => PredictionKind::Simulation,
            KindArg::Predictor => PredictionKind::Predictor,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthModel {
    /// Items, participants and noise add up.
    Additive,
    /// Participants scale the item effect by their own sensitivity.
    Sensitivity,
    /// Additive table with item effects built from a known regression basis.
    Regression,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Study {
    /// Validity-test rejection rates on sensitivity-model tables.
    Rejection,
    /// Under- and over-fit rates at the exact regression complexity.
    Misfit,
    /// The same rates at every complexity.
    Sweep,
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "tab" | "\\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!(
            "delimiter must be a single ASCII character or 'tab', got {s:?}"
        )),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

/// Writes through a sibling temporary file so an interrupted run leaves no
/// truncated output behind.
fn write_atomic(path: &Path, contents: &[u8]) -> ecvt::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let res = fs::write(&tmp, contents).and_then(|()| fs::rename(&tmp, path));
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> ecvt::Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> ecvt::Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidParameter("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn load(path: &Path, input: &InputArgs) -> ecvt::Result<ecvt::DataTable> {
    let opts = LoadOptions {
        delimiter: input.delimiter,
        missing_code: input.missing,
        ..Default::default()
    };
    load_table(File::open(path)?, &opts)
}

fn display_name(name: &Option<String>, path: &Path) -> String {
    name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    })
}

fn validate_config(run: &RunArgs) -> ValidateConfig {
    ValidateConfig {
        conf_probs: run.conf.clone(),
        alpha: run.alpha,
        replicates: run.replicates,
        target_k: run.target_k,
        seed: resolve_seed(run.seed),
    }
}

fn print_validation(out: &ValidationOutput) {
    println!("seed = {}", out.seed);
    println!("items = {}", out.items);
    println!("participants = {}", out.participants);
    println!("missing = {:.4}", out.missing_fraction);
    match out.q_anova {
        Some(q) => println!("qAV = {q:.4}"),
        None => println!("qAV = inf"),
    }
    println!("icc = {:.4}", out.icc);
    println!("conf =");
    for c in &out.intervals {
        println!("  {:.4} {:.4} {:.4}", c.probability, c.lower, c.upper);
    }
    println!("r = {:.4}", out.r_resampled);
    println!("Chi2 = {:.4}", out.chi2);
    println!("Chi2df = {}", out.df);
    println!("Chi2p = {:.4}", out.p_value);
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
}

fn write_validation_artifacts(out: &ValidationOutput, run: &RunArgs, name: &str) -> ecvt::Result<()> {
    if let Some(p) = &run.plot {
        write_atomic(p, validation_svg(out, name).as_bytes())?;
    }
    if let Some(p) = &run.csv {
        write_atomic(p, validation_csv(out).as_bytes())?;
    }
    Ok(())
}

fn cmd_validate(table: &Path, input: &InputArgs, run: &RunArgs, name: &Option<String>) -> ecvt::Result<u8> {
    let t = load(table, input)?;
    let cfg = validate_config(run);
    let out = with_threads(run.threads, || run_validation(&t, &cfg))??;
    print_validation(&out);
    if out.significant {
        println!(
            "the additive model is rejected (p < {}): the ICC is not a reliable reference",
            out.alpha
        );
    }
    if let Some(p) = &run.json {
        write_json(p, &out)?;
    }
    write_validation_artifacts(&out, run, &display_name(name, table))?;
    Ok(if out.significant { EXIT_REJECTED } else { EXIT_OK })
}

fn cmd_fit(
    table: &Path,
    predictions: &Path,
    kind: KindArg,
    override_invalid: bool,
    input: &InputArgs,
    run: &RunArgs,
    name: &Option<String>,
) -> ecvt::Result<u8> {
    let t = load(table, input)?;
    let preds = load_predictions(File::open(predictions)?, input.delimiter)?;
    let pred = PredictionVector::new(align_predictions(&t, &preds)?, kind.into())?;
    let cfg = validate_config(run);
    let out = with_threads(run.threads, || run_fit(&t, &pred, &cfg, override_invalid))??;
    print_validation(&out.validation);
    match &out.fit {
        Some(f) => {
            if out.validation.significant {
                eprintln!("warning: judging against an ICC the validity test rejected");
            }
            println!("r = {:.4}", f.r);
            println!("statistic = {:.4}", f.statistic);
            println!(
                "ICC {:.4}, {:.4} interval [{:.4}, {:.4}]",
                f.icc, f.ci.probability, f.ci.lower, f.ci.upper
            );
            println!("verdict = {}", f.verdict);
        }
        None => eprintln!(
            "refusing to judge: the validity test rejected the additive model (use --override-invalid to judge anyway)"
        ),
    }
    if let Some(p) = &run.json {
        write_json(p, &out)?;
    }
    write_validation_artifacts(&out.validation, run, &display_name(name, table))?;
    Ok(if out.refused { EXIT_REJECTED } else { EXIT_OK })
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    model: SynthModel,
    m: usize,
    n: usize,
    q: f64,
    u: f64,
    k0: usize,
    kmax: usize,
    seed: Option<u64>,
    out: &Option<PathBuf>,
    design: &Option<PathBuf>,
    delimiter: u8,
) -> ecvt::Result<u8> {
    if design.is_some() && !matches!(model, SynthModel::Regression) {
        return Err(Error::InvalidParameter(
            "--design applies to regression only".into(),
        ));
    }
    let seed = resolve_seed(seed);
    eprintln!("seed = {seed}");
    let table = match model {
        SynthModel::Additive => gen_additive(&AdditiveSpec::with_q(m, n, q, seed))?,
        SynthModel::Sensitivity => gen_sensitivity(&SensitivitySpec::with_q_u(m, n, q, u, seed))?,
        SynthModel::Regression => {
            let p = gen_regression_problem(&RegressionSpec::with_q(m, n, k0, kmax, q, seed))?;
            if let Some(path) = design {
                let cols: Vec<&[f64]> = p.columns().collect();
                let mut text = String::new();
                for i in 0..m {
                    let row: Vec<String> = cols.iter().map(|c| c[i].to_string()).collect();
                    text.push_str(&row.join(&char::from(delimiter).to_string()));
                    text.push('\n');
                }
                write_atomic(path, text.as_bytes())?;
            }
            p.table
        }
    };
    let mut buf = Vec::new();
    write_table(&table, &mut buf, delimiter)?;
    match out {
        Some(p) => write_atomic(p, &buf)?,
        None => io::stdout().write_all(&buf)?,
    }
    Ok(EXIT_OK)
}

fn misfit_plot(res: &MisfitResult) -> String {
    let cfg = &res.config;
    let mut series = Vec::new();
    let labels: Vec<String> = cfg
        .ms
        .iter()
        .flat_map(|&m| cfg.qs.iter().map(move |&q| (m, q)))
        .flat_map(|(m, q)| {
            if cfg.reps == 1 {
                [format!("r2 m={m} q={q}"), format!("CI m={m} q={q}")]
            } else {
                [format!("under m={m} q={q}"), format!("over m={m} q={q}")]
            }
        })
        .collect();
    let mut li = 0;
    for &m in &cfg.ms {
        for &q in &cfg.qs {
            let rows: Vec<_> = res.rows.iter().filter(|r| r.m == m && r.q == q).collect();
            let (a, b): (Vec<_>, Vec<_>) = if cfg.reps == 1 {
                (
                    rows.iter().map(|r| (r.k as f64, r.mean_statistic)).collect(),
                    rows.iter().map(|r| (r.k as f64, r.mean_lower)).collect(),
                )
            } else {
                (
                    rows.iter().map(|r| (r.k as f64, r.underfit)).collect(),
                    rows.iter().map(|r| (r.k as f64, r.overfit)).collect(),
                )
            };
            series.push(Series {
                label: &labels[li],
                points: a,
                dashed: false,
            });
            series.push(Series {
                label: &labels[li + 1],
                points: b,
                dashed: true,
            });
            li += 2;
        }
    }
    let (title, ylabel) = if cfg.reps == 1 {
        ("r2 and lower ICC limit by complexity", "r2")
    } else {
        ("Misfit detection frequency by complexity", "frequency")
    };
    line_chart_svg(title, "Number of model parameters", ylabel, (0.0, 1.0), &series)
}

#[allow(clippy::too_many_arguments)]
fn cmd_calibrate(
    study: Study,
    reps: usize,
    replicates: usize,
    target_k: usize,
    seed: Option<u64>,
    threads: Option<usize>,
    json: &Option<PathBuf>,
    plot: &Option<PathBuf>,
    csv: &Option<PathBuf>,
) -> ecvt::Result<u8> {
    let seed = resolve_seed(seed);
    println!("seed = {seed}");
    let (csv_text, json_text, svg) = match study {
        Study::Rejection => {
            let cfg = RejectionConfig {
                reps,
                replicates,
                target_k,
                ..Default::default()
            };
            let res = with_threads(threads, || run_rejection_study(&cfg, seed))??;
            println!("alpha   u        rejections  frequency");
            for r in &res.rows {
                println!(
                    "{:<7} {:<8.4} {:>10}  {:.3}",
                    r.alpha, r.u, r.rejections, r.frequency
                );
            }
            (rejection_csv(&res), serde_json::to_string_pretty(&res)?, None)
        }
        Study::Misfit | Study::Sweep => {
            let mut cfg = MisfitConfig {
                reps,
                ..Default::default()
            };
            if study == Study::Misfit {
                cfg.k_min = cfg.k0;
            }
            let res = with_threads(threads, || run_misfit(&cfg, seed))??;
            let rows: Vec<_> = if study == Study::Misfit {
                res.at_exact_complexity()
            } else {
                res.rows.iter().collect()
            };
            println!("m     q       k   statistic  underfit  overfit");
            for r in &rows {
                println!(
                    "{:<5} {:<7.4} {:<3} {:.4}     {:.3}     {:.3}",
                    r.m, r.q, r.k, r.mean_statistic, r.underfit, r.overfit
                );
            }
            let svg = (study == Study::Sweep).then(|| misfit_plot(&res));
            (misfit_csv(rows), serde_json::to_string_pretty(&res)?, svg)
        }
    };
    if let Some(p) = csv {
        write_atomic(p, csv_text.as_bytes())?;
    }
    if let Some(p) = json {
        write_atomic(p, format!("{json_text}\n").as_bytes())?;
    }
    if let Some(p) = plot {
        match svg {
            Some(s) => write_atomic(p, s.as_bytes())?,
            None => eprintln!("warning: no plot for this study; use --csv"),
        }
    }
    Ok(EXIT_OK)
}

fn run(cli: Cli) -> ecvt::Result<u8> {
    match cli.command {
        Command::Validate {
            table,
            input,
            run,
            name,
        } => cmd_validate(&table, &input, &run, &name),
        Command::Fit {
            table,
            predictions,
            kind,
            override_invalid,
            input,
            run,
            name,
        } => cmd_fit(&table, &predictions, kind, override_invalid, &input, &run, &name),
        Command::Synth {
            model,
            m,
            n,
            q,
            u,
            k0,
            kmax,
            seed,
            out,
            design,
            delimiter,
        } => cmd_synth(model, m, n, q, u, k0, kmax, seed, &out, &design, delimiter),
        Command::Calibrate {
            study,
            reps,
            replicates,
            target_k,
            seed,
            threads,
            json,
            plot,
            csv,
        } => cmd_calibrate(
            study, reps, replicates, target_k, seed, threads, &json, &plot, &csv,
        ),
    }
}

fn main() -> ExitCode {
    // Usage errors exit with 1: status 2 is reserved for a rejected model.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
