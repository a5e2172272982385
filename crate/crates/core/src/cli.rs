//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for model or data errors,
//! 3 when `oracle-check` finds a deviation beyond tolerance. Numeric output
//! is tab-separated with 12 significant digits; log-likelihoods are natural
//! logs.
//!
//! Two-slice networks are unrolled to their joint-state HMM, so observation
//! files for them hold joint symbol indices. Coupled HMMs read the
//! comma-separated per-chain format; `filter`, `predict` and `decode` run on
//! the flattened joint chain.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::chmm::{chmm_em, chmm_likelihood, chmm_smooth};
use crate::decoding::viterbi;
use crate::error::Error;
use crate::inference::{self, particle_filter, ParticleFilterConfig};
use crate::learning::{baum_welch, EmConfig, EmTrace};
use crate::model::{
    flatten_chmm, format_joint_obs, format_obs, load_model, parse_joint_obs, parse_obs, rng_from_seed,
    sample_chmm_with, sample_hmm_with, save_model, unroll_tbn, ChmmModel, HmmModel, JointObsSequence, JointSpace,
    Model, ObsSequence, DEFAULT_SIZE_CAP,
};
use crate::oracle::equivalence_suite;

#[derive(Debug, Parser)]
#[command(name = "dbnkit", version, about = "Inference and learning for discrete temporal models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file; exit 0 iff it is valid.
    Validate(ModelArg),
    /// Draw observation sequences (and optionally state paths) from a model.
    Sample(SampleArgs),
    /// Log-likelihood of each observation sequence.
    Likelihood(DataArgs),
    /// Filtered state beliefs P(x_t | y_1..y_t).
    Filter(FilterArgs),
    /// Smoothed state posteriors P(x_t | y_1..y_T).
    Smooth(DataArgs),
    /// Predicted state and next-symbol distributions after each sequence.
    Predict(PredictArgs),
    /// Most probable state path (Viterbi).
    Decode(DataArgs),
    /// Baum-Welch training of an HMM.
    Train(TrainArgs),
    /// EM training of a coupled HMM.
    TrainChmm(TrainArgs),
    /// Compare exact recursions against brute-force enumeration.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
struct ModelArg {
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    model: PathBuf,
    /// Observation file, or the observations themselves.
    #[arg(long)]
    obs: String,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Observation output file (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the sampled state paths here.
    #[arg(long)]
    states: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Use a bootstrap particle filter with this many particles.
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 1)]
    horizon: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Initial model.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    obs: String,
    /// Where to write the trained model.
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "max-iters", default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0.0)]
    pseudocount: f64,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    count: usize,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Check,
}

type CliResult = std::result::Result<(), Failure>;

fn data_error(context: &Path, err: Error) -> Failure {
    match err {
        Error::Parse { .. } | Error::Io { .. } => Failure::Data(err.to_string()),
        other => Failure::Data(format!("{}: {other}", context.display())),
    }
}

/// Formats like C's `%.12g`.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa), sign, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn row<'a>(prefix: &[String], values: impl IntoIterator<Item = &'a f64>) -> String {
    let mut cells: Vec<String> = prefix.to_vec();
    cells.extend(values.into_iter().map(|&v| format_number(v)));
    cells.join("\t")
}

/// A loaded model in the form the commands operate on.
enum Loaded {
    /// Plain HMMs and unrolled two-slice networks.
    Hmm(HmmModel),
    Chmm(ChmmModel),
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let model = load_model(path).map_err(|e| data_error(path, e))?;
    match model {
        Model::Hmm(m) => Ok(Loaded::Hmm(m)),
        Model::Chmm(m) => Ok(Loaded::Chmm(m)),
        Model::Tbn2(m) => unroll_tbn(&m, DEFAULT_SIZE_CAP)
            .map(Loaded::Hmm)
            .map_err(|e| data_error(path, e)),
    }
}

/// Reads `--obs`: a file path if one exists, otherwise inline text.
fn obs_text(arg: &str) -> Result<(String, PathBuf), Failure> {
    let path = PathBuf::from(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(&path).map_err(|source| {
            Failure::Data(Error::Io { path: path.clone(), source }.to_string())
        })?;
        Ok((text, path))
    } else {
        Ok((arg.to_string(), PathBuf::from("--obs")))
    }
}

fn read_obs(arg: &str) -> Result<Vec<ObsSequence>, Failure> {
    let (text, origin) = obs_text(arg)?;
    let seqs = parse_obs(&text).map_err(|e| data_error(&origin, e.with_path(&origin)))?;
    if seqs.is_empty() {
        return Err(Failure::Data(format!("{}: no observation sequences", origin.display())));
    }
    Ok(seqs)
}

fn read_joint_obs(arg: &str) -> Result<Vec<JointObsSequence>, Failure> {
    let (text, origin) = obs_text(arg)?;
    let seqs = parse_joint_obs(&text).map_err(|e| data_error(&origin, e.with_path(&origin)))?;
    if seqs.is_empty() {
        return Err(Failure::Data(format!("{}: no observation sequences", origin.display())));
    }
    Ok(seqs)
}

/// HMM view of a loaded model with observations mapped to its alphabet.
fn as_hmm(loaded: Loaded, obs_arg: &str) -> Result<(HmmModel, Vec<ObsSequence>, Option<JointSpace>), Failure> {
    match loaded {
        Loaded::Hmm(m) => Ok((m, read_obs(obs_arg)?, None)),
        Loaded::Chmm(m) => {
            let origin = PathBuf::from(obs_arg);
            let flat = flatten_chmm(&m, DEFAULT_SIZE_CAP).map_err(|e| data_error(&origin, e))?;
            let symbols = m.symbol_space(DEFAULT_SIZE_CAP).map_err(|e| data_error(&origin, e))?;
            let states = m.state_space(DEFAULT_SIZE_CAP).map_err(|e| data_error(&origin, e))?;
            let seqs = read_joint_obs(obs_arg)?
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    m.check_obs(s)
                        .map_err(|e| Failure::Data(format!("sequence {k}: {e}")))?;
                    Ok(ObsSequence(s.iter().map(|o| symbols.index(o)).collect()))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            Ok((flat, seqs, Some(states)))
        }
    }
}

fn seq_error(k: usize, e: Error) -> Failure {
    Failure::Data(format!("sequence {k}: {e}"))
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Data(format!("writing output: {e}")))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|source| {
        Failure::Data(
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
            .to_string(),
        )
    })
}

fn cmd_sample(args: &SampleArgs, out: &mut dyn Write) -> CliResult {
    if args.length == 0 || args.count == 0 {
        return Err(Failure::Usage("--length and --count must be at least 1".into()));
    }
    let mut rng = rng_from_seed(args.seed);
    let (obs_text, states_text) = match load(&args.model)? {
        Loaded::Hmm(m) => {
            let mut paths = Vec::new();
            let mut seqs = Vec::new();
            for _ in 0..args.count {
                let (x, y) = sample_hmm_with(&m, args.length, &mut rng).map_err(|e| data_error(&args.model, e))?;
                paths.push(ObsSequence(x));
                seqs.push(y);
            }
            (format_obs(&seqs), format_obs(&paths))
        }
        Loaded::Chmm(m) => {
            let mut paths = Vec::new();
            let mut seqs = Vec::new();
            for _ in 0..args.count {
                let (x, y) = sample_chmm_with(&m, args.length, &mut rng).map_err(|e| data_error(&args.model, e))?;
                paths.push(JointObsSequence(x));
                seqs.push(y);
            }
            (format_joint_obs(&seqs), format_joint_obs(&paths))
        }
    };
    match &args.out {
        Some(path) => write_file(path, &obs_text)?,
        None => write_out(out, &obs_text)?,
    }
    if let Some(path) = &args.states {
        write_file(path, &states_text)?;
    }
    Ok(())
}

fn cmd_likelihood(args: &DataArgs, out: &mut dyn Write) -> CliResult {
    let mut text = String::new();
    match load(&args.model)? {
        Loaded::Hmm(m) => {
            for (k, seq) in read_obs(&args.obs)?.iter().enumerate() {
                let ll = inference::log_likelihood(&m, seq).map_err(|e| seq_error(k, e))?;
                writeln!(text, "{}", row(&[k.to_string()], [&ll])).unwrap();
            }
        }
        Loaded::Chmm(m) => {
            for (k, seq) in read_joint_obs(&args.obs)?.iter().enumerate() {
                let ll = chmm_likelihood(&m, seq).map_err(|e| seq_error(k, e))?;
                writeln!(text, "{}", row(&[k.to_string()], [&ll])).unwrap();
            }
        }
    }
    write_out(out, &text)
}

fn cmd_filter(args: &FilterArgs, out: &mut dyn Write) -> CliResult {
    let (m, seqs, _) = as_hmm(load(&args.data.model)?, &args.data.obs)?;
    let mut text = String::new();
    for (k, seq) in seqs.iter().enumerate() {
        let table = match args.particles {
            Some(num_particles) => {
                let cfg = ParticleFilterConfig {
                    num_particles,
                    seed: args.seed,
                    ..Default::default()
                };
                particle_filter(&m, seq, &cfg).map_err(|e| seq_error(k, e))?.estimates
            }
            None => inference::filter(&m, seq).map_err(|e| seq_error(k, e))?,
        };
        for (t, r) in table.rows().into_iter().enumerate() {
            writeln!(text, "{}", row(&[k.to_string(), t.to_string()], r.iter())).unwrap();
        }
    }
    write_out(out, &text)
}

fn cmd_smooth(args: &DataArgs, out: &mut dyn Write) -> CliResult {
    let mut text = String::new();
    match load(&args.model)? {
        Loaded::Hmm(m) => {
            for (k, seq) in read_obs(&args.obs)?.iter().enumerate() {
                let post = inference::smooth(&m, seq).map_err(|e| seq_error(k, e))?;
                for (t, r) in post.gamma.rows().into_iter().enumerate() {
                    writeln!(text, "{}", row(&[k.to_string(), t.to_string()], r.iter())).unwrap();
                }
            }
        }
        Loaded::Chmm(m) => {
            // per-chain marginals, chains concatenated left to right
            for (k, seq) in read_joint_obs(&args.obs)?.iter().enumerate() {
                let post = chmm_smooth(&m, seq).map_err(|e| seq_error(k, e))?;
                for t in 0..seq.len() {
                    let values: Vec<f64> = post.chain_gamma.iter().flat_map(|g| g.row(t).to_vec()).collect();
                    writeln!(text, "{}", row(&[k.to_string(), t.to_string()], &values)).unwrap();
                }
            }
        }
    }
    write_out(out, &text)
}

fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> CliResult {
    if args.horizon == 0 {
        return Err(Failure::Usage("--horizon must be at least 1".into()));
    }
    let (m, seqs, _) = as_hmm(load(&args.data.model)?, &args.data.obs)?;
    let mut text = String::new();
    for (k, seq) in seqs.iter().enumerate() {
        let state = inference::predict_state(&m, seq, args.horizon).map_err(|e| seq_error(k, e))?;
        let symbol = inference::predict_obs(&m, seq).map_err(|e| seq_error(k, e))?;
        writeln!(text, "{}", row(&[k.to_string(), "state".into()], state.probs())).unwrap();
        writeln!(text, "{}", row(&[k.to_string(), "symbol".into()], symbol.probs())).unwrap();
    }
    write_out(out, &text)
}

fn cmd_decode(args: &DataArgs, out: &mut dyn Write) -> CliResult {
    let (m, seqs, joint) = as_hmm(load(&args.model)?, &args.obs)?;
    let mut text = String::new();
    for (k, seq) in seqs.iter().enumerate() {
        let d = viterbi(&m, seq).map_err(|e| seq_error(k, e))?;
        let mut cells = vec![k.to_string(), format_number(d.log_joint_score)];
        cells.extend(d.path.iter().map(|&s| match &joint {
            Some(space) => space
                .tuple(s)
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
            None => s.to_string(),
        }));
        writeln!(text, "{}", cells.join("\t")).unwrap();
    }
    write_out(out, &text)
}

fn em_config(args: &TrainArgs) -> EmConfig {
    EmConfig {
        max_iterations: args.max_iters,
        rel_tolerance: args.tol,
        pseudocount: args.pseudocount,
    }
}

fn report_trace(trace: &EmTrace, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let mut text = String::new();
    for (k, ll) in trace.log_likelihoods.iter().enumerate() {
        writeln!(text, "{}", row(&[(k + 1).to_string()], [ll])).unwrap();
    }
    write_out(out, &text)?;
    let status = if trace.converged {
        format!("converged after {} iterations", trace.iterations_run)
    } else {
        format!("stopped after {} iterations without converging", trace.iterations_run)
    };
    writeln!(err, "{status}").map_err(|e| Failure::Data(e.to_string()))
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let init = match load_model(&args.model).map_err(|e| data_error(&args.model, e))? {
        Model::Hmm(m) => m,
        other => {
            return Err(Failure::Data(format!(
                "{}: train expects an hmm model, found {}",
                args.model.display(),
                other.kind()
            )))
        }
    };
    let seqs = read_obs(&args.obs)?;
    let (model, trace) = baum_welch(&init, &seqs, &em_config(args)).map_err(|e| match e {
        Error::InvalidArgument(msg) => Failure::Usage(msg),
        other => Failure::Data(other.to_string()),
    })?;
    save_model(&Model::Hmm(model), &args.out).map_err(|e| Failure::Data(e.to_string()))?;
    report_trace(&trace, out, err)
}

fn cmd_train_chmm(args: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let init = match load_model(&args.model).map_err(|e| data_error(&args.model, e))? {
        Model::Chmm(m) => m,
        other => {
            return Err(Failure::Data(format!(
                "{}: train-chmm expects a chmm model, found {}",
                args.model.display(),
                other.kind()
            )))
        }
    };
    let seqs = read_joint_obs(&args.obs)?;
    let (model, trace) = chmm_em(&init, &seqs, &em_config(args)).map_err(|e| match e {
        Error::InvalidArgument(msg) => Failure::Usage(msg),
        other => Failure::Data(other.to_string()),
    })?;
    save_model(&Model::Chmm(model), &args.out).map_err(|e| Failure::Data(e.to_string()))?;
    report_trace(&trace, out, err)
}

fn cmd_oracle_check(args: &OracleArgs, out: &mut dyn Write) -> CliResult {
    let reports = equivalence_suite(args.seed, args.count).map_err(|e| Failure::Data(e.to_string()))?;
    let mut text = String::new();
    let mut all_passed = true;
    for r in &reports {
        all_passed &= r.passed();
        writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}",
            r.name,
            r.instances,
            format_number(r.max_deviation),
            format_number(r.tolerance),
            if r.passed() { "ok" } else { "FAIL" }
        )
        .unwrap();
    }
    write_out(out, &text)?;
    if all_passed {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

/// Runs the command line `argv` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = writeln!(err, "error: missing subcommand; see `dbnkit --help`");
                return 1;
            }
            let rendered = e.to_string();
            let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            let _ = writeln!(err, "{line}");
            return 1;
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => load(&a.model).map(|_| ()),
        Command::Sample(a) => cmd_sample(a, out),
        Command::Likelihood(a) => cmd_likelihood(a, out),
        Command::Filter(a) => cmd_filter(a, out),
        Command::Smooth(a) => cmd_smooth(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Decode(a) => cmd_decode(a, out),
        Command::Train(a) => cmd_train(a, out, err),
        Command::TrainChmm(a) => cmd_train_chmm(a, out, err),
        Command::OracleCheck(a) => cmd_oracle_check(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(err, "error: {}", msg.replace('\n', " "));
            2
        }
        Err(Failure::Check) => 3,
    }
}
