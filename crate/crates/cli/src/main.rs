use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tardos_core::analysis::{
    moments_interleaving, monte_carlo_moments, normalized_dots, reference_distribution, table_row, tradeoff,
    tradeoff_for, Regime, TABLE_HEADER,
};
use tardos_core::attack::{named_strategy, AttackStrategy, STRATEGY_NAMES};
use tardos_core::decoder::{linear_decode, suggest_threshold, AccusationResult, DecodeMode};
use tardos_core::experiment::{
    run_experiment, ExperimentConfig, DEFAULT_HISTOGRAM_BINS, DEFAULT_SERIES_POINTS, DEFAULT_WINDOW,
};
use tardos_core::io::{load_codebook, load_pirate, save_codebook, save_pirate};
use tardos_core::lsh::{build_index, decode_with_index, read_index, write_index, LshParams, DEFAULT_SPARSITY};
use tardos_core::{forge, generate_codebook, sample_bias, BiasDistribution, ScoreFunctionKind, Seed};

#[derive(Parser)]
#[command(name = "tardos", version, about = "Tardos fingerprinting with LSH decoding")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (output does not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a bias vector and codebook and write a TFPC file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        len: usize,
        /// half, nuida-c3, arcsine, arcsine:<delta>, discrete:<p>:<w>,...
        #[arg(long, default_value = "arcsine")]
        dist: String,
        /// Collusion size used to pick the default arcsine cutoff.
        #[arg(long, default_value_t = 3)]
        c: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forge a pirate copy (TFPY) from a coalition of users.
    Attack {
        #[arg(long)]
        codebook: PathBuf,
        /// Comma-separated user indices.
        #[arg(long, value_delimiter = ',', required = true)]
        colluders: Vec<usize>,
        #[arg(long, default_value = "interleaving", conflicts_with = "theta")]
        strategy: String,
        /// Explicit channel θ_0..θ_c, comma separated.
        #[arg(long)]
        theta: Option<AttackStrategy>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score users against a pirate copy and print accusations as CSV.
    Decode(DecodeArgs),
    /// Time/space exponents: a table row, a single point, or a curve.
    Tradeoff(TradeoffArgs),
    /// Rows of score statistics and NNS exponents under interleaving.
    Table {
        /// Collusion sizes (rows 1 to 3 have built-in distributions).
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        c: Vec<usize>,
        /// Distribution for every row, overriding the built-in ones.
        #[arg(long)]
        dist: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate many trials of LSH decoding and report work and recall.
    Experiment(ExperimentArgs),
    /// Closed-form score moments, optionally checked by simulation.
    Moments {
        #[arg(long, default_value = "nuida-c3")]
        dist: String,
        #[arg(long, default_value_t = 3)]
        c: usize,
        /// Run this many Monte-Carlo trials as well.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        len: usize,
        #[arg(long, default_value = "interleaving")]
        strategy: String,
    },
}

#[derive(Args)]
struct LshArgs {
    #[arg(long, default_value_t = 100)]
    tables: usize,
    #[arg(long, default_value_t = 16)]
    hash_len: u32,
    #[arg(long, default_value_t = DEFAULT_SPARSITY)]
    sparsity: f64,
    #[arg(long)]
    probes: Option<u64>,
}

impl LshArgs {
    fn params(&self) -> Result<LshParams> {
        Ok(LshParams::new(
            self.tables,
            self.hash_len,
            self.sparsity,
            self.probes.unwrap_or(1),
        )?)
    }
}

#[derive(Args)]
#[group(id = "rule", multiple = false)]
struct RuleArgs {
    /// Accuse the m highest scores.
    #[arg(long)]
    top: Option<usize>,
    /// Accuse every score above z.
    #[arg(long)]
    threshold: Option<f64>,
    /// Pick z for about this many falsely accused users.
    #[arg(long)]
    suggest_threshold: Option<f64>,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    pirate: PathBuf,
    #[arg(long, conflicts_with = "lsh")]
    linear: bool,
    #[arg(long)]
    lsh: bool,
    #[command(flatten)]
    rule: RuleArgs,
    #[arg(long, default_value = "equivalent")]
    kind: ScoreFunctionKind,
    #[command(flatten)]
    lsh_args: LshArgs,
    #[arg(long, requires = "lsh")]
    save_index: Option<PathBuf>,
    #[arg(long, requires = "lsh")]
    load_index: Option<PathBuf>,
    /// Print every scored user, not only the accused.
    #[arg(long)]
    all: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TradeoffArgs {
    #[arg(long)]
    alpha: Option<f64>,
    /// ρs grid `start:end:step` for --alpha.
    #[arg(long, requires = "alpha")]
    curve: Option<String>,
    #[arg(long, requires = "d1", conflicts_with = "alpha")]
    d0: Option<f64>,
    #[arg(long)]
    d1: Option<f64>,
    #[arg(long, conflicts_with_all = ["alpha", "d1"])]
    c: Option<usize>,
    #[arg(long, requires = "c")]
    dist: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 5000)]
    len: usize,
    #[arg(long, default_value_t = 3)]
    c: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value = "nuida-c3")]
    dist: String,
    #[arg(long, default_value = "interleaving")]
    strategy: String,
    #[command(flatten)]
    lsh: LshArgs,
    #[arg(long, default_value = "equivalent")]
    kind: ScoreFunctionKind,
    /// Accusation rule on the candidates (default: top c).
    #[arg(long, conflicts_with = "threshold")]
    top: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Users per centered running-average window.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = DEFAULT_SERIES_POINTS)]
    series_points: usize,
    #[arg(long, default_value_t = DEFAULT_HISTOGRAM_BINS)]
    bins: usize,
    /// JSON report path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write <prefix>trials.csv, <prefix>series.csv and <prefix>histogram.csv.
    #[arg(long)]
    csv_prefix: Option<String>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_gen(seed: Seed, n: usize, len: usize, dist: &str, c: usize, out: &Path) -> Result<()> {
    let dist = BiasDistribution::parse(dist, c)?;
    let p = sample_bias(&dist, len, seed)?;
    let codebook = generate_codebook(n, &p, seed)?;
    save_codebook(out, &codebook, &p)?;
    Ok(())
}

fn cmd_attack(
    seed: Seed,
    codebook: &Path,
    colluders: &[usize],
    strategy: &str,
    theta: Option<AttackStrategy>,
    out: &Path,
) -> Result<()> {
    let (cb, _) = load_codebook(codebook)?;
    let strategy = match theta {
        Some(t) => t,
        None => named_strategy(strategy, colluders.len())
            .with_context(|| format!("known strategies: {}", STRATEGY_NAMES.join(", ")))?,
    };
    let y = forge(&cb, colluders, &strategy, seed)?;
    save_pirate(out, &y)?;
    Ok(())
}

fn cmd_decode(seed: Seed, a: &DecodeArgs) -> Result<()> {
    let (cb, p) = load_codebook(&a.codebook)?;
    let y = load_pirate(&a.pirate)?;
    let mode = match (a.rule.top, a.rule.threshold, a.rule.suggest_threshold) {
        (Some(m), _, _) => DecodeMode::TopM(m),
        (_, Some(z), _) => DecodeMode::Threshold(z),
        (_, _, Some(fp)) => DecodeMode::Threshold(suggest_threshold(&p, a.kind, fp, cb.n())?),
        _ => bail!("one of --top, --threshold or --suggest-threshold is required"),
    };
    // --all keeps every scored user; the rule still decides the accused column.
    let scan = if a.all {
        DecodeMode::Threshold(f64::NEG_INFINITY)
    } else {
        mode
    };
    let result: AccusationResult = if a.lsh {
        let index = match &a.load_index {
            Some(path) => {
                let mut r = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
                let mut index = read_index(&mut r, &cb)?;
                if let Some(probes) = a.lsh_args.probes {
                    index.set_probes(probes)?;
                }
                index
            }
            None => build_index(&cb, &a.lsh_args.params()?, seed)?,
        };
        if let Some(path) = &a.save_index {
            let mut w = BufWriter::new(File::create(path)?);
            write_index(&mut w, &index)?;
            w.flush()?;
        }
        decode_with_index(&index, &cb, &y, &p, a.kind, scan)?
    } else {
        linear_decode(&cb, &y, &p, a.kind, scan)?
    };

    let accused = match mode {
        DecodeMode::TopM(m) => result.accused.len().min(m),
        DecodeMode::Threshold(z) => result.accused.iter().take_while(|s| s.score > z).count(),
    };
    let mut w = output(a.out.as_deref())?;
    if a.all {
        writeln!(w, "user,score,accused")?;
        for (i, s) in result.accused.iter().enumerate() {
            writeln!(w, "{},{},{}", s.user, s.score, i < accused)?;
        }
    } else {
        writeln!(w, "user,score")?;
        for s in &result.accused {
            writeln!(w, "{},{}", s.user, s.score)?;
        }
    }
    if let DecodeMode::Threshold(z) = mode {
        writeln!(w, "# threshold {z}")?;
    }
    writeln!(
        w,
        "# work scores_computed={} dot_products_total={}",
        result.work.scores_computed, result.work.dot_products_total
    )?;
    w.flush()?;
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad grid {spec:?}, expected start:end:step"))?;
    let [start, end, step] = parts[..] else {
        bail!("bad grid {spec:?}, expected start:end:step");
    };
    if step.is_nan() || step <= 0.0 || end < start {
        bail!("grid needs step > 0 and end >= start");
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

const CURVE_HEADER: &str = "alpha,rho_s,rho_q";

fn cmd_tradeoff(a: &TradeoffArgs) -> Result<()> {
    let mut w = output(a.out.as_deref())?;
    if let Some(c) = a.c {
        let dist = match &a.dist {
            Some(d) => BiasDistribution::parse(d, c)?,
            None => reference_distribution(c)
                .with_context(|| format!("no built-in distribution for c = {c}; pass --dist"))?,
        };
        writeln!(w, "{TABLE_HEADER}")?;
        writeln!(w, "{}", table_row(&dist, c)?.to_csv())?;
    } else if let (Some(alpha), Some(curve)) = (a.alpha, &a.curve) {
        writeln!(w, "{CURVE_HEADER}")?;
        for rho_s in parse_grid(curve)? {
            let pt = tradeoff(alpha, Regime::FixedSpace(rho_s))?;
            writeln!(w, "{alpha},{},{}", pt.rho_s, pt.rho_q)?;
        }
    } else {
        let points: Vec<_> = if let Some(alpha) = a.alpha {
            [Regime::FixedSpace(0.0), Regime::Balanced, Regime::FixedQuery(0.0)]
                .into_iter()
                .map(|r| tradeoff(alpha, r))
                .collect::<tardos_core::Result<_>>()?
        } else if let (Some(d0), Some(d1)) = (a.d0, a.d1) {
            [Regime::FixedSpace(0.0), Regime::Balanced, Regime::FixedQuery(0.0)]
                .into_iter()
                .map(|r| tradeoff_for(d0, d1, r))
                .collect::<tardos_core::Result<_>>()?
        } else {
            bail!("pass --c, --alpha or --d0/--d1");
        };
        writeln!(w, "regime,alpha,rho_q,rho_s")?;
        for (name, pt) in ["I", "II", "III"].iter().zip(points) {
            writeln!(w, "{name},{},{},{}", pt.alpha, pt.rho_q, pt.rho_s)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_table(cs: &[usize], dist: Option<&str>, out: Option<&Path>) -> Result<()> {
    let mut w = output(out)?;
    writeln!(w, "{TABLE_HEADER}")?;
    for &c in cs {
        let d = match dist {
            Some(d) => BiasDistribution::parse(d, c)?,
            None => reference_distribution(c)
                .with_context(|| format!("no built-in distribution for c = {c}; pass --dist"))?,
        };
        writeln!(w, "{}", table_row(&d, c)?.to_csv())?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_experiment(seed: Seed, a: &ExperimentArgs) -> Result<()> {
    let mode = match (a.top, a.threshold) {
        (_, Some(z)) => DecodeMode::Threshold(z),
        (m, None) => DecodeMode::TopM(m.unwrap_or(a.c)),
    };
    let cfg = ExperimentConfig {
        n: a.n,
        len: a.len,
        c: a.c,
        trials: a.trials,
        dist: BiasDistribution::parse(&a.dist, a.c)?,
        strategy: a.strategy.clone(),
        lsh: a.lsh.params()?,
        kind: a.kind,
        mode,
        seed,
        window: a.window,
        series_points: a.series_points,
        histogram_bins: a.bins,
    };
    let report = run_experiment(&cfg)?;
    let mut w = output(a.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    if let Some(prefix) = &a.csv_prefix {
        std::fs::write(format!("{prefix}trials.csv"), report.trials_csv())?;
        std::fs::write(format!("{prefix}series.csv"), report.series_csv())?;
        std::fs::write(format!("{prefix}histogram.csv"), report.histogram_csv())?;
    }
    Ok(())
}

fn cmd_moments(seed: Seed, dist: &str, c: usize, trials: Option<usize>, len: usize, strategy: &str) -> Result<()> {
    let dist = BiasDistribution::parse(dist, c)?;
    let mut w = io::stdout().lock();
    writeln!(
        w,
        "source,mu0_per_len,mu1_per_len,qnorm_per_sqrt_len,d0,d1,var0_per_len,var1_per_len,se0,se1"
    )?;
    let exact = moments_interleaving(&dist, c)?;
    let (d0, d1) = normalized_dots(&exact)?;
    writeln!(
        w,
        "closed-form,{},{},{},{d0},{d1},,,,",
        exact.mu0_per_seg, exact.mu1_per_seg, exact.qnorm_per_sqrtseg
    )?;
    if let Some(trials) = trials {
        let strategy = named_strategy(strategy, c)?;
        let mc = monte_carlo_moments(&dist, &strategy, len, trials, seed)?;
        let (d0, d1) = normalized_dots(&mc)?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "monte-carlo,{},{},{},{d0},{d1},{},{},{},{}",
            mc.mu0_per_seg,
            mc.mu1_per_seg,
            mc.qnorm_per_sqrtseg,
            opt(mc.var0),
            opt(mc.var1),
            opt(mc.se0),
            opt(mc.se1)
        )?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let seed = Seed(cli.seed);
    match &cli.command {
        Command::Gen { n, len, dist, c, out } => cmd_gen(seed, *n, *len, dist, *c, out),
        Command::Attack {
            codebook,
            colluders,
            strategy,
            theta,
            out,
        } => cmd_attack(seed, codebook, colluders, strategy, theta.clone(), out),
        Command::Decode(a) => cmd_decode(seed, a),
        Command::Tradeoff(a) => cmd_tradeoff(a),
        Command::Table { c, dist, out } => cmd_table(c, dist.as_deref(), out.as_deref()),
        Command::Experiment(a) => cmd_experiment(seed, a),
        Command::Moments {
            dist,
            c,
            trials,
            len,
            strategy,
        } => cmd_moments(seed, dist, *c, *trials, *len, strategy),
    }
}
