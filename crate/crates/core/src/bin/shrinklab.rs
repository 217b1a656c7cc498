use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shrinklab::coding::{allowed_blocks, build_towers, check_towers, code_word, write_towers_csv};
use shrinklab::equidist::decay_profile_with;
use shrinklab::harness::{parse_checkpoints, parse_map, run_experiment, sample_points, write_outputs, ExperimentConfig, DEFAULT_MASTER_SEED};
use shrinklab::numbers::{cf_expand, diophantine_report, CFExpansion, Rational};
use shrinklab::targets::{hit_ratio_series, window_correlation, window_integral, RadiusSpec};
use shrinklab::undetermined::{spike_alpha, spike_witness, undetermined_series, AtomContext};
use shrinklab::{Error, Result};

#[derive(Parser)]
#[command(name = "shrinklab", version, about = "Exact experiments on interval exchanges and shrinking targets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continued fraction expansion, convergents and quotient growth report.
    Cf {
        /// Rational in (0, 1), e.g. 13/21.
        #[arg(long, conflicts_with = "quotients")]
        alpha: Option<Rational>,
        /// Comma-separated partial quotients.
        #[arg(long)]
        quotients: Option<CFExpansion>,
        /// Threshold C for the log-defect column.
        #[arg(long, default_value_t = 3)]
        c: u64,
    },
    /// Orbit points, or the coding word with --code.
    Orbit {
        #[arg(long)]
        map: String,
        #[arg(long)]
        x: Rational,
        #[arg(long, default_value_t = 20)]
        n: u64,
        #[arg(long)]
        code: bool,
    },
    /// Allowed n-blocks as CSV.
    Blocks {
        #[arg(long)]
        map: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rokhlin towers over n-blocks as CSV, with the exact checks on stderr.
    Towers {
        #[arg(long)]
        map: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hit counts of B(center, r_i) along one orbit as CSV.
    Hits {
        #[arg(long)]
        map: String,
        #[arg(long)]
        radius: RadiusSpec,
        #[arg(long, default_value = "1/2")]
        center: Rational,
        /// Starting point; defaults to the first sampled point.
        #[arg(long)]
        x: Option<Rational>,
        #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
        seed: u64,
        #[arg(long, default_value = "geometric:10,10,5")]
        checkpoints: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact window correlation against the product of window integrals.
    Correlate {
        #[arg(long)]
        map: String,
        #[arg(long)]
        radius: RadiusSpec,
        #[arg(long, default_value = "1/2")]
        center: Rational,
        #[arg(long)]
        ni: u64,
        #[arg(long)]
        nj: u64,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Discrepancy decay profile between two orbits.
    Equidist {
        #[arg(long)]
        map: String,
        #[arg(long, default_value = "1/10")]
        xi: Rational,
        #[arg(long, default_value_t = 3)]
        index: usize,
        #[arg(long, default_value_t = 8)]
        l_max: usize,
        #[arg(long)]
        x: Option<Rational>,
        #[arg(long)]
        x2: Option<Rational>,
        /// Block by left-endpoint order instead of the smallest.
        #[arg(long)]
        block: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Undetermined-target series S_n and Lambda_n as CSV.
    Undet {
        #[arg(long)]
        map: String,
        #[arg(long)]
        x: Option<Rational>,
        #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
        seed: u64,
        #[arg(long, default_value = "geometric:10,10,6")]
        checkpoints: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spike expansion and its window-count witness as JSON.
    Spike {
        /// Base expansion; defaults to all ones of depth 20.
        #[arg(long)]
        base: Option<CFExpansion>,
        #[arg(long, default_value_t = 12)]
        m: usize,
        #[arg(long, default_value_t = 10_000)]
        k: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment from a key=value config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Command outcome: whether every asserted property held.
type Outcome = Result<bool>;

fn sink(out: &Option<PathBuf>, name: &str) -> Result<Box<dyn Write>> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Ok(Box::new(std::fs::File::create(dir.join(name))?))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn first_point(x: Option<Rational>, seed: u64) -> Rational {
    x.unwrap_or_else(|| sample_points(seed, 1).remove(0))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Cf { alpha, quotients, c } => {
            let cf = match (alpha, quotients) {
                (Some(a), _) => cf_expand(&a, usize::MAX)?,
                (None, Some(q)) => q,
                (None, None) => return Err(Error::Parse("give --alpha or --quotients".into())),
            };
            let rep = diophantine_report(&cf, c);
            println!("quotients: {}", cf.to_list_string());
            println!("value: {}", cf.value());
            println!("horizon: {}", cf.horizon());
            println!("k;p_k;q_k");
            for (k, (p, q)) in cf.convergents().iter().enumerate() {
                println!("{k};{p};{q}");
            }
            println!("violations (a_n^3 >= n^4): {:?}", rep.violations);
            println!("max quotient: {}", rep.max_quotient);
            Ok(true)
        }
        Command::Orbit { map, x, n, code } => {
            let t = parse_map(&map, DEFAULT_MASTER_SEED)?.iet;
            t.check_horizon(n)?;
            if code {
                println!("{}", code_word(&t, &x, n as usize));
            } else {
                let mut p = x;
                for k in 0..=n {
                    println!("{k};{p}");
                    p = t.apply(&p, 1);
                }
            }
            Ok(true)
        }
        Command::Blocks { map, n, out } => {
            let t = parse_map(&map, DEFAULT_MASTER_SEED)?.iet;
            t.check_horizon(n as u64)?;
            allowed_blocks(&t, n).write_csv(sink(&out, "blocks.csv")?)?;
            Ok(true)
        }
        Command::Towers { map, n, out } => {
            let t = parse_map(&map, DEFAULT_MASTER_SEED)?.iet;
            let towers = build_towers(&t, n)?;
            write_towers_csv(&towers, sink(&out, "towers.csv")?)?;
            let check = check_towers(&t, &towers, n);
            eprintln!("{}", serde_json::to_string(&check)?);
            Ok(check.all_ok())
        }
        Command::Hits { map, radius, center, x, seed, checkpoints, out } => {
            let t = parse_map(&map, seed)?.iet;
            let x = first_point(x, seed);
            let cps = parse_checkpoints(&checkpoints)?;
            let s = hit_ratio_series(&t, &x, &center, &radius, &cps)?;
            s.write_csv(sink(&out, "hits.csv")?)?;
            Ok(s.checkpoints.windows(2).all(|w| w[0].hits <= w[1].hits))
        }
        Command::Correlate { map, radius, center, ni, nj, budget } => {
            let t = parse_map(&map, DEFAULT_MASTER_SEED)?.iet;
            let c = window_correlation(&t, &center, &radius, ni, nj, budget)?;
            let (a, b) = (window_integral(&radius, ni)?, window_integral(&radius, nj)?);
            let product = a.clone() * &b;
            println!("correlation: {c} ({:.9})", c.to_f64());
            println!("integrals: {a} {b}");
            println!("difference: {:.9}", (c.clone() - &product).to_f64());
            Ok(ni != nj || c >= product)
        }
        Command::Equidist { map, xi, index, l_max, x, x2, block, seed, out } => {
            let t = parse_map(&map, seed)?.iet;
            let pts = sample_points(seed, 2);
            let x = x.unwrap_or_else(|| pts[0].clone());
            let x2 = x2.unwrap_or_else(|| pts[1].clone());
            let prof = decay_profile_with(&t, &xi, index, &x, &x2, l_max, block)?;
            prof.write_csv(sink(&out, "decay.csv")?)?;
            let summary = serde_json::to_string_pretty(&prof.summary_json())?;
            match &out {
                Some(dir) => std::fs::write(dir.join("decay.json"), summary + "\n")?,
                None => eprintln!("{summary}"),
            }
            Ok(prof.levels.iter().all(|l| l.discrepancy <= Rational::one()))
        }
        Command::Undet { map, x, seed, checkpoints, out } => {
            let cf = parse_map(&map, seed)?
                .cf
                .ok_or_else(|| Error::Parse("undet needs a rotation map".into()))?;
            let ctx = AtomContext::from_cf(&cf);
            let x = first_point(x, seed);
            let s = undetermined_series(&ctx, &x, &parse_checkpoints(&checkpoints)?)?;
            s.write_csv(sink(&out, "undetermined.csv")?)?;
            Ok(s.asserted_hold())
        }
        Command::Spike { base, m, k, out } => {
            let base = base.unwrap_or_else(|| CFExpansion::golden(20));
            let spike = spike_alpha(&base, m, k)?;
            let w = spike_witness(&spike.cf, m)?;
            let json = serde_json::json!({
                "quotients": spike.cf.to_list_string(),
                "c_achieved": spike.c_achieved.to_string(),
                "j0": w.j0,
                "a_m": w.a_m,
                "x_interval": w.x_interval,
                "count_max": w.count_max,
                "x_prime_interval": w.x_prime_interval,
                "count_min": w.count_min,
                "sweep_max": w.sweep_max,
                "routes_agree": w.routes_agree,
            });
            writeln!(sink(&out, "spike.json")?, "{}", serde_json::to_string_pretty(&json)?)?;
            Ok(w.routes_agree && w.count_max == w.a_m && w.count_min == 1)
        }
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if out.is_some() {
                cfg.out = out;
            }
            let report = run_experiment(&cfg)?;
            if let Some(dir) = &cfg.out {
                write_outputs(&report, Path::new(dir))?;
            }
            for a in &report.aggregate {
                println!("n={} median={:.4} q90={:.4} ({} seeds)", a.n, a.median, a.q90, a.count);
            }
            for a in &report.assertions {
                println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
            }
            for n in &report.notes {
                println!("note: {n}");
            }
            eprintln!("wall time: {:.2?}", report.wall_time);
            Ok(report.all_passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Error::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
