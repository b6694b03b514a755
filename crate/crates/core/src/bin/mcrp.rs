use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use multiset_crp::distribution::{k_moments, k_moments_weighted, tv_poisson_of, CentralMoments};
use multiset_crp::experiments::{
    run_clt, run_growth, run_law_check, run_lyapunov, run_trajectory, run_tv_curve, to_csv,
    ExperimentReport, ProfileGenerator, ProfileKind,
};
use multiset_crp::oracle::verify_suite;
use multiset_crp::perm::{format_word, parse_word, profile_of_word};
use multiset_crp::rational::{format_rational, rational_to_f64};
use multiset_crp::rng::replicate_seed;
use multiset_crp::{
    compose, factorize, k_pmf, sample_permutation, CycleDecomposition, Permutation, Profile,
    RandomSource, Theta,
};

#[derive(Parser)]
#[command(
    name = "mcrp",
    version,
    about = "Multiset Chinese restaurant process toolkit"
)]
struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Include wall-clock time in experiment reports.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Words,
}

#[derive(Subcommand)]
enum Command {
    /// Draw permutations from the process.
    Sample {
        #[arg(long)]
        profile: Profile,
        #[arg(long, default_value = "1")]
        theta: Theta,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "words")]
        format: Format,
    },
    /// Canonical cycle decomposition of a word, e.g. `factorize 2 1 2`.
    Factorize {
        #[arg(required = true, num_args = 1..)]
        word: Vec<String>,
        /// Profile to check the word against; inferred when omitted.
        #[arg(long)]
        profile: Option<Profile>,
    },
    /// Word of a canonical cycle list, e.g. `compose "(2 1)(2)"`.
    Compose { cycles: String },
    /// Exact law of the cycle count.
    Kpmf {
        #[arg(long)]
        profile: Profile,
        #[arg(long, default_value = "1")]
        theta: Theta,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Exact mean, variance and third central moment of the cycle count.
    Moments {
        #[arg(long)]
        profile: Profile,
        #[arg(long, default_value = "1")]
        theta: Theta,
    },
    /// Total variation distance from the cycle count to Poisson.
    TvPoisson {
        #[arg(long)]
        profile: Profile,
        #[arg(long, default_value = "1")]
        theta: Theta,
    },
    /// Lyapunov ratio at uniform weight.
    Lyapunov {
        #[arg(long)]
        profile_gen: ProfileKind,
        /// Checkpoints, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Compare the library against brute-force oracles.
    Verify {
        #[arg(long, default_value_t = 7)]
        max_size: usize,
        #[arg(long, value_delimiter = ',', default_value = "1/2,1,2")]
        thetas: Vec<Theta>,
    },
    /// KS distance of the standardized cycle count to N(0, 1).
    Clt {
        #[arg(long)]
        profile_gen: ProfileKind,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value = "1")]
        theta: Theta,
        #[arg(long, default_value_t = 10_000)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fail when the KS distance reaches this value.
        #[arg(long, default_value_t = 0.05)]
        max_ks: f64,
        /// Keep per-replicate values in the JSON report.
        #[arg(long)]
        values: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Exact mean and variance of the cycle count against log t.
    Growth {
        #[arg(long)]
        profile_gen: ProfileKind,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Distance to Poisson for all-ones profiles of size 2^j.
    TvCurve {
        #[arg(long, default_value_t = 2)]
        min_exp: u32,
        #[arg(long, default_value_t = 10)]
        max_exp: u32,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// One sampled path of the cycle count.
    Trajectory {
        #[arg(long)]
        profile_gen: ProfileKind,
        #[arg(long, default_value = "1")]
        theta: Theta,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<usize>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Chi-square test of sampled words against the exact law.
    LawCheck {
        #[arg(long)]
        profile: Profile,
        #[arg(long, default_value = "1")]
        theta: Theta,
        #[arg(long, default_value_t = 30_000)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fail when the p-value is at or below this value.
        #[arg(long, default_value_t = 0.001)]
        min_p: f64,
        #[arg(long)]
        values: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

#[derive(Serialize)]
struct SampleRecord {
    index: usize,
    seed: u64,
    word: String,
    cycles: String,
    cycle_count: usize,
    step_counts: Vec<usize>,
}

#[derive(Serialize)]
struct MomentsJson {
    mean: String,
    variance: String,
    third: String,
    mean_f64: f64,
    variance_f64: f64,
    third_f64: f64,
}

impl From<&CentralMoments> for MomentsJson {
    fn from(m: &CentralMoments) -> Self {
        MomentsJson {
            mean: format_rational(&m.mean),
            variance: format_rational(&m.variance),
            third: format_rational(&m.third),
            mean_f64: rational_to_f64(&m.mean),
            variance_f64: rational_to_f64(&m.variance),
            third_f64: rational_to_f64(&m.third),
        }
    }
}

type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn json<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    serde_json::to_string_pretty(value)
}

fn table<R: Serialize + multiset_crp::experiments::CsvRow>(
    rows: &[R],
    format: Format,
) -> Result<(), serde_json::Error> {
    match format {
        Format::Json => println!("{}", json(&rows)?),
        _ => print!("{}", to_csv(rows)),
    }
    Ok(())
}

fn finish(
    mut report: ExperimentReport,
    started: Instant,
    timing: bool,
    keep_values: bool,
) -> ExperimentReport {
    if !keep_values {
        report.values = None;
    }
    if timing {
        report.wall_clock_ms = Some(started.elapsed().as_millis() as u64);
    }
    report
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> CliResult {
    let started = Instant::now();
    match cli.command {
        Command::Sample {
            profile,
            theta,
            count,
            seed,
            format,
        } => {
            let records: Vec<SampleRecord> = (0..count)
                .into_par_iter()
                .map(|i| {
                    let s = replicate_seed(seed, i as u64);
                    let state =
                        sample_permutation(&profile, &theta, &mut RandomSource::from_seed(s));
                    SampleRecord {
                        index: i,
                        seed: s,
                        word: format_word(&state.permutation().to_word()),
                        cycles: state.decomposition().to_string(),
                        cycle_count: state.cycle_count(),
                        step_counts: state.step_counts().to_vec(),
                    }
                })
                .collect();
            match format {
                Format::Json => println!("{}", json(&records)?),
                Format::Csv => {
                    println!("index,seed,word,cycles,cycle_count,step_counts");
                    for r in &records {
                        let steps: Vec<String> =
                            r.step_counts.iter().map(usize::to_string).collect();
                        println!(
                            "{},{},{},{},{},{}",
                            r.index,
                            r.seed,
                            r.word,
                            r.cycles,
                            r.cycle_count,
                            steps.join(" ")
                        );
                    }
                }
                Format::Words => {
                    for r in &records {
                        println!("{}", r.word);
                    }
                }
            }
        }
        Command::Factorize { word, profile } => {
            let word = parse_word(&word.join(" "))?;
            let profile = profile.unwrap_or_else(|| profile_of_word(&word));
            let p = Permutation::from_word(&word, &profile)?;
            println!("{}", factorize(&p));
        }
        Command::Compose { cycles } => {
            let d: CycleDecomposition = cycles.parse()?;
            println!("{}", format_word(&compose(&d)?.to_word()));
        }
        Command::Kpmf {
            profile,
            theta,
            format,
        } => {
            let pmf = k_pmf(&profile, &theta);
            match format {
                Format::Json => println!("{}", serde_json::to_string(&pmf.to_json(false))?),
                _ => {
                    println!("k,probability,approx");
                    for (i, (p, f)) in pmf.probabilities().iter().zip(pmf.to_f64()).enumerate() {
                        println!("{},{},{}", pmf.support_min() + i, format_rational(p), f);
                    }
                }
            }
        }
        Command::Moments { profile, theta } => {
            let m = if theta.is_one() {
                k_moments(&profile)
            } else {
                k_moments_weighted(&profile, &theta)
            };
            println!("{}", json(&MomentsJson::from(&m))?);
        }
        Command::TvPoisson { profile, theta } => {
            println!("{}", tv_poisson_of(&k_pmf(&profile, &theta)));
        }
        Command::Lyapunov {
            profile_gen,
            t,
            format,
        } => {
            table(&run_lyapunov(&profile_gen, &t)?, format)?;
        }
        Command::Verify { max_size, thetas } => {
            let report = verify_suite(max_size, &thetas)?;
            let mut ok = true;
            for check in &report {
                ok &= check.passed();
                let tag = if check.passed() { "PASS" } else { "FAIL" };
                println!(
                    "{tag} {} ({} cases, {} failures)",
                    check.name, check.cases, check.failures
                );
                for c in &check.counterexamples {
                    println!("    counterexample: {c}");
                }
            }
            return Ok(status(ok));
        }
        Command::Clt {
            profile_gen,
            t,
            theta,
            replicates,
            seed,
            max_ks,
            values,
            format,
        } => {
            let gen = ProfileGenerator::new(profile_gen, t);
            let report = run_clt(&gen, &theta, replicates, seed)?;
            let ok = report.passes(max_ks, 0.0);
            if format == Format::Json {
                println!("{}", json(&finish(report, started, cli.timing, values))?);
            } else {
                let (m, sd) = (report.theoretical_mean, report.theoretical_variance.sqrt());
                println!("replicate,k,standardized");
                for (i, k) in report.values.iter().flatten().enumerate() {
                    println!("{i},{k},{}", (*k as f64 - m) / sd);
                }
            }
            return Ok(status(ok));
        }
        Command::Growth {
            profile_gen,
            t,
            format,
        } => {
            table(&run_growth(&profile_gen, &t)?, format)?;
        }
        Command::TvCurve {
            min_exp,
            max_exp,
            format,
        } => {
            if max_exp > 14 || min_exp > max_exp {
                return Err("exponents must satisfy min-exp <= max-exp <= 14".into());
            }
            table(&run_tv_curve(min_exp, max_exp), format)?;
        }
        Command::Trajectory {
            profile_gen,
            theta,
            seed,
            t,
            format,
        } => {
            let horizon = t.iter().copied().max().unwrap_or(0);
            let gen = ProfileGenerator::new(profile_gen, horizon);
            table(&run_trajectory(&gen, &theta, seed, &t)?, format)?;
        }
        Command::LawCheck {
            profile,
            theta,
            replicates,
            seed,
            min_p,
            values,
            format,
        } => {
            let report = run_law_check(&profile, &theta, replicates, seed)?;
            let ok = report.passes(1.0, min_p);
            if format == Format::Json {
                println!("{}", json(&finish(report, started, cli.timing, values))?);
            } else {
                println!("word,observed,expected");
                for c in report.chi_square.iter().flat_map(|c| &c.categories) {
                    println!("{},{},{}", c.word, c.observed, c.expected);
                }
            }
            return Ok(status(ok));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("mcrp: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mcrp: {e}");
            ExitCode::from(2)
        }
    }
}
