use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qrlab_cli::{list_zoo, load_config, run_experiment, write_outputs, zoo_text, EXIT_CONFIG, EXIT_NUMERICAL};

#[derive(Parser)]
#[command(name = "qrlab", version, about = "Value-distribution experiments on quasimeromorphic mappings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Caps worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Q-hat over a grid.
    Qfield(RunArgs),
    /// Yosida indicator sup Q-hat.
    Yosida(RunArgs),
    /// p-Yosida indicator along anchors.
    Pyosida(RunArgs),
    /// D_p and d_p between two sequences.
    Seqdist(RunArgs),
    /// M_p detection by local search.
    Mpdetect(RunArgs),
    /// mu_p coverage check by rasterization.
    Mucheck(RunArgs),
    /// a-point separation statistic.
    Separation(RunArgs),
    /// Average counting function A_f(r).
    Afr(RunArgs),
    /// Oscillation of f on small balls.
    Oscillation(RunArgs),
    /// Multiplicity sums N(f, y, B).
    Nprobe(RunArgs),
    /// List the map zoo.
    Zoo {
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
        /// Also write zoo.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(code: i32, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("qrlab: {msg}");
    ExitCode::from(code as u8)
}

fn run(name: &str, args: RunArgs) -> ExitCode {
    let mut cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if cfg.experiment.name() != name {
        return fail(
            EXIT_CONFIG,
            format!(
                "invalid config field `experiment.kind`: `{}` given to the `{name}` subcommand",
                cfg.experiment.name()
            ),
        );
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.output.dir = o;
    }
    cfg.output.plot |= args.plot;
    if let Some(n) = args.threads {
        if n == 0 {
            return fail(EXIT_CONFIG, "--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(EXIT_CONFIG, format!("--threads: {e}"));
        }
    }
    if let Err(e) = std::fs::create_dir_all(&cfg.output.dir) {
        return fail(EXIT_CONFIG, format!("output directory {}: {e}", cfg.output.dir.display()));
    }
    let outcome = run_experiment(&cfg);
    let written = match write_outputs(&outcome, &cfg.output.dir) {
        Ok(w) => w,
        Err(e) => return fail(EXIT_CONFIG, format!("writing {}: {e}", cfg.output.dir.display())),
    };
    for p in &written {
        println!("wrote {}", p.display());
    }
    match &outcome.report.failure {
        None => ExitCode::SUCCESS,
        Some(f) => fail(EXIT_NUMERICAL, format!("{} failure: {}", f.kind, f.message)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match cli.command {
        Command::Zoo { json, out } => {
            let table = list_zoo();
            if json {
                let rows: Vec<serde_json::Map<String, serde_json::Value>> = table
                    .rows
                    .iter()
                    .map(|r| {
                        table
                            .columns
                            .iter()
                            .cloned()
                            .zip(r.iter().map(|v| serde_json::Value::String(v.clone())))
                            .collect()
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&rows).expect("catalog serializes"));
            } else {
                print!("{}", zoo_text());
            }
            if let Some(dir) = out {
                let bytes = match table.to_csv() {
                    Ok(b) => b,
                    Err(e) => return fail(EXIT_CONFIG, e),
                };
                if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("zoo.csv"), bytes)) {
                    return fail(EXIT_CONFIG, format!("{}: {e}", dir.display()));
                }
            }
            return ExitCode::SUCCESS;
        }
        Command::Qfield(a) => ("qfield", a),
        Command::Yosida(a) => ("yosida", a),
        Command::Pyosida(a) => ("pyosida", a),
        Command::Seqdist(a) => ("seqdist", a),
        Command::Mpdetect(a) => ("mpdetect", a),
        Command::Mucheck(a) => ("mucheck", a),
        Command::Separation(a) => ("separation", a),
        Command::Afr(a) => ("afr", a),
        Command::Oscillation(a) => ("oscillation", a),
        Command::Nprobe(a) => ("nprobe", a),
    };
    run(name, args)
}
