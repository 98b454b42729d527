use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypfill::experiment::{compare_reports, preset, run_scenario, Scenario, PRESETS};
use hypfill::Error;

#[derive(Parser)]
#[command(name = "hypfill", version, about = "Capacity, covering capacity and modulus experiments on hyperbolic fillings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios given as config files or preset names.
    Run {
        #[arg(required = true)]
        configs: Vec<String>,
        /// Replace the depth list with one depth.
        #[arg(long)]
        depth: Option<usize>,
        /// Replace the exponent grid with one exponent.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Report directory.
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Ratio table between two CSV reports.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Numeric columns to compare.
        #[arg(long, value_delimiter = ',', default_value = "weak_value")]
        keys: Vec<String>,
        #[arg(long, default_value_t = 1.5)]
        slack: f64,
    },
    /// Print the named scenarios.
    ListScenarios,
}

fn load(arg: &str) -> Result<Scenario, Error> {
    let path = PathBuf::from(arg);
    let text = if path.is_file() {
        std::fs::read_to_string(&path)?
    } else if let Some(t) = preset(arg) {
        t.to_string()
    } else {
        return Err(Error::Config(format!("`{arg}` is neither a config file nor a preset")));
    };
    Scenario::parse(&text)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { configs, depth, p, seed, out } => {
            let scenarios: Result<Vec<Scenario>, Error> =
                configs.iter().map(|c| load(c).map(|s| s.with_overrides(depth, p, seed))).collect();
            let scenarios = match scenarios {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("config-error: {e}");
                    return ExitCode::from(2);
                }
            };
            let results: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = scenarios.iter().map(|sc| scope.spawn(move || run_scenario(sc))).collect();
                handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Error::Internal("worker panicked".into())))).collect()
            });
            let mut code = 0u8;
            for (sc, res) in scenarios.iter().zip(results) {
                match res.and_then(|rep| rep.write(&out).map(|paths| (rep, paths))) {
                    Ok((rep, (csv, _))) => {
                        let v = rep.violations();
                        println!("{}: {} rows, {} violations, {}", sc.name, rep.rows.len(), v, csv.display());
                        if v > 0 {
                            code = code.max(1);
                        }
                    }
                    Err(e) => {
                        eprintln!("{}: {e}", sc.name);
                        code = code.max(if matches!(e, Error::Config(_)) { 2 } else { 1 });
                    }
                }
            }
            ExitCode::from(code)
        }
        Command::Compare { a, b, keys, slack } => {
            let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(Error::from);
            let keys: Vec<&str> = keys.iter().map(String::as_str).collect();
            match read(&a).and_then(|x| read(&b).and_then(|y| compare_reports(&x, &y, &keys, slack))) {
                Ok(c) => {
                    print!("{}", c.to_text());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::ListScenarios => {
            for (name, about, _) in PRESETS {
                println!("{name:<22} {about}");
            }
            ExitCode::SUCCESS
        }
    }
}
