use std::error::Error;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arrm_core::config::ScenarioConfig;
use arrm_core::experiments::{self, Fig3Row, Fig4Row};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "arrm", version, about = "Anticipatory resource allocation for mobile video streaming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-user SE against the prediction horizon
    Fig2(Common),
    /// Stalling against the number of users
    Fig3(Common),
    /// Stalling and SE across the trade-off parameter
    Fig4(Common),
    /// SE at the target stall fraction, compared with the baseline
    Fig5(Common),
    /// Solve time against problem size
    Table2(Common),
    /// Run the configured scenario
    Custom(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults are used for anything missing
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Replications per sweep point
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (0 picks the number of cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, Box<dyn Error>> {
        let mut config = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.scenario.seed = seed;
        }
        if let Some(reps) = self.reps {
            config.experiment.replications = reps;
        }
        config.validate()?;
        Ok(config)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Box<dyn Error>> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

fn print_points(rows: &[(String, &experiments::PointSummary)]) {
    println!("{:<36} {:>6} {:>16} {:>16}", "point", "reps", "stall", "cell SE");
    for (label, s) in rows {
        println!(
            "{:<36} {:>6} {:>8.4} ±{:<7.4} {:>8} ±{:<7}",
            label,
            s.replications,
            s.stall.mean,
            s.stall.half_width,
            opt(s.cell_se.map(|e| e.mean), 3),
            opt(s.cell_se.map(|e| e.half_width), 3)
        );
    }
}

fn fig3_labels(rows: &[Fig3Row]) -> Vec<(String, &experiments::PointSummary)> {
    rows.iter()
        .map(|r| {
            (
                format!("V={:.1}M K={} {}", r.video_rate_bps / 1e6, r.num_users, r.series.name()),
                &r.summary,
            )
        })
        .collect()
}

fn fig4_labels(rows: &[Fig4Row]) -> Vec<(String, &experiments::PointSummary)> {
    rows.iter()
        .map(|r| {
            let g = r.gamma.map_or_else(String::new, |g| format!(" g={g:.3}"));
            (
                format!("Z={:.0}M V={:.1}M {}{}", r.buffer_cap_bits / 1e6, r.video_rate_bps / 1e6, r.series.name(), g),
                &r.summary,
            )
        })
        .collect()
}

fn run(command: Command) -> Result<(), Box<dyn Error>> {
    let (Command::Fig2(common)
    | Command::Fig3(common)
    | Command::Fig4(common)
    | Command::Fig5(common)
    | Command::Table2(common)
    | Command::Custom(common)) = &command;
    let config = common.load()?;
    rayon::ThreadPoolBuilder::new().num_threads(common.threads).build_global()?;
    let out = &common.out;
    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    fs::write(out.join("config.toml"), config.to_toml_string()?)?;

    match command {
        Command::Fig2(_) => {
            let rows = experiments::run_fig2(&config)?;
            experiments::write_fig2_csv(&rows, create(out, "fig2.csv")?)?;
            println!("{:>8} {:>7} {:<14} {:>9} {:>8}", "V Mbit/s", "horizon", "mode", "user SE", "stall");
            for r in &rows {
                println!(
                    "{:>8.1} {:>7} {:<14} {:>9} {:>8.4}",
                    r.video_rate_bps / 1e6,
                    r.horizon,
                    r.mode,
                    opt(r.user_se, 3),
                    r.stall_fraction
                );
            }
        }
        Command::Fig3(_) => {
            let rows = experiments::run_fig3(&config)?;
            experiments::write_fig3_csv(&rows, create(out, "fig3.csv")?)?;
            print_points(&fig3_labels(&rows));
        }
        Command::Fig4(_) => {
            let rows = experiments::run_fig4(&config)?;
            experiments::write_fig4_csv(&rows, create(out, "fig4.csv")?)?;
            print_points(&fig4_labels(&rows));
        }
        Command::Fig5(_) => {
            let (sweep, rows) = experiments::run_fig5(&config)?;
            experiments::write_fig4_csv(&sweep, create(out, "fig5_sweep.csv")?)?;
            experiments::write_fig5_csv(&rows, create(out, "fig5.csv")?)?;
            println!("{:>6} {:>8} {:<11} {:>10} {:>10} {:>7}", "Z Mbit", "V Mbit/s", "series", "SE", "baseline", "gain");
            for r in &rows {
                println!(
                    "{:>6.0} {:>8.1} {:<11} {:>10} {:>10} {:>7}",
                    r.buffer_cap_bits / 1e6,
                    r.video_rate_bps / 1e6,
                    r.series.name(),
                    opt(r.se_at_target, 3),
                    opt(r.baseline_se, 3),
                    opt(r.gain, 2)
                );
            }
        }
        Command::Table2(_) => {
            let rows = experiments::run_table2(&config)?;
            experiments::write_table2_csv(&rows, create(out, "table2.csv")?)?;
            experiments::write_table2_timing_csv(&rows, create(out, "table2_timing.csv")?)?;
            println!(
                "{:>3} {:>4} {:>6} {:>6} {:>10} {:>18} {:>11} {:>11}",
                "K'", "T", "vars", "rows", "median ms", "quartiles ms", "buffered ms", "baseline ms"
            );
            for r in &rows {
                println!(
                    "{:>3} {:>4} {:>6} {:>6} {:>10.2} {:>8.2} - {:<8.2} {:>11.2} {:>11.4}",
                    r.k_prime,
                    r.horizon,
                    r.num_vars,
                    r.num_constraints,
                    r.median_time_s * 1e3,
                    r.lower_quartile_s * 1e3,
                    r.upper_quartile_s * 1e3,
                    r.buffered_median_s * 1e3,
                    r.baseline_median_s * 1e3
                );
            }
        }
        Command::Custom(_) => {
            let run = experiments::run_custom(&config)?;
            experiments::write_custom_csv(&run, create(out, "custom.csv")?)?;
            if let Some(trace) = &run.first_trace {
                let mut w = create(out, "custom_records.csv")?;
                trace.write_records_csv(&mut w)?;
                w.flush()?;
                let mut w = create(out, "custom_events.csv")?;
                trace.write_events_csv(&mut w)?;
                w.flush()?;
                let mut w = create(out, "custom_timing.csv")?;
                trace.write_timing_csv(&mut w)?;
                w.flush()?;
            }
            print_points(&[("configured scenario".to_string(), &run.summary)]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
