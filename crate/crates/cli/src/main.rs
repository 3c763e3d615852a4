use clap::{Args, Parser, Subcommand};
use enclosure::forward::BoundaryRecord;
use enclosure::indicator::IndicatorSamples;
use enclosure::pipeline::{self, PipelineConfig};
use enclosure::{Error, Result};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Reconstructs interfaces and boundaries of 1D heat conductors from boundary traces.
#[derive(Parser)]
#[command(name = "enclosure", version)]
struct Cli {
    /// Worker threads for probe evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem and write the boundary record.
    Simulate(Common),
    /// Evaluate the indicator on the probe grid from a boundary record.
    Indicate {
        #[command(flatten)]
        common: Common,
        /// Boundary record CSV.
        #[arg(long)]
        record: PathBuf,
        /// Half-resolution record used for the noise estimate.
        #[arg(long)]
        companion: Option<PathBuf>,
    },
    /// Write oracle indicator samples for the configured truth.
    Oracle(Common),
    /// Fit the indicator slope and recover the geometry.
    Extract {
        #[command(flatten)]
        common: Common,
        /// Indicator samples CSV.
        #[arg(long)]
        samples: PathBuf,
    },
    /// Run simulate, indicate and extract in sequence.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Use oracle indicator samples instead of simulated data.
        #[arg(long)]
        oracle: bool,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, body)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn load_config(c: &Common) -> Result<PipelineConfig> {
    PipelineConfig::from_json(&read(&c.config)?)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("threads: {e}")))?;
    }
    match cli.command {
        Command::Simulate(c) => {
            let cfg = load_config(&c)?;
            let sim = pipeline::simulate(&cfg)?;
            write(&c.out, "record.csv", &sim.record.to_csv())?;
            if let Some(h) = &sim.companion {
                write(&c.out, "record_half.csv", &h.to_csv())?;
            }
            for n in &sim.notes {
                println!("note: {n}");
            }
        }
        Command::Indicate { common, record, companion } => {
            let cfg = load_config(&common)?;
            let rec = BoundaryRecord::from_csv(&read(&record)?)?;
            let half = companion.map(|p| read(&p).and_then(|t| BoundaryRecord::from_csv(&t))).transpose()?;
            let ind = pipeline::indicate(&cfg, &rec, half.as_ref())?;
            write(&common.out, "indicator.csv", &ind.samples.to_csv())?;
            let cz = enclosure::extract::Census::of(&ind.samples);
            println!("samples: ok {}, underflow {}, noisy {}, error {}", cz.ok, cz.underflow, cz.noisy, cz.error);
            for n in &ind.notes {
                println!("note: {n}");
            }
        }
        Command::Oracle(c) => {
            let cfg = load_config(&c)?;
            let samples = pipeline::indicate_oracle(&cfg)?;
            write(&c.out, "oracle.csv", &samples.to_csv())?;
        }
        Command::Extract { common, samples } => {
            let cfg = load_config(&common)?;
            let samples = IndicatorSamples::from_csv(&read(&samples)?)?;
            let report = pipeline::extract_report(&cfg, &samples)?;
            write(&common.out, "report.json", &report.to_json()?)?;
            write(&common.out, "slope_curve.csv", &enclosure::extract::slope_curve_csv(&samples, &report.fit))?;
            print!("{}", report.summary());
        }
        Command::Pipeline { common, oracle } => {
            let cfg = load_config(&common)?;
            let out = pipeline::run_pipeline(&cfg, oracle)?;
            if let Some(sim) = &out.simulation {
                write(&common.out, "record.csv", &sim.record.to_csv())?;
                if let Some(h) = &sim.companion {
                    write(&common.out, "record_half.csv", &h.to_csv())?;
                }
            }
            let name = if oracle { "oracle.csv" } else { "indicator.csv" };
            write(&common.out, name, &out.samples.to_csv())?;
            write(&common.out, "report.json", &out.report.to_json()?)?;
            write(&common.out, "slope_curve.csv", &out.slope_curve)?;
            print!("{}", out.report.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
