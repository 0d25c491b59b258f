use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use dendrite_core::kmeans::write_centroids_csv;
use dendrite_core::WeightMatrix;
use dendrite_harness::config::{parse_override, parse_pairs, ExperimentConfig, Mode};
use dendrite_harness::runner::{self, load_classify_data, run_kmeans};
use dendrite_harness::sweep::{load_grid, parse_axis, sweep, sweep_csv};
use dendrite_harness::waveform::{generate_synthetic, write_patterns_csv, write_waveforms_csv};

#[derive(Parser)]
#[command(name = "dendrite", version, about = "Active-dendrite clustering and classification experiments")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Args, Clone)]
struct Common {
    /// key=value config file
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable), e.g. --set threshold=120
    #[arg(short, long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Verb {
    /// Stream waveforms through one always-enabled dendrite
    Cluster(Common),
    /// Online supervised classification of an image stream
    Classify(Common),
    /// Run the configured experiment over a parameter grid
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Grid file with one key=v1,v2,... axis per line
        #[arg(short, long)]
        grid: Option<PathBuf>,
        /// Grid axis key=v1,v2,... (repeatable)
        #[arg(short, long)]
        axis: Vec<String>,
    },
    /// Best-of-seeds k-means on the clustering encodings
    Kmeans(Common),
    /// Dump encoded input vectors
    Encode {
        #[command(flatten)]
        common: Common,
        /// Encode at most this many inputs
        #[arg(short, long)]
        limit: Option<usize>,
    },
    /// Dump a weight checkpoint as per-segment grids in weight units
    Inspect {
        /// weights.bin or weights.csv
        weights: PathBuf,
        /// Grid height; defaults to 2^precision of the clustering encoding
        #[arg(long, default_value_t = 32)]
        rows: usize,
        /// Output file (stdout when absent)
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Write the synthetic waveform benchmark as CSV
    Generate(Common),
}

fn load_config(c: &Common, mode: Option<Mode>) -> anyhow::Result<(ExperimentConfig, Vec<(String, String)>)> {
    let mut pairs = match &c.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_pairs(&text, p)?
        }
        None => Vec::new(),
    };
    for s in &c.set {
        pairs.push(parse_override(s)?);
    }
    if let Some(m) = mode {
        pairs.push(("mode".into(), if m == Mode::Cluster { "cluster" } else { "classify" }.into()));
    }
    let cfg = ExperimentConfig::from_pairs(&pairs)?;
    for w in cfg.params.warnings() {
        eprintln!("warning: {w}");
    }
    Ok((cfg, pairs))
}

fn mkdir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn print_summary(summary: &[(String, String)]) {
    for (k, v) in summary {
        println!("{k} = {v}");
    }
}

fn experiment(c: &Common, mode: Mode) -> anyhow::Result<()> {
    let (cfg, _) = load_config(c, Some(mode))?;
    let out = runner::run(&cfg)?;
    runner::write_outputs(&out, &c.out)?;
    print_summary(&out.metrics().summary);
    Ok(())
}

fn encode(c: &Common, limit: Option<usize>) -> anyhow::Result<()> {
    let (cfg, _) = load_config(c, None)?;
    mkdir(&c.out)?;
    let path = c.out.join("encodings.csv");
    let mut file = std::io::BufWriter::new(fs::File::create(&path).with_context(|| path.display().to_string())?);
    match cfg.mode {
        Mode::Cluster => {
            let mut patterns = runner::cluster_patterns(&cfg)?;
            patterns.truncate(limit.unwrap_or(usize::MAX));
            write_patterns_csv(&patterns, &mut file)?;
            println!("wrote {} patterns of {} bits to {}", patterns.len(), cfg.frame.frame_size(), path.display());
        }
        Mode::Classify => {
            let stream = load_classify_data(&cfg)?;
            let n = stream.labels.len().min(limit.unwrap_or(usize::MAX));
            for step in 0..n {
                let ctx = runner::encode_image(&cfg, stream.images.image(step), stream.images.rows, stream.images.cols, step)?;
                let bits: Vec<String> = ctx.iter().flat_map(|v| v.to_bits()).map(|b| b.to_string()).collect();
                writeln!(file, "{},{}", stream.labels[step], bits.join(","))?;
            }
            println!("wrote {n} labelled inputs to {}", path.display());
        }
    }
    file.flush()?;
    Ok(())
}

fn kmeans_verb(c: &Common) -> anyhow::Result<()> {
    let (cfg, _) = load_config(c, None)?;
    if cfg.mode != Mode::Cluster {
        bail!("kmeans runs on clustering encodings; set mode=cluster");
    }
    let (res, patterns) = run_kmeans(&cfg)?;
    mkdir(&c.out)?;
    let path = c.out.join("centroids.csv");
    write_centroids_csv(&res.best.centroids, fs::File::create(&path)?)?;
    let mut runs = String::from("seed,avg_dist\n");
    for (s, d) in &res.runs {
        runs.push_str(&format!("{s},{d}\n"));
    }
    fs::write(c.out.join("kmeans_runs.csv"), runs)?;
    println!("patterns = {}", patterns.len());
    println!("best_seed = {}", res.best.seed);
    println!("avg_dist = {}", res.best.avg_dist);
    println!("convergence = {}", res.best.convergence);
    println!("epochs = {}", res.best.epochs);
    Ok(())
}

fn sweep_verb(c: &Common, grid: Option<&Path>, axis: &[String]) -> anyhow::Result<()> {
    let (_, pairs) = load_config(c, None)?;
    let mut axes = match grid {
        Some(p) => load_grid(p)?,
        None => Vec::new(),
    };
    for a in axis {
        axes.push(parse_axis(a)?);
    }
    if axes.is_empty() {
        bail!("sweep needs --grid or at least one --axis");
    }
    let (rows, metric) = sweep(&pairs, &axes)?;
    mkdir(&c.out)?;
    fs::write(c.out.join("sweep.csv"), sweep_csv(&axes, &rows))?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    println!("{} grid points, {failed} failed, ranked by {metric}", rows.len());
    if let Some(best) = rows.first().filter(|r| r.outcome.is_ok()) {
        let point: Vec<String> = best.point.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("best: {} ({metric} = {})", point.join(" "), best.primary(metric).unwrap_or(f64::NAN));
    }
    Ok(())
}

fn inspect(weights: &Path, rows: usize, out: Option<&Path>) -> anyhow::Result<()> {
    let file = fs::File::open(weights).with_context(|| format!("opening {}", weights.display()))?;
    let w = if weights.extension().is_some_and(|e| e == "csv") {
        WeightMatrix::read_csv(std::io::BufReader::new(file))?
    } else {
        WeightMatrix::read_binary(std::io::BufReader::new(file))?
    };
    if rows == 0 || w.rows() % rows != 0 {
        bail!("{} synapses per segment do not form a grid with {rows} rows", w.rows());
    }
    let cols = w.rows() / rows;
    let scale = f64::from(w.scale_denominator());
    let mut text = String::from("segment,row,values\n");
    for j in 0..w.cols() {
        let col = w.column(j);
        // Synapses are laid out row-major over the image; print the
        // highest amplitude row first.
        for r in (0..rows).rev() {
            let vals: Vec<String> = (0..cols).map(|c| (f64::from(col[r * cols + c]) / scale).to_string()).collect();
            text.push_str(&format!("{j},{r},{}\n", vals.join(" ")));
        }
    }
    match out {
        Some(p) => fs::write(p, text).with_context(|| p.display().to_string())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn generate(c: &Common) -> anyhow::Result<()> {
    let (cfg, _) = load_config(c, Some(Mode::Cluster))?;
    mkdir(&c.out)?;
    let waves = generate_synthetic(&cfg.synthetic);
    let path = c.out.join("waveforms.csv");
    write_waveforms_csv(&waves, &path)?;
    println!("wrote {} waveforms to {}", waves.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.verb {
        Verb::Cluster(c) => experiment(c, Mode::Cluster),
        Verb::Classify(c) => experiment(c, Mode::Classify),
        Verb::Sweep { common, grid, axis } => sweep_verb(common, grid.as_deref(), axis),
        Verb::Kmeans(c) => kmeans_verb(c),
        Verb::Encode { common, limit } => encode(common, *limit),
        Verb::Inspect { weights, rows, out } => inspect(weights, *rows, out.as_deref()),
        Verb::Generate(c) => generate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
