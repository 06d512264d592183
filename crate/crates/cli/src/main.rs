mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use rwodsn::dsn::build_dsn;
use rwodsn::io::{read_cloud, write_cloud, Format};
use rwodsn::metrics::{evaluate, render_csv, render_text, EvalOptions, MetricsReport};
use rwodsn::normals::{estimate_normals, DEFAULT_NORMAL_K};
use rwodsn::perturb::{add_noise, simplify};
use rwodsn::segment::{segment, DEFAULT_SEGMENT_K};
use rwodsn::walk::run_walks_traced;
use rwodsn::{detect_features_detailed, synth, DsnParams, LabeledCloud, Point3, SynthShape};

use config::ConfigFile;

#[derive(Parser)]
#[command(name = "rwodsn", version, about = "Feature point detection on raw point clouds")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// key=value file supplying defaults for the flags below
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "RWODSN_THREADS")]
    threads: Option<usize>,
    /// Global random seed [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// File format for every cloud read or written; otherwise taken from the extension
    #[arg(long, global = true, value_name = "xyz|ply")]
    format: Option<Format>,
}

#[derive(Args, Default)]
struct DetectorArgs {
    /// Sampling angle in degrees; must divide 360
    #[arg(long)]
    phi: Option<f64>,
    /// Number of concentric disks
    #[arg(long)]
    disks: Option<usize>,
    /// Neighbors used for the sampling density
    #[arg(long)]
    k_density: Option<usize>,
    /// Random walks per point (T)
    #[arg(long)]
    walks: Option<usize>,
    /// Accepted steps per walk (m)
    #[arg(long)]
    steps: Option<usize>,
    /// Fraction of walks an edge must be traversed in to be kept
    #[arg(long)]
    connect_fraction: Option<f64>,
    /// Path tolerance as a multiple of the sampling density
    #[arg(long)]
    path_tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Csv,
    Text,
}

#[derive(Args)]
struct EvalArgs {
    /// Correspondence radius in normalized units [default: twice the median ground-truth spacing]
    #[arg(long)]
    epsilon: Option<f64>,
    /// Skip ICP alignment
    #[arg(long)]
    no_icp: bool,
    #[arg(long, value_enum, default_value = "text")]
    report: Report,
    /// Write the report here instead of standard output
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Label every point as feature or non-feature
    Detect {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        detector: DetectorArgs,
        /// Re-estimate normals even when the input carries them
        #[arg(long)]
        estimate_normals: bool,
        /// Neighbors used for normal estimation
        #[arg(long)]
        normal_k: Option<usize>,
        /// Dump the descriptor and walks of this point
        #[arg(long, value_name = "POINT")]
        trace: Option<usize>,
        /// Where to write the trace [default: standard error]
        #[arg(long, requires = "trace")]
        trace_out: Option<PathBuf>,
    },
    /// Score detected features against ground truth
    Eval {
        /// Detected features: a labeled cloud, or a file of feature points
        pred: PathBuf,
        /// Ground truth: a cloud with ground_truth flags, or a file of feature points
        gt: PathBuf,
        /// Size of the source cloud [default: from the labeled input]
        #[arg(long)]
        cloud_size: Option<usize>,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Split non-feature points into surface segments
    Segment {
        input: PathBuf,
        output: PathBuf,
        /// Neighbors followed from each point
        #[arg(long, default_value_t = DEFAULT_SEGMENT_K)]
        k: usize,
    },
    /// Add Gaussian noise or randomly subsample
    Perturb {
        input: PathBuf,
        output: PathBuf,
        /// Noise standard deviation as a multiple of the mean sampling density
        #[arg(long, conflicts_with = "keep", required_unless_present = "keep")]
        noise: Option<f64>,
        /// Fraction of points to keep
        #[arg(long)]
        keep: Option<f64>,
        /// Neighbors used for the sampling density
        #[arg(long)]
        k_density: Option<usize>,
    },
    /// Generate a synthetic shape with ground-truth creases
    Synth {
        /// plane, cube, cylinder, wedge or wedge:<degrees>
        shape: SynthShape,
        output: PathBuf,
        #[arg(long, default_value_t = 0.02)]
        spacing: f64,
        #[arg(long, default_value_t = 1.0)]
        extent: f64,
    },
    /// Score every model in a directory and append the mean row
    BatchEval {
        /// Holds NAME.pred.EXT / NAME.gt.EXT pairs or labeled clouds with ground truth
        dir: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
}

struct Session {
    cfg: ConfigFile,
    seed: u64,
    format: Option<Format>,
}

impl Session {
    fn format_of(&self, path: &Path) -> Format {
        self.format.unwrap_or_else(|| Format::from_path(path))
    }

    fn read(&self, path: &Path) -> Result<LabeledCloud> {
        Ok(read_cloud(path, self.format_of(path))?)
    }

    fn write(&self, labeled: &LabeledCloud, path: &Path) -> Result<()> {
        Ok(write_cloud(labeled, path, self.format_of(path))?)
    }

    fn params(&self, d: &DetectorArgs) -> Result<DsnParams> {
        let base = DsnParams::default();
        let c = &self.cfg;
        let params = DsnParams {
            phi_deg: c.pick(d.phi, "phi")?.unwrap_or(base.phi_deg),
            n_disks: c.pick(d.disks, "disks")?.unwrap_or(base.n_disks),
            k_density: c.pick(d.k_density, "k_density")?.unwrap_or(base.k_density),
            walk_repeats: c.pick(d.walks, "walks")?.unwrap_or(base.walk_repeats),
            walk_steps: c.pick(d.steps, "steps")?.unwrap_or(base.walk_steps),
            connect_fraction: c
                .pick(d.connect_fraction, "connect_fraction")?
                .unwrap_or(base.connect_fraction),
            path_tol_factor: c.pick(d.path_tol, "path_tol")?.unwrap_or(base.path_tol_factor),
        };
        params.validate()?;
        Ok(params)
    }

    fn eval_options(&self, args: &EvalArgs) -> Result<EvalOptions> {
        Ok(EvalOptions {
            epsilon: self.cfg.pick(args.epsilon, "epsilon")?,
            icp: !args.no_icp,
            ..EvalOptions::default()
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.global.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Some(n) = cfg.pick(cli.global.threads, "threads")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("setting up the thread pool")?;
    }
    let ctx = Session {
        seed: cfg.pick(cli.global.seed, "seed")?.unwrap_or(0),
        format: cli.global.format,
        cfg,
    };

    match cli.command {
        Command::Detect {
            input,
            output,
            detector,
            estimate_normals: force,
            normal_k,
            trace,
            trace_out,
        } => {
            let params = ctx.params(&detector)?;
            let mut labeled = ctx.read(&input)?;
            if force || !labeled.cloud.has_normals() {
                let k = ctx.cfg.pick(normal_k, "normal_k")?.unwrap_or(DEFAULT_NORMAL_K);
                labeled.cloud = estimate_normals(&labeled.cloud, k)?.cloud;
            }
            let results = detect_features_detailed(&labeled.cloud, &params, ctx.seed)?;
            let degenerate = results.iter().filter(|c| c.degenerate.is_some()).count();
            if degenerate > 0 {
                eprintln!("note: {degenerate} points had degenerate neighborhoods and were labeled as features");
            }
            labeled.labels = Some(results.iter().map(|c| c.label).collect());
            labeled.segments = None;
            ctx.write(&labeled, &output)?;
            if let Some(id) = trace {
                let text = trace_point(&labeled, id, &params, ctx.seed)?;
                match trace_out {
                    Some(path) => fs::write(&path, text)
                        .with_context(|| format!("writing {}", path.display()))?,
                    None => eprint!("{text}"),
                }
            }
        }
        Command::Eval {
            pred,
            gt,
            cloud_size,
            eval,
        } => {
            let options = ctx.eval_options(&eval)?;
            let name = model_name(&pred);
            let report = eval_pair(&ctx, &pred, &gt, cloud_size, &options)?;
            emit_report(&[(name, report)], &eval)?;
        }
        Command::Segment { input, output, k } => {
            let mut labeled = ctx.read(&input)?;
            let labels = labeled
                .labels
                .as_ref()
                .ok_or_else(|| anyhow!("{} carries no feature labels", input.display()))?;
            labeled.segments = Some(segment(&labeled.cloud, labels, k)?);
            ctx.write(&labeled, &output)?;
        }
        Command::Perturb {
            input,
            output,
            noise,
            keep,
            k_density,
        } => {
            let labeled = ctx.read(&input)?;
            let out = match (noise, keep) {
                (Some(f), None) => {
                    let k = ctx
                        .cfg
                        .pick(k_density, "k_density")?
                        .unwrap_or(DsnParams::default().k_density);
                    add_noise(&labeled, f, k, ctx.seed)?
                }
                (None, Some(r)) => simplify(&labeled, r, ctx.seed)?,
                _ => unreachable!("clap enforces exactly one of --noise and --keep"),
            };
            ctx.write(&out, &output)?;
        }
        Command::Synth {
            shape,
            output,
            spacing,
            extent,
        } => {
            let labeled = synth(shape, spacing, extent, ctx.seed)?;
            ctx.write(&labeled, &output)?;
        }
        Command::BatchEval { dir, eval } => {
            let options = ctx.eval_options(&eval)?;
            let models = discover(&dir)?;
            if models.is_empty() {
                bail!("no models found in {}", dir.display());
            }
            let rows: Result<Vec<(String, MetricsReport)>> = models
                .par_iter()
                .map(|m| {
                    let report = match &m.gt {
                        Some(gt) => eval_pair(&ctx, &m.pred, gt, None, &options),
                        None => eval_single(&ctx, &m.pred, &options),
                    }
                    .with_context(|| format!("evaluating {}", m.name))?;
                    Ok((m.name.clone(), report))
                })
                .collect();
            emit_report(&rows?, &eval)?;
        }
    }
    Ok(())
}

fn trace_point(labeled: &LabeledCloud, id: usize, params: &DsnParams, seed: u64) -> Result<String> {
    if id >= labeled.len() {
        bail!("trace point {id} is out of range for {} points", labeled.len());
    }
    let mut out = String::new();
    let label = labeled.labels.as_ref().map(|l| l[id]);
    out.push_str(&format!("point {id}: {:?}\n", label.expect("labels were just set")));
    match build_dsn(&labeled.cloud, id, params) {
        Ok(dsn) => {
            out.push_str(&format!(
                "sampling density {} (k = {})\n",
                dsn.density.value, dsn.density.k_used
            ));
            out.push_str("descriptor (d_r:members per bin, rows are disks):\n");
            out.push_str(&dsn.dump());
            match run_walks_traced(&dsn, params, seed) {
                Ok((graph, walks)) => {
                    out.push_str("edge counts:\n");
                    for (edge, count) in graph.counted_edges() {
                        let (a, b) = edge.endpoints(graph.cols());
                        let kept = if graph.connected(edge) { " kept" } else { "" };
                        out.push_str(&format!("{a}-{b} {count}{kept}\n"));
                    }
                    out.push_str(&walks.to_string());
                }
                Err(e) => out.push_str(&format!("walks: {e}\n")),
            }
        }
        Err(e) => out.push_str(&format!("descriptor: {e}\n")),
    }
    Ok(out)
}

fn model_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    stem.strip_suffix(".pred").unwrap_or(stem).to_string()
}

fn points_of(labeled: &LabeledCloud, ids: Option<Vec<usize>>) -> Vec<Point3> {
    match ids {
        Some(ids) => ids.iter().map(|&i| *labeled.cloud.point(i)).collect(),
        None => labeled.cloud.points().to_vec(),
    }
}

fn eval_pair(
    ctx: &Session,
    pred: &Path,
    gt: &Path,
    cloud_size: Option<usize>,
    options: &EvalOptions,
) -> Result<MetricsReport> {
    let p = ctx.read(pred)?;
    let g = ctx.read(gt)?;
    let cloud_size = cloud_size
        .or(p.labels.as_ref().map(|_| p.len()))
        .or(g.ground_truth.as_ref().map(|_| g.len()))
        .ok_or_else(|| {
            anyhow!("cannot infer the cloud size from two plain point files; pass --cloud-size")
        })?;
    let detected = points_of(&p, p.feature_indices());
    let truth = points_of(&g, g.ground_truth_indices().or_else(|| g.feature_indices()));
    Ok(evaluate(&detected, &truth, cloud_size, options)?.0)
}

fn eval_single(ctx: &Session, path: &Path, options: &EvalOptions) -> Result<MetricsReport> {
    let l = ctx.read(path)?;
    let (Some(detected), Some(truth)) = (l.feature_indices(), l.ground_truth_indices()) else {
        bail!("{} needs both feature labels and ground truth", path.display());
    };
    let detected = points_of(&l, Some(detected));
    let truth = points_of(&l, Some(truth));
    Ok(evaluate(&detected, &truth, l.len(), options)?.0)
}

struct Model {
    name: String,
    pred: PathBuf,
    gt: Option<PathBuf>,
}

fn discover(dir: &Path) -> Result<Vec<Model>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.sort();
    let cloud_ext = |p: &Path| {
        p.extension()
            .and_then(|e| e.to_str())
            .filter(|e| e.eq_ignore_ascii_case("xyz") || e.eq_ignore_ascii_case("ply"))
            .map(str::to_string)
    };
    let mut models = Vec::new();
    for path in &files {
        let (Some(ext), Some(stem)) = (cloud_ext(path), path.file_stem().and_then(|s| s.to_str()))
        else {
            continue;
        };
        if stem.ends_with(".gt") {
            continue;
        }
        match stem.strip_suffix(".pred") {
            Some(name) => {
                let gt = path.with_file_name(format!("{name}.gt.{ext}"));
                if !gt.exists() {
                    bail!("{} has no matching {}", path.display(), gt.display());
                }
                models.push(Model {
                    name: name.to_string(),
                    pred: path.clone(),
                    gt: Some(gt),
                });
            }
            None => models.push(Model {
                name: stem.to_string(),
                pred: path.clone(),
                gt: None,
            }),
        }
    }
    Ok(models)
}

fn emit_report(rows: &[(String, MetricsReport)], args: &EvalArgs) -> Result<()> {
    let text = match args.report {
        Report::Csv => render_csv(rows),
        Report::Text => render_text(rows),
    };
    match &args.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
