use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lowdeg_bench::config::{ChannelKind, ExperimentConfig, ExperimentKind, FrameSpec, LayerKind};
use lowdeg_bench::output::Run;
use lowdeg_bench::run_experiment;
use lowdeg_bench::setup::{
    build_channel, build_layer, effective_channel, parse_entry, FrameLibrary,
};
use lowdeg_tomo::channel::{bitflip_exact_tail, bitflip_tail_bound};
use lowdeg_tomo::estimator::{estimate_entries, EstimateRow};
use lowdeg_tomo::frame::{
    build_f, col_labels, g_min_closed_form, g_min_pair, g_shadow, left_kernel, load_unitary,
    minimize_table, rotated_frame, rotated_minimized_frame, variance_constant, weight_from_f,
    weight_p_u, FrameTable, SolverKind,
};
use lowdeg_tomo::sampler::{read_snapshots, write_snapshots};
use lowdeg_tomo::{gates, BlockSampler, Mode};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "lowdeg",
    version,
    about = "Randomized Pauli tomography of low-degree noise channels"
)]
struct Cli {
    /// Master seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML config; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, minimize and rotate dual frame tables.
    #[command(subcommand)]
    Frames(FramesCmd),
    /// Process matrices, truncation errors and tail bounds.
    #[command(subcommand)]
    Channel(ChannelCmd),
    /// Draw snapshots into a CSV.
    Sample(SampleArgs),
    /// Estimate process-matrix entries from a snapshot CSV.
    Estimate(EstimateArgs),
    /// Regenerate the data series of a figure.
    Reproduce {
        /// fig2 ... fig7 or custom.
        experiment: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BuildKind {
    F,
    Shadow,
    /// Closed form.
    Min,
    /// Minimizer output starting from the shadow table.
    MinSolver,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightKind {
    F00,
    Pu,
}

#[derive(Subcommand)]
enum FramesCmd {
    Build {
        #[arg(long, value_enum)]
        kind: BuildKind,
        #[arg(long, default_value_t = 1)]
        arity: usize,
    },
    Minimize {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to `pu` for rotated tables and `f00` otherwise.
        #[arg(long, value_enum)]
        weight: Option<WeightKind>,
    },
    Rotate {
        /// Named gate (iswap, cnot, cz, swap, or products such as t*i).
        #[arg(long, conflicts_with = "unitary")]
        gate: Option<String>,
        /// Text file with a 4x4 unitary.
        #[arg(long)]
        unitary: Option<PathBuf>,
        /// Minimize under the weight `p_U` after rotating.
        #[arg(long)]
        minimize: bool,
        /// Base pair table to rotate.
        #[arg(long, value_enum, default_value = "min")]
        base: RotateBase,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum RotateBase {
    Min,
    Shadow,
}

#[derive(Args, Clone, Default)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, value_enum)]
    layer: Option<LayerArg>,
    #[arg(long)]
    gate: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Dephasing,
    Xflip,
    Bitflip,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    None,
    Paired,
    Single,
}

#[derive(Subcommand)]
enum ChannelCmd {
    /// Process matrix on the low-degree index.
    Chi {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Process matrix plus its exact truncation error and diagonal bound.
    Truncate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Exact bit-flip truncation tails against the Hoeffding bound.
    Bounds {
        #[arg(long, value_delimiter = ',', default_values_t = vec![4, 6, 8, 10, 12])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.05])]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2])]
        d: Vec<usize>,
    },
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    shots: Option<usize>,
    /// Index of the first shot in the seeded stream.
    #[arg(long, default_value_t = 0)]
    start: usize,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    snapshots: PathBuf,
    /// Entry codes such as 00,xx,0x.
    #[arg(long, value_delimiter = ',')]
    entries: Option<Vec<String>>,
    #[arg(long)]
    entry_qubit: Option<usize>,
    #[arg(long)]
    frames: Option<String>,
    /// `mean` or `mom`.
    #[arg(long)]
    mode: Option<String>,
    /// Number of median-of-means blocks.
    #[arg(long, default_value_t = 8)]
    blocks: usize,
    /// Also report the targeted entry of the model channel.
    #[arg(long)]
    truth: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Serialize)]
struct ObjectiveRow {
    gamma: String,
    delta: String,
    objective: f64,
}

#[derive(Serialize)]
struct FrameCheckRow {
    table: String,
    identity_error: f64,
    variance_constant: f64,
    max_objective: f64,
}

#[derive(Serialize)]
struct ChiSummaryRow {
    n: usize,
    d: usize,
    dim: usize,
    trace: f64,
    residual: f64,
    min_eigenvalue: f64,
}

#[derive(Serialize)]
struct TruncationRow {
    n: usize,
    d: usize,
    l2_error: f64,
    l2_error_sq: f64,
    diagonal_bound: f64,
}

#[derive(Serialize)]
struct BoundRow {
    n: usize,
    p: f64,
    d: usize,
    exact_tail: f64,
    bound: f64,
    holds: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Reproduce { experiment } => reproduce(&cli, experiment.parse()?),
        Command::Frames(cmd) => frames(&cli, cmd),
        Command::Channel(cmd) => channel(&cli, cmd),
        Command::Sample(args) => sample(&cli, args),
        Command::Estimate(args) => estimate(&cli, args),
    }
}

fn load_config(cli: &Cli, kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(kind, path)?,
        None => ExperimentConfig::preset(kind.unwrap_or(ExperimentKind::Custom)),
    };
    if let Some(s) = cli.seed {
        cfg.bench.seed = Some(s);
    }
    if let Some(t) = cli.threads {
        cfg.bench.threads = Some(t);
    }
    if let Some(o) = &cli.out {
        cfg.bench.out = Some(o.clone());
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig, default: &str) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.bench.out.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(default))
}

fn echo(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::json!({ "argv": std::env::args().collect::<Vec<_>>(), "config": cfg })
}

fn reproduce(cli: &Cli, kind: ExperimentKind) -> Result<()> {
    let cfg = load_config(cli, Some(kind))?;
    let dir = out_dir(cli, &cfg, kind.name());
    let manifest = run_experiment(&cfg, &dir)?;
    println!("{}", manifest.display());
    Ok(())
}

fn apply_model(cfg: &mut ExperimentConfig, m: &ModelArgs) -> Result<()> {
    let c = &mut cfg.channel;
    if let Some(k) = m.model {
        c.model = match k {
            ModelKind::Dephasing => ChannelKind::Dephasing,
            ModelKind::Xflip => ChannelKind::Xflip,
            ModelKind::Bitflip => ChannelKind::Bitflip,
            ModelKind::Identity => ChannelKind::Identity,
        };
    }
    c.p0 = m.p0.unwrap_or(c.p0);
    c.gamma0 = m.gamma0.unwrap_or(c.gamma0);
    c.epsilon = m.epsilon.unwrap_or(c.epsilon);
    c.p = m.p.unwrap_or(c.p);
    c.degree = m.degree.unwrap_or(c.degree);
    if let Some(l) = m.layer {
        c.layer = match l {
            LayerArg::None => LayerKind::None,
            LayerArg::Paired => LayerKind::Paired,
            LayerArg::Single => LayerKind::Single,
        };
    }
    if let Some(g) = &m.gate {
        c.gate = g.clone();
    }
    cfg.validate()
}

fn label_string(labels: &[lowdeg_tomo::PauliLabel]) -> String {
    labels.iter().map(|l| l.letter()).collect()
}

fn objective_rows(arity: usize, objectives: &[f64]) -> Vec<ObjectiveRow> {
    objectives
        .iter()
        .enumerate()
        .map(|(c, &objective)| {
            let (g, d) = col_labels(arity, c);
            ObjectiveRow {
                gamma: label_string(&g),
                delta: label_string(&d),
                objective,
            }
        })
        .collect()
}

fn check_row(
    name: &str,
    table: &FrameTable<f64>,
    objectives: Option<&[f64]>,
) -> Result<FrameCheckRow> {
    let dual = table.dual_target()?;
    Ok(FrameCheckRow {
        table: name.to_string(),
        identity_error: table.identity_error()?,
        variance_constant: variance_constant(table, &dual)?.c,
        max_objective: objectives.map_or(f64::NAN, |o| o.iter().cloned().fold(f64::NAN, f64::max)),
    })
}

fn save_table(run: &mut Run, name: &str, table: &FrameTable<f64>) -> Result<()> {
    table.save(run.path(name))?;
    run.record(name, table.rows());
    Ok(())
}

fn frames(cli: &Cli, cmd: &FramesCmd) -> Result<()> {
    let cfg = load_config(cli, None)?;
    let dir = out_dir(cli, &cfg, "frames");
    let mut run = Run::start(&dir, "frames")?;
    match cmd {
        FramesCmd::Build { kind, arity } => {
            let arity = *arity;
            if !(1..=2).contains(&arity) {
                bail!("arity must be 1 or 2");
            }
            let pair = |t: FrameTable<f64>| -> Result<FrameTable<f64>> {
                if arity == 1 {
                    Ok(t)
                } else {
                    Ok(t.tensor(&t)?)
                }
            };
            let (name, table, objectives) = match kind {
                BuildKind::F => ("f", build_f(arity), None),
                BuildKind::Shadow => ("shadow", pair(g_shadow())?, None),
                BuildKind::Min => (
                    "min",
                    if arity == 1 {
                        g_min_closed_form()
                    } else {
                        g_min_pair()
                    },
                    None,
                ),
                BuildKind::MinSolver => {
                    let f = build_f::<f64>(arity);
                    let kernel = left_kernel(&f)?;
                    let (t, obj) = minimize_table(
                        &pair(g_shadow())?,
                        &kernel,
                        &weight_from_f(&f, 0)?,
                        SolverKind::default_for(arity),
                    )?;
                    ("min_solver", t, Some(obj))
                }
            };
            let file = format!("frame_{name}_{arity}.json");
            save_table(&mut run, &file, &table)?;
            if let Some(obj) = &objectives {
                run.write_csv("objectives.csv", &objective_rows(arity, obj))?;
            }
            if !matches!(kind, BuildKind::F) {
                run.write_csv(
                    "frame_check.csv",
                    &[check_row(&file, &table, objectives.as_deref())?],
                )?;
            }
        }
        FramesCmd::Minimize { input, weight } => {
            let table = FrameTable::<f64>::load(input)?;
            let arity = table.arity();
            let weight = weight.unwrap_or(if table.unitary().is_some() {
                WeightKind::Pu
            } else {
                WeightKind::F00
            });
            let w = match (weight, table.unitary()) {
                (WeightKind::F00, _) => weight_from_f(&build_f(arity), 0)?,
                (WeightKind::Pu, Some(u)) => weight_p_u(u)?,
                (WeightKind::Pu, None) => bail!("the p_U weight needs a rotated table"),
            };
            let kernel = left_kernel(&table.dual_target()?)?;
            let (min, obj) = minimize_table(&table, &kernel, &w, SolverKind::default_for(arity))?;
            let stem = input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("table");
            let file = format!("{stem}_min.json");
            save_table(&mut run, &file, &min)?;
            run.write_csv("objectives.csv", &objective_rows(arity, &obj))?;
            run.write_csv("frame_check.csv", &[check_row(&file, &min, Some(&obj))?])?;
        }
        FramesCmd::Rotate {
            gate,
            unitary,
            minimize,
            base,
        } => {
            let (name, u) = match (gate, unitary) {
                (Some(g), _) => (g.replace('*', "_"), gates::by_name::<f64>(g)?),
                (None, Some(path)) => {
                    let stem = path
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .unwrap_or("unitary")
                        .to_string();
                    (stem, load_unitary::<f64>(path)?)
                }
                (None, None) => bail!("give --gate or --unitary"),
            };
            let (file, table, objectives) = if *minimize {
                if *base != RotateBase::Min {
                    bail!("--minimize starts from the min base table");
                }
                let (t, obj) = rotated_minimized_frame(&u)?;
                (format!("{name}_rotated_min.json"), t, Some(obj))
            } else {
                let b = match base {
                    RotateBase::Min => g_min_pair(),
                    RotateBase::Shadow => g_shadow::<f64>().tensor(&g_shadow())?,
                };
                (format!("{name}_rotated.json"), rotated_frame(&u, &b)?, None)
            };
            save_table(&mut run, &file, &table)?;
            if let Some(obj) = &objectives {
                run.write_csv("objectives.csv", &objective_rows(2, obj))?;
            }
            run.write_csv(
                "frame_check.csv",
                &[check_row(&file, &table, objectives.as_deref())?],
            )?;
        }
    }
    finish(run, &cfg)
}

fn finish(run: Run, cfg: &ExperimentConfig) -> Result<()> {
    let manifest = run.finish(&echo(cfg), cfg.bench.seed)?;
    println!("{}", manifest.display());
    Ok(())
}

fn channel(cli: &Cli, cmd: &ChannelCmd) -> Result<()> {
    let mut cfg = load_config(cli, None)?;
    let dir = out_dir(cli, &cfg, "channel");
    let mut run = Run::start(&dir, "channel")?;
    match cmd {
        ChannelCmd::Chi { n, d, model } | ChannelCmd::Truncate { n, d, model } => {
            apply_model(&mut cfg, model)?;
            let (n, d) = (*n, *d);
            let mut ch = build_channel(&cfg.channel, n)?;
            if let Some(layer) = build_layer(&cfg.channel, n)? {
                ch = ch.after_layer(&layer)?;
            }
            if matches!(cmd, ChannelCmd::Chi { .. }) {
                let exp = ch.chi_from_kraus(d)?;
                write_chi(&mut run, &exp.chi)?;
                run.write_csv(
                    "chi_summary.csv",
                    &[ChiSummaryRow {
                        n,
                        d,
                        dim: exp.chi.dim(),
                        trace: exp.chi.trace(),
                        residual: exp.residual,
                        min_eigenvalue: exp.chi.min_eigenvalue(),
                    }],
                )?;
            } else {
                let rep = ch.truncate_chi(d)?;
                write_chi(&mut run, &rep.chi)?;
                run.write_csv(
                    "truncation.csv",
                    &[TruncationRow {
                        n,
                        d,
                        l2_error: rep.l2_error,
                        l2_error_sq: rep.l2_error.powi(2),
                        diagonal_bound: rep.diagonal_bound,
                    }],
                )?;
            }
        }
        ChannelCmd::Bounds { n, p, d } => {
            let mut rows = Vec::new();
            for &nn in n {
                for &pp in p {
                    for &dd in d {
                        let exact_tail = bitflip_exact_tail(nn, pp, dd);
                        let bound =
                            bitflip_tail_bound(nn, pp, dd, None).map_or(f64::NAN, |b| b.bound);
                        rows.push(BoundRow {
                            n: nn,
                            p: pp,
                            d: dd,
                            exact_tail,
                            bound,
                            holds: exact_tail <= bound,
                        });
                    }
                }
            }
            run.write_csv("bitflip_bounds.csv", &rows)?;
        }
    }
    finish(run, &cfg)
}

fn write_chi(run: &mut Run, chi: &lowdeg_tomo::ProcessMatrix) -> Result<()> {
    let file = File::create(run.path("chi.csv"))?;
    chi.write_csv(file)?;
    run.record("chi.csv", chi.dim() * chi.dim());
    Ok(())
}

fn sample(cli: &Cli, args: &SampleArgs) -> Result<()> {
    let mut cfg = load_config(cli, None)?;
    apply_model(&mut cfg, &args.model)?;
    let seed = cfg.bench.seed.context("sample needs --seed")?;
    let shots = args.shots.unwrap_or(cfg.sampler.shots);
    let channel = build_channel(&cfg.channel, args.n)?;
    let layer = build_layer(&cfg.channel, args.n)?;
    let sampler = BlockSampler::new(&channel, layer.as_ref())?;
    let snaps = sampler.draw_range(seed, args.start, shots);
    let dir = out_dir(cli, &cfg, "sample");
    let mut run = Run::start(&dir, "sample")?;
    write_snapshots(File::create(run.path("snapshots.csv"))?, &snaps, args.start)?;
    run.record("snapshots.csv", snaps.len());
    finish(run, &cfg)
}

fn estimate(cli: &Cli, args: &EstimateArgs) -> Result<()> {
    let mut cfg = load_config(cli, None)?;
    apply_model(&mut cfg, &args.model)?;
    if let Some(e) = &args.entries {
        cfg.estimator.entries = e.clone();
    }
    if let Some(q) = args.entry_qubit {
        cfg.estimator.entry_qubit = q;
    }
    if let Some(m) = &args.mode {
        cfg.estimator.mode = m.clone();
    }
    if let Some(f) = &args.frames {
        cfg.frames.kinds = vec![f.parse::<FrameSpec>()?];
    }
    cfg.validate()?;
    let snaps = read_snapshots(BufReader::new(
        File::open(&args.snapshots)
            .with_context(|| format!("opening {}", args.snapshots.display()))?,
    ))?;
    let n = snaps.first().map(|s| s.n()).context("no snapshots")?;
    let spec = cfg.frames.kinds[0];
    let layer = build_layer(&cfg.channel, n)?;
    let lib = FrameLibrary::new();
    let asg = lib.assignment(spec, n, layer.as_ref(), &cfg.channel.gate)?;
    let eff = if args.truth {
        Some(effective_channel(
            &build_channel(&cfg.channel, n)?,
            layer.as_ref(),
            &asg,
        )?)
    } else {
        None
    };
    let mode = match cfg.estimator.mode.as_str() {
        "mom" => {
            let blocks = args.blocks.max(1);
            Mode::MedianOfMeans {
                block_size: (snaps.len() / blocks).max(1),
                blocks,
            }
        }
        _ => Mode::Mean,
    };
    let mut rows = Vec::new();
    for code in &cfg.estimator.entries {
        let (_, a, b) = parse_entry(n, code, cfg.estimator.entry_qubit)?;
        let truth = match &eff {
            Some(ch) => Some(
                ch.truncate_chi(a.weight().max(b.weight()).max(1))?
                    .chi
                    .get(&a, &b),
            ),
            None => None,
        };
        let acc = estimate_entries(&snaps, &[asg.evaluator(&a, &b)?], mode)?;
        rows.push(EstimateRow::from_accumulator(&acc[0], truth)?);
    }
    let dir = out_dir(cli, &cfg, "estimate");
    let mut run = Run::start(&dir, "estimate")?;
    run.write_csv("estimates.csv", &rows)?;
    finish(run, &cfg)
}
