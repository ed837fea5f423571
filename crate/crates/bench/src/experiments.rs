//! Figure experiments. Each returns named series of rows; [`run_experiment`]
//! writes them as `<kind>_<series>.csv` next to a manifest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lowdeg_tomo::channel::{ChannelModel, GateLayer};
use lowdeg_tomo::estimator::{
    analytic_variance, block_product_variance, convergence_samples, estimate_entries, mom_plan,
    EstimateRow, FrameAssignment, VarianceEngine,
};
use lowdeg_tomo::{BlockSampler, Complex, Mode, PauliString};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{derive_seed, ExperimentConfig, ExperimentKind, FrameSpec, LayerKind};
use crate::output::{PartialLog, Run};
use crate::psd::random_psd_sum;
use crate::setup::{build_channel, build_layer, effective_channel, parse_entry, FrameLibrary};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceRow {
    pub n: usize,
    pub entry: String,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub repetition: usize,
    pub samples_to_converge: usize,
    /// The shot cap was reached first; `samples_to_converge` is then the cap.
    pub censored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsdRow {
    pub n: usize,
    pub dim: usize,
    pub trials: usize,
    pub mean_sum: f64,
    pub std_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimationRow {
    pub n: usize,
    pub repetition: usize,
    pub frame: String,
    #[serde(flatten)]
    pub estimate: EstimateRow,
}

#[derive(Serialize)]
struct PartialRow<'a> {
    series: &'a str,
    n: usize,
    repetition: usize,
    samples_to_converge: usize,
    censored: bool,
}

#[derive(Clone, Debug)]
pub struct Series<R> {
    pub name: String,
    pub rows: Vec<R>,
}

impl<R> Series<R> {
    pub fn get<'a>(all: &'a [Series<R>], name: &str) -> Option<&'a Series<R>> {
        all.iter().find(|s| s.name == name)
    }
}

/// Exact variance of `G_{gamma delta}`: the block-product formula when the
/// effective channel factors over the frame blocks, the process-matrix sum
/// otherwise.
pub fn entry_variance(
    engine: &VarianceEngine<f64>,
    channel: &ChannelModel<f64>,
    layer: Option<&GateLayer<f64>>,
    assignment: &FrameAssignment<f64>,
    gamma: &PauliString,
    delta: &PauliString,
) -> Result<f64> {
    match block_product_variance(engine, channel, layer, assignment, gamma, delta) {
        Ok(r) => Ok(r.variance),
        Err(lowdeg_tomo::Error::UnsupportedTopology(_)) => {
            let eff = effective_channel(channel, layer, assignment)?;
            let chi = eff
                .truncate_chi(eff.declared_degree().max(1).min(eff.n()))?
                .chi;
            Ok(analytic_variance(&chi, assignment, gamma, delta, layer)?.variance)
        }
        Err(e) => Err(e.into()),
    }
}

/// Variance of every configured entry over the n grid for one frame spec.
pub fn variance_series(
    cfg: &ExperimentConfig,
    lib: &FrameLibrary,
    spec: FrameSpec,
) -> Result<Vec<VarianceRow>> {
    let engine = VarianceEngine::new();
    let per_n: Vec<Vec<VarianceRow>> = cfg
        .bench
        .n
        .par_iter()
        .map(|&n| -> Result<Vec<VarianceRow>> {
            let channel = build_channel(&cfg.channel, n)?;
            let layer = build_layer(&cfg.channel, n)?;
            let asg = lib.assignment(spec, n, layer.as_ref(), &cfg.channel.gate)?;
            cfg.estimator
                .entries
                .iter()
                .map(|code| {
                    let (code, a, b) = parse_entry(n, code, cfg.estimator.entry_qubit)?;
                    let variance = entry_variance(&engine, &channel, layer.as_ref(), &asg, &a, &b)
                        .with_context(|| format!("n = {n}, entry {code}"))?;
                    Ok(VarianceRow {
                        n,
                        entry: code,
                        variance,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<VarianceRow> = per_n.into_iter().flatten().collect();
    rows.sort_by_key(|r| r.n);
    Ok(rows)
}

/// A configuration whose convergence is measured over repetitions.
pub struct System {
    pub name: String,
    pub layer: LayerKind,
    pub frames: FrameSpec,
}

struct Job {
    series: String,
    n: usize,
    sampler: BlockSampler,
    assignment: FrameAssignment<f64>,
    gamma: PauliString,
    delta: PauliString,
    truth: Complex,
}

fn build_jobs(cfg: &ExperimentConfig, lib: &FrameLibrary, systems: &[System]) -> Result<Vec<Job>> {
    let keys: Vec<(&System, usize)> = systems
        .iter()
        .flat_map(|s| cfg.bench.n.iter().map(move |&n| (s, n)))
        .collect();
    let nested: Vec<Vec<Job>> = keys
        .par_iter()
        .map(|&(sys, n)| -> Result<Vec<Job>> {
            let mut ch_cfg = cfg.channel.clone();
            ch_cfg.layer = sys.layer;
            let channel = build_channel(&ch_cfg, n)?;
            let layer = build_layer(&ch_cfg, n)?;
            let assignment = lib.assignment(sys.frames, n, layer.as_ref(), &ch_cfg.gate)?;
            let eff = effective_channel(&channel, layer.as_ref(), &assignment)?;
            let mut jobs = Vec::new();
            for code in &cfg.estimator.entries {
                let (code, gamma, delta) = parse_entry(n, code, cfg.estimator.entry_qubit)?;
                let d = gamma.weight().max(delta.weight()).max(1);
                let truth = eff.truncate_chi(d)?.chi.get(&gamma, &delta);
                let series = if cfg.estimator.entries.len() > 1 {
                    format!("{}_{code}", sys.name)
                } else {
                    sys.name.clone()
                };
                jobs.push(Job {
                    series,
                    n,
                    sampler: BlockSampler::new(&channel, layer.as_ref())?,
                    assignment: assignment.clone(),
                    gamma,
                    delta,
                    truth,
                });
            }
            Ok(jobs)
        })
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Samples to reach `estimator.epsilon` for `estimator.window` consecutive
/// shots, per system, entry, n and repetition. Repetition `k` at size `n`
/// uses the stream `derive_seed(seed, [n, k])` in every series.
pub fn convergence_experiment(
    cfg: &ExperimentConfig,
    lib: &FrameLibrary,
    systems: &[System],
    log: Option<&PartialLog>,
) -> Result<Vec<Series<ConvergenceRow>>> {
    let seed = cfg.seed()?;
    let jobs = build_jobs(cfg, lib, systems)?;
    let reps = cfg.bench.repetitions;
    let est = &cfg.estimator;
    let runs: Vec<(usize, usize)> = (0..jobs.len())
        .flat_map(|j| (0..reps).map(move |r| (j, r)))
        .collect();
    let results: Vec<(usize, ConvergenceRow)> = runs
        .par_iter()
        .map(|&(j, rep)| -> Result<(usize, ConvergenceRow)> {
            let job = &jobs[j];
            let ev = job.assignment.evaluator(&job.gamma, &job.delta)?;
            let stream = job
                .sampler
                .stream(derive_seed(seed, &[job.n as u64, rep as u64]));
            let c = convergence_samples(
                stream.map(|s| ev.eval(&s)),
                job.truth,
                est.epsilon,
                est.window,
                cfg.sampler.shot_cap,
            );
            let row = ConvergenceRow {
                n: job.n,
                repetition: rep,
                samples_to_converge: c.samples(),
                censored: c.is_censored(),
            };
            if let Some(log) = log {
                log.append(&PartialRow {
                    series: &job.series,
                    n: row.n,
                    repetition: rep,
                    samples_to_converge: row.samples_to_converge,
                    censored: row.censored,
                })?;
            }
            Ok((j, row))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<Series<ConvergenceRow>> = Vec::new();
    for (j, row) in results {
        let name = &jobs[j].series;
        match out.iter_mut().find(|s| &s.name == name) {
            Some(s) => s.rows.push(row),
            None => out.push(Series {
                name: name.clone(),
                rows: vec![row],
            }),
        }
    }
    for s in &mut out {
        s.rows.sort_by_key(|r| (r.n, r.repetition));
    }
    Ok(out)
}

/// Mean over repetitions of `samples_to_converge` at each n.
pub fn mean_by_n(rows: &[ConvergenceRow]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(n, _, _)| *n == r.n) {
            Some(e) => {
                e.1 += r.samples_to_converge as f64;
                e.2 += 1;
            }
            None => out.push((r.n, r.samples_to_converge as f64, 1)),
        }
    }
    out.into_iter().map(|(n, s, k)| (n, s / k as f64)).collect()
}

pub fn fig3_systems(cfg: &ExperimentConfig) -> Vec<System> {
    cfg.frames
        .kinds
        .iter()
        .map(|&k| System {
            name: k.name().to_string(),
            layer: cfg.channel.layer,
            frames: k,
        })
        .collect()
}

/// A single central gate seen through plain frames, and a full layer
/// removed by rotated minimized frames.
pub fn fig4_systems() -> Vec<System> {
    vec![
        System {
            name: "single".into(),
            layer: LayerKind::Single,
            frames: FrameSpec::Min,
        },
        System {
            name: "layer".into(),
            layer: LayerKind::Paired,
            frames: FrameSpec::RotatedMin,
        },
    ]
}

pub fn psd_series(cfg: &ExperimentConfig) -> Result<Vec<PsdRow>> {
    let seed = cfg.seed()?;
    let trials = cfg.bench.repetitions;
    let mut rows: Vec<PsdRow> = cfg
        .bench
        .n
        .par_iter()
        .map(|&n| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[n as u64]));
            let dim = n * n;
            let (mean_sum, std_sum) = random_psd_sum(dim, trials, &mut rng);
            PsdRow {
                n,
                dim,
                trials,
                mean_sum,
                std_sum,
            }
        })
        .collect();
    rows.sort_by_key(|r| r.n);
    Ok(rows)
}

/// Draws `sampler.shots` snapshots per repetition (or the median-of-means
/// budget in `mom` mode) and estimates every entry against its target.
pub fn custom_series(cfg: &ExperimentConfig, lib: &FrameLibrary) -> Result<Vec<EstimationRow>> {
    let seed = cfg.seed()?;
    let engine = VarianceEngine::new();
    let mut rows = Vec::new();
    for &n in &cfg.bench.n {
        let channel = build_channel(&cfg.channel, n)?;
        let layer = build_layer(&cfg.channel, n)?;
        for &spec in &cfg.frames.kinds {
            let asg = lib.assignment(spec, n, layer.as_ref(), &cfg.channel.gate)?;
            let eff = effective_channel(&channel, layer.as_ref(), &asg)?;
            let mut entries = Vec::new();
            for code in &cfg.estimator.entries {
                let (_, a, b) = parse_entry(n, code, cfg.estimator.entry_qubit)?;
                let d = a.weight().max(b.weight()).max(1);
                let truth = eff.truncate_chi(d)?.chi.get(&a, &b);
                let mode = match cfg.estimator.mode.as_str() {
                    "mom" => {
                        let var = entry_variance(&engine, &channel, layer.as_ref(), &asg, &a, &b)?;
                        let plan =
                            mom_plan(var.max(0.0), cfg.estimator.epsilon, cfg.estimator.delta)?;
                        Mode::MedianOfMeans {
                            block_size: plan.b,
                            blocks: plan.k_blocks,
                        }
                    }
                    _ => Mode::Mean,
                };
                entries.push((a, b, truth, mode));
            }
            let shots = entries
                .iter()
                .map(|(_, _, _, m)| match m {
                    Mode::MedianOfMeans { block_size, blocks } => block_size * blocks,
                    Mode::Mean => cfg.sampler.shots,
                })
                .max()
                .unwrap_or(cfg.sampler.shots)
                .min(cfg.sampler.shot_cap);
            let sampler = BlockSampler::new(&channel, layer.as_ref())?;
            for rep in 0..cfg.bench.repetitions {
                let snaps =
                    sampler.draw_range(derive_seed(seed, &[n as u64, rep as u64]), 0, shots);
                for (a, b, truth, mode) in &entries {
                    let ev = asg.evaluator(a, b)?;
                    let acc = estimate_entries(&snaps, &[ev], *mode)?;
                    rows.push(EstimationRow {
                        n,
                        repetition: rep,
                        frame: spec.name().to_string(),
                        estimate: EstimateRow::from_accumulator(&acc[0], Some(*truth))?,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Runs `cfg`, writes its series into `dir` and returns the manifest path.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let kind = cfg.bench.experiment;
    let seed = if kind.is_stochastic() {
        Some(cfg.seed()?)
    } else {
        None
    };
    let mut run = Run::start(dir, format!("reproduce {kind}"))?;
    let lib = FrameLibrary::new();
    match kind {
        ExperimentKind::Fig2 | ExperimentKind::Fig5 | ExperimentKind::Fig6 => {
            for &spec in &cfg.frames.kinds {
                let rows = variance_series(cfg, &lib, spec)?;
                run.write_csv(&format!("{kind}_{}.csv", spec.name()), &rows)?;
            }
        }
        ExperimentKind::Fig3 | ExperimentKind::Fig4 => {
            let systems = if kind == ExperimentKind::Fig3 {
                fig3_systems(cfg)
            } else {
                fig4_systems()
            };
            let log = PartialLog::create(run.path(&format!("{kind}.partial.csv")))?;
            let series = convergence_experiment(cfg, &lib, &systems, Some(&log))?;
            for s in &series {
                run.write_csv(&format!("{kind}_{}.csv", s.name), &s.rows)?;
            }
            log.close()?;
        }
        ExperimentKind::Fig7 => {
            let rows = psd_series(cfg)?;
            run.write_csv("fig7.csv", &rows)?;
        }
        ExperimentKind::Custom => {
            let rows = custom_series(cfg, &lib)?;
            if rows.is_empty() {
                bail!("custom run produced no rows");
            }
            run.write_csv("custom_estimates.csv", &rows)?;
        }
    }
    run.finish(cfg, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind, extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(Some(kind), extra).unwrap()
    }

    #[test]
    fn fig2_variance_is_finite_and_sorted() {
        let cfg = small(ExperimentKind::Fig2, "[bench]\nn = [6, 2, 4]\n");
        let rows = variance_series(&cfg, &FrameLibrary::new(), FrameSpec::Min).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.n).collect::<Vec<_>>(),
            vec![2, 2, 4, 4, 6, 6]
        );
        assert!(rows
            .iter()
            .all(|r| r.variance.is_finite() && r.variance >= 0.0));
    }

    #[test]
    fn convergence_is_deterministic() {
        let cfg = small(ExperimentKind::Fig3, "[bench]\nn = [4]\nrepetitions = 2\nseed = 11\n[frames]\nkinds = [\"rotated-shadow\"]\n");
        let lib = FrameLibrary::new();
        let a = convergence_experiment(&cfg, &lib, &fig3_systems(&cfg), None).unwrap();
        let b = convergence_experiment(&cfg, &lib, &fig3_systems(&cfg), None).unwrap();
        assert_eq!(a[0].rows, b[0].rows);
        assert_eq!(a[0].rows.len(), 2);
        assert!(a[0].rows.iter().all(|r| r.samples_to_converge >= 100));
    }

    #[test]
    fn custom_estimates_track_truth() {
        let cfg = small(
            ExperimentKind::Custom,
            "[bench]\nn = [3]\nseed = 5\n[sampler]\nshots = 40000\n[estimator]\nentries = [\"00\", \"xx\"]\nentry_qubit = 1\n",
        );
        let rows = custom_series(&cfg, &FrameLibrary::new()).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            let e = &r.estimate;
            let err =
                (e.estimate_re - e.truth_re.unwrap()).hypot(e.estimate_im - e.truth_im.unwrap());
            assert!(err < 0.05, "{r:?}");
        }
    }
}
