//! Acceptance suite. One line per criterion; exits nonzero if any fails.
//! Positional arguments select criteria by substring.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{ensure, Result};
use lowdeg_bench::config::{derive_seed, ExperimentConfig, ExperimentKind, FrameSpec, LayerKind};
use lowdeg_bench::experiments::{
    convergence_experiment, fig3_systems, fig4_systems, mean_by_n, variance_series, ConvergenceRow,
    Series,
};
use lowdeg_bench::setup::FrameLibrary;
use lowdeg_tomo::channel::{
    bitflip_exact_tail, bitflip_product, correlated_xflip_channel, decaying_dephasing_channel,
    identity_channel, ChannelModel, GateLayer,
};
use lowdeg_tomo::estimator::{
    block_product_variance, mom_plan, EntryEvaluator, FrameAssignment, VarianceEngine,
};
use lowdeg_tomo::frame::{
    build_f, g_min_closed_form, g_shadow, inverse_identity_error, left_kernel, minimize_frame,
    minimize_table, rotated_minimized_frame, shipped_table, variance_constant, weight_from_f,
    Minimizer, SolverKind, SHIPPED_GATES,
};
use lowdeg_tomo::sampler::{exact_distribution, state_string};
use lowdeg_tomo::{gates, BlockSampler, EstimatorAccumulator, LowDegreeIndex, Mode, Snapshot};

const SEED: u64 = 0x5eed_2024;

type Outcome = Result<(bool, String)>;

struct Criterion {
    name: &'static str,
    limit_s: Option<f64>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let all = [
        Criterion {
            name: "frame_identity_suite",
            limit_s: Some(1.0),
            run: frame_identity_suite,
        },
        Criterion {
            name: "saturation",
            limit_s: None,
            run: saturation,
        },
        Criterion {
            name: "shadow_lower_bound",
            limit_s: Some(10.0),
            run: shadow_lower_bound,
        },
        Criterion {
            name: "clifford_certificate",
            limit_s: None,
            run: clifford_certificate,
        },
        Criterion {
            name: "fig2_saturation",
            limit_s: Some(60.0),
            run: fig2,
        },
        Criterion {
            name: "fig3_convergence",
            limit_s: Some(600.0),
            run: fig3,
        },
        Criterion {
            name: "fig4_convergence",
            limit_s: Some(1800.0),
            run: fig4,
        },
        Criterion {
            name: "unbiasedness_oracle",
            limit_s: None,
            run: unbiasedness,
        },
        Criterion {
            name: "variance_bounds",
            limit_s: None,
            run: variance_bounds,
        },
        Criterion {
            name: "truncation_bounds",
            limit_s: None,
            run: truncation_bounds,
        },
        Criterion {
            name: "mom_guarantee",
            limit_s: Some(300.0),
            run: mom_guarantee,
        },
        Criterion {
            name: "fig6_exponential",
            limit_s: None,
            run: fig6,
        },
    ];
    let mut failed = 0;
    let mut ran = 0;
    for c in all
        .iter()
        .filter(|c| filters.is_empty() || filters.iter().any(|f| c.name.contains(f.as_str())))
    {
        ran += 1;
        let start = Instant::now();
        let outcome = (c.run)();
        let secs = start.elapsed().as_secs_f64();
        let in_time = c.limit_s.map_or(true, |l| secs < l);
        let limit = c
            .limit_s
            .map_or(String::new(), |l| format!(", limit {l} s"));
        let (pass, detail) = match outcome {
            Ok((ok, detail)) if !in_time => (false, format!("{detail}; over time (ok = {ok})")),
            Ok(r) => r,
            Err(e) => (false, format!("error: {e:#}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {} ({secs:.2} s{limit}): {detail}",
            if pass { "PASS" } else { "FAIL" },
            c.name
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn seeded(kind: ExperimentKind, n: &[usize]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(kind);
    cfg.bench.n = n.to_vec();
    cfg.bench.seed = Some(SEED);
    cfg
}

fn max_over_min(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = xs.into_iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    });
    hi / lo
}

fn fmt_means(m: &[(usize, f64)]) -> String {
    m.iter()
        .map(|(n, v)| format!("{n}:{v:.0}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn frame_identity_suite() -> Outcome {
    let f = build_f::<f64>(1);
    let kernel = left_kernel(&f)?;
    let w = weight_from_f(&f, 0)?;
    let (solved, _) = minimize_table(&g_shadow(), &kernel, &w, SolverKind::Dense)?;
    let mut worst = vec![
        ("g_sh", inverse_identity_error(&g_shadow(), &f)?),
        ("g_min", inverse_identity_error(&g_min_closed_form(), &f)?),
        ("g_min_solver", inverse_identity_error(&solved, &f)?),
    ];
    for gate in SHIPPED_GATES {
        let t = shipped_table::<f64>(gate)?;
        worst.push((gate, t.identity_error()?));
    }
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let detail = worst
        .iter()
        .map(|(k, e)| format!("{k} {e:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((max <= 1e-10, detail))
}

fn saturation() -> Outcome {
    let f = build_f::<f64>(1);
    let kernel = left_kernel(&f)?;
    let w = weight_from_f(&f, 0)?;
    let solved = minimize_frame(g_shadow::<f64>().column(0), &kernel, &w, 0)?.objective;
    let closed = Minimizer::new(&kernel, &w, SolverKind::Dense)?
        .objective(g_min_closed_form::<f64>().column(0));
    let ok = (solved - 1.0).abs() <= 1e-10 && (closed - 1.0).abs() <= 1e-10;
    Ok((ok, format!("solver {solved:.12}, closed form {closed:.12}")))
}

fn shadow_lower_bound() -> Outcome {
    let engine = VarianceEngine::new();
    let g = Arc::new(g_shadow::<f64>());
    let mut vars = Vec::new();
    for n in 1..=8 {
        let ch = identity_channel::<f64>(n)?;
        let asg = FrameAssignment::per_site(n, g.clone())?;
        let id = lowdeg_tomo::PauliString::identity(n);
        vars.push(block_product_variance(&engine, &ch, None, &asg, &id, &id)?.variance);
    }
    let above = vars
        .iter()
        .enumerate()
        .all(|(i, v)| *v >= (11.0f64 / 8.0).powi(i as i32 + 1) - 1.0);
    let growth = vars
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(f64::INFINITY, f64::min);
    let detail = format!(
        "Var(1) {:.4}, Var(8) {:.4}, min growth {growth:.4}",
        vars[0], vars[7]
    );
    Ok((above && growth >= 1.3, detail))
}

fn clifford_certificate() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for gate in ["iswap", "cnot", "cz", "swap"] {
        let (_, obj) = rotated_minimized_frame(&gates::by_name::<f64>(gate)?)?;
        ok &= (obj[0] - 1.0).abs() <= 1e-8;
        parts.push(format!("{gate} {:.10}", obj[0]));
    }
    let (_, obj) = rotated_minimized_frame(&gates::by_name::<f64>("t*i")?)?;
    ok &= obj[0] > 1.001;
    parts.push(format!("t*i {:.6}", obj[0]));
    Ok((ok, parts.join(", ")))
}

fn fig2() -> Outcome {
    let n: Vec<usize> = (4..=50).collect();
    let cfg = seeded(ExperimentKind::Fig2, &n);
    let rows = variance_series(&cfg, &FrameLibrary::new(), FrameSpec::Min)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for entry in &cfg.estimator.entries {
        let at = |k: usize| {
            rows.iter()
                .find(|r| r.n == k && &r.entry == entry)
                .map(|r| r.variance)
        };
        let (a, b) = (at(25).unwrap_or(f64::NAN), at(50).unwrap_or(f64::NAN));
        let ratio = b / a;
        ok &= (0.98..=1.02).contains(&ratio);
        parts.push(format!(
            "{entry}: Var(25) {a:.5}, Var(50) {b:.5}, ratio {ratio:.5}"
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn series_means<'a>(
    all: &'a [Series<ConvergenceRow>],
    name: &str,
) -> Result<(Vec<(usize, f64)>, usize)> {
    let s = Series::get(all, name).ok_or_else(|| anyhow::anyhow!("missing series {name}"))?;
    Ok((
        mean_by_n(&s.rows),
        s.rows.iter().filter(|r| r.censored).count(),
    ))
}

fn fig3() -> Outcome {
    let cfg = seeded(ExperimentKind::Fig3, &[4, 8, 16, 32]);
    let series = convergence_experiment(&cfg, &FrameLibrary::new(), &fig3_systems(&cfg), None)?;
    let (min_means, min_cens) = series_means(&series, FrameSpec::RotatedMin.name())?;
    let (sh_means, sh_cens) = series_means(&series, FrameSpec::RotatedShadow.name())?;
    let spread = max_over_min(min_means.iter().map(|m| m.1));
    let at = |m: &[(usize, f64)], n: usize| m.iter().find(|x| x.0 == n).map_or(f64::NAN, |x| x.1);
    let growth = at(&sh_means, 8) / at(&sh_means, 4);
    let detail = format!(
        "g_min means [{}] max/min {spread:.3} (censored {min_cens}); g_sh means [{}] n8/n4 {growth:.3} (censored {sh_cens})",
        fmt_means(&min_means),
        fmt_means(&sh_means)
    );
    Ok((spread <= 3.0 && min_cens == 0 && growth >= 2.0, detail))
}

fn fig4() -> Outcome {
    let mut cfg = seeded(ExperimentKind::Fig4, &[4, 16, 64]);
    cfg.estimator.window = 500;
    let series = convergence_experiment(&cfg, &FrameLibrary::new(), &fig4_systems(), None)?;
    let mut ok = series.len() == 6;
    let mut parts = Vec::new();
    for s in &series {
        let means = mean_by_n(&s.rows);
        let censored = s.rows.iter().filter(|r| r.censored).count();
        let spread = max_over_min(means.iter().map(|m| m.1));
        ok &= spread <= 3.0 && censored == 0;
        parts.push(format!(
            "{} [{}] {spread:.2}{}",
            s.name,
            fmt_means(&means),
            if censored > 0 { " censored" } else { "" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

/// Largest `|sum_{r,s} p(r,s) G(r,s) - target|` over all `d = 1` pairs.
fn exact_bias(
    channel: &ChannelModel<f64>,
    layer: Option<&GateLayer<f64>>,
    asg: &FrameAssignment<f64>,
    target: &ChannelModel<f64>,
) -> Result<(f64, usize)> {
    let n = channel.n();
    let dist = exact_distribution(channel, layer)?;
    let chi = target.truncate_chi(1)?.chi;
    let idx = LowDegreeIndex::new(n, 1)?;
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for a in idx.strings() {
        for b in idx.strings() {
            let ev = EntryEvaluator::new(asg, a, b)?;
            let mean = dist
                .iter()
                .fold(lowdeg_tomo::Complex::new(0.0, 0.0), |acc, (s, r, p)| {
                    let snap = Snapshot {
                        s: state_string(n, s),
                        r: state_string(n, r),
                    };
                    acc + ev.eval(&snap) * p
                });
            worst = worst.max((mean - chi.get(a, b)).norm());
            pairs += 1;
        }
    }
    Ok((worst, pairs))
}

fn unbiasedness() -> Outcome {
    let n = 2;
    let noise = decaying_dephasing_channel::<f64>(n, 0.1, 0.1)?;
    let layer = GateLayer::iswap_layer(n)?;
    let plain = FrameAssignment::per_site(n, Arc::new(g_min_closed_form::<f64>()))?;
    let rotated = FrameAssignment::new(
        n,
        vec![(vec![0, 1], Arc::new(shipped_table::<f64>("iswap")?))],
    )?;
    let full = noise.after_layer(&layer)?;
    let cases = [
        ("no layer", exact_bias(&noise, None, &plain, &noise)?),
        (
            "layer, rotated frames, chi^E",
            exact_bias(&noise, Some(&layer), &rotated, &noise)?,
        ),
        (
            "layer, plain frames, chi^C",
            exact_bias(&noise, Some(&layer), &plain, &full)?,
        ),
    ];
    let ok = cases
        .iter()
        .all(|(_, (err, pairs))| *err <= 1e-10 && *pairs == 49);
    let detail = cases
        .iter()
        .map(|(k, (e, p))| format!("{k}: {p} pairs, max error {e:.1e}"))
        .collect::<Vec<_>>()
        .join("; ");
    Ok((ok, detail))
}

/// Largest variance over all `d = 1` entry pairs.
fn max_entry_variance(
    engine: &VarianceEngine<f64>,
    channel: &ChannelModel<f64>,
    layer: Option<&GateLayer<f64>>,
    asg: &FrameAssignment<f64>,
) -> Result<f64> {
    let idx = LowDegreeIndex::new(channel.n(), 1)?;
    let mut worst = 0.0f64;
    for a in idx.strings() {
        for b in idx.strings() {
            worst = worst.max(block_product_variance(engine, channel, layer, asg, a, b)?.variance);
        }
    }
    Ok(worst)
}

fn variance_bounds() -> Outcome {
    let engine = VarianceEngine::new();
    let gmin = Arc::new(g_min_closed_form::<f64>());
    let c_single = variance_constant(&gmin, &build_f(1))?.c;
    let mut plain_ratio = 0.0f64;
    for n in 1..=30 {
        let ch = decaying_dephasing_channel::<f64>(n, 0.1, 0.1)?;
        let asg = FrameAssignment::per_site(n, gmin.clone())?;
        plain_ratio =
            plain_ratio.max(max_entry_variance(&engine, &ch, None, &asg)? / c_single.powi(4));
    }
    let lib = FrameLibrary::new();
    let pair = lib.pair(FrameSpec::RotatedMin, "iswap")?;
    let c_pair = variance_constant(&pair, &pair.dual_target()?)?
        .c
        .max(c_single);
    let mut rotated_ratio = 0.0f64;
    let mut rotated_max = 0.0f64;
    for n in 2..=30 {
        let ch = decaying_dephasing_channel::<f64>(n, 0.1, 0.1)?;
        let layer = GateLayer::iswap_layer(n)?;
        let asg = lib.assignment(FrameSpec::RotatedMin, n, Some(&layer), "iswap")?;
        let v = max_entry_variance(&engine, &ch, Some(&layer), &asg)?;
        rotated_max = rotated_max.max(v);
        rotated_ratio = rotated_ratio.max(v / (c_pair.powi(4) * n as f64));
    }
    let detail = format!(
        "C = {c_single:.4}, max Var/C^4 = {plain_ratio:.3e}; rotated C = {c_pair:.4}, max Var = {rotated_max:.4}, max Var/(C^4 n) = {rotated_ratio:.3e}"
    );
    Ok((plain_ratio <= 1.0 && rotated_ratio <= 1.0, detail))
}

fn truncation_bounds() -> Outcome {
    let mut tail_checks = 0;
    let mut tail_ok = true;
    for n in 4..=12 {
        for p in [0.01, 0.05] {
            for d in [1, 2] {
                let exact = bitflip_exact_tail(n, p, d);
                let bound = lowdeg_tomo::channel::bitflip_tail_bound(n, p, d, None)?.bound;
                tail_ok &= exact <= bound;
                tail_checks += 1;
            }
        }
    }
    let mut l2_checks = 0;
    let mut l2_ok = true;
    let mut worst_slack = f64::INFINITY;
    for n in 1..=5 {
        let mut models: Vec<ChannelModel<f64>> = vec![
            decaying_dephasing_channel(n, 0.1, 0.1)?,
            bitflip_product(n, 0.05)?,
            identity_channel(n)?,
        ];
        if n >= 2 {
            let layer = GateLayer::iswap_layer(n)?;
            let with_layer: Vec<ChannelModel<f64>> =
                models.iter().map(|m| m.after_layer(&layer)).collect::<Result<_, _>>()?;
            models.extend(with_layer);
            // Correlated on the whole register, so it does not compose with a layer block-wise.
            models.push(correlated_xflip_channel(n, 0.1)?);
        }
        for m in &models {
            for d in 0..=n {
                let rep = m.truncate_chi(d)?;
                let l2sq = rep.l2_error * rep.l2_error;
                worst_slack = worst_slack.min(rep.diagonal_bound - l2sq);
                l2_ok &= l2sq <= rep.diagonal_bound + 1e-12;
                l2_checks += 1;
            }
        }
    }
    let detail = format!(
        "{tail_checks} tail cases {}; {l2_checks} truncations, min slack of diagonal bound {worst_slack:.2e}",
        if tail_ok { "hold" } else { "violated" }
    );
    Ok((tail_ok && l2_ok, detail))
}

fn mom_guarantee() -> Outcome {
    let (n, q, eps, delta, trials) = (4, 1, 0.1, 0.05, 200);
    let ch = decaying_dephasing_channel::<f64>(n, 0.1, 0.1)?;
    let asg = FrameAssignment::per_site(n, Arc::new(g_min_closed_form::<f64>()))?;
    let (a, b) = lowdeg_tomo::estimator::standard_entry(n, "xx", q)?;
    let var = block_product_variance(&VarianceEngine::new(), &ch, None, &asg, &a, &b)?.variance;
    let truth = ch.truncate_chi(1)?.chi.get(&a, &b);
    let plan = mom_plan(var, eps, delta)?;
    let sampler = BlockSampler::new(&ch, None)?;
    let ev = asg.evaluator(&a, &b)?;
    let mut failures = 0;
    for t in 0..trials {
        let mut acc = EstimatorAccumulator::new(
            a.clone(),
            b.clone(),
            Mode::MedianOfMeans {
                block_size: plan.b,
                blocks: plan.k_blocks,
            },
        )?;
        for snap in sampler.stream(derive_seed(SEED, &[t as u64])).take(plan.m) {
            acc.push(ev.eval(&snap));
        }
        if (acc.estimate()? - truth).norm() > eps {
            failures += 1;
        }
    }
    let rate = failures as f64 / trials as f64;
    let detail = format!(
        "Var {var:.4}, b {} k {} m {}, {failures}/{trials} failures",
        plan.b, plan.k_blocks, plan.m
    );
    ensure!(plan.m > 0, "empty plan");
    Ok((rate <= delta, detail))
}

fn fig6() -> Outcome {
    let n: Vec<usize> = (2..=10).map(|p| 2 * p).collect();
    let mut cfg = seeded(ExperimentKind::Fig6, &n);
    cfg.channel.layer = LayerKind::Paired;
    let rows = variance_series(&cfg, &FrameLibrary::new(), FrameSpec::RotatedMin)?;
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.variance.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    let detail = format!(
        "{} points, slope {slope:.4} per qubit, R^2 {r2:.6}",
        xs.len()
    );
    Ok((slope > 0.0 && r2 > 0.99, detail))
}
