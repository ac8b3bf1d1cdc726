//! Dispatch from a config to the library and assembly of the result table.

use std::fs::File;
use std::io::{BufWriter, Write};

use rand::Rng;
use rayon::prelude::*;
use twistmod::bounds::{self, BoundReport};
use twistmod::channel::{ChannelConfig, SignalWindow};
use twistmod::dynamics;
use twistmod::estimators::{self, MonteCarloConfig};
use twistmod::itinerary::{self, Codebook, Constellation};
use twistmod::numeric::MeanEstimate;
use twistmod::rng::{self, tags};
use twistmod::statistics::{self, Signal};
use twistmod::synth::{self, BitSource, ConditionalLaw, ReaderBits, SeededBits};
use twistmod::SystemSpec;

use crate::config::*;
use crate::error::{invalid, io_error, CliError};
use crate::table::{fmt_f64, sha256_hex, ResultTable, Row};

/// Stream tags for randomness drawn by the runner itself.
pub mod run_tags {
    pub const RECONSTRUCTION: u64 = 0x7265636f6e;
    pub const SPECTRUM: u64 = 0x7370656374;
}

type Out = Result<Vec<Row>, CliError>;

/// Runs one experiment and returns its table with the metadata header.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultTable, CliError> {
    let mut table = ResultTable::new(cfg.experiment.kind());
    table.metadata = metadata(cfg);
    table.rows = run_rows(&cfg.experiment, cfg.seed)?;
    Ok(table)
}

pub(crate) fn metadata(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    vec![
        ("twistmod".into(), env!("CARGO_PKG_VERSION").into()),
        ("kind".into(), cfg.experiment.kind().into()),
        ("config_sha256".into(), sha256_hex(&cfg.canonical_json())),
        ("seed".into(), cfg.seed.to_string()),
    ]
}

pub(crate) fn run_rows(exp: &Experiment, seed: u64) -> Out {
    exp.validate()?;
    match exp {
        Experiment::Autocorr(c) => autocorr(c, seed),
        Experiment::Lyapunov(c) => lyapunov(c, seed),
        Experiment::Locus(c) => locus(c),
        Experiment::Spectrum(c) => spectrum(c, seed),
        Experiment::Bounds(c) => bounds_rows(c),
        Experiment::MlSweep(c) => ml_sweep(c, seed),
        Experiment::ItineraryScheme(c) => scheme(c, seed),
        Experiment::Procsim(c) => procsim(c, seed),
    }
}

/// Row carrying a mean and its standard error (omitted when undefined).
fn est_row(point: &str, stat: &str, unit: &'static str, e: MeanEstimate) -> Row {
    let row = Row::new(point, stat, unit, e.mean);
    if e.stderr.is_finite() {
        row.stderr(e.stderr)
    } else {
        row
    }
}

/// `p=0.25/0.75`, from the snapped probabilities.
pub fn system_label(spec: &SystemSpec) -> String {
    p_label(spec.probabilities())
}

pub fn p_label(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
    format!("p={}", parts.join("/"))
}

fn autocorr(c: &AutocorrConfig, seed: u64) -> Out {
    let spec = c.system.resolve("system")?;
    let (signal, unit) = match c.signal {
        SignalParam::State => (Signal::State, "state^2"),
        SignalParam::Input => (Signal::Input { q: c.q }, "power"),
    };
    let est = statistics::autocorr_empirical(&spec, signal, c.n, c.trials, c.k_max, seed)?;
    Ok(est
        .iter()
        .map(|e| {
            Row::new(format!("k={}", e.lag), "autocorr", unit, e.mean)
                .reference(signal.exact_autocorr(&spec, e.lag as i64))
                .stderr(e.stderr)
        })
        .collect())
}

fn lyapunov(c: &LyapunovConfig, seed: u64) -> Out {
    let mut rows = Vec::new();
    for (i, sp) in c.systems.iter().enumerate() {
        let spec = sp.resolve(&format!("systems[{i}]"))?;
        let label = sp.label(&spec);
        let h = statistics::lyapunov_exact(&spec);
        let s0s: Vec<f64> = (0..c.trials)
            .map(|t| rng::uniform(&mut rng::rng_from_seed(rng::derive_seed(seed, tags::LYAPUNOV, i as u64, t as u64))))
            .collect();
        let per: Vec<f64> = s0s
            .par_iter()
            .map(|&s0| statistics::lyapunov_empirical(&spec, s0, c.n))
            .collect::<Result<_, _>>()?;
        rows.push(est_row(&label, "lyapunov", "nats", MeanEstimate::from_samples(&per)).reference(h));
        if spec.is_uniform() {
            let ln_r = (spec.r() as f64).ln();
            let traj = dynamics::iterate(&spec, s0s[0], c.n)?;
            let dev = traj
                .symbols
                .iter()
                .map(|&x| (-spec.p(x).ln() - ln_r).abs())
                .fold(0.0, f64::max);
            rows.push(Row::new(&label, "max_step_deviation", "nats", dev).reference(0.0));
        }
    }
    if let Some(r) = &c.reconstruction {
        rows.extend(reconstruction(r, seed)?);
    }
    Ok(rows)
}

/// Random `(spec, s0)` pairs: checks `lower <= s0 <= upper` and
/// `upper - lower <= max_p^tau` exactly, with no tolerance.
fn reconstruction(r: &ReconstructionParams, seed: u64) -> Out {
    let results: Vec<(bool, f64)> = (0..r.samples)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::rng_from_seed(rng::derive_seed(seed, run_tags::RECONSTRUCTION, i as u64, 0));
            let size = g.random_range(2..=r.max_r);
            let w: Vec<f64> = (0..size).map(|_| 0.05 + 0.95 * rng::uniform(&mut g)).collect();
            let total: f64 = w.iter().sum();
            let spec = SystemSpec::new(&w.iter().map(|v| v / total).collect::<Vec<_>>())?;
            let s0 = rng::uniform(&mut g);
            let traj = dynamics::iterate_exact(&spec, s0, r.tau)?;
            let b = dynamics::reconstruct_exact(&spec, &traj.symbols)?;
            let k_max = spec.lattice().windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
            let ok = b.contains(s0) && b.width_at_most_power(k_max);
            Ok((ok, b.width_ratio(k_max)))
        })
        .collect::<Result<_, twistmod::Error>>()?;
    let violations = results.iter().filter(|r| !r.0).count();
    let ratio = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(vec![
        Row::new("reconstruction", "samples", "count", r.samples as f64),
        Row::new("reconstruction", "violations", "count", violations as f64).reference(0.0),
        Row::new("reconstruction", "gap_ratio_max", "ratio", ratio).reference(1.0),
    ])
}

fn locus(c: &LocusConfig) -> Out {
    let mut rows = Vec::new();
    for (i, sp) in c.systems.iter().enumerate() {
        let spec = sp.resolve(&format!("systems[{i}]"))?;
        let label = sp.label(&spec);
        let reports: Vec<statistics::LocusReport> = (1..=c.n_max)
            .into_par_iter()
            .map(|n| statistics::locus_length(&spec, c.q, n, statistics::DEFAULT_ENUMERATION_BUDGET))
            .collect::<Result<_, _>>()?;
        for rep in reports {
            let point = format!("{label};n={}", rep.n);
            let mut exact = Row::new(&point, "locus_exact", "amplitude", rep.exact);
            if sp.is_uniform() {
                exact = exact.reference(statistics::locus_length_uniform(spec.r(), c.q, rep.n));
            }
            rows.push(exact);
            rows.push(Row::new(&point, "locus_lower", "amplitude", rep.lower));
            rows.push(Row::new(&point, "locus_upper", "amplitude", rep.upper));
        }
    }
    Ok(rows)
}

fn log_uniform(g: &mut twistmod::rng::ChaCha8Rng, range: [f64; 2]) -> f64 {
    (range[0].ln() + rng::uniform(g) * (range[1] / range[0]).ln()).exp()
}

fn spectrum(c: &SpectrumConfig, seed: u64) -> Out {
    let per_case: Vec<[f64; 4]> = (0..c.cases)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::rng_from_seed(rng::derive_seed(seed, run_tags::SPECTRUM, i as u64, 0));
            let size = g.random_range(2..=c.max_r);
            let w: Vec<f64> = (0..size).map(|_| 0.05 + 0.95 * rng::uniform(&mut g)).collect();
            let total: f64 = w.iter().sum();
            let spec = SystemSpec::new(&w.iter().map(|v| v / total).collect::<Vec<_>>())?;
            let q = log_uniform(&mut g, c.q_range);
            let sigma2 = log_uniform(&mut g, c.sigma2_range);
            let sp = statistics::spectrum_params(&spec, q, sigma2)?;
            let pb = sp.p_bar;
            let b = sigma2 * (1.0 + pb * pb) + q * (1.0 - pb * pb);
            let res1 = (sp.a * (1.0 + sp.tau * sp.tau) - b).abs() / b;
            let res2 = (sp.a * sp.tau - sigma2 * pb).abs() / (sigma2 * pb);
            let form = (0..c.frequencies)
                .map(|j| {
                    let w = -std::f64::consts::PI
                        + 2.0 * std::f64::consts::PI * j as f64 / (c.frequencies.max(2) - 1) as f64;
                    let s = sp.output_spectrum_sum(w);
                    (s - sp.output_spectrum_factored(w)).abs() / s
                })
                .fold(0.0, f64::max);
            let szego = (statistics::log_spectrum_mean(&sp, c.quadrature_points) - sp.a.ln()).abs();
            Ok([res1, res2, form, szego])
        })
        .collect::<Result<_, twistmod::Error>>()?;
    let max = |k: usize| per_case.iter().map(|r| r[k]).fold(0.0, f64::max);
    Ok(vec![
        Row::new("all", "cases", "count", c.cases as f64),
        Row::new("all", "coeff_residual_max_1", "relative", max(0)).reference(0.0),
        Row::new("all", "coeff_residual_max_2", "relative", max(1)).reference(0.0),
        Row::new("all", "form_rel_diff_max", "relative", max(2)).reference(0.0),
        Row::new("all", "szego_abs_diff_max", "nats", max(3)).reference(0.0),
    ])
}

/// Published shaping-loss figure, four decimals.
const PUBLISHED_SHAPING_LOSS: f64 = 0.1765;

fn bounds_rows(c: &BoundsConfig) -> Out {
    let cost = c.cost()?;
    let rep = BoundReport::compute(c.alpha, c.gamma, &cost, c.p_bar)?;
    let point = format!("alpha={};gamma={}", fmt_f64(c.alpha), fmt_f64(c.gamma));
    let mut rows = vec![
        Row::new(&point, "w_alpha", "1", rep.w_alpha),
        Row::new(&point, "rate", "nats", rep.rate),
        Row::new(&point, "capacity", "nats", rep.capacity),
        Row::new(&point, "shaping_loss", "nats", rep.mu).reference(PUBLISHED_SHAPING_LOSS),
        Row::new(&point, "alphabet_limit", "symbols", rep.r_max as f64),
        Row::new(&point, "ln_star_exponent", "nats", rep.ln_star_exponent),
    ];
    if let Some(e) = rep.exponent {
        rows.insert(2, Row::new(&point, "exponent", "nats", e));
    }
    if let Some(c1) = rep.c1 {
        rows.push(Row::new(&point, "c1", "nats", c1));
    }
    let cfg = ChannelConfig::from_gamma(1.0, c.gamma)?;
    let r_above = rep.r_max.max(1) + 1;
    if let Some(n0) = bounds::locus_crossing(r_above, c.alpha, &cfg)? {
        rows.push(Row::new(format!("{point};r={r_above}"), "locus_crossing_n0", "steps", n0 as f64));
    }
    if let Some(grid) = &c.alpha_grid {
        let alphas: Vec<f64> = (0..grid.points)
            .map(|i| grid.max * i as f64 / (grid.points - 1) as f64)
            .collect();
        let ws: Vec<f64> = alphas.iter().map(|&a| bounds::solve_w(a)).collect::<Result<_, _>>()?;
        let residual = alphas
            .iter()
            .zip(&ws)
            .map(|(a, w)| (w - w.ln_1p() - 2.0 * a).abs())
            .fold(0.0, f64::max);
        let increasing = ws.windows(2).all(|p| p[1] > p[0]);
        rows.push(Row::new("alpha_grid", "solve_w_residual_max", "1", residual).reference(0.0));
        rows.push(Row::new("alpha_grid", "w_at_zero", "1", bounds::solve_w(0.0)?).reference(0.0));
        rows.push(Row::new("alpha_grid", "w_increasing", "flag", flag(increasing)).reference(1.0));
    }
    if !c.p_bars.is_empty() {
        let c1s: Vec<f64> = c
            .p_bars
            .iter()
            .map(|&pb| bounds::c1_from_pbar(pb, &cfg))
            .collect::<Result<_, _>>()?;
        for (pb, c1) in c.p_bars.iter().zip(&c1s) {
            rows.push(Row::new(
                format!("p_bar={};gamma={}", fmt_f64(*pb), fmt_f64(c.gamma)),
                "c1",
                "nats",
                *c1,
            ));
        }
        let mut order: Vec<usize> = (0..c1s.len()).collect();
        order.sort_by(|&a, &b| c.p_bars[a].total_cmp(&c.p_bars[b]));
        let decreasing = order.windows(2).all(|w| c1s[w[1]] < c1s[w[0]]);
        rows.push(Row::new("p_bars", "c1_decreasing", "flag", flag(decreasing)).reference(1.0));
    }
    Ok(rows)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn ml_sweep(c: &MlSweepConfig, seed: u64) -> Out {
    let spec = c.system.resolve("system")?;
    let channel = c.channel.resolve("channel")?;
    let window: SignalWindow = c.window.into();
    let mut exp = MonteCarloConfig::new(spec.clone(), channel, c.n, c.trials, seed);
    exp.thetas = c.theta_grid.resolve("theta_grid")?;
    exp.cost = twistmod::estimators::CostFunction::power_law(c.cost_p)?;
    exp.anomaly = c.anomaly.resolve()?;
    exp.window = window;
    let rep = estimators::run_monte_carlo(&exp)?;
    let point = format!("gamma={};n={}", fmt_f64(channel.gamma), c.n);
    let p = &rep.pooled;
    let mut cond = est_row(&point, "conditional_cost", "cost", p.conditional_cost);
    if spec.is_uniform() && c.cost_p == 2.0 {
        cond = cond.reference(estimators::weak_noise_mse_uniform(spec.r(), &channel, c.n, window));
    }
    let mut rows = vec![
        Row::new(&point, "trials", "count", p.trials as f64),
        est_row(&point, "anomaly_rate", "probability", p.anomaly_rate),
        Row::new(&point, "max_anomaly_rate", "probability", rep.max_anomaly_rate),
        cond,
        est_row(&point, "anomalous_cost", "cost", p.anomalous_cost),
        est_row(&point, "unconditional_cost", "cost", p.unconditional_cost),
        Row::new(&point, "decomposition_residual", "cost", p.decomposition_residual()).reference(0.0),
        Row::new(&point, "worst_theta", "theta", rep.worst_theta),
        est_row(&point, "worst_conditional_cost", "cost", rep.worst_conditional_cost),
    ];
    if c.cost_p == 2.0 {
        rows.push(Row::new(&point, "conditional_rmse", "theta", p.conditional_cost.mean.sqrt()));
    }
    if c.per_theta {
        for t in &rep.per_theta {
            let tp = format!("{point};theta={}", fmt_f64(t.theta));
            rows.push(est_row(&tp, "anomaly_rate", "probability", t.summary.anomaly_rate));
            rows.push(est_row(&tp, "conditional_cost", "cost", t.summary.conditional_cost));
        }
    }
    Ok(rows)
}

/// Loads the codebook at `path` if it matches `cfg`, otherwise builds it
/// (and saves it when the file does not exist yet).
fn load_or_build(cfg: &itinerary::SchemeConfig, path: Option<&std::path::Path>) -> Result<Codebook, CliError> {
    let Some(path) = path else {
        return Ok(itinerary::build_codebook(cfg)?);
    };
    if path.exists() {
        let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
        let book = Codebook::from_bytes(&bytes)?;
        let matches = book.n == cfg.n
            && book.m == cfg.m
            && book.r_cw == cfg.r_cw
            && book.delta == cfg.delta
            && book.seed == cfg.seed;
        if !matches {
            return Err(invalid("codebook", format!("{} was built for different parameters", path.display())));
        }
        return Ok(book);
    }
    let book = itinerary::build_codebook(cfg)?;
    std::fs::write(path, book.to_bytes()).map_err(|e| io_error(path, e))?;
    Ok(book)
}

fn scheme(c: &SchemeExperiment, seed: u64) -> Out {
    let cfg = c.scheme_config(seed)?;
    let channel = cfg.channel()?;
    let m = c.scheme_m()?;
    let con = Constellation::for_config(&cfg)?;
    let point = format!("gamma={};n={};M={}", fmt_f64(channel.gamma), c.n, fmt_f64(m));
    let mut rows = vec![
        Row::new(&point, "codebook_size", "words", m),
        Row::new(&point, "rate", "nats", m.ln() / c.n as f64),
        Row::new(&point, "capacity", "nats", channel.capacity()),
        Row::new(&point, "ceiling", "theta", 0.5 / m),
        Row::new(&point, "constellation_power", "power", con.power).reference(cfg.q),
    ];
    if c.mode == SchemeMode::Simulate {
        let book = load_or_build(&cfg, c.codebook.as_deref())?;
        let thetas = c.thetas.resolve("thetas")?.values(seed);
        let cost = twistmod::estimators::CostFunction::power_law(c.cost_p)?;
        let rep = itinerary::run_scheme(&thetas, &cfg, &book, c.trials, &cost, seed)?;
        rows.push(Row::new(&point, "trials", "count", rep.trials as f64));
        rows.push(est_row(&point, "anomaly_rate", "probability", rep.anomaly_rate));
        rows.push(Row::new(&point, "max_conditional_error", "theta", rep.max_conditional_error).reference(rep.ceiling));
        rows.push(est_row(&point, "conditional_cost", "cost", rep.conditional_cost));
    }
    if c.union_samples > 0 {
        let b = itinerary::random_coding_error_bound(&con, &channel, c.n, m, c.union_samples, seed)?;
        rows.push(est_row(&point, "anomaly_bound", "probability", b.estimate));
    }
    Ok(rows)
}

fn procsim(c: &ProcsimConfig, seed: u64) -> Out {
    let law = c.law.resolve()?;
    let (dyn_law, stationary, h): (&dyn ConditionalLaw, Vec<f64>, f64) = match &law {
        Law::Memoryless(m) => (m, m.0.probabilities().to_vec(), statistics::lyapunov_exact(&m.0)),
        Law::Markov(ch) => (ch, ch.initial.probabilities().to_vec(), ch.entropy_rate()),
    };
    let report = match &c.bits {
        Bits::Seeded => synth::synthesize(dyn_law, &mut SeededBits::new(seed), c.n)?,
        Bits::File { path, chunk } => {
            let file = File::open(path).map_err(|e| io_error(path, e))?;
            let mut bits = ReaderBits::new(file, *chunk);
            let rep = synth::synthesize(dyn_law, &mut bits as &mut dyn BitSource, c.n);
            if let Some(e) = bits.error.take() {
                return Err(io_error(path, e));
            }
            rep?
        }
    };
    if let Some(path) = &c.symbols_out {
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        let mut w = BufWriter::new(file);
        match c.symbols_format {
            SymbolFormat::Lines => synth::write_symbols_lines(&mut w, &report.symbols),
            SymbolFormat::Bytes => synth::write_symbols_bytes(&mut w, &report.symbols, dyn_law.alphabet())?,
        }
        .and_then(|_| w.flush())
        .map_err(|e| io_error(path, e))?;
    }
    let n = report.symbols.len() as f64;
    let mut counts = vec![0u64; dyn_law.alphabet()];
    report.symbols.iter().for_each(|&x| counts[x] += 1);
    let mut rows = Vec::new();
    for (x, (&cnt, &p)) in counts.iter().zip(&stationary).enumerate() {
        rows.push(
            Row::new(format!("x={x}"), "frequency", "probability", cnt as f64 / n)
                .reference(p)
                .stderr((p * (1.0 - p) / n).sqrt()),
        );
    }
    rows.push(Row::new("law", "bits_consumed", "bits", report.bits_consumed as f64));
    rows.push(Row::new("law", "bits_per_symbol", "bits", report.rate).reference(h / std::f64::consts::LN_2));
    for k in 1..=c.k_max {
        let chi = synth::chi_square_kgrams(dyn_law, &report.symbols, k)?;
        rows.push(Row::new(format!("k={k}"), "chi_square", "statistic", chi.statistic).reference(chi.dof as f64));
        rows.push(Row::new(format!("k={k}"), "chi_square_p_value", "probability", chi.p_value));
    }
    if c.entropy_trials > 0 {
        let e = synth::entropy_rate(dyn_law, c.n.min(10_000), c.entropy_trials, seed)?;
        rows.push(est_row("law", "entropy_rate", "nats", e).reference(h));
    }
    if let (Law::Memoryless(m), true) = (&law, c.reduction_checks > 0) {
        let mismatches = (0..c.reduction_checks)
            .into_par_iter()
            .map(|i| {
                let s0 = rng::uniform(&mut rng::rng_from_seed(rng::derive_seed(seed, tags::STATIONARY, i as u64, 1)));
                let a = synth::iterate_memory(m, s0, 1000)?;
                let b = dynamics::iterate(&m.0, s0, 1000)?;
                Ok(usize::from(a != b))
            })
            .collect::<Result<Vec<usize>, twistmod::Error>>()?
            .iter()
            .sum::<usize>();
        rows.push(Row::new("law", "reduction_mismatches", "count", mismatches as f64).reference(0.0));
    }
    Ok(rows)
}
