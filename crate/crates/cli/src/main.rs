//! frakt: command-line front end for packing and Riesz-energy
//! computations on self-similar Cantor-type sets.
//!
//! Every command loads and validates its fractal config, consults the
//! result cache (keyed by canonical config + parameters + code version),
//! and writes deterministic CSV/JSON artifacts into the output directory.
//!
//! Exit codes: 0 ok, 2 parse, 3 geometry, 4 dependence, 5 budget, 1 other.

mod cache;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use frakt_core::config::FractalConfig;
use frakt_core::rational::{format_rational, parse_rational, rational_from_f64, to_f64, Rational};
use frakt_core::{
    count_recursion_check, energy_oscillation, fibonacci_table, greedy_count, large_s_diagnostic,
    limit_estimate, min_energy_search, packing_distance_bounds, packing_oscillation,
    renewal_iterate, renewal_residuals, validate_renewal, z_sequence, DepthSchedule,
    FractalSystem, PeriodicityVerdict, RatioStructure, RenewalSystem, SweepOptions,
};

#[derive(Parser)]
#[command(
    name = "frakt",
    version,
    about = "Packing distances, Riesz energies, and renewal diagnostics on self-similar sets"
)]
struct Cli {
    /// Bypass the result cache for this invocation.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "frakt-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the Moran dimension equation for a fractal config.
    Dim {
        #[arg(long)]
        config: PathBuf,
    },
    /// Best-packing distance bounds for --n, or the count N(t) for --t.
    Pack {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        /// Separation threshold, "p/q" or decimal.
        #[arg(long)]
        t: Option<String>,
        /// Maximum cylinder descent depth.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Minimal-energy upper bound at one configuration size.
    Energy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Renormalized z-sequence along the natural subsequence of sizes.
    Zseq {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        nmax: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Discrete renewal solver; weights as "lag:weight,...", b from CSV.
    Renewal {
        /// Sparse weights, e.g. "1:0.5,2:0.5".
        #[arg(long)]
        f: String,
        /// CSV file of rows "n,b_n"; omitted means b = 0.
        #[arg(long)]
        b: Option<PathBuf>,
        #[arg(long)]
        nmax: usize,
        /// Certified bound on sum |b_n| beyond the supplied prefix.
        #[arg(long, default_value_t = 0.0)]
        tail_bound: f64,
    },
    /// Oscillation report: packing blocks, contraction constants,
    /// z-sequence spread, large-s trend.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        nmax: usize,
        #[arg(long, value_delimiter = ',', default_value = "8,12,16")]
        s_list: Vec<f64>,
        #[arg(long, default_value_t = 30)]
        energy_nmax: usize,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        ell_list: Vec<u64>,
        #[arg(long, default_value_t = 5)]
        zseq_nmax: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Certified Fibonacci packing table on the built-in 1/4,1/2 system.
    ExampleFib {
        #[arg(long, default_value_t = 12)]
        nmax: u32,
    },
    /// Cache maintenance.
    Cache {
        #[command(subcommand)]
        action: CacheCmd,
    },
}

#[derive(Subcommand)]
enum CacheCmd {
    /// Remove cache entries older than --max-age-days (0 removes all).
    Gc {
        #[arg(long, default_value_t = 0)]
        max_age_days: u64,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        let code = err
            .downcast_ref::<frakt_core::Error>()
            .map(exit_code)
            .unwrap_or(1);
        std::process::exit(code);
    }
}

fn exit_code(e: &frakt_core::Error) -> i32 {
    use frakt_core::Error::*;
    match e {
        Parse(_) => 2,
        Geometry(_) => 3,
        DependenceRequired(_) => 4,
        Budget(_) => 5,
        _ => 1,
    }
}

struct Ctx {
    no_cache: bool,
    out: PathBuf,
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        no_cache: cli.no_cache,
        out: cli.out,
    };
    match cli.command {
        Cmd::Dim { config } => cmd_dim(&ctx, &config),
        Cmd::Pack {
            config,
            n,
            t,
            depth,
        } => cmd_pack(&ctx, &config, n, t.as_deref(), depth),
        Cmd::Energy {
            config,
            n,
            s,
            depth,
            restarts,
            seed,
        } => cmd_energy(&ctx, &config, n, s, depth, restarts, seed),
        Cmd::Zseq {
            config,
            ell,
            s,
            nmax,
            restarts,
            seed,
        } => cmd_zseq(&ctx, &config, ell, s, nmax, restarts, seed),
        Cmd::Renewal {
            f,
            b,
            nmax,
            tail_bound,
        } => cmd_renewal(&ctx, &f, b.as_deref(), nmax, tail_bound),
        Cmd::Report {
            config,
            nmax,
            s_list,
            energy_nmax,
            depth,
            ell_list,
            zseq_nmax,
            restarts,
            seed,
        } => cmd_report(
            &ctx,
            &config,
            nmax,
            &s_list,
            energy_nmax,
            depth,
            &ell_list,
            zseq_nmax,
            restarts,
            seed,
        ),
        Cmd::ExampleFib { nmax } => cmd_example_fib(&ctx, nmax),
        Cmd::Cache { action } => match action {
            CacheCmd::Gc { max_age_days } => {
                let removed = cache::gc(Duration::from_secs(max_age_days * 86_400))?;
                println!("removed {removed} cache entries");
                Ok(())
            }
        },
    }
}

// -------------------------------------------------------------------
// Plumbing: cached compute + artifact emission.
// -------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct Doc<T> {
    command: String,
    params: serde_json::Value,
    cached: bool,
    compute_ms: u128,
    result: T,
}

fn run_cached<T, F>(
    ctx: &Ctx,
    command: &str,
    canonical_params: &serde_json::Value,
    compute: F,
) -> Result<(T, bool, u128)>
where
    T: Serialize + DeserializeOwned,
    F: FnOnce() -> Result<T>,
{
    let key = cache::key_for(
        env!("CARGO_PKG_VERSION"),
        command,
        &serde_json::to_string(canonical_params)?,
    );
    if !ctx.no_cache {
        if let Some(bytes) = cache::read(&key) {
            if let Ok(v) = serde_json::from_slice::<T>(&bytes) {
                return Ok((v, true, 0));
            }
        }
    }
    let t0 = Instant::now();
    let v = compute()?;
    let ms = t0.elapsed().as_millis();
    if !ctx.no_cache {
        cache::write_atomic(&key, &serde_json::to_vec(&v)?)?;
    }
    Ok((v, false, ms))
}

fn emit<T: Serialize>(
    ctx: &Ctx,
    command: &str,
    params: serde_json::Value,
    result: &T,
    cached: bool,
    compute_ms: u128,
    csv: Option<(&str, &[String])>,
) -> Result<()> {
    std::fs::create_dir_all(&ctx.out)
        .with_context(|| format!("create {}", ctx.out.display()))?;
    let doc = Doc {
        command: command.to_string(),
        params,
        cached,
        compute_ms,
        result,
    };
    let json_path = ctx.out.join(format!("{command}.json"));
    std::fs::write(&json_path, serde_json::to_vec_pretty(&doc)?)
        .with_context(|| format!("write {}", json_path.display()))?;
    if let Some((header, rows)) = csv {
        let csv_path = ctx.out.join(format!("{command}.csv"));
        let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        std::fs::write(&csv_path, text).with_context(|| format!("write {}", csv_path.display()))?;
    }
    Ok(())
}

fn load(config: &Path) -> Result<(FractalConfig, FractalSystem, String)> {
    let cfg = FractalConfig::from_path(config)?;
    let sys = cfg.build()?;
    let canonical = cfg.canonical_json()?;
    Ok((cfg, sys, canonical))
}

/// "p/q" or integer via exact parse; decimal via exact dyadic embedding.
fn parse_threshold(text: &str) -> Result<Rational> {
    if text.contains('/') || !text.contains('.') {
        Ok(parse_rational(text)?)
    } else {
        let x: f64 = text
            .parse()
            .map_err(|e| frakt_core::Error::Parse(format!("bad threshold {text:?}: {e}")))?;
        Ok(rational_from_f64(x)?)
    }
}

fn fmt_value(q: &Rational, exact: bool) -> String {
    if exact {
        format_rational(q)
    } else {
        format!("{}", to_f64(q))
    }
}

// -------------------------------------------------------------------
// dim
// -------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct DimResult {
    dimension: f64,
    moran_residual: f64,
    sigma: String,
    exact_mode: bool,
    ratios: Vec<f64>,
}

fn cmd_dim(ctx: &Ctx, config: &Path) -> Result<()> {
    let (_, sys, canonical) = load(config)?;
    let params = serde_json::json!({ "config": canonical });
    let (result, cached, ms) = run_cached(ctx, "dim", &params, || {
        let d = sys.dimension();
        let residual = sys
            .ratios()
            .iter()
            .map(|r| r.powf(d))
            .sum::<f64>()
            - 1.0;
        let sigma = if sys.exact_mode() {
            format_rational(sys.sigma_exact()?)
        } else {
            format!("{}", sys.sigma())
        };
        Ok(DimResult {
            dimension: d,
            moran_residual: residual.abs(),
            sigma,
            exact_mode: sys.exact_mode(),
            ratios: sys.ratios(),
        })
    })?;
    println!(
        "dimension = {:.12} (Moran residual {:.2e}), sigma = {}{}",
        result.dimension,
        result.moran_residual,
        result.sigma,
        if cached { " [cached]" } else { "" }
    );
    emit(ctx, "dim", params, &result, cached, ms, None)
}

// -------------------------------------------------------------------
// pack
// -------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PackResult {
    Delta {
        n: usize,
        delta_lower: String,
        delta_upper: String,
        exact: bool,
        witness: Vec<String>,
        certificate: String,
    },
    Count {
        t: String,
        count_lower: u64,
        count_upper: u64,
        exact: bool,
    },
}

fn cmd_pack(
    ctx: &Ctx,
    config: &Path,
    n: Option<usize>,
    t: Option<&str>,
    depth: Option<usize>,
) -> Result<()> {
    let (_, sys, canonical) = load(config)?;
    let mut opts = SweepOptions::for_system(&sys);
    if let Some(d) = depth {
        opts = opts.with_depth(d);
    }
    let exact = sys.exact_mode();
    match (n, t) {
        (Some(n), None) => {
            let params = serde_json::json!({ "config": canonical, "n": n, "depth": opts.depth_max });
            let (result, cached, ms) = run_cached(ctx, "pack", &params, || {
                let b = packing_distance_bounds(&sys, n, &opts)?;
                Ok(PackResult::Delta {
                    n: b.n,
                    delta_lower: fmt_value(&b.lower, exact),
                    delta_upper: fmt_value(&b.upper, exact),
                    exact: b.exact,
                    witness: b.witness.iter().map(|q| fmt_value(q, exact)).collect(),
                    certificate: b.certificate,
                })
            })?;
            let PackResult::Delta {
                n,
                delta_lower,
                delta_upper,
                exact,
                ..
            } = &result
            else {
                unreachable!()
            };
            println!(
                "delta(A, {n}) in [{delta_lower}, {delta_upper}] exact={exact}{}",
                if cached { " [cached]" } else { "" }
            );
            let rows = vec![format!("{n},{delta_lower},{delta_upper},{exact}")];
            emit(
                ctx,
                "pack",
                params,
                &result,
                cached,
                ms,
                Some(("N,delta_lower,delta_upper,exact_flag", &rows)),
            )
        }
        (None, Some(t)) => {
            let threshold = parse_threshold(t)?;
            let params = serde_json::json!({
                "config": canonical,
                "t": format_rational(&threshold),
                "depth": opts.depth_max
            });
            let (result, cached, ms) = run_cached(ctx, "pack", &params, || {
                let cb = greedy_count(&sys, &threshold, &opts)?;
                Ok(PackResult::Count {
                    t: fmt_value(&cb.t, exact),
                    count_lower: cb.lower,
                    count_upper: cb.upper,
                    exact: cb.exact,
                })
            })?;
            let PackResult::Count {
                t,
                count_lower,
                count_upper,
                ..
            } = &result
            else {
                unreachable!()
            };
            println!(
                "N({t}) in [{count_lower}, {count_upper}]{}",
                if cached { " [cached]" } else { "" }
            );
            let rows = vec![format!(",{t},{count_lower},{count_upper}")];
            emit(
                ctx,
                "pack",
                params,
                &result,
                cached,
                ms,
                Some(("n,t,count_lower,count_upper", &rows)),
            )
        }
        _ => Err(frakt_core::Error::Parse(
            "pack needs exactly one of --n or --t".into(),
        )
        .into()),
    }
}

// -------------------------------------------------------------------
// energy
// -------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct EnergyResult {
    n: usize,
    s: f64,
    depth: usize,
    restarts: usize,
    seed: u64,
    energy_upper: f64,
    min_dist: f64,
    points: Vec<Vec<f64>>,
}

fn cmd_energy(
    ctx: &Ctx,
    config: &Path,
    n: usize,
    s: f64,
    depth: usize,
    restarts: usize,
    seed: u64,
) -> Result<()> {
    let (_, sys, canonical) = load(config)?;
    let params = serde_json::json!({
        "config": canonical, "n": n, "s": s, "depth": depth,
        "restarts": restarts, "seed": seed
    });
    let (result, cached, ms) = run_cached(ctx, "energy", &params, || {
        let (energy, cfg) = min_energy_search(&sys, n, s, depth, restarts, seed)?;
        Ok(EnergyResult {
            n,
            s,
            depth,
            restarts,
            seed,
            energy_upper: energy,
            min_dist: cfg.min_dist,
            points: cfg.points,
        })
    })?;
    println!(
        "E_hat({n}; s={s}) <= {} (min dist {}){}",
        result.energy_upper,
        result.min_dist,
        if cached { " [cached]" } else { "" }
    );
    let rows = vec![format!(
        "{},{},{},{},{}",
        result.n, result.s, result.depth, result.energy_upper, result.min_dist
    )];
    emit(
        ctx,
        "energy",
        params,
        &result,
        cached,
        ms,
        Some(("N,s,depth,energy_upper,min_dist", &rows)),
    )
}

// -------------------------------------------------------------------
// zseq
// -------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ZseqResult {
    ell: u64,
    s: f64,
    base: f64,
    dimension: f64,
    truncated: bool,
    f_weights: Vec<f64>,
    shape_constant: Option<f64>,
    partial_sums_bounded: bool,
    cauchy_width: f64,
    z_level: f64,
    rows: Vec<ZRow>,
}

#[derive(Serialize, Deserialize)]
struct ZRow {
    n: usize,
    n_points: u64,
    depth: usize,
    energy_upper: f64,
    z: f64,
    b: f64,
}

fn cmd_zseq(
    ctx: &Ctx,
    config: &Path,
    ell: u64,
    s: f64,
    nmax: usize,
    restarts: usize,
    seed: u64,
) -> Result<()> {
    let (_, sys, canonical) = load(config)?;
    let params = serde_json::json!({
        "config": canonical, "ell": ell, "s": s, "nmax": nmax,
        "restarts": restarts, "seed": seed
    });
    let (result, cached, ms) = run_cached(ctx, "zseq", &params, || {
        let es = match sys.ratio_structure(1e-10)? {
            RatioStructure::Dependent(es) => es,
            RatioStructure::Independent => {
                return Err(frakt_core::Error::DependenceRequired(
                    "zseq needs dependent contraction ratios".into(),
                )
                .into())
            }
        };
        let zs = z_sequence(&sys, s, ell, nmax, &DepthSchedule::Default, restarts, seed)?;
        let res = renewal_residuals(&zs, &es)?;
        let rows = zs
            .entries
            .iter()
            .zip(&res.b)
            .map(|(e, &b)| ZRow {
                n: e.n,
                n_points: e.n_points,
                depth: e.depth,
                energy_upper: e.energy_upper,
                z: e.z,
                b,
            })
            .collect();
        Ok(ZseqResult {
            ell,
            s,
            base: zs.base,
            dimension: zs.dimension,
            truncated: zs.truncated,
            f_weights: res.f.clone(),
            shape_constant: res.shape_constant,
            partial_sums_bounded: res.partial_sums_bounded,
            cauchy_width: res.cauchy_width,
            z_level: res.z_level,
            rows,
        })
    })?;
    println!(
        "z-sequence ell={} s={}: {} entries, tail width {:.3e} on level {:.6}{}",
        result.ell,
        result.s,
        result.rows.len(),
        result.cauchy_width,
        result.z_level,
        if cached { " [cached]" } else { "" }
    );
    let rows: Vec<String> = result
        .rows
        .iter()
        .map(|r| format!("{},{},{},{}", r.n, r.n_points, r.z, r.b))
        .collect();
    emit(
        ctx,
        "zseq",
        params,
        &result,
        cached,
        ms,
        Some(("n,N,z_n,b_n", &rows)),
    )
}

// -------------------------------------------------------------------
// renewal
// -------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RenewalResult {
    verdict: String,
    f_sum: f64,
    mean_lag: Option<f64>,
    limit: Option<f64>,
    uncertainty: Option<f64>,
    residual: Option<f64>,
    cauchy_width: Option<f64>,
    z: Vec<f64>,
}

fn parse_f_spec(text: &str) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let (lag, w) = part.split_once(':').ok_or_else(|| {
            frakt_core::Error::Parse(format!("bad f entry {part:?}, want lag:weight"))
        })?;
        let lag: usize = lag
            .trim()
            .parse()
            .map_err(|e| frakt_core::Error::Parse(format!("bad lag {lag:?}: {e}")))?;
        let w: f64 = w
            .trim()
            .parse()
            .map_err(|e| frakt_core::Error::Parse(format!("bad weight {w:?}: {e}")))?;
        out.push((lag, w));
    }
    Ok(out)
}

fn parse_b_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| frakt_core::Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let mut pairs: Vec<(usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
            return Err(
                frakt_core::Error::Parse(format!("line {}: want n,b_n", lineno + 1)).into(),
            );
        };
        match (a.trim().parse::<usize>(), b.trim().parse::<f64>()) {
            (Ok(n), Ok(v)) => pairs.push((n, v)),
            _ if lineno == 0 => continue, // header
            _ => {
                return Err(frakt_core::Error::Parse(format!(
                    "line {}: unparsable row {line:?}",
                    lineno + 1
                ))
                .into())
            }
        }
    }
    let len = pairs.iter().map(|&(n, _)| n + 1).max().unwrap_or(0);
    let mut b = vec![0.0; len];
    for (n, v) in pairs {
        b[n] = v;
    }
    Ok(b)
}

fn cmd_renewal(
    ctx: &Ctx,
    f_spec: &str,
    b_path: Option<&Path>,
    nmax: usize,
    tail_bound: f64,
) -> Result<()> {
    let support = parse_f_spec(f_spec)?;
    let b = match b_path {
        Some(p) => parse_b_csv(p)?,
        None => Vec::new(),
    };
    let params = serde_json::json!({
        "f": support, "b": b, "nmax": nmax, "tail_bound": tail_bound
    });
    let (result, cached, ms) = run_cached(ctx, "renewal", &params, || {
        let sys = RenewalSystem::from_support(&support, b.clone(), tail_bound, nmax)?;
        let validation = validate_renewal(&sys)?;
        let z = renewal_iterate(&sys, nmax)?;
        let (verdict, est) = match validation.verdict {
            PeriodicityVerdict::Aperiodic => {
                let est = limit_estimate(&sys)?;
                ("aperiodic".to_string(), Some(est))
            }
            PeriodicityVerdict::Periodic { gcd } => (format!("periodic(gcd={gcd})"), None),
        };
        Ok(RenewalResult {
            verdict,
            f_sum: validation.f_sum,
            mean_lag: est.as_ref().map(|e| e.mean_lag),
            limit: est.as_ref().map(|e| e.value),
            uncertainty: est.as_ref().map(|e| e.uncertainty),
            residual: est.as_ref().map(|e| e.residual),
            cauchy_width: est.as_ref().map(|e| e.cauchy_width),
            z,
        })
    })?;
    match result.limit {
        Some(v) => println!(
            "renewal {}: limit estimate {} (residual {:.2e}){}",
            result.verdict,
            v,
            result.residual.unwrap_or(f64::NAN),
            if cached { " [cached]" } else { "" }
        ),
        None => println!(
            "renewal {}: no limit estimate (periodic support){}",
            result.verdict,
            if cached { " [cached]" } else { "" }
        ),
    }
    let rows: Vec<String> = result
        .z
        .iter()
        .enumerate()
        .map(|(n, z)| format!("{n},{z}"))
        .collect();
    emit(
        ctx,
        "renewal",
        params,
        &result,
        cached,
        ms,
        Some(("n,z_n", &rows)),
    )
}

// -------------------------------------------------------------------
// report
// -------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ReportResult {
    oscillation: OscJson,
    large_s: LargeSJson,
    energy_oscillation: EnergyOscJson,
}

#[derive(Serialize, Deserialize)]
struct OscJson {
    base: f64,
    exponents: Vec<u32>,
    dimension: f64,
    j_threshold: usize,
    counts: Vec<u64>,
    blocks: Vec<BlockJson>,
    liminf_est: f64,
    limsup_est: f64,
    ratio: f64,
    contraction_constants: Vec<ContractionJson>,
    max_contraction_constant: f64,
    warning: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct BlockJson {
    id: usize,
    n_start: u64,
    n_end: u64,
    delta_lo: String,
    delta_hi: String,
    exact: bool,
    value_min: f64,
    value_max: f64,
    conclusive: bool,
}

#[derive(Serialize, Deserialize)]
struct ContractionJson {
    n: usize,
    c_lower: f64,
    c_upper: f64,
}

#[derive(Serialize, Deserialize)]
struct LargeSJson {
    packing_side: f64,
    delta_exact: bool,
    gaps_shrinking: bool,
    low_confidence: bool,
    rows: Vec<LargeSRowJson>,
}

#[derive(Serialize, Deserialize)]
struct LargeSRowJson {
    s: f64,
    sup_normalized_energy: f64,
    energy_side: f64,
    gap: f64,
}

#[derive(Serialize, Deserialize)]
struct EnergyOscJson {
    s: f64,
    spread_abs: f64,
    spread_rel: f64,
    upper_bound_based: bool,
    per_ell: Vec<EllJson>,
}

#[derive(Serialize, Deserialize)]
struct EllJson {
    ell: u64,
    stabilized: f64,
    last_width: f64,
    width_shrinking: bool,
}

#[derive(Serialize, Deserialize)]
struct ReportWithRows {
    report: ReportResult,
    value_rows: Vec<(u64, f64, usize)>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_report(
    ctx: &Ctx,
    config: &Path,
    nmax: usize,
    s_list: &[f64],
    energy_nmax: usize,
    depth: usize,
    ell_list: &[u64],
    zseq_nmax: usize,
    restarts: usize,
    seed: u64,
) -> Result<()> {
    let (_, sys, canonical) = load(config)?;
    let exact = sys.exact_mode();
    let params = serde_json::json!({
        "config": canonical, "nmax": nmax, "s_list": s_list,
        "energy_nmax": energy_nmax, "depth": depth, "ell_list": ell_list,
        "zseq_nmax": zseq_nmax, "restarts": restarts, "seed": seed
    });
    let (result, cached, ms) = run_cached(ctx, "report", &params, || {
        let opts = SweepOptions::for_system(&sys);
        let osc = packing_oscillation(&sys, nmax, &opts)?;
        // The recursion check doubles as a consistency gate for the
        // counts the report is built on.
        let rec = count_recursion_check(&sys, osc.j_threshold, nmax, &opts)?;
        if rec.first_violation.is_some() {
            return Err(frakt_core::Error::Internal(format!(
                "count recursion violated at n = {:?}",
                rec.first_violation
            ))
            .into());
        }
        let diag = large_s_diagnostic(&sys, s_list, energy_nmax, depth, restarts, seed)?;
        let s_for_z = s_list.first().copied().unwrap_or(8.0);
        let mut zseqs = Vec::new();
        for (i, &ell) in ell_list.iter().enumerate() {
            zseqs.push(z_sequence(
                &sys,
                s_for_z,
                ell,
                zseq_nmax,
                &DepthSchedule::Default,
                restarts,
                seed.wrapping_add(i as u64),
            )?);
        }
        let eosc = energy_oscillation(&zseqs)?;

        let value_rows = osc.value_rows();
        let report = ReportResult {
            oscillation: OscJson {
                base: osc.base,
                exponents: osc.exponents.clone(),
                dimension: osc.dimension,
                j_threshold: osc.j_threshold,
                counts: osc.counts.clone(),
                blocks: osc
                    .blocks
                    .iter()
                    .map(|b| BlockJson {
                        id: b.id,
                        n_start: b.n_start,
                        n_end: b.n_end,
                        delta_lo: fmt_value(&b.delta_lo, exact),
                        delta_hi: fmt_value(&b.delta_hi, exact),
                        exact: b.exact,
                        value_min: b.value_min,
                        value_max: b.value_max,
                        conclusive: b.conclusive,
                    })
                    .collect(),
                liminf_est: osc.liminf_est,
                limsup_est: osc.limsup_est,
                ratio: osc.ratio,
                contraction_constants: osc
                    .contraction_constants
                    .iter()
                    .map(|c| ContractionJson {
                        n: c.n,
                        c_lower: c.c_lower,
                        c_upper: c.c_upper,
                    })
                    .collect(),
                max_contraction_constant: osc.max_contraction_constant,
                warning: osc.warning.clone(),
            },
            large_s: LargeSJson {
                packing_side: diag.packing_side,
                delta_exact: diag.delta_exact,
                gaps_shrinking: diag.gaps_shrinking,
                low_confidence: diag.low_confidence,
                rows: diag
                    .rows
                    .iter()
                    .map(|r| LargeSRowJson {
                        s: r.s,
                        sup_normalized_energy: r.sup_normalized_energy,
                        energy_side: r.energy_side,
                        gap: r.gap,
                    })
                    .collect(),
            },
            energy_oscillation: EnergyOscJson {
                s: eosc.s,
                spread_abs: eosc.spread_abs,
                spread_rel: eosc.spread_rel,
                upper_bound_based: eosc.upper_bound_based,
                per_ell: eosc
                    .per_ell
                    .iter()
                    .map(|t| EllJson {
                        ell: t.ell,
                        stabilized: t.stabilized,
                        last_width: t.last_width,
                        width_shrinking: t.width_shrinking,
                    })
                    .collect(),
            },
        };
        Ok(ReportWithRows { report, value_rows })
    })?;
    let osc = &result.report.oscillation;
    println!(
        "oscillation: liminf {:.6} limsup {:.6} ratio {:.6}; max contraction constant {:.4}{}",
        osc.liminf_est,
        osc.limsup_est,
        osc.ratio,
        osc.max_contraction_constant,
        if cached { " [cached]" } else { "" }
    );
    println!(
        "large-s gaps shrinking: {}; z spread across ell: {:.3e}",
        result.report.large_s.gaps_shrinking, result.report.energy_oscillation.spread_abs
    );
    let rows: Vec<String> = result
        .value_rows
        .iter()
        .map(|(n, v, id)| format!("{n},{v},{id}"))
        .collect();
    emit(
        ctx,
        "report",
        params,
        &result,
        cached,
        ms,
        Some(("N,delta_times_N_pow,block_id", &rows)),
    )
}

// -------------------------------------------------------------------
// example-fib
// -------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct FibResult {
    rows: Vec<FibJson>,
}

#[derive(Serialize, Deserialize)]
struct FibJson {
    n: u32,
    fib: u64,
    delta: String,
    block_start: u64,
    block_end: u64,
    block_ok: bool,
    count_ok: bool,
}

fn cmd_example_fib(ctx: &Ctx, nmax: u32) -> Result<()> {
    let params = serde_json::json!({ "nmax": nmax });
    let (result, cached, ms) = run_cached(ctx, "example-fib", &params, || {
        let table = fibonacci_table(nmax)?;
        Ok(FibResult {
            rows: table
                .rows
                .iter()
                .map(|r| FibJson {
                    n: r.n,
                    fib: r.fib,
                    delta: format_rational(&r.delta),
                    block_start: r.block_start,
                    block_end: r.block_end,
                    block_ok: r.block_ok,
                    count_ok: r.count_ok,
                })
                .collect(),
        })
    })?;
    println!(
        "n   F_n    delta      block            ok{}",
        if cached { "  [cached]" } else { "" }
    );
    for r in &result.rows {
        println!(
            "{:<3} {:<6} {:<10} ({:>5}, {:>5}]  {}",
            r.n,
            r.fib,
            r.delta,
            r.block_start - 1,
            r.block_end,
            r.block_ok && r.count_ok
        );
    }
    let rows: Vec<String> = result
        .rows
        .iter()
        .map(|r| format!("{},{},{},{}", r.n, r.fib, r.delta, r.block_ok && r.count_ok))
        .collect();
    emit(
        ctx,
        "example-fib",
        params,
        &result,
        cached,
        ms,
        Some(("n,F_n,delta,block_ok", &rows)),
    )
}
