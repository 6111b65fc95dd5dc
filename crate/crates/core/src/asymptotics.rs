//! Oscillation quantification for the normalized sequences
//! delta(A, N) N^{1/d} and E_hat(N) / N^{1+s/d}, block structure of the
//! packing table for dependent ratios, and the large-s comparison between
//! the energy and packing sides.

use crate::energy::{prefractal_lattice, ZSequence};
use crate::error::{Error, Result};
use crate::ifs::{FractalSystem, RatioStructure};
use crate::packing::{greedy_count, DeltaTable, SweepOptions};
use crate::rational::{pow_i, rational_from_f64, to_f64, Rational};

/// One block (R_{n-1}, R_n] on which delta is (certifiably) constant,
/// with the extrema of delta(A, N) N^{1/d} over the block.
#[derive(Debug, Clone)]
pub struct Block {
    /// Threshold index: the block where delta is pinned near r^id.
    pub id: usize,
    /// First configuration size of the block, R_{id-1} + 1.
    pub n_start: u64,
    /// Last configuration size of the block, R_id.
    pub n_end: u64,
    pub delta_lo: Rational,
    pub delta_hi: Rational,
    pub exact: bool,
    pub value_min: f64,
    pub value_max: f64,
    pub conclusive: bool,
}

/// Certified bracket for the contraction constant at one index:
/// c = delta(A, R_n + 1) / r^n.
#[derive(Debug, Clone)]
pub struct ContractionConstant {
    pub n: usize,
    pub c_lower: f64,
    pub c_upper: f64,
}

#[derive(Debug, Clone)]
pub struct OscillationReport {
    pub quantity: String,
    pub base: f64,
    pub exponents: Vec<u32>,
    pub dimension: f64,
    pub j_threshold: usize,
    /// R_n = N(r^n) for n = 0..=n_max.
    pub counts: Vec<u64>,
    pub blocks: Vec<Block>,
    /// Tail-window (last 3 conclusive blocks) min of the block minima.
    pub liminf_est: f64,
    /// Tail-window max of the block maxima.
    pub limsup_est: f64,
    pub ratio: f64,
    pub contraction_constants: Vec<ContractionConstant>,
    pub max_contraction_constant: f64,
    pub warning: Option<String>,
}

/// Block decomposition of delta(A, N) N^{1/d} for a 1D system with
/// dependent ratios: counts R_n by exact greedy sweeps, per-block delta
/// brackets from the count certificate (lower) and the occupancy DP
/// (upper), tail-window liminf/limsup estimates, and the empirical
/// contraction constants c_n = delta(A, R_n + 1) / r^n.
pub fn packing_oscillation(
    sys: &FractalSystem,
    n_max: usize,
    opts: &SweepOptions,
) -> Result<OscillationReport> {
    let es = match sys.ratio_structure(1e-10)? {
        RatioStructure::Dependent(es) => es,
        RatioStructure::Independent => {
            return Err(Error::DependenceRequired(
                "oscillation blocks need dependent ratios".into(),
            ))
        }
    };
    let base = match &es.base_exact {
        Some(b) => b.clone(),
        None => rational_from_f64(es.base)?,
    };
    let d = sys.dimension();
    let i_max = *es.exponents.iter().max().unwrap() as usize;

    let sigma = sys.sigma_exact()?.clone();
    let mut l = 1usize;
    let mut p = base.clone();
    while p >= sigma {
        l += 1;
        p *= &base;
        if l > 10_000 {
            return Err(Error::Internal("separation threshold search diverged".into()));
        }
    }
    let j = l.max(i_max);

    let mut counts = Vec::with_capacity(n_max + 1);
    let mut counts_exact = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let cb = greedy_count(sys, &pow_i(&base, n as i64), opts)?;
        counts.push(cb.lower);
        counts_exact.push(cb.exact);
    }

    let mut warning = None;
    let table_to = (*counts.last().unwrap() as usize) + 1;
    let table = DeltaTable::build(sys, table_to.max(2))?;

    let pow_1_over_d = |n: u64| (n as f64).powf(1.0 / d);
    let mut blocks = Vec::new();
    for n in 1..=n_max {
        let n_start = counts[n - 1] + 1;
        let n_end = counts[n];
        if n_start > n_end {
            continue;
        }
        let delta_lo = pow_i(&base, n as i64);
        let delta_hi = table
            .upper(n_start as usize)
            .ok_or_else(|| Error::Internal("table too short".into()))?
            .clone();
        let conclusive = counts_exact[n] && counts_exact[n - 1];
        let exact = conclusive && delta_lo == delta_hi;
        blocks.push(Block {
            id: n,
            n_start,
            n_end,
            value_min: to_f64(&delta_lo) * pow_1_over_d(n_start),
            value_max: to_f64(&delta_hi) * pow_1_over_d(n_end),
            delta_lo,
            delta_hi,
            exact,
            conclusive,
        });
    }
    if blocks.is_empty() {
        warning = Some("n_max too small to contain one full block".into());
    }

    let conclusive_blocks: Vec<&Block> = blocks.iter().filter(|b| b.conclusive).collect();
    let window = conclusive_blocks.len().min(3);
    let (liminf_est, limsup_est, ratio) = if window == 0 {
        warning.get_or_insert_with(|| "no conclusive blocks".into());
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let tail = &conclusive_blocks[conclusive_blocks.len() - window..];
        let lo = tail.iter().map(|b| b.value_min).fold(f64::MAX, f64::min);
        let hi = tail.iter().map(|b| b.value_max).fold(f64::MIN, f64::max);
        (lo, hi, hi / lo)
    };

    // c_n brackets: delta(A, R_n + 1) >= r^{n+1} because
    // N(r^{n+1}) = R_{n+1} >= R_n + 1, and <= the DP value at R_n + 1.
    let mut contraction_constants = Vec::new();
    let mut max_c: f64 = f64::NAN;
    if n_max >= 1 {
        for n in j..n_max {
            let r_n1 = counts[n] as usize + 1;
            let Some(hi) = table.upper(r_n1) else {
                continue;
            };
            let rn = pow_i(&base, n as i64);
            let c_upper = to_f64(&(hi / &rn));
            let c_lower = if counts[n + 1] > counts[n] {
                to_f64(&base)
            } else {
                0.0
            };
            if max_c.is_nan() || c_upper > max_c {
                max_c = c_upper;
            }
            contraction_constants.push(ContractionConstant {
                n,
                c_lower,
                c_upper,
            });
        }
    }

    Ok(OscillationReport {
        quantity: "delta_times_N_pow_1_over_d".into(),
        base: to_f64(&base),
        exponents: es.exponents,
        dimension: d,
        j_threshold: j,
        counts,
        blocks,
        liminf_est,
        limsup_est,
        ratio,
        contraction_constants,
        max_contraction_constant: max_c,
        warning,
    })
}

#[derive(Debug, Clone)]
pub struct EllTail {
    pub ell: u64,
    /// Mean of z over the last window (the per-subsequence limit
    /// estimate; upper-bound-based).
    pub stabilized: f64,
    /// max - min of z over each sliding window of length 3.
    pub widths: Vec<f64>,
    pub last_width: f64,
    pub width_shrinking: bool,
}

#[derive(Debug, Clone)]
pub struct EnergyOscillationReport {
    pub s: f64,
    pub per_ell: Vec<EllTail>,
    /// Spread of the stabilized values across ell: the energy analogue of
    /// limit non-existence when it does not collapse.
    pub spread_abs: f64,
    pub spread_rel: f64,
    /// All energy-side quantities come from upper bounds only.
    pub upper_bound_based: bool,
}

/// Tail diagnostics of z-sequences across several ell: per-ell
/// stabilization and the cross-ell spread of the stabilized values.
pub fn energy_oscillation(zseqs: &[ZSequence]) -> Result<EnergyOscillationReport> {
    if zseqs.is_empty() {
        return Err(Error::InvalidInput("need at least one z-sequence".into()));
    }
    let s = zseqs[0].s;
    let d = zseqs[0].dimension;
    if !(s > d) {
        return Err(Error::InvalidInput(format!(
            "energy oscillation needs s > dimension ({s} <= {d})"
        )));
    }
    for zs in zseqs {
        if zs.s != s {
            return Err(Error::InvalidInput("mixed Riesz exponents".into()));
        }
        if zs.entries.len() < 3 {
            return Err(Error::InvalidInput(
                "z-sequences need at least 3 entries".into(),
            ));
        }
    }
    let mut per_ell = Vec::with_capacity(zseqs.len());
    for zs in zseqs {
        let z: Vec<f64> = zs.entries.iter().map(|e| e.z).collect();
        let mut widths = Vec::new();
        for w in z.windows(3) {
            let hi = w.iter().fold(f64::MIN, |m, &v| m.max(v));
            let lo = w.iter().fold(f64::MAX, |m, &v| m.min(v));
            widths.push(hi - lo);
        }
        let last_width = *widths.last().unwrap();
        let width_shrinking = last_width <= widths[0] + 1e-15;
        let tail = &z[z.len() - 3..];
        per_ell.push(EllTail {
            ell: zs.ell,
            stabilized: tail.iter().sum::<f64>() / 3.0,
            widths,
            last_width,
            width_shrinking,
        });
    }
    let hi = per_ell
        .iter()
        .map(|t| t.stabilized)
        .fold(f64::MIN, f64::max);
    let lo = per_ell
        .iter()
        .map(|t| t.stabilized)
        .fold(f64::MAX, f64::min);
    let level = per_ell.iter().map(|t| t.stabilized.abs()).sum::<f64>() / per_ell.len() as f64;
    Ok(EnergyOscillationReport {
        s,
        per_ell,
        spread_abs: hi - lo,
        spread_rel: if level > 0.0 { (hi - lo) / level } else { f64::NAN },
        upper_bound_based: true,
    })
}

#[derive(Debug, Clone)]
pub struct LargeSRow {
    pub s: f64,
    /// sup_N E_hat(N) / N^{1+s/d} over 2 <= N <= n_max.
    pub sup_normalized_energy: f64,
    /// The sup raised to 1/s: the energy-side estimate.
    pub energy_side: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct LargeSDiagnostic {
    /// 1 / inf_N delta(A, N) N^{1/d}, from the certified delta table.
    pub packing_side: f64,
    pub delta_exact: bool,
    pub rows: Vec<LargeSRow>,
    /// Gap sequence nonincrementing along the given s list.
    pub gaps_shrinking: bool,
    /// Too few sizes for the trend to mean much.
    pub low_confidence: bool,
}

/// Compares (sup_N E_hat(N)/N^{1+s/d})^{1/s} against
/// 1 / (inf_N delta(A,N) N^{1/d}) for each s: as s grows the two sides of
/// the packing limit comparison close in; the diagnostic reports the gap
/// trend (finite-N truncation keeps it a trend check, not an equality).
pub fn large_s_diagnostic(
    sys: &FractalSystem,
    s_list: &[f64],
    n_max: usize,
    depth: usize,
    restarts: usize,
    seed: u64,
) -> Result<LargeSDiagnostic> {
    if s_list.is_empty() {
        return Err(Error::InvalidInput("empty s list".into()));
    }
    if n_max < 2 {
        return Err(Error::InvalidInput("need n_max >= 2".into()));
    }
    let d = sys.dimension();
    let opts = SweepOptions::for_system(sys);
    let table = DeltaTable::build(sys, n_max)?;

    let mut packing_min = f64::MAX;
    let mut delta_exact = true;
    for n in 2..=n_max {
        let b = crate::packing::packing_bounds_with_table(sys, &table, n, &opts)?;
        delta_exact &= b.exact;
        let v = to_f64(&b.lower) * (n as f64).powf(1.0 / d);
        packing_min = packing_min.min(v);
    }
    let packing_side = 1.0 / packing_min;

    // One optimization per (N, s): sharing a configuration across
    // exponents would bias the comparison.
    let lattice = prefractal_lattice(sys, depth)?;
    let mut energies: Vec<Vec<f64>> = Vec::with_capacity(n_max - 1);
    for n in 2..=n_max {
        let mut per_s = Vec::with_capacity(s_list.len());
        for (i, &s) in s_list.iter().enumerate() {
            let (e, _, _) = crate::energy::estimate_energy(
                &lattice,
                n,
                s,
                restarts,
                seed.wrapping_add((n * 1000 + i) as u64),
            )?;
            per_s.push(e);
        }
        energies.push(per_s);
    }

    let mut rows = Vec::with_capacity(s_list.len());
    for (row_idx, &s) in s_list.iter().enumerate() {
        if !(s > d) {
            return Err(Error::InvalidInput(format!(
                "large-s diagnostic needs s > dimension ({s} <= {d})"
            )));
        }
        let mut sup = f64::MIN;
        for (k, n) in (2..=n_max).enumerate() {
            let v = energies[k][row_idx] / (n as f64).powf(1.0 + s / d);
            sup = sup.max(v);
        }
        let energy_side = sup.powf(1.0 / s);
        rows.push(LargeSRow {
            s,
            sup_normalized_energy: sup,
            energy_side,
            gap: (energy_side - packing_side).abs(),
        });
    }
    let gaps_shrinking = rows.windows(2).all(|w| w[1].gap <= w[0].gap + 1e-12);

    Ok(LargeSDiagnostic {
        packing_side,
        delta_exact,
        rows,
        gaps_shrinking,
        low_confidence: n_max <= 3,
    })
}

impl OscillationReport {
    /// delta * N^{1/d} for every N covered by conclusive blocks, as
    /// (N, value, block id) rows; plot-ready.
    pub fn value_rows(&self) -> Vec<(u64, f64, usize)> {
        let mut rows = Vec::new();
        for b in self.blocks.iter().filter(|b| b.conclusive) {
            let v = to_f64(&b.delta_lo);
            for n in b.n_start..=b.n_end {
                let x = (n as f64).powf(1.0 / self.dimension);
                rows.push((n, v * x, b.id));
            }
        }
        rows
    }
}
