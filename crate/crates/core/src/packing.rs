//! Best-packing distances delta(A, N) and the counting function
//! N(t) = max{N : delta(A, N) >= t} on 1D systems, with certified bounds.
//!
//! Lower bounds come from a left-to-right greedy sweep: starting at min A,
//! repeatedly take the least point of A at distance >= t from the previous
//! one. For subsets of the line the greedy maximal t-separated set is
//! maximum, so the sweep computes N(t) exactly whenever every step resolves
//! to an exact point. Upper bounds come from an occupancy dynamic program
//! over the depth-1 cylinder decomposition. When the two meet the value is
//! certified with zero tolerance.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::energy::{prefractal_lattice, PointConfig};
use crate::error::{Error, Result};
use crate::ifs::{FractalSystem, RatioStructure, Word};
use crate::rational::{pow_i, rational_from_f64, Rational};

/// depth_max defaults per the arithmetic mode.
const DEFAULT_DEPTH_EXACT: usize = 64;
const DEFAULT_DEPTH_FLOAT: usize = 40;
const DEFAULT_MAX_POINTS: u64 = 2_000_000;

/// Sweep budget knobs.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub depth_max: usize,
    pub max_points: u64,
}

impl SweepOptions {
    pub fn for_system(sys: &FractalSystem) -> SweepOptions {
        SweepOptions {
            depth_max: if sys.exact_mode() {
                DEFAULT_DEPTH_EXACT
            } else {
                DEFAULT_DEPTH_FLOAT
            },
            max_points: DEFAULT_MAX_POINTS,
        }
    }

    pub fn with_depth(mut self, depth_max: usize) -> SweepOptions {
        self.depth_max = depth_max;
        self
    }
}

/// A point of A known to lie in [lo, hi], tagged with the word whose
/// cylinder contains it. lo == hi means the point is known exactly.
#[derive(Debug, Clone)]
pub struct CertifiedPoint {
    pub lo: Rational,
    pub hi: Rational,
    pub witness_word: Word,
}

impl CertifiedPoint {
    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn value(&self) -> Option<&Rational> {
        if self.is_exact() {
            Some(&self.lo)
        } else {
            None
        }
    }
}

/// The smallest point of A that is >= a, as a certified interval; None when
/// no point of A is >= a. Exact (lo == hi) whenever the descent reaches a
/// cylinder whose left endpoint is >= a before depth_max, since for
/// orientation-preserving 1D maps min psi_w(A) = psi_w(min A).
pub fn least_point_at_least(
    sys: &FractalSystem,
    a: &Rational,
    depth_max: usize,
) -> Result<Option<CertifiedPoint>> {
    if depth_max == 0 {
        return Err(Error::InvalidInput("depth_max must be >= 1".into()));
    }
    let e = sys.exact_1d()?;
    let map_count = e.maps.len();
    let (h_lo, h_hi) = e.hull.clone();
    if *a <= h_lo {
        return Ok(Some(CertifiedPoint {
            lo: h_lo.clone(),
            hi: h_lo,
            witness_word: Word::empty(),
        }));
    }
    if *a > h_hi {
        return Ok(None);
    }

    // Affine of the composed word: x -> scale * x + off, absolute coords.
    let mut scale = Rational::one();
    let mut off = Rational::zero();
    let mut letters: Vec<usize> = Vec::new();
    let mut cur_hi = h_hi;

    loop {
        if *a == cur_hi {
            // Right endpoint of the current cylinder lies in A.
            return Ok(Some(CertifiedPoint {
                lo: a.clone(),
                hi: a.clone(),
                witness_word: Word::new(letters, map_count)?,
            }));
        }
        if letters.len() >= depth_max {
            // Interval answer, never silently wrong: the target lies in
            // [a, cur_hi] and cur_hi is a point of A.
            return Ok(Some(CertifiedPoint {
                lo: a.clone(),
                hi: cur_hi,
                witness_word: Word::new(letters, map_count)?,
            }));
        }
        let mut advanced = false;
        for &k in &e.order {
            let (r, z) = &e.maps[k];
            let child_scale = &scale * r;
            let child_off = &scale * z + &off;
            let child_hi = &child_scale * &e.hull.1 + &child_off;
            if *a > child_hi {
                continue;
            }
            let child_lo = &child_scale * &e.hull.0 + &child_off;
            if *a <= child_lo {
                letters.push(k + 1);
                return Ok(Some(CertifiedPoint {
                    lo: child_lo.clone(),
                    hi: child_lo,
                    witness_word: Word::new(letters, map_count)?,
                }));
            }
            letters.push(k + 1);
            scale = child_scale;
            off = child_off;
            cur_hi = child_hi;
            advanced = true;
            break;
        }
        if !advanced {
            return Err(Error::Internal(
                "descent found no child containing the query".into(),
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SweepMode {
    /// Advance from interval upper ends: undercounts, lower bound.
    Pessimistic,
    /// Advance from interval lower ends: overcounts, upper bound.
    Optimistic,
}

struct SweepOutcome {
    count: u64,
    all_exact: bool,
    points: Vec<Rational>,
}

struct CursorFrame {
    scale: Rational,
    off: Rational,
    hi: Rational,
    /// Position in the left-to-right child order; earlier children are
    /// permanently exhausted because queries only increase.
    next_child: usize,
}

/// Stateful left-to-right descent over the cylinder tree. Queries must be
/// nondecreasing; the stack resumes where the previous query stopped, so a
/// whole sweep costs amortized O(1) tree steps per extracted point.
struct SweepCursor<'a> {
    e: &'a crate::ifs::Exact1d,
    stack: Vec<CursorFrame>,
    depth_max: usize,
}

enum CursorAnswer {
    Exact(Rational),
    Interval(Rational, Rational),
    Exhausted,
}

impl<'a> SweepCursor<'a> {
    fn new(e: &'a crate::ifs::Exact1d, depth_max: usize) -> SweepCursor<'a> {
        let root = CursorFrame {
            scale: Rational::one(),
            off: Rational::zero(),
            hi: e.hull.1.clone(),
            next_child: 0,
        };
        SweepCursor {
            e,
            stack: vec![root],
            depth_max,
        }
    }

    fn least_geq(&mut self, a: &Rational) -> CursorAnswer {
        // Unwind cylinders that lie entirely below the query.
        while let Some(top) = self.stack.last() {
            if *a > top.hi {
                self.stack.pop();
            } else {
                break;
            }
        }
        if self.stack.is_empty() {
            return CursorAnswer::Exhausted;
        }
        loop {
            let depth = self.stack.len() - 1;
            let top = self.stack.last().unwrap();
            if *a == top.hi {
                return CursorAnswer::Exact(a.clone());
            }
            if depth >= self.depth_max {
                return CursorAnswer::Interval(a.clone(), top.hi.clone());
            }
            let mut pushed = false;
            let mut exact: Option<Rational> = None;
            let m = self.e.maps.len();
            let top_idx = self.stack.len() - 1;
            let mut j = self.stack[top_idx].next_child;
            while j < m {
                let k = self.e.order[j];
                let (r, z) = &self.e.maps[k];
                let top = &self.stack[top_idx];
                let child_scale = &top.scale * r;
                let child_off = &top.scale * z + &top.off;
                let child_hi = &child_scale * &self.e.hull.1 + &child_off;
                if *a > child_hi {
                    // Dead for this and every later query.
                    self.stack[top_idx].next_child = j + 1;
                    j += 1;
                    continue;
                }
                let child_lo = &child_scale * &self.e.hull.0 + &child_off;
                self.stack[top_idx].next_child = j + 1;
                let found = if *a <= child_lo {
                    exact = Some(child_lo.clone());
                    true
                } else {
                    false
                };
                self.stack.push(CursorFrame {
                    scale: child_scale,
                    off: child_off,
                    hi: child_hi,
                    next_child: 0,
                });
                pushed = true;
                if found {
                    return CursorAnswer::Exact(exact.unwrap());
                }
                break;
            }
            if !pushed {
                // All children below the query: the parent continues.
                self.stack.pop();
                while let Some(top) = self.stack.last() {
                    if *a > top.hi {
                        self.stack.pop();
                    } else {
                        break;
                    }
                }
                if self.stack.is_empty() {
                    return CursorAnswer::Exhausted;
                }
            }
        }
    }
}

fn sweep(
    sys: &FractalSystem,
    t: &Rational,
    opts: &SweepOptions,
    mode: SweepMode,
    collect_cap: Option<usize>,
) -> Result<SweepOutcome> {
    if !t.is_positive() {
        return Err(Error::InvalidInput("separation threshold must be > 0".into()));
    }
    let e = sys.exact_1d()?;
    let mut cursor = SweepCursor::new(e, opts.depth_max);
    let mut x = e.hull.0.clone();
    let mut count: u64 = 1;
    let mut all_exact = true;
    let mut points = Vec::new();
    if collect_cap.is_some() {
        points.push(x.clone());
    }
    loop {
        if let Some(cap) = collect_cap {
            if points.len() >= cap {
                break;
            }
        }
        let a = &x + t;
        x = match cursor.least_geq(&a) {
            CursorAnswer::Exhausted => break,
            CursorAnswer::Exact(v) => v,
            CursorAnswer::Interval(lo, hi) => {
                all_exact = false;
                match mode {
                    SweepMode::Pessimistic => hi,
                    SweepMode::Optimistic => lo,
                }
            }
        };
        count += 1;
        if count > opts.max_points {
            return Err(Error::Budget(format!(
                "greedy sweep at t = {t} exceeded {} points",
                opts.max_points
            )));
        }
        if collect_cap.is_some() {
            points.push(x.clone());
        }
    }
    Ok(SweepOutcome {
        count,
        all_exact,
        points,
    })
}

/// Certified bounds on the counting function N(t).
#[derive(Debug, Clone, PartialEq)]
pub struct CountBounds {
    pub t: Rational,
    pub lower: u64,
    pub upper: u64,
    pub exact: bool,
}

/// N(t) by greedy sweep. Exact when every sweep step resolved to an exact
/// point; otherwise certified bounds from the pessimistic/optimistic
/// interval endpoints.
pub fn greedy_count(sys: &FractalSystem, t: &Rational, opts: &SweepOptions) -> Result<CountBounds> {
    let pess = sweep(sys, t, opts, SweepMode::Pessimistic, None)?;
    if pess.all_exact {
        return Ok(CountBounds {
            t: t.clone(),
            lower: pess.count,
            upper: pess.count,
            exact: true,
        });
    }
    let opt = sweep(sys, t, opts, SweepMode::Optimistic, None)?;
    Ok(CountBounds {
        t: t.clone(),
        lower: pess.count,
        upper: opt.count,
        exact: false,
    })
}

/// Up to max_n leading points of the greedy t-separated sweep. The flag
/// reports whether every step resolved exactly (only then are the returned
/// values guaranteed points of A).
pub fn greedy_points(
    sys: &FractalSystem,
    t: &Rational,
    opts: &SweepOptions,
    max_n: usize,
) -> Result<(Vec<Rational>, bool)> {
    let out = sweep(sys, t, opts, SweepMode::Pessimistic, Some(max_n))?;
    Ok((out.points, out.all_exact))
}

/// Table of occupancy-DP upper bounds on delta(A, n) for n = 2..=n_max.
///
/// Recurrence: delta_ub(2) = diam A, and for n >= 3
///   delta_ub(n) = max over compositions (n_1..n_M) of n with all n_m < n
///                 of min over m with n_m >= 2 of r_m * delta_ub(n_m),
/// falling back to diam A when no part reaches 2. Soundness: restricting
/// any n-point configuration to the disjoint depth-1 cylinders realizes
/// some composition, and within cylinder m spacings scale by r_m.
#[derive(Debug, Clone)]
pub struct DeltaTable {
    vals: Vec<Option<Rational>>,
    ratios: Vec<Rational>,
    diam: Rational,
}

impl DeltaTable {
    pub fn build(sys: &FractalSystem, n_max: usize) -> Result<DeltaTable> {
        let e = sys.exact_1d()?;
        if n_max < 2 {
            return Err(Error::InvalidInput("table needs n_max >= 2".into()));
        }
        if n_max > 1_000_000 {
            return Err(Error::Budget(format!("DP table size {n_max} over budget")));
        }
        let ratios: Vec<Rational> = e.maps.iter().map(|(r, _)| r.clone()).collect();
        let m = ratios.len();
        if m > 2 {
            let est = (n_max as f64).powi(m as i32 - 1);
            if est > 5e7 {
                return Err(Error::Budget(format!(
                    "composition enumeration ~{est:.0} over budget for {m} maps"
                )));
            }
        }
        let diam = e.diam();
        let mut vals: Vec<Option<Rational>> = Vec::with_capacity(n_max + 1);
        vals.push(None); // n = 0
        vals.push(None); // n = 1: no pair exists, +infinity sentinel
        vals.push(Some(diam.clone()));
        for n in 3..=n_max {
            let v = if m == 2 {
                Self::value_two_maps(&vals, &ratios, n)
            } else {
                Self::value_enumerated(&vals, &ratios, &diam, n)
            };
            vals.push(Some(v));
        }
        Ok(DeltaTable { vals, ratios, diam })
    }

    /// Upper bound for delta(A, n); None encodes +infinity (n <= 1).
    pub fn upper(&self, n: usize) -> Option<&Rational> {
        self.vals.get(n).and_then(|v| v.as_ref())
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Fast path for M = 2. With D nonincreasing, the middle compositions
    /// maximize a min of one nonincreasing and one nondecreasing sequence,
    /// so the optimum sits at the predicate crossover; O(log n) lookups.
    fn value_two_maps(vals: &[Option<Rational>], ratios: &[Rational], n: usize) -> Rational {
        let d = |k: usize| vals[k].as_ref().expect("k >= 2 already filled");
        let (r1, r2) = (&ratios[0], &ratios[1]);
        // Edge compositions with a single part of size 1.
        let mut best = r2 * d(n - 1);
        let other = r1 * d(n - 1);
        if other > best {
            best = other;
        }
        if n >= 4 {
            // Parts both >= 2: n_1 in [2, n-2].
            let pred = |k: usize| r1 * d(k) >= r2 * d(n - k);
            let (mut lo, mut hi) = (2usize, n - 2);
            let mut crossover = None;
            if pred(lo) {
                while lo < hi {
                    let mid = (lo + hi + 1) / 2;
                    if pred(mid) {
                        lo = mid;
                    } else {
                        hi = mid - 1;
                    }
                }
                crossover = Some(lo);
            }
            match crossover {
                None => {
                    let cand = r1 * d(2);
                    if cand > best {
                        best = cand;
                    }
                }
                Some(k) => {
                    let cand = r2 * d(n - k);
                    if cand > best {
                        best = cand;
                    }
                    if k < n - 2 {
                        let cand = r1 * d(k + 1);
                        if cand > best {
                            best = cand;
                        }
                    }
                }
            }
        }
        best
    }

    fn value_enumerated(
        vals: &[Option<Rational>],
        ratios: &[Rational],
        diam: &Rational,
        n: usize,
    ) -> Rational {
        let mut best: Option<Rational> = None;
        let mut parts = vec![0usize; ratios.len()];
        Self::enumerate(vals, ratios, diam, n, 0, &mut parts, &mut |value| {
            if best.as_ref().map_or(true, |b| value > *b) {
                best = Some(value);
            }
        });
        best.expect("at least one composition for n >= 3")
    }

    fn enumerate(
        vals: &[Option<Rational>],
        ratios: &[Rational],
        diam: &Rational,
        remaining: usize,
        idx: usize,
        parts: &mut Vec<usize>,
        on_value: &mut impl FnMut(Rational),
    ) {
        let m = ratios.len();
        if idx == m - 1 {
            let total: usize = parts.iter().sum::<usize>() + remaining;
            if remaining > total - 1 {
                return; // final part must stay < n
            }
            parts[idx] = remaining;
            let mut min_val: Option<Rational> = None;
            for (k, &p) in parts.iter().enumerate() {
                if p >= 2 {
                    let v = &ratios[k] * vals[p].as_ref().expect("p >= 2 filled");
                    if min_val.as_ref().map_or(true, |cur| v < *cur) {
                        min_val = Some(v);
                    }
                }
            }
            on_value(min_val.unwrap_or_else(|| diam.clone()));
            parts[idx] = 0;
            return;
        }
        let total: usize = parts.iter().take(idx).sum::<usize>() + remaining;
        let cap = remaining.min(total - 1);
        for p in 0..=cap {
            parts[idx] = p;
            Self::enumerate(vals, ratios, diam, remaining - p, idx + 1, parts, on_value);
        }
        parts[idx] = 0;
    }

    fn composition_value(&self, parts: &[usize]) -> Rational {
        let mut min_val: Option<Rational> = None;
        for (k, &p) in parts.iter().enumerate() {
            if p >= 2 {
                let v = &self.ratios[k] * self.vals[p].as_ref().expect("filled");
                if min_val.as_ref().map_or(true, |cur| v < *cur) {
                    min_val = Some(v);
                }
            }
        }
        min_val.unwrap_or_else(|| self.diam.clone())
    }

    /// Lexicographically smallest composition achieving the table value.
    pub fn witness_composition(&self, n: usize) -> Result<Vec<usize>> {
        let target = self
            .upper(n)
            .ok_or_else(|| Error::InvalidInput(format!("no finite value at n = {n}")))?
            .clone();
        let m = self.ratios.len();
        let mut parts = vec![0usize; m];
        if self.find_composition(n, 0, &target, &mut parts) {
            Ok(parts)
        } else {
            Err(Error::Internal(format!(
                "no composition reproduces table value at n = {n}"
            )))
        }
    }

    fn find_composition(
        &self,
        remaining: usize,
        idx: usize,
        target: &Rational,
        parts: &mut Vec<usize>,
    ) -> bool {
        let m = self.ratios.len();
        let n: usize = parts.iter().take(idx).sum::<usize>() + remaining;
        if idx == m - 1 {
            if remaining > n - 1 {
                return false;
            }
            parts[idx] = remaining;
            if &self.composition_value(parts) == target {
                return true;
            }
            parts[idx] = 0;
            return false;
        }
        let cap = remaining.min(n - 1);
        for p in 0..=cap {
            parts[idx] = p;
            if self.find_composition(remaining - p, idx + 1, target, parts) {
                return true;
            }
        }
        parts[idx] = 0;
        false
    }

    /// Explicit configuration realizing the witness composition tree:
    /// leaves take cylinder endpoints. All points lie in A; the min
    /// pairwise distance certifies a valid (possibly sub-optimal) lower
    /// bound.
    pub fn witness_config(&self, sys: &FractalSystem, n: usize) -> Result<Vec<Rational>> {
        let e = sys.exact_1d()?;
        let mut out = Vec::with_capacity(n);
        self.build_config(
            sys,
            n,
            &Rational::one(),
            &Rational::zero(),
            &(e.hull.0.clone(), e.hull.1.clone()),
            &mut out,
        )?;
        out.sort();
        Ok(out)
    }

    fn build_config(
        &self,
        sys: &FractalSystem,
        n: usize,
        scale: &Rational,
        off: &Rational,
        hull: &(Rational, Rational),
        out: &mut Vec<Rational>,
    ) -> Result<()> {
        match n {
            0 => Ok(()),
            1 => {
                out.push(scale * &hull.0 + off);
                Ok(())
            }
            2 => {
                out.push(scale * &hull.0 + off);
                out.push(scale * &hull.1 + off);
                Ok(())
            }
            _ => {
                let parts = self.witness_composition(n)?;
                let e = sys.exact_1d()?;
                for (k, &p) in parts.iter().enumerate() {
                    if p == 0 {
                        continue;
                    }
                    let (r, z) = &e.maps[k];
                    let child_scale = scale * r;
                    let child_off = scale * z + off;
                    self.build_config(sys, p, &child_scale, &child_off, hull, out)?;
                }
                Ok(())
            }
        }
    }
}

/// Certified bounds on delta(A, N) with a witness configuration.
#[derive(Debug, Clone)]
pub struct PackingBounds {
    pub n: usize,
    pub lower: Rational,
    pub upper: Rational,
    pub exact: bool,
    /// Configuration in A of cardinality n with min pairwise distance
    /// >= lower. Empty only when the lower bound was certified by a count
    /// argument whose sweep did not resolve all points exactly.
    pub witness: Vec<Rational>,
    pub certificate: String,
}

/// delta(A, N) bounds: DP upper bound, greedy count certificate for the
/// lower bound (delta >= t iff N(t) >= N), candidate-set descent when the
/// two disagree.
pub fn packing_distance_bounds(
    sys: &FractalSystem,
    n: usize,
    opts: &SweepOptions,
) -> Result<PackingBounds> {
    let table = DeltaTable::build(sys, n)?;
    packing_bounds_with_table(sys, &table, n, opts)
}

pub fn packing_bounds_with_table(
    sys: &FractalSystem,
    table: &DeltaTable,
    n: usize,
    opts: &SweepOptions,
) -> Result<PackingBounds> {
    if n < 2 {
        return Err(Error::InvalidInput(
            "delta(A, N) needs N >= 2; delta(A, 1) is +infinity".into(),
        ));
    }
    let t_star = table
        .upper(n)
        .ok_or_else(|| Error::InvalidInput(format!("table too short for n = {n}")))?
        .clone();

    let counts = greedy_count(sys, &t_star, opts)?;
    if counts.lower >= n as u64 {
        let (pts, pts_exact) = greedy_points(sys, &t_star, opts, n)?;
        let witness = if pts_exact && pts.len() >= n {
            pts
        } else {
            Vec::new()
        };
        return Ok(PackingBounds {
            n,
            lower: t_star.clone(),
            upper: t_star,
            exact: true,
            witness,
            certificate: format!("greedy count >= {n} at the DP value; bounds coincide"),
        });
    }

    // DP value not attained by the sweep: descend over realized distances.
    let dp_config = table.witness_config(sys, n)?;
    let mut candidates: BTreeSet<Rational> = BTreeSet::new();
    for pair in dp_config.windows(2) {
        let gap = &pair[1] - &pair[0];
        if gap.is_positive() && gap <= t_star {
            candidates.insert(gap);
        }
    }
    let sorted: Vec<Rational> = candidates.into_iter().collect();
    let mut feasible: Option<Rational> = None;
    let (mut lo, mut hi) = (0usize, sorted.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        let cb = greedy_count(sys, &sorted[mid], opts)?;
        if cb.lower >= n as u64 {
            feasible = Some(sorted[mid].clone());
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }

    let dp_min_gap = dp_config
        .windows(2)
        .map(|p| &p[1] - &p[0])
        .min()
        .unwrap_or_else(|| t_star.clone());

    let (lower, witness, certificate) = match feasible {
        Some(c) if c >= dp_min_gap => {
            let (pts, pts_exact) = greedy_points(sys, &c, opts, n)?;
            let witness = if pts_exact && pts.len() >= n {
                pts
            } else {
                Vec::new()
            };
            (
                c,
                witness,
                "greedy count certificate on the largest feasible realized distance".to_string(),
            )
        }
        _ => (
            dp_min_gap,
            dp_config,
            "DP witness configuration; min consecutive gap".to_string(),
        ),
    };

    let exact = lower == t_star;
    Ok(PackingBounds {
        n,
        lower,
        upper: t_star,
        exact,
        witness,
        certificate,
    })
}

/// Fibonacci numbers F_1 = F_2 = 1 up to F_n_max (index 0 unused).
pub fn fibonacci_numbers(n_max: usize) -> Result<Vec<u64>> {
    if n_max > 90 {
        return Err(Error::Budget("Fibonacci index over u64 range".into()));
    }
    let mut f = vec![0u64; n_max.max(2) + 1];
    f[1] = 1;
    f[2] = 1;
    for i in 3..=n_max.max(2) {
        f[i] = f[i - 1] + f[i - 2];
    }
    Ok(f)
}

#[derive(Debug, Clone)]
pub struct FibRow {
    pub n: u32,
    pub fib: u64,
    pub delta: Rational,
    pub block_start: u64,
    pub block_end: u64,
    /// delta(A, N) == 2^{3-n} certified (lower = upper) on the whole block.
    pub block_ok: bool,
    /// N(2^{3-n}) == F_n exactly.
    pub count_ok: bool,
}

#[derive(Debug, Clone)]
pub struct FibonacciTable {
    pub rows: Vec<FibRow>,
}

/// Certifies delta(A, N) = 2^{3-n} for all N in (F_{n-1}, F_n], n = 3..=n_max,
/// on the two-map 1/4, 1/2 system, in exact arithmetic. Any mismatch is a
/// hard failure.
pub fn fibonacci_table(n_max: u32) -> Result<FibonacciTable> {
    if n_max < 3 {
        return Err(Error::InvalidInput("table starts at n = 3".into()));
    }
    let sys = FractalSystem::fibonacci_cantor();
    let opts = SweepOptions::for_system(&sys);
    let fibs = fibonacci_numbers(n_max as usize)?;
    let table = DeltaTable::build(&sys, fibs[n_max as usize] as usize)?;
    let two = Rational::from_integer(2.into());

    let mut rows = Vec::new();
    for n in 3..=n_max {
        let t_n = pow_i(&two, 3 - n as i64);
        let counts = greedy_count(&sys, &t_n, &opts)?;
        let count_ok = counts.exact && counts.lower == fibs[n as usize];
        let block_start = fibs[n as usize - 1] + 1;
        let block_end = fibs[n as usize];
        // count_ok certifies delta(A, N) >= t_n for N <= F_n; the DP row
        // certifies delta(A, N) <= t_n per N.
        let mut block_ok = count_ok;
        for big_n in block_start..=block_end {
            if table.upper(big_n as usize) != Some(&t_n) {
                block_ok = false;
                break;
            }
        }
        if !block_ok {
            return Err(Error::Internal(format!(
                "packing table mismatch in block n = {n}: expected delta = {t_n}"
            )));
        }
        rows.push(FibRow {
            n,
            fib: fibs[n as usize],
            delta: t_n,
            block_start,
            block_end,
            block_ok,
            count_ok,
        });
    }
    Ok(FibonacciTable { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Violation,
    /// Some greedy bound did not resolve exactly.
    Inconclusive,
    /// n below the threshold J where the recursion is asserted.
    BelowThreshold,
}

#[derive(Debug, Clone)]
pub struct RecursionRow {
    pub n: usize,
    pub count: Option<u64>,
    pub expected: Option<u64>,
    pub status: CheckStatus,
}

#[derive(Debug, Clone)]
pub struct RecursionReport {
    pub base: Rational,
    pub exponents: Vec<u32>,
    /// J = max(L, i_1..i_M) with L = min{k : r^k < sigma}.
    pub j_threshold: usize,
    pub rows: Vec<RecursionRow>,
    pub first_violation: Option<usize>,
}

impl RecursionReport {
    pub fn all_pass(&self) -> bool {
        self.first_violation.is_none()
            && self
                .rows
                .iter()
                .all(|r| !matches!(r.status, CheckStatus::Inconclusive))
    }
}

/// Verifies R_n = sum_m R_{n - i_m} with R_n = N(r^n) computed
/// independently by the greedy sweep, for n in [n_lo, n_hi] above J.
pub fn count_recursion_check(
    sys: &FractalSystem,
    n_lo: usize,
    n_hi: usize,
    opts: &SweepOptions,
) -> Result<RecursionReport> {
    if n_hi < n_lo {
        return Err(Error::InvalidInput("empty range".into()));
    }
    let es = match sys.ratio_structure(1e-10)? {
        RatioStructure::Dependent(es) => es,
        RatioStructure::Independent => {
            return Err(Error::DependenceRequired(
                "count recursion is defined for dependent ratios".into(),
            ))
        }
    };
    let base = match &es.base_exact {
        Some(b) => b.clone(),
        None => rational_from_f64(es.base)?,
    };
    let i_max = *es.exponents.iter().max().unwrap() as usize;

    // L = min{k >= 1 : r^k < sigma}.
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

    let first_needed = n_lo.max(j).saturating_sub(i_max);
    let mut counts: Vec<Option<CountBounds>> = vec![None; n_hi + 1];
    for n in first_needed..=n_hi {
        let t = pow_i(&base, n as i64);
        counts[n] = Some(greedy_count(sys, &t, opts)?);
    }

    let mut rows = Vec::new();
    let mut first_violation = None;
    for n in n_lo..=n_hi {
        if n < j {
            rows.push(RecursionRow {
                n,
                count: None,
                expected: None,
                status: CheckStatus::BelowThreshold,
            });
            continue;
        }
        let here = counts[n].as_ref().expect("computed");
        let mut all_exact = here.exact;
        let mut expected: u64 = 0;
        for &i in &es.exponents {
            let prev = counts[n - i as usize].as_ref().expect("computed");
            all_exact &= prev.exact;
            expected += prev.lower;
        }
        let status = if !all_exact {
            CheckStatus::Inconclusive
        } else if here.lower == expected {
            CheckStatus::Pass
        } else {
            CheckStatus::Violation
        };
        if status == CheckStatus::Violation && first_violation.is_none() {
            first_violation = Some(n);
        }
        rows.push(RecursionRow {
            n,
            count: Some(here.lower),
            expected: Some(expected),
            status,
        });
    }
    Ok(RecursionReport {
        base,
        exponents: es.exponents,
        j_threshold: j,
        rows,
        first_violation,
    })
}

/// Farthest-point traversal over the depth-D prefractal lattice. The min
/// pairwise distance of the result is a valid lower bound for delta(A, N)
/// in any ambient dimension.
pub fn farthest_point_heuristic(
    sys: &FractalSystem,
    n: usize,
    depth: usize,
) -> Result<PointConfig> {
    if n < 2 {
        return Err(Error::InvalidInput("need N >= 2".into()));
    }
    let lattice = prefractal_lattice(sys, depth)?;
    let idx = farthest_point_indices(&lattice.points, n)?;
    let points: Vec<Vec<f64>> = idx.iter().map(|&i| lattice.points[i].clone()).collect();
    PointConfig::from_points(points)
}

/// Maximin greedy selection of n indices; deterministic (ties resolve to
/// the earliest index, and lattices are sorted).
pub(crate) fn farthest_point_indices(points: &[Vec<f64>], n: usize) -> Result<Vec<usize>> {
    if points.len() < n {
        return Err(Error::InvalidInput(format!(
            "lattice has {} points, need {n}",
            points.len()
        )));
    }
    let dim = points[0].len();
    let centroid: Vec<f64> = (0..dim)
        .map(|d| points.iter().map(|p| p[d]).sum::<f64>() / points.len() as f64)
        .collect();
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut start = 0;
    let mut best = -1.0f64;
    for (i, p) in points.iter().enumerate() {
        let d = dist(p, &centroid);
        if d > best {
            best = d;
            start = i;
        }
    }
    let mut selected = vec![start];
    let mut min_dist: Vec<f64> = points.iter().map(|p| dist(p, &points[start])).collect();
    while selected.len() < n {
        let mut next = 0;
        let mut best = -1.0f64;
        for (i, &d) in min_dist.iter().enumerate() {
            if d > best {
                best = d;
                next = i;
            }
        }
        selected.push(next);
        for (i, p) in points.iter().enumerate() {
            let d = dist(p, &points[next]);
            if d < min_dist[i] {
                min_dist[i] = d;
            }
        }
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rational, to_f64};

    fn fib_sys() -> FractalSystem {
        FractalSystem::fibonacci_cantor()
    }

    fn opts(sys: &FractalSystem) -> SweepOptions {
        SweepOptions::for_system(sys)
    }

    #[test]
    fn least_point_examples() {
        let sys = fib_sys();
        // min A itself.
        let cp = least_point_at_least(&sys, &rational(0, 1), 64)
            .unwrap()
            .unwrap();
        assert_eq!(cp.value(), Some(&rational(0, 1)));

        // A has no points in (1/4, 1/2).
        let a = rational(1, 4) + rational(1, 1000);
        let cp = least_point_at_least(&sys, &a, 64).unwrap().unwrap();
        assert_eq!(cp.value(), Some(&rational(1, 2)));

        // Beyond max A.
        assert!(least_point_at_least(&sys, &rational(3, 2), 64)
            .unwrap()
            .is_none());

        // Right endpoint resolves exactly.
        let cp = least_point_at_least(&sys, &rational(1, 1), 64)
            .unwrap()
            .unwrap();
        assert_eq!(cp.value(), Some(&rational(1, 1)));
    }

    #[test]
    fn certified_point_width_invariant() {
        // Query an irrational-ish dyadic deep inside: tiny depth forces an
        // interval answer whose width obeys the cylinder bound.
        let sys = fib_sys();
        let a = rational(1, 3);
        for depth in 1..8 {
            let cp = least_point_at_least(&sys, &a, depth).unwrap().unwrap();
            let width = &cp.hi - &cp.lo;
            let rmax = rational(1, 2);
            let bound = pow_i(&rmax, cp.witness_word.depth() as i64);
            assert!(width <= bound, "width {width} at depth {depth}");
            assert!(cp.lo <= cp.hi);
        }
        // Full depth resolves this query exactly.
        let cp = least_point_at_least(&sys, &a, 64).unwrap().unwrap();
        assert!(cp.is_exact());
    }

    #[test]
    fn greedy_count_examples() {
        let sys = fib_sys();
        let o = opts(&sys);
        let cb = greedy_count(&sys, &rational(1, 1), &o).unwrap();
        assert_eq!((cb.lower, cb.upper, cb.exact), (2, 2, true));

        let cb = greedy_count(&sys, &rational(1, 2), &o).unwrap();
        assert_eq!((cb.lower, cb.upper, cb.exact), (3, 3, true));

        // N(2^{3-n}) follows the Fibonacci numbers.
        let fibs = fibonacci_numbers(10).unwrap();
        for n in 3..=10u32 {
            let t = pow_i(&rational(2, 1), 3 - n as i64);
            let cb = greedy_count(&sys, &t, &o).unwrap();
            assert!(cb.exact);
            assert_eq!(cb.lower, fibs[n as usize], "n = {n}");
        }
    }

    #[test]
    fn delta_table_examples() {
        let sys = fib_sys();
        let table = DeltaTable::build(&sys, 8).unwrap();
        assert_eq!(table.upper(2), Some(&rational(1, 1)));
        assert_eq!(table.upper(3), Some(&rational(1, 2)));
        assert_eq!(table.upper(4), Some(&rational(1, 4)));
        assert_eq!(table.upper(5), Some(&rational(1, 4)));
        assert_eq!(table.upper(6), Some(&rational(1, 8)));
        assert_eq!(table.upper(1), None);
    }

    #[test]
    fn two_map_fast_path_matches_enumeration() {
        for sys in [fib_sys(), FractalSystem::middle_third_cantor()] {
            let e_table = {
                let e = sys.exact_1d().unwrap();
                let ratios: Vec<Rational> = e.maps.iter().map(|(r, _)| r.clone()).collect();
                let diam = e.diam();
                let mut vals: Vec<Option<Rational>> = vec![None, None, Some(diam.clone())];
                for n in 3..=120 {
                    let v = DeltaTable::value_enumerated(&vals, &ratios, &diam, n);
                    vals.push(Some(v));
                }
                vals
            };
            let fast = DeltaTable::build(&sys, 120).unwrap();
            for n in 2..=120 {
                assert_eq!(fast.upper(n), e_table[n].as_ref(), "n = {n}");
            }
        }
    }

    #[test]
    fn packing_bounds_examples() {
        let sys = fib_sys();
        let o = opts(&sys);
        let b = packing_distance_bounds(&sys, 3, &o).unwrap();
        assert!(b.exact);
        assert_eq!(b.lower, rational(1, 2));
        assert_eq!(b.witness.len(), 3);

        let b = packing_distance_bounds(&sys, 5, &o).unwrap();
        assert!(b.exact);
        assert_eq!(b.lower, rational(1, 4));

        let b = packing_distance_bounds(&sys, 6, &o).unwrap();
        assert!(b.exact);
        assert_eq!(b.lower, rational(1, 8));

        assert!(packing_distance_bounds(&sys, 1, &o).is_err());
    }

    #[test]
    fn witness_config_is_valid() {
        let sys = fib_sys();
        let table = DeltaTable::build(&sys, 12).unwrap();
        for n in 2..=12 {
            let cfg = table.witness_config(&sys, n).unwrap();
            assert_eq!(cfg.len(), n);
            for w in cfg.windows(2) {
                assert!(w[0] < w[1], "duplicate witness points at n = {n}");
            }
        }
    }

    #[test]
    fn delta_bounds_monotone_and_dual() {
        let sys = fib_sys();
        let o = opts(&sys);
        let table = DeltaTable::build(&sys, 14).unwrap();
        let mut prev: Option<Rational> = None;
        for n in 2..=14 {
            let b = packing_bounds_with_table(&sys, &table, n, &o).unwrap();
            assert!(b.lower <= b.upper);
            if let Some(p) = prev {
                assert!(b.upper <= p, "delta bounds must be nonincreasing in N");
            }
            // Witness: cardinality n, min gap >= lower, every point in A.
            assert_eq!(b.witness.len(), n);
            for w in b.witness.windows(2) {
                assert!(&w[1] - &w[0] >= b.lower);
            }
            for p in &b.witness {
                let cp = least_point_at_least(&sys, p, 64).unwrap().unwrap();
                assert_eq!(cp.value(), Some(p), "witness point not in A");
            }
            // Duality: the certified lower bound implies the count bound.
            let cb = greedy_count(&sys, &b.lower, &o).unwrap();
            assert!(cb.lower >= n as u64);
            prev = Some(b.upper.clone());
        }
    }

    #[test]
    fn depth_limited_sweep_gives_interval_bounds() {
        // Starving the descent forces interval answers; the count bounds
        // must stay ordered and bracket the fully resolved count.
        let sys = fib_sys();
        let o = opts(&sys);
        let t = rational(1, 64);
        let full = greedy_count(&sys, &t, &o).unwrap();
        assert!(full.exact);
        let starved = greedy_count(&sys, &t, &o.clone().with_depth(3)).unwrap();
        assert!(!starved.exact);
        assert!(starved.lower <= starved.upper);
        assert!(starved.lower <= full.lower && full.lower <= starved.upper);
    }

    #[test]
    fn counts_nonincreasing_in_t() {
        // Larger separation thresholds admit fewer points.
        let sys = FractalSystem::middle_third_cantor();
        let o = opts(&sys);
        let mut prev = u64::MAX;
        for k in (1..=8).rev() {
            let t = pow_i(&rational(1, 3), k);
            let cb = greedy_count(&sys, &t, &o).unwrap();
            assert!(cb.lower <= prev, "t = (1/3)^{k}");
            prev = cb.lower;
        }
    }

    #[test]
    fn greedy_matches_brute_force_on_small_lattices() {
        // Exhaustive maximin over the sorted depth-4 lattice; its optimum
        // equals the certified delta for small N on this system (the
        // lattice contains optimal configurations). All values are dyadic,
        // hence exact in f64.
        fn best_maximin(pts: &[f64], n: usize) -> f64 {
            fn rec(pts: &[f64], n: usize, start: usize, last: Option<f64>, gap: f64) -> f64 {
                if n == 0 {
                    return gap;
                }
                let mut best = 0.0f64;
                for i in start..=pts.len() - n {
                    let g = match last {
                        Some(prev) => gap.min(pts[i] - prev),
                        None => gap,
                    };
                    if g > best {
                        let sub = rec(pts, n - 1, i + 1, Some(pts[i]), g);
                        if sub > best {
                            best = sub;
                        }
                    }
                }
                best
            }
            rec(pts, n, 0, None, f64::INFINITY)
        }

        let sys = fib_sys();
        let o = opts(&sys);
        let lattice = prefractal_lattice(&sys, 4).unwrap();
        let pts: Vec<f64> = lattice.points.iter().map(|p| p[0]).collect();
        for n in 2..=6usize {
            let best = best_maximin(&pts, n);
            let b = packing_distance_bounds(&sys, n, &o).unwrap();
            assert!(b.exact);
            assert_eq!(to_f64(&b.lower), best, "n = {n}");
        }
    }

    #[test]
    fn sweep_scales_inside_cylinders() {
        // Conjugating by psi_w turns A into the cylinder set psi_w(A);
        // greedy counts at scaled thresholds agree.
        let sys = fib_sys();
        let o = opts(&sys);
        let e = sys.exact_1d().unwrap();
        for letters in [vec![1], vec![2], vec![2, 1], vec![1, 2, 2]] {
            let w = Word::new(letters, 2).unwrap();
            let mut scale = Rational::one();
            let mut off = Rational::zero();
            for &l in w.letters().iter().rev() {
                let (r, z) = &e.maps[l - 1];
                off = &scale * z + &off;
                scale = &scale * r;
            }
            let conj: Vec<(Rational, Rational)> = e
                .maps
                .iter()
                .map(|(r, z)| {
                    let t = &scale * z + &off * &(Rational::one() - r);
                    (r.clone(), t)
                })
                .collect();
            let scaled = FractalSystem::from_exact_1d(conj, true).unwrap();
            for t in [rational(1, 2), rational(1, 4), rational(3, 16)] {
                let base_count = greedy_count(&sys, &t, &o).unwrap();
                let scaled_t = &scale * &t;
                let scaled_count = greedy_count(&scaled, &scaled_t, &o).unwrap();
                assert_eq!(base_count.lower, scaled_count.lower);
                assert!(base_count.exact && scaled_count.exact);
            }
        }
    }

    #[test]
    fn fibonacci_table_small() {
        let t = fibonacci_table(8).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.rows[0].fib, 2);
        assert_eq!(t.rows[0].delta, rational(1, 1));
        assert_eq!(t.rows[1].fib, 3);
        assert_eq!(t.rows[1].delta, rational(1, 2));
        let last = &t.rows[5];
        assert_eq!(last.fib, 21);
        assert_eq!(last.delta, rational(1, 32));
        assert!(t.rows.iter().all(|r| r.block_ok && r.count_ok));
    }

    #[test]
    fn recursion_check_examples() {
        let sys = fib_sys();
        let o = opts(&sys);
        let rep = count_recursion_check(&sys, 1, 10, &o).unwrap();
        assert_eq!(rep.j_threshold, 3);
        assert!(rep.first_violation.is_none());
        // Below-threshold rows are excluded from the assertion.
        assert!(rep
            .rows
            .iter()
            .filter(|r| r.n < 3)
            .all(|r| r.status == CheckStatus::BelowThreshold));
        assert!(rep
            .rows
            .iter()
            .filter(|r| r.n >= 3)
            .all(|r| r.status == CheckStatus::Pass));

        let cantor = FractalSystem::middle_third_cantor();
        let rep = count_recursion_check(&cantor, 2, 8, &opts(&cantor)).unwrap();
        assert!(rep.all_pass());
        // R_n = 2 R_{n-1}: with i = (1,1) the expected sum doubles.
        for row in rep.rows.iter().filter(|r| r.status == CheckStatus::Pass) {
            assert_eq!(row.count.unwrap(), 1 << (row.n + 1), "R_n = 2^(n+1)");
        }

        let indep = FractalSystem::from_float_1d(&[(0.5, 0.0), (1.0 / 3.0, 2.0 / 3.0)]).unwrap();
        assert!(matches!(
            count_recursion_check(&indep, 1, 5, &opts(&indep)),
            Err(Error::DependenceRequired(_))
        ));
    }

    #[test]
    fn farthest_point_examples() {
        let sys = fib_sys();
        let c = farthest_point_heuristic(&sys, 2, 0).unwrap();
        assert_eq!(c.min_dist, 1.0);

        let c = farthest_point_heuristic(&sys, 3, 1).unwrap();
        assert_eq!(c.min_dist, 0.5);

        let c = farthest_point_heuristic(&sys, 4, 2).unwrap();
        assert_eq!(c.min_dist, 0.25);

        // Lattice smaller than N.
        assert!(farthest_point_heuristic(&sys, 5, 0).is_err());
    }
}
