//! Similitudes, self-similar fractal systems, Moran-equation dimension,
//! contraction-ratio structure detection, and cylinder/word geometry.
//!
//! A system is a finite family of contracting similitudes whose images of
//! the attractor are pairwise metrically separated. For 1D systems with
//! orientation-preserving maps an exact rational view is kept alongside the
//! float view; all packing computations run on it.

use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rational::{pow_i, rational_from_f64, rational_nth_root, to_f64, Rational};

const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Orthogonal part of a similitude.
#[derive(Debug, Clone, PartialEq)]
pub enum Rotation {
    Identity,
    /// Row-major p x p orthogonal matrix.
    Matrix(Vec<Vec<f64>>),
}

impl Rotation {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Rotation::Identity => x.to_vec(),
            Rotation::Matrix(rows) => rows
                .iter()
                .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
                .collect(),
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            Rotation::Identity => {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            }
            Rotation::Matrix(rows) => rows[i][j],
        }
    }

    fn check_orthogonal(&self, dim: usize) -> Result<()> {
        let rows = match self {
            Rotation::Identity => return Ok(()),
            Rotation::Matrix(rows) => rows,
        };
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Geometry(format!(
                "rotation matrix must be {dim}x{dim}"
            )));
        }
        for i in 0..dim {
            for j in 0..dim {
                // column dot products: (R^T R)_{ij}
                let dot: f64 = (0..dim).map(|k| rows[k][i] * rows[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > ORTHOGONALITY_TOL {
                    return Err(Error::Geometry(format!(
                        "rotation not orthogonal: (R^T R)[{i}][{j}] = {dot}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Contracting similitude x -> r O(x) + z.
#[derive(Debug, Clone)]
pub struct Similitude {
    ratio: f64,
    rotation: Rotation,
    translation: Vec<f64>,
}

impl Similitude {
    pub fn new(ratio: f64, rotation: Rotation, translation: Vec<f64>) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidInput(format!(
                "contraction ratio must lie in (0,1), got {ratio}"
            )));
        }
        if translation.is_empty() {
            return Err(Error::InvalidInput("empty translation vector".into()));
        }
        rotation.check_orthogonal(translation.len())?;
        Ok(Similitude {
            ratio,
            rotation,
            translation,
        })
    }

    pub fn new_1d(ratio: f64, translation: f64) -> Result<Self> {
        Self::new(ratio, Rotation::Identity, vec![translation])
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let rx = self.rotation.apply(x);
        rx.iter()
            .zip(&self.translation)
            .map(|(v, z)| self.ratio * v + z)
            .collect()
    }

    /// Unique fixed point, solving (I - r O) x = z.
    pub fn fixed_point(&self) -> Vec<f64> {
        let p = self.dim();
        // Build the augmented system; I - rO is nonsingular because r < 1.
        let mut a = vec![vec![0.0; p + 1]; p];
        for i in 0..p {
            for j in 0..p {
                a[i][j] = (if i == j { 1.0 } else { 0.0 }) - self.ratio * self.rotation.entry(i, j);
            }
            a[i][p] = self.translation[i];
        }
        gauss_solve(&mut a)
    }
}

/// Gaussian elimination with partial pivoting on an augmented p x (p+1) system.
fn gauss_solve(a: &mut [Vec<f64>]) -> Vec<f64> {
    let p = a.len();
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let d = a[col][col];
        for row in 0..p {
            if row != col && a[row][col] != 0.0 {
                let factor = a[row][col] / d;
                for k in col..=p {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

/// Finite branch-index sequence addressing the cylinder
/// psi_{w1} o ... o psi_{wn} (A). Letters are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<usize>,
}

impl Word {
    pub fn new(letters: Vec<usize>, map_count: usize) -> Result<Word> {
        for &l in &letters {
            if l == 0 || l > map_count {
                return Err(Error::InvalidInput(format!(
                    "letter {l} outside 1..={map_count}"
                )));
            }
        }
        Ok(Word { letters })
    }

    pub fn empty() -> Word {
        Word { letters: Vec::new() }
    }

    pub fn depth(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    /// Extension by one letter (appended innermost).
    pub fn child(&self, letter: usize) -> Word {
        let mut letters = self.letters.clone();
        letters.push(letter);
        Word { letters }
    }
}

/// Exact rational view of a 1D orientation-preserving system.
#[derive(Debug, Clone)]
pub(crate) struct Exact1d {
    /// (ratio, translation) per map.
    pub maps: Vec<(Rational, Rational)>,
    /// Tight hull [min A, max A]; both endpoints lie in A.
    pub hull: (Rational, Rational),
    /// Minimum gap between depth-1 cylinder hulls.
    pub sigma: Rational,
    /// Map indices sorted by left endpoint of the depth-1 cylinder hull.
    pub order: Vec<usize>,
}

impl Exact1d {
    pub fn apply(&self, m: usize, x: &Rational) -> Rational {
        let (r, z) = &self.maps[m];
        r * x + z
    }

    /// Image of the hull under map m of the interval [lo, hi].
    pub fn apply_interval(&self, m: usize, lo: &Rational, hi: &Rational) -> (Rational, Rational) {
        (self.apply(m, lo), self.apply(m, hi))
    }

    pub fn diam(&self) -> Rational {
        &self.hull.1 - &self.hull.0
    }
}

#[derive(Debug, Clone)]
enum HullRepr {
    Interval(f64, f64),
    Ball(Vec<f64>, f64),
}

/// A self-similar system of M >= 2 similitudes with metrically separated
/// depth-1 cylinders. Immutable after construction; all operations are pure.
#[derive(Debug, Clone)]
pub struct FractalSystem {
    maps: Vec<Similitude>,
    ambient_dim: usize,
    dimension: f64,
    sigma: f64,
    hull: HullRepr,
    exact: Option<Exact1d>,
    declared_exact: bool,
}

impl FractalSystem {
    /// 1D system from exact rational (ratio, translation) pairs,
    /// orientation-preserving. `declared_exact` marks user-declared exact
    /// mode; the rational view is kept either way.
    pub fn from_exact_1d(
        maps: Vec<(Rational, Rational)>,
        declared_exact: bool,
    ) -> Result<FractalSystem> {
        if maps.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 maps, got {}",
                maps.len()
            )));
        }
        let one = Rational::from_integer(1.into());
        for (r, _) in &maps {
            if !(r.is_positive() && r < &one) {
                return Err(Error::InvalidInput(format!(
                    "contraction ratio must lie in (0,1), got {r}"
                )));
            }
        }
        // Tight hull endpoints: min/max over the map fixed points z/(1-r).
        let fixed: Vec<Rational> = maps.iter().map(|(r, z)| z / (&one - r)).collect();
        let lo = fixed.iter().min().unwrap().clone();
        let hi = fixed.iter().max().unwrap().clone();

        let mut children: Vec<(usize, (Rational, Rational))> = maps
            .iter()
            .enumerate()
            .map(|(m, (r, z))| (m, (r * &lo + z, r * &hi + z)))
            .collect();
        children.sort_by(|a, b| a.1 .0.cmp(&b.1 .0));
        let mut sigma: Option<Rational> = None;
        for pair in children.windows(2) {
            let gap = &pair[1].1 .0 - &pair[0].1 .1;
            if !gap.is_positive() {
                return Err(Error::Geometry(format!(
                    "depth-1 cylinder hulls [{}, {}] and [{}, {}] are not separated",
                    pair[0].1 .0, pair[0].1 .1, pair[1].1 .0, pair[1].1 .1
                )));
            }
            if sigma.as_ref().map_or(true, |s| &gap < s) {
                sigma = Some(gap);
            }
        }
        let exact = Exact1d {
            order: children.iter().map(|(m, _)| *m).collect(),
            sigma: sigma.ok_or_else(|| Error::Internal("no gap computed".into()))?,
            hull: (lo, hi),
            maps,
        };

        let float_maps: Vec<Similitude> = exact
            .maps
            .iter()
            .map(|(r, z)| Similitude::new_1d(to_f64(r), to_f64(z)))
            .collect::<Result<_>>()?;
        let ratios: Vec<f64> = float_maps.iter().map(|m| m.ratio()).collect();
        let dimension = solve_dimension(&ratios)?;
        let hull = HullRepr::Interval(to_f64(&exact.hull.0), to_f64(&exact.hull.1));
        Ok(FractalSystem {
            maps: float_maps,
            ambient_dim: 1,
            dimension,
            sigma: to_f64(&exact.sigma),
            hull,
            exact: Some(exact),
            declared_exact,
        })
    }

    /// 1D system from f64 parameters. Doubles embed exactly as dyadic
    /// rationals, so the exact machinery still applies; results are exact
    /// with respect to the embedded values.
    pub fn from_float_1d(maps: &[(f64, f64)]) -> Result<FractalSystem> {
        let exact: Vec<(Rational, Rational)> = maps
            .iter()
            .map(|&(r, z)| Ok((rational_from_f64(r)?, rational_from_f64(z)?)))
            .collect::<Result<_>>()?;
        Self::from_exact_1d(exact, false)
    }

    /// General system in ambient dimension p >= 2 (or 1D with reflections).
    /// `sigma` must be supplied; it is sanity-checked by sampling pairs of
    /// depth-6 cylinder points from distinct depth-1 cylinders.
    pub fn new_general(maps: Vec<Similitude>, sigma: f64) -> Result<FractalSystem> {
        if maps.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 maps, got {}",
                maps.len()
            )));
        }
        let dim = maps[0].dim();
        if maps.iter().any(|m| m.dim() != dim) {
            return Err(Error::InvalidInput(
                "maps have inconsistent ambient dimensions".into(),
            ));
        }
        if !(sigma > 0.0) {
            return Err(Error::Geometry(
                "separation gap sigma must be supplied and positive".into(),
            ));
        }
        let ratios: Vec<f64> = maps.iter().map(|m| m.ratio()).collect();
        let dimension = solve_dimension(&ratios)?;

        // Bounding ball: center at the fixed-point centroid, radius the
        // fixed point of R -> max_m (r_m R + |psi_m(c) - c|).
        let fixed: Vec<Vec<f64>> = maps.iter().map(|m| m.fixed_point()).collect();
        let center: Vec<f64> = (0..dim)
            .map(|i| fixed.iter().map(|f| f[i]).sum::<f64>() / fixed.len() as f64)
            .collect();
        let mut radius = fixed
            .iter()
            .map(|f| dist(f, &center))
            .fold(0.0f64, f64::max)
            .max(1e-300);
        for _ in 0..200 {
            let next = maps
                .iter()
                .map(|m| m.ratio() * radius + dist(&m.apply(&center), &center))
                .fold(0.0f64, f64::max);
            if (next - radius).abs() <= 1e-15 * radius.max(1.0) {
                radius = next;
                break;
            }
            radius = next;
        }

        let sys = FractalSystem {
            maps,
            ambient_dim: dim,
            dimension,
            sigma,
            hull: HullRepr::Ball(center, radius),
            exact: None,
            declared_exact: false,
        };
        sys.sample_check_sigma()?;
        Ok(sys)
    }

    /// Two-map Cantor-type set on [0,1] with ratios 1/4 and 1/2; its
    /// best-packing counts follow the Fibonacci recurrence.
    pub fn fibonacci_cantor() -> FractalSystem {
        let maps = vec![
            (Rational::new(1.into(), 4.into()), Rational::zero()),
            (
                Rational::new(1.into(), 2.into()),
                Rational::new(1.into(), 2.into()),
            ),
        ];
        Self::from_exact_1d(maps, true).expect("valid built-in system")
    }

    /// Classical middle-third Cantor set on [0,1].
    pub fn middle_third_cantor() -> FractalSystem {
        let maps = vec![
            (Rational::new(1.into(), 3.into()), Rational::zero()),
            (
                Rational::new(1.into(), 3.into()),
                Rational::new(2.into(), 3.into()),
            ),
        ];
        Self::from_exact_1d(maps, true).expect("valid built-in system")
    }

    fn sample_check_sigma(&self) -> Result<()> {
        // Deterministic spot check: points of A in distinct depth-1
        // cylinders must stay at least sigma apart.
        let mut rng = ChaCha8Rng::seed_from_u64(0xF1A7_5EED);
        let m = self.maps.len();
        for _ in 0..200 {
            let m1 = rng.gen_range(0..m);
            let mut m2 = rng.gen_range(0..m - 1);
            if m2 >= m1 {
                m2 += 1;
            }
            let sample_point = |rng: &mut ChaCha8Rng, first: usize| {
                let mut word = vec![first + 1];
                for _ in 0..5 {
                    word.push(rng.gen_range(0..m) + 1);
                }
                let anchor = self.maps[word[word.len() - 1] - 1].fixed_point();
                let w = Word::new(word, m).expect("letters in range");
                self.point_of_word(&w, &anchor).expect("valid word")
            };
            let x = sample_point(&mut rng, m1);
            let y = sample_point(&mut rng, m2);
            let d = dist(&x, &y);
            if d < self.sigma * (1.0 - 1e-9) {
                return Err(Error::Geometry(format!(
                    "supplied sigma = {} exceeds a sampled inter-cylinder distance {}",
                    self.sigma, d
                )));
            }
        }
        Ok(())
    }

    pub fn maps(&self) -> &[Similitude] {
        &self.maps
    }

    pub fn map_count(&self) -> usize {
        self.maps.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.maps.iter().map(|m| m.ratio()).collect()
    }

    /// Solution d of the Moran equation sum_m r_m^d = 1, cached.
    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    /// Depth-1 separation gap.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn sigma_exact(&self) -> Result<&Rational> {
        Ok(&self.exact_1d()?.sigma)
    }

    /// True when the system was declared exact and all parameters are
    /// rational.
    pub fn exact_mode(&self) -> bool {
        self.declared_exact
    }

    /// Whether the exact 1D rational view is available (all 1D
    /// orientation-preserving systems, declared exact or not).
    pub fn has_exact_view(&self) -> bool {
        self.exact.is_some()
    }

    pub(crate) fn exact_1d(&self) -> Result<&Exact1d> {
        self.exact.as_ref().ok_or_else(|| {
            Error::InvalidInput(
                "operation needs the 1D orientation-preserving rational view".into(),
            )
        })
    }

    pub fn hull_interval(&self) -> Result<(f64, f64)> {
        match self.hull {
            HullRepr::Interval(lo, hi) => Ok((lo, hi)),
            HullRepr::Ball(..) => Err(Error::InvalidInput(
                "hull interval only defined in ambient dimension 1".into(),
            )),
        }
    }

    pub fn hull_interval_exact(&self) -> Result<(Rational, Rational)> {
        let e = self.exact_1d()?;
        Ok(e.hull.clone())
    }

    pub fn hull_ball(&self) -> (Vec<f64>, f64) {
        match &self.hull {
            HullRepr::Interval(lo, hi) => (vec![(lo + hi) / 2.0], (hi - lo) / 2.0),
            HullRepr::Ball(c, r) => (c.clone(), *r),
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.hull {
            HullRepr::Interval(lo, hi) => hi - lo,
            HullRepr::Ball(_, r) => 2.0 * r,
        }
    }

    pub fn diameter_exact(&self) -> Result<Rational> {
        Ok(self.exact_1d()?.diam())
    }

    /// Contraction ratio of the composed word map, as product of the
    /// letters' ratios.
    pub fn word_ratio(&self, word: &Word) -> Result<f64> {
        self.check_word(word)?;
        Ok(word
            .letters()
            .iter()
            .map(|&l| self.maps[l - 1].ratio())
            .product())
    }

    pub fn word_ratio_exact(&self, word: &Word) -> Result<Rational> {
        self.check_word(word)?;
        let e = self.exact_1d()?;
        let mut acc = Rational::from_integer(1.into());
        for &l in word.letters() {
            acc *= &e.maps[l - 1].0;
        }
        Ok(acc)
    }

    fn check_word(&self, word: &Word) -> Result<()> {
        for &l in word.letters() {
            if l == 0 || l > self.maps.len() {
                return Err(Error::InvalidInput(format!(
                    "letter {l} outside 1..={}",
                    self.maps.len()
                )));
            }
        }
        Ok(())
    }

    /// Exact interval hull of the cylinder psi_w(A) (1D).
    pub fn cylinder_hull_exact(&self, word: &Word) -> Result<(Rational, Rational)> {
        self.check_word(word)?;
        let e = self.exact_1d()?;
        let (mut lo, mut hi) = e.hull.clone();
        // Apply outermost-first (letters compose left to right).
        for &l in word.letters().iter().rev() {
            let (a, b) = e.apply_interval(l - 1, &lo, &hi);
            lo = a;
            hi = b;
        }
        Ok((lo, hi))
    }

    pub fn cylinder_hull(&self, word: &Word) -> Result<(f64, f64)> {
        let (lo, hi) = self.cylinder_hull_exact(word)?;
        Ok((to_f64(&lo), to_f64(&hi)))
    }

    /// Bounding ball of the cylinder psi_w(A) in any ambient dimension.
    pub fn cylinder_ball(&self, word: &Word) -> Result<(Vec<f64>, f64)> {
        self.check_word(word)?;
        let (mut center, mut radius) = self.hull_ball();
        for &l in word.letters().iter().rev() {
            center = self.maps[l - 1].apply(&center);
            radius *= self.maps[l - 1].ratio();
        }
        Ok((center, radius))
    }

    /// psi_{w1} o ... o psi_{wn}(anchor), exact rational (1D).
    pub fn point_of_word_exact(&self, word: &Word, anchor: &Rational) -> Result<Rational> {
        self.check_word(word)?;
        let e = self.exact_1d()?;
        let mut x = anchor.clone();
        for &l in word.letters().iter().rev() {
            x = e.apply(l - 1, &x);
        }
        Ok(x)
    }

    pub fn point_of_word(&self, word: &Word, anchor: &[f64]) -> Result<Vec<f64>> {
        self.check_word(word)?;
        let mut x = anchor.to_vec();
        for &l in word.letters().iter().rev() {
            x = self.maps[l - 1].apply(&x);
        }
        Ok(x)
    }

    /// Minimum gap between the hulls of all depth-`depth` cylinders (1D
    /// exact); in higher dimension returns the stored sigma.
    pub fn separation_gap_exact(&self, depth: usize) -> Result<Rational> {
        if depth == 0 {
            return Err(Error::InvalidInput("depth must be >= 1".into()));
        }
        let e = self.exact_1d()?;
        if depth == 1 {
            return Ok(e.sigma.clone());
        }
        let m = self.maps.len();
        if (m as f64).powi(depth as i32) > 2e6 {
            return Err(Error::Budget(format!(
                "{m}^{depth} cylinders exceed the enumeration budget"
            )));
        }
        let mut intervals = vec![e.hull.clone()];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(intervals.len() * m);
            for (lo, hi) in &intervals {
                for k in 0..m {
                    next.push(e.apply_interval(k, lo, hi));
                }
            }
            intervals = next;
        }
        intervals.sort_by(|a, b| a.0.cmp(&b.0));
        let mut gap: Option<Rational> = None;
        for pair in intervals.windows(2) {
            let g = &pair[1].0 - &pair[0].1;
            if !g.is_positive() {
                return Err(Error::Geometry(format!(
                    "cylinders at depth {depth} are not separated"
                )));
            }
            if gap.as_ref().map_or(true, |cur| &g < cur) {
                gap = Some(g);
            }
        }
        gap.ok_or_else(|| Error::Internal("no cylinder pair at this depth".into()))
    }

    pub fn separation_gap(&self, depth: usize) -> Result<f64> {
        if self.exact.is_some() {
            Ok(to_f64(&self.separation_gap_exact(depth)?))
        } else {
            if depth == 0 {
                return Err(Error::InvalidInput("depth must be >= 1".into()));
            }
            Ok(self.sigma)
        }
    }

    /// Ratio-structure detection at the given tolerance, with exact base
    /// recovery when the rational view allows it.
    pub fn ratio_structure(&self, tol: f64) -> Result<RatioStructure> {
        let mut structure = exponent_structure(&self.ratios(), tol)?;
        if let RatioStructure::Dependent(es) = &mut structure {
            es.base_exact = self.recover_exact_base(es);
            if let Some(b) = &es.base_exact {
                es.base = to_f64(b);
            }
        }
        Ok(structure)
    }

    fn recover_exact_base(&self, es: &ExponentStructure) -> Option<Rational> {
        let e = self.exact.as_ref()?;
        let cand = rational_nth_root(&e.maps[0].0, es.exponents[0])?;
        for (k, (r, _)) in e.maps.iter().enumerate() {
            if &pow_i(&cand, es.exponents[k] as i64) != r {
                return None;
            }
        }
        Some(cand)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Solves sum_m r_m^d = 1 by bisection on the strictly decreasing map
/// d -> sum r_m^d. Unconditionally convergent for valid ratio lists.
pub fn solve_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.len() < 2 {
        return Err(Error::InvalidInput(
            "dimension needs at least 2 contraction ratios".into(),
        ));
    }
    for &r in ratios {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidInput(format!(
                "contraction ratio must lie in (0,1), got {r}"
            )));
        }
    }
    let f = |d: f64| ratios.iter().map(|r| r.powf(d)).sum::<f64>() - 1.0;
    let mut lo = 1e-9;
    if f(lo) <= 0.0 {
        return Err(Error::Internal("dimension bracket failed at lower end".into()));
    }
    let mut hi = 1.0;
    let mut guard = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Internal("dimension bracket failed to close".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Return the endpoint with the smaller residual.
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// Integer-exponent structure r_k = base^{i_k} shared by a ratio list.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentStructure {
    pub base: f64,
    /// Exact base when recoverable from rational map parameters.
    pub base_exact: Option<Rational>,
    pub exponents: Vec<u32>,
    /// True once a common factor of the exponents has been divided out
    /// (the base is raised to that factor), so gcd(exponents) = 1.
    pub gcd_normalized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RatioStructure {
    Dependent(ExponentStructure),
    Independent,
}

const MAX_EXPONENT: u64 = 64;

/// Detects whether log r_k / log r_1 are rationals with denominator <= 64
/// at the given tolerance; returns the gcd-normalized exponent structure
/// or reports independence.
pub fn exponent_structure(ratios: &[f64], tol: f64) -> Result<RatioStructure> {
    if ratios.is_empty() {
        return Err(Error::InvalidInput("empty ratio list".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    for &r in ratios {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidInput(format!(
                "contraction ratio must lie in (0,1), got {r}"
            )));
        }
    }
    let l1 = ratios[0].ln();
    // Relative tolerance on ratios translates to an absolute window on the
    // log quotients.
    let window = tol / l1.abs();

    let mut fracs: Vec<(u64, u64)> = Vec::with_capacity(ratios.len());
    for &rk in ratios {
        let rho = rk.ln() / l1;
        let (best, second) = best_bounded_fractions(rho, MAX_EXPONENT);
        let (p, q, err) = best;
        if err > window {
            return Ok(RatioStructure::Independent);
        }
        if let Some((p2, q2, err2)) = second {
            if err2 <= window {
                return Err(Error::AmbiguousTolerance(format!(
                    "both {p}/{q} and {p2}/{q2} fit log {rk} / log {} within {tol}",
                    ratios[0]
                )));
            }
        }
        fracs.push((p, q));
    }

    // Common denominator Q; exponents i_k = p_k * (Q / q_k), all bounded.
    let mut q_lcm: u64 = 1;
    for &(_, q) in &fracs {
        q_lcm = q_lcm.lcm(&q);
        if q_lcm > MAX_EXPONENT {
            return Ok(RatioStructure::Independent);
        }
    }
    let mut exps: Vec<u64> = fracs.iter().map(|&(p, q)| p * (q_lcm / q)).collect();
    if exps.iter().any(|&i| i == 0 || i > MAX_EXPONENT) {
        return Ok(RatioStructure::Independent);
    }

    let mut g = 0u64;
    for &i in &exps {
        g = g.gcd(&i);
    }
    for i in &mut exps {
        *i /= g;
    }
    // base = r_1^{g/Q}: dividing out the common factor raises the base.
    let base = (l1 * (g as f64) / (q_lcm as f64)).exp();

    for (k, &rk) in ratios.iter().enumerate() {
        let predicted = base.powi(exps[k] as i32);
        if (predicted - rk).abs() > tol * rk {
            return Ok(RatioStructure::Independent);
        }
    }

    Ok(RatioStructure::Dependent(ExponentStructure {
        base,
        base_exact: None,
        exponents: exps.iter().map(|&i| i as u32).collect(),
        gcd_normalized: true,
    }))
}

/// Best and second-best (distinct-valued) rational approximations p/q to x
/// with p >= 1 and q <= qmax, in lowest terms. x is expected positive.
fn best_bounded_fractions(x: f64, qmax: u64) -> ((u64, u64, f64), Option<(u64, u64, f64)>) {
    let mut best: Option<(u64, u64, f64)> = None;
    let mut second: Option<(u64, u64, f64)> = None;
    for q in 1..=qmax {
        let mid = (x * q as f64).round().max(1.0) as u64;
        for p in [mid.saturating_sub(1).max(1), mid, mid + 1] {
            let g = p.gcd(&q);
            let (pr, qr) = (p / g, q / g);
            let err = (x - pr as f64 / qr as f64).abs();
            match best {
                None => best = Some((pr, qr, err)),
                Some((bp, bq, berr)) => {
                    if (pr, qr) == (bp, bq) {
                        continue;
                    }
                    if err < berr {
                        second = Some((bp, bq, berr));
                        best = Some((pr, qr, err));
                    } else {
                        match second {
                            Some((sp, sq, serr)) => {
                                if err < serr && (pr, qr) != (sp, sq) {
                                    second = Some((pr, qr, err));
                                }
                            }
                            None => second = Some((pr, qr, err)),
                        }
                    }
                }
            }
        }
    }
    (best.expect("qmax >= 1"), second)
}
