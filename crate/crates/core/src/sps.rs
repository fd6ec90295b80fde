//! Sign-Perturbed Sums: initialization (random signs and tie-break
//! permutation), the normalized sums `S_i(theta)`, the rank of the reference
//! sum under the tie-broken order, and the membership indicator.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Result, SpsError};
use crate::linalg;
use crate::regression::{self, RegressionSummary};

/// Norm used to compare the sums. Exactness of the region does not depend
/// on the choice; its shape does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    #[default]
    L2,
    Linf,
}

impl Norm {
    /// The norm of `v`, squared. Only the ordering of these values matters.
    #[inline]
    pub fn squared(self, v: &[f64]) -> f64 {
        match self {
            Norm::L2 => v.iter().map(|x| x * x).sum(),
            Norm::L1 => {
                let s: f64 = v.iter().map(|x| x.abs()).sum();
                s * s
            }
            Norm::Linf => {
                let s = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
                s * s
            }
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        })
    }
}

impl FromStr for Norm {
    type Err = SpsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "l-inf" | "inf" => Ok(Norm::Linf),
            other => Err(SpsError::config(format!("unknown norm `{other}` (expected l1, l2 or linf)"))),
        }
    }
}

/// The exact confidence level `1 - q/m` as a reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Confidence {
    pub numerator: u64,
    pub denominator: u64,
}

impl Confidence {
    pub fn from_m_q(m: usize, q: usize) -> Self {
        let (num, den) = ((m - q) as u64, m as u64);
        let g = gcd(num, den);
        Confidence { numerator: num / g, denominator: den / g }
    }

    pub fn value(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn default_block_length() -> usize {
    1
}

/// Serializable SPS parameters. The sign matrix is never stored; it is
/// regenerated from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpsConfig {
    pub m: usize,
    pub q: usize,
    pub seed: u64,
    #[serde(default = "default_block_length")]
    pub block_length: usize,
    #[serde(default)]
    pub norm: Norm,
}

impl SpsConfig {
    pub fn new(m: usize, q: usize, seed: u64) -> Self {
        SpsConfig { m, q, seed, block_length: 1, norm: Norm::L2 }
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_block_length(mut self, block_length: usize) -> Self {
        self.block_length = block_length;
        self
    }

    pub fn confidence(&self) -> Confidence {
        Confidence::from_m_q(self.m, self.q)
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.m < 2 {
            return Err(SpsError::config(format!("m = {} must be at least 2", self.m)));
        }
        if self.q == 0 || self.q >= self.m {
            return Err(SpsError::config(format!("need 0 < q < m, got q = {}, m = {}", self.q, self.m)));
        }
        if self.block_length == 0 || n % self.block_length != 0 {
            return Err(SpsError::config(format!(
                "block length {} must divide n = {n}",
                self.block_length
            )));
        }
        Ok(())
    }
}

/// An initialized SPS instance for samples of length `n`: the `(m-1) x n`
/// sign matrix and the tie-break permutation `pi` of `{0..m-1}`.
///
/// Row 0 (the unperturbed reference sum) is implicit: all its signs are +1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpsSetup {
    config: SpsConfig,
    n: usize,
    /// Row-major `(m-1) x n`; row `k` holds the signs of sum `i = k + 1`.
    signs: Vec<i8>,
    tie_break: Vec<usize>,
}

/// Draws the random signs (i.i.d. per row and block) and a uniform random
/// permutation via Fisher-Yates, deterministically from `seed`.
pub fn init_sps(m: usize, q: usize, seed: u64, n: usize, block_length: usize, norm: Norm) -> Result<SpsSetup> {
    SpsSetup::generate(SpsConfig { m, q, seed, block_length, norm }, n)
}

impl SpsSetup {
    pub fn generate(config: SpsConfig, n: usize) -> Result<Self> {
        config.validate(n)?;
        let SpsConfig { m, block_length, .. } = config;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let blocks = n / block_length;
        let mut signs = Vec::with_capacity((m - 1) * n);
        for _ in 1..m {
            for _ in 0..blocks {
                let s: i8 = if rng.gen::<bool>() { 1 } else { -1 };
                signs.extend(std::iter::repeat(s).take(block_length));
            }
        }
        let mut tie_break: Vec<usize> = (0..m).collect();
        tie_break.shuffle(&mut rng);
        Ok(SpsSetup { config, n, signs, tie_break })
    }

    /// Builds a setup from explicit signs (`m - 1` rows of length `n`) and
    /// permutation. Used for hand-constructed cases.
    pub fn from_parts(config: SpsConfig, signs: Vec<Vec<i8>>, tie_break: Vec<usize>) -> Result<Self> {
        let n = signs.first().map_or(0, Vec::len);
        config.validate(n.max(config.block_length))?;
        if signs.len() != config.m - 1 {
            return Err(SpsError::DimensionMismatch { expected: config.m - 1, got: signs.len() });
        }
        if signs.iter().flatten().any(|&s| s != 1 && s != -1) {
            return Err(SpsError::config("signs must be +1 or -1"));
        }
        if let Some(row) = signs.iter().find(|r| r.len() != n) {
            return Err(SpsError::DimensionMismatch { expected: n, got: row.len() });
        }
        let mut seen = vec![false; config.m];
        for &p in &tie_break {
            if p >= config.m || std::mem::replace(&mut seen[p], true) {
                return Err(SpsError::config("tie_break must be a permutation of 0..m"));
            }
        }
        if tie_break.len() != config.m {
            return Err(SpsError::config("tie_break must be a permutation of 0..m"));
        }
        let setup = SpsSetup { config, n, signs: signs.concat(), tie_break };
        if !setup.blocks_are_constant() {
            return Err(SpsError::config("signs are not constant within blocks"));
        }
        Ok(setup)
    }

    pub fn config(&self) -> &SpsConfig {
        &self.config
    }

    pub fn m(&self) -> usize {
        self.config.m
    }

    pub fn q(&self) -> usize {
        self.config.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn norm(&self) -> Norm {
        self.config.norm
    }

    pub fn block_length(&self) -> usize {
        self.config.block_length
    }

    pub fn confidence(&self) -> Confidence {
        self.config.confidence()
    }

    pub fn tie_break(&self) -> &[usize] {
        &self.tie_break
    }

    /// `alpha_{i,t}` for `i` in `0..m` and `t` in `0..n`; row 0 is all +1.
    #[inline]
    pub fn sign(&self, i: usize, t: usize) -> f64 {
        if i == 0 {
            1.0
        } else {
            f64::from(self.signs[(i - 1) * self.n + t])
        }
    }

    /// Signs of perturbed sum `i >= 1`.
    pub fn sign_row(&self, i: usize) -> &[i8] {
        &self.signs[(i - 1) * self.n..i * self.n]
    }

    pub fn blocks_are_constant(&self) -> bool {
        let t = self.config.block_length;
        (1..self.m()).all(|i| {
            self.sign_row(i).chunks(t).all(|block| block.iter().all(|&s| s == block[0]))
        })
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.n() != self.n {
            return Err(SpsError::DimensionMismatch { expected: self.n, got: data.n() });
        }
        Ok(())
    }
}

/// `S_i(theta) = R_n^{-1/2} (1/n) sum_t alpha_{i,t} phi_t eps_t(theta)`,
/// evaluated literally from the residuals with a triangular solve.
pub fn evaluate_s(
    setup: &SpsSetup,
    summary: &RegressionSummary,
    data: &Dataset,
    theta: &DVector<f64>,
    i: usize,
) -> Result<DVector<f64>> {
    setup.check_data(data)?;
    if i >= setup.m() {
        return Err(SpsError::config(format!("sum index {i} out of range 0..{}", setup.m())));
    }
    let eps = regression::residuals(data, theta);
    let phi = data.regressors();
    let d = data.dim();
    let mut acc = DVector::<f64>::zeros(d);
    for t in 0..data.n() {
        let w = setup.sign(i, t) * eps[t];
        for k in 0..d {
            acc[k] += phi[(t, k)] * w;
        }
    }
    acc /= data.n() as f64;
    linalg::forward_solve(&summary.r_n_half, acc.as_mut_slice());
    Ok(acc)
}

/// Outcome of ranking the reference sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpsVerdict {
    /// Position of `||S_0||^2` in ascending tie-broken order, in `1..=m`.
    pub rank: usize,
    pub member: bool,
    /// `||S_i(theta)||^2` for `i = 0..m`.
    pub s_norms: Vec<f64>,
}

/// `Z_k` beats `Z_j` under the tie-broken strict order: larger value wins,
/// exact ties go to the larger permutation image.
#[inline]
pub fn precedes_under(values: (f64, f64), images: (usize, usize)) -> bool {
    let (zk, zj) = values;
    zk > zj || (zk == zj && images.0 > images.1)
}

/// Rank of `values[0]` among `values` in ascending order under the
/// tie-broken order induced by `tie_break`.
pub fn rank_under_order(values: &[f64], tie_break: &[usize]) -> usize {
    1 + (1..values.len())
        .filter(|&i| precedes_under((values[0], values[i]), (tie_break[0], tie_break[i])))
        .count()
}

fn verdict_from_norms(setup: &SpsSetup, s_norms: Vec<f64>) -> SpsVerdict {
    let rank = rank_under_order(&s_norms, &setup.tie_break);
    SpsVerdict { rank, member: rank <= setup.m() - setup.q(), s_norms }
}

/// Computes every `||S_i(theta)||^2` and the rank of the reference sum.
pub fn rank_of_reference(
    setup: &SpsSetup,
    summary: &RegressionSummary,
    data: &Dataset,
    theta: &DVector<f64>,
) -> Result<SpsVerdict> {
    let norm = setup.norm();
    let s_norms = (0..setup.m())
        .map(|i| evaluate_s(setup, summary, data, theta, i).map(|s| norm.squared(s.as_slice())))
        .collect::<Result<Vec<_>>>()?;
    Ok(verdict_from_norms(setup, s_norms))
}

/// `true` iff `theta` belongs to the SPS confidence region.
pub fn sps_indicator(
    setup: &SpsSetup,
    summary: &RegressionSummary,
    data: &Dataset,
    theta: &DVector<f64>,
) -> Result<bool> {
    Ok(rank_of_reference(setup, summary, data, theta)?.member)
}

/// Precomputed form of the indicator for repeated queries.
///
/// Each sum is affine in the parameter, `S_i(theta) = g_i - G_i theta` with
/// `g_i = L^{-1} psi_i` and `G_i = L^{-1} Q_i`, so one query costs
/// `O(m d^2)` instead of `O(m n d)`.
#[derive(Debug, Clone)]
pub struct SpsEvaluator {
    m: usize,
    q: usize,
    d: usize,
    norm: Norm,
    tie_break: Vec<usize>,
    offsets: Vec<f64>,
    gains: Vec<f64>,
}

impl SpsEvaluator {
    pub fn new(setup: &SpsSetup, summary: &RegressionSummary, data: &Dataset) -> Result<Self> {
        setup.check_data(data)?;
        let (n, d, m) = (data.n(), data.dim(), setup.m());
        let rows = data.regressor_rows();
        let y = data.outputs();
        let inv_n = 1.0 / n as f64;
        let l = &summary.r_n_half;

        let mut offsets = Vec::with_capacity(m * d);
        let mut gains = Vec::with_capacity(m * d * d);
        let mut q_mat = DMatrix::<f64>::zeros(d, d);
        let mut psi = DVector::<f64>::zeros(d);
        for i in 0..m {
            q_mat.fill(0.0);
            psi.fill(0.0);
            for t in 0..n {
                let a = setup.sign(i, t);
                let phi = &rows[t * d..(t + 1) * d];
                for r in 0..d {
                    let ar = a * phi[r];
                    psi[r] += ar * y[t];
                    for c in 0..d {
                        q_mat[(r, c)] += ar * phi[c];
                    }
                }
            }
            psi *= inv_n;
            q_mat *= inv_n;
            let g = linalg::solve_lower(l, &psi);
            let big_g = linalg::solve_lower_matrix(l, &q_mat);
            offsets.extend(g.iter());
            for r in 0..d {
                for c in 0..d {
                    gains.push(big_g[(r, c)]);
                }
            }
        }
        Ok(SpsEvaluator {
            m,
            q: setup.q(),
            d,
            norm: setup.norm(),
            tie_break: setup.tie_break.clone(),
            offsets,
            gains,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    fn s_norm(&self, i: usize, theta: &[f64], buf: &mut [f64]) -> f64 {
        let d = self.d;
        let g = &self.offsets[i * d..(i + 1) * d];
        let big_g = &self.gains[i * d * d..(i + 1) * d * d];
        for r in 0..d {
            let row = &big_g[r * d..(r + 1) * d];
            let mut s = g[r];
            for c in 0..d {
                s -= row[c] * theta[c];
            }
            buf[r] = s;
        }
        self.norm.squared(buf)
    }

    /// `S_i(theta)` for diagnostics and cross-checks.
    pub fn s_vector(&self, i: usize, theta: &[f64]) -> Vec<f64> {
        let mut buf = vec![0.0; self.d];
        self.s_norm(i, theta, &mut buf);
        buf
    }

    pub fn verdict(&self, theta: &[f64]) -> SpsVerdict {
        let mut buf = vec![0.0; self.d];
        let s_norms: Vec<f64> = (0..self.m).map(|i| self.s_norm(i, theta, &mut buf)).collect();
        let rank = rank_under_order(&s_norms, &self.tie_break);
        SpsVerdict { rank, member: rank <= self.m - self.q, s_norms }
    }

    /// Membership test with early exit once the outcome is decided.
    pub fn contains(&self, theta: &[f64]) -> bool {
        let mut buf = [0.0f64; 32];
        let mut heap;
        let buf: &mut [f64] = if self.d <= 32 {
            &mut buf[..self.d]
        } else {
            heap = vec![0.0; self.d];
            &mut heap
        };
        let z0 = self.s_norm(0, theta, buf);
        let p0 = self.tie_break[0];
        // member iff at least q sums beat S_0, i.e. at most m-q-1 are beaten by it
        let max_below = self.m - self.q - 1;
        let (mut above, mut below) = (0usize, 0usize);
        for i in 1..self.m {
            let zi = self.s_norm(i, theta, buf);
            if precedes_under((z0, zi), (p0, self.tie_break[i])) {
                below += 1;
                if below > max_below {
                    return false;
                }
            } else {
                above += 1;
                if above >= self.q {
                    return true;
                }
            }
        }
        unreachable!("either q sums are above S_0 or more than m-q-1 are below")
    }

    /// Membership at `origin + t * direction` for every `t` in `ts`
    /// (ascending).
    ///
    /// With the Euclidean norm, `||S_0||^2 - ||S_i||^2` is a quadratic in `t`,
    /// so comparison outcomes can only change near its roots. Between samples
    /// only the comparisons with a root nearby are re-evaluated (with the same
    /// arithmetic as [`contains`](Self::contains)), which makes a raster row
    /// cost `O(m log m + len)` instead of `O(m len)`. Other norms fall back to
    /// pointwise evaluation.
    pub fn line_membership(&self, origin: &[f64], direction: &[f64], ts: &[f64]) -> Vec<bool> {
        let d = self.d;
        assert_eq!(origin.len(), d);
        assert_eq!(direction.len(), d);
        let point = |t: f64| -> Vec<f64> { (0..d).map(|k| origin[k] + t * direction[k]).collect() };
        if self.norm != Norm::L2 || ts.len() < 8 {
            return ts.iter().map(|&t| self.contains(&point(t))).collect();
        }
        debug_assert!(ts.windows(2).all(|w| w[0] <= w[1]), "samples must be ascending");

        // S_i(t) = p_i - t v_i; keep |p|^2, p.v, |v|^2 per sum
        let mut p = vec![0.0; d];
        let mut coeffs = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let pp = self.s_norm(i, origin, &mut p);
            let big_g = &self.gains[i * d * d..(i + 1) * d * d];
            let (mut pv, mut vv) = (0.0, 0.0);
            for r in 0..d {
                let v: f64 = (0..d).map(|c| big_g[r * d + c] * direction[c]).sum();
                pv += p[r] * v;
                vv += v * v;
            }
            coeffs.push((pp, pv, vv));
        }

        // Roots of f_i(t) = a t^2 + b t + c; near-tangencies contribute the vertex.
        let (pp0, pv0, vv0) = coeffs[0];
        let mut events: Vec<(f64, usize)> = Vec::new();
        for (i, &(pp, pv, vv)) in coeffs.iter().enumerate().skip(1) {
            let (a, b, c) = (vv0 - vv, -2.0 * (pv0 - pv), pp0 - pp);
            if a == 0.0 {
                if b != 0.0 {
                    events.push((-c / b, i));
                }
                continue;
            }
            let disc = b * b - 4.0 * a * c;
            let slack = 1e-10 * (b * b + 4.0 * (a * c).abs());
            if disc >= 0.0 {
                let h = -0.5 * (b + b.signum() * disc.sqrt());
                if h == 0.0 {
                    events.push((-b / (2.0 * a), i));
                } else {
                    events.push((h / a, i));
                    events.push((c / h, i));
                }
            } else if disc >= -slack {
                events.push((-b / (2.0 * a), i));
            }
        }
        events.retain(|e| e.0.is_finite());
        events.sort_by(|x, y| x.0.total_cmp(&y.0));

        let span = (ts[ts.len() - 1] - ts[0]).abs() + ts[0].abs().max(ts[ts.len() - 1].abs());
        let window = 1e-6 * span.max(f64::MIN_POSITIVE);
        let p0 = self.tie_break[0];
        let max_below = self.m - self.q - 1;

        let mut theta = point(ts[0]);
        let mut buf = vec![0.0; d];
        let z0 = self.s_norm(0, &theta, &mut buf);
        let mut below: Vec<bool> = (0..self.m)
            .map(|i| i > 0 && precedes_under((z0, self.s_norm(i, &theta, &mut buf)), (p0, self.tie_break[i])))
            .collect();
        let mut count = below.iter().filter(|&&b| b).count();

        let mut out = Vec::with_capacity(ts.len());
        out.push(count <= max_below);
        let (mut lo, mut hi) = (0usize, 0usize);
        for j in 1..ts.len() {
            let t = ts[j];
            while lo < events.len() && events[lo].0 <= ts[j - 1] - window {
                lo += 1;
            }
            while hi < events.len() && events[hi].0 <= t + window {
                hi += 1;
            }
            if lo < hi {
                for (k, x) in theta.iter_mut().enumerate() {
                    *x = origin[k] + t * direction[k];
                }
                let z0 = self.s_norm(0, &theta, &mut buf);
                for &(_, i) in &events[lo..hi] {
                    let now = precedes_under((z0, self.s_norm(i, &theta, &mut buf)), (p0, self.tie_break[i]));
                    if now != below[i] {
                        below[i] = now;
                        if now {
                            count += 1;
                        } else {
                            count -= 1;
                        }
                    }
                }
            }
            out.push(count <= max_below);
        }
        out
    }
}
