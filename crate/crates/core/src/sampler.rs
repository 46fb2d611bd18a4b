//! Monte Carlo hulls, layers and slices through the skeleton decomposition.
//!
//! Perimeters are drawn outward along the one-step transition kernel, each
//! layer's offspring vector is then drawn exactly given its two perimeters,
//! and every skeleton vertex receives an independent Boltzmann slot. All
//! unbounded supports are sampled without truncation: kernel rows run until
//! their residual is below `1e-12` and slot volumes use an exact rejection
//! tail.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::enumeration::{ln_k_weight, ln_slot_prob, slot_probs, EnumError};
use crate::skeleton::OffspringLaw;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("power table limited to {limit} parents, needed {k}")]
    TableLimit { k: usize, limit: usize },
    #[error("zero-probability state: {0}")]
    ZeroProbability(String),
    #[error("slot envelope violated for boundary {p} at n = {n} (ratio {ratio})")]
    Envelope { p: usize, n: u64, ratio: f64 },
    #[error("kernel row for p = {p} left residual {residual}")]
    Residual { p: usize, residual: f64 },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Enumeration(#[from] EnumError),
}

/// Per-trial generator: the pair `(seed, stream)` fixes every draw.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut g = ChaCha8Rng::seed_from_u64(self.seed);
        g.set_stream(self.stream);
        g
    }
}

/// `P_0 = 1, P_1, …, P_r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PerimeterTrajectory {
    pub perimeters: Vec<u64>,
}

impl PerimeterTrajectory {
    pub fn radius(&self) -> u64 {
        self.perimeters.len() as u64 - 1
    }

    pub fn last(&self) -> u64 {
        *self.perimeters.last().expect("nonempty")
    }
}

/// `offspring[i − 1]` lists the child counts of the `P_i` vertices of
/// generation `i`; they sum to `P_{i−1}`. The single vertex of generation 0
/// descends from the first tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LayerSkeleton {
    pub offspring: Vec<Vec<u64>>,
}

impl LayerSkeleton {
    /// Tree index (top-generation ancestor) of every vertex, per generation
    /// `0..=r`.
    pub fn tree_labels(&self) -> Vec<Vec<usize>> {
        let r = self.offspring.len();
        let mut labels = vec![Vec::new(); r + 1];
        labels[r] = (0..self.offspring[r - 1].len()).collect();
        for i in (1..=r).rev() {
            let mut below = Vec::new();
            for (j, &c) in self.offspring[i - 1].iter().enumerate() {
                below.extend(std::iter::repeat_n(labels[i][j], c as usize));
            }
            labels[i - 1] = below;
        }
        labels
    }

    /// Rotate the top trees cyclically so tree `t` comes first.
    fn rotate_to(&mut self, t: usize) {
        let labels = self.tree_labels();
        for (i, gen) in self.offspring.iter_mut().enumerate() {
            let shift = labels[i + 1].iter().take_while(|&&l| l < t).count();
            gen.rotate_left(shift);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HullSample {
    pub trajectory: PerimeterTrajectory,
    pub skeleton: LayerSkeleton,
    /// `slots[i − 1][j]` is the inner-vertex count of the slot of vertex `j`
    /// in generation `i`.
    pub slots: Vec<Vec<u64>>,
    pub volume: u64,
}

impl HullSample {
    /// `V = 1 + Σ_v (n_v + 1)`.
    pub fn volume_identity_holds(&self) -> bool {
        let s: u64 = self.slots.iter().flatten().map(|n| n + 1).sum();
        self.volume == 1 + s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceSample {
    pub hull: HullSample,
    /// Tree that opens the first arc.
    pub rotation: usize,
    pub volumes: Vec<u64>,
}

const SQRT_4_3: f64 = 1.154_700_538_379_251_5;
const RESIDUAL: f64 = 1e-12;

/// `T[k][m] = (4/3)^{k/2} [u^m] φ^k`, grown on demand. Each entry is a fixed
/// convolution of entries of the previous row, so growth order never changes
/// a value.
#[derive(Debug, Default)]
struct PowerTable {
    theta: Vec<f64>,
    rows: Vec<Vec<f64>>,
    width: usize,
}

impl PowerTable {
    /// Beyond this the scaling no longer keeps entries inside `f64`.
    const LIMIT: usize = 4800;

    fn covers(&self, k: usize, m: usize) -> bool {
        self.rows.len() > k && self.width > m
    }

    fn grow(&mut self, law: &OffspringLaw, k: usize, m: usize) -> Result<(), SamplerError> {
        if k > Self::LIMIT {
            return Err(SamplerError::TableLimit { k, limit: Self::LIMIT });
        }
        let width = self.width.max(m + 1).max(64);
        let width = if width > self.width {
            width.max(self.width * 3 / 2)
        } else {
            width
        };
        if self.theta.len() < width {
            self.theta = law.theta_vec(width - 1);
        }
        if self.rows.is_empty() {
            let mut first = vec![0.0; width];
            first[0] = 1.0;
            self.rows.push(first);
        }
        let old = self.width.max(1);
        if width > self.width {
            self.rows[0].resize(width, 0.0);
            for kk in 1..self.rows.len() {
                let (prev, cur) = self.rows.split_at_mut(kk);
                let prev = &prev[kk - 1];
                let cur = &mut cur[0];
                for mm in old..width {
                    cur.push(conv_entry(&self.theta, prev, mm));
                }
            }
        }
        self.width = width;
        while self.rows.len() <= k {
            let prev = self.rows.last().expect("nonempty");
            let row: Vec<f64> = (0..width).map(|mm| conv_entry(&self.theta, prev, mm)).collect();
            self.rows.push(row);
        }
        Ok(())
    }
}

fn conv_entry(theta: &[f64], prev: &[f64], m: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..=m {
        acc += theta[j] * prev[m - j];
    }
    SQRT_4_3 * acc
}

/// Cumulative table of a discrete law on `offset, offset + 1, …`.
#[derive(Debug)]
struct CdfRow {
    offset: u64,
    cdf: Vec<f64>,
}

impl CdfRow {
    fn draw<G: Rng + ?Sized>(&self, rng: &mut G) -> u64 {
        let total = *self.cdf.last().expect("nonempty");
        let u = rng.random::<f64>() * total;
        let i = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        self.offset + i as u64
    }
}

/// Boltzmann slot law for boundary `p`: exact head table, then a rejection
/// tail against a rounded Pareto(3/2) proposal.
#[derive(Debug)]
struct SlotSampler {
    p: usize,
    cdf: Vec<f64>,
    n0: u64,
    ln_tail: f64,
    ln_m: f64,
}

impl SlotSampler {
    fn new(p: usize) -> Self {
        let n0 = (16 * p * p).clamp(4096, 1 << 22);
        let probs = slot_probs(p, n0);
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for v in &probs {
            acc += v;
            cdf.push(acc);
        }
        let tail = (1.0 - acc).max(f64::MIN_POSITIVE);
        let mut s = SlotSampler {
            p,
            cdf,
            n0: n0 as u64,
            ln_tail: tail.ln(),
            ln_m: 0.0,
        };
        // the ratio target/proposal is smooth in n: scan a fine geometric grid
        let mut sup = f64::NEG_INFINITY;
        let mut x = n0 as f64 + 1.0;
        while x < 1e15 {
            sup = sup.max(s.ln_ratio(x as u64));
            x *= 1.002;
            x = x.ceil();
        }
        s.ln_m = sup + 1.001f64.ln();
        s
    }

    fn ln_proposal(&self, n: u64) -> f64 {
        // P(round(X) = n) for X Pareto on [n0 + 1/2, ∞) with index 3/2
        let x = n as f64 - 0.5;
        let lo = self.n0 as f64 + 0.5;
        1.5 * (lo / x).ln() + (-(-1.5 * (1.0 / x).ln_1p()).exp_m1()).ln()
    }

    fn ln_ratio(&self, n: u64) -> f64 {
        ln_slot_prob(n as usize, self.p) - self.ln_tail - self.ln_proposal(n)
    }

    fn draw<G: Rng + ?Sized>(&self, rng: &mut G) -> Result<u64, SamplerError> {
        let u = rng.random::<f64>();
        let head = *self.cdf.last().expect("nonempty");
        if u < head {
            return Ok(self.cdf.partition_point(|&c| c <= u) as u64);
        }
        let lo = self.n0 as f64 + 0.5;
        loop {
            let v = 1.0 - rng.random::<f64>();
            let x = lo * v.powf(-2.0 / 3.0);
            let n = (x + 0.5).floor() as u64;
            let ln_acc = self.ln_ratio(n) - self.ln_m;
            if ln_acc > 0.0 {
                return Err(SamplerError::Envelope {
                    p: self.p,
                    n,
                    ratio: ln_acc.exp(),
                });
            }
            if rng.random::<f64>().ln() <= ln_acc {
                return Ok(n);
            }
        }
    }
}

/// Sampler with warm caches shared across threads.
#[derive(Debug)]
pub struct Sampler {
    law: OffspringLaw,
    table: RwLock<PowerTable>,
    kernels: RwLock<HashMap<u64, Arc<CdfRow>>>,
    backward: RwLock<HashMap<(u64, u64), Arc<CdfRow>>>,
    slots: RwLock<HashMap<usize, Arc<SlotSampler>>>,
}

impl Default for Sampler {
    fn default() -> Self {
        Self::new()
    }
}

impl Sampler {
    pub fn new() -> Self {
        Sampler {
            law: OffspringLaw::critical(),
            table: RwLock::default(),
            kernels: RwLock::default(),
            backward: RwLock::default(),
            slots: RwLock::default(),
        }
    }

    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    fn with_table<T>(&self, k: usize, m: usize, f: impl FnOnce(&PowerTable) -> T) -> Result<T, SamplerError> {
        {
            let t = self.table.read().expect("poisoned");
            if t.covers(k, m) {
                return Ok(f(&t));
            }
        }
        let mut t = self.table.write().expect("poisoned");
        if !t.covers(k, m) {
            t.grow(&self.law, k, m)?;
        }
        Ok(f(&t))
    }

    /// `[u^m] φ^k` from the shared table.
    pub fn power_coefficient(&self, k: usize, m: usize) -> Result<f64, SamplerError> {
        let scaled = self.with_table(k, m, |t| t.rows[k][m])?;
        Ok(scaled * (0.75f64).powf(k as f64 / 2.0))
    }

    /// One draw from `θ`.
    pub fn sample_offspring<G: Rng + ?Sized>(law: &OffspringLaw, rng: &mut G) -> u64 {
        law.sample(rng)
    }

    fn kernel_row(&self, p: u64) -> Result<Arc<CdfRow>, SamplerError> {
        if let Some(row) = self.kernels.read().expect("poisoned").get(&p) {
            return Ok(row.clone());
        }
        let pu = p as usize;
        let lk_p = ln_k_weight(pu);
        let half_ln = 0.5 * 0.75f64.ln();
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        let mut bound = (4 * pu).max(64);
        let mut qq = 1usize;
        loop {
            if qq > bound {
                bound = (bound * 2).min(PowerTable::LIMIT);
                if qq > bound {
                    return Err(SamplerError::Residual {
                        p: pu,
                        residual: 1.0 - acc,
                    });
                }
            }
            let entries = self.with_table(bound, pu, |t| (qq..=bound).map(|k| t.rows[k][pu]).collect::<Vec<_>>())?;
            for (i, e) in entries.into_iter().enumerate() {
                let k = qq + i;
                let l = ln_k_weight(k) - lk_p + (pu as f64 / k as f64).ln() + e.ln() + k as f64 * half_ln;
                acc += if e > 0.0 { l.exp() } else { 0.0 };
                cdf.push(acc);
                if acc >= 1.0 - RESIDUAL && k > pu {
                    let row = Arc::new(CdfRow { offset: 1, cdf });
                    self.kernels.write().expect("poisoned").insert(p, row.clone());
                    return Ok(row);
                }
            }
            qq = bound + 1;
        }
    }

    /// Largest residual `1 − Σ_q P(p → q)` among cached kernel rows.
    pub fn max_kernel_residual(&self) -> f64 {
        self.kernels
            .read()
            .expect("poisoned")
            .values()
            .map(|r| 1.0 - r.cdf.last().copied().unwrap_or(0.0))
            .fold(0.0, f64::max)
    }

    pub fn sample_perimeter_chain<G: Rng + ?Sized>(
        &self,
        r: u64,
        rng: &mut G,
    ) -> Result<PerimeterTrajectory, SamplerError> {
        if r == 0 {
            return Err(SamplerError::Domain("r must be at least 1".into()));
        }
        let mut perimeters = vec![1u64];
        for _ in 0..r {
            let p = *perimeters.last().expect("nonempty");
            perimeters.push(self.kernel_row(p)?.draw(rng));
        }
        Ok(PerimeterTrajectory { perimeters })
    }

    /// Law of `P_{i−1}` given `P_i = q`: `∝ m x^{m−1} [u^m] φ^q` with
    /// `x = 1 − 1/i²`.
    fn backward_row(&self, i: u64, qq: u64) -> Result<Arc<CdfRow>, SamplerError> {
        if let Some(row) = self.backward.read().expect("poisoned").get(&(i, qq)) {
            return Ok(row.clone());
        }
        let ln_x = (-1.0 / (i * i) as f64).ln_1p();
        let k = qq as usize;
        let mut weights: Vec<f64> = Vec::new();
        let mut width = 64usize.max(2 * k);
        let mut max_l = f64::NEG_INFINITY;
        let mut ls: Vec<f64> = Vec::new();
        loop {
            let entries = self.with_table(k, width, |t| t.rows[k][1 + ls.len()..=width].to_vec())?;
            for e in entries {
                let m = ls.len() + 1;
                let l = if e > 0.0 {
                    (m as f64).ln() + (m as f64 - 1.0) * ln_x + e.ln()
                } else {
                    f64::NEG_INFINITY
                };
                max_l = max_l.max(l);
                ls.push(l);
            }
            // stop once the geometric factor has crushed the remainder
            let last = *ls.last().expect("nonempty");
            let m = ls.len() as f64;
            if last < max_l - 40.0 && m > 2.0 * k as f64 && -ln_x * m > 40.0 + m.ln() {
                break;
            }
            if width >= 1 << 16 {
                return Err(SamplerError::Residual {
                    p: k,
                    residual: (last - max_l).exp(),
                });
            }
            width *= 2;
        }
        let mut acc = 0.0;
        for l in ls {
            acc += (l - max_l).exp();
            weights.push(acc);
        }
        if acc == 0.0 {
            return Err(SamplerError::ZeroProbability(format!("P_{i} = {qq}")));
        }
        let row = Arc::new(CdfRow {
            offset: 1,
            cdf: weights,
        });
        self.backward.write().expect("poisoned").insert((i, qq), row.clone());
        Ok(row)
    }

    /// Trajectory conditioned on `P_r = q`, drawn backward from the top.
    pub fn sample_trajectory_conditioned<G: Rng + ?Sized>(
        &self,
        r: u64,
        qq: u64,
        rng: &mut G,
    ) -> Result<PerimeterTrajectory, SamplerError> {
        if r == 0 || qq == 0 {
            return Err(SamplerError::Domain("need r ≥ 1 and q ≥ 1".into()));
        }
        let mut rev = vec![qq];
        for i in (2..=r).rev() {
            let cur = *rev.last().expect("nonempty");
            rev.push(self.backward_row(i, cur)?.draw(rng));
        }
        rev.push(1);
        rev.reverse();
        Ok(PerimeterTrajectory { perimeters: rev })
    }

    /// Offspring of `parents` vertices with `total` children, drawn with
    /// probability `∝ Π θ(c_j)`.
    pub fn sample_layer_offspring<G: Rng + ?Sized>(
        &self,
        parents: u64,
        total: u64,
        rng: &mut G,
    ) -> Result<Vec<u64>, SamplerError> {
        let (q0, p0) = (parents as usize, total as usize);
        if q0 == 0 {
            return if p0 == 0 {
                Ok(Vec::new())
            } else {
                Err(SamplerError::ZeroProbability(format!("{p0} children, no parents")))
            };
        }
        self.with_table(q0, p0, |t| {
            let mut out = Vec::with_capacity(q0);
            let mut m = p0;
            for j in 0..q0 {
                let k = q0 - j;
                if k == 1 {
                    out.push(m as u64);
                    break;
                }
                let norm = t.rows[k][m];
                if norm <= 0.0 {
                    return Err(SamplerError::ZeroProbability(format!("[u^{m}]φ^{k}")));
                }
                let target = rng.random::<f64>() * norm / SQRT_4_3;
                let prev = &t.rows[k - 1];
                let mut acc = 0.0;
                let mut pick = None;
                let mut last_pos = 0;
                for c in 0..=m {
                    let w = t.theta[c] * prev[m - c];
                    if w > 0.0 {
                        last_pos = c;
                    }
                    acc += w;
                    if acc > target {
                        pick = Some(c);
                        break;
                    }
                }
                let c = pick.unwrap_or(last_pos);
                out.push(c as u64);
                m -= c;
            }
            Ok(out)
        })?
    }

    fn slot_sampler(&self, c: u64) -> Arc<SlotSampler> {
        let p = c as usize + 2;
        if let Some(s) = self.slots.read().expect("poisoned").get(&p) {
            return s.clone();
        }
        let s = Arc::new(SlotSampler::new(p));
        self.slots.write().expect("poisoned").entry(p).or_insert(s).clone()
    }

    /// Inner-vertex count of a Boltzmann triangulation of the `(c+2)`-gon.
    pub fn sample_slot_volume<G: Rng + ?Sized>(&self, c: u64, rng: &mut G) -> Result<u64, SamplerError> {
        self.slot_sampler(c).draw(rng)
    }

    fn fill_hull<G: Rng + ?Sized>(
        &self,
        trajectory: PerimeterTrajectory,
        rng: &mut G,
    ) -> Result<HullSample, SamplerError> {
        let r = trajectory.perimeters.len() - 1;
        let mut offspring = vec![Vec::new(); r];
        for i in (1..=r).rev() {
            let (qq, p) = (trajectory.perimeters[i], trajectory.perimeters[i - 1]);
            offspring[i - 1] = self.sample_layer_offspring(qq, p, rng)?;
        }
        let mut skeleton = LayerSkeleton { offspring };
        let first = skeleton.tree_labels()[0][0];
        skeleton.rotate_to(first);
        let mut slots = Vec::with_capacity(r);
        let mut volume = 1u64;
        for gen in &skeleton.offspring {
            let mut row = Vec::with_capacity(gen.len());
            for &c in gen {
                let n = self.sample_slot_volume(c, rng)?;
                volume += n + 1;
                row.push(n);
            }
            slots.push(row);
        }
        Ok(HullSample {
            trajectory,
            skeleton,
            slots,
            volume,
        })
    }

    pub fn sample_hull<G: Rng + ?Sized>(&self, r: u64, rng: &mut G) -> Result<HullSample, SamplerError> {
        let trajectory = self.sample_perimeter_chain(r, rng)?;
        self.fill_hull(trajectory, rng)
    }

    pub fn sample_hull_conditioned<G: Rng + ?Sized>(
        &self,
        r: u64,
        qq: u64,
        rng: &mut G,
    ) -> Result<HullSample, SamplerError> {
        let trajectory = self.sample_trajectory_conditioned(r, qq, rng)?;
        self.fill_hull(trajectory, rng)
    }

    /// Shifted slice volumes for consecutive boundary arcs after a uniform
    /// rotation of the conditioned forest.
    pub fn sample_slices<G: Rng + ?Sized>(
        &self,
        r: u64,
        qq: u64,
        arcs: &[u64],
        rng: &mut G,
    ) -> Result<SliceSample, SamplerError> {
        if arcs.is_empty() || arcs.contains(&0) || arcs.iter().sum::<u64>() != qq {
            return Err(SamplerError::Domain(format!(
                "arcs {arcs:?} must be positive and sum to q = {qq}"
            )));
        }
        let hull = self.sample_hull_conditioned(r, qq, rng)?;
        let rotation = rng.random_range(0..qq as usize);
        let mut arc_of_pos = Vec::with_capacity(qq as usize);
        for (j, &a) in arcs.iter().enumerate() {
            arc_of_pos.extend(std::iter::repeat_n(j, a as usize));
        }
        let labels = hull.skeleton.tree_labels();
        let q = qq as usize;
        let mut volumes = vec![0u64; arcs.len()];
        for (i, row) in hull.slots.iter().enumerate() {
            for (j, &n) in row.iter().enumerate() {
                let tree = labels[i + 1][j];
                volumes[arc_of_pos[(tree + q - rotation) % q]] += n + 1;
            }
        }
        Ok(SliceSample {
            hull,
            rotation,
            volumes,
        })
    }
}

/// Run `trials` independent tasks on `workers` threads. Trial `i` receives
/// the stream `(seed, i)`; results come back in trial order.
pub fn run_trials<T, F>(seed: u64, trials: u64, workers: usize, f: F) -> Result<Vec<T>, SamplerError>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> Result<T, SamplerError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SamplerError::Pool(e.to_string()))?;
    pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(seed, i).rng();
                f(i, &mut rng)
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::boundary_at_rho;
    use crate::series::Ring;

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn power_table_matches_direct_powers() {
        let s = Sampler::new();
        let theta = s.law().theta_vec(10);
        let sq = crate::series::conv_trunc(&theta, &theta, 10);
        for m in 0..=10 {
            assert!((s.power_coefficient(2, m).unwrap() - sq[m]).abs() < 1e-15);
        }
        // growing the table later never changes earlier entries
        let before = s.power_coefficient(3, 5).unwrap();
        s.power_coefficient(200, 300).unwrap();
        assert_eq!(before, s.power_coefficient(3, 5).unwrap());
        assert!(matches!(
            s.power_coefficient(10_000, 1),
            Err(SamplerError::TableLimit { .. })
        ));
    }

    #[test]
    fn offspring_frequencies() {
        let law = OffspringLaw::critical();
        let mut rng = RngStream::new(7, 0).rng();
        let n = 1_000_000;
        let zeros = (0..n)
            .filter(|_| Sampler::sample_offspring(&law, &mut rng) == 0)
            .count();
        let f = zeros as f64 / n as f64;
        let se = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((f - 0.75).abs() < 3.0 * se);
        let a: Vec<u64> = (0..5).map(|_| law.sample(&mut RngStream::new(1, 2).rng())).collect();
        let b: Vec<u64> = (0..5).map(|_| law.sample(&mut RngStream::new(1, 2).rng())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn layer_offspring_small_cases() {
        let s = Sampler::new();
        let mut rng = RngStream::new(3, 0).rng();
        assert_eq!(s.sample_layer_offspring(1, 5, &mut rng).unwrap(), vec![5]);
        assert_eq!(s.sample_layer_offspring(4, 0, &mut rng).unwrap(), vec![0; 4]);
        let th = s.law().theta_vec(2);
        let want = th[0] * th[2] / (2.0 * th[0] * th[2] + th[1] * th[1]);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| s.sample_layer_offspring(2, 2, &mut rng).unwrap()[0] == 0)
            .count();
        let f = hits as f64 / n as f64;
        assert!((f - want).abs() < 3.0 * (want * (1.0 - want) / n as f64).sqrt());
    }

    #[test]
    fn slot_volumes() {
        let s = Sampler::new();
        let mut rng = RngStream::new(11, 0).rng();
        let n = 200_000;
        // P(n = 0) for the 2-gon
        let p0 = (ln_slot_prob(0, 2)).exp();
        let hits = (0..n)
            .filter(|_| s.sample_slot_volume(0, &mut rng).unwrap() == 0)
            .count();
        let f = hits as f64 / n as f64;
        assert!((f - p0).abs() < 3.0 * (p0 * (1.0 - p0) / n as f64).sqrt());
        // E[s^{n+1}] against the exact series for c = 1
        let x: f64 = 0.9;
        let draws: Vec<f64> = (0..n)
            .map(|_| x.powf(s.sample_slot_volume(1, &mut rng).unwrap() as f64 + 1.0))
            .collect();
        let (m, se) = mean_se(&draws);
        let probs = slot_probs(3, 2000);
        let exact: f64 = probs.iter().enumerate().map(|(k, p)| p * x.powi(k as i32 + 1)).sum();
        assert!((m - exact).abs() < 3.0 * se, "{m} {exact} {se}");
        assert!((probs[0] - 1.0 / boundary_at_rho(3).to_f64()).abs() < 1e-12);
        // the tail branch is exercised and stays within the envelope
        let big = (0..2_000_000)
            .map(|_| s.sample_slot_volume(0, &mut rng).unwrap())
            .max()
            .unwrap();
        assert!(big > 4096);
    }

    #[test]
    fn chain_and_hulls() {
        let s = Sampler::new();
        let mut rng = RngStream::new(5, 0).rng();
        let n = 100_000;
        let mut ones = 0;
        for _ in 0..n {
            let h = s.sample_hull(1, &mut rng).unwrap();
            assert_eq!(h.trajectory.perimeters[0], 1);
            assert!(h.volume >= 2 && h.volume_identity_holds());
            if h.trajectory.last() == 1 {
                ones += 1;
            }
        }
        let f = ones as f64 / n as f64;
        assert!((f - 0.125).abs() < 3.0 * (0.125f64 * 0.875 / n as f64).sqrt());
        assert!(s.max_kernel_residual() <= RESIDUAL);
    }

    #[test]
    fn conditioned_hull_ends_at_q_and_slices_partition() {
        let s = Sampler::new();
        let mut rng = RngStream::new(9, 0).rng();
        for _ in 0..200 {
            let h = s.sample_hull_conditioned(3, 6, &mut rng).unwrap();
            assert_eq!(h.trajectory.last(), 6);
            assert!(h.volume_identity_holds());
            let sl = s.sample_slices(2, 4, &[1, 3], &mut rng).unwrap();
            assert_eq!(sl.volumes.iter().sum::<u64>(), sl.hull.volume - 1);
            // the bottom vertex hangs below the first tree
            assert_eq!(sl.hull.skeleton.tree_labels()[0], vec![0]);
        }
        let h = s.sample_hull_conditioned(1, 5, &mut rng).unwrap();
        assert_eq!(h.skeleton.offspring[0].iter().sum::<u64>(), 1);
        assert!(s.sample_slices(2, 4, &[2, 3], &mut rng).is_err());
    }

    #[test]
    fn parallel_runs_are_worker_independent() {
        let s = Sampler::new();
        let f = |_: u64, rng: &mut ChaCha8Rng| s.sample_hull(2, rng).map(|h| h.volume);
        let a = run_trials(42, 500, 1, f).unwrap();
        let b = run_trials(42, 500, 4, f).unwrap();
        assert_eq!(a, b);
    }
}
