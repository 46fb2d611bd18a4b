//! The thirteen acceptance criteria. Each returns a report with a one-line
//! summary and the individual verdicts behind it.

use serde::Serialize;

use super::{chi_square_pmf, estimate_gf, estimate_joint_gf, histogram, Verdict, P_FLOOR};
use crate::asymptotics::{self, gaps_decrease, LADDER};
use crate::enumeration::{boundary_series_all, count_closed, h_series, TriangulationCounts};
use crate::laws::{self, oracle};
use crate::sampler::{run_trials, Sampler};
use crate::series::{q, QSqrt3, Ring, Series, Q};
use crate::skeleton::{self, CriticalPair, OffspringLaw};

#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceConfig {
    pub seed: u64,
    pub trials: u64,
    pub workers: usize,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig {
            seed: 42,
            trials: 100_000,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub summary: String,
    pub verdicts: Vec<Verdict>,
}

impl CriterionReport {
    fn from_verdicts(id: u8, title: &'static str, summary: String, verdicts: Vec<Verdict>) -> Self {
        let pass = !verdicts.is_empty() && verdicts.iter().all(|v| v.pass);
        CriterionReport {
            id,
            title,
            pass,
            summary,
            verdicts,
        }
    }

    fn failed(id: u8, title: &'static str, err: impl std::fmt::Display) -> Self {
        CriterionReport {
            id,
            title,
            pass: false,
            summary: format!("error: {err}"),
            verdicts: Vec::new(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.summary
        )
    }
}

fn check(test: impl Into<String>, statistic: f64, pass: bool) -> Verdict {
    Verdict::new(test, statistic, None, pass, None)
}

fn run(id: u8, title: &'static str, body: impl FnOnce() -> Result<(String, Vec<Verdict>), String>) -> CriterionReport {
    match body() {
        Ok((summary, v)) => CriterionReport::from_verdicts(id, title, summary, v),
        Err(e) => CriterionReport::failed(id, title, e),
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// 1. Defining equations hold exactly.
pub fn criterion_1() -> CriterionReport {
    run(1, "defining equations", || {
        let n = 200;
        let h = h_series::<Q>(n);
        let eight = Q::from_i64(8);
        let rhs = h.mul(&h).mul(&Series::one(n).sub(&h.scale(&eight)));
        let x = Series::<Q>::var(n);
        let residual = x.mul(&x).sub(&rhs);
        let nonzero = residual.coeffs().iter().filter(|c| !c.is_zero()).count();
        let mut v = vec![check(
            "h: x^2 - h^2(1-8h) nonzero coefficients to order 200",
            nonzero as f64,
            nonzero == 0,
        )];
        // T = y + x (T − T(x,0))/y + T² coefficientwise in y, to (x^40, y^20)
        let (nx, ny) = (40, 20);
        let a = boundary_series_all::<Q>(ny + 2, nx).map_err(err)?;
        let mut bad = 0;
        for k in 0..=ny {
            let mut rhs = a[k + 1].mul_x();
            for i in 0..=k {
                rhs = rhs.add(&a[i].mul(&a[k - i]));
            }
            if k == 1 {
                rhs = rhs.add_const(&Q::one());
            }
            bad += a[k].sub(&rhs).coeffs().iter().filter(|c| !c.is_zero()).count();
        }
        v.push(check(
            "Tutte identity nonzero coefficients at (40,20)",
            bad as f64,
            bad == 0,
        ));
        // and the counts agree with the explicit product formula
        let counts = TriangulationCounts::new();
        counts.warm(nx, ny + 1).map_err(err)?;
        let mut mismatches = 0;
        for p in 1..=ny + 1 {
            for nn in 0..=nx {
                if counts.count(nn, p).map_err(err)? != count_closed(nn, p) {
                    mismatches += 1;
                }
            }
        }
        v.push(check(
            "counts vs explicit formula mismatches",
            mismatches as f64,
            mismatches == 0,
        ));
        Ok((
            format!("h residual {nonzero} terms, Tutte residual {bad} terms, count mismatches {mismatches}"),
            v,
        ))
    })
}

/// 2. `h(ρ) = 1/12` and `T(ρ, α) = (3 − √3)/6` from 10⁴ terms.
pub fn criterion_2() -> CriterionReport {
    run(2, "constants at rho", || {
        let n = 10_000;
        let h = asymptotics::h_at_rho(n);
        let t = asymptotics::t_rho_alpha(n);
        let dh = (h - 1.0 / 12.0).abs();
        let dt = (t - (3.0 - 3f64.sqrt()) / 6.0).abs();
        let v = vec![
            check("|h(rho) - 1/12|", dh, dh <= 1e-4),
            check("|T(rho,alpha) - (3-sqrt3)/6|", dt, dt <= 1e-4),
        ];
        Ok((
            format!("|h(rho)-1/12| = {dh:.2e}, |T(rho,alpha)-(3-sqrt3)/6| = {dt:.2e} (tol 1e-4)"),
            v,
        ))
    })
}

/// 3. Offspring law: two exact routes agree; first values; partial means.
pub fn criterion_3() -> CriterionReport {
    run(3, "offspring law", || {
        let n = 100;
        let closed = skeleton::phi_coeffs(n).map_err(err)?;
        let tser = skeleton::phi_coeffs_tseries(n).map_err(err)?;
        let mism = closed
            .coeffs()
            .iter()
            .zip(tser.coeffs())
            .filter(|(a, b)| QSqrt3::rational((*a).clone()) != **b)
            .count();
        let mut v = vec![check("route mismatches to order 100", mism as f64, mism == 0)];
        let c = closed.coeffs();
        v.push(check("theta(0) = 3/4", c[0].to_f64(), c[0] == q(3, 4)));
        v.push(check("theta(1) = 1/8", c[1].to_f64(), c[1] == q(1, 8)));
        let law = OffspringLaw::critical();
        let means: Vec<f64> = [10u64, 100, 1_000, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&k| law.partial_mean(k))
            .collect();
        let increasing = means.windows(2).all(|w| w[1] > w[0]) && means.iter().all(|&m| m < 1.0);
        let last = *means.last().expect("nonempty");
        v.push(check("partial means increase below 1", last, increasing));
        v.push(check("1 - partial mean at 1e6", 1.0 - last, 1.0 - last < 5e-3));
        Ok((
            format!(
                "{mism} mismatches to order 100, theta(0)={}, theta(1)={}, partial means {means:.6?}",
                c[0], c[1]
            ),
            v,
        ))
    })
}

/// 4. Closed iterate against `r`-fold composition.
pub fn criterion_4() -> CriterionReport {
    run(4, "iterate identity", || {
        let mut worst: f64 = 0.0;
        for &t in &[0.3, 0.6, 0.9, 1.0] {
            let pair = CriticalPair::from_t(t).map_err(err)?;
            for r in 0..=30 {
                for i in 0..50 {
                    let u = 0.98 * i as f64 / 49.0;
                    let a = skeleton::iterate_closed(&pair, r, u).map_err(err)?;
                    let b = skeleton::iterate_compose(&pair, r, u).map_err(err)?;
                    worst = worst.max((a - b).abs());
                }
            }
        }
        let v = vec![check("max |closed - composed|", worst, worst <= 1e-10)];
        Ok((
            format!("max deviation {worst:.2e} over t in {{0.3,0.6,0.9,1}}, r <= 30, 50 u-points (tol 1e-10)"),
            v,
        ))
    })
}

/// 5. Perimeter law: normalization and the coefficient route.
pub fn criterion_5() -> CriterionReport {
    run(5, "perimeter law", || {
        let mut v = Vec::new();
        let mut worst: f64 = 0.0;
        for r in 1..=20u64 {
            let pmf = laws::perimeter_pmf(r, 40_000).map_err(err)?;
            let d = (pmf.total() - 1.0).abs();
            worst = worst.max(d);
            v.push(check(
                format!("r={r}: |sum - 1| (tail bound {:.1e})", pmf.tail_bound),
                d,
                d <= 1e-10,
            ));
        }
        let mut mism = 0;
        for r in 1..=6u64 {
            for qq in 1..=30 {
                if laws::perimeter_prob_coefficient_route(r, qq).map_err(err)? != laws::perimeter_prob_exact(r, qq) {
                    mism += 1;
                }
            }
        }
        v.push(check(
            "coefficient route mismatches (r<=6, q<=30)",
            mism as f64,
            mism == 0,
        ));
        Ok((
            format!("max |sum-1| = {worst:.2e} for r <= 20; {mism} exact mismatches for r <= 6, q <= 30"),
            v,
        ))
    })
}

/// 6. Two routes to the hull GF on a 20 × 20 grid.
pub fn criterion_6() -> CriterionReport {
    run(6, "hull GF two routes", || {
        let rs: [u64; 20] = [0, 1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 35, 40, 45, 50, 75, 100];
        let mut worst: f64 = 0.0;
        for i in 0..20 {
            let s = 0.05 + (0.999 - 0.05) * i as f64 / 19.0;
            for &r in &rs {
                let a = laws::hull_volume_gf_closed(s, r).map_err(err)?;
                let b = laws::hull_volume_gf_iterate(s, r).map_err(err)?;
                worst = worst.max((a - b).abs());
            }
        }
        let v = vec![check("max |closed - iterate|", worst, worst <= 1e-12)];
        Ok((
            format!("max deviation {worst:.2e} on 20x20 grid s in [0.05,0.999], r in [0,100] (tol 1e-12)"),
            v,
        ))
    })
}

/// 7. Monte Carlo hull volumes and perimeters.
pub fn criterion_7(cfg: &AcceptanceConfig, sampler: &Sampler) -> CriterionReport {
    run(7, "Monte Carlo conformance", || {
        let mut v = Vec::new();
        let mut worst_z: f64 = 0.0;
        let mut min_p: f64 = 1.0;
        for r in 1..=4u64 {
            let draws = run_trials(cfg.seed, cfg.trials, cfg.workers, |_, rng| {
                sampler.sample_hull(r, rng).map(|h| (h.trajectory.last(), h.volume))
            })
            .map_err(err)?;
            let vols: Vec<u64> = draws.iter().map(|d| d.1).collect();
            for &s in &[0.5, 0.9, 0.99] {
                let est = estimate_gf(&vols, s, cfg.seed).map_err(err)?;
                let exact = laws::hull_volume_gf_closed(s, r).map_err(err)?;
                let z = est.z_score(exact);
                worst_z = worst_z.max(z.abs());
                v.push(Verdict::new(
                    format!(
                        "r={r} s={s}: E[s^V] {:.6} vs {:.6} (SE {:.1e})",
                        est.estimate, exact, est.std_error
                    ),
                    z,
                    None,
                    est.within(exact, 3.0),
                    Some(cfg.seed),
                ));
            }
            if r <= 3 {
                let hist = histogram(draws.iter().map(|d| d.0));
                let pmf = laws::perimeter_pmf(r, hist.len() + 200).map_err(err)?;
                let mut by_q = vec![0.0];
                by_q.extend_from_slice(&pmf.probs);
                let c = chi_square_pmf(&hist, &by_q, 5.0).map_err(err)?;
                min_p = min_p.min(c.p_value);
                v.push(Verdict::new(
                    format!("r={r}: perimeter chi-square ({} dof)", c.dof),
                    c.statistic,
                    Some(c.p_value),
                    c.p_value > P_FLOOR,
                    Some(cfg.seed),
                ));
            }
        }
        Ok((
            format!(
                "{} trials, seed {}: max |z| = {worst_z:.2} (tol 3), min perimeter p = {min_p:.3} (floor 1e-3)",
                cfg.trials, cfg.seed
            ),
            v,
        ))
    })
}

/// 8. Mixture identity and Chapman–Kolmogorov.
pub fn criterion_8() -> CriterionReport {
    run(8, "layer and mixture identities", || {
        let mut v = Vec::new();
        let mut worst_mix: f64 = 0.0;
        for &(s, r) in &[(0.5, 1u64), (0.9, 2), (0.99, 3), (0.999, 5)] {
            let qmax = 60_000;
            let pmf = laws::perimeter_pmf(r, qmax).map_err(err)?;
            let mut mix = 0.0;
            for qq in 1..=qmax {
                let p = pmf.prob(qq);
                if p < 1e-300 {
                    break;
                }
                mix += p * laws::layer_volume_gf(s, r, 1, qq).map_err(err)?;
            }
            let exact = laws::hull_volume_gf_closed(s, r).map_err(err)?;
            let d = (mix - exact).abs();
            worst_mix = worst_mix.max(d);
            v.push(check(format!("mixture s={s} r={r}"), d, d <= 1e-8));
        }
        let mut worst_ck: f64 = 0.0;
        let mmax = 400;
        for &p in &[1usize, 2, 3, 5] {
            let first = laws::perimeter_transition_row(p, 1, mmax).map_err(err)?;
            let dropped = 1.0 - first.iter().sum::<f64>();
            for &qq in &[1usize, 2, 5, 10] {
                let mut two = 0.0;
                for (m, &pm) in first.iter().enumerate() {
                    if pm < 1e-20 {
                        continue;
                    }
                    two += pm * laws::perimeter_transition(m + 1, qq, 1).map_err(err)?;
                }
                let direct = laws::perimeter_transition(p, qq, 2).map_err(err)?;
                let d = (two - direct).abs();
                worst_ck = worst_ck.max(d);
                v.push(check(
                    format!("Chapman-Kolmogorov p={p} q={qq} (dropped mass {dropped:.1e})"),
                    d,
                    d <= 1e-8,
                ));
            }
        }
        Ok((
            format!(
                "max mixture deviation {worst_mix:.2e}, max Chapman-Kolmogorov deviation {worst_ck:.2e} (tol 1e-8)"
            ),
            v,
        ))
    })
}

/// 9. Slices: single arc, brute force, Monte Carlo.
pub fn criterion_9(cfg: &AcceptanceConfig, sampler: &Sampler) -> CriterionReport {
    run(9, "slices", || {
        let mut v = Vec::new();
        let mut worst_one: f64 = 0.0;
        for &(s, r, qq) in &[
            (0.5, 1u64, 1usize),
            (0.8, 1, 3),
            (0.9, 2, 4),
            (0.99, 5, 20),
            (0.9999, 20, 300),
        ] {
            let slice = laws::slice_gf(r, qq, &[qq], &[s]).map_err(err)?;
            let cond = laws::hull_volume_gf_conditional(s, r, qq).map_err(err)?;
            let layer = laws::layer_volume_gf(s, r, 1, qq).map_err(err)?;
            let d = (s * slice - cond).abs().max((s * slice - layer).abs());
            worst_one = worst_one.max(d);
            v.push(check(format!("n=1 s={s} r={r} q={qq}"), d, d <= 1e-12));
        }
        let cases: [(&[usize], &[f64]); 8] = [
            (&[1], &[0.7]),
            (&[1, 1], &[0.8, 0.9]),
            (&[2], &[0.6]),
            (&[1, 2], &[0.8, 0.9]),
            (&[2, 1], &[0.5, 0.95]),
            (&[1, 1, 1], &[0.7, 0.8, 0.9]),
            (&[3], &[0.85]),
            (&[1, 2], &[0.99, 0.3]),
        ];
        let mut worst_bf: f64 = 0.0;
        for (arcs, vals) in cases {
            let qq = arcs.iter().sum();
            let c = oracle::slice_gf_bruteforce(1, qq, arcs, vals, 0, 1200).map_err(err)?;
            let exact = laws::slice_gf(1, qq, arcs, vals).map_err(err)?;
            let d = (c.value - exact).abs();
            worst_bf = worst_bf.max(d);
            v.push(check(
                format!(
                    "brute force r=1 arcs {arcs:?} s {vals:?} (certified {:.1e})",
                    c.error_bound
                ),
                d,
                c.error_bound <= 1e-8 && d <= 1e-8 + c.error_bound,
            ));
        }
        let arcs = [1u64, 3];
        let s = [0.9, 0.95];
        let draws = run_trials(cfg.seed, cfg.trials, cfg.workers, |_, rng| {
            sampler.sample_slices(2, 4, &arcs, rng).map(|x| x.volumes)
        })
        .map_err(err)?;
        let est = estimate_joint_gf(&draws, &s, cfg.seed).map_err(err)?;
        let exact = laws::slice_gf(2, 4, &[1, 3], &s).map_err(err)?;
        let z = est.z_score(exact);
        v.push(Verdict::new(
            format!(
                "MC slices r=2 q=4 arcs (1,3) s {s:?}: {:.6} vs {:.6}",
                est.estimate, exact
            ),
            z,
            None,
            est.within(exact, 3.0),
            Some(cfg.seed),
        ));
        Ok((
            format!("n=1 max deviation {worst_one:.1e} (tol 1e-12); brute force max deviation {worst_bf:.1e} (tol 1e-8); MC z = {z:.2}"),
            v,
        ))
    })
}

/// 10. Scaling limits along `R ∈ {25, 50, 100, 200}`.
pub fn criterion_10() -> CriterionReport {
    run(10, "scaling limits", || {
        let mut v = Vec::new();
        let mut parts = Vec::new();
        let ladders = [
            (
                "hull (lambda,x)=(1,1)",
                asymptotics::hull_ladder(1.0, 1.0, &LADDER).map_err(err)?,
            ),
            (
                "conditioned hull (lambda,x,ell)=(1,1,1)",
                asymptotics::hull_cond_ladder(1.0, 1.0, 1.0, &LADDER).map_err(err)?,
            ),
            (
                "slices x=1 ell=(0.5,0.5) lambda=(1,2)",
                asymptotics::slice_ladder(1.0, &[0.5, 0.5], &[1.0, 2.0], &LADDER).map_err(err)?,
            ),
        ];
        for (name, rows) in ladders {
            let gaps: Vec<f64> = rows.iter().map(|r| r.rel_gap).collect();
            let last = *gaps.last().expect("nonempty");
            v.push(check(
                format!("{name}: gaps decrease {gaps:.4?}"),
                last,
                gaps_decrease(&gaps),
            ));
            v.push(check(format!("{name}: gap at R=200 < 5%"), last, last < 0.05));
            parts.push(format!(
                "{} {:.2}%",
                name.split(' ').next().unwrap_or(name),
                100.0 * last
            ));
        }
        Ok((format!("gaps at R=200: {}", parts.join(", ")), v))
    })
}

/// 11. Jump law at `n ∈ {20, 40, 60}`.
pub fn criterion_11() -> CriterionReport {
    run(11, "jump law", || {
        let rows = asymptotics::hulldiff_ladder(1.0, 0.3, 1.0, &[20, 40, 60]).map_err(err)?;
        let gaps: Vec<f64> = rows.iter().map(|r| r.rel_gap).collect();
        let v = vec![
            check(format!("gaps decrease {gaps:.4?}"), gaps[2], gaps_decrease(&gaps)),
            check("gap at n=60 < 5%", gaps[2], gaps[2] < 0.05),
        ];
        Ok((
            format!(
                "relative gaps {:.2}% / {:.2}% / {:.2}% at n = 20/40/60",
                100.0 * gaps[0],
                100.0 * gaps[1],
                100.0 * gaps[2]
            ),
            v,
        ))
    })
}

/// 12. Which closed form the density's transform follows.
pub fn criterion_12() -> CriterionReport {
    run(12, "xi transform", || {
        let mut v = Vec::new();
        let mut names = Vec::new();
        for &l in &[0.25, 1.0, 4.0] {
            let x = asymptotics::xi_laplace(l).map_err(err)?;
            let m = x.matching(1e-6);
            names.push(format!(
                "lambda={l}: {} (dev sqrt {:.1e}, dev printed {:.1e})",
                m.unwrap_or("none"),
                x.deviation_sqrt,
                x.deviation_linear
            ));
            v.push(check(
                format!("lambda={l}: exactly one candidate within 1e-6"),
                x.deviation_sqrt.min(x.deviation_linear),
                m.is_some(),
            ));
        }
        let mut worst: f64 = 0.0;
        for &(l, d) in &[(1.0, 1.0), (1.0, 0.3), (0.25, 2.0), (4.0, 0.5)] {
            let a = asymptotics::hulldiff_limit(l, d).map_err(err)?;
            let b = asymptotics::xi_laplace(4.0 / 3.0 * d * d * l).map_err(err)?.quadrature;
            worst = worst.max((a - b).abs());
            v.push(check(
                format!("hulldiff_limit({l},{d}) vs transform at (4/3)delta^2 lambda"),
                (a - b).abs(),
                (a - b).abs() <= 1e-6,
            ));
        }
        Ok((
            format!("{}; hulldiff identity max deviation {worst:.1e}", names.join("; ")),
            v,
        ))
    })
}

/// 13. Identical output for any worker count.
pub fn criterion_13(cfg: &AcceptanceConfig) -> CriterionReport {
    run(13, "determinism", || {
        let trials = 2000;
        let dump = |workers: usize| -> Result<String, String> {
            let sampler = Sampler::new();
            let hulls = run_trials(cfg.seed, trials, workers, |_, rng| sampler.sample_hull(3, rng)).map_err(err)?;
            let slices = run_trials(cfg.seed, trials, workers, |_, rng| {
                sampler.sample_slices(2, 4, &[1, 3], rng)
            })
            .map_err(err)?;
            serde_json::to_string(&(hulls, slices)).map_err(err)
        };
        let base = dump(1)?;
        let mut v = Vec::new();
        for w in [1usize, 2, 4, cfg.workers.max(1), 7] {
            let other = dump(w)?;
            v.push(check(format!("workers={w} identical to workers=1"), 0.0, other == base));
        }
        Ok((
            format!(
                "{trials} hull and slice samples, {} bytes, identical across worker counts 1/2/4/{}/7",
                base.len(),
                cfg.workers
            ),
            v,
        ))
    })
}

/// All criteria in order; Monte Carlo criteria share one warm sampler.
pub fn run_all(cfg: &AcceptanceConfig) -> Vec<CriterionReport> {
    let sampler = Sampler::new();
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(cfg, &sampler),
        criterion_8(),
        criterion_9(cfg, &sampler),
        criterion_10(),
        criterion_11(),
        criterion_12(),
        criterion_13(cfg),
    ]
}
