//! `uipt-lab`: batch front end for the exact laws, the sampler, the scaling
//! limits and the acceptance suite.

mod cache;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use output::{Envelope, Format, Payload, Table};
use uipt_core::asymptotics::{self, AsymptoticsError, LadderRow, LADDER};
use uipt_core::enumeration::{self, EnumError, TriangulationCounts};
use uipt_core::laws::{self, LawError};
use uipt_core::sampler::{run_trials, SamplerError};
use uipt_core::skeleton::{self, CriticalPair, SkeletonError};
use uipt_core::verify::{self, acceptance, VerifyError};
use uipt_core::{OffspringLaw, Ring, Sampler, Series, SeriesError, Q};

#[derive(Parser, Debug)]
#[command(
    name = "uipt-lab",
    version,
    about = "Hull, layer and slice laws of the UIPT: exact, sampled and asymptotic"
)]
struct Cli {
    #[command(subcommand)]
    group: Group,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Exact rationals (printed as p/q strings) or f64.
    #[arg(long, global = true, value_enum, default_value_t = Precision::Float)]
    precision: Precision,
    /// Worker threads for Monte Carlo; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Tail mass allowed when a distribution is truncated adaptively.
    #[arg(long = "tail-eps", global = true, default_value_t = 1e-12)]
    tail_eps: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
enum Precision {
    Exact,
    Float,
}

#[derive(Subcommand, Debug)]
enum Group {
    /// Generating functions and counts.
    #[command(subcommand)]
    Gf(GfCmd),
    /// Exact laws of perimeters and volumes.
    #[command(subcommand)]
    Law(LawCmd),
    /// Monte Carlo samples from the skeleton decomposition.
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Scaling limits and finite-size comparisons.
    #[command(subcommand)]
    Asympt(AsymptCmd),
    /// Acceptance suite.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand, Debug)]
enum GfCmd {
    /// Offspring law θ(0..=order); critical unless --s is given.
    Theta {
        #[arg(long, default_value_t = 20)]
        order: usize,
        #[arg(long)]
        s: Option<f64>,
    },
    /// Triangulation counts |T_{n,p}| for n ≤ n-max, 1 ≤ p ≤ p.
    Counts {
        #[arg(long = "n-max", default_value_t = 10)]
        n_max: usize,
        #[arg(long, default_value_t = 3)]
        p: usize,
    },
    /// Coefficients of the one-vertex-boundary series h.
    H {
        #[arg(long, default_value_t = 20)]
        order: usize,
    },
    /// Coefficients of the boundary-p disk series T_p.
    Boundary {
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 20)]
        order: usize,
    },
}

#[derive(Subcommand, Debug)]
enum LawCmd {
    /// Hull perimeter pmf P(|∂B_r| = q), q ≤ q-max.
    Perimeter {
        #[arg(long)]
        r: u64,
        #[arg(long = "q-max", default_value_t = 50)]
        q_max: usize,
    },
    /// Perimeter transition P(P_r = q | P_0 = p).
    Transition {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        r: u64,
    },
    /// E[s^|B_r|] for each s.
    HullGf {
        #[arg(long)]
        r: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<f64>,
    },
    /// P(|B_r| = n) for n ≤ n-max.
    HullPmf {
        #[arg(long)]
        r: u64,
        #[arg(long = "n-max", default_value_t = 20)]
        n_max: usize,
    },
    /// Layer volume GF given perimeters p at the bottom and q at the top.
    LayerGf {
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<f64>,
        #[arg(long)]
        r: u64,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
    },
    /// Joint GF of shifted slice volumes, one s per arc.
    SliceGf {
        #[arg(long)]
        r: u64,
        #[arg(long)]
        q: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        arcs: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<f64>,
    },
}

#[derive(Args, Debug, Clone)]
struct Mc {
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum SampleCmd {
    /// Hull samples (perimeter and volume); --q conditions on the perimeter.
    Hull {
        #[arg(long)]
        r: u64,
        #[arg(long)]
        q: Option<u64>,
        /// Also estimate E[s^V] at these points.
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
        #[command(flatten)]
        mc: Mc,
    },
    /// Shifted slice volumes for boundary arcs of a hull with perimeter q.
    Slices {
        #[arg(long)]
        r: u64,
        #[arg(long)]
        q: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        arcs: Vec<u64>,
        /// One value per arc: also estimate the joint GF.
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
        #[command(flatten)]
        mc: Mc,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum LadderKind {
    Hull,
    HullCond,
    Slice,
    Hulldiff,
}

#[derive(Subcommand, Debug)]
enum AsymptCmd {
    /// Limit of E[exp(−λ|B_{xR}|/R⁴)].
    HullLimit {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        x: f64,
    },
    /// Same, given perimeter ℓR².
    HullCondLimit {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        ell: f64,
    },
    /// Joint slice limit; --arcs are the fractions ℓ_i, one λ per arc.
    SliceLimit {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        ell: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        arcs: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
    },
    /// Jump law: limit, plus finite-n comparisons for each --n.
    Hulldiff {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
    },
    /// Laplace transform of ξ: quadrature and both closed forms.
    Xi {
        #[arg(long)]
        lambda: f64,
    },
    /// Finite-size ladder against a limit.
    Ladder {
        #[arg(long, value_enum)]
        kind: LadderKind,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[arg(long, value_delimiter = ',')]
        arcs: Vec<f64>,
        /// Scales R (or n for hulldiff).
        #[arg(long, value_delimiter = ',')]
        n: Vec<u64>,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// Run all acceptance criteria; exits 1 if any fails.
    All {
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

enum CliError {
    /// Bad parameters: exit 2.
    Usage(String),
    /// Computation failed: exit 1.
    Compute(String),
    /// Ran to completion but reported failure (verify): exit 1, output kept.
    Failed(Box<Envelope>),
}

macro_rules! classify {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                if is_domain(&e) {
                    CliError::Usage(e.to_string())
                } else {
                    CliError::Compute(e.to_string())
                }
            }
        }
    )*};
}

classify!(
    LawError,
    EnumError,
    SkeletonError,
    SamplerError,
    AsymptoticsError,
    SeriesError,
    VerifyError
);

trait DomainError {
    fn domain(&self) -> bool;
}

fn is_domain(e: &impl DomainError) -> bool {
    e.domain()
}

impl DomainError for LawError {
    fn domain(&self) -> bool {
        match self {
            LawError::Domain(_) => true,
            LawError::Skeleton(e) => e.domain(),
            LawError::Enumeration(e) => e.domain(),
            _ => false,
        }
    }
}
impl DomainError for EnumError {
    fn domain(&self) -> bool {
        matches!(self, EnumError::Domain(_))
    }
}
impl DomainError for SkeletonError {
    fn domain(&self) -> bool {
        matches!(self, SkeletonError::Domain(_))
    }
}
impl DomainError for SamplerError {
    fn domain(&self) -> bool {
        match self {
            SamplerError::Domain(_) => true,
            SamplerError::Enumeration(e) => e.domain(),
            _ => false,
        }
    }
}
impl DomainError for AsymptoticsError {
    fn domain(&self) -> bool {
        match self {
            AsymptoticsError::Domain(_) => true,
            AsymptoticsError::Law(e) => e.domain(),
            AsymptoticsError::Skeleton(e) => e.domain(),
            _ => false,
        }
    }
}
impl DomainError for SeriesError {
    fn domain(&self) -> bool {
        false
    }
}
impl DomainError for VerifyError {
    fn domain(&self) -> bool {
        false
    }
}

type Res<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_s(s: &[f64]) -> Res<()> {
    match s.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(usage(format!("s = {v} must lie in [0, 1]"))),
        None => Ok(()),
    }
}

fn check_arcs<T: Copy + Into<u64>>(arcs: &[T], q: u64) -> Res<()> {
    let sum: u64 = arcs.iter().map(|&a| a.into()).sum();
    if arcs.iter().any(|&a| a.into() == 0) {
        return Err(usage("arcs must be positive"));
    }
    if sum != q {
        return Err(usage(format!("arcs sum to {sum}, not q = {q}")));
    }
    Ok(())
}

fn float_only(common: &Common, op: &str) -> Res<()> {
    if common.precision == Precision::Exact {
        return Err(usage(format!("{op} has no exact mode; use --precision float")));
    }
    Ok(())
}

fn workers(common: &Common) -> Res<usize> {
    match common.workers {
        Some(0) => Err(usage("--workers must be at least 1")),
        Some(k) => Ok(k),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Echoed configuration: the subcommand's own flags plus format, precision
/// and tail epsilon. The worker count is left out on purpose so sampler
/// output is byte-identical across `--workers`.
fn params(common: &Common, own: Value) -> Value {
    let mut m = match own {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    m.insert("format".into(), json!(common.format));
    m.insert("precision".into(), json!(common.precision));
    m.insert("tail_eps".into(), json!(common.tail_eps));
    Value::Object(m)
}

fn exact_or_float<R: Ring>(x: &R, precision: Precision) -> Value {
    match precision {
        Precision::Exact => json!(x.repr()),
        Precision::Float => json!(x.to_f64()),
    }
}

fn series_table<R: Ring>(s: &Series<R>, header: &str, precision: Precision) -> Table {
    let mut t = Table::new(&["k", header]);
    for (k, c) in s.coeffs().iter().enumerate() {
        t.push(vec![json!(k), exact_or_float(c, precision)]);
    }
    t
}

fn envelope(op: &str, params: Value, payload: Payload) -> Envelope {
    Envelope {
        op: op.to_string(),
        params,
        payload,
    }
}

fn gf(cmd: &GfCmd, common: &Common) -> Res<Envelope> {
    let pr = common.precision;
    match cmd {
        GfCmd::Theta { order, s } => {
            let p = params(common, json!({"order": order, "s": s}));
            let t = match s {
                None => {
                    let th = cache::series("theta", *order, || skeleton::phi_coeffs(*order))?;
                    series_table(&th, "probability", pr)
                }
                Some(s) => {
                    check_s(&[*s])?;
                    float_only(common, "gf theta --s")?;
                    let law = OffspringLaw::new(CriticalPair::from_s(*s)?);
                    let mut t = Table::new(&["k", "probability"]);
                    for (k, v) in law.theta_vec(*order).into_iter().enumerate() {
                        t.push(vec![json!(k), json!(v)]);
                    }
                    t
                }
            };
            Ok(envelope("gf theta", p, Payload::Table("pmf", t)))
        }
        GfCmd::Counts { n_max, p } => {
            if *p == 0 {
                return Err(usage("--p must be at least 1"));
            }
            let counts = TriangulationCounts::new();
            counts.warm(*n_max, *p)?;
            let mut t = Table::new(&["n", "p", "count"]);
            for pp in 1..=*p {
                for n in 0..=*n_max {
                    t.push(vec![json!(n), json!(pp), json!(counts.count(n, pp)?.to_string())]);
                }
            }
            let prm = params(common, json!({"n_max": n_max, "p": p}));
            Ok(envelope("gf counts", prm, Payload::Table("counts", t)))
        }
        GfCmd::H { order } => {
            let h = cache::series::<Q, SeriesError>("h", *order, || Ok(enumeration::h_series(*order)))?;
            let prm = params(common, json!({"order": order}));
            Ok(envelope(
                "gf h",
                prm,
                Payload::Table("coefficients", series_table(&h, "coefficient", pr)),
            ))
        }
        GfCmd::Boundary { p, order } => {
            let s = cache::series::<Q, EnumError>(&format!("boundary_{p}"), *order, || {
                enumeration::boundary_series(*p, *order)
            })?;
            let prm = params(common, json!({"p": p, "order": order}));
            Ok(envelope(
                "gf boundary",
                prm,
                Payload::Table("coefficients", series_table(&s, "coefficient", pr)),
            ))
        }
    }
}

fn law(cmd: &LawCmd, common: &Common) -> Res<Envelope> {
    let pr = common.precision;
    match cmd {
        LawCmd::Perimeter { r, q_max } => {
            if *q_max == 0 {
                return Err(usage("--q-max must be at least 1"));
            }
            let prm = params(common, json!({"r": r, "q_max": q_max}));
            let mut t = Table::new(&["k", "probability"]);
            let mut extra = Map::new();
            match pr {
                Precision::Exact => {
                    for (i, v) in laws::perimeter_pmf_exact(*r, *q_max).iter().enumerate() {
                        t.push(vec![json!(i + 1), json!(v.repr())]);
                    }
                }
                Precision::Float => {
                    let pmf = laws::perimeter_pmf(*r, *q_max)?;
                    for (i, v) in pmf.probs.iter().enumerate() {
                        t.push(vec![json!(i + 1), json!(v)]);
                    }
                    extra.insert("tail_bound".into(), json!(pmf.tail_bound));
                }
            }
            Ok(envelope("law perimeter", prm, Payload::TableWith("pmf", t, extra)))
        }
        LawCmd::Transition { p, q, r } => {
            let prm = params(common, json!({"p": p, "q": q, "r": r}));
            let v = match pr {
                Precision::Exact => json!(laws::perimeter_transition_exact(*p, *q, *r)?.repr()),
                Precision::Float => json!(laws::perimeter_transition(*p, *q, *r)?),
            };
            Ok(envelope("law transition", prm, Payload::Value(v)))
        }
        LawCmd::HullGf { r, s } => {
            check_s(s)?;
            float_only(common, "law hull-gf")?;
            let prm = params(common, json!({"r": r, "s": s}));
            let vals = s
                .iter()
                .map(|&x| laws::hull_volume_gf_closed(x, *r))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(envelope("law hull-gf", prm, Payload::Value(scalar_or_list(vals))))
        }
        LawCmd::HullPmf { r, n_max } => {
            let prm = params(common, json!({"r": r, "n_max": n_max}));
            let pmf = laws::hull_volume_pmf(*r, *n_max)?;
            let mut t = Table::new(&["k", "probability"]);
            for (n, (e, f)) in pmf.exact.iter().zip(&pmf.probs).enumerate() {
                let v = match pr {
                    Precision::Exact => json!(e.repr()),
                    Precision::Float => json!(f),
                };
                t.push(vec![json!(n), v]);
            }
            let mut extra = Map::new();
            extra.insert("partial_sum".into(), json!(pmf.partial_sum));
            Ok(envelope("law hull-pmf", prm, Payload::TableWith("pmf", t, extra)))
        }
        LawCmd::LayerGf { s, r, p, q } => {
            check_s(s)?;
            float_only(common, "law layer-gf")?;
            let prm = params(common, json!({"s": s, "r": r, "p": p, "q": q}));
            let vals = s
                .iter()
                .map(|&x| laws::layer_volume_gf(x, *r, *p, *q))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(envelope("law layer-gf", prm, Payload::Value(scalar_or_list(vals))))
        }
        LawCmd::SliceGf { r, q, arcs, s } => {
            check_s(s)?;
            check_arcs(arcs.iter().map(|&a| a as u64).collect::<Vec<_>>().as_slice(), *q as u64)?;
            if s.len() != arcs.len() {
                return Err(usage(format!("{} values of s for {} arcs", s.len(), arcs.len())));
            }
            float_only(common, "law slice-gf")?;
            let prm = params(common, json!({"r": r, "q": q, "arcs": arcs, "s": s}));
            let v = laws::slice_gf(*r, *q, arcs, s)?;
            Ok(envelope("law slice-gf", prm, Payload::Value(json!(v))))
        }
    }
}

fn scalar_or_list(vals: Vec<f64>) -> Value {
    if vals.len() == 1 {
        json!(vals[0])
    } else {
        json!(vals)
    }
}

fn sample(cmd: &SampleCmd, common: &Common) -> Res<Envelope> {
    float_only(common, "sample")?;
    let k = workers(common)?;
    let sampler = Sampler::new();
    match cmd {
        SampleCmd::Hull { r, q, s, mc } => {
            check_s(s)?;
            if *r == 0 {
                return Err(usage("--r must be at least 1 for sampling"));
            }
            if *q == Some(0) {
                return Err(usage("--q must be at least 1"));
            }
            let prm = params(
                common,
                json!({"r": r, "q": q, "s": s, "trials": mc.trials, "seed": mc.seed}),
            );
            let hulls = run_trials(mc.seed, mc.trials, k, |_, rng| match q {
                Some(q) => sampler.sample_hull_conditioned(*r, *q, rng),
                None => sampler.sample_hull(*r, rng),
            })?;
            let mut t = Table::new(&["trial", "r", "P_r", "V"]);
            for (i, h) in hulls.iter().enumerate() {
                t.push(vec![json!(i), json!(r), json!(h.trajectory.last()), json!(h.volume)]);
            }
            let mut extra = Map::new();
            if !s.is_empty() {
                let volumes: Vec<u64> = hulls.iter().map(|h| h.volume).collect();
                let mut rows = Vec::new();
                for &x in s {
                    let est = verify::estimate_gf(&volumes, x, mc.seed)?;
                    let exact = match q {
                        Some(q) => laws::hull_volume_gf_conditional(x, *r, *q as usize)?,
                        None => laws::hull_volume_gf_closed(x, *r)?,
                    };
                    rows.push(json!({"s": x, "estimate": est.estimate, "std_error": est.std_error,
                        "exact": exact, "z": est.z_score(exact)}));
                }
                extra.insert("gf".into(), Value::Array(rows));
            }
            Ok(envelope("sample hull", prm, Payload::TableWith("samples", t, extra)))
        }
        SampleCmd::Slices { r, q, arcs, s, mc } => {
            check_s(s)?;
            check_arcs(arcs, *q)?;
            if !s.is_empty() && s.len() != arcs.len() {
                return Err(usage(format!("{} values of s for {} arcs", s.len(), arcs.len())));
            }
            let prm = params(
                common,
                json!({"r": r, "q": q, "arcs": arcs, "s": s, "trials": mc.trials, "seed": mc.seed}),
            );
            let slices = run_trials(mc.seed, mc.trials, k, |_, rng| sampler.sample_slices(*r, *q, arcs, rng))?;
            let mut header = vec!["trial".to_string(), "r".into(), "P_r".into(), "V".into()];
            header.extend((1..=arcs.len()).map(|i| format!("slice_{i}")));
            let mut t = Table {
                header,
                rows: Vec::new(),
            };
            for (i, sl) in slices.iter().enumerate() {
                let mut row = vec![
                    json!(i),
                    json!(r),
                    json!(sl.hull.trajectory.last()),
                    json!(sl.hull.volume),
                ];
                row.extend(sl.volumes.iter().map(|v| json!(v)));
                t.push(row);
            }
            let mut extra = Map::new();
            if !s.is_empty() {
                let vols: Vec<Vec<u64>> = slices.iter().map(|sl| sl.volumes.clone()).collect();
                let est = verify::estimate_joint_gf(&vols, s, mc.seed)?;
                let arcs_us: Vec<usize> = arcs.iter().map(|&a| a as usize).collect();
                let exact = laws::slice_gf(*r, *q as usize, &arcs_us, s)?;
                extra.insert(
                    "gf".into(),
                    json!({"s": s, "estimate": est.estimate, "std_error": est.std_error,
                        "exact": exact, "z": est.z_score(exact)}),
                );
            }
            Ok(envelope("sample slices", prm, Payload::TableWith("samples", t, extra)))
        }
    }
}

fn ladder_table(rows: &[LadderRow]) -> Table {
    let mut t = Table::new(&["R", "finite", "limit", "rel_gap"]);
    for r in rows {
        t.push(vec![json!(r.scale), json!(r.finite), json!(r.limit), json!(r.rel_gap)]);
    }
    t
}

fn asympt(cmd: &AsymptCmd, common: &Common) -> Res<Envelope> {
    float_only(common, "asympt")?;
    match cmd {
        AsymptCmd::HullLimit { lambda, x } => {
            let prm = params(common, json!({"lambda": lambda, "x": x}));
            let v = asymptotics::hull_limit(*lambda, *x)?;
            Ok(envelope("asympt hull-limit", prm, Payload::Value(json!(v))))
        }
        AsymptCmd::HullCondLimit { lambda, x, ell } => {
            let prm = params(common, json!({"lambda": lambda, "x": x, "ell": ell}));
            let v = asymptotics::hull_cond_limit(*lambda, *x, *ell)?;
            Ok(envelope("asympt hull-cond-limit", prm, Payload::Value(json!(v))))
        }
        AsymptCmd::SliceLimit { x, ell, arcs, lambda } => {
            let prm = params(common, json!({"x": x, "ell": ell, "arcs": arcs, "lambda": lambda}));
            let v = asymptotics::slice_limit(*x, *ell, arcs, lambda)?;
            Ok(envelope("asympt slice-limit", prm, Payload::Value(json!(v))))
        }
        AsymptCmd::Hulldiff { lambda, delta, ell, n } => {
            let prm = params(common, json!({"lambda": lambda, "delta": delta, "ell": ell, "n": n}));
            let limit = asymptotics::hulldiff_limit(*lambda, *delta)?;
            if n.is_empty() {
                return Ok(envelope("asympt hulldiff", prm, Payload::Value(json!(limit))));
            }
            let mut t = Table::new(&["n", "p", "q", "finite", "limit", "rel_gap"]);
            for c in asymptotics::hulldiff_ladder(*ell, *delta, *lambda, n)? {
                t.push(vec![
                    json!(c.n),
                    json!(c.p),
                    json!(c.q),
                    json!(c.finite),
                    json!(c.limit),
                    json!(c.rel_gap),
                ]);
            }
            let mut extra = Map::new();
            extra.insert("value".into(), json!(limit));
            Ok(envelope("asympt hulldiff", prm, Payload::TableWith("ladder", t, extra)))
        }
        AsymptCmd::Xi { lambda } => {
            let prm = params(common, json!({"lambda": lambda}));
            let xi = asymptotics::xi_laplace(*lambda)?;
            let mut v = serde_json::to_value(&xi).expect("serializable");
            v["matching"] = json!(xi.matching(1e-6));
            Ok(envelope("asympt xi", prm, Payload::Value(v)))
        }
        AsymptCmd::Ladder {
            kind,
            lambda,
            x,
            ell,
            delta,
            arcs,
            n,
        } => {
            let scales: Vec<u64> = if n.is_empty() {
                match kind {
                    LadderKind::Hulldiff => vec![20, 40, 60],
                    _ => LADDER.to_vec(),
                }
            } else {
                n.clone()
            };
            let prm = params(
                common,
                json!({"kind": kind, "lambda": lambda, "x": x, "ell": ell, "delta": delta, "arcs": arcs, "n": scales}),
            );
            let one = |name: &str| -> Res<f64> {
                match lambda.as_slice() {
                    [l] => Ok(*l),
                    _ => Err(usage(format!("{name} ladder takes a single --lambda"))),
                }
            };
            let t = match kind {
                LadderKind::Hull => ladder_table(&asymptotics::hull_ladder(one("hull")?, *x, &scales)?),
                LadderKind::HullCond => {
                    ladder_table(&asymptotics::hull_cond_ladder(one("hull-cond")?, *x, *ell, &scales)?)
                }
                LadderKind::Slice => {
                    if arcs.len() != lambda.len() {
                        return Err(usage("slice ladder needs one --lambda per --arcs entry"));
                    }
                    ladder_table(&asymptotics::slice_ladder(*x, arcs, lambda, &scales)?)
                }
                LadderKind::Hulldiff => {
                    let mut t = Table::new(&["R", "finite", "limit", "rel_gap"]);
                    for c in asymptotics::hulldiff_ladder(*ell, *delta, one("hulldiff")?, &scales)? {
                        t.push(vec![json!(c.n), json!(c.finite), json!(c.limit), json!(c.rel_gap)]);
                    }
                    t
                }
            };
            Ok(envelope("asympt ladder", prm, Payload::Table("ladder", t)))
        }
    }
}

fn verify_all(cmd: &VerifyCmd, common: &Common) -> Res<Envelope> {
    let VerifyCmd::All { trials, seed } = cmd;
    let cfg = acceptance::AcceptanceConfig {
        seed: *seed,
        trials: *trials,
        workers: workers(common)?,
    };
    let prm = params(common, json!({"trials": trials, "seed": seed}));
    let reports = acceptance::run_all(&cfg);
    for r in &reports {
        eprintln!("{}", r.line());
    }
    let mut t = Table::new(&["criterion", "pass", "title", "summary"]);
    for r in &reports {
        t.push(vec![json!(r.id), json!(r.pass), json!(r.title), json!(r.summary)]);
    }
    let all = reports.iter().all(|r| r.pass);
    let mut extra = Map::new();
    extra.insert("pass".into(), json!(all));
    extra.insert(
        "verdicts".into(),
        json!(reports.iter().flat_map(|r| r.verdicts.iter()).collect::<Vec<_>>()),
    );
    let env = envelope("verify all", prm, Payload::TableWith("criteria", t, extra));
    if all {
        Ok(env)
    } else {
        Err(CliError::Failed(Box::new(env)))
    }
}

fn run(cli: &Cli) -> Res<Envelope> {
    if !(cli.common.tail_eps > 0.0 && cli.common.tail_eps < 1.0) {
        return Err(usage("--tail-eps must lie in (0, 1)"));
    }
    match &cli.group {
        Group::Gf(c) => gf(c, &cli.common),
        Group::Law(c) => law(c, &cli.common),
        Group::Sample(c) => sample(c, &cli.common),
        Group::Asympt(c) => asympt(c, &cli.common),
        Group::Verify(c) => verify_all(c, &cli.common),
    }
}

fn emit(env: &Envelope, format: Format) -> bool {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match env.write(format, &mut lock).and_then(|_| lock.flush()) {
        Ok(()) => true,
        Err(e) => {
            eprintln!("uipt-lab: write failed: {e}");
            false
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(env) => {
            if emit(&env, cli.common.format) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Usage(m)) => {
            eprintln!("uipt-lab: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(m)) => {
            eprintln!("uipt-lab: computation failed: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Failed(env)) => {
            emit(&env, cli.common.format);
            eprintln!("uipt-lab: acceptance failed");
            ExitCode::from(1)
        }
    }
}
