//! One struct per subcommand: its own options (also accepted as config-file
//! keys) and a `run` that writes the artifact.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use billiard_walk::acceptance::{self, Budget, Outcome, Settings, CRITERIA};
use billiard_walk::exec::Exec;
use billiard_walk::mixing::{certify_rate, mixing_curve, quotient_equidistribution};
use billiard_walk::ray::{classify_direction, hit_rate, window_frequencies};
use billiard_walk::rng::RngStream;
use billiard_walk::stats::{
    almost_martingale_constant, empirical_moment_tensors, empirical_sigma, fourth_moment_ratio,
    functional_tests, gaussian_moment_tensor, growth_function, martingale_error,
    martingale_schedule, sigma_via_series,
};
use billiard_walk::walk::WalkModel;
use billiard_walk::Error;
use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{keys, overlay, read_config, resolve, Common, Experiment};

/// A command failure as reported on stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub hint: Option<String>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let degenerate = matches!(e.exit_code(), 2);
        Failure {
            code: e.exit_code() as u8,
            kind: e.kind(),
            message: e.to_string(),
            hint: degenerate.then(|| {
                "rerun with --jitter <seed> to perturb the direction off the tie".to_string()
            }),
        }
    }
}

fn io_failure(path: Option<&Path>, e: io::Error) -> Failure {
    Failure {
        code: 4,
        kind: "Io",
        message: match path {
            Some(p) => format!("{}: {e}", p.display()),
            None => e.to_string(),
        },
        hint: None,
    }
}

type CmdResult = Result<(), Failure>;

struct Ctx {
    exp: Experiment,
    exec: Exec,
    out: Option<PathBuf>,
    verify: bool,
}

fn prepare<O>(common: &Common, opts: &O) -> Result<(Ctx, O), Failure>
where
    O: Serialize + DeserializeOwned + Default,
{
    let file = match &common.config {
        Some(path) => {
            let mut allowed = keys::<Common>();
            allowed.extend(keys::<O>());
            read_config(path, &allowed)?
        }
        None => Map::new(),
    };
    let exp = resolve(common, &file)?;
    let opts = overlay(opts, &file)?;
    let exec = common.threads.map_or(Exec::Auto, Exec::with_threads);
    Ok((
        Ctx {
            exp,
            exec,
            out: common.out.clone(),
            verify: common.verify,
        },
        opts,
    ))
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| io_failure(Some(p), e))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// Writes `{experiment, <echo>, config, <results>}` as one JSON document.
fn emit<O: Serialize>(ctx: &Ctx, experiment: &str, opts: &O, results: Value) -> CmdResult {
    let mut doc = Map::new();
    doc.insert("experiment".into(), json!(experiment));
    doc.insert("preset".into(), json!(ctx.exp.preset));
    let echo = ctx.exp.echo();
    for (k, v) in &echo {
        doc.insert(k.clone(), v.clone());
    }
    doc.insert("b_unit".into(), json!(ctx.exp.b));
    let mut config = echo;
    if let Value::Object(o) = to_value(opts) {
        config.extend(o);
    }
    doc.insert("config".into(), Value::Object(config));
    if let Value::Object(r) = results {
        doc.extend(r);
    }
    let mut out = open_out(ctx.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &Value::Object(doc))
        .map_err(|e| io_failure(None, e.into()))?;
    writeln!(out)
        .and_then(|_| out.flush())
        .map_err(|e| io_failure(ctx.out.as_deref(), e))
}

/// Runs the listed criteria at reduced budget; any failure is an error.
fn verify(ctx: &Ctx, ids: &[u8]) -> CmdResult {
    if !ctx.verify {
        return Ok(());
    }
    let settings = Settings {
        exec: ctx.exec,
        ..Settings::reduced()
    };
    for &id in ids {
        let o = acceptance::run(id, &settings);
        eprintln!("{o}");
        if !o.passed {
            return Err(criterion_failure(&o));
        }
    }
    Ok(())
}

fn criterion_failure(o: &Outcome) -> Failure {
    Failure {
        code: 3,
        kind: "Verification",
        message: format!("criterion {} ({}) failed: {}", o.id, o.title, o.detail),
        hint: None,
    }
}

fn model(exp: &Experiment, steps: usize) -> Result<WalkModel<'_>, Failure> {
    Ok(WalkModel::new(&exp.arr, &exp.l0, &exp.b, exp.p, steps)?)
}

/// Joint decay rate of the direction law from the starts `0` and `1000`.
fn estimate_rate(exp: &Experiment, runs: u64, exec: Exec) -> Result<f64, Failure> {
    let m = model(exp, 1_041)?;
    let mut c = 0.0f64;
    for n0 in [0, 1_000] {
        c = c.max(mixing_curve(&m, n0, 40, runs, exp.seed, exec)?.fit.c_hat);
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(
            Error::Estimator(format!("decay fit gave c = {c}; pass --c explicitly")).into(),
        );
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    #[default]
    Discrete,
    Continuous,
    Refraction,
}

#[derive(Args)]
pub struct Simulate {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opts: SimulateOpts,
}

#[derive(Args, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateOpts {
    /// Discrete walk, continuous laser walk, or refraction walk.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Mirror crossings (discrete mode) [default: 200].
    #[arg(long)]
    steps: Option<usize>,
    /// Time horizon (continuous and refraction modes) [default: 200].
    #[arg(long)]
    time: Option<f64>,
}

impl Simulate {
    pub fn run(self) -> CmdResult {
        let (ctx, o) = prepare(&self.common, &self.opts)?;
        let mode = o.mode.unwrap_or_default();
        let o = SimulateOpts {
            mode: Some(mode),
            steps: (mode == ModeArg::Discrete).then(|| o.steps.unwrap_or(200)),
            time: (mode != ModeArg::Discrete).then(|| o.time.unwrap_or(200.0)),
        };
        let exp = &ctx.exp;
        let mut rng = RngStream::new(exp.seed, 0);
        let traj = match mode {
            ModeArg::Discrete => {
                model(exp, o.steps.unwrap_or_default())?.simulate_discrete(&mut rng)
            }
            _ => {
                let horizon = o.time.unwrap_or_default();
                if !(horizon > 0.0 && horizon.is_finite()) {
                    return Err(
                        Error::Config(format!("time must be positive, got {horizon}")).into(),
                    );
                }
                let m = WalkModel::for_horizon(&exp.arr, &exp.l0, &exp.b, exp.p, horizon)?;
                if mode == ModeArg::Continuous {
                    m.simulate_continuous(&mut rng, horizon)?
                } else {
                    m.simulate_refraction(&mut rng, horizon)?
                }
            }
        };
        let mut out = open_out(ctx.out.as_deref())?;
        traj.write_csv(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| io_failure(ctx.out.as_deref(), e))?;
        drop(out);
        // CSV has no room for the echo; it goes next to the file
        if let Some(path) = &ctx.out {
            let side = Ctx {
                out: Some(sidecar(path)),
                exp: resolve(&Common::default(), &exp.echo())?,
                exec: ctx.exec,
                verify: false,
            };
            emit(
                &side,
                "simulate",
                &o,
                json!({ "csv": path, "crossings": traj.crossings() }),
            )?;
        }
        verify(&ctx, &[7, 8])
    }
}

/// `path` with `.config.json` appended.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

#[derive(Args)]
pub struct Sigma {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opts: SigmaOpts,
}

#[derive(Args, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SigmaOpts {
    /// Steps per walk [default: 10000].
    #[arg(long)]
    steps: Option<usize>,
    /// Independent walks [default: 10000].
    #[arg(long)]
    runs: Option<u64>,
    /// Longest lag in the interaction series [default: 12].
    #[arg(long)]
    m_max: Option<usize>,
    /// Labels used for the window frequencies of the series [default: 1000000].
    #[arg(long)]
    labels: Option<usize>,
}

impl Sigma {
    pub fn run(self) -> CmdResult {
        let (ctx, o) = prepare(&self.common, &self.opts)?;
        let o = SigmaOpts {
            steps: Some(o.steps.unwrap_or(10_000)),
            runs: Some(o.runs.unwrap_or(10_000)),
            m_max: Some(o.m_max.unwrap_or(12)),
            labels: Some(o.labels.unwrap_or(1_000_000)),
        };
        let exp = &ctx.exp;
        let m = model(exp, o.steps.unwrap_or_default())?;
        let est = empirical_sigma(&m, o.runs.unwrap_or_default(), exp.seed, ctx.exec)?;
        let labels = model(exp, o.labels.unwrap_or_default())?.labels;
        let series = sigma_via_series(&exp.arr, &labels, exp.p, o.m_max.unwrap_or_default(), None)?;
        let k_b = hit_rate(&exp.arr, &exp.b)?;
        emit(
            &ctx,
            "sigma",
            &o,
            json!({
                "N": o.steps,
                "M": o.runs,
                "sigma2": est.sigma2,
                "sigma2_se": est.sigma2_se,
                "sigma2_series": series.sigma2,
                "hit_rate": k_b,
                "sigma2_per_unit_time": est.sigma2 * k_b,
                "empirical": est,
                "series": series,
            }),
        )?;
        verify(&ctx, &[1, 2, 10])
    }
}

#[derive(Args)]
pub struct Mixing {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opts: MixingOpts,
}

#[derive(Args, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MixingOpts {
    /// Conditioning time [default: 0].
    #[arg(long)]
    n0: Option<usize>,
    /// Last step of the curve [default: 40].
    #[arg(long)]
    n_max: Option<usize>,
    /// Independent walks [default: 100000].
    #[arg(long)]
    runs: Option<u64>,
    /// Labels inspected by the contraction certificate [default: 5000].
    #[arg(long)]
    certify: Option<usize>,
    /// Also report equidistribution in the quotient by λ times the coroot
    /// lattice, at n = 10, 100, 1000.
    #[arg(long)]
    lambda: Option<usize>,
    /// Also write the curve as CSV (n,tv,tv_exact,band).
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl Mixing {
    pub fn run(self) -> CmdResult {
        let (ctx, o) = prepare(&self.common, &self.opts)?;
        let o = MixingOpts {
            n0: Some(o.n0.unwrap_or(0)),
            n_max: Some(o.n_max.unwrap_or(40)),
            runs: Some(o.runs.unwrap_or(100_000)),
            certify: Some(o.certify.unwrap_or(5_000)),
            ..o
        };
        let (n0, n_max, runs, cert_len) = (
            o.n0.unwrap_or_default(),
            o.n_max.unwrap_or_default(),
            o.runs.unwrap_or_default(),
            o.certify.unwrap_or_default(),
        );
        let exp = &ctx.exp;
        let checkpoints = [10, 100, 1_000];
        let quotient_len = if o.lambda.is_some() { 1_000 } else { 0 };
        let m = model(exp, n0 + n_max.max(cert_len).max(quotient_len) + 1)?;
        let curve = mixing_curve(&m, n0, n_max, runs, exp.seed, ctx.exec)?;
        let cert = certify_rate(&m, n0, cert_len)?;
        let quotient = match o.lambda {
            Some(l) => Some(quotient_equidistribution(
                &m,
                l,
                &checkpoints,
                runs,
                exp.seed,
                ctx.exec,
            )?),
            None => None,
        };
        if let Some(path) = &o.csv {
            let write = || -> io::Result<()> {
                let mut w = BufWriter::new(File::create(path)?);
                writeln!(w, "n,tv,tv_exact,band")?;
                for k in 0..curve.n.len() {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        curve.n[k], curve.tv[k], curve.tv_exact[k], curve.band[k]
                    )?;
                }
                w.flush()
            };
            write().map_err(|e| io_failure(Some(path), e))?;
        }
        emit(
            &ctx,
            "mixing",
            &o,
            json!({
                "n": curve.n,
                "tv": curve.tv,
                "tv_exact": curve.tv_exact,
                "band": curve.band,
                "c_hat": curve.fit.c_hat,
                "c_slope": curve.fit.c_slope,
                "fit_regime": curve.fit.regime,
                "c_certified": cert.c_certified,
                "certificate": cert,
                "M": runs,
                "quotient": quotient,
            }),
        )?;
        verify(&ctx, &[4, 5, 6, 12])
    }
}

#[derive(Args)]
pub struct Freq {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opts: FreqOpts,
}

#[derive(Args, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FreqOpts {
    /// Window length [default: 3].
    #[arg(long)]
    window: Option<usize>,
    /// Labels counted [default: 1000000].
    #[arg(long)]
    steps: Option<usize>,
    /// Labels skipped first [default: 0].
    #[arg(long)]
    n0: Option<usize>,
    /// Largest coefficient searched for integer relations of the direction
    /// [default: 1000000].
    #[arg(long)]
    height: Option<f64>,
}

impl Freq {
    pub fn run(self) -> CmdResult {
        let (ctx, o) = prepare(&self.common, &self.opts)?;
        let o = FreqOpts {
            window: Some(o.window.unwrap_or(3)),
            steps: Some(o.steps.unwrap_or(1_000_000)),
            n0: Some(o.n0.unwrap_or(0)),
            height: Some(o.height.unwrap_or(1e6)),
        };
        let exp = &ctx.exp;
        let table = window_frequencies(
            &exp.arr,
            &exp.l0,
            &exp.b,
            o.window.unwrap_or_default(),
            o.steps.unwrap_or_default(),
            o.n0.unwrap_or_default(),
        )?;
        let patterns: Vec<Value> = table
            .counts
            .iter()
            .map(|(pat, &count)| json!({ "pattern": pat, "count": count, "frequency": count as f64 / table.total as f64 }))
            .collect();
        emit(
            &ctx,
            "freq",
            &o,
            json!({
                "hit_rate": hit_rate(&exp.arr, &exp.b)?,
                "classification": classify_direction(&exp.arr, &exp.b, o.height.unwrap_or_default())?,
                "total": table.total,
                "patterns": patterns,
            }),
        )?;
        verify(&ctx, &[7])
    }
}

#[derive(Args)]
pub struct Moments {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opts: MomentsOpts,
}

#[derive(Args, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MomentsOpts {
    /// Steps per walk [default: 10000].
    #[arg(long)]
    steps: Option<usize>,
    /// Independent walks [default: 10000].
    #[arg(long)]
    runs: Option<u64>,
    /// Highest tensor order [default: 4].
    #[arg(long)]
    max_order: Option<usize>,
}

impl Moments {
    pub fn run(self) -> CmdResult {
        let (ctx, o) = prepare(&self.common, &self.opts)?;
        let o = MomentsOpts {
            steps: Some(o.steps.unwrap_or(10_000)),
            runs: Some(o.runs.unwrap_or(10_000)),
            max_order: Some(o.max_order.unwrap_or(4)),
        };
        let exp = &ctx.exp;
        let m = model(exp, o.steps.unwrap_or_default())?;
        let orders: Vec<usize> = (1..=o.max_order.unwrap_or_default()).collect();
        let mom =
            empirical_moment_tensors(&m, &orders, o.runs.unwrap_or_default(), exp.seed, ctx.exec)?;
        let d = exp.arr.rank();
        let sigma2 = orders
            .iter()
            .position(|&k| k == 2)
            .map(|i| (0..d).map(|r| mom.tensors[i].get(&[r, r])).sum::<f64>() / d as f64);
        let mut gaussian = Vec::new();
        let mut fourth = None;
        if let Some(s2) = sigma2 {
            for (i, &k) in orders.iter().enumerate() {
                gaussian.push(gaussian_moment_tensor(k, d, s2)?);
                if k == 4 && d >= 2 {
                    fourth = Some(fourth_moment_ratio(&mom.tensors[i])?);
                }
            }
        }
        emit(
            &ctx,
            "moments",
            &o,
            json!({
                "orders": orders,
                "sigma2": sigma2,
                "fourth_moment_ratio": fourth,
                "empirical": mom,
                "gaussian": gaussian,
            }),
        )?;
        verify(&ctx, &[3, 9])
    }
}

#[derive(Args)]
pub struct Growth {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opts: GrowthOpts,
}

#[derive(Args, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthOpts {
    /// Horizons n [default: 100,1000,10000].
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Conditioning times n0 [default: 0,1000].
    #[arg(long, value_delimiter = ',')]
    n0_grid: Option<Vec<usize>>,
    /// Walks per conditioning time [default: 1000].
    #[arg(long)]
    runs: Option<u64>,
    /// Decay rate of the direction law (estimated when absent).
    #[arg(long)]
    c: Option<f64>,
}

impl Growth {
    pub fn run(self) -> CmdResult {
        let (ctx, o) = prepare(&self.common, &self.opts)?;
        let exp = &ctx.exp;
        let c = match o.c {
            Some(c) => c,
            None => estimate_rate(exp, 20_000, ctx.exec)?,
        };
        let o = GrowthOpts {
            grid: Some(o.grid.unwrap_or_else(|| vec![100, 1_000, 10_000])),
            n0_grid: Some(o.n0_grid.unwrap_or_else(|| vec![0, 1_000])),
            runs: Some(o.runs.unwrap_or(1_000)),
            c: Some(c),
        };
        let (grid, n0_grid) = (
            o.grid.clone().unwrap_or_default(),
            o.n0_grid.clone().unwrap_or_default(),
        );
        let len = grid.iter().max().unwrap_or(&0) + n0_grid.iter().max().unwrap_or(&0) + 1;
        let m = model(exp, len)?;
        let c_const = almost_martingale_constant(&exp.arr, exp.p, c)?;
        let rep = growth_function(
            &m,
            &grid,
            &n0_grid,
            o.runs.unwrap_or_default(),
            exp.seed,
            c_const,
            ctx.exec,
        )?;
        emit(&ctx, "growth", &o, json!({ "c": c, "growth": rep }))?;
        verify(&ctx, &[11])
    }
}

#[derive(Args)]
pub struct Martingale {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opts: MartingaleOpts,
}

#[derive(Args, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MartingaleOpts {
    /// Block counts n [default: 16,32,64].
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Independent walks [default: 10000].
    #[arg(long)]
    runs: Option<u64>,
    /// Decay rate of the direction law (estimated when absent).
    #[arg(long)]
    c: Option<f64>,
}

impl Martingale {
    pub fn run(self) -> CmdResult {
        let (ctx, o) = prepare(&self.common, &self.opts)?;
        let exp = &ctx.exp;
        let c = match o.c {
            Some(c) => c,
            None => estimate_rate(exp, 20_000, ctx.exec)?,
        };
        let o = MartingaleOpts {
            n: Some(o.n.unwrap_or_else(|| vec![16, 32, 64])),
            runs: Some(o.runs.unwrap_or(10_000)),
            c: Some(c),
        };
        let ns = o.n.clone().unwrap_or_default();
        let n_max = ns.iter().copied().max().unwrap_or(0);
        let schedule = martingale_schedule(n_max, c)?;
        let m = model(exp, schedule.s[n_max] + 1)?;
        let reports = ns
            .iter()
            .map(|&n| martingale_error(&m, n, c, o.runs.unwrap_or_default(), exp.seed, ctx.exec))
            .collect::<billiard_walk::Result<Vec<_>>>()?;
        let medians: Vec<f64> = reports.iter().map(|r| r.median).collect();
        emit(
            &ctx,
            "martingale",
            &o,
            json!({ "c": c, "medians": medians, "reports": reports }),
        )?;
        verify(&ctx, &[13])
    }
}

#[derive(Args)]
pub struct Functional {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    opts: FunctionalOpts,
}

#[derive(Args, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FunctionalOpts {
    /// Steps per walk [default: 10000].
    #[arg(long)]
    steps: Option<usize>,
    /// Independent walks [default: 10000].
    #[arg(long)]
    runs: Option<u64>,
}

impl Functional {
    pub fn run(self) -> CmdResult {
        let (ctx, o) = prepare(&self.common, &self.opts)?;
        let o = FunctionalOpts {
            steps: Some(o.steps.unwrap_or(10_000)),
            runs: Some(o.runs.unwrap_or(10_000)),
        };
        let exp = &ctx.exp;
        let m = model(exp, o.steps.unwrap_or_default())?;
        let rep = functional_tests(&m, o.runs.unwrap_or_default(), exp.seed, ctx.exec)?;
        emit(&ctx, "functional", &o, to_value(&rep))?;
        verify(&ctx, &[14])
    }
}

#[derive(Args)]
pub struct VerifyAll {
    /// Run at the full budget instead of the reduced one.
    #[arg(long)]
    full: bool,
    /// Continue past failures and report every criterion.
    #[arg(long)]
    keep_going: bool,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u8>>,
    /// Negate step vector β_i throughout, to check that verification fails.
    #[arg(long, value_name = "I")]
    inject_sign_flip: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl VerifyAll {
    pub fn run(self) -> CmdResult {
        let defaults = Settings::default();
        let settings = Settings {
            budget: if self.full {
                Budget::Full
            } else {
                Budget::Reduced
            },
            exec: self.threads.map_or(Exec::Auto, Exec::with_threads),
            seed: self.seed.unwrap_or(defaults.seed),
            flip_beta: self.inject_sign_flip,
        };
        let ids: Vec<u8> = match &self.only {
            Some(ids) => {
                if let Some(bad) = ids.iter().find(|i| !CRITERIA.iter().any(|c| c.0 == **i)) {
                    return Err(Error::Config(format!("no criterion {bad}")).into());
                }
                ids.clone()
            }
            None => CRITERIA.iter().map(|c| c.0).collect(),
        };
        let mut first_failure = None;
        let mut ran = Vec::new();
        let mut stdout = io::stdout().lock();
        for id in ids {
            let o = acceptance::run(id, &settings);
            let _ = writeln!(stdout, "{o}");
            let _ = stdout.flush();
            ran.push(id);
            if !o.passed && first_failure.is_none() {
                first_failure = Some(o);
                if !self.keep_going {
                    break;
                }
            }
        }
        let list: Vec<String> = ran.iter().map(u8::to_string).collect();
        let _ = writeln!(stdout, "criteria run: {}", list.join(", "));
        match first_failure {
            Some(o) => Err(criterion_failure(&o)),
            None => Ok(()),
        }
    }
}
