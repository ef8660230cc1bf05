use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use klb_core::calibration::{calibrate, CalibrationRecord, SweepParams};
use klb_core::extractor::{
    certify_extraction, extract, feasibility_bound, find_coloring, load_coloring, parse_sigma, save_coloring,
    verify_coloring, AuditMode, ColoringParams, FindOutcome, SizeRule, DEFAULT_AUDIT_CEILING,
};
use klb_core::indep::{dependency_matrix, tuple_independence, verdict};
use klb_core::oracle::{complexity, Caps, ComplexityOracle, ComplexityQuery};
use klb_core::seqlab::{
    ce_dependence_demo, conditional_estimator_cost, dim_profile, estimate_dim, interleave, prefix_costs,
    prng_stream, run_reduction, seeded_toy_enumerators, xor_seq, BuiltinReduction, TOY_SEED,
};
use klb_core::{BitString, KlbError};

use crate::source::parse_source;
use crate::{Cli, CliError, Command, Global};

type Res<T = ()> = std::result::Result<T, CliError>;

#[derive(Args, Debug, Serialize)]
pub struct ComplexityArgs {
    #[arg(long, default_value = "")]
    pub target_bits: String,
    #[arg(long, default_value = "")]
    pub cond_bits: String,
    #[arg(long)]
    pub oracle_bits: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct DepMatrixArgs {
    /// Source spec of x.
    #[arg(long)]
    pub x: String,
    /// Source spec of y.
    #[arg(long)]
    pub y: String,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long)]
    pub m_max: usize,
    /// Largest normalized dependency still read as independent.
    #[arg(long, default_value_t = 1.0)]
    pub threshold: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct TupleIndepArgs {
    /// Comma-separated bit strings.
    #[arg(long, value_delimiter = ',', required = true)]
    pub strings: Vec<String>,
    /// Defaults to the calibrated `c_l1`.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditKind {
    Sampled,
    Exhaustive,
    ExhaustiveMultiples,
    Fiber,
}

#[derive(Args, Debug, Serialize)]
pub struct AuditArgs {
    #[arg(long, value_enum, default_value_t = AuditKind::Sampled)]
    pub audit: AuditKind,
    /// Rectangles drawn by a sampled audit.
    #[arg(long, default_value_t = 100_000)]
    pub count: u64,
    /// Rectangle ceiling of an exhaustive audit.
    #[arg(long, default_value_t = DEFAULT_AUDIT_CEILING)]
    pub audit_ceiling: u64,
}

impl AuditArgs {
    fn mode(&self, seed: Option<u64>) -> Res<AuditMode> {
        Ok(match self.audit {
            AuditKind::Sampled => AuditMode::Sampled {
                seed: require_seed(seed)?,
                count: self.count,
            },
            AuditKind::Exhaustive => AuditMode::Exhaustive {
                sizes: SizeRule::Exact,
                ceiling: self.audit_ceiling,
            },
            AuditKind::ExhaustiveMultiples => AuditMode::Exhaustive {
                sizes: SizeRule::Multiples,
                ceiling: self.audit_ceiling,
            },
            AuditKind::Fiber => AuditMode::FiberAligned,
        })
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ParamArgs {
    #[arg(long)]
    pub n: u32,
    /// Rational `p/q` or decimal.
    #[arg(long)]
    pub sigma1: String,
    #[arg(long)]
    pub sigma2: String,
    /// Overrides the granularity exponent `ceil(σ2·n)`.
    #[arg(long)]
    pub granularity_log: Option<u32>,
}

impl ParamArgs {
    fn params(&self) -> Res<ColoringParams> {
        let p = ColoringParams::new(self.n, parse_sigma(&self.sigma1)?, parse_sigma(&self.sigma2)?)?;
        Ok(match self.granularity_log {
            Some(g) => p.with_granularity_log(g)?,
            None => p,
        })
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ColorFindArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Random candidates tried after the linear one.
    #[arg(long, default_value_t = 16)]
    pub max_attempts: usize,
    #[command(flatten)]
    pub audit: AuditArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ColorVerifyArgs {
    #[arg(long)]
    pub coloring: PathBuf,
    #[command(flatten)]
    pub audit: AuditArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ExtractArgs {
    #[arg(long)]
    pub coloring: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(long)]
    pub z: String,
}

#[derive(Args, Debug, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(long)]
    pub z: String,
    /// Coloring producing `w`.
    #[arg(long, conflicts_with = "w", required_unless_present = "w")]
    pub coloring: Option<PathBuf>,
    /// Candidate output given directly.
    #[arg(long)]
    pub w: Option<String>,
    /// Defaults to the calibrated `c_l1`.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct DimEstArgs {
    #[arg(long)]
    pub source: String,
    /// Defaults to the horizon.
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
pub struct DemoCeArgs {
    #[arg(long, default_value_t = 64)]
    pub n_max: usize,
    /// Stage budget; defaults to the longer enumeration.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Reconstruct the set from the real instead.
    #[arg(long)]
    pub swap: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct DemoXorArgs {
    /// Defaults to the horizon.
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Row spacing.
    #[arg(long, default_value_t = 1)]
    pub every: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ReduceRunArgs {
    /// identity, dilute_pow2, constant or odd.
    #[arg(long)]
    pub reduction: String,
    #[arg(long)]
    pub source: String,
    #[arg(long)]
    pub n_max: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundArgs {
    #[command(flatten)]
    pub params: ParamArgs,
}

fn require_seed(seed: Option<u64>) -> Res<u64> {
    seed.ok_or_else(|| CliError::Config("this command needs --seed".into()))
}

fn require_horizon(g: &Global) -> Res<usize> {
    g.horizon.ok_or_else(|| CliError::Config("this command needs --horizon".into()))
}

fn within_horizon(n: usize, horizon: usize) -> Res {
    if n > horizon {
        return Err(KlbError::HorizonExceeded { requested: n, horizon }.into());
    }
    Ok(())
}

fn bits(s: &str) -> Res<BitString> {
    Ok(s.parse()?)
}

fn caps(g: &Global) -> Caps {
    Caps::new(g.max_len, g.steps).with_ceiling(g.ceiling)
}

fn oracle(g: &Global) -> Res<ComplexityOracle> {
    Ok(ComplexityOracle::new(caps(g))?)
}

/// `KLB_CALIBRATION` names a record file; otherwise the bundled one.
fn calibration() -> Res<CalibrationRecord> {
    match std::env::var_os("KLB_CALIBRATION") {
        Some(path) => Ok(CalibrationRecord::load(path)?),
        None => Ok(CalibrationRecord::bundled()),
    }
}

fn config(command: &str, g: &Global, args: &impl Serialize) -> Value {
    json!({ "command": command, "global": g, "args": args })
}

fn emit(g: &Global, text: &str) -> Res {
    match &g.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json(g: &Global, config: Value, mut body: Value) -> Res {
    body["config"] = config;
    emit(g, &format!("{body}\n"))
}

fn csv_header(config: &Value, columns: &str) -> String {
    format!("# config: {config}\n{columns}\n")
}

pub fn run(cli: &Cli) -> Res {
    let g = &cli.global;
    match &cli.command {
        Command::Complexity(a) => cmd_complexity(g, a),
        Command::DepMatrix(a) => cmd_dep_matrix(g, a),
        Command::TupleIndep(a) => cmd_tuple_indep(g, a),
        Command::ColorFind(a) => cmd_color_find(g, a),
        Command::ColorVerify(a) => cmd_color_verify(g, a),
        Command::Extract(a) => cmd_extract(g, a),
        Command::Certify(a) => cmd_certify(g, a),
        Command::DimEst(a) => cmd_dim_est(g, a),
        Command::DemoCe(a) => cmd_demo_ce(g, a),
        Command::DemoXor(a) => cmd_demo_xor(g, a),
        Command::ReduceRun(a) => cmd_reduce_run(g, a),
        Command::Calibrate => cmd_calibrate(g),
        Command::Bound(a) => cmd_bound(g, a),
    }
}

fn cmd_complexity(g: &Global, a: &ComplexityArgs) -> Res {
    let target = bits(&a.target_bits)?;
    let mut q = ComplexityQuery::new(target.clone(), caps(g)).given(bits(&a.cond_bits)?);
    if let Some(w) = &a.oracle_bits {
        q = q.with_oracle(bits(w)?);
    }
    let r = complexity(&q)?;
    let body = json!({
        "value": r.value,
        "witness_hex": r.witness.as_ref().map(|p| p.bits().to_hex()),
        "witness_len": r.witness.as_ref().map(|p| p.len()),
        "saturated": r.budget_saturated,
        "searched_count": r.searched_count,
    });
    emit_json(g, config("complexity", g, a), body)?;
    match r.value {
        Some(_) => Ok(()),
        None => Err(KlbError::NoProgramWithinCap {
            target_len: target.len(),
            max_len: g.max_len,
        }
        .into()),
    }
}

fn cmd_dep_matrix(g: &Global, a: &DepMatrixArgs) -> Res {
    let horizon = require_horizon(g)?;
    within_horizon(a.n_max.max(a.m_max), horizon)?;
    let x = parse_source(&a.x, horizon, g.seed)?;
    let y = parse_source(&a.y, horizon, g.seed)?;
    let matrix = dependency_matrix(&oracle(g)?, &x, &y, a.n_max, a.m_max)?;
    let v = verdict(&matrix, a.threshold);
    let mut out = csv_header(&config("dep-matrix", g, a), "n,m,cx,cy,cjoint,dep,norm_dep");
    for e in &matrix.entries {
        writeln!(out, "{},{},{},{},{},{},{:.6}", e.n, e.m, e.cx, e.cy, e.cjoint, e.dep, e.norm_dep).unwrap();
    }
    writeln!(out, "# verdict: {}", serde_json::to_string(&v).expect("verdict serializes")).unwrap();
    emit(g, &out)
}

fn cmd_tuple_indep(g: &Global, a: &TupleIndepArgs) -> Res {
    let strings = a.strings.iter().map(|s| bits(s)).collect::<Res<Vec<_>>>()?;
    let c = match a.c {
        Some(c) => c,
        None => calibration()?.c_l1,
    };
    let report = tuple_independence(&oracle(g)?, &strings, c)?;
    emit_json(g, config("tuple-indep", g, a), serde_json::to_value(report).expect("report serializes"))
}

fn cmd_color_find(g: &Global, a: &ColorFindArgs) -> Res {
    let seed = require_seed(g.seed)?;
    let path = g
        .out
        .as_deref()
        .ok_or_else(|| CliError::Config("color-find needs --out for the coloring file".into()))?;
    let params = a.params.params()?;
    let mode = a.audit.mode(Some(seed))?;
    let cfg = config("color-find", g, a);
    match find_coloring(params, seed, a.max_attempts, &mode)? {
        FindOutcome::Found {
            coloring,
            audit,
            attempts,
        } => {
            let sidecar = save_coloring(path, &coloring, Some(&audit))?;
            let body = json!({
                "found": true,
                "attempts": attempts,
                "path": path,
                "sidecar": sidecar,
                "config": cfg,
            });
            println!("{body}");
            Ok(())
        }
        FindOutcome::Exhausted(report) => {
            let body = json!({ "found": false, "report": report, "config": cfg });
            println!("{body}");
            Err(CliError::SearchFailed(format!(
                "no candidate out of {} passed the audit",
                report.attempts
            )))
        }
    }
}

fn load(path: &Path) -> Res<klb_core::extractor::Coloring> {
    Ok(load_coloring(path)?.0)
}

fn cmd_color_verify(g: &Global, a: &ColorVerifyArgs) -> Res {
    let coloring = load(&a.coloring)?;
    let report = verify_coloring(&coloring, &a.audit.mode(g.seed)?)?;
    let mut body = serde_json::to_value(&report).expect("report serializes");
    body["passed"] = report.passed().into();
    emit_json(g, config("color-verify", g, a), body)
}

fn cmd_extract(g: &Global, a: &ExtractArgs) -> Res {
    let coloring = load(&a.coloring)?;
    let w = extract(&coloring, &bits(&a.x)?, &bits(&a.y)?, &bits(&a.z)?)?;
    emit_json(g, config("extract", g, a), json!({ "w": w.to_string(), "len": w.len() }))
}

fn cmd_certify(g: &Global, a: &CertifyArgs) -> Res {
    let (x, y, z) = (bits(&a.x)?, bits(&a.y)?, bits(&a.z)?);
    let w = match (&a.w, &a.coloring) {
        (Some(w), _) => bits(w)?,
        (None, Some(path)) => extract(&load(path)?, &x, &y, &z)?,
        (None, None) => return Err(CliError::Config("certify needs --coloring or --w".into())),
    };
    let cal = calibration()?;
    let c = a.c.unwrap_or(cal.c_l1);
    let report = certify_extraction(&oracle(g)?, &x, &y, &z, &w, c, cal.a_cert, cal.b_cert)?;
    let mut body = serde_json::to_value(&report).expect("report serializes");
    body["premise_holds"] = json!(report.premise_holds());
    emit_json(g, config("certify", g, a), body)
}

fn cmd_dim_est(g: &Global, a: &DimEstArgs) -> Res {
    let horizon = require_horizon(g)?;
    let n_max = a.n_max.unwrap_or(horizon);
    within_horizon(n_max, horizon)?;
    let src = parse_source(&a.source, horizon, g.seed)?;
    let profile = dim_profile(&src, n_max)?;
    let estimate: f64 = estimate_dim(&src, n_max)?;
    let mut cfg = config("dim-est", g, a);
    cfg["source_kind"] = json!(src.kind().to_string());
    let mut out = csv_header(&cfg, "n,cost,cost_per_bit");
    for (n, c) in profile {
        writeln!(out, "{n},{},{:.6}", c.total_bits, c.total_bits as f64 / n as f64).unwrap();
    }
    writeln!(out, "# estimate: {estimate:.6}").unwrap();
    emit(g, &out)
}

fn cmd_demo_ce(g: &Global, a: &DemoCeArgs) -> Res {
    let seed = g.seed.unwrap_or(TOY_SEED);
    let (set, real) = seeded_toy_enumerators(seed);
    let (ex, ey) = if a.swap { (&real, &set) } else { (&set, &real) };
    let budget = a.budget.unwrap_or(set.stage_count().max(real.stage_count()));
    let report = ce_dependence_demo(ex, ey, a.n_max, budget)?;
    let mut cfg = config("demo-ce", g, a);
    cfg["seed_used"] = seed.into();
    cfg["budget_used"] = budget.into();
    let mut out = csv_header(&cfg, "n,cm_x,cm_y,strict,success,conditional_cost,plain_cost");
    for r in &report.rows {
        let success = r.success.map_or(String::new(), |s| s.to_string());
        writeln!(
            out,
            "{},{},{},{},{success},{},{}",
            r.n, r.cm_x, r.cm_y, r.strict, r.conditional_cost, r.plain_cost
        )
        .unwrap();
    }
    writeln!(out, "# all_strict_succeed: {}", report.all_strict_succeed()).unwrap();
    emit(g, &out)
}

fn cmd_demo_xor(g: &Global, a: &DemoXorArgs) -> Res {
    let seed = require_seed(g.seed)?;
    let horizon = require_horizon(g)?;
    let n_max = a.n_max.unwrap_or(horizon);
    within_horizon(n_max, horizon)?;
    if a.every == 0 {
        return Err(CliError::Config("--every must be positive".into()));
    }
    let y = prng_stream(seed, horizon);
    let z = prng_stream(seed.wrapping_add(1), horizon);
    let x = xor_seq(&y, &z).prefix(n_max)?;
    let joined = interleave(&y, &z).prefix(2 * n_max)?;
    let ns: Vec<usize> = (a.every..=n_max).step_by(a.every).collect();
    let plain = prefix_costs(&x, &ns);
    let mut out = csv_header(&config("demo-xor", g, a), "n,cond_cost,plain_cost,plain_per_bit");
    for (&n, p) in ns.iter().zip(&plain) {
        let cond = conditional_estimator_cost(&x.prefix(n)?, &joined.prefix(2 * n)?);
        writeln!(out, "{n},{cond},{},{:.6}", p.total_bits, p.total_bits as f64 / n as f64).unwrap();
    }
    emit(g, &out)
}

fn cmd_reduce_run(g: &Global, a: &ReduceRunArgs) -> Res {
    let horizon = require_horizon(g)?;
    let reduction: BuiltinReduction = a.reduction.parse()?;
    let src = parse_source(&a.source, horizon, g.seed)?;
    let run = run_reduction(&reduction, &src, a.n_max)?;
    let mut out = csv_header(&config("reduce-run", g, a), "n,output,use");
    for (i, u) in run.use_profile.iter().enumerate() {
        writeln!(out, "{},{},{u}", i + 1, u8::from(run.output.bit(i + 1))).unwrap();
    }
    emit(g, &out)
}

fn cmd_calibrate(g: &Global) -> Res {
    let record = calibrate(SweepParams {
        caps: caps(g),
        ..SweepParams::default()
    })?;
    emit(g, &record.to_json())
}

fn cmd_bound(g: &Global, a: &BoundArgs) -> Res {
    let params = a.params.params()?;
    let b = feasibility_bound::<f64>(&params)?;
    let body = json!({
        "log_fail_prob": b.log_fail_prob,
        "log_rect_count": b.log_rect_count,
        "margin": b.margin,
        "feasible": b.margin < 0.0,
        "colors": params.colors(),
        "granularity": params.granularity(),
    });
    emit_json(g, config("bound", g, a), body)
}
