//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
//! Expected values come from brute-force re-derivations in this file, not
//! from the library paths under test.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use klb_core::bits::clog;
use klb_core::calibration::{sweep_pairs, CalibrationRecord};
use klb_core::extractor::{
    extract, feasibility_bound, make_constant_coloring, make_linear_coloring, make_random_coloring, verify_coloring,
    AuditMode, ColoringParams, SizeRule,
};
use klb_core::oracle::{Caps, ComplexityOracle};
use klb_core::seqlab::{
    ce_dependence_demo, conditional_estimator_cost, dilute_zero, estimate_dim, estimator_decode, estimator_encode,
    interleave, prefix_costs, prng_stream, run_reduction, toy_enumerators, xor_seq, BuiltinReduction, PrefixSource,
    StagedEnumerator,
};
use klb_core::{BitString, Sigma};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle(max_len: usize) -> ComplexityOracle {
    ComplexityOracle::new(Caps::new(max_len, 10_000)).expect("caps within ceiling")
}

fn counting_bound() -> Outcome {
    let o = oracle(12);
    let values: Vec<usize> = BitString::all_of_len(8).map(|x| o.c(&x)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let mut worst = String::new();
    for k in 0..=8u32 {
        let below = values.iter().filter(|&&v| v < k as usize).count();
        if below > (1usize << k) - 1 {
            return Err(format!("k={k}: {below} strings with C < k, bound {}", (1 << k) - 1));
        }
        worst = format!("{worst} k{k}:{below}");
    }
    let min = values.iter().min().expect("256 strings");
    Ok(format!("counts below k:{worst}; min C over length 8 = {min}"))
}

fn upper_bounds(cal: &CalibrationRecord) -> Outcome {
    let plain = oracle(10 + cal.c_lit);
    // A search capped at c_copy decides `C(x|x) <= c_copy` exactly.
    let copy = oracle(cal.c_copy);
    let (mut worst_lit, mut worst_copy) = (i64::MIN, 0);
    for x in BitString::all_up_to(10) {
        let c = plain.c(&x).map_err(|e| format!("C({x}): {e}"))?;
        worst_lit = worst_lit.max(c as i64 - x.len() as i64);
        let cc = copy.c_given(&x, &x).map_err(|e| format!("C({x}|{x}): {e}"))?;
        worst_copy = worst_copy.max(cc);
    }
    ensure(
        worst_lit <= cal.c_lit as i64 && worst_copy <= cal.c_copy,
        format!(
            "max C(x)-|x| = {worst_lit} (c_lit {}), max C(x|x) = {worst_copy} (c_copy {}), |x| <= 10",
            cal.c_lit, cal.c_copy
        ),
    )
}

/// `(C(xy), C(x|y), C(y), C(x))` for every sweep pair, split by half.
struct PairSweep {
    rows: Vec<(bool, usize, usize, i64, i64, i64, i64)>,
}

fn pair_sweep() -> Result<PairSweep, String> {
    let o = oracle(12);
    let mut rows = Vec::new();
    for p in sweep_pairs(4) {
        let err = |e: klb_core::KlbError| e.to_string();
        let cxy = o.c(&p.x.concat(&p.y)).map_err(err)? as i64;
        let cx_y = o.c_given(&p.x, &p.y).map_err(err)? as i64;
        let cy = o.c(&p.y).map_err(err)? as i64;
        let cx = o.c(&p.x).map_err(err)? as i64;
        rows.push((p.is_calibration(), p.x.len(), p.y.len(), cxy, cx_y, cy, cx));
    }
    Ok(PairSweep { rows })
}

fn symmetry(cal: &CalibrationRecord, sweep: &PairSweep) -> Outcome {
    let defect = |r: &(bool, usize, usize, i64, i64, i64, i64)| (r.3 - r.4 - r.5).abs();
    let max_of = |cal_half: bool| sweep.rows.iter().filter(|r| r.0 == cal_half).map(defect).max().unwrap_or(0);
    let violations = sweep.rows.iter().filter(|r| !r.0 && defect(r) > cal.d_si).count();
    ensure(
        violations == 0 && max_of(true) <= cal.d_si,
        format!(
            "D_SI = {} (calibration max {}), holdout max {}, holdout violations {violations}",
            cal.d_si,
            max_of(true),
            max_of(false)
        ),
    )
}

fn equivalence(cal: &CalibrationRecord, sweep: &PairSweep) -> Outcome {
    let mut violations = 0;
    let mut worst_slack = f64::NEG_INFINITY;
    for r in sweep.rows.iter().filter(|r| !r.0) {
        let (n, m, cxy, cx_y, cy, cx) = (r.1, r.2, r.3, r.4, r.5, r.6);
        let joint = cx + cy - cxy;
        let conditional = cx - cx_y;
        let gap = (joint - conditional).abs() as f64;
        let allowance = cal.a_eq * (clog(n) + clog(m)) as f64 + cal.b_eq;
        worst_slack = worst_slack.max(gap - allowance);
        if gap > allowance {
            violations += 1;
        }
    }
    ensure(
        violations == 0,
        format!(
            "a_eq = {}, b_eq = {}, holdout violations {violations}, worst gap - allowance {worst_slack}",
            cal.a_eq, cal.b_eq
        ),
    )
}

fn params(n: u32, s1: (u32, u32), s2: (u32, u32)) -> ColoringParams {
    ColoringParams::new(n, Sigma::new(s1.0, s1.1), Sigma::new(s2.0, s2.1)).expect("valid parameters")
}

fn extractor_audit() -> Outcome {
    let err = |e: klb_core::KlbError| e.to_string();
    let sampled = verify_coloring(
        &make_linear_coloring(params(4, (1, 2), (3, 4))).map_err(err)?,
        &AuditMode::Sampled { seed: 1, count: 100_000 },
    )
    .map_err(err)?;
    let exhaustive = verify_coloring(
        &make_linear_coloring(params(3, (1, 3), (2, 3))).map_err(err)?,
        &AuditMode::exhaustive(SizeRule::Exact),
    )
    .map_err(err)?;
    let forced = verify_coloring(
        &make_constant_coloring(params(3, (2, 3), (5, 6)), 0).map_err(err)?,
        &AuditMode::exhaustive(SizeRule::Exact),
    )
    .map_err(err)?;
    ensure(
        sampled.passed() && sampled.rectangles_checked == 100_000 && exhaustive.passed() && !forced.passed(),
        format!(
            "n=4 sampled: {} rects, {} violations; n=3 M=2 exhaustive: {} rects, {} violations; constant M=4: {} violations",
            sampled.rectangles_checked,
            sampled.violation_total,
            exhaustive.rectangles_checked,
            exhaustive.violation_total,
            forced.violation_total
        ),
    )
}

fn extraction_contract() -> Outcome {
    let err = |e: klb_core::KlbError| e.to_string();
    let colorings = [
        make_linear_coloring(params(4, (1, 2), (3, 4))).map_err(err)?,
        make_random_coloring(params(6, (1, 3), (1, 2)), 6).map_err(err)?,
        make_random_coloring(params(8, (3, 8), (1, 2)), 8).map_err(err)?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for i in 0..1000 {
        let t = &colorings[i % colorings.len()];
        let n = t.params.n as usize;
        let expected = (t.params.sigma1 * Sigma::from_integer(n as u32)).floor().to_integer() as usize;
        let draw = |rng: &mut ChaCha8Rng| BitString::from_uint(rng.gen_range(0..1u64 << n), n);
        let (x, y, z) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let w = extract(t, &x, &y, &z).map_err(err)?;
        if w.len() != expected {
            return Err(format!("n={n}: |w| = {} but floor(σ1 n) = {expected}", w.len()));
        }
        checked += 1;
    }
    Ok(format!("{checked} triples over n in {{4, 6, 8}}, every |w| = floor(σ1 n)"))
}

/// Union bound and rectangle count re-derived directly in powers of `N = 2^n`.
fn reference_bound(n: u32, s1: f64, s2: f64) -> (f64, f64) {
    let big_n = 2f64.powi(n as i32);
    let m = 2f64.powi((s1 * n as f64 + 1e-9).floor() as i32);
    let log_fail = (3.0 * m).ln() - big_n.powf(2.0 * s2) / (3.0 * m);
    let log_rect = 2.0 * big_n.powf(s2) + 2.0 * big_n.powf(s2) * (1.0 - s2) * big_n.ln() + big_n.ln();
    (log_fail, log_rect)
}

fn feasibility() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 5e-7 * a.abs().max(b.abs());
    let mut detail = Vec::new();
    let mut ok = true;
    for (n, s1, s2, want_negative) in [(30, (1, 10), (1, 2), true), (4, (1, 2), (3, 4), false)] {
        let p = params(n, s1, s2);
        let b = feasibility_bound::<f64>(&p).map_err(|e| e.to_string())?;
        let (fail, rect) = reference_bound(n, s1.0 as f64 / s1.1 as f64, s2.0 as f64 / s2.1 as f64);
        let sign_ok = (b.margin < 0.0) == want_negative;
        let agree = close(b.log_fail_prob, fail) && close(b.log_rect_count, rect) && close(b.margin, fail + rect);
        ok &= sign_ok && agree;
        detail.push(format!("n={n}: margin {:.6e} (reference {:.6e})", b.margin, fail + rect));
    }
    ensure(ok, detail.join("; "))
}

fn estimator_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..1000 {
        let len = rng.gen_range(0..=4096usize);
        let x: BitString = match i % 4 {
            0 => (0..len).map(|_| rng.gen::<bool>()).collect(),
            1 => (0..len).map(|_| rng.gen_bool(0.05)).collect(),
            2 => {
                let period: Vec<bool> = (0..rng.gen_range(1..40)).map(|_| rng.gen()).collect();
                (0..len).map(|j| period[j % period.len()]).collect()
            }
            _ => prng_stream(rng.gen(), len).prefix(len).expect("within horizon"),
        };
        let back = estimator_decode(&estimator_encode(&x)).map_err(|e| e.to_string())?;
        if back != x {
            return Err(format!("round trip failed on string {i} of length {len}"));
        }
    }
    let h = 1 << 12;
    let dim = |s: &PrefixSource| estimate_dim::<f64>(s, h).expect("positive horizon");
    let (random, zeros, diluted) = (
        dim(&prng_stream(1, h)),
        dim(&PrefixSource::zeros(h)),
        dim(&dilute_zero(&prng_stream(1, h / 2))),
    );
    ensure(
        random >= 0.9 && zeros <= 0.1 && (0.4..=0.65).contains(&diluted),
        format!("1000 round trips; dim prng {random:.4}, zeros {zeros:.4}, dilute_zero(prng) {diluted:.4}"),
    )
}

fn xor_dimension() -> Outcome {
    let h = 1 << 12;
    let x = prng_stream(1, h);
    let dx = estimate_dim::<f64>(&x, h).expect("positive horizon");
    let mut detail = format!("dim x {dx:.4}");
    let mut ok = true;
    for (name, y) in [("zeros", PrefixSource::zeros(h)), ("prng(2)", prng_stream(2, h))] {
        let d = estimate_dim::<f64>(&xor_seq(&x, &y), h).expect("positive horizon");
        ok &= d >= dx - 0.1;
        detail.push_str(&format!(", dim x^{name} {d:.4}"));
    }
    ensure(ok, detail)
}

fn xor_counterexample() -> Outcome {
    let n_max = 1 << 11;
    let (y, z) = (prng_stream(1, n_max), prng_stream(2, n_max));
    let x = xor_seq(&y, &z).prefix(n_max).expect("within horizon");
    let joined = interleave(&y, &z).prefix(2 * n_max).expect("within horizon");
    let ns: Vec<usize> = (1..=n_max).collect();
    let plain = prefix_costs(&x, &ns);
    let mut worst_cond = 0;
    let mut worst_ratio = f64::INFINITY;
    for (&n, p) in ns.iter().zip(&plain) {
        let cond = conditional_estimator_cost(&x.prefix(n).expect("n <= n_max"), &joined.prefix(2 * n).expect("2n <= 2 n_max"));
        worst_cond = worst_cond.max(cond);
        worst_ratio = worst_ratio.min(p.total_bits as f64 / n as f64);
    }
    ensure(
        worst_cond <= 64 && worst_ratio >= 0.9,
        format!("n <= 2048: max conditional cost {worst_cond} bits (<= 64), min plain cost/n {worst_ratio:.4} (>= 0.9)"),
    )
}

fn use_tracking() -> Outcome {
    let n_max = 1 << 10;
    let src = prng_stream(11, n_max);
    let err = |e: klb_core::KlbError| e.to_string();
    let id = run_reduction(&BuiltinReduction::Identity, &src, n_max).map_err(err)?;
    if let Some(n) = (1..=n_max).find(|&n| id.use_profile[n - 1] != n) {
        return Err(format!("identity use at n={n} is {}", id.use_profile[n - 1]));
    }
    let dil = run_reduction(&BuiltinReduction::DilutePowers, &src, n_max).map_err(err)?;
    let bound = |n: usize| 2 * ((n + 1) as f64).log2().ceil() as usize + 2;
    if let Some(n) = (1..=n_max).find(|&n| dil.use_profile[n - 1] > bound(n)) {
        return Err(format!("dilute_pow2 use at n={n} is {} > {}", dil.use_profile[n - 1], bound(n)));
    }
    Ok(format!(
        "identity use(n) = n; dilute_pow2 use(1024) = {} <= {}",
        dil.use_profile[n_max - 1],
        bound(n_max)
    ))
}

/// Runs the enumeration stage by stage until the first `n` bits equal the limit's.
fn simulate_modulus(e: &StagedEnumerator, n: usize) -> usize {
    let limit = e.limit().as_slice()[..n].to_vec();
    (0..).find(|&s| e.stage(s).as_slice()[..n] == limit[..]).expect("the limit stage matches")
}

fn ce_demo() -> Outcome {
    let (x, y) = toy_enumerators();
    let budget = x.stage_count().max(y.stage_count());
    let mut strict_rows = 0;
    for (ex, ey) in [(&x, &y), (&y, &x)] {
        let report = ce_dependence_demo(ex, ey, 64, budget).map_err(|e| e.to_string())?;
        for row in &report.rows {
            let n = row.n;
            let (cm_x, cm_y) = (simulate_modulus(ex, n), simulate_modulus(ey, n));
            if (row.cm_x, row.cm_y) != (cm_x, cm_y) {
                return Err(format!("n={n}: moduli ({}, {}) vs simulated ({cm_x}, {cm_y})", row.cm_x, row.cm_y));
            }
            if cm_x > cm_y {
                strict_rows += 1;
                let guess = &ey.stage(cm_x).as_slice()[..n];
                if guess != &ey.limit().as_slice()[..n] || row.success != Some(true) {
                    return Err(format!("{} -> {}: reconstruction fails at n={n}", ex.name, ey.name));
                }
            }
        }
    }
    ensure(
        strict_rows > 0,
        format!("{strict_rows} strict rows over both directions, n <= 64, all reconstructed"),
    )
}

fn main() -> ExitCode {
    let cal = CalibrationRecord::bundled();
    let mut sweep = None;
    let mut failures = 0;
    let mut report = |id: u32, name: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {id:>2} {name}: {detail} [{secs:.1}s]");
            }
        }
    };
    report(1, "counting bound", &mut counting_bound);
    report(2, "literal and copy upper bounds", &mut || upper_bounds(&cal));
    report(3, "symmetry of information", &mut || {
        let s = pair_sweep()?;
        let r = symmetry(&cal, &s);
        sweep = Some(s);
        r
    });
    report(4, "joint/conditional equivalence", &mut || match &sweep {
        Some(s) => equivalence(&cal, s),
        None => Err("pair sweep unavailable".into()),
    });
    report(5, "extractor audit", &mut extractor_audit);
    report(6, "extraction length", &mut extraction_contract);
    report(7, "feasibility bound", &mut feasibility);
    report(8, "estimator laws", &mut estimator_laws);
    report(9, "xor dimension", &mut xor_dimension);
    report(10, "xor/interleave counterexample", &mut xor_counterexample);
    report(11, "use tracking", &mut use_tracking);
    report(12, "c.e. reconstruction", &mut ce_demo);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
