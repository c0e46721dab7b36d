//! Acceptance suite: thirteen criteria at pinned tolerances. One line per
//! criterion is written straight to stderr (so it shows without
//! `--nocapture`), then the test fails if any criterion failed.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use polyschwarz::bergman::{grid_points, operator_norm, sup_norm_with, sweep_options, GridSpec};
use polyschwarz::comparison::{
    envelope_check_u, linear_comparison_check, riccati_solve, transport_ray, OdeStatus, SMALL_ALPHA_THRESHOLD,
};
use polyschwarz::jets::cauchy::{cauchy_all_components, CauchyConfig};
use polyschwarz::maps::catalog::{catalog, perturbation, random_automorphism, random_moebius, random_point, random_vector};
use polyschwarz::maps::{eval_map, map_jet};
use polyschwarz::order::{dilation_contraction_check, moebius_objective, moebius_order};
use polyschwarz::schwarzian::{canonical_residual, chain_rule_residual, hessian_residual, schwarzian_tensor};
use polyschwarz::verify::{run_suite, SuiteConfig, SuiteKind};
use polyschwarz::{Complex64, MapExpr, SchwarzianTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240611;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

struct Line {
    id: usize,
    name: &'static str,
    ok: bool,
    detail: String,
    elapsed: Duration,
}

fn run_criterion(id: usize, name: &'static str, budget: Duration, f: impl FnOnce() -> Outcome) -> Line {
    let start = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    let (mut ok, mut detail) = match res {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(p) => (
            false,
            format!(
                "panicked: {}",
                p.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            ),
        ),
    };
    if elapsed > budget {
        ok = false;
        detail = format!("{detail}; over runtime budget {budget:?}");
    }
    let line = Line {
        id,
        name,
        ok,
        detail,
        elapsed,
    };
    let _ = writeln!(
        std::io::stderr(),
        "criterion {:>2} {} {:<28} {:>8.2}s  {}",
        line.id,
        if line.ok { "PASS" } else { "FAIL" },
        line.name,
        line.elapsed.as_secs_f64(),
        line.detail
    );
    line
}

// Tensors produced by criteria 1–3, re-used by criterion 4.
#[derive(Default)]
struct Produced {
    tensors: Vec<SchwarzianTensor>,
}

fn c1_moebius(p: &mut Produced) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let n = 2 + k % 2;
        let f = random_moebius::<f64, _>(&mut rng, n).map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let z = random_point::<f64, _>(&mut rng, n, 0.95);
            let t = schwarzian_tensor(&f, &z).map_err(|e| e.to_string())?;
            worst = worst.max(t.max_abs());
            p.tensors.push(t);
        }
    }
    ensure(worst < 1e-9, format!("max |S^k_ij| = {worst:.2e} over 100 maps x 50 points (< 1e-9)"))
}

fn c2_chain(p: &mut Produced) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let cats = [catalog::<f64>(2).unwrap(), catalog::<f64>(3).unwrap()];
    let mut worst = 0.0f64;
    for k in 0..50 {
        let cat = &cats[k % 2];
        let n = 2 + k % 2;
        let g = &cat[rng.gen_range(0..cat.len())];
        let f = &cat[rng.gen_range(0..cat.len())];
        for _ in 0..20 {
            let z = random_point::<f64, _>(&mut rng, n, 0.25);
            let r = chain_rule_residual(&g.map, &f.map, &z)
                .map_err(|e| format!("{} after {} at {z:?}: {e}", g.name, f.name))?;
            worst = worst.max(r);
            let gf = MapExpr::compose(g.map.clone(), f.map.clone()).unwrap();
            p.tensors.push(schwarzian_tensor(&gf, &z).unwrap());
            p.tensors.push(schwarzian_tensor(&g.map, &eval_map(&f.map, &z).unwrap()).unwrap());
        }
    }
    ensure(worst < 1e-8, format!("max chain-rule residual = {worst:.2e} over 50 pairs x 20 points (< 1e-8)"))
}

fn c3_hessian(p: &mut Produced) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut worst = 0.0f64;
    let mut maps = 0;
    for n in [2, 3] {
        for e in catalog::<f64>(n).unwrap() {
            maps += 1;
            for _ in 0..20 {
                let z = random_point::<f64, _>(&mut rng, n, 0.85);
                p.tensors.push(schwarzian_tensor(&e.map, &z).unwrap());
                for _ in 0..10 {
                    let v = random_vector::<f64, _>(&mut rng, n);
                    let r = hessian_residual(&e.map, &z, &v).map_err(|x| format!("{}: {x}", e.name))?;
                    worst = worst.max(r);
                }
            }
        }
    }
    ensure(
        worst < 1e-7,
        format!("max hessian residual = {worst:.2e} over {maps} maps x 20 points x 10 v (< 1e-7)"),
    )
}

fn c4_canonical(p: &Produced) -> Outcome {
    let worst = p.tensors.iter().map(canonical_residual).fold(0.0, f64::max);
    ensure(
        worst < 1e-9 && !p.tensors.is_empty(),
        format!("max trace residual = {worst:.2e} over {} tensors (< 1e-9)", p.tensors.len()),
    )
}

// max over p + q = 1/2 of sqrt(2(|p²/3|² + |2·pq/3|²)/…): with weights
// g_i = 2 at the origin and S¹_11 = 1/3, S²_12 = S²_21 = −1/3 the objective is
// (2/9)(p² + 4pq).
fn automorphism_oracle() -> f64 {
    let mut best = 0.0f64;
    let m = 200_000;
    for k in 0..=m {
        let p = 0.5 * k as f64 / m as f64;
        let q = 0.5 - p;
        best = best.max((2.0 / 9.0 * (p * p + 4.0 * p * q)).sqrt());
    }
    best
}

fn c5_automorphism() -> Outcome {
    let psi = MapExpr::automorphism(vec![c(0.5, 0.0), c(0.0, 0.0)]).unwrap();
    let val = operator_norm(&psi, &[c(0.0, 0.0), c(0.0, 0.0)], 8, 1e-12).unwrap().value;
    let oracle = automorphism_oracle();
    let closed = 6f64.sqrt() / 9.0;
    if (oracle - closed).abs() > 1e-9 || (val - oracle).abs() > 1e-6 {
        return Err(format!("operator norm {val:.9} vs oracle {oracle:.9} (sqrt6/9 = {closed:.9})"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut worst = f64::INFINITY;
    for k in 0..50 {
        let n = if k < 40 { 2 } else { 3 };
        let grid = if n == 2 {
            GridSpec::with_resolution(0.95, 6, 8, 1)
        } else {
            GridSpec::with_resolution(0.95, 3, 4, 1)
        };
        let psi = random_automorphism::<f64, _>(&mut rng, n, 0.7).unwrap();
        let a: Vec<Complex64> = match psi.kind() {
            polyschwarz::maps::MapKind::Automorphism { a } => a.clone(),
            _ => unreachable!(),
        };
        let amax = a.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let s = sup_norm_with(&psi, &grid, &sweep_options()).unwrap();
        worst = worst.min(2.0 * 2f64.sqrt() * amax + 1e-9 - s.value);
    }
    ensure(
        worst >= 0.0,
        format!("norm at 0 = {val:.9} (oracle {oracle:.9}); min margin to 2sqrt2|a| over 50 automorphisms = {worst:.3e}"),
    )
}

fn c6_lemma_suites() -> Outcome {
    let config = SuiteConfig {
        suites: vec![SuiteKind::TensorBounds, SuiteKind::AbBounds],
        seed: SEED,
        ..SuiteConfig::default()
    };
    let r = run_suite::<f64>(&config).map_err(|e| e.to_string())?;
    ensure(
        r.passed() && r.violations.is_empty(),
        format!(
            "{} cases, {} violations, worst margin {:.3e}",
            r.cases,
            r.violations.len(),
            r.worst_margin.unwrap_or(f64::NAN)
        ),
    )
}

// Blow-up of h' = 1.6c h/(1−x²) + 4.5c/(1−x²)² + h², h(0) = 0, by classical RK4
// in x with steps shrinking like 1/h; past h = 1e7, h' ≈ h² puts the pole at
// x + 1/h.
fn riccati_blowup_oracle(c: f64) -> Option<f64> {
    let rhs = |x: f64, h: f64| {
        let w = 1.0 - x * x;
        1.6 * c * h / w + 4.5 * c / (w * w) + h * h
    };
    let (mut x, mut h) = (0.0f64, 0.0f64);
    while x < 0.999_999 {
        let w = 1.0 - x * x;
        let dx = (1e-4f64).min(0.02 / (1.0 + h)).min(0.02 * w);
        let k1 = rhs(x, h);
        let k2 = rhs(x + dx / 2.0, h + dx / 2.0 * k1);
        let k3 = rhs(x + dx / 2.0, h + dx / 2.0 * k2);
        let k4 = rhs(x + dx, h + dx * k3);
        h += dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        x += dx;
        if h > 1e7 {
            return Some(x + 1.0 / h);
        }
    }
    None
}

fn c7_riccati() -> Outcome {
    let at = riccati_solve(1.0 / 6.1, 0.999).map_err(|e| e.to_string())?;
    let margin = at.worst_margin.unwrap_or(f64::NEG_INFINITY);
    // independent check of h ≤ x/(1−x²) on the samples
    let sample_ok = at.samples.iter().all(|(x, v)| v[0] <= x / (1.0 - x * x) * (1.0 + 1e-12));
    if !(at.is_completed() && at.envelope_ok && margin >= 0.0 && sample_ok) {
        return Err(format!("c = 1/6.1: status {:?}, margin {margin:e}", at.status));
    }
    let b = riccati_solve(0.2, 0.999).map_err(|e| e.to_string())?;
    let Some((x1, lo, hi)) = b.blowup() else {
        return Err(format!("c = 0.2 did not blow up: {:?}", b.status));
    };
    let oracle = riccati_blowup_oracle(0.2).ok_or("oracle did not blow up")?;
    if !(x1 < 1.0 && hi - lo <= 1e-6 && lo <= x1 && x1 <= hi && (x1 - oracle).abs() < 1e-5) {
        return Err(format!("c = 0.2: x1 = {x1} in [{lo}, {hi}], oracle {oracle}"));
    }
    let mut first_blow: Option<f64> = None;
    let mut prev_x1 = 1.0f64;
    for k in 0..20 {
        let cc = 0.5 * k as f64 / 19.0;
        let out = riccati_solve(cc, 0.999).map_err(|e| e.to_string())?;
        match (out.blowup(), first_blow) {
            (Some((x, _, _)), _) => {
                if x > prev_x1 + 1e-12 {
                    return Err(format!("blow-up point not decreasing at c = {cc}"));
                }
                prev_x1 = x;
                first_blow.get_or_insert(cc);
            }
            (None, Some(cb)) => return Err(format!("c = {cc} completes after c = {cb} blew up")),
            (None, None) => {
                if !out.envelope_ok && cc <= 1.0 / 6.1 {
                    return Err(format!("envelope fails at c = {cc}"));
                }
            }
        }
    }
    Ok(format!(
        "c=1/6.1 completes (margin {margin:.3e}); c=0.2 blows up at {x1:.9} (width {:.1e}, oracle {oracle:.9}); first blow-up on grid at c={:.4}",
        hi - lo,
        first_blow.unwrap_or(f64::NAN)
    ))
}

fn c8_linear_envelope() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut runs = 0;
    for i in 0..=8 {
        for j in 0..=20 {
            let (a, b) = (0.25 * i as f64, 0.25 * j as f64);
            let out = linear_comparison_check(a, b, 0.99).map_err(|e| e.to_string())?;
            runs += 1;
            // closed-form bound recomputed here: 2((1+x)/(1−x))^{(a+c−1)/2}
            let cc = (1.0 + b + a * a).sqrt();
            for (x, v) in &out.samples {
                let bound = 2.0 * ((1.0 + x) / (1.0 - x)).powf((a + cc - 1.0) / 2.0);
                worst = worst.min((bound - v[0]) / bound);
            }
            if !out.envelope_ok || !out.is_completed() {
                return Err(format!("(a, b) = ({a}, {b}): envelope_ok = {}", out.envelope_ok));
            }
        }
    }
    ensure(worst >= -1e-6, format!("{runs} runs, min relative margin of h = {worst:.3e} (>= -1e-6)"))
}

fn c9_transport() -> Outcome {
    let f = MapExpr::moebius_linear_form(&[c(0.5, 0.0), c(0.0, 0.0)]).unwrap();
    let zeta = [c(1.0, 0.0), c(0.0, 0.0)];
    let out = transport_ray(
        &f,
        &zeta,
        c(1.0, 0.0),
        &[c(-0.5, 0.0), c(0.0, 0.0)],
        0.99,
        &polyschwarz::ode::OdeOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    if out.status != (OdeStatus::CompletedTo { t_end: 0.99 }) {
        return Err(format!("status {:?}", out.status));
    }
    let path = out.ray_path();
    let mut worst = 0.0f64;
    for (t, u) in path.t.iter().zip(&path.u) {
        // oracle: J_f = l^{-3} with l = 1 − 0.5 t, so u = J^{-1/3}
        let j = map_jet(&f, &[c(*t, 0.0), c(0.0, 0.0)]).unwrap().jacobian_det();
        let oracle = j.powf(-1.0 / 3.0);
        worst = worst.max((u - c(1.0 - 0.5 * t, 0.0)).norm()).max((u - oracle).norm());
    }
    ensure(
        worst < 1e-8 && *path.t.last().unwrap() == 0.99,
        format!("max |u - (1 - t/2)| = {worst:.2e} over {} samples to t = 0.99", path.t.len()),
    )
}

fn c10_order() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let mut msgs = Vec::new();
    for n in 2..=6 {
        let r = moebius_order(n).map_err(|e| e.to_string())?;
        // oracle: random feasible points never beat a vertex, which gives n+1
        let mut sampled = 0.0f64;
        for _ in 0..2000 {
            let mut p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powi(4)).collect();
            let s: f64 = p.iter().sum::<f64>() / rng.gen::<f64>().max(1e-3);
            p.iter_mut().for_each(|x| *x /= s.max(1.0));
            sampled = sampled.max(moebius_objective(&p));
        }
        let mut e1 = vec![0.0; n];
        e1[0] = 1.0;
        let vertex = (n as f64 + 1.0) * e1.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
        if r.value != (n + 1) as f64 || (r.numeric - r.value).abs() > 1e-6 || sampled > vertex || vertex != r.value {
            return Err(format!("n = {n}: value {} numeric {} sampled {sampled}", r.value, r.numeric));
        }
        msgs.push(format!("{}", r.value));
    }
    Ok(format!("lambda_0 = {} for n = 2..6; numeric search within 1e-6", msgs.join(", ")))
}

fn c11_dilation() -> Outcome {
    let mut worst_ratio = f64::INFINITY;
    let mut worst_grad = 0.0f64;
    let mut checks = 0;
    for n in [2, 3] {
        let grid = if n == 2 {
            GridSpec::with_resolution(0.0, 4, 6, 1)
        } else {
            GridSpec::with_resolution(0.0, 3, 4, 1)
        };
        for e in catalog::<f64>(n).unwrap() {
            for r in [0.1, 0.2, 0.3, 0.4] {
                for s in [0.5, 0.7, 0.9] {
                    let d = dilation_contraction_check(&e.map, r, s, &grid, &sweep_options())
                        .map_err(|x| format!("{} r={r} s={s}: {x}", e.name))?;
                    let factor = s * ((1.0 - s * s * r * r) / (1.0 - r * r)).powi(2);
                    if (factor - d.factor).abs() > 1e-15 {
                        return Err(format!("factor {} vs {factor}", d.factor));
                    }
                    worst_ratio = worst_ratio.min(factor + 1e-7 - d.ratio);
                    worst_grad = worst_grad.max(d.grad_residual);
                    checks += 1;
                }
            }
        }
    }
    ensure(
        worst_ratio >= 0.0 && worst_grad <= 1e-10,
        format!("{checks} checks; min (factor + 1e-7 - ratio) = {worst_ratio:.3e}; max grad residual = {worst_grad:.2e}"),
    )
}

fn c12_small_alpha() -> Outcome {
    let mut parts = Vec::new();
    for (n, eps) in [(2, 0.002), (2, 0.003), (3, 0.001), (3, 0.0015)] {
        let f = perturbation::<f64>(n, eps).unwrap();
        let grid = GridSpec::default_for(n, 0.95);
        let alpha = sup_norm_with(&f, &grid, &sweep_options()).map_err(|e| e.to_string())?.value;
        let small = (n as f64).powf(1.5) * alpha;
        if small > SMALL_ALPHA_THRESHOLD {
            return Err(format!("n={n} eps={eps}: n sqrt(n) alpha = {small:.4} above 1/6.1"));
        }
        let r = envelope_check_u(&f, alpha, 32, 0.95, SEED).map_err(|e| e.to_string())?;
        if !(r.applicable && r.ok && r.violations.is_empty() && !r.zero_found) {
            return Err(format!(
                "n={n} eps={eps}: {} violations, worst margin {:.3e}",
                r.violations.len(),
                r.worst_margin
            ));
        }
        parts.push(format!("n={n} eps={eps} nsqrtn*alpha={small:.3} worst={:.2e}", r.worst_margin));
    }
    Ok(parts.join("; "))
}

fn all_multi_indices(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = 4usize.pow(n as u32);
    for mut idx in 0..total {
        let mi: Vec<usize> = (0..n)
            .map(|_| {
                let d = idx % 4;
                idx /= 4;
                d
            })
            .collect();
        let ord: usize = mi.iter().sum();
        if (1..=3).contains(&ord) {
            out.push(mi);
        }
    }
    out
}

fn c13_jets() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 13);
    let cfg = CauchyConfig {
        nodes: 32,
        radii: None,
    };
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for n in [2, 3] {
        let idx = all_multi_indices(n);
        let cat = catalog::<f64>(n).unwrap();
        let points: Vec<Vec<Complex64>> = (0..50).map(|_| random_point::<f64, _>(&mut rng, n, 0.6)).collect();
        for e in &cat {
            for z in &points {
                let mj = map_jet(&e.map, z).map_err(|x| x.to_string())?;
                for mi in &idx {
                    let oracle = cauchy_all_components(&e.map, z, mi, &cfg).map_err(|x| x.to_string())?;
                    for (k, o) in oracle.iter().enumerate() {
                        let d = mj.components[k].derivative(mi).unwrap();
                        worst = worst.max((d - o).norm() / o.norm().max(1.0));
                        compared += 1;
                    }
                }
            }
        }
    }
    ensure(worst < 1e-8, format!("{compared} derivatives, max relative deviation {worst:.2e} (< 1e-8)"))
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let mut produced = Produced::default();
    let mut lines = vec![
        run_criterion(1, "moebius annihilation", s(10), || c1_moebius(&mut produced)),
    ];
    lines.push(run_criterion(2, "chain rule", s(20), || c2_chain(&mut produced)));
    lines.push(run_criterion(3, "u0 solves the system", s(60), || c3_hessian(&mut produced)));
    lines.push(run_criterion(4, "canonical form", s(60), || c4_canonical(&produced)));
    lines.push(run_criterion(5, "automorphism norm", s(60), c5_automorphism));
    lines.push(run_criterion(6, "tensor and A/B bound suites", s(60), c6_lemma_suites));
    lines.push(run_criterion(7, "riccati threshold", s(5), c7_riccati));
    lines.push(run_criterion(8, "linear comparison envelope", s(30), c8_linear_envelope));
    lines.push(run_criterion(9, "transport fidelity", s(1), c9_transport));
    lines.push(run_criterion(10, "order extremal", s(60), c10_order));
    lines.push(run_criterion(11, "dilation contraction", s(120), c11_dilation));
    lines.push(run_criterion(12, "small-alpha envelopes", s(120), c12_small_alpha));
    lines.push(run_criterion(13, "jets vs cauchy oracle", s(30), c13_jets));
    let failed: Vec<usize> = lines.iter().filter(|l| !l.ok).map(|l| l.id).collect();
    let total: f64 = lines.iter().map(|l| l.elapsed.as_secs_f64()).sum();
    let _ = writeln!(
        std::io::stderr(),
        "acceptance: {}/{} criteria passed in {total:.1}s",
        lines.len() - failed.len(),
        lines.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn grid_covers_ray_region() {
    // the small-alpha sweep covers |z|∞ ≤ 0.95, the region the rays traverse
    for n in [2, 3] {
        let g = GridSpec::default_for(n, 0.95);
        let pts = grid_points::<f64>(n, &g);
        let far = pts
            .iter()
            .map(|z| z.iter().map(|c| c.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        assert!((far - 0.95).abs() < 1e-12);
    }
}
