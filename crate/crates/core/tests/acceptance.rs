//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use trotterforge::blockenc::*;
use trotterforge::bounds::*;
use trotterforge::chem::*;
use trotterforge::circuit::*;
use trotterforge::compilers::*;
use trotterforge::costmodel::*;
use trotterforge::decomp::*;
use trotterforge::hamlib::*;
use trotterforge::lowrank::rank_profile;
use trotterforge::trotter::{log_log_slope, StageExponentials};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn cover_counts(n: usize, records: &[RectangleRecord]) -> Result<(), String> {
    let mut hits: HashMap<(usize, usize), usize> = HashMap::new();
    for r in records {
        for p in r.index_pairs() {
            *hits.entry(p).or_default() += 1;
        }
    }
    for u in 1..=n {
        for v in u + 1..=n {
            let c = hits.get(&(u, v)).copied().unwrap_or(0);
            ensure(c == 1, format!("n={n}: pair ({u},{v}) covered {c} times"))?;
        }
    }
    ensure(hits.len() == n * (n - 1) / 2, format!("n={n}: stray pairs"))
}

fn criterion_1() -> Check {
    let mut listings = 0;
    for n in [2usize, 4, 8, 16, 32] {
        let bis = bisection_decompose(n).map_err(err)?;
        cover_counts(n, &bis.listing())?;
        listings += 1;
        if n >= 4 {
            let mut cutoff = 1;
            while cutoff <= n / 4 {
                cover_counts(n, &lowrank_decompose(n, cutoff).map_err(err)?.listing())?;
                listings += 1;
                cutoff *= 2;
            }
        }
        for m in 1..=n / 2 {
            let mut records = Vec::new();
            for pair in &bis.pairs {
                let h = pair.left.len();
                let sub = Subdivision::new(h, m.min(h)).map_err(err)?;
                for rect in sub.cell_rects(pair.left, pair.right) {
                    records.push(RectangleRecord {
                        layer: pair.layer,
                        block: pair.block,
                        left: [rect.rows.lo, rect.rows.hi],
                        right: [rect.cols.lo, rect.cols.hi],
                        kind: RectKind::Near,
                    });
                }
            }
            cover_counts(n, &records)?;
            listings += 1;
        }
    }
    Ok(format!("{listings} listings cover every pair once"))
}

fn random_pauli_string(qubits: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let ops: Vec<(usize, PauliKind)> = (0..qubits).map(|q| (q, PauliKind::ALL[rng.gen_range(0..4)])).collect();
    pauli_matrix(qubits, &ops)
}

fn random_lcu(qubits: usize, terms: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, CMatrix)> {
    (0..terms)
        .map(|_| {
            let p = random_pauli_string(qubits, rng);
            let p = if rng.gen_bool(0.5) { p } else { -p };
            (rng.gen_range(0.1..2.0), p)
        })
        .collect()
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    while instances < 24 {
        let qubits = rng.gen_range(1..=3);
        let terms = rng.gen_range(1..=4);
        let lcu = random_lcu(qubits, terms, &mut rng);
        let enc = build_lcu_encoding(&lcu).map_err(err)?;
        ensure(enc.u.nrows() <= 32, "instance exceeds 5 qubits")?;
        let lambda: f64 = lcu.iter().map(|t| t.0).sum();
        let mut h = CMatrix::zeros(1 << qubits, 1 << qubits);
        for (w, p) in &lcu {
            h += p * Complex64::new(*w / lambda, 0.0);
        }
        worst = worst.max(spectral_norm(&(enc.encoded() - h)));
        instances += 1;
    }
    ensure(worst <= 1e-9, format!("encoding residual {worst:e}"))?;
    let mut prep_worst: f64 = 0.0;
    let mut preps = 0;
    for (n, alpha, seed) in [(8usize, 1.0, 1u64), (16, 2.0, 2), (32, 3.0, 3), (16, 0.5, 4)] {
        let spec: HamiltonianSpec<f64> =
            build_power_law(n, 1, alpha, (PauliKind::Z, PauliKind::Z), SignRule::SeededRandom(seed)).map_err(err)?;
        let m = spec.pair((PauliKind::Z, PauliKind::Z)).unwrap();
        for pair in &bisection_decompose(n).map_err(err)?.pairs {
            let prep = build_boxed_preparation(m, pair, &PreparationConfig::exact()).map_err(err)?;
            prep_worst = prep_worst.max((prep.success_probability - 1.0 / prep.ratio).abs());
            preps += 1;
        }
    }
    ensure(prep_worst <= 1e-9, format!("success probability off by {prep_worst:e}"))?;
    Ok(format!("{instances} encodings residual {worst:.1e}; {preps} preparations off by {prep_worst:.1e}"))
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let count = 12;
    for i in 0..count {
        let qubits = 1 + i % 2;
        let terms = 1 + i % 3;
        let lcu = random_lcu(qubits, terms, &mut rng);
        let enc = build_lcu_encoding(&lcu).map_err(err)?;
        let eig = enc.encoded().symmetric_eigen();
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let got = walk_operator(&enc).map_err(err)?.relevant_phases();
        let d = phase_multiset_distance(&got, &expected_walk_phases(&values))
            .ok_or_else(|| format!("instance {i}: phase count {} mismatch", got.len()))?;
        worst = worst.max(d);
    }
    ensure(worst <= 1e-7, format!("phase distance {worst:e}"))?;
    Ok(format!("{count} walk operators, max phase distance {worst:.1e}"))
}

fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    }
}

fn criterion_4() -> Check {
    let n = 256;
    let decomp = lowrank_decompose(n, 1).map_err(err)?;
    let tols = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];
    let mut summary = Vec::new();
    for alpha in [1.0, 2.0, 3.0] {
        let spec: HamiltonianSpec<f64> =
            build_power_law(n, 1, alpha, (PauliKind::Z, PauliKind::Z), SignRule::AllPositive).map_err(err)?;
        let mut ranks = Vec::new();
        for &tol in &tols {
            ranks.push(rank_profile(&spec, &decomp, tol).map_err(err)?.rho_max as f64);
        }
        let logs: Vec<f64> = tols.iter().map(|t| (1.0 / t).ln()).collect();
        let r2 = r_squared(&logs, &ranks);
        let max = ranks.iter().cloned().fold(0.0, f64::max);
        ensure(r2 >= 0.9 && max <= 25.0, format!("alpha={alpha}: R²={r2:.3}, ranks {ranks:?}"))?;
        summary.push(format!("α={alpha} R²={r2:.3} ρmax={max}"));
    }
    Ok(summary.join(", "))
}

fn mixed_spec(n: usize) -> trotterforge::Result<HamiltonianSpec<f64>> {
    let zz: HamiltonianSpec<f64> = build_power_law(n, 1, 2.0, (PauliKind::Z, PauliKind::Z), SignRule::AllPositive)?;
    let xx: HamiltonianSpec<f64> = build_power_law(n, 1, 2.0, (PauliKind::X, PauliKind::X), SignRule::Alternating)?;
    zz.with_two_local((PauliKind::X, PauliKind::X), xx.pair((PauliKind::X, PauliKind::X)).unwrap().clone())?
        .with_on_site(PauliKind::X, vec![0.7; n])
}

fn criterion_5() -> Check {
    let n = 8;
    let spec: HamiltonianSpec<f64> =
        build_power_law(n, 1, 2.0, (PauliKind::Z, PauliKind::Z), SignRule::SeededRandom(5)).map_err(err)?;
    let t = 0.3;
    let exact = exact_evolution(&spec, t).map_err(err)?;
    let cfg = CompileConfig::new(t, 1, Mode::Verify).map_err(err)?;
    let steps = [
        compile_sequential_step(&spec, &cfg).map_err(err)?,
        compile_lowrank_step(&spec, 1e-12, 1, &cfg).map_err(err)?,
        compile_avgcost_step(&spec, 2, &cfg).map_err(err)?,
    ];
    let mut worst: f64 = 0.0;
    for s in &steps {
        let u = circuit_to_unitary(s.circuit.as_ref().unwrap()).map_err(err)?;
        let d = spectral_distance(&u, &exact).map_err(err)?;
        ensure(d <= 1e-9, format!("{} distance {d:e}", s.method))?;
        worst = worst.max(d);
    }
    let spec = mixed_spec(4).map_err(err)?;
    let times = [0.05, 0.1, 0.2];
    let mut slopes = Vec::new();
    for p in [1u32, 2, 4] {
        let mut errs = Vec::new();
        for &t in &times {
            let cfg = CompileConfig::new(t, p, Mode::Verify).map_err(err)?;
            let step = compile_sequential_step(&spec, &cfg).map_err(err)?;
            let u = circuit_to_unitary(step.circuit.as_ref().unwrap()).map_err(err)?;
            errs.push(spectral_distance(&u, &exact_evolution(&spec, t).map_err(err)?).map_err(err)?);
        }
        let slope = log_log_slope(&times, &errs);
        ensure((slope - (p + 1) as f64).abs() <= 0.25, format!("p={p}: slope {slope:.3}, errors {errs:?}"))?;
        slopes.push(format!("p={p}:{slope:.2}"));
    }
    Ok(format!("commuting distance {worst:.1e}; mixed slopes {}", slopes.join(" ")))
}

fn half_norm(n: usize, alpha: f64) -> trotterforge::Result<f64> {
    let spec: HamiltonianSpec<f64> = build_power_law(n, 1, alpha, (PauliKind::Z, PauliKind::Z), SignRule::AllPositive)?;
    let region = IndexRegion::single(Rect::new(Interval::new(1, n / 2), Interval::new(n / 2 + 1, n)));
    spec.pair((PauliKind::Z, PauliKind::Z)).unwrap().norm(&NormKind::Restricted1(&region))
}

fn criterion_6() -> Check {
    let sizes = [8usize, 16, 32, 64, 128, 256];
    let cubic: Vec<f64> = sizes.iter().map(|&n| half_norm(n, 3.0)).collect::<Result<_, _>>().map_err(err)?;
    let spread = cubic.iter().cloned().fold(0.0, f64::max) / cubic.iter().cloned().fold(f64::MAX, f64::min);
    ensure(spread < 2.0, format!("α=3 spread {spread:.3}"))?;
    let linear: Vec<f64> = sizes.iter().map(|&n| half_norm(n, 1.0)).collect::<Result<_, _>>().map_err(err)?;
    let x: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let slope = log_log_slope(&x, &linear);
    ensure((slope - 1.0).abs() <= 0.15, format!("α=1 exponent {slope:.3}"))?;
    Ok(format!("α=3 spread {spread:.3}, α=1 exponent {slope:.3}"))
}

fn criterion_7() -> Check {
    let sweep = [64usize, 128, 256, 512, 1024];
    let (t, eps) = (0.1, 1e-3);
    let seq = gate_count_report(CostMethod::Sequential, 2.0, 1, t, eps, &sweep).map_err(err)?;
    ensure((seq.fitted_exponent - 2.0).abs() <= 0.1, format!("sequential exponent {:.3}", seq.fitted_exponent))?;
    let mut parts = vec![format!("sequential {:.3}", seq.fitted_exponent)];
    for alpha in [1.0, 2.0, 3.0] {
        let r = gate_count_report(CostMethod::Lowrank, alpha, 1, t, eps, &sweep).map_err(err)?;
        ensure(r.fitted_exponent_reduced <= 1.2, format!("lowrank α={alpha} exponent {:.3}", r.fitted_exponent_reduced))?;
        parts.push(format!("lowrank α={alpha} {:.3}", r.fitted_exponent_reduced));
    }
    for alpha in [2.0, 3.0] {
        let r = gate_count_report(CostMethod::Block, alpha, 1, t, eps, &sweep).map_err(err)?;
        ensure(r.fitted_exponent_reduced <= 1.2, format!("block α={alpha} exponent {:.3}", r.fitted_exponent_reduced))?;
        parts.push(format!("block α={alpha} {:.3}", r.fitted_exponent_reduced));
    }
    Ok(parts.join(", "))
}

fn criterion_8() -> Check {
    let sweep: Vec<u64> = (4..=20).map(|k| 1u64 << k).collect();
    let cases: Vec<(u32, u32, u64, f64, u32)> = vec![
        (1, 1, 2, 1.0, 0),
        (1, 1, 2, 2.0, 0),
        (1, 1, 2, 0.5, 0),
        (2, 1, 2, 1.0, 0),
        (1, 1, 2, 1.0, 1),
        (2, 2, 4, 1.0, 0),
        (1, 0, 2, 1.0, 0),
        (4, 0, 2, 1.0, 2),
    ];
    let mut worst: f64 = 0.0;
    for (m1, m2, m, alpha, k) in cases {
        let cost: Arc<CostFn> = Arc::new(move |n: u64| (n as f64).powf(alpha) * (n as f64).log2().max(1.0).powi(k as i32));
        let rec = Recurrence::new(1.0, 2, m1, m2, m, cost).map_err(err)?.with_declared(alpha, k);
        let s = class_ratio_spread(&rec, &sweep).map_err(err)?;
        ensure(s <= 3.0, format!("recurrence ({m1},{m2},{m},{alpha},{k}) spread {s:.3}"))?;
        worst = worst.max(s);
    }
    let ratios: Vec<f64> = sweep
        .iter()
        .map(|&n| coupled_lowrank_cost(n, &|x| x as f64) / (n as f64 * (n as f64).log2()))
        .collect();
    let coupled = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::MAX, f64::min);
    ensure(coupled <= 3.0, format!("coupled system spread {coupled:.3}"))?;
    Ok(format!("max class spread {worst:.3}, coupled n·log n spread {coupled:.3}"))
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 4;
    let m = CoeffMatrix::from_upper_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let g = compile_hamming2_reduction(&m, Mode::Verify).map_err(err)?;
    let c = g.circuit.as_ref().unwrap();
    ensure(c.qubit_count <= 14, format!("{} qubits", c.qubit_count))?;
    let (mut phase_err, mut leak): (f64, f64) = (0.0, 0.0);
    for j in 1..=n {
        for k in 1..=n {
            let input = g.layout.input_index(j, k);
            let mut s = StateVector::basis(c.qubit_count, input).map_err(err)?;
            s.apply(c).map_err(err)?;
            let want = if j == k { Complex64::new(1.0, 0.0) } else { Complex64::from_polar(1.0, -4.0 * m.sym(j, k)) };
            phase_err = phase_err.max((s.amps[input] - want).norm());
            let rest: f64 = s.amps.iter().enumerate().filter(|(i, _)| *i != input).map(|(_, a)| a.norm_sqr()).sum();
            leak = leak.max(rest.sqrt());
        }
    }
    ensure(phase_err <= 1e-8, format!("phase error {phase_err:e}"))?;
    ensure(leak <= 1e-9, format!("ancilla leakage {leak:e}"))?;
    Ok(format!("{} qubits, phase error {phase_err:.1e}, leakage {leak:.1e}", c.qubit_count))
}

fn evaluate_bound(q: &Value) -> trotterforge::Result<BoundReport> {
    let f = |k: &str| q[k].as_f64().unwrap();
    let u = |k: &str| q[k].as_u64().unwrap();
    let finite = GateSet::Finite(u("k"));
    match q["kind"].as_str().unwrap() {
        "diag" => {
            let gates = match q.get("arbitrary_c") {
                Some(c) => GateSet::Arbitrary { c: c.as_f64().unwrap() },
                None => finite,
            };
            diag_synthesis_lower_bound(&DiagQuery { mu: u("mu") as u32, theta_max: f("theta_max"), delta: f("delta"), b: u("b"), gates })
        }
        "ham" => commuting_ham_lower_bound(&HamQuery { n: u("n"), t: f("t"), epsilon: f("epsilon"), b: u("b"), gates: finite, c_red: f("c_red") }),
        "discrete" => discrete_diag_lower_bound(&DiscreteQuery {
            mu: u("mu") as u32,
            m: u("m") as u32,
            delta: f("delta"),
            b: u("b"),
            gates: finite,
            c: f("c"),
        }),
        _ => coeff_oracle_lower_bound(&CoeffQuery {
            n: u("n"),
            m: u("m") as u32,
            epsilon: f("epsilon"),
            b: u("b"),
            gates: finite,
            c: f("c"),
            c_poly: f("c_poly"),
        }),
    }
}

fn criterion_10() -> Check {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/bounds_oracle.json")).map_err(err)?;
    let queries: Vec<Value> = serde_json::from_str(&text).map_err(err)?;
    let mut worst: f64 = 0.0;
    for q in &queries {
        let r = evaluate_bound(q).map_err(err)?;
        let want = q["expected_bound"].as_f64().unwrap();
        worst = worst.max((r.bound - want).abs() / want.abs());
    }
    ensure(queries.len() == 100 && worst <= 1e-12, format!("{} queries, max relative error {worst:e}", queries.len()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut checks = 0;
    for _ in 0..200 {
        let (d1, d2) = (rng.gen_range(1e-6..0.7), rng.gen_range(1e-6..0.7));
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let mu = rng.gen_range(1..6);
        let k = rng.gen_range(2..500);
        let diag = |delta: f64| {
            diag_synthesis_lower_bound(&DiagQuery { mu, theta_max: 1.0, delta, b: 8, gates: GateSet::Finite(k) }).map(|r| r.bound)
        };
        ensure(diag(lo).map_err(err)? >= diag(hi).map_err(err)? - 1e-12, format!("diag bound not monotone at {lo}, {hi}"))?;
        let (e1, e2) = (lo / 4.0, hi / 4.0);
        let ham = |epsilon: f64| {
            commuting_ham_lower_bound(&HamQuery { n: 16, t: 1.0, epsilon, b: 16, gates: GateSet::Finite(k), c_red: 0.0 }).map(|r| r.bound)
        };
        ensure(ham(e1).map_err(err)? >= ham(e2).map_err(err)? - 1e-12, format!("ham bound not monotone at {e1}, {e2}"))?;
        checks += 2;
    }
    Ok(format!("100 queries, max relative error {worst:.1e}; {checks} monotonicity checks"))
}

fn criterion_11() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let times = [0.05, 0.1, 0.2];
    let instances = 16;
    let calibration = 6;
    let mut ratios: Vec<Vec<f64>> = Vec::new();
    let mut worst_slope: f64 = 0.0;
    for i in 0..instances {
        let modes = 4 + i % 3;
        let sys = random_toy_system(modes, 2, &mut rng).map_err(err)?;
        let jw = jw_matrix(&sys).map_err(err)?;
        let stages = StageExponentials::new(&jw.stages()).map_err(err)?;
        let norms = sys.norms().map_err(err)?;
        let mut row = Vec::new();
        for p in [1u32, 2] {
            let formula = make_product_formula(p).map_err(err)?;
            let errs: Vec<f64> = times
                .iter()
                .map(|&t| subspace_distance(&stages.product_formula(&formula, t), &stages.exact(t), sys.eta))
                .collect::<Result<_, _>>()
                .map_err(err)?;
            let slope = log_log_slope(&times, &errs);
            let dev = (slope - (p + 1) as f64).abs();
            ensure(dev <= 0.25, format!("instance {i} p={p}: slope {slope:.3}"))?;
            worst_slope = worst_slope.max(dev);
            row.extend(times.iter().zip(&errs).map(|(&t, e)| e / norms.bound_expression(p, t)));
        }
        ratios.push(row);
    }
    let c = 2.0 * ratios[..calibration].iter().flatten().cloned().fold(0.0, f64::max);
    let held = ratios[calibration..].iter().flatten().cloned().fold(0.0, f64::max);
    ensure(held <= c, format!("held-out ratio {held:.3} exceeds C = {c:.3}"))?;
    Ok(format!("{instances} instances, C = {c:.3}, held-out max ratio {held:.3}, max slope deviation {worst_slope:.3}"))
}

fn criterion_12() -> Check {
    let rows = norm_scaling_report(&[3, 4, 5, 6, 7, 8, 9], EtaRule::HalfFilling, |n| n as f64).map_err(err)?;
    let r: Vec<f64> = rows.iter().map(|r| r.nu_ratio).collect();
    let spread = r.iter().cloned().fold(0.0, f64::max) / r.iter().cloned().fold(f64::MAX, f64::min);
    ensure(spread < 3.0, format!("ratio spread {spread:.3}: {r:?}"))?;
    Ok(format!("ratio spread {spread:.3} over g = 3..9"))
}

fn main() {
    let criteria: [(usize, fn() -> Check); 12] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
    ];
    let mut failed = Vec::new();
    for (id, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {id}: PASS ({detail}; {elapsed:.2} s)"),
            Err(detail) => {
                println!("criterion {id}: FAIL ({detail}; {elapsed:.2} s)");
                failed.push(id);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
