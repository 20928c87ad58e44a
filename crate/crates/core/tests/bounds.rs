use proptest::prelude::*;
use serde_json::Value;
use trotterforge::bounds::*;

fn evaluate(q: &Value) -> BoundReport {
    let f = |k: &str| q[k].as_f64().unwrap();
    let u = |k: &str| q[k].as_u64().unwrap();
    match q["kind"].as_str().unwrap() {
        "diag" => {
            let gates = match q.get("arbitrary_c") {
                Some(c) => GateSet::Arbitrary { c: c.as_f64().unwrap() },
                None => GateSet::Finite(u("k")),
            };
            let query = DiagQuery { mu: u("mu") as u32, theta_max: f("theta_max"), delta: f("delta"), b: u("b"), gates };
            diag_synthesis_lower_bound(&query).unwrap()
        }
        "ham" => commuting_ham_lower_bound(&HamQuery {
            n: u("n"),
            t: f("t"),
            epsilon: f("epsilon"),
            b: u("b"),
            gates: GateSet::Finite(u("k")),
            c_red: f("c_red"),
        })
        .unwrap(),
        "discrete" => discrete_diag_lower_bound(&DiscreteQuery {
            mu: u("mu") as u32,
            m: u("m") as u32,
            delta: f("delta"),
            b: u("b"),
            gates: GateSet::Finite(u("k")),
            c: f("c"),
        })
        .unwrap(),
        "coeff" => coeff_oracle_lower_bound(&CoeffQuery {
            n: u("n"),
            m: u("m") as u32,
            epsilon: f("epsilon"),
            b: u("b"),
            gates: GateSet::Finite(u("k")),
            c: f("c"),
            c_poly: f("c_poly"),
        })
        .unwrap(),
        other => panic!("unknown kind {other}"),
    }
}

#[test]
fn matches_high_precision_oracle() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/bounds_oracle.json")).unwrap();
    let queries: Vec<Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(queries.len(), 100);
    let mut kinds = std::collections::BTreeSet::new();
    for q in &queries {
        kinds.insert(q["kind"].as_str().unwrap().to_string());
        let r = evaluate(q);
        let expected = q["expected_bound"].as_f64().unwrap();
        assert!(!r.vacuous, "{q}");
        let rel = (r.bound - expected).abs() / expected;
        assert!(rel <= 1e-12, "{q}: got {} rel {rel:e}", r.bound);
    }
    assert_eq!(kinds.len(), 4);
}

fn diag(mu: u32, delta: f64, b: u64, k: u64) -> f64 {
    diag_synthesis_lower_bound(&DiagQuery { mu, theta_max: 1.0, delta, b, gates: GateSet::Finite(k) }).unwrap().bound
}

fn ham(n: u64, eps: f64, b: u64, k: u64) -> f64 {
    let q = HamQuery { n, t: 1.0, epsilon: eps, b, gates: GateSet::Finite(k), c_red: 0.0 };
    commuting_ham_lower_bound(&q).unwrap().bound
}

fn discrete(mu: u32, delta: f64, b: u64, k: u64) -> f64 {
    let q = DiscreteQuery { mu, m: 60, delta, b, gates: GateSet::Finite(k), c: 1.0 };
    discrete_diag_lower_bound(&q).unwrap().bound
}

fn coeff(n: u64, eps: f64, b: u64, k: u64) -> f64 {
    let q = CoeffQuery { n, m: 60, epsilon: eps, b, gates: GateSet::Finite(k), c: 1.0, c_poly: 0.05 };
    coeff_oracle_lower_bound(&q).unwrap().bound
}

proptest! {
    #[test]
    fn diag_monotone(mu in 1u32..12, d in 1e-8f64..0.6, s in 0.1f64..0.99, b in 12u64..64, k in 1u64..1000) {
        prop_assert!(diag(mu + 1, d, b, k) >= diag(mu, d, b, k));
        prop_assert!(diag(mu, d * s, b, k) >= diag(mu, d, b, k));
        prop_assert!(diag(mu, d, b + 1, k) <= diag(mu, d, b, k));
        prop_assert!(diag(mu, d, b, k + 1) <= diag(mu, d, b, k));
    }

    // 3ε stays below 1/√2, where the arcsine ball radius peaks.
    #[test]
    fn ham_monotone(n in 4u64..200, e in 1e-9f64..0.23, s in 0.1f64..0.99, extra in 0u64..64, k in 1u64..1000) {
        let b = n + 1 + extra;
        prop_assert!(ham(n, e * s, b, k) >= ham(n, e, b, k));
        prop_assert!(ham(n, e, b + 1, k) <= ham(n, e, b, k));
        prop_assert!(ham(n, e, b, k + 1) <= ham(n, e, b, k));
        prop_assert!(ham(n + 1, e, b, k) >= ham(n, e, b, k));
    }

    #[test]
    fn discrete_and_coeff_monotone(mu in 1u32..12, n in 2u64..100, d in 1e-12f64..0.5, s in 0.1f64..0.99, extra in 0u64..40, k in 1u64..1000) {
        let b = 80 + extra;
        prop_assert!(discrete(mu + 1, d, b, k) >= discrete(mu, d, b, k));
        prop_assert!(discrete(mu, d * s, b, k) >= discrete(mu, d, b, k));
        prop_assert!(discrete(mu, d, b + 1, k) <= discrete(mu, d, b, k));
        prop_assert!(discrete(mu, d, b, k + 1) <= discrete(mu, d, b, k));
        let b = 200 + extra;
        prop_assert!(coeff(n + 1, d, b, k) >= coeff(n, d, b, k));
        prop_assert!(coeff(n, d, b + 1, k) <= coeff(n, d, b, k));
        prop_assert!(coeff(n, d, b, k + 1) <= coeff(n, d, b, k));
    }
}
