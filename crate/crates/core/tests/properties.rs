use proptest::prelude::*;

use semifix::cli::expr::{parse_map, BinOp, Expr, Func2};
use semifix::contractions::{verify_on_finite, ContractionSpec, MinConstant};
use semifix::contractions::{banach_constant, chatterjea_constant, kannan_constant, perimeter_constant};
use semifix::finitelab::{classify, random_instance, Model};
use semifix::solver::error_bound;
use semifix::spaces::{check_tr_finite, validate_finite, RealLine, Space};
use semifix::triangle::{c_alpha, check_axioms, nested_bound, psi_inverse, ExtReal, TriangleFunction};
use semifix::{picard_solve, SolveConfig, StopRule};

fn builtin() -> impl Strategy<Value = TriangleFunction> {
    prop_oneof![
        Just(TriangleFunction::sum()),
        Just(TriangleFunction::max()),
        (1.0f64..8.0).prop_map(|k| TriangleFunction::scaled_sum(k).unwrap()),
        (0.1f64..6.0).prop_map(|q| TriangleFunction::power(q).unwrap()),
    ]
}

fn model() -> impl Strategy<Value = Model> {
    prop_oneof![
        Just(Model::Metric),
        Just(Model::Ultrametric),
        (1.0f64..4.0).prop_map(Model::BMetric),
        Just(Model::Generic),
    ]
}

fn expr(depth: u32) -> BoxedStrategy<Expr> {
    let leaf = prop_oneof![
        Just(Expr::X),
        (0.0f64..1e6).prop_map(Expr::Num),
        (0u32..100).prop_map(|k| Expr::Num(k as f64)),
    ];
    leaf.prop_recursive(depth, 64, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)];
        let func = prop_oneof![Just(Func2::Min), Just(Func2::Max), Just(Func2::Pow)];
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            inner.clone().prop_map(|e| Expr::Abs(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| Expr::Bin(o, Box::new(a), Box::new(b))),
            (func, inner.clone(), inner).prop_map(|(f, a, b)| Expr::Call(f, Box::new(a), Box::new(b))),
        ]
    })
    .boxed()
}

proptest! {
    #[test]
    fn builtins_are_homogeneous(tf in builtin(), u in 0.0f64..1e6, v in 0.0f64..1e6, k in 1e-3f64..1e3) {
        let lhs = tf.eval(k * u, k * v).unwrap();
        let rhs = k * tf.eval(u, v).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn builtins_pass_axioms(tf in builtin(), seed in any::<u64>()) {
        let verdict = check_axioms(&tf, 200, seed);
        prop_assert!(verdict.passed, "{:?}", verdict.violations);
    }

    #[test]
    fn psi_inverse_deflates(tf in builtin(), t in 0.0f64..1e6) {
        let tau = tf.psi(t).unwrap();
        match psi_inverse(&tf, tau).unwrap() {
            ExtReal::Finite(u) => prop_assert!(u <= t + 1e-9 * t.max(1.0), "{u} > {t}"),
            ExtReal::Infinite => prop_assert!(false, "infinite inverse"),
        }
    }

    #[test]
    fn nested_bound_monotone_below_c(tf in builtin(), alpha in 0.01f64..0.99) {
        let c = c_alpha(&tf, alpha, 64).unwrap();
        let mut prev = 0.0;
        for p in 1..=64 {
            let b = nested_bound(&tf, alpha, p).unwrap();
            prop_assert!(b + 1e-12 >= prev);
            if let Some(c) = c.finite() {
                prop_assert!(b <= c + 1e-9 * c.max(1.0), "p={p}: {b} > {c}");
            }
            prev = b;
        }
    }

    #[test]
    fn random_instances_are_valid(n in 2usize..=8, seed in any::<u64>(), m in model()) {
        let (fs, map) = random_instance(n, seed, m).unwrap();
        prop_assert!(validate_finite(&fs).passed);
        prop_assert!(check_tr_finite(&fs, fs.tf()).unwrap().passed);
        prop_assert_eq!(map.len(), n);
        let again = random_instance(n, seed, m).unwrap();
        prop_assert_eq!(fs.matrix(), again.0.matrix());
        prop_assert_eq!(map, again.1);
    }

    #[test]
    fn minimal_constants_are_tight(n in 2usize..=6, seed in any::<u64>(), m in model()) {
        let (fs, map) = random_instance(n, seed, m).unwrap();
        type Make = fn(f64) -> ContractionSpec;
        let cases: [(MinConstant, Make); 4] = [
            (banach_constant(&fs, &map), |a| ContractionSpec::Banach { alpha: a }),
            (kannan_constant(&fs, &map), |b| ContractionSpec::Kannan { beta: b }),
            (chatterjea_constant(&fs, &map), |b| ContractionSpec::Chatterjea { beta: b }),
            (perimeter_constant(&fs, &map), |a| ContractionSpec::Perimeter { alpha: a }),
        ];
        for (c, make) in cases {
            let MinConstant::Value(v) = c else { continue };
            prop_assert!(verify_on_finite(&fs, &map, &make(v)).unwrap().holds, "{c:?}");
            if v > 1e-6 {
                prop_assert!(!verify_on_finite(&fs, &map, &make(v - 1e-6)).unwrap().holds, "{c:?}");
            }
        }
    }

    #[test]
    fn audit_never_contradicts(n in 2usize..=6, seed in any::<u64>(), m in model()) {
        let (fs, map) = random_instance(n, seed, m).unwrap();
        let report = classify(&fs, &map).unwrap();
        prop_assert_eq!(report.violations().count(), 0, "{:#?}", report.audit);
    }

    #[test]
    fn affine_error_bound_holds(alpha in 0.01f64..0.95, b in -10.0f64..10.0, x0 in -100.0f64..100.0) {
        let fixed = b / (1.0 - alpha);
        let spec = ContractionSpec::Banach { alpha };
        let cfg = SolveConfig { epsilon: 1e-8, max_iter: 10_000, mode: StopRule::APriori, record_trace: true };
        let space = RealLine::default();
        let r = picard_solve(&space, |x: &f64| Ok(alpha * x + b), &x0, &spec, &cfg).unwrap();
        prop_assert!(r.trace.termination.converged());
        let d01 = space.dist(&x0, &(alpha * x0 + b));
        let bound = error_bound(r.trace.n_steps, alpha, 1.0 / (1.0 - alpha), d01);
        prop_assert!((r.point - fixed).abs() <= bound + 1e-9 * fixed.abs().max(1.0));
        prop_assert!(r.trace.ratio_violations.is_empty());
    }

    #[test]
    fn render_reparse(e in expr(6)) {
        let text = e.to_string();
        let back = parse_map(&text).unwrap();
        prop_assert_eq!(&back, &e, "{}", text);
        prop_assert_eq!(back.to_string(), text);
    }
}
