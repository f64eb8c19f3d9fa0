use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;
use qkt_core::curvature_lab::Geometry;
use qkt_core::frame_tensor::{
    norm_sq_3form, three_form_basis, three_form_from_coeffs, torsion_pair_trace, two_form_inner, EndoMatrix, Tensor,
    TypeProjector,
};
use qkt_core::lie_model::ce_derivative;
use qkt_core::models::{builtin, load, validate, BuiltinModel, Classification};
use qkt_core::quaternionic::{kaehler_form, sp1_rotate, verify_triple, QuaternionicTriple};
use qkt_core::suite::{run_suite, Options, Suite};

fn projector() -> &'static TypeProjector {
    static P: OnceLock<TypeProjector> = OnceLock::new();
    P.get_or_init(|| TypeProjector::new(QuaternionicTriple::standard(2).all()))
}

fn unit_vector() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-1.0f64..1.0)
        .prop_filter("not too short", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / n)
        })
}

fn two_form(coeffs: &[f64]) -> Tensor {
    let mut t = Tensor::zeros(2, 8);
    let mut it = coeffs.iter();
    for i in 0..8 {
        for j in i + 1..8 {
            let v = *it.next().unwrap();
            t.set(&[i, j], v);
            t.set(&[j, i], -v);
        }
    }
    t
}

fn nil8() -> qkt_core::models::Model {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models/nil8_balanced.toml");
    load(path).expect("shipped model file loads")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projected_torsion_trace_identities(coeffs in prop::collection::vec(-1.0f64..1.0, three_form_basis(8).len())) {
        let t = projector().project(&three_form_from_coeffs(8, &coeffs));
        let q = QuaternionicTriple::standard(2);
        let norm = norm_sq_3form(&t);
        let scale = 1e-10 * (1.0 + norm);
        for b in 0..3 {
            for c in 0..3 {
                let tr = torsion_pair_trace(&t, q.get(c), q.get(b));
                let expected = if b == c { norm / 3.0 } else { 0.0 };
                prop_assert!((tr - expected).abs() < scale, "J{} J{}: {} vs {}", c + 1, b + 1, tr, expected);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sp1_rotation_is_admissible(a in unit_vector()) {
        let q = QuaternionicTriple::standard(2);
        let r = sp1_rotate(&q, &a).unwrap();
        prop_assert!(verify_triple(&r).max_residual() < 1e-12);
        prop_assert!(r.get(1).max_abs_diff(&q.combination(&a)) < 1e-12);
    }

    #[test]
    fn unit_combination_is_complex(a in unit_vector()) {
        let q = QuaternionicTriple::standard(2);
        let j = q.combination(&a);
        let sq = &j * &j;
        prop_assert!(sq.max_abs_diff(&EndoMatrix::identity(8).scale(-1.0)) < 1e-12);
        prop_assert!(j.orthogonality_residual() < 1e-12);
    }

    #[test]
    fn kaehler_form_is_linear(a in unit_vector()) {
        let q = QuaternionicTriple::standard(2);
        let lhs = kaehler_form(&q.combination(&a)).unwrap();
        let mut rhs = Tensor::zeros(2, 8);
        for (x, j) in a.iter().zip(q.all()) {
            rhs = &rhs + &kaehler_form(j).unwrap().scale(*x);
        }
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn ce_derivative_squares_to_zero(
        one in prop::collection::vec(-1.0f64..1.0, 8),
        two in prop::collection::vec(-1.0f64..1.0, 28),
    ) {
        let w1 = Tensor::from_vec(&one).unwrap();
        let w2 = two_form(&two);
        for m in [builtin(BuiltinModel::Hopf8), builtin(BuiltinModel::Solv8), nil8()] {
            let a = &m.algebra;
            prop_assert!(ce_derivative(a, &ce_derivative(a, &w1)).max_abs() < 1e-12);
            prop_assert!(ce_derivative(a, &ce_derivative(a, &w2)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn two_form_inner_is_an_inner_product(
        x in prop::collection::vec(-1.0f64..1.0, 28),
        y in prop::collection::vec(-1.0f64..1.0, 28),
        s in -2.0f64..2.0,
    ) {
        let (a, b) = (two_form(&x), two_form(&y));
        let ab = two_form_inner(&a, &b).unwrap();
        prop_assert!((ab - two_form_inner(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((two_form_inner(&a.scale(s), &b).unwrap() - s * ab).abs() < 1e-12);
        let aa = two_form_inner(&a, &a).unwrap();
        prop_assert!((aa - x.iter().map(|v| v * v).sum::<f64>()).abs() < 1e-12);
    }
}

#[test]
fn kaehler_forms_have_norm_2n() {
    let q = QuaternionicTriple::standard(2);
    for j in q.all() {
        let f = kaehler_form(j).unwrap();
        assert_eq!(two_form_inner(&f, &f).unwrap(), 4.0);
    }
}

#[test]
fn projector_fixes_admissible_forms() {
    let p = projector();
    let t = p.project(&three_form_from_coeffs(8, &vec![0.5; three_form_basis(8).len()]));
    assert!(p.project(&t).max_abs_diff(&t) < 1e-12);
}

#[test]
fn reports_are_deterministic() {
    let m = builtin(BuiltinModel::Hopf8);
    for suite in [Suite::Structure, Suite::Curvature, Suite::Twistor] {
        let a = run_suite(&m, suite, &Options::default());
        let b = run_suite(&m, suite, &Options::default());
        assert_eq!(a.to_json(false), b.to_json(false));
    }
}

#[test]
fn report_ids_are_unique() {
    for m in [builtin(BuiltinModel::Flat8), builtin(BuiltinModel::Solv8), nil8()] {
        let r = run_suite(&m, Suite::All, &Options::default());
        let mut ids: Vec<_> = r.checks.iter().map(|c| c.id.as_str()).collect();
        ids.dedup();
        assert_eq!(ids.len(), r.checks.len());
    }
}

#[test]
fn balanced_model_file_validates() {
    let m = nil8();
    let v = validate(&m, 1e-9);
    assert_eq!(v.class, Classification::Hkt { balanced: true });
    let g = Geometry::new(&m.algebra, &m.triple).unwrap();
    assert!(g.t.max_abs() < 1e-12);
    assert!((g.scalars.torsion_norm_sq - 36.0).abs() < 1e-10);
    assert!(g.scalars.delta_t.abs() < 1e-12);
    let r = run_suite(&m, Suite::Hkt, &Options::default());
    assert!(r.pass);
    assert!(r.checks.iter().any(|c| c.id.starts_with("hkt.balanced.")));
}
