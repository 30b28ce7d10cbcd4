use proptest::prelude::*;

use tangent_monad::jets::{first_order, second_order, ChartMap, DomainBox};
use tangent_monad::kahler::{self, Gen, Poly};
use tangent_monad::monad::{mu_flat, tangent_lift, zeta_flat};
use tangent_monad::scalar::rat;
use tangent_monad::Rational;

fn small_rational() -> impl Strategy<Value = Rational> {
    (-40i64..=40, 1i64..=8).prop_map(|(n, d)| rat(n, d))
}

fn poly_in(gens: Vec<Gen>) -> impl Strategy<Value = Poly> {
    prop::collection::vec((small_rational(), prop::collection::vec(0..gens.len(), 0..=3)), 0..5).prop_map(move |terms| {
        terms.into_iter().fold(Poly::zero(), |acc, (c, idx)| {
            let mono = idx.iter().fold(Poly::constant(c), |m, &i| &m * &Poly::gen(gens[i]));
            &acc + &mono
        })
    })
}

fn tangent_poly(n: usize) -> impl Strategy<Value = Poly> {
    poly_in(kahler::generators(n, 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weil_multiplication_is_associative_and_commutative(
        a in prop::collection::vec(small_rational(), 4),
        b in prop::collection::vec(small_rational(), 4),
        c in prop::collection::vec(small_rational(), 4),
    ) {
        let alg = second_order();
        let (x, y, z) = (alg.element(a).unwrap(), alg.element(b).unwrap(), alg.element(c).unwrap());
        prop_assert_eq!((x.clone() * y.clone()) * z.clone(), x.clone() * (y.clone() * z));
        prop_assert_eq!(x.clone() * y.clone(), y * x);
    }

    #[test]
    fn jet_nilpotents_vanish_at_order(coeffs in prop::collection::vec(small_rational(), 3)) {
        let alg = first_order(2);
        let mut c = coeffs;
        c[0] = rat(0, 1);
        let e = alg.element(c).unwrap();
        prop_assert!((e.clone() * e).coeffs().iter().all(|k| *k == rat(0, 1)));
    }

    #[test]
    fn unit_laws_exact(x in small_rational(), v in small_rational()) {
        let p = vec![x, v];
        prop_assert_eq!(mu_flat(&[p[0].clone(), p[1].clone(), rat(0, 1), rat(0, 1)]), p.clone());
        let tz = tangent_lift(|a| Ok(zeta_flat(a)), &p).unwrap();
        prop_assert_eq!(mu_flat(&tz), p);
    }

    #[test]
    fn tangent_lift_is_the_dual_number_derivative(x in small_rational(), v in small_rational()) {
        let f = ChartMap::parse(&["x"], &["x^3 - 2*x"], DomainBox::cube(1, -100.0, 100.0)).unwrap();
        let out = tangent_lift(|a| f.eval_unchecked(a), &[x.clone(), v.clone()]).unwrap();
        let three = rat(3, 1);
        prop_assert_eq!(&out[1], &((three * &x * &x - rat(2, 1)) * &v));
    }

    #[test]
    fn coaddition_is_multiplicative(f in tangent_poly(2), g in tangent_poly(2)) {
        let lhs = kahler::coaddition(&(&f * &g));
        let rhs = &kahler::coaddition(&f) * &kahler::coaddition(&g);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn mu_factors_through_coaddition(f in tangent_poly(3)) {
        prop_assert_eq!(kahler::mu_a(&f, 3), kahler::mu_via_coaddition(&f));
    }

    #[test]
    fn counit_recovers_degree_zero(f in tangent_poly(2)) {
        let z = kahler::zeta(&f);
        prop_assert!(z.terms().all(|(m, _)| m.degree() == 0));
        prop_assert_eq!(kahler::zeta(&kahler::tau(&z)), z);
    }

    #[test]
    fn poly_text_round_trips(f in tangent_poly(3)) {
        prop_assert_eq!(Poly::parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn differential_satisfies_leibniz(f in poly_in(kahler::generators(2, 0)), g in poly_in(kahler::generators(2, 0))) {
        let lhs = kahler::differential(&(&f * &g));
        let rhs = &(&kahler::differential(&f) * &g) + &(&f * &kahler::differential(&g));
        prop_assert_eq!(lhs, rhs);
    }
}
