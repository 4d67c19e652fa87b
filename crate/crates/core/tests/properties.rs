use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sublaplace::geometry::{group_inverse, group_multiply};
use sublaplace::harness::testfns::Polynomial;
use sublaplace::harness::{generate_grid, GridSpec};
use sublaplace::jet::{seed_point, C64};
use sublaplace::operators::{modified_p_laplacian_reduced, p_laplacian_reduced};
use sublaplace::solutions::{kernel_values, FamilyTag, SolutionFamily};
use sublaplace::{CJet2, Space, SpaceParams};

fn derivative(p: &Polynomial, k: usize) -> Polynomial {
    let terms = p
        .terms
        .iter()
        .filter(|t| t.powers[k] > 0)
        .map(|t| {
            let mut m = t.clone();
            m.coeff *= t.powers[k] as f64;
            m.powers[k] -= 1;
            m
        })
        .collect();
    Polynomial { dim: p.dim, terms }
}

fn close(a: C64, b: C64, scale: f64, tol: f64) -> bool {
    (a - b).norm() <= tol * scale.max(1.0)
}

fn hess_symmetric(u: &CJet2) -> bool {
    let d = u.dim();
    (0..d).all(|i| (0..d).all(|j| u.hess(i, j) == u.hess(j, i)))
}

fn space_strategy() -> impl Strategy<Value = Space> {
    prop_oneof![
        (1usize..=3, -1.0..1.0f64, -1.0..1.0f64, prop_oneof![0.5..2.0f64, -2.0..-0.5f64])
            .prop_map(|(n, a, b, c)| Space::grushin(n, a, b, c).unwrap()),
        (1usize..=2).prop_map(|n| Space::heisenberg(n).unwrap()),
    ]
}

fn coords(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5..1.5f64, d)
}

fn poly_case() -> impl Strategy<Value = (Polynomial, Vec<f64>)> {
    (1usize..=5, any::<u64>()).prop_flat_map(|(d, seed)| {
        let poly = Polynomial::random(&mut ChaCha8Rng::seed_from_u64(seed), d, 3);
        (Just(poly), coords(d))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn polynomial_jets_match_symbolic_derivatives((poly, x) in poly_case()) {
        let u = poly.eval(&x).unwrap();
        let d = poly.dim;
        prop_assert!(close(u.value(), poly.value(&x), poly.value(&x).norm(), 1e-13));
        for k in 0..d {
            let dk = derivative(&poly, k);
            prop_assert!(close(u.grad()[k], dk.value(&x), dk.value(&x).norm(), 1e-13));
            for l in 0..d {
                let dkl = derivative(&dk, l).value(&x);
                prop_assert!(close(u.hess(k, l), dkl, dkl.norm(), 1e-13));
            }
        }
    }

    #[test]
    fn hessians_stay_symmetric((poly, x) in poly_case(), s in -2.0..2.0f64) {
        let u = poly.eval(&x).unwrap();
        prop_assert!(hess_symmetric(&u));
        let shifted = &u + C64::new(5.0, 0.5);
        prop_assert!(hess_symmetric(&(&u * &u.conj())));
        if let Ok(q) = u.try_div(&shifted) {
            prop_assert!(hess_symmetric(&q));
        }
        if let Ok(w) = shifted.powc(C64::new(s, 0.3)) {
            prop_assert!(hess_symmetric(&w));
        }
        if let Ok(w) = shifted.ln() {
            prop_assert!(hess_symmetric(&w));
        }
    }

    #[test]
    fn conj_is_an_involution_and_distributes((poly, x) in poly_case(), seed in any::<u64>()) {
        let u = poly.eval(&x).unwrap();
        let v = Polynomial::random(&mut ChaCha8Rng::seed_from_u64(seed), poly.dim, 2).eval(&x).unwrap();
        prop_assert_eq!(u.conj().conj(), u.clone());
        prop_assert_eq!((&u + &v).conj(), &u.conj() + &v.conj());
        let lhs = (&u * &v).conj();
        let rhs = &u.conj() * &v.conj();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn group_law_axioms(n in 1usize..=3, p in coords(7), q in coords(7), r in coords(7)) {
        let d = 2 * n + 1;
        let (p, q, r) = (&p[..d], &q[..d], &r[..d]);
        let zero = vec![0.0; d];
        prop_assert_eq!(group_multiply(n, p, &zero).unwrap(), p.to_vec());
        prop_assert_eq!(group_multiply(n, &zero, p).unwrap(), p.to_vec());
        for c in group_multiply(n, p, &group_inverse(p)).unwrap() {
            prop_assert!(c.abs() <= 1e-12);
        }
        let left = group_multiply(n, &group_multiply(n, p, q).unwrap(), r).unwrap();
        let right = group_multiply(n, p, &group_multiply(n, q, r).unwrap()).unwrap();
        for (a, b) in left.iter().zip(&right) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn conjugate_kernel_pairs(space in space_strategy(), seed in any::<u64>()) {
        let pts = generate_grid(&GridSpec::new(space).with_seed(seed).with_count(8)).unwrap();
        for pt in pts {
            let (g, h) = kernel_values(&space, &pt).unwrap();
            prop_assert_eq!(h, g.conj());
            let gh = g * h;
            prop_assert!(gh.re > 0.0 && gh.im.abs() <= 1e-14 * gh.norm());
            let expected = match space {
                Space::Grushin { n, a, b, c } => {
                    c * c * (pt[0] - a).powi(2 * n as i32 + 2) + ((n + 1) as f64).powi(2) * (pt[1] - b).powi(2)
                }
                Space::Heisenberg { n } => {
                    pt[..2 * n].iter().map(|x| x * x).sum::<f64>().powi(2) + 16.0 * pt[2 * n].powi(2)
                }
            };
            prop_assert!((gh.re - expected).abs() <= 1e-13 * expected);
        }
    }

    #[test]
    fn zero_l_families_coincide(space in space_strategy(), p in 1.1..12.0f64, seed in any::<u64>()) {
        let (radial, core, _) = FamilyTag::for_space(&space);
        let sp = SpaceParams::new(space, p, 0.0).unwrap();
        let f = SolutionFamily::new(core, sp).unwrap();
        let r = SolutionFamily::new(radial, sp).unwrap();
        for pt in generate_grid(&GridSpec::new(space).with_seed(seed).with_count(8)).unwrap() {
            let (a, b) = (f.value_at(&pt).unwrap(), r.value_at(&pt).unwrap());
            prop_assert!((a - b).norm() <= 1e-13 * b.norm());
        }
    }

    #[test]
    fn zero_l_collapse_is_exact(space in space_strategy(), p in 1.1..8.0f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = Polynomial::random(&mut rng, space.dim(), 3);
        let pt: Vec<f64> = generate_grid(&GridSpec::new(space).with_seed(seed).with_count(1)).unwrap().remove(0);
        let u = poly.eval(&pt).unwrap();
        let a = p_laplacian_reduced(&space, p, &u, &pt).unwrap();
        let b = modified_p_laplacian_reduced(&space, p, 0.0, &u, &pt).unwrap();
        prop_assert!((a.lambda - b.lambda).norm() <= 1e-13 * a.scale);
        prop_assert_eq!(a.norm2, b.norm2);
    }

    #[test]
    fn relative_residual_is_at_most_one(space in space_strategy(), p in 1.1..8.0f64, l in -3.0..3.0f64, seed in any::<u64>()) {
        let poly = Polynomial::random(&mut ChaCha8Rng::seed_from_u64(seed), space.dim(), 3);
        let pt: Vec<f64> = generate_grid(&GridSpec::new(space).with_seed(seed).with_count(1)).unwrap().remove(0);
        let r = modified_p_laplacian_reduced(&space, p, l, &poly.eval(&pt).unwrap(), &pt).unwrap();
        prop_assert!(r.lambda.norm() <= r.scale * (1.0 + 1e-12));
    }

    #[test]
    fn homogeneity_under_complex_scaling(
        space in space_strategy(),
        p in 1.1..8.0f64,
        l in -3.0..3.0f64,
        kre in -3.0..3.0f64,
        kim in -3.0..3.0f64,
        seed in any::<u64>(),
    ) {
        let k = C64::new(kre, kim);
        prop_assume!(k.norm() > 0.1);
        let (_, core, _) = FamilyTag::for_space(&space);
        prop_assume!(l.abs() != 1.0);
        let fam = SolutionFamily::new(core, SpaceParams::new(space, p, l).unwrap()).unwrap();
        let pt: Vec<f64> = generate_grid(&GridSpec::new(space).with_seed(seed).with_count(1)).unwrap().remove(0);
        let u = fam.eval(&pt).unwrap();
        let ku = &u * k;
        let a = modified_p_laplacian_reduced(&space, p, l, &u, &pt).unwrap();
        let b = modified_p_laplacian_reduced(&space, p, l, &ku, &pt).unwrap();
        // The reduced factor is cubic in u; the operator itself scales by κ|κ|^(p-2).
        let kk = k.norm();
        prop_assert!((b.lambda - a.lambda * k * kk * kk).norm() <= 1e-12 * b.scale);
        prop_assert!((b.scale - a.scale * kk.powi(3)).abs() <= 1e-12 * b.scale);
        let op_a = a.operator_value(p);
        let op_b = b.operator_value(p);
        prop_assert!((op_b - op_a * k * kk.powf(p - 2.0)).norm() <= 1e-12 * b.operator_scale(p));
        let rel_a = a.lambda.norm() / a.scale;
        let rel_b = b.lambda.norm() / b.scale;
        prop_assert_eq!(rel_a <= 1e-8, rel_b <= 1e-8);
    }

    #[test]
    fn grids_are_deterministic_and_filtered(space in space_strategy(), seed in any::<u64>()) {
        let spec = GridSpec::new(space).with_seed(seed).with_count(32);
        let a = generate_grid(&spec).unwrap();
        prop_assert_eq!(&a, &generate_grid(&spec).unwrap());
        for pt in &a {
            prop_assert!(spec.admits(pt));
            prop_assert!(pt.iter().all(|x| x.is_finite()));
        }
    }
}

#[test]
fn seeded_variables_are_basis_jets() {
    let v = seed_point(&[1.0, 2.0, 5.0]).unwrap();
    assert_eq!(v[2].value(), C64::new(5.0, 0.0));
    assert_eq!(v[2].grad(), &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)][..]);
}
