use polyflex::binvariant::{b_of, positivity_certificate};
use polyflex::deformation::{isometric_deformation_space, isometry_defect, angle_sum_residual};
use polyflex::geometry::{cross, inner, Geometry, Vec3};
use polyflex::hull::random_sphere_hull;
use polyflex::io::{polygon_from_json, polygon_to_json};
use polyflex::random::{random_convex_polygon, random_generic_polygon, rng};
use polyflex::rigidity::rigidity_verdict;
use proptest::prelude::*;

fn geometry() -> impl Strategy<Value = Geometry> {
    prop_oneof![Just(Geometry::E2), Just(Geometry::S2), Just(Geometry::H2), Just(Geometry::DS2)]
}

fn curved() -> impl Strategy<Value = Geometry> {
    prop_oneof![Just(Geometry::S2), Just(Geometry::H2), Just(Geometry::DS2)]
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triple_product_is_cyclic(g in geometry(), x in vec3(), y in vec3(), z in vec3()) {
        let a = inner(g, &x, &cross(g, &y, &z));
        let b = inner(g, &y, &cross(g, &z, &x));
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + x.norm() * y.norm() * z.norm()));
        prop_assert!(inner(g, &cross(g, &x, &y), &x).abs() < 1e-12 * (1.0 + x.norm() * x.norm() * y.norm()));
    }

    #[test]
    fn kernel_vectors_satisfy_the_angle_sum_identity(g in geometry(), n in 4usize..9, seed in any::<u64>()) {
        let p = random_generic_polygon(g, n, &mut rng(seed));
        let space = isometric_deformation_space(&p).unwrap();
        for j in 0..space.full_dim() {
            let u = space.full_vector(j);
            prop_assert!(isometry_defect(&p, &u) < 1e-9);
            let (vec, scalar) = angle_sum_residual(&p, &u).unwrap();
            prop_assert!(vec < 1e-9 && scalar < 1e-9, "{vec} {scalar}");
        }
    }

    #[test]
    fn b_is_quadratic(g in curved(), n in 4usize..8, seed in any::<u64>(), c in -4.0..4.0f64) {
        let p = random_convex_polygon(g, n, &mut rng(seed));
        let space = isometric_deformation_space(&p).unwrap();
        let u = space.quotient_vector(0);
        let b1 = b_of(&p, &u).unwrap().vector;
        let bc = b_of(&p, &u.scaled(c)).unwrap().vector;
        prop_assert!((bc - b1 * (c * c)).norm() < 1e-9 * (1.0 + b1.norm() * c * c));
    }

    #[test]
    fn b_pairs_positively_with_vertices(g in curved(), n in 4usize..8, seed in any::<u64>(), w in proptest::collection::vec(-1.0..1.0f64, 4)) {
        let p = random_convex_polygon(g, n, &mut rng(seed));
        let space = isometric_deformation_space(&p).unwrap();
        let coeffs: Vec<f64> = w.iter().take(space.quotient_dim()).copied().collect();
        prop_assume!(coeffs.iter().map(|c| c * c).sum::<f64>() > 1e-2);
        let report = positivity_certificate(&p, &space.combine(&coeffs)).unwrap();
        prop_assert!(report.verdict, "{:?}", report.vertex_products);
    }

    #[test]
    fn polygon_json_round_trips(g in geometry(), n in 3usize..9, seed in any::<u64>()) {
        let p = random_convex_polygon(g, n, &mut rng(seed));
        let q = polygon_from_json(&polygon_to_json(&p)).unwrap();
        prop_assert_eq!(p, q);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_hulls_are_rigid(n in 8usize..24, seed in any::<u64>()) {
        let p = random_sphere_hull(n, &mut rng(seed));
        let r = rigidity_verdict(&p).unwrap();
        prop_assert_eq!(r.quotient_dim, 0);
        prop_assert!(r.trivial_residual < 1e-10);
        prop_assert!(r.global_sum < 1e-8);
    }
}
