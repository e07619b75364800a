mod common;

use common::richardson::quad_study;
use polyflex::geometry::Geometry;

fn check(g: Geometry, seed: u64) {
    let st = quad_study(g, seed, 40);
    assert!(st.ratios >= 40 * 2 * 4, "{st:?}");
    assert!(st.max_ratio_deviation < 0.5, "{st:?}");
    assert!(st.max_closed_form_error < 1e-9, "{st:?}");
    assert!(st.max_imaginary < 1e-12, "{st:?}");
}

#[test]
fn spherical_quadrilateral_rates_have_second_order_differences() {
    check(Geometry::S2, 31);
}

#[test]
fn hyperbolic_quadrilateral_rates_have_second_order_differences() {
    check(Geometry::H2, 32);
}
