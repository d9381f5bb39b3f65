use fracdiff::PolygonDomain;
use fracdiff_bench::steering_space;

#[test]
fn fixture_spaces_grow_with_p() {
    let d = PolygonDomain::square();
    let a = steering_space(&d, 2).num_free();
    let b = steering_space(&d, 3).num_free();
    assert!(a > 0 && b > a);
}
