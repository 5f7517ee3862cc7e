use gaptopk::verification::{
    check_refinement_consistency, check_refinement_identity, check_rounddown_sensitivity,
    check_rounding_identity, check_scaled_geometric, check_truncated_geometric,
};
use gaptopk::{Rational, Resolution};

fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

#[test]
fn rounding_identity_exhaustive() {
    for gamma in ["1/10", "1/20"] {
        let rep = check_rounding_identity(&r("1/100"), &r("3"), &r(gamma)).unwrap();
        assert_eq!(rep.counterexample, None);
        assert_eq!(rep.checked, 301 * 301);
    }
}

#[test]
fn rounddown_sensitivity_exhaustive() {
    for gamma in ["1/10", "1/4"] {
        let rep = check_rounddown_sensitivity(1, &r(gamma), &r("1/40"), &r("3")).unwrap();
        assert_eq!(rep.counterexample, None);
    }
}

#[test]
fn sensitivity_bound_is_tight_on_the_grid() {
    let gamma = r("1/10");
    let x = r("27/10");
    let y = r("17/10");
    let fx = gaptopk::round_down_to(&x, &gamma).unwrap();
    let fy = gaptopk::round_down_to(&y, &gamma).unwrap();
    assert_eq!(&fx - &fy, Rational::from_integer(1));
}

#[test]
fn scaled_geometric_fits() {
    let rep = check_scaled_geometric(&Rational::from_integer(2), &r("1/10"), 300_000, 7).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.mode, 0);
}

#[test]
fn truncated_geometric_fits() {
    let rep = check_truncated_geometric(1, 20, 10, 300_000, 8).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(check_truncated_geometric(1, 20, 1, 10_000, 8).unwrap().pass);
}

#[test]
fn refinement_identity_exact() {
    let rep = check_refinement_identity(Resolution::new(10, 10).unwrap(), 5_000, 3).unwrap();
    assert_eq!(rep.counterexample, None);
    assert_eq!(rep.checked, 10_000);
}

#[test]
fn refinement_consistency() {
    let rep = check_refinement_consistency(&r("1/10"), 10, &Rational::from_integer(2), 300_000, 9)
        .unwrap();
    assert!(rep.pass, "{rep:?}");
}
