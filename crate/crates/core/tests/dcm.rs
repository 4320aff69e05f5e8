mod common;

use std::collections::BTreeMap;

use common::{boiler_p, boiler_q, names, normalize, point, q, r, rate_map};
use mzia::dcm::{render_zone, Dcm, ZoneConstraint};
use mzia::{build_zone_automaton, Bound};

fn xy() -> Vec<String> {
    names(&["x", "y"])
}

fn m0() -> Dcm {
    let mut cs = ZoneConstraint::eq("x", 20).to_vec();
    cs.extend(ZoneConstraint::eq("y", 100));
    Dcm::from_constraints(&xy(), &rate_map(&[("x", 20), ("y", 20)]), &cs).unwrap()
}

fn cell(d: &Dcm, i: usize, j: usize) -> String {
    normalize(&d.cell_tuple(i, j))
}

#[test]
fn point_zone_cells() {
    let d = m0();
    assert_eq!(cell(&d, 0, 1), "(20, 1, -20, ≤)");
    assert_eq!(cell(&d, 0, 2), "(20, 1, -100, ≤)");
    assert_eq!(cell(&d, 1, 0), "(1, 20, 20, ≤)");
    assert_eq!(cell(&d, 2, 0), "(1, 20, 100, ≤)");
}

#[test]
fn relative_cells_are_the_scaled_point_difference() {
    let d = m0();
    let p = point(&[("x", r(20)), ("y", r(100))]);
    // k_y·x − k_x·y and k_x·y − k_y·x evaluated at the point
    let want_xy = r(20) * r(20) - r(20) * r(100);
    let want_yx = r(20) * r(100) - r(20) * r(20);
    assert_eq!(d.scaled_difference(1, 2, &p), want_xy);
    assert_eq!(d.bound(1, 2), &Bound::le(want_xy));
    assert_eq!(d.bound(2, 1), &Bound::le(want_yx));
    assert_eq!(d.bound(1, 2), &Bound::le(-1600));
}

#[test]
fn empty_constraint_list_is_universal() {
    let d = Dcm::from_constraints(&xy(), &rate_map(&[("x", 1), ("y", 2)]), &[]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                assert_eq!(d.bound(i, j), &Bound::zero());
            } else {
                assert!(d.bound(i, j).is_infinite());
            }
        }
    }
    assert!(d.to_zone_constraints().unwrap().is_empty());
    assert!(!d.is_empty());
}

#[test]
fn chaining_derives_upper_bound_from_relative_and_invariant() {
    let rel = ZoneConstraint::Relative {
        var_a: "x".into(),
        var_b: "y".into(),
        coeff_a: r(20),
        coeff_b: r(20),
        lower: Bound::Infinity,
        upper: Bound::le(-1600),
    };
    let d = Dcm::from_constraints(&xy(), &rate_map(&[("x", 20), ("y", 20)]), &[rel, ZoneConstraint::le("y", 1000)]).unwrap();
    // (k_x·c_rel + k_rel·c_y)/k_y with the reference rate 1
    let oracle = (r(1) * r(-1600) + r(20) * r(1000)) / r(20);
    assert_eq!(oracle, r(920));
    assert_eq!(d.bound(1, 0), &Bound::le(oracle));
}

#[test]
fn contradiction_is_empty() {
    let d = Dcm::from_constraints(&names(&["x"]), &rate_map(&[("x", 1)]), &[ZoneConstraint::le("x", 5), ZoneConstraint::ge("x", 6)])
        .unwrap();
    assert!(d.is_empty());
    assert!(!m0().is_empty());
}

#[test]
fn guard_step_bounds() {
    let inv = [ZoneConstraint::le("y", 1000)];
    let z = m0().constrain(&inv).unwrap().elapse();
    assert!(z.bound(1, 0).is_infinite() && z.bound(2, 0).is_infinite());
    assert_eq!(cell(&z, 0, 1), "(20, 1, -20, ≤)");
    assert_eq!(cell(&z, 0, 2), "(20, 1, -100, ≤)");
    assert_eq!(z.elapse(), z);
    let g = z.constrain(&inv).unwrap().constrain(&[ZoneConstraint::ge("y", 700)]).unwrap();
    assert_eq!(cell(&g, 0, 1), "(20, 1, -620, ≤)");
    assert_eq!(cell(&g, 1, 0), "(1, 20, 920, ≤)");
    assert_eq!(cell(&g, 0, 2), "(20, 1, -700, ≤)");
    assert_eq!(cell(&g, 2, 0), "(1, 20, 1000, ≤)");
}

#[test]
fn intersection_identities() {
    let d = m0();
    let universe = Dcm::universe(&xy(), &rate_map(&[("x", 20), ("y", 20)])).unwrap();
    assert_eq!(d.intersect(&universe).unwrap(), d);
    let empty = d.constrain(&[ZoneConstraint::le("x", 0)]).unwrap();
    assert!(empty.is_empty());
    assert!(d.intersect(&empty).unwrap().is_empty());
}

fn step3() -> Dcm {
    let inv = [ZoneConstraint::le("y", 1000)];
    m0().constrain(&inv).unwrap().elapse().constrain(&inv).unwrap().constrain(&[ZoneConstraint::ge("y", 700)]).unwrap()
}

#[test]
fn reset_matches_chaining_oracle() {
    let resets: BTreeMap<String, _> = [("y".to_string(), r(700))].into();
    let m1 = step3().reset(&resets, &rate_map(&[("x", 20), ("y", 30)])).unwrap();
    assert_eq!(cell(&m1, 0, 1), "(20, 1, -620, ≤)");
    assert_eq!(cell(&m1, 1, 0), "(1, 20, 920, ≤)");
    assert_eq!(cell(&m1, 0, 2), "(30, 1, -700, ≤)");
    // new k_y·x − k_x·y ≤ k_y·max(x) − k_x·700, and symmetrically
    assert_eq!(m1.bound(1, 2), &Bound::le(r(30) * r(920) - r(20) * r(700)));
    assert_eq!(m1.bound(2, 1), &Bound::le(r(20) * r(700) - r(30) * r(620)));
    assert_eq!(cell(&m1, 1, 2), "(30, 20, 13600, ≤)");
    assert_eq!(cell(&m1, 2, 1), "(20, 30, -4600, ≤)");
    // The reset value is exact, so the upper bound of y is 700.
    assert_eq!(m1.bound(2, 0), &Bound::le(700));
    assert_eq!(normalize(&render_zone(&m1.to_zone_constraints().unwrap())), "620 ≤ x ≤ 920 ∧ y = 700 ∧ 4600 ≤ 30x - 20y ≤ 13600");
}

#[test]
fn empty_reset_keeps_zone() {
    let d = step3();
    assert_eq!(d.reset(&BTreeMap::new(), &d.rates()).unwrap(), d.canonicalize());
}

#[test]
fn reset_requires_resetting_rate_changes() {
    let d = step3();
    assert!(d.reset(&BTreeMap::new(), &rate_map(&[("x", 20), ("y", 30)])).is_err());
}

#[test]
fn projection_of_s1_onto_x() {
    let resets: BTreeMap<String, _> = [("y".to_string(), r(700))].into();
    let m1 = step3().reset(&resets, &rate_map(&[("x", 20), ("y", 30)])).unwrap();
    let px = m1.project("y").unwrap();
    assert_eq!(px.vars(), &names(&["x"])[..]);
    assert_eq!(normalize(&render_zone(&px.to_zone_constraints().unwrap())), "620 ≤ x ≤ 920");
    let universe = Dcm::universe(&xy(), &rate_map(&[("x", 1), ("y", 1)])).unwrap();
    assert!(universe.project("x").unwrap().to_zone_constraints().unwrap().is_empty());
    for xi in 600..=940 {
        let p = point(&[("x", r(xi)), ("y", r(700))]);
        if m1.contains_point(&p).unwrap() {
            assert!(px.contains_point(&point(&[("x", r(xi))])).unwrap());
        }
    }
}

#[test]
fn fixture_containments() {
    let zp = build_zone_automaton(&boiler_p()).unwrap();
    let zq = build_zone_automaton(&boiler_q()).unwrap();
    let data = |za: &mzia::ZoneAutomaton, i: usize| za.states[i].sym.data_zone(&za.clock).unwrap();
    assert!(data(&zp, 2).includes(&data(&zp, 6)).unwrap());
    assert!(!data(&zp, 6).includes(&data(&zp, 2)).unwrap());
    assert!(data(&zp, 2).includes(&data(&zp, 2)).unwrap());
    assert!(!data(&zq, 1).includes(&data(&zp, 1)).unwrap());
    assert!(data(&zp, 1).includes(&data(&zq, 1)).unwrap());
    // A point in s1 but outside s'1.
    let witness = point(&[("x", r(650)), ("y", r(700))]);
    assert!(data(&zp, 1).contains_point(&witness).unwrap());
    assert!(!data(&zq, 1).contains_point(&witness).unwrap());
    assert_eq!(
        normalize(&zp.states[4].sym.render(&zp.clock).unwrap()),
        "x = 900 ∧ 900 ≤ y ≤ 960 ∧ 0 ≤ 20y - 20x ≤ 1200"
    );
}

#[test]
fn strict_bounds_survive_closure() {
    let d = Dcm::from_constraints(
        &names(&["x"]),
        &rate_map(&[("x", 2)]),
        &[ZoneConstraint::UpperBound("x".into(), Bound::lt(3)), ZoneConstraint::ge("x", 3)],
    )
    .unwrap();
    assert!(d.is_empty());
    let open = Dcm::from_constraints(&names(&["x"]), &rate_map(&[("x", 2)]), &[ZoneConstraint::UpperBound("x".into(), Bound::lt(q(7, 2)))])
        .unwrap();
    assert!(!open.contains_point(&point(&[("x", q(7, 2))])).unwrap());
    assert!(open.contains_point(&point(&[("x", r(3))])).unwrap());
}
