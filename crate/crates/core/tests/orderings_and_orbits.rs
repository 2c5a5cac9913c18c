use pptupb::invariants::{compute_invariants, find_positive_orderings, recover_parameters};
use pptupb::product_search::{find_product_vectors_in_kernel, find_sixth_vector};
use pptupb::symmetry::{canonical_representative, cyclic_shift, inversion, orbit, swap_sixth, ParamPoint};
use pptupb::transform::{apply_to_state, random_transform};
use pptupb::upb::{build_state, build_upb};
use pptupb::{Params, ProductVector, SearchConfig};

fn config(seed: u64) -> SearchConfig {
    SearchConfig { restarts: 120, ..SearchConfig::with_seed(seed) }
}

fn point_of(vectors: &[ProductVector]) -> ParamPoint<f64> {
    let inv = compute_invariants(vectors).unwrap();
    ParamPoint::from_params(&recover_parameters(&inv).unwrap())
}

#[test]
fn relabellings_match_generator_formulas() {
    let p = Params::new(0.7, 1.6, 1.2, 0.5).unwrap();
    let upb = build_upb(&p).unwrap();
    let v = upb.vectors();
    let sixth = find_sixth_vector(v, &config(4)).unwrap();
    let base = ParamPoint::from_params(&p);

    let cyc = [v[4], v[0], v[1], v[2], v[3]];
    assert!(point_of(&cyc).rel_diff(&cyclic_shift(&base)) < 1e-10);

    let inv = [v[0], v[4], v[3], v[2], v[1]];
    assert!(point_of(&inv).rel_diff(&inversion(&base)) < 1e-10);

    let sw = [sixth, v[4], v[2], v[3], v[1]];
    assert!(point_of(&sw).rel_diff(&swap_sixth(&base)) < 1e-9);
}

#[test]
fn admissible_orderings_recover_one_orbit() {
    let p = Params::new(1.9, 0.6, 0.8, 2.4).unwrap();
    let rho = build_state(&build_upb(&p).unwrap()).unwrap();
    let t = random_transform(21, 20.0).unwrap();
    let rho2 = apply_to_state(&t, &rho).unwrap();
    let set = find_product_vectors_in_kernel(&rho2, &config(9)).unwrap();
    assert_eq!(set.len(), 6);
    let report = find_positive_orderings(&set.vectors).unwrap();
    assert_eq!(report.total_tested, 720);
    assert_eq!(report.admissible.len(), 60);
    for k in 0..6 {
        assert_eq!(report.count_excluding(k), 10);
    }
    let orbit_pts = orbit(&ParamPoint::from_params(&p));
    let mut hit = vec![false; orbit_pts.len()];
    for adm in &report.admissible {
        let q = ParamPoint::from_params(&recover_parameters(&adm.invariants).unwrap());
        let k = orbit_pts.iter().position(|o| o.rel_diff(&q) < 1e-7).expect("recovered point lies in the orbit");
        assert!(!hit[k], "two orderings map to the same orbit point");
        hit[k] = true;
    }
    let can = canonical_representative(&ParamPoint::from_params(&p));
    let first = ParamPoint::from_params(&recover_parameters(&report.admissible[0].invariants).unwrap());
    assert!(canonical_representative(&first).rel_diff(&can) < 1e-8);
}
