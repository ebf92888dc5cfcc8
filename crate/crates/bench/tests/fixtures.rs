use meshtopo::bpt::{decode, encode};
use meshtopo::mesh::{build_edge_topology, is_canonical};
use meshtopo::seam::{cut_mesh, extract_charts};
use meshtopo::BptConfig;
use meshtopo_bench::{tube, tube_seam, wavy_quad_grid};

#[test]
fn grid_fixture_is_canonical_and_encodes() {
    let cfg = BptConfig::default();
    let m = wavy_quad_grid(8);
    assert!(is_canonical(&m, &cfg.grid()));
    assert_eq!(m.quad_count(), 64);
    assert_eq!(decode(&encode(&m, &cfg).unwrap(), &cfg).unwrap(), m);
}

#[test]
fn tube_seam_opens_the_tube() {
    let (around, rings) = (12, 5);
    let m = tube(around, rings);
    let boundary = build_edge_topology(&m).incidence.iter().filter(|&&c| c == 1).count();
    assert_eq!(boundary, 2 * around);
    let (cut, _) = cut_mesh(&m, &[tube_seam(around, rings)]).unwrap();
    let charts = extract_charts(&cut).unwrap();
    assert_eq!(charts.len(), 1);
    assert!(charts[0].is_disk());
}
