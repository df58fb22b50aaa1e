use jellium_core::jellium_finite::{hexagonal_patch, jellium_energy, lieb_narnhofer_optimal};

const TRIANGULAR_PER_POINT: f64 = -0.660_558_714_214_018_9;

#[test]
fn hexagonal_patches_approach_triangular_energy() {
    let mut gaps = Vec::new();
    for rings in [3, 6] {
        let (dom, pts) = hexagonal_patch(rings).unwrap();
        let e = jellium_energy(&dom, &pts, 1e-9).unwrap();
        let per = e.per_point();
        println!("N = {}: E/N = {per:.8}, gap {:.3e}", pts.len(), per - TRIANGULAR_PER_POINT);
        assert!(per >= lieb_narnhofer_optimal().1);
        gaps.push((per - TRIANGULAR_PER_POINT).abs());
    }
    assert!(gaps[0] < 0.05);
    assert!(gaps[1] < gaps[0]);
}
