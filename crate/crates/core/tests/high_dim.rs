use nao::baselines::{lerp, slerp_path};
use nao::path::{optimize_path, sample_along};
use nao::{PathConfig, PriorSpec, RngState};

#[test]
fn samples_on_an_optimized_path_beat_the_lerp_midpoint() {
    let spec = PriorSpec::new(16384).unwrap();
    let mut rng = RngState::new(31);
    let z1 = spec.sample_seed(&mut rng);
    let z2 = spec.sample_seed(&mut rng);
    let (path, report) = optimize_path(&spec, &z1, &z2, &PathConfig::with_n(10)).unwrap();
    assert!(report.final_objective <= report.objective_trace[0]);

    let mid = lerp(&z1, &z2, 0.5).unwrap();
    let mid_nll = spec.nll(&mid).unwrap();
    let samples = sample_along(&path, 3).unwrap();
    assert_eq!(samples.len(), 3);
    for s in &samples {
        let nll = spec.nll(s).unwrap();
        assert!(nll < mid_nll, "sample nll {nll} vs LERP midpoint {mid_nll}");
        assert!((s.norm() - spec.mode_radius()).abs() <= 2.0, "norm {}", s.norm());
    }

    let slerp = slerp_path(&z1, &z2, 10).unwrap();
    assert!(path.mean_point_nll(&spec) < 0.5 * mid_nll);
    assert!(slerp.mean_point_nll(&spec) < mid_nll);
}
