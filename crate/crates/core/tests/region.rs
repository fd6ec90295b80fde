mod common;

use sps_core::experiments::catalog::{fir2, gaussian};
use sps_core::geometry::{rasterize, unit_circle_directions};
use sps_core::rng::trial_seeds;
use sps_core::{
    outer_approximation, raster_area, raster_region, region_area, region_bounds, simulate_dataset, trace_region, Norm,
    RegressionSummary, SpsConfig, SpsEvaluator, SpsSetup,
};

fn fir2_region(trial: u64, norm: Norm) -> (SpsEvaluator, RegressionSummary, SpsSetup, sps_core::Dataset) {
    let seeds = trial_seeds(77, trial);
    let data = simulate_dataset(&fir2(gaussian()), 25, seeds.data).unwrap();
    let summary = RegressionSummary::compute(&data).unwrap();
    let setup = SpsSetup::generate(SpsConfig::new(100, 5, seeds.sps).with_norm(norm), 25).unwrap();
    let eval = SpsEvaluator::new(&setup, &summary, &data).unwrap();
    (eval, summary, setup, data)
}

#[test]
fn raster_area_converges_under_refinement() {
    for trial in 0..5 {
        let (eval, summary, setup, data) = fir2_region(trial, Norm::L2);
        let e = outer_approximation(&setup, &summary, &data).unwrap();
        let c = common::theta_hat(&summary);
        let a200 = region_area(&eval, &c, Some(&e), 200).unwrap();
        let a400 = region_area(&eval, &c, Some(&e), 400).unwrap();
        let a800 = region_area(&eval, &c, Some(&e), 800).unwrap();
        assert!((a400 - a800).abs() <= 0.01 * a800, "{a400} vs {a800}");
        assert!((a200 - a800).abs() <= 0.02 * a800, "{a200} vs {a800}");
    }
}

#[test]
fn polar_area_from_traced_boundary_matches_raster() {
    // independent estimate: (1/2) sum r^2 dphi over a fine ray fan
    for trial in 0..4 {
        let (eval, summary, _, _) = fir2_region(trial, Norm::L2);
        let c = common::theta_hat(&summary);
        let trace = trace_region(&eval, &c, &unit_circle_directions(4000)).unwrap();
        let dphi = std::f64::consts::TAU / trace.len() as f64;
        let polar: f64 = trace.distances.iter().map(|r| 0.5 * r * r * dphi).sum();
        let raster = region_area(&eval, &c, None, 800).unwrap();
        assert!((polar - raster).abs() <= 0.01 * polar, "{polar} vs {raster}");
    }
}

#[test]
fn raster_members_lie_inside_overbound() {
    for trial in 0..20 {
        let (eval, summary, setup, data) = fir2_region(trial, Norm::L2);
        let e = outer_approximation(&setup, &summary, &data).unwrap();
        let c = common::theta_hat(&summary);
        // a box wider than the over-bound, so outside cells are sampled too
        let mut b = region_bounds(&eval, &c, Some(&e)).unwrap();
        for axis in b.iter_mut() {
            let w = axis[1] - axis[0];
            axis[0] -= 0.5 * w;
            axis[1] += 0.5 * w;
        }
        let raster = raster_region(&eval, b, (150, 150)).unwrap();
        assert!(raster.member_count() > 0);
        assert!(raster.member_cells().all(|p| e.contains(&p)));
    }
}

#[test]
fn scanline_and_pointwise_rasters_agree_on_experiment_regions() {
    for trial in 0..5 {
        let (eval, summary, setup, data) = fir2_region(trial, Norm::L2);
        let e = outer_approximation(&setup, &summary, &data).unwrap();
        let b = region_bounds(&eval, &common::theta_hat(&summary), Some(&e)).unwrap();
        let fast = raster_region(&eval, b, (200, 160)).unwrap();
        let slow = rasterize(|p| eval.contains(p), b, (200, 160)).unwrap();
        assert_eq!(fast.membership, slow.membership);
    }
}

#[test]
fn every_norm_gives_a_bounded_star_shaped_region() {
    for norm in [Norm::L1, Norm::Linf] {
        for trial in 0..5 {
            let (eval, summary, _, _) = fir2_region(trial, norm);
            let c = common::theta_hat(&summary);
            let trace = trace_region(&eval, &c, &unit_circle_directions(360)).unwrap();
            assert!(!trace.has_unbounded_ray());
            let b = region_bounds(&eval, &c, None).unwrap();
            let raster = rasterize(|p| eval.contains(p), b, (120, 120)).unwrap();
            assert!(raster_area(&raster) > 0.0);
            // every traced boundary point lies inside the padded box
            for k in 0..trace.len() {
                let p = trace.point(k);
                assert!(p[0] > b[0][0] && p[0] < b[0][1] && p[1] > b[1][0] && p[1] < b[1][1]);
            }
        }
    }
}
