use std::collections::BTreeSet;

use splatprune::grid::Mask;
use splatprune::prune::{
    detect_floaters, prune_floaters, relative_diff, select_gaussians, PruneConfig,
};
use splatprune::raster::{render, RenderOptions, RenderOutput};
use splatprune::scene::{make_toy_scene, GaussianLabel, ToyScene, ToySpec};
use splatprune::{Camera, DepthMap, Gaussian, Scene};

fn toy(name: &str, seed: u64) -> ToyScene {
    make_toy_scene(&ToySpec::from_name(name).unwrap(), seed).unwrap()
}

fn mean_abs_delta(scene: &Scene, cams: &[Camera]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for cam in cams {
        let out = render(scene, cam, &RenderOptions::default()).unwrap();
        let delta = relative_diff(&out);
        for (d, a) in delta.as_slice().iter().zip(out.d_alpha.as_slice()) {
            if *a > 1e-8 {
                sum += d.abs();
                n += 1;
            }
        }
    }
    sum / n as f64
}

fn axis_camera() -> Camera {
    Camera::look_at(
        0,
        "axis",
        33,
        33,
        40.0,
        [0.0; 3],
        [0.0, 0.0, 1.0],
        [0.0, -1.0, 0.0],
    )
    .unwrap()
}

#[test]
fn relative_difference_examples() {
    let t = toy("ray4", 0);
    let out = render(&t.scene, &t.cameras[0], &RenderOptions::default()).unwrap();
    let delta = relative_diff(&out);
    let (x, y) = t.target_pixel.unwrap();
    assert!((delta.get(x, y) - (1.5 - 1.776) / 1.776).abs() < 1e-9);
    assert!((delta.get(x, y) + 0.1554).abs() < 5e-5);
    // pixels nothing reached are excluded
    assert_eq!(*delta.get(0, 0), 0.0);

    let mut fake = out.clone();
    fake.d_mode = DepthMap::filled(33, 33, 0.5);
    fake.d_alpha = DepthMap::filled(33, 33, 0.25);
    assert!(relative_diff(&fake).as_slice().iter().all(|v| *v == 1.0));
}

/// Two faint gaussians in front of an opaque surface gaussian, with one more
/// gaussian behind it, all on the optical axis.
fn stacked_scene() -> (Scene, RenderOutput) {
    let scene = Scene::new(vec![
        Gaussian::isotropic([0.0, 0.0, 1.0], 0.01, 0.2, [0.0, 0.0, 1.0]).unwrap(),
        Gaussian::isotropic([0.0, 0.0, 1.2], 0.012, 0.25, [0.0, 0.0, 1.0]).unwrap(),
        Gaussian::isotropic([0.0, 0.0, 3.0], 0.03, 0.9, [1.0, 0.0, 0.0]).unwrap(),
        Gaussian::isotropic([0.0, 0.0, 4.0], 0.04, 0.9, [1.0, 0.0, 0.0]).unwrap(),
    ]);
    let out = render(&scene, &axis_camera(), &RenderOptions::default()).unwrap();
    (scene, out)
}

#[test]
fn selection_stops_at_the_mode() {
    let (_, out) = stacked_scene();
    assert_eq!(out.mode_gaussian(16, 16), Some(2));
    let mask = Mask::from_fn(33, 33, |x, y| (x, y) == (16, 16));
    let sel = select_gaussians(&out, &mask, &PruneConfig::default()).unwrap();
    assert_eq!(sel, BTreeSet::from([0, 1, 2]));
    let empty = Mask::filled(33, 33, false);
    assert!(select_gaussians(&out, &empty, &PruneConfig::default())
        .unwrap()
        .is_empty());
    assert!(select_gaussians(&out, &Mask::filled(3, 3, true), &PruneConfig::default()).is_err());
}

#[test]
fn selection_threshold_is_strict() {
    let (_, out) = stacked_scene();
    let mask = Mask::from_fn(33, 33, |x, y| (x, y) == (16, 16));
    let p = out.projected[0].as_ref().unwrap();
    let cfg = PruneConfig {
        power_thresh: p.alpha_at(16.5, 16.5),
        ..Default::default()
    };
    let sel = select_gaussians(&out, &mask, &cfg).unwrap();
    assert!(!sel.contains(&0));
    assert!(sel.contains(&1));
}

#[test]
fn floater_fixture_is_repaired() {
    let t = toy("plane+floater", 0);
    let mut scene = t.scene.clone();
    let before = mean_abs_delta(&t.scene, &t.cameras);
    let report = prune_floaters(
        &mut scene,
        &t.cameras,
        &PruneConfig::default(),
        &RenderOptions::default(),
    )
    .unwrap();

    let removed = |label| {
        report
            .pruned
            .iter()
            .filter(|&&i| t.labels[i] == label)
            .count()
    };
    let floaters = t.count(GaussianLabel::Floater);
    let surface = t.count(GaussianLabel::Surface);
    assert!(removed(GaussianLabel::Floater) as f64 >= 0.95 * floaters as f64);
    assert!(removed(GaussianLabel::Surface) as f64 <= 0.01 * surface as f64);
    assert_eq!(scene.len(), t.scene.len() - report.pruned_count());
    assert!(mean_abs_delta(&scene, &t.cameras) < before);

    // survivors keep their parameters bit for bit and their order
    let kept: Vec<&Gaussian> = (0..t.scene.len())
        .filter(|i| !report.pruned.contains(i))
        .map(|i| &t.scene.gaussians[i])
        .collect();
    assert_eq!(kept.len(), scene.len());
    assert!(kept.iter().zip(&scene.gaussians).all(|(a, b)| *a == b));

    let union: BTreeSet<usize> = report
        .views
        .iter()
        .flat_map(|v| v.selected.iter().copied())
        .collect();
    assert_eq!(union, report.pruned);
}

#[test]
fn report_records_are_consistent() {
    let t = toy("plane+floater", 1);
    let cfg = PruneConfig::default();
    let opts = RenderOptions::default();
    let report = detect_floaters(&t.scene, &t.cameras, &cfg, &opts).unwrap();
    assert!((report.percentile - cfg.a * (cfg.b * report.d_bar).exp()).abs() < 1e-12);
    for (view, cam) in report.views.iter().zip(&t.cameras) {
        let tau = view.threshold.unwrap();
        let out = render(&t.scene, cam, &opts).unwrap();
        for (x, y, &hit) in view.mask.indexed() {
            assert_eq!(hit, *view.delta.get(x, y) > tau);
            if !hit {
                continue;
            }
            // nothing composited after the mode is ever selected
            if let Some(range) = out.mode_range.get(x, y) {
                let after: BTreeSet<usize> = out
                    .trace_pixel(x, y)
                    .iter()
                    .filter(|s| s.list_index > range.mode)
                    .map(|s| s.gaussian_id)
                    .collect();
                let before: BTreeSet<usize> = out.point_list[range.start..=range.mode]
                    .iter()
                    .copied()
                    .collect();
                for id in after.difference(&before) {
                    let chosen_elsewhere = view.mask.indexed().any(|(u, v, &m)| {
                        m && out
                            .mode_range
                            .get(u, v)
                            .is_some_and(|r| out.point_list[r.start..=r.mode].contains(id))
                    });
                    assert!(!view.selected.contains(id) || chosen_elsewhere);
                }
            }
        }
    }
}

#[test]
fn floater_mask_covers_the_floater_footprint() {
    let t = toy("plane+floater", 2);
    let report = detect_floaters(
        &t.scene,
        &t.cameras,
        &PruneConfig::default(),
        &RenderOptions::default(),
    )
    .unwrap();
    let floater_ids: Vec<usize> = (0..t.scene.len())
        .filter(|&i| t.labels[i] == GaussianLabel::Floater)
        .collect();
    // blob centre and radius from the generating geometry
    let centre = [0.15, -0.1, 1.6];
    let radius = 0.04;
    for (view, cam) in report.views.iter().zip(&t.cameras) {
        let p = cam.world_to_camera(&nalgebra::Vector3::from(centre));
        let (u, v) = (
            cam.fx() * p.x / p.z + cam.cx(),
            cam.fy() * p.y / p.z + cam.cy(),
        );
        let r_px = cam.fx() * radius / p.z;
        let footprint: Vec<(usize, usize)> = view
            .mask
            .indexed()
            .filter(|(x, y, _)| {
                let (dx, dy) = (*x as f64 + 0.5 - u, *y as f64 + 0.5 - v);
                (dx * dx + dy * dy).sqrt() <= r_px.max(1.0)
            })
            .map(|(x, y, _)| (x, y))
            .collect();
        assert!(!footprint.is_empty());
        let covered = footprint
            .iter()
            .filter(|(x, y)| *view.mask.get(*x, *y))
            .count();
        let masked: Vec<(usize, usize)> = view
            .mask
            .indexed()
            .filter(|p| *p.2)
            .map(|p| (p.0, p.1))
            .collect();
        assert!(
            covered as f64 >= 0.9 * footprint.len() as f64,
            "{covered}/{} at ({u},{v}) r {r_px}; mask {masked:?}",
            footprint.len()
        );
        assert!(floater_ids.iter().any(|id| view.selected.contains(id)));
    }
}

#[test]
fn clean_plane_is_mostly_left_alone() {
    for seed in 0..3 {
        let t = toy("plane", seed);
        let mut scene = t.scene.clone();
        let report = prune_floaters(
            &mut scene,
            &t.cameras,
            &PruneConfig::default(),
            &RenderOptions::default(),
        )
        .unwrap();
        assert!(report.pruned_count() as f64 <= 0.01 * t.scene.len() as f64);
        let dirty = detect_floaters(
            &toy("plane+floater", seed).scene,
            &t.cameras,
            &PruneConfig::default(),
            &RenderOptions::default(),
        )
        .unwrap();
        assert!(dirty.d_bar > report.d_bar);
    }
}

#[test]
fn second_pass_removes_little() {
    let t = toy("plane+floater", 3);
    let mut scene = t.scene.clone();
    let cfg = PruneConfig::default();
    let opts = RenderOptions::default();
    prune_floaters(&mut scene, &t.cameras, &cfg, &opts).unwrap();
    let n = scene.len();
    let again = prune_floaters(&mut scene, &t.cameras, &cfg, &opts).unwrap();
    assert!(
        again.pruned_count() as f64 <= 0.005 * n as f64,
        "{}",
        again.pruned_count()
    );
}

#[test]
fn invalid_inputs() {
    let t = toy("plane", 0);
    let opts = RenderOptions::default();
    assert!(detect_floaters(
        &Scene::default(),
        &t.cameras,
        &PruneConfig::default(),
        &opts
    )
    .is_err());
    assert!(detect_floaters(&t.scene, &[], &PruneConfig::default(), &opts).is_err());
    let bad = PruneConfig {
        b: 1.0,
        ..Default::default()
    };
    assert!(detect_floaters(&t.scene, &t.cameras, &bad, &opts).is_err());
}
