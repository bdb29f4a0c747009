use std::collections::HashSet;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use nalgebra::Vector3;
use serde::Serialize;
use splatprune::io::{
    read_cameras, read_depth_pfm, read_pfm, read_ply, read_png, write_cameras, write_mask_png,
    write_pfm, write_ply, write_png, DepthConvention,
};
use splatprune::metrics::{local_pearson_loss, psnr, ssim, PatchSpec};
use splatprune::poses::{estimate_axis, sample_novel_poses, PoseSampler};
use splatprune::prune::{detect_floaters, prune_floaters, FloaterReport, PruneConfig};
use splatprune::raster::{render as render_view, RenderOptions};
use splatprune::scene::{make_toy_scene, GaussianLabel, ToySpec};
use splatprune::{Camera, DepthMap, Scene};

use crate::failures::Failures;
use crate::{
    DiagnoseArgs, MetricsArgs, PosesArgs, PruneArgs, PruneFlags, RenderArgs, RenderFlags,
    SceneInputs, ToyArgs,
};

impl RenderFlags {
    fn options(&self) -> Result<RenderOptions> {
        let opts = RenderOptions {
            tile_size: self.tile_size,
            background: [self.background[0], self.background[1], self.background[2]],
            ..Default::default()
        };
        opts.validate()?;
        Ok(opts)
    }
}

impl PruneFlags {
    fn config(&self) -> Result<PruneConfig> {
        let cfg = PruneConfig {
            a: self.a,
            b: self.b,
            power_thresh: self.power_thresh,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    ensure!(path.is_file(), "{what} {} does not exist", path.display());
    Ok(())
}

fn require_dir(path: &Path, what: &str) -> Result<()> {
    ensure!(
        path.is_dir(),
        "{what} {} is not a directory",
        path.display()
    );
    Ok(())
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

impl SceneInputs {
    fn load(&self) -> Result<(Scene, Vec<Camera>)> {
        require_file(&self.scene, "scene")?;
        require_file(&self.cameras, "camera file")?;
        let scene = read_ply(&self.scene)?;
        let cameras = read_cameras(&self.cameras)?;
        ensure!(
            !cameras.is_empty(),
            "camera file {} lists no cameras",
            self.cameras.display()
        );
        Ok((scene, cameras))
    }
}

/// File-name stems per camera: the image name without extension, prefixed
/// by the camera id when names collide.
fn stems(cameras: &[Camera]) -> Vec<String> {
    let base: Vec<String> = cameras
        .iter()
        .map(|c| {
            let stem = Path::new(&c.image_name)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let clean: String = stem
                .chars()
                .map(|ch| {
                    if ch.is_alphanumeric() || "-_.+".contains(ch) {
                        ch
                    } else {
                        '_'
                    }
                })
                .collect();
            if clean.is_empty() {
                format!("camera_{}", c.id)
            } else {
                clean
            }
        })
        .collect();
    let unique: HashSet<&String> = base.iter().collect();
    if unique.len() == base.len() {
        base
    } else {
        cameras
            .iter()
            .zip(base)
            .map(|(c, s)| format!("{}_{s}", c.id))
            .collect()
    }
}

pub fn render(args: RenderArgs) -> Result<Failures> {
    let opts = args.render.options()?;
    let (scene, cameras) = args.inputs.load()?;
    create_dir(&args.out)?;
    let mut failures = Failures::default();
    for (cam, stem) in cameras.iter().zip(stems(&cameras)) {
        let result = (|| -> Result<()> {
            let out = render_view(&scene, cam, &opts)?;
            write_png(&out.color, args.out.join(format!("{stem}.png")))?;
            write_pfm(&out.d_alpha, args.out.join(format!("{stem}_d_alpha.pfm")))?;
            write_pfm(&out.d_mode, args.out.join(format!("{stem}_d_mode.pfm")))?;
            Ok(())
        })();
        if let Err(e) = result {
            failures.push(
                format!("camera {} ({})", cam.id, cam.image_name),
                format!("{e:#}"),
            );
        }
    }
    Ok(failures)
}

#[derive(Serialize)]
struct ViewSummary {
    camera_id: i64,
    image_name: String,
    status: &'static str,
    dip: Option<f64>,
    threshold: Option<f64>,
    positive_pixels: usize,
    masked_pixels: usize,
    selected: usize,
}

#[derive(Serialize)]
struct Summary {
    a: f64,
    b: f64,
    power_thresh: f64,
    average_dip: f64,
    percentile: f64,
    gaussians_before: usize,
    selected_total: usize,
    gaussians_after: Option<usize>,
    views: Vec<ViewSummary>,
}

fn summarize(report: &FloaterReport, cfg: &PruneConfig, after: Option<usize>) -> Summary {
    Summary {
        a: cfg.a,
        b: cfg.b,
        power_thresh: cfg.power_thresh,
        average_dip: report.d_bar,
        percentile: report.percentile,
        gaussians_before: report.gaussians_before,
        selected_total: report.pruned_count(),
        gaussians_after: after,
        views: report
            .views
            .iter()
            .map(|v| ViewSummary {
                camera_id: v.camera_id,
                image_name: v.image_name.clone(),
                status: if v.threshold.is_some() {
                    "ok"
                } else {
                    "skipped"
                },
                dip: v.dip,
                threshold: v.threshold,
                positive_pixels: v.delta.as_slice().iter().filter(|d| **d > 0.0).count(),
                masked_pixels: v.mask.as_slice().iter().filter(|m| **m).count(),
                selected: v.selected.len(),
            })
            .collect(),
    }
}

fn write_json(value: &impl Serialize, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Histogram of the non-zero relative differences of one view.
fn write_histogram(delta: &DepthMap, bins: usize, path: &Path) -> Result<()> {
    let values: Vec<f64> = delta
        .as_slice()
        .iter()
        .copied()
        .filter(|v| *v != 0.0)
        .collect();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_start", "bin_end", "count"])?;
    if !values.is_empty() {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = if hi > lo {
            (hi - lo) / bins as f64
        } else {
            1.0
        };
        let mut counts = vec![0usize; bins];
        for v in &values {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        for (i, c) in counts.iter().enumerate() {
            let start = lo + i as f64 * width;
            w.write_record([
                start.to_string(),
                (start + width).to_string(),
                c.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_summary_csv(summary: &Summary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "camera_id",
        "image_name",
        "status",
        "dip",
        "threshold",
        "percentile",
        "positive_pixels",
        "masked_pixels",
        "selected",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for v in &summary.views {
        w.write_record([
            v.camera_id.to_string(),
            v.image_name.clone(),
            v.status.to_string(),
            opt(v.dip),
            opt(v.threshold),
            summary.percentile.to_string(),
            v.positive_pixels.to_string(),
            v.masked_pixels.to_string(),
            v.selected.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn diagnose(args: DiagnoseArgs) -> Result<Failures> {
    let cfg = args.prune.config()?;
    let opts = args.render.options()?;
    ensure!(args.bins > 0, "--bins must be positive");
    let (scene, cameras) = args.inputs.load()?;
    create_dir(&args.out)?;
    let report = detect_floaters(&scene, &cameras, &cfg, &opts)?;
    let mut failures = Failures::default();
    for (view, stem) in report.views.iter().zip(stems(&cameras)) {
        let result = write_pfm(&view.delta, args.out.join(format!("{stem}_delta.pfm")))
            .map_err(anyhow::Error::from)
            .and_then(|_| {
                write_histogram(
                    &view.delta,
                    args.bins,
                    &args.out.join(format!("{stem}_hist.csv")),
                )
            });
        if let Err(e) = result {
            failures.push(format!("camera {}", view.camera_id), format!("{e:#}"));
        }
    }
    let summary = summarize(&report, &cfg, None);
    write_summary_csv(&summary, &args.out.join("summary.csv"))?;
    write_json(&summary, &args.out.join("summary.json"))?;
    println!(
        "average dip {:.6}, percentile {:.4}, {} of {} views skipped",
        report.d_bar,
        report.percentile,
        summary
            .views
            .iter()
            .filter(|v| v.status == "skipped")
            .count(),
        summary.views.len()
    );
    Ok(failures)
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

pub fn prune(args: PruneArgs) -> Result<Failures> {
    let cfg = args.prune.config()?;
    let opts = args.render.options()?;
    if same_file(&args.inputs.scene, &args.out) {
        bail!(
            "output {} would overwrite the input scene",
            args.out.display()
        );
    }
    let (mut scene, cameras) = args.inputs.load()?;
    if scene.is_empty() {
        bail!(
            "scene {} has no gaussians to prune",
            args.inputs.scene.display()
        );
    }
    if let Some(dir) = &args.report_dir {
        create_dir(dir)?;
    }
    let report = prune_floaters(&mut scene, &cameras, &cfg, &opts)?;
    write_ply(&scene, &args.out)?;
    println!(
        "pruned {} of {} gaussians (average dip {:.6}, percentile {:.4})",
        report.pruned_count(),
        report.gaussians_before,
        report.d_bar,
        report.percentile
    );
    let mut failures = Failures::default();
    if let Some(dir) = &args.report_dir {
        for (view, stem) in report.views.iter().zip(stems(&cameras)) {
            let result = write_pfm(&view.delta, dir.join(format!("{stem}_delta.pfm")))
                .and_then(|_| write_mask_png(&view.mask, dir.join(format!("{stem}_mask.png"))));
            if let Err(e) = result {
                failures.push(format!("camera {}", view.camera_id), e.to_string());
            }
        }
        let summary = summarize(&report, &cfg, Some(scene.len()));
        write_json(&summary, &dir.join("report.json"))?;
        write_summary_csv(&summary, &dir.join("report.csv"))?;
    }
    Ok(failures)
}

#[derive(Default)]
struct MetricRow {
    psnr: f64,
    ssim: f64,
    depth_loss: Option<f64>,
}

fn image_metrics(
    name: &str,
    args: &MetricsArgs,
    spec: &PatchSpec,
    depth_dir: Option<&Path>,
) -> Result<MetricRow> {
    let rendered = read_png(args.rendered.join(name))?;
    let gt_path = args.gt.join(name);
    require_file(&gt_path, "ground truth")?;
    let gt = read_png(&gt_path)?;
    let mut row = MetricRow {
        psnr: psnr(&rendered, &gt)?,
        ssim: ssim(&rendered, &gt)?,
        depth_loss: None,
    };
    if let Some(dir) = depth_dir {
        let stem = Path::new(name)
            .file_stem()
            .unwrap_or_default()
            .to_string_lossy();
        let rendered_depth = read_pfm(
            args.rendered
                .join(format!("{stem}_d_{}.pfm", args.depth_kind)),
        )?;
        let source = read_depth_pfm(
            dir.join(format!("{stem}.pfm")),
            DepthConvention::MonocularRelative,
        )?
        .resampled(rendered_depth.width(), rendered_depth.height())?;
        row.depth_loss = Some(local_pearson_loss(&rendered_depth, &source, spec)?.value);
    }
    Ok(row)
}

pub fn metrics(args: MetricsArgs) -> Result<Failures> {
    require_dir(&args.rendered, "rendered directory")?;
    require_dir(&args.gt, "ground-truth directory")?;
    if let Some(d) = &args.depth {
        require_dir(d, "depth directory")?;
    }
    ensure!(
        args.depth_kind == "alpha" || args.depth_kind == "mode",
        "--depth-kind must be `alpha` or `mode`"
    );
    let spec = PatchSpec {
        box_size: args.box_size,
        p_corr: args.p_corr,
        seed: args.seed,
    };
    spec.validate()?;

    let mut names: Vec<String> = fs::read_dir(&args.rendered)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.to_ascii_lowercase().ends_with(".png"))
        .collect();
    names.sort();
    ensure!(
        !names.is_empty(),
        "no PNG images in {}",
        args.rendered.display()
    );

    let mut failures = Failures::default();
    let sink: Box<dyn std::io::Write> = match &args.out {
        Some(p) => {
            Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["image", "psnr", "ssim", "depth_loss"])?;
    let mut rows = Vec::new();
    for name in &names {
        match image_metrics(name, &args, &spec, args.depth.as_deref()) {
            Ok(row) => {
                w.write_record([
                    name.clone(),
                    row.psnr.to_string(),
                    row.ssim.to_string(),
                    row.depth_loss.map(|v| v.to_string()).unwrap_or_default(),
                ])?;
                rows.push(row);
            }
            Err(e) => failures.push(name.clone(), format!("{e:#}")),
        }
    }
    if !rows.is_empty() {
        let n = rows.len() as f64;
        let losses: Vec<f64> = rows.iter().filter_map(|r| r.depth_loss).collect();
        let mean_loss = if losses.is_empty() {
            String::new()
        } else {
            (losses.iter().sum::<f64>() / losses.len() as f64).to_string()
        };
        w.write_record([
            "mean".to_string(),
            (rows.iter().map(|r| r.psnr).sum::<f64>() / n).to_string(),
            (rows.iter().map(|r| r.ssim).sum::<f64>() / n).to_string(),
            mean_loss,
        ])?;
    }
    w.flush()?;
    Ok(failures)
}

pub fn poses(args: PosesArgs) -> Result<Failures> {
    ensure!(args.k > 0, "--k must be at least 1");
    require_file(&args.cameras, "camera file")?;
    let cameras = read_cameras(&args.cameras)?;
    let axis = estimate_axis(&cameras, args.up_column)?;
    let sampler = PoseSampler {
        y_bar: axis,
        theta_range: (args.theta_min, args.theta_max),
        center: Vector3::new(args.center[0], args.center[1], args.center[2]),
        seed: args.seed,
    };
    let novel = sample_novel_poses(&cameras, &sampler, args.k)?;
    write_cameras(&novel, &args.out)?;
    Ok(Failures::default())
}

pub fn toy(args: ToyArgs) -> Result<Failures> {
    let spec = ToySpec::from_name(&args.name)?;
    let toy = make_toy_scene(&spec, args.seed)?;
    create_dir(&args.out)?;
    write_ply(&toy.scene, args.out.join("scene.ply"))?;
    write_cameras(&toy.cameras, args.out.join("cameras.json"))?;
    let mut w = csv::Writer::from_path(args.out.join("labels.csv"))?;
    w.write_record(["index", "label"])?;
    for (i, label) in toy.labels.iter().enumerate() {
        let name = match label {
            GaussianLabel::Surface => "surface",
            GaussianLabel::Floater => "floater",
            GaussianLabel::Ray => "ray",
        };
        w.write_record([i.to_string(), name.to_string()])?;
    }
    w.flush()?;
    if let Some((x, y)) = toy.target_pixel {
        println!("target pixel {x} {y}");
    }
    Ok(Failures::default())
}
