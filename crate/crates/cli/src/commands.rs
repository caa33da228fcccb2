//! One function per subcommand. Each writes its files into `out_dir` and
//! returns the lines to print as a summary.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use melnikov3d::closed_form::registered_closed_form;
use melnikov3d::contour::{refine_contours, zero_contours, ContourSet};
use melnikov3d::fields::{perturbation_from_name, HillVortex, PerturbationModel, DEFAULT_ROSSBY};
use melnikov3d::grid::{build_melnikov_grid_on, linspace, MelnikovField, MelnikovKind};
use melnikov3d::io;
use melnikov3d::lobes::{lobe_regions, lobe_volume};
use melnikov3d::melnikov::SurfaceKind;
use melnikov3d::oracle::{fit_order, measure_displacements};
use melnikov3d::surface::perturbed_surface_mesh;
use melnikov3d::trajectory::HillChart;
use melnikov3d::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::config::{Command, Kind, RunConfig};
use crate::plot;

pub fn run(cfg: &RunConfig) -> Result<Vec<String>> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut summary = match cfg.command {
        Command::Melnikov => melnikov(cfg)?,
        Command::Surface => surface(cfg)?,
        Command::Contours => contours(cfg)?,
        Command::Lobes => lobes(cfg)?,
        Command::Verify => verify(cfg)?,
    };
    if cfg.emit_plot_script {
        let path = cfg.out_dir.join(plot::file_name(cfg.command));
        fs::write(&path, plot::script(cfg))?;
        summary.push(format!("wrote {}", path.display()));
    }
    Ok(summary)
}

fn chart(cfg: &RunConfig) -> Result<HillChart> {
    let field = match cfg.model.as_str() {
        "hill-classical" => HillVortex::classical(),
        "hill-swirl" => HillVortex::swirl(cfg.r0.unwrap_or(DEFAULT_ROSSBY))?,
        other => {
            return Err(Error::Unknown {
                what: "model".into(),
                name: other.into(),
            })
        }
    };
    Ok(HillChart::new(field))
}

fn perturbation(cfg: &RunConfig) -> Result<Arc<dyn PerturbationModel>> {
    perturbation_from_name(&cfg.perturbation)
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf)> {
    let path = dir.join(name);
    Ok((BufWriter::new(File::create(&path)?), path))
}

fn melnikov_kind(kind: Kind) -> MelnikovKind {
    match kind {
        Kind::Unstable => MelnikovKind::Unstable,
        Kind::Stable => MelnikovKind::Stable,
        _ => MelnikovKind::Heteroclinic,
    }
}

fn grid(cfg: &RunConfig, chart: &HillChart, pert: &dyn PerturbationModel) -> Result<MelnikovField> {
    let p = linspace(cfg.p_range.min, cfg.p_range.max, cfg.p_range.n);
    build_melnikov_grid_on(chart, pert, melnikov_kind(cfg.kind), cfg.t, p, cfg.n_alpha, &cfg.quadrature)
}

fn melnikov(cfg: &RunConfig) -> Result<Vec<String>> {
    let chart = chart(cfg)?;
    let pert = perturbation(cfg)?;
    let field = grid(cfg, &chart, pert.as_ref())?;
    let closed = match cfg.kind {
        Kind::Heteroclinic => registered_closed_form(&cfg.model, &cfg.field_params(), &cfg.perturbation)?,
        _ => None,
    };
    let t = cfg.t;
    let column = closed.as_ref().map(|cf| move |p: f64, a: f64| cf(p, a, t));
    let (out, path) = create(&cfg.out_dir, "melnikov.csv")?;
    io::write_melnikov_csv(&field, column.as_ref().map(|c| c as &dyn Fn(f64, f64) -> f64), &cfg.to_json(), out)?;
    let mut lines = vec![format!(
        "wrote {} ({} x {} nodes, max |M| = {:.6e})",
        path.display(),
        field.n_p(),
        field.n_alpha(),
        field.max_abs()
    )];
    if let Some(cf) = closed {
        let worst = field
            .p
            .iter()
            .enumerate()
            .flat_map(|(i, &p)| field.alpha.iter().enumerate().map(move |(j, &a)| (i, j, p, a)))
            .map(|(i, j, p, a)| (field.value(i, j) - cf(p, a, t)).abs())
            .fold(0.0, f64::max);
        lines.push(format!("max |M - closed form| = {worst:.3e}"));
    }
    Ok(lines)
}

fn surface(cfg: &RunConfig) -> Result<Vec<String>> {
    let chart = chart(cfg)?;
    let pert = perturbation(cfg)?;
    let kinds: &[SurfaceKind] = match cfg.kind {
        Kind::Unstable => &[SurfaceKind::Unstable],
        Kind::Stable => &[SurfaceKind::Stable],
        _ => &[SurfaceKind::Unstable, SurfaceKind::Stable],
    };
    let ps = linspace(cfg.p_range.min, cfg.p_range.max, cfg.p_range.n);
    let config = cfg.to_json();
    let mut lines = Vec::new();
    for &kind in kinds {
        let mesh = perturbed_surface_mesh(
            &chart,
            kind,
            pert.as_ref(),
            &ps,
            cfg.n_alpha,
            cfg.t,
            cfg.eps[0],
            &cfg.quadrature,
            &cfg.window,
        )?;
        let name = format!("{kind:?}").to_lowercase();
        let (out, path) = create(&cfg.out_dir, &format!("surface_{name}.csv"))?;
        io::write_surface_csv(&mesh, &config, out)?;
        let flagged = mesh.nodes.iter().filter(|n| n.flagged).count();
        lines.push(format!("wrote {} ({} nodes, {flagged} outside the validity window)", path.display(), mesh.nodes.len()));
        if cfg.mesh {
            for (unperturbed, suffix) in [(false, ""), (true, "_unperturbed")] {
                let (out, path) = create(&cfg.out_dir, &format!("surface_{name}{suffix}.mesh"))?;
                io::write_mesh(&mesh, unperturbed, &config, out)?;
                lines.push(format!("wrote {}", path.display()));
            }
        }
    }
    Ok(lines)
}

fn extract(cfg: &RunConfig, chart: &HillChart, pert: &dyn PerturbationModel, field: &MelnikovField) -> Result<ContourSet> {
    let mut c = zero_contours(field, cfg.grad_threshold * field.max_gradient());
    if cfg.refine {
        refine_contours(&mut c, field, chart, pert, &cfg.quadrature, cfg.refine_iterations)?;
    }
    Ok(c)
}

fn contours(cfg: &RunConfig) -> Result<Vec<String>> {
    let chart = chart(cfg)?;
    let pert = perturbation(cfg)?;
    let field = grid(cfg, &chart, pert.as_ref())?;
    let c = extract(cfg, &chart, pert.as_ref(), &field)?;
    let (out, path) = create(&cfg.out_dir, "contours.csv")?;
    io::write_contours_csv(&c, &chart, &cfg.to_json(), out)?;
    let vertices = c.vertices().count();
    let transverse = c.vertices().filter(|v| v.transverse).count();
    Ok(vec![format!(
        "wrote {} ({} polylines, {vertices} vertices, {transverse} transverse)",
        path.display(),
        c.polylines.len()
    )])
}

fn lobes(cfg: &RunConfig) -> Result<Vec<String>> {
    let chart = chart(cfg)?;
    let pert = perturbation(cfg)?;
    let field = grid(cfg, &chart, pert.as_ref())?;
    let c = extract(cfg, &chart, pert.as_ref(), &field)?;
    let reports = lobe_regions(&field, &c)
        .iter()
        .map(|r| if r.unbounded { Ok(r.clone()) } else { lobe_volume(&field, r, cfg.eps[0]) })
        .collect::<Result<Vec<_>>>()?;
    let config = cfg.to_json();
    let (out, path) = create(&cfg.out_dir, "lobes.json")?;
    io::write_lobes_json(&reports, &config, out)?;
    let (out, cpath) = create(&cfg.out_dir, "contours.csv")?;
    io::write_contours_csv(&c, &chart, &config, out)?;
    let bounded: Vec<_> = reports.iter().filter(|r| !r.unbounded).collect();
    let mut lines = vec![
        format!("wrote {} ({} regions, {} bounded)", path.display(), reports.len(), bounded.len()),
        format!("wrote {}", cpath.display()),
    ];
    if let Some(big) = bounded.iter().max_by(|a, b| a.volume_leading.partial_cmp(&b.volume_leading).expect("finite")) {
        lines.push(format!(
            "largest bounded lobe: region {} ({}), volume {:.6e} (error estimate {:.1e}, extrapolated {:.6e})",
            big.region_id,
            if big.sign == melnikov3d::lobes::Sign::Positive { "+" } else { "-" },
            big.volume_leading.unwrap_or(f64::NAN),
            big.volume_error_estimate.unwrap_or(f64::NAN),
            big.volume_extrapolated.unwrap_or(f64::NAN),
        ));
    }
    Ok(lines)
}

fn verify(cfg: &RunConfig) -> Result<Vec<String>> {
    let chart = chart(cfg)?;
    let pert = perturbation(cfg)?;
    let mut points = cfg.points.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.random_points {
        points.push([rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0), rng.random_range(-1.0..1.0)]);
    }
    let side = if cfg.kind == Kind::Stable { 1.0 } else { -1.0 };
    let mut samples = Vec::new();
    let mut fits = Vec::new();
    let mut lines = Vec::new();
    for [p, alpha, t] in points {
        let s = measure_displacements(
            &chart,
            pert.as_ref(),
            &cfg.eps,
            p,
            alpha,
            t,
            p + side * cfg.launch_depth,
            &cfg.quadrature,
        )?;
        let fit = fit_order(&s)?;
        lines.push(match fit.slope {
            Some(slope) => format!("(p, alpha, t) = ({p}, {alpha}, {t}): slope {slope:.4}"),
            None => format!("(p, alpha, t) = ({p}, {alpha}, {t}): errors at the noise floor, no slope"),
        });
        samples.extend(s);
        fits.push(fit);
    }
    let config: Value = cfg.to_json();
    let (out, path) = create(&cfg.out_dir, "samples.csv")?;
    io::write_samples_csv(&samples, &config, out)?;
    lines.push(format!("wrote {}", path.display()));
    let (out, path) = create(&cfg.out_dir, "fits.json")?;
    io::write_fits_json(&fits, &config, out)?;
    lines.push(format!("wrote {}", path.display()));
    Ok(lines)
}
