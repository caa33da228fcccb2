//! File formats. Every CSV starts with one `# ` line holding the run
//! configuration as compact JSON, followed by a header row. JSON outputs
//! carry the same configuration under `"config"`.
//!
//! Mesh files use a plain indexed-triangle format: `# ` config line, then
//! `v x y z` lines (one per node, in CSV order) and `f a b c` lines with
//! 1-based node indices.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::contour::ContourSet;
use crate::error::Result;
use crate::geometry::cartesian_to_spherical;
use crate::grid::MelnikovField;
use crate::lobes::LobeReport;
use crate::oracle::{DisplacementSample, OrderFit};
use crate::surface::SurfaceMesh;
use crate::trajectory::ManifoldChart;

fn config_line<W: Write>(out: &mut W, config: &Value) -> Result<()> {
    writeln!(out, "# {}", serde_json::to_string(config)?)?;
    Ok(())
}

fn csv_writer<W: Write>(mut out: W, config: &Value) -> Result<csv::Writer<W>> {
    config_line(&mut out, config)?;
    Ok(csv::Writer::from_writer(out))
}

/// Reads back a file written here: the config and the CSV rows.
pub fn read_csv(text: &str) -> Result<(Value, Vec<csv::StringRecord>, csv::StringRecord)> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let config = serde_json::from_str(first.trim_start_matches("# "))?;
    let mut rdr = csv::Reader::from_reader(rest.as_bytes());
    let headers = rdr.headers()?.clone();
    let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((config, rows, headers))
}

/// `p, alpha, M, dM_dp, dM_dalpha, error_estimate` and, when a closed form
/// is supplied, `closed_form, deviation`.
pub fn write_melnikov_csv<W: Write>(
    field: &MelnikovField,
    closed_form: Option<&dyn Fn(f64, f64) -> f64>,
    config: &Value,
    out: W,
) -> Result<()> {
    let mut w = csv_writer(out, config)?;
    let mut header = vec!["p", "alpha", "M", "dM_dp", "dM_dalpha", "error_estimate"];
    if closed_form.is_some() {
        header.extend(["closed_form", "deviation"]);
    }
    w.write_record(&header)?;
    for (i, &p) in field.p.iter().enumerate() {
        for (j, &a) in field.alpha.iter().enumerate() {
            let k = field.index(i, j);
            let mut row = vec![p, a, field.values[k], field.dm_dp[k], field.dm_dalpha[k], field.errors[k]];
            if let Some(cf) = closed_form {
                let c = cf(p, a);
                row.extend([c, field.values[k] - c]);
            }
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `contour_id, vertex, p, alpha, theta, phi, x, y, z, transverse`, the
/// last five locating the vertex on the unperturbed surface.
pub fn write_contours_csv<W: Write>(
    contours: &ContourSet,
    chart: &dyn ManifoldChart,
    config: &Value,
    out: W,
) -> Result<()> {
    let mut w = csv_writer(out, config)?;
    w.write_record(["contour_id", "vertex", "p", "alpha", "theta", "phi", "x", "y", "z", "transverse"])?;
    for line in &contours.polylines {
        for (k, v) in line.vertices.iter().enumerate() {
            let x = chart.point(v.p, v.alpha);
            let s = cartesian_to_spherical(x);
            w.write_record([
                line.id.to_string(),
                k.to_string(),
                v.p.to_string(),
                v.alpha.to_string(),
                s.theta.to_string(),
                s.phi.to_string(),
                x.x.to_string(),
                x.y.to_string(),
                x.z.to_string(),
                u8::from(v.transverse).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config: &'a Value,
    #[serde(flatten)]
    body: T,
}

fn write_json<W: Write, T: Serialize>(config: &Value, body: T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &Document { config, body })?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct Lobes<'a> {
    lobes: &'a [LobeReport],
}

/// `{"config": ..., "lobes": [LobeReport, ...]}`.
pub fn write_lobes_json<W: Write>(lobes: &[LobeReport], config: &Value, out: W) -> Result<()> {
    write_json(config, Lobes { lobes }, out)
}

/// `p, alpha, t, eps, p_launch, kind, measured_d, predicted_d, error,
/// seeding_error_estimate`.
pub fn write_samples_csv<W: Write>(samples: &[DisplacementSample], config: &Value, out: W) -> Result<()> {
    let mut w = csv_writer(out, config)?;
    w.write_record([
        "p",
        "alpha",
        "t",
        "eps",
        "p_launch",
        "kind",
        "measured_d",
        "predicted_d",
        "error",
        "seeding_error_estimate",
    ])?;
    for s in samples {
        w.write_record([
            s.p.to_string(),
            s.alpha.to_string(),
            s.t.to_string(),
            s.eps.to_string(),
            s.p_launch.to_string(),
            format!("{:?}", s.kind).to_lowercase(),
            s.measured_d.to_string(),
            s.predicted_d.to_string(),
            s.error().to_string(),
            s.seeding_error_estimate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Fits<'a> {
    fits: &'a [OrderFit],
}

/// `{"config": ..., "fits": [OrderFit, ...]}`.
pub fn write_fits_json<W: Write>(fits: &[OrderFit], config: &Value, out: W) -> Result<()> {
    write_json(config, Fits { fits }, out)
}

/// `p, alpha, x, y, z, x0, y0, z0, M, displacement, flagged`: perturbed
/// node, unperturbed node, Melnikov value and normal displacement.
pub fn write_surface_csv<W: Write>(mesh: &SurfaceMesh, config: &Value, out: W) -> Result<()> {
    let mut w = csv_writer(out, config)?;
    w.write_record(["p", "alpha", "x", "y", "z", "x0", "y0", "z0", "M", "displacement", "flagged"])?;
    for n in &mesh.nodes {
        let row = [
            n.p,
            n.alpha,
            n.perturbed.x,
            n.perturbed.y,
            n.perturbed.z,
            n.unperturbed.x,
            n.unperturbed.y,
            n.unperturbed.z,
            n.melnikov,
            n.displacement,
        ];
        let mut rec: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        rec.push(u8::from(n.flagged).to_string());
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Indexed triangle mesh of the perturbed (or, with `unperturbed`, the
/// base) surface.
pub fn write_mesh<W: Write>(mesh: &SurfaceMesh, unperturbed: bool, config: &Value, mut out: W) -> Result<()> {
    config_line(&mut out, config)?;
    for n in &mesh.nodes {
        let x = if unperturbed { n.unperturbed } else { n.perturbed };
        writeln!(out, "v {} {} {}", x.x, x.y, x.z)?;
    }
    for [a, b, c] in mesh.triangles() {
        writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1)?;
    }
    Ok(())
}
