//! Beamspace magnitude maps of one realization, as CSV grids, a metadata
//! JSON document and optional SVG heatmaps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::metrics::{compute_nmse, compute_rho_db};
use super::trial::{SweepPoint, TrialContext, TrialSeeds};
use crate::beamspace::RealGrid;
use crate::error::{Error, Result};
use crate::estimator::Method;

#[derive(Clone, Debug, Serialize)]
struct MapInfo {
    name: String,
    csv: String,
    svg: Option<String>,
    max: f64,
    nmse: Option<f64>,
    rho_db: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
struct FigureMetadata<'a> {
    config_hash: String,
    n_y: usize,
    n_z: usize,
    layout: &'static str,
    trial: usize,
    seeds: TrialSeeds,
    snr_db: f64,
    m_over_n: f64,
    l_paths: usize,
    scene: &'a crate::channel::Scene,
    maps: Vec<MapInfo>,
}

/// Write `true_S.csv` and one `<METHOD>.csv` per method (rows are `n`,
/// columns are `m`), plus `metadata.json`; with `svg`, one heatmap per map.
/// Returns the written paths.
pub fn emit_beamspace_figure(
    cfg: &ExperimentConfig,
    trial: usize,
    methods: &[Method],
    out_dir: &Path,
    svg: bool,
) -> Result<Vec<PathBuf>> {
    let ctx = TrialContext::new(cfg)?;
    let point = SweepPoint { index: 0, snr_db: cfg.fixed_snr_db, m_over_n: cfg.fixed_m_over_n, l_paths: cfg.l_paths };
    let (seeds, art) = ctx.run_artifacts(&point, trial, methods)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;

    let mut maps = vec![("true_S".to_string(), art.s_true.magnitudes(), None, None)];
    for est in &art.estimates {
        let nmse = compute_nmse(&est.h_hat, &art.h).ok();
        let rho = compute_rho_db(&est.h_hat, &art.h).ok();
        maps.push((est.method.name().to_string(), est.s_hat.magnitudes(), nmse, rho));
    }
    let mut written = Vec::new();
    let mut infos = Vec::new();
    for (name, grid, nmse, rho_db) in maps {
        let csv = format!("{name}.csv");
        written.push(write_file(out_dir, &csv, grid.to_csv())?);
        let svg_name = if svg {
            let n = format!("{name}.svg");
            written.push(write_file(out_dir, &n, heatmap_svg(&grid, &name))?);
            Some(n)
        } else {
            None
        };
        infos.push(MapInfo { name, csv, svg: svg_name, max: grid.max(), nmse, rho_db });
    }
    let meta = FigureMetadata {
        config_hash: cfg.hash(),
        n_y: ctx.geom.n_y(),
        n_z: ctx.geom.n_z(),
        layout: "row n (y-axis index), column m (z-axis index), values |S[n,m]|",
        trial,
        seeds,
        snr_db: point.snr_db,
        m_over_n: point.m_over_n,
        l_paths: point.l_paths,
        scene: &art.scene,
        maps: infos,
    };
    written.push(write_file(out_dir, "metadata.json", serde_json::to_string_pretty(&meta)? + "\n")?);
    Ok(written)
}

fn write_file(dir: &Path, name: &str, text: String) -> Result<PathBuf> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Error::io(p.display().to_string(), e))?;
    Ok(p)
}

/// Grayscale heatmap, one square per cell, `n` along x and `m` along y.
pub fn heatmap_svg(grid: &RealGrid, title: &str) -> String {
    const CELL: usize = 12;
    let (w, h) = (grid.n_y * CELL, grid.n_z * CELL + 20);
    let top = grid.max();
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<text x="2" y="14" font-family="monospace" font-size="12">{title}</text>"#);
    for m in 0..grid.n_z {
        for n in 0..grid.n_y {
            let v = if top > 0.0 { grid.get(n, m) / top } else { 0.0 };
            let level = (255.0 * (1.0 - v)).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="rgb({level},{level},{level})"/>"#,
                n * CELL,
                20 + m * CELL
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
