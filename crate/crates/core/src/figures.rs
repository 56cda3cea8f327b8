//! Data behind the escape-probability, Fisher-information and efficiency
//! figures: surfaces, 1-D cuts and a manifest describing every file.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::grid::{evaluate, grid_scan, Grid, GridMeta, GridSpec, Layout, Quantity};
use crate::spectral::Boundary;

/// Percentile at which efficiency maps are capped for display.
pub const EFFICIENCY_CAP_PERCENTILE: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigureOptions {
    pub n_alpha: usize,
    pub n_beta: usize,
    pub cut_points: usize,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            n_alpha: 101,
            n_beta: 201,
            cut_points: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridEntry {
    pub figure: u8,
    pub quantity: Quantity,
    pub m: Boundary,
    pub layout: Layout,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub cap_percentile: Option<f64>,
    pub cap_threshold: Option<f64>,
    pub csv: String,
    pub json: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutAxis {
    /// `alpha` held fixed, `beta` swept over `[0, 2pi]`.
    Alpha,
    /// `beta` held fixed, `alpha` swept over `[0, pi]`.
    Beta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutEntry {
    pub figure: u8,
    pub quantity: Quantity,
    pub m: Boundary,
    pub fixed: CutAxis,
    pub fixed_value: f64,
    pub fixed_label: &'static str,
    pub points: usize,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub options: FigureOptions,
    pub grids: Vec<GridEntry>,
    pub cuts: Vec<CutEntry>,
}

impl Manifest {
    pub fn files(&self) -> Vec<&str> {
        self.grids
            .iter()
            .flat_map(|g| [g.csv.as_str(), g.json.as_str()])
            .chain(self.cuts.iter().map(|c| c.csv.as_str()))
            .collect()
    }
}

const CUT_ANGLES: [(f64, &str); 3] = [(0.0, "0"), (FRAC_PI_2, "pi2"), (PI, "pi")];

fn m_label(m: Boundary) -> String {
    match m {
        Boundary::Finite(k) => format!("M{k}"),
        Boundary::Infinite => "Minf".into(),
    }
}

fn linspace(n: usize, span: f64) -> Vec<f64> {
    (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect()
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

fn emit_grid(dir: &Path, figure: u8, grid: &Grid) -> Result<GridEntry> {
    let m = grid.meta.placements[0];
    let stem = format!("fig{figure}_{}_{}", grid.meta.quantity.label(), m_label(m));
    let csv = format!("{stem}.csv");
    let json = format!("{stem}.json");
    write_file(&dir.join(&csv), |w| grid.write_csv(w))?;
    write_file(&dir.join(&json), |w| {
        serde_json::to_writer(&mut *w, &grid.envelope()).map_err(std::io::Error::other)
    })?;
    let (n_alpha, n_beta) = grid.shape();
    Ok(GridEntry {
        figure,
        quantity: grid.meta.quantity,
        m,
        layout: grid.meta.layout,
        n_alpha,
        n_beta,
        cap_percentile: grid.meta.cap.map(|c| c.percentile),
        cap_threshold: grid.meta.cap.map(|c| c.threshold),
        csv,
        json,
    })
}

/// A 1-D slice stored as a grid with a single-element fixed axis.
pub fn cut(quantity: Quantity, m: Boundary, fixed: CutAxis, value: f64, points: usize) -> Result<Grid> {
    if points < 2 {
        return Err(Error::domain("a cut needs at least 2 points"));
    }
    let (alpha_axis, beta_axis) = match fixed {
        CutAxis::Alpha => (vec![value], linspace(points, TAU)),
        CutAxis::Beta => (linspace(points, PI), vec![value]),
    };
    let mut cells = Vec::with_capacity(points);
    for &a in &alpha_axis {
        for &b in &beta_axis {
            cells.push(evaluate(quantity, &[m], &BlochState::new(a, b)?)?);
        }
    }
    let meta = GridMeta {
        quantity,
        placements: vec![m],
        layout: Layout::Nodes,
        cap: None,
    };
    Grid::new(meta, alpha_axis, beta_axis, cells)
}

fn fig2(dir: &Path, opts: &FigureOptions, manifest: &mut Manifest) -> Result<()> {
    for m in [Boundary::Finite(1), Boundary::Finite(2), Boundary::Infinite] {
        let spec = GridSpec::new(Quantity::EscapeProb, m, opts.n_alpha, opts.n_beta);
        manifest.grids.push(emit_grid(dir, 2, &grid_scan(&spec)?)?);
        for fixed in [CutAxis::Alpha, CutAxis::Beta] {
            for (value, label) in CUT_ANGLES {
                let g = cut(Quantity::EscapeProb, m, fixed, value, opts.cut_points)?;
                let axis = match fixed {
                    CutAxis::Alpha => "alpha",
                    CutAxis::Beta => "beta",
                };
                let csv = format!("fig2_cut_{}_{axis}_{label}.csv", m_label(m));
                write_file(&dir.join(&csv), |w| g.write_csv(w))?;
                manifest.cuts.push(CutEntry {
                    figure: 2,
                    quantity: Quantity::EscapeProb,
                    m,
                    fixed,
                    fixed_value: value,
                    fixed_label: label,
                    points: opts.cut_points,
                    csv,
                });
            }
        }
    }
    Ok(())
}

fn fig3(dir: &Path, opts: &FigureOptions, manifest: &mut Manifest) -> Result<()> {
    for m in [Boundary::Finite(1), Boundary::Infinite] {
        for q in [Quantity::FAlpha, Quantity::FBeta] {
            let spec = GridSpec::new(q, m, opts.n_alpha, opts.n_beta);
            manifest.grids.push(emit_grid(dir, 3, &grid_scan(&spec)?)?);
        }
    }
    Ok(())
}

fn fig4(dir: &Path, opts: &FigureOptions, manifest: &mut Manifest) -> Result<()> {
    for m in [Boundary::Finite(1), Boundary::Finite(2), Boundary::Infinite] {
        for q in [Quantity::EtaAlpha, Quantity::EtaBeta] {
            let spec = GridSpec::new(q, m, opts.n_alpha, opts.n_beta).cap(Some(EFFICIENCY_CAP_PERCENTILE));
            manifest.grids.push(emit_grid(dir, 4, &grid_scan(&spec)?)?);
        }
    }
    Ok(())
}

/// Writes every surface and cut into `out_dir` (created if missing) and
/// returns the manifest, which is also saved as `manifest.json`.
pub fn reproduce_figures(out_dir: impl AsRef<Path>, opts: &FigureOptions) -> Result<Manifest> {
    let dir: PathBuf = out_dir.as_ref().to_path_buf();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut manifest = Manifest {
        options: *opts,
        grids: Vec::new(),
        cuts: Vec::new(),
    };
    fig2(&dir, opts, &mut manifest)?;
    fig3(&dir, opts, &mut manifest)?;
    fig4(&dir, opts, &mut manifest)?;
    let path = dir.join("manifest.json");
    write_file(&path, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest).map_err(std::io::Error::other)
    })?;
    Ok(manifest)
}
