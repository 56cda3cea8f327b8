//! Product-grid scans over the Bloch angles, percentile capping for display,
//! CSV / JSON interchange, and the search for `F_beta` hot spots.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::bloch::BlochState;
use crate::error::{Error, Result};
use crate::fisher::{efficiency, fisher_alpha, fisher_beta, fisher_total, FisherScalar};
use crate::par;
use crate::spectral::{xi_table, Boundary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Quantity {
    #[serde(rename = "P_E")]
    EscapeProb,
    #[serde(rename = "F_alpha")]
    FAlpha,
    #[serde(rename = "F_beta")]
    FBeta,
    #[serde(rename = "eta_alpha")]
    EtaAlpha,
    #[serde(rename = "eta_beta")]
    EtaBeta,
    #[serde(rename = "detF_tot")]
    DetFTot,
}

impl Quantity {
    pub const ALL: [Quantity; 6] = [
        Quantity::EscapeProb,
        Quantity::FAlpha,
        Quantity::FBeta,
        Quantity::EtaAlpha,
        Quantity::EtaBeta,
        Quantity::DetFTot,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Quantity::EscapeProb => "P_E",
            Quantity::FAlpha => "F_alpha",
            Quantity::FBeta => "F_beta",
            Quantity::EtaAlpha => "eta_alpha",
            Quantity::EtaBeta => "eta_beta",
            Quantity::DetFTot => "detF_tot",
        }
    }

    /// Escape probabilities are regular everywhere and sampled on nodes;
    /// information quantities avoid the degenerate axes by offsetting.
    pub fn default_layout(&self) -> Layout {
        match self {
            Quantity::EscapeProb => Layout::Nodes,
            _ => Layout::CellCentered,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Quantity::ALL
            .into_iter()
            .find(|q| q.label().to_ascii_lowercase() == norm)
            .ok_or_else(|| Error::Parse(format!("unknown quantity {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Endpoints included: `alpha_i = pi i/(n-1)`, `beta_j = 2pi j/(n-1)`.
    Nodes,
    /// Half-cell offset: `alpha_i = pi (i+1/2)/n`, `beta_j = 2pi (j+1/2)/n`.
    CellCentered,
}

impl Layout {
    fn axis(&self, n: usize, span: f64) -> Vec<f64> {
        match self {
            Layout::Nodes => (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect(),
            Layout::CellCentered => (0..n).map(|i| span * (i as f64 + 0.5) / n as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Regular,
    Limit,
    Singular,
    Undefined,
}

impl Tag {
    fn csv(&self) -> &'static str {
        match self {
            Tag::Regular => "",
            Tag::Limit => "limit",
            Tag::Singular => "singular",
            Tag::Undefined => "undefined",
        }
    }

    fn from_csv(s: &str) -> Result<Self> {
        Ok(match s {
            "" => Tag::Regular,
            "limit" => Tag::Limit,
            "singular" => Tag::Singular,
            "undefined" => Tag::Undefined,
            other => return Err(Error::Parse(format!("unknown cell tag {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub value: Option<f64>,
    pub tag: Tag,
}

impl Cell {
    pub fn regular(v: f64) -> Self {
        Self {
            value: Some(v),
            tag: Tag::Regular,
        }
    }
}

impl From<FisherScalar> for Cell {
    fn from(s: FisherScalar) -> Self {
        match s {
            FisherScalar::Value(v) => Cell::regular(v),
            FisherScalar::Limit(v) => Cell {
                value: Some(v),
                tag: Tag::Limit,
            },
            FisherScalar::Singular => Cell {
                value: None,
                tag: Tag::Singular,
            },
            FisherScalar::Undefined => Cell {
                value: None,
                tag: Tag::Undefined,
            },
        }
    }
}

/// Display cap: values above `threshold` are clamped when rendered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cap {
    pub percentile: f64,
    pub threshold: f64,
}

/// What a grid holds and how it was sampled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMeta {
    pub quantity: Quantity,
    pub placements: Vec<Boundary>,
    pub layout: Layout,
    pub cap: Option<Cap>,
}

/// Scalar field over `alpha_axis x beta_axis`, stored row-major by `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub meta: GridMeta,
    pub alpha_axis: Vec<f64>,
    pub beta_axis: Vec<f64>,
    cells: Vec<Cell>,
}

impl Grid {
    pub fn new(meta: GridMeta, alpha_axis: Vec<f64>, beta_axis: Vec<f64>, cells: Vec<Cell>) -> Result<Self> {
        if cells.len() != alpha_axis.len() * beta_axis.len() {
            return Err(Error::domain("grid cell count does not match axes"));
        }
        for axis in [&alpha_axis, &beta_axis] {
            if axis.is_empty() || axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::domain("grid axes must be nonempty and strictly increasing"));
            }
        }
        Ok(Self {
            meta,
            alpha_axis,
            beta_axis,
            cells,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.alpha_axis.len(), self.beta_axis.len())
    }

    pub fn cell(&self, i_alpha: usize, j_beta: usize) -> Cell {
        self.cells[i_alpha * self.beta_axis.len() + j_beta]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn row(&self, i_alpha: usize) -> &[Cell] {
        let n = self.beta_axis.len();
        &self.cells[i_alpha * n..(i_alpha + 1) * n]
    }

    /// Raw values that carry a number.
    pub fn finite_values(&self) -> Vec<f64> {
        self.cells.iter().filter_map(|c| c.value).collect()
    }

    /// Value as rendered: clamped to the cap threshold when a cap is set.
    pub fn display_value(&self, i_alpha: usize, j_beta: usize) -> Option<f64> {
        let v = self.cell(i_alpha, j_beta).value?;
        Some(match self.meta.cap {
            Some(cap) => v.min(cap.threshold),
            None => v,
        })
    }

    /// Sets a display cap at the given percentile of the raw values.
    pub fn with_cap(mut self, percentile: f64) -> Result<Self> {
        if !(0.0..=100.0).contains(&percentile) {
            return Err(Error::domain(format!("percentile {percentile} outside [0, 100]")));
        }
        let threshold = percentile_of(&self.finite_values(), percentile)
            .ok_or_else(|| Error::domain("cannot cap a grid without finite values"))?;
        self.meta.cap = Some(Cap {
            percentile,
            threshold,
        });
        Ok(self)
    }

    /// `alpha,beta,value,tag` rows in `alpha`-major order. Numbers use the
    /// shortest representation that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "alpha,beta,value,tag")?;
        for (i, a) in self.alpha_axis.iter().enumerate() {
            for (j, b) in self.beta_axis.iter().enumerate() {
                let c = self.cell(i, j);
                match c.value {
                    Some(v) => writeln!(out, "{a:e},{b:e},{v:e},{}", c.tag.csv())?,
                    None => writeln!(out, "{a:e},{b:e},,{}", c.tag.csv())?,
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    /// Parses the CSV produced by [`Grid::write_csv`]; `meta` supplies what
    /// the CSV does not carry.
    pub fn read_csv<R: BufRead>(input: R, meta: GridMeta) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid CSV".into()))?
            .map_err(|e| Error::Parse(e.to_string()))?;
        if header.trim() != "alpha,beta,value,tag" {
            return Err(Error::Parse(format!("unexpected grid CSV header {header:?}")));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {s:?} in grid CSV")))
        };
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut cells = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!("grid CSV row {line:?} needs 4 fields")));
            }
            let (a, b) = (num(fields[0])?, num(fields[1])?);
            if alphas.last() != Some(&a) {
                alphas.push(a);
            }
            if alphas.len() == 1 {
                betas.push(b);
            }
            let value = if fields[2].is_empty() { None } else { Some(num(fields[2])?) };
            cells.push(Cell {
                value,
                tag: Tag::from_csv(fields[3])?,
            });
        }
        Grid::new(meta, alphas, betas, cells)
    }

    /// JSON envelope with axes, labels, cap settings, raw values and, if
    /// capped, the display values.
    pub fn envelope(&self) -> GridEnvelope<'_> {
        let (na, _) = self.shape();
        let values = (0..na).map(|i| self.row(i).iter().map(|c| c.value).collect()).collect();
        let tags = (0..na).map(|i| self.row(i).iter().map(|c| c.tag).collect()).collect();
        let display = self.meta.cap.map(|_| {
            (0..na)
                .map(|i| (0..self.beta_axis.len()).map(|j| self.display_value(i, j)).collect())
                .collect()
        });
        GridEnvelope {
            quantity: self.meta.quantity,
            placements: &self.meta.placements,
            layout: self.meta.layout,
            cap: self.meta.cap,
            alpha_axis: &self.alpha_axis,
            beta_axis: &self.beta_axis,
            values,
            tags,
            display,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GridEnvelope<'a> {
    pub quantity: Quantity,
    pub placements: &'a [Boundary],
    pub layout: Layout,
    pub cap: Option<Cap>,
    pub alpha_axis: &'a [f64],
    pub beta_axis: &'a [f64],
    pub values: Vec<Vec<Option<f64>>>,
    pub tags: Vec<Vec<Tag>>,
    pub display: Option<Vec<Vec<Option<f64>>>>,
}

/// Linear-interpolation percentile (`p` in `[0, 100]`).
pub fn percentile_of(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Full description of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub quantity: Quantity,
    pub placements: Vec<Boundary>,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub layout: Layout,
    pub cap_percentile: Option<f64>,
}

impl GridSpec {
    pub fn new(quantity: Quantity, m: Boundary, n_alpha: usize, n_beta: usize) -> Self {
        Self {
            quantity,
            placements: vec![m],
            n_alpha,
            n_beta,
            layout: quantity.default_layout(),
            cap_percentile: None,
        }
    }

    pub fn placements(mut self, placements: Vec<Boundary>) -> Self {
        self.placements = placements;
        self
    }

    pub fn layout(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    pub fn cap(mut self, percentile: Option<f64>) -> Self {
        self.cap_percentile = percentile;
        self
    }
}

/// Evaluates one quantity at one point.
pub fn evaluate(quantity: Quantity, placements: &[Boundary], state: &BlochState) -> Result<Cell> {
    let m = *placements
        .first()
        .ok_or_else(|| Error::domain("at least one boundary placement is required"))?;
    Ok(match quantity {
        Quantity::EscapeProb => Cell::regular(xi_table(m)?.escape_prob(state)),
        Quantity::FAlpha => fisher_alpha(state, m)?.into(),
        Quantity::FBeta => fisher_beta(state, m)?.into(),
        Quantity::EtaAlpha => efficiency(state, m)?.eta_alpha.into(),
        Quantity::EtaBeta => efficiency(state, m)?.eta_beta.into(),
        Quantity::DetFTot => Cell::regular(fisher_total(state, placements)?.matrix.det()),
    })
}

/// Evaluates `spec.quantity` over the product grid.
pub fn grid_scan(spec: &GridSpec) -> Result<Grid> {
    if spec.n_alpha < 2 || spec.n_beta < 2 {
        return Err(Error::domain("grid resolution must be at least 2 in each direction"));
    }
    if spec.placements.is_empty() {
        return Err(Error::domain("at least one boundary placement is required"));
    }
    for &m in &spec.placements {
        xi_table(m)?;
    }
    let alpha_axis = spec.layout.axis(spec.n_alpha, PI);
    let beta_axis = spec.layout.axis(spec.n_beta, TAU);
    let nb = spec.n_beta;
    let cells = par::map_range(spec.n_alpha * nb, |idx| {
        let state = BlochState::new(alpha_axis[idx / nb], beta_axis[idx % nb])?;
        evaluate(spec.quantity, &spec.placements, &state)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let meta = GridMeta {
        quantity: spec.quantity,
        placements: spec.placements.clone(),
        layout: spec.layout,
        cap: None,
    };
    let grid = Grid::new(meta, alpha_axis, beta_axis, cells)?;
    match spec.cap_percentile {
        Some(p) => grid.with_cap(p),
        None => Ok(grid),
    }
}

/// A refined local maximum of `F_beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HotSpot {
    pub alpha: f64,
    pub beta: f64,
    pub f_beta: f64,
    pub p_e: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` on `[lo, hi]` by golden-section search.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn f_beta_at(m: Boundary, alpha: f64, beta: f64) -> f64 {
    BlochState::new(alpha, beta)
        .ok()
        .and_then(|s| fisher_beta(&s, m).ok())
        .and_then(|v| v.value())
        .unwrap_or(f64::NEG_INFINITY)
}

/// Local maxima of `F_beta` over the Bloch sphere, refined by coordinate
/// ascent to `1e-6` rad and sorted by decreasing `F_beta`.
///
/// `resolution` is the number of `alpha` cells; `beta` gets twice as many.
pub fn hot_spots(m: Boundary, resolution: usize) -> Result<Vec<HotSpot>> {
    const TOL: f64 = 1e-6;
    let coeffs = xi_table(m)?;
    let spec = GridSpec::new(Quantity::FBeta, m, resolution, 2 * resolution);
    let grid = grid_scan(&spec)?;
    let (na, nb) = grid.shape();
    let value = |i: usize, j: usize| grid.cell(i, j).value.unwrap_or(f64::NEG_INFINITY);

    let mut seeds = Vec::new();
    for i in 0..na {
        for j in 0..nb {
            let v = value(i, j);
            if !(v > 0.0) {
                continue;
            }
            let mut is_max = true;
            'nbhd: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ii = i as i64 + di;
                    if ii < 0 || ii >= na as i64 {
                        continue;
                    }
                    let jj = (j as i64 + dj).rem_euclid(nb as i64) as usize;
                    let w = value(ii as usize, jj);
                    // ties go to the earliest cell so plateaus yield one seed
                    let earlier = (ii as usize, jj) < (i, j);
                    if w > v || (w == v && earlier) {
                        is_max = false;
                        break 'nbhd;
                    }
                }
            }
            if is_max {
                seeds.push((grid.alpha_axis[i], grid.beta_axis[j]));
            }
        }
    }

    let da = PI / na as f64;
    let db = TAU / nb as f64;
    let mut spots: Vec<HotSpot> = Vec::new();
    for (mut a, mut b) in seeds {
        for _ in 0..500 {
            let (na_, _) = golden_max(|x| f_beta_at(m, x, b), (a - da).max(0.0), (a + da).min(PI), TOL / 4.0);
            let (nb_, _) = golden_max(|y| f_beta_at(m, na_, y), b - db, b + db, TOL / 4.0);
            let moved = (na_ - a).abs().max((nb_ - b).abs());
            a = na_;
            b = nb_.rem_euclid(TAU);
            if moved < TOL {
                break;
            }
        }
        let f = f_beta_at(m, a, b);
        if !f.is_finite() {
            continue;
        }
        let dup = spots.iter().any(|s| {
            (s.alpha - a).abs() < 1e-4 && {
                let d = (s.beta - b).abs();
                d.min(TAU - d) < 1e-4
            }
        });
        if !dup {
            let p_e = coeffs.escape_prob(&BlochState::new(a, b)?);
            spots.push(HotSpot {
                alpha: a,
                beta: b,
                f_beta: f,
                p_e,
            });
        }
    }
    spots.sort_by(|x, y| y.f_beta.total_cmp(&x.f_beta).then(x.beta.total_cmp(&y.beta)));
    Ok(spots)
}
