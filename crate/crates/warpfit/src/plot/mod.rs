//! Plot builders. Each returns a [`Figure`] whose series are the plotted
//! data; the CSV written from a figure is the authoritative output and the
//! SVG is a rendering of it.

mod svg;

pub use svg::{Figure, Series};

use warpfit_core::discriminate::LogisticModel;
use warpfit_core::model::register_curve;
use warpfit_core::{Curve, MonotoneWarp, SubjectEffects, TemplateModel};

use crate::error::{Error, Result};

/// Points per evaluation grid for functions of `t`.
pub const GRID_POINTS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Curves,
    Registered,
    Components,
    Warps,
    Beta,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Curves => "curves",
            PlotKind::Registered => "registered",
            PlotKind::Components => "components",
            PlotKind::Warps => "warps",
            PlotKind::Beta => "beta",
        }
    }
}

pub fn eval_grid(model: &TemplateModel) -> Vec<f64> {
    let iv = model.interval();
    (0..GRID_POINTS).map(|i| iv.lo + (iv.hi - iv.lo) * i as f64 / (GRID_POINTS - 1) as f64).collect()
}

fn curve_series(c: &Curve) -> Series {
    Series::new(c.id.clone(), c.grid.iter().copied().zip(c.values.iter().copied()).collect())
}

pub fn curves_figure(curves: &[Curve]) -> Figure {
    let mut f = Figure::new("Observed curves", "t", "value");
    f.series.extend(curves.iter().map(curve_series));
    f
}

/// Curves on their registered time axes. Curves without effects are skipped.
pub fn registered_figure(curves: &[Curve], effects: &[SubjectEffects], model: &TemplateModel) -> Result<Figure> {
    let mut f = Figure::new("Registered curves", "t", "value");
    for c in curves {
        let Some(e) = effects.iter().find(|e| e.id == c.id) else {
            log::warn!("no effects for curve {}; left out of the registered plot", c.id);
            continue;
        };
        f.push(curve_series(&register_curve(c, e, model)?));
    }
    Ok(f)
}

/// Mean and `mean ± scale·√λ_k·ξ_k` for every component.
pub fn components_figure(model: &TemplateModel, scale: f64) -> Result<Figure> {
    let grid = eval_grid(model);
    let mean: Vec<f64> = grid.iter().map(|&t| model.mean_at(t)).collect::<std::result::Result<_, _>>()?;
    let mut f = Figure::new("Mean and principal components", "t", "value");
    f.push(Series::new("mean", grid.iter().copied().zip(mean.iter().copied()).collect()).color("#000000"));
    for k in 0..model.p() {
        let amp = scale * model.variances()[k].sqrt();
        let xi: Vec<f64> = grid.iter().map(|&t| model.component_at(k, t)).collect::<std::result::Result<_, _>>()?;
        let line = |sign: f64| grid.iter().zip(&mean).zip(&xi).map(|((&t, &m), &x)| (t, m + sign * amp * x)).collect();
        f.push(Series::new(format!("mean+pc{}", k + 1), line(1.0)));
        f.push(Series::new(format!("mean-pc{}", k + 1), line(-1.0)).dashed());
    }
    Ok(f)
}

/// Estimated warping functions `h_i` on the model interval.
pub fn warps_figure(effects: &[SubjectEffects], model: &TemplateModel) -> Result<Figure> {
    let grid = eval_grid(model);
    let mut f = Figure::new("Warping functions", "t", "h(t)");
    for e in effects {
        let knots = model.warp_reference().with_knots(e.tau_hat.clone()).map_err(warpfit_core::model::ModelError::from)?;
        let warp = MonotoneWarp::new(&knots);
        let pts = grid.iter().map(|&t| warp.eval(t).map(|h| (t, h))).collect::<std::result::Result<_, _>>().map_err(warpfit_core::model::ModelError::from)?;
        f.push(Series::new(e.id.clone(), pts));
    }
    Ok(f)
}

/// Discriminant function `β(t) = Σ_k b_k ξ_k(t)`.
pub fn beta_figure(model: &TemplateModel, logistic: &LogisticModel) -> Result<Figure> {
    if logistic.b.len() != model.p() {
        return Err(Error::Validation(format!("logistic model has {} score coefficients but the template has {} components", logistic.b.len(), model.p())));
    }
    let grid = eval_grid(model);
    let mut pts = Vec::with_capacity(grid.len());
    for &t in &grid {
        let mut v = 0.0;
        for (k, b) in logistic.b.iter().enumerate() {
            v += b * model.component_at(k, t)?;
        }
        pts.push((t, v));
    }
    let mut f = Figure::new("Discriminant function", "t", "beta(t)");
    f.push(Series::new("beta", pts));
    Ok(f)
}
