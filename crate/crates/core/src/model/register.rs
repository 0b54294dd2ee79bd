use super::{Curve, ModelError, SubjectEffects, TemplateModel};
use crate::splines::MonotoneWarp;

/// Aligns a curve: each grid point `t` moves to `h⁻¹(t)` under the subject's
/// estimated warp; values are untouched.
pub fn register_curve(curve: &Curve, effects: &SubjectEffects, model: &TemplateModel) -> Result<Curve, ModelError> {
    let knots = model.warp_reference().with_knots(effects.tau_hat.clone())?;
    let warp = MonotoneWarp::new(&knots);
    let grid = curve.grid.iter().map(|&t| warp.invert(t)).collect::<Result<_, _>>()?;
    Curve::new(curve.id.clone(), grid, curve.values.clone())
}
