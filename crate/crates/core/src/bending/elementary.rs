use crate::bending::planar::{planar_bend, BendingParams};
use crate::heisenberg::{act, flattening_map, HeisenbergPoint};

/// The elementary bending of the boundary: on each Cygan sphere S(0,r) it is the planar
/// bend conjugated by the flattening map h_r. Fixes the origin and infinity.
pub fn elementary_bend_boundary(p: &BendingParams, x: &HeisenbergPoint) -> HeisenbergPoint {
    let (xi, v) = match x.coords() {
        None => return HeisenbergPoint::Infinity,
        Some(c) => c,
    };
    if p.eta() == 0.0 {
        return *x;
    }
    let radius = crate::linalg::c(xi.norm_sqr(), -v).norm().sqrt();
    if radius == 0.0 {
        return *x;
    }
    let h = flattening_map(radius).expect("positive radius");
    let flat = act(&h, x).expect("Siegel-model map");
    let bent = match flat {
        HeisenbergPoint::Infinity => return *x,
        HeisenbergPoint::Finite { xi, .. } => HeisenbergPoint::new(planar_bend(p, xi), 0.0),
    };
    act(&h.inverse(), &bent).expect("Siegel-model map")
}
