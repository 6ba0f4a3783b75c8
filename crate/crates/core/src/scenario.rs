//! Reference and randomized single-junction set-ups.

use std::f64::consts::PI;

use rand::Rng;

use crate::geometry::{fermat_point_default, AnchorSet, Point2};
use crate::junction::JunctionState;

/// Equilateral anchors with unit circumradius, `a0 = (0.1, 0.05)`,
/// `alpha0 = (0.3, -0.2, 0.1)`.
pub fn standard() -> (AnchorSet, JunctionState) {
    (
        AnchorSet::equilateral(),
        JunctionState::new(Point2::new(0.1, 0.05), [0.3, -0.2, 0.1]),
    )
}

/// Anchors on a circle of random radius and centre whose interior angles all
/// lie in `[30, max_angle_deg]` degrees.
pub fn random_anchors<R: Rng + ?Sized>(rng: &mut R, max_angle_deg: f64) -> AnchorSet {
    let lo = PI / 3.0;
    let hi = 2.0 * max_angle_deg.to_radians();
    loop {
        // arc opposite a vertex is twice the inscribed angle at that vertex
        let g1 = rng.gen_range(lo..hi);
        let g2 = rng.gen_range(lo..hi);
        let g3 = 2.0 * PI - g1 - g2;
        if !(lo..hi).contains(&g3) {
            continue;
        }
        let r = rng.gen_range(0.5..2.0);
        let c = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let t0 = rng.gen_range(0.0..2.0 * PI);
        let at = |t: f64| c + Point2::new(t.cos(), t.sin()) * r;
        if let Ok(a) = AnchorSet::new(at(t0), at(t0 + g1), at(t0 + g1 + g2)) {
            return a;
        }
    }
}

/// Random anchors (angles at most 110 degrees), `a0` within a fifth of the
/// shortest equilibrium edge of the Fermat point, and `alpha0` in `[-1, 1]^3`.
pub fn random_valid<R: Rng + ?Sized>(rng: &mut R) -> (AnchorSet, JunctionState) {
    loop {
        let anchors = random_anchors(rng, 110.0);
        let Ok(eq) = fermat_point_default(&anchors) else {
            continue;
        };
        let reach = 0.2 * eq.b_inf.min_len().1;
        let ang = rng.gen_range(0.0..2.0 * PI);
        let rad = reach * rng.gen_range(0.0f64..1.0).sqrt();
        let a0 = eq.a_inf + Point2::new(ang.cos(), ang.sin()) * rad;
        let alpha = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        return (anchors, JunctionState::new(a0, alpha));
    }
}
