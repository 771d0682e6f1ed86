//! h-sets with one exit direction and the horizontal covering check.
//!
//! An `AffineHSet` is a parallelepiped `{ c + M·u : |u_i| <= r_i }` whose
//! first model coordinate is the exit direction. Centers, charts and radii
//! are near-point intervals (tightest enclosures of their decimal
//! literals), and every test is conservative over all representatives, so
//! a passing check holds for the exact printed set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{IBox, Interval, IntervalError};
use crate::matrix::{IMatrix, MatrixError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HSetError {
    #[error("chart not invertibly enclosed: {0}")]
    Chart(#[from] MatrixError),
    #[error("bad dataset literal: {0}")]
    Literal(#[from] IntervalError),
    #[error("dimension mismatch")]
    Shape,
}

/// Parallelepiped with a distinguished exit direction (model coordinate 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineHSet {
    pub center: IBox,
    pub chart: IMatrix,
    pub radii: IBox,
}

impl AffineHSet {
    pub fn new(center: IBox, chart: IMatrix, radii: IBox) -> Result<AffineHSet, HSetError> {
        if center.dim() != chart.dim() || radii.dim() != chart.dim() {
            return Err(HSetError::Shape);
        }
        // chart must be invertibly enclosed
        let probe = IBox::zero(center.dim());
        chart.solve(&probe)?;
        Ok(AffineHSet {
            center,
            chart,
            radii,
        })
    }

    pub fn from_decimals(
        center: &[&str],
        chart: &[&str],
        radii: &[&str],
    ) -> Result<AffineHSet, HSetError> {
        let d = center.len();
        let mut c = Vec::with_capacity(d);
        for s in center {
            c.push(Interval::from_decimal_str(s)?);
        }
        let m = IMatrix::from_decimal_rows(d, chart)?;
        let mut r = Vec::with_capacity(d);
        for s in radii {
            r.push(Interval::from_decimal_str(s)?);
        }
        AffineHSet::new(IBox(c), m, IBox(r))
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// Identity-chart hyper-cuboid `center ± radii`.
    pub fn axis_aligned(center: &[f64], radii: &[f64]) -> AffineHSet {
        let d = center.len();
        AffineHSet {
            center: IBox::from_points(center),
            chart: IMatrix::identity(d),
            radii: IBox::from_points(radii),
        }
    }

    /// Model coordinates of an ambient box: enclosure of `M^{-1}(x - c)`
    /// over every representative.
    pub fn to_model_coords(&self, x: &IBox) -> Result<IBox, HSetError> {
        Ok(self.chart.solve(&x.sub(&self.center))?)
    }

    /// Ambient enclosure of a model box: `c + M·u`.
    pub fn from_model_box(&self, u: &IBox) -> IBox {
        self.center.add(&self.chart.mul_box(u))
    }

    /// Outer model box `[-r, r]` (covers the set for every representative).
    pub fn model_box(&self) -> IBox {
        IBox(
            self.radii
                .0
                .iter()
                .map(|r| Interval::new(-r.hi(), r.hi()))
                .collect(),
        )
    }

    /// Ambient hull of the whole set.
    pub fn hull(&self) -> IBox {
        self.from_model_box(&self.model_box())
    }

    /// Strict interior containment of model coordinates, for every radius
    /// representative: `|u_k| < r_k`. Returns the minimal margin (negative
    /// when violated).
    pub fn interior_margin_model(&self, u: &IBox) -> f64 {
        let mut margin = f64::INFINITY;
        for (uk, rk) in u.0.iter().zip(&self.radii.0) {
            if !uk.is_finite() {
                return f64::NEG_INFINITY;
            }
            let m = rk.lo() - uk.hi().abs().max(uk.lo().abs());
            margin = margin.min(m);
        }
        margin
    }

    /// Model coordinates provably outside the set in some coordinate
    /// (used to skip clipped-away subdivision cells).
    pub fn provably_outside_model(&self, u: &IBox) -> bool {
        u.0.iter()
            .zip(&self.radii.0)
            .any(|(uk, rk)| uk.lo() > rk.hi() || uk.hi() < -rk.hi())
    }

    /// The model faces `u_0 = ∓r_0` as model boxes (left, right), outer
    /// approximation.
    pub fn model_faces(&self) -> (IBox, IBox) {
        let mut left = self.model_box();
        let mut right = left.clone();
        let r0 = &self.radii.0[0];
        left.0[0] = Interval::new(-r0.hi(), -r0.lo());
        right.0[0] = Interval::new(r0.lo(), r0.hi());
        (left, right)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of a strict-inclusion check: named margins (positive = how much
/// room the strict inequality had), subdivision effort, and status.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InclusionReport {
    pub label: String,
    pub status: CheckStatus,
    pub margin: f64,
    pub subdivision_depth: usize,
    pub boxes_checked: usize,
    pub detail: Vec<(String, f64)>,
}

impl InclusionReport {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass && self.margin > 0.0
    }
}

/// Image enclosures for a horizontal covering check, all given in the
/// target's model coordinates.
#[derive(Clone, Debug)]
pub struct CoveringImages {
    pub body: IBox,
    pub left_face: IBox,
    pub right_face: IBox,
}

/// Checks `S` f-covers `S'` horizontally: the image stays strictly inside
/// the target transversally while the faces land strictly beyond the
/// target's exit faces (exactly one of the two orientations).
pub fn check_horizontal_covering(target: &AffineHSet, images: &CoveringImages) -> InclusionReport {
    let d = target.dim();
    let mut detail = Vec::new();
    let mut transverse = f64::INFINITY;
    for k in 1..d {
        for (name, b) in [
            ("body", &images.body),
            ("left", &images.left_face),
            ("right", &images.right_face),
        ] {
            let uk = &b.0[k];
            let rk = &target.radii.0[k];
            let m = if uk.is_finite() {
                rk.lo() - uk.hi().abs().max(uk.lo().abs())
            } else {
                f64::NEG_INFINITY
            };
            detail.push((format!("transverse[{k}]:{name}"), m));
            transverse = transverse.min(m);
        }
    }
    let exit_ok = images.body.0[0].is_finite();

    let r0 = target.radii.0[0].hi();
    // unswapped: f(L) left of the target, f(R) right of it
    let un_l = -r0 - images.left_face.0[0].hi();
    let un_r = images.right_face.0[0].lo() - r0;
    // swapped: f(L) right, f(R) left
    let sw_l = images.left_face.0[0].lo() - r0;
    let sw_r = -r0 - images.right_face.0[0].hi();
    let unswapped = un_l.min(un_r);
    let swapped = sw_l.min(sw_r);
    let (orientation, exit_margin) = if unswapped > 0.0 {
        ("unswapped", unswapped)
    } else if swapped > 0.0 {
        ("swapped", swapped)
    } else {
        ("none", unswapped.max(swapped))
    };
    detail.push((format!("exit:{orientation}"), exit_margin));

    let margin = transverse.min(exit_margin);
    let status = if margin > 0.0 && exit_ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    InclusionReport {
        label: format!("horizontal covering ({orientation})"),
        status,
        margin,
        subdivision_depth: 0,
        boxes_checked: 1,
        detail,
    }
}
