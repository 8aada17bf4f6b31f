use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

const X_EPS: f64 = 1e-12;

/// Piecewise-linear membership function on `[0, 1]`.
///
/// Breakpoints are `(x, grade)` pairs with strictly increasing `x`, starting
/// at 0 and ending at 1. Between breakpoints the grade is interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct MembershipFunction {
    points: Vec<(f64, f64)>,
}

impl MembershipFunction {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Membership("need at least two breakpoints".into()));
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return Err(Error::Membership(format!(
                "breakpoints must span [0, 1], got [{}, {}]",
                points[0].0,
                points[points.len() - 1].0
            )));
        }
        for w in points.windows(2) {
            if w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater) {
                return Err(Error::Membership(format!(
                    "x values must strictly increase ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(x, g)) = points.iter().find(|(_, g)| !(0.0..=1.0).contains(g)) {
            return Err(Error::Membership(format!("grade {g} at x = {x} is outside [0, 1]")));
        }
        Ok(Self { points })
    }

    /// Builds a function from points that may contain near-duplicate x
    /// values at the domain edges; the first of each duplicate run is kept.
    pub(crate) fn from_outline(outline: &[(f64, f64)]) -> Result<Self> {
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(outline.len());
        for &(x, g) in outline {
            let x = x.clamp(0.0, 1.0);
            match points.last() {
                Some(&(last, _)) if x - last < X_EPS => {}
                _ => points.push((x, g)),
            }
        }
        // keep the exact right edge even if it collapsed onto the previous point
        if let Some(last) = points.last_mut() {
            if (last.0 - 1.0).abs() < X_EPS {
                last.0 = 1.0;
            }
        }
        Self::new(points)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Grade at `x`; errors outside `[0, 1]`.
    pub fn grade(&self, x: f64) -> Result<f64> {
        check_unit("membership input", x)?;
        Ok(self.eval(x))
    }

    /// Grade at `x`, assumed in range.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let idx = self.points.partition_point(|&(px, _)| px <= x);
        if idx == 0 {
            return self.points[0].1;
        }
        if idx == self.points.len() {
            return self.points[idx - 1].1;
        }
        let (x0, y0) = self.points[idx - 1];
        let (x1, y1) = self.points[idx];
        if x == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn max_grade(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    /// x of the first breakpoint reaching the maximum grade.
    pub fn argmax(&self) -> f64 {
        let max = self.max_grade();
        self.points.iter().find(|p| p.1 == max).map(|p| p.0).unwrap_or(0.0)
    }

    /// Smallest x in `[lo, hi]` whose grade is at least `g`.
    pub(crate) fn first_at_least(&self, g: f64, lo: f64, hi: f64) -> Option<f64> {
        for seg in self.segments(lo, hi) {
            let ((x0, y0), (x1, y1)) = seg;
            if y0 >= g {
                return Some(x0);
            }
            if y1 >= g {
                return Some(x0 + (g - y0) / (y1 - y0) * (x1 - x0));
            }
        }
        None
    }

    /// Largest x in `[lo, hi]` whose grade is at least `g`.
    pub(crate) fn last_at_least(&self, g: f64, lo: f64, hi: f64) -> Option<f64> {
        for seg in self.segments(lo, hi).into_iter().rev() {
            let ((x0, y0), (x1, y1)) = seg;
            if y1 >= g {
                return Some(x1);
            }
            if y0 >= g {
                return Some(x1 - (g - y1) / (y0 - y1) * (x1 - x0));
            }
        }
        None
    }

    /// The linear pieces of the function clipped to `[lo, hi]`.
    fn segments(&self, lo: f64, hi: f64) -> Vec<((f64, f64), (f64, f64))> {
        let mut out = Vec::new();
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let start = a.0.max(lo);
            let end = b.0.min(hi);
            if end < start {
                continue;
            }
            out.push(((start, self.eval(start)), (end, self.eval(end))));
        }
        out
    }
}

impl TryFrom<Vec<(f64, f64)>> for MembershipFunction {
    type Error = Error;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<MembershipFunction> for Vec<(f64, f64)> {
    fn from(mf: MembershipFunction) -> Self {
        mf.points
    }
}

/// Silhouette of an output set; decides how many slopes get cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    /// Grade 1 at x = 0, falling slope only.
    LeftShoulder,
    SymmetricTriangle,
    /// Grade 1 at x = 1, rising slope only.
    RightShoulder,
}

/// Interval type-2 set: a footprint of uncertainty between two type-1
/// membership functions.
#[derive(Debug, Clone, PartialEq)]
pub struct It2FuzzySet {
    upper: MembershipFunction,
    lower: MembershipFunction,
    shape: ShapeKind,
}

impl It2FuzzySet {
    pub fn new(upper: MembershipFunction, lower: MembershipFunction, shape: ShapeKind) -> Result<Self> {
        // Both functions are linear between the union of their breakpoints,
        // so checking containment there covers the whole domain.
        for &(x, _) in upper.breakpoints().iter().chain(lower.breakpoints()) {
            if lower.eval(x) > upper.eval(x) + 1e-12 {
                return Err(Error::Membership(format!(
                    "lower grade {} exceeds upper grade {} at x = {x}",
                    lower.eval(x),
                    upper.eval(x)
                )));
            }
        }
        match shape {
            ShapeKind::LeftShoulder if upper.eval(0.0) != 1.0 => {
                return Err(Error::Membership("left shoulder must have grade 1 at x = 0".into()))
            }
            ShapeKind::RightShoulder if upper.eval(1.0) != 1.0 => {
                return Err(Error::Membership("right shoulder must have grade 1 at x = 1".into()))
            }
            ShapeKind::SymmetricTriangle => {
                let apex = upper.argmax();
                for mf in [&upper, &lower] {
                    for &(x, g) in mf.breakpoints() {
                        let mirrored = 2.0 * apex - x;
                        if (0.0..=1.0).contains(&mirrored) && (mf.eval(mirrored) - g).abs() > 1e-9 {
                            return Err(Error::Membership(format!(
                                "triangle is not symmetric about its apex {apex} (x = {x})"
                            )));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(Self { upper, lower, shape })
    }

    /// Triangular set with apex `apex`, upper half-width `upper_half`, lower
    /// half-width `lower_half` and lower apex height `lower_height`. Shoulder
    /// sets keep their full grade all the way to the domain edge.
    pub fn triangular(
        apex: f64,
        upper_half: f64,
        lower_half: f64,
        lower_height: f64,
        shape: ShapeKind,
    ) -> Result<Self> {
        let outline = |half: f64, height: f64| -> Vec<(f64, f64)> {
            match shape {
                ShapeKind::LeftShoulder => vec![(0.0, height), (half, 0.0), (1.0, 0.0)],
                ShapeKind::RightShoulder => vec![(0.0, 0.0), (1.0 - half, 0.0), (1.0, height)],
                ShapeKind::SymmetricTriangle => vec![
                    (0.0, 0.0),
                    (apex - half, 0.0),
                    (apex, height),
                    (apex + half, 0.0),
                    (1.0, 0.0),
                ],
            }
        };
        let upper = MembershipFunction::from_outline(&outline(upper_half, 1.0))?;
        let lower = MembershipFunction::from_outline(&outline(lower_half, lower_height))?;
        Self::new(upper, lower, shape)
    }

    pub fn upper(&self) -> &MembershipFunction {
        &self.upper
    }

    pub fn lower(&self) -> &MembershipFunction {
        &self.lower
    }

    pub fn shape(&self) -> ShapeKind {
        self.shape
    }

    pub fn apex(&self) -> f64 {
        match self.shape {
            ShapeKind::LeftShoulder => 0.0,
            ShapeKind::RightShoulder => 1.0,
            ShapeKind::SymmetricTriangle => self.upper.argmax(),
        }
    }

    /// Cut of the rising slope at height `g`: from the upper-function
    /// crossing to the lower-function crossing (the apex when the lower
    /// function never gets that high).
    pub fn cut_rising(&self, g: f64) -> (f64, f64) {
        let apex = self.apex();
        let outer = self.upper.first_at_least(g, 0.0, apex).unwrap_or(apex);
        let inner = self.lower.first_at_least(g, 0.0, apex).unwrap_or(apex);
        (outer.min(inner), inner.max(outer))
    }

    /// Cut of the falling slope at height `g`.
    pub fn cut_falling(&self, g: f64) -> (f64, f64) {
        let apex = self.apex();
        let outer = self.upper.last_at_least(g, apex, 1.0).unwrap_or(apex);
        let inner = self.lower.last_at_least(g, apex, 1.0).unwrap_or(apex);
        (inner.min(outer), outer.max(inner))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn low() -> MembershipFunction {
        MembershipFunction::new(vec![(0.0, 1.0), (0.5, 0.0), (1.0, 0.0)]).unwrap()
    }

    #[test]
    fn grades_by_interpolation() {
        let mf = low();
        assert_eq!(mf.grade(0.0).unwrap(), 1.0);
        assert_eq!(mf.grade(0.25).unwrap(), 0.5);
        assert_eq!(mf.grade(0.75).unwrap(), 0.0);
        let medium = MembershipFunction::new(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(medium.grade(0.5).unwrap(), 1.0);
    }

    #[test]
    fn grade_outside_domain_is_an_error() {
        assert!(matches!(low().grade(-0.01), Err(Error::Domain { .. })));
        assert!(matches!(low().grade(1.5), Err(Error::Domain { .. })));
        assert!(low().grade(f64::NAN).is_err());
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(MembershipFunction::new(vec![(0.0, 1.0)]).is_err());
        assert!(MembershipFunction::new(vec![(0.1, 1.0), (1.0, 0.0)]).is_err());
        assert!(MembershipFunction::new(vec![(0.0, 1.0), (0.5, 0.0), (0.5, 0.0), (1.0, 0.0)]).is_err());
        assert!(MembershipFunction::new(vec![(0.0, 1.2), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn footprint_must_contain_lower() {
        let upper = MembershipFunction::new(vec![(0.0, 0.0), (0.5, 0.5), (1.0, 0.0)]).unwrap();
        let lower = MembershipFunction::new(vec![(0.0, 0.0), (0.5, 0.8), (1.0, 0.0)]).unwrap();
        assert!(It2FuzzySet::new(upper, lower, ShapeKind::SymmetricTriangle).is_err());
    }

    #[test]
    fn triangle_cuts() {
        let set = It2FuzzySet::triangular(0.5, 1.0 / 6.0, 1.0 / 12.0, 0.8, ShapeKind::SymmetricTriangle)
            .unwrap();
        // height 0.4: upper crosses at 0.5 - (1/6)(0.6), lower at 0.5 - (1/12)(0.5)
        let (l, r) = set.cut_rising(0.4);
        assert!((l - (0.5 - 0.1)).abs() < 1e-12);
        assert!((r - (0.5 - 1.0 / 24.0)).abs() < 1e-12);
        let (l2, r2) = set.cut_falling(0.4);
        assert!((l2 - (1.0 - r)).abs() < 1e-12 && (r2 - (1.0 - l)).abs() < 1e-12);
        // above the lower apex height the inner edge sits on the apex
        let (_, inner) = set.cut_rising(0.9);
        assert_eq!(inner, 0.5);
    }

    #[test]
    fn shoulder_cut_at_full_height_is_a_point() {
        let set = It2FuzzySet::triangular(1.0, 1.0 / 6.0, 1.0 / 12.0, 0.8, ShapeKind::RightShoulder).unwrap();
        assert_eq!(set.cut_rising(1.0), (1.0, 1.0));
        assert_eq!(set.apex(), 1.0);
    }
}
