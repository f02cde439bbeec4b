//! Exact plane geometry over [`Rational`] coordinates.
//!
//! Distances are handled squared throughout; thresholds are compared by
//! comparing squares, which is exact because both sides are nonnegative.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: Rational,
    pub y: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("cannot step toward a point from itself")]
    Degenerate,
    #[error("step fraction {0} outside (0, 1]")]
    FractionOutOfRange(Rational),
}

impl Point {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        Point::new(x.into(), y.into())
    }

    /// A point on the x-axis.
    pub fn on_axis(x: Rational) -> Self {
        Point::new(x, Rational::zero())
    }

    pub fn origin() -> Self {
        Point::default()
    }

    pub fn dot(&self, other: &Point) -> Rational {
        &self.x * &other.x + &self.y * &other.y
    }

    pub fn scale(&self, k: &Rational) -> Point {
        Point::new(&self.x * k, &self.y * k)
    }

    pub fn norm_squared(&self) -> Rational {
        self.dot(self)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add<&Point> for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        Point::new(&self.x + &rhs.x, &self.y + &rhs.y)
    }
}

impl Sub<&Point> for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        Point::new(&self.x - &rhs.x, &self.y - &rhs.y)
    }
}

impl Mul<&Rational> for &Point {
    type Output = Point;
    fn mul(self, rhs: &Rational) -> Point {
        self.scale(rhs)
    }
}

/// Squared Euclidean distance.
pub fn distance(p: &Point, q: &Point) -> Rational {
    (p - q).norm_squared()
}

/// Compares `dis(p, q)` against a nonnegative `threshold`.
pub fn compare_distance(p: &Point, q: &Point, threshold: &Rational) -> Ordering {
    debug_assert!(!threshold.is_negative());
    distance(p, q).cmp(&(threshold * threshold))
}

/// Exact Euclidean distance, when it is rational.
pub fn exact_distance(p: &Point, q: &Point) -> Option<Rational> {
    distance(p, q).sqrt_exact()
}

pub fn midpoint(p: &Point, q: &Point) -> Point {
    let half = Rational::new(1, 2);
    Point::new((&p.x + &q.x) * &half, (&p.y + &q.y) * &half)
}

/// `from + fraction * (to - from)`, for a fraction in (0, 1].
pub fn point_toward(from: &Point, to: &Point, fraction: &Rational) -> Result<Point, GeometryError> {
    if from == to {
        return Err(GeometryError::Degenerate);
    }
    if !fraction.is_positive() || fraction > &Rational::one() {
        return Err(GeometryError::FractionOutOfRange(fraction.clone()));
    }
    Ok(lerp(from, to, fraction))
}

/// Linear interpolation without range checks; `lerp(a, b, 0) = a`.
pub fn lerp(from: &Point, to: &Point, t: &Rational) -> Point {
    from + &(&(to - from) * t)
}

/// Whether `p` lies on the closed segment `[a, b]`.
pub fn on_segment(p: &Point, a: &Point, b: &Point) -> bool {
    if a == b {
        return p == a;
    }
    let ab = b - a;
    let ap = p - a;
    let cross = &ab.x * &ap.y - &ab.y * &ap.x;
    if !cross.is_zero() {
        return false;
    }
    let t = ap.dot(&ab) / ab.norm_squared();
    !t.is_negative() && t <= Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: i64, y: i64) -> Point {
        Point::from_ints(x, y)
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&pt(0, 0), &pt(0, 0)), Rational::zero());
        assert_eq!(distance(&pt(0, 0), &pt(3, 4)), Rational::from_integer(25));
        assert_eq!(
            compare_distance(&pt(0, 0), &pt(5, 0), &Rational::from_integer(2)),
            Ordering::Greater
        );
        assert_eq!(exact_distance(&pt(0, 0), &pt(3, 4)), Some(5.into()));
        assert_eq!(exact_distance(&pt(0, 0), &pt(1, 1)), None);
    }

    #[test]
    fn midpoint_examples() {
        assert_eq!(midpoint(&pt(0, 0), &pt(2, 0)), pt(1, 0));
        assert_eq!(midpoint(&pt(3, 7), &pt(3, 7)), pt(3, 7));
        assert_eq!(
            midpoint(&pt(0, 0), &pt(1, 1)),
            Point::new(Rational::new(1, 2), Rational::new(1, 2))
        );
    }

    #[test]
    fn point_toward_examples() {
        assert_eq!(
            point_toward(&pt(0, 0), &pt(4, 0), &Rational::new(1, 8)).unwrap(),
            Point::on_axis(Rational::new(1, 2))
        );
        assert_eq!(
            point_toward(&pt(0, 0), &pt(2, 2), &Rational::new(1, 2)).unwrap(),
            pt(1, 1)
        );
        assert_eq!(
            point_toward(&pt(1, 5), &pt(-3, 2), &Rational::one()).unwrap(),
            pt(-3, 2)
        );
        assert_eq!(
            point_toward(&pt(1, 1), &pt(1, 1), &Rational::one()),
            Err(GeometryError::Degenerate)
        );
        assert!(matches!(
            point_toward(&pt(0, 0), &pt(1, 1), &Rational::zero()),
            Err(GeometryError::FractionOutOfRange(_))
        ));
    }

    fn arb_point() -> impl Strategy<Value = Point> {
        (-50i64..50, 1i64..8, -50i64..50, 1i64..8)
            .prop_map(|(a, b, c, d)| Point::new(Rational::new(a, b), Rational::new(c, d)))
    }

    proptest! {
        #[test]
        fn midpoint_halves_both_distances(p in arb_point(), q in arb_point()) {
            let m = midpoint(&p, &q);
            prop_assert!(on_segment(&m, &p, &q));
            let quarter = Rational::new(1, 4);
            prop_assert_eq!(distance(&p, &m), distance(&p, &q) * &quarter);
            prop_assert_eq!(distance(&m, &q), distance(&p, &q) * &quarter);
        }

        #[test]
        fn point_toward_stays_on_segment(p in arb_point(), q in arb_point(), n in 1i64..=16) {
            prop_assume!(p != q);
            let f = Rational::new(n, 16);
            let x = point_toward(&p, &q, &f).unwrap();
            prop_assert!(on_segment(&x, &p, &q));
            prop_assert_eq!(distance(&p, &x), distance(&p, &q) * &(&f * &f));
        }
    }
}
