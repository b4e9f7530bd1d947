//! Angles that remember when they are exact rational multiples of π.
//!
//! The model's interesting parameter families are all of the form θ = π·p/q
//! (quarter angles, π/3-category angles, the localization family π/(4j−1)).
//! Step-dependent coins and transfer matrices evaluate trigonometry at t·θ for
//! step counts in the thousands; multiplying a rounded θ by t first would
//! accumulate representation error linearly in t. An [`Angle`] therefore keeps
//! the reduced fraction (p, q) alongside its float value and reduces t·p
//! modulo 2q exactly before touching `cos`/`sin`, which also makes quarter-turn
//! zeros exact — the transfer-matrix pole at t·θ = π/2 is then detected by an
//! exact comparison instead of a tolerance race.
//!
//! Angles constructed from a plain float fall back to ordinary t·θ products.

use std::f64::consts::PI;
use thiserror::Error;

/// Errors from angle construction.
#[derive(Debug, Error, PartialEq)]
pub enum AngleError {
    /// Angle value was NaN or infinite.
    #[error("angle must be finite, got {0}")]
    NonFinite(f64),
    /// Rational multiple of π with a zero denominator.
    #[error("zero denominator in rational multiple of pi")]
    ZeroDenominator,
}

/// An angle in radians, canonicalized into (−π, π], optionally carrying an
/// exact representation as π·p/q with gcd(p, q) = 1 and q > 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angle {
    value: f64,
    pi_rational: Option<(i64, i64)>,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Angle {
    /// The zero angle (exactly 0·π).
    pub fn zero() -> Self {
        Angle { value: 0.0, pi_rational: Some((0, 1)) }
    }

    /// Exact rational multiple of π: the angle π·p/q, canonicalized into
    /// (−π, π] by reducing p modulo 2q.
    pub fn pi_frac(p: i64, q: i64) -> Result<Self, AngleError> {
        if q == 0 {
            return Err(AngleError::ZeroDenominator);
        }
        let (mut p, mut q) = if q < 0 { (-p, -q) } else { (p, q) };
        let g = gcd(p, q).max(1);
        p /= g;
        q /= g;
        // Reduce p into (−q, q]: the angle lands in (−π, π].
        let mut r = p.rem_euclid(2 * q);
        if r > q {
            r -= 2 * q;
        }
        Ok(Angle {
            value: PI * r as f64 / q as f64,
            pi_rational: Some((r, q)),
        })
    }

    /// Angle from a plain radian value, canonicalized into (−π, π]. No exact
    /// π-rational structure is assumed.
    pub fn from_radians(x: f64) -> Result<Self, AngleError> {
        if !x.is_finite() {
            return Err(AngleError::NonFinite(x));
        }
        let mut r = x.rem_euclid(2.0 * PI);
        if r > PI {
            r -= 2.0 * PI;
        }
        Ok(Angle { value: r, pi_rational: None })
    }

    /// Canonical radian value in (−π, π].
    pub fn radians(&self) -> f64 {
        self.value
    }

    /// The exact (p, q) with angle = π·p/q, when known.
    pub fn pi_rational(&self) -> Option<(i64, i64)> {
        self.pi_rational
    }

    /// True when the angle is exactly zero.
    pub fn is_zero(&self) -> bool {
        match self.pi_rational {
            Some((p, _)) => p == 0,
            None => self.value == 0.0,
        }
    }

    /// (cos tθ, sin tθ) for a nonnegative integer scale t.
    ///
    /// For exact π-rationals, t·p is reduced modulo 2q in integer arithmetic
    /// first, so the result is bit-stable in t and quarter-turn values come
    /// out exactly (cos = 0 at odd multiples of π/2, sin = 0 at multiples of
    /// π). Plain angles multiply in floating point.
    pub fn cos_sin_scaled(&self, t: u64) -> (f64, f64) {
        match self.pi_rational {
            Some((p, q)) => {
                let two_q = 2 * q as i128;
                let mut r = ((t as i128) * (p as i128)).rem_euclid(two_q);
                // Fold into (−q, q] so the float argument stays in (−π, π].
                if r > q as i128 {
                    r -= two_q;
                }
                let r = r as i64;
                if r == 0 {
                    return (1.0, 0.0);
                }
                if r == q {
                    return (-1.0, 0.0);
                }
                if 2 * r == q {
                    return (0.0, 1.0);
                }
                if 2 * r == -q {
                    return (0.0, -1.0);
                }
                let a = PI * r as f64 / q as f64;
                (a.cos(), a.sin())
            }
            None => {
                let a = t as f64 * self.value;
                (a.cos(), a.sin())
            }
        }
    }

    /// (cos θ, sin θ) of the angle itself.
    pub fn cos_sin(&self) -> (f64, f64) {
        self.cos_sin_scaled(1)
    }

    /// cos θ.
    pub fn cos(&self) -> f64 {
        self.cos_sin().0
    }

    /// sin θ.
    pub fn sin(&self) -> f64 {
        self.cos_sin().1
    }
}

impl std::fmt::Display for Angle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.pi_rational {
            Some((0, _)) => write!(f, "0"),
            Some((p, 1)) => write!(f, "{p}*pi"),
            Some((1, q)) => write!(f, "pi/{q}"),
            Some((p, q)) => write!(f, "{p}*pi/{q}"),
            None => write!(f, "{}", self.value),
        }
    }
}
