//! Convex energy density whose ratio `Ψ(E)/E²` alternates between 3 and 2
//! on two interleaved geometric families of intervals, so `Ψ(E)/E²` has no
//! limit as `E → ∞`.
//!
//! `Ψ = Φ + E²` where `Φ = 2E²` on `[λ''_n, Lλ''_n]`, `Φ = E²` on
//! `[λ'_n, Lλ'_n]`, and the gaps are bridged by straight lines tangent to
//! `2E²`. The end points satisfy `λ'_n = c₁Lλ''_n`, `λ''_{n+1} = c₂Lλ'_n`
//! with `c₁ = 2+√2`, `c₂ = 1+√2/2`.
//!
//! The bridge ending at `λ'_n` and the bridge starting at `Lλ'_n` meet `E²`
//! with a slope jump, so the exact construction is convex and continuous but
//! only piecewise C¹. [`OscillatingSpec::with_kink_rounding`] replaces the
//! derivative jump by a linear ramp whose integral equals the jump-side
//! integral, which makes `Ψ` C¹ while leaving it untouched outside the ramp.

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

use crate::{Error, Result};

pub const C1: f64 = 2.0 + SQRT_2;
pub const C2: f64 = 1.0 + SQRT_2 / 2.0;
/// `c₁·c₂ = 3 + 2√2`.
pub const C_SQUARED: f64 = 3.0 + 2.0 * SQRT_2;

/// One piece of `Ψ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "branch", rename_all = "snake_case")]
pub enum Branch {
    /// `Ψ = 2E²` (`Φ = E²`).
    TwoESq,
    /// `Ψ = 3E²` (`Φ = 2E²`).
    ThreeESq,
    /// `Ψ = slope·E + intercept + E²`.
    TangentLinePlusEsq { slope: f64, intercept: f64 },
    /// Quadratic ramp `Ψ = value + slope·t + curvature·t²/2`, `t = E − start`.
    Rounded {
        start: f64,
        value: f64,
        slope: f64,
        curvature: f64,
    },
}

impl Branch {
    fn value(&self, e: f64) -> f64 {
        match *self {
            Branch::TwoESq => 2.0 * e * e,
            Branch::ThreeESq => 3.0 * e * e,
            Branch::TangentLinePlusEsq { slope, intercept } => slope * e + intercept + e * e,
            Branch::Rounded {
                start,
                value,
                slope,
                curvature,
            } => {
                let t = e - start;
                value + slope * t + 0.5 * curvature * t * t
            }
        }
    }

    fn slope(&self, e: f64) -> f64 {
        match *self {
            Branch::TwoESq => 4.0 * e,
            Branch::ThreeESq => 6.0 * e,
            Branch::TangentLinePlusEsq { slope, .. } => slope + 2.0 * e,
            Branch::Rounded {
                start,
                slope,
                curvature,
                ..
            } => slope + curvature * (e - start),
        }
    }

    fn curvature(&self) -> f64 {
        match *self {
            Branch::TwoESq => 4.0,
            Branch::ThreeESq => 6.0,
            Branch::TangentLinePlusEsq { .. } => 2.0,
            Branch::Rounded { curvature, .. } => curvature,
        }
    }
}

/// A closed interval `[lo, hi]` of the `E` axis with its branch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    #[serde(flatten)]
    pub branch: Branch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatingSpec {
    pub window_ratio: f64,
    pub first_scale: f64,
    pub c1: f64,
    pub c2: f64,
    /// `λ'_1 ..= λ'_{n_max}`.
    pub weak_scales: Vec<f64>,
    /// `λ''_1 ..= λ''_{n_max+1}`.
    pub strong_scales: Vec<f64>,
    /// Relative half-width of the kink ramps; zero for the exact construction.
    pub kink_rounding: f64,
    pub breakpoints: Vec<Interval>,
}

/// Builds `Ψ` with `n_max` full periods. Beyond `λ''_{n_max+1}` the density
/// stays `3E²`; below `λ''_1` it is extended as `3E²` down to zero.
pub fn build_oscillating_spec(window_ratio: f64, first_scale: f64, n_max: usize) -> Result<OscillatingSpec> {
    if !(window_ratio > 10.0) || !window_ratio.is_finite() {
        return Err(Error::Parameter(format!("L must exceed 10, got {window_ratio}")));
    }
    if !(first_scale > 0.0) || !first_scale.is_finite() {
        return Err(Error::Parameter(format!(
            "first_scale must be positive, got {first_scale}"
        )));
    }
    if n_max == 0 {
        return Err(Error::Parameter("n_max must be at least 1".into()));
    }

    let mut weak_scales = Vec::with_capacity(n_max);
    let mut strong_scales = vec![first_scale];
    let mut pieces = vec![Interval {
        lo: 0.0,
        hi: first_scale,
        branch: Branch::ThreeESq,
    }];
    let representable = |v: f64| v.is_finite() && (3.0 * v * v).is_finite();

    for n in 1..=n_max {
        let limit_strong = strong_scales[n - 1];
        let a = window_ratio * limit_strong;
        let limit_weak = C1 * a;
        let m = window_ratio * limit_weak;
        let b = C2 * m;
        if ![a, limit_weak, m, b, window_ratio * b].into_iter().all(representable) {
            return Err(Error::Range {
                message: format!("lambda sequence overflows at n = {n}"),
                achieved: n - 1,
            });
        }
        pieces.push(Interval {
            lo: limit_strong,
            hi: a,
            branch: Branch::ThreeESq,
        });
        // tangent to 2E² at a, meets E² at λ'
        pieces.push(Interval {
            lo: a,
            hi: limit_weak,
            branch: Branch::TangentLinePlusEsq {
                slope: 4.0 * a,
                intercept: -2.0 * a * a,
            },
        });
        pieces.push(Interval {
            lo: limit_weak,
            hi: m,
            branch: Branch::TwoESq,
        });
        // through (m, m²), tangent to 2E² at b
        pieces.push(Interval {
            lo: m,
            hi: b,
            branch: Branch::TangentLinePlusEsq {
                slope: 4.0 * b,
                intercept: -2.0 * b * b,
            },
        });
        weak_scales.push(limit_weak);
        strong_scales.push(b);
    }
    pieces.push(Interval {
        lo: *strong_scales.last().unwrap(),
        hi: f64::INFINITY,
        branch: Branch::ThreeESq,
    });

    Ok(OscillatingSpec {
        window_ratio,
        first_scale,
        c1: C1,
        c2: C2,
        weak_scales,
        strong_scales,
        kink_rounding: 0.0,
        breakpoints: pieces,
    })
}

impl OscillatingSpec {
    pub fn n_max(&self) -> usize {
        self.weak_scales.len()
    }

    fn piece(&self, e: f64) -> &Interval {
        let idx = self.breakpoints.partition_point(|iv| iv.lo <= e);
        &self.breakpoints[idx.saturating_sub(1)]
    }

    pub fn value(&self, e: f64) -> f64 {
        self.piece(e).branch.value(e)
    }

    pub fn slope(&self, e: f64) -> f64 {
        self.piece(e).branch.slope(e)
    }

    pub fn curvature(&self, e: f64) -> f64 {
        self.piece(e).branch.curvature()
    }

    /// Upper end of the constructed oscillation range, `Lλ''_{n_max+1}`.
    pub fn range_end(&self) -> f64 {
        self.window_ratio * self.strong_scales.last().copied().unwrap_or(self.first_scale)
    }

    /// Interior points where the exact construction has a derivative jump.
    pub fn kinks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.breakpoints.windows(2) {
            let k = w[0].hi;
            let jump = w[1].branch.slope(k) - w[0].branch.slope(k);
            if jump.abs() > 1e-12 * w[0].branch.slope(k).abs().max(1.0) {
                out.push(k);
            }
        }
        out
    }

    /// Returns a copy whose derivative jumps are replaced by linear ramps of
    /// relative half-width `rel` (left width `rel·k`, right width chosen so
    /// that the ramp integrates to the same value). The result is C¹ and
    /// strictly convex and agrees with the exact `Ψ` outside the ramps.
    pub fn with_kink_rounding(&self, rel: f64) -> Result<Self> {
        if !(rel > 0.0 && rel < 0.05) {
            return Err(Error::Parameter(format!(
                "kink rounding width must lie in (0, 0.05), got {rel}"
            )));
        }
        if self.kink_rounding > 0.0 {
            return Err(Error::Parameter("density is already rounded".into()));
        }
        let mut out: Vec<Interval> = Vec::with_capacity(self.breakpoints.len() * 2);
        let mut carry_lo: Option<f64> = None;
        for (i, piece) in self.breakpoints.iter().enumerate() {
            let mut cur = *piece;
            if let Some(lo) = carry_lo.take() {
                cur.lo = lo;
            }
            let Some(next) = self.breakpoints.get(i + 1) else {
                out.push(cur);
                break;
            };
            let k = piece.hi;
            let (u, w) = (piece.branch.slope(k), next.branch.slope(k));
            let jump = w - u;
            if jump.abs() <= 1e-12 * u.abs().max(1.0) {
                out.push(cur);
                continue;
            }
            let (s1, s2) = (piece.branch.curvature(), next.branch.curvature());
            let dl = rel * k;
            let dr = dl * jump / (jump - (s2 - s1) * dl);
            if dl >= 0.5 * (k - cur.lo) || !(dr > 0.0) || dr >= 0.5 * (next.hi - k) {
                return Err(Error::Parameter(format!(
                    "kink rounding width {rel} too large for the interval at E = {k}"
                )));
            }
            let start = k - dl;
            let end = k + dr;
            let j_start = piece.branch.slope(start);
            let j_end = next.branch.slope(end);
            cur.hi = start;
            out.push(cur);
            out.push(Interval {
                lo: start,
                hi: end,
                branch: Branch::Rounded {
                    start,
                    value: piece.branch.value(start),
                    slope: j_start,
                    curvature: (j_end - j_start) / (dl + dr),
                },
            });
            carry_lo = Some(end);
        }
        Ok(Self {
            kink_rounding: rel,
            breakpoints: out,
            ..self.clone()
        })
    }
}
