//! Utility functions over total reward (wealth) and their growth classes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::PROB_TOL;

/// Largest `|w ln(gamma)|` evaluated directly; beyond it exponential
/// evaluation reports a range error.
pub const EXP_RANGE_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailMode {
    Constant,
    Linear,
}

/// User-declared exponential envelope:
/// `U(w) <= C gamma_plus^w + D` for `w >= 0` and
/// `U(w) >= -C gamma_minus^w - D` for `w <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpBounds {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum UtilityForm {
    Linear,
    /// `U(w) = iota * gamma^w` with `iota = sign(ln gamma)`.
    Exponential { gamma: f64 },
    /// Linear interpolation between `points`, extended by the tail modes.
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
        left_tail: TailMode,
        right_tail: TailMode,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GrowthClass {
    Bounded { lower: f64, upper: f64 },
    /// `U(w) <= c w + d` for `w >= 0` and `U(w) >= -c |w| - d` for `w <= 0`.
    LinearlyBounded { c: f64, d: f64 },
    Exponential { gamma: f64 },
    ExponentiallyBounded(ExpBounds),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub form: UtilityForm,
    pub growth: GrowthClass,
    pub exp_bounds: Option<ExpBounds>,
}

/// Grid on which declared exponential envelopes are verified.
const BOUND_GRID: std::ops::RangeInclusive<i32> = -64..=64;

impl UtilitySpec {
    pub fn linear() -> Self {
        UtilitySpec {
            form: UtilityForm::Linear,
            growth: GrowthClass::LinearlyBounded { c: 1.0, d: 1.0 },
            exp_bounds: None,
        }
    }

    pub fn exponential(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0 && gamma != 1.0) {
            return Err(Error::semantic(
                "gamma",
                format!("gamma must be positive and different from 1, got {gamma}"),
            ));
        }
        Ok(UtilitySpec {
            form: UtilityForm::Exponential { gamma },
            growth: GrowthClass::Exponential { gamma },
            exp_bounds: None,
        })
    }

    /// Piecewise-linear utility through `points` (strictly increasing wealth,
    /// non-decreasing utility). A linear tail extends the adjacent segment and
    /// needs at least two points.
    pub fn piecewise(
        points: Vec<(f64, f64)>,
        left_tail: TailMode,
        right_tail: TailMode,
        exp_bounds: Option<ExpBounds>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::semantic("points", "at least one point is required"));
        }
        for (i, &(w, u)) in points.iter().enumerate() {
            if !w.is_finite() || !u.is_finite() {
                return Err(Error::semantic(format!("points[{i}]"), "values must be finite"));
            }
        }
        for (i, pair) in points.windows(2).enumerate() {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::semantic(
                    format!("points[{}]", i + 1),
                    "wealth values must be strictly increasing",
                ));
            }
            if pair[1].1 < pair[0].1 {
                return Err(Error::semantic(
                    format!("points[{}]", i + 1),
                    "utility must be non-decreasing",
                ));
            }
        }
        if points.len() < 2 && (left_tail == TailMode::Linear || right_tail == TailMode::Linear) {
            return Err(Error::semantic(
                "points",
                "a linear tail needs at least two points",
            ));
        }
        let form = UtilityForm::PiecewiseLinear {
            points,
            left_tail,
            right_tail,
        };
        let mut spec = UtilitySpec {
            growth: GrowthClass::Bounded {
                lower: 0.0,
                upper: 0.0,
            },
            form,
            exp_bounds,
        };
        spec.growth = spec.derive_growth()?;
        Ok(spec)
    }

    fn derive_growth(&self) -> Result<GrowthClass> {
        let UtilityForm::PiecewiseLinear {
            points,
            left_tail,
            right_tail,
        } = &self.form
        else {
            unreachable!("growth of closed forms is fixed at construction")
        };
        if let Some(b) = self.exp_bounds {
            self.verify_exp_bounds(&b)?;
            return Ok(GrowthClass::ExponentiallyBounded(b));
        }
        if *left_tail == TailMode::Constant && *right_tail == TailMode::Constant {
            return Ok(GrowthClass::Bounded {
                lower: points[0].1,
                upper: points[points.len() - 1].1,
            });
        }
        let max_slope = points
            .windows(2)
            .map(|p| (p[1].1 - p[0].1) / (p[1].0 - p[0].0))
            .fold(0.0f64, f64::max);
        let c = if max_slope > 0.0 { max_slope } else { 1.0 };
        let u0 = self.eval_unchecked(0.0).abs();
        let d = if u0 > 0.0 { u0 } else { 1.0 };
        Ok(GrowthClass::LinearlyBounded { c, d })
    }

    fn verify_exp_bounds(&self, b: &ExpBounds) -> Result<()> {
        let params_ok = b.c > 0.0
            && b.d > 0.0
            && b.gamma_plus > 1.0
            && b.gamma_minus > 0.0
            && b.gamma_minus < 1.0
            && [b.c, b.d, b.gamma_plus].iter().all(|x| x.is_finite());
        if !params_ok {
            return Err(Error::semantic(
                "exp_bounds",
                "need C > 0, D > 0, gamma_plus > 1 and 0 < gamma_minus < 1",
            ));
        }
        for w in BOUND_GRID {
            let w = w as f64;
            let u = self.eval_unchecked(w);
            if w >= 0.0 && u > b.c * b.gamma_plus.powf(w) + b.d {
                return Err(Error::semantic(
                    "exp_bounds",
                    format!("upper envelope fails at w = {w}"),
                ));
            }
            if w <= 0.0 && u < -b.c * b.gamma_minus.powf(w) - b.d {
                return Err(Error::semantic(
                    "exp_bounds",
                    format!("lower envelope fails at w = {w}"),
                ));
            }
        }
        Ok(())
    }

    /// `iota` for exponential utilities, `+1` otherwise.
    pub fn iota(&self) -> f64 {
        match self.form {
            UtilityForm::Exponential { gamma } => iota(gamma),
            _ => 1.0,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self.form {
            UtilityForm::Exponential { gamma } => Some(gamma),
            _ => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.form, UtilityForm::Linear)
    }

    /// Finite utility of wealth `w`.
    pub fn evaluate(&self, w: f64) -> Result<f64> {
        if !w.is_finite() {
            return Err(Error::Range(format!("wealth {w} is not finite")));
        }
        if let UtilityForm::Exponential { gamma } = self.form {
            let exponent = w * gamma.ln();
            if exponent.abs() > EXP_RANGE_LIMIT {
                return Err(Error::Range(format!(
                    "{gamma}^{w} exceeds the representable range"
                )));
            }
            return Ok(iota(gamma) * exponent.exp());
        }
        Ok(self.eval_unchecked(w))
    }

    fn eval_unchecked(&self, w: f64) -> f64 {
        match &self.form {
            UtilityForm::Linear => w,
            UtilityForm::Exponential { gamma } => iota(*gamma) * gamma.powf(w),
            UtilityForm::PiecewiseLinear {
                points,
                left_tail,
                right_tail,
            } => piecewise_eval(points, *left_tail, *right_tail, w),
        }
    }

    /// Expected utility `sum p U(w)` of a finite lottery.
    pub fn lottery_eu(&self, outcomes: &[(f64, f64)]) -> Result<f64> {
        let total: f64 = outcomes.iter().map(|&(p, _)| p).sum();
        if outcomes.iter().any(|&(p, _)| !(p > 0.0)) || (total - 1.0).abs() > PROB_TOL {
            return Err(Error::ProbabilityMass { total });
        }
        outcomes
            .iter()
            .map(|&(p, w)| self.evaluate(w).map(|u| p * u))
            .sum()
    }

    /// Short human-readable description used in reports.
    pub fn describe(&self) -> String {
        match &self.form {
            UtilityForm::Linear => "linear".into(),
            UtilityForm::Exponential { gamma } => format!("exponential(gamma={gamma})"),
            UtilityForm::PiecewiseLinear { points, .. } => {
                let class = match self.growth {
                    GrowthClass::Bounded { .. } => "bounded",
                    GrowthClass::LinearlyBounded { .. } => "linearly-bounded",
                    GrowthClass::ExponentiallyBounded(_) => "exponentially-bounded",
                    GrowthClass::Exponential { .. } => "exponential",
                };
                format!("piecewise({} points, {class})", points.len())
            }
        }
    }
}

/// `sign(ln gamma)`.
pub fn iota(gamma: f64) -> f64 {
    if gamma > 1.0 {
        1.0
    } else {
        -1.0
    }
}

fn piecewise_eval(points: &[(f64, f64)], left: TailMode, right: TailMode, w: f64) -> f64 {
    let n = points.len();
    let (w0, u0) = points[0];
    let (wn, un) = points[n - 1];
    let slope = |i: usize| (points[i + 1].1 - points[i].1) / (points[i + 1].0 - points[i].0);
    if w <= w0 {
        return match left {
            TailMode::Constant => u0,
            TailMode::Linear => u0 + slope(0) * (w - w0),
        };
    }
    if w >= wn {
        return match right {
            TailMode::Constant => un,
            TailMode::Linear => un + slope(n - 2) * (w - wn),
        };
    }
    let i = points.partition_point(|p| p.0 <= w) - 1;
    let (wa, ua) = points[i];
    ua + slope(i) * (w - wa)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum UtilityDoc {
    Linear,
    Exponential {
        gamma: f64,
    },
    Piecewise {
        points: Vec<(f64, f64)>,
        left_tail: TailMode,
        right_tail: TailMode,
        #[serde(default)]
        exp_bounds: Option<ExpBounds>,
    },
}

/// Parses a utility document (`{"type": "linear"}`, `{"type": "exponential",
/// "gamma": g}` or `{"type": "piecewise", ...}`).
pub fn parse_utility(text: &str) -> Result<UtilitySpec> {
    let doc: UtilityDoc = serde_json::from_str(text).map_err(|e| Error::from_json(&e))?;
    match doc {
        UtilityDoc::Linear => Ok(UtilitySpec::linear()),
        UtilityDoc::Exponential { gamma } => UtilitySpec::exponential(gamma),
        UtilityDoc::Piecewise {
            points,
            left_tail,
            right_tail,
            exp_bounds,
        } => UtilitySpec::piecewise(points, left_tail, right_tail, exp_bounds),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn averse() -> UtilitySpec {
        UtilitySpec::exponential(0.9999997).unwrap()
    }

    #[test]
    fn risk_averse_table_utilities() {
        let u = averse();
        assert!((u.evaluate(1e7).unwrap() - -0.050).abs() < 1e-3);
        assert_eq!(u.evaluate(0.0).unwrap(), -1.0);
        assert!((u.evaluate(4.5e6).unwrap() - -0.260).abs() < 1e-3);
    }

    #[test]
    fn lotteries() {
        let u = averse();
        let choice1 = u.lottery_eu(&[(0.5, 1e7), (0.5, 0.0)]).unwrap();
        let choice2 = u.lottery_eu(&[(1.0, 4.5e6)]).unwrap();
        assert!((choice1 - -0.525).abs() < 1e-3);
        assert!((choice2 - -0.260).abs() < 1e-3);
        assert!(choice2 > choice1);
        assert_eq!(u.lottery_eu(&[(1.0, 3.0)]).unwrap(), u.evaluate(3.0).unwrap());
    }

    #[test]
    fn lottery_mass_error() {
        let err = averse().lottery_eu(&[(0.5, 1.0), (0.4, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::ProbabilityMass { .. }));
    }

    #[test]
    fn overflow_guard() {
        let u = UtilitySpec::exponential(2.0).unwrap();
        assert!(u.evaluate(1000.0).is_ok());
        assert!(matches!(u.evaluate(1100.0), Err(Error::Range(_))));
    }

    #[test]
    fn gamma_one_rejected() {
        assert!(UtilitySpec::exponential(1.0).is_err());
        assert!(UtilitySpec::exponential(-2.0).is_err());
    }

    #[test]
    fn piecewise_growth_classes() {
        let pts = vec![(-1.0, -1.0), (0.0, 0.0), (2.0, 1.0)];
        let bounded =
            UtilitySpec::piecewise(pts.clone(), TailMode::Constant, TailMode::Constant, None).unwrap();
        assert_eq!(
            bounded.growth,
            GrowthClass::Bounded {
                lower: -1.0,
                upper: 1.0
            }
        );
        assert_eq!(bounded.evaluate(-50.0).unwrap(), -1.0);
        assert_eq!(bounded.evaluate(1.0).unwrap(), 0.5);

        let lin = UtilitySpec::piecewise(pts, TailMode::Linear, TailMode::Constant, None).unwrap();
        let GrowthClass::LinearlyBounded { c, d } = lin.growth else {
            panic!("expected linear bound")
        };
        for w in -64..=64 {
            let w = w as f64;
            let u = lin.evaluate(w).unwrap();
            if w >= 0.0 {
                assert!(u <= c * w + d);
            }
            if w <= 0.0 {
                assert!(u >= -c * w.abs() - d);
            }
        }
        assert_eq!(lin.evaluate(-3.0).unwrap(), -3.0);
    }

    #[test]
    fn exp_bounds_verified_on_grid() {
        let pts = vec![(-1.0, -1.0), (1.0, 1.0)];
        let good = ExpBounds {
            c: 1.0,
            d: 2.0,
            gamma_plus: 2.0,
            gamma_minus: 0.5,
        };
        let u = UtilitySpec::piecewise(pts.clone(), TailMode::Linear, TailMode::Linear, Some(good))
            .unwrap();
        assert!(matches!(u.growth, GrowthClass::ExponentiallyBounded(_)));

        let bad = ExpBounds {
            gamma_plus: 1.0001,
            d: 1.0,
            ..good
        };
        assert!(UtilitySpec::piecewise(pts, TailMode::Linear, TailMode::Linear, Some(bad)).is_err());
    }

    #[test]
    fn rejects_decreasing_points() {
        assert!(UtilitySpec::piecewise(
            vec![(0.0, 1.0), (1.0, 0.0)],
            TailMode::Constant,
            TailMode::Constant,
            None
        )
        .is_err());
    }

    #[test]
    fn parses_documents() {
        assert!(parse_utility(r#"{"type":"linear"}"#).unwrap().is_linear());
        assert_eq!(
            parse_utility(r#"{"type":"exponential","gamma":0.5}"#).unwrap().gamma(),
            Some(0.5)
        );
        let pw = parse_utility(
            r#"{"type":"piecewise","points":[[-2,-1],[2,1]],"left_tail":"constant","right_tail":"constant"}"#,
        )
        .unwrap();
        assert!(matches!(pw.growth, GrowthClass::Bounded { .. }));
        let bounded = parse_utility(
            r#"{"type":"piecewise","points":[[-1,-1],[1,1]],"left_tail":"linear","right_tail":"linear",
                "exp_bounds":{"C":1,"D":2,"gamma_plus":2,"gamma_minus":0.5}}"#,
        )
        .unwrap();
        assert!(bounded.exp_bounds.is_some());
        assert!(parse_utility(r#"{"type":"cubic"}"#).is_err());
    }

    fn any_utility() -> impl Strategy<Value = UtilitySpec> {
        prop_oneof![
            Just(UtilitySpec::linear()),
            (0.05f64..0.95).prop_map(|g| UtilitySpec::exponential(g).unwrap()),
            (1.05f64..3.0).prop_map(|g| UtilitySpec::exponential(g).unwrap()),
            (
                prop::collection::vec((0.1f64..5.0, 0.0f64..3.0), 2..6),
                any::<bool>(),
                any::<bool>()
            )
                .prop_map(|(steps, l, r)| {
                    let mut w = -10.0;
                    let mut u = -3.0;
                    let pts = steps
                        .into_iter()
                        .map(|(dw, du)| {
                            w += dw;
                            u += du;
                            (w, u)
                        })
                        .collect();
                    let mode = |b| if b { TailMode::Linear } else { TailMode::Constant };
                    UtilitySpec::piecewise(pts, mode(l), mode(r), None).unwrap()
                }),
        ]
    }

    proptest! {
        #[test]
        fn utility_is_monotone(u in any_utility(), a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(u.evaluate(lo).unwrap() <= u.evaluate(hi).unwrap());
        }

        #[test]
        fn exponential_sign_matches_iota(g in prop_oneof![0.05f64..0.95, 1.05f64..3.0], w in -50.0f64..50.0) {
            let u = UtilitySpec::exponential(g).unwrap();
            let v = u.evaluate(w).unwrap();
            prop_assert!(v != 0.0);
            prop_assert_eq!(v.signum(), u.iota());
        }

        #[test]
        fn two_point_lottery_between_endpoints(u in any_utility(), p in 0.01f64..0.99, a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let eu = u.lottery_eu(&[(p, a), (1.0 - p, b)]).unwrap();
            let (ua, ub) = (u.evaluate(a).unwrap(), u.evaluate(b).unwrap());
            let tol = 1e-12 * (1.0 + ua.abs().max(ub.abs()));
            prop_assert!(eu >= ua.min(ub) - tol && eu <= ua.max(ub) + tol);
        }
    }
}
