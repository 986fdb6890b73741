//! Registry of cylinder integrands `φ: R^k → R` with integrability metadata.
//!
//! The set is closed on purpose: whether a function may enter a
//! convergence sweep depends on its `L^p` class with respect to the limiting
//! Gaussian, and that is only trustworthy for functions we know.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::affine_model::{Truncation, ValidatedProblem};
use crate::error::{Error, Result};
use crate::numlin::dot;
use crate::projections::{build_projection, kernel_projection_norm_sq};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// `cos⟨t, x⟩`
    CosLinear { t: Vec<f64> },
    /// `sin⟨t, x⟩`
    SinLinear { t: Vec<f64> },
    /// `Π x_i^{α_i}`
    Monomial { alpha: Vec<u32> },
    /// Indicator of the closed ball `‖x − center‖ ≤ radius`.
    IndicatorBall { center: Vec<f64>, radius: f64 },
    /// `inner` clamped to `[−cap, cap]`.
    BoundedCutoff { inner: Box<TestFunction>, cap: f64 },
    /// `e^{x²/2} / (1 + x²)` on `R`.
    CounterexampleG,
}

/// Integrability with respect to the limiting Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpClass {
    /// In `L^p` for every `p < ∞`.
    AllP,
    /// Only integrable against the centered standard Gaussian.
    L1Only,
}

impl fmt::Display for LpClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpClass::AllP => write!(f, "L^p for all p"),
            LpClass::L1Only => write!(f, "L^1 only"),
        }
    }
}

impl TestFunction {
    /// Number of arguments the function reads, if fixed by its parameters.
    pub fn arity(&self) -> Option<usize> {
        match self {
            TestFunction::CosLinear { t } | TestFunction::SinLinear { t } => Some(t.len()),
            TestFunction::Monomial { alpha } => Some(alpha.len()),
            TestFunction::IndicatorBall { center, .. } => Some(center.len()),
            TestFunction::BoundedCutoff { inner, .. } => inner.arity(),
            TestFunction::CounterexampleG => Some(1),
        }
    }

    pub fn check_arity(&self, k: usize) -> Result<()> {
        match self.arity() {
            Some(a) if a != k => Err(Error::DimensionMismatch(format!(
                "function takes {a} arguments but k = {k}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::CosLinear { t } => dot(t, x).cos(),
            TestFunction::SinLinear { t } => dot(t, x).sin(),
            TestFunction::Monomial { alpha } => alpha
                .iter()
                .zip(x)
                .map(|(&a, &xi)| xi.powi(a as i32))
                .product(),
            TestFunction::IndicatorBall { center, radius } => {
                let d2: f64 = center.iter().zip(x).map(|(c, xi)| (xi - c).powi(2)).sum();
                if d2 <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::BoundedCutoff { inner, cap } => inner.eval(x).clamp(-cap, *cap),
            TestFunction::CounterexampleG => counterexample_g(x[0]),
        }
    }

    /// Uniform bound `sup |φ|`, when finite.
    pub fn bound(&self) -> Option<f64> {
        match self {
            TestFunction::CosLinear { .. }
            | TestFunction::SinLinear { .. }
            | TestFunction::IndicatorBall { .. } => Some(1.0),
            TestFunction::BoundedCutoff { inner, cap } => {
                Some(inner.bound().map_or(*cap, |b| b.min(*cap)))
            }
            TestFunction::Monomial { alpha } if alpha.iter().all(|&a| a == 0) => Some(1.0),
            TestFunction::Monomial { .. } | TestFunction::CounterexampleG => None,
        }
    }

    pub fn bounded(&self) -> bool {
        self.bound().is_some()
    }

    pub fn lp_class(&self) -> LpClass {
        match self {
            TestFunction::CounterexampleG => LpClass::L1Only,
            _ => LpClass::AllP,
        }
    }

    /// Whether the main limit theorem applies (bounded, or `L^p` for
    /// some `p > 1` against the limiting Gaussian).
    pub fn admissible_for_limit(&self) -> bool {
        self.bounded() || self.lp_class() == LpClass::AllP
    }

    /// Whether tensor Gauss–Hermite quadrature is meaningful, i.e. the
    /// function grows slower than any Gaussian.
    pub fn gauss_hermite_ok(&self) -> bool {
        !matches!(self, TestFunction::CounterexampleG)
    }

    pub fn has_closed_form_limit(&self) -> bool {
        match self {
            TestFunction::CosLinear { .. } | TestFunction::SinLinear { .. } => true,
            TestFunction::Monomial { alpha } => alpha.iter().sum::<u32>() <= 2,
            _ => false,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TestFunction::CosLinear { t } => format!("cos(<{t:?}, x>)"),
            TestFunction::SinLinear { t } => format!("sin(<{t:?}, x>)"),
            TestFunction::Monomial { alpha } => format!("x^{alpha:?}"),
            TestFunction::IndicatorBall { center, radius } => {
                format!("1{{|x - {center:?}| <= {radius}}}")
            }
            TestFunction::BoundedCutoff { inner, cap } => {
                format!("clamp({}, {cap})", inner.describe())
            }
            TestFunction::CounterexampleG => "exp(x^2/2)/(1+x^2)".into(),
        }
    }
}

/// `e^{x²/2}/(1+x²)`, evaluated as `exp(x²/2 − ln(1+x²))`.
pub fn counterexample_g(x: f64) -> f64 {
    let x2 = x * x;
    (0.5 * x2 - x2.ln_1p()).exp()
}

/// `∫ φ dμ_∞` in closed form, where `μ_∞` is the Gaussian on `R^k` with
/// mean `z⁰_{(k)}` and covariance `G_∞`.
pub fn known_limit(func: &TestFunction, validated: &ValidatedProblem) -> Result<Option<f64>> {
    let k = validated.k();
    func.check_arity(k)?;
    if !func.has_closed_form_limit() {
        return Ok(None);
    }
    let pd = build_projection(validated, Truncation::Infinite)?;
    let g = pd.gram();
    let mean = &validated.z0()[..k];
    let value = match func {
        TestFunction::CosLinear { t } | TestFunction::SinLinear { t } => {
            let gt = g.mul_vec(t);
            let damp = (-0.5 * dot(&gt, t)).exp();
            let phase = dot(t, mean);
            if matches!(func, TestFunction::CosLinear { .. }) {
                damp * phase.cos()
            } else {
                damp * phase.sin()
            }
        }
        TestFunction::Monomial { alpha } => {
            let idx: Vec<usize> = alpha
                .iter()
                .enumerate()
                .flat_map(|(i, &a)| std::iter::repeat_n(i, a as usize))
                .collect();
            match idx.as_slice() {
                [] => 1.0,
                [i] => mean[*i],
                [i, j] => g[(*i, *j)] + mean[*i] * mean[*j],
                _ => unreachable!("degree checked above"),
            }
        }
        _ => unreachable!("closed form checked above"),
    };
    Ok(Some(value))
}

/// The cosine/sine limit from the characteristic function of the limiting
/// measure on `ℓ²`: `E e^{i⟨t,x⟩} = exp(i⟨t, z⁰⟩ − ‖P₀t‖²/2)`.
pub fn characteristic_limit(func: &TestFunction, validated: &ValidatedProblem) -> Result<Option<f64>> {
    let k = validated.k();
    func.check_arity(k)?;
    let (t, is_cos) = match func {
        TestFunction::CosLinear { t } => (t, true),
        TestFunction::SinLinear { t } => (t, false),
        _ => return Ok(None),
    };
    let damp = (-0.5 * kernel_projection_norm_sq(validated, t)?).exp();
    let phase = dot(t, &validated.z0()[..k]);
    Ok(Some(if is_cos {
        damp * phase.cos()
    } else {
        damp * phase.sin()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine_model::{validate, AffineProblem};
    use crate::numlin::Matrix;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fix_a(c: f64) -> ValidatedProblem {
        validate(AffineProblem::new(Matrix::from_rows(&[vec![0.0, 1.0]]), vec![c], 1).unwrap())
            .unwrap()
    }

    fn fix_b() -> ValidatedProblem {
        validate(AffineProblem::new(Matrix::from_rows(&[vec![3.0, 4.0]]), vec![5.0], 1).unwrap())
            .unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(TestFunction::CosLinear { t: vec![2.0] }.eval(&[0.0]), 1.0);
        assert_eq!(TestFunction::Monomial { alpha: vec![2] }.eval(&[3.0]), 9.0);
        assert_abs_diff_eq!(
            TestFunction::CounterexampleG.eval(&[1.0]),
            0.5f64.exp() / 2.0,
            epsilon = 1e-15
        );
        assert!(TestFunction::CounterexampleG.eval(&[30.0]).is_finite());
    }

    #[test]
    fn cutoff_clamps() {
        let f = TestFunction::BoundedCutoff {
            inner: Box::new(TestFunction::Monomial { alpha: vec![2] }),
            cap: 4.0,
        };
        assert_eq!(f.eval(&[1.5]), 2.25);
        assert_eq!(f.eval(&[-3.0]), 4.0);
        assert_eq!(f.bound(), Some(4.0));
    }

    #[test]
    fn declared_bounds_hold() {
        let fns = [
            TestFunction::CosLinear { t: vec![1.3, -0.2] },
            TestFunction::SinLinear { t: vec![0.7, 2.0] },
            TestFunction::IndicatorBall {
                center: vec![0.5, 0.0],
                radius: 1.0,
            },
            TestFunction::BoundedCutoff {
                inner: Box::new(TestFunction::Monomial { alpha: vec![3, 1] }),
                cap: 2.5,
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in &fns {
            let b = f.bound().unwrap();
            for _ in 0..10_000 {
                let x = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
                assert!(f.eval(&x).abs() <= b);
            }
        }
    }

    #[test]
    fn metadata() {
        let g = TestFunction::CounterexampleG;
        assert_eq!(g.lp_class(), LpClass::L1Only);
        assert!(!g.admissible_for_limit());
        assert!(TestFunction::Monomial { alpha: vec![4] }.admissible_for_limit());
        assert!(!TestFunction::Monomial { alpha: vec![2, 1] }.has_closed_form_limit());
        assert!(TestFunction::Monomial { alpha: vec![1, 1] }.has_closed_form_limit());
    }

    #[test]
    fn known_limits() {
        let b = fix_b();
        let cos = TestFunction::CosLinear { t: vec![1.0] };
        assert_abs_diff_eq!(
            known_limit(&cos, &b).unwrap().unwrap(),
            (-0.32f64).exp() * 0.6f64.cos(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            known_limit(&TestFunction::Monomial { alpha: vec![2] }, &fix_a(0.0))
                .unwrap()
                .unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            known_limit(&TestFunction::Monomial { alpha: vec![1] }, &b)
                .unwrap()
                .unwrap(),
            0.6,
            epsilon = 1e-14
        );
        assert_eq!(
            known_limit(&TestFunction::Monomial { alpha: vec![3] }, &b).unwrap(),
            None
        );
        assert!(known_limit(&TestFunction::CosLinear { t: vec![1.0, 1.0] }, &b).is_err());
    }

    #[test]
    fn characteristic_route_agrees() {
        let b = fix_b();
        for t in [-2.0, -0.3, 0.0, 0.9, 4.0] {
            for f in [
                TestFunction::CosLinear { t: vec![t] },
                TestFunction::SinLinear { t: vec![t] },
            ] {
                let a = known_limit(&f, &b).unwrap().unwrap();
                let c = characteristic_limit(&f, &b).unwrap().unwrap();
                assert_abs_diff_eq!(a, c, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn config_round_trip() {
        let f = TestFunction::BoundedCutoff {
            inner: Box::new(TestFunction::CosLinear { t: vec![1.0] }),
            cap: 0.5,
        };
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<TestFunction>(&s).unwrap(), f);
        assert!(serde_json::from_str::<TestFunction>(r#"{"kind":"cos_linear","t":[1],"x":2}"#).is_err());
        assert_eq!(
            serde_json::from_str::<TestFunction>(r#"{"kind":"counterexample_g"}"#).unwrap(),
            TestFunction::CounterexampleG
        );
    }
}
