//! Local-hidden-variable side: exact local bounds, finite LHV models, and
//! the rearrangement bound chains.
//!
//! The local bound of an algebraic expression is certified by exact rational
//! enumeration over the `2^(m+n)` vertices of the box (the bilinear form
//! attains its extremes there). The form is jointly homogeneous in `(A, x)`
//! and `(B, y)`: scaling a vertex value from unit bounds by `A*B` gives the
//! value at general bounds, so the sign of the maximum never depends on the
//! bounds and validity is decided at `A = B = 1`.

use std::fmt;

use num::{BigRational, Signed, ToPrimitive, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::expr::{rat, BellExpression, BoxPoint, Builtin, ExprError, Form, Rational};

/// Cap on `m + n` for exact vertex enumeration (about 16M evaluations).
pub const MAX_ENUM_VARS: usize = 24;

#[derive(Debug, Error)]
pub enum LhvError {
    #[error("enumeration guard: m + n = {vars} exceeds {max}")]
    EnumerationGuard { vars: usize, max: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("model dimension mismatch: expression is {em}x{en}, model is {mm}x{mn}")]
    ModelMismatch {
        em: usize,
        en: usize,
        mm: usize,
        mn: usize,
    },
    #[error("invalid LHV model: {0}")]
    BadModel(String),
    #[error(
        "rearrangement kind {kind} needs {need} settings per party, point has {got_x}|{got_y}"
    )]
    RearrangeShape {
        kind: &'static str,
        need: usize,
        got_x: usize,
        got_y: usize,
    },
}

/// A vertex of the box: every `x_i` is `0` or `A`, every `y_j` is `0` or `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    pub bits_x: Vec<bool>,
    pub bits_y: Vec<bool>,
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let xs: Vec<&str> = self
            .bits_x
            .iter()
            .map(|&b| if b { "A" } else { "0" })
            .collect();
        let ys: Vec<&str> = self
            .bits_y
            .iter()
            .map(|&b| if b { "B" } else { "0" })
            .collect();
        write!(f, "({}|{})", xs.join(","), ys.join(","))
    }
}

/// Finite local-hidden-variable model: a distribution over `L` hidden states
/// with per-state response probabilities for each setting.
#[derive(Debug, Clone, PartialEq)]
pub struct LhvModel {
    pub weights: Vec<f64>,
    pub px: Vec<Vec<f64>>,
    pub py: Vec<Vec<f64>>,
}

impl LhvModel {
    pub fn new(weights: Vec<f64>, px: Vec<Vec<f64>>, py: Vec<Vec<f64>>) -> Result<Self, LhvError> {
        let l = weights.len();
        if l == 0 {
            return Err(LhvError::BadModel("no hidden states".into()));
        }
        if px.len() != l || py.len() != l {
            return Err(LhvError::BadModel(
                "response tables must have one row per hidden state".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(LhvError::BadModel(format!("weights sum to {total}")));
        }
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !weights.iter().copied().all(in_unit) {
            return Err(LhvError::BadModel("weight outside [0,1]".into()));
        }
        if !px.iter().flatten().copied().all(in_unit) || !py.iter().flatten().copied().all(in_unit)
        {
            return Err(LhvError::BadModel(
                "response probability outside [0,1]".into(),
            ));
        }
        Ok(Self { weights, px, py })
    }

    pub fn hidden_states(&self) -> usize {
        self.weights.len()
    }

    pub fn m(&self) -> usize {
        self.px[0].len()
    }

    pub fn n(&self) -> usize {
        self.py[0].len()
    }

    /// Observable joint probability `P(x_i, y_j)` of the model.
    pub fn joint(&self, i: usize, j: usize) -> f64 {
        self.weights
            .iter()
            .zip(self.px.iter().zip(&self.py))
            .map(|(w, (px, py))| w * px[i] * py[j])
            .sum()
    }
}

/// Exact maximum of an algebraic expression over all box vertices, with one
/// maximizing vertex. Ties resolve to the strategy whose x-bits, read as the
/// low bits of an integer (`x_1` least significant), are smallest, then the
/// smallest such y-bits.
pub fn vertex_max(
    expr: &BellExpression,
    a: &Rational,
    b: &Rational,
) -> Result<(Rational, DeterministicStrategy), LhvError> {
    if expr.form() != Form::Algebraic {
        return Err(ExprError::WrongForm {
            expected: Form::Algebraic,
            got: expr.form(),
        }
        .into());
    }
    let (m, n) = (expr.m(), expr.n());
    if m + n > MAX_ENUM_VARS {
        return Err(LhvError::EnumerationGuard {
            vars: m + n,
            max: MAX_ENUM_VARS,
        });
    }

    // Work on the unit box; the value at bounds (A, B) is A*B times the unit
    // value. For a fixed x-vertex the form is linear in each y_j with
    // coefficient col[j], so the y-side maximum picks y_j = 1 exactly when
    // col[j] > 0 (ties to 0, which is also the lowest-index tie-break).
    let mut col: Vec<Rational> = (0..n)
        .map(|j| expr.marg(crate::expr::Party::Y, j).clone())
        .collect();
    let mut sx = Rational::zero();

    let mut best_val: Option<Rational> = None;
    let mut best_mask: usize = 0;

    let mut prev_gray: usize = 0;
    for idx in 0..(1usize << m) {
        let gray = idx ^ (idx >> 1);
        let delta = gray ^ prev_gray;
        if delta != 0 {
            let bit = delta.trailing_zeros() as usize;
            if gray & delta != 0 {
                // bit turned on
                sx += expr.marg(crate::expr::Party::X, bit);
                for (j, c) in col.iter_mut().enumerate() {
                    *c += expr.joint(bit, j);
                }
            } else {
                sx -= expr.marg(crate::expr::Party::X, bit);
                for (j, c) in col.iter_mut().enumerate() {
                    *c -= expr.joint(bit, j);
                }
            }
        }
        prev_gray = gray;

        let mut val = &sx + expr.const_term();
        for c in &col {
            if c.is_positive() {
                val += c;
            }
        }
        let better = match &best_val {
            None => true,
            Some(bv) => val > *bv || (val == *bv && gray < best_mask),
        };
        if better {
            best_val = Some(val);
            best_mask = gray;
        }
    }

    // Reconstruct the maximizing y-assignment for the winning x-mask.
    let bits_x: Vec<bool> = (0..m).map(|i| best_mask >> i & 1 == 1).collect();
    let bits_y: Vec<bool> = (0..n)
        .map(|j| {
            let mut c = expr.marg(crate::expr::Party::Y, j).clone();
            for (i, &on) in bits_x.iter().enumerate() {
                if on {
                    c += expr.joint(i, j);
                }
            }
            c.is_positive()
        })
        .collect();

    let scaled = best_val.expect("at least one vertex") * a * b;
    Ok((scaled, DeterministicStrategy { bits_x, bits_y }))
}

/// True when the expression is a valid algebraic CH-type inequality, i.e.
/// non-positive on the whole box. Decided at unit bounds; see module docs.
pub fn is_valid_bellch(expr: &BellExpression) -> Result<bool, LhvError> {
    let one = rat(1);
    let (max, _) = vertex_max(expr, &one, &one)?;
    Ok(!max.is_positive())
}

/// Value of a probability-form expression in a finite LHV model, with joint
/// probabilities factorizing per hidden state.
pub fn lhv_value(expr: &BellExpression, model: &LhvModel) -> Result<f64, LhvError> {
    if expr.form() != Form::Probability {
        return Err(ExprError::WrongForm {
            expected: Form::Probability,
            got: expr.form(),
        }
        .into());
    }
    let (m, n) = (expr.m(), expr.n());
    if model.m() != m || model.n() != n {
        return Err(LhvError::ModelMismatch {
            em: m,
            en: n,
            mm: model.m(),
            mn: model.n(),
        });
    }
    let konst = expr.const_term().to_f64().unwrap();
    let mut acc = 0.0;
    for (w, (px, py)) in model.weights.iter().zip(model.px.iter().zip(&model.py)) {
        let mut inner = konst;
        for i in 0..m {
            inner += expr.marg(crate::expr::Party::X, i).to_f64().unwrap() * px[i];
            for j in 0..n {
                inner += expr.joint(i, j).to_f64().unwrap() * px[i] * py[j];
            }
        }
        for j in 0..n {
            inner += expr.marg(crate::expr::Party::Y, j).to_f64().unwrap() * py[j];
        }
        acc += w * inner;
    }
    Ok(acc)
}

/// Which rearrangement chain to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RearrangeKind {
    /// 2 settings per party.
    K2,
    /// 3 settings per party.
    K3,
}

/// Heaviside step with the half convention at zero: `x*step(x) = (x+|x|)/2`.
pub fn step(x: f64) -> f64 {
    match x.partial_cmp(&0.0) {
        Some(std::cmp::Ordering::Greater) => 1.0,
        Some(std::cmp::Ordering::Equal) => 0.5,
        _ => 0.0,
    }
}

fn max_min(vals: &[f64]) -> (f64, f64) {
    let mut mx = vals[0];
    let mut mn = vals[0];
    for &v in &vals[1..] {
        if v > mx {
            mx = v;
        }
        if v < mn {
            mn = v;
        }
    }
    (mx, mn)
}

/// Evaluate a rearrangement chain `(I, I_0)` at a box point.
///
/// `I` is the corresponding built-in inequality value; `I_0` is the
/// reversed-sum-minus-unordered-sum intermediate built from the max/min
/// (and, for three settings, middle) elements of each variable set. The
/// chain `I <= I_0 <= 0` holds on the whole box.
pub fn rearrangement_bounds(kind: RearrangeKind, point: &BoxPoint) -> Result<(f64, f64), LhvError> {
    let (need, name) = match kind {
        RearrangeKind::K2 => (2usize, "K2"),
        RearrangeKind::K3 => (3usize, "K3"),
    };
    if point.xs().len() != need || point.ys().len() != need {
        return Err(LhvError::RearrangeShape {
            kind: name,
            need,
            got_x: point.xs().len(),
            got_y: point.ys().len(),
        });
    }
    match kind {
        RearrangeKind::K2 => {
            let i_val = BellExpression::builtin(Builtin::I2222).evaluate(point)?;
            let (xp, xm) = max_min(point.xs());
            let (yp, ym) = max_min(point.ys());
            let i0 = -(point.xs()[0] * point.ys()[0] + point.xs()[1] * point.ys()[1])
                + xp * ym
                + xm * yp;
            Ok((i_val, i0))
        }
        RearrangeKind::K3 => {
            let i_val = BellExpression::builtin(Builtin::I3322Sym).evaluate(point)?;
            let (xp, xm) = max_min(point.xs());
            let (yp, ym) = max_min(point.ys());
            let xr = point.xs().iter().sum::<f64>() - xp - xm;
            let yr = point.ys().iter().sum::<f64>() - yp - ym;
            let unordered: f64 = point.xs().iter().zip(point.ys()).map(|(x, y)| x * y).sum();
            let i0 = -unordered + xp * ym + xm * yp + xr * yr;
            Ok((i_val, i0))
        }
    }
}

/// Closed step-function form of the two-setting intermediate:
/// `-[(x1-x2)(y1-y2) + |(x1-x2)(y1-y2)|] / 2`. Kept as an independent route
/// against the max/min extraction in [`rearrangement_bounds`].
pub fn i2_zero_theta_form(point: &BoxPoint) -> Result<f64, LhvError> {
    if point.xs().len() != 2 || point.ys().len() != 2 {
        return Err(LhvError::RearrangeShape {
            kind: "K2",
            need: 2,
            got_x: point.xs().len(),
            got_y: point.ys().len(),
        });
    }
    let u = (point.xs()[0] - point.xs()[1]) * (point.ys()[0] - point.ys()[1]);
    Ok(-(u + u.abs()) / 2.0)
}

/// Draw a finite LHV model: weights from the flat simplex distribution,
/// response probabilities uniform in `[0,1]`. Deterministic in the seed.
pub fn sample_lhv(m: usize, n: usize, l: usize, seed: u64) -> LhvModel {
    assert!(l >= 1, "need at least one hidden state");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Normalized unit-rate exponentials are uniform on the simplex.
    let mut weights: Vec<f64> = (0..l).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    if l == 1 {
        weights[0] = 1.0;
    }
    let px = (0..l)
        .map(|_| (0..m).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let py = (0..l)
        .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
        .collect();
    LhvModel::new(weights, px, py).expect("constructed model is valid")
}

/// Exact rational step value, for the exact form of the step identity.
pub fn step_rational(x: &Rational) -> Rational {
    if x.is_positive() {
        rat(1)
    } else if x.is_zero() {
        BigRational::new(1.into(), 2.into())
    } else {
        Rational::zero()
    }
}
