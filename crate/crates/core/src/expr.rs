//! Exact bilinear CH-type expressions.
//!
//! An expression holds rational coefficients for the bilinear form
//!
//! ```text
//!   B * sum_i Cx[i]*x_i  +  A * sum_j Cy[j]*y_j
//!     + sum_{i,j} C[i][j]*x_i*y_j  +  c*A*B
//! ```
//!
//! over variables `0 <= x_i <= A`, `0 <= y_j <= B` (algebraic form), or the
//! same coefficients read against single and joint outcome probabilities
//! (probability form). The two forms are related by `x_i -> A*P(x_i)`,
//! `y_j -> B*P(y_j)` and division by `A*B`, so conversion is a tag flip.
//!
//! Coefficients are arbitrary-precision rationals and every transformation
//! folds them exactly; floating point only appears when an expression is
//! evaluated at a numeric point or probability table.

use std::fmt;
use std::str::FromStr;

use num::{BigRational, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact coefficient type used throughout the crate.
pub type Rational = BigRational;

/// Shorthand for an integer-valued [`Rational`].
pub fn rat(v: i64) -> Rational {
    Rational::from_integer(v.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Algebraic,
    Probability,
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Form::Algebraic => write!(f, "algebraic"),
            Form::Probability => write!(f, "probability"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Party {
    X,
    Y,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::X => write!(f, "x"),
            Party::Y => write!(f, "y"),
        }
    }
}

/// Value a variable is pinned to by [`BellExpression::substitute_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinValue {
    Zero,
    Bound,
}

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("{axis} dimension mismatch: expression expects {expected}, got {got}")]
    DimensionMismatch {
        axis: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{party} index {index} out of range for {len} settings")]
    IndexOutOfRange {
        party: Party,
        index: usize,
        len: usize,
    },
    #[error("operation requires {expected} form but expression is in {got} form")]
    WrongForm { expected: Form, got: Form },
    #[error("invalid permutation: {0}")]
    BadPermutation(String),
    #[error("family parameter k must be >= 2, got {0}")]
    BadFamilyK(usize),
    #[error("unknown built-in name `{0}`")]
    UnknownBuiltin(String),
    #[error("{party}[{index}] = {value} outside [0, {bound}]")]
    PointOutOfBox {
        party: Party,
        index: usize,
        value: f64,
        bound: f64,
    },
    #[error("box bound {0} must be positive, got {1}")]
    NonPositiveBound(&'static str, f64),
    #[error("expression must have at least one setting per party")]
    EmptyExpression,
}

/// A point of the box `[0,A]^m x [0,B]^n` together with its bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPoint {
    xs: Vec<f64>,
    ys: Vec<f64>,
    a: f64,
    b: f64,
}

impl BoxPoint {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, a: f64, b: f64) -> Result<Self, ExprError> {
        if a <= 0.0 {
            return Err(ExprError::NonPositiveBound("A", a));
        }
        if b <= 0.0 {
            return Err(ExprError::NonPositiveBound("B", b));
        }
        for (index, &v) in xs.iter().enumerate() {
            if !(0.0..=a).contains(&v) {
                return Err(ExprError::PointOutOfBox {
                    party: Party::X,
                    index,
                    value: v,
                    bound: a,
                });
            }
        }
        for (index, &v) in ys.iter().enumerate() {
            if !(0.0..=b).contains(&v) {
                return Err(ExprError::PointOutOfBox {
                    party: Party::Y,
                    index,
                    value: v,
                    bound: b,
                });
            }
        }
        Ok(Self { xs, ys, a, b })
    }

    /// Unit-bound point, `A = B = 1`.
    pub fn unit(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, ExprError> {
        Self::new(xs, ys, 1.0, 1.0)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn bound_a(&self) -> f64 {
        self.a
    }

    pub fn bound_b(&self) -> f64 {
        self.b
    }
}

/// Names of the expressions printed in full in the source material.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// The 2x2 inequality in algebraic form (also the k=2 chain member).
    I2222,
    /// The symmetric 3x3 inequality (algebraic form).
    I3322Sym,
    /// The unique 5x3 inequality (algebraic form).
    I5322,
    /// The CH inequality in probability form; same coefficients as `I2222`.
    ChProb,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "I2222" => Some(Builtin::I2222),
            "I3322_SYM" => Some(Builtin::I3322Sym),
            "I5322" => Some(Builtin::I5322),
            "CH_PROB" => Some(Builtin::ChProb),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::I2222 => "I2222",
            Builtin::I3322Sym => "I3322_SYM",
            Builtin::I5322 => "I5322",
            Builtin::ChProb => "CH_PROB",
        }
    }
}

/// Exact bilinear CH-type expression; see the module docs for the form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BellExpression {
    m: usize,
    n: usize,
    joint: Vec<Vec<Rational>>,
    marg_x: Vec<Rational>,
    marg_y: Vec<Rational>,
    const_term: Rational,
    form: Form,
}

impl BellExpression {
    pub fn new(
        joint: Vec<Vec<Rational>>,
        marg_x: Vec<Rational>,
        marg_y: Vec<Rational>,
        const_term: Rational,
        form: Form,
    ) -> Result<Self, ExprError> {
        let m = joint.len();
        if m == 0 {
            return Err(ExprError::EmptyExpression);
        }
        let n = joint[0].len();
        if n == 0 {
            return Err(ExprError::EmptyExpression);
        }
        for row in &joint {
            if row.len() != n {
                return Err(ExprError::DimensionMismatch {
                    axis: "joint row",
                    expected: n,
                    got: row.len(),
                });
            }
        }
        if marg_x.len() != m {
            return Err(ExprError::DimensionMismatch {
                axis: "marg_x",
                expected: m,
                got: marg_x.len(),
            });
        }
        if marg_y.len() != n {
            return Err(ExprError::DimensionMismatch {
                axis: "marg_y",
                expected: n,
                got: marg_y.len(),
            });
        }
        Ok(Self {
            m,
            n,
            joint,
            marg_x,
            marg_y,
            const_term,
            form,
        })
    }

    /// Build from integer coefficients; used for the printed families.
    pub fn from_ints(
        joint: &[&[i64]],
        marg_x: &[i64],
        marg_y: &[i64],
        const_term: i64,
        form: Form,
    ) -> Self {
        let joint = joint
            .iter()
            .map(|row| row.iter().copied().map(rat).collect())
            .collect();
        let marg_x = marg_x.iter().copied().map(rat).collect();
        let marg_y = marg_y.iter().copied().map(rat).collect();
        Self::new(joint, marg_x, marg_y, rat(const_term), form)
            .expect("integer coefficient tables are well formed")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn settings(&self, party: Party) -> usize {
        match party {
            Party::X => self.m,
            Party::Y => self.n,
        }
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn joint(&self, i: usize, j: usize) -> &Rational {
        &self.joint[i][j]
    }

    pub fn marg(&self, party: Party, index: usize) -> &Rational {
        match party {
            Party::X => &self.marg_x[index],
            Party::Y => &self.marg_y[index],
        }
    }

    pub fn marg_x(&self) -> &[Rational] {
        &self.marg_x
    }

    pub fn marg_y(&self) -> &[Rational] {
        &self.marg_y
    }

    pub fn const_term(&self) -> &Rational {
        &self.const_term
    }

    fn check_index(&self, party: Party, index: usize) -> Result<(), ExprError> {
        let len = self.settings(party);
        if index >= len {
            return Err(ExprError::IndexOutOfRange { party, index, len });
        }
        Ok(())
    }

    fn require_form(&self, expected: Form) -> Result<(), ExprError> {
        if self.form != expected {
            return Err(ExprError::WrongForm {
                expected,
                got: self.form,
            });
        }
        Ok(())
    }

    /// Joint coefficients of one variable over the opposite party: the row
    /// `C[i][..]` for `x_i` or the column `C[..][j]` for `y_j`.
    pub fn column(&self, party: Party, index: usize) -> Vec<Rational> {
        match party {
            Party::X => self.joint[index].clone(),
            Party::Y => self.joint.iter().map(|row| row[index].clone()).collect(),
        }
    }

    /// Evaluate the algebraic form at a box point, in floating point.
    pub fn evaluate(&self, point: &BoxPoint) -> Result<f64, ExprError> {
        self.require_form(Form::Algebraic)?;
        if point.xs.len() != self.m {
            return Err(ExprError::DimensionMismatch {
                axis: "xs",
                expected: self.m,
                got: point.xs.len(),
            });
        }
        if point.ys.len() != self.n {
            return Err(ExprError::DimensionMismatch {
                axis: "ys",
                expected: self.n,
                got: point.ys.len(),
            });
        }
        let mut acc = self.const_term.to_f64().unwrap() * point.a * point.b;
        for i in 0..self.m {
            acc += point.b * self.marg_x[i].to_f64().unwrap() * point.xs[i];
            for j in 0..self.n {
                acc += self.joint[i][j].to_f64().unwrap() * point.xs[i] * point.ys[j];
            }
        }
        for j in 0..self.n {
            acc += point.a * self.marg_y[j].to_f64().unwrap() * point.ys[j];
        }
        Ok(acc)
    }

    /// Evaluate the probability form against single and joint probabilities.
    pub fn prob_value(&self, px: &[f64], py: &[f64], pxy: &[Vec<f64>]) -> Result<f64, ExprError> {
        self.require_form(Form::Probability)?;
        if px.len() != self.m || pxy.len() != self.m {
            return Err(ExprError::DimensionMismatch {
                axis: "px",
                expected: self.m,
                got: px.len(),
            });
        }
        if py.len() != self.n {
            return Err(ExprError::DimensionMismatch {
                axis: "py",
                expected: self.n,
                got: py.len(),
            });
        }
        let mut acc = self.const_term.to_f64().unwrap();
        for i in 0..self.m {
            acc += self.marg_x[i].to_f64().unwrap() * px[i];
            if pxy[i].len() != self.n {
                return Err(ExprError::DimensionMismatch {
                    axis: "pxy row",
                    expected: self.n,
                    got: pxy[i].len(),
                });
            }
            for j in 0..self.n {
                acc += self.joint[i][j].to_f64().unwrap() * pxy[i][j];
            }
        }
        for j in 0..self.n {
            acc += self.marg_y[j].to_f64().unwrap() * py[j];
        }
        Ok(acc)
    }

    /// Pin one variable to `0` or to its bound, folding coefficients exactly.
    ///
    /// Pinning `x_i` to its bound `A` turns each `C[i][j]*x_i*y_j` into an
    /// `A*y_j` contribution and `B*Cx[i]*x_i` into an `A*B` constant; the
    /// variable's own row and marginal are zeroed. The result keeps the same
    /// `(m, n)` shape.
    pub fn substitute_bound(
        &self,
        party: Party,
        index: usize,
        value: PinValue,
    ) -> Result<Self, ExprError> {
        self.require_form(Form::Algebraic)?;
        self.check_index(party, index)?;
        let mut out = self.clone();
        match party {
            Party::X => {
                if value == PinValue::Bound {
                    for j in 0..self.n {
                        out.marg_y[j] += &self.joint[index][j];
                    }
                    out.const_term += &self.marg_x[index];
                }
                for j in 0..self.n {
                    out.joint[index][j] = Rational::zero();
                }
                out.marg_x[index] = Rational::zero();
            }
            Party::Y => {
                if value == PinValue::Bound {
                    for i in 0..self.m {
                        out.marg_x[i] += &self.joint[i][index];
                    }
                    out.const_term += &self.marg_y[index];
                }
                for i in 0..self.m {
                    out.joint[i][index] = Rational::zero();
                }
                out.marg_y[index] = Rational::zero();
            }
        }
        Ok(out)
    }

    /// Substitute a variable by `bound - variable`, folding exactly.
    /// Applying the same flip twice returns the original expression.
    pub fn affine_flip(&self, party: Party, index: usize) -> Result<Self, ExprError> {
        self.require_form(Form::Algebraic)?;
        self.check_index(party, index)?;
        let mut out = self.clone();
        match party {
            Party::X => {
                for j in 0..self.n {
                    out.marg_y[j] += &self.joint[index][j];
                    out.joint[index][j] = -self.joint[index][j].clone();
                }
                out.const_term += &self.marg_x[index];
                out.marg_x[index] = -self.marg_x[index].clone();
            }
            Party::Y => {
                for i in 0..self.m {
                    out.marg_x[i] += &self.joint[i][index];
                    out.joint[i][index] = -self.joint[i][index].clone();
                }
                out.const_term += &self.marg_y[index];
                out.marg_y[index] = -self.marg_y[index].clone();
            }
        }
        Ok(out)
    }

    /// Permute setting indices. `perm_x[i]` is the new index of old `x_i`,
    /// so `evaluate(relabel(e), p) == evaluate(e, p')` where
    /// `p'.xs[i] = p.xs[perm_x[i]]` (and likewise for y).
    pub fn relabel(&self, perm_x: &[usize], perm_y: &[usize]) -> Result<Self, ExprError> {
        check_permutation(perm_x, self.m)?;
        check_permutation(perm_y, self.n)?;
        let mut out = self.clone();
        for i in 0..self.m {
            out.marg_x[perm_x[i]] = self.marg_x[i].clone();
            for j in 0..self.n {
                out.joint[perm_x[i]][perm_y[j]] = self.joint[i][j].clone();
            }
        }
        for j in 0..self.n {
            out.marg_y[perm_y[j]] = self.marg_y[j].clone();
        }
        Ok(out)
    }

    /// The `k x k` chained family: joint part
    /// `sum_{j<=k} sum_{i<=k+1-j} x_i y_j - sum_{2<=i<=k} x_i y_{k+2-i}`,
    /// marginals `-sum_{i<k} (k-i) x_i B - A y_1`.
    pub fn gen_ikk(k: usize) -> Result<Self, ExprError> {
        if k < 2 {
            return Err(ExprError::BadFamilyK(k));
        }
        let mut joint = vec![vec![Rational::zero(); k]; k];
        for j in 0..k {
            // paper indices: j+1, up to i = k+1-(j+1) = k-j-... keep 0-based.
            for i in 0..(k - j) {
                joint[i][j] += rat(1);
            }
        }
        for i in 1..k {
            // x_{i+1} * y_{k+2-(i+1)} in 1-based is joint[i][k - i] 0-based.
            joint[i][k - i] -= rat(1);
        }
        let mut marg_x = vec![Rational::zero(); k];
        for (i, slot) in marg_x.iter_mut().enumerate().take(k - 1) {
            *slot = rat(-((k - 1 - i) as i64));
        }
        let mut marg_y = vec![Rational::zero(); k];
        marg_y[0] = rat(-1);
        Self::new(joint, marg_x, marg_y, Rational::zero(), Form::Algebraic)
    }

    /// One of the expressions printed in full in the source material.
    pub fn builtin(which: Builtin) -> Self {
        match which {
            Builtin::I2222 => {
                Self::from_ints(&[&[1, 1], &[1, -1]], &[-1, 0], &[-1, 0], 0, Form::Algebraic)
            }
            Builtin::I3322Sym => Self::from_ints(
                &[&[0, 1, 1], &[1, -1, 1], &[1, 1, -1]],
                &[-1, -1, 0],
                &[-1, -1, 0],
                0,
                Form::Algebraic,
            ),
            Builtin::I5322 => Self::from_ints(
                &[
                    &[1, -1, 1],
                    &[0, 1, 1],
                    &[1, 1, 0],
                    &[1, 0, -1],
                    &[-1, 1, -1],
                ],
                &[-1, -1, -1, 0, 0],
                &[-1, -1, 0],
                0,
                Form::Algebraic,
            ),
            Builtin::ChProb => Self::from_ints(
                &[&[1, 1], &[1, -1]],
                &[-1, 0],
                &[-1, 0],
                0,
                Form::Probability,
            ),
        }
    }

    /// Look a built-in up by its catalog name.
    pub fn builtin_by_name(name: &str) -> Result<Self, ExprError> {
        Builtin::from_name(name)
            .map(Self::builtin)
            .ok_or_else(|| ExprError::UnknownBuiltin(name.to_string()))
    }

    /// Reinterpret the coefficients in probability form (tag flip).
    pub fn to_probability_form(&self) -> Result<Self, ExprError> {
        self.require_form(Form::Algebraic)?;
        let mut out = self.clone();
        out.form = Form::Probability;
        Ok(out)
    }

    /// Inverse of [`BellExpression::to_probability_form`].
    pub fn to_algebraic_form(&self) -> Result<Self, ExprError> {
        self.require_form(Form::Probability)?;
        let mut out = self.clone();
        out.form = Form::Algebraic;
        Ok(out)
    }

    /// True when every coefficient of the variable is zero.
    pub fn variable_is_absent(&self, party: Party, index: usize) -> bool {
        self.marg(party, index).is_zero() && self.column(party, index).iter().all(Zero::is_zero)
    }

    /// Render as a human-readable polynomial, mostly for CLI messages.
    pub fn render(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        let term = |c: &Rational, v: String| -> Option<String> {
            if c.is_zero() {
                return None;
            }
            if c == &rat(1) {
                Some(v)
            } else if c == &rat(-1) {
                Some(format!("-{v}"))
            } else {
                Some(format!("{c}*{v}"))
            }
        };
        for i in 0..self.m {
            for j in 0..self.n {
                let v = match self.form {
                    Form::Algebraic => format!("x{}y{}", i + 1, j + 1),
                    Form::Probability => format!("P(x{},y{})", i + 1, j + 1),
                };
                parts.extend(term(&self.joint[i][j], v));
            }
        }
        for i in 0..self.m {
            let v = match self.form {
                Form::Algebraic => format!("x{}*B", i + 1),
                Form::Probability => format!("P(x{})", i + 1),
            };
            parts.extend(term(&self.marg_x[i], v));
        }
        for j in 0..self.n {
            let v = match self.form {
                Form::Algebraic => format!("A*y{}", j + 1),
                Form::Probability => format!("P(y{})", j + 1),
            };
            parts.extend(term(&self.marg_y[j], v));
        }
        match self.form {
            Form::Algebraic => parts.extend(term(&self.const_term, "A*B".to_string())),
            Form::Probability => {
                if !self.const_term.is_zero() {
                    parts.push(format!("{}", self.const_term));
                }
            }
        }
        if parts.is_empty() {
            return "0".to_string();
        }
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            if let Some(stripped) = p.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(stripped);
            } else {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
        out
    }
}

fn check_permutation(perm: &[usize], len: usize) -> Result<(), ExprError> {
    if perm.len() != len {
        return Err(ExprError::BadPermutation(format!(
            "length {} does not match {} settings",
            perm.len(),
            len
        )));
    }
    let mut seen = vec![false; len];
    for &p in perm {
        if p >= len || seen[p] {
            return Err(ExprError::BadPermutation(format!(
                "not a bijection on 0..{len}"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Parse a rational from a catalog string such as `-1` or `1/2`.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    Rational::from_str(s.trim()).map_err(|e| format!("bad rational `{s}`: {e}"))
}

/// Render a rational in catalog notation (`-1`, `1/2`).
pub fn format_rational(r: &Rational) -> String {
    if r.denom() == &num::BigInt::from(1) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Signum helper used by the proof-search pivot ordering.
pub fn is_mixed_sign(column: &[Rational]) -> bool {
    column.iter().any(|c| c.is_positive()) && column.iter().any(|c| c.is_negative())
}
