//! Two-qubit evaluation of probability-form expressions.
//!
//! The state family is `|psi(theta)> = cos(theta)|00> + sin(theta)|11>`,
//! optionally mixed with white noise:
//! `rho = lambda |psi><psi| + (1 - lambda) I/4`. Measurements are rank-1
//! projectors onto `cos(alpha)|0> + e^{i phi} sin(alpha)|1>`; outcome
//! probabilities are traces against the explicit 4x4 density matrix.
//!
//! Every probability is affine in the noise weight and the maximally mixed
//! contribution is measurement-independent (`1/2` per marginal, `1/4` per
//! joint), so for any of the objectives here the critical noise weight
//! follows from the values at `lambda = 1` and `lambda = 0` in closed form,
//! and re-optimizing measurements per noise level cannot change it.

use num::complex::Complex64;
use thiserror::Error;

use crate::expr::{BellExpression, Builtin, ExprError, Form};

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("noise weight {0} outside [0, 1]")]
    InvalidNoise(f64),
    #[error("model has {mm}x{mn} settings, need at least {em}x{en}")]
    ShapeMismatch {
        em: usize,
        en: usize,
        mm: usize,
        mn: usize,
    },
    #[error("family parameter k must be >= 2, got {0}")]
    BadFamilyK(usize),
    #[error("model does not violate the inequality (value {0} at full state); optimize first")]
    NotViolating(f64),
    #[error("value does not depend on the noise weight; no crossing to solve")]
    DegenerateNoiseSolve,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Rank-1 qubit projector onto `cos(alpha)|0> + e^{i phi} sin(alpha)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projector {
    pub alpha: f64,
    pub phi: f64,
}

impl Projector {
    pub fn new(alpha: f64, phi: f64) -> Self {
        Self { alpha, phi }
    }

    /// Real projector (`phi = 0`).
    pub fn real(alpha: f64) -> Self {
        Self { alpha, phi: 0.0 }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let (s, c) = self.alpha.sin_cos();
        let phase = Complex64::from_polar(1.0, self.phi);
        // |v><v| for v = (c, s*e^{i phi}).
        [
            [
                Complex64::new(c * c, 0.0),
                Complex64::new(c * s, 0.0) * phase.conj(),
            ],
            [
                Complex64::new(c * s, 0.0) * phase,
                Complex64::new(s * s, 0.0),
            ],
        ]
    }

    /// Projector onto the orthogonal direction (same phase).
    pub fn complement(&self) -> Self {
        Self {
            alpha: self.alpha + std::f64::consts::FRAC_PI_2,
            phi: self.phi,
        }
    }
}

/// State angle, one projector per setting and party, and a noise weight
/// (`1` = pure state).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumModel {
    pub theta: f64,
    pub proj_x: Vec<Projector>,
    pub proj_y: Vec<Projector>,
    pub noise_lambda: f64,
}

impl QuantumModel {
    pub fn new(
        theta: f64,
        proj_x: Vec<Projector>,
        proj_y: Vec<Projector>,
        noise_lambda: f64,
    ) -> Result<Self, QuantumError> {
        if !(0.0..=1.0).contains(&noise_lambda) {
            return Err(QuantumError::InvalidNoise(noise_lambda));
        }
        Ok(Self {
            theta,
            proj_x,
            proj_y,
            noise_lambda,
        })
    }

    /// Pure-state model (`noise_lambda = 1`).
    pub fn pure(theta: f64, proj_x: Vec<Projector>, proj_y: Vec<Projector>) -> Self {
        Self {
            theta,
            proj_x,
            proj_y,
            noise_lambda: 1.0,
        }
    }

    pub fn with_noise(&self, noise_lambda: f64) -> Result<Self, QuantumError> {
        let mut out = self.clone();
        if !(0.0..=1.0).contains(&noise_lambda) {
            return Err(QuantumError::InvalidNoise(noise_lambda));
        }
        out.noise_lambda = noise_lambda;
        Ok(out)
    }

    pub fn m(&self) -> usize {
        self.proj_x.len()
    }

    pub fn n(&self) -> usize {
        self.proj_y.len()
    }

    fn require_at_least(&self, em: usize, en: usize) -> Result<(), QuantumError> {
        if self.m() < em || self.n() < en {
            return Err(QuantumError::ShapeMismatch {
                em,
                en,
                mm: self.m(),
                mn: self.n(),
            });
        }
        Ok(())
    }

    /// Density matrix `lambda |psi><psi| + (1-lambda) I/4`.
    pub fn density_matrix(&self) -> [[Complex64; 4]; 4] {
        let (s, c) = self.theta.sin_cos();
        let psi = [c, 0.0, 0.0, s];
        let l = self.noise_lambda;
        let mut rho = [[Complex64::new(0.0, 0.0); 4]; 4];
        for (a, row) in rho.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let pure = psi[a] * psi[b];
                let mixed = if a == b { 0.25 } else { 0.0 };
                *v = Complex64::new(l * pure + (1.0 - l) * mixed, 0.0);
            }
        }
        rho
    }
}

/// Single and joint outcome probabilities of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    pub px: Vec<f64>,
    pub py: Vec<f64>,
    pub pxy: Vec<Vec<f64>>,
}

impl ProbabilityTable {
    /// Restrict to the first `m` x `n` settings.
    pub fn prefix(&self, m: usize, n: usize) -> ProbabilityTable {
        ProbabilityTable {
            px: self.px[..m].to_vec(),
            py: self.py[..n].to_vec(),
            pxy: self.pxy[..m].iter().map(|row| row[..n].to_vec()).collect(),
        }
    }
}

fn kron2(x: &[[Complex64; 2]; 2], y: &[[Complex64; 2]; 2]) -> [[Complex64; 4]; 4] {
    let mut out = [[Complex64::new(0.0, 0.0); 4]; 4];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    out[2 * a + c][2 * b + d] = x[a][b] * y[c][d];
                }
            }
        }
    }
    out
}

fn trace_prod(rho: &[[Complex64; 4]; 4], op: &[[Complex64; 4]; 4]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            acc += rho[a][b] * op[b][a];
        }
    }
    acc.re
}

const ID2: [[Complex64; 2]; 2] = [
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
];

/// All outcome probabilities of the model:
/// `px[i] = Tr(rho (X_i ⊗ I))`, `py[j] = Tr(rho (I ⊗ Y_j))`,
/// `pxy[i][j] = Tr(rho (X_i ⊗ Y_j))`.
pub fn probabilities(model: &QuantumModel) -> ProbabilityTable {
    let rho = model.density_matrix();
    let mats_x: Vec<_> = model.proj_x.iter().map(Projector::matrix).collect();
    let mats_y: Vec<_> = model.proj_y.iter().map(Projector::matrix).collect();
    let px = mats_x
        .iter()
        .map(|x| trace_prod(&rho, &kron2(x, &ID2)))
        .collect();
    let py = mats_y
        .iter()
        .map(|y| trace_prod(&rho, &kron2(&ID2, y)))
        .collect();
    let pxy = mats_x
        .iter()
        .map(|x| {
            mats_y
                .iter()
                .map(|y| trace_prod(&rho, &kron2(x, y)))
                .collect()
        })
        .collect();
    ProbabilityTable { px, py, pxy }
}

/// Value of a probability-form expression in the model.
pub fn quantum_value(expr: &BellExpression, model: &QuantumModel) -> Result<f64, QuantumError> {
    if expr.form() != Form::Probability {
        return Err(ExprError::WrongForm {
            expected: Form::Probability,
            got: expr.form(),
        }
        .into());
    }
    model.require_at_least(expr.m(), expr.n())?;
    let table = probabilities(model).prefix(expr.m(), expr.n());
    Ok(expr.prob_value(&table.px, &table.py, &table.pxy)?)
}

/// Value of a probability-form expression against a precomputed table.
pub fn value_on_table(
    expr: &BellExpression,
    table: &ProbabilityTable,
) -> Result<f64, QuantumError> {
    let t = table.prefix(expr.m(), expr.n());
    Ok(expr.prob_value(&t.px, &t.py, &t.pxy)?)
}

/// The two branch expressions whose pointwise maximum is the alternative
/// two-setting inequality: the CH expression itself and `CH + E` where `E`
/// is the four-term joint combination (`x + |x| = 2 max(x, 0)`).
pub fn nch_branches() -> [BellExpression; 2] {
    let ch = BellExpression::builtin(Builtin::ChProb);
    // CH + E = 2 P(x1,y1) - P(x1) - P(y1).
    let ch_plus_e = BellExpression::from_ints(
        &[&[2, 0], &[0, 0]],
        &[-1, 0],
        &[-1, 0],
        0,
        Form::Probability,
    );
    [ch, ch_plus_e]
}

/// Evaluable left-hand side of the alternative two-setting inequality:
/// `I_CH + [E + |E|]/2` with `E = P11 - P12 - P21 + P22`. Non-positive for
/// every local model; entangled states can push it positive.
pub fn alt_value_nch(model: &QuantumModel) -> Result<f64, QuantumError> {
    model.require_at_least(2, 2)?;
    let table = probabilities(model).prefix(2, 2);
    let ch = value_on_table(&BellExpression::builtin(Builtin::ChProb), &table)?;
    let e = table.pxy[0][0] - table.pxy[0][1] - table.pxy[1][0] + table.pxy[1][1];
    Ok(ch + (e + e.abs()) / 2.0)
}

/// The symmetric k-settings family whose final-variable split generates the
/// max-form alternative: the printed 2x2 and symmetric 3x3 forms, then the
/// chained family.
pub fn max_form_base(k: usize) -> Result<BellExpression, QuantumError> {
    match k {
        0 | 1 => Err(QuantumError::BadFamilyK(k)),
        2 => Ok(BellExpression::builtin(Builtin::I2222)),
        3 => Ok(BellExpression::builtin(Builtin::I3322Sym)),
        _ => Ok(BellExpression::gen_ikk(k)?),
    }
}

/// Branch expressions of the k-settings max-form alternative: the base
/// inequality with its last y-variable pinned to the bound and to zero,
/// read in probability form.
pub fn max_form_branches(k: usize) -> Result<[BellExpression; 2], QuantumError> {
    let base = max_form_base(k)?;
    let hi = base
        .substitute_bound(crate::expr::Party::Y, k - 1, crate::expr::PinValue::Bound)?
        .to_probability_form()?;
    let lo = base
        .substitute_bound(crate::expr::Party::Y, k - 1, crate::expr::PinValue::Zero)?
        .to_probability_form()?;
    Ok([hi, lo])
}

/// Evaluable left-hand side of the k-settings max-form alternative: the
/// maximum of the two branch values. Non-positive for every local model.
pub fn alt_value_max_form(k: usize, model: &QuantumModel) -> Result<f64, QuantumError> {
    if k < 2 {
        return Err(QuantumError::BadFamilyK(k));
    }
    model.require_at_least(k, k)?;
    let table = probabilities(model);
    let [hi, lo] = max_form_branches(k)?;
    let vh = value_on_table(&hi, &table)?;
    let vl = value_on_table(&lo, &table)?;
    Ok(vh.max(vl))
}

/// Critical noise weight at which the (violating) model stops violating the
/// expression: probabilities are affine in the weight, so
/// `lambda_max = -v0 / (v1 - v0)` with `v1` the value at the pure state and
/// `v0` the value at the maximally mixed state.
pub fn noise_resistance(expr: &BellExpression, model: &QuantumModel) -> Result<f64, QuantumError> {
    let v1 = quantum_value(expr, &model.with_noise(1.0)?)?;
    if v1 <= 0.0 {
        return Err(QuantumError::NotViolating(v1));
    }
    let v0 = quantum_value(expr, &model.with_noise(0.0)?)?;
    if (v1 - v0).abs() < 1e-15 {
        return Err(QuantumError::DegenerateNoiseSolve);
    }
    Ok(-v0 / (v1 - v0))
}
