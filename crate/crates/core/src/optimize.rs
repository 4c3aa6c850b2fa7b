//! Maximize quantum violations over the state angle and measurement angles.
//!
//! Every objective here is the pointwise maximum of finitely many
//! probability-form expressions (one for the plain inequality, two branches
//! for the alternative forms). The optimizer is multi-start coordinate
//! descent with an adaptive step, which handles the kinks of the max-form
//! objectives without derivatives. Restarts are independent and may run on
//! the rayon pool; the reduction is deterministic (best value, ties to the
//! smallest state angle, then lexicographically smallest angles).

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::expr::{BellExpression, ExprError, Form};
use crate::quantum::{
    max_form_branches, nch_branches, probabilities, ProbabilityTable, Projector, QuantumError,
    QuantumModel,
};

use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("objective needs shape {em}x{en}, got {gm}x{gn}")]
    ShapeMismatch {
        em: usize,
        en: usize,
        gm: usize,
        gn: usize,
    },
    #[error("standard objective requires a probability-form expression")]
    NotProbabilityForm,
    #[error("invalid optimizer config: {0}")]
    BadConfig(String),
    #[error("grid of {points} nodes exceeds the {max} guard")]
    GridGuard { points: u128, max: u128 },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// What to maximize.
#[derive(Debug, Clone)]
pub enum Objective {
    /// A probability-form expression as-is.
    Standard(BellExpression),
    /// The alternative two-setting inequality (CH plus the positive part of
    /// the joint combination).
    Nch,
    /// The k-settings max-form alternative.
    MaxForm(usize),
}

impl Objective {
    /// Expected model shape.
    pub fn shape(&self) -> Result<(usize, usize), OptimizeError> {
        match self {
            Objective::Standard(e) => {
                if e.form() != Form::Probability {
                    return Err(OptimizeError::NotProbabilityForm);
                }
                Ok((e.m(), e.n()))
            }
            Objective::Nch => Ok((2, 2)),
            Objective::MaxForm(k) => {
                if *k < 2 {
                    return Err(OptimizeError::Quantum(QuantumError::BadFamilyK(*k)));
                }
                Ok((*k, *k))
            }
        }
    }

    /// The probability-form expressions whose maximum is the objective.
    pub fn branches(&self) -> Result<Vec<BellExpression>, OptimizeError> {
        match self {
            Objective::Standard(e) => {
                if e.form() != Form::Probability {
                    return Err(OptimizeError::NotProbabilityForm);
                }
                Ok(vec![e.clone()])
            }
            Objective::Nch => Ok(nch_branches().into()),
            Objective::MaxForm(k) => Ok(max_form_branches(*k)?.into()),
        }
    }

    /// Objective value on a probability table.
    pub fn value_on(&self, branches: &[BellExpression], table: &ProbabilityTable) -> f64 {
        branches
            .iter()
            .map(|b| {
                let t = table.prefix(b.m(), b.n());
                b.prob_value(&t.px, &t.py, &t.pxy)
                    .expect("branch shapes fit the table")
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Optimizer settings; all fields have defaults so config files may be
/// partial. Accepted as JSON: `{"restarts": 64, "seed": 1, "free_phase":
/// false, "tolerance": 1e-10, "max_evals": 100000}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub free_phase: bool,
    pub tolerance: f64,
    pub max_evals: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            seed: 1,
            free_phase: false,
            tolerance: 1e-10,
            max_evals: 100_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.restarts < 1 {
            return Err(OptimizeError::BadConfig("restarts must be >= 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(OptimizeError::BadConfig("tolerance must be > 0".into()));
        }
        if self.max_evals < 1 {
            return Err(OptimizeError::BadConfig("max_evals must be >= 1".into()));
        }
        Ok(())
    }
}

/// Best violation found, with the parameters that attain it.
#[derive(Debug, Clone)]
pub struct ViolationResult {
    /// Maximum objective value.
    pub q: f64,
    /// State angle at the optimum, in `[0, pi/2]`.
    pub theta_max: f64,
    /// Measurement angles at the optimum, canonicalized into `[0, pi)`.
    pub alphas_x: Vec<f64>,
    pub alphas_y: Vec<f64>,
    /// Measurement phases; all zero unless `free_phase` was set.
    pub phis_x: Vec<f64>,
    pub phis_y: Vec<f64>,
    /// Critical noise weight when the optimum violates, else `None`.
    pub lambda_max: Option<f64>,
    /// Objective evaluations across all restarts.
    pub evaluations: u64,
    /// True when the best restart stopped on the improvement tolerance
    /// rather than the evaluation cap.
    pub converged: bool,
}

impl ViolationResult {
    /// Rebuild the optimal model (pure state).
    pub fn model(&self) -> QuantumModel {
        QuantumModel::pure(
            self.theta_max,
            self.alphas_x
                .iter()
                .zip(&self.phis_x)
                .map(|(&a, &p)| Projector::new(a, p))
                .collect(),
            self.alphas_y
                .iter()
                .zip(&self.phis_y)
                .map(|(&a, &p)| Projector::new(a, p))
                .collect(),
        )
    }
}

struct RestartOutcome {
    value: f64,
    params: Vec<f64>,
    evaluations: u64,
    converged: bool,
}

fn canonical_angle(a: f64) -> f64 {
    // Projectors have period pi in the polar angle.
    let r = a.rem_euclid(PI);
    if r == PI {
        0.0
    } else {
        r
    }
}

fn params_to_model(params: &[f64], m: usize, n: usize, free_phase: bool) -> QuantumModel {
    let theta = params[0].clamp(0.0, FRAC_PI_2);
    let ax = &params[1..1 + m];
    let ay = &params[1 + m..1 + m + n];
    let (px, py): (Vec<Projector>, Vec<Projector>) = if free_phase {
        let fx = &params[1 + m + n..1 + 2 * m + n];
        let fy = &params[1 + 2 * m + n..1 + 2 * m + 2 * n];
        (
            ax.iter()
                .zip(fx)
                .map(|(&a, &p)| Projector::new(a, p))
                .collect(),
            ay.iter()
                .zip(fy)
                .map(|(&a, &p)| Projector::new(a, p))
                .collect(),
        )
    } else {
        (
            ax.iter().map(|&a| Projector::real(a)).collect(),
            ay.iter().map(|&a| Projector::real(a)).collect(),
        )
    };
    QuantumModel::pure(theta, px, py)
}

fn run_restart(
    branches: &[BellExpression],
    objective: &Objective,
    m: usize,
    n: usize,
    config: &OptimizerConfig,
    restart_seed: u64,
) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(restart_seed);
    let dim = 1 + m + n + if config.free_phase { m + n } else { 0 };
    let mut p = vec![0.0; dim];
    p[0] = rng.gen_range(0.0..=FRAC_PI_2);
    for v in p[1..1 + m + n].iter_mut() {
        *v = rng.gen_range(0.0..PI);
    }
    if config.free_phase {
        for v in p[1 + m + n..].iter_mut() {
            *v = rng.gen_range(0.0..2.0 * PI);
        }
    }

    let mut evals: u64 = 0;
    let eval = |p: &[f64], evals: &mut u64| -> f64 {
        *evals += 1;
        let model = params_to_model(p, m, n, config.free_phase);
        objective.value_on(branches, &probabilities(&model))
    };

    let mut best = eval(&p, &mut evals);
    let mut steps = vec![PI / 16.0; dim];
    let mut converged = false;
    'outer: loop {
        let mut sweep_gain = 0.0;
        for c in 0..dim {
            let mut moved = false;
            for dir in [1.0, -1.0] {
                loop {
                    if evals >= config.max_evals {
                        break 'outer;
                    }
                    let mut cand = p.clone();
                    cand[c] += dir * steps[c];
                    if c == 0 {
                        cand[0] = cand[0].clamp(0.0, FRAC_PI_2);
                        if cand[0] == p[0] {
                            break;
                        }
                    }
                    let v = eval(&cand, &mut evals);
                    if v > best {
                        sweep_gain += v - best;
                        best = v;
                        p = cand;
                        steps[c] *= 1.6;
                        moved = true;
                    } else {
                        break;
                    }
                }
                if moved {
                    break;
                }
            }
            if !moved {
                steps[c] *= 0.5;
            }
        }
        let max_step = steps.iter().cloned().fold(0.0f64, f64::max);
        if sweep_gain < config.tolerance && max_step < 1e-8 {
            converged = true;
            break;
        }
    }

    RestartOutcome {
        value: best,
        params: p,
        evaluations: evals,
        converged,
    }
}

/// Critical noise weight of the objective at a model: the smallest root
/// over branches that violate at the pure state, each affine in the weight.
/// `None` when the model does not violate at all.
fn objective_noise_resistance(branches: &[BellExpression], model: &QuantumModel) -> Option<f64> {
    let t1 = probabilities(&model.with_noise(1.0).ok()?);
    let t0 = probabilities(&model.with_noise(0.0).ok()?);
    let mut best: Option<f64> = None;
    for b in branches {
        let s1 = t1.prefix(b.m(), b.n());
        let s0 = t0.prefix(b.m(), b.n());
        let v1 = b.prob_value(&s1.px, &s1.py, &s1.pxy).ok()?;
        let v0 = b.prob_value(&s0.px, &s0.py, &s0.pxy).ok()?;
        if v1 > 0.0 && (v1 - v0).abs() > 1e-15 {
            let root = -v0 / (v1 - v0);
            best = Some(best.map_or(root, |b: f64| b.min(root)));
        }
    }
    best
}

/// Multi-start maximization; deterministic in `config.seed`.
pub fn maximize(
    objective: &Objective,
    m: usize,
    n: usize,
    config: &OptimizerConfig,
) -> Result<ViolationResult, OptimizeError> {
    config.validate()?;
    let (em, en) = objective.shape()?;
    if em != m || en != n {
        return Err(OptimizeError::ShapeMismatch {
            em,
            en,
            gm: m,
            gn: n,
        });
    }
    let branches = objective.branches()?;

    let outcomes: Vec<RestartOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            run_restart(
                &branches,
                objective,
                m,
                n,
                config,
                config.seed.wrapping_add(r as u64),
            )
        })
        .collect();

    let evaluations: u64 = outcomes.iter().map(|o| o.evaluations).sum();

    // Deterministic reduction: best value; among restarts within 1e-9 of it
    // the smallest canonical theta wins, then the lexicographically smallest
    // canonical angle vector.
    let best_value = outcomes
        .iter()
        .map(|o| o.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let canon = |o: &RestartOutcome| -> (f64, Vec<f64>) {
        let theta = o.params[0].clamp(0.0, FRAC_PI_2);
        let rest: Vec<f64> = o.params[1..].iter().map(|&a| canonical_angle(a)).collect();
        (theta, rest)
    };
    let winner = outcomes
        .iter()
        .filter(|o| o.value >= best_value - 1e-9)
        .min_by(|a, b| {
            let (ta, ra) = canon(a);
            let (tb, rb) = canon(b);
            ta.partial_cmp(&tb)
                .unwrap()
                .then_with(|| ra.partial_cmp(&rb).unwrap())
        })
        .expect("at least one restart");

    let (theta, rest) = canon(winner);
    let alphas_x = rest[..m].to_vec();
    let alphas_y = rest[m..m + n].to_vec();
    let (phis_x, phis_y) = if config.free_phase {
        (
            winner.params[1 + m + n..1 + 2 * m + n].to_vec(),
            winner.params[1 + 2 * m + n..].to_vec(),
        )
    } else {
        (vec![0.0; m], vec![0.0; n])
    };

    let result_model = QuantumModel::pure(
        theta,
        alphas_x
            .iter()
            .zip(&phis_x)
            .map(|(&a, &p)| Projector::new(a, p))
            .collect(),
        alphas_y
            .iter()
            .zip(&phis_y)
            .map(|(&a, &p)| Projector::new(a, p))
            .collect(),
    );
    let q = objective.value_on(&branches, &probabilities(&result_model));
    let lambda_max = if q > 0.0 {
        objective_noise_resistance(&branches, &result_model)
    } else {
        None
    };

    Ok(ViolationResult {
        q,
        theta_max: theta,
        alphas_x,
        alphas_y,
        phis_x,
        phis_y,
        lambda_max,
        evaluations,
        converged: winner.converged,
    })
}

/// Guard on the number of materialized grid nodes (state angle times the
/// enumerated party's angle lattice).
pub const GRID_NODE_GUARD: u128 = 100_000_000;

/// Exact maximum of the objective over the full product grid: the state
/// angle on `[0, pi/2]` and every measurement angle on `[0, pi)`, all with
/// the given spacing.
///
/// The grid is swept by materializing the state angle and the angles of the
/// party with fewer settings; for each such node the other party's angles
/// decouple (the objective branches are sums of per-setting terms), so each
/// of them is maximized over its own lattice independently. The result is
/// exactly the maximum over the full product grid, a certified lower bound
/// on the true maximum. The guard counts materialized nodes.
pub fn grid_oracle(
    objective: &Objective,
    m: usize,
    n: usize,
    resolution: f64,
) -> Result<f64, OptimizeError> {
    if resolution.is_nan() || resolution <= 0.0 {
        return Err(OptimizeError::BadConfig("resolution must be > 0".into()));
    }
    let (em, en) = objective.shape()?;
    if em != m || en != n {
        return Err(OptimizeError::ShapeMismatch {
            em,
            en,
            gm: m,
            gn: n,
        });
    }
    let branches = objective.branches()?;

    let theta_points: Vec<f64> = {
        let count = (FRAC_PI_2 / resolution).floor() as usize + 1;
        (0..count)
            .map(|t| (t as f64 * resolution).min(FRAC_PI_2))
            .collect()
    };
    let angle_count = ((PI / resolution).round() as usize).max(1);
    let angles: Vec<f64> = (0..angle_count).map(|t| t as f64 * resolution).collect();

    // Enumerate the smaller party, decouple the larger one.
    let enumerate_y = n <= m;
    let enum_count = if enumerate_y { n } else { m };
    let free_count = if enumerate_y { m } else { n };

    let nodes: u128 = theta_points.len() as u128 * (angles.len() as u128).pow(enum_count as u32);
    if nodes > GRID_NODE_GUARD {
        return Err(OptimizeError::GridGuard {
            points: nodes,
            max: GRID_NODE_GUARD,
        });
    }

    // Branch coefficient tables as f64 for the hot loop, oriented so that
    // rows index the free party and columns the enumerated party.
    struct BranchTab {
        joint: Vec<Vec<f64>>, // free x enum
        marg_free: Vec<f64>,
        marg_enum: Vec<f64>,
        konst: f64,
    }
    use num::ToPrimitive;
    let tabs: Vec<BranchTab> = branches
        .iter()
        .map(|b| {
            let (bm, bn) = (b.m(), b.n());
            let mut joint = vec![vec![0.0; if enumerate_y { bn } else { bm }]; free_count];
            let mut marg_free = vec![0.0; free_count];
            let mut marg_enum = vec![0.0; if enumerate_y { bn } else { bm }];
            for i in 0..bm {
                for j in 0..bn {
                    let v = b.joint(i, j).to_f64().unwrap();
                    if enumerate_y {
                        joint[i][j] = v;
                    } else {
                        joint[j][i] = v;
                    }
                }
            }
            for i in 0..bm {
                let v = b.marg(crate::expr::Party::X, i).to_f64().unwrap();
                if enumerate_y {
                    marg_free[i] = v;
                } else {
                    marg_enum[i] = v;
                }
            }
            for j in 0..bn {
                let v = b.marg(crate::expr::Party::Y, j).to_f64().unwrap();
                if enumerate_y {
                    marg_enum[j] = v;
                } else {
                    marg_free[j] = v;
                }
            }
            BranchTab {
                joint,
                marg_free,
                marg_enum,
                konst: b.const_term().to_f64().unwrap(),
            }
        })
        .collect();

    let best = theta_points
        .par_iter()
        .map(|&theta| {
            let (st, ct) = theta.sin_cos();
            let c2 = ct * ct;
            let s2 = st * st;
            let cs = ct * st;
            let k = angles.len();
            // Pure-state probabilities at angle a decompose over
            // cc = cos^2 a, ss = sin^2 a, q = cos a sin a:
            //   marginal(a)   = c2*cc + s2*ss
            //   joint(a, b)   = c2*cc(a)cc(b) + s2*ss(a)ss(b) + 2cs*q(a)q(b)
            let trig: Vec<(f64, f64)> = angles.iter().map(|&a| a.sin_cos()).collect();
            let cc: Vec<f64> = trig.iter().map(|&(_, c)| c * c).collect();
            let ss: Vec<f64> = trig.iter().map(|&(s, _)| s * s).collect();
            let q: Vec<f64> = trig.iter().map(|&(s, c)| c * s).collect();
            let marg: Vec<f64> = (0..k).map(|i| c2 * cc[i] + s2 * ss[i]).collect();

            let mut node = vec![0usize; enum_count];
            let mut best = f64::NEG_INFINITY;
            loop {
                for tab in &tabs {
                    let enum_len = tab.marg_enum.len();
                    let mut val = tab.konst;
                    for (j, &cand) in node.iter().enumerate().take(enum_len) {
                        val += tab.marg_enum[j] * marg[cand];
                    }
                    for fi in 0..tab.marg_free.len() {
                        let row = &tab.joint[fi];
                        let mf = tab.marg_free[fi];
                        let mut u1 = mf;
                        let mut u2 = mf;
                        let mut u3 = 0.0;
                        for (j, &cand) in node.iter().enumerate().take(enum_len) {
                            u1 += row[j] * cc[cand];
                            u2 += row[j] * ss[cand];
                            u3 += row[j] * q[cand];
                        }
                        // contrib(a) = A*cc(a) + B*ss(a) + C*q(a) is a
                        // sinusoid in 2a; the lattice maximum sits next to
                        // the phase peak, so probing the three nearest
                        // lattice angles is exact.
                        let aa = c2 * u1;
                        let bb = s2 * u2;
                        let ccoef = 2.0 * cs * u3;
                        let peak = 0.5 * ccoef.atan2(aa - bb);
                        let center = (peak / resolution).round() as i64;
                        let mut best_contrib = f64::NEG_INFINITY;
                        for d in -1..=1i64 {
                            let idx = (center + d).rem_euclid(k as i64) as usize;
                            let contrib = aa * cc[idx] + bb * ss[idx] + ccoef * q[idx];
                            if contrib > best_contrib {
                                best_contrib = contrib;
                            }
                        }
                        val += best_contrib;
                    }
                    if val > best {
                        best = val;
                    }
                }
                // Next node in odometer order.
                let mut carry = true;
                for slot in node.iter_mut() {
                    *slot += 1;
                    if *slot == k {
                        *slot = 0;
                    } else {
                        carry = false;
                        break;
                    }
                }
                if carry {
                    break;
                }
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    Ok(best)
}

/// One report row: plain maximization plus, when requested and defined for
/// the shape, the alternative objective (two settings: the CH alternative;
/// square shapes of 3..=6 settings: the max-form alternative).
#[derive(Debug, Clone)]
pub struct TableRow {
    pub q: f64,
    pub theta_over_pi: f64,
    pub lambda_max: Option<f64>,
    pub alt: Option<AltColumns>,
}

#[derive(Debug, Clone)]
pub struct AltColumns {
    pub q: f64,
    pub theta_over_pi: f64,
    pub lambda_max: Option<f64>,
}

pub fn table_row(
    expr: &BellExpression,
    with_alternatives: bool,
    config: &OptimizerConfig,
) -> Result<TableRow, OptimizeError> {
    let prob = match expr.form() {
        Form::Probability => expr.clone(),
        Form::Algebraic => expr.to_probability_form()?,
    };
    let (m, n) = (prob.m(), prob.n());
    let main = maximize(&Objective::Standard(prob), m, n, config)?;

    let alt_objective = if !with_alternatives {
        None
    } else if m == 2 && n == 2 {
        Some(Objective::Nch)
    } else if m == n && (3..=6).contains(&m) {
        Some(Objective::MaxForm(m))
    } else {
        None
    };
    let alt = match alt_objective {
        None => None,
        Some(obj) => {
            let (am, an) = obj.shape()?;
            let r = maximize(&obj, am, an, config)?;
            Some(AltColumns {
                q: r.q,
                theta_over_pi: r.theta_max / PI,
                lambda_max: r.lambda_max,
            })
        }
    };

    Ok(TableRow {
        q: main.q,
        theta_over_pi: main.theta_max / PI,
        lambda_max: main.lambda_max,
        alt,
    })
}
