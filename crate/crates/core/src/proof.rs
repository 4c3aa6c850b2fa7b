//! Decomposition proofs for algebraic CH-type inequalities.
//!
//! A certificate for `E <= 0` on the box is a tree. At a `Split` node on a
//! variable `v` with bound `V`, soundness comes from `v*L <= max(V*L, 0)`
//! for the variable's linear coefficient form `L`: the expression is bounded
//! by the pointwise maximum of its two pinned versions, so proving both
//! branches proves the node. At a `Leaf`, the expression is written exactly
//! as a non-negative rational combination of the positivity generators
//!
//! ```text
//!   -x_i*y_j <= 0,    x_i*(y_j - B) <= 0,    (x_i - A)*y_j <= 0,
//! ```
//!
//! checked by exact coefficient matching. Verification is sound: an accepted
//! certificate implies the vertex maximum is non-positive.
//!
//! Every generator vanishes at the all-zero point and pinning a variable to
//! zero never changes the constant term, so by following the all-zero
//! branches any provable expression must have constant term exactly zero at
//! every node, and a variable can only be split where its own marginal
//! coefficient is zero (pinning it to the bound would otherwise inject a
//! constant). The searcher uses both facts as exact pruning rules; every
//! split printed in the source material satisfies them.

use std::collections::HashMap;
use std::fmt;

use num::{Signed, Zero};
use thiserror::Error;

use crate::expr::{is_mixed_sign, rat, BellExpression, ExprError, Form, Party, PinValue, Rational};

/// One positivity generator scaled by a non-negative coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositivityTerm {
    pub kind: PositivityKind,
    /// x-setting index, 0-based.
    pub i: usize,
    /// y-setting index, 0-based.
    pub j: usize,
    pub coeff: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositivityKind {
    /// `-x_i * y_j`
    NegXy,
    /// `x_i * (y_j - B)`
    XYmb,
    /// `(x_i - A) * y_j`
    XmaY,
}

impl PositivityKind {
    pub fn tag(&self) -> &'static str {
        match self {
            PositivityKind::NegXy => "neg_xy",
            PositivityKind::XYmb => "x_ymb",
            PositivityKind::XmaY => "xma_y",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "neg_xy" => Some(PositivityKind::NegXy),
            "x_ymb" => Some(PositivityKind::XYmb),
            "xma_y" => Some(PositivityKind::XmaY),
            _ => None,
        }
    }
}

/// Proof tree; see the module docs for the semantics of each node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofCertificate {
    Leaf {
        terms: Vec<PositivityTerm>,
    },
    Split {
        party: Party,
        /// Index of the split variable, 0-based.
        index: usize,
        /// The variable's joint coefficients over the opposite party, dense.
        pivot: Vec<Rational>,
        /// Branch with the variable pinned to its bound.
        hi: Box<ProofCertificate>,
        /// Branch with the variable pinned to zero.
        lo: Box<ProofCertificate>,
    },
}

impl ProofCertificate {
    pub fn depth(&self) -> usize {
        match self {
            ProofCertificate::Leaf { .. } => 0,
            ProofCertificate::Split { hi, lo, .. } => 1 + hi.depth().max(lo.depth()),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            ProofCertificate::Leaf { .. } => 1,
            ProofCertificate::Split { hi, lo, .. } => hi.leaf_count() + lo.leaf_count(),
        }
    }

    pub fn first_split(&self) -> Option<(Party, usize, &[Rational])> {
        match self {
            ProofCertificate::Leaf { .. } => None,
            ProofCertificate::Split {
                party,
                index,
                pivot,
                ..
            } => Some((*party, *index, pivot.as_slice())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    NegativeCoefficient,
    TermIndexOutOfRange,
    SplitIndexOutOfRange,
    PivotLength,
    PivotMismatch,
    LeafIdentityFailed,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::NegativeCoefficient => "negative term coefficient",
            RejectReason::TermIndexOutOfRange => "positivity term index out of range",
            RejectReason::SplitIndexOutOfRange => "split index out of range",
            RejectReason::PivotLength => "pivot length does not match opposite party",
            RejectReason::PivotMismatch => {
                "pivot differs from the split variable's coefficient column"
            }
            RejectReason::LeafIdentityFailed => "leaf terms do not sum to the node expression",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Error)]
pub enum ProofError {
    #[error("certificate rejected at {path}: {reason}")]
    Rejected { path: String, reason: RejectReason },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Check a certificate against an algebraic expression. `Ok(())` means the
/// certificate proves `expr <= 0` on the whole box; rejections carry the
/// node path (`root.hi.lo...`) and the reason.
pub fn verify(expr: &BellExpression, cert: &ProofCertificate) -> Result<(), ProofError> {
    if expr.form() != Form::Algebraic {
        return Err(ExprError::WrongForm {
            expected: Form::Algebraic,
            got: expr.form(),
        }
        .into());
    }
    verify_node(expr, cert, &mut vec!["root"])
}

fn verify_node(
    expr: &BellExpression,
    cert: &ProofCertificate,
    path: &mut Vec<&'static str>,
) -> Result<(), ProofError> {
    let reject = |path: &[&str], reason: RejectReason| ProofError::Rejected {
        path: path.join("."),
        reason,
    };
    match cert {
        ProofCertificate::Leaf { terms } => {
            let (m, n) = (expr.m(), expr.n());
            // Accumulate the claimed combination and compare exactly.
            let mut joint = vec![vec![Rational::zero(); n]; m];
            let mut marg_x = vec![Rational::zero(); m];
            let mut marg_y = vec![Rational::zero(); n];
            for t in terms {
                if t.coeff.is_negative() {
                    return Err(reject(path, RejectReason::NegativeCoefficient));
                }
                if t.i >= m || t.j >= n {
                    return Err(reject(path, RejectReason::TermIndexOutOfRange));
                }
                match t.kind {
                    PositivityKind::NegXy => joint[t.i][t.j] -= &t.coeff,
                    PositivityKind::XYmb => {
                        joint[t.i][t.j] += &t.coeff;
                        marg_x[t.i] -= &t.coeff;
                    }
                    PositivityKind::XmaY => {
                        joint[t.i][t.j] += &t.coeff;
                        marg_y[t.j] -= &t.coeff;
                    }
                }
            }
            let ok = expr.const_term().is_zero()
                && (0..m).all(|i| marg_x[i] == *expr.marg(Party::X, i))
                && (0..n).all(|j| marg_y[j] == *expr.marg(Party::Y, j))
                && (0..m).all(|i| (0..n).all(|j| joint[i][j] == *expr.joint(i, j)));
            if ok {
                Ok(())
            } else {
                Err(reject(path, RejectReason::LeafIdentityFailed))
            }
        }
        ProofCertificate::Split {
            party,
            index,
            pivot,
            hi,
            lo,
        } => {
            if *index >= expr.settings(*party) {
                return Err(reject(path, RejectReason::SplitIndexOutOfRange));
            }
            let opposite = match party {
                Party::X => expr.n(),
                Party::Y => expr.m(),
            };
            if pivot.len() != opposite {
                return Err(reject(path, RejectReason::PivotLength));
            }
            if *pivot != expr.column(*party, *index) {
                return Err(reject(path, RejectReason::PivotMismatch));
            }
            let hi_expr = expr.substitute_bound(*party, *index, PinValue::Bound)?;
            let lo_expr = expr.substitute_bound(*party, *index, PinValue::Zero)?;
            path.push("hi");
            verify_node(&hi_expr, hi, path)?;
            path.pop();
            path.push("lo");
            verify_node(&lo_expr, lo, path)?;
            path.pop();
            Ok(())
        }
    }
}

/// Exact non-negative decomposition over the positivity generators, or
/// `None` when the expression is not in the cone.
///
/// The coefficient-matching system is solved as an exact rational linear
/// feasibility problem (phase-1 simplex with Bland's rule): variables are
/// the `3*m*n` generator coefficients, equations match every joint entry
/// and every marginal; no generator can produce a constant.
pub fn cone_member(expr: &BellExpression) -> Option<Vec<PositivityTerm>> {
    if expr.form() != Form::Algebraic {
        return None;
    }
    if !expr.const_term().is_zero() {
        return None;
    }
    let (m, n) = (expr.m(), expr.n());
    // Necessary signs: generators only subtract from marginals.
    for i in 0..m {
        if expr.marg(Party::X, i).is_positive() {
            return None;
        }
    }
    for j in 0..n {
        if expr.marg(Party::Y, j).is_positive() {
            return None;
        }
    }

    // Variable layout: columns 3*(i*n+j) + {0,1,2} hold the NegXy, XYmb,
    // XmaY coefficients of cell (i, j).
    let cols = 3 * m * n;
    let rows = m * n + m + n;
    let mut a = vec![vec![Rational::zero(); cols]; rows];
    let mut b = vec![Rational::zero(); rows];
    for i in 0..m {
        for j in 0..n {
            let r = i * n + j;
            let c = 3 * (i * n + j);
            a[r][c] = rat(-1);
            a[r][c + 1] = rat(1);
            a[r][c + 2] = rat(1);
            b[r] = expr.joint(i, j).clone();
        }
    }
    for i in 0..m {
        let r = m * n + i;
        for j in 0..n {
            a[r][3 * (i * n + j) + 1] = rat(-1);
        }
        b[r] = expr.marg(Party::X, i).clone();
    }
    for j in 0..n {
        let r = m * n + m + j;
        for i in 0..m {
            a[r][3 * (i * n + j) + 2] = rat(-1);
        }
        b[r] = expr.marg(Party::Y, j).clone();
    }

    let solution = solve_eq_nonneg(a, b)?;
    let mut terms = Vec::new();
    for i in 0..m {
        for j in 0..n {
            let base = 3 * (i * n + j);
            for (offset, kind) in [
                (0, PositivityKind::NegXy),
                (1, PositivityKind::XYmb),
                (2, PositivityKind::XmaY),
            ] {
                let coeff = &solution[base + offset];
                if !coeff.is_zero() {
                    terms.push(PositivityTerm {
                        kind,
                        i,
                        j,
                        coeff: coeff.clone(),
                    });
                }
            }
        }
    }
    Some(terms)
}

/// Exact phase-1 simplex: find `c >= 0` with `A c = b`, if any.
fn solve_eq_nonneg(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let rows = a.len();
    if rows == 0 {
        return Some(Vec::new());
    }
    let cols = a[0].len();
    for r in 0..rows {
        if b[r].is_negative() {
            b[r] = -b[r].clone();
            for v in a[r].iter_mut() {
                *v = -v.clone();
            }
        }
    }
    // Tableau columns: structural 0..cols, artificial cols..cols+rows, rhs.
    let width = cols + rows + 1;
    let mut t = vec![vec![Rational::zero(); width]; rows];
    for r in 0..rows {
        for c in 0..cols {
            t[r][c] = a[r][c].clone();
        }
        t[r][cols + r] = rat(1);
        t[r][width - 1] = b[r].clone();
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();
    // Phase-1 objective: minimize the artificial sum. With the artificial
    // basis the reduced cost of column c starts at -sum_r t[r][c].
    let mut obj = vec![Rational::zero(); width];
    for row in &t {
        for (c, v) in row.iter().enumerate() {
            obj[c] -= v;
        }
    }

    loop {
        // Bland: entering column = smallest structural index with negative
        // reduced cost. Artificial columns never re-enter.
        let entering = obj.iter().take(cols).position(|v| v.is_negative());
        let Some(e) = entering else { break };
        // Ratio test, ties to the smallest basis variable (Bland).
        let mut leave: Option<(usize, Rational)> = None;
        for r in 0..rows {
            if t[r][e].is_positive() {
                let ratio = &t[r][width - 1] / &t[r][e];
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio || (ratio == *lratio && basis[r] < basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((lr, _)) = leave else {
            // Phase-1 is bounded below by zero, so this cannot happen; bail
            // out rather than loop.
            return None;
        };
        // Pivot on (lr, e).
        let pivot = t[lr][e].clone();
        for v in t[lr].iter_mut() {
            *v = &*v / &pivot;
        }
        for r in 0..rows {
            if r != lr && !t[r][e].is_zero() {
                let f = t[r][e].clone();
                for c in 0..width {
                    let sub = &t[lr][c] * &f;
                    t[r][c] -= sub;
                }
            }
        }
        if !obj[e].is_zero() {
            let f = obj[e].clone();
            for c in 0..width {
                let sub = &t[lr][c] * &f;
                obj[c] -= sub;
            }
        }
        basis[lr] = e;
    }

    // Feasible iff every artificial contribution is zero.
    for r in 0..rows {
        if basis[r] >= cols && !t[r][width - 1].is_zero() {
            return None;
        }
    }
    let mut solution = vec![Rational::zero(); cols];
    for r in 0..rows {
        if basis[r] < cols {
            solution[basis[r]] = t[r][width - 1].clone();
        }
    }
    Some(solution)
}

/// Find a certificate for `expr <= 0`, or `None` within the depth budget.
///
/// At each node the searcher first tries exact cone membership; failing
/// that, it splits on one variable and recurses into both branches with
/// backtracking. Split candidates are the variables with a zero marginal
/// coefficient and a non-zero column (see module docs), ordered mixed-sign
/// columns first, then by ascending count of non-zero column entries, y
/// before x, lowest index first. The ordering is deterministic, so the
/// returned certificate is too.
pub fn search(
    expr: &BellExpression,
    max_depth: usize,
) -> Result<Option<ProofCertificate>, ProofError> {
    if expr.form() != Form::Algebraic {
        return Err(ExprError::WrongForm {
            expected: Form::Algebraic,
            got: expr.form(),
        }
        .into());
    }
    let mut memo = HashMap::new();
    Ok(search_node(expr, max_depth, &mut memo))
}

enum MemoEntry {
    Found(ProofCertificate),
    FailedAt(usize),
}

fn memo_key(expr: &BellExpression) -> String {
    use std::fmt::Write;
    let mut key = String::new();
    for i in 0..expr.m() {
        for j in 0..expr.n() {
            let _ = write!(key, "{},", expr.joint(i, j));
        }
    }
    for i in 0..expr.m() {
        let _ = write!(key, "{};", expr.marg(Party::X, i));
    }
    for j in 0..expr.n() {
        let _ = write!(key, "{};", expr.marg(Party::Y, j));
    }
    let _ = write!(key, "{}", expr.const_term());
    key
}

fn split_candidates(expr: &BellExpression) -> Vec<(Party, usize, Vec<Rational>)> {
    let mut cands = Vec::new();
    for party in [Party::X, Party::Y] {
        for index in 0..expr.settings(party) {
            if !expr.marg(party, index).is_zero() {
                continue;
            }
            let col = expr.column(party, index);
            if col.iter().all(Zero::is_zero) {
                continue;
            }
            cands.push((party, index, col));
        }
    }
    cands.sort_by_key(|(party, index, col)| {
        let mixed_last = u8::from(!is_mixed_sign(col));
        let nonzeros = col.iter().filter(|c| !c.is_zero()).count();
        let party_rank = match party {
            Party::Y => 0u8,
            Party::X => 1u8,
        };
        (mixed_last, nonzeros, party_rank, *index)
    });
    cands
}

fn search_node(
    expr: &BellExpression,
    depth: usize,
    memo: &mut HashMap<String, MemoEntry>,
) -> Option<ProofCertificate> {
    // No generator or zero-pin can produce a constant, so a provable node
    // has constant term exactly zero.
    if !expr.const_term().is_zero() {
        return None;
    }
    let key = memo_key(expr);
    match memo.get(&key) {
        Some(MemoEntry::Found(cert)) => return Some(cert.clone()),
        Some(MemoEntry::FailedAt(d)) if depth <= *d => return None,
        _ => {}
    }
    if let Some(terms) = cone_member(expr) {
        let cert = ProofCertificate::Leaf { terms };
        memo.insert(key, MemoEntry::Found(cert.clone()));
        return Some(cert);
    }
    if depth > 0 {
        for (party, index, pivot) in split_candidates(expr) {
            let hi_expr = expr
                .substitute_bound(party, index, PinValue::Bound)
                .expect("candidate index is in range");
            let Some(hi) = search_node(&hi_expr, depth - 1, memo) else {
                continue;
            };
            let lo_expr = expr
                .substitute_bound(party, index, PinValue::Zero)
                .expect("candidate index is in range");
            let Some(lo) = search_node(&lo_expr, depth - 1, memo) else {
                continue;
            };
            let cert = ProofCertificate::Split {
                party,
                index,
                pivot,
                hi: Box::new(hi),
                lo: Box::new(lo),
            };
            memo.insert(key, MemoEntry::Found(cert.clone()));
            return Some(cert);
        }
    }
    let update = match memo.get(&key) {
        Some(MemoEntry::FailedAt(d)) => depth > *d,
        Some(MemoEntry::Found(_)) => false,
        None => true,
    };
    if update {
        memo.insert(key, MemoEntry::FailedAt(depth));
    }
    None
}

/// Default search depth: each split eliminates one variable.
pub fn default_depth(expr: &BellExpression) -> usize {
    expr.m() + expr.n()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Builtin;
    use crate::lhv::{is_valid_bellch, vertex_max};

    /// Expression of one positivity generator in the ambient `(m, n)` shape.
    fn generator_expression(
        kind: PositivityKind,
        i: usize,
        j: usize,
        m: usize,
        n: usize,
    ) -> BellExpression {
        let mut joint = vec![vec![Rational::zero(); n]; m];
        let mut marg_x = vec![Rational::zero(); m];
        let mut marg_y = vec![Rational::zero(); n];
        match kind {
            PositivityKind::NegXy => joint[i][j] = rat(-1),
            PositivityKind::XYmb => {
                joint[i][j] = rat(1);
                marg_x[i] = rat(-1);
            }
            PositivityKind::XmaY => {
                joint[i][j] = rat(1);
                marg_y[j] = rat(-1);
            }
        }
        BellExpression::new(joint, marg_x, marg_y, Rational::zero(), Form::Algebraic)
            .expect("generator shape is valid")
    }

    fn term(kind: PositivityKind, i: usize, j: usize, coeff: i64) -> PositivityTerm {
        PositivityTerm {
            kind,
            i,
            j,
            coeff: rat(coeff),
        }
    }

    /// The printed two-branch certificate for the 2x2 inequality: split on
    /// y_2 with pivot x_1 - x_2, leaves (x1-A)y1 + x2(y1-B) and
    /// (x2-A)y1 + x1(y1-B).
    fn i2222_certificate() -> ProofCertificate {
        ProofCertificate::Split {
            party: Party::Y,
            index: 1,
            pivot: vec![rat(1), rat(-1)],
            hi: Box::new(ProofCertificate::Leaf {
                terms: vec![
                    term(PositivityKind::XmaY, 0, 0, 1),
                    term(PositivityKind::XYmb, 1, 0, 1),
                ],
            }),
            lo: Box::new(ProofCertificate::Leaf {
                terms: vec![
                    term(PositivityKind::XmaY, 1, 0, 1),
                    term(PositivityKind::XYmb, 0, 0, 1),
                ],
            }),
        }
    }

    #[test]
    fn verify_accepts_printed_i2222_certificate() {
        let e = BellExpression::builtin(Builtin::I2222);
        verify(&e, &i2222_certificate()).unwrap();
    }

    #[test]
    fn verify_rejects_negated_leaf_coefficient() {
        let e = BellExpression::builtin(Builtin::I2222);
        let mut cert = i2222_certificate();
        if let ProofCertificate::Split { hi, .. } = &mut cert {
            if let ProofCertificate::Leaf { terms } = hi.as_mut() {
                terms[0].coeff = rat(-1);
            }
        }
        let err = verify(&e, &cert).unwrap_err();
        match err {
            ProofError::Rejected { path, reason } => {
                assert_eq!(path, "root.hi");
                assert_eq!(reason, RejectReason::NegativeCoefficient);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn verify_rejects_pivot_mismatch() {
        let e = BellExpression::builtin(Builtin::I2222);
        let mut cert = i2222_certificate();
        if let ProofCertificate::Split { pivot, .. } = &mut cert {
            pivot[1] = rat(1);
        }
        let err = verify(&e, &cert).unwrap_err();
        match err {
            ProofError::Rejected { path, reason } => {
                assert_eq!(path, "root");
                assert_eq!(reason, RejectReason::PivotMismatch);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn cone_member_single_generator() {
        let e = generator_expression(PositivityKind::NegXy, 0, 0, 1, 1);
        let terms = cone_member(&e).unwrap();
        assert_eq!(terms, vec![term(PositivityKind::NegXy, 0, 0, 1)]);
    }

    #[test]
    fn cone_member_mixed_witness_reverifies() {
        // x1y1 - x1B - Ay1 = a*x1(y1-B) + (1-a)*(x1-A)y1 for some a in [0,1].
        let e = BellExpression::from_ints(&[&[1]], &[-1], &[-1], 0, Form::Algebraic);
        let terms = cone_member(&e).unwrap();
        verify(&e, &ProofCertificate::Leaf { terms }).unwrap();
    }

    #[test]
    fn cone_member_rejects_positive_product() {
        let e = BellExpression::from_ints(&[&[1]], &[0], &[0], 0, Form::Algebraic);
        assert!(cone_member(&e).is_none());
    }

    #[test]
    fn cone_member_rejects_constants() {
        let e = BellExpression::from_ints(&[&[0]], &[0], &[0], -1, Form::Algebraic);
        assert!(cone_member(&e).is_none());
    }

    /// Leaf terms are a multiset; compare certificates modulo term order.
    fn normalize(cert: &ProofCertificate) -> ProofCertificate {
        match cert {
            ProofCertificate::Leaf { terms } => {
                let mut terms = terms.clone();
                terms.sort_by_key(|t| (t.i, t.j, t.kind.tag()));
                ProofCertificate::Leaf { terms }
            }
            ProofCertificate::Split {
                party,
                index,
                pivot,
                hi,
                lo,
            } => ProofCertificate::Split {
                party: *party,
                index: *index,
                pivot: pivot.clone(),
                hi: Box::new(normalize(hi)),
                lo: Box::new(normalize(lo)),
            },
        }
    }

    #[test]
    fn search_finds_the_printed_i2222_certificate() {
        let e = BellExpression::builtin(Builtin::I2222);
        let cert = search(&e, 4).unwrap().expect("certificate exists");
        assert_eq!(normalize(&cert), normalize(&i2222_certificate()));
        verify(&e, &cert).unwrap();
    }

    #[test]
    fn search_proves_chain_members_with_the_last_y_pivot() {
        for k in 2..=5 {
            let e = BellExpression::gen_ikk(k).unwrap();
            let cert = search(&e, 2 * k)
                .unwrap()
                .expect("chain members are provable");
            verify(&e, &cert).unwrap();
            let (party, index, pivot) = cert.first_split().unwrap();
            assert_eq!((party, index), (Party::Y, k - 1));
            let mut expect = vec![rat(0); k];
            expect[0] = rat(1);
            expect[1] = rat(-1);
            assert_eq!(pivot, expect.as_slice());
        }
    }

    #[test]
    fn search_proves_symmetric_i3() {
        let e = BellExpression::builtin(Builtin::I3322Sym);
        let cert = search(&e, 6).unwrap().expect("provable");
        verify(&e, &cert).unwrap();
    }

    #[test]
    fn search_proves_i5322_with_the_x4_pivot() {
        let e = BellExpression::builtin(Builtin::I5322);
        let cert = search(&e, 8).unwrap().expect("provable");
        verify(&e, &cert).unwrap();
        let (party, index, pivot) = cert.first_split().unwrap();
        assert_eq!((party, index), (Party::X, 3));
        assert_eq!(pivot, vec![rat(1), rat(0), rat(-1)].as_slice());
    }

    #[test]
    fn search_returns_none_for_invalid_variants() {
        // (2,2) joint sign flipped to +1: invalid, so no certificate exists.
        let flipped =
            BellExpression::from_ints(&[&[1, 1], &[1, 1]], &[-1, 0], &[-1, 0], 0, Form::Algebraic);
        assert!(!is_valid_bellch(&flipped).unwrap());
        assert!(search(&flipped, 8).unwrap().is_none());

        // Fully negated inequality: also invalid.
        let negated =
            BellExpression::from_ints(&[&[-1, -1], &[-1, 1]], &[1, 0], &[1, 0], 0, Form::Algebraic);
        assert!(!is_valid_bellch(&negated).unwrap());
        assert!(search(&negated, 8).unwrap().is_none());
    }

    fn add_scaled(a: &BellExpression, g: &BellExpression, c: &Rational) -> BellExpression {
        let (m, n) = (a.m(), a.n());
        let joint = (0..m)
            .map(|i| (0..n).map(|j| a.joint(i, j) + g.joint(i, j) * c).collect())
            .collect();
        let marg_x = (0..m)
            .map(|i| a.marg(Party::X, i) + g.marg(Party::X, i) * c)
            .collect();
        let marg_y = (0..n)
            .map(|j| a.marg(Party::Y, j) + g.marg(Party::Y, j) * c)
            .collect();
        BellExpression::new(
            joint,
            marg_x,
            marg_y,
            a.const_term().clone(),
            Form::Algebraic,
        )
        .unwrap()
    }

    #[test]
    fn random_cone_combinations_round_trip_as_leaves() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let one = rat(1);
        for _ in 0..60 {
            let m = rng.gen_range(2..=4);
            let n = rng.gen_range(2..=4);
            let mut acc = BellExpression::new(
                vec![vec![Rational::zero(); n]; m],
                vec![Rational::zero(); m],
                vec![Rational::zero(); n],
                Rational::zero(),
                Form::Algebraic,
            )
            .unwrap();
            for i in 0..m {
                for j in 0..n {
                    for kind in [
                        PositivityKind::NegXy,
                        PositivityKind::XYmb,
                        PositivityKind::XmaY,
                    ] {
                        let c = rng.gen_range(0..=2);
                        if c > 0 {
                            let g = generator_expression(kind, i, j, m, n);
                            acc = add_scaled(&acc, &g, &rat(c));
                        }
                    }
                }
            }
            let (vm, _) = vertex_max(&acc, &one, &one).unwrap();
            assert!(!vm.is_positive());
            let cert = search(&acc, m + n)
                .unwrap()
                .expect("cone members are leaves");
            assert_eq!(cert.depth(), 0);
            verify(&acc, &cert).unwrap();
        }
    }

    #[test]
    fn search_soundness_on_shifted_random_expressions() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let one = rat(1);
        for _ in 0..60 {
            let m = rng.gen_range(2..=4);
            let n = rng.gen_range(2..=4);
            let joint = (0..m)
                .map(|_| (0..n).map(|_| rat(rng.gen_range(-2..=2))).collect())
                .collect();
            let marg_x = (0..m).map(|_| rat(rng.gen_range(-2..=0))).collect();
            let marg_y = (0..n).map(|_| rat(rng.gen_range(-2..=0))).collect();
            let e = BellExpression::new(joint, marg_x, marg_y, Rational::zero(), Form::Algebraic)
                .unwrap();
            // Shift the constant so the vertex maximum is exactly zero: the
            // result is a valid, tight inequality.
            let (vm, _) = vertex_max(&e, &one, &one).unwrap();
            let tight = BellExpression::new(
                (0..m)
                    .map(|i| (0..n).map(|j| e.joint(i, j).clone()).collect())
                    .collect(),
                (0..m).map(|i| e.marg(Party::X, i).clone()).collect(),
                (0..n).map(|j| e.marg(Party::Y, j).clone()).collect(),
                -vm,
                Form::Algebraic,
            )
            .unwrap();
            assert!(is_valid_bellch(&tight).unwrap());
            if let Some(cert) = search(&tight, m + n).unwrap() {
                verify(&tight, &cert).unwrap();
            }
        }
    }
}
