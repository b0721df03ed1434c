use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Problems with at most this many free variables are solved in exact arithmetic by default.
pub const EXACT_MAX_VARS: usize = 12;
const FLOAT_EPS: f64 = 1e-10;
const BLAND_AFTER: usize = 30;

/// Ordered field used by the tableau.
pub trait LpScalar: Clone + Debug {
    const EXACT: bool;
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn lt(&self, o: &Self) -> bool;
    fn to_rational(&self) -> Option<BigRational> {
        None
    }
}

impl LpScalar for f64 {
    const EXACT: bool = false;
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        self.abs() <= FLOAT_EPS
    }
    fn is_pos(&self) -> bool {
        *self > FLOAT_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -FLOAT_EPS
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
}

impl LpScalar for BigRational {
    const EXACT: bool = true;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(x: f64) -> Self {
        rationalize(x)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }
}

/// Recovers p/q (q ≤ 10⁹) when p/q rounds to exactly x; otherwise the exact binary value.
pub fn rationalize(x: f64) -> BigRational {
    assert!(x.is_finite(), "non-finite LP coefficient");
    if x == x.trunc() && x.abs() < 1e15 {
        return BigRational::from_integer(BigInt::from(x as i64));
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x.abs();
    for _ in 0..64 {
        let a = r.floor();
        if a > 1e12 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > 1_000_000_000 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64) / (k1 as f64) == x.abs() {
            let q = BigRational::new(BigInt::from(h1), BigInt::from(k1));
            return if x < 0.0 { -q } else { q };
        }
        let frac = r - a;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    BigRational::from_float(x).expect("finite")
}

/// maximize c·x subject to rows·x ≤ rhs, x free.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub nvars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
}

impl LinearProgram {
    pub fn new(nvars: usize) -> Self {
        LinearProgram {
            nvars,
            objective: vec![0.0; nvars],
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self) -> usize {
        self.nvars += 1;
        self.objective.push(0.0);
        self.nvars - 1
    }

    pub fn le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push((coeffs, rhs));
    }

    pub fn eq(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        let neg = coeffs.iter().map(|&(i, v)| (i, -v)).collect();
        self.rows.push((coeffs, rhs));
        self.rows.push((neg, -rhs));
    }

    /// Largest violation of a row at x.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|(r, b)| r.iter().map(|&(i, v)| v * x[i]).sum::<f64>() - b)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpMode {
    Auto,
    Exact,
    Float,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub exact: bool,
    /// |primal − dual| objective and the largest primal row violation.
    pub duality_gap: f64,
    pub max_violation: f64,
    pub pivots: usize,
    /// Exact optimum when solved over the rationals.
    #[serde(skip)]
    pub rational: Option<BigRational>,
}

#[derive(Clone, Debug)]
pub enum LpStatus {
    Optimal(LpSolution),
    Unbounded,
    Infeasible,
}

impl LpStatus {
    pub fn optimal(self) -> Result<LpSolution> {
        match self {
            LpStatus::Optimal(s) => Ok(s),
            LpStatus::Unbounded => Err(Error::Degenerate),
            LpStatus::Infeasible => Err(Error::Lp("infeasible".into())),
        }
    }
}

pub fn solve(lp: &LinearProgram, mode: LpMode) -> LpStatus {
    let exact = match mode {
        LpMode::Exact => true,
        LpMode::Float => false,
        LpMode::Auto => lp.nvars <= EXACT_MAX_VARS,
    };
    if exact {
        solve_with::<BigRational>(lp)
    } else {
        solve_with::<f64>(lp)
    }
}

struct Tableau<T> {
    a: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    pivots: usize,
}

impl<T: LpScalar> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize, cost: &mut [T], obj: &mut T) {
        let p = self.a[r][c].clone();
        for v in self.a[r].iter_mut() {
            *v = v.div(&p);
        }
        self.rhs[r] = self.rhs[r].div(&p);
        let prow = self.a[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.a.len() {
            if i == r {
                continue;
            }
            if self.a[i][c].is_zero() {
                self.a[i][c] = T::zero();
                continue;
            }
            let f = self.a[i][c].clone();
            for (v, pv) in self.a[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v = v.sub(&f.mul(pv));
                }
            }
            self.a[i][c] = T::zero();
            self.rhs[i] = self.rhs[i].sub(&f.mul(&prhs));
        }
        let f = cost[c].clone();
        if !f.is_zero() {
            for (v, pv) in cost.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v = v.sub(&f.mul(pv));
                }
            }
            *obj = obj.sub(&f.mul(&prhs));
        }
        cost[c] = T::zero();
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimizes with reduced costs `cost` over columns < `ncols`; false if unbounded.
    fn run(&mut self, cost: &mut [T], obj: &mut T, ncols: usize) -> bool {
        let mut degenerate = 0usize;
        loop {
            let bland = T::EXACT || degenerate > BLAND_AFTER;
            let mut enter = None;
            for j in 0..ncols {
                if cost[j].is_neg() {
                    match enter {
                        None => enter = Some(j),
                        Some(e) if !bland && cost[j].lt(&cost[e]) => enter = Some(j),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some(c) = enter else { return true };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.a.len() {
                if self.a[i][c].is_pos() {
                    let ratio = self.rhs[i].div(&self.a[i][c]);
                    let better = match &leave {
                        None => true,
                        Some((l, best)) => ratio.lt(best) || (!ratio.sub(best).is_pos() && !best.sub(&ratio).is_pos() && self.basis[i] < self.basis[*l]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else { return false };
            if ratio.is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c, cost, obj);
        }
    }
}

/// Two-phase simplex on the dual: min b·y, Aᵀy = c, y ≥ 0. The primal x is read off the
/// reduced costs of the artificial columns.
fn solve_with<T: LpScalar>(lp: &LinearProgram) -> LpStatus {
    let m = lp.nvars;
    let n = lp.rows.len();
    let mut a = vec![vec![T::zero(); n + m]; m];
    let mut sign = vec![T::one(); m];
    let mut rhs: Vec<T> = lp.objective.iter().map(|&v| T::from_f64(v)).collect();
    for (j, (row, _)) in lp.rows.iter().enumerate() {
        for &(i, v) in row {
            a[i][j] = a[i][j].add(&T::from_f64(v));
        }
    }
    for i in 0..m {
        if rhs[i].is_neg() {
            sign[i] = sign[i].neg();
            rhs[i] = rhs[i].neg();
            for v in a[i].iter_mut().take(n) {
                *v = v.neg();
            }
        }
        a[i][n + i] = T::one();
    }
    let mut tab = Tableau {
        a,
        rhs,
        basis: (n..n + m).collect(),
        pivots: 0,
    };

    // phase 1: minimize the sum of artificials
    let mut cost = vec![T::zero(); n + m];
    let mut obj = T::zero();
    for i in 0..m {
        for j in 0..n {
            cost[j] = cost[j].sub(&tab.a[i][j]);
        }
        obj = obj.sub(&tab.rhs[i]);
    }
    tab.run(&mut cost, &mut obj, n);
    if obj.is_neg() {
        // the dual is infeasible: the primal is unbounded (x = 0 feasible) or infeasible
        return if lp.rows.iter().all(|(_, b)| *b >= 0.0) {
            LpStatus::Unbounded
        } else {
            LpStatus::Infeasible
        };
    }
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(c) = (0..n).find(|&j| !tab.a[r][j].is_zero()) {
                let mut dummy = vec![T::zero(); n + m];
                let mut d0 = T::zero();
                tab.pivot(r, c, &mut dummy, &mut d0);
            }
        }
    }

    // phase 2
    let b: Vec<T> = lp.rows.iter().map(|(_, v)| T::from_f64(*v)).collect();
    let mut cost: Vec<T> = b.iter().cloned().chain((0..m).map(|_| T::zero())).collect();
    let mut obj = T::zero();
    for r in 0..m {
        let cb = if tab.basis[r] < n { b[tab.basis[r]].clone() } else { T::zero() };
        if cb.is_zero() {
            continue;
        }
        for j in 0..n + m {
            cost[j] = cost[j].sub(&cb.mul(&tab.a[r][j]));
        }
        obj = obj.sub(&cb.mul(&tab.rhs[r]));
    }
    if !tab.run(&mut cost, &mut obj, n) {
        return LpStatus::Infeasible;
    }
    let dual_value = obj.neg();
    let x_exact: Vec<T> = (0..m).map(|i| cost[n + i].neg().mul(&sign[i])).collect();
    let x: Vec<f64> = x_exact.iter().map(|v| v.to_f64()).collect();
    let primal_value: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let value = dual_value.to_f64();
    LpStatus::Optimal(LpSolution {
        value,
        duality_gap: (primal_value - value).abs(),
        max_violation: lp.max_violation(&x),
        x,
        exact: T::EXACT,
        pivots: tab.pivots,
        rational: dual_value.to_rational(),
    })
}
