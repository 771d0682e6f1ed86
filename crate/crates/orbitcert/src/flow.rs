//! Validated integration of polynomial vector fields.
//!
//! One step works in three layers:
//!
//! 1. Taylor coefficients of the solution are enclosed by the automatic
//!    recurrence `c_{j+1} = [F(c)]_j / (j+1)` (truncated series products of
//!    the field's monomials).
//! 2. An a-priori enclosure `Z` valid on `[0, h]` is certified by the Picard
//!    inclusion `x + [0,h]·F(Z) ⊆ Z`, which also certifies the Lagrange
//!    remainder `c_{p+1}(Z)·h^{p+1}` of the truncated series.
//! 3. The flowed set is kept in the doubleton form `x̂ + C·r + r0` and the
//!    chart `C` is re-orthonormalized every step (QR), which suppresses the
//!    wrapping effect across many steps.
//!
//! Integration failure of any kind is inconclusive, never a disproof.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{IBox, Interval};
use crate::matrix::{IMatrix, MatrixError, PMatrix};
use crate::polyfield::{Monomial, PolyField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("step size underflow (h < h_min): integration inconclusive")]
    StepUnderflow,
    #[error("a-priori enclosure not found after maximum attempts")]
    AprioriFailed,
    #[error("enclosure overflowed to an infinite box")]
    Overflow,
    #[error("chart matrix not invertibly enclosed: {0}")]
    Chart(#[from] MatrixError),
}

/// Integration policy; plain record, serialized into certificates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub order: usize,
    pub tol: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for StepPolicy {
    fn default() -> StepPolicy {
        StepPolicy {
            order: 20,
            tol: 1e-16,
            h_min: 1e-10,
            h_max: 0.5,
        }
    }
}

const INFLATE_FACTOR: f64 = 0.1; // relative growth per Picard attempt
const INFLATE_ABS: f64 = 1e-14;
const PICARD_ATTEMPTS: usize = 30;

/// A set in doubleton representation `{ x̂ + C·u + v : u ∈ r, v ∈ r0 }`.
#[derive(Clone, Debug)]
pub struct LohnerSet {
    pub mid: Vec<f64>,
    pub chart: PMatrix,
    pub r: IBox,
    pub r0: IBox,
}

impl LohnerSet {
    pub fn from_box(b: &IBox) -> LohnerSet {
        let mid = b.mid();
        let r = b.sub_points(&mid);
        let d = b.dim();
        LohnerSet {
            mid,
            chart: PMatrix::identity(d),
            r,
            r0: IBox::zero(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mid.len()
    }

    /// Axis-aligned hull of the represented set.
    pub fn hull(&self) -> IBox {
        let d = self.dim();
        let mut out = Vec::with_capacity(d);
        for i in 0..d {
            let mut acc = Interval::point(self.mid[i]);
            for k in 0..d {
                acc = acc.add(&Interval::point(self.chart.get(i, k)).mul(&self.r.0[k]));
            }
            acc = acc.add(&self.r0.0[i]);
            out.push(acc);
        }
        IBox(out)
    }
}

/// Result of one accepted step.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub h: f64,
    pub hull: IBox,
    pub apriori: IBox,
    pub variational: Option<IMatrix>,
}

/// Truncated solution series with per-monomial product caches.
struct TaylorSeries<'f> {
    field: &'f PolyField,
    coeffs: Vec<IBox>,
    monos: Vec<Vec<MonoSeries>>,
}

/// Incremental truncated product series for one monomial.
struct MonoSeries {
    factors: Vec<usize>,
    stages: Vec<Vec<Interval>>,
}

impl MonoSeries {
    fn new(m: &Monomial) -> MonoSeries {
        let mut factors = Vec::new();
        for (var, &e) in m.exps.iter().enumerate() {
            for _ in 0..e {
                factors.push(var);
            }
        }
        let stages = vec![Vec::new(); factors.len()];
        MonoSeries { factors, stages }
    }

    /// j-th coefficient of the product series, extending caches as needed.
    fn coeff(&mut self, x: &[IBox], j: usize) -> Interval {
        if self.factors.is_empty() {
            return if j == 0 { Interval::ONE } else { Interval::ZERO };
        }
        let ns = self.stages.len();
        for s in 0..ns {
            while self.stages[s].len() <= j {
                let jj = self.stages[s].len();
                let var = self.factors[s];
                let c = if s == 0 {
                    x[jj].0[var]
                } else {
                    let mut acc = Interval::ZERO;
                    for i in 0..=jj {
                        acc = acc.add(&self.stages[s - 1][i].mul(&x[jj - i].0[var]));
                    }
                    acc
                };
                self.stages[s].push(c);
            }
        }
        self.stages[ns - 1][j]
    }
}

impl<'f> TaylorSeries<'f> {
    fn new(field: &'f PolyField, x0: IBox) -> TaylorSeries<'f> {
        let monos = field
            .components()
            .iter()
            .map(|comp| comp.iter().map(MonoSeries::new).collect())
            .collect();
        TaylorSeries {
            field,
            coeffs: vec![x0],
            monos,
        }
    }

    /// j-th series coefficient of the field along the solution series.
    fn field_coeff(&mut self, j: usize) -> IBox {
        let d = self.field.dim();
        let mut out = Vec::with_capacity(d);
        for (i, comp) in self.field.components().iter().enumerate() {
            let mut acc = Interval::ZERO;
            for (m, ms) in comp.iter().zip(self.monos[i].iter_mut()) {
                let pc = ms.coeff(&self.coeffs, j);
                acc = acc.add(&m.coeff.mul(&pc));
            }
            out.push(acc);
        }
        IBox(out)
    }

    fn extend_to(&mut self, k: usize) {
        while self.coeffs.len() <= k {
            let j = self.coeffs.len() - 1;
            let fj = self.field_coeff(j);
            let div = Interval::point((j + 1) as f64);
            let cj = IBox(fj.0.iter().map(|c| c.div(&div).unwrap()).collect());
            self.coeffs.push(cj);
        }
    }
}

/// Variational coefficient series `V_{j+1} = (Σ A_i V_{j-i}) / (j+1)` along
/// a given solution series, where `A` is the series of the field Jacobian.
struct VariationalSeries {
    jac_monos: Vec<Vec<Vec<(Interval, MonoSeries)>>>,
    a_coeffs: Vec<IMatrix>,
    v_coeffs: Vec<IMatrix>,
}

impl VariationalSeries {
    fn new(field: &PolyField, v0: IMatrix) -> VariationalSeries {
        let jac = field.jacobian_field();
        let jac_monos = jac
            .iter()
            .map(|row| {
                row.iter()
                    .map(|entry| {
                        entry
                            .iter()
                            .map(|m| (m.coeff, MonoSeries::new(m)))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        VariationalSeries {
            jac_monos,
            a_coeffs: Vec::new(),
            v_coeffs: vec![v0],
        }
    }

    fn a_coeff(&mut self, x: &[IBox], j: usize) -> IMatrix {
        let d = self.jac_monos.len();
        while self.a_coeffs.len() <= j {
            let jj = self.a_coeffs.len();
            let mut m = IMatrix::zeros(d);
            for i in 0..d {
                for c in 0..d {
                    let mut acc = Interval::ZERO;
                    for (coeff, ms) in self.jac_monos[i][c].iter_mut() {
                        acc = acc.add(&coeff.mul(&ms.coeff(x, jj)));
                    }
                    m[(i, c)] = acc;
                }
            }
            self.a_coeffs.push(m);
        }
        self.a_coeffs[j].clone()
    }

    fn extend_to(&mut self, x: &[IBox], k: usize) {
        while self.v_coeffs.len() <= k {
            let j = self.v_coeffs.len() - 1;
            let d = self.v_coeffs[0].dim();
            let mut acc = IMatrix::zeros(d);
            for i in 0..=j {
                let a = self.a_coeff(x, i);
                acc = acc.add_mat(&a.mul_mat(&self.v_coeffs[j - i]));
            }
            let div = Interval::point((j + 1) as f64);
            let mut next = IMatrix::zeros(d);
            for r in 0..d {
                for c in 0..d {
                    next[(r, c)] = acc[(r, c)].div(&div).unwrap();
                }
            }
            self.v_coeffs.push(next);
        }
    }
}

/// Enclosures of the solution's Taylor coefficients `c_0..c_k` at `x`.
pub fn taylor_coeffs(field: &PolyField, x: &IBox, k: usize) -> Vec<IBox> {
    assert!(k >= 1);
    let mut s = TaylorSeries::new(field, x.clone());
    s.extend_to(k);
    s.coeffs
}

/// Searches for `Z` with `x + [0,h]·F(Z) ⊆ Z` (first-order Picard test).
/// `Z` then encloses every trajectory from `x` on `[0, h]`.
pub fn a_priori_enclosure(field: &PolyField, x: &IBox, h: f64) -> Option<IBox> {
    assert!(h > 0.0);
    a_priori_span(field, x, &Interval::new(0.0, h))
}

/// Picard enclosure over an arbitrary (possibly two-sided) time span
/// containing 0.
pub fn a_priori_span(field: &PolyField, x: &IBox, span: &Interval) -> Option<IBox> {
    debug_assert!(span.contains(0.0));
    let fx = field.eval(x);
    let mut z = x.add(&fx.scale(span)).inflate_rel(INFLATE_FACTOR, INFLATE_ABS);
    for _ in 0..PICARD_ATTEMPTS {
        if !z.is_finite() {
            return None;
        }
        let cand = x.add(&field.eval(&z).scale(span));
        if z.contains_box(&cand) {
            // two refinement passes tighten while preserving validity
            let mut best = cand;
            for _ in 0..2 {
                let next = x.add(&field.eval(&best).scale(span));
                if best.contains_box(&next) {
                    best = next;
                } else {
                    break;
                }
            }
            return Some(best);
        }
        z = z.hull(&cand).inflate_rel(INFLATE_FACTOR, INFLATE_ABS);
    }
    None
}

/// A-priori enclosure `W` for the variational flow on `[0, h]`:
/// `I + [0,h]·DF(Z)·W ⊆ W`.
fn variational_apriori(field: &PolyField, z: &IBox, h: f64) -> Option<IMatrix> {
    let d = field.dim();
    let span = Interval::new(0.0, h);
    let a = field.jacobian_eval(z).scale(&span);
    let eye = IMatrix::identity(d);
    let mut w = eye.clone();
    for _ in 0..PICARD_ATTEMPTS {
        if !w.is_finite() {
            return None;
        }
        let cand = eye.add_mat(&a.mul_mat(&w));
        if w.contains_mat(&cand) {
            return Some(cand);
        }
        let mut grown = w.hull(&cand);
        for i in 0..d {
            for j in 0..d {
                grown[(i, j)] = grown[(i, j)].inflate_rel(INFLATE_FACTOR, INFLATE_ABS);
            }
        }
        w = grown;
    }
    None
}

fn series_eval(coeffs: &[IBox], upto: usize, h: &Interval) -> IBox {
    let mut acc = coeffs[upto].clone();
    for j in (0..upto).rev() {
        acc = acc.scale(h).add(&coeffs[j]);
    }
    acc
}

fn series_eval_mat(coeffs: &[IMatrix], upto: usize, h: &Interval) -> IMatrix {
    let mut acc = coeffs[upto].clone();
    for j in (0..upto).rev() {
        acc = acc.scale(h).add_mat(&coeffs[j]);
    }
    acc
}

fn propose_step(coeffs: &[IBox], policy: &StepPolicy) -> f64 {
    let p = coeffs.len() - 1;
    let mut h = policy.h_max;
    for j in [p.saturating_sub(1).max(1), p] {
        let n = coeffs[j].0.iter().map(|c| c.mag()).fold(0.0, f64::max);
        if n > 0.0 {
            let cand = 0.9 * (policy.tol / n).powf(1.0 / j as f64);
            if cand.is_finite() && cand > 0.0 {
                h = h.min(cand);
            }
        }
    }
    h.clamp(policy.h_min, policy.h_max)
}

/// Internal data of an accepted step, kept so callers (the Poincaré map)
/// can re-evaluate the set and its derivative anywhere inside the step.
/// The step-start set's doubleton structure is retained so evaluations
/// stay thin in the contracted directions.
pub struct StepData {
    pub h: f64,
    mid_series: Vec<IBox>,
    var_series: Vec<IMatrix>,
    remainder_coeff: IBox,
    var_remainder_coeff: Option<IMatrix>,
    order: usize,
    start_chart: IMatrix,
    start_r: IBox,
    start_r0: IBox,
    pub apriori: IBox,
}

impl StepData {
    /// Enclosure of the flowed set at time `tau`, `tau ⊆ [0, h]`:
    /// `base + (J(τ)·C)·r + J(τ)·r0`.
    pub fn eval(&self, tau: &Interval) -> IBox {
        let (base, jac) = self.eval_parts(tau);
        base.add(&jac.mul_mat(&self.start_chart).mul_box(&self.start_r))
            .add(&jac.mul_box(&self.start_r0))
    }

    /// Mean-value decomposition at `tau`: the set is enclosed by
    /// `base + jac·chart·r + jac·r0`; callers may recombine jacobian rows
    /// to exploit the shared box parts.
    pub fn eval_parts(&self, tau: &Interval) -> (IBox, IMatrix) {
        let poly = series_eval(&self.mid_series, self.order, tau);
        let rem = self
            .remainder_coeff
            .scale(&tau.powi((self.order + 1) as u32));
        (poly.add(&rem), series_eval_mat(&self.var_series, self.order, tau))
    }

    pub fn start_chart(&self) -> &IMatrix {
        &self.start_chart
    }

    pub fn start_r(&self) -> &IBox {
        &self.start_r
    }

    pub fn start_r0(&self) -> &IBox {
        &self.start_r0
    }

    /// Encloses `∂Φ_tau/∂x` over the whole input set, `tau ⊆ [0, h]`.
    /// Only available when the step was taken with variational transport.
    pub fn eval_derivative(&self, tau: &Interval) -> Option<IMatrix> {
        let vrem = self.var_remainder_coeff.as_ref()?;
        let jac = series_eval_mat(&self.var_series, self.order, tau);
        Some(jac.add_mat(&vrem.scale(&tau.powi((self.order + 1) as u32))))
    }
}

/// One validated step from `set`; returns the advanced set, the public step
/// result and the internal step data.
pub fn one_step(
    field: &PolyField,
    set: &LohnerSet,
    policy: &StepPolicy,
    want_var: bool,
) -> Result<(LohnerSet, StepResult, StepData), FlowError> {
    one_step_with_h(field, set, policy, want_var, None)
}

/// Like [`one_step`] but with an imposed step size (used to land exactly on
/// a target time). The imposed step is still subject to the Picard check
/// and may be refused only by `StepUnderflow`.
pub fn one_step_with_h(
    field: &PolyField,
    set: &LohnerSet,
    policy: &StepPolicy,
    want_var: bool,
    forced_h: Option<f64>,
) -> Result<(LohnerSet, StepResult, StepData), FlowError> {
    let d = set.dim();
    let p = policy.order.max(2);
    let hull = set.hull();
    if !hull.is_finite() {
        return Err(FlowError::Overflow);
    }

    // series at the midpoint (for the image) and on the hull (for the
    // mean-value Jacobian of the truncated Taylor map)
    let mut sx = TaylorSeries::new(field, IBox::from_points(&set.mid));
    sx.extend_to(p);
    let mut sh = TaylorSeries::new(field, hull.clone());
    sh.extend_to(p);
    let mut vx = VariationalSeries::new(field, IMatrix::identity(d));
    vx.extend_to(&sh.coeffs, p);

    let mut h = forced_h.unwrap_or_else(|| propose_step(&sx.coeffs, policy));
    loop {
        if h < policy.h_min {
            return Err(FlowError::StepUnderflow);
        }
        let Some(z) = a_priori_enclosure(field, &hull, h) else {
            h *= 0.5;
            continue;
        };

        // Lagrange remainder from a series recentered anywhere on the step
        let mut sz = TaylorSeries::new(field, z.clone());
        sz.extend_to(p + 1);
        let rem_coeff = sz.coeffs[p + 1].clone();

        let var_data = if want_var {
            let Some(w) = variational_apriori(field, &z, h) else {
                h *= 0.5;
                continue;
            };
            let mut vz = VariationalSeries::new(field, w);
            vz.extend_to(&sz.coeffs, p + 1);
            Some(vz.v_coeffs[p + 1].clone())
        } else {
            None
        };

        let hiv = Interval::point(h);
        let hpow = hiv.powi((p + 1) as u32);
        let rem = rem_coeff.scale(&hpow);
        let y_poly = series_eval(&sx.coeffs, p, &hiv);
        let y_box = y_poly.add(&rem);
        if !y_box.is_finite() {
            return Err(FlowError::Overflow);
        }

        // mean-value Jacobian of the truncated map over the hull
        let j_t = series_eval_mat(&vx.v_coeffs, p, &hiv);

        let new_mid = y_box.mid();
        let delta = y_box.sub_points(&new_mid);

        // transported deviation: J_T·C·r + J_T·r0, rotated into a fresh
        // orthonormal chart
        let b = j_t.mul_mat(&set.chart.to_imatrix());
        let bm_mid = b.mid();
        let bm = PMatrix {
            n: d,
            data: bm_mid,
        };
        let mut order: Vec<usize> = (0..d).collect();
        let score = |j: usize| -> f64 {
            let colnorm: f64 = (0..d).map(|i| bm.get(i, j) * bm.get(i, j)).sum::<f64>().sqrt();
            self_width(&set.r.0[j]) * colnorm
        };
        order.sort_by(|&a, &bb| score(bb).partial_cmp(&score(a)).unwrap());
        let q = bm.orthonormalize_ordered(&order);
        let q_inv = q.to_imatrix().enclose_inverse()?;

        let new_r = q_inv
            .mul_mat(&b)
            .mul_box(&set.r)
            .add(&q_inv.mul_mat(&j_t).mul_box(&set.r0));
        let new_set = LohnerSet {
            mid: new_mid,
            chart: q,
            r: new_r,
            r0: delta,
        };

        let variational = var_data.as_ref().map(|vrem| {
            j_t.add_mat(&vrem.scale(&hpow))
        });

        let data = StepData {
            h,
            mid_series: sx.coeffs.clone(),
            var_series: vx.v_coeffs.clone(),
            remainder_coeff: rem_coeff,
            var_remainder_coeff: var_data,
            order: p,
            start_chart: set.chart.to_imatrix(),
            start_r: set.r.clone(),
            start_r0: set.r0.clone(),
            apriori: z.clone(),
        };
        let result = StepResult {
            h,
            hull: new_set.hull(),
            apriori: z,
            variational,
        };
        return Ok((new_set, result, data));
    }
}

fn self_width(iv: &Interval) -> f64 {
    (iv.hi() - iv.lo()).max(1e-300)
}

/// Integrates `set` for exactly `t_span` time units.
pub fn flow(
    field: &PolyField,
    set: &LohnerSet,
    t_span: f64,
    policy: &StepPolicy,
) -> Result<LohnerSet, FlowError> {
    let (s, _) = flow_impl(field, set, t_span, policy, false)?;
    Ok(s)
}

/// Integrates for exactly `t_span` and returns the final set together with
/// an enclosure of `∂Φ_{t_span}/∂x` over the initial set.
pub fn flow_with_variational(
    field: &PolyField,
    set: &LohnerSet,
    t_span: f64,
    policy: &StepPolicy,
) -> Result<(LohnerSet, IMatrix), FlowError> {
    let (s, v) = flow_impl(field, set, t_span, policy, true)?;
    Ok((s, v.expect("variational requested").hull()))
}

fn flow_impl(
    field: &PolyField,
    set: &LohnerSet,
    t_span: f64,
    policy: &StepPolicy,
    want_var: bool,
) -> Result<(LohnerSet, Option<VarTransport>), FlowError> {
    assert!(t_span > 0.0);
    let mut cur = set.clone();
    let mut var = want_var.then(|| VarTransport::identity(set.dim()));

    // remaining time kept as an exact two-float sum so the final residual
    // can be enclosed and absorbed rigorously
    let mut rem_hi = t_span;
    let mut rem_lo = 0.0f64;
    let mut steps: usize = 0;
    let guard = 4.0 * f64::EPSILON * t_span.abs() + 1e-300;

    loop {
        let remaining = rem_hi + rem_lo;
        if remaining <= guard {
            break;
        }
        let proposed = {
            let mut sx = TaylorSeries::new(field, IBox::from_points(&cur.mid));
            sx.extend_to(policy.order.max(2));
            propose_step(&sx.coeffs, policy)
        };
        let h = proposed.min(remaining);
        let (next, res, _) = one_step_with_h(field, &cur, policy, want_var, Some(h))?;
        if let (Some(vt), Some(j)) = (var.as_mut(), res.variational.as_ref()) {
            vt.advance(j, &next.chart)?;
        }
        let (s, e) = exact_sub(rem_hi, res.h);
        rem_hi = s;
        rem_lo += e;
        let (s2, e2) = exact_add(rem_hi, rem_lo);
        rem_hi = s2;
        rem_lo = e2;
        steps += 1;
        cur = next;
    }

    // residual time enclosure: |true residual - (rem_hi+rem_lo)| is bounded
    // by the accumulated two-float slack
    let slack = (steps as f64 + 1.0) * 1e-28 * (1.0 + t_span.abs()) + guard;
    let rem = rem_hi + rem_lo;
    let off = Interval::from_pair(0.0, rem).inflate(slack);
    absorb_time_residual(field, &mut cur, var.as_mut(), &off)?;
    Ok((cur, var))
}

#[inline]
fn exact_add(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn exact_sub(a: f64, b: f64) -> (f64, f64) {
    exact_add(a, -b)
}

/// Flows the set over a tiny two-sided time interval `off` (containing the
/// true residual), widening the axis-aligned remainder part only.
fn absorb_time_residual(
    field: &PolyField,
    cur: &mut LohnerSet,
    var: Option<&mut VarTransport>,
    off: &Interval,
) -> Result<(), FlowError> {
    if off.mag() == 0.0 {
        return Ok(());
    }
    let hull = cur.hull();
    let z = a_priori_span(field, &hull, off).ok_or(FlowError::AprioriFailed)?;
    let widen = field.eval(&z).scale(off);
    cur.r0 = cur.r0.add(&widen);
    if let Some(vt) = var {
        let d = field.dim();
        let a = field.jacobian_eval(&z).scale(off);
        let eye = IMatrix::identity(d);
        // W for the residual window, then DPhi_off ⊆ I + off·DF(Z)·W
        let mut w = eye.clone();
        let mut ok = false;
        for _ in 0..PICARD_ATTEMPTS {
            let cand = eye.add_mat(&a.mul_mat(&w));
            if w.contains_mat(&cand) {
                w = cand;
                ok = true;
                break;
            }
            let mut grown = w.hull(&cand);
            for i in 0..d {
                for j in 0..d {
                    grown[(i, j)] = grown[(i, j)].inflate_rel(INFLATE_FACTOR, INFLATE_ABS);
                }
            }
            w = grown;
        }
        if !ok {
            return Err(FlowError::AprioriFailed);
        }
        let dphi = eye.add_mat(&a.mul_mat(&w));
        vt.compose_left(&dphi)?;
    }
    Ok(())
}

/// Column-wise doubleton transport of an accumulated derivative matrix.
/// Each column `v` is kept as `v̂ + C·ρ + ρ0` and advanced by the step's
/// derivative enclosure, sharing the flow's freshly orthonormalized chart.
pub struct VarTransport {
    mids: Vec<Vec<f64>>,
    chart: PMatrix,
    rho: Vec<IBox>,
    rho0: Vec<IBox>,
}

impl VarTransport {
    pub fn identity(d: usize) -> VarTransport {
        let mut mids = Vec::with_capacity(d);
        for c in 0..d {
            let mut v = vec![0.0; d];
            v[c] = 1.0;
            mids.push(v);
        }
        VarTransport {
            mids,
            chart: PMatrix::identity(d),
            rho: vec![IBox::zero(d); d],
            rho0: vec![IBox::zero(d); d],
        }
    }

    /// Advance all columns by the interval matrix `j`, rotating the box
    /// parts into the chart `q`.
    pub fn advance(&mut self, j: &IMatrix, q: &PMatrix) -> Result<(), FlowError> {
        let d = self.mids.len();
        let q_inv = q.to_imatrix().enclose_inverse()?;
        let qjb = q_inv.mul_mat(&j.mul_mat(&self.chart.to_imatrix()));
        let qj = q_inv.mul_mat(j);
        for c in 0..d {
            let jv = j.mul_box(&IBox::from_points(&self.mids[c]));
            let new_mid = jv.mid();
            let delta = jv.sub_points(&new_mid);
            let new_rho = qjb.mul_box(&self.rho[c]).add(&qj.mul_box(&self.rho0[c]));
            self.mids[c] = new_mid;
            self.rho[c] = new_rho;
            self.rho0[c] = delta;
        }
        self.chart = q.clone();
        Ok(())
    }

    /// Left-multiply by an interval matrix without re-rotating (used for a
    /// final partial-step composition).
    pub fn compose_left(&mut self, j: &IMatrix) -> Result<(), FlowError> {
        self.advance(j, &self.chart.clone())
    }

    /// Hull of the accumulated matrix (columns).
    pub fn hull(&self) -> IMatrix {
        let d = self.mids.len();
        let mut out = IMatrix::zeros(d);
        for c in 0..d {
            let mut col = IBox::from_points(&self.mids[c]);
            col = col.add(&self.chart.to_imatrix().mul_box(&self.rho[c]));
            col = col.add(&self.rho0[c]);
            for i in 0..d {
                out[(i, c)] = col.0[i];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyfield::PolyField;

    fn f_exp() -> PolyField {
        PolyField::from_decimal_terms(1, &[vec![("1", vec![1])]]).unwrap()
    }

    fn f_zero() -> PolyField {
        PolyField::from_decimal_terms(1, &[vec![]]).unwrap()
    }

    fn f_square() -> PolyField {
        PolyField::from_decimal_terms(1, &[vec![("1", vec![2])]]).unwrap()
    }

    fn f_harmonic() -> PolyField {
        // x' = -y, y' = x
        PolyField::from_decimal_terms(
            2,
            &[vec![("-1", vec![0, 1])], vec![("1", vec![1, 0])]],
        )
        .unwrap()
    }

    #[test]
    fn taylor_exponential_coefficients() {
        let c = taylor_coeffs(&f_exp(), &IBox::from_points(&[1.0]), 4);
        let mut fact = 1.0;
        for (j, cj) in c.iter().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            assert!(cj.0[0].contains(1.0 / fact), "c_{j} misses 1/{j}!");
            assert!(cj.0[0].width() < 1e-15);
        }
    }

    #[test]
    fn taylor_square_field_all_ones() {
        // x' = x^2 from x0 = 1 solves to 1/(1-t): coefficients all 1
        let c = taylor_coeffs(&f_square(), &IBox::from_points(&[1.0]), 8);
        for cj in &c {
            assert!(cj.0[0].contains(1.0));
            assert!(cj.0[0].width() < 1e-12);
        }
    }

    #[test]
    fn apriori_constant_field() {
        let f = f_zero();
        let x = IBox(vec![Interval::new(-1.0, 2.0)]);
        let z = a_priori_enclosure(&f, &x, 10.0).unwrap();
        assert!(z.contains_box(&x));
        // constant field: x itself validates, possibly slightly inflated
        assert!(z.0[0].width() <= x.0[0].width() * 1.3 + 1e-10);
    }

    #[test]
    fn apriori_exponential_within_bound() {
        let z = a_priori_enclosure(&f_exp(), &IBox::from_points(&[1.0]), 0.1).unwrap();
        assert!(z.0[0].lo() >= 0.9 && z.0[0].hi() <= 1.3, "{z:?}");
    }

    #[test]
    fn apriori_blowup_fails() {
        // x' = x^2 from 1 blows up at t=1: no bounded Z can pass the test
        assert!(a_priori_enclosure(&f_square(), &IBox::from_points(&[1.0]), 1.0).is_none());
    }

    #[test]
    fn one_step_constant_field_identity() {
        let f = f_zero();
        let set = LohnerSet::from_box(&IBox(vec![Interval::new(0.5, 1.5)]));
        let policy = StepPolicy::default();
        let (next, res, _) = one_step_with_h(&f, &set, &policy, false, Some(0.25)).unwrap();
        let h = next.hull();
        assert!(h.0[0].contains_interval(&Interval::new(0.5, 1.5)));
        assert!(h.0[0].width() <= 1.0 + 1e-12);
        assert_eq!(res.h, 0.25);
    }

    #[test]
    fn e_test_tight_enclosure() {
        let f = f_exp();
        let set = LohnerSet::from_box(&IBox::from_points(&[1.0]));
        let out = flow(&f, &set, 1.0, &StepPolicy::default()).unwrap();
        let h = out.hull();
        let e = std::f64::consts::E;
        assert!(h.0[0].contains(e), "{h:?}");
        assert!(h.0[0].width() <= 1e-10, "width {}", h.0[0].width());
    }

    #[test]
    fn harmonic_full_rotation() {
        let f = f_harmonic();
        let set = LohnerSet::from_box(&IBox::from_points(&[0.0, -1.0]));
        let t = 2.0 * std::f64::consts::PI;
        let out = flow(&f, &set, t, &StepPolicy::default()).unwrap();
        let h = out.hull();
        assert!(h.0[0].contains(0.0) && h.0[1].contains(-1.0), "{h:?}");
        assert!(h.max_width() <= 1e-8, "width {}", h.max_width());
    }

    #[test]
    fn variational_constant_field_is_identity() {
        let f = f_zero();
        let set = LohnerSet::from_box(&IBox::from_points(&[1.0]));
        let (_, v) = flow_with_variational(&f, &set, 1.0, &StepPolicy::default()).unwrap();
        assert!(v[(0, 0)].contains(1.0));
        assert!(v[(0, 0)].width() < 1e-12);
    }

    #[test]
    fn variational_exponential_encloses_e() {
        let f = f_exp();
        let set = LohnerSet::from_box(&IBox::from_points(&[1.0]));
        let (_, v) = flow_with_variational(&f, &set, 1.0, &StepPolicy::default()).unwrap();
        assert!(v[(0, 0)].contains(std::f64::consts::E), "{v:?}");
        assert!(v[(0, 0)].width() <= 1e-9);
    }

    #[test]
    fn variational_harmonic_quarter_turn() {
        let f = f_harmonic();
        let set = LohnerSet::from_box(&IBox::from_points(&[0.3, -0.4]));
        let t = 0.5 * std::f64::consts::PI;
        let (_, v) = flow_with_variational(&f, &set, t, &StepPolicy::default()).unwrap();
        // rotation by pi/2: [[0,-1],[1,0]]
        assert!(v[(0, 0)].contains(0.0) && v[(0, 1)].contains(-1.0));
        assert!(v[(1, 0)].contains(1.0) && v[(1, 1)].contains(0.0));
        assert!(v.max_width() <= 1e-8, "{}", v.max_width());
    }

    #[test]
    fn order_doubling_never_worse_on_e_test() {
        let f = f_exp();
        let set = LohnerSet::from_box(&IBox::from_points(&[1.0]));
        let mut widths = Vec::new();
        for order in [10usize, 20] {
            let policy = StepPolicy {
                order,
                tol: 1e-16,
                h_min: 1e-12,
                h_max: 0.1,
            };
            // fixed step 0.1 so only the order varies
            let mut cur = set.clone();
            for _ in 0..10 {
                let (next, _, _) = one_step_with_h(&f, &cur, &policy, false, Some(0.1)).unwrap();
                cur = next;
            }
            widths.push(cur.hull().0[0].width());
        }
        assert!(widths[1] <= widths[0] * (1.0 + 1e-12), "{widths:?}");
    }
}
