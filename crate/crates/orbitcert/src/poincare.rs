//! Rigorous Poincaré return maps on a coordinate-plane section.
//!
//! A return-map evaluation integrates the embedded section box with the
//! validated flow, watches the normal coordinate, and encloses the first
//! admissible crossing. The crossing time is bracketed by bisection on the
//! step's Taylor evaluation and polished with an interval Newton step in
//! time; the crossing points are enclosed through the mean-value identity
//! `c(s) = X(t̂,s) + (T(s)-t̂)·f(E)` with `T(s)-t̂ = -x_n(t̂,s)/f_n(ξ)`,
//! which avoids smearing the set over the crossing-time window.
//! Transversality (a strict sign of the normal speed over the whole
//! window) is verified on every accepted crossing; every failure mode is
//! an inconclusive error, never a claim.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{one_step, FlowError, LohnerSet, StepData, StepPolicy, VarTransport};
use crate::interval::{IBox, Interval};
use crate::matrix::{IMatrix, MatrixError};
use crate::polyfield::PolyField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoincareError {
    #[error("input box is not in the admissible half of the section")]
    NotAdmissible,
    #[error("normal speed not bounded away from zero on the crossing window")]
    LostTransversality,
    #[error("integration step underflow: inconclusive")]
    StepUnderflow,
    #[error("trajectory enclosure left the trust region")]
    LeftTrustRegion,
    #[error("no return detected within the time horizon")]
    NoReturn,
    #[error("flow failure: {0}")]
    Flow(FlowError),
    #[error("derivative enclosure is singular: {0}")]
    Singular(#[from] MatrixError),
    #[error("crossing enclosure inconsistent (normal coordinate misses the level)")]
    Inconsistent,
    #[error("interval Newton inclusion failed")]
    NewtonFailed,
}

impl From<FlowError> for PoincareError {
    fn from(e: FlowError) -> PoincareError {
        match e {
            FlowError::StepUnderflow => PoincareError::StepUnderflow,
            other => PoincareError::Flow(other),
        }
    }
}

/// The section `{ x[normal_coord] = level }` with an admissible half and a
/// required crossing direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionDef {
    pub normal_coord: usize,
    pub level: f64,
    /// Admissibility: the `half_coord` component must be negative
    /// (`half_negative = true`) or positive on the section.
    pub half_coord: usize,
    pub half_negative: bool,
    /// Crossings must have increasing normal coordinate iff true.
    pub increasing: bool,
}

impl SectionDef {
    /// The half-plane `{x = 0, y < 0}` crossed with `x' > 0`.
    pub fn rossler_default() -> SectionDef {
        SectionDef {
            normal_coord: 0,
            level: 0.0,
            half_coord: 1,
            half_negative: true,
            increasing: true,
        }
    }

    /// Embeds section coordinates into the ambient space.
    pub fn embed(&self, yz: &IBox) -> IBox {
        let d = yz.dim() + 1;
        let mut out = Vec::with_capacity(d);
        let mut k = 0;
        for i in 0..d {
            if i == self.normal_coord {
                out.push(Interval::point(self.level));
            } else {
                out.push(yz.0[k]);
                k += 1;
            }
        }
        IBox(out)
    }

    /// Projects an ambient box onto the section coordinates.
    pub fn project(&self, x: &IBox) -> IBox {
        IBox(
            x.0.iter()
                .enumerate()
                .filter(|(i, _)| *i != self.normal_coord)
                .map(|(_, iv)| *iv)
                .collect(),
        )
    }

    fn admissible(&self, ambient: &IBox) -> bool {
        let h = &ambient.0[self.half_coord];
        if self.half_negative {
            h.hi() < 0.0
        } else {
            h.lo() > 0.0
        }
    }

    /// Normal coordinate relative to the level, positive past the section
    /// in the crossing direction.
    fn signed_normal_iv(&self, ambient: &IBox) -> Interval {
        let v = ambient.0[self.normal_coord].sub(&Interval::point(self.level));
        if self.increasing {
            v
        } else {
            v.neg()
        }
    }

    fn normal_speed(&self, f: &IBox) -> Interval {
        let v = f.0[self.normal_coord];
        if self.increasing {
            v
        } else {
            v.neg()
        }
    }
}

/// Evaluation policy for return maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincarePolicy {
    pub step: StepPolicy,
    /// Target width for the crossing-time bracket.
    pub time_tol: f64,
    /// Integration horizon; exceeding it means "no return" (inconclusive).
    pub t_max: f64,
    /// Ambient region the whole trajectory enclosure must stay inside.
    pub trust: Option<IBox>,
}

impl Default for PoincarePolicy {
    fn default() -> PoincarePolicy {
        PoincarePolicy {
            step: StepPolicy::default(),
            time_tol: 1e-12,
            t_max: 50.0,
            trust: None,
        }
    }
}

/// A certified first return.
#[derive(Clone, Debug)]
pub struct ReturnResult {
    /// Image enclosure in section coordinates.
    pub image: IBox,
    /// Return-time enclosure, strictly positive.
    pub time: Interval,
    /// Which crossing this is (always 1: first return).
    pub crossing: u32,
}

/// Rigorous first-return image of a section box.
pub fn poincare_image(
    section: &SectionDef,
    field: &PolyField,
    x: &IBox,
    policy: &PoincarePolicy,
) -> Result<ReturnResult, PoincareError> {
    let (ret, _) = return_map_impl(section, field, x, policy, false)?;
    Ok(ret)
}

/// Rigorous first-return image together with an enclosure of the return
/// map's derivative over the input box.
pub fn poincare_derivative(
    section: &SectionDef,
    field: &PolyField,
    x: &IBox,
    policy: &PoincarePolicy,
) -> Result<(ReturnResult, IMatrix), PoincareError> {
    let (ret, d) = return_map_impl(section, field, x, policy, true)?;
    Ok((ret, d.expect("derivative requested")))
}

struct WindowSegment {
    t_base: Interval,
    data: StepData,
    v_acc: Option<IMatrix>,
}

fn return_map_impl(
    section: &SectionDef,
    field: &PolyField,
    x: &IBox,
    policy: &PoincarePolicy,
    want_var: bool,
) -> Result<(ReturnResult, Option<IMatrix>), PoincareError> {
    let ambient0 = section.embed(x);
    if !section.admissible(&ambient0) {
        return Err(PoincareError::NotAdmissible);
    }
    // the required crossing direction must hold on the input itself
    let speed0 = section.normal_speed(&field.eval(&ambient0));
    if speed0.lo() <= 0.0 {
        return Err(PoincareError::NotAdmissible);
    }

    let mut cur = LohnerSet::from_box(&ambient0);
    let mut var = want_var.then(|| VarTransport::identity(ambient0.dim()));
    let mut elapsed = Interval::ZERO;
    let mut armed = false;
    let mut segments: Vec<WindowSegment> = Vec::new();
    let mut t_lo: Option<Interval> = None;
    let mut collecting = false;

    let max_steps = 100_000;
    for _ in 0..max_steps {
        if elapsed.lo() > policy.t_max {
            return Err(PoincareError::NoReturn);
        }
        let (next, res, data) = one_step(field, &cur, &policy.step, want_var)?;
        if let Some(trust) = &policy.trust {
            if !trust.contains_box(&res.apriori) {
                return Err(PoincareError::LeftTrustRegion);
            }
        }

        let sn_end = section.signed_normal_iv(&next.hull());
        let sn_apriori = section.signed_normal_iv(&res.apriori);

        if !armed {
            if sn_end.hi() < 0.0 {
                armed = true;
            }
        } else if collecting || sn_apriori.hi() >= 0.0 {
            // the crossing can happen inside this step: keep the segment
            let v_hull = var.as_ref().map(|v| v.hull());
            let seg = WindowSegment {
                t_base: elapsed,
                data,
                v_acc: v_hull,
            };
            if !collecting {
                // largest in-step time still fully before the section
                if let Some(tl) = bisect_last_before(section, &seg.data, res.h) {
                    t_lo = Some(elapsed.add(&Interval::point(tl)));
                }
            }
            let tau_hi = bisect_first_after(section, &seg.data, res.h, policy.time_tol);
            segments.push(seg);
            collecting = true;
            if let Some(th) = tau_hi {
                let t_hi = elapsed.add(&Interval::point(th));
                let t_lo = t_lo.ok_or(PoincareError::Inconsistent)?;
                return finish_crossing(section, field, policy, &segments, t_lo, t_hi, want_var);
            }
            if segments.len() > 64 {
                return Err(PoincareError::LostTransversality);
            }
        }

        if let (Some(vt), Some(j)) = (var.as_mut(), res.variational.as_ref()) {
            vt.advance(j, &next.chart)?;
        }
        elapsed = elapsed.add(&Interval::point(res.h));
        cur = next;
    }
    Err(PoincareError::NoReturn)
}

/// Largest `tau` in `[0, h]` with the evaluated set strictly before the
/// section (`None` if not even `tau = 0` qualifies).
fn bisect_last_before(section: &SectionDef, data: &StepData, h: f64) -> Option<f64> {
    let before = |tau: f64| -> bool {
        section
            .signed_normal_iv(&data.eval(&Interval::point(tau)))
            .hi()
            < 0.0
    };
    if !before(0.0) {
        return None;
    }
    if before(h) {
        return Some(h);
    }
    let (mut lo, mut hi) = (0.0f64, h);
    for _ in 0..70 {
        let mid = 0.5 * (lo + hi);
        if before(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Some(lo)
}

/// Smallest `tau` in `[0, h]` with the evaluated set strictly past the
/// section, refined to `tol`; `None` if the step does not end past it.
fn bisect_first_after(section: &SectionDef, data: &StepData, h: f64, tol: f64) -> Option<f64> {
    let after = |tau: f64| -> bool {
        section
            .signed_normal_iv(&data.eval(&Interval::point(tau)))
            .lo()
            > 0.0
    };
    if !after(h) {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, h);
    for _ in 0..70 {
        let mid = 0.5 * (lo + hi);
        if after(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < tol {
            break;
        }
    }
    Some(hi)
}

fn finish_crossing(
    section: &SectionDef,
    field: &PolyField,
    policy: &PoincarePolicy,
    segments: &[WindowSegment],
    t_lo: Interval,
    t_hi: Interval,
    want_var: bool,
) -> Result<(ReturnResult, Option<IMatrix>), PoincareError> {
    let mut t_window = Interval::new(t_lo.lo(), t_hi.hi());
    if t_window.lo() <= 0.0 {
        return Err(PoincareError::Inconsistent);
    }

    // flow enclosure over the active window, across segments
    fn active(seg: &WindowSegment, w: &Interval) -> Option<Interval> {
        let lo = (w.lo() - seg.t_base.hi()).max(0.0);
        let hi = (w.hi() - seg.t_base.lo()).min(seg.data.h);
        (lo <= hi).then(|| Interval::new(lo, hi))
    }
    let mut e_win: Option<IBox> = None;
    for seg in segments {
        if let Some(tau) = active(seg, &t_window) {
            let part = seg.data.eval(&tau);
            e_win = Some(match e_win {
                None => part,
                Some(acc) => acc.hull(&part),
            });
        }
    }
    let e_win = e_win.ok_or(PoincareError::Inconsistent)?;
    if let Some(trust) = &policy.trust {
        if !trust.contains_box(&e_win) {
            return Err(PoincareError::LeftTrustRegion);
        }
    }

    // strict transversality over the whole window
    let f_win = field.eval(&e_win);
    let speed = section.normal_speed(&f_win);
    if speed.lo() <= 0.0 {
        return Err(PoincareError::LostTransversality);
    }

    // interval Newton in time around the window midpoint
    let t_hat = t_window.mid();
    let seg_mid = segments
        .iter()
        .filter(|s| t_hat >= s.t_base.lo() && t_hat <= s.t_base.hi() + s.data.h)
        .last()
        .ok_or(PoincareError::Inconsistent)?;
    let tau_hat = Interval::point(t_hat)
        .sub(&seg_mid.t_base)
        .intersect(&Interval::new(0.0, seg_mid.data.h))
        .ok_or(PoincareError::Inconsistent)?;
    let (base, jac) = seg_mid.data.eval_parts(&tau_hat);
    let x_hat = seg_mid.data.eval(&tau_hat);
    let sn_hat = section.signed_normal_iv(&x_hat);
    let newton_t = Interval::point(t_hat).sub(
        &sn_hat
            .div(&speed)
            .map_err(|_| PoincareError::LostTransversality)?,
    );
    t_window = t_window
        .intersect(&newton_t)
        .ok_or(PoincareError::Inconsistent)?;

    // crossing points, two enclosures intersected:
    //  plain:      c(s) = X(t̂,s) + (T(s)-t̂)·f(E), with the time offset
    //              clipped to the window;
    //  structured: c_i(s) = X_i - (X_n - level)·Q_i with Q_i = f_i/f_n
    //              over E, recombining the mean-value rows so the shared
    //              deviation does not smear across coordinates.
    let d = x_hat.dim();
    let ncoord = section.normal_coord;
    let f_n = f_win.0[ncoord];
    let tcorr_raw = sn_hat
        .div(&speed)
        .map_err(|_| PoincareError::LostTransversality)?
        .neg();
    let window_rel = t_window.sub(&Interval::point(t_hat));
    let tcorr = tcorr_raw.intersect(&window_rel).unwrap_or(tcorr_raw);
    let level = Interval::point(section.level);
    let base_n = base.0[ncoord].sub(&level);
    // K = (I - Q e_nᵀ)·J, with Q_i = f_i(E)/f_n(E): rows recombined before
    // they meet the shared box parts
    let mut q = Vec::with_capacity(d);
    for i in 0..d {
        q.push(
            f_win.0[i]
                .div(&f_n)
                .map_err(|_| PoincareError::LostTransversality)?,
        );
    }
    let mut k_mat = IMatrix::zeros(d);
    for i in 0..d {
        for c in 0..d {
            k_mat[(i, c)] = jac[(i, c)].sub(&q[i].mul(&jac[(ncoord, c)]));
        }
    }
    let kc = k_mat.mul_mat(seg_mid.data.start_chart());
    let struct_part = kc
        .mul_box(seg_mid.data.start_r())
        .add(&k_mat.mul_box(seg_mid.data.start_r0()));
    let mut cross = Vec::with_capacity(d);
    for i in 0..d {
        let plain = x_hat.0[i].add(&tcorr.mul(&f_win.0[i]));
        let structured = base.0[i]
            .sub(&base_n.mul(&q[i]))
            .add(&struct_part.0[i]);
        cross.push(structured.intersect(&plain).unwrap_or(plain));
    }
    let cross = IBox(cross);
    if !cross.0[ncoord].contains(section.level) {
        return Err(PoincareError::Inconsistent);
    }
    if !section.admissible(&cross) {
        return Err(PoincareError::NotAdmissible);
    }

    let image = section.project(&cross);
    let ret = ReturnResult {
        image,
        time: t_window,
        crossing: 1,
    };

    if !want_var {
        return Ok((ret, None));
    }

    // derivative: DP = π ∘ (I - f(c)·e_nᵀ/f_n(c)) ∘ DΦ_T, with DΦ_T
    // enclosed segment-wise over the window
    let d = x_hat.dim();
    let mut dphi: Option<IMatrix> = None;
    for seg in segments {
        if let Some(tau) = active(seg, &t_window) {
            let w = seg
                .data
                .eval_derivative(&tau)
                .ok_or(PoincareError::NewtonFailed)?;
            let v0 = seg.v_acc.as_ref().ok_or(PoincareError::NewtonFailed)?;
            let total = w.mul_mat(v0);
            dphi = Some(match dphi {
                None => total,
                Some(acc) => acc.hull(&total),
            });
        }
    }
    let dphi = dphi.ok_or(PoincareError::Inconsistent)?;

    let f_cross = field.eval(&cross);
    let fx = f_cross.0[section.normal_coord];
    if fx.contains(0.0) {
        return Err(PoincareError::LostTransversality);
    }
    let mut proj = IMatrix::identity(d);
    for i in 0..d {
        let ratio = f_cross.0[i]
            .div(&fx)
            .map_err(|_| PoincareError::LostTransversality)?;
        proj[(i, section.normal_coord)] = proj[(i, section.normal_coord)].sub(&ratio);
    }
    let m = proj.mul_mat(&dphi);
    let keep: Vec<usize> = (0..d).filter(|&i| i != section.normal_coord).collect();
    let mut dp = IMatrix::zeros(keep.len());
    for (r, &i) in keep.iter().enumerate() {
        for (c, &j) in keep.iter().enumerate() {
            dp[(r, c)] = m[(i, j)];
        }
    }
    Ok((ret, Some(dp)))
}

/// An n-periodic orbit enclosure: one section box per orbit point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitEnclosure {
    pub period: usize,
    pub boxes: Vec<IBox>,
    /// Set iff the interval Newton inclusion proved existence and
    /// uniqueness of the orbit through these boxes.
    pub unique: bool,
}

/// Policy for the multiple-shooting interval Newton certification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NewtonPolicy {
    /// Initial half-width of the shooting boxes around the guesses.
    pub radius: f64,
    /// Maximum operator iterations (inclusion plus sharpening).
    pub max_iters: usize,
}

impl Default for NewtonPolicy {
    fn default() -> NewtonPolicy {
        NewtonPolicy {
            radius: 3e-9,
            max_iters: 6,
        }
    }
}

/// Certifies an n-periodic orbit of the return map by the interval Newton
/// operator on the multiple-shooting system
/// `G(u_1..u_n) = (P(u_1)-u_2, ..., P(u_n)-u_1)`.
pub fn interval_newton_orbit(
    section: &SectionDef,
    field: &PolyField,
    guesses: &[Vec<f64>],
    newton: &NewtonPolicy,
    policy: &PoincarePolicy,
) -> Result<OrbitEnclosure, PoincareError> {
    let n = guesses.len();
    assert!(n >= 1);
    let d = guesses[0].len();
    let dim = n * d;

    let mut boxes: Vec<IBox> = guesses
        .iter()
        .map(|g| {
            IBox(
                g.iter()
                    .map(|&c| Interval::new(c - newton.radius, c + newton.radius))
                    .collect(),
            )
        })
        .collect();

    let mut certified = false;
    for _ in 0..newton.max_iters {
        let mids: Vec<Vec<f64>> = boxes.iter().map(|b| b.mid()).collect();

        // residual at the midpoints (rigorous evaluations on point boxes)
        let mut g = Vec::with_capacity(dim);
        for i in 0..n {
            let ret = poincare_image(section, field, &IBox::from_points(&mids[i]), policy)?;
            let next = &mids[(i + 1) % n];
            for c in 0..d {
                g.push(ret.image.0[c].sub(&Interval::point(next[c])));
            }
        }

        // block Jacobian over the current boxes
        let mut dg = IMatrix::zeros(dim);
        for i in 0..n {
            let (_, dp) = poincare_derivative(section, field, &boxes[i], policy)?;
            for r in 0..d {
                for c in 0..d {
                    dg[(i * d + r, i * d + c)] = dp[(r, c)];
                }
            }
            // identity block may overlap the DP block when n = 1
            let j = (i + 1) % n;
            for r in 0..d {
                let cur = dg[(i * d + r, j * d + r)];
                dg[(i * d + r, j * d + r)] = cur.sub(&Interval::ONE);
            }
        }

        let delta = dg.solve(&IBox(g))?;
        // N(X) = û - DG(X)^{-1} G(û)
        let mut newton_boxes = Vec::with_capacity(n);
        for i in 0..n {
            let mut coords = Vec::with_capacity(d);
            for c in 0..d {
                coords.push(Interval::point(mids[i][c]).sub(&delta.0[i * d + c]));
            }
            newton_boxes.push(IBox(coords));
        }

        let strictly_inside = newton_boxes
            .iter()
            .zip(&boxes)
            .all(|(nb, b)| nb.subset_interior(b));

        let mut improved = false;
        let mut next_boxes = Vec::with_capacity(n);
        for (nb, b) in newton_boxes.iter().zip(&boxes) {
            match nb.intersect(b) {
                Some(x) => {
                    if x.max_width() < 0.9 * b.max_width() {
                        improved = true;
                    }
                    next_boxes.push(x);
                }
                None => return Err(PoincareError::NewtonFailed),
            }
        }
        boxes = next_boxes;
        if strictly_inside {
            certified = true;
            if !improved {
                break;
            }
        } else if !improved {
            break;
        }
    }

    if !certified {
        return Err(PoincareError::NewtonFailed);
    }
    Ok(OrbitEnclosure {
        period: n,
        boxes,
        unique: true,
    })
}

/// Interval Newton for a scalar zero: `N(X) = mid - f(mid)/f'(X)`;
/// `N(X) ⊂ int X` certifies a unique zero, and the operator is iterated
/// to sharpen the enclosure.
pub fn interval_newton_scalar(
    f: &dyn Fn(&Interval) -> Interval,
    df: &dyn Fn(&Interval) -> Interval,
    x0: &Interval,
    max_iters: usize,
) -> Option<Interval> {
    let mut x = *x0;
    let mut certified = false;
    for _ in 0..max_iters {
        let mid = Interval::point(x.mid());
        let slope = df(&x);
        let n = mid.sub(&f(&mid).div(&slope).ok()?);
        if n.subset_interior(&x) {
            certified = true;
        }
        match n.intersect(&x) {
            Some(next) => {
                let stalled = next.width() >= x.width() * 0.999;
                x = next;
                if stalled && certified {
                    break;
                }
            }
            None => return None,
        }
    }
    certified.then_some(x)
}
