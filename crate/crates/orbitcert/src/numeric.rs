//! Non-rigorous floating-point integration: reference trajectories,
//! bifurcation scans and Newton refinement of periodic-orbit guesses.
//! Nothing in this module feeds a certificate; rigorous claims always go
//! through [`crate::flow`] and [`crate::poincare`].

use crate::polyfield::PolyField;

/// High-order f64 Taylor stepper sharing the field's coefficient
/// recurrences; accurate to near machine precision with modest steps.
pub struct TaylorF64<'f> {
    field: &'f PolyField,
    pub order: usize,
    pub tol: f64,
}

impl<'f> TaylorF64<'f> {
    pub fn new(field: &'f PolyField) -> TaylorF64<'f> {
        TaylorF64 {
            field,
            order: 24,
            tol: 1e-18,
        }
    }

    /// Solution Taylor coefficients at `x` up to `order`.
    fn coeffs(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let d = self.field.dim();
        let mut series: Vec<Vec<f64>> = vec![x.to_vec()];
        for j in 0..self.order {
            let mut fj = vec![0.0; d];
            for (i, comp) in self.field.components().iter().enumerate() {
                for m in comp {
                    // j-th coefficient of the monomial product series
                    fj[i] += m.coeff.mid() * mono_series_coeff(&series, &m.exps, j);
                }
            }
            let c: Vec<f64> = fj.iter().map(|v| v / (j + 1) as f64).collect();
            series.push(c);
        }
        series
    }

    fn propose_h(&self, series: &[Vec<f64>]) -> f64 {
        let p = series.len() - 1;
        let mut h: f64 = 0.5;
        for j in [p - 1, p] {
            let n = series[j].iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if n > 0.0 {
                h = h.min(0.8 * (self.tol / n).powf(1.0 / j as f64));
            }
        }
        h.max(1e-6)
    }

    /// One step of at most `h_max`; returns (new state, step taken).
    pub fn step(&self, x: &[f64], h_max: f64) -> (Vec<f64>, f64) {
        let series = self.coeffs(x);
        let h = self.propose_h(&series).min(h_max);
        (eval_series_f64(&series, h), h)
    }

    /// Integrate for exactly `t` time units.
    pub fn integrate(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut remaining = t;
        while remaining > 1e-14 {
            let (next, h) = self.step(&cur, remaining);
            cur = next;
            remaining -= h;
        }
        cur
    }
}

fn mono_series_coeff(series: &[Vec<f64>], exps: &[u32], j: usize) -> f64 {
    // truncated product of the factor series up to order j
    let mut prod: Option<Vec<f64>> = None;
    for (var, &e) in exps.iter().enumerate() {
        for _ in 0..e {
            let factor: Vec<f64> = series.iter().take(j + 1).map(|c| c[var]).collect();
            prod = Some(match prod {
                None => factor,
                Some(p) => {
                    let mut out = vec![0.0; j + 1];
                    for (a, pa) in p.iter().enumerate() {
                        if *pa == 0.0 {
                            continue;
                        }
                        for (b, fb) in factor.iter().take(j + 1 - a).enumerate() {
                            out[a + b] += pa * fb;
                        }
                    }
                    out
                }
            });
        }
    }
    match prod {
        None => {
            if j == 0 {
                1.0
            } else {
                0.0
            }
        }
        Some(p) => p[j],
    }
}

fn eval_series_f64(series: &[Vec<f64>], h: f64) -> Vec<f64> {
    let d = series[0].len();
    let mut acc = series.last().unwrap().clone();
    for j in (0..series.len() - 1).rev() {
        for i in 0..d {
            acc[i] = acc[i] * h + series[j][i];
        }
    }
    acc
}

/// Classic Dormand-Prince 5(4) adaptive step, used by the bifurcation
/// scanner.
pub struct Rk45<'f> {
    field: &'f PolyField,
    pub tol: f64,
}

impl<'f> Rk45<'f> {
    pub fn new(field: &'f PolyField, tol: f64) -> Rk45<'f> {
        Rk45 { field, tol }
    }

    pub fn step(&self, x: &[f64], h: f64) -> (Vec<f64>, f64) {
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
                0.0,
                0.0,
            ],
            [
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
                0.0,
            ],
            [
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let d = x.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(self.field.eval_f64(x));
        for s in 0..6 {
            let mut xs = x.to_vec();
            for (j, kj) in k.iter().enumerate() {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..d {
                        xs[i] += h * a * kj[i];
                    }
                }
            }
            k.push(self.field.eval_f64(&xs));
        }
        let mut out = x.to_vec();
        for (j, kj) in k.iter().take(6).enumerate() {
            let b = A[5][j];
            if b != 0.0 {
                for i in 0..d {
                    out[i] += h * b * kj[i];
                }
            }
        }
        // the 7th stage equals f(out) for this tableau (FSAL)
        let mut err = 0.0f64;
        let k7 = self.field.eval_f64(&out);
        for i in 0..d {
            let mut e = 0.0;
            for (j, kj) in k.iter().take(6).enumerate() {
                e += E[j] * kj[i];
            }
            e += E[6] * k7[i];
            err = err.max((h * e).abs());
        }
        (out, err)
    }

    /// Integrate for `t` with adaptive steps.
    pub fn integrate(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut remaining = t;
        let mut h = (t / 100.0).min(0.05).max(1e-6);
        while remaining > 1e-12 {
            let hh = h.min(remaining);
            let (next, err) = self.step(&cur, hh);
            if err <= self.tol || hh <= 1e-9 {
                cur = next;
                remaining -= hh;
                if err > 0.0 {
                    h = (hh * (self.tol / err).powf(0.2) * 0.9).clamp(1e-9, 0.2);
                }
            } else {
                h = (hh * (self.tol / err).powf(0.2) * 0.9).max(1e-9);
            }
        }
        cur
    }
}

/// Section-crossing event for the plane `x[coord] = level`, crossing in
/// the direction `increasing`. The detector arms only once the trajectory
/// is at least `arm_distance` beyond the section on the approach side, so
/// a start point sitting on the section is not its own crossing.
pub struct CrossingDetector {
    pub coord: usize,
    pub level: f64,
    pub increasing: bool,
    pub arm_distance: f64,
}

impl CrossingDetector {
    pub fn section_x0_increasing() -> CrossingDetector {
        CrossingDetector {
            coord: 0,
            level: 0.0,
            increasing: true,
            arm_distance: 1e-3,
        }
    }
}

impl CrossingDetector {
    /// Integrates until the next admissible crossing and returns the
    /// crossing state and elapsed time.
    pub fn next_crossing(
        &self,
        stepper: &TaylorF64,
        x: &[f64],
        t_max: f64,
    ) -> Option<(Vec<f64>, f64)> {
        let mut cur = x.to_vec();
        let mut t = 0.0;
        // move off the section first
        let mut armed = self.is_before(&cur);
        while t < t_max {
            let series = stepper.coeffs(&cur);
            let h = stepper.propose_h(&series).min(0.1);
            let next = eval_series_f64(&series, h);
            if armed && self.crossed(&cur, &next) {
                // Newton refinement in time on the series
                let mut tau = h * 0.5;
                for _ in 0..60 {
                    let xs = eval_series_f64(&series, tau);
                    let val = xs[self.coord] - self.level;
                    let speed = {
                        let f = derivative_at(&series, tau);
                        f[self.coord]
                    };
                    if speed == 0.0 {
                        break;
                    }
                    let delta = val / speed;
                    tau -= delta;
                    if !(0.0..=h).contains(&tau) {
                        tau = tau.clamp(0.0, h);
                    }
                    if delta.abs() < 1e-15 {
                        break;
                    }
                }
                let hit = eval_series_f64(&series, tau);
                return Some((hit, t + tau));
            }
            if !armed && self.is_before(&next) {
                armed = true;
            }
            cur = next;
            t += h;
        }
        None
    }

    fn is_before(&self, x: &[f64]) -> bool {
        if self.increasing {
            x[self.coord] < self.level - self.arm_distance
        } else {
            x[self.coord] > self.level + self.arm_distance
        }
    }

    fn crossed(&self, a: &[f64], b: &[f64]) -> bool {
        if self.increasing {
            a[self.coord] < self.level && b[self.coord] >= self.level
        } else {
            a[self.coord] > self.level && b[self.coord] <= self.level
        }
    }
}

fn derivative_at(series: &[Vec<f64>], h: f64) -> Vec<f64> {
    // d/dt of the series: sum j c_j h^{j-1}
    let d = series[0].len();
    let mut acc = vec![0.0; d];
    for j in (1..series.len()).rev() {
        for i in 0..d {
            acc[i] = acc[i] * h + j as f64 * series[j][i];
        }
    }
    acc
}

/// Damped Newton refinement of an n-periodic orbit of a return map, using
/// finite-difference Jacobians. `ret` maps a section point to its first
/// return. Returns refined points and the final residual norm.
pub fn refine_orbit_guesses(
    ret: &dyn Fn(&[f64]) -> Option<Vec<f64>>,
    guesses: &[Vec<f64>],
    iterations: usize,
) -> Option<(Vec<Vec<f64>>, f64)> {
    let n = guesses.len();
    let d = guesses[0].len();
    let dim = n * d;
    let mut u: Vec<f64> = guesses.iter().flatten().copied().collect();

    let residual = |u: &[f64]| -> Option<Vec<f64>> {
        let mut g = vec![0.0; dim];
        for i in 0..n {
            let xi = &u[i * d..(i + 1) * d];
            let pi = ret(xi)?;
            let j = (i + 1) % n;
            for c in 0..d {
                g[i * d + c] = pi[c] - u[j * d + c];
            }
        }
        Some(g)
    };

    let mut best_norm = f64::INFINITY;
    for _ in 0..iterations {
        let g = residual(&u)?;
        let norm = g.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        if norm < best_norm {
            best_norm = norm;
        }
        if norm < 1e-13 {
            break;
        }
        // finite-difference Jacobian of the multiple-shooting map
        let mut jac = vec![0.0; dim * dim];
        let fd = 1e-7;
        for col in 0..dim {
            let mut up = u.clone();
            up[col] += fd;
            let gp = residual(&up)?;
            for row in 0..dim {
                jac[row * dim + col] = (gp[row] - g[row]) / fd;
            }
        }
        let delta = solve_dense(&mut jac.clone(), &g, dim)?;
        // damping: accept the longest step that reduces the residual
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let cand: Vec<f64> = u
                .iter()
                .zip(&delta)
                .map(|(&ui, &di)| ui - lambda * di)
                .collect();
            if let Some(gc) = residual(&cand) {
                let cn = gc.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
                if cn < norm {
                    u = cand;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let g = residual(&u)?;
    let norm = g.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let pts = (0..n).map(|i| u[i * d..(i + 1) * d].to_vec()).collect();
    Some((pts, norm))
}

fn solve_dense(a: &mut [f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut x = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (best, mag) = (col..n)
            .map(|r| (r, a[perm[r] * n + col].abs()))
            .fold((col, -1.0), |acc, (r, m)| if m > acc.1 { (r, m) } else { acc });
        if mag < 1e-300 {
            return None;
        }
        perm.swap(col, best);
        let prow = perm[col];
        for &r in &perm[col + 1..] {
            let f = a[r * n + col] / a[prow * n + col];
            a[r * n + col] = 0.0;
            for j in col + 1..n {
                a[r * n + j] -= f * a[prow * n + j];
            }
            x[r] -= f * x[prow];
        }
    }
    let mut out = vec![0.0; n];
    for col in (0..n).rev() {
        let r = perm[col];
        let mut acc = x[r];
        for j in col + 1..n {
            acc -= a[r * n + j] * out[j];
        }
        out[col] = acc / a[r * n + col];
    }
    Some(out)
}
