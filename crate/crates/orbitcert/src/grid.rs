//! Contracting grids: an outer parallelogram around an attracting periodic
//! orbit, one inner cube per orbit point, and a cyclic successor map.
//!
//! `verify_contracting_grid` establishes, by adaptive subdivision and a
//! rigorous map evaluator, that the outer set maps strictly into its own
//! interior and every (clipped) cube maps strictly into the interior of
//! its successor. A pass makes the grid a contracting grid, which is the
//! hypothesis the period-forcing machinery needs; the grid's spatial
//! pattern then feeds the combinatorics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hset::{check_horizontal_covering, AffineHSet, CheckStatus, CoveringImages, HSetError, InclusionReport};
use crate::interval::{IBox, Interval, IntervalError};
use crate::shark::{CoveringLoop, OInterval, Pattern, PatternError};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid needs at least two cubes")]
    TooSmall,
    #[error("successor map is not a permutation of the cubes")]
    BadSuccessor,
    #[error("cube exit-axis projections overlap; spatial order undefined")]
    OverlappingCubes,
    #[error("h-set error: {0}")]
    HSet(#[from] HSetError),
    #[error("literal error: {0}")]
    Literal(#[from] IntervalError),
    #[error("pattern error: {0}")]
    Pattern(#[from] PatternError),
    #[error("loop index out of range")]
    LoopIndex,
    #[error("grid file malformed: {0}")]
    File(String),
}

/// The verification target: outer set, ordered cubes, successor map.
#[derive(Clone, Debug)]
pub struct ContractingGridSpec {
    pub outer: AffineHSet,
    pub cubes: Vec<AffineHSet>,
    /// `successor[i]` = index of the cube the i-th cube must map into.
    pub successor: Vec<usize>,
    /// Cubes flagged here are clipped to the outer set (`C_i = C'_i ∩ G`).
    pub clip: Vec<bool>,
}

impl ContractingGridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        let n = self.cubes.len();
        if n < 2 {
            return Err(GridError::TooSmall);
        }
        if self.successor.len() != n || self.clip.len() != n {
            return Err(GridError::BadSuccessor);
        }
        let mut seen = vec![false; n];
        for &s in &self.successor {
            if s >= n || seen[s] {
                return Err(GridError::BadSuccessor);
            }
            seen[s] = true;
        }
        self.spatial_order()?;
        Ok(())
    }

    /// Exit-axis (first outer model coordinate) enclosure of each cube.
    fn cube_axis_ranges(&self) -> Result<Vec<Interval>, GridError> {
        let mut out = Vec::with_capacity(self.cubes.len());
        for c in &self.cubes {
            let u = self.outer.to_model_coords(&c.hull())?;
            out.push(u.0[0]);
        }
        Ok(out)
    }

    /// Cube indices sorted by exit-axis position; errors if the projected
    /// ranges overlap (spatial order would be undefined).
    pub fn spatial_order(&self) -> Result<Vec<usize>, GridError> {
        let ranges = self.cube_axis_ranges()?;
        let mut idx: Vec<usize> = (0..ranges.len()).collect();
        idx.sort_by(|&a, &b| ranges[a].lo().partial_cmp(&ranges[b].lo()).unwrap());
        for w in idx.windows(2) {
            if ranges[w[0]].hi() >= ranges[w[1]].lo() {
                return Err(GridError::OverlappingCubes);
            }
        }
        Ok(idx)
    }

    /// The spatial permutation induced by the successor map: position of
    /// cube i maps to the position of its successor.
    pub fn spatial_pattern(&self) -> Result<Pattern, GridError> {
        let order = self.spatial_order()?;
        let n = order.len();
        let mut pos_of = vec![0usize; n];
        for (pos, &cube) in order.iter().enumerate() {
            pos_of[cube] = pos;
        }
        let mut sigma = vec![0usize; n];
        for cube in 0..n {
            sigma[pos_of[cube]] = pos_of[self.successor[cube]];
        }
        Ok(Pattern::new(sigma)?)
    }
}

/// Subdivision policy: bisect the relatively widest model coordinate,
/// give up (inconclusive) past `max_depth`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubdivisionPolicy {
    pub max_depth: usize,
    pub max_boxes: usize,
}

impl Default for SubdivisionPolicy {
    fn default() -> SubdivisionPolicy {
        SubdivisionPolicy {
            max_depth: 12,
            max_boxes: 2_000_000,
        }
    }
}

/// Outcome of a grid verification, consumed by certificate emission.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridVerification {
    pub verified: bool,
    pub reports: Vec<InclusionReport>,
    pub pattern: Option<String>,
}

impl GridVerification {
    pub fn min_margin(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| r.margin)
            .fold(f64::INFINITY, f64::min)
    }
}

struct WorkItem {
    ubox: IBox,
    depth: usize,
}

/// Verifies both contracting-grid conditions against a rigorous map
/// evaluator (box in ambient section coordinates -> rigorous image box).
/// Sub-box checks run in parallel; aggregation is deterministic.
pub fn verify_contracting_grid<F>(
    grid: &ContractingGridSpec,
    evaluator: F,
    policy: &SubdivisionPolicy,
) -> Result<GridVerification, GridError>
where
    F: Fn(&IBox) -> Result<IBox, String> + Sync,
{
    grid.validate()?;
    let mut reports = Vec::new();

    // separation of the cubes along the exit axis (the grid structure)
    {
        let ranges = grid.cube_axis_ranges()?;
        let order = grid.spatial_order()?;
        let mut min_gap = f64::INFINITY;
        for w in order.windows(2) {
            min_gap = min_gap.min(ranges[w[1]].lo() - ranges[w[0]].hi());
        }
        reports.push(InclusionReport {
            label: "cube separation along exit axis".into(),
            status: if min_gap > 0.0 {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            margin: min_gap,
            subdivision_depth: 0,
            boxes_checked: grid.cubes.len(),
            detail: Vec::new(),
        });
    }

    // each cube must land strictly inside its successor and the outer set
    for (i, cube) in grid.cubes.iter().enumerate() {
        let next = &grid.cubes[grid.successor[i]];
        let clip = grid.clip[i].then_some(&grid.outer);
        let targets: Vec<(String, &AffineHSet)> = vec![
            (format!("cube {} -> cube {}", i + 1, grid.successor[i] + 1), next),
            (format!("cube {} -> outer", i + 1), &grid.outer),
        ];
        let rep = check_region_mapped(
            &format!("cube {}", i + 1),
            cube,
            clip,
            &targets,
            &evaluator,
            policy,
        )?;
        reports.push(rep);
    }

    // the outer set maps strictly into its own interior
    let rep = check_region_mapped(
        "outer set",
        &grid.outer,
        None,
        &[("outer -> outer".to_string(), &grid.outer)],
        &evaluator,
        policy,
    )?;
    reports.push(rep);

    let verified = reports.iter().all(|r| r.passed());
    let pattern = grid.spatial_pattern().ok().map(|p| p.to_image_list());
    Ok(GridVerification {
        verified,
        reports,
        pattern,
    })
}

/// Adaptive subdivision of `region`'s model box; every kept sub-box image
/// must be strictly interior to all targets. Sub-boxes provably outside
/// the clip set are skipped.
fn check_region_mapped<F>(
    label: &str,
    region: &AffineHSet,
    clip: Option<&AffineHSet>,
    targets: &[(String, &AffineHSet)],
    evaluator: &F,
    policy: &SubdivisionPolicy,
) -> Result<InclusionReport, GridError>
where
    F: Fn(&IBox) -> Result<IBox, String> + Sync,
{
    let mut wave = vec![WorkItem {
        ubox: region.model_box(),
        depth: 0,
    }];
    let mut boxes_checked = 0usize;
    let mut max_depth = 0usize;
    let mut min_margin = f64::INFINITY;
    let mut detail: Vec<(String, f64)> = targets.iter().map(|(l, _)| (l.clone(), f64::INFINITY)).collect();

    while !wave.is_empty() {
        if boxes_checked + wave.len() > policy.max_boxes {
            return Ok(InclusionReport {
                label: format!("{label}: box budget exhausted"),
                status: CheckStatus::Inconclusive,
                margin: f64::NEG_INFINITY,
                subdivision_depth: max_depth,
                boxes_checked,
                detail,
            });
        }
        boxes_checked += wave.len();

        enum Outcome {
            Skipped,
            Pass(Vec<f64>),
            Split(String),
        }

        let results: Vec<(usize, Outcome)> = wave
            .par_iter()
            .enumerate()
            .map(|(idx, item)| {
                let mut ambient = region.from_model_box(&item.ubox);
                if let Some(outer) = clip {
                    // the requirement only covers the part inside the
                    // clip set: intersect (in both charts) or skip
                    match outer.to_model_coords(&ambient) {
                        Ok(u_out) => {
                            let Some(u_in) = u_out.intersect(&outer.model_box()) else {
                                return (idx, Outcome::Skipped);
                            };
                            let back = outer.from_model_box(&u_in);
                            match ambient.intersect(&back) {
                                Some(cut) => ambient = cut,
                                None => return (idx, Outcome::Skipped),
                            }
                        }
                        Err(_) => return (idx, Outcome::Split("clip chart".into())),
                    }
                }
                let image = match evaluator(&ambient) {
                    Ok(im) => im,
                    Err(e) => return (idx, Outcome::Split(e)),
                };
                let mut margins = Vec::with_capacity(targets.len());
                for (_, t) in targets {
                    let m = match t.to_model_coords(&image) {
                        Ok(u) => t.interior_margin_model(&u),
                        Err(_) => f64::NEG_INFINITY,
                    };
                    margins.push(m);
                }
                if margins.iter().all(|&m| m > 0.0) {
                    (idx, Outcome::Pass(margins))
                } else {
                    (idx, Outcome::Split("image not strictly interior".into()))
                }
            })
            .collect();

        let mut next = Vec::new();
        let mut results = results;
        results.sort_by_key(|(i, _)| *i);
        for (idx, outcome) in results {
            let item = &wave[idx];
            max_depth = max_depth.max(item.depth);
            match outcome {
                Outcome::Skipped => {}
                Outcome::Pass(margins) => {
                    for (d, m) in detail.iter_mut().zip(&margins) {
                        d.1 = d.1.min(*m);
                    }
                    min_margin = min_margin.min(margins.iter().fold(f64::INFINITY, |a, &b| a.min(b)));
                }
                Outcome::Split(reason) => {
                    if item.depth >= policy.max_depth {
                        detail.push((
                            format!(
                                "offending sub-box at depth {}: {:?} ({})",
                                item.depth, item.ubox, reason
                            ),
                            f64::NEG_INFINITY,
                        ));
                        return Ok(InclusionReport {
                            label: format!("{label}: subdivision depth cap reached"),
                            status: CheckStatus::Inconclusive,
                            margin: f64::NEG_INFINITY,
                            subdivision_depth: max_depth,
                            boxes_checked,
                            detail,
                        });
                    }
                    let (a, b) = split_widest(&item.ubox, region);
                    next.push(WorkItem {
                        ubox: a,
                        depth: item.depth + 1,
                    });
                    next.push(WorkItem {
                        ubox: b,
                        depth: item.depth + 1,
                    });
                }
            }
        }
        wave = next;
    }

    Ok(InclusionReport {
        label: label.to_string(),
        status: CheckStatus::Pass,
        margin: min_margin,
        subdivision_depth: max_depth,
        boxes_checked,
        detail,
    })
}

/// Bisects the widest model coordinate, measured in ambient units
/// (model width times the chart column norm), so subdivision effort goes
/// where the set is actually wide.
fn split_widest(u: &IBox, region: &AffineHSet) -> (IBox, IBox) {
    let d = u.dim();
    let mut best = 0;
    let mut best_w = -1.0;
    for k in 0..d {
        let colnorm: f64 = (0..d)
            .map(|i| {
                let e = region.chart[(i, k)].mag();
                e * e
            })
            .sum::<f64>()
            .sqrt();
        let w = u.0[k].width() * colnorm;
        if w > best_w {
            best_w = w;
            best = k;
        }
    }
    let (lo, hi) = u.0[best].split();
    let mut a = u.clone();
    let mut b = u.clone();
    a.0[best] = lo;
    b.0[best] = hi;
    (a, b)
}

/// A model-grid segment realizing an O-interval: spans between the model
/// cubes of its endpoints, full transverse extent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentHSet {
    pub interval: OInterval,
    pub hset: AffineHSet,
}

/// The model segments realizing a covering loop on the grid's pattern.
/// Model points sit at `4i+1`, cubes are `[4i, 4i+2]`, the segment between
/// spatial positions `i < j` is `[4i+2, 4j]` times `[-1,1]^{d-1}`.
/// Under a verified contracting grid, proper interval coverings lift to
/// horizontal coverings of these segments; `redundant_check` re-derives
/// that with the covering checker on an explicit contracting model map.
pub fn segments_from_loop(
    grid: &ContractingGridSpec,
    lp: &CoveringLoop,
) -> Result<Vec<SegmentHSet>, GridError> {
    let n = grid.cubes.len();
    let d = grid.outer.dim();
    let mut out = Vec::with_capacity(lp.intervals.len());
    for iv in &lp.intervals {
        if iv.hi >= n {
            return Err(GridError::LoopIndex);
        }
        out.push(model_segment(iv, d));
    }
    Ok(out)
}

fn model_segment(iv: &OInterval, d: usize) -> SegmentHSet {
    let (a, b) = (4.0 * iv.lo as f64 + 2.0, 4.0 * iv.hi as f64);
    let mut center = vec![0.0; d];
    let mut radii = vec![1.0; d];
    center[0] = 0.5 * (a + b);
    radii[0] = 0.5 * (b - a);
    SegmentHSet {
        interval: *iv,
        hset: AffineHSet::axis_aligned(&center, &radii),
    }
}

/// Redundant mode: re-checks each lifted covering with the horizontal
/// covering checker, on the canonical contracting model map of the
/// pattern (cubes contracted by slope 1/4, transverse contraction 1/2).
pub fn redundant_segment_check(pattern: &Pattern, segments: &[SegmentHSet]) -> Vec<InclusionReport> {
    let m = segments.len();
    let mut out = Vec::with_capacity(m);
    for t in 0..m {
        let s = &segments[t];
        let s_next = &segments[(t + 1) % m];
        let d = s.hset.dim();
        let (a, b) = (
            4.0 * s.interval.lo as f64 + 2.0,
            4.0 * s.interval.hi as f64,
        );
        // exact PL range over [a, b]: endpoints and interior breakpoints
        let mut xs = vec![a, b];
        let mut bp = a.ceil();
        while bp < b {
            if bp > a && (bp as i64) % 2 == 0 {
                xs.push(bp);
            }
            bp += 2.0;
        }
        let vals: Vec<f64> = xs.iter().map(|&x| model_map_exit(pattern, x)).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let c_next = s_next.hset.center.0[0].mid();
        let transverse = vec![Interval::new(-0.5, 0.5); d - 1];
        let to_model = |lo: f64, hi: f64| -> IBox {
            let mut v = vec![Interval::new(lo - c_next, hi - c_next)];
            v.append(&mut transverse.clone());
            IBox(v)
        };
        let images = CoveringImages {
            body: to_model(lo, hi),
            left_face: to_model(model_map_exit(pattern, a), model_map_exit(pattern, a)),
            right_face: to_model(model_map_exit(pattern, b), model_map_exit(pattern, b)),
        };
        let mut rep = check_horizontal_covering(&s_next.hset, &images);
        rep.label = format!("{:?} => {:?}: {}", s.interval, s_next.interval, rep.label);
        out.push(rep);
    }
    out
}

/// The exit coordinate of the canonical contracting model map: maps the
/// model point `4i+1` to `4σ(i)+1`, contracts each cube with slope 1/4,
/// interpolates linearly between cube faces.
fn model_map_exit(p: &Pattern, x: f64) -> f64 {
    let n = p.len();
    let clamp = x.clamp(0.0, (4 * n - 2) as f64);
    let cell = ((clamp / 4.0).floor() as usize).min(n - 1);
    let center = (4 * cell + 1) as f64;
    let image_center = (4 * p.image(cell) + 1) as f64;
    if clamp <= center + 1.0 {
        // inside cube `cell` (or left of the first point)
        image_center + (clamp - center) * 0.25
    } else {
        // segment between cube `cell` and `cell+1`
        let left_val = image_center + 0.25;
        let right_val = (4 * p.image(cell + 1) + 1) as f64 - 0.25;
        let t = (clamp - (center + 1.0)) / 2.0;
        left_val + t * (right_val - left_val)
    }
}

// --------------------------------------------------------------------
// Grid file format (JSON, decimal strings).
// --------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HSetFile {
    pub center: Vec<String>,
    pub chart: Vec<String>,
    pub radii: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubeFile {
    pub center: Vec<String>,
    pub chart: Vec<String>,
    pub radii: Vec<String>,
    pub clip: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridParamsFile {
    pub a: String,
    pub b: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub params: GridParamsFile,
    pub outer: HSetFile,
    pub cubes: Vec<CubeFile>,
    pub successor: Vec<usize>,
}

impl GridFile {
    pub fn parse(json: &str) -> Result<GridFile, GridError> {
        serde_json::from_str(json).map_err(|e| GridError::File(e.to_string()))
    }

    pub fn to_spec(&self) -> Result<ContractingGridSpec, GridError> {
        let outer = hset_from_file(&self.outer.center, &self.outer.chart, &self.outer.radii)?;
        let mut cubes = Vec::with_capacity(self.cubes.len());
        let mut clip = Vec::with_capacity(self.cubes.len());
        for c in &self.cubes {
            cubes.push(hset_from_file(&c.center, &c.chart, &c.radii)?);
            clip.push(c.clip);
        }
        let spec = ContractingGridSpec {
            outer,
            cubes,
            successor: self.successor.clone(),
            clip,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn hset_from_file(
    center: &[String],
    chart: &[String],
    radii: &[String],
) -> Result<AffineHSet, GridError> {
    let cs: Vec<&str> = center.iter().map(|s| s.as_str()).collect();
    let ms: Vec<&str> = chart.iter().map(|s| s.as_str()).collect();
    let rs: Vec<&str> = radii.iter().map(|s| s.as_str()).collect();
    Ok(AffineHSet::from_decimals(&cs, &ms, &rs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyfield::PolyField;

    /// Planar map (g(x), y/10) with g a cubic having a superattracting
    /// 3-cycle 0 -> 1 -> 2 -> 0; the grid radii are chosen so all strict
    /// inclusions hold with explicit margins.
    fn cubic_map_field() -> PolyField {
        // g(x) = -1.25 x^3 + 2.25 x^2 + 1
        PolyField::from_decimal_terms(
            2,
            &[
                vec![
                    ("-1.25", vec![3, 0]),
                    ("2.25", vec![2, 0]),
                    ("1", vec![0, 0]),
                ],
                vec![("0.1", vec![0, 1])],
            ],
        )
        .unwrap()
    }

    fn cubic_grid() -> ContractingGridSpec {
        let outer = AffineHSet::axis_aligned(&[0.75, 0.0], &[1.34, 0.1]);
        let cubes = vec![
            AffineHSet::axis_aligned(&[0.0, 0.0], &[0.07, 0.08]),
            AffineHSet::axis_aligned(&[1.0, 0.0], &[0.0125, 0.08]),
            AffineHSet::axis_aligned(&[2.0, 0.0], &[0.0105, 0.08]),
        ];
        ContractingGridSpec {
            outer,
            cubes,
            successor: vec![1, 2, 0],
            clip: vec![false, false, false],
        }
    }

    fn cubic_evaluator(field: &PolyField) -> impl Fn(&IBox) -> Result<IBox, String> + Sync + '_ {
        move |x: &IBox| Ok(field.eval_centered(x))
    }

    #[test]
    fn synthetic_cubic_grid_verifies() {
        let field = cubic_map_field();
        let grid = cubic_grid();
        let policy = SubdivisionPolicy::default();
        let v = verify_contracting_grid(&grid, cubic_evaluator(&field), &policy).unwrap();
        for r in &v.reports {
            assert!(r.passed(), "failed: {} margin {}", r.label, r.margin);
        }
        assert!(v.verified);
        assert!(v.min_margin() > 0.0);
        assert_eq!(v.pattern.as_deref(), Some("2,3,1"));
    }

    #[test]
    fn synthetic_grid_fails_at_zero_depth() {
        let field = cubic_map_field();
        let grid = cubic_grid();
        let policy = SubdivisionPolicy {
            max_depth: 0,
            max_boxes: 1000,
        };
        let v = verify_contracting_grid(&grid, cubic_evaluator(&field), &policy).unwrap();
        assert!(!v.verified);
        assert!(v
            .reports
            .iter()
            .any(|r| r.status == CheckStatus::Inconclusive));
    }

    #[test]
    fn spatial_pattern_of_shuffled_cubes() {
        // same grid but cubes stored in a different order
        let g0 = cubic_grid();
        let grid = ContractingGridSpec {
            outer: g0.outer.clone(),
            cubes: vec![g0.cubes[2].clone(), g0.cubes[0].clone(), g0.cubes[1].clone()],
            // orbit: cube1(x=2) -> cube2(x=0) -> cube3(x=1) -> cube1
            successor: vec![1, 2, 0],
            clip: vec![false; 3],
        };
        let p = grid.spatial_pattern().unwrap();
        // spatial: pos0 = x0 cube (idx 1), pos1 = x1 (idx 2), pos2 = x2 (idx 0)
        // orbit 0->1->2->0 becomes spatial 0->1->2->0
        assert_eq!(p.to_image_list(), "2,3,1");
    }

    #[test]
    fn segments_for_single_loop() {
        let grid = cubic_grid();
        let lp = CoveringLoop {
            intervals: vec![OInterval::new(0, 1)],
            proper: true,
            non_repeating: false,
        };
        let segs = segments_from_loop(&grid, &lp).unwrap();
        assert_eq!(segs.len(), 1);
        // model segment between cubes 0 and 1: [2, 4]
        let h = &segs[0].hset;
        assert_eq!(h.center.0[0].mid(), 3.0);
        assert_eq!(h.radii.0[0].mid(), 1.0);
    }

    #[test]
    fn segment_loop_out_of_range() {
        let grid = cubic_grid();
        let lp = CoveringLoop {
            intervals: vec![OInterval::new(0, 5)],
            proper: true,
            non_repeating: false,
        };
        assert!(matches!(
            segments_from_loop(&grid, &lp),
            Err(GridError::LoopIndex)
        ));
    }

    #[test]
    fn redundant_check_on_proper_loops() {
        use crate::shark;
        // patterns of the case studies; every proper witness loop lifts
        for s in ["3,1,2", "3,5,4,2,1", "4,6,5,3,2,1", "6,5,1,2,3,4"] {
            let p = Pattern::parse(s).unwrap();
            let forced = shark::forced_periods(&p, 8).unwrap();
            for (m, w) in &forced.witnesses {
                if !w.non_repeating {
                    continue; // the orbit witness is not a segment loop
                }
                let segs: Vec<SegmentHSet> =
                    w.intervals.iter().map(|iv| model_segment(iv, 2)).collect();
                let reps = redundant_segment_check(&p, &segs);
                for r in &reps {
                    assert!(
                        r.passed(),
                        "pattern {s} m={m}: {} margin {}",
                        r.label,
                        r.margin
                    );
                }
            }
        }
    }

    #[test]
    fn grid_file_roundtrip() {
        let json = r#"{
            "case": "test",
            "params": { "a": "5.25", "b": "0.2" },
            "outer": { "center": ["0", "0"], "chart": ["1", "0", "0", "1"], "radii": ["2", "1"] },
            "cubes": [
                { "center": ["-1", "0"], "chart": ["1", "0", "0", "1"], "radii": ["0.25", "1.5"], "clip": true },
                { "center": ["1", "0"], "chart": ["1", "0", "0", "1"], "radii": ["0.25", "1.5"], "clip": true }
            ],
            "successor": [1, 0]
        }"#;
        let f = GridFile::parse(json).unwrap();
        let spec = f.to_spec().unwrap();
        assert_eq!(spec.cubes.len(), 2);
        let back = serde_json::to_string(&f).unwrap();
        let f2 = GridFile::parse(&back).unwrap();
        let spec2 = f2.to_spec().unwrap();
        assert_eq!(spec.cubes[0].center, spec2.cubes[0].center);
        assert_eq!(spec.outer.chart, spec2.outer.chart);
    }
}
