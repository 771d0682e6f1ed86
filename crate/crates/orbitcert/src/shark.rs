//! Exact combinatorics of period forcing on cyclic patterns.
//!
//! Everything here is integer arithmetic on spatial permutations: the
//! Sharkovskii order, covering digraphs between O-intervals, the spiral
//! (Štefan) construction with its doubling fallback, non-repeating loops
//! of covering relations, and an exact piecewise-linear oracle used to
//! cross-check the loop construction.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("permutation is not a single cycle")]
    NotACycle,
    #[error("invalid permutation image list")]
    BadPermutation,
    #[error("oracle resource cap exceeded (n <= {max_n}, m <= {max_m})")]
    OracleCap { max_n: usize, max_m: u64 },
}

/// A natural number with its Sharkovskii decomposition `n = 2^k * q`, q odd.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharkNumber {
    pub n: u64,
    pub k: u32,
    pub q: u64,
}

impl SharkNumber {
    pub fn new(n: u64) -> SharkNumber {
        assert!(n >= 1);
        let k = n.trailing_zeros();
        SharkNumber { n, k, q: n >> k }
    }
}

/// Total Sharkovskii order: `Less` means "precedes" (forces the other).
pub fn shark_compare(a: SharkNumber, b: SharkNumber) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    if a.n == b.n {
        return Equal;
    }
    match (a.q > 1, b.q > 1) {
        (true, true) => {
            // rows of odd multiples: smaller power first, then smaller odd
            if a.k != b.k {
                a.k.cmp(&b.k)
            } else {
                a.q.cmp(&b.q)
            }
        }
        (true, false) => Less,
        (false, true) => Greater,
        // tail of powers of two, descending
        (false, false) => b.k.cmp(&a.k),
    }
}

/// `{ m <= upto : n ◁ m } ∪ { n }` (clipped to `upto`).
pub fn shark_successors(n: u64, upto: u64) -> BTreeSet<u64> {
    let a = SharkNumber::new(n);
    let mut out = BTreeSet::new();
    for m in 1..=upto {
        if m == n || shark_compare(a, SharkNumber::new(m)) == std::cmp::Ordering::Less {
            out.insert(m);
        }
    }
    out
}

/// Cyclic spatial pattern: `sigma[i]` is the spatial position (0-based) the
/// point at spatial position `i` maps to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    sigma: Vec<usize>,
}

impl Pattern {
    pub fn new(sigma: Vec<usize>) -> Result<Pattern, PatternError> {
        let n = sigma.len();
        if n == 0 {
            return Err(PatternError::BadPermutation);
        }
        let mut seen = vec![false; n];
        for &s in &sigma {
            if s >= n || seen[s] {
                return Err(PatternError::BadPermutation);
            }
            seen[s] = true;
        }
        // single n-cycle check: 0 returns home only after n steps
        let mut x = 0usize;
        for step in 1..=n {
            x = sigma[x];
            if x == 0 && step < n {
                return Err(PatternError::NotACycle);
            }
        }
        if x != 0 {
            return Err(PatternError::NotACycle);
        }
        Ok(Pattern { sigma })
    }

    /// Parses a 1-based image list like `"3,1,2"`.
    pub fn parse(s: &str) -> Result<Pattern, PatternError> {
        let imgs: Result<Vec<usize>, _> =
            s.split(',').map(|t| t.trim().parse::<usize>()).collect();
        let imgs = imgs.map_err(|_| PatternError::BadPermutation)?;
        if imgs.iter().any(|&v| v == 0) {
            return Err(PatternError::BadPermutation);
        }
        Pattern::new(imgs.into_iter().map(|v| v - 1).collect())
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn image(&self, i: usize) -> usize {
        self.sigma[i]
    }

    pub fn iterate(&self, i: usize, steps: u64) -> usize {
        let mut x = i;
        for _ in 0..(steps % self.sigma.len() as u64) {
            x = self.sigma[x];
        }
        x
    }

    /// Spatial reflection: conjugation by `i -> n-1-i`.
    pub fn reverse(&self) -> Pattern {
        let n = self.sigma.len();
        let mut sigma = vec![0; n];
        for i in 0..n {
            sigma[n - 1 - i] = n - 1 - self.sigma[i];
        }
        Pattern { sigma }
    }

    /// 1-based image list, the external format.
    pub fn to_image_list(&self) -> String {
        self.sigma
            .iter()
            .map(|&v| (v + 1).to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// min/max of `sigma` over the integer points of `[lo, hi]`.
    fn span(&self, lo: usize, hi: usize) -> (usize, usize) {
        let mut mn = usize::MAX;
        let mut mx = 0;
        for i in lo..=hi {
            let s = self.sigma[i];
            mn = mn.min(s);
            mx = mx.max(s);
        }
        (mn, mx)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_image_list())
    }
}

/// A closed interval with endpoints on the orbit, `lo < hi` (0-based
/// spatial indices).
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OInterval {
    pub lo: usize,
    pub hi: usize,
}

impl fmt::Debug for OInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo + 1, self.hi + 1)
    }
}

impl OInterval {
    pub fn new(lo: usize, hi: usize) -> OInterval {
        assert!(lo < hi, "O-interval must have positive length");
        OInterval { lo, hi }
    }

    pub fn contains_point(&self, x: usize) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains(&self, other: &OInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Open-interior disjointness: shares at most endpoints.
    pub fn interior_disjoint(&self, other: &OInterval) -> bool {
        self.hi <= other.lo || other.hi <= self.lo
    }
}

/// O-forced covering `I -> J` (some O-subinterval of `I` stretches over `J`).
pub fn covers_forced(p: &Pattern, i: &OInterval, j: &OInterval) -> bool {
    let (mn, mx) = p.span(i.lo, i.hi);
    mn <= j.lo && j.hi <= mx
}

/// Proper covering `I ↣ J` (the endpoints of `I` themselves stretch over `J`).
pub fn covers_proper(p: &Pattern, i: &OInterval, j: &OInterval) -> bool {
    let a = p.image(i.lo);
    let b = p.image(i.hi);
    a.min(b) <= j.lo && j.hi <= a.max(b)
}

/// The full covering digraph over all O-intervals of a pattern.
#[derive(Clone, Debug)]
pub struct CoveringDigraph {
    pub intervals: Vec<OInterval>,
    pub forced: Vec<Vec<bool>>,
    pub proper: Vec<Vec<bool>>,
}

pub fn covering_digraph(p: &Pattern) -> CoveringDigraph {
    let n = p.len();
    let mut intervals = Vec::new();
    for lo in 0..n {
        for hi in lo + 1..n {
            intervals.push(OInterval::new(lo, hi));
        }
    }
    let m = intervals.len();
    let mut forced = vec![vec![false; m]; m];
    let mut proper = vec![vec![false; m]; m];
    for (a, ia) in intervals.iter().enumerate() {
        for (b, ib) in intervals.iter().enumerate() {
            forced[a][b] = covers_forced(p, ia, ib);
            proper[a][b] = covers_proper(p, ia, ib);
        }
    }
    CoveringDigraph {
        intervals,
        forced,
        proper,
    }
}

/// Loop of covering relations with certified flags.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringLoop {
    pub intervals: Vec<OInterval>,
    pub proper: bool,
    pub non_repeating: bool,
}

impl CoveringLoop {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Re-checks every covering step and the certified flags directly
    /// against the pattern.
    pub fn validate(&self, p: &Pattern) -> bool {
        let m = self.intervals.len();
        if m == 0 {
            return false;
        }
        for t in 0..m {
            let a = &self.intervals[t];
            let b = &self.intervals[(t + 1) % m];
            let ok = if self.proper {
                covers_proper(p, a, b)
            } else {
                covers_forced(p, a, b)
            };
            if !ok {
                return false;
            }
        }
        if self.non_repeating && !check_non_repeating(p, &self.intervals) {
            return false;
        }
        true
    }
}

/// Both conditions of the non-repeating definition: `int J_0` avoids every
/// later interval, and no endpoint follows the loop. Endpoints are orbit
/// points, so "follows" is decided exactly from the permutation.
fn check_non_repeating(p: &Pattern, loop_ivs: &[OInterval]) -> bool {
    let m = loop_ivs.len();
    let j0 = &loop_ivs[0];
    for j in &loop_ivs[1..] {
        if !(j.hi <= j0.lo || j.lo >= j0.hi) {
            return false;
        }
    }
    // orbit points close up iff n divides m
    if (m as u64) % (p.len() as u64) == 0 {
        let endpoints: BTreeSet<usize> = loop_ivs.iter().flat_map(|iv| [iv.lo, iv.hi]).collect();
        for &x in &endpoints {
            let mut cur = x;
            let mut follows = true;
            for iv in loop_ivs {
                if !iv.contains_point(cur) {
                    follows = false;
                    break;
                }
                cur = p.image(cur);
            }
            if follows && cur == x {
                return false;
            }
        }
    }
    true
}

/// The spiral data: closing interval `J_0` and the chain `J_1..J_{l-1}`
/// (`chain[0]` is the self-covering gap).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StefanSequence {
    pub j0: OInterval,
    pub chain: Vec<OInterval>,
}

impl StefanSequence {
    pub fn l(&self) -> usize {
        self.chain.len() + 1
    }
}

/// Outcome of the spiral construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StefanOutcome {
    Sequence(StefanSequence),
    /// All points switch sides: the induced half-length pattern of the
    /// second iterate (on the left block) is returned instead.
    Doubling(Pattern),
}

/// Largest position whose image moves right; the gap `[a, a+1]` is the
/// canonical self-covering interval.
fn switch_gap(p: &Pattern) -> usize {
    (0..p.len())
        .rev()
        .find(|&s| p.image(s) > s)
        .expect("a cyclic pattern always moves some point right")
}

/// True iff every point maps across the gap (forces n even).
fn all_points_switch(p: &Pattern, a: usize) -> bool {
    (0..=a).all(|s| p.image(s) > a) && (a + 1..p.len()).all(|s| p.image(s) <= a)
}

/// Pattern of the second iterate restricted to the left block, valid in
/// the all-switch configuration.
fn half_pattern(p: &Pattern, a: usize) -> Pattern {
    let half: Vec<usize> = (0..=a).map(|s| p.image(p.image(s))).collect();
    Pattern::new(half).expect("second iterate preserves the left block")
}

/// The spiral construction: grows the window one side at a time by maximal
/// increments, trying to close into a valid sequence after every step.
/// Returns the closings found (bounded), ones with all shortcut edges first.
fn stefan_sequences_all(p: &Pattern) -> Vec<StefanSequence> {
    let n = p.len();
    let a = switch_gap(p);
    let gap = OInterval::new(a, a + 1);
    let mut results = Vec::new();
    let mut stack: Vec<(usize, usize, Vec<OInterval>)> = vec![(a, a + 1, vec![gap])];
    let mut budget = 20_000usize;

    while let Some((u, v, seq)) = stack.pop() {
        if results.len() >= 64 || budget == 0 {
            break;
        }
        budget -= 1;
        let last = *seq.last().unwrap();
        let (last_mn, last_mx) = p.span(last.lo, last.hi);

        // try to close: J_0 outside the window's interior, covered by the
        // last chain element, covering the gap, plus the shortcut edges
        let l = seq.len() + 1;
        let mut closings: Vec<(bool, OInterval)> = Vec::new();
        for lo in 0..n {
            for hi in lo + 1..n {
                if !(hi <= u || lo >= v) {
                    continue;
                }
                let cand = OInterval::new(lo, hi);
                if !(last_mn <= lo && hi <= last_mx) {
                    continue; // J_{l-1} -> J_0
                }
                if !covers_forced(p, &cand, &gap) {
                    continue; // J_0 -> J_1
                }
                // shortcut edges J_0 -> J_{l-m+1} for even m < l
                let mut dashes = true;
                let mut m = 2;
                while m < l {
                    let target = &seq[l - m]; // J_{l-m+1} = seq[(l-m+1)-1]
                    if !covers_forced(p, &cand, target) {
                        dashes = false;
                        break;
                    }
                    m += 2;
                }
                closings.push((dashes, cand));
            }
        }
        closings.sort_by_key(|(d, iv)| (!*d, iv.lo, iv.hi));
        for (_, j0) in closings {
            results.push(StefanSequence {
                j0,
                chain: seq.clone(),
            });
        }

        // grow the window by one maximal one-sided increment
        let (w_mn, w_mx) = p.span(u, v);
        if w_mx > v {
            let inc = OInterval::new(v, w_mx);
            if covers_forced(p, &last, &inc) {
                let mut next = seq.clone();
                next.push(inc);
                stack.push((u, w_mx, next));
            }
        }
        if w_mn < u {
            let inc = OInterval::new(w_mn, u);
            if covers_forced(p, &last, &inc) {
                let mut next = seq.clone();
                next.push(inc);
                stack.push((w_mn, v, next));
            }
        }
    }
    results
}

/// Spiral construction per the covering diagram, or the doubling signal
/// when all points switch sides.
pub fn stefan_sequence(p: &Pattern) -> Result<StefanOutcome, PatternError> {
    if p.len() < 2 {
        return Err(PatternError::NotACycle);
    }
    let a = switch_gap(p);
    if all_points_switch(p, a) {
        return Ok(StefanOutcome::Doubling(half_pattern(p, a)));
    }
    let mut all = stefan_sequences_all(p);
    if all.is_empty() {
        return Err(PatternError::NotACycle);
    }
    Ok(StefanOutcome::Sequence(all.remove(0)))
}

/// Candidate loops for period `m` assembled from a spiral sequence.
fn template_loops(seq: &StefanSequence, m: u64) -> Vec<Vec<OInterval>> {
    let l = seq.l() as u64;
    let mut out = Vec::new();
    if m == 1 {
        out.push(vec![seq.chain[0]]);
        return out;
    }
    if m >= l {
        // J_0 -> J_1 (repeated) -> J_2 -> ... -> J_{l-1} -> J_0
        let mut ivs = Vec::with_capacity(m as usize);
        ivs.push(seq.j0);
        for _ in 0..(m - l + 1) {
            ivs.push(seq.chain[0]);
        }
        ivs.extend_from_slice(&seq.chain[1..]);
        debug_assert_eq!(ivs.len() as u64, m);
        out.push(ivs);
    } else if m % 2 == 0 {
        // J_0 -> J_{l-m+1} -> ... -> J_{l-1} -> J_0
        let start = (l - m + 1) as usize;
        let mut ivs = Vec::with_capacity(m as usize);
        ivs.push(seq.j0);
        for t in start..=(l as usize - 1) {
            ivs.push(seq.chain[t - 1]);
        }
        debug_assert_eq!(ivs.len() as u64, m);
        out.push(ivs);
    }
    out
}

/// Extends an `f²`-loop on the left block to an `f`-loop of doubled length
/// by inserting the right-block images of the covering witnesses.
fn extend_doubled_loop(p: &Pattern, half_loop: &[OInterval]) -> Option<Vec<OInterval>> {
    let mm = half_loop.len();
    let mut out = Vec::with_capacity(2 * mm);
    for t in 0..mm {
        let j = &half_loop[t];
        let j_next = &half_loop[(t + 1) % mm];
        let (wa, wb) = minimal_witness_pair(p, j, j_next, 2)?;
        let ja = p.image(wa);
        let jb = p.image(wb);
        out.push(*j);
        out.push(OInterval::new(ja.min(jb), ja.max(jb)));
    }
    Some(out)
}

/// Smallest (then leftmost) pair `a < b` in `J` whose images under the
/// `iter`-th iterate span `target`.
fn minimal_witness_pair(
    p: &Pattern,
    j: &OInterval,
    target: &OInterval,
    iter: u64,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for a in j.lo..=j.hi {
        for b in a + 1..=j.hi {
            let ia = p.iterate(a, iter);
            let ib = p.iterate(b, iter);
            if ia.min(ib) <= target.lo && target.hi <= ia.max(ib) {
                let better = match best {
                    None => true,
                    Some((ba, bb)) => (b - a, a) < (bb - ba, ba),
                };
                if better {
                    best = Some((a, b));
                }
            }
        }
    }
    best
}

const DIGRAPH_SEARCH_BUDGET: usize = 200_000;

/// Bounded search of the proper-covering digraph for a non-repeating
/// m-loop; deterministic (lexicographic) order.
fn digraph_loop_search(p: &Pattern, m: u64) -> Option<Vec<OInterval>> {
    let dg = covering_digraph(p);
    let nodes = dg.intervals.len();
    let mut budget = DIGRAPH_SEARCH_BUDGET;
    for start in 0..nodes {
        let j0 = dg.intervals[start];
        let allowed: Vec<usize> = (0..nodes)
            .filter(|&t| dg.intervals[t].interior_disjoint(&j0))
            .collect();
        let mut path = vec![start];
        if dfs_loop(&dg, &allowed, p, start, m as usize, &mut path, &mut budget) {
            return Some(path.iter().map(|&t| dg.intervals[t]).collect());
        }
        if budget == 0 {
            break;
        }
    }
    None
}

fn dfs_loop(
    dg: &CoveringDigraph,
    allowed: &[usize],
    p: &Pattern,
    start: usize,
    m: usize,
    path: &mut Vec<usize>,
    budget: &mut usize,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    let cur = *path.last().unwrap();
    if path.len() == m {
        if dg.proper[cur][start] {
            let ivs: Vec<OInterval> = path.iter().map(|&t| dg.intervals[t]).collect();
            if check_non_repeating(p, &ivs) {
                return true;
            }
        }
        return false;
    }
    for &next in allowed {
        if dg.proper[cur][next] {
            path.push(next);
            if dfs_loop(dg, allowed, p, start, m, path, budget) {
                return true;
            }
            path.pop();
        }
    }
    false
}

/// A non-repeating loop of length `m` for the pattern, when one is found:
/// spiral/doubling templates first, then a bounded proper-digraph search.
/// Every returned loop is re-verified against the covering definitions.
pub fn non_repeating_loop(p: &Pattern, m: u64) -> Result<Option<CoveringLoop>, PatternError> {
    assert!(m >= 1);
    if p.len() < 2 {
        return Ok(None);
    }
    let n = p.len() as u64;
    let a = switch_gap(p);
    let gap = OInterval::new(a, a + 1);

    if m == 1 {
        return Ok(finish_loop(p, vec![gap]));
    }

    if !all_points_switch(p, a) {
        for seq in stefan_sequences_all(p) {
            for cand in template_loops(&seq, m) {
                if let Some(lp) = finish_loop(p, cand) {
                    return Ok(Some(lp));
                }
            }
        }
    } else if m % 2 == 0 && m != n {
        let half = half_pattern(p, a);
        if let Some(half_loop) = non_repeating_loop(&half, m / 2)? {
            if let Some(cand) = extend_doubled_loop(p, &half_loop.intervals) {
                if let Some(lp) = finish_loop(p, cand) {
                    return Ok(Some(lp));
                }
            }
        }
    }

    // pattern-specific extras beyond the construction
    if let Some(ivs) = digraph_loop_search(p, m) {
        return Ok(finish_loop(p, ivs));
    }
    Ok(None)
}

/// Verifies a candidate loop (forced coverings + non-repeating conditions)
/// and derives its flags; rejects invalid candidates.
fn finish_loop(p: &Pattern, ivs: Vec<OInterval>) -> Option<CoveringLoop> {
    let m = ivs.len();
    for t in 0..m {
        if !covers_forced(p, &ivs[t], &ivs[(t + 1) % m]) {
            return None;
        }
    }
    if !check_non_repeating(p, &ivs) {
        return None;
    }
    let proper = (0..m).all(|t| covers_proper(p, &ivs[t], &ivs[(t + 1) % m]));
    Some(CoveringLoop {
        intervals: ivs,
        proper,
        non_repeating: true,
    })
}

/// Refines a loop of forced coverings into a loop of proper coverings on
/// O-subintervals.
pub fn properize_loop(p: &Pattern, lp: &CoveringLoop) -> CoveringLoop {
    let m = lp.intervals.len();
    let mut ks = Vec::with_capacity(m);
    for t in 0..m {
        let j = &lp.intervals[t];
        let j_next = &lp.intervals[(t + 1) % m];
        if covers_proper(p, j, j_next) {
            ks.push(*j);
        } else {
            let (a, b) = minimal_witness_pair(p, j, j_next, 1)
                .expect("forced covering always has a witness pair");
            ks.push(OInterval::new(a, b));
        }
    }
    // each K_i properly covers J_{i+1} ⊇ K_{i+1}
    debug_assert!((0..m).all(|t| covers_proper(p, &ks[t], &ks[(t + 1) % m])));
    let non_repeating = check_non_repeating(p, &ks);
    CoveringLoop {
        intervals: ks,
        proper: true,
        non_repeating,
    }
}

/// The orbit's own covering chain `hull{σ^j(a), σ^j(a+1)}`, the witness
/// for the period of the pattern itself.
fn orbit_witness(p: &Pattern) -> CoveringLoop {
    let n = p.len();
    let a = switch_gap(p);
    let mut ivs = Vec::with_capacity(n);
    let (mut x, mut y) = (a, a + 1);
    for _ in 0..n {
        ivs.push(OInterval::new(x.min(y), x.max(y)));
        x = p.image(x);
        y = p.image(y);
    }
    let proper = (0..n).all(|t| covers_proper(p, &ivs[t], &ivs[(t + 1) % n]));
    let non_repeating = check_non_repeating(p, &ivs);
    CoveringLoop {
        intervals: ivs,
        proper,
        non_repeating,
    }
}

/// Forced periods with stored loop witnesses.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForcedPeriods {
    pub periods: BTreeSet<u64>,
    pub witnesses: BTreeMap<u64, CoveringLoop>,
}

/// Every period `m <= upto` realized by a stored witness: the orbit's own
/// chain for `m = n`, non-repeating loops (properized) otherwise.
pub fn forced_periods(p: &Pattern, upto: u64) -> Result<ForcedPeriods, PatternError> {
    let n = p.len() as u64;
    let mut periods = BTreeSet::new();
    let mut witnesses = BTreeMap::new();
    for m in 1..=upto {
        if m == n {
            periods.insert(m);
            witnesses.insert(m, orbit_witness(p));
            continue;
        }
        if n == 1 {
            continue;
        }
        if let Some(lp) = non_repeating_loop(p, m)? {
            let proper = if lp.proper {
                lp
            } else {
                properize_loop(p, &lp)
            };
            debug_assert!(proper.validate(p));
            periods.insert(m);
            witnesses.insert(m, proper);
        }
    }
    Ok(ForcedPeriods { periods, witnesses })
}

// ---------------------------------------------------------------------
// Exact piecewise-linear oracle.
//
// The connect-the-dots model of a pattern is Markov: each basic interval
// [k, k+1] maps exactly onto a run of basic intervals. The linear pieces
// of the m-fold composite that can hold fixed points are the cylinders of
// closed m-walks in that graph, so least periods are counted from walks
// instead of materializing the composite. Isometric (slope ±1) cylinders
// and fixed points sitting on the integer orbit are handled exactly.
// ---------------------------------------------------------------------

const ORACLE_MAX_N: usize = 16;
const ORACLE_MAX_M: u64 = 24;

/// `{ m <= upto : the PL model has a point of least period m }`, exact.
pub fn pl_oracle_periods(p: &Pattern, upto: u64) -> Result<BTreeSet<u64>, PatternError> {
    let n = p.len();
    if n > ORACLE_MAX_N || upto > ORACLE_MAX_M {
        return Err(PatternError::OracleCap {
            max_n: ORACLE_MAX_N,
            max_m: ORACLE_MAX_M,
        });
    }
    let mut out = BTreeSet::new();
    if n == 1 {
        if upto >= 1 {
            out.insert(1);
        }
        return Ok(out);
    }
    let v = n - 1; // basic intervals [k, k+1]
    let mut adj = vec![vec![0u128; v]; v];
    for k in 0..v {
        let (a, b) = (p.image(k), p.image(k + 1));
        for l in a.min(b)..a.max(b) {
            adj[k][l] = 1;
        }
    }
    // closed-walk counts c_m = trace(A^m)
    let mut c = vec![0i128; (upto + 1) as usize];
    let mut power = identity_u128(v);
    for m in 1..=upto as usize {
        power = mat_mul_u128(&power, &adj);
        c[m] = (0..v).map(|i| power[i][i] as i128).sum();
    }
    // pinned closed-walk counts (expanding walks fixed at an orbit point);
    // nonzero only when n | m
    let mut q = vec![0i128; (upto + 1) as usize];
    for m in 1..=upto {
        if m % (n as u64) == 0 {
            q[m as usize] = pinned_walk_count(p, &adj, m as usize);
        }
    }
    for m in 1..=upto {
        if m == n as u64 {
            out.insert(m); // the orbit itself
            continue;
        }
        let p_m = mobius_combine(&c, m);
        let exists = if m % (n as u64) == 0 {
            let pq_m = mobius_combine(&q, m);
            p_m > pq_m
        } else {
            p_m > 0
        };
        if exists {
            out.insert(m);
        }
    }
    Ok(out)
}

fn identity_u128(v: usize) -> Vec<Vec<u128>> {
    let mut m = vec![vec![0u128; v]; v];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1;
    }
    m
}

fn mat_mul_u128(a: &[Vec<u128>], b: &[Vec<u128>]) -> Vec<Vec<u128>> {
    let v = a.len();
    let mut out = vec![vec![0u128; v]; v];
    for i in 0..v {
        for k in 0..v {
            if a[i][k] == 0 {
                continue;
            }
            for j in 0..v {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Σ_{d | m} μ(m/d) f(d): count of primitive based closed walks.
fn mobius_combine(f: &[i128], m: u64) -> i128 {
    let mut acc = 0i128;
    for d in 1..=m {
        if m % d == 0 {
            acc += mobius(m / d) as i128 * f[d as usize];
        }
    }
    acc
}

fn mobius(mut x: u64) -> i64 {
    let mut primes = 0;
    let mut p = 2;
    while p * p <= x {
        if x % p == 0 {
            x /= p;
            if x % p == 0 {
                return 0;
            }
            primes += 1;
        }
        p += 1;
    }
    if x > 1 {
        primes += 1;
    }
    if primes % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Counts closed m-walks with |slope product| > 1 whose (unique) fixed
/// point is one of the integer orbit points.
fn pinned_walk_count(p: &Pattern, adj: &[Vec<u128>], m: usize) -> i128 {
    let n = p.len();
    let v = n - 1;
    let slope_one = |k: usize| -> bool {
        let (a, b) = (p.image(k), p.image(k + 1));
        a.abs_diff(b) == 1
    };
    let mut total: i128 = 0;
    for x in 0..n {
        let mut positions = Vec::with_capacity(m + 1);
        let mut cur = x;
        for _ in 0..=m {
            positions.push(cur);
            cur = p.image(cur);
        }
        // cylinders adjacent to each visited position
        let choices = |pos: usize| -> Vec<usize> {
            let mut cs = Vec::with_capacity(2);
            if pos >= 1 {
                cs.push(pos - 1);
            }
            if pos < v {
                cs.push(pos);
            }
            cs
        };
        let count_words = |restrict_slope_one: bool| -> i128 {
            let start_choices = choices(positions[0]);
            let mut acc = 0i128;
            for &c0 in &start_choices {
                if restrict_slope_one && !slope_one(c0) {
                    continue;
                }
                let mut state: BTreeMap<usize, i128> = BTreeMap::new();
                state.insert(c0, 1);
                for j in 0..m {
                    let nexts = choices(positions[j + 1]);
                    let mut ns: BTreeMap<usize, i128> = BTreeMap::new();
                    for (&cv, &cnt) in &state {
                        for &nv in &nexts {
                            if adj[cv][nv] == 0 {
                                continue;
                            }
                            if restrict_slope_one && !slope_one(nv) {
                                continue;
                            }
                            *ns.entry(nv).or_insert(0) += cnt;
                        }
                    }
                    state = ns;
                }
                acc += state.get(&c0).copied().unwrap_or(0);
            }
            acc
        };
        total += count_words(false) - count_words(true);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(s: &str) -> Pattern {
        Pattern::parse(s).unwrap()
    }

    #[test]
    fn shark_order_examples() {
        use std::cmp::Ordering::*;
        let c = |a: u64, b: u64| shark_compare(SharkNumber::new(a), SharkNumber::new(b));
        assert_eq!(c(3, 5), Less);
        assert_eq!(c(4, 2), Less);
        assert_eq!(c(6, 4), Less);
        assert_eq!(c(2, 1), Less);
        assert_eq!(c(7, 7), Equal);
        assert_eq!(c(1, 9), Greater);
    }

    #[test]
    fn shark_order_properties_to_64() {
        use std::cmp::Ordering::*;
        let nums: Vec<SharkNumber> = (1..=64).map(SharkNumber::new).collect();
        for a in &nums {
            assert_eq!(shark_compare(*a, *a), Equal);
            for b in &nums {
                if a.n != b.n {
                    let ab = shark_compare(*a, *b);
                    let ba = shark_compare(*b, *a);
                    assert_ne!(ab, Equal);
                    assert_eq!(ab, ba.reverse());
                }
            }
        }
        for a in &nums {
            for b in &nums {
                for c in &nums {
                    if shark_compare(*a, *b) == Less && shark_compare(*b, *c) == Less {
                        assert_eq!(shark_compare(*a, *c), Less);
                    }
                }
            }
        }
        for a in &nums {
            if a.n != 3 {
                assert_eq!(shark_compare(SharkNumber::new(3), *a), Less);
            }
            if a.n != 1 {
                assert_eq!(shark_compare(*a, SharkNumber::new(1)), Less);
            }
        }
    }

    #[test]
    fn shark_powers_descend_to_1024() {
        use std::cmp::Ordering::*;
        for k in (1..=10).rev() {
            assert_eq!(
                shark_compare(SharkNumber::new(1 << k), SharkNumber::new(1 << (k - 1))),
                Less
            );
        }
    }

    #[test]
    fn successors_examples() {
        assert_eq!(shark_successors(3, 10), (1..=10).collect());
        assert_eq!(
            shark_successors(5, 10),
            [1, 2, 4, 5, 6, 7, 8, 9, 10].into_iter().collect()
        );
        assert_eq!(
            shark_successors(6, 12),
            [1, 2, 4, 6, 8, 10, 12].into_iter().collect()
        );
    }

    #[test]
    fn digraph_swap_self_covering() {
        let p = pat("2,1");
        let dg = covering_digraph(&p);
        assert_eq!(dg.intervals.len(), 1);
        assert!(dg.proper[0][0]);
    }

    #[test]
    fn digraph_542_pattern_edges() {
        // spatial permutation of the second period-6 case
        let p = pat("6,5,1,2,3,4");
        let i45 = OInterval::new(3, 4);
        let i23 = OInterval::new(1, 2);
        assert!(covers_proper(&p, &i45, &i23));
        assert!(covers_proper(&p, &i23, &i23));
        assert!(covers_proper(&p, &i23, &i45));
    }

    /// Independent second enumeration of the forced edges: explicit loop
    /// over all subinterval witness pairs.
    #[test]
    fn digraph_matches_bruteforce_enumeration() {
        for s in ["3,1,2", "6,5,1,2,3,4", "4,6,5,3,2,1", "3,5,4,2,1", "2,3,4,1"] {
            let p = pat(s);
            let dg = covering_digraph(&p);
            for (ai, ia) in dg.intervals.iter().enumerate() {
                for (bi, ib) in dg.intervals.iter().enumerate() {
                    let mut found = false;
                    for wa in ia.lo..=ia.hi {
                        for wb in wa + 1..=ia.hi {
                            let x = p.image(wa);
                            let y = p.image(wb);
                            if x.min(y) <= ib.lo && ib.hi <= x.max(y) {
                                found = true;
                            }
                        }
                    }
                    assert_eq!(dg.forced[ai][bi], found, "{s} {ia:?} -> {ib:?}");
                }
            }
        }
    }

    #[test]
    fn stefan_three_cycle_length_two() {
        let p = pat("3,1,2");
        match stefan_sequence(&p).unwrap() {
            StefanOutcome::Sequence(seq) => {
                assert_eq!(seq.l(), 2);
                assert_eq!(seq.chain[0], OInterval::new(0, 1));
                assert_eq!(seq.j0, OInterval::new(1, 2));
            }
            other => panic!("expected sequence, got {other:?}"),
        }
    }

    #[test]
    fn stefan_4381_pattern_doubles() {
        let p = pat("4,6,5,3,2,1");
        match stefan_sequence(&p).unwrap() {
            StefanOutcome::Doubling(half) => {
                assert_eq!(half.len(), 3);
                assert_eq!(half, pat("3,1,2"));
            }
            other => panic!("expected doubling, got {other:?}"),
        }
    }

    #[test]
    fn stefan_542_pattern_exists() {
        let p = pat("6,5,1,2,3,4");
        assert!(matches!(
            stefan_sequence(&p).unwrap(),
            StefanOutcome::Sequence(_)
        ));
    }

    #[test]
    fn loop_3_pattern_m7_shape() {
        let p = pat("3,1,2");
        let lp = non_repeating_loop(&p, 7).unwrap().unwrap();
        assert_eq!(lp.len(), 7);
        assert!(lp.non_repeating);
        assert!(lp.validate(&p));
        assert_eq!(lp.intervals[0], OInterval::new(1, 2));
        for t in 1..=6 {
            assert_eq!(lp.intervals[t], OInterval::new(0, 1));
        }
    }

    #[test]
    fn loop_4381_m3_none() {
        let p = pat("4,6,5,3,2,1");
        assert!(non_repeating_loop(&p, 3).unwrap().is_none());
    }

    #[test]
    fn loop_542_m3_exists() {
        let p = pat("6,5,1,2,3,4");
        let lp = non_repeating_loop(&p, 3).unwrap().unwrap();
        assert!(lp.validate(&p));
        assert_eq!(lp.len(), 3);
    }

    #[test]
    fn properize_keeps_proper_loops() {
        let p = pat("6,5,1,2,3,4");
        let ivs = vec![
            OInterval::new(3, 4),
            OInterval::new(1, 2),
            OInterval::new(1, 2),
        ];
        let lp = CoveringLoop {
            intervals: ivs.clone(),
            proper: false,
            non_repeating: check_non_repeating(&p, &ivs),
        };
        assert!(lp.validate(&p));
        let proper = properize_loop(&p, &lp);
        assert_eq!(proper.intervals, ivs);
        assert!(proper.proper);
    }

    #[test]
    fn properize_forced_loop_refines() {
        let p = pat("3,1,2");
        let lp = non_repeating_loop(&p, 4).unwrap().unwrap();
        let proper = properize_loop(&p, &lp);
        assert!(proper.proper);
        assert!(proper.validate(&p));
        for (k, j) in proper.intervals.iter().zip(&lp.intervals) {
            assert!(j.contains(k));
        }
    }

    #[test]
    fn forced_periods_paper_cases() {
        let all20: BTreeSet<u64> = (1..=20).collect();
        // attracting 3-orbit: everything
        let f = forced_periods(&pat("3,1,2"), 20).unwrap();
        assert_eq!(f.periods, all20);
        // attracting 5-orbit: everything except 3
        let f = forced_periods(&pat("3,5,4,2,1"), 20).unwrap();
        let mut want = all20.clone();
        want.remove(&3);
        assert_eq!(f.periods, want);
        // first period-6 case: 1 and the evens
        let f = forced_periods(&pat("4,6,5,3,2,1"), 20).unwrap();
        let want: BTreeSet<u64> = (1..=20).filter(|m| m % 2 == 0 || *m == 1).collect();
        assert_eq!(f.periods, want);
        // second period-6 case: everything
        let f = forced_periods(&pat("6,5,1,2,3,4"), 20).unwrap();
        assert_eq!(f.periods, all20);
    }

    #[test]
    fn forced_periods_witnesses_validate() {
        for s in ["3,1,2", "3,5,4,2,1", "4,6,5,3,2,1", "6,5,1,2,3,4", "2,1", "2,3,4,1"] {
            let p = pat(s);
            let f = forced_periods(&p, 12).unwrap();
            for (m, w) in &f.witnesses {
                assert!(w.validate(&p), "witness for m={m} of {s} fails");
                assert_eq!(w.len() as u64, *m);
                assert!(w.proper);
            }
        }
    }

    #[test]
    fn oracle_trivial_patterns() {
        let p1 = Pattern::new(vec![0]).unwrap();
        assert_eq!(
            pl_oracle_periods(&p1, 5).unwrap(),
            [1].into_iter().collect()
        );
        let p2 = pat("2,1");
        assert_eq!(
            pl_oracle_periods(&p2, 10).unwrap(),
            [1, 2].into_iter().collect()
        );
    }

    #[test]
    fn oracle_542_all_periods() {
        let p = pat("6,5,1,2,3,4");
        assert_eq!(pl_oracle_periods(&p, 10).unwrap(), (1..=10).collect());
    }

    #[test]
    fn oracle_4381_evens_and_one() {
        let p = pat("4,6,5,3,2,1");
        let got = pl_oracle_periods(&p, 12).unwrap();
        assert!(got.contains(&1) && got.contains(&6));
        assert!(!got.contains(&3) && !got.contains(&5) && !got.contains(&7));
    }

    #[test]
    fn oracle_resource_cap_refusal() {
        let p = pat("2,1");
        assert!(matches!(
            pl_oracle_periods(&p, 100),
            Err(PatternError::OracleCap { .. })
        ));
    }

    #[test]
    fn reflection_invariance_small() {
        for s in ["3,1,2", "3,5,4,2,1", "4,6,5,3,2,1", "6,5,1,2,3,4", "2,3,4,1"] {
            let p = pat(s);
            let r = p.reverse();
            let fp = forced_periods(&p, 12).unwrap().periods;
            let fr = forced_periods(&r, 12).unwrap().periods;
            assert_eq!(fp, fr, "pattern {s}");
        }
    }

    /// Exhaustive n <= 6 sanity: tail realized and sound vs the oracle.
    #[test]
    fn exhaustive_small_patterns() {
        for n in 2..=6usize {
            for p in all_cycles(n) {
                let forced = forced_periods(&p, 10).unwrap();
                let oracle = pl_oracle_periods(&p, 10).unwrap();
                let tail = shark_successors(n as u64, 10);
                assert!(
                    tail.is_subset(&forced.periods),
                    "tail missing for {p}: tail {tail:?} forced {:?}",
                    forced.periods
                );
                assert!(
                    forced.periods.is_subset(&oracle),
                    "unsound for {p}: forced {:?} oracle {oracle:?}",
                    forced.periods
                );
            }
        }
    }

    pub(crate) fn all_cycles(n: usize) -> Vec<Pattern> {
        // all cyclic permutations: arrangements of the elements following 0
        let mut out = Vec::new();
        let mut rest: Vec<usize> = (1..n).collect();
        permute(&mut rest, 0, &mut |perm| {
            let mut sigma = vec![0; n];
            let mut cur = 0usize;
            for &nx in perm {
                sigma[cur] = nx;
                cur = nx;
            }
            sigma[cur] = 0;
            out.push(Pattern::new(sigma).unwrap());
        });
        out
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&Vec<usize>)) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    /// Direct exact-rational PL composition: the oracle's own oracle on
    /// small patterns.
    #[test]
    fn oracle_matches_direct_composition_small() {
        for s in ["2,1", "3,1,2", "2,3,1", "2,3,4,1", "3,4,2,1", "4,1,2,3", "3,5,4,2,1"] {
            let p = pat(s);
            let want = direct_pl_periods(&p, 8);
            let got = pl_oracle_periods(&p, 8).unwrap();
            assert_eq!(got, want, "pattern {s}");
        }
    }

    fn direct_pl_periods(p: &Pattern, upto: u64) -> BTreeSet<u64> {
        use num_rational::BigRational;
        use num_traits::Zero;
        type R = BigRational;
        type Pl = Vec<(R, R)>; // breakpoints (x, value), sorted by x

        let n = p.len();
        let verts: Vec<R> = (0..n).map(|i| R::from_integer(i.into())).collect();
        let imgs: Vec<R> = (0..n).map(|i| R::from_integer(p.image(i).into())).collect();

        let eval_g = |x: &R| -> R {
            let mut k = 0usize;
            while k + 2 < n && x > &verts[k + 1] {
                k += 1;
            }
            let t = (x - &verts[k]) / (&verts[k + 1] - &verts[k]);
            &imgs[k] + &t * (&imgs[k + 1] - &imgs[k])
        };
        fn pl_eval(pieces: &Pl, x: &R) -> R {
            let mut k = 0usize;
            while k + 2 < pieces.len() && x > &pieces[k + 1].0 {
                k += 1;
            }
            let (x0, y0) = &pieces[k];
            let (x1, y1) = &pieces[k + 1];
            if x1 == x0 {
                return y0.clone();
            }
            let t = (x - x0) / (x1 - x0);
            y0 + &t * (y1 - y0)
        }
        // compose g after `pieces`
        let apply = |pieces: &Pl| -> Pl {
            let mut xs: Vec<R> = pieces.iter().map(|(x, _)| x.clone()).collect();
            for w in pieces.windows(2) {
                let (x0, y0) = &w[0];
                let (x1, y1) = &w[1];
                if y0 != y1 {
                    for vv in &verts {
                        let lo = y0.min(y1);
                        let hi = y0.max(y1);
                        if vv > lo && vv < hi {
                            let t = (vv - y0) / (y1 - y0);
                            xs.push(x0 + &t * (x1 - x0));
                        }
                    }
                }
            }
            xs.sort();
            xs.dedup();
            xs.into_iter()
                .map(|x| {
                    let y = pl_eval(pieces, &x);
                    (x, eval_g(&y))
                })
                .collect()
        };

        // fixed sets (isolated points and whole segments) of each composite
        let identity: Pl = (0..n).map(|i| (verts[i].clone(), verts[i].clone())).collect();
        let mut comp = identity;
        let mut fixed_sets: Vec<Vec<(R, R)>> = Vec::new();
        for _ in 1..=upto {
            comp = apply(&comp);
            let mut fixed: Vec<(R, R)> = Vec::new();
            for w in comp.windows(2) {
                let (x0, y0) = &w[0];
                let (x1, y1) = &w[1];
                let d0 = y0 - x0;
                let d1 = y1 - x1;
                if d0.is_zero() && d1.is_zero() {
                    fixed.push((x0.clone(), x1.clone()));
                } else if d0.is_zero() {
                    fixed.push((x0.clone(), x0.clone()));
                } else if d1.is_zero() {
                    fixed.push((x1.clone(), x1.clone()));
                } else if (d0 < R::zero()) != (d1 < R::zero()) {
                    let t = &d0 / (&d0 - &d1);
                    let x = x0 + &t * (x1 - x0);
                    fixed.push((x.clone(), x));
                }
            }
            fixed_sets.push(fixed);
        }

        let mut least = BTreeSet::new();
        for m in 1..=upto as usize {
            let mine = &fixed_sets[m - 1];
            let mut found = false;
            for (a, b) in mine {
                if a == b {
                    let covered = (1..m).any(|d| {
                        m % d == 0 && fixed_sets[d - 1].iter().any(|(c, dd)| c <= a && a <= dd)
                    });
                    if !covered {
                        found = true;
                        break;
                    }
                } else {
                    // subtract divisor fixed sets from the segment; any
                    // leftover open piece holds least-m points
                    let mut remaining = vec![(a.clone(), b.clone())];
                    for d in 1..m {
                        if m % d != 0 {
                            continue;
                        }
                        let mut next = Vec::new();
                        for (ra, rb) in remaining {
                            let mut cur = vec![(ra, rb)];
                            for (c, dd) in &fixed_sets[d - 1] {
                                let mut nxt = Vec::new();
                                for (sa, sb) in cur {
                                    if dd < &sa || c > &sb {
                                        nxt.push((sa, sb));
                                    } else {
                                        if &sa < c {
                                            nxt.push((sa.clone(), c.clone()));
                                        }
                                        if dd < &sb {
                                            nxt.push((dd.clone(), sb.clone()));
                                        }
                                    }
                                }
                                cur = nxt;
                            }
                            next.extend(cur);
                        }
                        remaining = next;
                    }
                    if remaining.iter().any(|(sa, sb)| sa < sb) {
                        found = true;
                        break;
                    }
                }
            }
            if found {
                least.insert(m as u64);
            }
        }
        least
    }
}
