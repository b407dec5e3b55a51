/// `(max + 1) / (min + 1) − 1`: ratio cost on degrees shifted by one.
pub fn degree_cost(x: u32, y: u32) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    (hi as f64 + 1.0) / (lo as f64 + 1.0) - 1.0
}

/// Precomputed [`degree_cost`] for degrees up to a bound.
#[derive(Clone, Debug)]
pub(crate) struct CostTable {
    width: usize,
    table: Vec<f64>,
}

impl CostTable {
    const MAX_WIDTH: usize = 2048;

    pub(crate) fn new(max_degree: u32) -> Option<Self> {
        let width = max_degree as usize + 1;
        if width > Self::MAX_WIDTH {
            return None;
        }
        let mut table = vec![0.0; width * width];
        for x in 0..width {
            for y in 0..width {
                table[x * width + y] = degree_cost(x as u32, y as u32);
            }
        }
        Some(CostTable { width, table })
    }

    #[inline]
    fn get(&self, x: u32, y: u32) -> f64 {
        self.table[x as usize * self.width + y as usize]
    }
}

/// Reusable DP rows.
#[derive(Default, Debug)]
pub(crate) struct DtwScratch {
    prev: Vec<f64>,
    cur: Vec<f64>,
}

/// DP over the cost matrix. Returns infinity as soon as `base` plus every
/// cell of a row exceeds `limit`: row minima never decrease, so the final
/// sum would too.
fn dtw_impl(
    a: &[u32],
    b: &[u32],
    cost: impl Fn(u32, u32) -> f64,
    s: &mut DtwScratch,
    base: f64,
    limit: f64,
) -> f64 {
    debug_assert!(!a.is_empty() && !b.is_empty());
    let m = b.len();
    s.prev.clear();
    s.prev.resize(m, 0.0);
    s.cur.clear();
    s.cur.resize(m, 0.0);
    let mut acc = 0.0;
    for (j, &y) in b.iter().enumerate() {
        acc += cost(a[0], y);
        s.prev[j] = acc;
    }
    if base + s.prev[0] > limit {
        return f64::INFINITY;
    }
    for &x in &a[1..] {
        let (prev, cur) = (&s.prev, &mut s.cur);
        cur[0] = cost(x, b[0]) + prev[0];
        let mut row_min = cur[0];
        for j in 1..m {
            let best = prev[j].min(cur[j - 1]).min(prev[j - 1]);
            cur[j] = cost(x, b[j]) + best;
            row_min = row_min.min(cur[j]);
        }
        if base + row_min > limit {
            return f64::INFINITY;
        }
        std::mem::swap(&mut s.prev, &mut s.cur);
    }
    s.prev[m - 1]
}

/// Dynamic time warping between two non-empty degree sequences.
pub fn dtw(a: &[u32], b: &[u32]) -> f64 {
    dtw_impl(a, b, degree_cost, &mut DtwScratch::default(), 0.0, f64::INFINITY)
}

/// Sum of per-hop DTW distances. A hop where both rings are empty adds 0;
/// a hop where exactly one is empty ends the sum.
pub fn struct_distance(a: &[Vec<u32>], b: &[Vec<u32>]) -> f64 {
    distance_with(a, b, None, &mut DtwScratch::default(), f64::INFINITY)
}

/// `Σ_x min_y cost(x, y)` over sorted `a`, `b`: every row of the warping
/// path holds at least one cell, so this bounds DTW from below. The cost
/// grows with distance on either side, so the nearest lower and upper values
/// suffice.
fn nearest_sum(a: &[u32], b: &[u32], cost: &impl Fn(u32, u32) -> f64) -> f64 {
    let mut j = 0;
    let mut total = 0.0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        let up = b.get(j).map(|&y| cost(x, y));
        let down = j.checked_sub(1).map(|k| cost(x, b[k]));
        total += match (up, down) {
            (Some(u), Some(d)) => u.min(d),
            (Some(u), None) => u,
            (None, Some(d)) => d,
            (None, None) => 0.0,
        };
    }
    total
}

fn lower_bound_with(a: &[Vec<u32>], b: &[Vec<u32>], cost: impl Fn(u32, u32) -> f64) -> f64 {
    let mut total = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        match (ra.is_empty(), rb.is_empty()) {
            (true, true) => continue,
            (false, false) => total += nearest_sum(ra, rb, &cost).max(nearest_sum(rb, ra, &cost)),
            _ => break,
        }
    }
    total
}

/// Lower bound on [`struct_distance`] in linear time.
pub(crate) fn lower_bound(a: &[Vec<u32>], b: &[Vec<u32>], table: Option<&CostTable>) -> f64 {
    match table {
        Some(t) => lower_bound_with(a, b, |x, y| t.get(x, y)),
        None => lower_bound_with(a, b, degree_cost),
    }
}

/// Relative slack on the lower-bound test. The bound and the DP sum terms in
/// different orders, so a mathematically tight bound may round above the DP
/// value by a few ulps.
const BOUND_SLACK: f64 = 1e-9;

/// True when a pair with lower bound `lb` cannot have distance `<= limit`.
pub(crate) fn bound_exceeds(lb: f64, limit: f64) -> bool {
    lb > limit * (1.0 + BOUND_SLACK) + BOUND_SLACK
}

pub(crate) fn distance_with(
    a: &[Vec<u32>],
    b: &[Vec<u32>],
    table: Option<&CostTable>,
    s: &mut DtwScratch,
    limit: f64,
) -> f64 {
    let mut total = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        match (ra.is_empty(), rb.is_empty()) {
            (true, true) => continue,
            (false, false) => {}
            _ => break,
        }
        let d = match table {
            Some(t) => dtw_impl(ra, rb, |x, y| t.get(x, y), s, total, limit),
            None => dtw_impl(ra, rb, degree_cost, s, total, limit),
        };
        total += d;
        if total > limit {
            return f64::INFINITY;
        }
    }
    total
}
