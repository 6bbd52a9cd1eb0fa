use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::quadrature::{gauss_legendre, gauss_rect, gauss_triangle};
use crate::splines::MultiIndex;

/// Position of a cell relative to the kept side of a level set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Inside,
    Cut,
    Outside,
}

impl CellStatus {
    pub fn is_active(self) -> bool {
        self != CellStatus::Outside
    }

    pub fn label(self) -> &'static str {
        match self {
            CellStatus::Inside => "inside",
            CellStatus::Cut => "cut",
            CellStatus::Outside => "outside",
        }
    }
}

/// Bulk quadrature point in reference coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint2 {
    pub x: [f64; 2],
    pub w: f64,
}

/// Quadrature point on the trim curve with reference arc-length weight and
/// unit outward normal of the kept region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: [f64; 2],
    pub w: f64,
    pub normal: [f64; 2],
}

#[derive(Debug, Clone, Default)]
pub struct CutRule {
    pub bulk: Vec<QuadPoint2>,
    pub curve: Vec<CurvePoint>,
}

/// Bisection depth and Gauss orders of the cut-cell rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutOptions {
    pub depth: usize,
    /// Gauss points per direction on uncut subcells.
    pub bulk_order: usize,
    /// Collapsed Gauss points per direction on leaf triangles.
    pub triangle_order: usize,
    /// Gauss points per curve segment.
    pub curve_order: usize,
}

impl CutOptions {
    pub const DEFAULT_DEPTH: usize = 6;

    pub fn for_degree(p: usize) -> Self {
        Self { depth: Self::DEFAULT_DEPTH, bulk_order: p + 2, triangle_order: p + 3, curve_order: p + 2 }
    }

    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }
}

/// Classifies the box `lo..hi` from an `m x m` sample lattice including the
/// corners, refined by the region's exact bounds when it has them.
pub fn box_status(region: &dyn Region, lo: [f64; 2], hi: [f64; 2], m: usize) -> CellStatus {
    let m = m.max(2);
    let mut kept = 0;
    for j in 0..m {
        for i in 0..m {
            let x = [
                lo[0] + (hi[0] - lo[0]) * i as f64 / (m - 1) as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / (m - 1) as f64,
            ];
            if region.is_kept(x) {
                kept += 1;
            }
        }
    }
    if kept != 0 && kept != m * m {
        return CellStatus::Cut;
    }
    if let Some((a, b)) = region.range_on_box(lo, hi) {
        if a < 0.0 && b > 0.0 {
            return CellStatus::Cut;
        }
    }
    if kept == 0 {
        CellStatus::Outside
    } else {
        CellStatus::Inside
    }
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Zero of `psi` on the segment `a..b`, whose end values differ in sign.
pub(crate) fn segment_root(region: &dyn Region, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let kept_a = region.is_kept(a);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if region.is_kept(lerp(a, b, mid)) == kept_a {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON {
            break;
        }
    }
    lerp(a, b, 0.5 * (lo + hi))
}

/// Point where the normal line through the chord midpoint meets `psi = 0`.
fn curve_midnode(region: &dyn Region, x: [f64; 2], e: [f64; 2]) -> [f64; 2] {
    let m0 = lerp(x, e, 0.5);
    let d = [e[0] - x[0], e[1] - x[1]];
    let len = d[0].hypot(d[1]);
    if len == 0.0 {
        return m0;
    }
    let nrm = [d[1] / len, -d[0] / len];
    let at = |s: f64| [m0[0] + s * nrm[0], m0[1] + s * nrm[1]];
    let mut s = 0.0;
    for _ in 0..50 {
        let p = at(s);
        let g = region.grad_psi(p);
        let slope = g[0] * nrm[0] + g[1] * nrm[1];
        if slope == 0.0 {
            break;
        }
        let ds = region.psi(p) / slope;
        s -= ds;
        if ds.abs() <= 1e-16 * len {
            break;
        }
    }
    // a wild Newton step means the chord is badly resolved; fall back to it
    if s.abs() > len {
        return m0;
    }
    at(s)
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn push_triangle(out: &mut Vec<QuadPoint2>, a: [f64; 2], b: [f64; 2], c: [f64; 2], order: usize) {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ac = [c[0] - a[0], c[1] - a[1]];
    let det = cross(ab, ac).abs();
    if det == 0.0 {
        return;
    }
    for (r, w) in gauss_triangle(order) {
        out.push(QuadPoint2 { x: [a[0] + r[0] * ab[0] + r[1] * ac[0], a[1] + r[0] * ab[1] + r[1] * ac[1]], w: w * det });
    }
}

/// Triangle `a, b, c` whose side `b..c` is replaced by the quadratic curve
/// through `b`, `m`, `c`.
fn push_curved_triangle(out: &mut Vec<QuadPoint2>, a: [f64; 2], b: [f64; 2], c: [f64; 2], m: [f64; 2], order: usize) {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ac = [c[0] - a[0], c[1] - a[1]];
    let q = [m[0] - 0.5 * (b[0] + c[0]), m[1] - 0.5 * (b[1] + c[1])];
    // signed against the straight triangle, so a curve bulging past `a`
    // still integrates over the exact region
    let orient = cross(ab, ac).signum();
    for (r, w) in gauss_triangle(order) {
        let (xi, eta) = (r[0], r[1]);
        let x = [
            a[0] + xi * ab[0] + eta * ac[0] + 4.0 * xi * eta * q[0],
            a[1] + xi * ab[1] + eta * ac[1] + 4.0 * xi * eta * q[1],
        ];
        let dxi = [ab[0] + 4.0 * eta * q[0], ab[1] + 4.0 * eta * q[1]];
        let deta = [ac[0] + 4.0 * xi * q[0], ac[1] + 4.0 * xi * q[1]];
        out.push(QuadPoint2 { x, w: w * orient * cross(dxi, deta) });
    }
}

fn push_curve(region: &dyn Region, out: &mut Vec<CurvePoint>, x: [f64; 2], e: [f64; 2], m: [f64; 2], order: usize) {
    let d = [e[0] - x[0], e[1] - x[1]];
    if d[0] == 0.0 && d[1] == 0.0 {
        return;
    }
    let q = [m[0] - 0.5 * (x[0] + e[0]), m[1] - 0.5 * (x[1] + e[1])];
    let (ts, ws) = gauss_legendre(order);
    for (&t, &w) in ts.iter().zip(&ws) {
        let b = 4.0 * t * (1.0 - t);
        let p = [x[0] + t * d[0] + b * q[0], x[1] + t * d[1] + b * q[1]];
        let db = 4.0 * (1.0 - 2.0 * t);
        let dp = [d[0] + db * q[0], d[1] + db * q[1]];
        let len = dp[0].hypot(dp[1]);
        let mut normal = [dp[1] / len, -dp[0] / len];
        let g = region.grad_psi(p);
        if normal[0] * g[0] + normal[1] * g[1] < 0.0 {
            normal = [-normal[0], -normal[1]];
        }
        out.push(CurvePoint { x: p, w: w * len, normal });
    }
}

fn box_corners(lo: [f64; 2], hi: [f64; 2]) -> [[f64; 2]; 4] {
    [lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]]
}

fn leaf_rule(region: &dyn Region, lo: [f64; 2], hi: [f64; 2], opts: &CutOptions, cell: MultiIndex, out: &mut CutRule) -> Result<()> {
    let c = box_corners(lo, hi);
    let kept: Vec<bool> = c.iter().map(|&x| region.is_kept(x)).collect();
    let changes = (0..4).filter(|&i| kept[i] != kept[(i + 1) % 4]).count();
    if changes == 0 {
        // the curve dips in and out through one edge below leaf resolution
        if kept[0] {
            out.bulk.extend(gauss_rect(opts.bulk_order, lo, hi).into_iter().map(|(x, w)| QuadPoint2 { x, w }));
        }
        return Ok(());
    }
    if changes >= 4 {
        return Err(Error::RefineMesh(cell));
    }
    let exit = (0..4).find(|&i| kept[i] && !kept[(i + 1) % 4]).expect("two sign changes");
    let entry = (0..4).find(|&i| !kept[i] && kept[(i + 1) % 4]).expect("two sign changes");
    let x = segment_root(region, c[exit], c[(exit + 1) % 4]);
    let e = segment_root(region, c[entry], c[(entry + 1) % 4]);
    let mut poly = vec![e];
    let mut k = (entry + 1) % 4;
    loop {
        poly.push(c[k]);
        if k == exit {
            break;
        }
        k = (k + 1) % 4;
    }
    poly.push(x);
    let v = poly[1];
    for i in 2..poly.len() - 1 {
        push_triangle(&mut out.bulk, v, poly[i], poly[i + 1], opts.triangle_order);
    }
    let m = curve_midnode(region, x, e);
    push_curved_triangle(&mut out.bulk, v, x, e, m, opts.triangle_order);
    push_curve(region, &mut out.curve, x, e, m, opts.curve_order);
    Ok(())
}

fn bisect(
    region: &dyn Region,
    lo: [f64; 2],
    hi: [f64; 2],
    level: usize,
    opts: &CutOptions,
    cell: MultiIndex,
    out: &mut CutRule,
) -> Result<()> {
    match box_status(region, lo, hi, 3) {
        CellStatus::Outside => Ok(()),
        CellStatus::Inside => {
            out.bulk.extend(gauss_rect(opts.bulk_order, lo, hi).into_iter().map(|(x, w)| QuadPoint2 { x, w }));
            Ok(())
        }
        CellStatus::Cut if level >= opts.depth => leaf_rule(region, lo, hi, opts, cell, out),
        CellStatus::Cut => {
            let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
            for (a, b) in [
                (lo, mid),
                ([mid[0], lo[1]], [hi[0], mid[1]]),
                ([lo[0], mid[1]], [mid[0], hi[1]]),
                (mid, hi),
            ] {
                bisect(region, a, b, level + 1, opts, cell, out)?;
            }
            Ok(())
        }
    }
}

/// Sign changes of `psi` around the perimeter of a box, sampled with
/// `per_edge` intervals on every edge.
pub fn perimeter_sign_changes(region: &dyn Region, lo: [f64; 2], hi: [f64; 2], per_edge: usize) -> usize {
    let c = box_corners(lo, hi);
    let mut signs = Vec::with_capacity(4 * per_edge);
    for e in 0..4 {
        for k in 0..per_edge {
            signs.push(region.is_kept(lerp(c[e], c[(e + 1) % 4], k as f64 / per_edge as f64)));
        }
    }
    (0..signs.len()).filter(|&i| signs[i] != signs[(i + 1) % signs.len()]).count()
}

/// Quadrature of the kept part of one cut cell and of the trim curve inside
/// it, by recursive bisection with curved-triangle rules on the leaves.
pub fn cut_quadrature(region: &dyn Region, cell: MultiIndex, lo: [f64; 2], hi: [f64; 2], opts: &CutOptions) -> Result<CutRule> {
    if perimeter_sign_changes(region, lo, hi, 8) >= 4 {
        return Err(Error::RefineMesh(cell));
    }
    let mut out = CutRule::default();
    bisect(region, lo, hi, 0, opts, cell, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Keep, Trim};

    /// Vertical strip `|x - 0.5| < 0.2`: two separate curve branches.
    struct Strip;

    impl Region for Strip {
        fn psi(&self, x: [f64; 2]) -> f64 {
            (x[0] - 0.5).powi(2) - 0.04
        }

        fn grad_psi(&self, x: [f64; 2]) -> [f64; 2] {
            [2.0 * (x[0] - 0.5), 0.0]
        }
    }

    #[test]
    fn status_examples() {
        let disc = Trim::quarter_disc(Keep::Inside);
        assert_eq!(box_status(&disc, [0.1, 0.1], [0.3, 0.3], 4), CellStatus::Inside);
        assert_eq!(box_status(&disc, [0.875, 0.0], [1.0, 0.125], 4), CellStatus::Cut);
        assert_eq!(box_status(&disc, [0.875, 0.875], [1.0, 1.0], 4), CellStatus::Outside);
        // a sliver the lattice misses is still caught by the exact bound
        assert_eq!(box_status(&disc, [0.899, 0.0], [1.0, 0.01], 2), CellStatus::Cut);
    }

    #[test]
    fn single_cell_is_a_quarter_disc() {
        let disc = Trim { radius: 0.5, keep: Keep::Inside };
        let rule = cut_quadrature(&disc, [0; 3], [0.0, 0.0], [1.0, 1.0], &CutOptions::for_degree(2)).unwrap();
        let area: f64 = rule.bulk.iter().map(|q| q.w).sum();
        let length: f64 = rule.curve.iter().map(|q| q.w).sum();
        let pi = std::f64::consts::PI;
        assert!((area / (pi * 0.25 / 4.0) - 1.0).abs() < 1e-8);
        assert!((length / (pi * 0.5 / 2.0) - 1.0).abs() < 1e-8);
        for q in &rule.curve {
            let r = q.x[0].hypot(q.x[1]);
            assert!((q.normal[0] - q.x[0] / r).abs() < 1e-6);
        }
    }

    #[test]
    fn several_branches_need_refinement() {
        let r = cut_quadrature(&Strip, [3, 1, 0], [0.0, 0.0], [1.0, 1.0], &CutOptions::for_degree(1));
        assert!(matches!(r, Err(Error::RefineMesh([3, 1, 0]))));
    }
}
