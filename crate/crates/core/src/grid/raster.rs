//! Rasterization of metric geometry onto occupancy grids.

use super::{cell_to_metric, metric_to_cell, CellIndex, GridError, GridSpec, SemanticGrid};
use crate::geom::SensorPoint;

/// Projects a set of sensor-frame points top-down onto a grid. A cell holds 1
/// where at least one point lands and 0 elsewhere. Points outside the grid
/// bounds are truncated; the second return value counts them.
pub fn rasterize_points(points: &[SensorPoint], spec: &GridSpec) -> (SemanticGrid, usize) {
    let mut grid = SemanticGrid::zeros(*spec);
    let mut dropped = 0usize;
    for &p in points {
        match metric_to_cell(p, spec) {
            Some(c) => grid.set(c.row, c.col, 1.0),
            None => dropped += 1,
        }
    }
    (grid, dropped)
}

/// Threshold below which rendered Gaussian mass is clamped to zero.
const GAUSSIAN_FLOOR: f32 = 1e-4;

/// Renders an unnormalized 2D Gaussian with peak 1 at the cell containing
/// `center`. Values below `1e-4` are clamped to 0. An out-of-bounds center
/// yields an all-zero grid and sets the returned flag.
pub fn render_gaussian_target(
    center: SensorPoint,
    sigma_cells: f64,
    spec: &GridSpec,
) -> Result<(SemanticGrid, bool), GridError> {
    if !(sigma_cells > 0.0) {
        return Err(GridError::NonPositiveSigma(sigma_cells));
    }
    let mut grid = SemanticGrid::zeros(*spec);
    let Some(peak) = metric_to_cell(center, spec) else {
        return Ok((grid, true));
    };
    // Beyond this radius every value falls under the clamp floor.
    let radius = (sigma_cells * (2.0 * (1.0 / GAUSSIAN_FLOOR as f64).ln()).sqrt()).ceil() as i64;
    let size = spec.size_cells() as i64;
    let (r0, c0) = (peak.row as i64, peak.col as i64);
    let inv = 1.0 / (2.0 * sigma_cells * sigma_cells);
    for row in (r0 - radius).max(0)..=(r0 + radius).min(size - 1) {
        for col in (c0 - radius).max(0)..=(c0 + radius).min(size - 1) {
            let dr = (row - r0) as f64;
            let dc = (col - c0) as f64;
            let v = (-(dr * dr + dc * dc) * inv).exp() as f32;
            if v >= GAUSSIAN_FLOOR {
                grid.set(row as usize, col as usize, v.min(1.0));
            }
        }
    }
    Ok((grid, false))
}

/// Marks cells whose centers lie inside the polygon (even-odd rule). The
/// polygon is given by its vertices in order; it need not be convex.
pub fn fill_polygon(grid: &mut SemanticGrid, vertices: &[SensorPoint]) {
    if vertices.len() < 3 {
        return;
    }
    let spec = *grid.spec();
    let res = spec.resolution_m();
    // Bounding box in cell indices, clamped to the grid.
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_z = f64::INFINITY;
    let mut max_z = f64::NEG_INFINITY;
    for v in vertices {
        min_x = min_x.min(v.x);
        max_x = max_x.max(v.x);
        min_z = min_z.min(v.z);
        max_z = max_z.max(v.z);
    }
    let corners = [
        SensorPoint::new(min_x, min_z),
        SensorPoint::new(max_x, max_z),
    ];
    let (row_hi, row_lo, col_lo, col_hi) = cell_bounds(&corners, &spec, res);
    for row in row_lo..=row_hi {
        for col in col_lo..=col_hi {
            let center = cell_to_metric(CellIndex { row, col }, &spec).expect("in bounds");
            if point_in_polygon(center, vertices) {
                grid.set(row, col, 1.0);
            }
        }
    }
}

/// Fills the footprint of an oriented rectangle (vehicle-style: `length`
/// along the heading, `width` across). The cell containing the rectangle
/// center is always set when in bounds, so thin footprints never vanish.
pub fn fill_oriented_rect(
    grid: &mut SemanticGrid,
    center: SensorPoint,
    heading: f64,
    length_m: f64,
    width_m: f64,
) {
    let (sin_h, cos_h) = heading.sin_cos();
    // Heading measured from +Z toward +X.
    let fwd = (sin_h, cos_h); // (x, z) components of the forward axis
    let left = (cos_h, -sin_h); // perpendicular
    let hl = length_m / 2.0;
    let hw = width_m / 2.0;
    let corner = |a: f64, b: f64| {
        SensorPoint::new(
            center.x + a * fwd.0 + b * left.0,
            center.z + a * fwd.1 + b * left.1,
        )
    };
    let vertices = [
        corner(hl, hw),
        corner(hl, -hw),
        corner(-hl, -hw),
        corner(-hl, hw),
    ];
    fill_polygon(grid, &vertices);
    if let Some(c) = metric_to_cell(center, grid.spec()) {
        grid.set(c.row, c.col, 1.0);
    }
}

/// Marks cells whose centers lie within `width_m / 2` of the polyline.
pub fn stroke_polyline(grid: &mut SemanticGrid, points: &[SensorPoint], width_m: f64) {
    if points.len() < 2 || width_m <= 0.0 {
        return;
    }
    let spec = *grid.spec();
    let res = spec.resolution_m();
    let half = width_m / 2.0;
    for seg in points.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let pad = half + res;
        let corners = [
            SensorPoint::new(a.x.min(b.x) - pad, a.z.min(b.z) - pad),
            SensorPoint::new(a.x.max(b.x) + pad, a.z.max(b.z) + pad),
        ];
        let (row_hi, row_lo, col_lo, col_hi) = cell_bounds(&corners, &spec, res);
        for row in row_lo..=row_hi {
            for col in col_lo..=col_hi {
                if grid.get(row, col) == 1.0 {
                    continue;
                }
                let center = cell_to_metric(CellIndex { row, col }, &spec).expect("in bounds");
                if dist_point_segment(center, a, b) <= half {
                    grid.set(row, col, 1.0);
                }
            }
        }
    }
}

/// Clamped cell-index bounding box of a metric box given by two corners.
/// Returns (row_hi, row_lo, col_lo, col_hi) with row_lo <= row_hi.
fn cell_bounds(
    corners: &[SensorPoint; 2],
    spec: &GridSpec,
    res: f64,
) -> (usize, usize, usize, usize) {
    let size = spec.size_cells() as f64;
    let half_rows = (spec.size_cells() / 2) as f64;
    let clampi = |v: f64| -> usize { v.max(0.0).min(size - 1.0) as usize };
    let min_x = corners[0].x.min(corners[1].x);
    let max_x = corners[0].x.max(corners[1].x);
    let min_z = corners[0].z.min(corners[1].z);
    let max_z = corners[0].z.max(corners[1].z);
    // Row shrinks as X grows.
    let row_hi = clampi(half_rows - 1.0 - (min_x / res).floor());
    let row_lo = clampi(half_rows - 1.0 - (max_x / res).floor());
    let col_lo = clampi((min_z / res).floor());
    let col_hi = clampi((max_z / res).floor());
    (row_hi, row_lo, col_lo, col_hi)
}

fn point_in_polygon(p: SensorPoint, vertices: &[SensorPoint]) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n - 1;
    for i in 0..n {
        let (vi, vj) = (vertices[i], vertices[j]);
        if (vi.z > p.z) != (vj.z > p.z) {
            let x_cross = vi.x + (p.z - vi.z) / (vj.z - vi.z) * (vj.x - vi.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn dist_point_segment(p: SensorPoint, a: SensorPoint, b: SensorPoint) -> f64 {
    let abx = b.x - a.x;
    let abz = b.z - a.z;
    let len2 = abx * abx + abz * abz;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * abx + (p.z - a.z) * abz) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let cx = a.x + t * abx;
    let cz = a.z + t * abz;
    ((p.x - cx).powi(2) + (p.z - cz).powi(2)).sqrt()
}
