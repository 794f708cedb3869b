//! Grid resizing: occupancy-preserving 2x2 max-pooling down and bilinear
//! upsampling (aligned corners) back up.

use super::{GridError, SemanticGrid};

/// Halves the grid side with 2x2 max-pooling. Max-pooling keeps thin
/// structures such as lane markings occupied instead of averaging them away.
pub fn downsample_half(g: &SemanticGrid) -> Result<SemanticGrid, GridError> {
    let spec = g.spec().halved()?;
    let n = g.spec().size_cells();
    let half = spec.size_cells();
    let src = g.values();
    let mut values = vec![0.0f32; half * half];
    for row in 0..half {
        for col in 0..half {
            let r = row * 2;
            let c = col * 2;
            let v = src[r * n + c]
                .max(src[r * n + c + 1])
                .max(src[(r + 1) * n + c])
                .max(src[(r + 1) * n + c + 1]);
            values[row * half + col] = v;
        }
    }
    SemanticGrid::from_values(spec, values)
}

/// Doubles the grid side with bilinear interpolation using the aligned-corner
/// convention, so constant and linear fields are reproduced exactly.
pub fn upsample_bilinear_double(g: &SemanticGrid) -> SemanticGrid {
    let n = g.spec().size_cells();
    let out_spec = g.spec().doubled();
    let m = out_spec.size_cells();
    let src = g.values();
    // Source coordinate for each output index; for n == 1 everything maps to 0.
    let scale = if m > 1 {
        (n as f64 - 1.0) / (m as f64 - 1.0)
    } else {
        0.0
    };
    let coords: Vec<(usize, usize, f32)> = (0..m)
        .map(|i| {
            let pos = i as f64 * scale;
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(n - 1);
            (i0, i1, (pos - i0 as f64) as f32)
        })
        .collect();
    let mut values = vec![0.0f32; m * m];
    for (row, &(r0, r1, fr)) in coords.iter().enumerate() {
        for (col, &(c0, c1, fc)) in coords.iter().enumerate() {
            let top = src[r0 * n + c0] * (1.0 - fc) + src[r0 * n + c1] * fc;
            let bot = src[r1 * n + c0] * (1.0 - fc) + src[r1 * n + c1] * fc;
            values[row * m + col] = (top * (1.0 - fr) + bot * fr).clamp(0.0, 1.0);
        }
    }
    SemanticGrid::from_values(out_spec, values).expect("interpolation stays in range")
}
