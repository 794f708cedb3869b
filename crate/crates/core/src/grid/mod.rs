//! Metric bird's-eye-view occupancy grids.
//!
//! A grid covers a square patch of ground in front of the sensor. The sensor
//! sits at the center of the left edge: columns grow with the forward Z axis,
//! rows shrink with the lateral X axis (X increases toward row 0), and each
//! cell spans `resolution_m` meters per side.

mod io;
mod raster;
mod resize;

pub use io::{read_rasters, write_rasters, RasterFile};
pub use raster::{
    fill_oriented_rect, fill_polygon, rasterize_points, render_gaussian_target, stroke_polyline,
};
pub use resize::{downsample_half, upsample_bilinear_double};

use crate::geom::{Pose, SensorPoint};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("cell ({row}, {col}) out of range for a {size}-cell grid")]
    CellOutOfRange { row: i64, col: i64, size: usize },
    #[error("grid side {0} is odd; 2x2 pooling needs an even side")]
    OddSide(usize),
    #[error("grid value {value} at cell ({row}, {col}) outside [0, 1]")]
    ValueOutOfRange { row: usize, col: usize, value: f32 },
    #[error("unknown channel name {0:?} (expected obstacles, road, lane, target or others)")]
    UnknownChannel(String),
    #[error("grid dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("gaussian sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("raster file {path}: {kind}")]
    Raster { path: String, kind: io::RasterErrorKind },
    #[error("raster io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Geometry of an occupancy grid: side length in cells and meters per cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    size_cells: usize,
    resolution_m: f64,
}

impl GridSpec {
    pub fn new(size_cells: usize, resolution_m: f64) -> Result<Self, GridError> {
        if size_cells == 0 {
            return Err(GridError::InvalidSpec("size_cells must be positive".into()));
        }
        if !(resolution_m > 0.0) || !resolution_m.is_finite() {
            return Err(GridError::InvalidSpec(format!(
                "resolution_m must be positive and finite, got {resolution_m}"
            )));
        }
        Ok(Self {
            size_cells,
            resolution_m,
        })
    }

    pub fn size_cells(&self) -> usize {
        self.size_cells
    }

    pub fn resolution_m(&self) -> f64 {
        self.resolution_m
    }

    /// Physical side length covered by the grid, in meters.
    pub fn extent_m(&self) -> f64 {
        self.size_cells as f64 * self.resolution_m
    }

    /// Spec of the grid after 2x2 pooling: half the cells, doubled resolution.
    pub fn halved(&self) -> Result<Self, GridError> {
        if self.size_cells % 2 != 0 {
            return Err(GridError::OddSide(self.size_cells));
        }
        GridSpec::new(self.size_cells / 2, self.resolution_m * 2.0)
    }

    /// Spec of the grid after 2x upsampling: double the cells, halved resolution.
    pub fn doubled(&self) -> Self {
        GridSpec {
            size_cells: self.size_cells * 2,
            resolution_m: self.resolution_m / 2.0,
        }
    }
}

impl Default for GridSpec {
    /// 512 cells at 0.25 m per cell: a 128 m x 128 m patch.
    fn default() -> Self {
        GridSpec {
            size_cells: 512,
            resolution_m: 0.25,
        }
    }
}

/// A pair of in-bounds grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub fn new(row: usize, col: usize, spec: &GridSpec) -> Result<Self, GridError> {
        if row >= spec.size_cells || col >= spec.size_cells {
            return Err(GridError::CellOutOfRange {
                row: row as i64,
                col: col as i64,
                size: spec.size_cells,
            });
        }
        Ok(Self { row, col })
    }
}

/// Projects a sensor-frame metric point onto the grid. Points that land
/// outside the raster are reported as `None`; truncation is a value here, not
/// a failure.
pub fn metric_to_cell(p: SensorPoint, spec: &GridSpec) -> Option<CellIndex> {
    if !p.x.is_finite() || !p.z.is_finite() {
        return None;
    }
    let col = (p.z / spec.resolution_m).floor();
    let row = (spec.size_cells / 2) as f64 - 1.0 - (p.x / spec.resolution_m).floor();
    let size = spec.size_cells as f64;
    if col < 0.0 || col >= size || row < 0.0 || row >= size {
        return None;
    }
    Some(CellIndex {
        row: row as usize,
        col: col as usize,
    })
}

/// Metric center of a grid cell in the sensor frame. Inverse of
/// [`metric_to_cell`] up to half-cell quantization.
pub fn cell_to_metric(c: CellIndex, spec: &GridSpec) -> Result<SensorPoint, GridError> {
    if c.row >= spec.size_cells || c.col >= spec.size_cells {
        return Err(GridError::CellOutOfRange {
            row: c.row as i64,
            col: c.col as i64,
            size: spec.size_cells,
        });
    }
    let res = spec.resolution_m;
    let x = ((spec.size_cells / 2) as f64 - 1.0 - c.row as f64 + 0.5) * res;
    let z = (c.col as f64 + 0.5) * res;
    Ok(SensorPoint { x, z })
}

/// One single-channel occupancy raster with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticGrid {
    spec: GridSpec,
    values: Vec<f32>,
}

impl SemanticGrid {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            values: vec![0.0; spec.size_cells * spec.size_cells],
            spec,
        }
    }

    /// Builds a grid from row-major values, validating the [0, 1] range.
    pub fn from_values(spec: GridSpec, values: Vec<f32>) -> Result<Self, GridError> {
        let n = spec.size_cells * spec.size_cells;
        if values.len() != n {
            return Err(GridError::DimensionMismatch(format!(
                "expected {} values for a {}-cell grid, got {}",
                n,
                spec.size_cells,
                values.len()
            )));
        }
        for (i, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(GridError::ValueOutOfRange {
                    row: i / spec.size_cells,
                    col: i % spec.size_cells,
                    value: v,
                });
            }
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.spec.size_cells + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: f32) {
        debug_assert!((0.0..=1.0).contains(&value));
        self.values[row * self.spec.size_cells + col] = value;
    }

    /// Cell of largest value; ties resolve to the row-major first cell.
    pub fn argmax(&self) -> CellIndex {
        let mut best = 0usize;
        let mut best_v = self.values[0];
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        CellIndex {
            row: best / self.spec.size_cells,
            col: best % self.spec.size_cells,
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

pub const CHANNEL_COUNT: usize = 5;

/// The five semantic channels, in their fixed stacking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Obstacles,
    Road,
    Lane,
    Target,
    Others,
}

impl Channel {
    pub const ALL: [Channel; CHANNEL_COUNT] = [
        Channel::Obstacles,
        Channel::Road,
        Channel::Lane,
        Channel::Target,
        Channel::Others,
    ];

    pub fn index(&self) -> usize {
        match self {
            Channel::Obstacles => 0,
            Channel::Road => 1,
            Channel::Lane => 2,
            Channel::Target => 3,
            Channel::Others => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Channel::Obstacles => "obstacles",
            Channel::Road => "road",
            Channel::Lane => "lane",
            Channel::Target => "target",
            Channel::Others => "others",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, GridError> {
        match name {
            "obstacles" => Ok(Channel::Obstacles),
            "road" => Ok(Channel::Road),
            "lane" => Ok(Channel::Lane),
            "target" => Ok(Channel::Target),
            "others" => Ok(Channel::Others),
            other => Err(GridError::UnknownChannel(other.to_string())),
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The five-channel intermediate representation for one timestep, together
/// with the world-frame pose of the sensor that recorded it.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    pub timestamp_s: f64,
    pub ego_pose: Pose,
    channels: [SemanticGrid; CHANNEL_COUNT],
}

impl FrameStack {
    pub fn new(
        timestamp_s: f64,
        ego_pose: Pose,
        channels: [SemanticGrid; CHANNEL_COUNT],
    ) -> Result<Self, GridError> {
        let spec = *channels[0].spec();
        for (ch, grid) in Channel::ALL.iter().zip(channels.iter()) {
            if *grid.spec() != spec {
                return Err(GridError::DimensionMismatch(format!(
                    "channel {ch} spec differs from the obstacles channel"
                )));
            }
        }
        Ok(Self {
            timestamp_s,
            ego_pose,
            channels,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        self.channels[0].spec()
    }

    pub fn channel(&self, ch: Channel) -> &SemanticGrid {
        &self.channels[ch.index()]
    }

    pub fn channels(&self) -> &[SemanticGrid; CHANNEL_COUNT] {
        &self.channels
    }

    pub fn with_channel(&self, ch: Channel, grid: SemanticGrid) -> Result<Self, GridError> {
        if grid.spec() != self.spec() {
            return Err(GridError::DimensionMismatch(format!(
                "replacement for channel {ch} has a different spec"
            )));
        }
        let mut channels = self.channels.clone();
        channels[ch.index()] = grid;
        Ok(Self {
            timestamp_s: self.timestamp_s,
            ego_pose: self.ego_pose,
            channels,
        })
    }
}

/// Returns a copy of `frame` with the named channel zeroed and every other
/// channel bit-identical.
pub fn zero_channel(frame: &FrameStack, ch: Channel) -> FrameStack {
    let mut channels = frame.channels.clone();
    channels[ch.index()] = SemanticGrid::zeros(*frame.spec());
    FrameStack {
        timestamp_s: frame.timestamp_s,
        ego_pose: frame.ego_pose,
        channels,
    }
}
