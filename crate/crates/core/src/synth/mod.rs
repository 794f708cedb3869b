//! Synthetic urban-scenario generation and dataset persistence.
//!
//! A [`Scenario`] is a self-contained world: road and lane geometry, static
//! obstacles flanking the road, and vehicle tracks sampled on a uniform
//! timestamp grid. Everything is a pure function of `(config, seed)`, so a
//! scenario regenerates bit-identically from its manifest entry.

mod dataset;
mod generate;
mod render;

pub use dataset::{
    read_dataset, subsample_frames, subsample_indices, write_dataset, Dataset, DatasetManifest,
    ManifestEntry, DATASET_VERSION, FOLD_COUNT,
};
pub use generate::generate_scenario;
pub use render::{future_static_channels, render_frame, render_obstacles_at};

use crate::geom::{Pose, WorldPoint};
use crate::grid::{GridError, GridSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible generator config: {0}")]
    Infeasible(String),
    #[error("timestamp {t} s is not on the scenario frame grid")]
    OffGridTimestamp { t: f64 },
    #[error("timestamp {t} s is beyond the scenario horizon of {horizon} s")]
    BeyondHorizon { t: f64, horizon: f64 },
    #[error("keep ratio must lie in (0, 1], got {0}")]
    BadKeepRatio(f64),
    #[error("subsampling produced no frames")]
    EmptySubsample,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("dataset manifest {path}: {msg}")]
    ManifestParse { path: String, msg: String },
    #[error("dataset version {found} unsupported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("checksum mismatch for scenario {scenario} file {file}")]
    ChecksumMismatch { scenario: String, file: String },
    #[error("truncated or missing data for scenario {scenario} file {file}")]
    TruncatedFile { scenario: String, file: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Road centerline shape families the generator can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoadShape {
    Straight,
    Curve,
    LeftTurn,
    RightTurn,
    LaneChange,
}

impl RoadShape {
    pub const ALL: [RoadShape; 5] = [
        RoadShape::Straight,
        RoadShape::Curve,
        RoadShape::LeftTurn,
        RoadShape::RightTurn,
        RoadShape::LaneChange,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RoadShape::Straight => "straight",
            RoadShape::Curve => "curve",
            RoadShape::LeftTurn => "left-turn",
            RoadShape::RightTurn => "right-turn",
            RoadShape::LaneChange => "lane-change",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, SynthError> {
        Self::ALL
            .iter()
            .copied()
            .find(|s| s.name() == name)
            .ok_or_else(|| SynthError::Infeasible(format!("unknown road shape {name:?}")))
    }
}

/// Which side of the road vehicles drive on. Flipping the side mirrors the
/// generated world about the road axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneSide {
    Right,
    Left,
}

impl LaneSide {
    pub fn name(&self) -> &'static str {
        match self {
            LaneSide::Right => "right",
            LaneSide::Left => "left",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, SynthError> {
        match name {
            "right" => Ok(LaneSide::Right),
            "left" => Ok(LaneSide::Left),
            other => Err(SynthError::Infeasible(format!(
                "unknown lane side {other:?}"
            ))),
        }
    }
}

/// Generator parameters. Defaults give 4-second scenarios at 10 fps on the
/// full-scale 512-cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub shape: RoadShape,
    pub duration_s: f64,
    pub speed_range: (f64, f64),
    pub lane_side: LaneSide,
    pub frame_rate_hz: f64,
    pub grid_side: usize,
    pub grid_resolution_m: f64,
    pub other_vehicles: usize,
    /// Per-cell probability of dropping an occupied cell, emulating
    /// segmentation errors. Zero disables the noise.
    pub channel_dropout: f64,
    pub lane_width_m: f64,
    /// Distance the ego vehicle trails the target, in meters.
    pub ego_gap_m: f64,
    pub obstacle_spacing_m: f64,
    pub vehicle_length_m: f64,
    pub vehicle_width_m: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            shape: RoadShape::Straight,
            duration_s: 4.0,
            speed_range: (5.0, 9.0),
            lane_side: LaneSide::Right,
            frame_rate_hz: 10.0,
            grid_side: 512,
            grid_resolution_m: 0.25,
            other_vehicles: 2,
            channel_dropout: 0.0,
            lane_width_m: 3.5,
            ego_gap_m: 12.0,
            obstacle_spacing_m: 18.0,
            vehicle_length_m: 4.2,
            vehicle_width_m: 1.8,
        }
    }
}

impl GeneratorConfig {
    pub fn grid_spec(&self) -> Result<GridSpec, SynthError> {
        Ok(GridSpec::new(self.grid_side, self.grid_resolution_m)?)
    }

    /// Full-extent desk-scale config: fewer cells covering the same 128 m.
    pub fn desk_scale(mut self, grid_side: usize) -> Self {
        self.grid_resolution_m = 128.0 / grid_side as f64;
        self.grid_side = grid_side;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.duration_s > 0.0) {
            return Err(SynthError::Infeasible("duration must be positive".into()));
        }
        if !(self.frame_rate_hz > 0.0) {
            return Err(SynthError::Infeasible("frame rate must be positive".into()));
        }
        if !(self.speed_range.0 > 0.0) || self.speed_range.1 < self.speed_range.0 {
            return Err(SynthError::Infeasible(format!(
                "speed range ({}, {}) is empty or non-positive",
                self.speed_range.0, self.speed_range.1
            )));
        }
        if !(0.0..=1.0).contains(&self.channel_dropout) {
            return Err(SynthError::Infeasible(format!(
                "channel dropout {} outside [0, 1]",
                self.channel_dropout
            )));
        }
        if self.lane_width_m <= 0.0 || self.ego_gap_m < 0.0 {
            return Err(SynthError::Infeasible(
                "lane width must be positive and ego gap non-negative".into(),
            ));
        }
        self.grid_spec().map(|_| ())
    }
}

/// One agent track: poses sampled at the scenario's uniform timestamps.
pub type Track = Vec<Pose>;

/// A synthetic world with deterministic regeneration from `(config, seed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub config: GeneratorConfig,
    pub road_centerline: Vec<WorldPoint>,
    pub road_width_m: f64,
    pub lane_dividers: Vec<Vec<WorldPoint>>,
    /// Convex obstacle footprints flanking the road.
    pub obstacles: Vec<Vec<WorldPoint>>,
    pub ego_track: Track,
    pub target_track: Track,
    pub other_tracks: Vec<Track>,
}

impl Scenario {
    pub fn frame_count(&self) -> usize {
        self.ego_track.len()
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.config.frame_rate_hz
    }

    pub fn timestamp(&self, frame: usize) -> f64 {
        frame as f64 / self.config.frame_rate_hz
    }

    pub fn horizon_s(&self) -> f64 {
        (self.frame_count().saturating_sub(1)) as f64 / self.config.frame_rate_hz
    }

    /// Maps a timestamp onto the frame grid, rejecting off-grid values.
    pub fn frame_index_of(&self, t: f64) -> Result<usize, SynthError> {
        let raw = t * self.config.frame_rate_hz;
        let idx = raw.round();
        if (raw - idx).abs() > 1e-6 || idx < 0.0 {
            return Err(SynthError::OffGridTimestamp { t });
        }
        let idx = idx as usize;
        if idx >= self.frame_count() {
            return Err(SynthError::BeyondHorizon {
                t,
                horizon: self.horizon_s(),
            });
        }
        Ok(idx)
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.config
            .grid_spec()
            .expect("config validated at generation time")
    }
}
