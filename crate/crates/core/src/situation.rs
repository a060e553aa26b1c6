//! The five-axis binary situation space and the coverage grid over it.
//!
//! # Canonical numbering
//!
//! Each situation is packed into a 5-bit code, most significant bit first:
//! `turning_corner, obstacle_on_path, waypoint_near_wall, darkness,
//! human_absent`. The human bit is inverted so that the all-zero code is the
//! benign situation with a person at the entrance.
//!
//! IDs list even-weight codes first, then odd-weight codes, ascending within
//! each half:
//!
//! ```text
//! id = 1 + 16 * parity(code) + (code >> 1)
//! ```
//!
//! Within one parity class the top four bits determine the code, so the map
//! is a bijection onto `1..=32`. This ordering puts the benign situation at
//! ID 1, `(No, No, Open, Dark, No)` at 2, `(No, No, NearWall, Default, No)` at
//! 3 and the all-hazard situation at 32.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;

pub const SITUATION_COUNT: usize = 32;

/// One axis of the situation space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Axis {
    pub name: &'static str,
    pub value_labels: [&'static str; 2],
}

pub const AXES: [Axis; 5] = [
    Axis {
        name: "turning_corner",
        value_labels: [
            "Mission does not require turning a corner",
            "Mission requires turning a corner",
        ],
    },
    Axis {
        name: "obstacle_on_path",
        value_labels: ["No", "Yes"],
    },
    Axis {
        name: "waypoint_placement",
        value_labels: [
            "All waypoints in open space",
            "At least one waypoint near a wall",
        ],
    },
    Axis {
        name: "lighting_condition",
        value_labels: ["Default", "Total darkness"],
    },
    Axis {
        name: "human_presence",
        value_labels: ["Present", "Absent"],
    },
];

/// Situation identifier in `1..=32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SituationId(u8);

impl SituationId {
    pub fn new(id: u8) -> Option<Self> {
        (1..=SITUATION_COUNT as u8)
            .contains(&id)
            .then_some(Self(id))
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for SituationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Situation {
    pub turning_corner: bool,
    pub obstacle_on_path: bool,
    pub waypoint_near_wall: bool,
    pub darkness: bool,
    pub human_present: bool,
}

impl Situation {
    /// 5-bit code, `turning_corner` most significant, human bit inverted.
    pub fn code(&self) -> u8 {
        (self.turning_corner as u8) << 4
            | (self.obstacle_on_path as u8) << 3
            | (self.waypoint_near_wall as u8) << 2
            | (self.darkness as u8) << 1
            | (!self.human_present as u8)
    }

    pub fn from_code(code: u8) -> Self {
        debug_assert!(code < 32);
        Self {
            turning_corner: code & 0b10000 != 0,
            obstacle_on_path: code & 0b01000 != 0,
            waypoint_near_wall: code & 0b00100 != 0,
            darkness: code & 0b00010 != 0,
            human_present: code & 0b00001 == 0,
        }
    }

    pub fn id(&self) -> SituationId {
        situation_id(self)
    }

    pub fn from_id(id: SituationId) -> Self {
        let index = id.0 - 1;
        let parity = index >> 4;
        let high = index & 0x0f;
        let low = (high.count_ones() as u8 & 1) ^ parity;
        Self::from_code(high << 1 | low)
    }

    /// Labels in table order: turning, obstacle, waypoint placement,
    /// lighting, human presence.
    pub fn table_row(&self) -> [&'static str; 5] {
        [
            if self.turning_corner { "Yes" } else { "No" },
            if self.obstacle_on_path { "Yes" } else { "No" },
            if self.waypoint_near_wall {
                "Near a wall"
            } else {
                "Open space"
            },
            if self.darkness { "Dark" } else { "Default" },
            if self.human_present { "Yes" } else { "No" },
        ]
    }
}

pub fn situation_id(s: &Situation) -> SituationId {
    let code = s.code();
    let parity = (code.count_ones() & 1) as u8;
    SituationId(1 + 16 * parity + (code >> 1))
}

/// All 32 situations in ID order.
pub fn enumerate_situations() -> Vec<Situation> {
    (1..=SITUATION_COUNT as u8)
        .map(|id| Situation::from_id(SituationId(id)))
        .collect()
}

/// Uniform draw over the 32 cells, consuming one `u64` from the stream.
pub fn sample_situation(rng: &mut SplitMix64) -> Situation {
    let id = (rng.next_u64() >> 59) as u8 + 1;
    Situation::from_id(SituationId(id))
}

/// Covered cells plus generation counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageGrid {
    covered: BTreeSet<SituationId>,
    generated_count: u64,
    per_situation_run_count: BTreeMap<SituationId, u64>,
}

impl CoverageGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mark_covered(&mut self, s: &Situation) {
        let id = s.id();
        self.covered.insert(id);
        self.generated_count += 1;
        *self.per_situation_run_count.entry(id).or_insert(0) += 1;
    }

    pub fn covered(&self) -> &BTreeSet<SituationId> {
        &self.covered
    }

    pub fn generated_count(&self) -> u64 {
        self.generated_count
    }

    pub fn run_count(&self, id: SituationId) -> u64 {
        self.per_situation_run_count.get(&id).copied().unwrap_or(0)
    }

    pub fn coverage_fraction(&self) -> f64 {
        self.covered.len() as f64 / SITUATION_COUNT as f64
    }

    pub fn is_complete(&self) -> bool {
        self.covered.len() == SITUATION_COUNT
    }

    /// `tested` is the number of generated situations that were actually
    /// simulated; the harness simulates every one it generates.
    pub fn report(&self, tested: u64) -> CoverageSummary {
        CoverageSummary {
            total_possible: SITUATION_COUNT as u64,
            total_generated: self.generated_count,
            distinct_covered: self.covered.len() as u64,
            coverage_fraction: self.coverage_fraction(),
            tested_over_generated: if self.generated_count == 0 {
                0.0
            } else {
                tested as f64 / self.generated_count as f64
            },
        }
    }
}

/// Functional form of [`CoverageGrid::mark_covered`].
pub fn mark_covered(mut grid: CoverageGrid, s: &Situation) -> CoverageGrid {
    grid.mark_covered(s);
    grid
}

pub fn coverage_report(grid: &CoverageGrid) -> CoverageSummary {
    grid.report(grid.generated_count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub total_possible: u64,
    pub total_generated: u64,
    pub distinct_covered: u64,
    pub coverage_fraction: f64,
    pub tested_over_generated: f64,
}
