//! HAZOP-guideword fault model.
//!
//! Three guideword/parameter pairings are implemented:
//!
//! | guideword    | parameter                 | magnitude            |
//! |--------------|---------------------------|----------------------|
//! | `LATE`       | `human_detection_latency` | delay, s (3.0)       |
//! | `UNINTENDED` | `collision_signal`        | period, s (20.0)     |
//! | `MORE`       | `goal_threshold`          | threshold, m (2.5)   |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::FaultError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Guideword {
    Late,
    Unintended,
    More,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultParameter {
    HumanDetectionLatency,
    CollisionSignal,
    GoalThreshold,
}

impl Guideword {
    pub const ALL: [Guideword; 3] = [Guideword::Late, Guideword::Unintended, Guideword::More];

    pub fn as_str(self) -> &'static str {
        match self {
            Guideword::Late => "LATE",
            Guideword::Unintended => "UNINTENDED",
            Guideword::More => "MORE",
        }
    }

    fn meaning(self) -> &'static str {
        match self {
            Guideword::Late => "relative to the clock time",
            Guideword::Unintended => "unintended activation",
            Guideword::More => "quantitative increase",
        }
    }

    /// Parameter this guideword is implemented against.
    pub fn implemented_parameter(self) -> FaultParameter {
        match self {
            Guideword::Late => FaultParameter::HumanDetectionLatency,
            Guideword::Unintended => FaultParameter::CollisionSignal,
            Guideword::More => FaultParameter::GoalThreshold,
        }
    }

    pub fn default_magnitude(self) -> f64 {
        match self {
            Guideword::Late => 3.0,
            Guideword::Unintended => 20.0,
            Guideword::More => 2.5,
        }
    }
}

impl FaultParameter {
    pub const ALL: [FaultParameter; 3] = [
        FaultParameter::HumanDetectionLatency,
        FaultParameter::CollisionSignal,
        FaultParameter::GoalThreshold,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FaultParameter::HumanDetectionLatency => "human_detection_latency",
            FaultParameter::CollisionSignal => "collision_signal",
            FaultParameter::GoalThreshold => "goal_threshold",
        }
    }

    fn unit(self) -> &'static str {
        match self {
            FaultParameter::HumanDetectionLatency => "s",
            FaultParameter::CollisionSignal => "s (period)",
            FaultParameter::GoalThreshold => "m",
        }
    }
}

impl fmt::Display for Guideword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for FaultParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Guideword {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Guideword::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown guideword `{s}`"))
    }
}

impl FromStr for FaultParameter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FaultParameter::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown fault parameter `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    Always,
    Periodic { period: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFaultSpec")]
pub struct FaultSpec {
    pub guideword: Guideword,
    pub target_parameter: FaultParameter,
    pub magnitude: f64,
    pub schedule: Schedule,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFaultSpec {
    guideword: Guideword,
    target_parameter: FaultParameter,
    magnitude: f64,
    #[serde(default)]
    #[allow(dead_code)]
    schedule: Option<Schedule>,
}

impl TryFrom<RawFaultSpec> for FaultSpec {
    type Error = FaultError;

    fn try_from(raw: RawFaultSpec) -> Result<Self, Self::Error> {
        FaultSpec::new(raw.guideword, raw.target_parameter, raw.magnitude)
    }
}

impl FaultSpec {
    pub fn new(
        guideword: Guideword,
        target_parameter: FaultParameter,
        magnitude: f64,
    ) -> Result<Self, FaultError> {
        if guideword.implemented_parameter() != target_parameter {
            return Err(FaultError::InvalidPairing {
                guideword: guideword.as_str(),
                parameter: target_parameter.as_str(),
            });
        }
        if !(magnitude.is_finite() && magnitude > 0.0) {
            return Err(FaultError::BadMagnitude(magnitude));
        }
        let schedule = match guideword {
            Guideword::Unintended => Schedule::Periodic { period: magnitude },
            _ => Schedule::Always,
        };
        Ok(Self {
            guideword,
            target_parameter,
            magnitude,
            schedule,
        })
    }

    pub fn with_default_magnitude(guideword: Guideword) -> Self {
        Self::new(
            guideword,
            guideword.implemented_parameter(),
            guideword.default_magnitude(),
        )
        .expect("defaults are valid")
    }

    pub fn late(delay: f64) -> Result<Self, FaultError> {
        Self::new(
            Guideword::Late,
            FaultParameter::HumanDetectionLatency,
            delay,
        )
    }

    pub fn unintended(period: f64) -> Result<Self, FaultError> {
        Self::new(
            Guideword::Unintended,
            FaultParameter::CollisionSignal,
            period,
        )
    }

    pub fn more(threshold: f64) -> Result<Self, FaultError> {
        Self::new(Guideword::More, FaultParameter::GoalThreshold, threshold)
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}",
            self.guideword, self.target_parameter, self.magnitude
        )
    }
}

/// Parses `GUIDEWORD:PARAM:MAGNITUDE`; `GUIDEWORD` alone or
/// `GUIDEWORD:PARAM` fall back to the implemented parameter and default
/// magnitude.
impl FromStr for FaultSpec {
    type Err = FaultError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let parse_err = |reason: String| FaultError::Parse {
            input: input.to_string(),
            reason,
        };
        let mut parts = input.split(':');
        let guideword: Guideword = parts
            .next()
            .unwrap_or_default()
            .trim()
            .parse()
            .map_err(parse_err)?;
        let parameter = match parts.next() {
            Some(p) if !p.trim().is_empty() => p.trim().parse().map_err(parse_err)?,
            _ => guideword.implemented_parameter(),
        };
        let magnitude = match parts.next() {
            Some(m) => m
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err(format!("bad magnitude: {e}")))?,
            None => guideword.default_magnitude(),
        };
        if parts.next().is_some() {
            return Err(parse_err(
                "expected at most three `:`-separated fields".into(),
            ));
        }
        FaultSpec::new(guideword, parameter, magnitude)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationCell {
    pub guideword: Guideword,
    pub parameter: FaultParameter,
    pub implemented: bool,
    pub note: String,
}

/// Cross product of guidewords and parameters, annotated.
pub fn deviation_matrix(
    guidewords: &[Guideword],
    parameters: &[FaultParameter],
) -> Result<Vec<DeviationCell>, FaultError> {
    if guidewords.is_empty() || parameters.is_empty() {
        return Err(FaultError::EmptyMatrix);
    }
    Ok(guidewords
        .iter()
        .flat_map(|&g| {
            parameters.iter().map(move |&p| {
                let implemented = g.implemented_parameter() == p;
                let note = if implemented {
                    match g {
                        Guideword::Late => {
                            "human detected `magnitude` s late; speed reduction postponed"
                                .to_string()
                        }
                        Guideword::Unintended => {
                            "spurious collision signal every `magnitude` s triggers a blind backoff"
                                .to_string()
                        }
                        Guideword::More => {
                            "waypoint arrival radius raised to `magnitude` m; turns are cut early"
                                .to_string()
                        }
                    }
                } else {
                    format!(
                        "candidate only: {} ({}) applied to {} [{}]",
                        g,
                        g.meaning(),
                        p,
                        p.unit()
                    )
                };
                DeviationCell {
                    guideword: g,
                    parameter: p,
                    implemented,
                    note,
                }
            })
        })
        .collect())
}

/// Fault effects active during one control tick.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FaultEffects {
    pub human_detection_delay: f64,
    pub inject_false_collision_now: bool,
    pub goal_threshold_override: Option<f64>,
}

impl FaultEffects {
    pub const NEUTRAL: FaultEffects = FaultEffects {
        human_detection_delay: 0.0,
        inject_false_collision_now: false,
        goal_threshold_override: None,
    };

    pub fn is_neutral(&self) -> bool {
        *self == Self::NEUTRAL
    }
}

const BOUNDARY_EPS: f64 = 1e-9;

/// True on the tick whose window `[t, t + dt)` starts at a period boundary.
/// `t = 0` never fires.
fn periodic_fires(period: f64, t: f64, dt: f64) -> bool {
    let n = ((t + BOUNDARY_EPS) / period).floor();
    n >= 1.0 && t - n * period < dt - BOUNDARY_EPS
}

/// Merged effects of all `faults` at episode time `t`.
pub fn effects_at(faults: &[FaultSpec], t: f64, dt: f64) -> FaultEffects {
    let mut fx = FaultEffects::NEUTRAL;
    for f in faults {
        match f.guideword {
            Guideword::Late => {
                fx.human_detection_delay = fx.human_detection_delay.max(f.magnitude);
            }
            Guideword::Unintended => {
                let fires = match f.schedule {
                    Schedule::Always => true,
                    Schedule::Periodic { period } => periodic_fires(period, t, dt),
                };
                fx.inject_false_collision_now |= fires;
            }
            Guideword::More => {
                let current = fx.goal_threshold_override.unwrap_or(0.0);
                fx.goal_threshold_override = Some(current.max(f.magnitude));
            }
        }
    }
    fx
}
