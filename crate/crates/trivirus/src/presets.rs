//! The nine built-in example systems: exact parameter matrices, a run plan
//! (family construction, enumeration, condition checks, simulations), and
//! declared expectations that evaluate to pass/fail outcomes.
//!
//! Expectations state what each system is supposed to exhibit; evaluation
//! measures and reports, it never adjusts. A failing declared expectation
//! is data about the system, not a crash.

use crate::conditions::{self, ConditionReport, ConditionsError, Verdict};
use crate::equilibria::{self, EnumerationResult, EquilibriaError, EquilibriumKind};
use crate::families::{self, Attractivity, FamiliesError, LineFamily, PlaneFamily};
use crate::model::{SystemState, TriVirusParams};
use crate::sim::{self, KnownTargets, LimitClassification, SimConfig, SimError, Trajectory};
use nalgebra::DMatrix;
use std::fmt;

#[derive(Debug)]
pub enum PresetError {
    Family(FamiliesError),
    Equilibria(EquilibriaError),
    Conditions(ConditionsError),
    Sim(SimError),
}

impl fmt::Display for PresetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresetError::Family(e) => write!(f, "{e}"),
            PresetError::Equilibria(e) => write!(f, "{e}"),
            PresetError::Conditions(e) => write!(f, "{e}"),
            PresetError::Sim(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PresetError {}

impl From<FamiliesError> for PresetError {
    fn from(e: FamiliesError) -> Self {
        PresetError::Family(e)
    }
}
impl From<EquilibriaError> for PresetError {
    fn from(e: EquilibriaError) -> Self {
        PresetError::Equilibria(e)
    }
}
impl From<ConditionsError> for PresetError {
    fn from(e: ConditionsError) -> Self {
        PresetError::Conditions(e)
    }
}
impl From<SimError> for PresetError {
    fn from(e: SimError) -> Self {
        PresetError::Sim(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilySpec {
    None,
    /// Line family from (B1, B2 as the fixing pattern, B3).
    Line,
    /// Identical-virus plane from (D1, B1).
    PlaneIdentical,
    /// General plane from (B1, B2 pattern, B3 pattern).
    PlaneCzHat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartSpec {
    /// Randomized interior start from the per-node normalization procedure,
    /// seeded with global seed + offset.
    Seeded(u64),
    /// Uniform per-virus infection levels.
    Uniform([f64; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expectation {
    /// Invasion radii of the virus's boundary state, rivals in ascending
    /// index order.
    BoundaryRadii {
        virus: usize,
        expected: [f64; 2],
        tol: f64,
    },
    BoundaryVerdict {
        virus: usize,
        stable: bool,
    },
    BoundaryProfile {
        virus: usize,
        expected: &'static [f64],
        tol: f64,
    },
    LineRadius {
        expected: f64,
        tol: f64,
    },
    UniformLineProfile {
        value: f64,
        tol: f64,
    },
    LineAttractivity {
        expected: Attractivity,
    },
    LimitIsBoundary {
        start: usize,
        virus: usize,
    },
    LimitIsLine {
        start: usize,
        max_distance: f64,
    },
    LimitIsPlane {
        start: usize,
        max_distance: f64,
    },
    /// Limit is a pair-coexistence equilibrium with this virus dead
    /// (its block below 1e-8 in the final state).
    LimitIsPair {
        start: usize,
        dead_virus: usize,
    },
    LimitIsTriple {
        start: usize,
    },
    /// Both starts reach plane points; recovered alphas sum to one within
    /// 1e-6 and differ by more than `min_gap`.
    DistinctPlanePoints {
        starts: [usize; 2],
        min_gap: f64,
    },
    DistinctPairLimits {
        starts: [usize; 2],
    },
    /// Jacobian spectral abscissa at the limit equilibrium is below this.
    LimitStableAbscissa {
        start: usize,
        bound: f64,
    },
    /// Named condition check resolves with this verdict.
    CheckVerdict {
        check: &'static str,
        holds: bool,
    },
    NoTripleRoot,
    AllBoundaryRadiiAboveOne,
    /// Exactly three pair-coexistence equilibria, none saturated.
    AllPairStatesUnsaturated,
    /// At least one 3-coexistence root, odd count, all saturated.
    OddSaturatedTripleCount,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub params: TriVirusParams,
    pub family: FamilySpec,
    /// Integration horizon tuned so the declared limits are reached.
    pub horizon: f64,
    pub starts: Vec<StartSpec>,
    /// Random Newton starts per support pattern during enumeration.
    pub enumeration_starts: usize,
    pub expectations: Vec<Expectation>,
}

#[derive(Debug)]
pub struct PresetArtifacts {
    pub enumeration: EnumerationResult,
    pub report: ConditionReport,
    pub trajectories: Vec<Trajectory>,
    pub line: Option<LineFamily>,
    pub plane: Option<PlaneFamily>,
}

#[derive(Debug, Clone)]
pub struct ExpectationOutcome {
    pub label: String,
    pub passed: bool,
    pub measured: String,
    pub tolerance: String,
}

impl fmt::Display for ExpectationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} | measured {} | tolerance {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.label,
            self.measured,
            self.tolerance
        )
    }
}

fn four_node(b3_13: f64, b2_12: f64, b3_22: f64, b3_31: f64) -> [DMatrix<f64>; 3] {
    let b1 = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 0.0, 1.5, 1.5, 0.0, 0.0, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0, 0.0, 1.5, 0.0,
        ],
    );
    let b2 = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0,
            1.5 + b2_12,
            0.0,
            0.0,
            0.0,
            0.0,
            1.5,
            0.0,
            0.0,
            0.0,
            0.0,
            1.5,
            1.5,
            0.0,
            0.0,
            0.0,
        ],
    );
    let b3 = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0,
            0.0,
            0.5 + b3_13,
            0.0,
            0.0,
            1.0 + b3_22,
            0.5,
            0.0,
            0.0,
            0.5,
            0.0,
            1.0,
            0.3 + b3_31,
            0.0,
            1.2,
            0.0,
        ],
    );
    [b1, b2, b3]
}

fn five_node_base() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        5,
        5,
        &[
            1.0, 0.0, 2.0, 0.0, 0.5, //
            0.5, 2.0, 0.0, 0.0, 0.0, //
            0.0, 5.0, 0.1, 0.0, 0.0, //
            0.1, 0.0, 0.0, 0.2, 0.0, //
            0.0, 0.0, 0.0, 0.1, 0.9,
        ],
    )
}

fn bumped(base: &DMatrix<f64>, i: usize, j: usize, w: f64) -> DMatrix<f64> {
    let mut out = base.clone();
    out[(i, j)] += w;
    out
}

fn nine_node_blocks() -> [DMatrix<f64>; 3] {
    let b11 = [[1.6, 1.0], [1.0, 1.6]];
    let b12 = [[2.1, 0.156], [3.0659, 1.1]];
    let b21 = [[1.7, 1.0], [1.2, 0.5]];
    let b22 = [[1.6, 1.0], [1.2, 0.0]];
    let assemble = |top: [[f64; 2]; 2], bottom: [[f64; 2]; 2]| {
        DMatrix::from_fn(4, 4, |i, j| match (i / 2, j / 2) {
            (0, 0) => top[i][j],
            (1, 1) => bottom[i - 2][j - 2],
            _ => 0.001,
        })
    };
    [assemble(b11, b21), assemble(b12, b22), assemble(b22, b11)]
}

fn tri(n: usize, betas: [DMatrix<f64>; 3]) -> TriVirusParams {
    TriVirusParams::tri_unit_healing(n, betas).expect("preset matrices are valid")
}

pub fn all_presets() -> Vec<Preset> {
    use Expectation::*;
    vec![
        Preset {
            name: "example1",
            description: "4-node ring viruses where the virus-1 boundary state repels both rivals and attracts interior trajectories",
            params: tri(4, four_node(0.0, -0.1, -0.1, 0.1)),
            family: FamilySpec::None,
            horizon: 6000.0,
            starts: vec![StartSpec::Seeded(1)],
            enumeration_starts: 40,
            expectations: vec![
                BoundaryRadii { virus: 0, expected: [0.9829, 0.99624], tol: 5e-4 },
                BoundaryRadii { virus: 1, expected: [1.0174, 1.0127], tol: 5e-4 },
                BoundaryRadii { virus: 2, expected: [1.003, 0.9863], tol: 5e-4 },
                BoundaryVerdict { virus: 0, stable: true },
                BoundaryVerdict { virus: 1, stable: false },
                BoundaryVerdict { virus: 2, stable: false },
                LimitIsBoundary { start: 0, virus: 0 },
            ],
        },
        Preset {
            name: "example2",
            description: "unstable line of virus-1/virus-2 equilibria on the 4-node ring; virus 3 invades and takes over",
            params: tri(4, four_node(0.05, 0.0, 0.0, 0.0)),
            family: FamilySpec::Line,
            horizon: 6000.0,
            starts: vec![StartSpec::Seeded(1)],
            enumeration_starts: 40,
            expectations: vec![
                LineRadius { expected: 1.0043, tol: 5e-4 },
                UniformLineProfile { value: 1.0 / 3.0, tol: 1e-10 },
                LineAttractivity { expected: Attractivity::Unstable },
                LimitIsBoundary { start: 0, virus: 2 },
            ],
        },
        Preset {
            name: "example3",
            description: "locally attractive line of virus-1/virus-2 equilibria on the 4-node ring",
            params: tri(4, four_node(-0.1, 0.0, 0.0, 0.0)),
            family: FamilySpec::Line,
            horizon: 6000.0,
            starts: vec![StartSpec::Seeded(1)],
            enumeration_starts: 40,
            expectations: vec![
                LineRadius { expected: 0.9911, tol: 5e-4 },
                UniformLineProfile { value: 1.0 / 3.0, tol: 1e-10 },
                LineAttractivity { expected: Attractivity::Attractive },
                LimitIsLine { start: 0, max_distance: 1e-6 },
            ],
        },
        Preset {
            name: "example4",
            description: "plane of coexistence equilibria shared by all three ring viruses; the reached point depends on the start",
            params: tri(4, four_node(0.0, 0.0, 0.0, 0.0)),
            family: FamilySpec::PlaneCzHat,
            horizon: 2000.0,
            starts: vec![StartSpec::Seeded(1), StartSpec::Seeded(2)],
            enumeration_starts: 40,
            expectations: vec![
                UniformLineProfile { value: 1.0 / 3.0, tol: 1e-10 },
                LimitIsPlane { start: 0, max_distance: 1e-6 },
                LimitIsPlane { start: 1, max_distance: 1e-6 },
                DistinctPlanePoints { starts: [0, 1], min_gap: 1e-3 },
            ],
        },
        Preset {
            name: "example5",
            description: "three identical copies of one virus on 5 nodes; trajectories converge onto a plane of equilibria",
            params: {
                let b = five_node_base();
                tri(5, [b.clone(), b.clone(), b])
            },
            family: FamilySpec::PlaneIdentical,
            horizon: 2000.0,
            starts: vec![StartSpec::Seeded(1), StartSpec::Seeded(2)],
            enumeration_starts: 40,
            expectations: vec![
                BoundaryProfile {
                    virus: 0,
                    expected: &[0.691, 0.610, 0.758, 0.078, 0.051],
                    tol: 5e-4,
                },
                LimitIsPlane { start: 0, max_distance: 1e-6 },
                LimitIsPlane { start: 1, max_distance: 1e-6 },
                DistinctPlanePoints { starts: [0, 1], min_gap: 1e-3 },
            ],
        },
        Preset {
            name: "example6",
            description: "strictly ordered infection strengths on 5 nodes; no 3-coexistence can exist and the strongest virus wins",
            params: {
                let b = five_node_base();
                let b2 = bumped(&b, 0, 3, 0.5);
                let b3 = bumped(&b2, 4, 0, 0.1);
                tri(5, [b, b2, b3])
            },
            family: FamilySpec::None,
            horizon: 6000.0,
            starts: vec![StartSpec::Seeded(1)],
            enumeration_starts: 200,
            expectations: vec![
                CheckVerdict { check: "nonexistence-3-coexistence", holds: true },
                NoTripleRoot,
                LimitIsBoundary { start: 0, virus: 2 },
            ],
        },
        Preset {
            name: "example7",
            description: "virus 1 dominated by both rivals on 5 nodes; limits keep only viruses 2 and 3 alive",
            params: {
                let b = five_node_base();
                tri(5, [b.clone(), bumped(&b, 0, 3, 2.0), bumped(&b, 4, 0, 0.1)])
            },
            family: FamilySpec::None,
            horizon: 8000.0,
            starts: vec![StartSpec::Seeded(1)],
            enumeration_starts: 60,
            expectations: vec![
                CheckVerdict { check: "nonexistence-2-coexistence-forms", holds: true },
                CheckVerdict { check: "nonexistence-3-coexistence", holds: false },
                LimitIsPair { start: 0, dead_virus: 0 },
            ],
        },
        Preset {
            name: "example8",
            description: "5-node system built to make every boundary state invadable and every pair state unsaturated, forcing an odd number of saturated 3-coexistence equilibria; trajectories reach one",
            params: {
                let b = five_node_base();
                tri(
                    5,
                    [bumped(&b, 2, 1, 0.7), bumped(&b, 0, 3, 2.0), bumped(&b, 4, 0, 0.1)],
                )
            },
            family: FamilySpec::None,
            horizon: 10000.0,
            starts: vec![StartSpec::Seeded(1)],
            enumeration_starts: 100,
            expectations: vec![
                AllBoundaryRadiiAboveOne,
                AllPairStatesUnsaturated,
                OddSaturatedTripleCount,
                LimitIsTriple { start: 0 },
            ],
        },
        Preset {
            name: "example9",
            description: "4-node two-community system with two locally exponentially stable pair equilibria reached from different starts",
            params: tri(4, nine_node_blocks()),
            family: FamilySpec::None,
            horizon: 4000.0,
            starts: vec![
                StartSpec::Uniform([0.3, 0.05, 0.3]),
                StartSpec::Uniform([0.05, 0.3, 0.3]),
            ],
            enumeration_starts: 60,
            expectations: vec![
                LimitIsPair { start: 0, dead_virus: 1 },
                LimitIsPair { start: 1, dead_virus: 0 },
                DistinctPairLimits { starts: [0, 1] },
                LimitStableAbscissa { start: 0, bound: -1e-8 },
                LimitStableAbscissa { start: 1, bound: -1e-8 },
            ],
        },
    ]
}

pub fn preset(name: &str) -> Option<Preset> {
    all_presets().into_iter().find(|p| p.name == name)
}

/// Execute a preset's full plan: build its family, enumerate equilibria,
/// run every condition check, then integrate and classify each start.
pub fn run_preset(preset: &Preset, seed: u64) -> Result<PresetArtifacts, PresetError> {
    let context = prepare_preset(preset, seed)?;
    let trajectories = (0..preset.starts.len())
        .map(|index| run_start(preset, &context, seed, index))
        .collect::<Result<Vec<_>, _>>()?;
    let PresetContext {
        enumeration,
        report,
        line,
        plane,
    } = context;
    Ok(PresetArtifacts {
        enumeration,
        report,
        trajectories,
        line,
        plane,
    })
}

/// Family, enumeration, and condition report shared by every start slot.
#[derive(Debug)]
pub struct PresetContext {
    pub enumeration: EnumerationResult,
    pub report: ConditionReport,
    pub line: Option<LineFamily>,
    pub plane: Option<PlaneFamily>,
}

pub fn prepare_preset(preset: &Preset, seed: u64) -> Result<PresetContext, PresetError> {
    let params = &preset.params;
    let (line, plane) = match preset.family {
        FamilySpec::None => (None, None),
        FamilySpec::Line => (
            Some(families::build_line_family(
                params.beta(0),
                params.beta(1),
                params.beta(2),
            )?),
            None,
        ),
        FamilySpec::PlaneIdentical => (
            None,
            Some(families::build_plane_identical(
                params.delta(0),
                params.beta(0),
            )?),
        ),
        FamilySpec::PlaneCzHat => (
            None,
            Some(families::build_plane_cz_hat(
                params.beta(0),
                params.beta(1),
                params.beta(2),
            )?),
        ),
    };
    let enumeration = equilibria::enumerate_equilibria(params, preset.enumeration_starts, seed)?;
    let report = conditions::full_report(
        params,
        if enumeration.nondegenerate {
            Some(&enumeration)
        } else {
            None
        },
    )?;
    Ok(PresetContext {
        enumeration,
        report,
        line,
        plane,
    })
}

/// Integrate start slot `index` and classify its limit. Slots are
/// independent given a context, so callers may run them in any order.
pub fn run_start(
    preset: &Preset,
    context: &PresetContext,
    seed: u64,
    index: usize,
) -> Result<Trajectory, PresetError> {
    let params = &preset.params;
    let cfg = SimConfig {
        horizon: preset.horizon,
        ..SimConfig::default()
    };
    let targets = KnownTargets {
        equilibria: &context.enumeration.equilibria,
        line: context.line.as_ref(),
        plane: context.plane.as_ref(),
    };
    let x0 = match &preset.starts[index] {
        StartSpec::Seeded(offset) => {
            sim::random_initial_condition(params.node_count(), seed.wrapping_add(*offset))
        }
        StartSpec::Uniform(levels) => SystemState::uniform(params.node_count(), levels),
    };
    let mut traj = sim::integrate(params, &x0, &cfg)?;
    traj.limit = sim::classify_limit(&traj, &targets).ok();
    Ok(traj)
}

fn outcome(
    label: impl Into<String>,
    passed: bool,
    measured: impl Into<String>,
    tolerance: impl Into<String>,
) -> ExpectationOutcome {
    ExpectationOutcome {
        label: label.into(),
        passed,
        measured: measured.into(),
        tolerance: tolerance.into(),
    }
}

fn limit_label(traj: &Trajectory) -> String {
    match &traj.limit {
        Some(l) => format!("{l}"),
        None => format!("no classified limit ({})", traj.termination),
    }
}

/// Evaluate every declared expectation against the computed artifacts.
pub fn evaluate_expectations(
    preset: &Preset,
    artifacts: &PresetArtifacts,
) -> Vec<ExpectationOutcome> {
    let params = &preset.params;
    let mut outcomes = Vec::new();
    for expectation in &preset.expectations {
        let result = match expectation {
            Expectation::BoundaryRadii {
                virus,
                expected,
                tol,
            } => match conditions::check_boundary_stability(params, *virus) {
                Ok(record) => {
                    let measured: Vec<f64> = record.witnesses[1..]
                        .iter()
                        .filter_map(|w| match w {
                            conditions::Witness::Scalar { value, .. } => Some(*value),
                            _ => None,
                        })
                        .collect();
                    let ok = measured.len() == 2
                        && measured
                            .iter()
                            .zip(expected)
                            .all(|(m, e)| (m - e).abs() < *tol);
                    outcome(
                        format!("boundary radii of virus {}", virus + 1),
                        ok,
                        format!(
                            "({:.5}, {:.5}) vs expected ({}, {})",
                            measured[0], measured[1], expected[0], expected[1]
                        ),
                        format!("{tol:e}"),
                    )
                }
                Err(e) => outcome(
                    format!("boundary radii of virus {}", virus + 1),
                    false,
                    format!("{e}"),
                    format!("{tol:e}"),
                ),
            },
            Expectation::BoundaryVerdict { virus, stable } => {
                match conditions::check_boundary_stability(params, *virus) {
                    Ok(record) => {
                        let got = match record.hypothesis {
                            Verdict::Holds => Some(true),
                            Verdict::Fails => Some(false),
                            Verdict::Inconclusive => None,
                        };
                        outcome(
                            format!(
                                "virus-{} boundary state is {}",
                                virus + 1,
                                if *stable { "stable" } else { "unstable" }
                            ),
                            got == Some(*stable),
                            format!("verdict {}", record.hypothesis),
                            "1e-8 band",
                        )
                    }
                    Err(e) => outcome(
                        format!("virus-{} boundary verdict", virus + 1),
                        false,
                        format!("{e}"),
                        "1e-8 band",
                    ),
                }
            }
            Expectation::BoundaryProfile {
                virus,
                expected,
                tol,
            } => {
                match equilibria::single_virus_equilibrium(
                    params.delta(*virus),
                    params.beta(*virus),
                ) {
                    Ok(Some(x)) => {
                        let worst = x
                            .iter()
                            .zip(expected.iter())
                            .map(|(a, b)| (a - b).abs())
                            .fold(0.0, f64::max);
                        outcome(
                            format!("endemic profile of virus {}", virus + 1),
                            x.len() == expected.len() && worst < *tol,
                            format!("max deviation {worst:.2e}"),
                            format!("{tol:e}"),
                        )
                    }
                    other => outcome(
                        format!("endemic profile of virus {}", virus + 1),
                        false,
                        format!("{other:?}"),
                        format!("{tol:e}"),
                    ),
                }
            }
            Expectation::LineRadius { expected, tol } => match &artifacts.line {
                Some(line) => outcome(
                    "third-virus radius over the line",
                    (line.radius3 - expected).abs() < *tol,
                    format!("{:.5} vs expected {expected}", line.radius3),
                    format!("{tol:e}"),
                ),
                None => outcome(
                    "third-virus radius over the line",
                    false,
                    "no line family",
                    "",
                ),
            },
            Expectation::UniformLineProfile { value, tol } => {
                let profile = artifacts
                    .line
                    .as_ref()
                    .map(|l| l.z.clone())
                    .or_else(|| artifacts.plane.as_ref().map(|p| p.anchor().clone()));
                match profile {
                    Some(z) => {
                        let worst = z.iter().map(|v| (v - value).abs()).fold(0.0, f64::max);
                        outcome(
                            "shared profile is uniform",
                            worst < *tol,
                            format!("max deviation from {value:.6}: {worst:.2e}"),
                            format!("{tol:e}"),
                        )
                    }
                    None => outcome("shared profile is uniform", false, "no family", ""),
                }
            }
            Expectation::LineAttractivity { expected } => match &artifacts.line {
                Some(line) => outcome(
                    format!("line is {expected}"),
                    line.attractivity == *expected,
                    format!("{}", line.attractivity),
                    "1e-8 band",
                ),
                None => outcome(format!("line is {expected}"), false, "no line family", ""),
            },
            Expectation::LimitIsBoundary { start, virus } => {
                let traj = &artifacts.trajectories[*start];
                let ok = matches!(
                    traj.limit,
                    Some(LimitClassification::Equilibrium {
                        kind: EquilibriumKind::Boundary(v),
                        ..
                    }) if v == *virus
                );
                outcome(
                    format!(
                        "start {} reaches the virus-{} boundary state",
                        start + 1,
                        virus + 1
                    ),
                    ok,
                    limit_label(traj),
                    "limit within 1e-4",
                )
            }
            Expectation::LimitIsLine {
                start,
                max_distance,
            } => {
                let traj = &artifacts.trajectories[*start];
                let ok = matches!(
                    traj.limit,
                    Some(LimitClassification::Line { distance, .. }) if distance < *max_distance
                );
                outcome(
                    format!("start {} lands on the line", start + 1),
                    ok,
                    limit_label(traj),
                    format!("distance < {max_distance:e}"),
                )
            }
            Expectation::LimitIsPlane {
                start,
                max_distance,
            } => {
                let traj = &artifacts.trajectories[*start];
                let ok = matches!(
                    traj.limit,
                    Some(LimitClassification::Plane { distance, .. }) if distance < *max_distance
                );
                outcome(
                    format!("start {} lands on the plane", start + 1),
                    ok,
                    limit_label(traj),
                    format!("distance < {max_distance:e}"),
                )
            }
            Expectation::LimitIsPair { start, dead_virus } => {
                let traj = &artifacts.trajectories[*start];
                let kind_ok = matches!(
                    traj.limit,
                    Some(LimitClassification::Equilibrium {
                        kind: EquilibriumKind::PairCoexistence(i, j),
                        ..
                    }) if i != *dead_virus && j != *dead_virus
                );
                let dead_level = traj.final_state().block(*dead_virus).amax();
                outcome(
                    format!(
                        "start {} reaches a pair state with virus {} extinct",
                        start + 1,
                        dead_virus + 1
                    ),
                    kind_ok && dead_level < 1e-8,
                    format!("{}; extinct block max {dead_level:.2e}", limit_label(traj)),
                    "block max < 1e-8",
                )
            }
            Expectation::LimitIsTriple { start } => {
                let traj = &artifacts.trajectories[*start];
                let ok = matches!(
                    traj.limit,
                    Some(LimitClassification::Equilibrium {
                        kind: EquilibriumKind::TripleCoexistence,
                        ..
                    })
                );
                outcome(
                    format!("start {} reaches a 3-coexistence state", start + 1),
                    ok,
                    limit_label(traj),
                    "limit within 1e-4",
                )
            }
            Expectation::DistinctPlanePoints { starts, min_gap } => {
                let get = |s: usize| match artifacts.trajectories[s].limit {
                    Some(LimitClassification::Plane { alpha, .. }) => Some(alpha),
                    _ => None,
                };
                match (get(starts[0]), get(starts[1])) {
                    (Some(a), Some(b)) => {
                        let gap = a
                            .iter()
                            .zip(&b)
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0, f64::max);
                        let sums_ok = [(a, "a"), (b, "b")]
                            .iter()
                            .all(|(v, _)| (v.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                        outcome(
                            "two starts reach distinct plane points",
                            gap > *min_gap && sums_ok,
                            format!(
                                "alpha gap {gap:.4e}; sums ({:.8}, {:.8})",
                                a.iter().sum::<f64>(),
                                b.iter().sum::<f64>()
                            ),
                            format!("gap > {min_gap:e}, sums within 1e-6"),
                        )
                    }
                    _ => outcome(
                        "two starts reach distinct plane points",
                        false,
                        "at least one start did not classify as a plane point",
                        format!("gap > {min_gap:e}"),
                    ),
                }
            }
            Expectation::DistinctPairLimits { starts } => {
                let get = |s: usize| match artifacts.trajectories[s].limit {
                    Some(LimitClassification::Equilibrium { index, kind, .. }) => {
                        matches!(kind, EquilibriumKind::PairCoexistence(..)).then_some(index)
                    }
                    _ => None,
                };
                match (get(starts[0]), get(starts[1])) {
                    (Some(a), Some(b)) => {
                        let da = &artifacts.enumeration.equilibria[a];
                        let db = &artifacts.enumeration.equilibria[b];
                        let separation = da.state.max_distance(&db.state);
                        outcome(
                            "the two pair limits are distinct",
                            separation > 1e-3,
                            format!("separation {separation:.4e}"),
                            "> 1e-3",
                        )
                    }
                    _ => outcome(
                        "the two pair limits are distinct",
                        false,
                        "a start did not classify as a pair equilibrium",
                        "> 1e-3",
                    ),
                }
            }
            Expectation::LimitStableAbscissa { start, bound } => {
                let traj = &artifacts.trajectories[*start];
                match traj.limit {
                    Some(LimitClassification::Equilibrium { index, .. }) => {
                        let eq = &artifacts.enumeration.equilibria[index];
                        let abscissa = eq
                            .jacobian_spectrum
                            .iter()
                            .map(|l| l.re)
                            .fold(f64::NEG_INFINITY, f64::max);
                        outcome(
                            format!("limit of start {} is exponentially stable", start + 1),
                            abscissa < *bound,
                            format!("abscissa {abscissa:.4e}"),
                            format!("< {bound:e}"),
                        )
                    }
                    _ => outcome(
                        format!("limit of start {} is exponentially stable", start + 1),
                        false,
                        limit_label(traj),
                        format!("< {bound:e}"),
                    ),
                }
            }
            Expectation::CheckVerdict { check, holds } => match artifacts.report.find(check) {
                Some(record) => {
                    let got = match record.hypothesis {
                        Verdict::Holds => Some(true),
                        Verdict::Fails => Some(false),
                        Verdict::Inconclusive => None,
                    };
                    outcome(
                        format!("check {check} {}", if *holds { "holds" } else { "fails" }),
                        got == Some(*holds),
                        format!("verdict {}", record.hypothesis),
                        "1e-8 band",
                    )
                }
                None => outcome(
                    format!("check {check}"),
                    false,
                    "check missing from report",
                    "",
                ),
            },
            Expectation::NoTripleRoot => {
                let count = artifacts.enumeration.three_coexistence_count();
                outcome(
                    "no 3-coexistence root found",
                    count == 0 && !artifacts.enumeration.continuum_suspected,
                    format!(
                        "{count} roots from {} starts",
                        artifacts.enumeration.starts_used
                    ),
                    "exact",
                )
            }
            Expectation::AllBoundaryRadiiAboveOne => {
                let mut min_radius = f64::INFINITY;
                let mut failed = None;
                for virus in 0..3 {
                    match conditions::check_boundary_stability(params, virus) {
                        Ok(record) => {
                            for w in &record.witnesses[1..] {
                                if let conditions::Witness::Scalar { value, .. } = w {
                                    min_radius = min_radius.min(*value);
                                }
                            }
                        }
                        Err(e) => failed = Some(format!("{e}")),
                    }
                }
                outcome(
                    "every boundary state is invadable by both rivals",
                    failed.is_none() && min_radius > 1.0 + 1e-8,
                    failed.unwrap_or(format!("smallest invasion radius {min_radius:.6}")),
                    "> 1 + 1e-8",
                )
            }
            Expectation::AllPairStatesUnsaturated => {
                let pairs: Vec<_> = artifacts
                    .enumeration
                    .equilibria
                    .iter()
                    .filter(|e| matches!(e.kind, EquilibriumKind::PairCoexistence(..)))
                    .collect();
                let count_ok = pairs.len() == 3;
                let kinds: std::collections::BTreeSet<_> =
                    pairs.iter().map(|e| format!("{}", e.kind)).collect();
                let all_unsaturated = pairs.iter().all(|e| !e.is_saturated);
                outcome(
                    "exactly three pair equilibria, all unsaturated",
                    count_ok && kinds.len() == 3 && all_unsaturated,
                    format!(
                        "{} pair equilibria; saturated flags {:?}",
                        pairs.len(),
                        pairs.iter().map(|e| e.is_saturated).collect::<Vec<_>>()
                    ),
                    "abscissa band 1e-8",
                )
            }
            Expectation::OddSaturatedTripleCount => {
                let triples: Vec<_> = artifacts
                    .enumeration
                    .equilibria
                    .iter()
                    .filter(|e| e.kind == EquilibriumKind::TripleCoexistence)
                    .collect();
                let ok = !triples.is_empty()
                    && triples.len() % 2 == 1
                    && triples.iter().all(|e| e.is_saturated);
                outcome(
                    "odd number of saturated 3-coexistence equilibria",
                    ok,
                    format!("{} found", triples.len()),
                    "count odd and >= 1",
                )
            }
        };
        outcomes.push(result);
    }
    outcomes
}
