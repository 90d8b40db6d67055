// Scenario files are TOML with explicit row-major matrix literals, so a
// run is auditable without touching code. Every validation error names
// the offending field.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use trivirus::families::{self, LineFamily, PlaneFamily};
use trivirus::model::TriVirusParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Global seed; item seeds derive from it unless set explicitly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub plan: Vec<PlanItem>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expect: Vec<ExpectSpec>,
}

/// Inline system: healing vectors and row-major infection matrices,
/// one pair per virus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub delta1: Vec<f64>,
    pub delta2: Vec<f64>,
    pub delta3: Vec<f64>,
    pub beta1: Vec<Vec<f64>>,
    pub beta2: Vec<Vec<f64>>,
    pub beta3: Vec<Vec<f64>>,
}

/// System defined through one of the equilibrium-family constructors
/// instead of raw matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FamilySpec {
    /// Viruses 1 and 2 share a profile z; b1 fixes z, m is the pattern
    /// for the second matrix, b3 is free.
    Line {
        b1: Vec<Vec<f64>>,
        m: Vec<Vec<f64>>,
        b3: Vec<Vec<f64>>,
    },
    /// Three copies of one virus.
    PlaneIdentical { delta: Vec<f64>, b: Vec<Vec<f64>> },
    /// Three distinct matrices fixing one profile, from two patterns.
    PlaneCzHat {
        b1: Vec<Vec<f64>>,
        m: Vec<Vec<f64>>,
        m_hat: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum PlanItem {
    /// Integrate from a seeded random interior start or an explicit one
    /// (three rows of node shares), then classify the limit.
    Simulate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ic: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample_interval: Option<f64>,
    },
    /// Multi-start equilibrium search; the largest `starts` across items
    /// configures the one enumeration shared by the whole run.
    Enumerate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        starts: Option<usize>,
    },
    CheckConditions,
    BuildFamily,
    GenericityProbe {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        trials: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExpectSpec {
    /// A named record in the condition report reaches this verdict.
    Check { name: String, holds: bool },
    /// The trajectory of plan item `item` reaches the target:
    /// "disease-free", "boundary-K", "pair-I-J", "triple", "line", "plane".
    Limit { item: usize, target: String },
    /// The enumeration finds exactly this many 3-coexistence roots.
    TripleCount { count: usize },
}

/// Parsed form of a Limit target string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitTarget {
    DiseaseFree,
    Boundary(usize),
    Pair(usize, usize),
    Triple,
    Line,
    Plane,
}

pub fn parse_limit_target(s: &str) -> Result<LimitTarget> {
    let virus = |tag: &str| -> Result<usize> {
        let v: usize = tag
            .parse()
            .map_err(|_| anyhow!("virus tag {tag} is not a number"))?;
        if !(1..=3).contains(&v) {
            bail!("virus tag {v} out of range 1..=3");
        }
        Ok(v - 1)
    };
    match s {
        "disease-free" => Ok(LimitTarget::DiseaseFree),
        "triple" => Ok(LimitTarget::Triple),
        "line" => Ok(LimitTarget::Line),
        "plane" => Ok(LimitTarget::Plane),
        other => {
            if let Some(tag) = other.strip_prefix("boundary-") {
                return Ok(LimitTarget::Boundary(virus(tag)?));
            }
            if let Some(rest) = other.strip_prefix("pair-") {
                let (a, b) = rest
                    .split_once('-')
                    .ok_or_else(|| anyhow!("pair target needs two virus tags, e.g. pair-2-3"))?;
                let (a, b) = (virus(a)?, virus(b)?);
                if a >= b {
                    bail!("pair viruses must be ascending, e.g. pair-2-3");
                }
                return Ok(LimitTarget::Pair(a, b));
            }
            bail!(
                "unknown limit target {other:?}; use disease-free, boundary-K, pair-I-J, triple, line, or plane"
            )
        }
    }
}

pub enum BuiltFamily {
    Line(LineFamily),
    Plane(PlaneFamily),
}

impl BuiltFamily {
    pub fn params(&self) -> &TriVirusParams {
        match self {
            BuiltFamily::Line(l) => l.params(),
            BuiltFamily::Plane(p) => p.params(),
        }
    }
}

fn vector(name: &str, entries: &[f64], n: usize) -> Result<DVector<f64>> {
    if entries.len() != n {
        bail!(
            "field {name}: expected {n} entries, found {}",
            entries.len()
        );
    }
    Ok(DVector::from_row_slice(entries))
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        bail!("field {name}: matrix has no rows");
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            bail!(
                "field {name}: row {} has {} entries, expected {n} (matrices are square, row-major)",
                i + 1,
                row.len()
            );
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl ParamsSpec {
    pub fn build(&self) -> Result<TriVirusParams> {
        let b1 = matrix("params.beta1", &self.beta1)?;
        let n = b1.nrows();
        let deltas = vec![
            vector("params.delta1", &self.delta1, n)?,
            vector("params.delta2", &self.delta2, n)?,
            vector("params.delta3", &self.delta3, n)?,
        ];
        let betas = vec![
            b1,
            matrix("params.beta2", &self.beta2)?,
            matrix("params.beta3", &self.beta3)?,
        ];
        TriVirusParams::new(deltas, betas).map_err(|e| anyhow!("table params: {e}"))
    }

    pub fn from_params(params: &TriVirusParams) -> Self {
        let n = params.node_count();
        let delta = |k: usize| params.delta(k).iter().copied().collect::<Vec<_>>();
        let beta = |k: usize| {
            (0..n)
                .map(|i| (0..n).map(|j| params.beta(k)[(i, j)]).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        ParamsSpec {
            delta1: delta(0),
            delta2: delta(1),
            delta3: delta(2),
            beta1: beta(0),
            beta2: beta(1),
            beta3: beta(2),
        }
    }
}

impl FamilySpec {
    pub fn build(&self) -> Result<BuiltFamily> {
        match self {
            FamilySpec::Line { b1, m, b3 } => {
                let b1 = matrix("family.b1", b1)?;
                let m = matrix("family.m", m)?;
                let b3 = matrix("family.b3", b3)?;
                families::build_line_family(&b1, &m, &b3)
                    .map(BuiltFamily::Line)
                    .map_err(|e| anyhow!("table family: {e}"))
            }
            FamilySpec::PlaneIdentical { delta, b } => {
                let b = matrix("family.b", b)?;
                let delta = vector("family.delta", delta, b.nrows())?;
                families::build_plane_identical(&delta, &b)
                    .map(BuiltFamily::Plane)
                    .map_err(|e| anyhow!("table family: {e}"))
            }
            FamilySpec::PlaneCzHat { b1, m, m_hat } => {
                let b1 = matrix("family.b1", b1)?;
                let m = matrix("family.m", m)?;
                let m_hat = matrix("family.m_hat", m_hat)?;
                families::build_plane_cz_hat(&b1, &m, &m_hat)
                    .map(BuiltFamily::Plane)
                    .map_err(|e| anyhow!("table family: {e}"))
            }
        }
    }
}

pub struct Resolved {
    pub params: TriVirusParams,
    pub family: Option<BuiltFamily>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let scenario: Scenario =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Structural checks that need no numerics; field-level dimension
    /// checks happen in resolve().
    pub fn validate(&self) -> Result<()> {
        match (&self.params, &self.family) {
            (None, None) => bail!("define a [params] or a [family] table"),
            (Some(_), Some(_)) => bail!("define either [params] or [family], not both"),
            _ => {}
        }
        if self.family.is_none() {
            if let Some(i) = self
                .plan
                .iter()
                .position(|p| matches!(p, PlanItem::BuildFamily))
            {
                bail!("plan[{i}]: build-family needs a [family] table");
            }
        }
        let simulate_items: Vec<usize> = self
            .plan
            .iter()
            .enumerate()
            .filter_map(|(i, p)| matches!(p, PlanItem::Simulate { .. }).then_some(i))
            .collect();
        for (e, spec) in self.expect.iter().enumerate() {
            if let ExpectSpec::Limit { item, target } = spec {
                if !simulate_items.contains(item) {
                    bail!("expect[{e}].item: plan[{item}] is not a simulate item");
                }
                parse_limit_target(target).with_context(|| format!("expect[{e}].target"))?;
            }
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        match (&self.params, &self.family) {
            (Some(spec), None) => Ok(Resolved {
                params: spec.build()?,
                family: None,
            }),
            (None, Some(spec)) => {
                let family = spec.build()?;
                Ok(Resolved {
                    params: family.params().clone(),
                    family: Some(family),
                })
            }
            _ => unreachable!("validate() enforces exactly one of params/family"),
        }
    }
}
