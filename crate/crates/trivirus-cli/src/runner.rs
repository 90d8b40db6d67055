// Executes scenarios and presets: a sequential context phase (family,
// enumeration, condition report), a fan-out phase over independent items,
// then ordered writes. Output bytes do not depend on --parallel.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use trivirus::conditions::{self, ConditionReport, Verdict};
use trivirus::equilibria::{self, EnumerationResult, EquilibriumKind, GenericityReport};
use trivirus::families::{LineFamily, PlaneFamily};
use trivirus::model::{SystemState, TriVirusParams};
use trivirus::presets::{self, PresetArtifacts, PresetContext};
use trivirus::sim::{self, KnownTargets, LimitClassification, SimConfig, Trajectory};

use crate::config::{parse_limit_target, BuiltFamily, ExpectSpec, LimitTarget, PlanItem, Scenario};

pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: String,
    pub failed_expectations: usize,
}

/// --out wins, then the scenario's own `out`, then $TRIVIRUS_OUT/<name>,
/// then runs/<name>.
pub fn resolve_out_dir(flag: Option<PathBuf>, scenario_out: Option<&Path>, name: &str) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    if let Some(dir) = scenario_out {
        return dir.to_path_buf();
    }
    let base = std::env::var_os("TRIVIRUS_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    base.join(name)
}

struct ItemOutput {
    files: Vec<(String, Vec<u8>)>,
    line: String,
    trajectory: Option<Trajectory>,
}

fn limit_text(traj: &Trajectory) -> String {
    match &traj.limit {
        Some(l) => format!("{l}"),
        None => format!("no classified limit ({})", traj.termination),
    }
}

pub fn run_scenario(
    scenario: &Scenario,
    dir: &Path,
    seed_override: Option<u64>,
    parallel: bool,
) -> Result<RunOutcome> {
    let seed = seed_override.or(scenario.seed).unwrap_or(0);
    let resolved = scenario.resolve()?;
    let params = &resolved.params;

    let needs_enumeration = scenario
        .plan
        .iter()
        .any(|i| matches!(i, PlanItem::Simulate { .. } | PlanItem::Enumerate { .. }))
        || scenario
            .expect
            .iter()
            .any(|e| matches!(e, ExpectSpec::TripleCount { .. } | ExpectSpec::Limit { .. }));
    let enumeration_starts = scenario
        .plan
        .iter()
        .filter_map(|i| match i {
            PlanItem::Enumerate { starts } => Some(starts.unwrap_or(40)),
            _ => None,
        })
        .max()
        .unwrap_or(40);
    let enumeration = if needs_enumeration {
        Some(
            equilibria::enumerate_equilibria(params, enumeration_starts, seed)
                .map_err(|e| anyhow!("enumeration: {e}"))?,
        )
    } else {
        None
    };

    let needs_report = scenario
        .plan
        .iter()
        .any(|i| matches!(i, PlanItem::CheckConditions))
        || scenario
            .expect
            .iter()
            .any(|e| matches!(e, ExpectSpec::Check { .. }));
    let report = if needs_report {
        Some(
            conditions::full_report(params, enumeration.as_ref().filter(|e| e.nondegenerate))
                .map_err(|e| anyhow!("condition checks: {e}"))?,
        )
    } else {
        None
    };

    let run_item = |(idx, item): (usize, &PlanItem)| -> Result<ItemOutput> {
        execute_item(
            idx,
            item,
            seed,
            params,
            &resolved.family,
            &enumeration,
            &report,
        )
    };
    let outputs: Vec<ItemOutput> = if parallel {
        scenario
            .plan
            .par_iter()
            .enumerate()
            .map(run_item)
            .collect::<Result<_>>()?
    } else {
        scenario
            .plan
            .iter()
            .enumerate()
            .map(run_item)
            .collect::<Result<_>>()?
    };

    let mut summary = String::new();
    writeln!(summary, "seed: {seed}").unwrap();
    if !outputs.is_empty() {
        writeln!(summary, "items:").unwrap();
        for out in &outputs {
            writeln!(summary, "  {}", out.line).unwrap();
        }
    }
    let mut failed = 0usize;
    if !scenario.expect.is_empty() {
        writeln!(summary, "expectations:").unwrap();
        for spec in &scenario.expect {
            let (line, passed) = evaluate_expectation(spec, &outputs, &enumeration, &report);
            writeln!(summary, "  {line}").unwrap();
            if !passed {
                failed += 1;
            }
        }
    }
    writeln!(
        summary,
        "result: {} expectations, {failed} failed",
        scenario.expect.len()
    )
    .unwrap();

    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_file(dir, "params.txt", render_params(params).as_bytes())?;
    for out in &outputs {
        for (name, bytes) in &out.files {
            write_file(dir, name, bytes)?;
        }
    }
    write_file(dir, "summary.txt", summary.as_bytes())?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        summary,
        failed_expectations: failed,
    })
}

#[allow(clippy::too_many_arguments)]
fn execute_item(
    idx: usize,
    item: &PlanItem,
    seed: u64,
    params: &TriVirusParams,
    family: &Option<BuiltFamily>,
    enumeration: &Option<EnumerationResult>,
    report: &Option<ConditionReport>,
) -> Result<ItemOutput> {
    match item {
        PlanItem::Simulate {
            seed: item_seed,
            ic,
            horizon,
            sample_interval,
        } => {
            let n = params.node_count();
            let x0 = match ic {
                Some(rows) => state_from_rows(idx, rows, n)?,
                None => sim::random_initial_condition(
                    n,
                    item_seed.unwrap_or(seed.wrapping_add(1 + idx as u64)),
                ),
            };
            let mut cfg = SimConfig::default();
            if let Some(h) = horizon {
                cfg.horizon = *h;
            }
            if let Some(s) = sample_interval {
                cfg.sample_interval = *s;
            }
            let enumeration = enumeration
                .as_ref()
                .expect("simulate items force an enumeration");
            let targets = KnownTargets {
                equilibria: &enumeration.equilibria,
                line: match family {
                    Some(BuiltFamily::Line(l)) => Some(l),
                    _ => None,
                },
                plane: match family {
                    Some(BuiltFamily::Plane(p)) => Some(p),
                    _ => None,
                },
            };
            let mut traj = sim::integrate(params, &x0, &cfg)
                .map_err(|e| anyhow!("plan[{idx}] simulate: {e}"))?;
            traj.limit = sim::classify_limit(&traj, &targets).ok();
            let mut csv = Vec::new();
            traj.write_csv(&mut csv).context("serializing trajectory")?;
            let file = format!("traj_{idx}.csv");
            let line = format!(
                "plan[{idx}] simulate: {} at t = {:.1} -> {file} | limit {}",
                traj.termination,
                traj.final_time(),
                limit_text(&traj)
            );
            Ok(ItemOutput {
                files: vec![(file, csv)],
                line,
                trajectory: Some(traj),
            })
        }
        PlanItem::Enumerate { .. } => {
            let run = enumeration
                .as_ref()
                .expect("enumerate items force an enumeration");
            let file = format!("enumeration_{idx}.txt");
            let line = format!(
                "plan[{idx}] enumerate: {} equilibria from {} starts -> {file}",
                run.equilibria.len(),
                run.starts_used
            );
            Ok(ItemOutput {
                files: vec![(file, render_enumeration(run).into_bytes())],
                line,
                trajectory: None,
            })
        }
        PlanItem::CheckConditions => {
            let report = report.as_ref().expect("check items force a report");
            let file = format!("conditions_{idx}.txt");
            let line = format!(
                "plan[{idx}] check-conditions: {} records -> {file}",
                report.records.len()
            );
            Ok(ItemOutput {
                files: vec![(file, report.render().into_bytes())],
                line,
                trajectory: None,
            })
        }
        PlanItem::BuildFamily => {
            let family = family
                .as_ref()
                .expect("validate() ties build-family to [family]");
            let file = format!("family_{idx}.txt");
            let line = format!("plan[{idx}] build-family -> {file}");
            Ok(ItemOutput {
                files: vec![(file, render_family(family).into_bytes())],
                line,
                trajectory: None,
            })
        }
        PlanItem::GenericityProbe { trials, scale } => {
            let trials = trials.unwrap_or(100);
            let scale = scale.unwrap_or(0.05);
            let probe = equilibria::genericity_probe(
                params,
                trials,
                scale,
                seed.wrapping_add(7000 + idx as u64),
            )
            .map_err(|e| anyhow!("plan[{idx}] genericity-probe: {e}"))?;
            let file = format!("genericity_{idx}.txt");
            let line = format!(
                "plan[{idx}] genericity-probe: {} of {trials} trials degenerate -> {file}",
                probe.degenerate_trials
            );
            Ok(ItemOutput {
                files: vec![(file, render_genericity(&probe).into_bytes())],
                line,
                trajectory: None,
            })
        }
    }
}

fn state_from_rows(idx: usize, rows: &[Vec<f64>], n: usize) -> Result<SystemState> {
    if rows.len() != 3 {
        return Err(anyhow!(
            "plan[{idx}].ic: expected 3 rows, found {}",
            rows.len()
        ));
    }
    let mut state = SystemState::zeros(3, n);
    for (k, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(anyhow!(
                "plan[{idx}].ic: row {} has {} entries, expected {n}",
                k + 1,
                row.len()
            ));
        }
        for (i, v) in row.iter().enumerate() {
            state.block_mut(k)[i] = *v;
        }
    }
    Ok(state)
}

fn evaluate_expectation(
    spec: &ExpectSpec,
    outputs: &[ItemOutput],
    enumeration: &Option<EnumerationResult>,
    report: &Option<ConditionReport>,
) -> (String, bool) {
    let line = |label: &str, passed: bool, measured: &str, tolerance: &str| {
        (
            format!(
                "{} {label} | measured {measured} | tolerance {tolerance}",
                if passed { "PASS" } else { "FAIL" }
            ),
            passed,
        )
    };
    match spec {
        ExpectSpec::Check { name, holds } => {
            let label = format!("check {name} {}", if *holds { "holds" } else { "fails" });
            let report = report.as_ref().expect("check expectations force a report");
            match report.find(name) {
                Some(record) => {
                    let got = match record.hypothesis {
                        Verdict::Holds => Some(true),
                        Verdict::Fails => Some(false),
                        Verdict::Inconclusive => None,
                    };
                    line(
                        &label,
                        got == Some(*holds),
                        &format!("verdict {}", record.hypothesis),
                        "1e-8 band",
                    )
                }
                None => line(&label, false, "no such check", "1e-8 band"),
            }
        }
        ExpectSpec::Limit { item, target } => {
            let label = format!("plan[{item}] reaches {target}");
            let parsed = parse_limit_target(target).expect("validate() parsed this target");
            let traj = outputs[*item]
                .trajectory
                .as_ref()
                .expect("validate() ties item to simulate");
            let matched = match (&traj.limit, parsed) {
                (Some(LimitClassification::Equilibrium { kind, .. }), t) => match (kind, t) {
                    (EquilibriumKind::DiseaseFree, LimitTarget::DiseaseFree) => true,
                    (EquilibriumKind::Boundary(k), LimitTarget::Boundary(t)) => *k == t,
                    (EquilibriumKind::PairCoexistence(i, j), LimitTarget::Pair(a, b)) => {
                        (*i, *j) == (a, b)
                    }
                    (EquilibriumKind::TripleCoexistence, LimitTarget::Triple) => true,
                    _ => false,
                },
                (Some(LimitClassification::Line { .. }), LimitTarget::Line) => true,
                (Some(LimitClassification::Plane { .. }), LimitTarget::Plane) => true,
                _ => false,
            };
            line(&label, matched, &limit_text(traj), "limit within 1e-4")
        }
        ExpectSpec::TripleCount { count } => {
            let run = enumeration
                .as_ref()
                .expect("count expectations force an enumeration");
            let found = run.three_coexistence_count();
            line(
                &format!("{count} 3-coexistence roots"),
                found == *count,
                &format!("{found} found from {} starts", run.starts_used),
                "exact",
            )
        }
    }
}

pub fn run_preset_command(name: &str, dir: &Path, seed: u64, parallel: bool) -> Result<RunOutcome> {
    let preset = presets::preset(name)
        .ok_or_else(|| anyhow!("no preset named {name:?}; see list-presets"))?;
    let context =
        presets::prepare_preset(&preset, seed).map_err(|e| anyhow!("preset {name}: {e}"))?;
    let indices: Vec<usize> = (0..preset.starts.len()).collect();
    let run = |&index: &usize| presets::run_start(&preset, &context, seed, index);
    let trajectories: Vec<Trajectory> = if parallel {
        indices.par_iter().map(run).collect::<Result<_, _>>()
    } else {
        indices.iter().map(run).collect::<Result<_, _>>()
    }
    .map_err(|e| anyhow!("preset {name}: {e}"))?;
    let PresetContext {
        enumeration,
        report,
        line,
        plane,
    } = context;
    let artifacts = PresetArtifacts {
        enumeration,
        report,
        trajectories,
        line,
        plane,
    };

    let mut summary = String::new();
    writeln!(summary, "preset: {name}").unwrap();
    writeln!(summary, "description: {}", preset.description).unwrap();
    writeln!(summary, "seed: {seed}").unwrap();
    writeln!(summary, "starts:").unwrap();
    for (i, traj) in artifacts.trajectories.iter().enumerate() {
        writeln!(
            summary,
            "  start {i}: {} at t = {:.1} -> traj_{i}.csv | limit {}",
            traj.termination,
            traj.final_time(),
            limit_text(traj)
        )
        .unwrap();
    }
    let outcomes = presets::evaluate_expectations(&preset, &artifacts);
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    writeln!(summary, "expectations:").unwrap();
    for outcome in &outcomes {
        writeln!(summary, "  {outcome}").unwrap();
    }
    writeln!(
        summary,
        "result: {} expectations, {failed} failed",
        outcomes.len()
    )
    .unwrap();

    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_file(dir, "params.txt", render_params(&preset.params).as_bytes())?;
    for (i, traj) in artifacts.trajectories.iter().enumerate() {
        let mut csv = Vec::new();
        traj.write_csv(&mut csv).context("serializing trajectory")?;
        write_file(dir, &format!("traj_{i}.csv"), &csv)?;
    }
    write_file(dir, "conditions.txt", artifacts.report.render().as_bytes())?;
    write_file(
        dir,
        "enumeration.txt",
        render_enumeration(&artifacts.enumeration).as_bytes(),
    )?;
    if let Some(l) = &artifacts.line {
        write_file(dir, "family.txt", render_line(l).as_bytes())?;
    }
    if let Some(p) = &artifacts.plane {
        write_file(dir, "family.txt", render_plane(p).as_bytes())?;
    }
    write_file(dir, "summary.txt", summary.as_bytes())?;
    Ok(RunOutcome {
        dir: dir.to_path_buf(),
        summary,
        failed_expectations: failed,
    })
}

pub fn check_only(scenario: &Scenario) -> Result<String> {
    let resolved = scenario.resolve()?;
    let report = conditions::full_report(&resolved.params, None)
        .map_err(|e| anyhow!("condition checks: {e}"))?;
    Ok(report.render())
}

pub fn enumerate_only(scenario: &Scenario, seed_override: Option<u64>) -> Result<String> {
    let resolved = scenario.resolve()?;
    let seed = seed_override.or(scenario.seed).unwrap_or(0);
    let starts = scenario
        .plan
        .iter()
        .filter_map(|i| match i {
            PlanItem::Enumerate { starts } => Some(starts.unwrap_or(40)),
            _ => None,
        })
        .max()
        .unwrap_or(40);
    let run = equilibria::enumerate_equilibria(&resolved.params, starts, seed)
        .map_err(|e| anyhow!("enumeration: {e}"))?;
    Ok(render_enumeration(&run))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn render_params(params: &TriVirusParams) -> String {
    let n = params.node_count();
    let mut out = String::new();
    writeln!(out, "viruses: {}", params.virus_count()).unwrap();
    writeln!(out, "nodes: {n}").unwrap();
    for k in 0..params.virus_count() {
        let delta: Vec<String> = params.delta(k).iter().map(|v| format!("{v}")).collect();
        writeln!(out, "delta{} = [{}]", k + 1, delta.join(", ")).unwrap();
        writeln!(out, "beta{}:", k + 1).unwrap();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| format!("{}", params.beta(k)[(i, j)]))
                .collect();
            writeln!(out, "  [{}]", row.join(", ")).unwrap();
        }
    }
    out
}

pub fn render_enumeration(run: &EnumerationResult) -> String {
    let mut out = String::new();
    writeln!(out, "starts used: {}", run.starts_used).unwrap();
    writeln!(out, "nondegenerate: {}", run.nondegenerate).unwrap();
    writeln!(out, "continuum suspected: {}", run.continuum_suspected).unwrap();
    match run.index_sum_saturated {
        Some(s) => writeln!(out, "saturated index sum: {s:+}").unwrap(),
        None => writeln!(out, "saturated index sum: undefined").unwrap(),
    }
    writeln!(out, "equilibria: {}", run.equilibria.len()).unwrap();
    for (i, eq) in run.equilibria.iter().enumerate() {
        let index = match eq.index {
            Some(v) => format!("{v:+}"),
            None => "undefined".into(),
        };
        writeln!(
            out,
            "{}. {} | stable {} | saturated {} | index {} | residual {:.3e}",
            i + 1,
            eq.kind,
            eq.is_stable,
            eq.is_saturated,
            index,
            eq.residual
        )
        .unwrap();
        for k in 0..eq.state.virus_count() {
            let entries: Vec<String> = eq
                .state
                .block(k)
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(out, "   x{} = [{}]", k + 1, entries.join(", ")).unwrap();
        }
    }
    out
}

fn render_family(family: &BuiltFamily) -> String {
    match family {
        BuiltFamily::Line(l) => render_line(l),
        BuiltFamily::Plane(p) => render_plane(p),
    }
}

pub fn render_line(line: &LineFamily) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "family: line (beta1 z, (1 - beta1) z, 0) for beta1 in [0, 1]"
    )
    .unwrap();
    let z: Vec<String> = line.z.iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(out, "z = [{}]", z.join(", ")).unwrap();
    writeln!(
        out,
        "third-virus radius over the line: {:.12}",
        line.radius3
    )
    .unwrap();
    writeln!(out, "abscissa: {:.6e}", line.abscissa).unwrap();
    writeln!(out, "attractivity: {}", line.attractivity).unwrap();
    out
}

pub fn render_plane(plane: &PlaneFamily) -> String {
    let mut out = String::new();
    let kind = match plane {
        PlaneFamily::IdenticalViruses { .. } => "identical viruses",
        PlaneFamily::GeneralCzHat { .. } => "distinct matrices fixing one profile",
    };
    writeln!(
        out,
        "family: plane (a1 x, a2 x, a3 x) for a on the unit simplex ({kind})"
    )
    .unwrap();
    let anchor: Vec<String> = plane.anchor().iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(out, "anchor x = [{}]", anchor.join(", ")).unwrap();
    out
}

pub fn render_genericity(report: &GenericityReport) -> String {
    let mut out = String::new();
    writeln!(out, "trials: {}", report.trials).unwrap();
    writeln!(
        out,
        "degenerate trials: {} ({:.1}%)",
        report.degenerate_trials,
        100.0 * report.degenerate_fraction
    )
    .unwrap();
    writeln!(
        out,
        "base continuum suspected: {}",
        report.base_continuum_suspected
    )
    .unwrap();
    writeln!(out, "root-count distribution:").unwrap();
    for (count, trials) in &report.count_distribution {
        writeln!(out, "  {count} roots: {trials} trials").unwrap();
    }
    out
}
