//! Experiment runners: one config in, one output directory with a manifest out.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use adiabatic_core::evolution::{
    evolve, runtime_scaling_study, EvolutionSpec, Integrator, ScalingOptions, StepControl,
};
use adiabatic_core::positivity::{
    stabilized_matrix_positivity, to_json_lines, verify_ground_positivity, verify_matrix_positivity,
};
use adiabatic_core::spectral::compare::compare_profiles;
use adiabatic_core::spectral::crossings::{detect_crossings, CrossingOptions};
use adiabatic_core::spectral::krylov::KrylovOptions;
use adiabatic_core::spectral::separable::separable_gap;
use adiabatic_core::spectral::sweep::{gap_sweep, uniform_grid};
use adiabatic_core::tables::table_to_csv;
use adiabatic_core::{GapProfile, InterpolatingFamily, StateVector, SweepOptions, Verdict};
use serde_json::{json, Value};

use crate::config::{build_family, BuiltFamily, ExperimentConfig, ExperimentKind, FinalKind, Modifier};
use crate::error::{CliError, Result};
use crate::manifest::{ArtifactWriter, ContentKind, Manifest, Seeds, Versions, MANIFEST_FORMAT, MANIFEST_NAME};

type Summary = BTreeMap<String, Value>;

pub fn sweep_options(cfg: &ExperimentConfig) -> SweepOptions {
    SweepOptions {
        solver: KrylovOptions {
            tol: cfg.grid.tol,
            seed: cfg.grid.solver_seed,
            ..KrylovOptions::default()
        },
        mode: cfg.grid.mode,
        ..SweepOptions::default()
    }
}

fn modifier_for(cfg: &ExperimentConfig) -> Option<Modifier> {
    match cfg.kind {
        ExperimentKind::Gh1Search => Some(Modifier::Gh1),
        ExperimentKind::ShiftSearch => Some(Modifier::Shift),
        _ => cfg.family.modifier,
    }
}

fn versions() -> Versions {
    Versions {
        cli: env!("CARGO_PKG_VERSION").to_string(),
        core: adiabatic_core::VERSION.to_string(),
    }
}

/// Validates `cfg`, runs it on a pool of `cfg.threads` workers and writes
/// every artifact plus `manifest.json` into `out`.
pub fn run(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let out = cfg.out.clone().ok_or_else(|| CliError::usage("out: output directory required"))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cfg.threads {
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::usage(format!("threads: {e}")))?;
    let threads = pool.current_num_threads();
    let start = Instant::now();
    let mut writer = ArtifactWriter::create(&out)?;
    let summary = pool.install(|| dispatch(cfg, &mut writer))?;
    let manifest = Manifest {
        format_version: MANIFEST_FORMAT,
        kind: cfg.kind.name().to_string(),
        status: "ok".into(),
        versions: versions(),
        config: Some(cfg.clone()),
        seeds: Seeds {
            config: cfg.seed,
            family: cfg.family_seed(),
            solver: cfg.grid.solver_seed,
        },
        threads,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        files: writer.into_files(),
        summary,
    };
    write_manifest(&out, &manifest)?;
    log::info!("{} finished in {:.2}s", cfg.kind.name(), manifest.wall_time_seconds);
    Ok(manifest)
}

fn write_manifest(out: &Path, manifest: &Manifest) -> Result<()> {
    let path = out.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(CliError::io(&path))
}

fn dispatch(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<Summary> {
    match cfg.kind {
        ExperimentKind::Positivity => positivity(cfg, w),
        ExperimentKind::Evolve => evolution(cfg, w),
        ExperimentKind::ScalingStudy => scaling(cfg, w),
        ExperimentKind::Gh1Search | ExperimentKind::ShiftSearch => modified_search(cfg, w),
        _ => profile_experiment(cfg, w),
    }
}

fn integral(values: &[f64]) -> bool {
    values.iter().all(|x| x.fract() == 0.0)
}

/// Writes the final energy table and, for SAT finals, the instance.
fn write_inputs(built: &BuiltFamily, w: &mut ArtifactWriter, summary: &mut Summary) -> Result<()> {
    if let Some(e) = built.family.h1().diagonal_entries() {
        let kind = if integral(e) { ContentKind::Integer } else { ContentKind::Float };
        w.write("energies.csv", kind, &table_to_csv(e))?;
        let raw_min = match &built.encoding {
            Some(enc) => enc.min_energy,
            None => built.base.as_ref().unwrap_or(&built.family).h1().diagonal_entries().map_or(f64::NAN, |b| {
                b.iter().copied().fold(f64::INFINITY, f64::min)
            }),
        };
        summary.insert("min_energy".into(), json!(raw_min));
    }
    if let Some(inst) = &built.instance {
        w.write("instance.cnf", ContentKind::Integer, &inst.to_dimacs())?;
        summary.insert("clauses".into(), json!(inst.clauses().len()));
    }
    if let Some(enc) = &built.encoding {
        summary.insert("satisfiable".into(), json!(enc.satisfiable()));
    }
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, family: &InterpolatingFamily) -> Result<GapProfile> {
    Ok(gap_sweep(family, &uniform_grid(cfg.grid.points), &sweep_options(cfg))?)
}

fn profile_summary(summary: &mut Summary, p: &GapProfile) {
    summary.insert("family".into(), json!(p.family));
    summary.insert("n".into(), json!(p.n));
    summary.insert("g_min".into(), json!(p.g_min));
    summary.insert("s_star".into(), json!(p.s_star));
    summary.insert("min_sampled_gap".into(), json!(p.min_sampled_gap()));
    summary.insert("max_residual".into(), json!(p.solver.max_residual));
}

fn profile_experiment(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<Summary> {
    let built = build_family(cfg, None, modifier_for(cfg))?;
    let mut summary = Summary::new();
    write_inputs(&built, w, &mut summary)?;
    let p = sweep(cfg, &built.family)?;
    w.write("gap_profile.csv", ContentKind::Float, &p.to_csv())?;
    w.write("gap_profile.json", ContentKind::Float, &p.to_json())?;
    profile_summary(&mut summary, &p);
    if cfg.final_kind() == Some(FinalKind::Separable) && cfg.family.couplings.is_none() && built.base.is_none() {
        let dev = p
            .samples
            .iter()
            .map(|x| (x.gap() - separable_gap(x.s)).abs())
            .fold(0.0, f64::max);
        summary.insert("closed_form_max_deviation".into(), json!(dev));
    }
    if cfg.grid.crossings {
        let opts = CrossingOptions {
            window: cfg.grid.crossing_window,
            ..CrossingOptions::default()
        };
        let report = detect_crossings(&built.family, &p.grid(), &opts)?;
        summary.insert("crossings".into(), json!(report.events.len()));
        w.write(
            "crossings.json",
            ContentKind::Float,
            &serde_json::to_string_pretty(&report).expect("report serializes"),
        )?;
    }
    Ok(summary)
}

fn modified_search(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<Summary> {
    let built = build_family(cfg, None, modifier_for(cfg))?;
    let base = built.base.as_ref().expect("modifier always keeps the base family");
    let mut summary = Summary::new();
    write_inputs(&built, w, &mut summary)?;
    let pb = sweep(cfg, base)?;
    let pm = sweep(cfg, &built.family)?;
    w.write("base_profile.csv", ContentKind::Float, &pb.to_csv())?;
    w.write("base_profile.json", ContentKind::Float, &pb.to_json())?;
    w.write("gap_profile.csv", ContentKind::Float, &pm.to_csv())?;
    w.write("gap_profile.json", ContentKind::Float, &pm.to_json())?;
    let cmp = compare_profiles(&pb, &pm)?;
    w.write(
        "comparison.json",
        ContentKind::Float,
        &serde_json::to_string_pretty(&cmp).expect("comparison serializes"),
    )?;
    profile_summary(&mut summary, &pm);
    summary.insert("base_g_min".into(), json!(pb.g_min));
    summary.insert("g_min_ratio".into(), json!(cmp.g_min_ratio));
    summary.insert("s_star_shift".into(), json!(cmp.s_star_shift));
    Ok(summary)
}

fn positivity(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<Summary> {
    let built = build_family(cfg, None, modifier_for(cfg))?;
    let pc = cfg.positivity.clone().unwrap_or_default();
    let mut summary = Summary::new();
    write_inputs(&built, w, &mut summary)?;
    let fam = &built.family;
    let mut reports = Vec::new();
    for &s in &pc.s_values {
        if pc.matrix {
            let r = match pc.steps {
                Some(m) => verify_matrix_positivity(fam, s, m)?,
                None => stabilized_matrix_positivity(fam, s)?,
            };
            reports.push(r);
        }
        if pc.ground && s < 1.0 {
            reports.push(verify_ground_positivity(fam, s)?);
        }
    }
    w.write("positivity.jsonl", ContentKind::Float, &to_json_lines(&reports))?;
    let count = |pred: &dyn Fn(&adiabatic_core::PositivityReport) -> bool| reports.iter().filter(|r| pred(r)).count();
    summary.insert("family".into(), json!(fam.id()));
    summary.insert("reports".into(), json!(reports.len()));
    summary.insert("positive".into(), json!(count(&|r| r.verdict == Verdict::Positive)));
    summary.insert("non_positive".into(), json!(count(&|r| r.verdict == Verdict::NonPositive)));
    summary.insert("not_applicable".into(), json!(count(&|r| r.verdict == Verdict::NotApplicable)));
    Ok(summary)
}

fn evolution(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<Summary> {
    let built = build_family(cfg, None, modifier_for(cfg))?;
    let ec = cfg.evolve.as_ref().ok_or_else(|| CliError::usage("evolve: section required"))?;
    let spec = EvolutionSpec {
        total_time: ec.total_time,
        schedule: ec.schedule.clone(),
        control: StepControl {
            tol: ec.tol,
            ..StepControl::default()
        },
        integrator: Integrator::Auto,
        trace_stride: Some(ec.trace_stride.max(1)),
    };
    let fam = &built.family;
    let result = evolve(fam, &spec, &StateVector::uniform(fam.n())?)?;
    let mut summary = Summary::new();
    write_inputs(&built, w, &mut summary)?;
    w.write("trace.csv", ContentKind::Float, &result.trace_csv())?;
    w.write(
        "evolution.json",
        ContentKind::Float,
        &serde_json::to_string_pretty(&result).expect("result serializes"),
    )?;
    summary.insert("family".into(), json!(fam.id()));
    summary.insert("total_time".into(), json!(result.total_time));
    summary.insert("final_fidelity".into(), json!(result.final_fidelity));
    summary.insert("accepted_steps".into(), json!(result.stats.accepted));
    summary.insert("max_norm_drift".into(), json!(result.stats.max_norm_drift));
    Ok(summary)
}

fn scaling(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<Summary> {
    let sc = cfg.scaling.as_ref().ok_or_else(|| CliError::usage("scaling: section required"))?;
    let opts = ScalingOptions {
        f_star: sc.f_star,
        rel_tol: sc.rel_tol,
        sweep: sweep_options(cfg),
        grid_points: cfg.grid.points,
        ..ScalingOptions::default()
    };
    let modifier = modifier_for(cfg);
    let generator = |n: usize| {
        build_family(cfg, Some(n), modifier).map(|b| b.family).map_err(|e| match e {
            CliError::Core(c) => c,
            other => adiabatic_core::Error::InvalidParameter(other.to_string()),
        })
    };
    let table = runtime_scaling_study(generator, &sc.sizes, &opts)?;
    w.write("scaling.csv", ContentKind::Float, &table.to_csv())?;
    w.write("scaling.json", ContentKind::Float, &table.to_json())?;
    let mut summary = Summary::new();
    summary.insert("f_star".into(), json!(table.f_star));
    summary.insert("sizes".into(), json!(sc.sizes));
    summary.insert(
        "t_star".into(),
        json!(table.rows.iter().map(|r| r.t_star).collect::<Vec<_>>()),
    );
    summary.insert(
        "g_min".into(),
        json!(table.rows.iter().map(|r| r.g_min).collect::<Vec<_>>()),
    );
    if let Some(r) = table.runtime_vs_n {
        summary.insert("log2_t_star_slope".into(), json!(r.slope));
    }
    if let Some(r) = table.runtime_vs_gap {
        summary.insert("ln_t_star_vs_ln_inv_gap_slope".into(), json!(r.slope));
    }
    Ok(summary)
}

/// Compares two saved gap profiles and writes `comparison.json` into `out`.
pub fn compare(a: &Path, b: &Path, out: &Path) -> Result<Manifest> {
    let start = Instant::now();
    let load = |p: &Path| -> Result<GapProfile> {
        let text = std::fs::read_to_string(p).map_err(CliError::io(p))?;
        Ok(GapProfile::from_json(&text)?)
    };
    let (pa, pb) = (load(a)?, load(b)?);
    let cmp = compare_profiles(&pa, &pb)?;
    let mut w = ArtifactWriter::create(out)?;
    w.write(
        "comparison.json",
        ContentKind::Float,
        &serde_json::to_string_pretty(&cmp).expect("comparison serializes"),
    )?;
    let mut summary = Summary::new();
    summary.insert("family_a".into(), json!(cmp.family_a));
    summary.insert("family_b".into(), json!(cmp.family_b));
    summary.insert("g_min_ratio".into(), json!(cmp.g_min_ratio));
    summary.insert("s_star_shift".into(), json!(cmp.s_star_shift));
    summary.insert("max_abs_difference".into(), json!(cmp.max_abs_difference));
    let manifest = Manifest {
        format_version: MANIFEST_FORMAT,
        kind: "compare".into(),
        status: "ok".into(),
        versions: versions(),
        config: None,
        seeds: Seeds {
            config: 0,
            family: 0,
            solver: 0,
        },
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        files: w.into_files(),
        summary,
    };
    write_manifest(out, &manifest)?;
    Ok(manifest)
}

/// Best-effort `error.json` next to where the manifest would have gone.
pub fn write_error_record(out: Option<&Path>, err: &CliError) -> String {
    let text = serde_json::to_string(&err.record()).expect("record serializes");
    if let Some(dir) = out {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), &text);
        }
    }
    text
}
