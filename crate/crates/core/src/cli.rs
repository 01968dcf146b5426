// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 when an input, log or configuration fails
//! validation (including usage errors), 1 when the environment fails
//! (unreadable or unwritable files).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::codec::{read_pgm, read_raw_f32, write_jsonl, write_pgm, write_raw_f32, write_text};
use crate::config::Config;
use crate::eef_evolution::write_trace_csv;
use crate::error::{GuiderError, Result};
use crate::field::ScalarField;
use crate::grasp_feasibility::write_candidates_jsonl;
use crate::object_cascade::write_proposals_jsonl;
use crate::render::render_heatmap;
use crate::replay::log::{mask_to_pgm, write_log};
use crate::replay::metrics::{aggregate, wilcoxon_exact, Aggregate, Alternative, WilcoxonResult};
use crate::replay::scenario::{generate_scenario, Template};
use crate::replay::{
    proposal_scores, replay, ManipulationOutcome, NavigationOutcome, PhaseSelection, ReplayOutcome, SessionLog,
};

pub const LOG_LEVEL_ENV: &str = "GUIDER_LOG_LEVEL";

#[derive(Debug, Parser)]
#[command(name = "guider", version, about = "Dual-phase intent inference replay and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay a session log and score each phase.
    Replay(ReplayArgs),
    /// Generate a synthetic session log from a template.
    Gen(GenArgs),
    /// Aggregate metrics files and compare against a baseline.
    Eval(EvalArgs),
    /// Render a raw f32 dump or PGM image as a heatmap.
    Render(RenderArgs),
    /// Validate a configuration and print the effective values.
    CheckConfig(ConfigArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Flat `group.key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PhaseArg {
    Nav,
    Manip,
    Both,
}

impl From<PhaseArg> for PhaseSelection {
    fn from(p: PhaseArg) -> Self {
        match p {
            PhaseArg::Nav => PhaseSelection::Navigation,
            PhaseArg::Manip => PhaseSelection::Manipulation,
            PhaseArg::Both => PhaseSelection::Both,
        }
    }
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Session log directory.
    log_dir: PathBuf,
    /// Output directory for metrics, predictions and traces.
    #[arg(long)]
    out: PathBuf,
    /// Seed for stochastic stages; defaults to the seed in the manifest, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "both")]
    phase: PhaseArg,
    /// Write every intermediate layer, mask and trace under `<out>/stages`.
    #[arg(long)]
    dump_stages: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// t1_direct, t2_base_redirect, t3_manip_redirect, t4_tool or t5_infeasible.
    template: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output session log directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlternativeArg {
    Greater,
    Less,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// metrics.csv files, or replay output directories containing one.
    #[arg(required = true)]
    metrics: Vec<PathBuf>,
    /// Baseline metrics paired by session, phase and seed.
    #[arg(long, num_args = 1..)]
    against: Vec<PathBuf>,
    /// Direction of the one-tailed test: the evaluated method is larger or smaller.
    #[arg(long, value_enum, default_value = "greater")]
    alternative: AlternativeArg,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// A `.f32` dump (with its `.json` sidecar) or a PGM image.
    input: PathBuf,
    /// Output PPM path.
    #[arg(long)]
    out: PathBuf,
    /// Value range mapped onto the colormap, as `lo,hi`.
    #[arg(long, value_parser = parse_range)]
    range: Option<(f64, f64)>,
}

fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo < hi) {
        return Err("lo must be below hi".into());
    }
    Ok((lo, hi))
}

/// Parse arguments, run the command and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("guider: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &GuiderError) -> i32 {
    if e.is_validation() {
        2
    } else {
        1
    }
}

fn init_logging() {
    let level = std::env::var(LOG_LEVEL_ENV).unwrap_or_default();
    let filter = match level.as_str() {
        "" => log::LevelFilter::Warn,
        "error" => log::LevelFilter::Error,
        "warn" => log::LevelFilter::Warn,
        "info" => log::LevelFilter::Info,
        "debug" => log::LevelFilter::Debug,
        other => {
            eprintln!("guider: ignoring {LOG_LEVEL_ENV}={other:?}; expected error, warn, info or debug");
            log::LevelFilter::Warn
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(filter)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Replay(a) => cmd_replay(&a),
        Command::Gen(a) => cmd_gen(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Render(a) => cmd_render(&a),
        Command::CheckConfig(a) => {
            let cfg = load_config(&a)?;
            print!("{}", cfg.to_flat_string());
            Ok(())
        }
    }
}

fn load_config(a: &ConfigArgs) -> Result<Config> {
    let mut cfg = match &a.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for s in &a.set {
        cfg.set(s)?;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| GuiderError::io(dir, e))
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let template: Template = a.template.parse()?;
    let cfg = load_config(&a.config)?;
    let assets = generate_scenario(template, a.seed, &cfg.scenario, cfg.nav.cell_size)?;
    write_log(&a.out, &assets)?;
    log::info!("wrote {} (seed {}) to {}", template.name(), a.seed, a.out.display());
    Ok(())
}

fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let cfg = load_config(&a.config)?;
    let log = SessionLog::load(&a.log_dir)?;
    let seed = a.seed.or(log.seed).unwrap_or(0);
    let outcome = replay(&log, &cfg, seed, a.phase.into())?;
    create_dir(&a.out)?;
    write_outputs(&a.out, &outcome, seed)?;
    if a.dump_stages {
        dump_stages(&a.out.join("stages"), &outcome)?;
    }
    print!("{}", summary_table(&outcome));
    Ok(())
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub session: String,
    pub seed: u64,
    pub phase: String,
    pub truth: String,
    pub contact_t: f64,
    pub redirect_t: Option<f64>,
    pub rtcp: Option<f64>,
    pub stability: f64,
    pub first_correct_t: Option<f64>,
    pub first_confident_t: Option<f64>,
}

pub fn metric_rows(outcome: &ReplayOutcome, seed: u64) -> Vec<MetricRow> {
    outcome
        .phases()
        .into_iter()
        .map(|p| MetricRow {
            session: outcome.name.clone(),
            seed,
            phase: p.timeline.phase.name().to_string(),
            truth: p.timeline.targets[p.truth].clone(),
            contact_t: p.contact_t,
            redirect_t: p.redirect_t,
            rtcp: p.metrics.rtcp,
            stability: p.metrics.stability,
            first_correct_t: p.metrics.first_correct_t,
            first_confident_t: p.metrics.first_confident_t,
        })
        .collect()
}

fn csv_err(path: &Path, e: csv::Error) -> GuiderError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => GuiderError::io(path, io),
        other => GuiderError::parse(path, line, format!("{other:?}")),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn write_outputs(out: &Path, outcome: &ReplayOutcome, seed: u64) -> Result<()> {
    let path = out.join("metrics.csv");
    let mut w = csv_writer(&path)?;
    for row in metric_rows(outcome, seed) {
        w.serialize(row).map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| GuiderError::io(&path, e))?;

    let path = out.join("timeline.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["phase", "t", "predicted", "correct"]).map_err(|e| csv_err(&path, e))?;
    for p in outcome.phases() {
        let tl = &p.timeline;
        for e in &tl.entries {
            let name = e.predicted.map_or("", |k| tl.targets[k].as_str());
            let correct = if e.predicted == Some(p.truth) { "1" } else { "0" };
            w.write_record([tl.phase.name(), &e.t.to_string(), name, correct])
                .map_err(|e| csv_err(&path, e))?;
        }
    }
    w.flush().map_err(|e| GuiderError::io(&path, e))?;

    for p in outcome.phases() {
        let tl = &p.timeline;
        let path = out.join(format!("scores_{}.csv", tl.phase.name()));
        let mut w = csv_writer(&path)?;
        let mut header = vec!["t".to_string()];
        header.extend(tl.columns.iter().cloned());
        w.write_record(&header).map_err(|e| csv_err(&path, e))?;
        for e in &tl.entries {
            let mut rec = vec![e.t.to_string()];
            rec.extend(e.scores.iter().map(|s| format!("{s:.6}")));
            w.write_record(&rec).map_err(|e| csv_err(&path, e))?;
        }
        w.flush().map_err(|e| GuiderError::io(&path, e))?;
    }
    write_text(&out.join("summary.txt"), &summary_table(outcome))
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

/// Per-phase results of one session.
pub fn summary_table(outcome: &ReplayOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "session: {}", outcome.name);
    let _ = writeln!(
        s,
        "{:<13} {:<16} {:>10} {:>10} {:>13} {:>11}",
        "phase", "truth", "contact_s", "rtcp_s", "stability_%", "redirect_s"
    );
    for p in outcome.phases() {
        let _ = writeln!(
            s,
            "{:<13} {:<16} {:>10.2} {:>10} {:>13.1} {:>11}",
            p.timeline.phase.name(),
            p.timeline.targets[p.truth],
            p.contact_t,
            fmt_opt(p.metrics.rtcp, 2),
            p.metrics.stability,
            fmt_opt(p.redirect_t, 2),
        );
    }
    s
}

fn dump_field(dir: &Path, stem: &str, field: &ScalarField) -> Result<()> {
    write_raw_f32(dir, stem, field)?;
    render_heatmap(field, &dir.join(format!("{stem}.ppm")), (0.0, 1.0))
}

/// Grid row 0 is the southern edge; images put north at the top.
fn north_up(f: &ScalarField) -> ScalarField {
    let (w, h) = (f.width(), f.height());
    let mut data = Vec::with_capacity(w * h);
    for y in (0..h).rev() {
        data.extend_from_slice(&f.data()[y * w..(y + 1) * w]);
    }
    ScalarField::from_vec(w, h, data).expect("same shape")
}

fn dump_stages(dir: &Path, outcome: &ReplayOutcome) -> Result<()> {
    if let Some(n) = &outcome.navigation {
        dump_navigation(&dir.join("navigation"), n)?;
    }
    if let Some(m) = &outcome.manipulation {
        dump_manipulation(&dir.join("manipulation"), m)?;
    }
    Ok(())
}

fn dump_navigation(dir: &Path, n: &NavigationOutcome) -> Result<()> {
    create_dir(dir)?;
    let s = &n.final_state;
    dump_field(dir, "base", &north_up(s.base_layer()))?;
    dump_field(dir, "motion", &north_up(s.motion_layer()))?;
    dump_field(dir, "synergy", &north_up(s.synergy_layer()))?;
    dump_field(dir, "combined", &north_up(&s.combined_belief()))
}

#[derive(Serialize)]
struct VerdictRecord<'a> {
    object: usize,
    instance: &'a str,
    bbox: bool,
    bbox_short_side_m: f64,
    morph: bool,
    advanced: bool,
    contour_points: usize,
    pairs: usize,
    discarded: usize,
}

#[derive(Serialize)]
struct PromptRecord {
    centroid: [f64; 3],
    pixel: [f64; 2],
    size: usize,
}

fn dump_manipulation(dir: &Path, m: &ManipulationOutcome) -> Result<()> {
    create_dir(dir)?;
    let p = &m.perception;
    let names = &m.phase.timeline.targets;
    write_pgm(&dir.join("saliency_mask.pgm"), &mask_to_pgm(&p.saliency_mask))?;
    write_pgm(&dir.join("instance_mask.pgm"), &mask_to_pgm(&p.instance_mask))?;
    write_pgm(&dir.join("feasible_bbox.pgm"), &mask_to_pgm(&p.feasibility.bbox))?;
    write_pgm(&dir.join("feasible_morph.pgm"), &mask_to_pgm(&p.feasibility.morph))?;
    write_pgm(&dir.join("feasible_adv_obj.pgm"), &mask_to_pgm(&p.feasibility.adv_obj))?;
    write_pgm(&dir.join("feasible_adv_rect.pgm"), &mask_to_pgm(&p.feasibility.adv_rect))?;
    for (i, (name, img)) in p.cascade.stages.iter().enumerate() {
        dump_field(dir, &format!("cascade_{i:02}_{name}"), img)?;
    }
    let (w, h) = (p.fused.p.width(), p.fused.p.height());
    dump_field(dir, "proposal_scores", &proposal_scores(p, w, h))?;

    let path = dir.join("proposals.jsonl");
    let file = fs::File::create(&path).map_err(|e| GuiderError::io(&path, e))?;
    let mut bw = BufWriter::new(file);
    write_proposals_jsonl(&mut bw, &p.proposals).map_err(|e| GuiderError::io(&path, e))?;
    std::io::Write::flush(&mut bw).map_err(|e| GuiderError::io(&path, e))?;

    let verdicts: Vec<VerdictRecord> = p
        .verdicts
        .iter()
        .zip(&p.assessed)
        .enumerate()
        .map(|(object, (v, &k))| VerdictRecord {
            object,
            instance: &names[k],
            bbox: v.bbox,
            bbox_short_side_m: v.bbox_short_side_m,
            morph: v.morph,
            advanced: v.advanced,
            contour_points: v.report.points,
            pairs: v.report.pairs,
            discarded: v.report.discarded,
        })
        .collect();
    write_jsonl(&dir.join("verdicts.jsonl"), &verdicts)?;

    let path = dir.join("candidates.jsonl");
    let file = fs::File::create(&path).map_err(|e| GuiderError::io(&path, e))?;
    let mut bw = BufWriter::new(file);
    write_candidates_jsonl(&mut bw, &p.verdicts).map_err(|e| GuiderError::io(&path, e))?;
    std::io::Write::flush(&mut bw).map_err(|e| GuiderError::io(&path, e))?;

    let prompts: Vec<PromptRecord> = p
        .prompts
        .iter()
        .map(|q| PromptRecord {
            centroid: [q.centroid.x, q.centroid.y, q.centroid.z],
            pixel: [q.pixel.0, q.pixel.1],
            size: q.size,
        })
        .collect();
    write_jsonl(&dir.join("prompts.jsonl"), &prompts)?;

    let path = dir.join("eef_trace.csv");
    let file = fs::File::create(&path).map_err(|e| GuiderError::io(&path, e))?;
    let mut bw = BufWriter::new(file);
    write_trace_csv(&mut bw, &m.trace).map_err(|e| GuiderError::io(&path, e))?;
    std::io::Write::flush(&mut bw).map_err(|e| GuiderError::io(&path, e))
}

fn cmd_render(a: &RenderArgs) -> Result<()> {
    let is_pgm = a.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let (field, default_range) = if is_pgm {
        let img = read_pgm(&a.input)?;
        let max = f64::from(img.maxval);
        (img.pixels.map(|&v| f64::from(v)), (0.0, max))
    } else {
        (read_raw_f32(&a.input)?, (0.0, 1.0))
    };
    render_heatmap(&field, &a.out, a.range.unwrap_or(default_range))
}

fn metrics_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("metrics.csv")
    } else {
        p.to_path_buf()
    }
}

pub fn read_metrics(paths: &[PathBuf]) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for p in paths {
        let path = metrics_path(p);
        let mut r = csv::Reader::from_path(&path).map_err(|e| csv_err(&path, e))?;
        for rec in r.deserialize() {
            rows.push(rec.map_err(|e| csv_err(&path, e))?);
        }
    }
    Ok(rows)
}

/// Missing RTCP (never confidently correct) counts as no lead time.
fn rtcp_value(r: &MetricRow) -> f64 {
    r.rtcp.unwrap_or(0.0)
}

type Key = (String, String, u64);

fn key(r: &MetricRow) -> Key {
    (r.session.clone(), r.phase.clone(), r.seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalGroup {
    pub session: String,
    pub phase: String,
    pub rtcp: Aggregate,
    pub stability: Aggregate,
    pub baseline: Option<(Aggregate, Aggregate)>,
    pub tests: Option<(WilcoxonResult, WilcoxonResult)>,
}

/// Group rows by session and phase, plus one pooled group per phase.
pub fn evaluate_groups(
    method: &[MetricRow],
    baseline: Option<&[MetricRow]>,
    alternative: Alternative,
) -> Result<Vec<EvalGroup>> {
    let base: Option<BTreeMap<Key, &MetricRow>> = baseline.map(|b| b.iter().map(|r| (key(r), r)).collect());
    let mut groups: BTreeMap<(String, String), Vec<&MetricRow>> = BTreeMap::new();
    for r in method {
        groups.entry((r.session.clone(), r.phase.clone())).or_default().push(r);
        groups.entry(("pooled".into(), r.phase.clone())).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((session, phase), rows) in groups {
        let rtcp: Vec<f64> = rows.iter().map(|r| rtcp_value(r)).collect();
        let stab: Vec<f64> = rows.iter().map(|r| r.stability).collect();
        let (baseline, tests) = match &base {
            None => (None, None),
            Some(b) => {
                let mut pr = Vec::new();
                let mut ps = Vec::new();
                for r in &rows {
                    let o = b.get(&key(r)).ok_or_else(|| {
                        GuiderError::Input(format!(
                            "baseline has no row for session {} phase {} seed {}",
                            r.session, r.phase, r.seed
                        ))
                    })?;
                    pr.push((rtcp_value(r), rtcp_value(o)));
                    ps.push((r.stability, o.stability));
                }
                let br: Vec<f64> = pr.iter().map(|p| p.1).collect();
                let bs: Vec<f64> = ps.iter().map(|p| p.1).collect();
                let tests = if pr.len() <= crate::replay::metrics::WILCOXON_MAX_N {
                    Some((wilcoxon_exact(&pr, alternative)?, wilcoxon_exact(&ps, alternative)?))
                } else {
                    log::warn!("{session}/{phase}: {} pairs exceed the exact test limit; skipping", pr.len());
                    None
                };
                (Some((aggregate(&br)?, aggregate(&bs)?)), tests)
            }
        };
        out.push(EvalGroup {
            session,
            phase,
            rtcp: aggregate(&rtcp)?,
            stability: aggregate(&stab)?,
            baseline,
            tests,
        });
    }
    Ok(out)
}

fn fmt_agg(a: &Aggregate) -> String {
    format!("{:.1}±{:.1}", a.median, a.mad)
}

fn fmt_test(t: &WilcoxonResult) -> String {
    let p = |v: f64| {
        let s = format!("{v:.3}");
        s.strip_prefix('0').map(str::to_string).unwrap_or(s)
    };
    format!("{}/{}/{:+.2}", p(t.p_two), p(t.p_one), t.r_bs)
}

/// Table with median±MAD per group and, with a baseline, `p2/p1/r_bs`.
pub fn eval_table(groups: &[EvalGroup]) -> String {
    let mut s = String::new();
    let with_base = groups.iter().any(|g| g.baseline.is_some());
    if with_base {
        let _ = writeln!(
            s,
            "{:<20} {:<13} {:>3} {:>12} {:>12} {:>16} {:>12} {:>12} {:>16}",
            "session", "phase", "n", "rtcp_s", "base_rtcp_s", "p2/p1/r_bs", "stab_%", "base_stab_%", "p2/p1/r_bs"
        );
    } else {
        let _ = writeln!(s, "{:<20} {:<13} {:>3} {:>12} {:>12}", "session", "phase", "n", "rtcp_s", "stab_%");
    }
    for g in groups {
        match (&g.baseline, &g.tests) {
            (Some((br, bs)), tests) => {
                let (tr, ts) = tests
                    .as_ref()
                    .map_or(("-".to_string(), "-".to_string()), |(a, b)| (fmt_test(a), fmt_test(b)));
                let _ = writeln!(
                    s,
                    "{:<20} {:<13} {:>3} {:>12} {:>12} {:>16} {:>12} {:>12} {:>16}",
                    g.session,
                    g.phase,
                    g.rtcp.n,
                    fmt_agg(&g.rtcp),
                    fmt_agg(br),
                    tr,
                    fmt_agg(&g.stability),
                    fmt_agg(bs),
                    ts
                );
            }
            _ => {
                let _ = writeln!(
                    s,
                    "{:<20} {:<13} {:>3} {:>12} {:>12}",
                    g.session,
                    g.phase,
                    g.rtcp.n,
                    fmt_agg(&g.rtcp),
                    fmt_agg(&g.stability)
                );
            }
        }
    }
    s
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let method = read_metrics(&a.metrics)?;
    if method.is_empty() {
        return Err(GuiderError::Input("no metric rows to evaluate".into()));
    }
    let baseline = if a.against.is_empty() {
        None
    } else {
        Some(read_metrics(&a.against)?)
    };
    let alt = match a.alternative {
        AlternativeArg::Greater => Alternative::Greater,
        AlternativeArg::Less => Alternative::Less,
    };
    let groups = evaluate_groups(&method, baseline.as_deref(), alt)?;
    let table = eval_table(&groups);
    if let Some(out) = &a.out {
        write_text(out, &table)?;
    }
    print!("{table}");
    Ok(())
}
