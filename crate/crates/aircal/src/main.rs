//! Command-line frontend wiring the pipeline: proxy selection, drift
//! detection, correction, wind-binned diagnostics, simulation, reporting.
//!
//! Every command is deterministic given its inputs, config, and seed.
//! Exit code 0 on success; on failure a single `error: ...` line goes to
//! stderr and the exit code is nonzero.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use aircal::config::FrameworkConfig;
use aircal::correct::apply_correction;
use aircal::drift::{alarm_summary, run_framework, FrameworkState};
use aircal::io;
use aircal::met::{bin_alarms_by_wind, PolarBinConfig};
use aircal::model::{NegativePolicy, NetworkDataset, ProxyAssignment, SiteRecord};
use aircal::proxy::{
    compare_assignments, select_knn_with, select_min_kl, select_nearest_geo, ScalingMode,
};
use aircal::sim;

#[derive(Parser)]
#[command(
    name = "aircal",
    version,
    about = "Proxy-based remote calibration and drift detection for air-quality networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assign a proxy to every site by land-use kNN, geographic
    /// proximity, or D_KL ranking
    SelectProxy(SelectProxyArgs),
    /// Run the rolling three-test drift framework for every site/proxy
    /// pair and write the test trails
    Detect(DetectArgs),
    /// Run the framework and apply moment-matching correction wherever
    /// it activates
    Correct(DetectArgs),
    /// Aggregate framework alarms into wind (direction, speed) bins
    WindBins(WindBinsArgs),
    /// Generate a synthetic network dataset with known ground truth
    Simulate(SimulateArgs),
    /// Print per-site alarm summaries without writing any files
    Report(ReportArgs),
}

#[derive(Args)]
struct SelectProxyArgs {
    /// Site metadata CSV
    #[arg(long)]
    sites: PathBuf,
    /// Hourly observations CSV (required for min_kl)
    #[arg(long)]
    obs: Option<PathBuf>,
    /// Selection method: knn, nearest, min_kl, or all
    #[arg(long, default_value = "knn")]
    method: String,
    /// Output CSV: assignments, or the three-column comparison for
    /// --method all
    #[arg(long)]
    out: PathBuf,
    /// Feature scaling for knn: mean_ratio or minmax
    #[arg(long, default_value = "mean_ratio")]
    scaling: String,
    /// Histogram bin width for min_kl, ppb
    #[arg(long, default_value_t = 1.0)]
    bin_width: f64,
    /// Histogram origin for min_kl, ppb
    #[arg(long, default_value_t = 0.0)]
    hist_origin: f64,
    /// Clamp negative concentrations to 0 instead of rejecting them
    #[arg(long)]
    clamp_negative: bool,
}

#[derive(Args)]
struct DetectArgs {
    /// Site metadata CSV
    #[arg(long)]
    sites: PathBuf,
    /// Hourly observations CSV
    #[arg(long)]
    obs: PathBuf,
    /// Proxy assignments CSV (from select-proxy)
    #[arg(long)]
    assignments: PathBuf,
    /// Framework config file (key = value); defaults apply when absent
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for output CSVs (created if missing)
    #[arg(long)]
    out_dir: PathBuf,
    /// Override the config's evaluation stride, hours
    #[arg(long)]
    stride: Option<usize>,
    /// Clamp negative concentrations to 0 instead of rejecting them
    #[arg(long)]
    clamp_negative: bool,
}

#[derive(Args)]
struct WindBinsArgs {
    #[command(flatten)]
    detect: DetectArgs,
    /// Wind direction sector width, degrees
    #[arg(long, default_value_t = 22.5)]
    dir_bin: f64,
    /// Wind speed bin width, m/s
    #[arg(long, default_value_t = 1.0)]
    speed_bin: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file (key = value); omitted = the built-in 9-site
    /// scenario
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// RNG seed (overrides the scenario file's seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Epoch length in hours (overrides the scenario file)
    #[arg(long)]
    hours: Option<usize>,
    /// Directory for output CSVs (created if missing)
    #[arg(long)]
    out_dir: PathBuf,
    /// Also run detection against D_KL-selected proxies and print a
    /// detection score per site
    #[arg(long)]
    score: bool,
    /// Framework config used with --score
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Site metadata CSV
    #[arg(long)]
    sites: PathBuf,
    /// Hourly observations CSV
    #[arg(long)]
    obs: PathBuf,
    /// Proxy assignments CSV
    #[arg(long)]
    assignments: PathBuf,
    /// Framework config file (key = value)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Clamp negative concentrations to 0 instead of rejecting them
    #[arg(long)]
    clamp_negative: bool,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SelectProxy(args) => cmd_select_proxy(args),
        Command::Detect(args) => cmd_detect(args, false),
        Command::Correct(args) => cmd_detect(args, true),
        Command::WindBins(args) => cmd_wind_bins(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Report(args) => cmd_report(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn policy(clamp: bool) -> NegativePolicy {
    if clamp {
        NegativePolicy::ClampZero
    } else {
        NegativePolicy::Reject
    }
}

fn load_dataset(sites: &Path, obs: &Path, clamp: bool) -> Result<NetworkDataset> {
    let site_records = io::read_sites(sites)?;
    let (series, report) = io::read_observations(obs)?;
    let dataset = NetworkDataset::from_parts(site_records, series, policy(clamp))
        .map_err(|violations| {
            let shown: Vec<String> = violations.iter().take(10).map(|v| v.to_string()).collect();
            anyhow::anyhow!(
                "{} validation violations, first {}: {}",
                violations.len(),
                shown.len(),
                shown.join("; ")
            )
        })?;
    eprintln!(
        "ingested {} rows, {} sites, epoch {}..{} ({} gap-hours filled as missing)",
        report.rows,
        report.sites,
        io::hour_to_iso(report.start_hour),
        io::hour_to_iso(report.end_hour),
        report.gap_hours
    );
    Ok(dataset)
}

fn load_config(path: &Option<PathBuf>, stride: Option<usize>) -> Result<FrameworkConfig> {
    let mut cfg = match path {
        Some(p) => FrameworkConfig::from_file(p)?,
        None => FrameworkConfig::default(),
    };
    if let Some(s) = stride {
        cfg.stride = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_select_proxy(args: SelectProxyArgs) -> Result<()> {
    let site_records = io::read_sites(&args.sites)?;
    let site_refs: Vec<&SiteRecord> = site_records.iter().collect();
    let scaling = ScalingMode::parse(&args.scaling)
        .with_context(|| format!("unknown scaling mode '{}'", args.scaling))?;

    let min_kl_table = |required: bool| -> Result<Option<Vec<ProxyAssignment>>> {
        let Some(obs) = &args.obs else {
            if required {
                bail!("--method min_kl requires --obs");
            }
            return Ok(None);
        };
        let (series, _) = io::read_observations(obs)?;
        let dataset = NetworkDataset::from_parts(
            site_records.clone(),
            series,
            policy(args.clamp_negative),
        )
        .map_err(|v| anyhow::anyhow!("invalid dataset: {} violations", v.len()))?;
        let (assignments, errors) = select_min_kl(&dataset, args.bin_width, args.hist_origin)?;
        for e in &errors {
            eprintln!("warning: {e}");
        }
        Ok(Some(assignments))
    };

    match args.method.as_str() {
        "knn" => {
            let assignments = select_knn_with(&site_refs, scaling)?;
            io::write_assignments(&args.out, &assignments)?;
            print_assignments(&assignments);
        }
        "nearest" => {
            let assignments = select_nearest_geo(&site_refs)?;
            io::write_assignments(&args.out, &assignments)?;
            print_assignments(&assignments);
        }
        "min_kl" => {
            let assignments = min_kl_table(true)?.expect("required");
            io::write_assignments(&args.out, &assignments)?;
            print_assignments(&assignments);
        }
        "all" => {
            let nearest = select_nearest_geo(&site_refs)?;
            let knn = select_knn_with(&site_refs, scaling)?;
            let min_kl = min_kl_table(false)?;
            write_comparison(&args.out, &nearest, &knn, min_kl.as_deref())?;
            if let Some(min_kl) = &min_kl {
                let report = compare_assignments(&knn, min_kl)?;
                println!(
                    "knn vs min_kl agreement: {}/{}",
                    report.n_match, report.n_sites
                );
            }
        }
        other => bail!("unknown method '{other}' (knn, nearest, min_kl, all)"),
    }
    Ok(())
}

fn print_assignments(assignments: &[ProxyAssignment]) {
    for a in assignments {
        println!(
            "site={} proxy={} method={} score={}",
            a.site_id, a.proxy_id, a.method, a.score
        );
    }
}

/// Three-column comparison table, one row per site.
fn write_comparison(
    path: &Path,
    nearest: &[ProxyAssignment],
    knn: &[ProxyAssignment],
    min_kl: Option<&[ProxyAssignment]>,
) -> Result<()> {
    let by_site = |table: &[ProxyAssignment]| -> BTreeMap<String, String> {
        table
            .iter()
            .map(|a| (a.site_id.clone(), a.proxy_id.clone()))
            .collect()
    };
    let nearest = by_site(nearest);
    let knn = by_site(knn);
    let min_kl = min_kl.map(by_site);
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["site_id", "nearest_geo", "knn_landuse", "min_kl"])?;
    for (site, near) in &nearest {
        let kl = min_kl
            .as_ref()
            .and_then(|m| m.get(site).cloned())
            .unwrap_or_else(|| "NA".into());
        w.write_record([site, near, &knn[site], &kl])?;
    }
    w.flush()?;
    Ok(())
}

/// Resolve assignments into framework states, site-ordered.
fn run_pairs(
    dataset: &NetworkDataset,
    assignments: &[ProxyAssignment],
    cfg: &FrameworkConfig,
) -> Result<Vec<FrameworkState>> {
    let mut sorted = assignments.to_vec();
    sorted.sort_by(|a, b| a.site_id.cmp(&b.site_id));
    sorted
        .iter()
        .map(|a| {
            let site = dataset
                .series(&a.site_id)
                .with_context(|| format!("no observations for site {}", a.site_id))?;
            let proxy = dataset
                .series(&a.proxy_id)
                .with_context(|| format!("unknown proxy id {} for site {}", a.proxy_id, a.site_id))?;
            run_framework(site, proxy, cfg)
                .with_context(|| format!("site {} vs proxy {}", a.site_id, a.proxy_id))
        })
        .collect()
}

fn print_summary(state: &FrameworkState) {
    let s = alarm_summary(state);
    println!(
        "site={} proxy={} evaluable={} alarm_frac_ks={:.4} alarm_frac_slope={:.4} \
         alarm_frac_intercept={:.4} failures_ks={} failures_slope={} failures_intercept={} \
         correction_active_hours={}",
        state.site_id,
        state.proxy_id,
        s.evaluable_hours,
        s.alarm_fraction.ks,
        s.alarm_fraction.slope,
        s.alarm_fraction.intercept,
        s.failure_span_count.ks,
        s.failure_span_count.slope,
        s.failure_span_count.intercept,
        s.correction_active_hours
    );
}

fn cmd_detect(args: DetectArgs, and_correct: bool) -> Result<()> {
    let dataset = load_dataset(&args.sites, &args.obs, args.clamp_negative)?;
    let assignments = io::read_assignments(&args.assignments)?;
    let cfg = load_config(&args.config, args.stride)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;

    for state in run_pairs(&dataset, &assignments, &cfg)? {
        io::write_trail(&args.out_dir.join(format!("trail_{}.csv", state.site_id)), &state)?;
        if and_correct {
            let site = dataset.series(&state.site_id).expect("resolved above");
            let proxy = dataset.series(&state.proxy_id).expect("resolved above");
            let result = apply_correction(site, &state, proxy, &cfg)?;
            io::write_corrected(
                &args.out_dir.join(format!("corrected_{}.csv", state.site_id)),
                site,
                &result,
            )?;
            println!(
                "site={} corrected_spans={} clamped_hours={}",
                state.site_id,
                result.active_spans.len(),
                result.clamped_hours.len()
            );
        }
        print_summary(&state);
    }
    Ok(())
}

fn cmd_wind_bins(args: WindBinsArgs) -> Result<()> {
    let d = &args.detect;
    let dataset = load_dataset(&d.sites, &d.obs, d.clamp_negative)?;
    let assignments = io::read_assignments(&d.assignments)?;
    let cfg = load_config(&d.config, d.stride)?;
    let bin_cfg = PolarBinConfig {
        dir_bin_deg: args.dir_bin,
        speed_bin_ms: args.speed_bin,
    };
    std::fs::create_dir_all(&d.out_dir)
        .with_context(|| format!("cannot create {}", d.out_dir.display()))?;

    for state in run_pairs(&dataset, &assignments, &cfg)? {
        let series = dataset.series(&state.site_id).expect("resolved above");
        let grid = bin_alarms_by_wind(&state, series, bin_cfg)?;
        io::write_polar_grid(&d.out_dir.join(format!("wind_{}.csv", state.site_id)), &grid)?;
        println!(
            "site={} cells={} binned_hours={} missing_wind_hours={}",
            state.site_id,
            grid.cells.len(),
            grid.total_hours(),
            grid.missing_wind_hours
        );
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut spec = match &args.scenario {
        Some(path) => sim::scenario_from_file(path)?,
        None => sim::ScenarioSpec::default_network(1, 4000),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(hours) = args.hours {
        spec.hours = hours;
    }
    let (dataset, truth) = sim::generate(&spec)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;

    io::write_sites(
        &args.out_dir.join("sites.csv"),
        &dataset.sites().cloned().collect::<Vec<_>>(),
    )?;
    io::write_observations(
        &args.out_dir.join("observations.csv"),
        &dataset.all_series().collect::<Vec<_>>(),
    )?;
    write_truth(&args.out_dir.join("truth.csv"), &truth)?;
    write_schedule(&args.out_dir.join("schedule.csv"), &truth)?;
    println!(
        "simulated {} sites x {} hours (seed {})",
        dataset.n_sites(),
        spec.hours,
        spec.seed
    );

    if args.score {
        let cfg = load_config(&args.config, None)?;
        let (assignments, errors) = select_min_kl(&dataset, cfg.bin_width_ppb, cfg.hist_origin_ppb)?;
        for e in &errors {
            eprintln!("warning: {e}");
        }
        for state in run_pairs(&dataset, &assignments, &cfg)? {
            let score = sim::score_detection(&state, &truth);
            println!(
                "score site={} proxy={} false_alarm_rate={:.4} clean_hours={} events={} missed={}{}",
                state.site_id,
                state.proxy_id,
                score.false_alarm_rate,
                score.clean_hours,
                score.events.len(),
                score.missed_events,
                score
                    .events
                    .iter()
                    .filter_map(|e| e.latency_hours)
                    .map(|l| format!(" latency_hours={l}"))
                    .collect::<String>()
            );
        }
    }
    Ok(())
}

fn write_truth(path: &Path, truth: &sim::GroundTruth) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["timestamp_utc", "site_id", "true_ppb"])?;
    for (site_id, values) in &truth.true_series {
        for (i, v) in values.iter().enumerate() {
            w.write_record([
                io::hour_to_iso(truth.start_hour + i as i64).as_str(),
                site_id,
                &format!("{v}"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_schedule(path: &Path, truth: &sim::GroundTruth) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["site_id", "onset_utc", "kind", "magnitude", "ramp_hours"])?;
    for e in &truth.schedule {
        let kind = match e.kind {
            sim::DriftKind::GainRamp => "gain_ramp",
            sim::DriftKind::OffsetStep => "offset_step",
        };
        w.write_record([
            e.site_id.as_str(),
            &io::hour_to_iso(truth.start_hour + e.onset_hour as i64),
            kind,
            &format!("{}", e.magnitude),
            &e.ramp_hours.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let dataset = load_dataset(&args.sites, &args.obs, args.clamp_negative)?;
    let assignments = io::read_assignments(&args.assignments)?;
    let cfg = load_config(&args.config, None)?;
    for state in run_pairs(&dataset, &assignments, &cfg)? {
        print_summary(&state);
        for kind in aircal::drift::ALL_TESTS {
            for (start, end) in state.failure_spans.get(kind) {
                println!(
                    "  failure site={} test={:?} from={} to={}",
                    state.site_id,
                    kind,
                    io::hour_to_iso(*start),
                    io::hour_to_iso(*end)
                );
            }
        }
    }
    Ok(())
}
