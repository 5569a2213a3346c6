//! `forelimb`: joint loads, powers and energies from marker and force-plate
//! recordings, synthetic test data, and the built-in oracle suite.

mod manifest;
mod output;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use forelimb_core::io::{
    energy_table_csv, parse_grf, parse_markers, read_bundle, write_bundle, write_reports,
    TrialBundle, TrialMetadata,
};
use forelimb_core::model::{default_forelimb, Coordinate};
use forelimb_core::oracle::{
    run_verification, simulate_forward, synth_trot, Simulation, SyntheticScenario, TrotParameters,
    VerifyOptions,
};
use forelimb_core::pipeline::{analyze_trial, group_report, EnergyRow, TrialAnalysis};
use forelimb_core::{
    build_chain, AnatomicalConvention, ChainConfig, ErrorKind, JointKind, LimbChain,
};

use manifest::{resolve, RunManifest, TrialInput, MANIFEST_FILE};
use output::{commit_dir, write_file};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Verification(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Numerical(_) => "numerical",
            CliError::Verification(_) => "verification",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) | CliError::Verification(m) => m,
        }
    }
}

impl From<forelimb_core::Error> for CliError {
    fn from(e: forelimb_core::Error) -> Self {
        match e.kind() {
            ErrorKind::Input => CliError::Input(e.to_string()),
            ErrorKind::Numerical => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "forelimb",
    version,
    about = "Inverse dynamics and joint energetics for limb chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analyse trials and write curve, extrema and energy tables plus plots.
    Analyze(AnalyzeArgs),
    /// Simulate a scenario or a trot-like stride and write a trial bundle.
    Synth(SynthArgs),
    /// Run the built-in oracle suite.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Run manifest (TOML); flags below override its fields.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Trial bundle directory; repeatable.
    #[arg(long)]
    bundle: Vec<PathBuf>,
    /// Marker CSV of a single trial given as separate files.
    #[arg(long, requires = "grf")]
    markers: Option<PathBuf>,
    /// Force-plate CSV matching --markers.
    #[arg(long, requires = "markers")]
    grf: Option<PathBuf>,
    /// Static capture CSV matching --markers.
    #[arg(long, requires = "markers")]
    calibration: Option<PathBuf>,
    /// Chain configuration (TOML); defaults to the shipped forelimb.
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Marker low-pass cutoff in Hz (0 disables) [default: 10].
    #[arg(long)]
    cutoff_kin: Option<f64>,
    /// Force-plate low-pass cutoff in Hz (0 disables) [default: 50].
    #[arg(long)]
    cutoff_grf: Option<f64>,
    /// Vertical force in N marking ground contact [default: 2 % of body weight].
    #[arg(long)]
    contact_threshold: Option<f64>,
    /// Points on the time-normalized grid [default: 101].
    #[arg(long)]
    grid_points: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recorded in the manifest; the analysis itself uses no randomness.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["scenario", "trot"])))]
struct SynthArgs {
    /// Scenario document (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Simulate one trot-like stride on the shipped forelimb.
    #[arg(long)]
    trot: bool,
    /// Trot parameters (TOML) replacing the defaults.
    #[arg(long, requires = "trot")]
    params: Option<PathBuf>,
    /// Marker noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Only run checks whose name contains this text.
    #[arg(long)]
    filter: Option<String>,
    /// Test mode: flip one sign of the convention, e.g. `carpus:beta`.
    #[arg(long, value_name = "JOINT:COORD")]
    flip_sign: Option<String>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn parse_coordinate(s: &str) -> Result<Coordinate, CliError> {
    Ok(match s {
        "x" => Coordinate::X,
        "y" => Coordinate::Y,
        "z" => Coordinate::Z,
        "alpha" => Coordinate::Alpha,
        "beta" => Coordinate::Beta,
        "gamma" => Coordinate::Gamma,
        _ => return Err(CliError::Input(format!("unknown coordinate '{s}'"))),
    })
}

/// Merges a manifest file (if any) with command-line overrides. Returns the
/// manifest and the directory its relative paths resolve against.
fn build_manifest(args: &AnalyzeArgs) -> Result<(RunManifest, PathBuf), CliError> {
    let (mut m, base) = match &args.manifest {
        Some(path) => {
            let mut m = RunManifest::from_toml_str(&read_text(path)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
            m.chain = m.chain.map(|c| resolve(&base, &c));
            m.out = m.out.map(|o| resolve(&base, &o));
            (m, base)
        }
        None => (RunManifest::default(), PathBuf::new()),
    };
    let cli_trials: Vec<TrialInput> = args
        .bundle
        .iter()
        .map(|b| TrialInput {
            bundle: Some(b.clone()),
            ..TrialInput::default()
        })
        .chain(args.markers.iter().map(|mk| TrialInput {
            markers: Some(mk.clone()),
            grf: args.grf.clone(),
            calibration: args.calibration.clone(),
            ..TrialInput::default()
        }))
        .collect();
    if !cli_trials.is_empty() {
        if args.manifest.is_some() {
            return Err(CliError::Input(
                "give trials in the manifest or on the command line, not both".into(),
            ));
        }
        m.trials = cli_trials;
    }
    if args.chain.is_some() {
        m.chain = args.chain.clone();
    }
    if let Some(v) = args.cutoff_kin {
        m.cutoff_kin = v;
    }
    if let Some(v) = args.cutoff_grf {
        m.cutoff_grf = v;
    }
    if args.contact_threshold.is_some() {
        m.contact_threshold = args.contact_threshold;
    }
    if let Some(v) = args.grid_points {
        m.grid_points = v;
    }
    if args.out.is_some() {
        m.out = args.out.clone();
    }
    if let Some(v) = args.seed {
        m.seed = v;
    }
    m.check().map_err(CliError::Input)?;
    if m.out.is_none() {
        return Err(CliError::Input(
            "no output directory; pass --out or set 'out'".into(),
        ));
    }
    Ok((m, base))
}

fn load_chain(path: Option<&Path>) -> Result<LimbChain, CliError> {
    match path {
        Some(p) => Ok(build_chain(&ChainConfig::load(p)?)?),
        None => Ok(default_forelimb()),
    }
}

fn load_trial(
    input: &TrialInput,
    index: usize,
    base: &Path,
    chain: &LimbChain,
    threshold: f64,
) -> Result<TrialBundle, CliError> {
    let mut bundle = match &input.bundle {
        Some(dir) => read_bundle(&resolve(base, dir), chain, threshold)?,
        None => {
            let markers_path = resolve(base, input.markers.as_deref().expect("checked"));
            let grf_path = resolve(base, input.grf.as_deref().expect("checked"));
            let markers = parse_markers(&markers_path, Some(chain))?;
            let grf = parse_grf(&grf_path, threshold)?;
            let calibration = input
                .calibration
                .as_ref()
                .map(|c| parse_markers(&resolve(base, c), Some(chain)))
                .transpose()?;
            TrialBundle {
                id: format!("trial{}", index + 1),
                markers,
                grf,
                calibration,
                chain: "configured".into(),
                metadata: TrialMetadata::default(),
            }
        }
    };
    if let Some(id) = &input.id {
        bundle.id = id.clone();
    }
    Ok(bundle)
}

fn safe_id(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let (manifest, base) = build_manifest(args)?;
    let chain = load_chain(manifest.chain.as_deref())?;
    let settings = manifest.settings();
    let threshold = settings.threshold(&chain);
    let bundles = manifest
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| load_trial(t, i, &base, &chain, threshold))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ids = BTreeSet::new();
    for b in &bundles {
        if !safe_id(&b.id) {
            return Err(CliError::Input(format!(
                "trial id '{}' is not a valid directory name",
                b.id
            )));
        }
        if !ids.insert(b.id.clone()) {
            return Err(CliError::Input(format!("duplicate trial id '{}'", b.id)));
        }
    }

    info!(
        "loaded {} trial(s); contact threshold {threshold:.2} N",
        bundles.len()
    );
    let results: Vec<forelimb_core::Result<TrialAnalysis>> = std::thread::scope(|s| {
        let handles: Vec<_> = bundles
            .iter()
            .map(|b| s.spawn(|| analyze_trial(&chain, b, &settings)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("analysis thread panicked"))
            .collect()
    });
    let trials = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    for t in &trials {
        info!(
            "{}: stance {:.3}-{:.3} s",
            t.id, t.phases.stance_start, t.phases.stance_end
        );
    }
    let report = group_report(&trials)?;

    let out = manifest.out.clone().expect("checked");
    let mut written = 0;
    commit_dir(&out, |dir| {
        written = write_reports(&report, dir)?.len();
        for t in &trials {
            let rows = EnergyRow::from_summaries(std::slice::from_ref(&t.energy))?;
            write_file(
                &dir.join("trials").join(&t.id).join("energy.csv"),
                &energy_table_csv(&rows),
            )?;
            written += 1;
        }
        let recorded = RunManifest {
            out: None,
            ..manifest.clone()
        };
        write_file(&dir.join(MANIFEST_FILE), &recorded.to_toml_string())?;
        Ok(())
    })?;
    let mut msg = format!("analyzed {} trial(s)", trials.len());
    for t in &trials {
        let _ = write!(
            msg,
            "; {}: stance {:.1}% of stride",
            t.id,
            100.0 * t.phases.stance_fraction()
        );
    }
    let _ = write!(msg, "\nwrote {} files to {}", written + 1, out.display());
    Ok(msg)
}

fn truth_csv(sim: &Simulation) -> String {
    let t = &sim.truth;
    let mut out = String::from("time_s");
    for j in &t.joints {
        let k = j.kind;
        let _ = write!(
            out,
            ",{k}_angle_rad,{k}_moment_y_Nm,{k}_force_x_N,{k}_force_y_N,{k}_force_z_N,{k}_power_W"
        );
    }
    out.push_str(",kinetic_J,potential_J,ground_power_W,reference_power_W\n");
    for (k, time) in t.times.iter().enumerate() {
        let _ = write!(out, "{time}");
        for (i, j) in t.joints.iter().enumerate() {
            let f = j.force_lab[k];
            let p = j.rotational_power[k].sum() + j.translational_power[k].sum();
            let _ = write!(
                out,
                ",{},{},{},{},{},{}",
                t.angles[i][k], j.moment_lab[k].y, f.x, f.y, f.z, p
            );
        }
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            t.kinetic[k], t.potential[k], t.ground_power[k], t.reference_power[k]
        );
    }
    out
}

fn cmd_synth(args: &SynthArgs) -> Result<String, CliError> {
    let (sim, echo, chain) = if let Some(path) = &args.scenario {
        let mut scenario = SyntheticScenario::load(path)?;
        if let Some(seed) = args.seed {
            scenario.noise.seed = seed;
        }
        let sim = simulate_forward(&scenario)?;
        let chain = scenario.chain.as_ref().map(ChainConfig::to_toml_string);
        (sim, scenario.to_toml_string(), chain)
    } else {
        let mut params = match &args.params {
            Some(p) => toml::from_str::<TrotParameters>(&read_text(p)?)
                .map_err(|e| CliError::Input(format!("{}: {}", p.display(), e.message())))?,
            None => TrotParameters::default(),
        };
        if let Some(seed) = args.seed {
            params.seed = seed;
        }
        let text = toml::to_string(&params).expect("parameters serialize");
        (synth_trot(&params)?, text, None)
    };
    info!(
        "simulated {:.3} s of '{}'",
        sim.truth.times.last().copied().unwrap_or(0.0),
        sim.bundle.id
    );
    commit_dir(&args.out, |dir| {
        write_bundle(dir, &sim.bundle)?;
        write_file(&dir.join("scenario.toml"), &echo)?;
        if let Some(c) = &chain {
            write_file(&dir.join("chain.toml"), c)?;
        }
        write_file(&dir.join("truth.csv"), &truth_csv(&sim))
    })?;
    Ok(format!(
        "simulated '{}': {} marker frames, {} force samples; wrote {}",
        sim.bundle.id,
        sim.bundle.markers.times().len(),
        sim.bundle.grf.len(),
        args.out.display()
    ))
}

fn cmd_verify(args: &VerifyArgs) -> Result<String, CliError> {
    let mut convention = AnatomicalConvention::full_limb();
    if let Some(spec) = &args.flip_sign {
        let (joint, coord) = spec
            .split_once(':')
            .ok_or_else(|| CliError::Input(format!("expected JOINT:COORD, got '{spec}'")))?;
        let joint: JointKind = joint.parse()?;
        convention = convention.with_flipped_sign(joint, parse_coordinate(coord)?);
    }
    let results = run_verification(&VerifyOptions {
        filter: args.filter.clone(),
        convention,
    });
    if results.is_empty() {
        warn!(
            "no check matches filter {:?}; nothing to run",
            args.filter.as_deref().unwrap_or("")
        );
        return Ok("0 checks run".into());
    }
    let mut lines = String::new();
    for r in &results {
        let _ = writeln!(
            lines,
            "{} {} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    if failed.is_empty() {
        let _ = write!(lines, "{} checks passed", results.len());
        Ok(lines)
    } else {
        print!("{lines}");
        Err(CliError::Verification(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.message(), "exit_code": e.code() }
            });
            eprintln!("{report}");
            ExitCode::from(e.code())
        }
    }
}
