mod fail;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use serde_json::json;

use dea_pkm::calibration::{
    calibrate, calibrate_forearm, CalibrationOptions, CalibrationProblem, CalibrationResult, FreeParam, ParamSpec,
};
use dea_pkm::config::{EngineConfig, CONFIG_ENV};
use dea_pkm::csvio;
use dea_pkm::dynamics::{simulate_uniaxial_sample, SampleDims};
use dea_pkm::metrics::{error_report, force_rmse, Normalizers};
use dea_pkm::protocol::CircleProtocol;
use dea_pkm::{inverse_dynamics, inverse_kinematics, predict_force, Model, STANDARD_GRAVITY};

use fail::Failure;

#[derive(Parser)]
#[command(name = "dea-pkm", version, about = "Inverse dynamics and calibration for a DEA-driven Delta robot")]
struct Cli {
    /// Engine configuration (TOML). Built-in defaults when absent.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inverse kinematics of one pose, printed as JSON.
    Ik {
        /// End-effector position x y z, m.
        #[arg(long, num_args = 3, allow_negative_numbers = true, value_names = ["X", "Y", "Z"])]
        position: Vec<f64>,
    },
    /// Trajectory CSV to drive-voltage CSV.
    Inverse {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Trajectory and voltage CSVs to force CSV.
    PredictForce {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        voltage: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Circular test path.
    GenTraj(GenTraj),
    /// Film strip under a dead weight driven by a biased sine.
    SimulateSample(SimulateSample),
    /// Fit film constants to a recorded voltage.
    CalibrateFilm {
        #[command(flatten)]
        fit: FitArgs,
        /// Parameters to fit, `name` or `name=lower:upper` (mu1..mu7, tau1..tau6, J, eps).
        #[arg(long, value_delimiter = ',', default_value = "mu1,mu2,mu3,mu4,mu5,mu6,mu7")]
        free: Vec<String>,
    },
    /// Fit the forearm spring-back torque curve to a recorded voltage.
    CalibrateForearm {
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long, default_value_t = 7)]
        anchors: usize,
        /// Anchor torques are searched within this distance of the start, N·m.
        #[arg(long, default_value_t = 1e-3)]
        bound_nm: f64,
    },
    /// Compare two trajectory CSVs (or two force CSVs).
    Report {
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Pattern diameter for x/y relative errors, mm. Default: reference extent.
        #[arg(long)]
        diameter_mm: Option<f64>,
        /// Vertical stroke for z relative errors, mm. Default: reference extent.
        #[arg(long)]
        stroke_mm: Option<f64>,
    },
}

#[derive(Args)]
struct GenTraj {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 4.8)]
    radius_mm: f64,
    /// Circle frequency, Hz; fractions such as `1/3` are accepted.
    #[arg(long, default_value = "1/3", value_parser = parse_ratio)]
    frequency: f64,
    #[arg(long, default_value_t = 5)]
    cycles: u32,
    #[arg(long, num_args = 2, allow_negative_numbers = true, default_values_t = [0.0, 0.0])]
    center_mm: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    depth_mm: f64,
    #[arg(long, default_value_t = 1.0)]
    dwell: f64,
    #[arg(long, default_value_t = 2.0)]
    ramp: f64,
    #[arg(long, default_value_t = 100.0)]
    sample_rate: f64,
    /// Hanging payload mass, g.
    #[arg(long, default_value_t = 0.0)]
    payload_g: f64,
}

#[derive(Args)]
struct SimulateSample {
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = 2.5)]
    amplitude_kv: f64,
    #[arg(long, default_value_t = 2.5)]
    bias_kv: f64,
    #[arg(long, default_value = "1/3", value_parser = parse_ratio)]
    frequency: f64,
    #[arg(long, default_value_t = 24.0)]
    duration: f64,
    #[arg(long, default_value_t = 100.0)]
    sample_rate: f64,
    /// Hung mass, g.
    #[arg(long, default_value_t = 0.0)]
    mass_g: f64,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    voltage: PathBuf,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    max_iters: u64,
    /// Fail unless the final loss (V) is at or below this.
    #[arg(long)]
    target_loss: Option<f64>,
    /// Channels entering the loss, 1-based.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    channels: Vec<usize>,
    /// Write the fitted configuration here.
    #[arg(long)]
    out_config: Option<PathBuf>,
    /// Write per-sample voltage residuals here.
    #[arg(long)]
    residuals: Option<PathBuf>,
}

fn parse_ratio(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not a finite number"))
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(f) = run(cli) {
        eprintln!("{f}");
        std::process::exit(f.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (cfg, source) = EngineConfig::resolve(cli.config.as_deref())?;
    let source = source.map_or("defaults".to_string(), |p| p.display().to_string());
    eprintln!("config hash={} source={source} units=SI(m,rad,kg,s,V,N)", cfg.hash());
    let model = cfg.to_model()?;
    match cli.cmd {
        Cmd::Ik { position } => ik(&model, Vector3::new(position[0], position[1], position[2])),
        Cmd::Inverse { trajectory, out } => {
            let traj = csvio::read_trajectory(csvio::open(&trajectory)?)?;
            let v = inverse_dynamics(&traj, &model)?;
            csvio::write_voltage(csvio::create(&out)?, &v)?;
            Ok(())
        }
        Cmd::PredictForce { trajectory, voltage, out } => {
            let traj = csvio::read_trajectory(csvio::open(&trajectory)?)?;
            let v = csvio::read_voltage(csvio::open(&voltage)?)?;
            let f = predict_force(&traj, &v, &model)?;
            csvio::write_force(csvio::create(&out)?, &f)?;
            Ok(())
        }
        Cmd::GenTraj(g) => gen_traj(g, &model),
        Cmd::SimulateSample(s) => simulate(s, &model),
        Cmd::CalibrateFilm { fit, free } => {
            let specs = free.iter().map(|s| parse_spec(s, &model)).collect::<Result<Vec<_>, _>>()?;
            if let Some(s) = specs.iter().find(|s| !s.param.is_log()) {
                return Err(Failure::Usage(format!("{} is not a film parameter", s.param)));
            }
            let (traj, volt) = read_pair(&fit)?;
            let mut p = CalibrationProblem::new(traj, volt, model, specs).map_err(usage_if_invalid)?;
            p.options = options(&fit)?;
            let r = calibrate(&p)?;
            finish_fit(&fit, &cfg, &p, r)
        }
        Cmd::CalibrateForearm { fit, anchors, bound_nm } => {
            if anchors < 2 {
                return Err(Failure::Usage("at least two anchors".into()));
            }
            let (traj, volt) = read_pair(&fit)?;
            let mut p = CalibrationProblem::forearm(traj, volt, model, anchors, bound_nm).map_err(usage_if_invalid)?;
            p.options = options(&fit)?;
            let r = calibrate_forearm(&p)?;
            finish_fit(&fit, &cfg, &p, r)
        }
        Cmd::Report { predicted, reference, diameter_mm, stroke_mm } => {
            report(&predicted, &reference, diameter_mm, stroke_mm)
        }
    }
}

fn usage_if_invalid(e: dea_pkm::CalibrationError) -> Failure {
    match e {
        dea_pkm::CalibrationError::InvalidProblem(m) => Failure::Usage(m),
        other => other.into(),
    }
}

fn print_json(v: &serde_json::Value) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| Failure::domain("Io", e))?;
    writeln!(out)?;
    Ok(())
}

fn ik(model: &Model, u: Vector3<f64>) -> Result<(), Failure> {
    let snap = inverse_kinematics(&u, &model.frames, &model.geom, &model.film).map_err(dea_pkm::DynamicsError::from)?;
    let v = |x: &Vector3<f64>| json!([x.x, x.y, x.z]);
    let chains: Vec<_> = snap
        .chains
        .iter()
        .enumerate()
        .map(|(i, c)| {
            json!({
                "chain": i + 1,
                "joint": v(&c.joint),
                "theta_k1": c.theta_k1,
                "theta_sam": c.theta_sam,
                "theta_dea": c.theta_dea,
                "theta_fa": c.theta_fa,
                "lambda": [c.lambda.lambda1, c.lambda.lambda2],
                "projection": v(&c.projection),
                "bicep_tip": v(&c.bicep_tip),
                "forearm": v(&c.forearm),
            })
        })
        .collect();
    print_json(&json!({ "position": v(&u), "chains": chains }))
}

fn gen_traj(g: GenTraj, model: &Model) -> Result<(), Failure> {
    let proto = CircleProtocol {
        radius: g.radius_mm * 1e-3,
        frequency: g.frequency,
        cycles: g.cycles,
        center: [g.center_mm[0] * 1e-3, g.center_mm[1] * 1e-3],
        depth: g.depth_mm * 1e-3,
        dwell: g.dwell,
        ramp: g.ramp,
        sample_rate: g.sample_rate,
        payload: Vector3::new(0.0, 0.0, -g.payload_g * 1e-3 * model.geom.g),
    };
    let path = proto.generate().map_err(|e| Failure::Usage(e.to_string()))?;
    csvio::write_trajectory(csvio::create(&g.out)?, &path.trajectory)?;
    let phases: Vec<_> =
        path.phases.iter().map(|p| json!({"phase": p.kind.name(), "start": p.start, "end": p.end})).collect();
    print_json(&json!({ "samples": path.trajectory.len(), "phases": phases }))
}

fn simulate(s: SimulateSample, model: &Model) -> Result<(), Failure> {
    if !(s.sample_rate > 0.0 && s.duration > 0.0) {
        return Err(Failure::Usage("sample rate and duration must be positive".into()));
    }
    let n = (s.duration * s.sample_rate).round() as usize + 1;
    let t: Vec<f64> = (0..n).map(|i| i as f64 / s.sample_rate).collect();
    let w = 2.0 * std::f64::consts::PI * s.frequency;
    let phi: Vec<f64> = t.iter().map(|&t| 1e3 * (s.bias_kv - s.amplitude_kv * (w * t).cos())).collect();
    if phi.iter().any(|p| *p < 0.0) {
        return Err(Failure::Usage("bias must be at least the amplitude".into()));
    }
    let film = &model.film;
    let r = simulate_uniaxial_sample(
        &t,
        &phi,
        s.mass_g * 1e-3,
        film,
        SampleDims::of(film),
        STANDARD_GRAVITY,
        model.settings.substeps,
    )?;
    let rows = (0..n).map(|i| vec![t[i], phi[i], r.lambda[i].lambda1, r.lambda[i].lambda2, r.displacement[i]]);
    csvio::write_table(csvio::create(&s.out)?, &["t", "phi", "lambda1", "lambda2", "displacement"], rows)?;
    Ok(())
}

fn parse_spec(s: &str, model: &Model) -> Result<ParamSpec, Failure> {
    let (name, bounds) = match s.split_once('=') {
        Some((n, b)) => (n.trim(), Some(b)),
        None => (s.trim(), None),
    };
    let param = FreeParam::parse(name).ok_or_else(|| Failure::Usage(format!("unknown parameter `{name}`")))?;
    match bounds {
        None => Ok(ParamSpec::decade(param, model)),
        Some(b) => {
            let (lo, hi) = b.split_once(':').ok_or_else(|| Failure::Usage(format!("bounds `{b}` need lower:upper")))?;
            let lo = parse_ratio(lo).map_err(Failure::Usage)?;
            let hi = parse_ratio(hi).map_err(Failure::Usage)?;
            Ok(ParamSpec::new(param, lo, hi))
        }
    }
}

fn options(fit: &FitArgs) -> Result<CalibrationOptions, Failure> {
    let mut channels = [false; 3];
    for &c in &fit.channels {
        if !(1..=3).contains(&c) {
            return Err(Failure::Usage(format!("channel {c} does not exist")));
        }
        channels[c - 1] = true;
    }
    Ok(CalibrationOptions {
        restarts: fit.restarts,
        seed: fit.seed,
        max_iters: fit.max_iters,
        target_loss: fit.target_loss,
        channels,
        ..Default::default()
    })
}

fn read_pair(fit: &FitArgs) -> Result<(dea_pkm::Trajectory, dea_pkm::VoltageSignal), Failure> {
    let traj = csvio::read_trajectory(csvio::open(&fit.trajectory)?)?;
    let volt = csvio::read_voltage(csvio::open(&fit.voltage)?)?;
    Ok((traj, volt))
}

fn finish_fit(fit: &FitArgs, cfg: &EngineConfig, p: &CalibrationProblem, r: CalibrationResult) -> Result<(), Failure> {
    for w in &r.warnings {
        eprintln!("warning {w}");
    }
    if let Some(path) = &fit.residuals {
        let rows = p.voltage.t.iter().zip(&r.residuals).map(|(t, e)| vec![*t, e[0], e[1], e[2]]);
        csvio::write_table(csvio::create(path)?, &["t", "r1", "r2", "r3"], rows)?;
    }
    let fitted_cfg = EngineConfig { film: r.model.film, torque: r.model.torque.clone(), ..cfg.clone() };
    if let Some(path) = &fit.out_config {
        std::fs::write(path, fitted_cfg.to_toml_string())?;
    }
    let fitted: serde_json::Map<_, _> = r.fitted.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    print_json(&json!({
        "loss_v": r.loss,
        "initial_loss_v": r.trace.first(),
        "iterations": r.iterations,
        "evaluations": r.evaluations,
        "fitted": fitted,
        "warnings": r.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "config_hash": fitted_cfg.hash(),
    }))
}

fn header_of(path: &Path) -> Result<String, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::domain("Io", format!("{}: {e}", path.display())))?;
    Ok(text.lines().next().unwrap_or("").trim().to_string())
}

fn report(predicted: &Path, reference: &Path, diameter_mm: Option<f64>, stroke_mm: Option<f64>) -> Result<(), Failure> {
    let ph = header_of(predicted)?;
    if ph != header_of(reference)? {
        return Err(Failure::Usage("predicted and reference files are of different kinds".into()));
    }
    if ph == csvio::FORCE_HEADER.join(",") {
        let p = csvio::read_force(csvio::open(predicted)?)?;
        let r = csvio::read_force(csvio::open(reference)?)?;
        return print_json(&json!({ "samples": p.len(), "force_rmse": force_rmse(&p, &r)? }));
    }
    let p = csvio::read_trajectory(csvio::open(predicted)?)?;
    let r = csvio::read_trajectory(csvio::open(reference)?)?;
    let mut norms = Normalizers::from_reference(&r);
    if let Some(d) = diameter_mm {
        norms.diameter = d * 1e-3;
    }
    if let Some(s) = stroke_mm {
        norms.vertical_stroke = s * 1e-3;
    }
    let m = error_report(&p, &r, &norms)?;
    print_json(&serde_json::to_value(&m).map_err(|e| Failure::domain("Io", e))?)
}
