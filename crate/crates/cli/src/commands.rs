use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use dmrac_core::control_math::{
    discretize, freq_response, logspace, tf_to_ss, DiscretizationMethod, FrequencyResponse, TransferFunction,
};
use dmrac_core::controllers::{loopshape_pid, open_loop_response, LoopShapeSpec};
use dmrac_core::plant::VerticalPlant;
use dmrac_core::sim::{
    agent_metrics, preset, run_scenario, write_metrics_csv, ControllerSpec, MetricsRow, Scenario, TraceLog, PRESETS,
};
use dmrac_core::sysid::{etfe, identify_vertical, plant_transfer_function, IdentificationSetup, DEFAULT_SEGMENTS};
use dmrac_core::Error;

use crate::model_file::{self, ModelSource};
use crate::svg::{render, Panel, Series};
use crate::{EXIT_DIVERGENCE, EXIT_USAGE, EXIT_VALIDATION};

/// Sample period of simulated identification experiments, s.
const IDENT_DT: f64 = 0.002;

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() || e.downcast_ref::<std::io::Error>().is_some() {
        return EXIT_USAGE;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Divergence { .. }) => EXIT_DIVERGENCE,
        Some(Error::Io(_)) => EXIT_USAGE,
        Some(_) => EXIT_VALIDATION,
        None => 1,
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(UsageError(format!("cannot read {}", path.display())).into())
    }
}

fn write(out: &Path, name: &str, contents: &str) -> Result<()> {
    let path = out.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn model_source(model: Option<&Path>) -> Result<ModelSource<'_>> {
    match model {
        Some(p) => {
            require_file(p)?;
            Ok(ModelSource::File(p))
        }
        None => Ok(ModelSource::Builtin),
    }
}

pub fn presets() -> Result<()> {
    for p in PRESETS {
        println!("{}  {:<14} {}", p.id, p.name, p.summary);
    }
    Ok(())
}

pub fn run(scenario: Option<&Path>, preset_id: Option<u32>, out: &Path) -> Result<()> {
    let scenario = match (scenario, preset_id) {
        (Some(path), None) => {
            require_file(path)?;
            Scenario::load(path)?
        }
        (None, Some(id)) => preset(id)?,
        _ => return Err(UsageError("give either a scenario file or --preset".into()).into()),
    };
    let trace = run_scenario(&scenario)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    trace.save(&out.join("trace.csv"))?;

    let window = scenario.window();
    let mut rows = Vec::new();
    let mut text = format!("scenario = {}\n", scenario.name);
    println!(
        "{:<12} {:>10} {:>10} {:>12} {:>12} {:>12}",
        "agent", "overshoot%", "settle_s", "sync_rms", "effort_var", "energy"
    );
    for (i, agent) in trace.agents.iter().enumerate() {
        let m = agent_metrics(&trace, i, window)?;
        text.push_str(&m.to_key_values(&agent.name));
        rows.push(MetricsRow::new(&agent.name, &m));
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
        println!(
            "{:<12} {:>10} {:>10} {:>12.5} {:>12.5} {:>12.4}",
            agent.name,
            fmt_opt(m.overshoot),
            fmt_opt(m.settling_time),
            m.sync_error_rms,
            m.effort_variance,
            m.energy_proxy
        );
    }
    let mut csv = Vec::new();
    write_metrics_csv(&rows, &mut csv)?;
    write(out, "metrics.csv", &String::from_utf8(csv)?)?;
    write(out, "metrics.txt", &text)?;

    write(out, "velocity.svg", &velocity_plot(&trace))?;
    write(out, "error.svg", &per_agent_plot(&trace, "Synchronization error", "error [m/s]", |a| &a.error))?;
    write(out, "force.svg", &per_agent_plot(&trace, "Control action", "force [normalized]", |a| &a.control))?;
    if let Some(svg) = comparison_plot(&scenario, &trace) {
        write(out, "comparison.svg", &svg)?;
    }
    println!("wrote results to {}", out.display());
    Ok(())
}

fn time_axis(trace: &TraceLog) -> Vec<f64> {
    (0..trace.len()).map(|k| trace.time(k)).collect()
}

fn velocity_plot(trace: &TraceLog) -> String {
    let t = time_axis(trace);
    let mut panel = Panel::new("Vertical velocity", "time [s]", "v_z [m/s]")
        .with(Series::new("reference", t.clone(), trace.reference.clone()).dashed().color(7));
    for (i, a) in trace.agents.iter().enumerate() {
        panel = panel.with(Series::new(&a.name, t.clone(), a.velocity.clone()).color(i));
    }
    render(&[panel])
}

fn per_agent_plot(
    trace: &TraceLog,
    title: &str,
    y_label: &str,
    field: impl Fn(&dmrac_core::sim::AgentTrace) -> &Vec<f64>,
) -> String {
    let t = time_axis(trace);
    let mut panel = Panel::new(title, "time [s]", y_label);
    for (i, a) in trace.agents.iter().enumerate() {
        panel = panel.with(Series::new(&a.name, t.clone(), field(a).clone()).color(i));
    }
    render(&[panel])
}

/// PID followers solid, MRAC followers dashed, paired by order of appearance.
fn comparison_plot(scenario: &Scenario, trace: &TraceLog) -> Option<String> {
    let followers = scenario.agents.iter().enumerate().skip(1);
    let pid: Vec<usize> = followers
        .clone()
        .filter(|(_, a)| matches!(a.controller, ControllerSpec::Pid { .. }))
        .map(|(i, _)| i)
        .collect();
    let mrac: Vec<usize> = followers
        .filter(|(_, a)| !matches!(a.controller, ControllerSpec::Pid { .. }))
        .map(|(i, _)| i)
        .collect();
    if pid.is_empty() || mrac.is_empty() {
        return None;
    }
    let t = time_axis(trace);
    let mut velocity = Panel::new("PID (solid) vs MRAC (dashed) followers", "time [s]", "v_z [m/s]");
    let mut error = Panel::new("Tracking error v_z - reference", "time [s]", "error [m/s]");
    for (group, dashed) in [(&pid, false), (&mrac, true)] {
        for (j, &i) in group.iter().enumerate() {
            let a = &trace.agents[i];
            let e: Vec<f64> = a.velocity.iter().zip(&trace.reference).map(|(v, r)| v - r).collect();
            let mut sv = Series::new(&a.name, t.clone(), a.velocity.clone()).color(j);
            let mut se = Series::new(&a.name, t.clone(), e).color(j);
            if dashed {
                sv = sv.dashed();
                se = se.dashed();
            }
            velocity = velocity.with(sv);
            error = error.with(se);
        }
    }
    Some(render(&[velocity, error]))
}

fn bode_panels(title: &str, curves: &[(&str, &FrequencyResponse, bool)], markers: &[(f64, String)]) -> [Panel; 2] {
    let mut mag = Panel::new(&format!("{title}: magnitude"), "frequency [rad/s]", "|G| [dB]").log_x();
    let mut phase = Panel::new(&format!("{title}: phase"), "frequency [rad/s]", "phase [deg]").log_x();
    for (i, (label, fr, dashed)) in curves.iter().enumerate() {
        let w = fr.frequencies().to_vec();
        let deg: Vec<f64> = fr.phases().iter().map(|p| p.to_degrees()).collect();
        let mut m = Series::new(*label, w.clone(), fr.magnitudes_db()).color(i);
        let mut p = Series::new(*label, w, deg).color(i);
        if *dashed {
            m = m.dashed();
            p = p.dashed();
        }
        mag = mag.with(m);
        phase = phase.with(p);
    }
    for (x, label) in markers {
        mag = mag.marker(*x, label.clone());
        phase = phase.marker(*x, label.clone());
    }
    [mag, phase]
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.9}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn identify(model: Option<&Path>, snr: f64, seed: u64, order: usize, out: &Path) -> Result<()> {
    let tf = model_file::load(model_source(model)?)?;
    let delay = tf.dead_time();
    let rational = tf.clone().with_dead_time(0.0)?;
    let sampled = discretize(&tf_to_ss(&rational)?, IDENT_DT, DiscretizationMethod::ZeroOrderHold)?;
    let plant = VerticalPlant::new(&sampled, 1.0, delay)?;

    let mut setup = IdentificationSetup {
        snr_db: Some(snr),
        order,
        ..Default::default()
    };
    setup.prbs.seed = seed;
    let report = identify_vertical(&plant, &setup)?;
    let m = &report.model;

    println!("samples: {} estimation, {} validation, dt = {IDENT_DT} s", report.estimation.len(), report.validation.len());
    println!(
        "estimated delay: {} samples ({} s), true {} samples",
        m.estimated_delay,
        m.estimated_delay as f64 * IDENT_DT,
        report.true_delay
    );
    println!("a = {}", fmt_vec(&m.a));
    println!("b = {}", fmt_vec(&m.b));
    println!("true a = {}", fmt_vec(&report.true_a));
    println!("true b = {}", fmt_vec(&report.true_b));
    println!("coefficient error (relative) = {:.3e}", report.coefficient_error);
    println!("fit VAF = {:.3} %", m.fit_vaf);
    println!("validation VAF = {:.3} %", report.validation_vaf);
    println!("AIC = {:.3}", m.aic);

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    report.estimation.save(&out.join("identification.csv"))?;
    report.validation.save(&out.join("validation.csv"))?;

    let nyquist = std::f64::consts::PI / IDENT_DT;
    let grid = logspace(0.1, 0.9 * nyquist, 400);
    let truth = freq_response(&plant_transfer_function(&plant)?, &grid)?;
    let fitted = freq_response(&m.transfer_function, &grid)?;
    let empirical = etfe(&report.estimation, DEFAULT_SEGMENTS)?;
    let panels = bode_panels(
        "Identification",
        &[("true plant", &truth, false), ("ARX fit", &fitted, true), ("ETFE", &empirical, false)],
        &[],
    );
    write(out, "identification_bode.svg", &render(&panels))?;
    println!("wrote results to {}", out.display());
    Ok(())
}

pub fn tune(model: Option<&Path>, omega_c: f64, a: f64, b: f64, tau_f: f64, out: &Path) -> Result<()> {
    let tf: TransferFunction = model_file::load(model_source(model)?)?;
    let spec = LoopShapeSpec {
        omega_c,
        a,
        b,
        tau_f,
        match_freq: None,
    };
    let d = loopshape_pid(&tf, &spec)?;
    let l_c = open_loop_response(&tf, &d.gains, omega_c)?;
    println!("tau1 = {}", d.tau1);
    println!("tau2 = {}", d.tau2);
    println!("mu = {}", d.mu);
    println!("mu_red = {}", d.reduced.gain);
    println!(
        "tau_red = {}{}",
        d.reduced.delay,
        if d.reduced.delay_clamped { " (clamped from a negative value)" } else { "" }
    );
    println!("k_p = {}", d.gains.k_p);
    println!("k_i = {}", d.gains.k_i);
    println!("k_d = {}", d.gains.k_d);
    println!("tau_f = {}", d.gains.tau_f);
    println!("|L(j omega_c)| = {:.4}", l_c.norm());

    let grid = logspace(omega_c / 100.0, omega_c * 100.0, 500);
    let values = grid
        .iter()
        .map(|&w| open_loop_response(&tf, &d.gains, w))
        .collect::<dmrac_core::Result<Vec<_>>>()?;
    let open_loop = FrequencyResponse::new(grid.clone(), values)?;
    let plant = freq_response(&tf, &grid)?;
    let panels = bode_panels(
        "Open loop L = R G",
        &[("L(jw)", &open_loop, false), ("G(jw)", &plant, true)],
        &[(omega_c, format!("omega_c = {omega_c}"))],
    );
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write(out, "open_loop_bode.svg", &render(&panels))?;
    println!("wrote results to {}", out.display());
    Ok(())
}
