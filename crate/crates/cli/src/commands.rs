use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use optomag_core::apparatus::action_trace;
use optomag_core::{
    compare_runs, ideal_reference_train, pulse_energy, ultimate_learning_rate, DeviceCalibration,
    Helicity, MagneticSynapse, NoiseSource, StepRecord, TrainRun,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{csv_bytes, fmt_num, rounded_json, write_atomic};
use crate::svg::{Chart, Marker, Series, Style};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 2;

pub const TRACE_HEADER: [&str; 16] = [
    "step",
    "pattern",
    "x1",
    "x2",
    "y1",
    "y2",
    "sum",
    "output",
    "desired",
    "error",
    "w1_before",
    "w2_before",
    "w1_after",
    "w2_after",
    "w1_measured",
    "w2_measured",
];

pub const COMPARE_HEADER: [&str; 7] = [
    "step",
    "w1_dev_stored",
    "w1_dev_measured",
    "w1_ideal",
    "w2_dev_stored",
    "w2_dev_measured",
    "w2_ideal",
];

const PATTERN_COLORS: [&str; 4] = ["#888888", "#1f77b4", "#2ca02c", "#d62728"];

fn prepare_out(cfg: &RunConfig) -> Result<&Path> {
    let out = cfg.output_dir.as_path();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    Ok(out)
}

fn measured_field(r: &StepRecord, i: usize) -> String {
    if r.inputs()[i] == 1 {
        fmt_num(r.measured()[i])
    } else {
        String::new()
    }
}

pub fn trace_rows(run: &TrainRun) -> Vec<Vec<String>> {
    run.records
        .iter()
        .map(|r| {
            vec![
                r.step_index.to_string(),
                r.pattern_id.to_string(),
                r.x1.to_string(),
                r.x2.to_string(),
                fmt_num(r.y1_meas),
                fmt_num(r.y2_meas),
                fmt_num(r.sum),
                r.output.to_string(),
                r.desired.to_string(),
                r.error.to_string(),
                fmt_num(r.w1_before),
                fmt_num(r.w2_before),
                fmt_num(r.w1_after),
                fmt_num(r.w2_after),
                measured_field(r, 0),
                measured_field(r, 1),
            ]
        })
        .collect()
}

fn learning_curve(run: &TrainRun) -> Chart {
    let mut series: Vec<Series> = (0..4)
        .map(|k| {
            let pts = run
                .records
                .iter()
                .filter(|r| r.pattern_id as usize == k + 1)
                .map(|r| (r.step_index as f64, r.sum))
                .collect();
            Series::new(
                format!("pattern {}", k + 1),
                PATTERN_COLORS[k],
                Style::Line,
                pts,
            )
        })
        .collect();
    series.push(Series::new(
        "update",
        "black",
        Style::Markers(Marker::Circle),
        run.records
            .iter()
            .filter(|r| r.packets_sent.iter().any(|&p| p > 0))
            .map(|r| (r.step_index as f64, r.sum))
            .collect(),
    ));
    Chart {
        title: format!("{} learning: y1 + y2 - b", run.task.name),
        x_label: "learning step".into(),
        y_label: "weighted sum".into(),
        series,
    }
}

pub fn cmd_train(cfg: &RunConfig) -> Result<i32> {
    let task = cfg.gate_task()?;
    let trainer = cfg.trainer()?;
    let run = trainer.train(&task, cfg.init(), cfg.seed)?;
    let out = prepare_out(cfg)?;

    write_atomic(
        &out.join("trace.csv"),
        &csv_bytes(&TRACE_HEADER, &trace_rows(&run))?,
    )?;

    let summary = rounded_json(&json!({
        "task": run.task,
        "converged": run.converged(),
        "converged_step": run.converged_step,
        "steps_run": run.records.len(),
        "final_weights": [run.final_weights.0, run.final_weights.1],
        "effective_eta": trainer.effective_eta(),
        "ledger": run.ledger,
        "seed": run.seed,
        "config": cfg,
    }))?;
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    write_atomic(&out.join("summary.json"), text.as_bytes())?;

    let mut lines = String::new();
    for line in action_trace(&run, &trainer.apparatus)? {
        lines.push_str(&rounded_json(&line)?.to_string());
        lines.push('\n');
    }
    write_atomic(&out.join("actions.jsonl"), lines.as_bytes())?;
    write_atomic(
        &out.join("learning_curve.svg"),
        learning_curve(&run).render().as_bytes(),
    )?;

    match run.converged_step {
        Some(step) => {
            println!(
                "{}: converged at step {step}, weights ({}, {})",
                task.name,
                fmt_num(run.final_weights.0),
                fmt_num(run.final_weights.1)
            );
            Ok(EXIT_OK)
        }
        None => {
            println!(
                "{}: not converged within {} steps",
                task.name,
                run.records.len()
            );
            Ok(EXIT_NOT_CONVERGED)
        }
    }
}

/// Samples of an up-then-down helicity sweep: (cumulative pulses, helicity, weight).
pub fn pulse_sweep(cfg: &RunConfig) -> Result<Vec<(u64, Helicity, f64)>> {
    let sweep = &cfg.sweep;
    if sweep.increment == 0 {
        bail!("key `sweep.increment` must be at least 1");
    }
    let cal = DeviceCalibration::preset(&sweep.preset)?.with_noise(sweep.polarization_noise_frac);
    let mut synapse = MagneticSynapse::new(sweep.initial_weight, cal)?;
    let mut noise = NoiseSource::new(cfg.seed);
    let mut index = 0u64;
    let mut samples = vec![(0, Helicity::RightCircular, synapse.read_weight())];
    for h in [Helicity::RightCircular, Helicity::LeftCircular] {
        let mut remaining = sweep.pulses_per_direction;
        while remaining > 0 {
            let n = remaining.min(sweep.increment);
            synapse = synapse.apply_pulses(n, h, Some(noise.device()))?;
            remaining -= n;
            index += u64::from(n);
            samples.push((index, h, synapse.read_weight()));
        }
    }
    Ok(samples)
}

pub fn cmd_pulse_sweep(cfg: &RunConfig) -> Result<i32> {
    let samples = pulse_sweep(cfg)?;
    let out = prepare_out(cfg)?;
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|(i, h, w)| vec![i.to_string(), h.label().to_string(), fmt_num(*w)])
        .collect();
    write_atomic(
        &out.join("sweep.csv"),
        &csv_bytes(&["pulse_index", "helicity", "weight"], &rows)?,
    )?;
    let points = samples.iter().map(|&(i, _, w)| (i as f64, w)).collect();
    let chart = Chart {
        title: "weight vs pump pulses (right then left helicity)".into(),
        x_label: "pulse index".into(),
        y_label: "weight".into(),
        series: vec![Series::new("weight", "black", Style::Line, points)],
    };
    write_atomic(&out.join("sweep.svg"), chart.render().as_bytes())?;
    if let Some(&(_, _, w)) = samples.last() {
        println!(
            "sweep: {} samples, final weight {}",
            samples.len(),
            fmt_num(w)
        );
    }
    Ok(EXIT_OK)
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<i32> {
    let task = cfg.gate_task()?;
    let trainer = cfg.trainer()?;
    let device = trainer.train(&task, cfg.init(), cfg.seed)?;
    let ideal = ideal_reference_train(
        &task,
        cfg.init(),
        cfg.threshold_b,
        trainer.effective_eta(),
        trainer.max_steps,
    );
    let report = compare_runs(&device, &ideal)?;
    let out = prepare_out(cfg)?;

    let len = device.records.len().max(ideal.records.len());
    let rows: Vec<Vec<String>> = (0..len)
        .map(|k| {
            let d = device.records.get(k);
            let i = ideal.records.get(k);
            let mut row = vec![(k + 1).to_string()];
            for w in 0..2 {
                row.push(
                    d.map(|r| fmt_num(r.weights_before()[w]))
                        .unwrap_or_default(),
                );
                row.push(d.map(|r| measured_field(r, w)).unwrap_or_default());
                row.push(
                    i.map(|r| fmt_num(r.weights_before()[w]))
                        .unwrap_or_default(),
                );
            }
            row
        })
        .collect();
    write_atomic(
        &out.join("compare.csv"),
        &csv_bytes(&COMPARE_HEADER, &rows)?,
    )?;

    let colors = ["#d62728", "#1f77b4"];
    let mut series = Vec::new();
    for (w, color) in colors.into_iter().enumerate() {
        series.push(Series::new(
            format!("w{} measured", w + 1),
            color,
            Style::Markers(Marker::Triangle),
            device
                .measured_trace(w)
                .into_iter()
                .map(|(s, v)| (s as f64, v))
                .collect(),
        ));
        series.push(Series::new(
            format!("w{} ideal", w + 1),
            "black",
            Style::Markers(Marker::Star),
            ideal
                .stored_trace(w)
                .into_iter()
                .map(|(s, v)| (s as f64, v))
                .collect(),
        ));
    }
    let chart = Chart {
        title: format!("{}: device readout vs ideal perceptron", task.name),
        x_label: "learning step".into(),
        y_label: "weight".into(),
        series,
    };
    write_atomic(&out.join("compare.svg"), chart.render().as_bytes())?;

    let summary = rounded_json(&json!({
        "device_converged_step": device.converged_step,
        "ideal_converged_step": ideal.converged_step,
        "convergence_delta": report.convergence_delta,
        "max_abs_stored_delta": report.max_abs_stored_delta,
        "first_measured_divergence": report.first_measured_divergence,
    }))?;
    println!("{summary}");
    Ok(if device.converged() {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

pub fn cost_report(cfg: &RunConfig) -> Result<serde_json::Value> {
    let trainer = cfg.trainer()?;
    let app = &trainer.apparatus;
    let per_pulse = pulse_energy(app);
    let pulses_per_update = u64::from(trainer.packets_per_update) * u64::from(app.packet_size);
    // One synapse update: stage move, wave plate, packet emission.
    let update_time = app.stage_step_time_s
        + app.waveplate_latency_s
        + trainer.packets_per_update as f64 * app.packet_emission_time_s();
    rounded_json(&json!({
        "pulse_energy_pj": per_pulse,
        "energy_per_step_per_synapse_pj": pulses_per_update as f64 * per_pulse,
        "ultimate_learning_rate_ghz": ultimate_learning_rate(app),
        "steps": cfg.cost_steps,
        "wall_time_per_synapse_step_s": update_time,
        "projected_wall_time_s": cfg.cost_steps as f64 * update_time,
    }))
}

pub fn cmd_cost(cfg: &RunConfig) -> Result<i32> {
    println!("{}", serde_json::to_string_pretty(&cost_report(cfg)?)?);
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_reaches_saturation_and_returns() {
        let samples = pulse_sweep(&RunConfig::default()).unwrap();
        assert_eq!(samples.len(), 49);
        let at = |i: u64| samples.iter().find(|s| s.0 == i).unwrap().2;
        assert_eq!(fmt_num(at(600)), "1");
        assert_eq!(at(1200), 0.0);
        assert_eq!(samples[25].1, Helicity::LeftCircular);
    }

    #[test]
    fn zero_increment_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.sweep.increment = 0;
        assert!(pulse_sweep(&cfg).is_err());
    }

    #[test]
    fn cost_defaults() {
        let v = cost_report(&RunConfig::default()).unwrap();
        let e = v["energy_per_step_per_synapse_pj"].as_f64().unwrap();
        assert!((e - 64.6).abs() < 0.1, "{e}");
        assert_eq!(v["ultimate_learning_rate_ghz"].as_f64().unwrap(), 50.0);
        let mut cfg = RunConfig::default();
        cfg.calibration.packet_size = Some(1);
        let v = cost_report(&cfg).unwrap();
        assert!((v["energy_per_step_per_synapse_pj"].as_f64().unwrap() - 12.92).abs() < 0.01);
        let mut cfg = RunConfig::default();
        cfg.apparatus.fluence_mj_per_cm2 = Some(0.0);
        assert_eq!(
            cost_report(&cfg).unwrap()["pulse_energy_pj"]
                .as_f64()
                .unwrap(),
            0.0
        );
    }
}
