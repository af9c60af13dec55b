//! File formats: signal CSV, trajectory / operator / controller / result
//! JSON, and trace CSV.
//!
//! JSON artifacts are canonical: keys sorted, floats printed with 17
//! significant digits, written atomically (temp file + rename), so re-running
//! a command on identical inputs reproduces the bytes exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::config::PhasorConfig;
use crate::control::{ForwardingBlock, ForwardingController, HarmonicController};
use crate::error::{Error, Result};
use crate::phasor::{PhasorTrajectory, PhasorVector, SampledSignal};
use crate::sim::{ControllerKind, SimTrace};
use crate::toeplitz::ToeplitzOperator;

type CMat = DMatrix<Complex64>;
type RMat = DMatrix<f64>;
type RVec = DVector<f64>;

// ---------------------------------------------------------------------------
// canonical JSON

fn fmt_float(v: f64) -> Result<String> {
    if !v.is_finite() {
        return Err(Error::io("non-finite float cannot be serialized"));
    }
    Ok(format!("{v:.16e}"))
}

fn write_canonical(value: &Value, out: &mut String) -> Result<()> {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&fmt_float(n.as_f64().unwrap())?);
            }
        }
        Value::String(s) => {
            let _ = write!(out, "{}", Value::String(s.clone()));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out)?;
            }
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json maps are BTree-backed: iteration is key-sorted
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", Value::String(k.clone()));
                out.push(':');
                write_canonical(v, out)?;
            }
            out.push('}');
        }
    }
    Ok(())
}

/// Canonical textual form of a JSON value.
pub fn to_canonical_json(value: &Value) -> Result<String> {
    let mut out = String::new();
    write_canonical(value, &mut out)?;
    out.push('\n');
    Ok(out)
}

/// Atomic write: the content lands under the final name only when complete.
pub fn write_text_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp)
            .map_err(|e| Error::io(format!("cannot create {}: {e}", tmp.display())))?;
        f.write_all(content.as_bytes())
            .map_err(|e| Error::io(format!("cannot write {}: {e}", tmp.display())))?;
        f.sync_all().ok();
    }
    fs::rename(&tmp, path)
        .map_err(|e| Error::io(format!("cannot move artifact into {}: {e}", path.display())))
}

/// Canonical JSON artifact writer.
pub fn write_json_atomic(path: &Path, value: &Value) -> Result<()> {
    write_text_atomic(path, &to_canonical_json(value)?)
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::io(format!("invalid JSON in {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// signals (CSV: time, then one column per component)

pub fn write_signal_csv(path: &Path, signal: &SampledSignal) -> Result<()> {
    if signal.max_imag() > 1e-6 {
        return Err(Error::io(format!(
            "signal has imaginary residue {:.3e}; CSV stores real signals",
            signal.max_imag()
        )));
    }
    let mut out = String::new();
    out.push('t');
    for i in 0..signal.dim {
        let _ = write!(out, ",x{}", i + 1);
    }
    out.push('\n');
    for (j, &t) in signal.times.iter().enumerate() {
        out.push_str(&fmt_float(t)?);
        for i in 0..signal.dim {
            out.push(',');
            out.push_str(&fmt_float(signal.samples[j][i].re)?);
        }
        out.push('\n');
    }
    write_text_atomic(path, &out)
}

pub fn read_signal_csv(path: &Path) -> Result<SampledSignal> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("cannot read {}: {e}", path.display())))?;
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.starts_with('t') {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::io(format!("bad number at line {}: {e}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if fields.len() < 2 {
            return Err(Error::io(format!(
                "line {} has fewer than 2 columns",
                lineno + 1
            )));
        }
        times.push(fields[0]);
        samples.push(RVec::from_vec(fields[1..].to_vec()));
    }
    SampledSignal::from_real(times, samples)
}

// ---------------------------------------------------------------------------
// phasor vectors and trajectories

fn complex_pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn read_complex_pair(v: &Value) -> Result<Complex64> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::io("expected [re, im]"))?;
    Ok(Complex64::new(
        arr[0]
            .as_f64()
            .ok_or_else(|| Error::io("re must be a number"))?,
        arr[1]
            .as_f64()
            .ok_or_else(|| Error::io("im must be a number"))?,
    ))
}

pub fn phasor_vector_to_json(pv: &PhasorVector) -> Value {
    let coeffs: Vec<Value> = pv
        .coeffs
        .iter()
        .map(|c| Value::Array(c.iter().map(|&z| complex_pair(z)).collect()))
        .collect();
    json!({ "dim": pv.dim, "truncation": pv.truncation, "coeffs": coeffs })
}

pub fn phasor_vector_from_json(v: &Value) -> Result<PhasorVector> {
    let dim = v["dim"]
        .as_u64()
        .ok_or_else(|| Error::io("phasor vector needs dim"))? as usize;
    let truncation = v["truncation"]
        .as_u64()
        .ok_or_else(|| Error::io("phasor vector needs truncation"))? as usize;
    let coeffs_json = v["coeffs"]
        .as_array()
        .ok_or_else(|| Error::io("phasor vector needs coeffs"))?;
    if coeffs_json.len() != 2 * truncation + 1 {
        return Err(Error::io(
            "phasor vector coeff count does not match truncation",
        ));
    }
    let mut pv = PhasorVector::zeros(dim, truncation);
    for (slot, cj) in coeffs_json.iter().enumerate() {
        let comps = cj
            .as_array()
            .ok_or_else(|| Error::io("coeff entry must be an array"))?;
        if comps.len() != dim {
            return Err(Error::io("coeff entry dimension mismatch"));
        }
        let vals: Vec<Complex64> = comps.iter().map(read_complex_pair).collect::<Result<_>>()?;
        pv.coeffs[slot] = DVector::from_vec(vals);
    }
    Ok(pv)
}

fn config_to_json(config: &PhasorConfig) -> Value {
    json!({
        "period": config.period,
        "omega": config.omega,
        "truncation": config.truncation,
        "samples_per_period": config.samples_per_period,
    })
}

fn config_from_json(v: &Value) -> Result<PhasorConfig> {
    let period = v["period"]
        .as_f64()
        .ok_or_else(|| Error::io("config needs period"))?;
    let truncation = v["truncation"]
        .as_u64()
        .ok_or_else(|| Error::io("config needs truncation"))? as usize;
    let n = v["samples_per_period"]
        .as_u64()
        .ok_or_else(|| Error::io("config needs samples_per_period"))? as usize;
    PhasorConfig::new(period, truncation, n)
}

pub fn trajectory_to_json(traj: &PhasorTrajectory) -> Value {
    json!({
        "config": config_to_json(&traj.config),
        "real_signal": traj.real_signal,
        "times": traj.times,
        "coeffs": traj
            .values
            .iter()
            .map(|pv| {
                Value::Array(
                    pv.coeffs
                        .iter()
                        .map(|c| Value::Array(c.iter().map(|&z| complex_pair(z)).collect()))
                        .collect(),
                )
            })
            .collect::<Vec<_>>(),
    })
}

pub fn trajectory_from_json(v: &Value) -> Result<PhasorTrajectory> {
    let config = config_from_json(&v["config"])?;
    let times: Vec<f64> = v["times"]
        .as_array()
        .ok_or_else(|| Error::io("trajectory needs times"))?
        .iter()
        .map(|t| t.as_f64().ok_or_else(|| Error::io("times must be numbers")))
        .collect::<Result<_>>()?;
    let dim_probe = v["coeffs"][0][0]
        .as_array()
        .map(|a| a.len())
        .ok_or_else(|| Error::io("trajectory needs coeffs"))?;
    let values: Vec<PhasorVector> = v["coeffs"]
        .as_array()
        .ok_or_else(|| Error::io("trajectory needs coeffs"))?
        .iter()
        .map(|pj| {
            phasor_vector_from_json(&json!({
                "dim": dim_probe,
                "truncation": config.truncation,
                "coeffs": pj,
            }))
        })
        .collect::<Result<_>>()?;
    if values.len() != times.len() {
        return Err(Error::io("trajectory times/values length mismatch"));
    }
    Ok(PhasorTrajectory {
        config,
        times,
        values,
        real_signal: v["real_signal"].as_bool().unwrap_or(false),
    })
}

// ---------------------------------------------------------------------------
// operators

fn matrix_to_json_parts(m: &CMat) -> (Value, Value) {
    let re: Vec<Vec<f64>> = (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)].re).collect())
        .collect();
    let im: Vec<Vec<f64>> = (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)].im).collect())
        .collect();
    (json!(re), json!(im))
}

fn real_matrix_to_json(m: &RMat) -> Value {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect();
    json!(rows)
}

fn real_matrix_from_json(v: &Value) -> Result<RMat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::io("matrix must be an array of rows"))?;
    let nrows = rows.len();
    let ncols = rows
        .first()
        .and_then(|r| r.as_array())
        .map(|r| r.len())
        .ok_or_else(|| Error::io("matrix must have at least one row"))?;
    let mut m = RMat::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::io("matrix row must be an array"))?;
        if row.len() != ncols {
            return Err(Error::io("ragged matrix rows"));
        }
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = x
                .as_f64()
                .ok_or_else(|| Error::io("matrix entries must be numbers"))?;
        }
    }
    Ok(m)
}

pub fn operator_to_json(op: &ToeplitzOperator) -> Value {
    let band = op.band() as i64;
    let blocks: Vec<Value> = (-band..=band)
        .map(|k| {
            let (re, im) = matrix_to_json_parts(op.block(k));
            json!({ "k": k, "re": re, "im": im })
        })
        .collect();
    json!({
        "n": op.block_rows,
        "m": op.block_cols,
        "h": op.config.truncation,
        "period": op.config.period,
        "samples_per_period": op.config.samples_per_period,
        "defect": op.defect,
        "blocks": blocks,
    })
}

pub fn operator_from_json(v: &Value) -> Result<ToeplitzOperator> {
    let n = v["n"]
        .as_u64()
        .ok_or_else(|| Error::io("operator needs n"))? as usize;
    let m = v["m"]
        .as_u64()
        .ok_or_else(|| Error::io("operator needs m"))? as usize;
    let h = v["h"]
        .as_u64()
        .ok_or_else(|| Error::io("operator needs h"))? as usize;
    let period = v["period"]
        .as_f64()
        .ok_or_else(|| Error::io("operator needs period"))?;
    let spp = v["samples_per_period"]
        .as_u64()
        .unwrap_or((4 * (2 * h + 1)) as u64) as usize;
    let config = PhasorConfig::new(period, h, spp)?;
    let mut blocks = vec![CMat::zeros(n, m); 4 * h + 1];
    for bj in v["blocks"]
        .as_array()
        .ok_or_else(|| Error::io("operator needs blocks"))?
    {
        let k = bj["k"].as_i64().ok_or_else(|| Error::io("block needs k"))?;
        if k.unsigned_abs() as usize > 2 * h {
            return Err(Error::io("block index outside the coefficient band"));
        }
        let re = real_matrix_from_json(&bj["re"])?;
        let im = real_matrix_from_json(&bj["im"])?;
        if re.nrows() != n || re.ncols() != m || im.nrows() != n || im.ncols() != m {
            return Err(Error::io("block dimensions do not match the operator"));
        }
        blocks[(k + 2 * h as i64) as usize] =
            CMat::from_fn(n, m, |r, c| Complex64::new(re[(r, c)], im[(r, c)]));
    }
    let mut op = ToeplitzOperator::from_blocks(config, n, m, blocks)?;
    op.defect = v["defect"].as_f64().unwrap_or(0.0);
    Ok(op)
}

// ---------------------------------------------------------------------------
// systems

/// Bilinear affine plant as JSON (matrices row-major; SI units: ohms,
/// henries, farads for the rectifier constructor).
pub fn bilinear_system_to_json(sys: &crate::model::BilinearAffineSystem) -> Value {
    json!({
        "a_ind": real_matrix_to_json(&sys.a_ind),
        "a_dep": real_matrix_to_json(&sys.a_dep),
        "b_ind": real_matrix_to_json(&sys.b_ind),
        "b_dep": real_matrix_to_json(&sys.b_dep),
        "control_bounds": [sys.control_bounds.0, sys.control_bounds.1],
        "w_phasors": phasor_vector_to_json(&sys.w_phasors),
        "load_injection": real_matrix_to_json(&sys.load_injection),
    })
}

pub fn bilinear_system_from_json(v: &Value) -> Result<crate::model::BilinearAffineSystem> {
    let bounds = v["control_bounds"]
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::io("system needs [lo, hi] control bounds"))?;
    let mut sys = crate::model::BilinearAffineSystem::new(
        real_matrix_from_json(&v["a_ind"])?,
        real_matrix_from_json(&v["a_dep"])?,
        real_matrix_from_json(&v["b_ind"])?,
        real_matrix_from_json(&v["b_dep"])?,
        (
            bounds[0]
                .as_f64()
                .ok_or_else(|| Error::io("bounds must be numbers"))?,
            bounds[1]
                .as_f64()
                .ok_or_else(|| Error::io("bounds must be numbers"))?,
        ),
        phasor_vector_from_json(&v["w_phasors"])?,
    )?;
    if !v["load_injection"].is_null() {
        sys.load_injection = real_matrix_from_json(&v["load_injection"])?;
    }
    Ok(sys)
}

// ---------------------------------------------------------------------------
// controllers

fn harmonic_controller_to_json(c: &HarmonicController) -> Value {
    json!({
        "config": config_to_json(&c.config),
        "s_e": phasor_vector_to_json(&c.s_e),
        "x_e": phasor_vector_to_json(&c.x_e),
        "w": phasor_vector_to_json(&c.w),
        "p": operator_to_json(&c.p_op),
        "gamma": operator_to_json(&c.gamma_op),
        "s_op": operator_to_json(&c.s_op),
        "a_dep": real_matrix_to_json(&c.a_dep),
        "b_dep": real_matrix_to_json(&c.b_dep),
        "bounds": [c.bounds.0, c.bounds.1],
        "lyapunov_residual": c.lyapunov_residual,
        "p_defect": c.p_defect,
        "equilibrium_margin": c.equilibrium_margin,
    })
}

fn harmonic_controller_from_json(v: &Value) -> Result<HarmonicController> {
    let bounds = v["bounds"]
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::io("controller needs [lo, hi] bounds"))?;
    Ok(HarmonicController {
        config: config_from_json(&v["config"])?,
        s_e: phasor_vector_from_json(&v["s_e"])?,
        s_op: operator_from_json(&v["s_op"])?,
        x_e: phasor_vector_from_json(&v["x_e"])?,
        w: phasor_vector_from_json(&v["w"])?,
        p_op: operator_from_json(&v["p"])?,
        gamma_op: operator_from_json(&v["gamma"])?,
        a_dep: real_matrix_from_json(&v["a_dep"])?,
        b_dep: real_matrix_from_json(&v["b_dep"])?,
        bounds: (
            bounds[0]
                .as_f64()
                .ok_or_else(|| Error::io("bounds must be numbers"))?,
            bounds[1]
                .as_f64()
                .ok_or_else(|| Error::io("bounds must be numbers"))?,
        ),
        lyapunov_residual: v["lyapunov_residual"].as_f64().unwrap_or(f64::NAN),
        p_defect: v["p_defect"].as_f64().unwrap_or(f64::NAN),
        equilibrium_margin: v["equilibrium_margin"].as_f64().unwrap_or(f64::NAN),
    })
}

/// Exports a controller as a self-contained JSON bundle importable by the
/// simulator without re-synthesis.
pub fn controller_to_json(kind: &ControllerKind) -> Result<Value> {
    match kind {
        ControllerKind::Feedback(c) => Ok(json!({
            "kind": "feedback",
            "controller": harmonic_controller_to_json(c),
        })),
        ControllerKind::Forwarding(f) => {
            let blocks: Vec<Value> = f
                .blocks
                .iter()
                .map(|b| {
                    json!({
                        "dim": b.dim,
                        "o": operator_to_json(&b.o_op),
                        "lc": operator_to_json(&b.lc_op),
                        "m": operator_to_json(&b.m_op),
                        "sylvester_residual": b.sylvester_residual,
                        "m_defect": b.m_defect,
                    })
                })
                .collect();
            Ok(json!({
                "kind": "forwarding",
                "controller": harmonic_controller_to_json(&f.base),
                "bank": blocks,
                "eta1": f.eta1,
                "eta2": f.eta2,
            }))
        }
        ControllerKind::OpenLoop { .. } => Err(Error::config(
            "open-loop playback is not an exportable controller",
        )),
    }
}

pub fn controller_from_json(v: &Value) -> Result<ControllerKind> {
    let kind = v["kind"]
        .as_str()
        .ok_or_else(|| Error::io("controller bundle needs kind"))?;
    let base = harmonic_controller_from_json(&v["controller"])?;
    match kind {
        "feedback" => Ok(ControllerKind::Feedback(base)),
        "forwarding" => {
            let blocks = v["bank"]
                .as_array()
                .ok_or_else(|| Error::io("forwarding bundle needs bank"))?
                .iter()
                .map(|bj| {
                    Ok(ForwardingBlock {
                        dim: bj["dim"]
                            .as_u64()
                            .ok_or_else(|| Error::io("bank block needs dim"))?
                            as usize,
                        o_op: operator_from_json(&bj["o"])?,
                        lc_op: operator_from_json(&bj["lc"])?,
                        m_op: operator_from_json(&bj["m"])?,
                        sylvester_residual: bj["sylvester_residual"].as_f64().unwrap_or(f64::NAN),
                        m_defect: bj["m_defect"].as_f64().unwrap_or(f64::NAN),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ControllerKind::Forwarding(ForwardingController {
                base,
                blocks,
                eta1: v["eta1"]
                    .as_f64()
                    .ok_or_else(|| Error::io("forwarding needs eta1"))?,
                eta2: v["eta2"]
                    .as_f64()
                    .ok_or_else(|| Error::io("forwarding needs eta2"))?,
            }))
        }
        other => Err(Error::io(format!("unknown controller kind {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// traces

/// Trace CSV columns: `t`, the state components (named `i, v_dc` for the
/// two-state rectifier), the control before and after saturation, then the
/// bank states.
pub fn write_trace_csv(path: &Path, trace: &SimTrace) -> Result<()> {
    let n = trace.dim_state();
    let b = trace.bank.first().map_or(0, |z| z.len());
    let mut out = String::from("t");
    if n == 2 {
        out.push_str(",i,v_dc");
    } else {
        for i in 0..n {
            let _ = write!(out, ",x{}", i + 1);
        }
    }
    out.push_str(",s_pre,s_post");
    for i in 0..b {
        let _ = write!(out, ",z{}", i + 1);
    }
    out.push('\n');
    for (j, &t) in trace.times.iter().enumerate() {
        out.push_str(&fmt_float(t)?);
        for i in 0..n {
            out.push(',');
            out.push_str(&fmt_float(trace.states[j][i])?);
        }
        out.push(',');
        out.push_str(&fmt_float(trace.s_pre[j])?);
        out.push(',');
        out.push_str(&fmt_float(trace.s_post[j])?);
        for i in 0..b {
            out.push(',');
            out.push_str(&fmt_float(trace.bank[j][i])?);
        }
        out.push('\n');
    }
    write_text_atomic(path, &out)
}

/// Reads a trace CSV back; the line input column is reconstructed as the
/// nominal sine wave, and no Lyapunov series is recovered.
pub fn read_trace_csv(path: &Path, period: f64, v_in_amplitude: f64) -> Result<SimTrace> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::io("empty trace file"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let s_pre_col = columns
        .iter()
        .position(|c| *c == "s_pre")
        .ok_or_else(|| Error::io("trace header lacks s_pre"))?;
    let n = s_pre_col - 1;

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut s_pre = Vec::new();
    let mut s_post = Vec::new();
    let mut bank = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::io(format!("bad number at line {}: {e}", lineno + 2)))
            })
            .collect::<Result<_>>()?;
        if fields.len() != columns.len() {
            return Err(Error::io(format!(
                "line {} column count mismatch",
                lineno + 2
            )));
        }
        times.push(fields[0]);
        states.push(RVec::from_vec(fields[1..1 + n].to_vec()));
        s_pre.push(fields[s_pre_col]);
        s_post.push(fields[s_pre_col + 1]);
        bank.push(RVec::from_vec(fields[s_pre_col + 2..].to_vec()));
    }
    if times.len() < 3 {
        return Err(Error::io("trace has fewer than 3 rows"));
    }
    let dt = times[1] - times[0];
    let steps_per_period = (period / dt).round() as usize;
    let omega = std::f64::consts::TAU / period;
    let w = times
        .iter()
        .map(|&t| v_in_amplitude * (omega * t).sin())
        .collect();
    Ok(SimTrace {
        period,
        steps_per_period,
        times,
        states,
        s_pre,
        s_post,
        bank,
        w,
        lyapunov: None,
        phasors: None,
    })
}

/// Canonical JSON rendering of any serializable report.
pub fn report_to_json<T: serde::Serialize>(report: &T) -> Result<Value> {
    serde_json::to_value(report).map_err(|e| Error::io(format!("report serialization: {e}")))
}

/// Shared helper for module summaries printed by front-ends.
pub fn object(entries: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in entries {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}
