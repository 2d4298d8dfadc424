//! Closed-loop step responses under `u = K_FF r - K_FB x` and their time-domain characteristics.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::statespace::StateSpace;
use crate::synthesis::TwoDofGains;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub reference: Vec<f64>,
    /// Set when the closed loop has an eigenvalue with nonnegative real part
    /// or the propagation produced non-finite values.
    pub diverged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn output_channel(&self, channel: usize) -> Vec<f64> {
        self.outputs.iter().map(|y| y[channel]).collect()
    }

    /// CSV with header `time,x1..xn,y1..yp,u1..um`, 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let (n, p, m) = (
            self.states.first().map_or(0, Vec::len),
            self.outputs.first().map_or(0, Vec::len),
            self.inputs.first().map_or(0, Vec::len),
        );
        let mut header = vec!["time".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=p).map(|i| format!("y{i}")));
        header.extend((1..=m).map(|i| format!("u{i}")));
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.len() {
            let row: Vec<String> = std::iter::once(&self.times[k])
                .chain(&self.states[k])
                .chain(&self.outputs[k])
                .chain(&self.inputs[k])
                .map(|&v| fmt_sig(v))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }
}

/// `%.12g`-style formatting.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let s = format!("{:.*}", (11 - exp).max(0) as usize, v);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.11e}");
        let (mantissa, e) = s.split_once('e').expect("exponent present");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{e}")
    }
}

/// Simulates `ẋ = (A - B K_FB) x + B K_FF r`, `y = (C - D K_FB) x + D K_FF r`
/// from `x(0) = 0`, propagated exactly with the exponential of the augmented
/// `(x, 1)` system.
pub fn step_response(sys: &StateSpace, gains: &TwoDofGains, r: &[f64], horizon: f64, dt: f64) -> Result<Trajectory> {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    if !(dt > 0.0) || !(horizon >= 10.0 * dt) {
        return Err(Error::InvalidInput(format!("need dt > 0 and horizon >= 10 dt, got dt = {dt}, horizon = {horizon}")));
    }
    if r.len() != gains.feedforward.ncols() {
        return Err(Error::Dimension(format!("{} references for {} feedforward columns", r.len(), gains.feedforward.ncols())));
    }
    let k = &gains.feedback;
    if k.shape() != (m, n) || gains.feedforward.nrows() != m {
        return Err(Error::Dimension("gain sizes do not match the system".into()));
    }
    let acl = sys.a() - sys.b() * k;
    let v = &gains.feedforward * Mat::from_column_slice(r.len(), 1, r);
    let bv = sys.b() * &v;

    let mut aug = Mat::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&acl * dt));
    aug.view_mut((0, n), (n, 1)).copy_from(&(&bv * dt));
    let phi_aug = aug.exp();
    let phi = phi_aug.view((0, 0), (n, n)).into_owned();
    let gamma = phi_aug.view((0, n), (n, 1)).into_owned();

    let c_cl = sys.c() - sys.d() * k;
    let dv = sys.d() * &v;
    let steps = (horizon / dt).round() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
        inputs: Vec::with_capacity(steps + 1),
        reference: r.to_vec(),
        diverged: linalg::eigenvalues(&acl).iter().any(|z| z.re >= 0.0),
    };
    let mut x = Mat::zeros(n, 1);
    for i in 0..=steps {
        let y = &c_cl * &x + &dv;
        let u = &v - k * &x;
        traj.times.push(i as f64 * dt);
        traj.states.push(x.iter().copied().collect());
        traj.outputs.push(y.iter().copied().collect());
        traj.inputs.push(u.iter().copied().collect());
        x = &phi * &x + &gamma;
    }
    debug_assert_eq!(traj.outputs[0].len(), p);
    if traj.states.iter().flatten().any(|v| !v.is_finite()) {
        traj.diverged = true;
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecOptions {
    /// Half-width of the settling band as a fraction of the final value.
    pub settling_band: f64,
    pub rise_low: f64,
    pub rise_high: f64,
    /// Fraction of trailing samples averaged for the final value.
    pub final_window: f64,
}

impl Default for SpecOptions {
    fn default() -> Self {
        Self { settling_band: 0.02, rise_low: 0.1, rise_high: 0.9, final_window: 0.02 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSpecs {
    pub percent_overshoot: Option<f64>,
    pub percent_undershoot: Option<f64>,
    pub settling_time: f64,
    pub rise_time: Option<f64>,
    pub final_value: f64,
    /// Percentages and bands use the reference magnitude because the final value is zero.
    pub relative_to_reference: bool,
}

pub fn time_specs(traj: &Trajectory, channel: usize, opts: &SpecOptions) -> Result<TimeSpecs> {
    if traj.len() < 2 {
        return Err(Error::InvalidInput("trajectory too short".into()));
    }
    if traj.outputs[0].len() <= channel {
        return Err(Error::Dimension(format!("no output channel {channel}")));
    }
    let y = traj.output_channel(channel);
    let t = &traj.times;
    let window = ((y.len() as f64 * opts.final_window).round() as usize).max(1);
    let y_f = y[y.len() - window..].iter().sum::<f64>() / window as f64;

    let reference = traj.reference.get(channel).copied().unwrap_or_else(|| {
        traj.reference.iter().fold(0.0f64, |a, r| a.max(r.abs()))
    });
    let tiny = 1e-9 * y.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let (scale, sign, relative_to_reference) = if y_f.abs() > tiny || reference == 0.0 {
        (y_f.abs(), y_f.signum(), false)
    } else {
        (reference.abs(), reference.signum(), true)
    };
    if scale == 0.0 {
        return Ok(TimeSpecs {
            percent_overshoot: None,
            percent_undershoot: None,
            settling_time: 0.0,
            rise_time: None,
            final_value: y_f,
            relative_to_reference,
        });
    }
    let presence = 1e-6 * scale;
    let over = peak(&y.iter().map(|v| sign * (v - y_f)).collect::<Vec<_>>());
    let under = peak(&y.iter().map(|v| -sign * v).collect::<Vec<_>>());
    let percent_overshoot = (over > presence).then(|| 100.0 * over / scale);
    let percent_undershoot = (under > presence).then(|| 100.0 * under / scale);

    let band = opts.settling_band * scale;
    let settling_time = match (0..y.len()).rev().find(|&k| (y[k] - y_f).abs() > band) {
        None => 0.0,
        Some(k) if k + 1 == y.len() => t[k],
        Some(k) => {
            let excess: Vec<f64> = y.iter().map(|v| (v - y_f).abs() - band).collect();
            crossing(t, &excess, k + 1)
        }
    };

    let level = |frac: f64| -> Option<f64> {
        let s: Vec<f64> = y.iter().map(|v| sign * v - frac * scale).collect();
        if s[0] >= 0.0 {
            return Some(t[0]);
        }
        (1..s.len()).find(|&k| s[k] >= 0.0).map(|k| crossing(t, &s, k))
    };
    let rise_time = match (level(opts.rise_low), level(opts.rise_high)) {
        (Some(lo), Some(hi)) => Some(hi - lo),
        _ => None,
    };

    Ok(TimeSpecs {
        percent_overshoot,
        percent_undershoot,
        settling_time,
        rise_time,
        final_value: y_f,
        relative_to_reference,
    })
}

/// Largest value of a sampled signal, refined by the parabola through the
/// largest sample and its neighbours.
fn peak(f: &[f64]) -> f64 {
    let k = (0..f.len()).max_by(|&i, &j| f[i].total_cmp(&f[j])).expect("non-empty");
    if k == 0 || k + 1 == f.len() {
        return f[k];
    }
    let (a, b, c) = (f[k - 1], f[k], f[k + 1]);
    let curvature = a - 2.0 * b + c;
    if curvature < 0.0 {
        b - (a - c).powi(2) / (8.0 * curvature)
    } else {
        b
    }
}

/// Zero of a sampled signal between samples `k - 1` and `k`, from the
/// quadratic through three neighbouring samples (linear with only two).
fn crossing(t: &[f64], f: &[f64], k: usize) -> f64 {
    let (t0, t1) = (t[k - 1], t[k]);
    let linear = if f[k] == f[k - 1] { t1 } else { t0 + (t1 - t0) * f[k - 1] / (f[k - 1] - f[k]) };
    let j = if k + 1 < t.len() {
        k + 1
    } else if k >= 2 {
        k - 2
    } else {
        return linear;
    };
    let nodes = [(t[k - 1], f[k - 1]), (t[k], f[k]), (t[j], f[j])];
    let eval = |x: f64| -> (f64, f64) {
        let mut value = 0.0;
        let mut slope = 0.0;
        for (i, &(ti, fi)) in nodes.iter().enumerate() {
            let others: Vec<f64> = nodes.iter().enumerate().filter(|&(m, _)| m != i).map(|(_, n)| n.0).collect();
            let denom = (ti - others[0]) * (ti - others[1]);
            value += fi * (x - others[0]) * (x - others[1]) / denom;
            slope += fi * ((x - others[0]) + (x - others[1])) / denom;
        }
        (value, slope)
    };
    let mut x = linear;
    for _ in 0..4 {
        let (v, d) = eval(x);
        if d == 0.0 {
            return linear;
        }
        x -= v / d;
    }
    if (t0..=t1).contains(&x) {
        x
    } else {
        linear
    }
}
