//! RIS-assisted backhaul: line-of-sight channel synthesis for uniform linear
//! arrays, the cascaded donor-RIS-child channel, joint active (donor MRT) and
//! passive (RIS phase) beamforming, and the network-controlled repeater used
//! as an amplify-and-forward alternative.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{db_to_linear, linear_to_db};
use crate::error::{Error, Result};
use crate::geometry::Point;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Dense row-major complex matrix with checked products.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::invalid("matrix", "entries must be finite"));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        ComplexMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn row_vector(entries: Vec<Complex64>) -> Result<Self> {
        ComplexMatrix::new(1, entries.len(), entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `self * x` for a column vector `x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.cols != x.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum()
    }

    /// Projects the rows onto the unit vector `combiner` (receive combining).
    pub fn combine_rows(&self, combiner: &[Complex64]) -> Result<Vec<Complex64>> {
        if combiner.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "combiner of length {} for {} rows",
                combiner.len(),
                self.rows
            )));
        }
        Ok((0..self.cols)
            .map(|c| (0..self.rows).map(|r| combiner[r].conj() * self.get(r, c)).sum())
            .collect())
    }

    fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.norm_sqr() == 0.0)
    }
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// Uniform linear array response along the world x-axis, unit-modulus entries.
pub fn ula_steering(elements: usize, spacing_wavelengths: f64, bearing: f64) -> Vec<Complex64> {
    let step = 2.0 * PI * spacing_wavelengths * bearing.cos();
    (0..elements).map(|m| Complex64::from_polar(1.0, step * m as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RisPanel {
    pub position: Point,
    pub elements: usize,
    /// Element pitch in wavelengths.
    pub element_spacing: f64,
}

impl RisPanel {
    pub fn new(position: Point, elements: usize, element_spacing: f64) -> Result<Self> {
        if elements == 0 {
            return Err(Error::invalid("ris.elements", "must be >= 1"));
        }
        if !(element_spacing.is_finite() && element_spacing > 0.0) {
            return Err(Error::invalid("ris.element_spacing", format!("must be > 0, got {element_spacing}")));
        }
        Ok(RisPanel {
            position,
            elements,
            element_spacing,
        })
    }
}

/// Rank-one LoS channel `sqrt(g) e^{-j k d} a_rx a_tx^H` of shape `rx_elements x tx_elements`,
/// with half-wavelength arrays at both ends and `g` the linear large-scale gain.
pub fn synthesize_los_channel(
    tx_position: Point,
    rx_position: Point,
    tx_elements: usize,
    rx_elements: usize,
    frequency_ghz: f64,
    large_scale_loss_db: f64,
) -> Result<ComplexMatrix> {
    synthesize_los_channel_with_spacing(
        tx_position,
        rx_position,
        (tx_elements, 0.5),
        (rx_elements, 0.5),
        frequency_ghz,
        large_scale_loss_db,
    )
}

/// As [`synthesize_los_channel`] with explicit `(elements, spacing in wavelengths)` per end.
pub fn synthesize_los_channel_with_spacing(
    tx_position: Point,
    rx_position: Point,
    (tx_elements, tx_spacing): (usize, f64),
    (rx_elements, rx_spacing): (usize, f64),
    frequency_ghz: f64,
    large_scale_loss_db: f64,
) -> Result<ComplexMatrix> {
    if tx_elements == 0 || rx_elements == 0 {
        return Err(Error::invalid("elements", "element counts must be >= 1"));
    }
    let distance = tx_position.distance(&rx_position);
    if distance == 0.0 {
        return Err(Error::CoincidentPositions(format!(
            "transmitter and receiver both at ({}, {})",
            tx_position.x, tx_position.y
        )));
    }
    let wavelength = SPEED_OF_LIGHT / (frequency_ghz * 1e9);
    let amplitude = db_to_linear(-large_scale_loss_db).sqrt();
    let carrier = Complex64::from_polar(amplitude, -2.0 * PI * distance / wavelength);
    let departure = tx_position.bearing_to(&rx_position);
    let arrival = rx_position.bearing_to(&tx_position);
    let a_tx = ula_steering(tx_elements, tx_spacing, departure);
    let a_rx = ula_steering(rx_elements, rx_spacing, arrival);

    let mut data = Vec::with_capacity(rx_elements * tx_elements);
    for r in &a_rx {
        for t in &a_tx {
            data.push(carrier * r * t.conj());
        }
    }
    ComplexMatrix::new(rx_elements, tx_elements, data)
}

/// RIS phase shifts; the reflection matrix is `diag(e^{j phase_m})`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    phases: Vec<f64>,
}

impl PhaseConfig {
    /// Wraps each phase into `[0, 2 pi)`.
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("phases", "must be finite"));
        }
        Ok(PhaseConfig {
            phases: phases.into_iter().map(wrap_phase).collect(),
        })
    }

    pub fn zeros(elements: usize) -> Self {
        PhaseConfig {
            phases: vec![0.0; elements],
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn reflection_coefficients(&self) -> Vec<Complex64> {
        self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect()
    }

    /// Adds `offset` to every phase.
    pub fn rotated(&self, offset: f64) -> Self {
        PhaseConfig {
            phases: self.phases.iter().map(|p| wrap_phase(p + offset)).collect(),
        }
    }
}

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    // rem_euclid can round up to exactly 2 pi for tiny negative inputs.
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// `g_ru diag(e^{j w}) g_br`, a `1 x N` row.
pub fn cascaded_channel(g_ru: &[Complex64], phases: &PhaseConfig, g_br: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let m = g_ru.len();
    if phases.len() != m || g_br.rows() != m {
        return Err(Error::DimensionMismatch(format!(
            "g_ru has {m} elements, phases {}, g_br {} rows",
            phases.len(),
            g_br.rows()
        )));
    }
    let reflect = phases.reflection_coefficients();
    let mut out = vec![Complex64::new(0.0, 0.0); g_br.cols()];
    for (idx, (a, r)) in g_ru.iter().zip(&reflect).enumerate() {
        let weight = a * r;
        for (o, b) in out.iter_mut().zip(g_br.row(idx)) {
            *o += weight * b;
        }
    }
    Ok(out)
}

/// `|g_ru diag(e^{j w}) g_br w|^2`.
pub fn effective_gain(g_ru: &[Complex64], phases: &PhaseConfig, g_br: &ComplexMatrix, beamformer: &[Complex64]) -> Result<f64> {
    let g_c = cascaded_channel(g_ru, phases, g_br)?;
    if g_c.len() != beamformer.len() {
        return Err(Error::DimensionMismatch(format!(
            "beamformer of length {} for {} transmit antennas",
            beamformer.len(),
            g_c.len()
        )));
    }
    Ok(g_c.iter().zip(beamformer).map(|(a, b)| a * b).sum::<Complex64>().norm_sqr())
}

/// Upper bound `(sum_m |g_ru[m]| * ||row_m(g_br)||)^2` on the effective gain.
pub fn gain_upper_bound(g_ru: &[Complex64], g_br: &ComplexMatrix) -> f64 {
    (0..g_br.rows())
        .map(|m| g_ru[m].norm() * vec_norm(g_br.row(m)))
        .sum::<f64>()
        .powi(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisSolution {
    pub phases: PhaseConfig,
    /// Unit-norm donor beamformer.
    pub beamformer: Vec<Complex64>,
    pub gain: f64,
    pub iterations: usize,
    /// Objective after every half-step (phase update, then beamformer update).
    pub history: Vec<f64>,
}

/// Alternating maximization of `|g_ru diag(e^{j w}) g_br w|^2` over the RIS
/// phases and a unit-norm donor beamformer.
///
/// With the beamformer fixed, each phase co-phases its element's contribution
/// (`w_m = -arg(g_ru[m] [g_br w]_m)`); with the phases fixed, the beamformer is
/// maximum-ratio transmission on the cascaded channel. Both steps are exact
/// maximizers of their block, so the objective never decreases.
pub fn optimize_ris(g_br: &ComplexMatrix, g_ru: &[Complex64], tolerance: f64, max_iterations: usize) -> Result<RisSolution> {
    let m = g_ru.len();
    let n = g_br.cols();
    if g_br.rows() != m {
        return Err(Error::DimensionMismatch(format!(
            "g_ru has {m} elements but g_br has {} rows",
            g_br.rows()
        )));
    }
    if m == 0 || n == 0 {
        return Err(Error::DimensionMismatch("empty channel".into()));
    }
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::invalid("tolerance", format!("must be > 0, got {tolerance}")));
    }
    if max_iterations == 0 {
        return Err(Error::invalid("max_iterations", "must be >= 1"));
    }

    // Per-element weighted channel: row m is g_ru[m] * row_m(g_br).
    let mut weighted = g_br.clone();
    for (r, a) in g_ru.iter().enumerate() {
        for c in 0..n {
            weighted.data[r * n + c] *= a;
        }
    }
    let mut unit = vec![Complex64::new(0.0, 0.0); n];
    unit[0] = Complex64::new(1.0, 0.0);
    if weighted.is_zero() {
        return Ok(RisSolution {
            phases: PhaseConfig::zeros(m),
            beamformer: unit,
            gain: 0.0,
            iterations: 0,
            history: vec![0.0],
        });
    }

    let mut w = dominant_right_singular_vector(&weighted);
    let mut phases = PhaseConfig::zeros(m);
    let mut history = Vec::with_capacity(2 * max_iterations);
    let mut previous = effective_gain(g_ru, &phases, g_br, &w)?;
    history.push(previous);
    let mut iterations = 0;

    while iterations < max_iterations {
        iterations += 1;

        let per_element = weighted.mul_vec(&w)?;
        phases = PhaseConfig::new(per_element.iter().map(|v| -v.arg()).collect())?;
        let aligned: f64 = per_element.iter().map(|v| v.norm()).sum();
        history.push(aligned * aligned);

        let g_c = cascaded_channel(g_ru, &phases, g_br)?;
        let norm = vec_norm(&g_c);
        if norm > 0.0 {
            w = g_c.iter().map(|z| z.conj() / norm).collect();
        }
        let gain = norm * norm;
        history.push(gain);

        let converged = (gain - previous).abs() <= tolerance * previous.abs().max(f64::MIN_POSITIVE);
        previous = gain;
        if converged {
            break;
        }
    }

    let gain = effective_gain(g_ru, &phases, g_br, &w)?;
    Ok(RisSolution {
        phases,
        beamformer: w,
        gain,
        iterations,
        history,
    })
}

/// Principal right singular vector by power iteration on `A^H A`.
fn dominant_right_singular_vector(a: &ComplexMatrix) -> Vec<Complex64> {
    let n = a.cols();
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        let av = a.mul_vec(v).expect("dimensions checked");
        (0..n)
            .map(|c| (0..a.rows()).map(|r| a.get(r, c).conj() * av[r]).sum())
            .collect()
    };
    let start = |k: usize| -> Vec<Complex64> {
        // All-ones first, then canonical basis vectors if it is annihilated.
        if k == 0 {
            vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n]
        } else {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[k - 1] = Complex64::new(1.0, 0.0);
            e
        }
    };
    for k in 0..=n {
        let mut v = start(k);
        let mut next = apply(&v);
        if vec_norm(&next) == 0.0 {
            continue;
        }
        for _ in 0..200 {
            let norm = vec_norm(&next);
            let candidate: Vec<Complex64> = next.iter().map(|z| z / norm).collect();
            let moved = candidate
                .iter()
                .zip(&v)
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>();
            v = candidate;
            if moved < 1e-24 {
                break;
            }
            next = apply(&v);
        }
        return v;
    }
    start(1)
}

/// Backhaul rate `bandwidth * log2(1 + P * gain / sigma^2)` in bit/s.
pub fn ris_backhaul_rate(p_tx_dbm: f64, gain: f64, noise_power_dbm: f64, bandwidth_hz: f64) -> f64 {
    if bandwidth_hz <= 0.0 || gain <= 0.0 {
        return 0.0;
    }
    let snr = db_to_linear(p_tx_dbm) * gain / db_to_linear(noise_power_dbm);
    bandwidth_hz * (1.0 + snr).log2()
}

/// Amplify-and-forward network-controlled repeater.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcrConfig {
    pub position: Point,
    pub amp_gain_db: f64,
    pub max_output_dbm: f64,
    /// Gain of the repeater's donor-facing and child-facing antennas.
    pub antenna_gain_db: f64,
}

impl NcrConfig {
    pub fn new(position: Point, amp_gain_db: f64, max_output_dbm: f64, antenna_gain_db: f64) -> Result<Self> {
        if !(amp_gain_db.is_finite() && amp_gain_db >= 0.0) {
            return Err(Error::invalid("ncr.amp_gain_db", format!("must be >= 0, got {amp_gain_db}")));
        }
        if !max_output_dbm.is_finite() {
            return Err(Error::invalid("ncr.max_output_dbm", "must be finite"));
        }
        if !antenna_gain_db.is_finite() {
            return Err(Error::invalid("ncr.antenna_gain_db", "must be finite"));
        }
        Ok(NcrConfig {
            position,
            amp_gain_db,
            max_output_dbm,
            antenna_gain_db,
        })
    }
}

/// Output power `min(p_in + gain, max_output)`.
pub fn ncr_forward(p_in_dbm: f64, config: &NcrConfig) -> f64 {
    (p_in_dbm + config.amp_gain_db).min(config.max_output_dbm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcrOutput {
    pub signal_dbm: f64,
    pub noise_dbm: f64,
    /// Gain actually applied after the output clamp.
    pub effective_gain_db: f64,
}

/// Forwards signal and input noise through the same (possibly clamped) gain.
pub fn ncr_forward_with_noise(signal_in_dbm: f64, noise_in_dbm: f64, config: &NcrConfig) -> NcrOutput {
    let signal_dbm = ncr_forward(signal_in_dbm, config);
    let effective_gain_db = if signal_in_dbm.is_finite() {
        signal_dbm - signal_in_dbm
    } else {
        config.amp_gain_db
    };
    NcrOutput {
        signal_dbm,
        noise_dbm: noise_in_dbm + effective_gain_db,
        effective_gain_db,
    }
}

/// SNR at the child of an NCR hop: forwarded signal over forwarded plus local noise.
pub fn ncr_end_to_end_snr(output: &NcrOutput, hop2_gain_db: f64, local_noise_dbm: f64) -> f64 {
    let signal = db_to_linear(output.signal_dbm + hop2_gain_db);
    let noise = db_to_linear(output.noise_dbm + hop2_gain_db) + db_to_linear(local_noise_dbm);
    signal / noise
}

pub fn snr_db(snr: f64) -> f64 {
    linear_to_db(snr)
}
