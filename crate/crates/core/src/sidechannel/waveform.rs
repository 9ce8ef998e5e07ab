//! Uniformly sampled complex field envelopes.
//!
//! A [`Waveform`] holds one pulse shape on a uniform time grid. All energies
//! and inner products use trapezoidal quadrature; amplitudes are in
//! normalized field units (the photon-to-field scaling constant cancels in
//! every observable computed here, so it is fixed to 1).

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::SideChannelError;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Resampling refuses to materialize grids beyond this many points.
const MAX_RESAMPLE_LEN: usize = 1 << 22;

/// One pulse envelope on a uniform grid: sample `k` sits at `t0 + k*dt`.
#[derive(Clone, Debug)]
pub struct Waveform {
    t0: f64,
    dt: f64,
    samples: Vec<Complex64>,
    /// Set when the waveform was reconstructed from an intensity-only trace
    /// (zero-phase amplitude estimate): such data cannot witness chirp.
    intensity_only: bool,
}

impl Waveform {
    pub fn new(t0: f64, dt: f64, samples: Vec<Complex64>) -> Result<Self, SideChannelError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SideChannelError::Invalid(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if samples.is_empty() {
            return Err(SideChannelError::Invalid("empty sample list".into()));
        }
        if !t0.is_finite() {
            return Err(SideChannelError::Invalid(format!(
                "non-finite start time {t0}"
            )));
        }
        if samples
            .iter()
            .any(|s| !s.re.is_finite() || !s.im.is_finite())
        {
            return Err(SideChannelError::Invalid("non-finite sample".into()));
        }
        Ok(Self {
            t0,
            dt,
            samples,
            intensity_only: false,
        })
    }

    /// Zero-phase amplitude estimate `sqrt(I(t))` of a measured intensity
    /// trace. The result is flagged so chirp comparisons can refuse it.
    pub fn from_intensity(t0: f64, dt: f64, intensity: &[f64]) -> Result<Self, SideChannelError> {
        let mut samples = Vec::with_capacity(intensity.len());
        for &v in intensity {
            if !v.is_finite() || v < 0.0 {
                return Err(SideChannelError::Invalid(format!(
                    "intensity sample {v} must be finite and nonnegative"
                )));
            }
            samples.push(Complex64::new(v.sqrt(), 0.0));
        }
        let mut w = Self::new(t0, dt, samples)?;
        w.intensity_only = true;
        Ok(w)
    }

    /// Gaussian amplitude envelope `exp(-(t-center)^2 / (2 std^2))`, sampled
    /// on `[center - half_width, center + half_width]`. Not normalized.
    pub fn gaussian(center: f64, amplitude_std: f64, dt: f64, half_width: f64) -> Self {
        Self::chirped_gaussian(center, amplitude_std, 0.0, dt, half_width)
    }

    /// Gaussian envelope with quadratic phase `exp(i chirp (t-center)^2)`.
    pub fn chirped_gaussian(
        center: f64,
        amplitude_std: f64,
        chirp: f64,
        dt: f64,
        half_width: f64,
    ) -> Self {
        assert!(amplitude_std > 0.0 && dt > 0.0 && half_width > 0.0);
        let n = (2.0 * half_width / dt).floor() as usize + 1;
        let t0 = center - half_width;
        let samples = (0..n)
            .map(|k| {
                let t = t0 + k as f64 * dt - center;
                let amp = (-t * t / (2.0 * amplitude_std * amplitude_std)).exp();
                amp * Complex64::new(0.0, chirp * t * t).exp()
            })
            .collect();
        Self {
            t0,
            dt,
            samples,
            intensity_only: false,
        }
    }

    /// Flat-top pulse of the given height over `[start, start + width]`.
    pub fn rectangular(start: f64, width: f64, height: f64, dt: f64) -> Self {
        assert!(width > 0.0 && dt > 0.0);
        let n = (width / dt).round() as usize + 1;
        let samples = vec![Complex64::new(height, 0.0); n];
        Self {
            t0: start,
            dt,
            samples,
            intensity_only: false,
        }
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.t0 + (self.samples.len() - 1) as f64 * self.dt
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn is_intensity_only(&self) -> bool {
        self.intensity_only
    }

    /// True when every sample is real and nonnegative (no phase structure).
    pub fn is_real_nonnegative(&self) -> bool {
        self.samples.iter().all(|s| s.im == 0.0 && s.re >= 0.0)
    }

    /// Pulse energy by trapezoidal quadrature of |amplitude|^2.
    pub fn energy(&self) -> f64 {
        trapezoid(self.dt, self.samples.iter().map(|s| s.norm_sqr()))
    }

    /// Scale so the energy integral is 1.
    pub fn normalize(&self) -> Result<Waveform, SideChannelError> {
        let e = self.energy();
        if !(e > 0.0) || !e.is_finite() {
            return Err(SideChannelError::ZeroEnergy);
        }
        let scale = 1.0 / e.sqrt();
        let mut out = self.clone();
        for s in &mut out.samples {
            *s *= scale;
        }
        Ok(out)
    }

    /// Same samples displaced in time by `delta` (positive = later).
    pub fn shifted_by(&self, delta: f64) -> Waveform {
        let mut out = self.clone();
        out.t0 += delta;
        out
    }

    /// Band-limited (Whittaker-Shannon) interpolation at an arbitrary time.
    /// Exact at grid points, zero-extended outside the sampled support in the
    /// sense that only sinc tails leak past the record edges.
    pub fn sample_at(&self, t: f64) -> Complex64 {
        let x = (t - self.t0) / self.dt;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &s) in self.samples.iter().enumerate() {
            acc += s * sinc(x - k as f64);
        }
        acc
    }

    /// Resample onto an explicit grid by band-limited interpolation.
    pub fn resampled(&self, t0: f64, dt: f64, n: usize) -> Result<Waveform, SideChannelError> {
        if self.samples.len() < 2 {
            return Err(SideChannelError::Format(
                "cannot resample a waveform with fewer than 2 samples".into(),
            ));
        }
        if n == 0 || n > MAX_RESAMPLE_LEN {
            return Err(SideChannelError::Format(format!(
                "resampled grid of {n} points is outside supported range"
            )));
        }
        let samples = (0..n).map(|k| self.sample_at(t0 + k as f64 * dt)).collect();
        let mut out = Waveform::new(t0, dt, samples)?;
        out.intensity_only = self.intensity_only;
        Ok(out)
    }

    /// Discrete Fourier transform, scaled as a Riemann approximation of the
    /// continuous transform so that energy is preserved (Parseval). The
    /// returned waveform's axis is ordinary frequency in Hz, centered on 0.
    pub fn spectrum(&self) -> Waveform {
        let n = self.samples.len();
        let mut buf = self.samples.clone();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);

        let dnu = 1.0 / (n as f64 * self.dt);
        let half = n / 2; // floor
        let start = n - half; // == ceil(n/2)
        let mut shifted = Vec::with_capacity(n);
        for i in 0..n {
            let k = (i + start) % n;
            // signed bin frequency for source index k
            let signed = if k < start {
                k as f64
            } else {
                k as f64 - n as f64
            };
            let nu = signed * dnu;
            // carry the start-time phase so the transform matches the
            // continuous-time definition, not just the sample window
            let phase = Complex64::new(0.0, -2.0 * PI * nu * self.t0).exp();
            shifted.push(buf[k] * self.dt * phase);
        }
        Waveform {
            t0: -(half as f64) * dnu,
            dt: dnu,
            samples: shifted,
            intensity_only: false,
        }
    }

    /// RMS width (second moment) of |amplitude|^2 around its centroid,
    /// in the units of this waveform's axis.
    pub fn rms_width(&self) -> f64 {
        let mut w0 = 0.0;
        let mut w1 = 0.0;
        let mut w2 = 0.0;
        for (k, s) in self.samples.iter().enumerate() {
            let t = self.time(k);
            let p = s.norm_sqr();
            w0 += p;
            w1 += p * t;
            w2 += p * t * t;
        }
        let mean = w1 / w0;
        (w2 / w0 - mean * mean).max(0.0).sqrt()
    }

    /// Coherence length estimate `c / delta_nu` from a spectrum, where
    /// `delta_nu` is the RMS width of the spectral intensity in Hz.
    pub fn coherence_length_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.rms_width()
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

fn trapezoid(dt: f64, values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for v in values {
        if first.is_none() {
            first = Some(v);
        }
        sum += v;
        last = v;
    }
    let first = first.unwrap_or(0.0);
    dt * (sum - 0.5 * (first + last))
}

/// Trapezoidal inner product `integral conj(a) * b dt` for waveforms already
/// on the same grid.
pub(crate) fn inner_product_same_grid(a: &Waveform, b: &Waveform) -> Complex64 {
    debug_assert_eq!(a.samples.len(), b.samples.len());
    let n = a.samples.len();
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        sum += a.samples[k].conj() * b.samples[k];
    }
    let edge = a.samples[0].conj() * b.samples[0] + a.samples[n - 1].conj() * b.samples[n - 1];
    a.dt * (sum - 0.5 * edge)
}

/// Bring two waveforms onto a shared grid covering the union of their
/// supports. Identical grids pass through untouched; otherwise both are
/// band-limited-resampled onto the finer spacing.
pub(crate) fn align(a: &Waveform, b: &Waveform) -> Result<(Waveform, Waveform), SideChannelError> {
    if a.t0 == b.t0 && a.dt == b.dt && a.samples.len() == b.samples.len() {
        return Ok((a.clone(), b.clone()));
    }
    let dt = a.dt.min(b.dt);
    let t_start = a.t0.min(b.t0);
    let t_end = a.end_time().max(b.end_time());
    let n = ((t_end - t_start) / dt).round() as i64 + 1;
    if n < 1 || n as usize > MAX_RESAMPLE_LEN {
        return Err(SideChannelError::Format(format!(
            "aligned grid of {n} points exceeds resampling capability"
        )));
    }
    Ok((
        a.resampled(t_start, dt, n as usize)?,
        b.resampled(t_start, dt, n as usize)?,
    ))
}

/// Read a waveform from CSV: a header line, then either `time_s,re,im` or
/// `time_s,intensity` rows (detected by column count).
pub fn read_waveform_csv(path: &Path) -> Result<Waveform, SideChannelError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| SideChannelError::Csv {
        file: name.clone(),
        line: 0,
        msg: e.to_string(),
    })?;
    parse_waveform_csv(&text, &name)
}

pub fn parse_waveform_csv(text: &str, file: &str) -> Result<Waveform, SideChannelError> {
    let err = |line: usize, msg: String| SideChannelError::Csv {
        file: file.to_string(),
        line,
        msg,
    };

    let mut times = Vec::new();
    let mut cols: Option<usize> = None;
    let mut re = Vec::new();
    let mut im = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            seen_header = true; // first non-comment line is the header
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let ncols = fields.len();
        if ncols != 2 && ncols != 3 {
            return Err(err(
                line_no,
                format!("expected 2 or 3 columns, found {ncols}"),
            ));
        }
        match cols {
            None => cols = Some(ncols),
            Some(c) if c != ncols => {
                return Err(err(
                    line_no,
                    format!("inconsistent column count: {ncols} after {c}"),
                ));
            }
            _ => {}
        }
        let parse = |s: &str| -> Result<f64, SideChannelError> {
            s.parse::<f64>()
                .map_err(|_| err(line_no, format!("not a number: '{s}'")))
        };
        times.push(parse(fields[0])?);
        re.push(parse(fields[1])?);
        im.push(if ncols == 3 { parse(fields[2])? } else { 0.0 });
    }
    if times.len() < 2 {
        return Err(err(
            0,
            format!("need at least 2 samples, found {}", times.len()),
        ));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(err(3, "time axis must be strictly increasing".into()));
    }
    for (k, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (step - dt).abs() > 1e-6 * dt.abs() {
            return Err(err(
                k + 3,
                format!("non-uniform time step {step} (expected {dt})"),
            ));
        }
    }
    if cols == Some(2) {
        Waveform::from_intensity(times[0], dt, &re)
    } else {
        let samples = re
            .iter()
            .zip(&im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        Waveform::new(times[0], dt, samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FWHM_PS: f64 = 400e-12;

    fn unit_gaussian(std: f64) -> Waveform {
        Waveform::gaussian(0.0, std, std / 16.0, 8.0 * std)
            .normalize()
            .unwrap()
    }

    #[test]
    fn normalize_is_idempotent_and_scale_invariant() {
        let g = unit_gaussian(1e-10);
        assert!((g.energy() - 1.0).abs() < 1e-12);
        let peak = g.samples().iter().map(|s| s.norm()).fold(0.0, f64::max);
        let again = g.normalize().unwrap();
        for (a, b) in g.samples().iter().zip(again.samples()) {
            assert!((a - b).norm() < 1e-12 * peak);
        }
        // scaling the input by 3 changes nothing after normalization
        let mut scaled = g.clone();
        for s in &mut scaled.samples {
            *s *= 3.0;
        }
        let renorm = scaled.normalize().unwrap();
        for (a, b) in g.samples().iter().zip(renorm.samples()) {
            assert!((a - b).norm() < 1e-12 * peak);
        }
    }

    #[test]
    fn normalize_rectangular_height() {
        // height-1 rectangle of width 400 ps scales to 1/sqrt(4e-10)
        let dt = 1e-12;
        let r = Waveform::rectangular(0.0, FWHM_PS, 1.0, dt);
        let n = r.normalize().unwrap();
        let expect = 1.0 / FWHM_PS.sqrt();
        assert!(
            (n.samples()[n.len() / 2].re - expect).abs() / expect < 1e-9,
            "got {} want {expect}",
            n.samples()[n.len() / 2].re
        );
    }

    #[test]
    fn normalize_rejects_zero_energy() {
        let w = Waveform::new(0.0, 1e-12, vec![Complex64::new(0.0, 0.0); 8]).unwrap();
        assert!(matches!(w.normalize(), Err(SideChannelError::ZeroEnergy)));
    }

    #[test]
    fn spectrum_preserves_energy() {
        let g = unit_gaussian(2e-10);
        let s = g.spectrum();
        assert!(
            (g.energy() - s.energy()).abs() < 1e-9,
            "time {} freq {}",
            g.energy(),
            s.energy()
        );
    }

    #[test]
    fn spectrum_of_gaussian_is_gaussian_with_reciprocal_width() {
        // amplitude std tau in time -> amplitude std 1/tau in angular
        // frequency, i.e. intensity RMS width 1/(2 pi tau sqrt(2)) in Hz;
        // the time-domain intensity RMS width is tau/sqrt(2).
        let tau = 1.5e-10;
        let g = unit_gaussian(tau);
        let time_rms = g.rms_width();
        assert!((time_rms - tau / 2f64.sqrt()).abs() / (tau / 2f64.sqrt()) < 1e-6);
        let s = g.spectrum();
        let nu_rms = s.rms_width();
        let expect = 1.0 / (2.0 * PI * tau * 2f64.sqrt());
        assert!(
            (nu_rms - expect).abs() / expect < 1e-6,
            "spectral rms {nu_rms} expected {expect}"
        );
    }

    #[test]
    fn resampling_is_band_limited_exact_on_grid_points() {
        let g = unit_gaussian(1e-10);
        let r = g.resampled(g.t0(), g.dt(), g.len()).unwrap();
        for (a, b) in g.samples().iter().zip(r.samples()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn intensity_input_flagged_and_nonnegative() {
        let w = Waveform::from_intensity(0.0, 1e-12, &[0.0, 1.0, 4.0, 1.0, 0.0]).unwrap();
        assert!(w.is_intensity_only());
        assert!(w.is_real_nonnegative());
        assert!((w.samples()[2].re - 2.0).abs() < 1e-15);
        assert!(Waveform::from_intensity(0.0, 1e-12, &[1.0, -0.5]).is_err());
    }

    #[test]
    fn csv_three_column_roundtrip() {
        let text = "time_s,re,im\n0.0,1.0,0.5\n1e-12,2.0,0.0\n2e-12,1.0,-0.5\n";
        let w = parse_waveform_csv(text, "mem").unwrap();
        assert_eq!(w.len(), 3);
        assert!(!w.is_intensity_only());
        assert_eq!(w.samples()[0], Complex64::new(1.0, 0.5));
        assert!((w.dt() - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn csv_two_column_is_intensity() {
        let text = "time_s,intensity\n0.0,1.0\n1e-12,4.0\n2e-12,1.0\n";
        let w = parse_waveform_csv(text, "mem").unwrap();
        assert!(w.is_intensity_only());
        assert!((w.samples()[1].re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let text = "time_s,re,im\n0.0,1.0,0.0\nnope,2.0,0.0\n";
        match parse_waveform_csv(text, "bad.csv") {
            Err(SideChannelError::Csv { file, line, .. }) => {
                assert_eq!(file, "bad.csv");
                assert_eq!(line, 3);
            }
            other => panic!("expected csv error, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_non_uniform_grid() {
        let text = "t,i\n0.0,1.0\n1e-12,1.0\n5e-12,1.0\n";
        assert!(matches!(
            parse_waveform_csv(text, "m"),
            Err(SideChannelError::Csv { .. })
        ));
    }

    #[test]
    fn coherence_length_closed_form() {
        // spectral intensity RMS of an amplitude-std-tau Gaussian is
        // 1/(2 pi tau sqrt(2)) Hz, so L = c / delta_nu = 2 pi sqrt(2) tau c
        let tau = 1e-10;
        let l = unit_gaussian(tau).spectrum().coherence_length_m();
        let expect = 2.0 * PI * 2f64.sqrt() * tau * SPEED_OF_LIGHT;
        assert!((l - expect).abs() / expect < 1e-6, "{l} vs {expect}");
    }

    #[test]
    fn coherence_length_scale() {
        // narrower spectrum -> longer coherence length
        let broad = unit_gaussian(1e-10).spectrum();
        let narrow = unit_gaussian(4e-10).spectrum();
        assert!(narrow.coherence_length_m() > broad.coherence_length_m());
    }
}
