//! Spectral synthesis of photon wave packets.
//!
//! A packet is the superposition `Ψ(x,t) = Σ_j δν c_j φ_j(x) e^{-i2πν_j t}`
//! of scattering states on a uniform frequency grid. Each [`PulseInjection`]
//! contributes a scaled, delayed and launched copy of a [`SpectralEnvelope`].

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::media::{LayerStack, RegionSpec};
use crate::quadrature::Quadrature;
use crate::scatter::{Incidence, ModeSolution, Zones};
use crate::{Error, Result};

/// Spatial nodes handled per parallel work item in streamed reductions.
pub(crate) const CHUNK: usize = 32;

/// Largest transform length used by the FFT time-series path.
const MAX_FFT_LEN: usize = 1 << 24;

/// Uniform grid of frequencies (units of ω0) on `[omega0 - Δ, omega0 + Δ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omega0: f64,
    half_width: f64,
    samples: Vec<f64>,
    step: f64,
}

impl FrequencyGrid {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Spacing δν in units of ω0.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Period 1/δν (in τ0) of the discretised synthesis.
    pub fn window(&self) -> f64 {
        1.0 / self.step
    }

    fn bitwise_eq(&self, other: &FrequencyGrid) -> bool {
        self.samples.len() == other.samples.len()
            && self
                .samples
                .iter()
                .zip(&other.samples)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Builds the grid and checks that its period exceeds `2 t_max`.
///
/// On failure the error carries the smallest admissible `n_samples`.
pub fn make_frequency_grid(omega0: f64, d_omega_r: f64, n_samples: usize, t_max: f64) -> Result<FrequencyGrid> {
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::Domain(format!("omega0 must be positive, got {omega0}")));
    }
    if !(d_omega_r > 0.0 && d_omega_r < omega0) {
        return Err(Error::Domain(format!(
            "bandwidth must satisfy 0 < d_omega_r < omega0, got {d_omega_r}"
        )));
    }
    if n_samples < 2 {
        return Err(Error::Domain(format!("need at least 2 frequency samples, got {n_samples}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
    }
    let span = (n_samples - 1) as f64;
    let step = 2.0 * d_omega_r / span;
    let window = 1.0 / step;
    if window <= 2.0 * t_max {
        let minimal = (4.0 * d_omega_r * t_max).floor() as usize + 2;
        return Err(Error::Resolution {
            message: format!(
                "frequency grid of {n_samples} samples repeats every {window} tau0, \
                 which does not exceed 2 * t_max = {}; use at least {minimal} samples",
                2.0 * t_max
            ),
            minimal: Some(minimal),
        });
    }
    let samples = (0..n_samples)
        .map(|j| omega0 + d_omega_r * (2.0 * j as f64 - span) / span)
        .collect();
    Ok(FrequencyGrid {
        omega0,
        half_width: d_omega_r,
        samples,
        step,
    })
}

/// Complex spectral amplitude sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEnvelope {
    grid: FrequencyGrid,
    alpha: Vec<C64>,
    t0: Option<f64>,
    d_omega_r: f64,
}

impl SpectralEnvelope {
    /// Arbitrary samples. The pulse duration is unknown, so launch positions
    /// of injections built from it are not checked.
    pub fn from_samples(grid: FrequencyGrid, alpha: Vec<C64>) -> Result<Self> {
        if alpha.len() != grid.len() {
            return Err(Error::IncompatibleGrid(format!(
                "{} amplitudes for {} frequency samples",
                alpha.len(),
                grid.len()
            )));
        }
        let d_omega_r = grid.half_width;
        Ok(Self {
            grid,
            alpha,
            t0: None,
            d_omega_r,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn alpha(&self) -> &[C64] {
        &self.alpha
    }

    pub fn omega0(&self) -> f64 {
        self.grid.omega0
    }

    /// Half-duration of the underlying rectangular pulse, in τ0.
    pub fn t0(&self) -> Option<f64> {
        self.t0
    }

    pub fn d_omega_r(&self) -> f64 {
        self.d_omega_r
    }

    /// Smoothing time τ_r = 2π/Δω_r, in τ0.
    pub fn smoothing_time(&self) -> f64 {
        1.0 / self.d_omega_r
    }

    /// Half-width in τ0 (equivalently λ0) of the region holding the packet's
    /// energy: the rectangle broadened by the smoothing time.
    pub fn support_half_width(&self) -> Option<f64> {
        self.t0.map(|t0| t0 + self.smoothing_time())
    }
}

/// Rectangular pulse of duration `2 T0` (T0 in τ0) with a sinc spectrum,
/// smoothed by a raised cosine that vanishes at `|ν - ν0| = Δω_r`.
pub fn smoothed_rect_spectrum(grid: &FrequencyGrid, omega0: f64, t0: f64, d_omega_r: f64) -> Result<SpectralEnvelope> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::Domain(format!("T0 must be positive, got {t0}")));
    }
    if !(d_omega_r > 0.0 && d_omega_r.is_finite()) {
        return Err(Error::Domain(format!("d_omega_r must be positive, got {d_omega_r}")));
    }
    let alpha = grid
        .samples
        .iter()
        .map(|&nu| {
            let d = nu - omega0;
            if d.abs() >= d_omega_r {
                return C64::new(0.0, 0.0);
            }
            let arg = 2.0 * PI * d * t0;
            let sinc = if arg == 0.0 { 1.0 } else { arg.sin() / arg };
            C64::new((1.0 + (PI * d / d_omega_r).cos()) * sinc, 0.0)
        })
        .collect();
    Ok(SpectralEnvelope {
        grid: grid.clone(),
        alpha,
        t0: Some(t0),
        d_omega_r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    LeftIncident,
    RightIncident,
}

impl Direction {
    pub fn incidence(self) -> Incidence {
        match self {
            Direction::LeftIncident => Incidence::Left,
            Direction::RightIncident => Incidence::Right,
        }
    }

    /// `+1` for packets moving towards `+x`.
    pub fn sign(self) -> f64 {
        match self {
            Direction::LeftIncident => 1.0,
            Direction::RightIncident => -1.0,
        }
    }
}

/// One copy of an envelope: complex scale, delay (τ0), direction and the
/// position `center0` (λ0) its free-space center occupies at `t = delay`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseInjection {
    pub envelope: Arc<SpectralEnvelope>,
    pub scale: C64,
    pub delay: f64,
    pub direction: Direction,
    pub center0: f64,
}

pub fn apply_injection(
    envelope: &SpectralEnvelope,
    scale: C64,
    delay: f64,
    direction: Direction,
    center0: f64,
) -> PulseInjection {
    PulseInjection {
        envelope: Arc::new(envelope.clone()),
        scale,
        delay,
        direction,
        center0,
    }
}

impl PulseInjection {
    /// Unit-scale, undelayed, left-incident pulse centered at `center0` at `t = 0`.
    pub fn lead(envelope: SpectralEnvelope, center0: f64) -> Self {
        Self {
            envelope: Arc::new(envelope),
            scale: C64::new(1.0, 0.0),
            delay: 0.0,
            direction: Direction::LeftIncident,
            center0,
        }
    }

    /// Same envelope, direction and launch position with a new scale and delay.
    pub fn with_transform(&self, scale: C64, delay: f64) -> Self {
        Self {
            scale,
            delay,
            ..self.clone()
        }
    }

    /// `scale α_j e^{i2πν delay} e^{∓i2πν center0}`.
    pub fn effective_amplitude(&self, j: usize) -> C64 {
        let nu = self.envelope.grid.samples[j];
        let phase = 2.0 * PI * nu * (self.delay - self.direction.sign() * self.center0);
        self.scale * self.envelope.alpha[j] * C64::cis(phase)
    }

    /// Free-space center position at time `t`.
    pub fn center_at(&self, t: f64) -> f64 {
        self.center0 + self.direction.sign() * (t - self.delay)
    }

    /// Interval holding the free-space packet at time `t`, if the envelope
    /// has a known duration.
    pub fn support_at(&self, t: f64) -> Option<(f64, f64)> {
        let hw = self.envelope.support_half_width()?;
        let c = self.center_at(t);
        Some((c - hw, c + hw))
    }
}

/// Uniform time samples `start + i step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !start.is_finite() || len == 0 {
            return Err(Error::Domain(format!(
                "time grid needs finite start, positive step and len >= 1 (start {start}, step {step}, len {len})"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// Samples `0, step, ..` up to and including `t_max` (rounded to the grid).
    pub fn span(t_max: f64, step: f64) -> Result<Self> {
        Self::new(0.0, step, (t_max / step).round() as usize + 1)
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }

    /// Index of the sample equal to `t` within a millionth of a step.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let u = (t - self.start) / self.step;
        let i = u.round();
        ((u - i).abs() < 1e-6 && i >= 0.0 && (i as usize) < self.len).then_some(i as usize)
    }
}

/// How the synthesized field is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// The first injection alone carries unit energy; the others keep their
    /// scale relative to it.
    Lead,
    /// The whole injection set carries unit energy.
    Total,
}

/// Precomputed per-frequency coefficients of a packet on a stack.
///
/// In zone `z` the field at frequency `j` is `P e^{ikn(x - x_ref)} + M e^{-ikn(x - x_ref)}`
/// with the quadrature weight and normalization already included.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    stack: LayerStack,
    zones: Zones,
    nu: Vec<f64>,
    step: f64,
    coef: Vec<Vec<[C64; 2]>>,
}

impl Synthesizer {
    pub fn new(stack: &LayerStack, injections: &[PulseInjection], normalization: Normalization) -> Result<Self> {
        check_injections(stack, injections, None)?;
        let grid = &injections[0].envelope.grid;
        let n = grid.len();
        let eff: Vec<Vec<C64>> = injections
            .iter()
            .map(|inj| (0..n).map(|j| inj.effective_amplitude(j)).collect())
            .collect();
        let energy = match normalization {
            Normalization::Lead => eff[0].iter().map(C64::norm_sqr).sum::<f64>(),
            Normalization::Total => (0..n)
                .map(|j| {
                    let mut f = C64::new(0.0, 0.0);
                    let mut b = C64::new(0.0, 0.0);
                    for (inj, e) in injections.iter().zip(&eff) {
                        match inj.direction {
                            Direction::LeftIncident => f += e[j],
                            Direction::RightIncident => b += e[j],
                        }
                    }
                    f.norm_sqr() + b.norm_sqr()
                })
                .sum::<f64>(),
        } * grid.step;
        if !(energy > 0.0) {
            return Err(Error::NumericDegeneracy("injection set carries no energy".into()));
        }
        let weight = grid.step / energy.sqrt();

        let zones = Zones::new(stack);
        let per_freq: Vec<Vec<[C64; 2]>> = (0..n)
            .into_par_iter()
            .map(|j| -> Result<Vec<[C64; 2]>> {
                let sol = ModeSolution::solve(stack, grid.samples[j])?;
                let mut zc = vec![[C64::new(0.0, 0.0); 2]; zones.len()];
                for (inj, e) in injections.iter().zip(&eff) {
                    let w = e[j] * weight;
                    for (acc, c) in zc.iter_mut().zip(sol.coefficients(inj.direction.incidence())) {
                        acc[0] += w * c[0];
                        acc[1] += w * c[1];
                    }
                }
                Ok(zc)
            })
            .collect::<Result<_>>()?;
        let coef = (0..zones.len())
            .map(|z| per_freq.iter().map(|f| f[z]).collect())
            .collect();

        Ok(Self {
            stack: stack.clone(),
            zones,
            nu: grid.samples.clone(),
            step: grid.step,
            coef,
        })
    }

    pub fn stack(&self) -> &LayerStack {
        &self.stack
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.nu
    }

    /// `c_j(x)` such that `Ψ(x,t) = Σ_j c_j(x) e^{-i2πν_j t}`.
    pub fn spectral_coefficients(&self, x: f64) -> Vec<C64> {
        let z = self.zones.locate(x);
        let (x_ref, n) = self.zones.frame(z);
        self.coef[z]
            .iter()
            .zip(&self.nu)
            .map(|(&[p, m], &nu)| {
                let e = C64::cis(2.0 * PI * nu * n * (x - x_ref));
                p * e + m * e.conj()
            })
            .collect()
    }

    /// Direct ascending-frequency sum at one point.
    pub fn value(&self, x: f64, t: f64) -> C64 {
        self.spectral_coefficients(x)
            .iter()
            .zip(&self.nu)
            .fold(C64::new(0.0, 0.0), |acc, (c, &nu)| acc + c * C64::cis(-2.0 * PI * nu * t))
    }

    /// `Ψ(x, t)` for every `t` in `times`.
    pub fn time_series(&self, x: f64, times: &TimeGrid) -> Vec<C64> {
        self.series_with(&self.plan(times), x, times)
    }

    pub(crate) fn plan(&self, times: &TimeGrid) -> SeriesPlan {
        let n_fft = 1.0 / (self.step * times.step);
        let rounded = n_fft.round();
        if (n_fft - rounded).abs() <= 1e-9 * n_fft && rounded >= self.nu.len() as f64 && rounded <= MAX_FFT_LEN as f64 {
            let mut planner = FftPlanner::new();
            SeriesPlan::Fft(planner.plan_fft_forward(rounded as usize))
        } else {
            SeriesPlan::Direct
        }
    }

    /// When `1/(δν δt)` is an integer `N`, the samples are a length-`N` DFT
    /// of the spectral coefficients times a carrier.
    pub(crate) fn series_with(&self, plan: &SeriesPlan, x: f64, times: &TimeGrid) -> Vec<C64> {
        let c = self.spectral_coefficients(x);
        match plan {
            SeriesPlan::Direct => (0..times.len)
                .map(|m| {
                    let t = times.at(m);
                    c.iter()
                        .zip(&self.nu)
                        .fold(C64::new(0.0, 0.0), |acc, (c, &nu)| acc + c * C64::cis(-2.0 * PI * nu * t))
                })
                .collect(),
            SeriesPlan::Fft(fft) => {
                let n_fft = fft.len();
                let mut buf = vec![C64::new(0.0, 0.0); n_fft];
                for (j, (b, cj)) in buf.iter_mut().zip(&c).enumerate() {
                    *b = cj * C64::cis(-2.0 * PI * j as f64 * self.step * times.start);
                }
                fft.process(&mut buf);
                let nu0 = self.nu[0];
                (0..times.len)
                    .map(|m| buf[m % n_fft] * C64::cis(-2.0 * PI * nu0 * times.at(m)))
                    .collect()
            }
        }
    }

    /// `Σ_t w |Ψ|^2` over a region for each time, streamed over the spatial
    /// nodes of `x_grid` without storing the field.
    pub fn region_energy_series(&self, x_grid: &[f64], region: &RegionSpec, times: &TimeGrid) -> Result<Vec<f64>> {
        let q = Quadrature::over(x_grid, region.x_lo, region.x_hi)?;
        let plan = self.plan(times);
        let pairs: Vec<(usize, f64)> = q.nodes.iter().copied().zip(q.weights.iter().copied()).collect();
        let partials: Vec<Vec<f64>> = pairs
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![0.0; times.len];
                for &(i, w) in chunk {
                    for (a, v) in acc.iter_mut().zip(self.series_with(&plan, x_grid[i], times)) {
                        *a += w * v.norm_sqr();
                    }
                }
                acc
            })
            .collect();
        Ok(sum_in_order(partials, times.len))
    }
}

pub(crate) fn sum_in_order(partials: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    partials.into_iter().fold(vec![0.0; len], |mut acc, p| {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
        acc
    })
}

pub(crate) enum SeriesPlan {
    Direct,
    Fft(Arc<dyn Fft<f64>>),
}

/// Rejects what [`Synthesizer::new`] would reject, without solving: an
/// empty set, differing frequency grids and packets that start inside or on
/// the wrong side of the stack. With `window = Some((x_lo, x_hi, t))` the
/// packets must also lie inside `[x_lo, x_hi]` at time `t`.
pub fn check_injections(stack: &LayerStack, injections: &[PulseInjection], window: Option<(f64, f64, f64)>) -> Result<()> {
    let first = injections
        .first()
        .ok_or_else(|| Error::Domain("at least one injection is required".into()))?;
    for inj in &injections[1..] {
        if !inj.envelope.grid.bitwise_eq(&first.envelope.grid) {
            return Err(Error::IncompatibleGrid(
                "all injections must share one frequency grid".into(),
            ));
        }
    }
    for (k, inj) in injections.iter().enumerate() {
        if !stack.is_empty() {
            if let Some((lo, hi)) = inj.support_at(0.0) {
                let (start, end) = (stack.start(), stack.end());
                let (ok, side) = match inj.direction {
                    Direction::LeftIncident => (hi <= start, "left"),
                    Direction::RightIncident => (lo >= end, "right"),
                };
                if !ok {
                    return Err(Error::LaunchPosition(format!(
                        "injection {k} occupies [{lo:.3}, {hi:.3}] at t = 0, which must lie entirely in the {side} lead \
                         (stack spans [{start:.3}, {end:.3}])"
                    )));
                }
            }
        }
        if let (Some((x_lo, x_hi, t)), Some((lo, hi))) = (window, inj.support_at(window.map_or(0.0, |w| w.2))) {
            if lo < x_lo || hi > x_hi {
                return Err(Error::LaunchPosition(format!(
                    "injection {k} occupies [{lo:.3}, {hi:.3}] at t = {t}, outside the spatial window [{x_lo}, {x_hi}]"
                )));
            }
        }
    }
    Ok(())
}

/// `Ψ(x,t)` on a space-time grid, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    x_grid: Vec<f64>,
    t_grid: TimeGrid,
    values: Vec<C64>,
    stack: LayerStack,
}

impl SpaceTimeField {
    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn t_grid(&self) -> &TimeGrid {
        &self.t_grid
    }

    pub fn stack(&self) -> &LayerStack {
        &self.stack
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn at(&self, it: usize, ix: usize) -> C64 {
        self.values[it * self.x_grid.len() + ix]
    }

    /// Field at time sample `it`.
    pub fn row(&self, it: usize) -> &[C64] {
        let nx = self.x_grid.len();
        &self.values[it * nx..(it + 1) * nx]
    }

    pub fn energy_density(&self, it: usize) -> Vec<f64> {
        self.row(it).iter().map(C64::norm_sqr).collect()
    }

    pub(crate) fn time_index(&self, t: f64) -> Result<usize> {
        self.t_grid
            .index_of(t)
            .ok_or_else(|| Error::Domain(format!("t = {t} is not a sample of the time grid")))
    }
}

/// Synthesizes the field of `injections` on `x_grid × t_grid`, normalized so
/// the first injection alone carries unit energy.
pub fn assemble_field(
    stack: &LayerStack,
    injections: &[PulseInjection],
    x_grid: &[f64],
    t_grid: &TimeGrid,
) -> Result<SpaceTimeField> {
    assemble_field_with(stack, injections, x_grid, t_grid, Normalization::Lead)
}

pub fn assemble_field_with(
    stack: &LayerStack,
    injections: &[PulseInjection],
    x_grid: &[f64],
    t_grid: &TimeGrid,
    normalization: Normalization,
) -> Result<SpaceTimeField> {
    if x_grid.is_empty() || !x_grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Domain("spatial grid must be non-empty and strictly increasing".into()));
    }
    check_injections(stack, injections, Some((x_grid[0], x_grid[x_grid.len() - 1], t_grid.start)))?;
    let synth = Synthesizer::new(stack, injections, normalization)?;
    let plan = synth.plan(t_grid);
    let columns: Vec<Vec<C64>> = x_grid
        .par_iter()
        .map(|&x| synth.series_with(&plan, x, t_grid))
        .collect();
    let nx = x_grid.len();
    let mut values = vec![C64::new(0.0, 0.0); nx * t_grid.len];
    for (ix, col) in columns.iter().enumerate() {
        for (it, v) in col.iter().enumerate() {
            values[it * nx + ix] = *v;
        }
    }
    Ok(SpaceTimeField {
        x_grid: x_grid.to_vec(),
        t_grid: *t_grid,
        values,
        stack: stack.clone(),
    })
}

/// Trapezoid integral of `|Ψ|^2` over `region` at grid time `t`.
pub fn region_energy(field: &SpaceTimeField, region: &RegionSpec, t: f64) -> Result<f64> {
    let it = field.time_index(t)?;
    let q = Quadrature::over(&field.x_grid, region.x_lo, region.x_hi)?;
    let row = field.row(it);
    Ok(q.nodes.iter().zip(&q.weights).map(|(&i, w)| w * row[i].norm_sqr()).sum())
}

/// Reading of a phase-sensitive integrating detector at `x`:
/// `|Σ_m Ψ(x, t_m) e^{i2π omega t_m} δt|^2`.
pub fn coherent_detector(synth: &Synthesizer, x: f64, times: &TimeGrid, omega: f64) -> f64 {
    synth
        .time_series(x, times)
        .iter()
        .enumerate()
        .fold(C64::new(0.0, 0.0), |acc, (m, v)| {
            acc + v * C64::cis(2.0 * PI * omega * times.at(m))
        })
        .scale(times.step)
        .norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{build_fabry_perot, sample_positions, FabryPerotSpec};

    const T0: f64 = 60.0 / (2.0 * PI);

    fn grid(n: usize, t_max: f64) -> FrequencyGrid {
        make_frequency_grid(1.0, 0.25, n, t_max).unwrap()
    }

    fn envelope(n: usize) -> SpectralEnvelope {
        smoothed_rect_spectrum(&grid(n, 100.0), 1.0, T0, 0.25).unwrap()
    }

    #[test]
    fn grid_endpoints_and_spacing() {
        let g = grid(4096, 1000.0);
        assert_eq!(g.samples()[0], 0.75);
        assert_eq!(*g.samples().last().unwrap(), 1.25);
        let d = g.step();
        for w in g.samples().windows(2) {
            assert!(((w[1] - w[0]) - d).abs() <= 1e-12 * d.max(1.0) * 1e3);
        }
        assert!((g.window() - 8190.0).abs() < 1e-9);
    }

    #[test]
    fn odd_grid_hits_center() {
        assert_eq!(grid(257, 100.0).samples()[128], 1.0);
    }

    #[test]
    fn aliasing_guard_reports_minimum() {
        let err = make_frequency_grid(1.0, 0.25, 2, 10.0).unwrap_err();
        let Error::Resolution { minimal: Some(m), .. } = err else {
            panic!("expected a resolution error, got {err:?}");
        };
        assert_eq!(m, 12);
        assert!(make_frequency_grid(1.0, 0.25, m, 10.0).is_ok());
        assert!(make_frequency_grid(1.0, 0.25, m - 1, 10.0).is_err());
    }

    #[test]
    fn spectrum_special_values() {
        let env = envelope(257);
        let a = env.alpha();
        assert_eq!(a[128], C64::new(2.0, 0.0));
        assert_eq!(a[0], C64::new(0.0, 0.0));
        assert_eq!(a[256], C64::new(0.0, 0.0));
        // Sample ν = 1 sits at ν - ν0 = 0.1, the first sinc zero for T0 = 5.
        let g = make_frequency_grid(1.0, 0.25, 3, 0.5).unwrap();
        let env = smoothed_rect_spectrum(&g, 0.9, 5.0, 0.25).unwrap();
        assert!(env.alpha()[1].norm() < 1e-14);
    }

    #[test]
    fn lead_moves_at_light_speed_in_vacuum() {
        let env = envelope(513);
        let lead = PulseInjection::lead(env, 30.0);
        let xs: Vec<f64> = (0..=16 * 120).map(|i| i as f64 / 16.0).collect();
        let tg = TimeGrid::new(0.0, 10.0, 7).unwrap();
        let f = assemble_field(&LayerStack::vacuum(), &[lead], &xs, &tg).unwrap();
        for it in 0..tg.len {
            let rho = f.energy_density(it);
            let total: f64 = rho.iter().sum();
            let centroid: f64 = rho.iter().zip(&xs).map(|(r, x)| r * x).sum::<f64>() / total;
            assert!((centroid - (30.0 + tg.at(it))).abs() < 1.0 / 16.0, "t = {}", tg.at(it));
        }
    }

    #[test]
    fn unit_energy_at_launch() {
        let env = envelope(513);
        let lead = PulseInjection::lead(env, 40.0);
        let xs = sample_positions(&LayerStack::vacuum(), 0.0, 100.0, 16.0);
        let f = assemble_field(&LayerStack::vacuum(), &[lead], &xs, &TimeGrid::new(0.0, 1.0, 1).unwrap()).unwrap();
        let e = region_energy(&f, &RegionSpec::new("all", 0.0, 100.0).unwrap(), 0.0).unwrap();
        assert!((e - 1.0).abs() < 1e-3, "energy {e}");
        let empty = region_energy(&f, &RegionSpec::new("far", 90.0, 100.0).unwrap(), 0.0).unwrap();
        assert!(empty < 1e-6);
    }

    #[test]
    fn monochromatic_modulus_is_constant() {
        let g = grid(65, 10.0);
        let mut alpha = vec![C64::new(0.0, 0.0); 65];
        alpha[20] = C64::new(1.0, 0.0);
        let env = SpectralEnvelope::from_samples(g, alpha).unwrap();
        let lead = PulseInjection::lead(env, 0.0);
        let synth = Synthesizer::new(&LayerStack::vacuum(), &[lead], Normalization::Lead).unwrap();
        let tg = TimeGrid::new(0.0, 0.37, 40).unwrap();
        let s = synth.time_series(3.3, &tg);
        for v in &s {
            assert!((v.norm() - s[0].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_and_direct_paths_agree() {
        let stack = build_fabry_perot(&FabryPerotSpec {
            n_r: 2.5,
            cavity_length: 15.0,
            left_length: 40.0,
            right_length: 40.0,
        })
        .unwrap();
        let lead = PulseInjection::lead(envelope(257), 20.0);
        let synth = Synthesizer::new(&stack, &[lead], Normalization::Lead).unwrap();
        let fast = TimeGrid::new(12.5, 0.25, 300).unwrap();
        assert!(matches!(synth.plan(&fast), SeriesPlan::Fft(_)));
        for x in [5.0, 40.05, 47.3, 70.0] {
            let a = synth.time_series(x, &fast);
            for (m, v) in a.iter().enumerate() {
                assert!((v - synth.value(x, fast.at(m))).norm() < 1e-12);
            }
        }
        assert!(matches!(synth.plan(&TimeGrid::new(0.0, 0.3, 5).unwrap()), SeriesPlan::Direct));
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = PulseInjection::lead(envelope(257), 20.0);
        let b = PulseInjection::lead(envelope(513), 20.0);
        let err = Synthesizer::new(&LayerStack::vacuum(), &[a, b], Normalization::Lead).unwrap_err();
        assert!(matches!(err, Error::IncompatibleGrid(_)));
    }

    #[test]
    fn launch_inside_stack_rejected() {
        let stack = build_fabry_perot(&FabryPerotSpec {
            n_r: 2.5,
            cavity_length: 15.0,
            left_length: 20.0,
            right_length: 20.0,
        })
        .unwrap();
        let lead = PulseInjection::lead(envelope(257), 15.0);
        let err = Synthesizer::new(&stack, std::slice::from_ref(&lead), Normalization::Lead).unwrap_err();
        assert!(matches!(err, Error::LaunchPosition(_)));
        let wrong_side = PulseInjection {
            direction: Direction::RightIncident,
            center0: 0.0,
            ..lead
        };
        assert!(matches!(
            Synthesizer::new(&stack, &[wrong_side], Normalization::Lead),
            Err(Error::LaunchPosition(_))
        ));
    }

    #[test]
    fn total_normalization_of_a_pair() {
        let lead = PulseInjection::lead(envelope(513), 30.0);
        let twin = lead.with_transform(C64::new(1.0, 0.0), -60.0);
        let xs = sample_positions(&LayerStack::vacuum(), 0.0, 150.0, 16.0);
        let tg = TimeGrid::new(0.0, 1.0, 1).unwrap();
        let region = RegionSpec::new("all", 0.0, 150.0).unwrap();
        let lead_norm = assemble_field_with(&LayerStack::vacuum(), &[lead.clone(), twin.clone()], &xs, &tg, Normalization::Lead).unwrap();
        let total = assemble_field_with(&LayerStack::vacuum(), &[lead, twin], &xs, &tg, Normalization::Total).unwrap();
        assert!((region_energy(&lead_norm, &region, 0.0).unwrap() - 2.0).abs() < 2e-3);
        assert!((region_energy(&total, &region, 0.0).unwrap() - 1.0).abs() < 1e-3);
    }
}
