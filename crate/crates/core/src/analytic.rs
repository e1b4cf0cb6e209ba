//! Closed-form resonance theory and the on-resonance ray model of a
//! symmetric two-mirror resonator.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::control::ControlSchedule;
use crate::media::FabryPerotSpec;
use crate::pulse::Direction;
use crate::{Error, Result};

/// Energy transmission `|t|^2` of a single lossless slab of index `n_r`
/// and thickness `l_m` in vacuum at vacuum wavelength `lambda` (all in λ0).
pub fn mirror_transmission(n_r: f64, l_m: f64, lambda: f64) -> f64 {
    let k1 = 2.0 * PI / lambda;
    let k2 = 2.0 * PI * n_r / lambda;
    let c = (k1 * k1 - k2 * k2) / (2.0 * k1 * k2);
    let s = (k2 * l_m).sin();
    1.0 / (1.0 + c * c * s * s)
}

/// Ring-down constants in natural units (times in τ0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceConstants {
    /// Round-trip time 2 L_B / c.
    pub tau_rt: f64,
    /// Energy ring-down time.
    pub tau_q: f64,
    /// Quality factor ω0 τ_Q.
    pub q: f64,
    /// Energy decay rate 1/τ_Q in rad/τ0.
    pub gamma: f64,
    /// Mirror field reflection magnitude at ω0.
    pub r: f64,
    /// Mirror field transmission magnitude at ω0.
    pub t: f64,
}

impl ResonanceConstants {
    /// Linewidth Γ in units of ω0, equal to 1/Q.
    pub fn linewidth(&self) -> f64 {
        self.gamma / (2.0 * PI)
    }
}

/// Energy decays by `r^4` per round trip, two mirror reflections each
/// reducing the field by `r`: `exp(-tau_RT / tau_Q) = r^4`.
pub fn resonance_constants(spec: &FabryPerotSpec) -> Result<ResonanceConstants> {
    let t2 = mirror_transmission(spec.n_r, spec.mirror_thickness(), 1.0);
    let r2 = 1.0 - t2;
    if !(r2 > 0.0) {
        return Err(Error::UndefinedQuality);
    }
    let r = r2.sqrt();
    let tau_rt = 2.0 * spec.cavity_length;
    let tau_q = -tau_rt / (4.0 * r.ln());
    Ok(ResonanceConstants {
        tau_rt,
        tau_q,
        q: 2.0 * PI * tau_q,
        gamma: 1.0 / tau_q,
        r,
        t: t2.sqrt(),
    })
}

/// Steady-state Lorentzian `S0 / ((omega - omega0)^2 + (gamma/2)^2)`.
pub fn lorentzian_spectrum(omega: f64, omega0: f64, gamma: f64, s0: f64) -> f64 {
    let d = omega - omega0;
    s0 / (d * d + 0.25 * gamma * gamma)
}

/// `|a (1 - x^n) / (1 - x)|^2`, the squared partial sum of `a x^k` for `k < n`.
pub fn geometric_sum(a: C64, x: C64, n: u32) -> f64 {
    let one = C64::new(1.0, 0.0);
    if (one - x).norm() < 1e-6 {
        // Near the removable singularity the closed form loses precision.
        let a_seq = vec![a; n as usize];
        return weighted_sum(&a_seq, x);
    }
    (a * (one - x.powu(n)) / (one - x)).norm_sqr()
}

/// `|sum_n a_n x^n|^2`. An empty sequence sums to zero.
pub fn weighted_sum(a_seq: &[C64], x: C64) -> f64 {
    a_seq
        .iter()
        .rev()
        .fold(C64::new(0.0, 0.0), |acc, &a| acc * x + a)
        .norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Amplitude leaving the resonator at one mirror.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayEvent {
    /// Emission time in τ0, relative to the lead pulse reaching the left mirror.
    pub time: f64,
    pub side: Side,
    pub amplitude: C64,
}

impl RayEvent {
    pub fn energy(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

/// Emissions below this energy (relative to a unit lead) count as cancelled.
const NEGLIGIBLE_ENERGY: f64 = 1e-24;

/// On-resonance ray trace of the lead pulse plus a control schedule.
///
/// Mirrors reflect with `-r` and transmit with `i t` from either side. Time
/// advances in half round trips: even slots are left-mirror hits, odd slots
/// right-mirror hits. A left-incident control with delay `k tau_RT` (after the
/// lead) meets the left mirror in slot `2k`; a right-incident control with
/// delay `k tau_RT` meets the right mirror in slot `2k - 1`.
///
/// `n_slots` mirror hits are simulated; cancelled emissions are omitted.
pub fn raytrace(r: f64, t: f64, schedule: &ControlSchedule, n_slots: usize) -> Result<Vec<RayEvent>> {
    let inputs = slot_inputs(r, t, schedule, n_slots)?;
    let (refl, trans) = (C64::new(-r, 0.0), C64::new(0.0, t));
    let mut inside = C64::new(0.0, 0.0);
    let mut events = Vec::new();
    for (slot, &external) in inputs.iter().enumerate() {
        let out = refl * external + trans * inside;
        inside = trans * external + refl * inside;
        if out.norm_sqr() > NEGLIGIBLE_ENERGY {
            events.push(RayEvent {
                time: 0.5 * schedule.tau_rt * slot as f64,
                side: if slot % 2 == 0 { Side::Left } else { Side::Right },
                amplitude: out,
            });
        }
    }
    Ok(events)
}

/// Intracavity amplitude just after each of the first `n_slots` mirror hits,
/// with the conventions of [`raytrace`].
pub fn cavity_amplitudes(r: f64, t: f64, schedule: &ControlSchedule, n_slots: usize) -> Result<Vec<C64>> {
    let inputs = slot_inputs(r, t, schedule, n_slots)?;
    let (refl, trans) = (C64::new(-r, 0.0), C64::new(0.0, t));
    let mut inside = C64::new(0.0, 0.0);
    Ok(inputs
        .iter()
        .map(|&external| {
            inside = trans * external + refl * inside;
            inside
        })
        .collect())
}

/// External amplitude arriving at a mirror in each slot.
fn slot_inputs(r: f64, t: f64, schedule: &ControlSchedule, n_slots: usize) -> Result<Vec<C64>> {
    if !(r.abs() < 1.0) {
        return Err(Error::ModelDomain(format!("need |r| < 1, got {r}")));
    }
    if ((r * r + t * t) - 1.0).abs() > 1e-9 {
        return Err(Error::ModelDomain(format!(
            "lossless mirror needs r^2 + t^2 = 1, got {}",
            r * r + t * t
        )));
    }
    let tau_rt = schedule.tau_rt;
    if !(tau_rt > 0.0) {
        return Err(Error::ModelDomain(format!("round-trip time must be positive, got {tau_rt}")));
    }
    let mut inputs = vec![C64::new(0.0, 0.0); n_slots];
    if let Some(first) = inputs.first_mut() {
        *first = C64::new(1.0, 0.0);
    }
    for (inj, &amp) in schedule.injections.iter().zip(&schedule.ray_amplitudes) {
        let k = (inj.delay - schedule.lead_delay) / tau_rt;
        let k_round = k.round();
        if (k - k_round).abs() > 1e-9 * k.abs().max(1.0) {
            return Err(Error::ModelDomain(format!(
                "control delay {} is not a multiple of tau_RT = {tau_rt} after the lead",
                inj.delay
            )));
        }
        let slot = match inj.direction {
            Direction::LeftIncident if k_round >= 0.0 => 2 * k_round as usize,
            Direction::RightIncident if k_round >= 1.0 => 2 * k_round as usize - 1,
            _ => {
                return Err(Error::ModelDomain(format!(
                    "control delay {} precedes the lead's first mirror hit",
                    inj.delay
                )))
            }
        };
        if let Some(slot) = inputs.get_mut(slot) {
            *slot += amp;
        }
    }
    Ok(inputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControlIntent, ControlSchedule};
    use crate::pulse::{make_frequency_grid, smoothed_rect_spectrum, PulseInjection};
    use proptest::prelude::*;

    const R2: f64 = 0.524_375_743_162_901_1;

    fn reference() -> FabryPerotSpec {
        FabryPerotSpec {
            n_r: 2.5,
            cavity_length: 15.0,
            left_length: 160.0,
            right_length: 120.0,
        }
    }

    fn lead() -> PulseInjection {
        let grid = make_frequency_grid(1.0, 0.25, 65, 10.0).unwrap();
        let env = smoothed_rect_spectrum(&grid, 1.0, 60.0 / (2.0 * PI), 0.25).unwrap();
        PulseInjection::lead(env, 100.0)
    }

    fn schedule(controls: &[(f64, f64)]) -> ControlSchedule {
        let lead = lead();
        let mut s = ControlSchedule::empty(ControlIntent::Manual, 30.0, lead.delay);
        for &(scale, delay) in controls {
            s.push(lead.with_transform(C64::new(scale, 0.0), delay), C64::new(scale, 0.0));
        }
        s
    }

    #[test]
    fn quarter_wave_mirror_value() {
        let t2 = mirror_transmission(2.5, 0.1, 1.0);
        assert!((t2 - 1.0 / (1.0 + 1.05 * 1.05)).abs() < 1e-15);
        assert!((t2 - 0.47562).abs() < 1e-5);
        assert!((1.0 - t2 - R2).abs() < 1e-15);
    }

    #[test]
    fn unit_index_and_half_wave_are_transparent() {
        for lambda in [0.6, 1.0, 1.7] {
            assert_eq!(mirror_transmission(1.0, 0.1, lambda), 1.0);
        }
        // sin(k2 L_m) = 0 at lambda = 2 n L_m / m.
        let (n, lm) = (2.5, 0.1);
        for m in 1..4 {
            let lambda = 2.0 * n * lm / m as f64;
            assert!((mirror_transmission(n, lm, lambda) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn resonance_constants_match_round_trip_model() {
        let c = resonance_constants(&reference()).unwrap();
        assert_eq!(c.tau_rt, 30.0);
        assert!((c.r * c.r - R2).abs() < 1e-14);
        let expected_tau_q = -30.0 / (R2 * R2).ln();
        assert!((c.tau_q - expected_tau_q).abs() < 1e-12);
        assert!((c.q - 2.0 * PI * c.tau_q).abs() < 1e-12);
        assert!((c.gamma * c.tau_q - 1.0).abs() < 1e-15);
        // Within 5% of the reported 114 fs and Q = 144.
        let fs = c.tau_q * 5.0;
        assert!((fs - 114.0).abs() / 114.0 < 0.05, "tau_Q = {fs} fs");
        assert!((c.q - 144.0).abs() / 144.0 < 0.05, "Q = {}", c.q);
    }

    #[test]
    fn no_mirror_means_no_quality_factor() {
        let spec = FabryPerotSpec { n_r: 1.0, ..reference() };
        assert_eq!(resonance_constants(&spec), Err(Error::UndefinedQuality));
    }

    #[test]
    fn lorentzian_shape() {
        let (w0, g, s0) = (1.0, 0.02, 3.0);
        assert!((lorentzian_spectrum(w0, w0, g, s0) - 4.0 * s0 / (g * g)).abs() < 1e-9);
        let peak = lorentzian_spectrum(w0, w0, g, s0);
        for d in [-0.5 * g, 0.5 * g] {
            assert!((lorentzian_spectrum(w0 + d, w0, g, s0) - 0.5 * peak).abs() < 1e-9);
        }
        assert_eq!(lorentzian_spectrum(1.3, w0, g, 0.0), 0.0);
    }

    #[test]
    fn geometric_sum_values() {
        let one = C64::new(1.0, 0.0);
        for n in [1, 2, 7] {
            assert!((geometric_sum(one, C64::new(0.0, 0.0), n) - 1.0).abs() < 1e-15);
        }
        assert!((geometric_sum(one, C64::new(0.5, 0.0), 3) - 3.0625).abs() < 1e-14);
        assert!((geometric_sum(C64::new(2.0, 1.0), one, 4) - 80.0).abs() < 1e-12);
        let t2 = 1.0 - R2;
        let limit = geometric_sum(C64::new(t2, 0.0), C64::new(R2, 0.0), 2000);
        assert!((limit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_sum_values() {
        let c = |v: f64| C64::new(v, 0.0);
        assert!((weighted_sum(&[c(1.0)], C64::new(0.3, -2.0)) - 1.0).abs() < 1e-15);
        assert!((weighted_sum(&[c(1.0), c(1.0), c(1.0)], c(0.5)) - 3.0625).abs() < 1e-14);
        assert_eq!(weighted_sum(&[c(1.0), c(-1.0)], c(1.0)), 0.0);
        assert_eq!(weighted_sum(&[], c(1.0)), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn geometric_equals_weighted(
            (ar, ai) in (-3.0f64..3.0, -3.0f64..3.0),
            (mag, arg) in (0.0f64..2.0, 0.0f64..(2.0 * PI)),
            n in 1u32..24,
        ) {
            let a = C64::new(ar, ai);
            let x = C64::from_polar(mag, arg);
            let g = geometric_sum(a, x, n);
            let w = weighted_sum(&vec![a; n as usize], x);
            prop_assert!((g - w).abs() <= 1e-12 * w.max(1.0), "g = {}, w = {}", g, w);
        }
    }

    fn transmitted(events: &[RayEvent]) -> Vec<RayEvent> {
        events.iter().copied().filter(|e| e.side == Side::Right).collect()
    }

    #[test]
    fn uncontrolled_ring_down() {
        let (r, t) = (R2.sqrt(), (1.0 - R2).sqrt());
        let events = raytrace(r, t, &schedule(&[]), 12).unwrap();
        let tx = transmitted(&events);
        assert_eq!(tx.len(), 6);
        assert!((tx[1].energy() / tx[0].energy() - 0.27497).abs() < 1e-4);
        assert!((tx[2].energy() / tx[0].energy() - 0.07561).abs() < 1e-4);
        // Through amplitude (i t)^2 = -t^2, then a factor r^2 per round trip.
        assert!((tx[0].amplitude - C64::new(-t * t, 0.0)).norm() < 1e-15);
        for w in tx.windows(2) {
            assert_eq!(w[1].time - w[0].time, 30.0);
        }
        let left: Vec<_> = events.iter().filter(|e| e.side == Side::Left).collect();
        assert!((left[0].amplitude - C64::new(-r, 0.0)).norm() < 1e-15);
        assert!((left[1].amplitude - C64::new(t * t * r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn coherent_transmitted_sum_is_geometric() {
        let (r, t) = (R2.sqrt(), (1.0 - R2).sqrt());
        let tx = transmitted(&raytrace(r, t, &schedule(&[]), 40).unwrap());
        for n in 1..=tx.len() {
            let coherent: C64 = tx[..n].iter().map(|e| e.amplitude).sum();
            let g = geometric_sum(C64::new(t * t, 0.0), C64::new(r * r, 0.0), n as u32);
            assert!((coherent.norm_sqr() - g).abs() < 1e-12);
        }
    }

    #[test]
    fn cancellation_leaves_one_transmitted_event() {
        let (r, t) = (R2.sqrt(), (1.0 - R2).sqrt());
        let events = raytrace(r, t, &schedule(&[(-r * r, 30.0)]), 20).unwrap();
        assert_eq!(transmitted(&events).len(), 1);
    }

    #[test]
    fn truncation_after_three_round_trips() {
        let (r, t) = (R2.sqrt(), (1.0 - R2).sqrt());
        let events = raytrace(r, t, &schedule(&[(-r.powi(6), 90.0)]), 30).unwrap();
        let tx = transmitted(&events);
        assert_eq!(tx.len(), 3);
        let coherent: C64 = tx.iter().map(|e| e.amplitude).sum();
        let g = geometric_sum(C64::new(t * t, 0.0), C64::new(r * r, 0.0), 3);
        assert!((coherent.norm_sqr() - g).abs() < 1e-12);
    }

    #[test]
    fn off_lattice_delay_rejected() {
        let err = raytrace(0.7, (1.0f64 - 0.49).sqrt(), &schedule(&[(-0.49, 15.0)]), 10).unwrap_err();
        assert!(matches!(err, Error::ModelDomain(_)));
    }
}
