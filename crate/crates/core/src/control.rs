//! Coherent control schedules: copies of the lead pulse injected at whole
//! round trips to cancel or reinforce the resonator's leakage.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::analytic::ResonanceConstants;
use crate::media::LayerStack;
use crate::pulse::{Direction, PulseInjection};
use crate::scatter::{stack_scattering, ScatteringAmplitudes};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlIntent {
    /// Stop the ring-down after one round trip.
    Cancel,
    /// Stop the ring-down after `N` round trips.
    Truncate(u32),
    /// Hold energy in the cavity for `K` round trips.
    Confine(u32),
    /// User-supplied injections.
    Manual,
}

/// Control injections accompanying a lead pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    pub intent: ControlIntent,
    /// Round-trip time in τ0.
    pub tau_rt: f64,
    /// Delay of the lead pulse the schedule was designed for.
    pub lead_delay: f64,
    /// Control injections, excluding the lead.
    pub injections: Vec<PulseInjection>,
    /// Amplitude of each injection relative to the lead in the on-resonance
    /// ray model (mirror reflection `-r`, transmission `i t`).
    pub ray_amplitudes: Vec<C64>,
}

impl ControlSchedule {
    pub fn empty(intent: ControlIntent, tau_rt: f64, lead_delay: f64) -> Self {
        Self {
            intent,
            tau_rt,
            lead_delay,
            injections: Vec::new(),
            ray_amplitudes: Vec::new(),
        }
    }

    pub fn push(&mut self, injection: PulseInjection, ray_amplitude: C64) {
        self.injections.push(injection);
        self.ray_amplitudes.push(ray_amplitude);
    }

    /// Lead followed by the controls, ready for synthesis.
    pub fn with_lead(&self, lead: &PulseInjection) -> Vec<PulseInjection> {
        std::iter::once(lead.clone()).chain(self.injections.iter().cloned()).collect()
    }

    /// Delays of the controls in whole round trips after the lead.
    pub fn round_trips(&self) -> Vec<f64> {
        self.injections
            .iter()
            .map(|i| (i.delay - self.lead_delay) / self.tau_rt)
            .collect()
    }
}

/// One left-incident copy of the lead with scale `-r^{2N}` relative to it,
/// arriving `N` round trips later. It cancels the intracavity field after
/// the `N`-th round trip.
pub fn design_truncation(res: &ResonanceConstants, r: f64, n: u32, lead: &PulseInjection) -> Result<ControlSchedule> {
    if n < 1 {
        return Err(Error::Domain("truncation needs N >= 1".into()));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain(format!("mirror reflection must satisfy 0 <= r < 1, got {r}")));
    }
    let amp = -r.powi(2 * n as i32);
    let intent = if n == 1 {
        ControlIntent::Cancel
    } else {
        ControlIntent::Truncate(n)
    };
    let mut s = ControlSchedule::empty(intent, res.tau_rt, lead.delay);
    s.push(
        lead.with_transform(lead.scale * amp, lead.delay + n as f64 * res.tau_rt),
        C64::new(amp, 0.0),
    );
    Ok(s)
}

/// Two-port description of one mirror at a single frequency.
#[derive(Debug, Clone, Copy)]
struct Port {
    r_left: C64,
    t_left: C64,
    r_right: C64,
    t_right: C64,
}

impl From<ScatteringAmplitudes> for Port {
    fn from(s: ScatteringAmplitudes) -> Self {
        Self {
            r_left: s.r_left,
            t_left: s.t_left,
            r_right: s.r_right,
            t_right: s.t_right,
        }
    }
}

/// Incoming amplitudes that null the leakage at each mirror hit for `k` round
/// trips, starting from forward cavity amplitude `f`.
///
/// Returns `(b_m, a_m)` per round trip: the right-incident amplitude meeting
/// the right mirror, then the left-incident amplitude meeting the left mirror.
fn leakage_nulling(left: Port, right: Port, mut f: C64, k: u32) -> Vec<(C64, C64)> {
    let mut out = Vec::with_capacity(k as usize);
    for _ in 0..k {
        let b = -right.t_left * f / right.r_right;
        let back = right.r_left * f + right.t_right * b;
        let a = -left.t_right * back / left.r_left;
        f = left.t_left * a + left.r_right * back;
        out.push((b, a));
    }
    out
}

/// `K` pairs of control pulses that null the leakage through both mirrors
/// for `K` round trips, so intracavity energy builds up instead of decaying.
///
/// In round trip `m` a right-incident pulse meets the right mirror together
/// with the circulating packet, then a left-incident pulse meets the left
/// mirror. Amplitudes are solved with the exact single-mirror scattering
/// amplitudes of `stack` (a three-layer resonator) at the carrier frequency.
pub fn design_confinement(
    res: &ResonanceConstants,
    r: f64,
    t: f64,
    k: u32,
    lead: &PulseInjection,
    stack: &LayerStack,
) -> Result<ControlSchedule> {
    if k < 1 {
        return Err(Error::Domain("confinement needs K >= 1".into()));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("mirror reflection must satisfy 0 < r < 1, got {r}")));
    }
    if stack.layers().len() != 3 {
        return Err(Error::InvalidGeometry(format!(
            "confinement needs a mirror-cavity-mirror stack, got {} layers",
            stack.layers().len()
        )));
    }
    if lead.direction != Direction::LeftIncident {
        return Err(Error::Domain("the lead pulse must be left-incident".into()));
    }
    let nu = lead.envelope.omega0();
    let left: Port = stack_scattering(&stack.substack(0..1), nu)?.into();
    let right: Port = stack_scattering(&stack.substack(2..3), nu)?.into();

    let lead_coef = lead.scale * C64::cis(2.0 * PI * nu * (lead.delay - lead.center0));
    let exact = leakage_nulling(left, right, left.t_left * lead_coef, k);

    let mirror = Port {
        r_left: C64::new(-r, 0.0),
        t_left: C64::new(0.0, t),
        r_right: C64::new(-r, 0.0),
        t_right: C64::new(0.0, t),
    };
    let ray = leakage_nulling(mirror, mirror, mirror.t_left, k);

    // Right-incident pulses start as far right of the stack as the lead
    // starts left of it, less one cavity transit.
    let cavity = 0.5 * res.tau_rt;
    let center_right = stack.end() + (stack.start() - lead.center0) - cavity;

    let mut s = ControlSchedule::empty(ControlIntent::Confine(k), res.tau_rt, lead.delay);
    for (m, (&(b, a), &(rb, ra))) in exact.iter().zip(&ray).enumerate() {
        let delay = lead.delay + (m + 1) as f64 * res.tau_rt;
        let right_pulse = PulseInjection {
            scale: b / C64::cis(2.0 * PI * nu * (delay + center_right)),
            delay,
            direction: Direction::RightIncident,
            center0: center_right,
            envelope: lead.envelope.clone(),
        };
        s.push(right_pulse, rb);
        s.push(
            lead.with_transform(a / C64::cis(2.0 * PI * nu * (delay - lead.center0)), delay),
            ra,
        );
    }
    Ok(s)
}
