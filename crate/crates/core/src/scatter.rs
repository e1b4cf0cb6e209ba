//! Propagation-matrix solution of the 1D Helmholtz equation
//! `d/dx (1/mu_r dphi/dx) + omega^2 eps_r phi = 0` on a [`LayerStack`].
//!
//! In every uniform zone the field is `a e^{ikn(x - x_ref)} + b e^{-ikn(x - x_ref)}`
//! with `k = 2π omega` (omega in units of ω0, x in λ0). Layers use their left
//! face as `x_ref`; the two vacuum leads use the global origin so that the
//! scattering amplitudes are referenced to `x = 0`.
//!
//! A [`TransferMatrix`] maps the `(a, b)` pair on the left of a slice to the
//! pair on its right.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64 as C64;

use crate::media::{Layer, LayerStack, Medium};
use crate::{Error, Result};

const DEGENERATE_M22: f64 = 1e-300;

/// Minimum samples per local wavelength accepted by [`mode_field`].
pub const MIN_SAMPLES_PER_WAVELENGTH: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: C64,
    pub m12: C64,
    pub m21: C64,
    pub m22: C64,
}

impl TransferMatrix {
    pub const IDENTITY: TransferMatrix = TransferMatrix {
        m11: C64::new(1.0, 0.0),
        m12: C64::new(0.0, 0.0),
        m21: C64::new(0.0, 0.0),
        m22: C64::new(1.0, 0.0),
    };

    pub fn det(&self) -> C64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    fn diagonal(phase: f64) -> Self {
        let p = C64::cis(phase);
        TransferMatrix {
            m11: p,
            m12: C64::new(0.0, 0.0),
            m21: C64::new(0.0, 0.0),
            m22: p.conj(),
        }
    }
}

/// `a * b` applies `b` first.
impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, b: TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            m11: self.m11 * b.m11 + self.m12 * b.m21,
            m12: self.m11 * b.m12 + self.m12 * b.m22,
            m21: self.m21 * b.m11 + self.m22 * b.m21,
            m22: self.m21 * b.m12 + self.m22 * b.m22,
        }
    }
}

/// Matching across an interface: continuity of `phi` and of `(1/mu_r) dphi/dx`.
///
/// Amplitudes on both sides are referenced at the interface position. The
/// result does not depend on frequency.
pub fn interface_matrix(left: &Medium, right: &Medium) -> TransferMatrix {
    let eta = left.flux_weight() / right.flux_weight();
    let p = C64::new(0.5 * (1.0 + eta), 0.0);
    let m = C64::new(0.5 * (1.0 - eta), 0.0);
    TransferMatrix {
        m11: p,
        m12: m,
        m21: m,
        m22: p,
    }
}

/// Phase accumulated across `length` of `medium` at frequency `omega` (units of ω0).
pub fn propagation_matrix(medium: &Medium, length: f64, omega: f64) -> TransferMatrix {
    TransferMatrix::diagonal(2.0 * PI * omega * medium.index() * length)
}

pub fn layer_matrix(layer: &Layer, omega: f64) -> TransferMatrix {
    propagation_matrix(&layer.medium, layer.thickness, omega)
}

/// Total matrix from the global left-lead amplitudes to the global right-lead amplitudes.
pub fn stack_matrix(stack: &LayerStack, omega: f64) -> TransferMatrix {
    if stack.is_empty() {
        return TransferMatrix::IDENTITY;
    }
    let mut m = propagation_matrix(&Medium::VACUUM, stack.start(), omega);
    let mut prev = Medium::VACUUM;
    for layer in stack.layers() {
        m = interface_matrix(&prev, &layer.medium) * m;
        m = layer_matrix(layer, omega) * m;
        prev = layer.medium;
    }
    m = interface_matrix(&prev, &Medium::VACUUM) * m;
    propagation_matrix(&Medium::VACUUM, -stack.end(), omega) * m
}

/// Field reflection and transmission amplitudes for unit incidence from
/// either lead, referenced to `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringAmplitudes {
    pub omega: f64,
    pub r_left: C64,
    pub t_left: C64,
    pub r_right: C64,
    pub t_right: C64,
}

impl ScatteringAmplitudes {
    pub fn from_matrix(omega: f64, m: &TransferMatrix) -> Result<Self> {
        if m.m22.norm() < DEGENERATE_M22 {
            return Err(Error::NumericDegeneracy(format!(
                "|m22| = {:e} at omega = {omega}",
                m.m22.norm()
            )));
        }
        let inv = m.m22.inv();
        Ok(Self {
            omega,
            r_left: -m.m21 * inv,
            t_left: m.det() * inv,
            r_right: m.m12 * inv,
            t_right: inv,
        })
    }

    pub fn reflectance(&self) -> f64 {
        self.r_left.norm_sqr()
    }

    pub fn transmittance(&self) -> f64 {
        self.t_left.norm_sqr()
    }
}

pub fn stack_scattering(stack: &LayerStack, omega: f64) -> Result<ScatteringAmplitudes> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Domain(format!("frequency must be positive, got {omega}")));
    }
    ScatteringAmplitudes::from_matrix(omega, &stack_matrix(stack, omega))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Incidence {
    Left,
    Right,
}

/// Uniform zones of a stack: left lead, each layer, right lead.
#[derive(Debug, Clone)]
pub(crate) struct Zones {
    faces: Vec<f64>,
    index: Vec<f64>,
}

impl Zones {
    pub(crate) fn new(stack: &LayerStack) -> Self {
        let mut index = vec![1.0];
        index.extend(stack.layers().iter().map(Layer::index));
        if !stack.is_empty() {
            index.push(1.0);
        }
        Self {
            faces: stack.interfaces(),
            index,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.index.len()
    }

    pub(crate) fn locate(&self, x: f64) -> usize {
        self.faces.partition_point(|&f| f <= x)
    }

    /// Phase reference position and refractive index of zone `z`.
    pub(crate) fn frame(&self, z: usize) -> (f64, f64) {
        let x_ref = if z == 0 || z > self.faces.len().saturating_sub(1) {
            0.0
        } else {
            self.faces[z - 1]
        };
        (x_ref, self.index[z])
    }
}

/// Per-frequency zone amplitudes for both incidence directions.
#[derive(Debug, Clone)]
pub(crate) struct ModeSolution {
    pub(crate) amplitudes: ScatteringAmplitudes,
    left: Vec<[C64; 2]>,
    right: Vec<[C64; 2]>,
}

impl ModeSolution {
    pub(crate) fn solve(stack: &LayerStack, omega: f64) -> Result<Self> {
        let amplitudes = stack_scattering(stack, omega)?;
        let left = Self::sweep(stack, omega, [C64::new(1.0, 0.0), amplitudes.r_left], [
            amplitudes.t_left,
            C64::new(0.0, 0.0),
        ]);
        let right = Self::sweep(stack, omega, [C64::new(0.0, 0.0), amplitudes.t_right], [
            amplitudes.r_right,
            C64::new(1.0, 0.0),
        ]);
        Ok(Self {
            amplitudes,
            left,
            right,
        })
    }

    /// Carries the left-lead pair through the layers. The right lead takes
    /// the exact amplitudes instead of the swept ones.
    fn sweep(stack: &LayerStack, omega: f64, left_lead: [C64; 2], right_lead: [C64; 2]) -> Vec<[C64; 2]> {
        let mut zones = Vec::with_capacity(stack.layers().len() + 2);
        zones.push(left_lead);
        if stack.is_empty() {
            return zones;
        }
        let x0 = stack.start();
        let mut v = propagation_matrix(&Medium::VACUUM, x0, omega).apply(left_lead);
        let mut prev = Medium::VACUUM;
        for layer in stack.layers() {
            v = interface_matrix(&prev, &layer.medium).apply(v);
            zones.push(v);
            v = layer_matrix(layer, omega).apply(v);
            prev = layer.medium;
        }
        zones.push(right_lead);
        zones
    }

    pub(crate) fn coefficients(&self, incidence: Incidence) -> &[[C64; 2]] {
        match incidence {
            Incidence::Left => &self.left,
            Incidence::Right => &self.right,
        }
    }

    pub(crate) fn eval(&self, zones: &Zones, x: f64, incidence: Incidence) -> C64 {
        let z = zones.locate(x);
        let (x_ref, n) = zones.frame(z);
        let [a, b] = self.coefficients(incidence)[z];
        let p = C64::cis(2.0 * PI * self.amplitudes.omega * n * (x - x_ref));
        a * p + b * p.conj()
    }
}

/// Scattering state sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    pub omega: f64,
    pub grid: Vec<f64>,
    pub values: Vec<C64>,
    pub incidence: Incidence,
}

/// Unit-amplitude scattering state `phi_omega(x)` for incidence from one lead.
///
/// Left incidence: `e^{ikx} + r e^{-ikx}` in the left lead and `t e^{ikx}`
/// in the right lead; right incidence is the mirror image.
pub fn mode_field(stack: &LayerStack, omega: f64, grid: &[f64], incidence: Incidence) -> Result<ModeField> {
    if grid.is_empty() {
        return Err(Error::Domain("empty grid".into()));
    }
    if !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Domain("grid must be strictly increasing".into()));
    }
    for w in grid.windows(2) {
        let n = stack.medium_at(0.5 * (w[0] + w[1])).index();
        let wavelength = 1.0 / (omega * n);
        let h = w[1] - w[0];
        if h * MIN_SAMPLES_PER_WAVELENGTH > wavelength * (1.0 + 1e-9) {
            return Err(Error::resolution(format!(
                "spacing {h} between {} and {} exceeds 1/{MIN_SAMPLES_PER_WAVELENGTH} of the local wavelength {wavelength}",
                w[0], w[1]
            )));
        }
    }
    let solution = ModeSolution::solve(stack, omega)?;
    let zones = Zones::new(stack);
    let values = grid.iter().map(|&x| solution.eval(&zones, x, incidence)).collect();
    Ok(ModeField {
        omega,
        grid: grid.to_vec(),
        values,
        incidence,
    })
}
