//! Units, dielectric layer geometry and named spatial regions.
//!
//! Positions are measured in units of the resonant vacuum wavelength λ0 and
//! times in units of τ0 = 2π/ω0. With these choices the speed of light is 1.

use crate::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Planck constant in eV·s.
const PLANCK_EV_S: f64 = 4.135_667_696e-15;

/// SI scales of the natural units used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// Resonant vacuum wavelength λ0 in meters.
    pub lambda0_m: f64,
    /// Optical period τ0 in seconds.
    pub tau0_s: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self {
            lambda0_m: 1.5e-6,
            tau0_s: 5e-15,
        }
    }
}

impl UnitSystem {
    pub fn new(lambda0_m: f64, tau0_s: f64) -> Result<Self> {
        if !(lambda0_m > 0.0 && lambda0_m.is_finite()) || !(tau0_s > 0.0 && tau0_s.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "unit scales must be positive (lambda0 = {lambda0_m} m, tau0 = {tau0_s} s)"
            )));
        }
        Ok(Self { lambda0_m, tau0_s })
    }

    /// Speed implied by one λ0 per τ0, in m/s.
    pub fn implied_speed(&self) -> f64 {
        self.lambda0_m / self.tau0_s
    }

    /// Relative mismatch between the implied speed and the speed of light.
    pub fn speed_mismatch(&self) -> f64 {
        (self.implied_speed() - SPEED_OF_LIGHT).abs() / SPEED_OF_LIGHT
    }

    pub fn time_fs(&self, t_tau0: f64) -> f64 {
        t_tau0 * self.tau0_s * 1e15
    }

    pub fn length_nm(&self, x_lambda0: f64) -> f64 {
        x_lambda0 * self.lambda0_m * 1e9
    }

    /// Photon energy ħω0 in eV.
    pub fn photon_energy_ev(&self) -> f64 {
        PLANCK_EV_S / self.tau0_s
    }
}

/// A lossless, non-dispersive medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    pub eps_r: f64,
    pub mu_r: f64,
}

impl Medium {
    pub const VACUUM: Medium = Medium {
        eps_r: 1.0,
        mu_r: 1.0,
    };

    pub fn new(eps_r: f64, mu_r: f64) -> Result<Self> {
        if !(eps_r > 0.0 && eps_r.is_finite()) || !(mu_r > 0.0 && mu_r.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "eps_r and mu_r must be positive (eps_r = {eps_r}, mu_r = {mu_r})"
            )));
        }
        Ok(Self { eps_r, mu_r })
    }

    /// Nonmagnetic medium of refractive index `n`.
    pub fn with_index(n: f64) -> Result<Self> {
        Self::new(n * n, 1.0)
    }

    pub fn index(&self) -> f64 {
        (self.eps_r * self.mu_r).sqrt()
    }

    /// `n / mu_r`, the factor multiplying `|a|^2 - |b|^2` in the energy flux.
    pub fn flux_weight(&self) -> f64 {
        self.index() / self.mu_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    /// Thickness in λ0.
    pub thickness: f64,
    pub medium: Medium,
}

impl Layer {
    pub fn new(thickness: f64, eps_r: f64, mu_r: f64) -> Result<Self> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "layer thickness must be positive, got {thickness}"
            )));
        }
        Ok(Self {
            thickness,
            medium: Medium::new(eps_r, mu_r)?,
        })
    }

    /// Nonmagnetic layer with refractive index `n`.
    pub fn dielectric(thickness: f64, n: f64) -> Result<Self> {
        Self::new(thickness, n * n, 1.0)
    }

    pub fn index(&self) -> f64 {
        self.medium.index()
    }
}

/// Piecewise-constant dielectric profile between two semi-infinite vacuum leads.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    origin: f64,
    layers: Vec<Layer>,
}

impl LayerStack {
    pub fn new(origin: f64, layers: Vec<Layer>) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::InvalidGeometry("stack origin must be finite".into()));
        }
        for layer in &layers {
            Layer::new(layer.thickness, layer.medium.eps_r, layer.medium.mu_r)?;
        }
        Ok(Self { origin, layers })
    }

    /// Homogeneous vacuum: no interfaces at all.
    pub fn vacuum() -> Self {
        Self {
            origin: 0.0,
            layers: Vec::new(),
        }
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Positions of all interfaces, `layers.len() + 1` values for a non-empty stack.
    pub fn interfaces(&self) -> Vec<f64> {
        if self.layers.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        let mut x = self.origin;
        out.push(x);
        for layer in &self.layers {
            x += layer.thickness;
            out.push(x);
        }
        out
    }

    pub fn start(&self) -> f64 {
        self.origin
    }

    pub fn end(&self) -> f64 {
        self.origin + self.length()
    }

    pub fn length(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    /// Index of the layer containing `x`, using half-open `[left, right)` cells.
    /// `None` means one of the vacuum leads.
    pub fn layer_index_at(&self, x: f64) -> Option<usize> {
        if self.layers.is_empty() || x < self.origin {
            return None;
        }
        let mut left = self.origin;
        for (i, layer) in self.layers.iter().enumerate() {
            let right = left + layer.thickness;
            if x < right {
                return Some(i);
            }
            left = right;
        }
        None
    }

    pub fn medium_at(&self, x: f64) -> Medium {
        self.layer_index_at(x)
            .map(|i| self.layers[i].medium)
            .unwrap_or(Medium::VACUUM)
    }

    /// Largest refractive index anywhere (vacuum included).
    pub fn max_index(&self) -> f64 {
        self.layers.iter().map(Layer::index).fold(1.0, f64::max)
    }

    /// Stack of the layers `range`, positioned where they sit in `self`.
    pub fn substack(&self, range: std::ops::Range<usize>) -> LayerStack {
        let origin = self.origin + self.layers[..range.start].iter().map(|l| l.thickness).sum::<f64>();
        LayerStack {
            origin,
            layers: self.layers[range].to_vec(),
        }
    }
}

/// Named interval `[x_lo, x_hi]` over which region-restricted quantities are integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub name: String,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl RegionSpec {
    pub fn new(name: impl Into<String>, x_lo: f64, x_hi: f64) -> Result<Self> {
        let name = name.into();
        if !(x_lo < x_hi) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "region {name}: need x_lo < x_hi, got [{x_lo}, {x_hi}]"
            )));
        }
        Ok(Self { name, x_lo, x_hi })
    }

    pub fn length(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

/// Symmetric resonator: two quarter-wave mirrors around a vacuum cavity,
/// with vacuum regions A and C outside. Lengths in λ0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FabryPerotSpec {
    pub n_r: f64,
    /// Cavity length L_B between the inner mirror faces.
    pub cavity_length: f64,
    /// Length L_A of the region left of the resonator.
    pub left_length: f64,
    /// Length L_C of the region right of the resonator.
    pub right_length: f64,
}

impl FabryPerotSpec {
    /// Quarter-wave mirror thickness λ0 / (4 n_r).
    pub fn mirror_thickness(&self) -> f64 {
        1.0 / (4.0 * self.n_r)
    }

    fn validate(&self) -> Result<()> {
        if !(self.n_r >= 1.0) || !self.n_r.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "mirror index must be >= 1, got {}",
                self.n_r
            )));
        }
        for (name, v) in [
            ("L_B", self.cavity_length),
            ("L_A", self.left_length),
            ("L_C", self.right_length),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidGeometry(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `[mirror, cavity, mirror]` with region A occupying `[0, L_A]`.
pub fn build_fabry_perot(spec: &FabryPerotSpec) -> Result<LayerStack> {
    spec.validate()?;
    let mirror = Layer::dielectric(spec.mirror_thickness(), spec.n_r)?;
    let cavity = Layer::new(spec.cavity_length, 1.0, 1.0)?;
    LayerStack::new(spec.left_length, vec![mirror, cavity, mirror])
}

/// Regions A, B, B' and C of a stack built by [`build_fabry_perot`].
///
/// A and C abut the outer mirror faces, B is the open cavity and B' is the
/// half of B adjacent to the left mirror.
pub fn default_regions(stack: &LayerStack, spec: &FabryPerotSpec) -> Vec<RegionSpec> {
    let faces = stack.interfaces();
    let (outer_left, inner_left, inner_right, outer_right) = (faces[0], faces[1], faces[2], faces[3]);
    vec![
        RegionSpec {
            name: "A".into(),
            x_lo: outer_left - spec.left_length,
            x_hi: outer_left,
        },
        RegionSpec {
            name: "B".into(),
            x_lo: inner_left,
            x_hi: inner_right,
        },
        RegionSpec {
            name: "B'".into(),
            x_lo: inner_left,
            x_hi: inner_left + 0.5 * (inner_right - inner_left),
        },
        RegionSpec {
            name: "C".into(),
            x_lo: outer_right,
            x_hi: outer_right + spec.right_length,
        },
    ]
}

/// Piecewise-uniform sample positions covering `[lo, hi]`.
///
/// Every interface inside the interval is a node, and each piece uses at
/// least `samples_per_lambda0 * n` samples per λ0 where `n` is the local index.
pub fn sample_positions(stack: &LayerStack, lo: f64, hi: f64, samples_per_lambda0: f64) -> Vec<f64> {
    let mut breaks = vec![lo];
    breaks.extend(stack.interfaces().into_iter().filter(|&x| x > lo && x < hi));
    breaks.push(hi);

    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = stack.medium_at(0.5 * (a + b)).index();
        let cells = ((b - a) * samples_per_lambda0 * n).ceil().max(1.0) as usize;
        let h = (b - a) / cells as f64;
        let first = if out.is_empty() { 0 } else { 1 };
        for i in first..=cells {
            out.push(if i == cells { b } else { a + h * i as f64 });
        }
    }
    out
}
