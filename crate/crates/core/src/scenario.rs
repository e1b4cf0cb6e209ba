//! Declarative scenario files and the pipeline behind the `cavity-ctl` binary.
//!
//! A scenario is a TOML document. Lengths carry a `_lambda0` suffix and
//! times a `_tau0` suffix; pulse durations are given as `T0_omega0`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytic::{mirror_transmission, raytrace, resonance_constants, ResonanceConstants, Side};
use crate::control::{design_confinement, design_truncation, ControlIntent, ControlSchedule};
use crate::markov::{nonmarkov_content, DistanceSeries, NonMarkovSeries, TrajectoryPair};
use crate::media::{
    build_fabry_perot, default_regions, sample_positions, FabryPerotSpec, Layer, LayerStack, RegionSpec, UnitSystem,
};
use crate::pulse::{
    assemble_field, check_injections, make_frequency_grid, smoothed_rect_spectrum, Direction, FrequencyGrid,
    Normalization, PulseInjection, SpaceTimeField, Synthesizer, TimeGrid,
};
use crate::scatter::{stack_scattering, MIN_SAMPLES_PER_WAVELENGTH};
use crate::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn default_lambda0_nm() -> f64 {
    1500.0
}

fn default_tau0_fs() -> f64 {
    5.0
}

fn default_d_omega_r() -> f64 {
    0.25
}

fn default_omega0() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

fn default_spl() -> f64 {
    20.0
}

fn default_dt() -> f64 {
    0.25
}

fn default_out_dx() -> f64 {
    0.5
}

fn default_out_dt() -> f64 {
    1.0
}

fn default_slots() -> usize {
    24
}

fn default_spectra_points() -> usize {
    801
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_lambda0_nm")]
    pub lambda0_nm: f64,
    #[serde(default = "default_tau0_fs")]
    pub tau0_fs: f64,
    pub n_r: f64,
    #[serde(rename = "L_B_lambda0")]
    pub l_b: f64,
    #[serde(rename = "L_A_lambda0")]
    pub l_a: f64,
    #[serde(rename = "L_C_lambda0")]
    pub l_c: f64,
    /// Remove the mirrors but keep the region geometry.
    #[serde(default)]
    pub free_space: bool,
    /// Replaces the resonator with an arbitrary stack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<LayersSpec>,
    /// Extra or overriding named regions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<RegionEntry>,
    pub pulse: PulseSpec,
    #[serde(default)]
    pub control: ControlSpec,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayersSpec {
    pub origin_lambda0: f64,
    pub stack: Vec<LayerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerEntry {
    pub thickness_lambda0: f64,
    pub eps_r: f64,
    #[serde(default = "one")]
    pub mu_r: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionEntry {
    pub name: String,
    pub x_lo_lambda0: f64,
    pub x_hi_lambda0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSpec {
    #[serde(rename = "T0_omega0")]
    pub t0_omega0: f64,
    #[serde(default = "default_d_omega_r")]
    pub d_omega_r: f64,
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    pub center0_lambda0: f64,
    #[serde(default)]
    pub delay_tau0: f64,
}

impl PulseSpec {
    pub fn t0_tau0(&self) -> f64 {
        self.t0_omega0 / (2.0 * PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntentName {
    #[default]
    None,
    Cancel,
    Truncate,
    Confine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    #[serde(default)]
    pub intent: IntentName,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default = "default_true")]
    pub auto_amplitude: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub injections: Vec<InjectionEntry>,
}

impl Default for ControlSpec {
    fn default() -> Self {
        Self {
            intent: IntentName::None,
            n: None,
            k: None,
            auto_amplitude: true,
            injections: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionName {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionEntry {
    pub scale_re: f64,
    #[serde(default)]
    pub scale_im: f64,
    pub delay_tau0: f64,
    pub direction: DirectionName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center0_lambda0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min_lambda0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max_lambda0: Option<f64>,
    #[serde(default = "default_spl")]
    pub samples_per_lambda0: f64,
    pub t_max_tau0: f64,
    #[serde(default = "default_dt")]
    pub dt_tau0: f64,
    pub n_freq: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(rename = "tau_M_tau0")]
    pub tau_m: f64,
    pub regions: Vec<String>,
    /// Also measure the lead without control pulses.
    #[serde(default)]
    pub compare_uncontrolled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub spacetime: bool,
    #[serde(default = "default_out_dx")]
    pub spacetime_dx_lambda0: f64,
    #[serde(default = "default_out_dt")]
    pub spacetime_dt_tau0: f64,
    #[serde(default)]
    pub timeseries: bool,
    #[serde(rename = "x_R_lambda0", default, skip_serializing_if = "Option::is_none")]
    pub x_r: Option<f64>,
    #[serde(default)]
    pub measures: bool,
    #[serde(default)]
    pub raytrace: bool,
    #[serde(default = "default_slots")]
    pub raytrace_slots: usize,
    #[serde(default)]
    pub spectra: bool,
    #[serde(default = "default_spectra_points")]
    pub spectra_points: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            spacetime: false,
            spacetime_dx_lambda0: default_out_dx(),
            spacetime_dt_tau0: default_out_dt(),
            timeseries: false,
            x_r: None,
            measures: false,
            raytrace: false,
            raytrace_slots: default_slots(),
            spectra: false,
            spectra_points: default_spectra_points(),
        }
    }
}

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    /// Unreadable or malformed scenario (exit 2).
    #[error("{0}")]
    Parse(String),
    /// Well-formed but inconsistent scenario (exit 2).
    #[error("invalid scenario: {0}")]
    Config(String),
    /// Grid or launch guard violated (exit 3).
    #[error("guard violated: {message}\nhint: {hint}")]
    Guard { message: String, hint: String },
    /// File system failure (exit 4).
    #[error("i/o: {0}")]
    Io(String),
    /// Numerical failure during a solve (exit 1).
    #[error("{0}")]
    Model(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Parse(_) | RunError::Config(_) => 2,
            RunError::Guard { .. } => 3,
            RunError::Io(_) => 4,
            RunError::Model(_) => 1,
        }
    }

    fn guard(message: impl Into<String>, hint: impl Into<String>) -> Self {
        RunError::Guard {
            message: message.into(),
            hint: hint.into(),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Resolution { minimal: Some(m), .. } => {
                RunError::guard(e.to_string(), format!("set grid.n_freq to at least {m}"))
            }
            Error::Resolution { .. } => RunError::guard(e.to_string(), "refine the sampling grid"),
            Error::LaunchPosition(_) => RunError::guard(
                e.to_string(),
                "move pulse.center0_lambda0, lengthen L_A_lambda0 or widen the grid.x_*_lambda0 window",
            ),
            Error::IncompatibleGrid(_) => RunError::guard(e.to_string(), "use one frequency grid for all pulses"),
            Error::InvalidGeometry(_) | Error::Domain(_) | Error::UndefinedQuality => RunError::Config(e.to_string()),
            _ => RunError::Model(e.to_string()),
        }
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

impl Scenario {
    pub fn from_toml_str(text: &str) -> RunResult<Self> {
        toml::from_str(text).map_err(|e| RunError::Parse(e.to_string()))
    }

    pub fn from_path(path: &Path) -> RunResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| RunError::Parse(format!("{}: {e}", path.display())))
    }

    /// sha256 of the canonical serialization of the parsed scenario.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn fabry_perot(&self) -> FabryPerotSpec {
        FabryPerotSpec {
            n_r: self.n_r,
            cavity_length: self.l_b,
            left_length: self.l_a,
            right_length: self.l_c,
        }
    }

    /// Builds every object a run needs and checks every guard, without
    /// solving for any field.
    pub fn prepare(&self) -> RunResult<Prepared> {
        let units = UnitSystem::new(self.lambda0_nm * 1e-9, self.tau0_fs * 1e-15)?;
        let fp = self.fabry_perot();
        let geometry = build_fabry_perot(&fp)?;
        let stack = match (&self.layers, self.free_space) {
            (Some(_), true) => {
                return Err(RunError::Config("`layers` and `free_space` are mutually exclusive".into()))
            }
            (Some(spec), false) => LayerStack::new(
                spec.origin_lambda0,
                spec.stack
                    .iter()
                    .map(|l| Layer::new(l.thickness_lambda0, l.eps_r, l.mu_r))
                    .collect::<crate::Result<_>>()?,
            )?,
            (None, true) => LayerStack::vacuum(),
            (None, false) => geometry.clone(),
        };

        let mut regions: Vec<RegionSpec> = default_regions(&geometry, &fp);
        for entry in &self.regions {
            let region = RegionSpec::new(entry.name.clone(), entry.x_lo_lambda0, entry.x_hi_lambda0)?;
            match regions.iter_mut().find(|r| r.name == region.name) {
                Some(existing) => *existing = region,
                None => regions.push(region),
            }
        }

        let x_lo = self.grid.x_min_lambda0.unwrap_or(0.0);
        let x_hi = self.grid.x_max_lambda0.unwrap_or(geometry.end() + self.l_c);
        if !(x_lo < x_hi) {
            return Err(RunError::Config(format!("empty spatial window [{x_lo}, {x_hi}]")));
        }
        let omega_max = self.pulse.omega0 + self.pulse.d_omega_r;
        let needed = MIN_SAMPLES_PER_WAVELENGTH * omega_max;
        if self.grid.samples_per_lambda0 < needed {
            return Err(RunError::guard(
                format!(
                    "{} samples per λ0 under-resolve the shortest wavelength in the band",
                    self.grid.samples_per_lambda0
                ),
                format!("set grid.samples_per_lambda0 to at least {needed}"),
            ));
        }
        if !(self.grid.dt_tau0 > 0.0) {
            return Err(RunError::Config("grid.dt_tau0 must be positive".into()));
        }
        let t_grid = TimeGrid::span(self.grid.t_max_tau0, self.grid.dt_tau0)?;

        let freq = make_frequency_grid(self.pulse.omega0, self.pulse.d_omega_r, self.grid.n_freq, self.grid.t_max_tau0)?;
        let envelope = smoothed_rect_spectrum(&freq, self.pulse.omega0, self.pulse.t0_tau0(), self.pulse.d_omega_r)?;
        let lead = PulseInjection::lead(envelope, self.pulse.center0_lambda0)
            .with_transform(C64::new(1.0, 0.0), self.pulse.delay_tau0);

        let resonance = if self.free_space || self.layers.is_some() {
            None
        } else {
            resonance_constants(&fp).ok()
        };
        let schedule = self.schedule(&lead, resonance.as_ref(), &geometry)?;

        let injections = match &schedule {
            Some(s) => s.with_lead(&lead),
            None => vec![lead.clone()],
        };
        let window = Some((x_lo, x_hi, 0.0));
        check_injections(&stack, &injections, window)?;

        if let Some(m) = &self.measure {
            for name in &m.regions {
                if !regions.iter().any(|r| &r.name == name) {
                    return Err(RunError::Config(format!("measure.regions names unknown region `{name}`")));
                }
            }
            let advanced: Vec<PulseInjection> = injections
                .iter()
                .map(|i| i.with_transform(i.scale, i.delay - m.tau_m))
                .collect();
            check_injections(&stack, &advanced, window)?;
        }
        for name in self.measure.iter().flat_map(|m| &m.regions) {
            let r = regions.iter().find(|r| &r.name == name).expect("checked above");
            if r.x_lo < x_lo || r.x_hi > x_hi {
                return Err(RunError::guard(
                    format!("region {} [{}, {}] extends outside the spatial window [{x_lo}, {x_hi}]", r.name, r.x_lo, r.x_hi),
                    "widen grid.x_min_lambda0 / grid.x_max_lambda0",
                ));
            }
        }
        if self.outputs.raytrace && resonance.is_none() {
            return Err(RunError::Config("raytrace output needs the two-mirror resonator with n_r > 1".into()));
        }
        if !(self.outputs.spacetime_dx_lambda0 > 0.0 && self.outputs.spacetime_dt_tau0 > 0.0) {
            return Err(RunError::Config("spacetime output steps must be positive".into()));
        }

        let x_r = self.outputs.x_r.unwrap_or(geometry.end() + 0.5 * self.l_c);
        Ok(Prepared {
            units,
            fp,
            stack,
            geometry,
            regions,
            freq,
            lead,
            schedule,
            resonance,
            window: (x_lo, x_hi),
            t_grid,
            x_r,
            samples_per_lambda0: self.grid.samples_per_lambda0,
        })
    }

    fn schedule(
        &self,
        lead: &PulseInjection,
        res: Option<&ResonanceConstants>,
        geometry: &LayerStack,
    ) -> RunResult<Option<ControlSchedule>> {
        let c = &self.control;
        if !c.injections.is_empty() || !c.auto_amplitude {
            if c.injections.is_empty() {
                return Err(RunError::Config("control.auto_amplitude = false needs control.injections".into()));
            }
            let tau_rt = res.map_or(2.0 * self.l_b, |r| r.tau_rt);
            let mut s = ControlSchedule::empty(ControlIntent::Manual, tau_rt, lead.delay);
            for e in &c.injections {
                let scale = C64::new(e.scale_re, e.scale_im);
                let inj = PulseInjection {
                    scale,
                    delay: e.delay_tau0,
                    direction: match e.direction {
                        DirectionName::Left => Direction::LeftIncident,
                        DirectionName::Right => Direction::RightIncident,
                    },
                    center0: e.center0_lambda0.unwrap_or(lead.center0),
                    envelope: lead.envelope.clone(),
                };
                s.push(inj, scale);
            }
            return Ok(Some(s));
        }
        let need_res = || {
            res.ok_or_else(|| RunError::Config("control design needs the two-mirror resonator with n_r > 1".into()))
        };
        Ok(match c.intent {
            IntentName::None => None,
            IntentName::Cancel => {
                let r = need_res()?;
                Some(design_truncation(r, r.r, 1, lead)?)
            }
            IntentName::Truncate => {
                let n = c.n.ok_or_else(|| RunError::Config("control.intent = \"truncate\" needs control.N".into()))?;
                let r = need_res()?;
                Some(design_truncation(r, r.r, n, lead)?)
            }
            IntentName::Confine => {
                let k = c.k.ok_or_else(|| RunError::Config("control.intent = \"confine\" needs control.K".into()))?;
                let r = need_res()?;
                Some(design_confinement(r, r.r, r.t, k, lead, geometry)?)
            }
        })
    }
}

/// Validated scenario with every object built, ready to solve.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub units: UnitSystem,
    pub fp: FabryPerotSpec,
    /// Stack used for the physics (vacuum in free space).
    pub stack: LayerStack,
    /// Resonator defining region positions.
    pub geometry: LayerStack,
    pub regions: Vec<RegionSpec>,
    pub freq: FrequencyGrid,
    pub lead: PulseInjection,
    pub schedule: Option<ControlSchedule>,
    pub resonance: Option<ResonanceConstants>,
    pub window: (f64, f64),
    pub t_grid: TimeGrid,
    pub x_r: f64,
    pub samples_per_lambda0: f64,
}

impl Prepared {
    /// Lead followed by any control pulses.
    pub fn injections(&self) -> Vec<PulseInjection> {
        match &self.schedule {
            Some(s) => s.with_lead(&self.lead),
            None => vec![self.lead.clone()],
        }
    }

    pub fn region(&self, name: &str) -> Option<&RegionSpec> {
        self.regions.iter().find(|r| r.name == name)
    }

    /// Integration nodes covering the spatial window.
    pub fn x_nodes(&self) -> Vec<f64> {
        sample_positions(&self.stack, self.window.0, self.window.1, self.samples_per_lambda0)
    }

    pub fn synthesizer(&self, controlled: bool) -> crate::Result<Synthesizer> {
        let inj = if controlled { self.injections() } else { vec![self.lead.clone()] };
        Synthesizer::new(&self.stack, &inj, Normalization::Lead)
    }

    /// `D(t)` and `ID(t)` over `region` for the trajectory pair.
    pub fn measure(&self, region: &RegionSpec, tau_m: f64, controlled: bool) -> crate::Result<(DistanceSeries, NonMarkovSeries)> {
        let inj = if controlled { self.injections() } else { vec![self.lead.clone()] };
        let pair = TrajectoryPair::new(&self.stack, &inj, tau_m)?;
        let d = pair.distance_series(&self.x_nodes(), region, &self.t_grid)?;
        let id = nonmarkov_content(&d)?;
        Ok((d, id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Spectra,
    Raytrace,
    Measure,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Options {
    pub out_dir: PathBuf,
    pub binary: bool,
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario_hash: String,
    pub version: String,
    pub command: String,
    pub outputs: Vec<OutputRecord>,
    pub timings_s: BTreeMap<String, f64>,
    pub cache_equivalent: bool,
    pub note: String,
}

struct Writer<'a> {
    dir: &'a Path,
    header: String,
    records: Vec<OutputRecord>,
}

impl<'a> Writer<'a> {
    /// Writes through a temporary file in the target directory, then renames.
    fn write(&mut self, name: &str, bytes: &[u8]) -> RunResult<()> {
        let io = |e: std::io::Error| RunError::Io(format!("{}: {e}", self.dir.join(name).display()));
        let mut tmp = tempfile::NamedTempFile::new_in(self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            tmp.as_file()
                .set_permissions(fs::Permissions::from_mode(0o644))
                .map_err(io)?;
        }
        tmp.persist(self.dir.join(name)).map_err(|e| io(e.error))?;
        self.records.push(OutputRecord {
            path: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn text(&mut self, name: &str, extra_header: &str, body: &str) -> RunResult<()> {
        let mut s = self.header.clone();
        s.push_str(extra_header);
        s.push_str(body);
        self.write(name, s.as_bytes())
    }
}

/// Parses, validates and executes `config_path` for `command`.
pub fn run_scenario(command: Command, config_path: &Path, opts: &Options) -> RunResult<RunManifest> {
    let mut timings = BTreeMap::new();
    let clock = Instant::now();
    let scenario = Scenario::from_path(config_path)?;
    let prepared = scenario.prepare()?;
    timings.insert("prepare".to_string(), clock.elapsed().as_secs_f64());
    let hash = scenario.content_hash();
    if command == Command::Validate {
        if !opts.quiet {
            eprintln!("{}: ok (scenario {hash})", config_path.display());
        }
        return Ok(RunManifest {
            scenario_hash: hash,
            version: VERSION.to_string(),
            command: "validate".into(),
            outputs: Vec::new(),
            timings_s: timings,
            cache_equivalent: false,
            note: "validated without solving".into(),
        });
    }

    fs::create_dir_all(&opts.out_dir).map_err(|e| RunError::Io(format!("{}: {e}", opts.out_dir.display())))?;
    let previous = fs::read_to_string(opts.out_dir.join("manifest.json"))
        .ok()
        .and_then(|s| serde_json::from_str::<RunManifest>(&s).ok());
    let mut w = Writer {
        dir: &opts.out_dir,
        header: format!("# cavity-ctl {VERSION}\n# scenario={hash}\n"),
        records: Vec::new(),
    };
    let log = |msg: &str| {
        if !opts.quiet {
            eprintln!("{msg}");
        }
    };

    let out = &scenario.outputs;
    let wants = |flag: bool, only: Command| command == only || (command == Command::Run && flag);
    if wants(out.spectra, Command::Spectra) {
        let t = Instant::now();
        w.text("spectra.dat", "", &spectra_table(&scenario, &prepared)?)?;
        timings.insert("spectra".into(), t.elapsed().as_secs_f64());
        log("wrote spectra.dat");
    }
    if wants(out.raytrace, Command::Raytrace) {
        let t = Instant::now();
        w.text("raytrace.dat", "", &raytrace_table(&scenario, &prepared)?)?;
        timings.insert("raytrace".into(), t.elapsed().as_secs_f64());
        log("wrote raytrace.dat");
    }
    if command == Command::Run && out.spacetime {
        let t = Instant::now();
        write_spacetime(&mut w, &scenario, &prepared, opts.binary)?;
        timings.insert("spacetime".into(), t.elapsed().as_secs_f64());
        log("wrote space-time field");
    }
    if command == Command::Run && out.timeseries {
        let t = Instant::now();
        let synth = prepared.synthesizer(true)?;
        let series = synth.time_series(prepared.x_r, &prepared.t_grid);
        let mut body = String::new();
        for (m, v) in series.iter().enumerate() {
            writeln!(body, "{:.4} {:.9e} {:.9e} {:.9e}", prepared.t_grid.at(m), v.re, v.im, v.norm_sqr()).unwrap();
        }
        w.text(
            "timeseries.dat",
            &format!("# x_R={}\n# columns: t re im abs2\n", prepared.x_r),
            &body,
        )?;
        timings.insert("timeseries".into(), t.elapsed().as_secs_f64());
        log("wrote timeseries.dat");
    }
    if wants(out.measures, Command::Measure) {
        let m = scenario
            .measure
            .as_ref()
            .ok_or_else(|| RunError::Config("measures need a [measure] table".into()))?;
        let t = Instant::now();
        let mut summary = String::new();
        let variants: &[(bool, &str)] = if m.compare_uncontrolled && prepared.schedule.is_some() {
            &[(true, ""), (false, "_uncontrolled")]
        } else {
            &[(true, "")]
        };
        for name in &m.regions {
            let region = prepared.region(name).expect("validated");
            for &(controlled, suffix) in variants {
                let (d, id) = prepared.measure(region, m.tau_m, controlled)?;
                let file = format!("measure_{}{suffix}.dat", file_safe(name));
                let mut body = String::new();
                for k in 0..d.d.len() {
                    writeln!(body, "{:.4} {:.9e} {:.9e}", d.t_grid[k], d.d[k], id.id[k]).unwrap();
                }
                w.text(
                    &file,
                    &format!(
                        "# region={name} tau_M={} controlled={controlled}\n# columns: t D ID\n",
                        m.tau_m
                    ),
                    &body,
                )?;
                let variant = if controlled && prepared.schedule.is_some() { "controlled" } else { "uncontrolled" };
                writeln!(summary, "{name} {variant} {:.9e}", id.total)
                    .unwrap();
                log(&format!("wrote {file} (ID = {:.6})", id.total));
            }
        }
        w.text("measure_summary.dat", "# columns: region variant ID_total\n", &summary)?;
        timings.insert("measure".into(), t.elapsed().as_secs_f64());
    }

    let cache_equivalent = previous.is_some_and(|p| {
        p.scenario_hash == hash
            && p.version == VERSION
            && p.outputs.iter().map(|o| (&o.path, &o.sha256)).collect::<Vec<_>>()
                == w.records.iter().map(|o| (&o.path, &o.sha256)).collect::<Vec<_>>()
    });
    let note = if cache_equivalent {
        "outputs are byte-identical to the previous run of this scenario and version".to_string()
    } else {
        "fresh outputs; reruns of the same scenario and version reproduce them byte for byte".to_string()
    };
    let manifest = RunManifest {
        scenario_hash: hash,
        version: VERSION.to_string(),
        command: format!("{command:?}").to_lowercase(),
        outputs: w.records.clone(),
        timings_s: timings,
        cache_equivalent,
        note,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    w.write("manifest.json", json.as_bytes())?;
    Ok(manifest)
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| match c {
            '\'' => 'p',
            c if c.is_ascii_alphanumeric() || c == '_' || c == '-' => c,
            _ => '_',
        })
        .collect()
}

fn spectra_table(scenario: &Scenario, p: &Prepared) -> RunResult<String> {
    let n = scenario.outputs.spectra_points.max(2);
    let (lo, hi) = (p.freq.samples()[0], p.freq.samples()[p.freq.len() - 1]);
    let mirror = scenario.fabry_perot().mirror_thickness();
    let mut s = String::from("# columns: omega R T re_r im_r re_t im_t mirror_T_analytic\n");
    for i in 0..n {
        let omega = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let a = stack_scattering(&p.stack, omega)?;
        let mt = mirror_transmission(scenario.n_r, mirror, 1.0 / omega);
        writeln!(
            s,
            "{omega:.9} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {mt:.12e}",
            a.reflectance(),
            a.transmittance(),
            a.r_left.re,
            a.r_left.im,
            a.t_left.re,
            a.t_left.im
        )
        .unwrap();
    }
    Ok(s)
}

fn raytrace_table(scenario: &Scenario, p: &Prepared) -> RunResult<String> {
    let res = p
        .resonance
        .ok_or_else(|| RunError::Config("raytrace needs the two-mirror resonator with n_r > 1".into()))?;
    let schedule = p
        .schedule
        .clone()
        .unwrap_or_else(|| ControlSchedule::empty(ControlIntent::Cancel, res.tau_rt, p.lead.delay));
    let events = raytrace(res.r, res.t, &schedule, scenario.outputs.raytrace_slots)?;
    let mut s = format!(
        "# r={:.12} t={:.12} tau_RT={} tau_Q={:.6} Q={:.3}\n# columns: t side re im energy\n",
        res.r, res.t, res.tau_rt, res.tau_q, res.q
    );
    for e in events {
        let side = match e.side {
            Side::Left => "L",
            Side::Right => "R",
        };
        writeln!(
            s,
            "{:.4} {side} {:.12e} {:.12e} {:.12e}",
            e.time,
            e.amplitude.re,
            e.amplitude.im,
            e.energy()
        )
        .unwrap();
    }
    Ok(s)
}

fn write_spacetime(w: &mut Writer, scenario: &Scenario, p: &Prepared, binary: bool) -> RunResult<()> {
    let out = &scenario.outputs;
    let (x_lo, x_hi) = p.window;
    let nx = ((x_hi - x_lo) / out.spacetime_dx_lambda0).floor() as usize + 1;
    let xs: Vec<f64> = (0..nx).map(|i| x_lo + out.spacetime_dx_lambda0 * i as f64).collect();
    let tg = TimeGrid::span(scenario.grid.t_max_tau0, out.spacetime_dt_tau0)?;
    let field: SpaceTimeField = assemble_field(&p.stack, &p.injections(), &xs, &tg)?;
    let grids = format!(
        "# nt={} t_start={} t_step={} nx={nx} x_start={x_lo} x_step={}\n",
        tg.len, tg.start, tg.step, out.spacetime_dx_lambda0
    );
    if binary {
        let mut bytes = Vec::with_capacity(8 * field.values().len());
        for v in field.values() {
            bytes.extend_from_slice(&v.norm_sqr().to_le_bytes());
        }
        w.write("spacetime.bin", &bytes)?;
        let hdr = format!(
            "{}{grids}rows={}\ncols={nx}\ndtype=f64le\nlayout=row-major, one row per time sample\nquantity=abs2\n",
            w.header, tg.len
        );
        w.write("spacetime.hdr", hdr.as_bytes())
    } else {
        let mut body = String::with_capacity(64 * field.values().len());
        for it in 0..tg.len {
            let t = tg.at(it);
            for (ix, v) in field.row(it).iter().enumerate() {
                writeln!(body, "{t:.4} {:.6} {:.9e} {:.9e} {:.9e}", xs[ix], v.re, v.im, v.norm_sqr()).unwrap();
            }
        }
        w.text("spacetime.dat", &format!("{grids}# columns: t x re im abs2\n"), &body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n_r = 2.5
L_B_lambda0 = 15.0
L_A_lambda0 = 60.0
L_C_lambda0 = 40.0

[pulse]
T0_omega0 = 60.0
center0_lambda0 = 30.0

[grid]
t_max_tau0 = 100.0
n_freq = 257
"#;

    #[test]
    fn minimal_scenario_prepares() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        let p = s.prepare().unwrap();
        assert_eq!(p.regions.len(), 4);
        assert!(p.schedule.is_none());
        assert!((p.resonance.unwrap().tau_rt - 30.0).abs() < 1e-15);
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINIMAL.replace("n_r = 2.5\n", "");
        let err = Scenario::from_toml_str(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("n_r"), "{err}");
    }

    #[test]
    fn aliasing_guard_is_exit_3_with_hint() {
        let text = MINIMAL.replace("n_freq = 257", "n_freq = 20");
        let err = Scenario::from_toml_str(&text).unwrap().prepare().unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("at least 102"), "{err}");
    }

    #[test]
    fn launch_guard() {
        let text = MINIMAL.replace("center0_lambda0 = 30.0", "center0_lambda0 = 55.0");
        let err = Scenario::from_toml_str(&text).unwrap().prepare().unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn unknown_region_rejected() {
        let text = format!("{MINIMAL}\n[measure]\ntau_M_tau0 = 10.0\nregions = [\"Z\"]\n");
        let err = Scenario::from_toml_str(&text).unwrap().prepare().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = Scenario::from_toml_str(MINIMAL).unwrap();
        let b = Scenario::from_toml_str(&MINIMAL.replace("n_r = 2.5", "n_r   =   2.50   # mirrors")).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        let c = Scenario::from_toml_str(&MINIMAL.replace("n_r = 2.5", "n_r = 2.4")).unwrap();
        assert_ne!(a.content_hash(), c.content_hash());
    }

    /// Room on the left for control pulses launched up to two round trips later.
    fn long_lead() -> String {
        MINIMAL
            .replace("L_A_lambda0 = 60.0", "L_A_lambda0 = 130.0")
            .replace("center0_lambda0 = 30.0", "center0_lambda0 = 100.0")
    }

    #[test]
    fn truncation_control_from_config() {
        let text = format!("{}\n[control]\nintent = \"truncate\"\nN = 2\n", long_lead());
        let p = Scenario::from_toml_str(&text).unwrap().prepare().unwrap();
        let s = p.schedule.unwrap();
        assert_eq!(s.intent, ControlIntent::Truncate(2));
        assert_eq!(s.injections[0].delay, 60.0);
    }

    #[test]
    fn manual_injections_override() {
        let text = format!(
            "{}\n[control]\nintent = \"cancel\"\ninjections = [{{ scale_re = -0.5, delay_tau0 = 30.0, direction = \"left\" }}]\n",
            long_lead()
        );
        let p = Scenario::from_toml_str(&text).unwrap().prepare().unwrap();
        let s = p.schedule.unwrap();
        assert_eq!(s.intent, ControlIntent::Manual);
        assert_eq!(s.injections[0].scale, C64::new(-0.5, 0.0));
    }

    #[test]
    fn file_names() {
        assert_eq!(file_safe("B'"), "Bp");
        assert_eq!(file_safe("A"), "A");
    }
}
