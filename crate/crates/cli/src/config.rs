//! Run configuration: a TOML document with one table per pipeline stage.
//! Every key is optional; missing keys take the defaults below.

use std::path::PathBuf;

use moire_core::geometry::{LatticeKind, LatticeSpec, PointGroup, MAX_TWIST_DEG};
use moire_core::protocol::Line;
use moire_core::qubit::{DEFAULT_C0, DEFAULT_C0P};
use moire_core::wellsolver::MIN_GRID;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Invalid value, reported with the dotted path of the offending key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Syntax(String),
    #[error("config: invalid value at `{path}`: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub material: MaterialConfig,
    pub sweep: SweepConfig,
    pub solver: SolverConfig,
    pub tightbinding: TightBindingConfig,
    pub qubit: QubitConfig,
    pub decoherence: DecoherenceConfig,
    pub protocol: ProtocolConfig,
    pub screen: ScreenConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialConfig {
    /// Monolayer lattice constant, nm.
    pub a: f64,
    pub lattice: LatticeKind,
    /// Site point group; D4 for square and D3 for triangular when omitted.
    pub point_group: Option<PointGroup>,
    /// Well depth, meV.
    pub v0: f64,
    /// Well radius, nm.
    pub r0: f64,
    /// Effective mass, electron masses.
    pub m_eff: f64,
    /// Bands narrower than this (meV) count as flat.
    pub flat_threshold: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        Self { a: 0.417, lattice: LatticeKind::Square, point_group: None, v0: 201.0, r0: 1.0, m_eff: 2.5, flat_threshold: 1.0 }
    }
}

impl MaterialConfig {
    pub fn lattice_spec(&self) -> moire_core::Result<LatticeSpec> {
        let group = self.point_group.unwrap_or(match self.lattice {
            LatticeKind::Square => PointGroup::D4,
            LatticeKind::Triangular => PointGroup::D3,
        });
        LatticeSpec::new(self.a, self.lattice, group)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Twist angle (degrees) for single-angle commands.
    pub angle: f64,
    /// Twist angles (degrees) visited by `sweep`.
    pub angles: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { angle: 2.66, angles: vec![5.0, 6.0, 7.0, 8.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub nx: usize,
    /// Defaults to `nx` on square cells and `round(√3·nx)` on the
    /// rectangular triangular cell, keeping the spacing isotropic.
    pub ny: Option<usize>,
    pub n_bands: usize,
    /// High-symmetry labels; the lattice's standard path when omitted.
    pub kpath: Option<Vec<String>>,
    pub samples_per_segment: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { nx: 48, ny: None, n_bands: 12, kpath: None, samples_per_segment: 4, tol: 1e-10, max_iterations: 500 }
    }
}

impl SolverConfig {
    pub fn ny_for(&self, kind: LatticeKind) -> usize {
        self.ny.unwrap_or(match kind {
            LatticeKind::Square => self.nx,
            LatticeKind::Triangular => (self.nx as f64 * 3f64.sqrt()).round() as usize,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TightBindingConfig {
    /// On-site energy, meV.
    pub eps: f64,
    /// Nearest-neighbour hopping, meV.
    pub t: f64,
    /// Next-nearest-neighbour hopping, meV.
    pub t2: f64,
    /// Direct (Hartree) couplings `[on-site, NN, NNN]`, meV.
    pub coulomb: [f64; 3],
    /// Exchange couplings `[on-site, NN, NNN]`, meV.
    pub exchange: [f64; 3],
    /// Electrons per site and orbital, in [0, 1].
    pub filling: f64,
    pub samples_per_segment: usize,
}

impl Default for TightBindingConfig {
    fn default() -> Self {
        Self { eps: 0.0, t: 32.5, t2: 0.0, coulomb: [0.0; 3], exchange: [0.0; 3], filling: 0.5, samples_per_segment: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QubitConfig {
    pub g_ground: f64,
    pub g_excited: f64,
    /// Magnetic field, T.
    pub b: f64,
    /// Rabi frequency, rad/ps.
    pub omega: f64,
    /// Detuning, rad/ps.
    pub delta: f64,
    /// Inter-qubit distance, nm. Derived from `angle` when omitted.
    pub r: Option<f64>,
    /// Twist angle fixing the distance; `sweep.angle` when omitted.
    pub angle: Option<f64>,
    /// Charge–dipole constant, meV·nm².
    pub c0: f64,
    /// Dipole–dipole constant, meV·nm³.
    pub c0p: f64,
    /// Amplitude decay rate, ps⁻¹.
    pub decay_rate: f64,
    /// Pure dephasing rate, ps⁻¹.
    pub dephasing_rate: f64,
    /// Evolution time, ps. One Rabi cycle (single qubit) or two swap
    /// times (pair) when omitted.
    pub duration: Option<f64>,
    /// Integration step, ps.
    pub dt: f64,
}

impl Default for QubitConfig {
    fn default() -> Self {
        Self {
            g_ground: 2.0,
            g_excited: 1.63,
            b: 1.0,
            omega: 1.0,
            delta: 0.0,
            r: None,
            angle: None,
            c0: DEFAULT_C0,
            c0p: DEFAULT_C0P,
            decay_rate: 0.0,
            dephasing_rate: 0.0,
            duration: None,
            dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub from: String,
    pub to: String,
    /// `E_from − E_to`, meV.
    pub energy: f64,
    /// Transition dipole, e·nm.
    pub dipole: f64,
    #[serde(default = "yes")]
    pub allowed: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoherenceConfig {
    /// K
    pub temperature: f64,
    /// Phonon-limited lifetime, s; infinite when omitted.
    pub tau_ep: Option<f64>,
    /// Barrier for the thermal escape estimate, meV.
    pub barrier: f64,
    pub channels: Vec<ChannelConfig>,
}

impl Default for DecoherenceConfig {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            tau_ep: None,
            barrier: 277.0,
            channels: vec![ChannelConfig { from: "E".into(), to: "A2".into(), energy: 78.0, dipole: 1.0, allowed: true }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Orbital gap between the A2 ground and E excited levels, meV.
    pub gap: f64,
    /// Spin-conserving radiative decay rate, s⁻¹.
    pub decay_rate: f64,
    /// Ionization rate out of the excited `|↑⟩` level during pumping, s⁻¹.
    pub ionization_rate: f64,
    pub line: Line,
    /// Pumping rate on the driven line, s⁻¹.
    pub drive_rate: f64,
    /// Spin-flip branching ratio of the excited-state decay.
    pub leak: f64,
    /// Pumping time, s.
    pub duration: f64,
    pub samples: usize,
    pub readout: ReadoutConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            gap: 78.0,
            decay_rate: 1e8,
            ionization_rate: 0.0,
            line: Line::Beta,
            drive_rate: 1e9,
            leak: moire_core::protocol::DEFAULT_LEAK,
            duration: 1e-4,
            samples: 200,
            readout: ReadoutConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutConfig {
    /// Ionization rate of the bright branch, s⁻¹; `inf` for instantaneous.
    pub ionize_rate: f64,
    /// Photon emission rate while cycling, s⁻¹.
    pub cycle_rate: f64,
    pub collection: f64,
    /// Counting window, s.
    pub window: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self { ionize_rate: f64::INFINITY, cycle_rate: 1e8, collection: 0.02, window: 1e-5, trials: 10_000, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreenConfig {
    /// Dataset path; the bundled sample when omitted.
    pub input: Option<PathBuf>,
    /// Exclusive lower gap bound, eV.
    pub gap_min: f64,
    /// Inclusive upper gap bound, eV.
    pub gap_max: f64,
    /// meV/Å²
    pub vdw_threshold: f64,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self { input: None, gap_min: 0.0, gap_max: 5.0, vdw_threshold: 25.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn check(path: &str, x: f64, ok: bool, constraint: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(path, format!("must be {constraint}, got {x}")))
    }
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    check(path, x, x > 0.0 && x.is_finite(), "positive and finite")
}

fn non_negative(path: &str, x: f64) -> Result<(), ConfigError> {
    check(path, x, x >= 0.0 && x.is_finite(), "non-negative and finite")
}

fn finite(path: &str, x: f64) -> Result<(), ConfigError> {
    check(path, x, x.is_finite(), "finite")
}

fn twist(path: &str, x: f64) -> Result<(), ConfigError> {
    check(path, x, x > 0.0 && x <= MAX_TWIST_DEG, &format!("in (0, {MAX_TWIST_DEG}] degrees"))
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.material;
        positive("material.a", m.a)?;
        non_negative("material.v0", m.v0)?;
        positive("material.r0", m.r0)?;
        positive("material.m_eff", m.m_eff)?;
        positive("material.flat_threshold", m.flat_threshold)?;
        m.lattice_spec().map_err(|e| invalid("material.point_group", e.to_string()))?;

        twist("sweep.angle", self.sweep.angle)?;
        if self.sweep.angles.is_empty() {
            return Err(invalid("sweep.angles", "must list at least one angle"));
        }
        for (i, &a) in self.sweep.angles.iter().enumerate() {
            twist(&format!("sweep.angles[{i}]"), a)?;
        }

        let s = &self.solver;
        if s.nx < MIN_GRID {
            return Err(invalid("solver.nx", format!("must be at least {MIN_GRID}, got {}", s.nx)));
        }
        if let Some(ny) = s.ny {
            if ny < MIN_GRID {
                return Err(invalid("solver.ny", format!("must be at least {MIN_GRID}, got {ny}")));
            }
        }
        let cells = s.nx * s.ny_for(m.lattice);
        if s.n_bands == 0 || s.n_bands > cells / 4 {
            return Err(invalid("solver.n_bands", format!("must lie in 1..={}, got {}", cells / 4, s.n_bands)));
        }
        if s.samples_per_segment == 0 {
            return Err(invalid("solver.samples_per_segment", "must be at least 1"));
        }
        positive("solver.tol", s.tol)?;
        if s.max_iterations == 0 {
            return Err(invalid("solver.max_iterations", "must be at least 1"));
        }
        if let Some(labels) = &s.kpath {
            if labels.len() < 2 {
                return Err(invalid("solver.kpath", "needs at least two labels"));
            }
            if let Some(bad) = labels.iter().find(|l| !matches!(l.as_str(), "G" | "Γ" | "X" | "Y" | "M" | "S")) {
                return Err(invalid("solver.kpath", format!("unknown label '{bad}' (expected G, X, Y, M or S)")));
            }
        }

        let tb = &self.tightbinding;
        finite("tightbinding.eps", tb.eps)?;
        finite("tightbinding.t", tb.t)?;
        finite("tightbinding.t2", tb.t2)?;
        for (i, (&j, &k)) in tb.coulomb.iter().zip(&tb.exchange).enumerate() {
            finite(&format!("tightbinding.coulomb[{i}]"), j)?;
            finite(&format!("tightbinding.exchange[{i}]"), k)?;
        }
        check("tightbinding.filling", tb.filling, (0.0..=1.0).contains(&tb.filling), "in [0, 1]")?;
        if tb.samples_per_segment == 0 {
            return Err(invalid("tightbinding.samples_per_segment", "must be at least 1"));
        }

        let q = &self.qubit;
        finite("qubit.g_ground", q.g_ground)?;
        finite("qubit.g_excited", q.g_excited)?;
        non_negative("qubit.b", q.b)?;
        finite("qubit.omega", q.omega)?;
        finite("qubit.delta", q.delta)?;
        if let Some(r) = q.r {
            positive("qubit.r", r)?;
        }
        if let Some(a) = q.angle {
            twist("qubit.angle", a)?;
        }
        non_negative("qubit.c0", q.c0)?;
        non_negative("qubit.c0p", q.c0p)?;
        non_negative("qubit.decay_rate", q.decay_rate)?;
        non_negative("qubit.dephasing_rate", q.dephasing_rate)?;
        if let Some(t) = q.duration {
            non_negative("qubit.duration", t)?;
        }
        positive("qubit.dt", q.dt)?;

        let d = &self.decoherence;
        non_negative("decoherence.temperature", d.temperature)?;
        if let Some(t) = d.tau_ep {
            check("decoherence.tau_ep", t, t > 0.0, "positive")?;
        }
        non_negative("decoherence.barrier", d.barrier)?;
        for (i, ch) in d.channels.iter().enumerate() {
            finite(&format!("decoherence.channels[{i}].energy"), ch.energy)?;
            non_negative(&format!("decoherence.channels[{i}].dipole"), ch.dipole)?;
        }

        let p = &self.protocol;
        positive("protocol.gap", p.gap)?;
        non_negative("protocol.decay_rate", p.decay_rate)?;
        non_negative("protocol.ionization_rate", p.ionization_rate)?;
        non_negative("protocol.drive_rate", p.drive_rate)?;
        non_negative("protocol.leak", p.leak)?;
        non_negative("protocol.duration", p.duration)?;
        if p.samples == 0 {
            return Err(invalid("protocol.samples", "must be at least 1"));
        }
        let r = &p.readout;
        check("protocol.readout.ionize_rate", r.ionize_rate, r.ionize_rate >= 0.0, "non-negative (inf allowed)")?;
        non_negative("protocol.readout.cycle_rate", r.cycle_rate)?;
        check("protocol.readout.collection", r.collection, (0.0..=1.0).contains(&r.collection), "in [0, 1]")?;
        non_negative("protocol.readout.window", r.window)?;
        if r.trials == 0 {
            return Err(invalid("protocol.readout.trials", "must be at least 1"));
        }

        let sc = &self.screen;
        non_negative("screen.gap_min", sc.gap_min)?;
        check("screen.gap_max", sc.gap_max, sc.gap_max > sc.gap_min && sc.gap_max.is_finite(), "finite and above screen.gap_min")?;
        positive("screen.vdw_threshold", sc.vdw_threshold)?;

        if self.output.formats.is_empty() {
            return Err(invalid("output.formats", "must list at least one of \"csv\", \"json\""));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    /// SHA-256 of the canonical serialization, so comments, key order and
    /// formatting of the source document do not change the hash. The
    /// `output` table only decides where files go and is left out.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { output: OutputConfig::default(), ..self.clone() };
        hex::encode(Sha256::digest(canonical.to_toml().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.material.v0, 201.0);
        assert_eq!(cfg.material.r0, 1.0);
        assert_eq!(cfg.material.m_eff, 2.5);
        assert_eq!(cfg.material.a, 0.417);
        assert_eq!(cfg.qubit.g_ground, 2.0);
        assert_eq!(cfg.qubit.c0, 1440.0);
        assert_eq!(cfg.qubit.c0p, 1000.0);
        assert_eq!(cfg.material.flat_threshold, 1.0);
    }

    #[test]
    fn small_grid_is_rejected_with_path() {
        let err = parse_config("[solver]\nnx = 16\n").unwrap_err();
        match &err {
            ConfigError::Invalid { path, message } => {
                assert_eq!(path, "solver.nx");
                assert!(message.contains("32"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config("[material]\ndepth = 3\n").unwrap_err().to_string();
        assert!(err.contains("depth"), "{err}");
        let err = parse_config("frobnicate = 1\n").unwrap_err().to_string();
        assert!(err.contains("frobnicate"), "{err}");
    }

    #[test]
    fn nested_paths_are_reported() {
        let err = parse_config("[protocol.readout]\ncollection = 1.5\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref path, .. } if path == "protocol.readout.collection"));
        let err = parse_config("[sweep]\nangles = [2.0, -1.0]\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref path, .. } if path == "sweep.angles[1]"));
        let err = parse_config("[material]\nlattice = \"triangular\"\npoint_group = \"D4\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref path, .. } if path == "material.point_group"));
    }

    #[test]
    fn round_trip() {
        let doc = r#"
            [material]
            lattice = "triangular"
            point_group = "D6"
            v0 = 167.0
            [sweep]
            angles = [2.0, 2.66, 3.5, 4.58]
            [solver]
            kpath = ["G", "X", "S", "G"]
            [decoherence]
            tau_ep = 1e-4
            [[decoherence.channels]]
            from = "E"
            to = "A1"
            energy = 60.0
            dipole = 0.5
        "#;
        let cfg = parse_config(doc).unwrap();
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        let defaults = parse_config(&RunConfig::default().to_toml()).unwrap();
        assert_eq!(defaults, RunConfig::default());
        assert!(defaults.protocol.readout.ionize_rate.is_infinite());
    }

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let a = parse_config("[material]\nv0 = 201.0\n").unwrap();
        let b = parse_config("# comment\n[material]\n  v0 = 201\n").unwrap();
        let c = parse_config("[material]\nv0 = 200.0\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
        let moved = parse_config("[material]\nv0 = 201.0\n[output]\ndirectory = \"elsewhere\"\n").unwrap();
        assert_eq!(a.hash(), moved.hash());
    }

    #[test]
    fn triangular_grid_is_isotropic() {
        let s = SolverConfig::default();
        assert_eq!(s.ny_for(LatticeKind::Square), 48);
        assert_eq!(s.ny_for(LatticeKind::Triangular), 83);
    }
}
