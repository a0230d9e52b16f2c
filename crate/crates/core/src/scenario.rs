//! Scenario definitions and the flat config format.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment                  (also after values: key = value # note)
//! [section]                  switches the current section
//! key = value                sets `section.key`
//! ```
//!
//! Keys may also be written fully qualified (`horizon.t_end = 1e-3`) outside
//! any section. Unknown keys are errors. A config starts from the built-in
//! scenario named by `scenario.base` (default `assoc-quantum`) and applies
//! the remaining keys in file order. [`Scenario::to_config`] writes every key,
//! so a snapshot re-parses to the identical scenario.
//!
//! | key | values |
//! |-----|--------|
//! | `scenario.name` | free text |
//! | `scenario.base` | built-in scenario name |
//! | `scenario.process` | `association`, `dissociation` |
//! | `scenario.motion` | `quantum`, `classical` |
//! | `scenario.shape` | `static`, `straight`, `trig` |
//! | `scenario.initial` | `association`, `dissociation`, `custom` |
//! | `scenario.initial_photons` | five counts, `ω↑,ω↓,Ω↑,Ω↓,Ωˢ` order |
//! | `scenario.initial_slots` | occupied slot numbers 1–8, comma separated |
//! | `scenario.initial_nucleus` | 0 or 1 |
//! | `params.pack` | `paper-defaults` (resets every physical constant) |
//! | `params.hbar`, `params.zeta0..2` | number |
//! | `params.freq.<mode>`, `params.coupling.<mode>`, `params.gamma.<mode>`, `params.mu.<mode>` | number |
//! | `basis.n_max` | one value for every mode |
//! | `basis.n_max.<mode>` | per-mode truncation |
//! | `integrator.dt` | `auto` or seconds |
//! | `integrator.ptsim_depth` | integer |
//! | `integrator.strategy` | `auto`, `direct`, `fast-forward` |
//! | `integrator.prune` | `true`, `false` |
//! | `horizon.t_end` | `auto` or seconds |
//! | `horizon.stride` | steps per record (fixed horizon) |
//! | `horizon.records`, `horizon.ramp_records` | record counts (auto horizon) |
//! | `horizon.ramp_time` | classical schedule duration T |
//! | `horizon.t_min`, `horizon.t_cap`, `horizon.tol` | plateau search |
//!
//! `<mode>` is one of `omega_up`, `omega_down`, `big_omega_up`,
//! `big_omega_down`, `big_omega_spin`.

use std::fmt::Write as _;

use crate::analysis::Classifier;
use crate::basis::{BasisState, Mode, ModeSpec, Slot, NUM_MODES, NUM_SLOTS};
use crate::dynamics::sector::{AutoHorizon, Strategy};
use crate::model::{schedules_for, CouplingSchedule, ModelParams, Motion, Process, ScheduleShape};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Atoms apart, one ↓ electron in each ground orbital, one photon in each
    /// of Ω↑, Ω↓, Ωˢ.
    Association,
    /// Nuclei together, both electrons in the bonding orbital, one photon in
    /// each of ω↑, ω↓.
    Dissociation,
    Custom(BasisState),
}

impl InitialState {
    pub fn state(&self) -> BasisState {
        use crate::basis::{Atom, Orbital, Spin};
        match self {
            InitialState::Association => BasisState::new(
                [0, 0, 1, 1, 1],
                &[
                    Slot::new(Atom::First, Orbital::Ground, Spin::Down),
                    Slot::new(Atom::Second, Orbital::Ground, Spin::Down),
                ],
                1,
            ),
            InitialState::Dissociation => {
                BasisState::new([1, 1, 0, 0, 0], &[Slot::bonding(Spin::Up), Slot::bonding(Spin::Down)], 0)
            }
            InitialState::Custom(s) => *s,
        }
    }

    fn key(&self) -> &'static str {
        match self {
            InitialState::Association => "association",
            InitialState::Dissociation => "dissociation",
            InitialState::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HorizonSpec {
    Auto,
    Until(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub process: Process,
    pub motion: Motion,
    pub shape: ScheduleShape,
    pub initial: InitialState,
    pub params: ModelParams,
    pub spec: ModeSpec,
    /// `None` selects the default step rule.
    pub dt: Option<f64>,
    pub ptsim_depth: u32,
    pub strategy: Strategy,
    pub prune: bool,
    pub t_end: HorizonSpec,
    pub stride: u64,
    pub ramp_time: f64,
    pub auto: AutoHorizon,
}

/// Built-in scenario names.
pub const BUILTINS: [&str; 4] = ["assoc-quantum", "dissoc-quantum", "assoc-classical", "dissoc-classical"];

/// Default classical schedule duration.
pub const DEFAULT_RAMP_TIME: f64 = 1e-6;

impl Scenario {
    pub fn builtin(name: &str) -> Result<Scenario> {
        let (process, motion) = match name {
            "assoc-quantum" => (Process::Association, Motion::Quantum),
            "dissoc-quantum" => (Process::Dissociation, Motion::Quantum),
            "assoc-classical" => (Process::Association, Motion::Classical),
            "dissoc-classical" => (Process::Dissociation, Motion::Classical),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown scenario '{name}'; built-ins are {}",
                    BUILTINS.join(", ")
                )))
            }
        };
        Ok(Scenario {
            name: name.to_string(),
            process,
            motion,
            shape: match motion {
                Motion::Quantum => ScheduleShape::Static,
                Motion::Classical => ScheduleShape::Straight,
            },
            initial: match process {
                Process::Association => InitialState::Association,
                Process::Dissociation => InitialState::Dissociation,
            },
            params: ModelParams::paper_defaults().with_process_influx(process, 0.5),
            spec: ModeSpec::uniform(1, 2),
            dt: None,
            ptsim_depth: 20,
            strategy: Strategy::Auto,
            prune: true,
            t_end: HorizonSpec::Auto,
            stride: 1000,
            ramp_time: DEFAULT_RAMP_TIME,
            auto: AutoHorizon::default(),
        })
    }

    pub fn describe(name: &str) -> &'static str {
        match name {
            "assoc-quantum" => "two atoms + Ω↑, Ω↓, Ωˢ photons, tunnelling nuclei, Ω-group influx μ=0.5",
            "dissoc-quantum" => "H2 ground state + ω↑, ω↓ photons, tunnelling nuclei, ω-group influx μ=0.5",
            "assoc-classical" => "association with scheduled couplings (shape straight|trig), no tunnelling",
            "dissoc-classical" => "dissociation with scheduled couplings (shape straight|trig), no tunnelling",
            _ => "",
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.params.default_dt(self.motion))
    }

    pub fn classifier(&self) -> Classifier {
        match self.motion {
            Motion::Quantum => Classifier::NuclearAware,
            Motion::Classical => Classifier::SlotOnly,
        }
    }

    pub fn schedules(&self) -> Vec<CouplingSchedule> {
        match self.motion {
            Motion::Quantum => Vec::new(),
            Motion::Classical => schedules_for(&self.params, self.process, self.shape, self.ramp_time),
        }
    }

    /// Structural checks beyond [`ModelParams::validate`].
    pub fn check(&self) -> Result<()> {
        self.params.validate()?;
        self.spec.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if let HorizonSpec::Until(t) = self.t_end {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("t_end must be positive, got {t}"));
            }
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if self.motion == Motion::Quantum && self.shape != ScheduleShape::Static {
            return bad("quantum motion uses static couplings; set shape = static".into());
        }
        if self.motion == Motion::Classical {
            if self.shape == ScheduleShape::Static {
                return bad("classical motion needs a straight or trig schedule".into());
            }
            if !(self.ramp_time.is_finite() && self.ramp_time > 0.0) {
                return bad(format!("ramp_time must be positive, got {}", self.ramp_time));
            }
        }
        if self.ptsim_depth > crate::ptsim::MAX_DEPTH {
            return bad(format!("ptsim_depth {} too large", self.ptsim_depth));
        }
        if !(self.auto.tol > 0.0 && self.auto.t_cap > 0.0 && self.auto.records >= 4) {
            return bad("auto horizon needs tol > 0, t_cap > 0 and records >= 4".into());
        }
        if !self.initial.state().fits(&self.spec) {
            return bad(format!("initial state {} does not fit the basis", self.initial.state()));
        }
        Ok(())
    }

    /// Parse a config text.
    pub fn from_config(text: &str) -> Result<Scenario> {
        let items = parse_items(text)?;
        let base = items
            .iter()
            .rev()
            .find(|(_, k, _)| k == "scenario.base")
            .map(|(_, _, v)| v.as_str())
            .unwrap_or("assoc-quantum");
        let mut sc = Scenario::builtin(base)?;
        for (line, k, v) in &items {
            if k == "scenario.base" {
                continue;
            }
            sc.set(k, v).map_err(|e| match e {
                Error::Config { message, .. } => Error::Config { line: *line, message },
                other => Error::Config {
                    line: *line,
                    message: other.to_string(),
                },
            })?;
        }
        Ok(sc)
    }

    /// Apply one `section.key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let err = |m: String| Error::Config { line: 0, message: m };
        let num = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| err(format!("{key}: expected a number, got '{value}'")))
        };
        let int = || -> Result<u64> {
            value
                .parse::<u64>()
                .map_err(|_| err(format!("{key}: expected a non-negative integer, got '{value}'")))
        };
        let (section, rest) = key
            .split_once('.')
            .ok_or_else(|| err(format!("key '{key}' needs a section")))?;
        match (section, rest) {
            ("scenario", "name") => self.name = value.to_string(),
            ("scenario", "process") => {
                self.process = match value {
                    "association" => Process::Association,
                    "dissociation" => Process::Dissociation,
                    _ => return Err(err(format!("unknown process '{value}'"))),
                }
            }
            ("scenario", "motion") => {
                self.motion = match value {
                    "quantum" => Motion::Quantum,
                    "classical" => Motion::Classical,
                    _ => return Err(err(format!("unknown motion '{value}'"))),
                }
            }
            ("scenario", "shape") => self.shape = parse_shape(value).ok_or_else(|| err(format!("unknown shape '{value}'")))?,
            ("scenario", "initial") => {
                self.initial = match value {
                    "association" => InitialState::Association,
                    "dissociation" => InitialState::Dissociation,
                    "custom" => InitialState::Custom(self.initial.state()),
                    _ => return Err(err(format!("unknown initial state '{value}'"))),
                }
            }
            ("scenario", "initial_photons") => {
                let v = parse_list(value).map_err(err)?;
                if v.len() != NUM_MODES || v.iter().any(|&p| p > u8::MAX as u64) {
                    return Err(err("initial_photons needs five counts".into()));
                }
                let mut s = self.initial.state();
                for (k, p) in v.into_iter().enumerate() {
                    s.photons[k] = p as u8;
                }
                self.initial = InitialState::Custom(s);
            }
            ("scenario", "initial_slots") => {
                let v = parse_list(value).map_err(err)?;
                let mut slots = Vec::new();
                for n in v {
                    let slot = (n as usize)
                        .checked_sub(1)
                        .and_then(Slot::from_index)
                        .ok_or_else(|| err(format!("slot number {n} outside 1..={NUM_SLOTS}")))?;
                    slots.push(slot);
                }
                let s = self.initial.state();
                self.initial = InitialState::Custom(BasisState::new(s.photons, &slots, s.nucleus));
            }
            ("scenario", "initial_nucleus") => {
                let k = int()?;
                if k > 1 {
                    return Err(err("initial_nucleus is 0 or 1".into()));
                }
                self.initial = InitialState::Custom(self.initial.state().with_nucleus(k as u8));
            }
            ("params", "pack") => {
                if value != "paper-defaults" {
                    return Err(err(format!("unknown parameter pack '{value}'")));
                }
                self.params = ModelParams::paper_defaults().with_process_influx(self.process, 0.5);
            }
            ("params", "hbar") => self.params.hbar = num()?,
            ("params", "zeta0") => self.params.zeta[0] = num()?,
            ("params", "zeta1") => self.params.zeta[1] = num()?,
            ("params", "zeta2") => self.params.zeta[2] = num()?,
            ("params", r) => {
                let (field, mode) = r.split_once('.').ok_or_else(|| err(format!("unknown key '{key}'")))?;
                let m = Mode::from_key(mode).ok_or_else(|| err(format!("unknown mode '{mode}'")))?;
                let slot = match field {
                    "freq" => &mut self.params.freq,
                    "coupling" => &mut self.params.coupling,
                    "gamma" => &mut self.params.gamma,
                    "mu" => &mut self.params.mu,
                    _ => return Err(err(format!("unknown key '{key}'"))),
                };
                slot[m.index()] = num()?;
            }
            ("basis", "n_max") => {
                let n = int()?;
                self.spec.photon_max = [u8::try_from(n).map_err(|_| err("n_max too large".into()))?; NUM_MODES];
            }
            ("basis", r) if r.starts_with("n_max.") => {
                let m = Mode::from_key(&r[6..]).ok_or_else(|| err(format!("unknown mode in '{key}'")))?;
                self.spec.photon_max[m.index()] = u8::try_from(int()?).map_err(|_| err("n_max too large".into()))?;
            }
            ("integrator", "dt") => self.dt = if value == "auto" { None } else { Some(num()?) },
            ("integrator", "ptsim_depth") => self.ptsim_depth = int()? as u32,
            ("integrator", "strategy") => {
                self.strategy = match value {
                    "auto" => Strategy::Auto,
                    "direct" => Strategy::Direct,
                    "fast-forward" => Strategy::FastForward,
                    _ => return Err(err(format!("unknown strategy '{value}'"))),
                }
            }
            ("integrator", "prune") => {
                self.prune = value
                    .parse()
                    .map_err(|_| err(format!("prune: expected true or false, got '{value}'")))?
            }
            ("horizon", "t_end") => {
                self.t_end = if value == "auto" { HorizonSpec::Auto } else { HorizonSpec::Until(num()?) }
            }
            ("horizon", "stride") => self.stride = int()?,
            ("horizon", "records") => self.auto.records = int()? as usize,
            ("horizon", "ramp_records") => self.auto.ramp_records = int()? as usize,
            ("horizon", "ramp_time") => self.ramp_time = num()?,
            ("horizon", "t_min") => self.auto.t_min = num()?,
            ("horizon", "t_cap") => self.auto.t_cap = num()?,
            ("horizon", "tol") => self.auto.tol = num()?,
            _ => return Err(err(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Every key, in a fixed order.
    pub fn to_config(&self) -> String {
        let mut o = String::new();
        let shape = match self.shape {
            ScheduleShape::Static => "static",
            ScheduleShape::Straight => "straight",
            ScheduleShape::Trigonometric => "trig",
        };
        let s = self.initial.state();
        let _ = writeln!(o, "[scenario]");
        let _ = writeln!(o, "name = {}", self.name);
        let _ = writeln!(o, "process = {}", match self.process {
            Process::Association => "association",
            Process::Dissociation => "dissociation",
        });
        let _ = writeln!(o, "motion = {}", match self.motion {
            Motion::Quantum => "quantum",
            Motion::Classical => "classical",
        });
        let _ = writeln!(o, "shape = {shape}");
        let _ = writeln!(o, "initial = {}", self.initial.key());
        if let InitialState::Custom(_) = self.initial {
            let photons: Vec<String> = s.photons.iter().map(|p| p.to_string()).collect();
            let slots: Vec<String> = s.occupied_slots().map(|l| (l.index() + 1).to_string()).collect();
            let _ = writeln!(o, "initial_photons = {}", photons.join(","));
            let _ = writeln!(o, "initial_slots = {}", slots.join(","));
            let _ = writeln!(o, "initial_nucleus = {}", s.nucleus);
        }
        let p = &self.params;
        let _ = writeln!(o, "\n[params]");
        let _ = writeln!(o, "hbar = {:?}", p.hbar);
        for (name, vals) in [("freq", &p.freq), ("coupling", &p.coupling), ("gamma", &p.gamma), ("mu", &p.mu)] {
            for m in Mode::ALL {
                let _ = writeln!(o, "{name}.{} = {:?}", m.key(), vals[m.index()]);
            }
        }
        for (j, z) in p.zeta.iter().enumerate() {
            let _ = writeln!(o, "zeta{j} = {z:?}");
        }
        let _ = writeln!(o, "\n[basis]");
        for m in Mode::ALL {
            let _ = writeln!(o, "n_max.{} = {}", m.key(), self.spec.photon_max[m.index()]);
        }
        let _ = writeln!(o, "\n[integrator]");
        let _ = writeln!(o, "dt = {}", self.dt.map_or("auto".to_string(), |d| format!("{d:?}")));
        let _ = writeln!(o, "ptsim_depth = {}", self.ptsim_depth);
        let _ = writeln!(o, "strategy = {}", match self.strategy {
            Strategy::Auto => "auto",
            Strategy::Direct => "direct",
            Strategy::FastForward => "fast-forward",
        });
        let _ = writeln!(o, "prune = {}", self.prune);
        let _ = writeln!(o, "\n[horizon]");
        let _ = writeln!(o, "t_end = {}", match self.t_end {
            HorizonSpec::Auto => "auto".to_string(),
            HorizonSpec::Until(t) => format!("{t:?}"),
        });
        let _ = writeln!(o, "stride = {}", self.stride);
        let _ = writeln!(o, "records = {}", self.auto.records);
        let _ = writeln!(o, "ramp_records = {}", self.auto.ramp_records);
        let _ = writeln!(o, "ramp_time = {:?}", self.ramp_time);
        let _ = writeln!(o, "t_min = {:?}", self.auto.t_min);
        let _ = writeln!(o, "t_cap = {:?}", self.auto.t_cap);
        let _ = writeln!(o, "tol = {:?}", self.auto.tol);
        o
    }
}

fn parse_shape(v: &str) -> Option<ScheduleShape> {
    match v {
        "static" => Some(ScheduleShape::Static),
        "straight" => Some(ScheduleShape::Straight),
        "trig" | "trigonometric" => Some(ScheduleShape::Trigonometric),
        _ => None,
    }
}

fn parse_list(v: &str) -> std::result::Result<Vec<u64>, String> {
    v.split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|_| format!("bad list entry '{x}'")))
        .collect()
}

/// `(line, qualified key, value)` triples in file order.
fn parse_items(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut section: Option<String> = None;
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(Error::Config {
                line: line_no,
                message: format!("unterminated section header '{line}'"),
            })?;
            section = Some(name.trim().to_string());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(Error::Config {
            line: line_no,
            message: format!("expected key = value, got '{line}'"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        let key = match &section {
            Some(s) => format!("{s}.{k}"),
            None => k.to_string(),
        };
        out.push((line_no, key, v.to_string()));
    }
    Ok(out)
}
