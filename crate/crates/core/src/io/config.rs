//! `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors. Missing keys take their defaults; `profile` only changes the
//! defaults of `subcarriers` and `cp_len`, so explicit values always win.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `profile` | `desk` | `desk` (64 subcarriers, CP 12) or `paper` (6400, CP 1280) |
//! | `modulation` | `QPSK` | one or more scheme names, comma separated |
//! | `generators` | `15,17` | octal convolutional generators |
//! | `pn_taps` | `211` | octal LFSR feedback polynomial |
//! | `pn_seed` | `1` | nonzero LFSR start state of user 0 |
//! | `spreading_factor` | `8` | chips per coded bit |
//! | `users` | `1` | simultaneous users (BER measured for user 0) |
//! | `subcarriers` | profile | OFDM size |
//! | `cp_len` | profile | cyclic prefix length |
//! | `tx_antennas` | `2` | 2 = Alamouti, 1 = single antenna |
//! | `rx_antennas` | `3` | 1..=4 |
//! | `snr_start_db`, `snr_stop_db`, `snr_step_db` | `-10`, `20`, `1` | Es/N0 grid |
//! | `seed` | `1` | master seed |
//! | `frame_bits` | `1024` | information bits per trial |
//! | `target_errors` | `200` | stop a point after this many bit errors |
//! | `max_bits` | `10000000` | or after this many bits |
//! | `threads` | `auto` | worker threads (results do not depend on it) |

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::fec::ConvCode;
use crate::link::{LinkConfig, SnrGrid, StopRule, MAX_RX_ANTENNAS, MIN_MAX_BITS};
use crate::modem::Modulation;
use crate::ofdm::OfdmParams;
use crate::spreading::PnCode;

pub const KEYS: [&str; 19] = [
    "profile",
    "modulation",
    "generators",
    "pn_taps",
    "pn_seed",
    "spreading_factor",
    "users",
    "subcarriers",
    "cp_len",
    "tx_antennas",
    "rx_antennas",
    "snr_start_db",
    "snr_stop_db",
    "snr_step_db",
    "seed",
    "frame_bits",
    "target_errors",
    "max_bits",
    "threads",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: Option<usize>, key: &str, message: impl Into<String>) -> Self {
        Self { line, key: Some(key.to_string()), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }

    pub fn ofdm(self) -> OfdmParams {
        match self {
            Profile::Desk => OfdmParams::DESK,
            Profile::Paper => OfdmParams::PAPER,
        }
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(format!("unknown profile {other:?} (expected desk or paper)")),
        }
    }
}

/// A fully populated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub profile: Profile,
    /// Sorted, deduplicated; `link.modulation` is the first entry.
    pub modulations: Vec<Modulation>,
    pub link: LinkConfig,
    /// Worker threads for sweeps; `None` uses every available core.
    pub threads: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        Self::for_profile(Profile::Desk)
    }
}

impl Settings {
    pub fn for_profile(profile: Profile) -> Self {
        let link = LinkConfig { ofdm: profile.ofdm(), ..LinkConfig::default() };
        Self { profile, modulations: vec![link.modulation], link, threads: None }
    }

    pub fn set_modulations(&mut self, mut mods: Vec<Modulation>) {
        mods.sort();
        mods.dedup();
        if let Some(&first) = mods.first() {
            self.link.modulation = first;
            self.modulations = mods;
        }
    }

    /// Canonical text form: every key, in [`KEYS`] order.
    pub fn to_canonical(&self) -> String {
        let l = &self.link;
        let [g0, g1] = l.code.generators_octal();
        let mods: Vec<&str> = self.modulations.iter().map(|m| m.name()).collect();
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("profile", self.profile.name().into());
        put("modulation", mods.join(","));
        put("generators", format!("{g0},{g1}"));
        put("pn_taps", format!("{:o}", l.pn.taps()));
        put("pn_seed", l.pn.seed().to_string());
        put("spreading_factor", l.pn.chips_per_bit().to_string());
        put("users", l.users.to_string());
        put("subcarriers", l.ofdm.n_subcarriers().to_string());
        put("cp_len", l.ofdm.cp_len().to_string());
        put("tx_antennas", l.tx_antennas.to_string());
        put("rx_antennas", l.rx_antennas.to_string());
        put("snr_start_db", l.snr.start_db.to_string());
        put("snr_stop_db", l.snr.stop_db.to_string());
        put("snr_step_db", l.snr.step_db.to_string());
        put("seed", l.seed.to_string());
        put("frame_bits", l.frame_bits.to_string());
        put("target_errors", l.stop.target_errors.to_string());
        put("max_bits", l.stop.max_bits.to_string());
        put("threads", self.threads.map_or_else(|| "auto".to_string(), |t| t.to_string()));
        out
    }
}

struct Entry<'a> {
    value: &'a str,
    line: usize,
}

fn number<T: FromStr>(key: &str, e: &Entry) -> Result<T, ConfigError> {
    e.value.parse().map_err(|_| ConfigError::at(Some(e.line), key, format!("cannot parse {:?}", e.value)))
}

fn octal(key: &str, e: &Entry) -> Result<u32, ConfigError> {
    u32::from_str_radix(e.value, 8)
        .map_err(|_| ConfigError::at(Some(e.line), key, format!("{:?} is not an octal number", e.value)))
}

fn snr_value(key: &str, e: &Entry) -> Result<f64, ConfigError> {
    let v: f64 = number(key, e)?;
    if !v.is_finite() {
        return Err(ConfigError::at(Some(e.line), key, "must be finite"));
    }
    Ok(v)
}

pub fn parse_config(text: &str) -> Result<Settings, ConfigError> {
    parse_config_with_profile(text, None)
}

/// Like [`parse_config`], but `profile` (when given) replaces the file's
/// `profile` key. Explicit `subcarriers` / `cp_len` keys still win.
pub fn parse_config_with_profile(text: &str, profile: Option<Profile>) -> Result<Settings, ConfigError> {
    let mut entries: HashMap<&str, Entry> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError {
                line: Some(line),
                key: None,
                message: format!("expected `key = value`, got {content:?}"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
            return Err(ConfigError::at(Some(line), key, "unknown key"));
        };
        if value.is_empty() {
            return Err(ConfigError::at(Some(line), key, "missing value"));
        }
        if let Some(prev) = entries.insert(known, Entry { value, line }) {
            return Err(ConfigError::at(Some(line), key, format!("duplicate key (first set on line {})", prev.line)));
        }
    }
    build(&entries, profile)
}

fn build(entries: &HashMap<&str, Entry>, profile: Option<Profile>) -> Result<Settings, ConfigError> {
    let get = |k: &str| entries.get(k);
    let line_of = |k: &str| get(k).map(|e| e.line);

    let profile = match (profile, get("profile")) {
        (Some(p), _) => p,
        (None, Some(e)) => e.value.parse().map_err(|m: String| ConfigError::at(Some(e.line), "profile", m))?,
        (None, None) => Profile::Desk,
    };
    let mut s = Settings::for_profile(profile);

    if let Some(e) = get("modulation") {
        let mods = e
            .value
            .split(',')
            .map(|name| name.trim().parse::<Modulation>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|err| ConfigError::at(Some(e.line), "modulation", err.to_string()))?;
        s.set_modulations(mods);
    }
    let l = &mut s.link;

    if let Some(e) = get("generators") {
        let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(ConfigError::at(Some(e.line), "generators", "expected two octal generators, e.g. 15,17"));
        }
        let g0 = octal("generators", &Entry { value: parts[0], line: e.line })?;
        let g1 = octal("generators", &Entry { value: parts[1], line: e.line })?;
        let memory = (32 - g0.max(g1).leading_zeros()).saturating_sub(1) as usize;
        l.code = ConvCode::new(memory, [g0, g1])
            .map_err(|err| ConfigError::at(Some(e.line), "generators", err.to_string()))?;
    }

    let taps = match get("pn_taps") {
        Some(e) => octal("pn_taps", e)?,
        None => l.pn.taps(),
    };
    let pn_seed = match get("pn_seed") {
        Some(e) => number("pn_seed", e)?,
        None => l.pn.seed(),
    };
    let sf = match get("spreading_factor") {
        Some(e) => number("spreading_factor", e)?,
        None => l.pn.chips_per_bit(),
    };
    l.pn = PnCode::new(taps, pn_seed, sf).map_err(|err| {
        let key = if sf == 0 {
            "spreading_factor"
        } else if matches!(err, crate::Error::DegenerateSeed) {
            "pn_seed"
        } else {
            "pn_taps"
        };
        ConfigError::at(line_of(key), key, err.to_string())
    })?;

    if let Some(e) = get("users") {
        l.users = number("users", e)?;
    }
    let n = match get("subcarriers") {
        Some(e) => number("subcarriers", e)?,
        None => l.ofdm.n_subcarriers(),
    };
    let cp = match get("cp_len") {
        Some(e) => number("cp_len", e)?,
        None => l.ofdm.cp_len(),
    };
    l.ofdm = OfdmParams::new(n, cp).map_err(|_| {
        if n < 2 {
            ConfigError::at(line_of("subcarriers"), "subcarriers", "subcarriers must be at least 2")
        } else if cp == 0 {
            ConfigError::at(line_of("cp_len"), "cp_len", "cp_len must be positive")
        } else {
            ConfigError::at(line_of("cp_len").or(line_of("subcarriers")), "cp_len", "cp_len must be < subcarriers")
        }
    })?;
    if l.users == 0 || l.users > n {
        return Err(ConfigError::at(line_of("users"), "users", "users must be in 1..=subcarriers"));
    }

    if let Some(e) = get("tx_antennas") {
        l.tx_antennas = number("tx_antennas", e)?;
        if !(1..=2).contains(&l.tx_antennas) {
            return Err(ConfigError::at(Some(e.line), "tx_antennas", "tx_antennas must be 1 or 2"));
        }
    }
    if let Some(e) = get("rx_antennas") {
        l.rx_antennas = number("rx_antennas", e)?;
        if !(1..=MAX_RX_ANTENNAS).contains(&l.rx_antennas) {
            return Err(ConfigError::at(
                Some(e.line),
                "rx_antennas",
                format!("rx_antennas must be in 1..={MAX_RX_ANTENNAS}"),
            ));
        }
    }

    let mut grid = l.snr;
    if let Some(e) = get("snr_start_db") {
        grid.start_db = snr_value("snr_start_db", e)?;
    }
    if let Some(e) = get("snr_stop_db") {
        grid.stop_db = snr_value("snr_stop_db", e)?;
    }
    if let Some(e) = get("snr_step_db") {
        grid.step_db = snr_value("snr_step_db", e)?;
    }
    check_grid(&grid, &line_of)?;
    l.snr = grid;

    if let Some(e) = get("seed") {
        l.seed = number("seed", e)?;
    }
    if let Some(e) = get("frame_bits") {
        l.frame_bits = number("frame_bits", e)?;
        if l.frame_bits == 0 {
            return Err(ConfigError::at(Some(e.line), "frame_bits", "frame_bits must be positive"));
        }
    }
    let mut stop = StopRule::default();
    if let Some(e) = get("target_errors") {
        stop.target_errors = number("target_errors", e)?;
        if stop.target_errors == 0 {
            return Err(ConfigError::at(Some(e.line), "target_errors", "target_errors must be >= 1"));
        }
    }
    if let Some(e) = get("max_bits") {
        stop.max_bits = number("max_bits", e)?;
        if stop.max_bits < MIN_MAX_BITS {
            return Err(ConfigError::at(Some(e.line), "max_bits", format!("max_bits must be >= {MIN_MAX_BITS}")));
        }
    }
    l.stop = stop;

    if let Some(e) = get("threads") {
        s.threads = if e.value.eq_ignore_ascii_case("auto") {
            None
        } else {
            let t: usize = number("threads", e)?;
            if t == 0 {
                return Err(ConfigError::at(Some(e.line), "threads", "threads must be >= 1 or auto"));
            }
            Some(t)
        };
    }

    s.link.validate().map_err(|err| ConfigError { line: None, key: None, message: err.to_string() })?;
    Ok(s)
}

fn check_grid(grid: &SnrGrid, line_of: &dyn Fn(&str) -> Option<usize>) -> Result<(), ConfigError> {
    if grid.step_db <= 0.0 {
        return Err(ConfigError::at(line_of("snr_step_db"), "snr_step_db", "snr_step_db must be positive"));
    }
    if grid.stop_db < grid.start_db {
        return Err(ConfigError::at(line_of("snr_stop_db"), "snr_stop_db", "snr_stop_db must be >= snr_start_db"));
    }
    Ok(())
}
