//! Named calibration profiles: one link model per link class plus
//! per-material obstacle attenuations.
//!
//! Profile files use the same `key = value` grammar as scenario configs:
//!
//! ```text
//! name = paper-v1
//! [link ugv-ugv]
//! path_loss_exponent = 2.9
//! reference_loss_db = 41.5
//! attenuation.foliage = 6.0
//! ```
//!
//! Fields missing from a `[link]` section take [`LinkModel::default`] values.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use super::channel::LinkModel;
use crate::error::{Error, Result};
use crate::ini::{self, Reader};
use crate::physics::{AgentKind, Obstacle};

/// Links between two ground vehicles differ from links with an aerial end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkClass {
    UgvUgv,
    UgvUav,
}

impl LinkClass {
    pub const ALL: [LinkClass; 2] = [LinkClass::UgvUgv, LinkClass::UgvUav];

    pub fn between(a: AgentKind, b: AgentKind) -> Self {
        match (a, b) {
            (AgentKind::Ugv, AgentKind::Ugv) => LinkClass::UgvUgv,
            _ => LinkClass::UgvUav,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LinkClass::UgvUgv => "ugv-ugv",
            LinkClass::UgvUav => "ugv-uav",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for LinkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkProfile {
    pub model: LinkModel<f64>,
    /// Attenuation per obstacle material, dB.
    pub material_db: BTreeMap<String, f64>,
}

impl LinkProfile {
    /// dB an obstacle contributes on this link class: the material value when
    /// the profile knows the material, else the obstacle's own figure.
    pub fn obstacle_db(&self, obstacle: &Obstacle<f64>) -> f64 {
        obstacle
            .material
            .as_ref()
            .and_then(|m| self.material_db.get(m))
            .copied()
            .unwrap_or(obstacle.attenuation_db)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub name: String,
    pub links: BTreeMap<LinkClass, LinkProfile>,
}

pub const PAPER_V1: &str = "paper-v1";
pub const IDEAL: &str = "ideal";

const PAPER_V1_TEXT: &str = include_str!("../../profiles/paper-v1.profile");
const IDEAL_TEXT: &str = include_str!("../../profiles/ideal.profile");

impl Profile {
    pub fn link(&self, class: LinkClass) -> &LinkProfile {
        self.links.get(&class).expect("profiles carry every link class")
    }

    pub fn validate(&self) -> Result<()> {
        for class in LinkClass::ALL {
            let link = self
                .links
                .get(&class)
                .ok_or_else(|| Error::config(format!("profile `{}` lacks a [link {class}] section", self.name)))?;
            link.model
                .validate()
                .map_err(|e| Error::config(format!("profile `{}` link {class}: {e}", self.name)))?;
            for (m, db) in &link.material_db {
                if !db.is_finite() || *db < 0.0 {
                    return Err(Error::config(format!(
                        "profile `{}`: attenuation.{m} must be >= 0",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Profile text in the documented grammar; parses back to an equal value.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        for (class, link) in &self.links {
            let m = &link.model;
            let _ = writeln!(s, "\n[link {class}]");
            for (k, v) in [
                ("tx_power_dbm", m.tx_power_dbm),
                ("path_loss_exponent", m.path_loss_exponent),
                ("reference_loss_db", m.reference_loss_db),
                ("noise_floor_dbm", m.noise_floor_dbm),
                ("snr_threshold_db", m.snr_threshold_db),
                ("loss_steepness", m.loss_steepness),
                ("bitrate_bps", m.bitrate_bps),
                ("propagation_speed_mps", m.propagation_speed_mps),
                ("processing_delay_s", m.processing_delay_s),
                ("queue_service_rate_pps", m.queue_service_rate_pps),
            ] {
                let _ = writeln!(s, "{k} = {v}");
            }
            for (mat, db) in &link.material_db {
                let _ = writeln!(s, "attenuation.{mat} = {db}");
            }
        }
        s
    }
}

pub fn parse_profile_str(text: &str, origin: &str) -> Result<Profile> {
    let doc = ini::parse(text, origin)?;
    let mut root = Reader::new(&doc, &doc.root);
    let name = root.required("name")?.value.clone();
    root.finish()?;
    let mut links = BTreeMap::new();
    for sec in &doc.sections {
        let mut r = Reader::new(&doc, sec);
        if sec.kind != "link" {
            return Err(r.error(sec.line, "section", format!("unknown section kind `{}`", sec.kind)));
        }
        let class = LinkClass::parse(&sec.name).ok_or_else(|| {
            r.error(
                sec.line,
                "section",
                format!("unknown link class `{}`, allowed: ugv-ugv, ugv-uav", sec.name),
            )
        })?;
        let d = LinkModel::<f64>::default();
        let model = LinkModel {
            tx_power_dbm: r.number("tx_power_dbm")?.unwrap_or(d.tx_power_dbm),
            path_loss_exponent: r.number("path_loss_exponent")?.unwrap_or(d.path_loss_exponent),
            reference_loss_db: r.number("reference_loss_db")?.unwrap_or(d.reference_loss_db),
            noise_floor_dbm: r.number("noise_floor_dbm")?.unwrap_or(d.noise_floor_dbm),
            snr_threshold_db: r.number("snr_threshold_db")?.unwrap_or(d.snr_threshold_db),
            loss_steepness: r.positive("loss_steepness")?.unwrap_or(d.loss_steepness),
            bitrate_bps: r.positive("bitrate_bps")?.unwrap_or(d.bitrate_bps),
            propagation_speed_mps: r.positive("propagation_speed_mps")?.unwrap_or(d.propagation_speed_mps),
            processing_delay_s: r.non_negative("processing_delay_s")?.unwrap_or(d.processing_delay_s),
            queue_service_rate_pps: r
                .positive("queue_service_rate_pps")?
                .unwrap_or(d.queue_service_rate_pps),
        };
        let mut material_db = BTreeMap::new();
        for (mat, e) in r.prefixed("attenuation.") {
            let db: f64 = e
                .value
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite() && *x >= 0.0)
                .ok_or_else(|| r.error(e.line, &e.key, format!("expected a dB value >= 0, got `{}`", e.value)))?;
            material_db.insert(mat.to_string(), db);
        }
        if let Err(e) = model.validate() {
            return Err(r.error(sec.line, "section", format!("link {class}: {e}")));
        }
        r.finish()?;
        if links.insert(class, LinkProfile { model, material_db }).is_some() {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: sec.line,
                field: "section".into(),
                message: format!("duplicate [link {class}] section"),
            });
        }
    }
    let profile = Profile { name, links };
    profile.validate().map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: 0,
        field: "link".into(),
        message: e.to_string(),
    })?;
    Ok(profile)
}

/// Profiles shipped inside the library.
pub fn builtin_profile(name: &str) -> Option<Profile> {
    let text = match name {
        PAPER_V1 => PAPER_V1_TEXT,
        IDEAL => IDEAL_TEXT,
        _ => return None,
    };
    Some(parse_profile_str(text, name).expect("built-in profiles are valid"))
}

pub fn builtin_profile_names() -> [&'static str; 2] {
    [PAPER_V1, IDEAL]
}

/// Resolves a profile reference: a built-in name or a path to a file.
pub fn load_profile(reference: &str) -> Result<Profile> {
    if let Some(p) = builtin_profile(reference) {
        return Ok(p);
    }
    let path = Path::new(reference);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return parse_profile_str(&text, &path.display().to_string());
    }
    Err(Error::config(format!(
        "profile `{reference}` is neither a built-in ({}) nor a readable file",
        builtin_profile_names().join(", ")
    )))
}
