use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrsde::ScheduleConfig;
use crate::phantoms_data::{AcquisitionProtocol, Phantom, PhantomKind};
use crate::pipeline::{FitConfig, MuSource, SweepConfig};
use crate::rectify::{GuidanceConfig, TimeTravel};

/// Everything a run can be configured with. Loaded from TOML, then
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 uses one per core.
    pub jobs: usize,
    pub protocol: ProtocolConfig,
    pub schedule: ScheduleConfig,
    pub guidance: GuidanceSettings,
    pub fit: FitConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub phantom: PhantomKind,
    pub size: usize,
    pub count: usize,
    pub full_view_count: usize,
    pub limited_range: [f64; 2],
    pub limited_count: usize,
    pub snr_db: [f64; 2],
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        let p = AcquisitionProtocol::default();
        Self {
            phantom: PhantomKind::BlobField,
            size: 64,
            count: 32,
            full_view_count: p.full_view_count,
            limited_range: [p.limited_range.0, p.limited_range.1],
            limited_count: p.limited_count,
            snr_db: [p.snr_db_range.0, p.snr_db_range.1],
        }
    }
}

impl ProtocolConfig {
    pub fn phantom(&self) -> Phantom {
        Phantom {
            kind: self.phantom,
            size: self.size,
        }
    }

    pub fn acquisition(&self) -> AcquisitionProtocol {
        AcquisitionProtocol {
            full_view_count: self.full_view_count,
            limited_range: (self.limited_range[0], self.limited_range[1]),
            limited_count: self.limited_count,
            snr_db_range: (self.snr_db[0], self.snr_db[1]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceSettings {
    pub beta: f64,
    /// Fixed noise estimate; each record's own sigma_y when absent.
    pub sigma_y: Option<f64>,
    pub time_travel: bool,
    pub hop: usize,
    pub repeats: usize,
    pub rectify_every: usize,
    pub rectify: bool,
    pub mu: MuSource,
}

impl Default for GuidanceSettings {
    fn default() -> Self {
        let g = GuidanceConfig::default();
        Self {
            beta: g.beta,
            sigma_y: None,
            time_travel: g.time_travel.enabled,
            hop: g.time_travel.hop,
            repeats: g.time_travel.repeats,
            rectify_every: g.rectify_every,
            rectify: g.rectify,
            mu: MuSource::Observation,
        }
    }
}

impl GuidanceSettings {
    pub fn for_record(&self, record_sigma_y: f64) -> GuidanceConfig {
        GuidanceConfig {
            beta: self.beta,
            sigma_y_est: self.sigma_y.unwrap_or(record_sigma_y),
            time_travel: TimeTravel {
                enabled: self.time_travel,
                hop: self.hop,
                repeats: self.repeats,
            },
            rectify_every: self.rectify_every,
            rectify: self.rectify,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidArgument(msg) => {
                Error::InvalidArgument(format!("{}: {msg}", path.display()))
            }
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(format!("config encoding: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if i64::try_from(self.seed).is_err() || i64::try_from(self.fit.seed).is_err() {
            return Err(Error::invalid("seeds must be below 2^63"));
        }
        self.protocol.acquisition().validate()?;
        if self.protocol.size < 16 {
            return Err(Error::invalid("size must be >= 16"));
        }
        self.schedule.build()?;
        self.guidance.for_record(0.0).validate()?;
        if let Some(s) = self.guidance.sigma_y {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::invalid("sigma_y must be >= 0"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn partial_files_keep_defaults() {
        let cfg =
            RunConfig::parse("seed = 9\n[guidance]\nbeta = 0.5\n[schedule]\nsteps = 40\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.guidance.beta, 0.5);
        assert_eq!(cfg.schedule.steps, 40);
        assert_eq!(cfg.schedule.lambda, 0.1);
        assert_eq!(cfg.protocol.limited_count, 61);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("sead = 1").is_err());
        assert!(RunConfig::parse("[guidance]\nbetta = 1").is_err());
    }
}
