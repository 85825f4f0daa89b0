use std::path::Path;

use clap::Args;
use serde::Deserialize;
use scuc_core::orchestrator::{Method, SolveOptions};

/// Tuning flags. Unset flags fall back to the config file, then to the
/// library defaults quoted in the help text.
#[derive(Debug, Args, Default)]
pub struct Tuning {
    /// Solution method: extensive_scuc, extensive_scuc_cnr, td_scuc, ad_scuc,
    /// td_scuc_cnr, ad_scuc_cnr [default: ad_scuc]
    #[arg(long, value_name = "NAME")]
    pub method: Option<Method>,
    /// Switching budget of extensive_scuc_cnr [default: 1]
    #[arg(long, value_name = "N")]
    pub zmax: Option<usize>,
    /// Length of the ranked switching list per outage [default: 20]
    #[arg(long, value_name = "N")]
    pub cbce_size: Option<usize>,
    /// Iteration cap of the decomposition loops, >= 1 [default: 50]
    #[arg(long, value_name = "N")]
    pub max_iter: Option<usize>,
    /// Slack below which a check counts as feasible, in [0, 1) [default: 1e-6]
    #[arg(long, value_name = "X")]
    pub slack_tol: Option<f64>,
    /// Relative MILP optimality gap, >= 0 [default: 1e-4]
    #[arg(long, value_name = "X")]
    pub milp_gap: Option<f64>,
    /// Worker threads for the per-outage checks, >= 1 [default: 1]
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Angle-difference span sizing the big-M constants, radians [default: 6.283185307179586]
    #[arg(long, value_name = "X")]
    pub angle_span: Option<f64>,
    /// Search every reconfigurable line instead of the ranked list [default: off]
    #[arg(long)]
    pub enumerate_kr: bool,
}

/// Config file contents; every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub method: Option<String>,
    pub zmax: Option<usize>,
    pub cbce_size: Option<usize>,
    pub max_iter: Option<usize>,
    pub slack_tol: Option<f64>,
    pub milp_gap: Option<f64>,
    pub workers: Option<usize>,
    pub angle_span: Option<f64>,
    pub enumerate_kr: Option<bool>,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

impl Tuning {
    pub fn merge(&self, file: FileConfig) -> Result<SolveOptions, String> {
        let mut o = SolveOptions::default();
        if let Some(m) = file.method {
            o.method = m.parse()?;
        }
        if let Some(m) = self.method {
            o.method = m;
        }
        o.z_max = self.zmax.or(file.zmax).unwrap_or(o.z_max);
        o.cbce_size = self.cbce_size.or(file.cbce_size).unwrap_or(o.cbce_size);
        o.max_iterations = self.max_iter.or(file.max_iter).unwrap_or(o.max_iterations);
        o.slack_tolerance = self.slack_tol.or(file.slack_tol).unwrap_or(o.slack_tolerance);
        o.milp_gap = self.milp_gap.or(file.milp_gap).unwrap_or(o.milp_gap);
        o.workers = self.workers.or(file.workers).unwrap_or(o.workers);
        o.angle_span = self.angle_span.or(file.angle_span).unwrap_or(o.angle_span);
        o.enumerate_kr = self.enumerate_kr || file.enumerate_kr.unwrap_or(false);
        Ok(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let tuning = Tuning { max_iter: Some(7), ..Tuning::default() };
        let file = FileConfig { max_iter: Some(9), workers: Some(3), ..FileConfig::default() };
        let o = tuning.merge(file).unwrap();
        assert_eq!(o.max_iterations, 7);
        assert_eq!(o.workers, 3);
        assert_eq!(o.cbce_size, SolveOptions::default().cbce_size);
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"max_iters": 3}"#).is_err());
    }

    #[test]
    fn bad_method_in_file_is_reported() {
        let file = FileConfig { method: Some("fast".into()), ..FileConfig::default() };
        assert!(Tuning::default().merge(file).unwrap_err().contains("unknown method"));
    }
}
