use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

/// Run settings. Loaded from a flat `key = value` file, then overridden by
/// command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Allowed gap between quadrature and ODE periods.
    pub quad_tol: f64,
    /// Allowed energy drift over 10 periods.
    pub ode_tol: f64,
    /// Allowed holomorphy and vertex-equation residual.
    pub residual_tol: f64,
    /// Allowed error of the closed-form geometry identities.
    pub identity_tol: f64,
    /// Grid size per parameter for surface samples and residuals.
    pub grid: usize,
    pub vertex_points: usize,
    pub identity_points: usize,
    /// Circle length for e13, e17 and the identity points; family default when unset.
    pub circle_length: Option<f64>,
    /// Width δ of the μ region.
    pub delta: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            quad_tol: 1e-6,
            ode_tol: 1e-9,
            residual_tol: 1e-8,
            identity_tol: 1e-12,
            grid: 64,
            vertex_points: 401,
            identity_points: 10_000,
            circle_length: None,
            delta: 0.125,
            out_dir: PathBuf::from("."),
            seed: 20_261_018,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected key = value", path.display(), n + 1);
            };
            cfg.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        let f = || -> anyhow::Result<f64> { value.parse().with_context(|| format!("{key}: not a number: {value}")) };
        let n = || -> anyhow::Result<usize> { value.parse().with_context(|| format!("{key}: not an integer: {value}")) };
        match key {
            "quad_tol" => self.quad_tol = f()?,
            "ode_tol" => self.ode_tol = f()?,
            "residual_tol" => self.residual_tol = f()?,
            "identity_tol" => self.identity_tol = f()?,
            "grid" => self.grid = n()?,
            "vertex_points" => self.vertex_points = n()?,
            "identity_points" => self.identity_points = n()?,
            "circle_length" => self.circle_length = Some(f()?),
            "delta" => self.delta = f()?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "seed" => self.seed = value.parse().with_context(|| format!("seed: not an integer: {value}"))?,
            _ => bail!("unknown config key {key:?}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        for (name, v) in [
            ("quad_tol", self.quad_tol),
            ("ode_tol", self.ode_tol),
            ("residual_tol", self.residual_tol),
            ("identity_tol", self.identity_tol),
            ("delta", self.delta),
        ] {
            if !(v > 0.0) {
                bail!("{name} must be positive, got {v}");
            }
        }
        if let Some(l) = self.circle_length {
            if !(l > 0.0) {
                bail!("circle_length must be positive, got {l}");
            }
        }
        if self.grid < 2 || self.vertex_points < 2 || self.identity_points == 0 {
            bail!("grid and point counts must be at least 2");
        }
        Ok(())
    }

    pub fn out_path(&self, explicit: Option<&Path>, default_name: &str) -> PathBuf {
        explicit.map_or_else(|| self.out_dir.join(default_name), Path::to_path_buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_ignores_comments() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "# settings\nresidual_tol = 1e-9\ngrid=32 # coarse\n\ncircle_length = 2\n").unwrap();
        let cfg = RunConfig::from_file(&p).unwrap();
        assert_eq!(cfg.residual_tol, 1e-9);
        assert_eq!(cfg.grid, 32);
        assert_eq!(cfg.circle_length, Some(2.0));
        assert_eq!(cfg.quad_tol, RunConfig::default().quad_tol);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.set("grid", "x").is_err());
        cfg.set("ode_tol", "-1").unwrap();
        assert!(cfg.validate().is_err());
    }
}
