//! Run configuration: built-in defaults, then an optional `key=value` file,
//! then command-line flags, then the `EQTORUS_TOL_OVERRIDE` multiplier.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use eqtorus::functional::GridSpec;
use eqtorus::Tolerances;

/// Environment variable whose value multiplies every tolerance.
pub const TOL_OVERRIDE_VAR: &str = "EQTORUS_TOL_OVERRIDE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(format!("format must be json or csv, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub grid: GridSpec,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tolerances: Tolerances::default(),
            grid: GridSpec { a_min: 0.0, a_max: 0.5, a_steps: 6, b_min: 1.2, b_max: 3.0, b_steps: 10 },
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError(format!("bad value for {key}: {value:?}")))
}

impl RunConfig {
    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key=value, got {raw:?}", no + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        self.apply_str(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let (t, g) = (&mut self.tolerances, &mut self.grid);
        match key {
            "solver_tol" => t.solver = parse_value(key, value)?,
            "quadrature_tol" => t.quadrature = parse_value(key, value)?,
            "ode_tol" => t.ode = parse_value(key, value)?,
            "a_min" => g.a_min = parse_value(key, value)?,
            "a_max" => g.a_max = parse_value(key, value)?,
            "a_steps" => g.a_steps = parse_value(key, value)?,
            "b_min" => g.b_min = parse_value(key, value)?,
            "b_max" => g.b_max = parse_value(key, value)?,
            "b_steps" => g.b_steps = parse_value(key, value)?,
            "format" => self.format = value.parse().map_err(ConfigError)?,
            _ => return Err(ConfigError(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `a_min,a_max,a_steps,b_min,b_max,b_steps`.
    pub fn set_grid(&mut self, spec: &str) -> Result<(), ConfigError> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 6 {
            return Err(ConfigError(format!("--grid needs a_min,a_max,a_steps,b_min,b_max,b_steps, got {spec:?}")));
        }
        for (key, value) in ["a_min", "a_max", "a_steps", "b_min", "b_max", "b_steps"].iter().zip(parts) {
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Multiplies the tolerances by `$EQTORUS_TOL_OVERRIDE` when it is set.
    pub fn apply_override(&mut self, value: Option<&str>) -> Result<(), ConfigError> {
        let Some(value) = value else { return Ok(()) };
        let factor: f64 = parse_value(TOL_OVERRIDE_VAR, value)?;
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(ConfigError(format!("{TOL_OVERRIDE_VAR} must be a positive number, got {value:?}")));
        }
        self.tolerances = self.tolerances.scaled(factor);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.tolerances;
        for (name, v) in [("solver_tol", t.solver), ("quadrature_tol", t.quadrature), ("ode_tol", t.ode)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError(format!("{name} must be positive, got {v}")));
            }
        }
        let g = &self.grid;
        if g.a_steps == 0 || g.b_steps == 0 {
            return Err(ConfigError("grid steps must be at least 1".into()));
        }
        if !(g.a_min <= g.a_max && g.b_min <= g.b_max) {
            return Err(ConfigError(format!("grid bounds out of order: a [{}, {}], b [{}, {}]", g.a_min, g.a_max, g.b_min, g.b_max)));
        }
        if !(g.a_min >= -0.5 && g.a_max <= 0.5 && g.b_min > 0.0) {
            return Err(ConfigError(format!(
                "grid leaves the moduli space: need -1/2 <= a <= 1/2 and b > 0, got a [{}, {}], b from {}",
                g.a_min, g.a_max, g.b_min
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_defaults() {
        let mut c = RunConfig::default();
        c.apply_str("# tolerances\nsolver_tol = 1e-12\n\nb_steps=4  # short\nformat = json\n").unwrap();
        assert_eq!(c.tolerances.solver, 1e-12);
        assert_eq!(c.grid.b_steps, 4);
        assert_eq!(c.format, Format::Json);
        assert_eq!(c.tolerances.ode, Tolerances::default().ode);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut c = RunConfig::default();
        assert!(c.apply_str("tolerance = 1").is_err());
        assert!(c.apply_str("a_steps = -1").is_err());
        assert!(c.apply_str("just text").is_err());
    }

    #[test]
    fn grid_flag() {
        let mut c = RunConfig::default();
        c.set_grid("-0.25, 0.25, 3, 1.5, 2.5, 5").unwrap();
        assert_eq!(c.grid, GridSpec { a_min: -0.25, a_max: 0.25, a_steps: 3, b_min: 1.5, b_max: 2.5, b_steps: 5 });
        assert!(c.set_grid("0,1,2").is_err());
        c.grid.a_max = 0.75;
        assert!(c.validate().is_err());
    }

    #[test]
    fn override_multiplies_every_tolerance() {
        let mut c = RunConfig::default();
        c.apply_override(Some("10")).unwrap();
        assert_eq!(c.tolerances, Tolerances::default().scaled(10.0));
        assert!(c.apply_override(Some("0")).is_err());
        assert!(c.apply_override(Some("x")).is_err());
        c.apply_override(None).unwrap();
        assert_eq!(c.tolerances, Tolerances::default().scaled(10.0));
    }
}
