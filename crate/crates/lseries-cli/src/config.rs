//! Plain-text key-value configuration for the campaign runner.  Every
//! numeric tolerance and truncation the cases use lives here, so a run is
//! pinned by (config, seed) alone.

use std::fmt;

/// A failed config parse; the process exit code for this is 2.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Campaign knobs with their defaults.  Field names mirror the file keys
/// (`lemma24.tol` ↔ `lemma24_tol`, and so on).
#[derive(Debug, Clone)]
pub struct Config {
    pub seed: u64,
    /// Worker threads for case execution; 0 means the library default.
    pub parallelism: usize,
    pub lemma24_cases: usize,
    pub lemma24_tol: f64,
    pub lemma24_oracle_tol: f64,
    pub gauss_tol: f64,
    pub prop27_cases: usize,
    pub prop27_tol: f64,
    pub prop27_integral_tol: f64,
    pub rho_radius: u32,
    pub basis_max_shell: u32,
    pub delta_cases: usize,
    pub arch_mellin_tol: f64,
    pub arch_zeta_tol: f64,
    pub arch_bessel_tol: f64,
    pub lp_trunc: usize,
    pub lp_prec: u32,
    pub lp_err_factor: f64,
    pub interp_trunc: usize,
    pub interp_tol: f64,
    pub interp_l_value_tol: f64,
    pub compat_trunc: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 7,
            parallelism: 0,
            lemma24_cases: 50,
            lemma24_tol: 1e-8,
            lemma24_oracle_tol: 1e-12,
            gauss_tol: 1e-9,
            prop27_cases: 40,
            prop27_tol: 1e-8,
            prop27_integral_tol: 1e-11,
            rho_radius: 5,
            basis_max_shell: 4,
            delta_cases: 100,
            arch_mellin_tol: 1e-6,
            arch_zeta_tol: 1e-6,
            arch_bessel_tol: 1e-8,
            lp_trunc: 5000,
            lp_prec: 8,
            lp_err_factor: 10.0,
            interp_trunc: 5000,
            interp_tol: 5e-3,
            interp_l_value_tol: 1e-6,
            compat_trunc: 22000,
        }
    }
}

impl Config {
    /// Parse `key = value` lines; `#` starts a comment, blank lines are
    /// skipped, unknown keys and malformed numbers are errors.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let body = body.trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(ConfigError {
                    line,
                    message: format!("expected `key = value`, got `{body}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value).map_err(|message| ConfigError { line, message })?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("bad value `{value}` for `{key}`"))
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "parallelism" => self.parallelism = num(key, value)?,
            "lemma24.cases" => self.lemma24_cases = num(key, value)?,
            "lemma24.tol" => self.lemma24_tol = num(key, value)?,
            "lemma24.oracle_tol" => self.lemma24_oracle_tol = num(key, value)?,
            "gauss.tol" => self.gauss_tol = num(key, value)?,
            "prop27.cases" => self.prop27_cases = num(key, value)?,
            "prop27.tol" => self.prop27_tol = num(key, value)?,
            "prop27.integral_tol" => self.prop27_integral_tol = num(key, value)?,
            "rho.radius" => self.rho_radius = num(key, value)?,
            "basis.max_shell" => self.basis_max_shell = num(key, value)?,
            "delta.cases" => self.delta_cases = num(key, value)?,
            "arch.mellin_tol" => self.arch_mellin_tol = num(key, value)?,
            "arch.zeta_tol" => self.arch_zeta_tol = num(key, value)?,
            "arch.bessel_tol" => self.arch_bessel_tol = num(key, value)?,
            "lp.trunc" => self.lp_trunc = num(key, value)?,
            "lp.prec" => self.lp_prec = num(key, value)?,
            "lp.err_factor" => self.lp_err_factor = num(key, value)?,
            "interp.trunc" => self.interp_trunc = num(key, value)?,
            "interp.tol" => self.interp_tol = num(key, value)?,
            "interp.l_value_tol" => self.interp_l_value_tol = num(key, value)?,
            "compat.trunc" => self.compat_trunc = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_overrides_and_comments() {
        let cfg = Config::parse(
            "# campaign knobs\nseed = 99\nlemma24.tol = 1e-10  # tighter\n\nlp.trunc=800\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.lemma24_tol, 1e-10);
        assert_eq!(cfg.lp_trunc, 800);
        assert_eq!(cfg.gauss_tol, 1e-9);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_numbers() {
        assert!(Config::parse("nope = 3").is_err());
        assert!(Config::parse("lemma24.tol = banana").is_err());
        assert!(Config::parse("just words").is_err());
        let err = Config::parse("seed = 1\nlemma24.tol = x").unwrap_err();
        assert_eq!(err.line, 2);
    }
}
