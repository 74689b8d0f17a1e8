//! Experiment configuration: an INI file with `[data]`, `[ansatz]`, `[run]`,
//! `[train]` and `[svm]` sections, then `DISCO_SEED`, then flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use qnlp_core::circuit::AnsatzConfig;
use qnlp_core::embeddings::TrainConfig;
use qnlp_core::kernels::KernelKind;
use qnlp_core::simulator::{Backend, NoiseModel};
use qnlp_core::svm::SmoConfig;

use crate::CliError;

pub const SEED_ENV: &str = "DISCO_SEED";

/// Every recognised key with its section. Key names are unique across
/// sections so a flag can name a key without its section.
pub const KEYS: &[(&str, &str)] = &[
    ("data", "lexicon"),
    ("data", "dataset"),
    ("data", "n"),
    ("data", "ratio"),
    ("ansatz", "q_n"),
    ("ansatz", "q_s"),
    ("ansatz", "layers"),
    ("run", "backend"),
    ("run", "shots"),
    ("run", "noise_profile"),
    ("run", "kernel"),
    ("run", "seeds"),
    ("run", "out"),
    ("train", "epochs"),
    ("train", "spsa_a"),
    ("train", "spsa_c"),
    ("train", "spsa_big_a"),
    ("train", "alpha"),
    ("train", "gamma"),
    ("train", "eps"),
    ("svm", "c"),
    ("svm", "tol"),
    ("svm", "max_passes"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    Exact,
    Shots,
    Noisy,
}

impl FromStr for BackendChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Self::Exact),
            "shots" => Ok(Self::Shots),
            "noisy" => Ok(Self::Noisy),
            other => Err(format!(
                "unknown backend `{other}` (expected exact, shots or noisy)"
            )),
        }
    }
}

impl fmt::Display for BackendChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Shots => "shots",
            Self::Noisy => "noisy",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Built-in vocabulary when unset.
    pub lexicon: Option<PathBuf>,
    /// Generated from the first seed when unset.
    pub dataset: Option<PathBuf>,
    pub n: usize,
    pub ratio: f64,
    pub ansatz: AnsatzConfig,
    pub backend: BackendChoice,
    pub shots: u64,
    pub noise_profile: String,
    pub kernel: KernelKind,
    pub train: TrainConfig,
    /// Unset means `0.1 * epochs`.
    pub spsa_big_a: Option<f64>,
    pub svm: SmoConfig,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lexicon: None,
            dataset: None,
            n: 100,
            ratio: 0.7,
            ansatz: AnsatzConfig::new(1, 1, 1).expect("default ansatz"),
            backend: BackendChoice::Exact,
            shots: 8192,
            noise_profile: "guadalupe-like".into(),
            kernel: KernelKind::Swap,
            train: TrainConfig::default(),
            spsa_big_a: None,
            svm: SmoConfig::default(),
            seeds: (0..7).collect(),
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{key} = `{value}`: {e}")))
}

fn parse_seeds(value: &str) -> Result<Vec<u64>, CliError> {
    let seeds: Vec<u64> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse("seeds", s))
        .collect::<Result<_, _>>()?;
    if seeds.is_empty() {
        return Err(CliError::Config("seeds must not be empty".into()));
    }
    Ok(seeds)
}

impl ExperimentConfig {
    /// Sets one key from its text form. Relative paths resolve against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), CliError> {
        let path = || base.join(value.trim());
        match key {
            "lexicon" => self.lexicon = Some(path()),
            "dataset" => self.dataset = Some(path()),
            "n" => self.n = parse(key, value)?,
            "ratio" => self.ratio = parse(key, value)?,
            "q_n" | "q_s" | "layers" => {
                let v: usize = parse(key, value)?;
                let (mut q_n, mut q_s, mut layers) =
                    (self.ansatz.q_n(), self.ansatz.q_s(), self.ansatz.layers());
                match key {
                    "q_n" => q_n = v,
                    "q_s" => q_s = v,
                    _ => layers = v,
                }
                self.ansatz = AnsatzConfig::new(q_n, q_s, layers)
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
            "backend" => self.backend = parse(key, value)?,
            "shots" => self.shots = parse(key, value)?,
            "noise_profile" => {
                let name = value.trim();
                if NoiseModel::profile(name).is_none() {
                    return Err(CliError::Config(format!("unknown noise profile `{name}`")));
                }
                self.noise_profile = name.to_string();
            }
            "kernel" => self.kernel = parse(key, value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "out" => self.out = path(),
            "epochs" => self.train.epochs = parse(key, value)?,
            "spsa_a" => self.train.spsa_a = parse(key, value)?,
            "spsa_c" => self.train.spsa_c = parse(key, value)?,
            "spsa_big_a" => self.spsa_big_a = Some(parse(key, value)?),
            "alpha" => self.train.alpha = parse(key, value)?,
            "gamma" => self.train.gamma = parse(key, value)?,
            "eps" => self.train.eps = parse(key, value)?,
            "c" => self.svm.c = parse(key, value)?,
            "tol" => self.svm.tol = parse(key, value)?,
            "max_passes" => self.svm.max_passes = parse(key, value)?,
            other => return Err(CliError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn from_ini_str(text: &str, base: &Path) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        let mut cfg = Self::default();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let Some(&(expected, _)) = KEYS.iter().find(|(_, k)| *k == key) else {
                    return Err(CliError::Config(format!("unknown key `{key}`")));
                };
                if section != Some(expected) {
                    return Err(CliError::Config(format!(
                        "key `{key}` belongs in section [{expected}], found in {}",
                        section.map_or("the preamble".to_string(), |s| format!("[{s}]"))
                    )));
                }
                cfg.set(key, value, base)?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_ini_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Replaces the first seed with `DISCO_SEED` when it is set.
    pub fn apply_env_seed(&mut self, value: Option<&str>) -> Result<(), CliError> {
        if let Some(v) = value {
            self.seeds[0] = parse(SEED_ENV, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for p in [&self.lexicon, &self.dataset].into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::Config(format!("{} does not exist", p.display())));
            }
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(CliError::Config(format!(
                "ratio must lie in (0, 1), got {}",
                self.ratio
            )));
        }
        if self.backend == BackendChoice::Shots && self.shots == 0 {
            return Err(CliError::Config("shots must be positive".into()));
        }
        Ok(())
    }

    pub fn noise(&self) -> NoiseModel {
        NoiseModel::profile(&self.noise_profile).expect("profile validated on set")
    }

    pub fn backend(&self) -> Backend {
        match self.backend {
            BackendChoice::Exact => Backend::Exact,
            BackendChoice::Shots => Backend::Shots {
                shots: self.shots,
                noise: None,
            },
            BackendChoice::Noisy => Backend::Density(self.noise()),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            shots: self.shots,
            spsa_big_a: self.spsa_big_a.unwrap_or(0.1 * self.train.epochs as f64),
            ..self.train
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ini_sections_and_defaults() {
        let text = "[data]\nn = 40\n[run]\nbackend = noisy\nseeds = 3, 4\nkernel = transition\n[svm]\nc = 2.5\n";
        let cfg = ExperimentConfig::from_ini_str(text, Path::new("/tmp")).unwrap();
        assert_eq!(cfg.n, 40);
        assert_eq!(cfg.backend, BackendChoice::Noisy);
        assert_eq!(cfg.seeds, vec![3, 4]);
        assert_eq!(cfg.kernel, KernelKind::Transition);
        assert_eq!(cfg.svm.c, 2.5);
        assert_eq!(cfg.ratio, 0.7);
        assert_eq!(cfg.train_config().spsa_big_a, 10.0);
    }

    #[test]
    fn misplaced_and_unknown_keys_are_config_errors() {
        for text in [
            "[run]\nn = 4\n",
            "[data]\nbogus = 1\n",
            "n = 4\n",
            "[run]\nbackend = gpu\n",
        ] {
            let err = ExperimentConfig::from_ini_str(text, Path::new(".")).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn env_seed_replaces_only_the_first() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_env_seed(Some("42")).unwrap();
        assert_eq!(cfg.seeds, vec![42, 1, 2, 3, 4, 5, 6]);
        assert!(cfg.apply_env_seed(Some("x")).is_err());
    }

    #[test]
    fn epochs_scale_the_stability_constant_unless_pinned() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("epochs", "20", Path::new(".")).unwrap();
        assert_eq!(cfg.train_config().spsa_big_a, 2.0);
        cfg.set("spsa_big_a", "7", Path::new(".")).unwrap();
        assert_eq!(cfg.train_config().spsa_big_a, 7.0);
    }

    #[test]
    fn unsupported_ansatz_is_rejected() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("q_s", "2", Path::new(".")).is_err());
    }
}
