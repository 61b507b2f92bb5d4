//! Flat `key = value` configuration with every default listed.

use crate::basic::BasicConfig;
use crate::combine::ForestConfig;
use crate::community::CommunityConfig;
use crate::generators::PlantConfig;
use crate::netemd::NetemdConfig;
use crate::pathfinder::PathConfig;
use crate::spectral::localisation::LocalisationConfig;

use super::PipelineError;

/// Settings for generating and splitting the training networks.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Nodes per generated network.
    pub n: usize,
    /// Node count at which the regime grid is evaluated.
    pub grid_n: usize,
    /// Use only the first this many regimes; 0 keeps the whole grid.
    pub regimes: usize,
    pub networks: usize,
    /// Share of each regime's networks used for training; the rest are held out.
    pub train_fraction: f64,
    pub plant: PlantConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { n: 10_000, grid_n: 10_000, regimes: 0, networks: 100, train_fraction: 0.7, plant: PlantConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub basic: BasicConfig,
    pub community: CommunityConfig,
    pub localisation: LocalisationConfig,
    pub netemd: NetemdConfig,
    pub path: PathConfig,
    pub forest: ForestConfig,
    /// Features kept after rank selection.
    pub cutoff: usize,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            basic: BasicConfig::default(),
            community: CommunityConfig::default(),
            localisation: LocalisationConfig::default(),
            netemd: NetemdConfig::default(),
            path: PathConfig::default(),
            forest: ForestConfig::default(),
            cutoff: 44,
            train: TrainConfig::default(),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value.parse().map_err(|_| PipelineError::Config(format!("{key}: cannot parse {value:?}")))
}

impl PipelineConfig {
    /// Sets one key. `alpha` sets the significance level of every stage.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = parse(key, v)?,
            "alpha" => {
                let a: f64 = parse(key, v)?;
                self.basic.alpha = a;
                self.localisation.alpha = a;
                self.netemd.alpha = a;
                self.path.alpha = a;
            }
            "basic.null_draws" => self.basic.null_draws = parse(key, v)?,
            "community.replicas" => self.community.replicas = parse(key, v)?,
            "community.resolution" => self.community.resolution = parse(key, v)?,
            "localisation.replicas" => self.localisation.replicas = parse(key, v)?,
            "localisation.max_vectors" => self.localisation.max_vectors = parse(key, v)?,
            "localisation.share_ensemble" => self.localisation.share_ensemble = parse(key, v)?,
            "netemd.references" => self.netemd.references = parse(key, v)?,
            "netemd.nulls" => self.netemd.nulls = parse(key, v)?,
            "path.beam_width" => self.path.beam_width = parse(key, v)?,
            "path.max_size" => self.path.max_size = parse(key, v)?,
            "path.replicas" => self.path.replicas = parse(key, v)?,
            "forest.trees" => self.forest.trees = parse(key, v)?,
            "forest.min_samples_split" => self.forest.min_samples_split = parse(key, v)?,
            "forest.bootstrap" => self.forest.bootstrap = parse(key, v)?,
            "select.cutoff" => self.cutoff = parse(key, v)?,
            "train.n" => self.train.n = parse(key, v)?,
            "train.grid_n" => self.train.grid_n = parse(key, v)?,
            "train.regimes" => self.train.regimes = parse(key, v)?,
            "train.networks" => self.train.networks = parse(key, v)?,
            "train.train_fraction" => self.train.train_fraction = parse(key, v)?,
            "train.plant_count_min" => self.train.plant.count.0 = parse(key, v)?,
            "train.plant_count_max" => self.train.plant.count.1 = parse(key, v)?,
            "train.plant_size_min" => self.train.plant.size.0 = parse(key, v)?,
            "train.plant_size_max" => self.train.plant.size.1 = parse(key, v)?,
            other => return Err(PipelineError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order. `alpha` reports the
    /// basic-stage level.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let p = [
            ("seed", self.seed.to_string()),
            ("alpha", self.basic.alpha.to_string()),
            ("basic.null_draws", self.basic.null_draws.to_string()),
            ("community.replicas", self.community.replicas.to_string()),
            ("community.resolution", self.community.resolution.to_string()),
            ("localisation.replicas", self.localisation.replicas.to_string()),
            ("localisation.max_vectors", self.localisation.max_vectors.to_string()),
            ("localisation.share_ensemble", self.localisation.share_ensemble.to_string()),
            ("netemd.references", self.netemd.references.to_string()),
            ("netemd.nulls", self.netemd.nulls.to_string()),
            ("path.beam_width", self.path.beam_width.to_string()),
            ("path.max_size", self.path.max_size.to_string()),
            ("path.replicas", self.path.replicas.to_string()),
            ("forest.trees", self.forest.trees.to_string()),
            ("forest.min_samples_split", self.forest.min_samples_split.to_string()),
            ("forest.bootstrap", self.forest.bootstrap.to_string()),
            ("select.cutoff", self.cutoff.to_string()),
            ("train.n", self.train.n.to_string()),
            ("train.grid_n", self.train.grid_n.to_string()),
            ("train.regimes", self.train.regimes.to_string()),
            ("train.networks", self.train.networks.to_string()),
            ("train.train_fraction", self.train.train_fraction.to_string()),
            ("train.plant_count_min", self.train.plant.count.0.to_string()),
            ("train.plant_count_max", self.train.plant.count.1.to_string()),
            ("train.plant_size_min", self.train.plant.size.0.to_string()),
            ("train.plant_size_max", self.train.plant.size.1.to_string()),
        ];
        p.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), PipelineError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.pairs().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let counts = [
            ("basic.null_draws", self.basic.null_draws),
            ("community.replicas", self.community.replicas),
            ("localisation.replicas", self.localisation.replicas),
            ("localisation.max_vectors", self.localisation.max_vectors),
            ("netemd.references", self.netemd.references),
            ("netemd.nulls", self.netemd.nulls),
            ("path.beam_width", self.path.beam_width),
            ("path.replicas", self.path.replicas),
            ("forest.trees", self.forest.trees),
            ("select.cutoff", self.cutoff),
            ("train.networks", self.train.networks),
        ];
        if let Some((k, _)) = counts.iter().find(|c| c.1 == 0) {
            return Err(PipelineError::Config(format!("{k} must be at least 1")));
        }
        let alphas = [self.basic.alpha, self.localisation.alpha, self.netemd.alpha, self.path.alpha];
        if alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(PipelineError::Config("alpha must lie in (0, 1)".into()));
        }
        if !(crate::pathfinder::MIN_SIZE..=crate::pathfinder::MAX_SIZE).contains(&self.path.max_size) {
            return Err(PipelineError::Config(format!(
                "path.max_size must lie in {}..={}",
                crate::pathfinder::MIN_SIZE,
                crate::pathfinder::MAX_SIZE
            )));
        }
        if !(self.community.resolution > 0.0) {
            return Err(PipelineError::Config("community.resolution must be positive".into()));
        }
        if !(self.train.train_fraction > 0.0 && self.train.train_fraction <= 1.0) {
            return Err(PipelineError::Config("train.train_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = PipelineConfig::default();
        c.apply_text("seed = 9\n# comment\nalpha=0.01\npath.max_size = 12 # inline\nlocalisation.share_ensemble = true\n")
            .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.netemd.alpha, 0.01);
        assert_eq!(c.path.max_size, 12);
        let mut d = PipelineConfig::default();
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!((c.basic.null_draws, c.localisation.replicas, c.netemd.references), (10_000, 500, 15));
        assert_eq!((c.community.replicas, c.path.beam_width, c.path.max_size), (20, 5000, 21));
        assert_eq!((c.cutoff, c.forest.trees), (44, 10));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = PipelineConfig::default();
        assert!(c.set("nope", "1").is_err());
        assert!(c.set("seed", "x").is_err());
        assert!(c.apply_text("seed 3").is_err());
        c.set("netemd.nulls", "0").unwrap();
        assert!(c.validate().is_err());
    }
}
