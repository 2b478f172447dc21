//! The TOML run manifest. Relative paths resolve against the directory of
//! the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use supportsim_core::counselor::{Counselor, CounselorMode, Selection, TransitionModel};
use supportsim_core::engine::EngineConfig;
use supportsim_core::pools::SeedPools;
use supportsim_core::postprocess::{FilterPolicy, PostProcessor};
use supportsim_core::prompt::PromptTemplate;
use supportsim_core::role::RoleSettings;
use supportsim_core::{Dialogue, RoleTag, Taxonomy};

use crate::gateway::{build_backend, BackendConfig, SharedBackend};
use crate::io;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub counselor: CounselorSection,
    #[serde(default)]
    pub backends: BackendsSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub postprocess: FilterPolicy,
    #[serde(default)]
    pub service: ServiceSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounselorSection {
    /// Fitted transition model; when absent the model is fitted on the
    /// scenario-pool dialogues.
    pub model_path: Option<PathBuf>,
    pub expected_turns: usize,
    pub selection: Selection,
}

impl Default for CounselorSection {
    fn default() -> Self {
        Self { model_path: None, expected_turns: 8, selection: Selection::Argmax }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendsSection {
    pub default: Option<BackendConfig>,
    pub seeker: Option<BackendConfig>,
    pub counselor: Option<BackendConfig>,
    pub supporter: Option<BackendConfig>,
    pub scenario: Option<BackendConfig>,
    pub profile: Option<BackendConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub pools: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub farewell_lexicon: Option<PathBuf>,
    pub role_patterns: Option<PathBuf>,
    /// Directory with `scenario.txt`, `profile.txt`, `seeker.txt`,
    /// `counselor.txt`, `supporter.txt`; missing files keep the defaults.
    pub prompts_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub backend: BackendConfig,
    #[serde(default = "statistical")]
    pub counselor_mode: CounselorMode,
}

fn statistical() -> CounselorMode {
    CounselorMode::Statistical
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServiceSection {
    pub port: u16,
    /// Seeds session ids and A/B orders.
    pub seed: u64,
    pub default_model: Option<String>,
    pub models: BTreeMap<String, ModelSection>,
    /// `["*"]` allows any origin.
    pub cors_origins: Vec<String>,
    pub ui_dir: Option<PathBuf>,
    pub session_log: Option<PathBuf>,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            port: 8080,
            seed: 0,
            default_model: None,
            models: BTreeMap::new(),
            cors_origins: vec!["http://localhost:5173".into()],
            ui_dir: None,
            session_log: None,
        }
    }
}

/// One backend per role, built from the config.
#[derive(Clone)]
pub struct Backends {
    pub seeker: SharedBackend,
    pub counselor: SharedBackend,
    pub supporter: SharedBackend,
    pub scenario: SharedBackend,
    pub profile: SharedBackend,
}

impl Backends {
    pub fn uniform(b: SharedBackend) -> Self {
        Self { seeker: b.clone(), counselor: b.clone(), supporter: b.clone(), scenario: b.clone(), profile: b }
    }

    pub fn roles(&self) -> supportsim_core::engine::RoleBackends<'_> {
        supportsim_core::engine::RoleBackends {
            seeker: &*self.seeker,
            counselor: &*self.counselor,
            supporter: &*self.supporter,
            scenario: &*self.scenario,
            profile: &*self.profile,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = io::read_to_string(path)?;
        let mut config: Config = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.engine.validate()?;
        Ok(config)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn backends(&self) -> anyhow::Result<Backends> {
        let b = &self.backends;
        let default = match &b.default {
            Some(c) => Some(build_backend(c, &self.base_dir)?),
            None => None,
        };
        let pick = |c: &Option<BackendConfig>, role: &str| -> anyhow::Result<SharedBackend> {
            match (c, &default) {
                (Some(c), _) => Ok(build_backend(c, &self.base_dir)?),
                (None, Some(d)) => Ok(d.clone()),
                (None, None) => bail!("no backend configured for {role} (set [backends.default])"),
            }
        };
        Ok(Backends {
            seeker: pick(&b.seeker, "seeker")?,
            counselor: pick(&b.counselor, "counselor")?,
            supporter: pick(&b.supporter, "supporter")?,
            scenario: pick(&b.scenario, "scenario")?,
            profile: pick(&b.profile, "profile")?,
        })
    }

    pub fn pools(&self) -> anyhow::Result<SeedPools> {
        let path = self.data.pools.as_ref().context("no [data] pools file configured")?;
        Ok(io::load_pools(&self.resolve(path))?)
    }

    pub fn taxonomy(&self) -> anyhow::Result<Taxonomy> {
        match &self.data.taxonomy {
            Some(p) => Ok(Taxonomy::parse(&io::read_to_string(&self.resolve(p))?)?),
            None => Ok(Taxonomy::builtin()),
        }
    }

    pub fn post_processor(&self) -> anyhow::Result<PostProcessor> {
        let mut post = PostProcessor::new(self.postprocess);
        if let Some(p) = &self.data.farewell_lexicon {
            post.farewells = io::load_farewell_lexicon(&self.resolve(p))?;
        }
        if let Some(p) = &self.data.role_patterns {
            post.patterns = io::load_role_patterns(&self.resolve(p))?;
        }
        Ok(post)
    }

    pub fn role_settings(&self) -> anyhow::Result<RoleSettings> {
        let mut settings = RoleSettings::default();
        if let Some(dir) = &self.data.prompts_dir {
            let dir = self.resolve(dir);
            for role in [RoleTag::Scenario, RoleTag::Profile, RoleTag::Seeker, RoleTag::Counselor, RoleTag::Supporter] {
                let file = dir.join(format!("{}.txt", role.as_str()));
                if file.exists() {
                    settings.prompts.set(role, PromptTemplate::new(io::read_to_string(&file)?));
                }
                let unknown = settings.prompts.unknown_placeholders(role);
                if !unknown.is_empty() {
                    log::warn!("{} template has unknown placeholders {unknown:?}", role.as_str());
                }
            }
        }
        Ok(settings)
    }

    /// Loads the configured transition model, or fits one on the seed
    /// dialogues.
    pub fn transition_model(&self, pools: &SeedPools) -> anyhow::Result<TransitionModel> {
        match &self.counselor.model_path {
            Some(p) => {
                let text = io::read_to_string(&self.resolve(p))?;
                serde_json::from_str(&text).with_context(|| format!("reading model {}", p.display()))
            }
            None => {
                let corpus: Vec<Dialogue> = pools.scenario_pool().iter().map(|s| s.dialogue.clone()).collect();
                Ok(TransitionModel::fit(&corpus).context("fitting transition model on seed dialogues")?)
            }
        }
    }

    pub fn counselor(&self, pools: &SeedPools, mode: CounselorMode) -> anyhow::Result<Counselor> {
        let model = self.transition_model(pools)?;
        Ok(Counselor::statistical(model, self.counselor.expected_turns)
            .with_mode(mode)
            .with_selection(self.counselor.selection))
    }
}
