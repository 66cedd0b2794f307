use std::path::{Path, PathBuf};

use resi_core::catalog::ColumnMap;
use resi_core::pipeline::RunConfig;
use resi_core::time::Month;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputConfig {
    /// JMA fixed-width catalog files.
    pub catalog: Vec<PathBuf>,
    /// Normalized event CSV files.
    pub events: Vec<PathBuf>,
    /// Scenario file for a generated catalog.
    pub synthetic: Option<PathBuf>,
    pub columns: ColumnMap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub csv: bool,
    pub report: bool,
    pub svg: bool,
    /// Windows for which per-cell cluster snapshots are written.
    pub geojson: Vec<Month>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            csv: true,
            report: true,
            svg: true,
            geojson: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub input: InputConfig,
    pub output: OutputConfig,
    #[serde(flatten)]
    pub run: RunConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: FileConfig = toml::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.input.catalog.iter_mut().for_each(rebase);
        cfg.input.events.iter_mut().for_each(rebase);
        if let Some(p) = cfg.input.synthetic.as_mut() {
            rebase(p);
        }
        rebase(&mut cfg.output.dir);
        Ok(cfg)
    }
}
