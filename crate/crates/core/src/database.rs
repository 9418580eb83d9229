//! The bundled material and molecule database: `materials/*.json` and
//! `molecules/*.json` under one root directory. Ids are file stems.

use std::path::{Path, PathBuf};

use crate::dielectric::PermittivityModel;
use crate::error::{CpError, Result};
use crate::molecule::Molecule;

/// Environment variable overriding the database root.
pub const DATA_DIR_ENV: &str = "CP_DATA_DIR";

#[derive(Debug, Clone)]
pub struct Database {
    root: PathBuf,
}

impl Database {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        if !root.join("materials").is_dir() || !root.join("molecules").is_dir() {
            return Err(CpError::Io(format!("{} does not contain materials/ and molecules/", root.display())));
        }
        Ok(Self { root })
    }

    /// `$CP_DATA_DIR` if set, otherwise the `data/` directory of this repository.
    pub fn default_root() -> PathBuf {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => PathBuf::from(dir),
            None => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"),
        }
    }

    pub fn open_default() -> Result<Self> {
        Self::open(Self::default_root())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn ids(&self, sub: &str) -> Result<Vec<String>> {
        let dir = self.root.join(sub);
        let entries = std::fs::read_dir(&dir).map_err(|e| CpError::Io(format!("{}: {e}", dir.display())))?;
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn material_ids(&self) -> Result<Vec<String>> {
        self.ids("materials")
    }

    pub fn molecule_ids(&self) -> Result<Vec<String>> {
        self.ids("molecules")
    }

    fn path_for(&self, sub: &str, id: &str) -> Result<PathBuf> {
        let valid = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let path = self.root.join(sub).join(format!("{id}.json"));
        if !valid || !path.is_file() {
            return Err(CpError::UnknownId(id.to_string()));
        }
        Ok(path)
    }

    pub fn material(&self, id: &str) -> Result<PermittivityModel> {
        let path = self.path_for("materials", id)?;
        let text = std::fs::read_to_string(&path).map_err(|e| CpError::Io(format!("{}: {e}", path.display())))?;
        let model: PermittivityModel =
            serde_json::from_str(&text).map_err(|e| CpError::Parse(format!("{}: {e}", path.display())))?;
        model.validate()?;
        Ok(model)
    }

    pub fn molecule(&self, id: &str) -> Result<Molecule> {
        Molecule::from_path(&self.path_for("molecules", id)?)
    }
}
