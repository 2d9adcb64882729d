use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tensor_art::ArtModel;

use crate::atomic::write_json;
use crate::error::{CliError, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// A model with its spectral radius, as written by `simulate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub rho: f64,
    pub stationary: bool,
    pub model: ArtModel,
}

impl ModelFile {
    pub fn new(model: ArtModel) -> Self {
        let s = model.check_stationarity();
        ModelFile { schema_version: MODEL_SCHEMA_VERSION, rho: s.rho, stationary: s.stationary, model }
    }
}

pub fn save_model(path: &Path, model: &ArtModel) -> Result<()> {
    write_json(path, &ModelFile::new(model.clone()))
}

pub fn load_model(path: &Path) -> Result<ArtModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::at_path(path, e))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(CliError::validation(format!(
            "{}: unsupported model schema_version {}",
            path.display(),
            file.schema_version
        )));
    }
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use tensor_art::rng::{stream, Purpose};

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let dims = [2, 3];
        let covs = vec![DMatrix::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.7]), DMatrix::identity(3, 3) * 0.3];
        let (model, rho) = ArtModel::random_stable(&dims, 2, 0.9, covs, &mut stream(3, 0, Purpose::ModelGeneration)).unwrap();
        let p = dir.path().join("m.json");
        save_model(&p, &model).unwrap();
        assert_eq!(load_model(&p).unwrap(), model);
        let file: ModelFile = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(file.rho, rho);
        assert!(file.stationary);
    }
}
