//! Ground states cached on disk by a content hash of spec and grid.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialGrid};
use crate::groundstate::{self, GroundStateResult, MethodTrace};
use crate::nonlin::NonlinearitySpec;

/// Hex SHA-256 of the spec's printed form and the grid size.
pub fn cache_key(spec: &NonlinearitySpec, grid: &RadialGrid) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{spec}|N={}|R={:.17e}", grid.len(), grid.radius()).as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CachedMeta {
    spec: String,
    a_star: f64,
    residual: f64,
    newton_steps: usize,
}

fn paths(dir: &Path, key: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("groundstate_{key}.csv")),
        dir.join(format!("groundstate_{key}.json")),
    )
}

/// Loads the cached profile for `(spec, grid)` from `dir`, or solves and
/// stores it.
pub fn ground_state_cached(
    spec: &NonlinearitySpec,
    grid: &Arc<RadialGrid>,
    dir: &Path,
) -> Result<GroundStateResult> {
    let key = cache_key(spec, grid);
    let (csv, json) = paths(dir, &key);
    if csv.exists() && json.exists() {
        let text = std::fs::read_to_string(&json).map_err(|e| Error::io(&json, e))?;
        let meta: CachedMeta = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: json.clone(),
            message: e.to_string(),
        })?;
        if meta.spec == spec.to_string() {
            let phi = RadialField::read_csv(&csv, Some(grid.clone()))?.with_label("ground_state");
            log::info!("ground state loaded from {}", csv.display());
            return groundstate::assemble_result(
                spec,
                phi,
                meta.a_star,
                meta.residual,
                meta.newton_steps,
                MethodTrace::default(),
            );
        }
    }
    let result = groundstate::ground_state_on(spec, grid, 60)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    result.phi.write_csv(&csv)?;
    let meta = CachedMeta {
        spec: spec.to_string(),
        a_star: result.a_star,
        residual: result.residual,
        newton_steps: result.newton_steps,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
    Ok(result)
}
