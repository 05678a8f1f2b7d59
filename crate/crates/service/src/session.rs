//! Sessions and their on-disk envelope.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use aoigram_core::detect::DetectionParams;
use aoigram_core::encoding::DEFAULT_TAU;
use aoigram_core::gaze::{parse_gaze_csv, ScanPath, Stimulus};
use aoigram_core::mining::PatternTable;
use aoigram_core::pipeline::{mine, MiningParams};
use aoigram_core::tree::{AoiTree, NodeId};
use aoigram_core::{Error as CoreError, Rect};

use crate::error::{ApiError, ApiResult};

const FORMAT_VERSION: u32 = 1;

/// Mining defaults stored with a session; `level` falls back to the finest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningDefaults {
    pub level: Option<usize>,
    pub n: usize,
    pub tau: u32,
}

impl Default for MiningDefaults {
    fn default() -> Self {
        MiningDefaults {
            level: None,
            n: 2,
            tau: DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoredDetection {
    pub cell_size: u32,
    pub colors: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Envelope {
    format: u32,
    id: String,
    revision: u64,
    image: String,
    scan_paths: Vec<ScanPath>,
    tree: AoiTree,
    detection: Option<StoredDetection>,
    mining: MiningDefaults,
}

/// One AOI edit; a PATCH applies a list of them atomically.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum AoiEdit {
    AddRect {
        rect: Rect,
        label: Option<String>,
    },
    Delete {
        id: u32,
    },
    Group {
        members: Vec<u32>,
        label: Option<String>,
    },
    Ungroup {
        id: u32,
    },
}

pub struct Session {
    pub id: String,
    pub revision: u64,
    pub image_bytes: Vec<u8>,
    pub stimulus: Stimulus,
    pub paths: Vec<ScanPath>,
    pub tree: AoiTree,
    pub detection: Option<StoredDetection>,
    pub mining: MiningDefaults,
    cache: Mutex<HashMap<(u64, MiningParams), Arc<PatternTable>>>,
}

impl Session {
    pub fn create(id: String, image_bytes: Vec<u8>, gaze_csv: &[u8]) -> Result<Self, CoreError> {
        let stimulus = Stimulus::decode(&image_bytes)?;
        let mut paths = parse_gaze_csv(gaze_csv)?;
        for p in &mut paths {
            p.clamp_to(stimulus.width, stimulus.height);
        }
        Ok(Session {
            id,
            revision: 0,
            image_bytes,
            stimulus,
            paths,
            tree: AoiTree::new(),
            detection: None,
            mining: MiningDefaults::default(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn file_path(data_dir: &Path, id: &str) -> PathBuf {
        data_dir.join(format!("{id}.json"))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let env: Envelope =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if env.format != FORMAT_VERSION {
            return Err(format!(
                "{}: unsupported format {}",
                path.display(),
                env.format
            ));
        }
        let image_bytes = base64::engine::general_purpose::STANDARD
            .decode(env.image)
            .map_err(|e| format!("{}: image: {e}", path.display()))?;
        let stimulus =
            Stimulus::decode(&image_bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Session {
            id: env.id,
            revision: env.revision,
            image_bytes,
            stimulus,
            paths: env.scan_paths,
            tree: env.tree,
            detection: env.detection,
            mining: env.mining,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Writes the envelope next to its final path, then renames it into place.
    pub fn save(&self, data_dir: &Path) -> std::io::Result<()> {
        let env = Envelope {
            format: FORMAT_VERSION,
            id: self.id.clone(),
            revision: self.revision,
            image: base64::engine::general_purpose::STANDARD.encode(&self.image_bytes),
            scan_paths: self.paths.clone(),
            tree: self.tree.clone(),
            detection: self.detection,
            mining: self.mining,
        };
        let path = Session::file_path(data_dir, &self.id);
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec(&env)?)?;
        std::fs::rename(tmp, path)
    }

    /// Replaces the tree after validating it; bumps the revision.
    pub fn commit_tree(&mut self, tree: AoiTree) -> ApiResult<()> {
        let violations = tree.validate_within(self.stimulus.width, self.stimulus.height);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(ApiError::new(
                axum::http::StatusCode::CONFLICT,
                "AOI tree failed validation",
            )
            .with_details(json!({ "violations": list })));
        }
        self.tree = tree;
        self.bump();
        Ok(())
    }

    pub fn bump(&mut self) {
        self.revision += 1;
        self.cache.lock().expect("cache lock").clear();
    }

    pub fn apply_edits(&self, edits: &[AoiEdit]) -> ApiResult<AoiTree> {
        let conflict = |e: CoreError| match e {
            CoreError::UnknownNode(_) => ApiError::from(e),
            other => ApiError::new(axum::http::StatusCode::CONFLICT, other.to_string()),
        };
        let mut tree = self.tree.clone();
        for edit in edits {
            tree = match edit {
                AoiEdit::AddRect { rect, label } => {
                    let fitted =
                        fit_new_rect(&tree, *rect, self.stimulus.width, self.stimulus.height)
                            .ok_or_else(|| {
                                ApiError::new(
                                    axum::http::StatusCode::CONFLICT,
                                    "rectangle is empty after removing overlaps",
                                )
                            })?;
                    let label = label
                        .clone()
                        .unwrap_or_else(|| format!("AOI {}", tree.leaves().len() + 1));
                    tree.add_leaf(label, fitted).0
                }
                AoiEdit::Delete { id } => tree.remove(NodeId(*id)).map_err(conflict)?,
                AoiEdit::Group { members, label } => {
                    let ids: Vec<NodeId> = members.iter().map(|&m| NodeId(m)).collect();
                    tree.make_group(&ids, label.as_deref()).map_err(conflict)?.0
                }
                AoiEdit::Ungroup { id } => tree.ungroup(NodeId(*id)).map_err(conflict)?,
            };
        }
        Ok(tree)
    }

    pub fn mining_params(
        &self,
        level: Option<usize>,
        n: Option<usize>,
        tau: Option<u32>,
    ) -> MiningParams {
        MiningParams {
            level: level
                .or(self.mining.level)
                .unwrap_or_else(|| self.tree.depth()),
            n: n.unwrap_or(self.mining.n),
            tau: tau.unwrap_or(self.mining.tau),
        }
    }

    /// Pattern table for the current revision, computed once per parameter set.
    /// The flag reports whether it came from the cache.
    pub fn table(&self, params: MiningParams) -> ApiResult<(Arc<PatternTable>, bool)> {
        let key = (self.revision, params);
        if let Some(t) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok((t.clone(), true));
        }
        let table = Arc::new(mine(&self.paths, &self.tree, params)?.table);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key, table.clone());
        Ok((table, false))
    }

    pub fn summary(&self) -> Value {
        json!({
            "id": self.id,
            "revision": self.revision,
            "participants": self.paths.len(),
        })
    }

    pub fn detail(&self) -> Value {
        json!({
            "id": self.id,
            "revision": self.revision,
            "width": self.stimulus.width,
            "height": self.stimulus.height,
            "participants": self.paths.iter().map(|p| json!({"id": p.participant, "points": p.points.len()})).collect::<Vec<_>>(),
            "tree": self.tree,
            "depth": self.tree.depth(),
            "detection": self.detection,
            "mining": self.mining,
        })
    }

    pub fn set_detection(&mut self, params: DetectionParams) {
        self.detection = Some(StoredDetection {
            cell_size: params.cell_size,
            colors: params.colors,
        });
    }
}

/// Clamps `rect` to the stimulus, then trims it against every overlapping
/// leaf, each time keeping the largest of the four one-sided trims.
/// `None` when nothing is left.
pub fn fit_new_rect(tree: &AoiTree, rect: Rect, width: u32, height: u32) -> Option<Rect> {
    let mut r = rect.intersection(&Rect::new(0, 0, width, height))?;
    loop {
        let Some(other) = tree
            .leaves()
            .iter()
            .filter_map(|l| l.rect())
            .find(|o| o.intersects(&r))
        else {
            return Some(r);
        };
        let trims = [
            // keep the part left of, right of, above, below the obstacle
            (other.x > r.x).then(|| Rect::new(r.x, r.y, other.x - r.x, r.h)),
            (other.right() < r.right())
                .then(|| Rect::new(other.right(), r.y, r.right() - other.right(), r.h)),
            (other.y > r.y).then(|| Rect::new(r.x, r.y, r.w, other.y - r.y)),
            (other.bottom() < r.bottom())
                .then(|| Rect::new(r.x, other.bottom(), r.w, r.bottom() - other.bottom())),
        ];
        r = trims.into_iter().flatten().max_by_key(|t| t.area())?;
    }
}
