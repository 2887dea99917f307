//! Moodboards: positioned items with system and custom tags, persisted one
//! JSON file per board and guarded by a version compare-and-set.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use guohua_core::corpus::{AnnotationSet, Tag, TagDimension};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ITEM_SIZE: f64 = 200.0;

#[derive(Debug, thiserror::Error)]
pub enum BoardError {
    #[error("unknown board `{0}`")]
    UnknownBoard(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("missing or wrong owner token")]
    Unauthorized,
    #[error("stale board version {given}, current is {current}")]
    VersionConflict { given: u64, current: u64 },
    #[error("tag {0} is already a system tag of this item")]
    DuplicatesSystemTag(String),
    #[error("tag {0} is already on this item")]
    DuplicateTag(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("unknown painting or image `{0}`")]
    UnknownRecord(String),
    #[error("board storage: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ItemSource {
    CorpusPainting { record_id: String },
    GeneratedImage { image_ref: String },
    OnlineImage { url: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardItem {
    pub item_id: String,
    pub source: ItemSource,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    /// Snapshot of the painting's annotations when the item was added.
    pub system_tags: AnnotationSet,
    /// Tags added by the user.
    pub custom_tags: Vec<Tag>,
    /// Shown in the image collection and selectable as an image prompt.
    #[serde(default)]
    pub collected: bool,
}

impl BoardItem {
    pub fn has_tag(&self, dim: TagDimension, concept: &str) -> bool {
        self.system_tags.contains(dim, concept)
            || self.custom_tags.iter().any(|t| t.dimension == dim && t.concept() == concept)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moodboard {
    pub board_id: String,
    pub version: u64,
    pub items: Vec<BoardItem>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    #[serde(default)]
    next_item: u64,
}

fn default_size() -> f64 {
    DEFAULT_ITEM_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum BoardOp {
    AddItem {
        source: ItemSource,
        x: f64,
        y: f64,
        #[serde(default = "default_size")]
        width: f64,
        #[serde(default = "default_size")]
        height: f64,
    },
    MoveItem {
        item_id: String,
        x: f64,
        y: f64,
        #[serde(default)]
        width: Option<f64>,
        #[serde(default)]
        height: Option<f64>,
    },
    RemoveItem {
        item_id: String,
    },
    AddCustomTag {
        item_id: String,
        tag: Tag,
    },
    RemoveCustomTag {
        item_id: String,
        tag: Tag,
    },
    SetCollected {
        item_id: String,
        collected: bool,
    },
}

/// Looks up the system tags for a new item's source.
pub type TagResolver<'a> = &'a dyn Fn(&ItemSource) -> Result<AnnotationSet, BoardError>;

fn check_point(x: f64, y: f64) -> Result<(), BoardError> {
    if x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(BoardError::Geometry("position must be finite".into()))
    }
}

fn check_size(w: f64, h: f64) -> Result<(), BoardError> {
    if w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0 {
        Ok(())
    } else {
        Err(BoardError::Geometry("size must be finite and positive".into()))
    }
}

impl Moodboard {
    pub fn new(board_id: impl Into<String>) -> Moodboard {
        let now = Utc::now();
        Moodboard { board_id: board_id.into(), version: 0, items: Vec::new(), created_at: now, updated_at: now, next_item: 0 }
    }

    pub fn item(&self, item_id: &str) -> Option<&BoardItem> {
        self.items.iter().find(|i| i.item_id == item_id)
    }

    fn item_mut(&mut self, item_id: &str) -> Result<&mut BoardItem, BoardError> {
        self.items
            .iter_mut()
            .find(|i| i.item_id == item_id)
            .ok_or_else(|| BoardError::UnknownItem(item_id.to_string()))
    }

    /// Applies one operation in place. Does not touch the version.
    pub fn apply(&mut self, op: &BoardOp, resolve: TagResolver<'_>) -> Result<(), BoardError> {
        match op {
            BoardOp::AddItem { source, x, y, width, height } => {
                check_point(*x, *y)?;
                check_size(*width, *height)?;
                let system_tags = resolve(source)?;
                let item_id = format!("item-{}", self.next_item);
                self.next_item += 1;
                self.items.push(BoardItem {
                    item_id,
                    source: source.clone(),
                    x: *x,
                    y: *y,
                    width: *width,
                    height: *height,
                    system_tags,
                    custom_tags: Vec::new(),
                    collected: false,
                });
            }
            BoardOp::MoveItem { item_id, x, y, width, height } => {
                check_point(*x, *y)?;
                let item = self.item_mut(item_id)?;
                let (w, h) = (width.unwrap_or(item.width), height.unwrap_or(item.height));
                check_size(w, h)?;
                item.x = *x;
                item.y = *y;
                item.width = w;
                item.height = h;
            }
            BoardOp::RemoveItem { item_id } => {
                let before = self.items.len();
                self.items.retain(|i| &i.item_id != item_id);
                if self.items.len() == before {
                    return Err(BoardError::UnknownItem(item_id.clone()));
                }
            }
            BoardOp::AddCustomTag { item_id, tag } => {
                let item = self.item_mut(item_id)?;
                let label = format!("{}:{}", tag.dimension.key(), tag.concept());
                if item.system_tags.contains(tag.dimension, tag.concept()) {
                    return Err(BoardError::DuplicatesSystemTag(label));
                }
                if item.custom_tags.iter().any(|t| t.key() == tag.key()) {
                    return Err(BoardError::DuplicateTag(label));
                }
                item.custom_tags.push(tag.clone());
            }
            BoardOp::RemoveCustomTag { item_id, tag } => {
                let item = self.item_mut(item_id)?;
                let before = item.custom_tags.len();
                item.custom_tags.retain(|t| t.key() != tag.key());
                if item.custom_tags.len() == before {
                    return Err(BoardError::UnknownItem(format!("{item_id} has no custom tag {}", tag.concept())));
                }
            }
            BoardOp::SetCollected { item_id, collected } => {
                self.item_mut(item_id)?.collected = *collected;
            }
        }
        Ok(())
    }

    /// Items whose system or custom tags contain `(dim, concept)`, in board order.
    pub fn highlight_by_tag(&self, dim: TagDimension, concept: &str) -> Vec<String> {
        self.items.iter().filter(|i| i.has_tag(dim, concept)).map(|i| i.item_id.clone()).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredBoard {
    owner_token: String,
    board: Moodboard,
}

/// All boards, in memory with write-through persistence.
#[derive(Debug)]
pub struct BoardStore {
    dir: Option<PathBuf>,
    boards: Mutex<HashMap<String, StoredBoard>>,
}

impl BoardStore {
    pub fn in_memory() -> BoardStore {
        BoardStore { dir: None, boards: Mutex::new(HashMap::new()) }
    }

    /// Loads every `<id>.json` under `dir`.
    pub fn open(dir: impl Into<PathBuf>) -> Result<BoardStore, BoardError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| BoardError::Io(format!("{}: {e}", dir.display())))?;
        let mut boards = HashMap::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| BoardError::Io(e.to_string()))? {
            let path = entry.map_err(|e| BoardError::Io(e.to_string()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| BoardError::Io(format!("{}: {e}", path.display())))?;
            let b: StoredBoard =
                serde_json::from_str(&text).map_err(|e| BoardError::Io(format!("{}: {e}", path.display())))?;
            boards.insert(b.board.board_id.clone(), b);
        }
        Ok(BoardStore { dir: Some(dir), boards: Mutex::new(boards) })
    }

    fn persist(&self, b: &StoredBoard) -> Result<(), BoardError> {
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{}.json", b.board.board_id));
            let text = serde_json::to_vec_pretty(b).expect("board serializes");
            guohua_core::fsutil::write_atomic(&path, &text).map_err(|e| BoardError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// Creates an empty board; returns it with its owner token.
    pub fn create(&self) -> Result<(Moodboard, String), BoardError> {
        let stored = StoredBoard {
            owner_token: uuid::Uuid::new_v4().simple().to_string(),
            board: Moodboard::new(uuid::Uuid::new_v4().to_string()),
        };
        self.persist(&stored)?;
        let out = (stored.board.clone(), stored.owner_token.clone());
        self.boards.lock().expect("board lock").insert(stored.board.board_id.clone(), stored);
        Ok(out)
    }

    pub fn get(&self, board_id: &str, token: &str) -> Result<Moodboard, BoardError> {
        let boards = self.boards.lock().expect("board lock");
        let b = boards.get(board_id).ok_or_else(|| BoardError::UnknownBoard(board_id.to_string()))?;
        if b.owner_token != token {
            return Err(BoardError::Unauthorized);
        }
        Ok(b.board.clone())
    }

    /// Applies `ops` atomically if `version` is current; the version then
    /// increases by one.
    pub fn mutate(
        &self,
        board_id: &str,
        token: &str,
        version: u64,
        ops: &[BoardOp],
        resolve: TagResolver<'_>,
    ) -> Result<Moodboard, BoardError> {
        let mut boards = self.boards.lock().expect("board lock");
        let stored = boards.get(board_id).ok_or_else(|| BoardError::UnknownBoard(board_id.to_string()))?;
        if stored.owner_token != token {
            return Err(BoardError::Unauthorized);
        }
        if stored.board.version != version {
            return Err(BoardError::VersionConflict { given: version, current: stored.board.version });
        }
        let mut next = stored.clone();
        for op in ops {
            next.board.apply(op, resolve)?;
        }
        next.board.version += 1;
        next.board.updated_at = Utc::now();
        self.persist(&next)?;
        let out = next.board.clone();
        boards.insert(board_id.to_string(), next);
        Ok(out)
    }
}
