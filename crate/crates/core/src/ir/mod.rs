//! In-memory model of a Scratch 3 project decoded from `project.json`.

mod decode;
mod encode;
pub mod opcodes;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use md5::{Digest, Md5};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub use opcodes::{lookup as opcode_info, OpcodeInfo, Shape};

pub type BlockId = String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IrError {
    #[error("malformed project.json at {path}: {reason}")]
    MalformedJson { path: String, reason: String },
    #[error("unsupported project format (meta: {0}); only Scratch 3 projects are supported")]
    UnsupportedFormat(String),
    #[error("expected exactly one stage, found {0}")]
    StageCount(usize),
    #[error("duplicate sprite name `{0}`")]
    DuplicateSprite(String),
    #[error("target `{target}` references missing block `{id}`")]
    DanglingBlockRef { target: String, id: BlockId },
    #[error("target `{target}`, block `{id}`: {reason}")]
    ShapeViolation { target: String, id: BlockId, reason: String },
    #[error("target `{target}`: {reason}")]
    InvalidTarget { target: String, reason: String },
    #[error("asset `{0}` is not present in the archive")]
    MissingAsset(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectMeta {
    pub semver: String,
    pub vm: Option<String>,
    pub agent: Option<String>,
}

/// A decoded, fully linked project. Immutable after loading.
#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub stage: Target,
    pub sprites: Vec<Target>,
    pub meta: ProjectMeta,
    pub source_path: String,
    pub extensions: Vec<String>,
    pub monitor_count: usize,
    /// Top-level `project.json` keys this model does not interpret.
    pub extra: Map<String, Value>,
    assets: BTreeMap<String, Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationStyle {
    AllAround,
    LeftRight,
    DontRotate,
}

impl RotationStyle {
    pub fn wire_name(self) -> &'static str {
        match self {
            RotationStyle::AllAround => "all around",
            RotationStyle::LeftRight => "left-right",
            RotationStyle::DontRotate => "don't rotate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub name: String,
    pub is_stage: bool,
    pub blocks: BTreeMap<BlockId, Block>,
    pub costumes: Vec<Costume>,
    pub current_costume: usize,
    pub x: f64,
    pub y: f64,
    /// Percent; 100 is native size.
    pub size: f64,
    /// Degrees in (-180, 180]; 90 points right.
    pub direction: f64,
    pub visible: bool,
    pub rotation_style: RotationStyle,
    pub layer_order: i64,
    /// Declared variables, id -> name.
    pub variables: BTreeMap<String, String>,
    pub lists: BTreeMap<String, String>,
    pub broadcasts: BTreeMap<String, String>,
    pub comment_count: usize,
    pub sound_count: usize,
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Png,
    Svg,
    Jpg,
    Bmp,
    Gif,
}

impl ImageFormat {
    pub fn from_ext(ext: &str) -> Option<Self> {
        Some(match ext.to_ascii_lowercase().as_str() {
            "png" => ImageFormat::Png,
            "svg" => ImageFormat::Svg,
            "jpg" | "jpeg" => ImageFormat::Jpg,
            "bmp" => ImageFormat::Bmp,
            "gif" => ImageFormat::Gif,
            _ => return None,
        })
    }

    pub fn ext(self) -> &'static str {
        match self {
            ImageFormat::Png => "png",
            ImageFormat::Svg => "svg",
            ImageFormat::Jpg => "jpg",
            ImageFormat::Bmp => "bmp",
            ImageFormat::Gif => "gif",
        }
    }

    pub fn is_bitmap(self) -> bool {
        self != ImageFormat::Svg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Costume {
    pub name: String,
    /// MD5 of the asset bytes, lowercase hex.
    pub asset_id: String,
    pub file_ext: ImageFormat,
    /// Native costume pixels.
    pub rotation_center: (f64, f64),
    pub bitmap_resolution: u32,
    /// Archive member holding the asset bytes.
    pub member: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub opcode: String,
    pub next: Option<BlockId>,
    pub parent: Option<BlockId>,
    pub inputs: BTreeMap<String, Input>,
    pub fields: BTreeMap<String, Field>,
    pub top_level: bool,
    pub shadow: bool,
    pub shape: Shape,
    /// False when the opcode is not in the signature table.
    pub known: bool,
    pub mutation: Option<Map<String, Value>>,
    pub position: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    pub value: String,
    pub id: Option<String>,
}

/// Wire-level shadow relationship of an input (`1`, `2`, `3` in sb3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    SameBlockShadow = 1,
    NoShadow = 2,
    ObscuredShadow = 3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Input {
    pub kind: InputKind,
    /// What occupies the slot as seen in the editor.
    pub value: InputValue,
    /// The shadow hidden underneath `value`, for obscured inputs.
    pub shadow: Option<InputValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiteralKind {
    Number = 4,
    PositiveNumber = 5,
    WholeNumber = 6,
    Integer = 7,
    Angle = 8,
    Color = 9,
    Text = 10,
}

impl LiteralKind {
    pub fn is_numeric(self) -> bool {
        !matches!(self, LiteralKind::Color | LiteralKind::Text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputValue {
    Empty,
    Block(BlockId),
    Literal { kind: LiteralKind, value: String },
    Broadcast { name: String, id: String },
    Variable { name: String, id: String },
    List { name: String, id: String },
}

impl Input {
    pub fn block_refs(&self) -> impl Iterator<Item = &BlockId> {
        [Some(&self.value), self.shadow.as_ref()]
            .into_iter()
            .flatten()
            .filter_map(|v| match v {
                InputValue::Block(id) => Some(id),
                _ => None,
            })
    }
}

impl Block {
    pub fn field(&self, name: &str) -> Option<&str> {
        self.fields.get(name).map(|f| f.value.as_str())
    }

    pub fn mutation_str(&self, key: &str) -> Option<&str> {
        self.mutation.as_ref()?.get(key)?.as_str()
    }

    /// A JSON-encoded string array inside the mutation (`argumentids`, …).
    pub fn mutation_list(&self, key: &str) -> Vec<String> {
        self.mutation_str(key)
            .and_then(|s| serde_json::from_str::<Vec<Value>>(s).ok())
            .map(|v| {
                v.into_iter()
                    .map(|x| match x {
                        Value::String(s) => s,
                        other => other.to_string(),
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Every block id this block points at (next, parent, inputs).
    pub fn references(&self) -> impl Iterator<Item = &BlockId> {
        self.next
            .iter()
            .chain(self.parent.iter())
            .chain(self.inputs.values().flat_map(Input::block_refs))
    }
}

impl Target {
    /// Script roots: hats first, then other top-level stacks, each group
    /// ordered by block id. Shadow blocks never start a script.
    pub fn iter_scripts(&self) -> Vec<&BlockId> {
        let mut hats = Vec::new();
        let mut orphans = Vec::new();
        for (id, block) in &self.blocks {
            if !block.top_level || block.shadow {
                continue;
            }
            if block.shape == Shape::Hat {
                hats.push(id);
            } else {
                orphans.push(id);
            }
        }
        hats.extend(orphans);
        hats
    }

    /// Blocks of the script starting at `root`, in depth-first order,
    /// including nested inputs and substacks.
    pub fn script_blocks(&self, root: &str) -> Vec<&BlockId> {
        let mut out = Vec::new();
        let mut stack: Vec<&BlockId> = Vec::new();
        if let Some((id, _)) = self.blocks.get_key_value(root) {
            stack.push(id);
        }
        while let Some(id) = stack.pop() {
            let Some(block) = self.blocks.get(id) else { continue };
            out.push(id);
            if let Some(next) = &block.next {
                stack.push(next);
            }
            for input in block.inputs.values().rev() {
                for r in input.block_refs() {
                    stack.push(r);
                }
            }
        }
        out
    }

    pub fn current_costume(&self) -> &Costume {
        &self.costumes[self.current_costume]
    }

    pub fn block_count(&self) -> usize {
        self.blocks.values().filter(|b| !b.shadow).count()
    }

    /// The `blocks` object of this target in sb3 wire format.
    pub fn blocks_json(&self) -> Value {
        encode::blocks_to_json(&self.blocks)
    }
}

/// Result of fetching asset bytes; `integrity_ok` is false when the bytes do
/// not hash to the declared asset id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssetBytes<'a> {
    pub bytes: &'a [u8],
    pub integrity_ok: bool,
}

impl Project {
    /// Decode `project.json` and link it against the archive members.
    pub fn from_parts(
        project_json: &[u8],
        assets: BTreeMap<String, Vec<u8>>,
        source_path: impl Into<String>,
    ) -> Result<Project, IrError> {
        let value: Value = serde_json::from_slice(project_json).map_err(|e| IrError::MalformedJson {
            path: String::from("$"),
            reason: alloc::format!("{e}"),
        })?;
        let mut project = decode::project_from_json(value)?;
        project.source_path = source_path.into();
        project.assets = assets;
        for target in project.targets() {
            for costume in &target.costumes {
                if !project.assets.contains_key(&costume.member) {
                    return Err(IrError::MissingAsset(costume.asset_id.clone()));
                }
            }
        }
        Ok(project)
    }

    /// Stage first, then sprites in project order.
    pub fn targets(&self) -> impl Iterator<Item = &Target> {
        core::iter::once(&self.stage).chain(self.sprites.iter())
    }

    pub fn sprite(&self, name: &str) -> Option<&Target> {
        self.sprites.iter().find(|s| s.name == name)
    }

    pub fn asset_bytes(&self, costume: &Costume) -> Result<AssetBytes<'_>, IrError> {
        let bytes = self
            .assets
            .get(&costume.member)
            .ok_or_else(|| IrError::MissingAsset(costume.asset_id.clone()))?;
        Ok(AssetBytes {
            bytes,
            integrity_ok: md5_hex(bytes) == costume.asset_id.to_ascii_lowercase(),
        })
    }

    pub fn asset_names(&self) -> impl Iterator<Item = &str> {
        self.assets.keys().map(String::as_str)
    }

    /// Re-serialize the model as a `project.json` value.
    pub fn to_json(&self) -> Value {
        encode::project_to_json(self)
    }
}

pub fn md5_hex(bytes: &[u8]) -> String {
    let digest = Md5::digest(bytes);
    let mut out = String::with_capacity(32);
    for b in digest.iter() {
        out.push(char::from_digit(u32::from(b >> 4), 16).unwrap());
        out.push(char::from_digit(u32::from(b & 0xf), 16).unwrap());
    }
    out
}
