use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Value};

use super::opcodes::{self, Shape};
use super::{
    Block, Costume, Field, ImageFormat, Input, InputKind, InputValue, IrError, LiteralKind, Project,
    ProjectMeta, RotationStyle, Target,
};

fn malformed(path: &str, reason: impl Into<String>) -> IrError {
    IrError::MalformedJson { path: path.to_string(), reason: reason.into() }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, IrError> {
    v.as_object().ok_or_else(|| malformed(path, "expected an object"))
}

/// Numbers sometimes arrive as strings in community projects.
fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn opt_number(obj: &Map<String, Value>, key: &str, path: &str, default: f64) -> Result<f64, IrError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => number(v).ok_or_else(|| malformed(&format!("{path}.{key}"), "expected a number")),
    }
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Null => Some(String::new()),
        _ => None,
    }
}

pub(super) fn project_from_json(root: Value) -> Result<Project, IrError> {
    let Value::Object(mut root) = root else {
        return Err(malformed("$", "expected an object"));
    };
    let meta = match root.remove("meta") {
        Some(Value::Object(m)) => ProjectMeta {
            semver: m.get("semver").and_then(Value::as_str).unwrap_or("unknown").to_string(),
            vm: m.get("vm").and_then(Value::as_str).map(String::from),
            agent: m.get("agent").and_then(Value::as_str).map(String::from),
        },
        _ => ProjectMeta { semver: "unknown".into(), vm: None, agent: None },
    };
    let targets = match root.remove("targets") {
        Some(Value::Array(t)) => t,
        _ => return Err(IrError::UnsupportedFormat(meta.semver)),
    };
    let extensions = match root.remove("extensions") {
        Some(Value::Array(e)) => e.iter().filter_map(|x| x.as_str().map(String::from)).collect(),
        _ => Vec::new(),
    };
    let monitor_count = match root.remove("monitors") {
        Some(Value::Array(m)) => m.len(),
        _ => 0,
    };

    let mut stages = Vec::new();
    let mut sprites = Vec::new();
    for (i, t) in targets.into_iter().enumerate() {
        let target = decode_target(t, &format!("targets[{i}]"), i)?;
        if target.is_stage {
            stages.push(target);
        } else {
            sprites.push(target);
        }
    }
    if stages.len() != 1 {
        return Err(IrError::StageCount(stages.len()));
    }
    let mut seen = BTreeSet::new();
    for s in &sprites {
        if !seen.insert(s.name.as_str()) {
            return Err(IrError::DuplicateSprite(s.name.clone()));
        }
    }
    Ok(Project {
        stage: stages.pop().unwrap(),
        sprites,
        meta,
        source_path: String::new(),
        extensions,
        monitor_count,
        extra: root,
        assets: BTreeMap::new(),
    })
}

const TARGET_KEYS: &[&str] = &[
    "isStage",
    "name",
    "variables",
    "lists",
    "broadcasts",
    "blocks",
    "comments",
    "currentCostume",
    "costumes",
    "sounds",
    "layerOrder",
    "volume",
    "visible",
    "x",
    "y",
    "size",
    "direction",
    "draggable",
    "rotationStyle",
];

fn decode_target(v: Value, path: &str, index: usize) -> Result<Target, IrError> {
    let obj = as_object(&v, path)?;
    let is_stage = obj.get("isStage").and_then(Value::as_bool).unwrap_or(false);
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(&format!("{path}.name"), "expected a string"))?
        .to_string();

    let variables = named_table(obj.get("variables"), &format!("{path}.variables"))?;
    let lists = named_table(obj.get("lists"), &format!("{path}.lists"))?;
    let broadcasts = match obj.get("broadcasts") {
        Some(Value::Object(m)) => m
            .iter()
            .map(|(k, v)| (k.clone(), v.as_str().unwrap_or_default().to_string()))
            .collect(),
        _ => BTreeMap::new(),
    };

    let mut blocks = BTreeMap::new();
    if let Some(b) = obj.get("blocks") {
        let bpath = format!("{path}.blocks");
        for (id, raw) in as_object(b, &bpath)? {
            let block = decode_block(raw, &format!("{bpath}.{id}"))?;
            blocks.insert(id.clone(), block);
        }
    }

    let mut costumes = Vec::new();
    match obj.get("costumes") {
        Some(Value::Array(cs)) => {
            for (i, c) in cs.iter().enumerate() {
                costumes.push(decode_costume(c, &format!("{path}.costumes[{i}]"), &name)?);
            }
        }
        _ => return Err(malformed(&format!("{path}.costumes"), "expected an array")),
    }
    if costumes.is_empty() {
        return Err(IrError::InvalidTarget { target: name, reason: "target has no costumes".into() });
    }
    let current = opt_number(obj, "currentCostume", path, 0.0)?;
    if current < 0.0 || current as usize >= costumes.len() {
        return Err(IrError::InvalidTarget {
            target: name,
            reason: format!("current costume {current} out of range ({} costumes)", costumes.len()),
        });
    }

    let (x, y, size, direction) = if is_stage {
        (0.0, 0.0, 100.0, 90.0)
    } else {
        (
            opt_number(obj, "x", path, 0.0)?,
            opt_number(obj, "y", path, 0.0)?,
            opt_number(obj, "size", path, 100.0)?,
            normalize_direction(opt_number(obj, "direction", path, 90.0)?),
        )
    };
    if !(size > 0.0) {
        return Err(IrError::InvalidTarget { target: name, reason: format!("size must be positive, got {size}") });
    }
    let rotation_style = match obj.get("rotationStyle").and_then(Value::as_str) {
        None | Some("all around") => RotationStyle::AllAround,
        Some("left-right") => RotationStyle::LeftRight,
        Some("don't rotate") => RotationStyle::DontRotate,
        Some(other) => {
            return Err(malformed(&format!("{path}.rotationStyle"), format!("unknown rotation style `{other}`")))
        }
    };
    let layer_order = opt_number(obj, "layerOrder", path, index as f64)? as i64;
    let visible = is_stage || obj.get("visible").and_then(Value::as_bool).unwrap_or(true);
    let comment_count = obj.get("comments").and_then(Value::as_object).map_or(0, Map::len);
    let sound_count = obj.get("sounds").and_then(Value::as_array).map_or(0, Vec::len);
    let extra = obj
        .iter()
        .filter(|(k, _)| !TARGET_KEYS.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    let target = Target {
        name,
        is_stage,
        blocks,
        costumes,
        current_costume: current as usize,
        x,
        y,
        size,
        direction,
        visible,
        rotation_style,
        layer_order,
        variables,
        lists,
        broadcasts,
        comment_count,
        sound_count,
        extra,
    };
    validate_blocks(&target)?;
    Ok(target)
}

fn normalize_direction(d: f64) -> f64 {
    let mut r = d % 360.0;
    if r <= -180.0 {
        r += 360.0;
    }
    if r > 180.0 {
        r -= 360.0;
    }
    r
}

fn named_table(v: Option<&Value>, path: &str) -> Result<BTreeMap<String, String>, IrError> {
    let Some(v) = v else { return Ok(BTreeMap::new()) };
    let mut out = BTreeMap::new();
    for (id, entry) in as_object(v, path)? {
        let name = entry
            .get(0)
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(&format!("{path}.{id}"), "expected [name, value]"))?;
        out.insert(id.clone(), name.to_string());
    }
    Ok(out)
}

fn decode_costume(v: &Value, path: &str, target: &str) -> Result<Costume, IrError> {
    let obj = as_object(v, path)?;
    let text = |key: &str| -> Result<String, IrError> {
        obj.get(key)
            .and_then(Value::as_str)
            .map(String::from)
            .ok_or_else(|| malformed(&format!("{path}.{key}"), "expected a string"))
    };
    let name = text("name")?;
    let asset_id = text("assetId")?;
    let format_name = text("dataFormat")?;
    let file_ext = ImageFormat::from_ext(&format_name)
        .ok_or_else(|| malformed(&format!("{path}.dataFormat"), format!("unsupported image format `{format_name}`")))?;
    let member = obj
        .get("md5ext")
        .and_then(Value::as_str)
        .map(String::from)
        .unwrap_or_else(|| format!("{asset_id}.{format_name}"));
    let res = opt_number(obj, "bitmapResolution", path, 1.0)?;
    let bitmap_resolution = res as u32;
    let res_ok = if file_ext.is_bitmap() { matches!(bitmap_resolution, 1 | 2) } else { bitmap_resolution == 1 };
    if !res_ok || res != f64::from(bitmap_resolution) {
        return Err(IrError::InvalidTarget {
            target: target.to_string(),
            reason: format!("costume `{name}` has invalid bitmap resolution {res}"),
        });
    }
    Ok(Costume {
        name,
        asset_id,
        file_ext,
        rotation_center: (
            opt_number(obj, "rotationCenterX", path, 0.0)?,
            opt_number(obj, "rotationCenterY", path, 0.0)?,
        ),
        bitmap_resolution,
        member,
    })
}

fn decode_block(v: &Value, path: &str) -> Result<Block, IrError> {
    if let Value::Array(prim) = v {
        return decode_top_level_primitive(prim, path);
    }
    let obj = as_object(v, path)?;
    let opcode = obj
        .get("opcode")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(&format!("{path}.opcode"), "expected a string"))?
        .to_string();
    let link = |key: &str| -> Result<Option<String>, IrError> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(malformed(&format!("{path}.{key}"), "expected a block id or null")),
        }
    };
    let next = link("next")?;
    let parent = link("parent")?;

    let mut inputs = BTreeMap::new();
    if let Some(raw) = obj.get("inputs") {
        for (name, value) in as_object(raw, &format!("{path}.inputs"))? {
            inputs.insert(name.clone(), decode_input(value, &format!("{path}.inputs.{name}"))?);
        }
    }
    let mut fields = BTreeMap::new();
    if let Some(raw) = obj.get("fields") {
        for (name, value) in as_object(raw, &format!("{path}.fields"))? {
            let fpath = format!("{path}.fields.{name}");
            let arr = value.as_array().ok_or_else(|| malformed(&fpath, "expected [value, id]"))?;
            let text = arr
                .first()
                .and_then(scalar_text)
                .ok_or_else(|| malformed(&fpath, "field value must be a scalar"))?;
            let id = arr.get(1).and_then(Value::as_str).map(String::from);
            fields.insert(name.clone(), Field { value: text, id });
        }
    }
    let shadow = obj.get("shadow").and_then(Value::as_bool).unwrap_or(false);
    let top_level = obj.get("topLevel").and_then(Value::as_bool).unwrap_or(false);
    let mutation = obj.get("mutation").and_then(Value::as_object).cloned();
    let position = match (obj.get("x").and_then(number), obj.get("y").and_then(number)) {
        (Some(x), Some(y)) => Some((x, y)),
        _ => None,
    };

    let info = opcodes::lookup(&opcode);
    let mut shape = match info {
        Some(i) => i.shape,
        None if shadow => Shape::Reporter,
        None => Shape::Stack,
    };
    if opcode == "control_stop"
        && mutation.as_ref().and_then(|m| m.get("hasnext")).and_then(Value::as_str) == Some("true")
    {
        shape = Shape::Stack;
    }
    Ok(Block {
        opcode,
        next,
        parent,
        inputs,
        fields,
        top_level,
        shadow,
        shape,
        known: info.is_some() || shadow,
        mutation,
        position,
    })
}

/// Loose variable or list reporters stored as `[12, name, id, x, y]`.
fn decode_top_level_primitive(prim: &[Value], path: &str) -> Result<Block, IrError> {
    let kind = prim.first().and_then(Value::as_u64);
    let (opcode, field) = match kind {
        Some(12) => ("data_variable", "VARIABLE"),
        Some(13) => ("data_listcontents", "LIST"),
        _ => return Err(malformed(path, "unsupported top-level primitive")),
    };
    let name = prim.get(1).and_then(scalar_text).ok_or_else(|| malformed(path, "missing name"))?;
    let id = prim.get(2).and_then(Value::as_str).map(String::from);
    let position = match (prim.get(3).and_then(number), prim.get(4).and_then(number)) {
        (Some(x), Some(y)) => Some((x, y)),
        _ => None,
    };
    let mut fields = BTreeMap::new();
    fields.insert(field.to_string(), Field { value: name, id });
    Ok(Block {
        opcode: opcode.to_string(),
        next: None,
        parent: None,
        inputs: BTreeMap::new(),
        fields,
        top_level: true,
        shadow: false,
        shape: Shape::Reporter,
        known: true,
        mutation: None,
        position,
    })
}

fn decode_input(v: &Value, path: &str) -> Result<Input, IrError> {
    let arr = v.as_array().ok_or_else(|| malformed(path, "expected an input array"))?;
    let kind = match arr.first().and_then(Value::as_u64) {
        Some(1) => InputKind::SameBlockShadow,
        Some(2) => InputKind::NoShadow,
        Some(3) => InputKind::ObscuredShadow,
        _ => return Err(malformed(path, "unknown input shadow type")),
    };
    let value = decode_slot(arr.get(1).unwrap_or(&Value::Null), path)?;
    let shadow = match kind {
        InputKind::ObscuredShadow => Some(decode_slot(arr.get(2).unwrap_or(&Value::Null), path)?),
        _ => None,
    };
    Ok(Input { kind, value, shadow })
}

fn decode_slot(v: &Value, path: &str) -> Result<InputValue, IrError> {
    match v {
        Value::Null => Ok(InputValue::Empty),
        Value::String(id) => Ok(InputValue::Block(id.clone())),
        Value::Array(prim) => {
            let code = prim
                .first()
                .and_then(Value::as_u64)
                .ok_or_else(|| malformed(path, "primitive without type code"))?;
            let text = prim.get(1).and_then(scalar_text).unwrap_or_default();
            let id = || prim.get(2).and_then(Value::as_str).unwrap_or_default().to_string();
            let literal = |kind| Ok(InputValue::Literal { kind, value: text.clone() });
            match code {
                4 => literal(LiteralKind::Number),
                5 => literal(LiteralKind::PositiveNumber),
                6 => literal(LiteralKind::WholeNumber),
                7 => literal(LiteralKind::Integer),
                8 => literal(LiteralKind::Angle),
                9 => literal(LiteralKind::Color),
                10 => literal(LiteralKind::Text),
                11 => Ok(InputValue::Broadcast { name: text.clone(), id: id() }),
                12 => Ok(InputValue::Variable { name: text.clone(), id: id() }),
                13 => Ok(InputValue::List { name: text.clone(), id: id() }),
                other => Err(malformed(path, format!("unknown primitive type {other}"))),
            }
        }
        _ => Err(malformed(path, "expected a block id, primitive or null")),
    }
}

fn validate_blocks(target: &Target) -> Result<(), IrError> {
    let violation = |id: &str, reason: &str| IrError::ShapeViolation {
        target: target.name.clone(),
        id: id.to_string(),
        reason: reason.to_string(),
    };
    for (id, block) in &target.blocks {
        for r in block.references() {
            if !target.blocks.contains_key(r) {
                return Err(IrError::DanglingBlockRef { target: target.name.clone(), id: r.clone() });
            }
        }
        if block.shape == Shape::Hat && block.parent.is_some() {
            return Err(violation(id, "hat block has a parent"));
        }
        if let Some(next) = &block.next {
            if block.shape.is_expression() {
                return Err(violation(id, "reporter block has a next block"));
            }
            if target.blocks[next].shape.is_expression() {
                return Err(violation(id, "next block is a reporter"));
            }
        }
        let substacks = opcodes::lookup(&block.opcode).map_or(&[][..], |i| i.substacks);
        for name in substacks {
            if let Some(InputValue::Block(child)) = block.inputs.get(*name).map(|i| &i.value) {
                if target.blocks[child].shape.is_expression() {
                    return Err(violation(id, "substack holds a reporter"));
                }
            }
        }
    }
    Ok(())
}
