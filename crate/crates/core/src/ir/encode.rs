use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde_json::{json, Map, Value};

use super::{Block, InputValue, Project, Target};

fn slot_json(v: &InputValue) -> Value {
    match v {
        InputValue::Empty => Value::Null,
        InputValue::Block(id) => Value::String(id.clone()),
        InputValue::Literal { kind, value } => json!([*kind as u8, value]),
        InputValue::Broadcast { name, id } => json!([11, name, id]),
        InputValue::Variable { name, id } => json!([12, name, id]),
        InputValue::List { name, id } => json!([13, name, id]),
    }
}

fn block_json(block: &Block) -> Value {
    if block.top_level && block.parent.is_none() && block.inputs.is_empty() {
        let prim = match block.opcode.as_str() {
            "data_variable" => Some((12, "VARIABLE")),
            "data_listcontents" => Some((13, "LIST")),
            _ => None,
        };
        if let Some((code, field)) = prim {
            if let Some(f) = block.fields.get(field) {
                let (x, y) = block.position.unwrap_or((0.0, 0.0));
                return json!([code, f.value, f.id, x, y]);
            }
        }
    }
    let inputs: Map<String, Value> = block
        .inputs
        .iter()
        .map(|(name, input)| {
            let mut arr = vec![json!(input.kind as u8), slot_json(&input.value)];
            if let Some(shadow) = &input.shadow {
                arr.push(slot_json(shadow));
            }
            (name.clone(), Value::Array(arr))
        })
        .collect();
    let fields: Map<String, Value> = block
        .fields
        .iter()
        .map(|(name, f)| (name.clone(), json!([f.value, f.id])))
        .collect();
    let mut obj = Map::new();
    obj.insert("opcode".into(), json!(block.opcode));
    obj.insert("next".into(), json!(block.next));
    obj.insert("parent".into(), json!(block.parent));
    obj.insert("inputs".into(), Value::Object(inputs));
    obj.insert("fields".into(), Value::Object(fields));
    obj.insert("shadow".into(), json!(block.shadow));
    obj.insert("topLevel".into(), json!(block.top_level));
    if let Some((x, y)) = block.position {
        obj.insert("x".into(), json!(x));
        obj.insert("y".into(), json!(y));
    }
    if let Some(m) = &block.mutation {
        obj.insert("mutation".into(), Value::Object(m.clone()));
    }
    Value::Object(obj)
}

pub(super) fn blocks_to_json(blocks: &BTreeMap<String, Block>) -> Value {
    Value::Object(blocks.iter().map(|(id, b)| (id.clone(), block_json(b))).collect())
}

fn target_json(t: &Target) -> Value {
    let mut obj = t.extra.clone();
    let named = |m: &BTreeMap<String, String>, with_value: Value| -> Value {
        Value::Object(m.iter().map(|(id, name)| (id.clone(), json!([name, with_value.clone()]))).collect())
    };
    obj.insert("isStage".into(), json!(t.is_stage));
    obj.insert("name".into(), json!(t.name));
    obj.insert("variables".into(), named(&t.variables, json!(0)));
    obj.insert("lists".into(), named(&t.lists, json!([])));
    obj.insert(
        "broadcasts".into(),
        Value::Object(t.broadcasts.iter().map(|(k, v)| (k.clone(), json!(v))).collect()),
    );
    obj.insert("blocks".into(), blocks_to_json(&t.blocks));
    obj.insert("comments".into(), json!({}));
    obj.insert("currentCostume".into(), json!(t.current_costume));
    let costumes: Vec<Value> = t
        .costumes
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "assetId": c.asset_id,
                "dataFormat": c.file_ext.ext(),
                "md5ext": c.member,
                "bitmapResolution": c.bitmap_resolution,
                "rotationCenterX": c.rotation_center.0,
                "rotationCenterY": c.rotation_center.1,
            })
        })
        .collect();
    obj.insert("costumes".into(), Value::Array(costumes));
    obj.insert("sounds".into(), json!([]));
    obj.insert("layerOrder".into(), json!(t.layer_order));
    obj.insert("visible".into(), json!(t.visible));
    if !t.is_stage {
        obj.insert("x".into(), json!(t.x));
        obj.insert("y".into(), json!(t.y));
        obj.insert("size".into(), json!(t.size));
        obj.insert("direction".into(), json!(t.direction));
        obj.insert("rotationStyle".into(), json!(t.rotation_style.wire_name()));
    }
    Value::Object(obj)
}

pub(super) fn project_to_json(p: &Project) -> Value {
    let mut root = p.extra.clone();
    root.insert("targets".into(), Value::Array(p.targets().map(target_json).collect()));
    root.insert("monitors".into(), json!([]));
    root.insert("extensions".into(), json!(p.extensions));
    root.insert(
        "meta".into(),
        json!({ "semver": p.meta.semver, "vm": p.meta.vm, "agent": p.meta.agent }),
    );
    Value::Object(root)
}
