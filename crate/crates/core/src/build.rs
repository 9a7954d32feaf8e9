//! Programmatic construction of Scratch 3 projects.
//!
//! Produces the same `project.json` + asset map that an `.sb3` archive
//! carries, so built projects go through the regular decoder.
//!
//! ```
//! use stereoscan_core::build::*;
//!
//! let mut p = ProjectBuilder::new();
//! p.stage().costume(CostumeAsset::svg("backdrop1", blank_svg(480, 360)));
//! let cat = p.sprite("Cat");
//! cat.costume(CostumeAsset::svg("cat-a", blank_svg(40, 40)));
//! cat.script(vec![
//!     block("event_whenflagclicked"),
//!     block("motion_movesteps").input("STEPS", num(10)),
//! ]);
//! let project = p.build().unwrap();
//! assert_eq!(project.sprites.len(), 1);
//! ```

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Display;

use serde_json::{json, Map, Value};

use crate::ir::{md5_hex, opcodes, ImageFormat, IrError, Project, RotationStyle, Shape};

#[derive(Debug, Clone)]
pub enum Arg {
    Empty,
    Num(String),
    Text(String),
    Color(String),
    Reporter(Box<BlockSpec>),
    /// Shadow menu block, e.g. `motion_goto_menu` with field `TO`.
    Menu { opcode: String, field: String, value: String },
    Broadcast(String),
    Var(String),
    List(String),
}

pub fn num(v: impl Display) -> Arg {
    Arg::Num(v.to_string())
}

pub fn text(v: impl Into<String>) -> Arg {
    Arg::Text(v.into())
}

pub fn color(hex: impl Into<String>) -> Arg {
    Arg::Color(hex.into())
}

pub fn reporter(b: BlockSpec) -> Arg {
    Arg::Reporter(Box::new(b))
}

pub fn menu(opcode: &str, field: &str, value: &str) -> Arg {
    Arg::Menu { opcode: opcode.into(), field: field.into(), value: value.into() }
}

pub fn broadcast(name: &str) -> Arg {
    Arg::Broadcast(name.into())
}

pub fn var(name: &str) -> Arg {
    Arg::Var(name.into())
}

pub fn list(name: &str) -> Arg {
    Arg::List(name.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FieldRef {
    Plain,
    Variable,
    List,
    Broadcast,
}

#[derive(Debug, Clone)]
pub struct BlockSpec {
    opcode: String,
    inputs: Vec<(String, Arg)>,
    fields: Vec<(String, String, FieldRef)>,
    substacks: Vec<(String, Vec<BlockSpec>)>,
    mutation: Option<Map<String, Value>>,
    procedure: Option<(String, Vec<String>)>,
}

pub fn block(opcode: &str) -> BlockSpec {
    BlockSpec {
        opcode: opcode.into(),
        inputs: Vec::new(),
        fields: Vec::new(),
        substacks: Vec::new(),
        mutation: None,
        procedure: None,
    }
}

impl BlockSpec {
    pub fn input(mut self, name: &str, arg: Arg) -> Self {
        self.inputs.push((name.into(), arg));
        self
    }

    pub fn field(mut self, name: &str, value: &str) -> Self {
        self.fields.push((name.into(), value.into(), FieldRef::Plain));
        self
    }

    /// A `VARIABLE` field bound to a variable declared on the owning target.
    pub fn var_field(mut self, name: &str) -> Self {
        self.fields.push(("VARIABLE".into(), name.into(), FieldRef::Variable));
        self
    }

    pub fn list_field(mut self, name: &str) -> Self {
        self.fields.push(("LIST".into(), name.into(), FieldRef::List));
        self
    }

    pub fn broadcast_field(mut self, name: &str) -> Self {
        self.fields.push(("BROADCAST_OPTION".into(), name.into(), FieldRef::Broadcast));
        self
    }

    pub fn substack(mut self, name: &str, body: Vec<BlockSpec>) -> Self {
        self.substacks.push((name.into(), body));
        self
    }

    pub fn mutation(mut self, m: Value) -> Self {
        self.mutation = m.as_object().cloned();
        self
    }
}

fn argument_id(proccode: &str, index: usize) -> String {
    format!("{proccode}#{index}")
}

fn proc_arg_kinds(proccode: &str) -> Vec<bool> {
    let bytes = proccode.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < bytes.len() {
        if bytes[i] == b'%' && matches!(bytes[i + 1], b's' | b'n' | b'b') {
            out.push(bytes[i + 1] == b'b');
            i += 2;
        } else {
            i += 1;
        }
    }
    out
}

/// `define <proccode>` hat. The body follows it in the same script vector.
pub fn define(proccode: &str, arg_names: &[&str]) -> BlockSpec {
    let mut b = block("procedures_definition");
    b.procedure = Some((proccode.into(), arg_names.iter().map(|s| s.to_string()).collect()));
    b
}

/// Call of a custom block; `args` fill the `%s`/`%n`/`%b` slots in order.
pub fn call(proccode: &str, args: Vec<Arg>) -> BlockSpec {
    let ids: Vec<String> = (0..args.len()).map(|i| argument_id(proccode, i)).collect();
    let mut b = block("procedures_call").mutation(json!({
        "tagName": "mutation",
        "children": [],
        "proccode": proccode,
        "argumentids": serde_json::to_string(&ids).unwrap(),
        "warp": "false",
    }));
    for (id, arg) in ids.iter().zip(args) {
        b.inputs.push((id.clone(), arg));
    }
    b
}

pub fn arg_reporter(name: &str) -> BlockSpec {
    block("argument_reporter_string_number").field("VALUE", name)
}

pub fn arg_boolean(name: &str) -> BlockSpec {
    block("argument_reporter_boolean").field("VALUE", name)
}

/// Costume image bytes plus placement metadata.
#[derive(Debug, Clone)]
pub struct CostumeAsset {
    pub name: String,
    pub format: ImageFormat,
    pub bytes: Vec<u8>,
    pub rotation_center: (f64, f64),
    pub bitmap_resolution: u32,
}

impl CostumeAsset {
    pub fn new(name: &str, format: ImageFormat, bytes: Vec<u8>, rotation_center: (f64, f64), bitmap_resolution: u32) -> Self {
        CostumeAsset { name: name.into(), format, bytes, rotation_center, bitmap_resolution }
    }

    /// SVG costume centred on its intrinsic size.
    pub fn svg(name: &str, svg: String) -> Self {
        let (w, h) = crate::render::svg_intrinsic_size(svg.as_bytes()).unwrap_or((2, 2));
        CostumeAsset::new(name, ImageFormat::Svg, svg.into_bytes(), (f64::from(w) / 2.0, f64::from(h) / 2.0), 1)
    }
}

/// An empty SVG document of the given size.
pub fn blank_svg(width: u32, height: u32) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\"></svg>"
    )
}

/// Builder state for one target.
pub struct TargetBuilder {
    name: String,
    is_stage: bool,
    blocks: Map<String, Value>,
    counter: usize,
    variables: BTreeMap<String, String>,
    lists: BTreeMap<String, String>,
    costumes: Vec<CostumeAsset>,
    current_costume: usize,
    x: f64,
    y: f64,
    size: f64,
    direction: f64,
    visible: bool,
    rotation_style: RotationStyle,
    layer_order: Option<i64>,
    broadcasts: BTreeMap<String, String>,
    scripts: usize,
}

impl TargetBuilder {
    fn new(name: &str, is_stage: bool) -> Self {
        TargetBuilder {
            name: name.into(),
            is_stage,
            blocks: Map::new(),
            counter: 0,
            variables: BTreeMap::new(),
            lists: BTreeMap::new(),
            costumes: Vec::new(),
            current_costume: 0,
            x: 0.0,
            y: 0.0,
            size: 100.0,
            direction: 90.0,
            visible: true,
            rotation_style: RotationStyle::AllAround,
            layer_order: None,
            broadcasts: BTreeMap::new(),
            scripts: 0,
        }
    }

    pub fn costume(&mut self, c: CostumeAsset) -> &mut Self {
        self.costumes.push(c);
        self
    }

    pub fn current_costume(&mut self, index: usize) -> &mut Self {
        self.current_costume = index;
        self
    }

    pub fn position(&mut self, x: f64, y: f64) -> &mut Self {
        self.x = x;
        self.y = y;
        self
    }

    pub fn size(&mut self, size: f64) -> &mut Self {
        self.size = size;
        self
    }

    pub fn direction(&mut self, direction: f64) -> &mut Self {
        self.direction = direction;
        self
    }

    pub fn visible(&mut self, visible: bool) -> &mut Self {
        self.visible = visible;
        self
    }

    pub fn rotation_style(&mut self, style: RotationStyle) -> &mut Self {
        self.rotation_style = style;
        self
    }

    pub fn layer_order(&mut self, order: i64) -> &mut Self {
        self.layer_order = Some(order);
        self
    }

    pub fn variable(&mut self, name: &str) -> &mut Self {
        self.var_id(name);
        self
    }

    fn next_id(&mut self) -> String {
        self.counter += 1;
        format!("b{:04}", self.counter)
    }

    fn var_id(&mut self, name: &str) -> String {
        self.variables.entry(name.into()).or_insert_with(|| format!("var-{name}")).clone()
    }

    fn list_id(&mut self, name: &str) -> String {
        self.lists.entry(name.into()).or_insert_with(|| format!("list-{name}")).clone()
    }

    fn broadcast_id(&mut self, name: &str) -> String {
        self.broadcasts.entry(name.into()).or_insert_with(|| format!("bc-{name}")).clone()
    }

    /// Adds a stack of blocks as a new top-level script. Returns its root id.
    pub fn script(&mut self, stack: Vec<BlockSpec>) -> String {
        let y = 100.0 * self.scripts as f64;
        self.scripts += 1;
        let root = self.add_stack(stack, None).expect("script must not be empty");
        let obj = self.blocks.get_mut(&root).and_then(Value::as_object_mut).unwrap();
        obj.insert("topLevel".into(), json!(true));
        obj.insert("x".into(), json!(0));
        obj.insert("y".into(), json!(y));
        root
    }

    /// Adds a loose variable reporter on the workspace.
    pub fn loose_variable(&mut self, name: &str) -> String {
        let vid = self.var_id(name);
        let id = self.next_id();
        self.blocks.insert(id.clone(), json!([12, name, vid, 10, 10]));
        id
    }

    fn add_stack(&mut self, stack: Vec<BlockSpec>, parent: Option<String>) -> Option<String> {
        let mut first = None;
        let mut prev: Option<String> = parent.clone();
        let mut prev_is_parent = true;
        for spec in stack {
            let id = self.add_block(spec, prev.clone());
            if first.is_none() {
                first = Some(id.clone());
            }
            if let (Some(p), false) = (&prev, prev_is_parent) {
                let obj = self.blocks.get_mut(p).and_then(Value::as_object_mut).unwrap();
                obj.insert("next".into(), json!(id));
            }
            prev = Some(id);
            prev_is_parent = false;
        }
        first
    }

    fn add_block(&mut self, spec: BlockSpec, parent: Option<String>) -> String {
        let id = self.next_id();
        let mut inputs = Map::new();
        let mut fields = Map::new();
        let mut mutation = spec.mutation.clone();

        if let Some((proccode, names)) = &spec.procedure {
            let proto = self.next_id();
            let kinds = proc_arg_kinds(proccode);
            let ids: Vec<String> = (0..names.len()).map(|i| argument_id(proccode, i)).collect();
            let mut proto_inputs = Map::new();
            for (i, name) in names.iter().enumerate() {
                let is_bool = kinds.get(i).copied().unwrap_or(false);
                let arg_spec = if is_bool { arg_boolean(name) } else { arg_reporter(name) };
                let arg_id = self.add_shadow(arg_spec, &proto);
                proto_inputs.insert(ids[i].clone(), json!([1, arg_id]));
            }
            let defaults: Vec<&str> = kinds.iter().map(|b| if *b { "false" } else { "" }).collect();
            self.blocks.insert(
                proto.clone(),
                json!({
                    "opcode": "procedures_prototype",
                    "next": null,
                    "parent": id,
                    "inputs": proto_inputs,
                    "fields": {},
                    "shadow": true,
                    "topLevel": false,
                    "mutation": {
                        "tagName": "mutation",
                        "children": [],
                        "proccode": proccode,
                        "argumentids": serde_json::to_string(&ids).unwrap(),
                        "argumentnames": serde_json::to_string(names).unwrap(),
                        "argumentdefaults": serde_json::to_string(&defaults).unwrap(),
                        "warp": "false",
                    },
                }),
            );
            inputs.insert("custom_block".into(), json!([1, proto]));
        }

        for (name, value, kind) in &spec.fields {
            let fid = match kind {
                FieldRef::Plain => Value::Null,
                FieldRef::Variable => json!(self.var_id(value)),
                FieldRef::List => json!(self.list_id(value)),
                FieldRef::Broadcast => json!(self.broadcast_id(value)),
            };
            fields.insert(name.clone(), json!([value, fid]));
        }
        for (name, arg) in spec.inputs {
            let encoded = self.encode_arg(arg, &id);
            inputs.insert(name, encoded);
        }
        for (name, body) in spec.substacks {
            if let Some(child) = self.add_stack(body, Some(id.clone())) {
                inputs.insert(name, json!([2, child]));
            }
        }
        if spec.opcode == "control_stop" && mutation.is_none() {
            mutation = json!({"tagName": "mutation", "children": [], "hasnext": "false"}).as_object().cloned();
        }
        let mut obj = json!({
            "opcode": spec.opcode,
            "next": null,
            "parent": parent,
            "inputs": inputs,
            "fields": fields,
            "shadow": false,
            "topLevel": false,
        });
        if let Some(m) = mutation {
            obj.as_object_mut().unwrap().insert("mutation".into(), Value::Object(m));
        }
        self.blocks.insert(id.clone(), obj);
        id
    }

    fn add_shadow(&mut self, spec: BlockSpec, parent: &str) -> String {
        let id = self.add_block(spec, Some(parent.into()));
        let obj = self.blocks.get_mut(&id).and_then(Value::as_object_mut).unwrap();
        obj.insert("shadow".into(), json!(true));
        id
    }

    fn encode_arg(&mut self, arg: Arg, parent: &str) -> Value {
        match arg {
            Arg::Empty => json!([1, null]),
            Arg::Num(v) => json!([1, [4, v]]),
            Arg::Text(v) => json!([1, [10, v]]),
            Arg::Color(v) => json!([1, [9, v]]),
            Arg::Reporter(spec) => {
                let boolean = opcodes::lookup(&spec.opcode).is_some_and(|i| i.shape == Shape::Boolean);
                let rid = self.add_block(*spec, Some(parent.into()));
                if boolean {
                    json!([2, rid])
                } else {
                    json!([3, rid, [10, ""]])
                }
            }
            Arg::Menu { opcode, field, value } => {
                let sid = self.add_shadow(block(&opcode).field(&field, &value), parent);
                json!([1, sid])
            }
            Arg::Broadcast(name) => {
                let bid = self.broadcast_id(&name);
                json!([1, [11, name, bid]])
            }
            Arg::Var(name) => {
                let vid = self.var_id(&name);
                json!([3, [12, name, vid], [10, ""]])
            }
            Arg::List(name) => {
                let lid = self.list_id(&name);
                json!([3, [13, name, lid], [10, ""]])
            }
        }
    }

    fn to_json(&self, layer: i64, broadcasts: &BTreeMap<String, String>, assets: &mut BTreeMap<String, Vec<u8>>) -> Value {
        let costumes: Vec<Value> = self
            .costumes
            .iter()
            .map(|c| {
                let asset_id = md5_hex(&c.bytes);
                let member = format!("{asset_id}.{}", c.format.ext());
                assets.insert(member.clone(), c.bytes.clone());
                json!({
                    "name": c.name,
                    "assetId": asset_id,
                    "dataFormat": c.format.ext(),
                    "md5ext": member,
                    "bitmapResolution": c.bitmap_resolution,
                    "rotationCenterX": c.rotation_center.0,
                    "rotationCenterY": c.rotation_center.1,
                })
            })
            .collect();
        let variables: Map<String, Value> =
            self.variables.iter().map(|(name, id)| (id.clone(), json!([name, 0]))).collect();
        let lists: Map<String, Value> = self.lists.iter().map(|(name, id)| (id.clone(), json!([name, []]))).collect();
        let broadcasts: Map<String, Value> =
            broadcasts.iter().map(|(name, id)| (id.clone(), json!(name))).collect();
        let mut obj = json!({
            "isStage": self.is_stage,
            "name": self.name,
            "variables": variables,
            "lists": lists,
            "broadcasts": broadcasts,
            "blocks": self.blocks,
            "comments": {},
            "currentCostume": self.current_costume,
            "costumes": costumes,
            "sounds": [],
            "volume": 100,
            "layerOrder": self.layer_order.unwrap_or(layer),
        });
        let o = obj.as_object_mut().unwrap();
        if self.is_stage {
            o.insert("tempo".into(), json!(60));
        } else {
            o.insert("visible".into(), json!(self.visible));
            o.insert("x".into(), json!(self.x));
            o.insert("y".into(), json!(self.y));
            o.insert("size".into(), json!(self.size));
            o.insert("direction".into(), json!(self.direction));
            o.insert("draggable".into(), json!(false));
            o.insert("rotationStyle".into(), json!(self.rotation_style.wire_name()));
        }
        obj
    }
}

pub struct ProjectBuilder {
    stage: TargetBuilder,
    sprites: Vec<TargetBuilder>,
    extensions: Vec<String>,
}

impl Default for ProjectBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ProjectBuilder {
    pub fn new() -> Self {
        ProjectBuilder { stage: TargetBuilder::new("Stage", true), sprites: Vec::new(), extensions: Vec::new() }
    }

    pub fn stage(&mut self) -> &mut TargetBuilder {
        &mut self.stage
    }

    /// Returns the sprite with this name, creating it on first use.
    pub fn sprite(&mut self, name: &str) -> &mut TargetBuilder {
        let idx = match self.sprites.iter().position(|s| s.name == name) {
            Some(i) => i,
            None => {
                self.sprites.push(TargetBuilder::new(name, false));
                self.sprites.len() - 1
            }
        };
        &mut self.sprites[idx]
    }

    pub fn extension(&mut self, id: &str) -> &mut Self {
        self.extensions.push(id.into());
        self
    }

    /// `project.json` value plus archive members keyed by file name.
    pub fn finish(&self) -> (Value, BTreeMap<String, Vec<u8>>) {
        let mut assets = BTreeMap::new();
        // Scratch keeps every broadcast on the stage.
        let mut broadcasts = self.stage.broadcasts.clone();
        for s in &self.sprites {
            broadcasts.extend(s.broadcasts.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        let mut targets = vec![self.stage.to_json(0, &broadcasts, &mut assets)];
        for (i, s) in self.sprites.iter().enumerate() {
            targets.push(s.to_json(i as i64 + 1, &BTreeMap::new(), &mut assets));
        }
        let json = json!({
            "targets": targets,
            "monitors": [],
            "extensions": self.extensions,
            "meta": {"semver": "3.0.0", "vm": "0.2.0", "agent": "stereoscan-builder"},
        });
        (json, assets)
    }

    pub fn build(&self) -> Result<Project, IrError> {
        let (json, assets) = self.finish();
        let bytes = serde_json::to_vec(&json).expect("serializable");
        Project::from_parts(&bytes, assets, "built.sb3")
    }
}
