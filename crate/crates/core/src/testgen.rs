//! Random project generators shared by property tests.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use crate::build::*;
use crate::ir::Project;

fn number() -> impl Strategy<Value = Arg> {
    prop_oneof![(-100i32..1000).prop_map(num), Just(Arg::Empty)]
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(String::from("hello")),
        Just(String::from("score")),
        Just(String::from("a]b)c")),
        Just(String::from("two\nlines")),
        Just(String::new()),
        "[a-z ]{1,8}",
    ]
}

fn reporter_spec(depth: u32) -> BoxedStrategy<BlockSpec> {
    let leaf = prop_oneof![
        Just(block("sensing_timer")),
        Just(block("motion_xposition")),
        Just(block("sensing_answer")),
        Just(block("bogus_reporter_thing")),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let inner = value_arg(depth - 1);
    prop_oneof![
        leaf,
        (inner.clone(), inner.clone())
            .prop_map(|(a, b)| block("operator_add").input("NUM1", a).input("NUM2", b)),
        (inner.clone(), inner).prop_map(|(a, b)| block("operator_join").input("STRING1", a).input("STRING2", b)),
    ]
    .boxed()
}

fn boolean_spec(depth: u32) -> BoxedStrategy<BlockSpec> {
    let leaf = prop_oneof![
        Just(block("sensing_mousedown")),
        Just(block("sensing_touchingobject").input("TOUCHINGOBJECTMENU", menu("sensing_touchingobjectmenu", "TOUCHINGOBJECTMENU", "_edge_"))),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let v = value_arg(depth - 1);
    let b = boolean_spec(depth - 1);
    prop_oneof![
        leaf,
        (v.clone(), v).prop_map(|(a, c)| block("operator_gt").input("OPERAND1", a).input("OPERAND2", c)),
        (b.clone(), b).prop_map(|(a, c)| block("operator_and").input("OPERAND1", reporter(a)).input("OPERAND2", reporter(c))),
    ]
    .boxed()
}

fn value_arg(depth: u32) -> BoxedStrategy<Arg> {
    prop_oneof![
        number(),
        word().prop_map(Arg::Text),
        Just(var("score")),
        Just(list("items")),
        reporter_spec(depth).prop_map(|b| Arg::Reporter(Box::new(b))),
    ]
    .boxed()
}

fn simple_stack() -> BoxedStrategy<BlockSpec> {
    prop_oneof![
        number().prop_map(|n| block("motion_movesteps").input("STEPS", n)),
        value_arg(1).prop_map(|v| block("looks_say").input("MESSAGE", v)),
        value_arg(1).prop_map(|v| block("data_setvariableto").var_field("score").input("VALUE", v)),
        number().prop_map(|n| block("data_changevariableby").var_field("lives").input("VALUE", n)),
        Just(block("event_broadcast").input("BROADCAST_INPUT", broadcast("go"))),
        Just(block("motion_goto").input("TO", menu("motion_goto_menu", "TO", "_random_"))),
        number().prop_map(|n| block("control_wait").input("DURATION", n)),
        word().prop_map(|w| block("data_addtolist").list_field("items").input("ITEM", Arg::Text(w))),
        Just(block("pen_clear")),
        Just(block("mystery_extension_block").field("THING", "x")),
        Just(call("jump %n", vec![num(5)])),
    ]
    .boxed()
}

/// A stack of 1..4 blocks, possibly containing nested c-blocks.
pub fn stack(depth: u32) -> BoxedStrategy<Vec<BlockSpec>> {
    let item = if depth == 0 {
        simple_stack()
    } else {
        let body = stack(depth - 1);
        prop_oneof![
            4 => simple_stack(),
            1 => (number(), body.clone()).prop_map(|(n, b)| block("control_repeat").input("TIMES", n).substack("SUBSTACK", b)),
            1 => body.clone().prop_map(|b| block("control_forever").substack("SUBSTACK", b)),
            1 => (boolean_spec(1), body.clone()).prop_map(|(c, b)| block("control_if").input("CONDITION", reporter(c)).substack("SUBSTACK", b)),
            1 => (boolean_spec(1), body.clone(), body.clone()).prop_map(|(c, a, b)| {
                block("control_if_else").input("CONDITION", reporter(c)).substack("SUBSTACK", a).substack("SUBSTACK2", b)
            }),
            1 => body.prop_map(|b| block("unknown_wrapper").substack("SUBSTACK", b)),
        ]
        .boxed()
    };
    proptest::collection::vec(item, 1..4).boxed()
}

fn hat() -> impl Strategy<Value = Option<BlockSpec>> {
    prop_oneof![
        Just(Some(block("event_whenflagclicked"))),
        Just(Some(block("event_whenkeypressed").field("KEY_OPTION", "space"))),
        Just(Some(block("event_whenbroadcastreceived").broadcast_field("go"))),
        Just(Some(block("control_start_as_clone"))),
        Just(None),
    ]
}

fn script() -> impl Strategy<Value = Vec<BlockSpec>> {
    (hat(), stack(2)).prop_map(|(h, body)| {
        let mut out: Vec<BlockSpec> = h.into_iter().collect();
        out.extend(body);
        out
    })
}

/// Projects with 0..3 sprites, each carrying 0..4 random scripts.
pub fn project() -> impl Strategy<Value = Project> {
    let sprite = (proptest::collection::vec(script(), 0..4), any::<bool>());
    (proptest::collection::vec(sprite, 0..3), proptest::collection::vec(script(), 0..2)).prop_map(
        |(sprites, stage_scripts)| {
            let mut p = ProjectBuilder::new();
            p.stage().costume(CostumeAsset::svg("backdrop1", blank_svg(480, 360)));
            for s in stage_scripts {
                p.stage().script(s);
            }
            for (i, (scripts, with_proc)) in sprites.into_iter().enumerate() {
                let t = p.sprite(&format!("Sprite{}", i + 1));
                t.costume(CostumeAsset::svg("c", blank_svg(10, 10)));
                if with_proc {
                    t.script(vec![define("jump %n", &["height"]), block("motion_changeyby").input("DY", reporter(arg_reporter("height")))]);
                }
                for s in scripts {
                    t.script(s);
                }
            }
            p.build().expect("generated projects are valid")
        },
    )
}

/// Costume source for tests: a costume named `…@rrggbbaa-WxH` (alpha
/// optional) is a solid rectangle of that colour, `…@placeholder-WxH` is a
/// placeholder, anything else a single transparent pixel.
pub struct Solid;

impl crate::render::CostumeSource for Solid {
    fn costume_image(
        &self,
        _: &Project,
        costume: &crate::ir::Costume,
    ) -> Result<crate::render::CostumeImage, crate::render::RenderError> {
        use crate::render::{placeholder, CostumeImage, Raster};
        let Some((_, spec)) = costume.name.rsplit_once('@') else {
            return Ok(CostumeImage { raster: Raster::new(1, 1), placeholder: false });
        };
        let (hex, dims) = spec.split_once('-').unwrap();
        let (w, h) = dims.split_once('x').unwrap();
        let (w, h) = (w.parse().unwrap(), h.parse().unwrap());
        if hex == "placeholder" {
            return Ok(CostumeImage { raster: placeholder(w, h), placeholder: true });
        }
        let byte = |i: usize| if hex.len() > i { u8::from_str_radix(&hex[i..i + 2], 16).unwrap() } else { 255 };
        Ok(CostumeImage { raster: Raster::filled(w, h, [byte(0), byte(2), byte(4), byte(6)]), placeholder: false })
    }
}

/// Solid costume asset named for [`Solid`].
pub fn solid(label: &str, rgba_hex: &str, w: u32, h: u32) -> CostumeAsset {
    CostumeAsset::svg(&format!("{label}@{rgba_hex}-{w}x{h}"), blank_svg(w, h))
}
