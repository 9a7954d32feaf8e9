//! Fixtures shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ImageFormat as Codec, Rgba, RgbaImage};
use stereoscan::archive::write_sb3;
use stereoscan::core::build::*;
use stereoscan::core::framework::{CriterionId, LikertScore, Provenance, RatingSheet, Verdict};
use stereoscan::core::ir::ImageFormat;

pub const CORPUS_SIZE: usize = 73;
pub const CORPUS_FLAGGED: usize = 14;
pub const RATERS: usize = 6;

fn rgba(hex: &str) -> [u8; 4] {
    let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).unwrap();
    [byte(0), byte(2), byte(4), if hex.len() >= 8 { byte(6) } else { 255 }]
}

pub fn png(hex: &str, w: u32, h: u32) -> Vec<u8> {
    let img = RgbaImage::from_pixel(w, h, Rgba(rgba(hex)));
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, Codec::Png).unwrap();
    out.into_inner()
}

/// Solid PNG costume centred on itself.
pub fn png_costume(name: &str, hex: &str, w: u32, h: u32) -> CostumeAsset {
    CostumeAsset::new(name, ImageFormat::Png, png(hex, w, h), (f64::from(w) / 2.0, f64::from(h) / 2.0), 1)
}

pub fn sb3(p: &ProjectBuilder) -> Vec<u8> {
    let (json, assets) = p.finish();
    write_sb3(&json, &assets)
}

pub fn write(dir: &Path, name: &str, p: &ProjectBuilder) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, sb3(p)).unwrap();
    path
}

pub fn base() -> ProjectBuilder {
    let mut p = ProjectBuilder::new();
    p.stage().costume(png_costume("backdrop1", "ffffff", 48, 36));
    p
}

pub fn say(text: &str) -> BlockSpec {
    block("looks_say").input("MESSAGE", Arg::Text(text.into()))
}

/// Pink dress-up project made of plain sequences.
pub fn dress_up() -> ProjectBuilder {
    let mut p = ProjectBuilder::new();
    p.stage().costume(png_costume("bedroom", "ff66b3", 48, 36));
    let t = p.sprite("Tera");
    t.costume(png_costume("tera-a", "ff3399", 20, 40));
    t.costume(png_costume("tera-b", "ff3399", 20, 40));
    t.script(vec![block("event_whenthisspriteclicked"), block("looks_nextcostume")]);
    let d = p.sprite("Dress");
    d.costume(png_costume("dress1", "e63c8c", 10, 10));
    d.position(60.0, -20.0);
    d.script(vec![
        block("event_whenthisspriteclicked"),
        block("looks_nextcostume"),
        block("sound_play").input("SOUND_MENU", menu("sound_sounds_menu", "SOUND_MENU", "pop")),
    ]);
    p
}

/// Loop-driven drawing tool with neutral names and colours.
pub fn paint_box() -> ProjectBuilder {
    let mut p = base();
    let t = p.sprite("Pencil");
    t.costume(png_costume("pencil", "3366ff", 10, 10));
    t.script(vec![
        block("event_whenflagclicked"),
        block("pen_clear"),
        block("control_forever").substack(
            "SUBSTACK",
            vec![
                block("motion_goto").input("TO", menu("motion_goto_menu", "TO", "_mouse_")),
                block("control_if_else")
                    .input("CONDITION", reporter(block("sensing_mousedown")))
                    .substack("SUBSTACK", vec![block("pen_penDown")])
                    .substack("SUBSTACK2", vec![block("pen_penUp")]),
            ],
        ),
    ]);
    t.script(vec![
        block("event_whenkeypressed").field("KEY_OPTION", "c"),
        block("pen_changePenColorParamBy")
            .input("COLOR_PARAM", menu("pen_menu_colorParam", "colorParam", "color"))
            .input("VALUE", reporter(block("operator_random").input("FROM", num(1)).input("TO", num(10)))),
    ]);
    p
}

const PALETTE: [&str; 6] = ["3366ff", "33aa55", "ffcc00", "ff3399", "888888", "ff6600"];
const NAMES: [&str; 6] = ["Robot", "Ball", "Cat", "Star", "Rocket", "Tree"];

/// Project `i` of the synthetic corpus. Varies sprite count, palette,
/// structure and speech so the corpus exercises every detector.
pub fn corpus_project(i: usize) -> ProjectBuilder {
    let mut p = base();
    for k in 0..1 + i % 3 {
        let name = format!("{}{k}", NAMES[(i + k) % NAMES.len()]);
        let t = p.sprite(&name);
        t.costume(png_costume(&format!("{name}-a"), PALETTE[(i + k) % PALETTE.len()], 8 + (i % 5) as u32, 8));
        t.position((k as f64) * 50.0 - 50.0, (i % 7) as f64 * 10.0 - 30.0);
        match (i + k) % 4 {
            0 => {
                t.script(vec![block("event_whenflagclicked"), say(&format!("Hello {i}"))]);
            }
            1 => {
                t.script(vec![
                    block("event_whenflagclicked"),
                    block("control_repeat")
                        .input("TIMES", num(i % 10 + 1))
                        .substack("SUBSTACK", vec![block("motion_movesteps").input("STEPS", num(10))]),
                ]);
            }
            2 => {
                t.script(vec![
                    block("event_whenkeypressed").field("KEY_OPTION", "space"),
                    block("data_changevariableby").var_field("score").input("VALUE", num(1)),
                    say("shoot the target"),
                ]);
            }
            _ => {
                t.script(vec![
                    block("event_whenthisspriteclicked"),
                    block("looks_nextcostume"),
                    block("sound_play").input("SOUND_MENU", menu("sound_sounds_menu", "SOUND_MENU", "pop")),
                ]);
            }
        }
    }
    p
}

pub fn corpus_id(i: usize) -> String {
    format!("p{i:02}")
}

pub fn corpus_flagged(i: usize) -> bool {
    i % 5 == 0 && i < 70
}

fn sheet(rater: &str, project: &str, scores: [u8; 18], verdict: Verdict) -> RatingSheet {
    let map: BTreeMap<_, _> =
        CriterionId::ALL.iter().zip(scores).map(|(id, s)| (*id, LikertScore::new(s).unwrap())).collect();
    RatingSheet::new(rater, project, map, verdict, Provenance::Human).unwrap()
}

/// Six human sheets per corpus project; exactly [`CORPUS_FLAGGED`] projects
/// receive a gendered verdict from one rater.
pub fn corpus_sheets() -> Vec<RatingSheet> {
    let mut out = Vec::new();
    for i in 0..CORPUS_SIZE {
        for r in 0..RATERS {
            let mut scores = [3u8; 18];
            scores[(i + r) % 18] = 1 + ((i + r) % 5) as u8;
            let verdict = if corpus_flagged(i) && r == i % RATERS { Verdict::Boy } else { Verdict::Inclusive };
            out.push(sheet(&format!("human-{r}"), &corpus_id(i), scores, verdict));
        }
    }
    out
}

/// Writes the corpus archives and `ratings.json` into `dir`.
pub fn write_corpus(dir: &Path) -> PathBuf {
    for i in 0..CORPUS_SIZE {
        write(dir, &format!("{}.sb3", corpus_id(i)), &corpus_project(i));
    }
    let ratings = dir.join("ratings.json");
    std::fs::write(&ratings, serde_json::to_string_pretty(&corpus_sheets()).unwrap()).unwrap();
    ratings
}

fn touching(target: &str) -> Arg {
    reporter(block("sensing_touchingobject").input(
        "TOUCHINGOBJECTMENU",
        menu("sensing_touchingobjectmenu", "TOUCHINGOBJECTMENU", target),
    ))
}

/// The golden scripts: name plus a single script, covering every palette.
pub fn golden_scripts() -> Vec<(&'static str, Vec<BlockSpec>)> {
    let flag = || block("event_whenflagclicked");
    vec![
        ("motion_basic", vec![
            flag(),
            block("motion_gotoxy").input("X", num(0)).input("Y", num(-50)),
            block("motion_pointindirection").input("DIRECTION", num(90)),
            block("motion_movesteps").input("STEPS", num(10)),
            block("motion_turnright").input("DEGREES", num(15)),
            block("motion_turnleft").input("DEGREES", num(15)),
            block("motion_ifonedgebounce"),
        ]),
        ("motion_glide", vec![
            flag(),
            block("motion_glidesecstoxy").input("SECS", num(1)).input("X", num(100)).input("Y", num(20)),
            block("motion_glideto").input("SECS", num(2)).input("TO", menu("motion_glideto_menu", "TO", "_random_")),
            block("motion_goto").input("TO", menu("motion_goto_menu", "TO", "_mouse_")),
            block("motion_changexby").input("DX", num(5)),
            block("motion_sety").input("Y", num(0)),
            block("motion_setrotationstyle").field("STYLE", "left-right"),
        ]),
        ("looks_speech", vec![
            flag(),
            block("looks_sayforsecs").input("MESSAGE", text("Hello!")).input("SECS", num(2)),
            block("looks_think").input("MESSAGE", text("Hmm...")),
            say("bye"),
        ]),
        ("looks_appearance", vec![
            flag(),
            block("looks_switchcostumeto").input("COSTUME", menu("looks_costume", "COSTUME", "costume2")),
            block("looks_nextcostume"),
            block("looks_setsizeto").input("SIZE", num(150)),
            block("looks_changeeffectby").field("EFFECT", "COLOR").input("CHANGE", num(25)),
            block("looks_cleargraphiceffects"),
            block("looks_gotofrontback").field("FRONT_BACK", "front"),
            block("looks_hide"),
            block("looks_show"),
        ]),
        ("looks_backdrops", vec![
            block("event_whenbackdropswitchesto").field("BACKDROP", "night"),
            block("looks_switchbackdropto").input("BACKDROP", menu("looks_backdrops", "BACKDROP", "day")),
            block("looks_nextbackdrop"),
            block("looks_say").input("MESSAGE", reporter(block("looks_costumenumbername").field("NUMBER_NAME", "name"))),
        ]),
        ("sound_basic", vec![
            block("event_whenthisspriteclicked"),
            block("sound_playuntildone").input("SOUND_MENU", menu("sound_sounds_menu", "SOUND_MENU", "Meow")),
            block("sound_play").input("SOUND_MENU", menu("sound_sounds_menu", "SOUND_MENU", "pop")),
            block("sound_changevolumeby").input("VOLUME", num(-10)),
            block("sound_setvolumeto").input("VOLUME", num(100)),
            block("sound_stopallsounds"),
        ]),
        ("events_broadcast", vec![
            block("event_whenkeypressed").field("KEY_OPTION", "space"),
            block("event_broadcast").input("BROADCAST_INPUT", broadcast("start")),
            block("event_broadcastandwait").input("BROADCAST_INPUT", broadcast("next level")),
        ]),
        ("events_receive", vec![
            block("event_whenbroadcastreceived").broadcast_field("start"),
            say("go"),
        ]),
        ("events_sensors", vec![
            block("event_whengreaterthan").field("WHENGREATERTHANMENU", "LOUDNESS").input("VALUE", num(10)),
            block("looks_nextcostume"),
        ]),
        ("control_loops", vec![
            flag(),
            block("control_repeat").input("TIMES", num(10)).substack("SUBSTACK", vec![
                block("motion_movesteps").input("STEPS", num(5)),
                block("control_wait").input("DURATION", num(0.1)),
            ]),
            block("control_forever").substack("SUBSTACK", vec![block("motion_turnright").input("DEGREES", num(1))]),
        ]),
        ("control_nesting", vec![
            flag(),
            block("control_forever").substack("SUBSTACK", vec![
                block("control_if_else")
                    .input("CONDITION", touching("_edge_"))
                    .substack("SUBSTACK", vec![
                        block("control_repeat_until")
                            .input("CONDITION", reporter(block("sensing_mousedown")))
                            .substack("SUBSTACK", vec![block("motion_changeyby").input("DY", num(-2))]),
                    ])
                    .substack("SUBSTACK2", vec![
                        block("control_if")
                            .input("CONDITION", touching("Ball"))
                            .substack("SUBSTACK", vec![block("control_stop").field("STOP_OPTION", "this script")]),
                    ]),
            ]),
        ]),
        ("control_clones", vec![
            flag(),
            block("control_create_clone_of").input("CLONE_OPTION", menu("control_create_clone_of_menu", "CLONE_OPTION", "_myself_")),
            block("control_wait_until").input("CONDITION", reporter(block("sensing_mousedown"))),
            block("control_stop").field("STOP_OPTION", "all"),
        ]),
        ("control_clone_hat", vec![
            block("control_start_as_clone"),
            block("motion_goto").input("TO", menu("motion_goto_menu", "TO", "_random_")),
            block("control_delete_this_clone"),
        ]),
        ("sensing_ask", vec![
            flag(),
            block("sensing_askandwait").input("QUESTION", text("What's your name?")),
            block("looks_sayforsecs")
                .input("MESSAGE", reporter(block("operator_join").input("STRING1", text("Hi ")).input("STRING2", reporter(block("sensing_answer")))))
                .input("SECS", num(2)),
        ]),
        ("sensing_values", vec![
            flag(),
            block("sensing_resettimer"),
            block("sensing_setdragmode").field("DRAG_MODE", "draggable"),
            block("control_wait_until").input("CONDITION", reporter(
                block("sensing_keypressed").input("KEY_OPTION", menu("sensing_keyoptions", "KEY_OPTION", "space")),
            )),
            block("looks_say").input("MESSAGE", reporter(block("sensing_timer"))),
            block("looks_say").input("MESSAGE", reporter(block("sensing_current").field("CURRENTMENU", "YEAR"))),
        ]),
        ("sensing_colors", vec![
            flag(),
            block("control_if")
                .input("CONDITION", reporter(block("sensing_touchingcolor").input("COLOR", color("#ff0000"))))
                .substack("SUBSTACK", vec![block("looks_hide")]),
        ]),
        ("operators_math", vec![
            flag(),
            block("data_setvariableto").var_field("total").input("VALUE", reporter(
                block("operator_add")
                    .input("NUM1", reporter(block("operator_multiply").input("NUM1", num(3)).input("NUM2", num(4))))
                    .input("NUM2", reporter(block("operator_random").input("FROM", num(1)).input("TO", num(6)))),
            )),
            block("data_setvariableto").var_field("total").input("VALUE", reporter(
                block("operator_mathop").field("OPERATOR", "sqrt").input("NUM", reporter(block("operator_mod").input("NUM1", var("total")).input("NUM2", num(7)))),
            )),
        ]),
        ("operators_logic", vec![
            flag(),
            block("control_if")
                .input("CONDITION", reporter(
                    block("operator_and")
                        .input("OPERAND1", reporter(block("operator_gt").input("OPERAND1", var("score")).input("OPERAND2", num(10))))
                        .input("OPERAND2", reporter(block("operator_not").input("OPERAND", reporter(
                            block("operator_equals").input("OPERAND1", reporter(block("sensing_answer"))).input("OPERAND2", text("no")),
                        )))),
                ))
                .substack("SUBSTACK", vec![say("win")]),
        ]),
        ("variables", vec![
            flag(),
            block("data_setvariableto").var_field("score").input("VALUE", num(0)),
            block("data_changevariableby").var_field("score").input("VALUE", num(1)),
            block("data_showvariable").var_field("score"),
            block("data_hidevariable").var_field("score"),
        ]),
        ("lists", vec![
            flag(),
            block("data_deletealloflist").list_field("inventory"),
            block("data_addtolist").input("ITEM", text("apple")).list_field("inventory"),
            block("data_insertatlist").input("ITEM", text("pear")).input("INDEX", num(1)).list_field("inventory"),
            block("data_replaceitemoflist").input("INDEX", num(2)).input("ITEM", text("plum")).list_field("inventory"),
            block("data_deleteoflist").input("INDEX", num(1)).list_field("inventory"),
            block("looks_say").input("MESSAGE", reporter(block("data_itemoflist").input("INDEX", num(1)).list_field("inventory"))),
            block("looks_say").input("MESSAGE", reporter(block("data_lengthoflist").list_field("inventory"))),
        ]),
        ("custom_define", vec![
            define("jump %s", &["height"]),
            block("control_repeat").input("TIMES", num(10)).substack("SUBSTACK", vec![
                block("motion_changeyby").input("DY", reporter(arg_reporter("height"))),
            ]),
        ]),
        ("custom_call", vec![
            flag(),
            call("jump %s", vec![num(10)]),
            call("jump %s", vec![reporter(block("operator_random").input("FROM", num(1)).input("TO", num(5)))]),
        ]),
        ("pen", vec![
            flag(),
            block("pen_clear"),
            block("pen_setPenColorToColor").input("COLOR", color("#3366ff")),
            block("pen_setPenSizeTo").input("SIZE", num(3)),
            block("pen_penDown"),
            block("pen_changePenColorParamBy")
                .input("COLOR_PARAM", menu("pen_menu_colorParam", "colorParam", "color"))
                .input("VALUE", num(10)),
            block("pen_stamp"),
            block("pen_penUp"),
        ]),
        ("music", vec![
            flag(),
            block("music_setTempo").input("TEMPO", num(90)),
            block("music_setInstrument").input("INSTRUMENT", menu("music_menu_INSTRUMENT", "INSTRUMENT", "1")),
            block("music_playNoteForBeats").input("NOTE", menu("note", "NOTE", "60")).input("BEATS", num(0.5)),
            block("music_restForBeats").input("BEATS", num(0.25)),
        ]),
        ("text2speech", vec![
            flag(),
            block("text2speech_setVoice").input("VOICE", menu("text2speech_menu_voices", "voices", "ALTO")),
            block("text2speech_speakAndWait").input("WORDS", text("hello world")),
        ]),
    ]
}

/// A single-sprite project holding one golden script.
pub fn golden_project(script: &[BlockSpec]) -> ProjectBuilder {
    let mut p = base();
    let t = p.sprite("Sprite1");
    t.costume(png_costume("costume1", "3366ff", 4, 4));
    t.script(script.to_vec());
    p
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}
