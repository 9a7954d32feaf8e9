//! Scratchblocks text for the block graph of a project.
//!
//! The dialect is the forum syntax understood by the scratchblocks
//! renderer, plus `== stage ==` / `== sprite: <name> ==` section headers.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use crate::ir::opcodes::{self, display_menu_value};
use crate::ir::{Block, Input, InputValue, LiteralKind, Project, Shape, Target};

const INDENT: &str = "    ";

/// Text of one script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScriptText {
    pub target_name: String,
    pub script_index: usize,
    pub lines: Vec<String>,
}

impl ScriptText {
    pub fn text(&self) -> String {
        self.lines.join("\n")
    }
}

/// One [`ScriptText`] per script of `target`, in `iter_scripts` order.
pub fn emit_target(target: &Target) -> Vec<ScriptText> {
    target
        .iter_scripts()
        .into_iter()
        .enumerate()
        .map(|(i, root)| {
            let mut w = Writer { target, lines: Vec::new() };
            w.stack(root, 0);
            ScriptText { target_name: target.name.clone(), script_index: i, lines: w.lines }
        })
        .collect()
}

pub fn section_header(target: &Target) -> String {
    if target.is_stage {
        String::from("== stage ==")
    } else {
        format!("== sprite: {} ==", target.name)
    }
}

/// Whole-project text: one section per target, stage first.
pub fn emit_project(project: &Project) -> String {
    let sections: Vec<String> = project
        .targets()
        .map(|t| {
            let mut s = section_header(t);
            s.push('\n');
            let scripts: Vec<String> = emit_target(t).iter().map(ScriptText::text).collect();
            if !scripts.is_empty() {
                s.push_str(&scripts.join("\n\n"));
                s.push('\n');
            }
            s
        })
        .collect();
    sections.join("\n")
}

struct Writer<'a> {
    target: &'a Target,
    lines: Vec<String>,
}

fn escape(text: &str, close: char) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\n' | '\r' | '\t' => out.push(' '),
            '\\' => out.push_str("\\\\"),
            c if c == close => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out
}

fn round(text: &str) -> String {
    format!("({})", escape(text, ')'))
}

fn square(text: &str) -> String {
    format!("[{}]", escape(text, ']'))
}

fn round_menu(text: &str) -> String {
    format!("({} v)", escape(text, ')'))
}

fn square_menu(text: &str) -> String {
    format!("[{} v]", escape(text, ']'))
}

fn opcode_words(opcode: &str) -> String {
    opcode.replace('_', " ")
}

/// Substack inputs in display order; unknown blocks expose any input
/// whose name starts with `SUBSTACK`.
fn substack_names(block: &Block) -> Vec<&str> {
    match opcodes::lookup(&block.opcode) {
        Some(info) if block.known => info.substacks.to_vec(),
        _ => block.inputs.keys().filter(|k| k.starts_with("SUBSTACK")).map(String::as_str).collect(),
    }
}

/// Proccode pieces: literal label text or an argument slot (`%s`, `%n`, `%b`).
enum ProcPart<'a> {
    Label(&'a str),
    Slot(u8),
}

fn proccode_parts(proccode: &str) -> Vec<ProcPart<'_>> {
    let mut parts = Vec::new();
    let bytes = proccode.as_bytes();
    let (mut start, mut i) = (0, 0);
    while i + 1 < bytes.len() {
        if bytes[i] == b'%' && matches!(bytes[i + 1], b's' | b'n' | b'b') {
            if start < i {
                parts.push(ProcPart::Label(&proccode[start..i]));
            }
            parts.push(ProcPart::Slot(bytes[i + 1]));
            i += 2;
            start = i;
        } else {
            i += 1;
        }
    }
    if start < proccode.len() {
        parts.push(ProcPart::Label(&proccode[start..]));
    }
    parts
}

fn join_parts(pieces: Vec<String>) -> String {
    let mut out = String::new();
    for p in pieces {
        let p = p.trim();
        if p.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(p);
    }
    out
}

impl<'a> Writer<'a> {
    fn block(&self, id: &str) -> Option<&'a Block> {
        self.target.blocks.get(id)
    }

    fn push(&mut self, depth: usize, text: String) {
        let mut line = INDENT.repeat(depth);
        line.push_str(&text);
        self.lines.push(line);
    }

    fn stack(&mut self, first: &str, depth: usize) {
        let mut cur = Some(first.to_string());
        while let Some(id) = cur {
            let Some(block) = self.block(&id) else { break };
            self.statement(block, depth);
            cur = block.next.clone();
        }
    }

    fn statement(&mut self, block: &'a Block, depth: usize) {
        if block.shape.is_expression() || (block.shadow && block.opcode != "procedures_prototype") {
            let text = self.expression(block);
            self.push(depth, text);
            return;
        }
        let subs = substack_names(block);
        let head = self.head(block);
        if subs.is_empty() {
            self.push(depth, head);
            return;
        }
        self.push(depth, head);
        for (i, name) in subs.iter().enumerate() {
            if i > 0 {
                self.push(depth, String::from("else"));
            }
            if let Some(child) = block.inputs.get(*name).and_then(|inp| match &inp.value {
                InputValue::Block(id) => Some(id.clone()),
                _ => None,
            }) {
                self.stack(&child, depth + 1);
            }
        }
        self.push(depth, String::from("end"));
    }

    /// Statement text without substacks.
    fn head(&self, block: &Block) -> String {
        match block.opcode.as_str() {
            "procedures_definition" => return self.define(block),
            "procedures_call" => return self.call(block),
            _ => {}
        }
        match opcodes::lookup(&block.opcode) {
            Some(info) if block.known => self.fill(block, info.template),
            _ => {
                let mut pieces = Vec::from([opcode_words(&block.opcode)]);
                for (name, f) in &block.fields {
                    pieces.push(square_menu(display_menu_value(name, &f.value)));
                }
                for (name, input) in &block.inputs {
                    if !name.starts_with("SUBSTACK") {
                        pieces.push(self.slot(Some(input), 's'));
                    }
                }
                format!("{} // unknown: {}", join_parts(pieces), block.opcode)
            }
        }
    }

    fn define(&self, block: &Block) -> String {
        let proto = block.inputs.get("custom_block").and_then(|i| match &i.value {
            InputValue::Block(id) => self.block(id),
            _ => None,
        });
        let Some(proto) = proto else {
            return String::from("define");
        };
        let proccode = proto.mutation_str("proccode").unwrap_or_default();
        let names = proto.mutation_list("argumentnames");
        let mut names = names.iter();
        let mut pieces = Vec::from([String::from("define")]);
        for part in proccode_parts(proccode) {
            pieces.push(match part {
                ProcPart::Label(l) => escape(l, '\0'),
                ProcPart::Slot(kind) => {
                    let name = names.next().map(String::as_str).unwrap_or_default();
                    if kind == b'b' {
                        format!("<{}>", escape(name, '>'))
                    } else {
                        round(name)
                    }
                }
            });
        }
        join_parts(pieces)
    }

    fn call(&self, block: &Block) -> String {
        let proccode = block.mutation_str("proccode").unwrap_or_default();
        let ids = block.mutation_list("argumentids");
        let mut ids = ids.iter();
        let mut pieces = Vec::new();
        for part in proccode_parts(proccode) {
            pieces.push(match part {
                ProcPart::Label(l) => escape(l, '\0'),
                ProcPart::Slot(kind) => {
                    let input = ids.next().and_then(|id| block.inputs.get(id));
                    let slot_kind = match kind {
                        b'b' => 'b',
                        b'n' => 'n',
                        _ => 's',
                    };
                    self.slot(input, slot_kind)
                }
            });
        }
        pieces.push(String::from(":: custom"));
        join_parts(pieces)
    }

    /// Expands a signature template against the block's inputs and fields.
    fn fill(&self, block: &Block, template: &str) -> String {
        let mut out = String::new();
        let mut rest = template;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let close = open + rest[open..].find('}').expect("template placeholders are closed");
            let (name, kind) = rest[open + 1..close].split_once(':').expect("placeholder has a kind");
            let kind = kind.chars().next().unwrap_or('s');
            out.push_str(&match kind {
                'f' => {
                    let value = block.field(name).unwrap_or_default();
                    square_menu(display_menu_value(name, value))
                }
                'r' => escape(block.field(name).unwrap_or_default(), '\0'),
                _ => self.slot(block.inputs.get(name), kind),
            });
            rest = &rest[close + 1..];
        }
        out.push_str(rest);
        out
    }

    fn slot(&self, input: Option<&Input>, kind: char) -> String {
        let empty = || match kind {
            'b' => String::from("<>"),
            'n' | 'm' => String::from("()"),
            _ => String::from("[]"),
        };
        let Some(input) = input else { return empty() };
        match &input.value {
            InputValue::Empty => empty(),
            InputValue::Literal { kind: lk, value } => {
                if *lk == LiteralKind::Color || !lk.is_numeric() {
                    square(value)
                } else {
                    round(value)
                }
            }
            InputValue::Broadcast { name, .. } => round_menu(name),
            InputValue::Variable { name, .. } => round(name),
            InputValue::List { name, .. } => format!("({} :: list)", escape(name, ')')),
            InputValue::Block(id) => match self.block(id) {
                None => empty(),
                Some(b) if b.shadow && b.inputs.is_empty() && b.fields.len() == 1 => {
                    let (fname, f) = b.fields.iter().next().unwrap();
                    let shown = display_menu_value(fname, &f.value);
                    match kind {
                        'm' => round_menu(shown),
                        'n' => round(shown),
                        'b' => empty(),
                        _ => square(shown),
                    }
                }
                Some(b) if b.shadow && b.fields.is_empty() && b.inputs.is_empty() => empty(),
                Some(b) => self.expression(b),
            },
        }
    }

    /// A block in expression position, wrapped in `(…)` or `<…>`.
    fn expression(&self, block: &Block) -> String {
        let known = block.known && opcodes::lookup(&block.opcode).is_some_and(|i| !i.template.is_empty());
        if !known {
            let words = match block.opcode.as_str() {
                "procedures_call" => return format!("({})", self.call(block)),
                _ => opcode_words(&block.opcode),
            };
            return if block.shape == Shape::Boolean {
                format!("<{words} :: grey>")
            } else {
                format!("({words} :: grey)")
            };
        }
        let info = opcodes::lookup(&block.opcode).unwrap();
        let body = self.fill(block, info.template);
        match block.shape {
            Shape::Boolean => format!("<{body}>"),
            Shape::Reporter if block.opcode == "data_variable" || block.opcode.starts_with("argument_reporter") => {
                round(&body)
            }
            Shape::Reporter => format!("({body})"),
            // Stack-shaped blocks never reach here except through malformed
            // inputs; print them inline rather than dropping them.
            _ => format!("({body} :: grey)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sprite_with(stack: Vec<BlockSpec>) -> Project {
        let mut p = ProjectBuilder::new();
        p.stage().costume(CostumeAsset::svg("backdrop1", blank_svg(480, 360)));
        let t = p.sprite("Cat");
        t.costume(CostumeAsset::svg("c", blank_svg(4, 4)));
        t.script(stack);
        p.build().unwrap()
    }

    fn lines(stack: Vec<BlockSpec>) -> Vec<String> {
        let project = sprite_with(stack);
        let scripts = emit_target(&project.sprites[0]);
        assert_eq!(scripts.len(), 1);
        scripts.into_iter().next().unwrap().lines
    }

    #[test]
    fn move_steps() {
        assert_eq!(lines(vec![block("motion_movesteps").input("STEPS", num(10))]), vec!["move (10) steps"]);
    }

    #[test]
    fn forever_turn() {
        let got = lines(vec![block("control_forever")
            .substack("SUBSTACK", vec![block("motion_turnright").input("DEGREES", num(15))])]);
        assert_eq!(got, vec!["forever", "    turn cw (15) degrees", "end"]);
    }

    #[test]
    fn empty_target() {
        let project = sprite_with(vec![block("looks_show")]);
        assert!(emit_target(&project.stage).is_empty());
    }

    #[test]
    fn if_else_with_condition() {
        let got = lines(vec![
            block("event_whenflagclicked"),
            block("control_if_else")
                .input(
                    "CONDITION",
                    reporter(block("operator_gt").input("OPERAND1", var("score")).input("OPERAND2", text("10"))),
                )
                .substack("SUBSTACK", vec![block("looks_say").input("MESSAGE", text("You win!"))])
                .substack("SUBSTACK2", vec![block("looks_say").input("MESSAGE", text("Keep going"))]),
        ]);
        assert_eq!(
            got,
            vec![
                "when green flag clicked",
                "if <(score) > [10]> then",
                "    say [You win!]",
                "else",
                "    say [Keep going]",
                "end",
            ]
        );
    }

    #[test]
    fn dropdowns_and_menus() {
        let got = lines(vec![
            block("event_whenkeypressed").field("KEY_OPTION", "space"),
            block("data_setvariableto").var_field("score").input("VALUE", num(0)),
            block("motion_goto").input("TO", menu("motion_goto_menu", "TO", "_random_")),
            block("event_broadcast").input("BROADCAST_INPUT", broadcast("start game")),
            block("looks_changeeffectby").field("EFFECT", "GHOST").input("CHANGE", num(25)),
            block("control_stop").field("STOP_OPTION", "all"),
        ]);
        assert_eq!(
            got,
            vec![
                "when [space v] key pressed",
                "set [score v] to (0)",
                "go to (random position v)",
                "broadcast (start game v)",
                "change [ghost v] effect by (25)",
                "stop [all v]",
            ]
        );
    }

    #[test]
    fn nested_reporters_and_empty_slots() {
        let got = lines(vec![
            block("looks_say").input(
                "MESSAGE",
                reporter(block("operator_join").input("STRING1", text("Hi ")).input("STRING2", reporter(block("sensing_answer")))),
            ),
            block("control_wait_until"),
            block("motion_movesteps").input("STEPS", Arg::Empty),
            block("data_addtolist").list_field("items").input("ITEM", list("items")),
            block("looks_say").input("MESSAGE", color("#ff0000")),
        ]);
        assert_eq!(
            got,
            vec![
                "say (join [Hi ] (answer))",
                "wait until <>",
                "move () steps",
                "add (items :: list) to [items v]",
                "say [#ff0000]",
            ]
        );
    }

    #[test]
    fn custom_blocks() {
        let mut p = ProjectBuilder::new();
        p.stage().costume(CostumeAsset::svg("backdrop1", blank_svg(480, 360)));
        let t = p.sprite("Cat");
        t.costume(CostumeAsset::svg("c", blank_svg(4, 4)));
        t.script(vec![
            define("jump %n times %b", &["height", "loud"]),
            block("motion_changeyby").input("DY", reporter(arg_reporter("height"))),
            block("control_if").input("CONDITION", reporter(arg_boolean("loud"))),
        ]);
        t.script(vec![block("event_whenflagclicked"), call("jump %n times %b", vec![num(10), Arg::Empty])]);
        let project = p.build().unwrap();
        let scripts = emit_target(&project.sprites[0]);
        let all: Vec<&str> = scripts.iter().flat_map(|s| s.lines.iter().map(String::as_str)).collect();
        assert_eq!(
            all,
            vec![
                "define jump (height) times <loud>",
                "change y by (height)",
                "if <loud> then",
                "end",
                "when green flag clicked",
                "jump (10) times <> :: custom",
            ]
        );
    }

    #[test]
    fn unknown_opcodes_fall_back() {
        let got = lines(vec![
            block("event_whenflagclicked"),
            block("videoSensing_videoToggle").field("VIDEO_STATE", "on"),
            block("looks_say").input("MESSAGE", reporter(block("mystery_reporter"))),
        ]);
        assert_eq!(
            got,
            vec![
                "when green flag clicked",
                "videoSensing videoToggle [on v] // unknown: videoSensing_videoToggle",
                "say (mystery reporter :: grey)",
            ]
        );
    }

    #[test]
    fn literals_are_escaped() {
        let got = lines(vec![
            block("looks_say").input("MESSAGE", text("a]b\nc")),
            block("motion_movesteps").input("STEPS", num("1)")),
        ]);
        assert_eq!(got, vec!["say [a\\]b c]", "move (1\\)) steps"]);
    }

    #[test]
    fn extension_blocks() {
        let got = lines(vec![
            block("pen_clear"),
            block("text2speech_speakAndWait").input("WORDS", text("hello")),
            block("music_setInstrument").input("INSTRUMENT", menu("music_menu_INSTRUMENT", "INSTRUMENT", "1")),
            block("music_playNoteForBeats").input("NOTE", menu("note", "NOTE", "60")).input("BEATS", num(0.25)),
        ]);
        assert_eq!(
            got,
            vec!["erase all", "speak [hello]", "set instrument to (1 v)", "play note (60) for (0.25) beats"]
        );
    }

    #[test]
    fn project_sections() {
        let mut p = ProjectBuilder::new();
        p.stage().costume(CostumeAsset::svg("backdrop1", blank_svg(480, 360)));
        assert_eq!(emit_project(&p.build().unwrap()), "== stage ==\n");

        let t = p.sprite("Tera");
        t.costume(CostumeAsset::svg("c", blank_svg(4, 4)));
        t.script(vec![block("event_whenflagclicked"), block("looks_show")]);
        t.script(vec![block("looks_hide")]);
        let text = emit_project(&p.build().unwrap());
        assert_eq!(text, "== stage ==\n\n== sprite: Tera ==\nwhen green flag clicked\nshow\n\nhide\n");
        assert_eq!(text.matches("== sprite: Tera ==").count(), 1);
    }

    fn count_c_blocks(t: &Target, root: &str) -> usize {
        t.script_blocks(root)
            .into_iter()
            .filter(|id| {
                let b = &t.blocks[*id];
                !b.shadow && !b.shape.is_expression() && !substack_names(b).is_empty()
            })
            .count()
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 96, ..ProptestConfig::default() })]

        #[test]
        fn nesting_is_balanced(project in crate::testgen::project()) {
            for t in project.targets() {
                let roots = t.iter_scripts();
                for (script, root) in emit_target(t).iter().zip(roots) {
                    let ends = script.lines.iter().filter(|l| l.trim() == "end").count();
                    prop_assert_eq!(ends, count_c_blocks(t, root));
                    for l in &script.lines {
                        let indent = l.len() - l.trim_start_matches(' ').len();
                        prop_assert_eq!(indent % 4, 0);
                    }
                }
            }
        }

        #[test]
        fn emission_is_total_and_stable(project in crate::testgen::project()) {
            let a = emit_project(&project);
            let b = emit_project(&project.clone());
            prop_assert_eq!(&a, &b);
            prop_assert!(a.starts_with("== stage ==\n"));
            prop_assert_eq!(a.matches("== sprite: ").count(), project.sprites.len());
        }
    }
}
