//! Opcode signature table: block shape plus the scratchblocks template used
//! when printing.
//!
//! Template placeholders are `{INPUT_OR_FIELD:kind}` where kind is one of
//! `n` (number slot), `s` (text slot), `b` (boolean slot), `m` (menu input,
//! printed as a round dropdown) or `f` (field, printed as a square dropdown).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Hat,
    Stack,
    Reporter,
    Boolean,
    CBlock,
    Cap,
}

impl Shape {
    pub fn is_expression(self) -> bool {
        matches!(self, Shape::Reporter | Shape::Boolean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpcodeInfo {
    pub opcode: &'static str,
    pub shape: Shape,
    pub template: &'static str,
    /// Substack input names, in display order.
    pub substacks: &'static [&'static str],
}

const fn op(opcode: &'static str, shape: Shape, template: &'static str) -> OpcodeInfo {
    OpcodeInfo { opcode, shape, template, substacks: &[] }
}

const fn cop(opcode: &'static str, template: &'static str, substacks: &'static [&'static str]) -> OpcodeInfo {
    OpcodeInfo { opcode, shape: Shape::CBlock, template, substacks }
}

use Shape::*;

static TABLE: &[OpcodeInfo] = &[
    // motion
    op("motion_movesteps", Stack, "move {STEPS:n} steps"),
    op("motion_turnright", Stack, "turn cw {DEGREES:n} degrees"),
    op("motion_turnleft", Stack, "turn ccw {DEGREES:n} degrees"),
    op("motion_pointindirection", Stack, "point in direction {DIRECTION:n}"),
    op("motion_pointtowards", Stack, "point towards {TOWARDS:m}"),
    op("motion_gotoxy", Stack, "go to x: {X:n} y: {Y:n}"),
    op("motion_goto", Stack, "go to {TO:m}"),
    op("motion_glidesecstoxy", Stack, "glide {SECS:n} secs to x: {X:n} y: {Y:n}"),
    op("motion_glideto", Stack, "glide {SECS:n} secs to {TO:m}"),
    op("motion_changexby", Stack, "change x by {DX:n}"),
    op("motion_setx", Stack, "set x to {X:n}"),
    op("motion_changeyby", Stack, "change y by {DY:n}"),
    op("motion_sety", Stack, "set y to {Y:n}"),
    op("motion_ifonedgebounce", Stack, "if on edge, bounce"),
    op("motion_setrotationstyle", Stack, "set rotation style {STYLE:f}"),
    op("motion_xposition", Reporter, "x position"),
    op("motion_yposition", Reporter, "y position"),
    op("motion_direction", Reporter, "direction"),
    // looks
    op("looks_sayforsecs", Stack, "say {MESSAGE:s} for {SECS:n} seconds"),
    op("looks_say", Stack, "say {MESSAGE:s}"),
    op("looks_thinkforsecs", Stack, "think {MESSAGE:s} for {SECS:n} seconds"),
    op("looks_think", Stack, "think {MESSAGE:s}"),
    op("looks_switchcostumeto", Stack, "switch costume to {COSTUME:m}"),
    op("looks_nextcostume", Stack, "next costume"),
    op("looks_switchbackdropto", Stack, "switch backdrop to {BACKDROP:m}"),
    op("looks_switchbackdroptoandwait", Stack, "switch backdrop to {BACKDROP:m} and wait"),
    op("looks_nextbackdrop", Stack, "next backdrop"),
    op("looks_changesizeby", Stack, "change size by {CHANGE:n}"),
    op("looks_setsizeto", Stack, "set size to {SIZE:n} %"),
    op("looks_changeeffectby", Stack, "change {EFFECT:f} effect by {CHANGE:n}"),
    op("looks_seteffectto", Stack, "set {EFFECT:f} effect to {VALUE:n}"),
    op("looks_cleargraphiceffects", Stack, "clear graphic effects"),
    op("looks_show", Stack, "show"),
    op("looks_hide", Stack, "hide"),
    op("looks_gotofrontback", Stack, "go to {FRONT_BACK:f} layer"),
    op("looks_goforwardbackwardlayers", Stack, "go {FORWARD_BACKWARD:f} {NUM:n} layers"),
    op("looks_costumenumbername", Reporter, "costume {NUMBER_NAME:f}"),
    op("looks_backdropnumbername", Reporter, "backdrop {NUMBER_NAME:f}"),
    op("looks_size", Reporter, "size"),
    // sound
    op("sound_playuntildone", Stack, "play sound {SOUND_MENU:m} until done"),
    op("sound_play", Stack, "start sound {SOUND_MENU:m}"),
    op("sound_stopallsounds", Stack, "stop all sounds"),
    op("sound_changeeffectby", Stack, "change {EFFECT:f} effect by {VALUE:n}"),
    op("sound_seteffectto", Stack, "set {EFFECT:f} effect to {VALUE:n}"),
    op("sound_cleareffects", Stack, "clear sound effects"),
    op("sound_changevolumeby", Stack, "change volume by {VOLUME:n}"),
    op("sound_setvolumeto", Stack, "set volume to {VOLUME:n} %"),
    op("sound_volume", Reporter, "volume"),
    // events
    op("event_whenflagclicked", Hat, "when green flag clicked"),
    op("event_whenkeypressed", Hat, "when {KEY_OPTION:f} key pressed"),
    op("event_whenthisspriteclicked", Hat, "when this sprite clicked"),
    op("event_whenstageclicked", Hat, "when stage clicked"),
    op("event_whenbackdropswitchesto", Hat, "when backdrop switches to {BACKDROP:f}"),
    op("event_whengreaterthan", Hat, "when {WHENGREATERTHANMENU:f} > {VALUE:n}"),
    op("event_whenbroadcastreceived", Hat, "when I receive {BROADCAST_OPTION:f}"),
    op("event_broadcast", Stack, "broadcast {BROADCAST_INPUT:m}"),
    op("event_broadcastandwait", Stack, "broadcast {BROADCAST_INPUT:m} and wait"),
    // control
    op("control_wait", Stack, "wait {DURATION:n} seconds"),
    cop("control_repeat", "repeat {TIMES:n}", &["SUBSTACK"]),
    cop("control_forever", "forever", &["SUBSTACK"]),
    cop("control_if", "if {CONDITION:b} then", &["SUBSTACK"]),
    cop("control_if_else", "if {CONDITION:b} then", &["SUBSTACK", "SUBSTACK2"]),
    op("control_wait_until", Stack, "wait until {CONDITION:b}"),
    cop("control_repeat_until", "repeat until {CONDITION:b}", &["SUBSTACK"]),
    op("control_stop", Cap, "stop {STOP_OPTION:f}"),
    op("control_start_as_clone", Hat, "when I start as a clone"),
    op("control_create_clone_of", Stack, "create clone of {CLONE_OPTION:m}"),
    op("control_delete_this_clone", Cap, "delete this clone"),
    // sensing
    op("sensing_touchingobject", Boolean, "touching {TOUCHINGOBJECTMENU:m}?"),
    op("sensing_touchingcolor", Boolean, "touching color {COLOR:s}?"),
    op("sensing_coloristouchingcolor", Boolean, "color {COLOR:s} is touching {COLOR2:s}?"),
    op("sensing_distanceto", Reporter, "distance to {DISTANCETOMENU:m}"),
    op("sensing_askandwait", Stack, "ask {QUESTION:s} and wait"),
    op("sensing_answer", Reporter, "answer"),
    op("sensing_keypressed", Boolean, "key {KEY_OPTION:m} pressed?"),
    op("sensing_mousedown", Boolean, "mouse down?"),
    op("sensing_mousex", Reporter, "mouse x"),
    op("sensing_mousey", Reporter, "mouse y"),
    op("sensing_setdragmode", Stack, "set drag mode {DRAG_MODE:f}"),
    op("sensing_loudness", Reporter, "loudness"),
    op("sensing_timer", Reporter, "timer"),
    op("sensing_resettimer", Stack, "reset timer"),
    op("sensing_of", Reporter, "{PROPERTY:f} of {OBJECT:m}"),
    op("sensing_current", Reporter, "current {CURRENTMENU:f}"),
    op("sensing_dayssince2000", Reporter, "days since 2000"),
    op("sensing_username", Reporter, "username"),
    // operators
    op("operator_add", Reporter, "{NUM1:n} + {NUM2:n}"),
    op("operator_subtract", Reporter, "{NUM1:n} - {NUM2:n}"),
    op("operator_multiply", Reporter, "{NUM1:n} * {NUM2:n}"),
    op("operator_divide", Reporter, "{NUM1:n} / {NUM2:n}"),
    op("operator_random", Reporter, "pick random {FROM:n} to {TO:n}"),
    op("operator_gt", Boolean, "{OPERAND1:s} > {OPERAND2:s}"),
    op("operator_lt", Boolean, "{OPERAND1:s} < {OPERAND2:s}"),
    op("operator_equals", Boolean, "{OPERAND1:s} = {OPERAND2:s}"),
    op("operator_and", Boolean, "{OPERAND1:b} and {OPERAND2:b}"),
    op("operator_or", Boolean, "{OPERAND1:b} or {OPERAND2:b}"),
    op("operator_not", Boolean, "not {OPERAND:b}"),
    op("operator_join", Reporter, "join {STRING1:s} {STRING2:s}"),
    op("operator_letter_of", Reporter, "letter {LETTER:n} of {STRING:s}"),
    op("operator_length", Reporter, "length of {STRING:s}"),
    op("operator_contains", Boolean, "{STRING1:s} contains {STRING2:s}?"),
    op("operator_mod", Reporter, "{NUM1:n} mod {NUM2:n}"),
    op("operator_round", Reporter, "round {NUM:n}"),
    op("operator_mathop", Reporter, "{OPERATOR:f} of {NUM:n}"),
    // variables and lists
    op("data_variable", Reporter, "{VARIABLE:r}"),
    op("data_setvariableto", Stack, "set {VARIABLE:f} to {VALUE:s}"),
    op("data_changevariableby", Stack, "change {VARIABLE:f} by {VALUE:n}"),
    op("data_showvariable", Stack, "show variable {VARIABLE:f}"),
    op("data_hidevariable", Stack, "hide variable {VARIABLE:f}"),
    op("data_listcontents", Reporter, "{LIST:r} :: list"),
    op("data_addtolist", Stack, "add {ITEM:s} to {LIST:f}"),
    op("data_deleteoflist", Stack, "delete {INDEX:n} of {LIST:f}"),
    op("data_deletealloflist", Stack, "delete all of {LIST:f}"),
    op("data_insertatlist", Stack, "insert {ITEM:s} at {INDEX:n} of {LIST:f}"),
    op("data_replaceitemoflist", Stack, "replace item {INDEX:n} of {LIST:f} with {ITEM:s}"),
    op("data_itemoflist", Reporter, "item {INDEX:n} of {LIST:f}"),
    op("data_itemnumoflist", Reporter, "item # of {ITEM:s} in {LIST:f}"),
    op("data_lengthoflist", Reporter, "length of {LIST:f}"),
    op("data_listcontainsitem", Boolean, "{LIST:f} contains {ITEM:s}?"),
    op("data_showlist", Stack, "show list {LIST:f}"),
    op("data_hidelist", Stack, "hide list {LIST:f}"),
    // custom blocks; text comes from the mutation
    op("procedures_definition", Hat, ""),
    op("procedures_call", Stack, ""),
    op("procedures_prototype", Reporter, ""),
    op("argument_reporter_string_number", Reporter, "{VALUE:r}"),
    op("argument_reporter_boolean", Boolean, "{VALUE:r}"),
    // pen
    op("pen_clear", Stack, "erase all"),
    op("pen_stamp", Stack, "stamp"),
    op("pen_penDown", Stack, "pen down"),
    op("pen_penUp", Stack, "pen up"),
    op("pen_setPenColorToColor", Stack, "set pen color to {COLOR:s}"),
    op("pen_changePenColorParamBy", Stack, "change pen {COLOR_PARAM:m} by {VALUE:n}"),
    op("pen_setPenColorParamTo", Stack, "set pen {COLOR_PARAM:m} to {VALUE:n}"),
    op("pen_changePenSizeBy", Stack, "change pen size by {SIZE:n}"),
    op("pen_setPenSizeTo", Stack, "set pen size to {SIZE:n}"),
    // music
    op("music_playDrumForBeats", Stack, "play drum {DRUM:m} for {BEATS:n} beats"),
    op("music_restForBeats", Stack, "rest for {BEATS:n} beats"),
    op("music_playNoteForBeats", Stack, "play note {NOTE:n} for {BEATS:n} beats"),
    op("music_setInstrument", Stack, "set instrument to {INSTRUMENT:m}"),
    op("music_setTempo", Stack, "set tempo to {TEMPO:n}"),
    op("music_changeTempo", Stack, "change tempo by {TEMPO:n}"),
    op("music_getTempo", Reporter, "tempo"),
    // text to speech
    op("text2speech_speakAndWait", Stack, "speak {WORDS:s}"),
    op("text2speech_setVoice", Stack, "set voice to {VOICE:m}"),
    op("text2speech_setLanguage", Stack, "set language to {LANGUAGE:m}"),
];

pub fn lookup(opcode: &str) -> Option<&'static OpcodeInfo> {
    TABLE.iter().find(|info| info.opcode == opcode)
}

pub fn all() -> &'static [OpcodeInfo] {
    TABLE
}

/// Loop blocks counted as iteration concepts.
pub const LOOPS: &[&str] = &["control_repeat", "control_forever", "control_repeat_until"];
pub const CONDITIONALS: &[&str] = &["control_if", "control_if_else"];

/// Editor-facing text for menu values whose wire value is an internal token.
pub fn display_menu_value<'a>(field: &str, value: &'a str) -> &'a str {
    match value {
        "_mouse_" => return "mouse-pointer",
        "_random_" => return "random position",
        "_myself_" => return "myself",
        "_stage_" => return "Stage",
        "_edge_" => return "edge",
        _ => {}
    }
    let table: &[(&str, &str)] = match field {
        "EFFECT" => &[
            ("COLOR", "color"),
            ("FISHEYE", "fisheye"),
            ("WHIRL", "whirl"),
            ("PIXELATE", "pixelate"),
            ("MOSAIC", "mosaic"),
            ("BRIGHTNESS", "brightness"),
            ("GHOST", "ghost"),
            ("PITCH", "pitch"),
            ("PAN", "pan left/right"),
        ],
        "CURRENTMENU" => &[
            ("YEAR", "year"),
            ("MONTH", "month"),
            ("DATE", "date"),
            ("DAYOFWEEK", "day of week"),
            ("HOUR", "hour"),
            ("MINUTE", "minute"),
            ("SECOND", "second"),
        ],
        "WHENGREATERTHANMENU" => &[("LOUDNESS", "loudness"), ("TIMER", "timer")],
        "voices" => &[
            ("ALTO", "alto"),
            ("TENOR", "tenor"),
            ("SQUEAK", "squeak"),
            ("GIANT", "giant"),
            ("KITTEN", "kitten"),
        ],
        _ => &[],
    };
    table
        .iter()
        .find(|(wire, _)| *wire == value)
        .map(|(_, shown)| *shown)
        .unwrap_or(value)
}
