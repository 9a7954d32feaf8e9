//! Start-state stage compositing on plain RGBA rasters.
//!
//! Image decoding lives outside the core: callers supply costume rasters
//! through [`CostumeSource`].

use alloc::string::String;
use alloc::vec::Vec;

use crate::ir::{Costume, Project, RotationStyle, Target};

pub const STAGE_WIDTH: u32 = 480;
pub const STAGE_HEIGHT: u32 = 360;

/// Channel tolerance used by [`similarity`].
pub const SIMILARITY_TOLERANCE: u8 = 16;

const PLACEHOLDER_FILL: [u8; 4] = [160, 160, 160, 255];
const PLACEHOLDER_EDGE: [u8; 4] = [96, 96, 96, 255];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("costume asset `{0}` cannot be rasterized")]
    UnrasterizableCostume(String),
    #[error("costume asset `{asset_id}` failed to decode: {reason}")]
    Decode { asset_id: String, reason: String },
    #[error("asset `{0}` is not present in the archive")]
    MissingAsset(String),
    #[error("raster sizes differ: {0}x{1} vs {2}x{3}")]
    SizeMismatch(u32, u32, u32, u32),
}

/// 8-bit RGBA raster, row-major, not premultiplied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Raster {
    /// Fully transparent raster.
    pub fn new(width: u32, height: u32) -> Self {
        Raster::filled(width, height, [0, 0, 0, 0])
    }

    pub fn filled(width: u32, height: u32, rgba: [u8; 4]) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 4);
        for _ in 0..n {
            data.extend_from_slice(&rgba);
        }
        Raster { width, height, data }
    }

    /// Wraps raw RGBA bytes; `None` if the length does not match.
    pub fn from_rgba(width: u32, height: u32, data: Vec<u8>) -> Option<Self> {
        (data.len() == width as usize * height as usize * 4).then_some(Raster { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_rgba(&self) -> &[u8] {
        &self.data
    }

    pub fn into_rgba(self) -> Vec<u8> {
        self.data
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 4
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2], self.data[o + 3]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgba: [u8; 4]) {
        let o = self.offset(x, y);
        self.data[o..o + 4].copy_from_slice(&rgba);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 4]> + '_ {
        self.data.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]])
    }

    /// Nearest-neighbour resize.
    pub fn resized(&self, width: u32, height: u32) -> Raster {
        let mut out = Raster::new(width, height);
        if self.width == 0 || self.height == 0 {
            return out;
        }
        for y in 0..height {
            let sy = (u64::from(y) * u64::from(self.height) / u64::from(height)) as u32;
            for x in 0..width {
                let sx = (u64::from(x) * u64::from(self.width) / u64::from(width)) as u32;
                out.set_pixel(x, y, self.pixel(sx, sy));
            }
        }
        out
    }
}

/// Gray stand-in for a costume that could not be rasterized.
pub fn placeholder(width: u32, height: u32) -> Raster {
    let (w, h) = (width.max(1), height.max(1));
    let mut r = Raster::filled(w, h, PLACEHOLDER_FILL);
    for x in 0..w {
        r.set_pixel(x, 0, PLACEHOLDER_EDGE);
        r.set_pixel(x, h - 1, PLACEHOLDER_EDGE);
    }
    for y in 0..h {
        r.set_pixel(0, y, PLACEHOLDER_EDGE);
        r.set_pixel(w - 1, y, PLACEHOLDER_EDGE);
    }
    r
}

/// A costume raster ready for compositing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostumeImage {
    pub raster: Raster,
    /// True when `raster` is a placeholder rather than the real artwork.
    pub placeholder: bool,
}

/// Supplies decoded costume pixels. Bitmaps come at their stored size;
/// SVGs are rasterized at their intrinsic size.
pub trait CostumeSource {
    fn costume_image(&self, project: &Project, costume: &Costume) -> Result<CostumeImage, RenderError>;
}

impl<T: CostumeSource + ?Sized> CostumeSource for &T {
    fn costume_image(&self, project: &Project, costume: &Costume) -> Result<CostumeImage, RenderError> {
        (**self).costume_image(project, costume)
    }
}

/// Composited start-state stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageImage {
    pub raster: Raster,
    /// Asset ids drawn as placeholders.
    pub placeholders: Vec<String>,
}

pub fn render_stage(project: &Project, source: &dyn CostumeSource) -> Result<StageImage, RenderError> {
    let mut canvas = Raster::filled(STAGE_WIDTH, STAGE_HEIGHT, [255, 255, 255, 255]);
    let mut placeholders = Vec::new();

    if !project.stage.costumes.is_empty() {
        let costume = project.stage.current_costume();
        let img = source.costume_image(project, costume)?;
        if img.placeholder {
            placeholders.push(costume.asset_id.clone());
        }
        let scaled = img.raster.resized(STAGE_WIDTH, STAGE_HEIGHT);
        for y in 0..STAGE_HEIGHT {
            for x in 0..STAGE_WIDTH {
                let dst = canvas.pixel(x, y);
                canvas.set_pixel(x, y, blend(dst, scaled.pixel(x, y)));
            }
        }
    }

    let mut sprites: Vec<&Target> = project.sprites.iter().filter(|s| s.visible && !s.costumes.is_empty()).collect();
    sprites.sort_by_key(|s| s.layer_order);
    for sprite in sprites {
        let costume = sprite.current_costume();
        let img = source.costume_image(project, costume)?;
        if img.placeholder {
            placeholders.push(costume.asset_id.clone());
        }
        draw_sprite(&mut canvas, sprite, costume, &img.raster);
    }
    Ok(StageImage { raster: canvas, placeholders })
}

fn blend(dst: [u8; 4], src: [u8; 4]) -> [u8; 4] {
    let a = u32::from(src[3]);
    if a == 0 {
        return dst;
    }
    if a == 255 {
        return [src[0], src[1], src[2], 255];
    }
    let mix = |s: u8, d: u8| ((u32::from(s) * a + u32::from(d) * (255 - a) + 127) / 255) as u8;
    [mix(src[0], dst[0]), mix(src[1], dst[1]), mix(src[2], dst[2]), 255]
}

/// Maps every stage pixel centre back into costume space and samples the
/// nearest costume pixel.
fn draw_sprite(canvas: &mut Raster, sprite: &Target, costume: &Costume, raster: &Raster) {
    let scale = sprite.size / 100.0;
    let r = f64::from(costume.bitmap_resolution.max(1));
    let (cx, cy) = costume.rotation_center;
    let anchor_x = f64::from(STAGE_WIDTH) / 2.0 + sprite.x;
    let anchor_y = f64::from(STAGE_HEIGHT) / 2.0 - sprite.y;

    let rotate = sprite.rotation_style == RotationStyle::AllAround && sprite.direction != 90.0;
    let theta = (sprite.direction - 90.0) * core::f64::consts::PI / 180.0;
    let (sin, cos) = if rotate { (libm::sin(theta), libm::cos(theta)) } else { (0.0, 1.0) };
    let mirror = sprite.rotation_style == RotationStyle::LeftRight && sprite.direction < 0.0;

    let (w, h) = (f64::from(raster.width()), f64::from(raster.height()));
    for py in 0..STAGE_HEIGHT {
        for px in 0..STAGE_WIDTH {
            let dx = f64::from(px) + 0.5 - anchor_x;
            let dy = f64::from(py) + 0.5 - anchor_y;
            // Inverse of a clockwise rotation in screen space (y down).
            let (mut ux, uy) = (dx * cos + dy * sin, -dx * sin + dy * cos);
            if mirror {
                ux = -ux;
            }
            let u = ux * r / scale + cx;
            let v = uy * r / scale + cy;
            if u < 0.0 || v < 0.0 || u >= w || v >= h {
                continue;
            }
            let src = raster.pixel(u as u32, v as u32);
            let dst = canvas.pixel(px, py);
            canvas.set_pixel(px, py, blend(dst, src));
        }
    }
}

/// Fraction of pixels whose four channels all differ by at most
/// [`SIMILARITY_TOLERANCE`].
pub fn similarity(a: &Raster, b: &Raster) -> Result<f64, RenderError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(RenderError::SizeMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    let total = a.width() as usize * a.height() as usize;
    if total == 0 {
        return Ok(1.0);
    }
    let close = a
        .pixels()
        .zip(b.pixels())
        .filter(|(p, q)| p.iter().zip(q).all(|(x, y)| x.abs_diff(*y) <= SIMILARITY_TOLERANCE))
        .count();
    Ok(close as f64 / total as f64)
}

/// `<sprite>__<costume>.png` with anything outside `[A-Za-z0-9._-]`
/// replaced by `_`.
pub fn costume_file_name(sprite: &str, costume: &str) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
            .collect()
    };
    let mut name = clean(sprite);
    name.push_str("__");
    name.push_str(&clean(costume));
    name.push_str(".png");
    name
}

/// Width and height declared on the root `<svg>` element, falling back to
/// the `viewBox` when either is missing or relative.
pub fn svg_intrinsic_size(svg: &[u8]) -> Option<(u32, u32)> {
    let text = core::str::from_utf8(svg).ok()?;
    let start = text.find("<svg")?;
    let end = start + text[start..].find('>')?;
    let tag = &text[start + 4..end];

    let width = attr(tag, "width").and_then(parse_length);
    let height = attr(tag, "height").and_then(parse_length);
    let view = attr(tag, "viewBox").and_then(|v| {
        let nums: Vec<f64> = v
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .filter_map(|s| s.parse().ok())
            .collect();
        (nums.len() == 4).then(|| (nums[2], nums[3]))
    });
    let (w, h) = match (width, height, view) {
        (Some(w), Some(h), _) => (w, h),
        (Some(w), None, Some((vw, vh))) if vw > 0.0 => (w, w * vh / vw),
        (None, Some(h), Some((vw, vh))) if vh > 0.0 => (h * vw / vh, h),
        (_, _, Some((vw, vh))) => (vw, vh),
        _ => return None,
    };
    let to_px = |v: f64| -> u32 { libm::ceil(v).clamp(1.0, 16384.0) as u32 };
    Some((to_px(w), to_px(h)))
}

fn attr<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let mut rest = tag;
    loop {
        let i = rest.find(name)?;
        let before_ok = i == 0 || rest.as_bytes()[i - 1].is_ascii_whitespace();
        let after = rest[i + name.len()..].trim_start();
        if before_ok {
            if let Some(after_eq) = after.strip_prefix('=') {
                let after_eq = after_eq.trim_start();
                let quote = after_eq.chars().next()?;
                if quote == '"' || quote == '\'' {
                    let body = &after_eq[1..];
                    return body.find(quote).map(|j| &body[..j]);
                }
            }
        }
        rest = &rest[i + name.len()..];
    }
}

fn parse_length(v: &str) -> Option<f64> {
    let v = v.trim();
    if v.ends_with('%') {
        return None;
    }
    let num = v.strip_suffix("px").unwrap_or(v).trim();
    num.parse::<f64>().ok().filter(|x| x.is_finite() && *x > 0.0)
}

/// Report note: monitors are never drawn.
pub const MONITOR_NOTE: &str = "variable monitors are not drawn on the stage screenshot";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::*;
    use crate::ir::ImageFormat;
    use alloc::format;

    use crate::testgen::Solid;

    fn square(name: &str, w: u32, h: u32, center: (f64, f64)) -> CostumeAsset {
        let mut c = CostumeAsset::svg(&format!("@{name}-{w}x{h}"), blank_svg(w, h));
        c.rotation_center = center;
        c
    }

    fn white_stage(p: &mut ProjectBuilder) {
        p.stage().costume(square("ffffff", 480, 360, (240.0, 180.0)));
    }

    #[test]
    fn stage_only_white() {
        let mut p = ProjectBuilder::new();
        white_stage(&mut p);
        let img = render_stage(&p.build().unwrap(), &Solid).unwrap();
        assert_eq!((img.raster.width(), img.raster.height()), (480, 360));
        assert!(img.raster.pixels().all(|px| px == [255, 255, 255, 255]));
    }

    #[test]
    fn rotation_center_lands_on_stage_center() {
        let mut p = ProjectBuilder::new();
        white_stage(&mut p);
        p.sprite("S").costume(square("ff0000", 11, 11, (5.0, 5.0)));
        let img = render_stage(&p.build().unwrap(), &Solid).unwrap().raster;
        assert_eq!(img.pixel(240, 180), [255, 0, 0, 255]);
        // 11 px wide: columns 235..=245 are covered.
        assert_eq!(img.pixel(235, 180), [255, 0, 0, 255]);
        assert_eq!(img.pixel(245, 180), [255, 0, 0, 255]);
        assert_eq!(img.pixel(234, 180), [255, 255, 255, 255]);
        assert_eq!(img.pixel(246, 180), [255, 255, 255, 255]);
    }

    #[test]
    fn placement_follows_position_and_resolution() {
        let mut p = ProjectBuilder::new();
        white_stage(&mut p);
        let mut c = square("00ff00", 20, 20, (0.0, 0.0));
        c.bitmap_resolution = 2;
        c.format = ImageFormat::Png;
        p.sprite("S").costume(c).position(-100.0, 50.0);
        let img = render_stage(&p.build().unwrap(), &Solid).unwrap().raster;
        // Top-left at (140, 130); 20 px at resolution 2 cover 10 stage px.
        assert_eq!(img.pixel(140, 130), [0, 255, 0, 255]);
        assert_eq!(img.pixel(149, 139), [0, 255, 0, 255]);
        assert_eq!(img.pixel(150, 130), [255, 255, 255, 255]);
        assert_eq!(img.pixel(139, 130), [255, 255, 255, 255]);
    }

    #[test]
    fn size_scales_around_rotation_center() {
        let mut p = ProjectBuilder::new();
        white_stage(&mut p);
        p.sprite("S").costume(square("0000ff", 10, 10, (0.0, 0.0))).size(200.0);
        let img = render_stage(&p.build().unwrap(), &Solid).unwrap().raster;
        assert_eq!(img.pixel(259, 199), [0, 0, 255, 255]);
        assert_eq!(img.pixel(260, 180), [255, 255, 255, 255]);
    }

    #[test]
    fn rotation_only_for_all_around() {
        let build = |style: RotationStyle| {
            let mut p = ProjectBuilder::new();
            white_stage(&mut p);
            p.sprite("S").costume(square("000000", 40, 2, (0.0, 1.0))).direction(180.0).rotation_style(style);
            render_stage(&p.build().unwrap(), &Solid).unwrap().raster
        };
        let rotated = build(RotationStyle::AllAround);
        // Pointing down: the bar extends below the anchor.
        assert_eq!(rotated.pixel(240, 210), [0, 0, 0, 255]);
        assert_eq!(rotated.pixel(260, 180), [255, 255, 255, 255]);
        let fixed = build(RotationStyle::DontRotate);
        assert_eq!(fixed.pixel(260, 180), [0, 0, 0, 255]);
        assert_eq!(fixed.pixel(240, 210), [255, 255, 255, 255]);
    }

    #[test]
    fn left_right_mirrors_when_facing_left() {
        let mut p = ProjectBuilder::new();
        white_stage(&mut p);
        p.sprite("S")
            .costume(square("000000", 40, 2, (0.0, 1.0)))
            .direction(-90.0)
            .rotation_style(RotationStyle::LeftRight);
        let img = render_stage(&p.build().unwrap(), &Solid).unwrap().raster;
        assert_eq!(img.pixel(220, 180), [0, 0, 0, 255]);
        assert_eq!(img.pixel(260, 180), [255, 255, 255, 255]);
    }

    #[test]
    fn higher_layer_wins() {
        let mut p = ProjectBuilder::new();
        white_stage(&mut p);
        p.sprite("Top").costume(square("ff0000", 20, 20, (10.0, 10.0))).layer_order(5);
        p.sprite("Bottom").costume(square("0000ff", 20, 20, (10.0, 10.0))).layer_order(2);
        let img = render_stage(&p.build().unwrap(), &Solid).unwrap().raster;
        assert_eq!(img.pixel(240, 180), [255, 0, 0, 255]);
    }

    #[test]
    fn hidden_sprites_are_skipped() {
        let mut p = ProjectBuilder::new();
        white_stage(&mut p);
        p.sprite("S").costume(square("ff0000", 20, 20, (10.0, 10.0))).visible(false);
        let img = render_stage(&p.build().unwrap(), &Solid).unwrap().raster;
        assert!(img.pixels().all(|px| px == [255, 255, 255, 255]));
    }

    #[test]
    fn alpha_blend_midpoint() {
        assert_eq!(blend([255, 255, 255, 255], [0, 0, 0, 128]), [127, 127, 127, 255]);
        assert_eq!(blend([10, 20, 30, 255], [0, 0, 0, 0]), [10, 20, 30, 255]);
    }

    #[test]
    fn similarity_counts_tolerance() {
        let a = Raster::filled(2, 1, [100, 100, 100, 255]);
        let mut b = a.clone();
        b.set_pixel(0, 0, [116, 84, 100, 255]);
        assert_eq!(similarity(&a, &b).unwrap(), 1.0);
        b.set_pixel(1, 0, [117, 100, 100, 255]);
        assert_eq!(similarity(&a, &b).unwrap(), 0.5);
        assert!(matches!(similarity(&a, &Raster::new(1, 1)), Err(RenderError::SizeMismatch(..))));
    }

    #[test]
    fn file_names_are_sanitized() {
        assert_eq!(costume_file_name("a/b", "cat 1"), "a_b__cat_1.png");
        assert_eq!(costume_file_name("Tera", "tera-a"), "Tera__tera-a.png");
    }

    #[test]
    fn svg_sizes() {
        assert_eq!(svg_intrinsic_size(blank_svg(95, 100).as_bytes()), Some((95, 100)));
        let s = br#"<?xml version="1.0"?><svg version="1.1" width="47.5px" height="20" xmlns="http://www.w3.org/2000/svg">"#;
        assert_eq!(svg_intrinsic_size(s), Some((48, 20)));
        let s = br#"<svg viewBox="0 0 30 40" xmlns="http://www.w3.org/2000/svg"/>"#;
        assert_eq!(svg_intrinsic_size(s), Some((30, 40)));
        let s = br#"<svg width="100%" viewBox="0,0,30,40"/>"#;
        assert_eq!(svg_intrinsic_size(s), Some((30, 40)));
        assert_eq!(svg_intrinsic_size(b"<png>"), None);
    }

    #[test]
    fn resize_nearest() {
        let mut r = Raster::new(2, 1);
        r.set_pixel(0, 0, [1, 1, 1, 255]);
        r.set_pixel(1, 0, [2, 2, 2, 255]);
        let big = r.resized(4, 2);
        assert_eq!(big.pixel(1, 1), [1, 1, 1, 255]);
        assert_eq!(big.pixel(2, 0), [2, 2, 2, 255]);
    }

    #[test]
    fn placeholder_is_gray_with_edge() {
        let p = placeholder(4, 3);
        assert_eq!(p.pixel(1, 1), PLACEHOLDER_FILL);
        assert_eq!(p.pixel(0, 0), PLACEHOLDER_EDGE);
        assert_eq!(placeholder(0, 0).width(), 1);
    }
}
