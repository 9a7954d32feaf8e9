//! Costume decoding, PNG encoding and costume export.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ImageFormat as Codec, RgbaImage};
use stereoscan_core::ir::{Costume, ImageFormat, Project};
use stereoscan_core::render::{
    costume_file_name, placeholder, svg_intrinsic_size, CostumeImage, CostumeSource, Raster, RenderError,
};

/// Fallback placeholder edge when an SVG declares no usable size.
const DEFAULT_PLACEHOLDER: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvgMode {
    /// Rasterize with resvg when built with the `svg` feature.
    Rasterize,
    /// Always draw placeholders for SVG costumes.
    Placeholder,
}

/// Decodes costume assets from the project archive.
#[derive(Debug, Clone, Copy)]
pub struct ArchiveCostumes {
    pub svg: SvgMode,
    /// When false, an SVG that cannot be rasterized is an error instead of
    /// a placeholder.
    pub allow_placeholder: bool,
}

impl Default for ArchiveCostumes {
    fn default() -> Self {
        ArchiveCostumes { svg: SvgMode::Rasterize, allow_placeholder: true }
    }
}

impl CostumeSource for ArchiveCostumes {
    fn costume_image(&self, project: &Project, costume: &Costume) -> Result<CostumeImage, RenderError> {
        let bytes = project
            .asset_bytes(costume)
            .map_err(|_| RenderError::MissingAsset(costume.asset_id.clone()))?
            .bytes;
        if costume.file_ext != ImageFormat::Svg {
            let img = image::load_from_memory(bytes)
                .map_err(|e| RenderError::Decode { asset_id: costume.asset_id.clone(), reason: e.to_string() })?
                .to_rgba8();
            let (w, h) = img.dimensions();
            let raster = Raster::from_rgba(w, h, img.into_raw()).expect("RGBA buffer matches dimensions");
            return Ok(CostumeImage { raster, placeholder: false });
        }
        let rasterized = match self.svg {
            SvgMode::Rasterize => rasterize_svg(bytes),
            SvgMode::Placeholder => None,
        };
        match rasterized {
            Some(raster) => Ok(CostumeImage { raster, placeholder: false }),
            None if self.allow_placeholder => {
                let (w, h) = svg_intrinsic_size(bytes).unwrap_or_else(|| fallback_size(costume));
                Ok(CostumeImage { raster: placeholder(w, h), placeholder: true })
            }
            None => Err(RenderError::UnrasterizableCostume(costume.asset_id.clone())),
        }
    }
}

fn fallback_size(costume: &Costume) -> (u32, u32) {
    let (cx, cy) = costume.rotation_center;
    let side = |c: f64| if c > 0.0 { (2.0 * c).ceil() as u32 } else { DEFAULT_PLACEHOLDER };
    (side(cx), side(cy))
}

/// SVG pixels at the intrinsic size, or `None` when the document cannot be
/// parsed or the rasterizer is not built in.
#[cfg(feature = "svg")]
pub fn rasterize_svg(bytes: &[u8]) -> Option<Raster> {
    use resvg::{tiny_skia, usvg};
    let tree = usvg::Tree::from_data(bytes, &usvg::Options::default()).ok()?;
    let size = tree.size();
    let (w, h) = svg_intrinsic_size(bytes)
        .unwrap_or_else(|| (size.width().ceil().max(1.0) as u32, size.height().ceil().max(1.0) as u32));
    let mut pixmap = tiny_skia::Pixmap::new(w, h)?;
    let transform = tiny_skia::Transform::from_scale(w as f32 / size.width(), h as f32 / size.height());
    resvg::render(&tree, transform, &mut pixmap.as_mut());
    let data = pixmap
        .pixels()
        .iter()
        .flat_map(|p| {
            let c = p.demultiply();
            [c.red(), c.green(), c.blue(), c.alpha()]
        })
        .collect();
    Raster::from_rgba(w, h, data)
}

#[cfg(not(feature = "svg"))]
pub fn rasterize_svg(_bytes: &[u8]) -> Option<Raster> {
    None
}

pub fn encode_png(raster: &Raster) -> Vec<u8> {
    let img = RgbaImage::from_raw(raster.width(), raster.height(), raster.as_rgba().to_vec())
        .expect("raster buffer matches dimensions");
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, Codec::Png).expect("PNG encoding into memory");
    out.into_inner()
}

pub fn decode_png(bytes: &[u8]) -> Option<Raster> {
    let img = image::load_from_memory_with_format(bytes, Codec::Png).ok()?.to_rgba8();
    let (w, h) = img.dimensions();
    Raster::from_rgba(w, h, img.into_raw())
}

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// One PNG per sprite (its current costume), in sprite order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostumeExport {
    pub sprite: String,
    pub file_name: String,
    pub png: Vec<u8>,
    pub placeholder: bool,
}

pub fn costume_exports(project: &Project, source: &dyn CostumeSource) -> Result<Vec<CostumeExport>, RenderError> {
    project
        .sprites
        .iter()
        .map(|sprite| {
            let costume = sprite.current_costume();
            let img = source.costume_image(project, costume)?;
            Ok(CostumeExport {
                sprite: sprite.name.clone(),
                file_name: costume_file_name(&sprite.name, &costume.name),
                png: encode_png(&img.raster),
                placeholder: img.placeholder,
            })
        })
        .collect()
}

/// Writes the current costume of each sprite to `out_dir`.
pub fn export_costumes(
    project: &Project,
    source: &dyn CostumeSource,
    out_dir: &Path,
) -> Result<Vec<(String, PathBuf)>, ExportError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| ExportError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut out = Vec::new();
    for e in costume_exports(project, source)? {
        let path = out_dir.join(&e.file_name);
        std::fs::write(&path, &e.png).map_err(io(&path))?;
        out.push((e.sprite, path));
    }
    Ok(out)
}
