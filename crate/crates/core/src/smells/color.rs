use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Co04Config, Evidence, Locator, Severity, StereotypeSmell};
use crate::framework::CriterionId;
use crate::ir::Project;
use crate::render::{CostumeSource, Raster};

/// Hue in degrees [0, 360), saturation and value in [0, 1].
pub fn hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let v = max / 255.0;
    let s = if max == 0.0 { 0.0 } else { d / max };
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / d)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    let h = if h < 0.0 { h + 360.0 } else { h };
    (h, s, v)
}

/// Pixel counts for one raster.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ColorStats {
    pub opaque: usize,
    pub pink: usize,
    pub dark: usize,
}

impl ColorStats {
    pub fn of(raster: &Raster, config: &Co04Config) -> Self {
        let mut s = ColorStats::default();
        for [r, g, b, a] in raster.pixels() {
            if a < config.min_alpha {
                continue;
            }
            s.opaque += 1;
            let (h, sat, v) = hsv([r, g, b]);
            if (config.pink_hue_min..=config.pink_hue_max).contains(&h) && sat > config.pink_saturation {
                s.pink += 1;
            }
            if v < config.dark_value {
                s.dark += 1;
            }
        }
        s
    }

    fn add(&mut self, o: ColorStats) {
        self.opaque += o.opaque;
        self.pink += o.pink;
        self.dark += o.dark;
    }
}

const MAX_EVIDENCE: usize = 3;

pub(super) fn detect(project: &Project, source: &dyn CostumeSource, config: &Co04Config) -> Vec<StereotypeSmell> {
    let mut total = ColorStats::default();
    let mut per_costume: Vec<(String, String, ColorStats)> = Vec::new();
    for t in project.targets() {
        if t.costumes.is_empty() {
            continue;
        }
        let costume = t.current_costume();
        let Ok(img) = source.costume_image(project, costume) else { continue };
        if img.placeholder {
            continue;
        }
        let stats = ColorStats::of(&img.raster, config);
        total.add(stats);
        per_costume.push((t.name.clone(), costume.name.clone(), stats));
    }
    if total.opaque == 0 {
        return Vec::new();
    }
    let n = total.opaque as f64;
    let pink = total.pink as f64 / n;
    let dark = total.dark as f64 / n;

    let mut evidence_for = |key: fn(&ColorStats) -> usize, label: &str| -> Vec<Evidence> {
        per_costume.sort_by(|a, b| key(&b.2).cmp(&key(&a.2)).then_with(|| (&a.0, &a.1).cmp(&(&b.0, &b.1))));
        per_costume
            .iter()
            .filter(|(_, _, s)| key(s) > 0)
            .take(MAX_EVIDENCE)
            .map(|(target, costume, s)| {
                Evidence::new(
                    target,
                    Some(Locator::Costume(costume.clone())),
                    format!("{label} pixels {:.0}% of costume `{costume}`", 100.0 * key(s) as f64 / s.opaque as f64),
                )
            })
            .collect()
    };

    let mut evidence = Vec::new();
    if pink > config.pink_fraction {
        evidence.push(Evidence::new(super::PROJECT_TARGET, None, format!("pink fraction {pink:.3}")));
        evidence.extend(evidence_for(|s| s.pink, "pink"));
    }
    if dark > config.dark_fraction {
        evidence.push(Evidence::new(super::PROJECT_TARGET, None, format!("dark fraction {dark:.3}")));
        evidence.extend(evidence_for(|s| s.dark, "dark"));
    }
    if evidence.is_empty() {
        return Vec::new();
    }
    Vec::from([StereotypeSmell {
        criterion: CriterionId::Co04,
        severity: Severity::Medium,
        evidence,
        detector: "palette".into(),
    }])
}
