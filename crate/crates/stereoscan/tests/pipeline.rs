mod common;

use std::path::Path;

use stereoscan::analyze::{analyze_file, analyze_path, AnalyzeOptions};
use stereoscan::archive::load_project;
use stereoscan::config::{FileConfig, Overrides, Settings};
use stereoscan::core::build::*;
use stereoscan::core::framework::CriterionId;
use stereoscan::core::rater::{HashMockProvider, PromptVariant};
use stereoscan::core::render::render_stage;
use stereoscan::images::{decode_png, export_costumes, ArchiveCostumes, SvgMode};
use stereoscan::report::{render_markdown, AnalysisReport, Summary};

fn settings() -> Settings {
    let flags = Overrides { workers: Some(4), ..Default::default() };
    Settings::resolve(&FileConfig::default(), &|_| None, &flags)
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn no_llm_report_has_heuristics_and_no_sheets() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write(dir.path(), "dress.sb3", &common::dress_up());
    let a = analyze_file(&path, &AnalyzeOptions::offline(settings())).unwrap();
    let r = &a.report;
    assert_eq!(r.project.id, "dress");
    assert_eq!(r.project.sprites, 2);
    assert!(r.ratings.is_empty());
    assert!(r.aggregates.is_empty());
    let ids: Vec<CriterionId> = r.smells.iter().map(|s| s.criterion).collect();
    assert!(ids.contains(&CriterionId::Pr01) && ids.contains(&CriterionId::Co04), "{ids:?}");
    assert_eq!(r.metadata.provider, "none");
    assert_eq!(r.metadata.model, None);
    assert_eq!(a.costumes.len(), 2);
    let md = render_markdown(r);
    assert!(md.contains("| CH01 |") || md.contains("### CH01"));
    assert!(md.contains("PR01"));
}

#[test]
fn clean_project_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write(dir.path(), "paint.sb3", &common::paint_box());
    let a = analyze_file(&path, &AnalyzeOptions::offline(settings())).unwrap();
    assert!(a.report.smells.is_empty());
    assert!(render_markdown(&a.report).contains("No heuristic smells detected."));
}

#[test]
fn report_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write(dir.path(), "dress.sb3", &common::dress_up());
    let mut opts = AnalyzeOptions::offline(settings());
    opts.provider = Some(&HashMockProvider);
    opts.provider_kind = "mock";
    opts.human = common::corpus_sheets().into_iter().take(6).map(|mut s| {
        s.project_id = "dress".into();
        s
    }).collect();
    let report = analyze_file(&path, &opts).unwrap().report;
    assert_eq!(report.ratings.len(), 2);
    let sources: Vec<&str> = report.aggregates.iter().map(|a| a.source.as_str()).collect();
    assert_eq!(sources, ["human", "model:plain", "model:framework"]);
    let json = report.to_json();
    let back: AnalysisReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_json(), json);
}

#[test]
fn report_validates_against_schema() {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, p) in [("dress", common::dress_up()), ("paint", common::paint_box()), ("p03", common::corpus_project(3))] {
        let path = common::write(dir.path(), &format!("{name}.sb3"), &p);
        let mut opts = AnalyzeOptions::offline(settings());
        opts.provider = Some(&HashMockProvider);
        opts.provider_kind = "mock";
        opts.human = common::corpus_sheets();
        let report = analyze_file(&path, &opts).unwrap().report;
        let value = serde_json::to_value(&report).unwrap();
        let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
    let mut broken = serde_json::to_value(
        analyze_file(&common::write(dir.path(), "x.sb3", &common::paint_box()), &AnalyzeOptions::offline(settings()))
            .unwrap()
            .report,
    )
    .unwrap();
    broken.as_object_mut().unwrap().remove("smells");
    assert!(!validator.is_valid(&broken));
}

#[test]
fn corpus_summary_counts_flagged_projects() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = common::write_corpus(dir.path());
    let mut opts = AnalyzeOptions::offline(settings());
    opts.human = stereoscan::analyze::load_sheets(&ratings).unwrap();
    let outcome = analyze_path(dir.path(), &opts).unwrap();
    let s = &outcome.summary;
    assert_eq!((s.n_projects, s.n_ok, s.n_errors), (common::CORPUS_SIZE, common::CORPUS_SIZE, 0));
    let human = s.flagged.iter().find(|f| f.source == "human").unwrap();
    assert_eq!((human.flagged, human.rated), (common::CORPUS_FLAGGED, common::CORPUS_SIZE));
    assert!((human.percent - 19.18).abs() < 0.01, "{}", human.percent);
    let ids: Vec<&str> = s.projects.iter().map(|p| p.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
}

#[test]
fn corrupt_file_is_recorded_and_batch_continues() {
    let dir = tempfile::tempdir().unwrap();
    common::write(dir.path(), "a.sb3", &common::paint_box());
    std::fs::write(dir.path().join("b.sb3"), b"not a zip at all").unwrap();
    common::write(dir.path(), "c.sb3", &common::dress_up());
    let out = dir.path().join("out");
    let mut opts = AnalyzeOptions::offline(settings());
    opts.out_dir = Some(out.clone());
    let outcome = analyze_path(dir.path(), &opts).unwrap();
    let s = &outcome.summary;
    assert_eq!((s.n_projects, s.n_ok, s.n_errors), (3, 2, 1));
    assert!(s.errors[0].path.ends_with("b.sb3"));
    for f in ["a.report.json", "a.report.md", "a.stage.png", "c.report.json", "summary.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let summary: Summary = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(&summary, s);

    opts.strict = true;
    opts.settings.workers = 1;
    opts.out_dir = None;
    let strict = analyze_path(dir.path(), &opts).unwrap();
    assert_eq!(strict.summary.n_errors, 1);
    assert_eq!(strict.skipped, 1);
}

#[test]
fn batch_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    std::fs::create_dir(&input).unwrap();
    let ratings = common::write_corpus(&input);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let mut opts = AnalyzeOptions::offline(settings());
        opts.provider = Some(&HashMockProvider);
        opts.provider_kind = "mock";
        opts.human = stereoscan::analyze::load_sheets(&ratings).unwrap();
        opts.out_dir = Some(out.clone());
        analyze_path(&input, &opts).unwrap();
        read_tree(&out)
    };
    let a = run("one");
    let b = run("two");
    assert!(a.len() > 4 * common::CORPUS_SIZE);
    assert_eq!(a, b);
}

#[test]
fn mock_ratings_fill_both_variants() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write(dir.path(), "p.sb3", &common::corpus_project(5));
    let mut opts = AnalyzeOptions::offline(settings());
    opts.provider = Some(&HashMockProvider);
    opts.provider_kind = "mock";
    let r = analyze_file(&path, &opts).unwrap().report;
    let plain = r.ratings.iter().find(|s| s.variant == PromptVariant::Plain).unwrap();
    let fw = r.ratings.iter().find(|s| s.variant == PromptVariant::WithFramework).unwrap();
    assert_eq!(plain.verdicts.len(), 5);
    assert!(plain.sheets.is_empty());
    assert_eq!(fw.sheets.len(), 5);
    assert_eq!(r.metadata.repeats, Some(5));
    assert_eq!(r.metadata.rated_at_unix, None);
}

#[test]
fn three_sprites_give_four_images() {
    let mut p = common::base();
    for (name, hex) in [("A", "ff0000"), ("B", "00ff00"), ("C", "0000ff")] {
        p.sprite(name).costume(common::png_costume("c", hex, 6, 6));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = common::write(dir.path(), "three.sb3", &p);
    let project = load_project(&path).unwrap();
    let request = stereoscan::core::rater::build_request(
        &project,
        "",
        PromptVariant::Plain,
        stereoscan::images::costume_exports(&project, &ArchiveCostumes::default())
            .unwrap()
            .into_iter()
            .map(|c| stereoscan::core::rater::ImagePart { label: c.file_name, png: c.png })
            .chain([stereoscan::core::rater::ImagePart { label: "stage.png".into(), png: vec![] }])
            .collect(),
        "m",
        None,
    );
    assert_eq!(request.images.len(), 4);
    let a = analyze_file(&path, &AnalyzeOptions::offline(settings())).unwrap();
    assert_eq!(a.costumes.len() + 1, 4);
}

#[test]
fn exported_costume_names_are_sanitized() {
    let mut p = common::base();
    p.sprite("a/b").costume(common::png_costume("x", "ff0000", 4, 4));
    p.sprite("Cat").costume(common::png_costume("walk 1", "00ff00", 4, 4));
    let dir = tempfile::tempdir().unwrap();
    let path = common::write(dir.path(), "n.sb3", &p);
    let project = load_project(&path).unwrap();
    let out = export_costumes(&project, &ArchiveCostumes::default(), &dir.path().join("costumes")).unwrap();
    assert_eq!(out.len(), 2);
    for (_, file) in &out {
        assert!(file.is_file());
        assert_eq!(file.parent().unwrap(), dir.path().join("costumes"));
        assert!(!file.file_name().unwrap().to_string_lossy().contains('/'));
    }
    let img = decode_png(&std::fs::read(&out[0].1).unwrap()).unwrap();
    assert_eq!((img.width(), img.height()), (4, 4));
}

fn svg_project() -> ProjectBuilder {
    let mut p = common::base();
    let svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"30\" height=\"20\" viewBox=\"0 0 30 20\">\
               <rect width=\"30\" height=\"20\" fill=\"#ff0000\"/></svg>";
    p.sprite("Box").costume(CostumeAsset::svg("box", svg.to_string()));
    p
}

#[test]
fn svg_costumes_use_intrinsic_size() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write(dir.path(), "svg.sb3", &svg_project());
    let project = load_project(&path).unwrap();
    for mode in [SvgMode::Rasterize, SvgMode::Placeholder] {
        let source = ArchiveCostumes { svg: mode, allow_placeholder: true };
        let c = stereoscan::images::costume_exports(&project, &source).unwrap();
        let img = decode_png(&c[0].png).unwrap();
        assert_eq!((img.width(), img.height()), (30, 20), "{mode:?}");
        assert_eq!(c[0].placeholder, mode == SvgMode::Placeholder || cfg!(not(feature = "svg")));
    }
    if cfg!(feature = "svg") {
        let stage = render_stage(&project, &ArchiveCostumes::default()).unwrap();
        assert_eq!(stage.raster.pixel(240, 180), [255, 0, 0, 255]);
        assert!(stage.placeholders.is_empty());
    }
    let strict = ArchiveCostumes { svg: SvgMode::Placeholder, allow_placeholder: false };
    assert!(render_stage(&project, &strict).is_err());
}

#[test]
fn placeholders_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write(dir.path(), "svg.sb3", &svg_project());
    let mut opts = AnalyzeOptions::offline(settings());
    opts.costumes = ArchiveCostumes { svg: SvgMode::Placeholder, allow_placeholder: true };
    let r = analyze_file(&path, &opts).unwrap().report;
    assert_eq!(r.rendering.placeholders.len(), 1);
    assert!(render_markdown(&r).contains("Placeholders"));
}

#[test]
fn description_sidecar_is_scanned() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write(dir.path(), "paint.sb3", &common::paint_box());
    std::fs::write(dir.path().join("paint.description.txt"), "Blast the aliens and kill them all\n").unwrap();
    let r = analyze_file(&path, &AnalyzeOptions::offline(settings())).unwrap().report;
    assert!(r.smells.iter().any(|s| s.criterion == CriterionId::Co02));
}
