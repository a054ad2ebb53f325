mod common;

use std::fs;
use std::process::Command;

use common::*;
use lineart::curation::{read_manifest, EntryStatus};
use lineart::{GrayImage, RgbImage};
use serde_json::Value;

fn cli() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lineart"));
    cmd.env_remove("LINEART_CONFIG").env("RUST_LOG", "warn");
    cmd
}

#[test]
fn curate_writes_manifest_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let drawings = dir.path().join("drawings");
    fs::create_dir(&drawings).unwrap();
    outline((40, 40), 6, 6, 33, 33, 1).save(drawings.join("a.png")).unwrap();
    outline((40, 40), 10, 4, 30, 35, 2)
        .save(drawings.join("b.png"))
        .unwrap();
    GrayImage::filled(40, 40, 1.0).save(drawings.join("blank.png")).unwrap();
    fs::write(dir.path().join("scores.csv"), "id,score\na,0.26\nb,0.5\nblank,0.27\n").unwrap();
    let out = dir.path().join("curated");
    let status = cli()
        .arg("curate")
        .arg(&drawings)
        .args(["--rule", "bronze", "--target-size", "64", "--scores"])
        .arg(dir.path().join("scores.csv"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let entries = read_manifest(&out.join("manifest.jsonl")).unwrap();
    let statuses: Vec<_> = entries.iter().map(|e| e.status).collect();
    assert_eq!(
        statuses,
        [EntryStatus::Accepted, EntryStatus::RejectedHigh, EntryStatus::Failed]
    );
    let image = GrayImage::load(out.join(entries[0].output_path.as_ref().unwrap())).unwrap();
    assert_eq!(image.dims(), (64, 64));
    let summary: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["total"], 3);
    assert_eq!(summary["rule"]["dataset_name"], "bronze");

    let bad = cli()
        .arg("curate")
        .arg(&drawings)
        .args(["--rule", "0.9,0.1", "--proxy", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(3));
}

#[test]
fn eval_reports_every_metric() {
    let dir = tempfile::tempdir().unwrap();
    let condition = outline((32, 32), 6, 6, 25, 25, 2).inverted();
    let luma = fixture_photo(5, 48, 48);
    let photo = RgbImage::from_fn(48, 48, |x, y| [luma.get(x, y), 0.5, 1.0 - luma.get(x, y)]);
    let generated = RgbImage::from_fn(32, 32, |x, y| {
        let v = 1.0 - condition.get(x, y);
        [v, v * 0.5 + 0.25, 0.8]
    });
    condition.save(dir.path().join("condition.png")).unwrap();
    photo.save(dir.path().join("photo.png")).unwrap();
    generated.save(dir.path().join("generated.png")).unwrap();
    fs::write(
        dir.path().join("pairs.csv"),
        "id,generated,condition,appearance\nfirst,generated.png,condition.png,photo.png\nself,photo.png,condition.png,photo.png\n",
    )
    .unwrap();
    let out = dir.path().join("eval");
    let status = cli()
        .arg("eval")
        .arg("--pairs")
        .arg(dir.path().join("pairs.csv"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: Value = serde_json::from_slice(&fs::read(out.join("first.json")).unwrap()).unwrap();
    for key in ["ssim", "psnr_db", "chamfer", "glcm_distance", "ch_loss"] {
        assert!(report[key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert_eq!(report["parameters"]["edge_operator"], "sobel");
    let same: Value = serde_json::from_slice(&fs::read(out.join("self.json")).unwrap()).unwrap();
    assert_eq!(same["ch_loss"], 0.0);
    assert_eq!(same["glcm_distance"], 0.0);
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 21);

    let missing = cli()
        .args(["eval", "--generated"])
        .arg(dir.path().join("nope.png"))
        .arg("--condition")
        .arg(dir.path().join("condition.png"))
        .arg("--appearance")
        .arg(dir.path().join("photo.png"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(3));
}
