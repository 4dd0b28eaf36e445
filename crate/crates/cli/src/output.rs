//! Artifact writing: stage all three files, then rename into place so a
//! failed run never leaves a partial output directory behind.

use std::fs;
use std::io;
use std::path::Path;

pub struct Artifacts {
    pub report_json: String,
    pub data_csv: String,
    pub plot_script: String,
}

pub fn commit(out_dir: &Path, artifacts: &Artifacts) -> io::Result<()> {
    fs::create_dir_all(out_dir)?;
    let stage = out_dir.join(".stage");
    if stage.exists() {
        fs::remove_dir_all(&stage)?;
    }
    fs::create_dir_all(&stage)?;
    let files = [
        ("report.json", &artifacts.report_json),
        ("data.csv", &artifacts.data_csv),
        ("plot.script", &artifacts.plot_script),
    ];
    for (name, content) in &files {
        fs::write(stage.join(name), content)?;
    }
    // all writes succeeded; commit point
    for (name, _) in &files {
        fs::rename(stage.join(name), out_dir.join(name))?;
    }
    fs::remove_dir_all(&stage)?;
    Ok(())
}
