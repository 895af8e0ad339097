use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::ReportRecord;
use crate::error::Result;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes `report.json`, one ratio table (`<series>_table.csv`) and one
/// plot file (`<series>_ratio.dat`, `N R` per line) per series, the
/// pointwise functional for `f = δ₀` (`<series>_pointwise.csv` with a JSON
/// summary) when available, `decay.dat`, and each certificate as JSON.
///
/// Returns the paths written.
pub fn write_outputs(rep: &ReportRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut note = |name: String| written.push(dir.join(name));

    fs::write(dir.join("report.json"), rep.to_json() + "\n")?;
    note("report.json".into());

    for (si, s) in rep.series.iter().enumerate() {
        let name = format!("{}_table.csv", s.label);
        let mut w = create(dir, &name)?;
        writeln!(w, "n,f,ratio")?;
        for (li, row) in s.table.iter().enumerate() {
            for (fi, label) in rep.test_functions.iter().enumerate() {
                writeln!(w, "{},{label},{:e}", row.n, s.ratios[fi][li])?;
            }
        }
        w.flush()?;
        note(name);

        let name = format!("{}_ratio.dat", s.label);
        let mut w = create(dir, &name)?;
        for (li, row) in s.table.iter().enumerate() {
            writeln!(w, "{} {:e}", row.n, s.ratios[0][li])?;
        }
        w.flush()?;
        note(name);

        if let Some(Some(p)) = rep.pointwise.get(si) {
            let name = format!("{}_pointwise.csv", s.label);
            p.save_csv(&dir.join(&name))?;
            note(name);
            let name = format!("{}_summary.json", s.label);
            fs::write(
                dir.join(&name),
                serde_json::to_string_pretty(&p.summary(&s.functional))? + "\n",
            )?;
            note(name);
        }
    }

    if let Some(decay) = &rep.decay {
        let mut w = create(dir, "decay.dat")?;
        for d in decay {
            writeln!(w, "{} {:e}", d.n, d.value)?;
        }
        w.flush()?;
        note("decay.dat".into());
    }

    for c in &rep.certificates {
        let name = format!("certificate_{}.json", c.label);
        fs::write(
            dir.join(&name),
            serde_json::to_string_pretty(&c.report)? + "\n",
        )?;
        note(name);
    }
    Ok(written)
}
