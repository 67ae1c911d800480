//! File formats shared by the library and the CLI.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a float with 15 significant digits in scientific notation.
pub fn format_number(x: f64) -> String {
    format!("{x:.14e}")
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// A paired series read from CSV (`timestamp` optional, `x` hidden, `y` observed).
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    pub timestamps: Option<Vec<String>>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PairedSeries {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

pub fn read_paired_csv<R: std::io::Read>(input: R) -> Result<PairedSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
    };
    let (Some(xi), Some(yi)) = (find("x"), find("y")) else {
        return Err(Error::InvalidArgument(
            "input CSV must have a header with columns x and y".into(),
        ));
    };
    let ti = find("timestamp");
    let mut out = PairedSeries {
        timestamps: ti.map(|_| Vec::new()),
        x: Vec::new(),
        y: Vec::new(),
    };
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |col: usize, name: &str| -> Result<f64> {
            let raw = rec.get(col).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "row {}: column {name} has non-numeric value {raw:?}",
                        row + 2
                    ))
                })
        };
        out.x.push(parse(xi, "x")?);
        out.y.push(parse(yi, "y")?);
        if let (Some(ts), Some(ti)) = (out.timestamps.as_mut(), ti) {
            ts.push(rec.get(ti).unwrap_or("").to_string());
        }
    }
    Ok(out)
}

pub fn read_paired_csv_file(path: &Path) -> Result<PairedSeries> {
    read_paired_csv(fs::File::open(path)?)
}
