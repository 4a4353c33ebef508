//! CSV matrices and problem-instance directories.
//!
//! A matrix file starts with a `rows,cols` line holding the two dimensions,
//! followed by one comma-separated line per row. Values are written in the
//! shortest form that parses back to the identical `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problems::{BlurSpec, ProblemInstance, GENERATOR_VERSION};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn format_matrix_csv(k: &DenseMatrix) -> String {
    let mut out = format!("{},{}\n", k.rows(), k.cols());
    for i in 0..k.rows() {
        let row: Vec<String> = k.row(i).iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses matrix CSV text; `path` only labels errors.
pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<DenseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let dims: Vec<&str> = header.split(',').map(str::trim).collect();
    let parse_dim = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(path, hline, format!("expected `rows,cols` header, found '{header}'")))
    };
    if dims.len() != 2 {
        return Err(parse_err(path, hline, format!("expected `rows,cols` header, found '{header}'")));
    }
    let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    if rows == 0 || cols == 0 {
        return Err(parse_err(path, hline, "dimensions must be positive"));
    }
    let mut data = Vec::with_capacity(rows.saturating_mul(cols).min(1 << 26));
    let mut seen = 0;
    for (lineno, line) in lines {
        seen += 1;
        if seen > rows {
            return Err(parse_err(path, lineno, format!("more than {rows} data rows")));
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("invalid number '{}'", field.trim())))?;
            if !v.is_finite() {
                return Err(parse_err(path, lineno, "non-finite value"));
            }
            data.push(v);
        }
        if data.len() - before != cols {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {cols} values, found {}", data.len() - before),
            ));
        }
    }
    if seen != rows {
        return Err(parse_err(path, hline, format!("expected {rows} data rows, found {seen}")));
    }
    DenseMatrix::new(rows, cols, data)
}

pub fn write_matrix_csv(path: &Path, k: &DenseMatrix) -> Result<()> {
    fs::write(path, format_matrix_csv(k)).map_err(io_err(path))
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_matrix_csv(&text, path)
}

/// Writes a vector as an `n x 1` matrix.
pub fn write_vector_csv(path: &Path, x: &[f64]) -> Result<()> {
    let k = DenseMatrix::new(x.len(), 1, x.to_vec())?;
    write_matrix_csv(path, &k)
}

/// Reads an `n x 1` or `1 x n` matrix file as a vector.
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    let k = read_matrix_csv(path)?;
    if k.cols() != 1 && k.rows() != 1 {
        return Err(parse_err(
            path,
            1,
            format!("expected a column or row vector, found {}x{}", k.rows(), k.cols()),
        ));
    }
    Ok(k.as_slice().to_vec())
}

/// Contents of `meta.json` in an instance directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub m: usize,
    pub n: usize,
    pub s: usize,
    /// `null` for noiseless data.
    pub snr_db: Option<f64>,
    pub delta: f64,
    pub seed: u64,
    pub generator_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blur: Option<BlurSpec>,
}

pub const INSTANCE_FILES: [&str; 5] = ["K.csv", "x_true.csv", "y_clean.csv", "y_noisy.csv", "meta.json"];

pub fn save_instance(dir: &Path, inst: &ProblemInstance) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_matrix_csv(&dir.join("K.csv"), &inst.k)?;
    write_vector_csv(&dir.join("x_true.csv"), &inst.x_true)?;
    write_vector_csv(&dir.join("y_clean.csv"), &inst.y_clean)?;
    write_vector_csv(&dir.join("y_noisy.csv"), &inst.y_noisy)?;
    let meta = InstanceMeta {
        m: inst.m(),
        n: inst.n(),
        s: inst.s,
        snr_db: inst.snr_db.is_finite().then_some(inst.snr_db),
        delta: inst.delta,
        seed: inst.seed,
        generator_version: GENERATOR_VERSION.to_string(),
        blur: inst.blur,
    };
    let path = dir.join("meta.json");
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&path, json + "\n").map_err(io_err(&path))
}

pub fn load_instance(dir: &Path) -> Result<ProblemInstance> {
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: InstanceMeta = serde_json::from_str(&text)
        .map_err(|e| parse_err(&meta_path, e.line(), e.to_string()))?;
    let k = read_matrix_csv(&dir.join("K.csv"))?;
    let x_true = read_vector_csv(&dir.join("x_true.csv"))?;
    let y_clean = read_vector_csv(&dir.join("y_clean.csv"))?;
    let y_noisy = read_vector_csv(&dir.join("y_noisy.csv"))?;
    let check = |name: &str, found: usize, expected: usize| -> Result<()> {
        if found == expected {
            Ok(())
        } else {
            Err(parse_err(
                &dir.join(name),
                1,
                format!("length {found} does not match operator dimension {expected}"),
            ))
        }
    };
    check("x_true.csv", x_true.len(), k.cols())?;
    check("y_clean.csv", y_clean.len(), k.rows())?;
    check("y_noisy.csv", y_noisy.len(), k.rows())?;
    if (meta.m, meta.n) != (k.rows(), k.cols()) {
        return Err(parse_err(&meta_path, 1, "m/n disagree with K.csv"));
    }
    Ok(ProblemInstance {
        k,
        x_true,
        y_clean,
        y_noisy,
        delta: meta.delta,
        snr_db: meta.snr_db.unwrap_or(f64::INFINITY),
        seed: meta.seed,
        s: meta.s,
        blur: meta.blur,
    })
}

/// Paths of the instance files under `dir`.
pub fn instance_paths(dir: &Path) -> Vec<PathBuf> {
    INSTANCE_FILES.iter().map(|f| dir.join(f)).collect()
}
