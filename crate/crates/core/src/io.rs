//! CSV datasets and report files.
//!
//! `episodes.csv` columns: `level_id, episode_id, cleared_goals_frac,
//! moves_used, moves_budget_human, passed_with_human_budget (0/1),
//! moves_left_on_pass` (empty when the episode failed).
//!
//! `levels.csv` columns: `level_id, human_pass_rate, human_churn_rate`.
//!
//! Both files are UTF-8 with a header row and `.` as the decimal separator.
//! Row numbers in errors count the header as row 1.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::ser::Serialize;

use crate::difficulty::{aggregate_by_level, EpisodeLog, LevelFeatures};
use crate::error::{Error, Result};
use crate::series::{LevelRecord, LevelSeries, SeriesRole};

pub const EPISODE_COLUMNS: [&str; 7] = [
    "level_id",
    "episode_id",
    "cleared_goals_frac",
    "moves_used",
    "moves_budget_human",
    "passed_with_human_budget",
    "moves_left_on_pass",
];

pub const LEVEL_COLUMNS: [&str; 3] = ["level_id", "human_pass_rate", "human_churn_rate"];

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

fn open_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn check_header(reader: &mut csv::Reader<fs::File>, path: &Path, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| Error::Schema {
        file: file_label(path),
        row: 1,
        column: String::new(),
        message: e.to_string(),
    })?;
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        let column = got
            .iter()
            .zip(expected)
            .find(|(g, e)| g != e)
            .map(|(g, _)| g.to_string())
            .unwrap_or_else(|| format!("<{} columns>", got.len()));
        return Err(Error::Schema {
            file: file_label(path),
            row: 1,
            column,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    Ok(())
}

struct RowCtx<'a> {
    file: &'a str,
    row: u64,
}

impl RowCtx<'_> {
    fn err(&self, column: &str, message: impl Into<String>) -> Error {
        Error::Schema {
            file: self.file.to_string(),
            row: self.row,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(
        &self,
        record: &csv::StringRecord,
        idx: usize,
        name: &str,
    ) -> Result<T> {
        let raw = record
            .get(idx)
            .ok_or_else(|| self.err(name, "missing field"))?;
        raw.parse::<T>()
            .map_err(|_| self.err(name, format!("cannot parse `{raw}`")))
    }

    fn rate(&self, record: &csv::StringRecord, idx: usize, name: &str) -> Result<f64> {
        let v: f64 = self.parse(record, idx, name)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(self.err(name, format!("{v} outside [0, 1]")));
        }
        Ok(v)
    }
}

fn records<'a>(
    reader: &'a mut csv::Reader<fs::File>,
    path: &Path,
) -> impl Iterator<Item = Result<(u64, csv::StringRecord)>> + 'a {
    let label = file_label(path);
    reader.records().enumerate().map(move |(i, r)| {
        let row = i as u64 + 2;
        r.map(|rec| (row, rec)).map_err(|e| Error::Schema {
            file: label.clone(),
            row,
            column: String::new(),
            message: e.to_string(),
        })
    })
}

pub fn read_levels(path: &Path) -> Result<LevelSeries> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &LEVEL_COLUMNS)?;
    let label = file_label(path);
    let mut levels = Vec::new();
    for item in records(&mut reader, path).collect::<Vec<_>>() {
        let (row, rec) = item?;
        let ctx = RowCtx { file: &label, row };
        let level_id: u32 = ctx.parse(&rec, 0, "level_id")?;
        if level_id == 0 {
            return Err(ctx.err("level_id", "level ids start at 1"));
        }
        if let Some(prev) = levels.last().map(|r: &LevelRecord| r.level_id) {
            if level_id <= prev {
                return Err(ctx.err("level_id", "level ids must be strictly increasing"));
            }
        }
        levels.push(LevelRecord {
            level_id,
            pass_rate: ctx.rate(&rec, 1, "human_pass_rate")?,
            churn_rate: ctx.rate(&rec, 2, "human_churn_rate")?,
        });
    }
    if levels.is_empty() {
        return Err(Error::Schema {
            file: label,
            row: 1,
            column: String::new(),
            message: "no level rows".into(),
        });
    }
    LevelSeries::new(SeriesRole::Truth, levels)
}

pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeLog>> {
    let mut reader = open_reader(path)?;
    check_header(&mut reader, path, &EPISODE_COLUMNS)?;
    let label = file_label(path);
    let mut out = Vec::new();
    for item in records(&mut reader, path).collect::<Vec<_>>() {
        let (row, rec) = item?;
        let ctx = RowCtx { file: &label, row };
        let level_id: u32 = ctx.parse(&rec, 0, "level_id")?;
        if level_id == 0 {
            return Err(ctx.err("level_id", "level ids start at 1"));
        }
        let passed = match rec.get(5) {
            Some("1") => true,
            Some("0") => false,
            other => {
                return Err(ctx.err(
                    "passed_with_human_budget",
                    format!("expected 0 or 1, got `{}`", other.unwrap_or("")),
                ))
            }
        };
        let moves_left = match rec.get(6) {
            None | Some("") => None,
            Some(_) => Some(ctx.parse::<u32>(&rec, 6, "moves_left_on_pass")?),
        };
        if passed != moves_left.is_some() {
            return Err(ctx.err(
                "moves_left_on_pass",
                "must be present exactly when passed_with_human_budget is 1",
            ));
        }
        out.push(EpisodeLog {
            level_id,
            episode_id: ctx.parse(&rec, 1, "episode_id")?,
            cleared_goals_frac: ctx.rate(&rec, 2, "cleared_goals_frac")?,
            moves_used: ctx.parse(&rec, 3, "moves_used")?,
            moves_budget_human: ctx.parse(&rec, 4, "moves_budget_human")?,
            passed_with_human_budget: passed,
            moves_left_on_pass: moves_left,
        });
    }
    Ok(out)
}

/// Validated datasets with per-level features aligned to the truth series.
#[derive(Debug, Clone)]
pub struct Datasets {
    pub truth: LevelSeries,
    pub features: Vec<LevelFeatures>,
}

/// Loads both CSVs and checks that they cover the same levels.
pub fn load_datasets(episodes_path: &Path, levels_path: &Path) -> Result<Datasets> {
    let truth = read_levels(levels_path)?;
    let episodes = read_episodes(episodes_path)?;
    let grouped = aggregate_by_level(&episodes)?;
    let episode_ids: BTreeSet<u32> = grouped.iter().map(|(id, _)| *id).collect();
    let truth_ids: BTreeSet<u32> = truth.level_ids().into_iter().collect();
    if episode_ids != truth_ids {
        let only_eps: Vec<_> = episode_ids.difference(&truth_ids).take(5).collect();
        let only_truth: Vec<_> = truth_ids.difference(&episode_ids).take(5).collect();
        return Err(Error::LevelMismatch(format!(
            "levels only in episodes: {only_eps:?}; levels only in truth: {only_truth:?}"
        )));
    }
    Ok(Datasets {
        truth,
        features: grouped.into_iter().map(|(_, f)| f).collect(),
    })
}

/// 17 significant digits in scientific notation.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of negative zero out of reports
        return "0.0000000000000000e0".to_string();
    }
    format!("{v:.16e}")
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_levels(path: &Path, series: &LevelSeries) -> Result<()> {
    let mut out = String::from("level_id,human_pass_rate,human_churn_rate\n");
    for r in &series.levels {
        out.push_str(&format!(
            "{},{},{}\n",
            r.level_id, r.pass_rate, r.churn_rate
        ));
    }
    write_atomic(path, out.as_bytes())
}

pub fn write_episodes(path: &Path, episodes: &[EpisodeLog]) -> Result<()> {
    let mut out = EPISODE_COLUMNS.join(",");
    out.push('\n');
    for e in episodes {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.level_id,
            e.episode_id,
            e.cleared_goals_frac,
            e.moves_used,
            e.moves_budget_human,
            u8::from(e.passed_with_human_budget),
            e.moves_left_on_pass
                .map(|m| m.to_string())
                .unwrap_or_default()
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Writes a CSV whose float cells use [`fmt_num`].
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(Cell::render).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fmt_num(*v),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
        }
    }
}

/// JSON formatter writing every float with 17 significant digits.
struct SigDigits;

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        if !value.is_finite() {
            return writer.write_all(b"null");
        }
        writer.write_all(fmt_num(value).as_bytes())
    }

    fn write_f32<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f32,
    ) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` as JSON with 17-significant-digit floats.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}
