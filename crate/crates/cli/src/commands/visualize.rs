use std::fmt::Write as _;
use std::path::PathBuf;

use jqf_core::TableFile;

use crate::corpus;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct VisualizeParams {
    pub table: PathBuf,
    pub baseline: PathBuf,
    pub html: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDiff {
    pub table: TableFile,
    pub baseline: TableFile,
    /// `table - baseline` per natural-order entry.
    pub delta: [i16; 64],
}

impl TableDiff {
    pub fn new(table: TableFile, baseline: TableFile) -> Self {
        let mut delta = [0i16; 64];
        for (i, d) in delta.iter_mut().enumerate() {
            *d = i16::from(table.table.get(i)) - i16::from(baseline.table.get(i));
        }
        Self { table, baseline, delta }
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let up = self.delta.iter().filter(|d| **d > 0).count();
        let down = self.delta.iter().filter(|d| **d < 0).count();
        (up, down, 64 - up - down)
    }

    /// 8x8 grid; `+` marks entries above the baseline and `-` entries below it.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "table Q={} vs baseline Q={}  (+ coarser, - finer)\n",
            self.table.quality, self.baseline.quality
        );
        for row in 0..8 {
            let cells: Vec<String> = (0..8)
                .map(|c| {
                    let i = row * 8 + c;
                    let mark = match self.delta[i].signum() {
                        1 => '+',
                        -1 => '-',
                        _ => ' ',
                    };
                    format!("{:>3}{mark}", self.table.table.get(i))
                })
                .collect();
            s.push_str(cells.join(" ").trim_end());
            s.push('\n');
        }
        let (up, down, same) = self.counts();
        let _ = writeln!(s, "increased {up}, decreased {down}, unchanged {same}");
        s
    }

    /// Self-contained page: red cells increased, blue cells decreased.
    pub fn to_html(&self) -> String {
        let max = self.delta.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0).max(1) as f64;
        let mut s = String::from(
            "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Quantization table difference</title>\n\
             <style>body{font-family:monospace}td{width:3.2em;height:2.2em;text-align:center;border:1px solid #ccc}\
             small{display:block;color:#444}</style></head><body>\n",
        );
        let _ = writeln!(
            s,
            "<h1>Table Q={} vs baseline Q={}</h1>\n<table>",
            self.table.quality, self.baseline.quality
        );
        for row in 0..8 {
            s.push_str("<tr>");
            for c in 0..8 {
                let i = row * 8 + c;
                let d = self.delta[i];
                let a = f64::from(d.unsigned_abs()) / max * 0.8;
                let bg = match d.signum() {
                    1 => format!("rgba(220,30,30,{a:.3})"),
                    -1 => format!("rgba(30,60,220,{a:.3})"),
                    _ => "#fff".to_string(),
                };
                let _ = write!(
                    s,
                    "<td style=\"background:{bg}\">{}<small>{d:+}</small></td>",
                    self.table.table.get(i)
                );
            }
            s.push_str("</tr>\n");
        }
        let (up, down, same) = self.counts();
        let _ = writeln!(
            s,
            "</table>\n<p>increased {up}, decreased {down}, unchanged {same}</p>\n</body></html>"
        );
        s
    }
}

pub fn run(p: &VisualizeParams) -> Result<TableDiff> {
    let table = TableFile::parse(&corpus::read_to_string(&p.table)?)?;
    let baseline = TableFile::parse(&corpus::read_to_string(&p.baseline)?)?;
    let diff = TableDiff::new(table, baseline);
    if let Some(path) = &p.html {
        corpus::write(path, diff.to_html())?;
    }
    Ok(diff)
}
