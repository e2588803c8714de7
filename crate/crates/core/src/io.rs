//! CSV and JSON file formats, plus small SVG plots for inspection.
//!
//! Contour CSV: `utterance_id,iter,tau,phi`. Raw track CSV:
//! `utterance_id,time_s,f0_hz`. Numbers are written in shortest
//! round-trip form, so reading a written file reproduces the values exactly.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::chain::ChainRun;
use crate::contour::{Contour, ContourEnsemble, RawTrack};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const CONTOUR_HEADER: [&str; 4] = ["utterance_id", "iter", "tau", "phi"];
const TRACK_HEADER: [&str; 3] = ["utterance_id", "time_s", "f0_hz"];

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header {:?}, found {:?}",
                expected.join(","),
                got.join(",")
            ),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing field {name}"),
    })?;
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("malformed {name} {raw:?}"),
    })
}

fn finite<T: Scalar>(v: T, rec: &csv::StringRecord, name: &str) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse {
            line: rec.position().map_or(0, |p| p.line()),
            message: format!("{name} must be finite"),
        })
    }
}

/// Groups rows by utterance id, keeping first-appearance order.
struct Groups<V> {
    ids: Vec<String>,
    rows: Vec<Vec<V>>,
}

impl<V> Groups<V> {
    fn new() -> Self {
        Groups {
            ids: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, id: &str, v: V) {
        match self.ids.iter().position(|x| x == id) {
            Some(i) => self.rows[i].push(v),
            None => {
                self.ids.push(id.to_string());
                self.rows.push(vec![v]);
            }
        }
    }
}

pub fn read_tracks<T: Scalar>(input: impl Read) -> Result<Vec<RawTrack<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    check_header(&mut rdr, &TRACK_HEADER)?;
    let mut groups = Groups::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id: String = field(&rec, 0, "utterance_id")?;
        let t = finite(field::<T>(&rec, 1, "time_s")?, &rec, "time_s")?;
        let f = finite(field::<T>(&rec, 2, "f0_hz")?, &rec, "f0_hz")?;
        groups.push(&id, (t, f));
    }
    groups
        .ids
        .into_iter()
        .zip(groups.rows)
        .map(|(id, samples)| RawTrack::new(id, samples))
        .collect()
}

/// Reads one iteration's contours. All rows must carry the same `iter`.
pub fn read_ensemble<T: Scalar>(input: impl Read) -> Result<ContourEnsemble<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    check_header(&mut rdr, &CONTOUR_HEADER)?;
    let mut groups = Groups::new();
    let mut iteration: Option<usize> = None;
    for rec in rdr.records() {
        let rec = rec?;
        let id: String = field(&rec, 0, "utterance_id")?;
        let it: usize = field(&rec, 1, "iter")?;
        match iteration {
            None => iteration = Some(it),
            Some(prev) if prev != it => {
                return Err(Error::Parse {
                    line: rec.position().map_or(0, |p| p.line()),
                    message: format!("iter {it} differs from {prev} earlier in the file"),
                })
            }
            _ => {}
        }
        let tau = finite(field::<T>(&rec, 2, "tau")?, &rec, "tau")?;
        let phi = finite(field::<T>(&rec, 3, "phi")?, &rec, "phi")?;
        groups.push(&id, (tau, phi));
    }
    let contours = groups
        .ids
        .into_iter()
        .zip(groups.rows)
        .map(|(id, rows)| {
            let (grid, values): (Vec<T>, Vec<T>) = rows.into_iter().unzip();
            if grid.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::InvalidContour {
                    utterance_id: id,
                    message: "tau is not strictly increasing".into(),
                });
            }
            Contour::new(id, grid, values)
        })
        .collect::<Result<Vec<_>>>()?;
    ContourEnsemble::new(iteration.unwrap_or(0), contours)
}

pub fn write_ensemble<T: Scalar>(out: impl Write, ensemble: &ContourEnsemble<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CONTOUR_HEADER)?;
    let it = ensemble.iteration().to_string();
    for c in ensemble.contours() {
        for (tau, phi) in c.grid().iter().zip(c.values()) {
            w.write_record([c.utterance_id(), &it, &tau.to_string(), &phi.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_ensemble_file<T: Scalar>(path: &Path) -> Result<ContourEnsemble<T>> {
    read_ensemble(File::open(path)?)
}

pub fn write_ensemble_file<T: Scalar>(path: &Path, ensemble: &ContourEnsemble<T>) -> Result<()> {
    write_ensemble(std::io::BufWriter::new(File::create(path)?), ensemble)
}

pub fn iteration_path(dir: &Path, iteration: usize) -> PathBuf {
    dir.join(format!("iter_{iteration}.csv"))
}

/// Writes `iter_0.csv` … `iter_k.csv` into `dir`, creating it if needed.
pub fn write_run_dir<T: Scalar>(dir: &Path, run: &ChainRun<T>) -> Result<()> {
    fs::create_dir_all(dir)?;
    for e in &run.ensembles {
        write_ensemble_file(&iteration_path(dir, e.iteration()), e)?;
    }
    Ok(())
}

/// Reads `iter_0.csv`, `iter_1.csv`, … until the first missing index.
pub fn read_run_dir<T: Scalar>(dir: &Path) -> Result<Vec<ContourEnsemble<T>>> {
    let mut out = Vec::new();
    loop {
        let path = iteration_path(dir, out.len());
        if !path.exists() {
            break;
        }
        let e: ContourEnsemble<T> = read_ensemble_file(&path)?;
        if e.iteration() != out.len() {
            return Err(Error::domain(format!(
                "{} holds iteration {}",
                path.display(),
                e.iteration()
            )));
        }
        out.push(e);
    }
    if out.is_empty() {
        return Err(Error::domain(format!("no iter_0.csv in {}", dir.display())));
    }
    Ok(out)
}

pub fn write_density_csv<T: Scalar>(out: impl Write, grid: &[T], density: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phi", "density"])?;
    for (x, d) in grid.iter().zip(density) {
        w.write_record([x.to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Inverter sweep table with columns `v_in,stage,v`; stage 0 is the input.
pub fn write_inverter_csv<T: Scalar>(
    out: impl Write,
    inputs: &[T],
    strings: &[Vec<T>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["v_in", "stage", "v"])?;
    for (v_in, volts) in inputs.iter().zip(strings) {
        for (stage, v) in volts.iter().enumerate() {
            w.write_record([v_in.to_string(), stage.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Minimal SVG line chart of one or more series.
pub fn svg_line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    const COLOURS: [&str; 6] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    ];

    let pts = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{PAD}" y="{}">{x0:.2}</text><text x="{}" y="{}" text-anchor="end">{x1:.2}</text>"#,
        H - PAD + 15.0,
        W - PAD,
        H - PAD + 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{y0:.2}</text><text x="{}" y="{}" text-anchor="end">{y1:.2}</text>"#,
        PAD - 4.0,
        H - PAD,
        PAD - 4.0,
        PAD + 4.0
    );
    for (i, (name, points)) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{colour}">{name}</text>"#,
            W - PAD - 80.0,
            PAD + 14.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}
