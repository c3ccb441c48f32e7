//! CSV readers and writers with fixed column schemas.

use std::io::{Read, Write};

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};
use num_complex::Complex64;

use crate::aperiodicity::DisplacementProfile;
use crate::bounds::BoundReport;
use crate::clt::CltRow;
use crate::error::{Error, Result};
use crate::metrics::{CharFnGrid, EmpiricalMeasure};
use crate::rearrange::DistFn;
use crate::simulate::{EnsembleRow, PathGrid};

pub const DIST_FN_HEADER: [&str; 2] = ["alpha", "value"];
pub const PATH_HEADER: [&str; 2] = ["t", "X"];
pub const ENSEMBLE_HEADER: [&str; 5] = ["t", "mean", "var", "q05", "q95"];
pub const PROFILE_HEADER: [&str; 2] = ["tau", "D"];
pub const CLT_HEADER: [&str; 6] = ["T", "n_reps", "ks_stat", "mean_S", "var_S", "V_inf2"];
pub const PAIRED_HEADER: [&str; 2] = ["x", "y"];
pub const BOUND_PREFIX: [&str; 5] = ["case_id", "lhs", "rhs", "margin", "R"];

/// Shortest round-trip formatting, so equal values always give equal bytes.
pub fn fmt(x: f64) -> String {
    let a = x.abs();
    if x.is_nan() {
        "NaN".into()
    } else if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    ReaderBuilder::new().trim(Trim::All).comment(Some(b'#')).from_reader(r)
}

fn header<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>> {
    Ok(rdr.headers()?.iter().map(str::to_owned).collect())
}

fn expect_header(got: &[String], want: &[&str]) -> Result<()> {
    if got.len() != want.len() || got.iter().zip(want).any(|(g, w)| g != w) {
        return Err(Error::Parse(format!("expected columns {}, got {}", want.join(","), got.join(","))));
    }
    Ok(())
}

fn field(rec: &StringRecord, i: usize, line: usize) -> Result<f64> {
    let s = rec.get(i).ok_or_else(|| Error::Parse(format!("row {line}: missing column {}", i + 1)))?;
    let v: f64 = s.parse().map_err(|_| Error::Parse(format!("row {line}: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("row {line}: non-finite value")));
    }
    Ok(v)
}

fn numeric_rows<R: Read>(rdr: &mut csv::Reader<R>, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != width {
            return Err(Error::Parse(format!("row {}: expected {width} fields, got {}", line + 1, rec.len())));
        }
        out.push((0..width).map(|i| field(&rec, i, line + 1)).collect::<Result<Vec<f64>>>()?);
    }
    Ok(out)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    WriterBuilder::new().from_writer(w)
}

/// Header plus rows, as written by every CSV artifact.
pub fn write_table<W: Write, H: AsRef<[u8]>>(
    w: W,
    header: &[H],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

fn columns(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// `alpha,value`. The tail is taken to vanish when the last value is zero.
pub fn read_dist_fn<R: Read>(r: R) -> Result<DistFn> {
    let mut rdr = reader(r);
    expect_header(&header(&mut rdr)?, &DIST_FN_HEADER)?;
    let rows = numeric_rows(&mut rdr, 2)?;
    if rows.is_empty() {
        return Err(Error::Parse("distribution table is empty".into()));
    }
    let alphas: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let values: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let tail = values.last() == Some(&0.0);
    DistFn::from_table(alphas, values, tail)
}

pub fn write_dist_fn<W: Write>(w: W, d: &DistFn) -> Result<()> {
    write_table(w, &DIST_FN_HEADER, d.alphas.iter().zip(&d.values).map(|(a, v)| vec![fmt(*a), fmt(*v)]))
}

/// `x1,…,xn,weight`
pub fn read_empirical_measure<R: Read>(r: R) -> Result<EmpiricalMeasure> {
    let mut rdr = reader(r);
    let h = header(&mut rdr)?;
    if h.len() < 2 {
        return Err(Error::Parse("measure needs at least one coordinate and a weight".into()));
    }
    let n = h.len() - 1;
    let mut want: Vec<String> = columns("x", n);
    want.push("weight".into());
    expect_header(&h, &want.iter().map(String::as_str).collect::<Vec<_>>())?;
    let rows = numeric_rows(&mut rdr, n + 1)?;
    let points = rows.iter().map(|r| r[..n].to_vec()).collect();
    let weights = rows.iter().map(|r| r[n]).collect();
    EmpiricalMeasure::new(points, weights)
}

pub fn write_empirical_measure<W: Write>(w: W, m: &EmpiricalMeasure) -> Result<()> {
    let mut h = columns("x", m.dimension());
    h.push("weight".into());
    write_table(
        w,
        &h,
        m.points.iter().zip(&m.weights).map(|(p, wt)| p.iter().chain(std::iter::once(wt)).map(|v| fmt(*v)).collect()),
    )
}

/// `z1,…,zn,re,im`
pub fn read_charfn_grid<R: Read>(r: R) -> Result<CharFnGrid> {
    let mut rdr = reader(r);
    let h = header(&mut rdr)?;
    if h.len() < 3 {
        return Err(Error::Parse("grid needs at least one coordinate and re, im".into()));
    }
    let n = h.len() - 2;
    let mut want = columns("z", n);
    want.push("re".into());
    want.push("im".into());
    expect_header(&h, &want.iter().map(String::as_str).collect::<Vec<_>>())?;
    let rows = numeric_rows(&mut rdr, n + 2)?;
    let grid = CharFnGrid {
        z: rows.iter().map(|r| r[..n].to_vec()).collect(),
        values: rows.iter().map(|r| Complex64::new(r[n], r[n + 1])).collect(),
    };
    grid.validate()?;
    Ok(grid)
}

pub fn write_charfn_grid<W: Write>(w: W, g: &CharFnGrid) -> Result<()> {
    let n = g.z.first().map_or(1, Vec::len);
    let mut h = columns("z", n);
    h.push("re".into());
    h.push("im".into());
    write_table(
        w,
        &h,
        g.z.iter().zip(&g.values).map(|(z, v)| z.iter().chain([&v.re, &v.im]).map(|x| fmt(*x)).collect()),
    )
}

/// `x,y` pairs of coupled draws.
pub fn read_paired_sample<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = reader(r);
    expect_header(&header(&mut rdr)?, &PAIRED_HEADER)?;
    let rows = numeric_rows(&mut rdr, 2)?;
    if rows.is_empty() {
        return Err(Error::Parse("paired sample is empty".into()));
    }
    Ok(rows.iter().map(|r| (r[0], r[1])).unzip())
}

pub fn write_paired_sample<W: Write>(w: W, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::invalid("paired columns differ in length"));
    }
    write_table(w, &PAIRED_HEADER, x.iter().zip(y).map(|(a, b)| vec![fmt(*a), fmt(*b)]))
}

pub fn write_path_grid<W: Write>(w: W, p: &PathGrid) -> Result<()> {
    write_table(w, &PATH_HEADER, p.times.iter().zip(&p.values).map(|(t, x)| vec![fmt(*t), fmt(*x)]))
}

pub fn read_path_grid<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = reader(r);
    expect_header(&header(&mut rdr)?, &PATH_HEADER)?;
    Ok(numeric_rows(&mut rdr, 2)?.iter().map(|r| (r[0], r[1])).unzip())
}

pub fn write_ensemble<W: Write>(w: W, rows: &[EnsembleRow]) -> Result<()> {
    write_table(
        w,
        &ENSEMBLE_HEADER,
        rows.iter().map(|r| [r.t, r.mean, r.var, r.q05, r.q95].iter().map(|v| fmt(*v)).collect()),
    )
}

/// `case_id,lhs,rhs,margin,R,term_1,…,term_k`, `k` the largest term count; short rows are padded empty.
pub fn write_bound_reports<W: Write>(w: W, reports: &[BoundReport]) -> Result<()> {
    let k = reports.iter().map(|r| r.terms.len()).max().unwrap_or(0);
    let mut h: Vec<String> = BOUND_PREFIX.iter().map(|s| s.to_string()).collect();
    h.extend((1..=k).map(|i| format!("term_{i}")));
    write_table(
        w,
        &h,
        reports.iter().map(|r| {
            let mut row = vec![r.case_id.clone(), fmt(r.lhs), fmt(r.rhs), fmt(r.margin), fmt(r.r)];
            row.extend(r.terms.iter().map(|(_, v)| fmt(*v)));
            row.resize(5 + k, String::new());
            row
        }),
    )
}

pub fn write_profile<W: Write>(w: W, p: &DisplacementProfile) -> Result<()> {
    write_table(w, &PROFILE_HEADER, p.tau_grid.iter().zip(&p.d).map(|(t, d)| vec![fmt(*t), fmt(*d)]))
}

pub fn write_clt_rows<W: Write>(w: W, rows: &[CltRow]) -> Result<()> {
    write_table(
        w,
        &CLT_HEADER,
        rows.iter()
            .map(|r| vec![fmt(r.t), r.n_reps.to_string(), fmt(r.ks_stat), fmt(r.mean_s), fmt(r.var_s), fmt(r.v_inf2)]),
    )
}

/// First line of a CSV buffer.
pub fn header_line(bytes: &[u8]) -> &str {
    let s = std::str::from_utf8(bytes).unwrap_or("");
    s.lines().next().unwrap_or("")
}
