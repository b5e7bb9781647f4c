//! CSV emission of fields and result tables.
//!
//! Every writer takes an optional comment that becomes a `# `-prefixed first
//! line. Floats use the shortest round-trip representation, switching to
//! exponent form outside `[1e-4, 1e6)`; non-finite values print as `inf`,
//! `-inf` and `nan`.

use std::io::{self, Write};

use crate::blink::CumulantEstimate;
use crate::correlation::{DipProfile, ProbabilityField};
use crate::geometry::{DetectionGrid, Dims};
use crate::shot_noise::Envelope;
use crate::sweep::{ErrorBoundTable, ResolutionTable};

pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v == 0.0 || (1e-4..1e6).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn open<W: Write>(mut out: W, comment: Option<&str>) -> io::Result<csv::Writer<W>> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(out))
}

fn coord_columns(dims: Dims) -> Vec<String> {
    match dims {
        Dims::One => vec!["x".into()],
        Dims::Two => vec!["x".into(), "y".into()],
    }
}

fn coords(grid: &DetectionGrid, j: usize) -> Vec<String> {
    let r = grid.points()[j];
    match grid.dims() {
        Dims::One => vec![format_f64(r[0])],
        Dims::Two => vec![format_f64(r[0]), format_f64(r[1])],
    }
}

/// `x[,y],value` for a scalar field on the grid.
pub fn write_field<W: Write>(out: W, comment: Option<&str>, grid: &DetectionGrid, values: &[f64]) -> io::Result<()> {
    if values.len() != grid.len() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "field length differs from grid"));
    }
    let mut w = open(out, comment)?;
    let mut header = coord_columns(grid.dims());
    header.push("value".into());
    w.write_record(&header)?;
    for (j, v) in values.iter().enumerate() {
        let mut row = coords(grid, j);
        row.push(format_f64(*v));
        w.write_record(&row)?;
    }
    w.flush()
}

/// `x[,y],p,grad_<param>...`.
pub fn write_probability_field<W: Write>(
    out: W,
    comment: Option<&str>,
    grid: &DetectionGrid,
    pf: &ProbabilityField,
) -> io::Result<()> {
    if pf.len() != grid.len() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "field length differs from grid"));
    }
    let mut w = open(out, comment)?;
    let mut header = coord_columns(grid.dims());
    header.push("p".into());
    header.extend(pf.param_labels.iter().map(|l| format!("grad_{l}")));
    w.write_record(&header)?;
    for j in 0..pf.len() {
        let mut row = coords(grid, j);
        row.push(format_f64(pf.probs[j]));
        row.extend(pf.grad(j).iter().map(|g| format_f64(*g)));
        w.write_record(&row)?;
    }
    w.flush()
}

/// `shape,dims,mode,n,d_over_w,tr_inv_fisher,flag`; the scale column is
/// dropped when `with_scale` is false.
pub fn write_error_table<W: Write>(
    out: W,
    comment: Option<&str>,
    table: &ErrorBoundTable,
    with_scale: bool,
) -> io::Result<()> {
    let mut w = open(out, comment)?;
    let mut header = vec!["shape", "dims", "mode", "n"];
    if with_scale {
        header.push("d_over_w");
    }
    header.extend(["tr_inv_fisher", "flag"]);
    w.write_record(&header)?;
    for r in &table.rows {
        let mut row = vec![r.shape.clone(), r.dims.to_string(), r.mode.to_string(), r.n.to_string()];
        if with_scale {
            row.push(format_f64(r.d_over_w));
        }
        row.push(format_f64(r.tr_inv_fisher));
        row.push(r.flag.to_string());
        w.write_record(&row)?;
    }
    w.flush()
}

/// `shape,threshold,n,min_d_over_w,flag`.
pub fn write_resolution_table<W: Write>(out: W, comment: Option<&str>, table: &ResolutionTable) -> io::Result<()> {
    let mut w = open(out, comment)?;
    w.write_record(["shape", "threshold", "n", "min_d_over_w", "flag"])?;
    for r in &table.rows {
        w.write_record([
            r.shape.clone(),
            format_f64(r.threshold),
            r.n.to_string(),
            format_f64(r.min_d_over_w),
            r.flag.to_string(),
        ])?;
    }
    w.flush()
}

/// `pattern,alpha_pl,T_over_tau0,u,mean,var,flag`.
pub fn write_blink_ratio<W: Write>(out: W, comment: Option<&str>, rows: &[CumulantEstimate]) -> io::Result<()> {
    let mut w = open(out, comment)?;
    w.write_record(["pattern", "alpha_pl", "T_over_tau0", "u", "mean", "var", "flag"])?;
    for r in rows {
        w.write_record([
            r.pattern.to_string(),
            format_f64(r.alpha_pl),
            format_f64(r.t_over_tau0),
            format_f64(r.u_ratio),
            format_f64(r.realization_mean),
            format_f64(r.realization_var),
            r.flag.to_string(),
        ])?;
    }
    w.flush()
}

/// `x[,y],mean,std,order`, one block per order.
pub fn write_shot_noise<W: Write>(
    out: W,
    comment: Option<&str>,
    grid: &DetectionGrid,
    envelopes: &[Envelope],
) -> io::Result<()> {
    let mut w = open(out, comment)?;
    let mut header = coord_columns(grid.dims());
    header.extend(["mean".into(), "std".into(), "order".into()]);
    w.write_record(&header)?;
    for env in envelopes {
        for j in 0..grid.len() {
            let mut row = coords(grid, j);
            row.push(format_f64(env.mean[j]));
            row.push(format_f64(env.std[j]));
            row.push(env.order.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()
}

/// Dip contrast per scale and order: `shape,d_over_w,n,contrast`.
pub fn write_dip_contrast<W: Write>(
    out: W,
    comment: Option<&str>,
    shape: &str,
    rows: &[(f64, usize, f64)],
) -> io::Result<()> {
    let mut w = open(out, comment)?;
    w.write_record(["shape", "d_over_w", "n", "contrast"])?;
    for (d, n, c) in rows {
        w.write_record([shape.to_string(), format_f64(*d), n.to_string(), format_f64(*c)])?;
    }
    w.flush()
}

/// Sampled profiles along the source axis: `d_over_w,n,offset,value`.
pub fn write_dip_profile<W: Write>(
    out: W,
    comment: Option<&str>,
    profiles: &[(f64, usize, DipProfile)],
) -> io::Result<()> {
    let mut w = open(out, comment)?;
    w.write_record(["d_over_w", "n", "offset", "value"])?;
    for (d, n, p) in profiles {
        for (t, v) in p.offsets.iter().zip(&p.values) {
            w.write_record([format_f64(*d), n.to_string(), format_f64(*t), format_f64(*v)])?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{BoundFlag, FisherMode};
    use crate::sweep::ErrorBoundRow;

    #[test]
    fn float_formatting() {
        assert_eq!(format_f64(0.25), "0.25");
        assert_eq!(format_f64(0.0), "0");
        assert_eq!(format_f64(1.5e-11), "1.5e-11");
        assert_eq!(format_f64(f64::INFINITY), "inf");
        assert_eq!(format_f64(f64::NAN), "nan");
        assert_eq!(format_f64(-3.0), "-3");
        assert_eq!(format_f64(2.5e7), "2.5e7");
        assert_eq!(format_f64(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn field_layout() {
        let grid = DetectionGrid::from_axes(Dims::Two, 0.5, [0.0, 0.0], [2, 2]).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, Some("{\"a\":1}"), &grid, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# {\"a\":1}");
        assert_eq!(lines[1], "x,y,value");
        assert_eq!(lines[2], "0,0,1");
        assert_eq!(lines[3], "0.5,0,2");
        assert_eq!(lines.len(), 6);
        assert!(write_field(Vec::new(), None, &grid, &[1.0]).is_err());
    }

    #[test]
    fn error_table_columns() {
        let table = ErrorBoundTable {
            rows: vec![ErrorBoundRow {
                shape: "line-1d:3".into(),
                dims: 1,
                mode: FisherMode::PerOrder,
                n: 2,
                d_over_w: 0.5,
                tr_inv_fisher: f64::INFINITY,
                flag: BoundFlag::Unresolvable,
            }],
        };
        let mut with = Vec::new();
        write_error_table(&mut with, None, &table, true).unwrap();
        assert_eq!(
            String::from_utf8(with).unwrap(),
            "shape,dims,mode,n,d_over_w,tr_inv_fisher,flag\nline-1d:3,1,per-order,2,0.5,inf,unresolvable\n"
        );
        let mut without = Vec::new();
        write_error_table(&mut without, None, &table, false).unwrap();
        assert!(String::from_utf8(without).unwrap().starts_with("shape,dims,mode,n,tr_inv_fisher,flag\n"));
    }
}
