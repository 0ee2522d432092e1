//! The `spectra` subcommand: deterministic spectral quantities as a table.

use std::fs;

use serde::Serialize;

use mpdn::spectral::{a1, a2, edges, p_of_d, t_real, AspectRatio};

use crate::{CliError, CliResult, SpectraArgs};

/// Per-signal-value limits. Below the detection threshold the observed
/// top eigenvalue sticks to the bulk edge and the overlaps vanish, so the
/// row holds those limits rather than the raw formula values.
#[derive(Serialize)]
struct SpectraRow {
    d: f64,
    p: f64,
    a1: f64,
    a2: f64,
}

#[derive(Serialize)]
struct TSample {
    x: f64,
    t: f64,
}

#[derive(Serialize)]
struct SpectraTable {
    c: f64,
    lambda_minus: f64,
    lambda_plus: f64,
    critical_d: f64,
    rows: Vec<SpectraRow>,
    t_samples: Vec<TSample>,
}

fn usage(err: mpdn::Error) -> CliError {
    CliError::Usage(err.to_string())
}

fn parse_grid(spec: &str) -> CliResult<(f64, f64, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("grid must be `min:max:count`, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let min: f64 = parts[0].parse().map_err(|_| bad())?;
    let max: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if !min.is_finite() || !max.is_finite() || max < min || count == 0 {
        return Err(bad());
    }
    Ok((min, max, count))
}

fn build_table(args: &SpectraArgs) -> CliResult<SpectraTable> {
    let c = AspectRatio::new(args.c).map_err(usage)?;
    let e = edges(c);
    let mut rows = Vec::new();
    for &d in &args.d {
        if !(d.is_finite() && d > 0.0) {
            return Err(CliError::Usage(format!(
                "signal value must be a positive finite number, got {d}"
            )));
        }
        let row = if d >= c.critical_d() {
            SpectraRow {
                d,
                p: p_of_d(d, c).map_err(usage)?,
                a1: a1(d, c).map_err(usage)?,
                a2: a2(d, c).map_err(usage)?,
            }
        } else {
            SpectraRow {
                d,
                p: e.upper,
                a1: 0.0,
                a2: 0.0,
            }
        };
        rows.push(row);
    }
    let mut t_samples = Vec::new();
    if let Some(spec) = &args.grid {
        let (min, max, count) = parse_grid(spec)?;
        for k in 0..count {
            let x = if count == 1 {
                min
            } else {
                min + (max - min) * k as f64 / (count - 1) as f64
            };
            let t = t_real(x, c).map_err(|e| {
                CliError::Usage(format!("grid point {x} is not above the bulk: {e}"))
            })?;
            t_samples.push(TSample { x, t });
        }
    }
    Ok(SpectraTable {
        c: c.value(),
        lambda_minus: e.lower,
        lambda_plus: e.upper,
        critical_d: c.critical_d(),
        rows,
        t_samples,
    })
}

fn render_csv(table: &SpectraTable, precise: bool) -> String {
    let num = |x: f64| {
        if precise {
            format!("{x:.16e}")
        } else {
            format!("{x:.4}")
        }
    };
    let mut out = String::new();
    out.push_str("c,lambda_minus,lambda_plus,critical_d\n");
    out.push_str(&format!(
        "{},{},{},{}\n",
        num(table.c),
        num(table.lambda_minus),
        num(table.lambda_plus),
        num(table.critical_d)
    ));
    if !table.rows.is_empty() {
        out.push_str("d,p,a1,a2\n");
        for r in &table.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                num(r.d),
                num(r.p),
                num(r.a1),
                num(r.a2)
            ));
        }
    }
    if !table.t_samples.is_empty() {
        out.push_str("x,t\n");
        for s in &table.t_samples {
            out.push_str(&format!("{},{}\n", num(s.x), num(s.t)));
        }
    }
    out
}

pub fn run(args: &SpectraArgs) -> CliResult<()> {
    let table = build_table(args)?;
    print!("{}", render_csv(&table, false));
    if let Some(path) = &args.out {
        let is_json = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("json"))
            .unwrap_or(false);
        let text = if is_json {
            serde_json::to_string_pretty(&table)
                .map_err(|e| CliError::Data(format!("cannot serialize table: {e}")))?
        } else {
            render_csv(&table, true)
        };
        fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SpectraArgs;

    fn args(c: f64, d: Vec<f64>, grid: Option<&str>) -> SpectraArgs {
        SpectraArgs {
            c,
            d,
            grid: grid.map(|s| s.to_string()),
            out: None,
        }
    }

    #[test]
    fn square_case_has_known_edges() {
        let table = build_table(&args(1.0, vec![], None)).unwrap();
        assert_eq!(table.lambda_minus, 0.0);
        assert_eq!(table.lambda_plus, 4.0);
    }

    #[test]
    fn tabulates_known_values_at_c_2() {
        let table = build_table(&args(2.0, vec![3.0], None)).unwrap();
        let row = &table.rows[0];
        assert!((row.p - 95.0 / 9.0).abs() < 1e-12);
        assert!((row.a1 - 80.5 / 85.5).abs() < 1e-12);
        assert!((row.a2 - 80.5 / 90.0).abs() < 1e-12);
        let csv = render_csv(&table, false);
        assert!(csv.contains("10.5556") && csv.contains("0.9415") && csv.contains("0.8944"));
    }

    #[test]
    fn subcritical_rows_hold_the_sticking_limits() {
        let table = build_table(&args(2.0, vec![0.5], None)).unwrap();
        let row = &table.rows[0];
        assert_eq!(row.p, table.lambda_plus);
        assert_eq!((row.a1, row.a2), (0.0, 0.0));
    }

    #[test]
    fn invalid_inputs_are_usage_errors() {
        assert!(matches!(
            build_table(&args(-1.0, vec![], None)),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            build_table(&args(2.0, vec![0.0], None)),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            build_table(&args(2.0, vec![], Some("1.0:2.0:3"))),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn grid_samples_are_valid_above_the_edge() {
        let table = build_table(&args(2.0, vec![], Some("3.0:5.0:5"))).unwrap();
        assert_eq!(table.t_samples.len(), 5);
        assert!(table.t_samples.windows(2).all(|w| w[0].t > w[1].t));
    }
}
