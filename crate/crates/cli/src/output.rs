//! File writers. Numbers are printed with 17 significant digits so that two
//! runs agree byte for byte exactly when they agree bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use quasilin::grid::GridField;
use quasilin::pohozaev::FunctionalContext;
use quasilin::solver::{HistoryEntry, SolveReport};
use quasilin::transform::ChangeOfVariables;

use crate::CliError;

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Ordered `key = value` lines.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct KeyValue {
    lines: Vec<(String, String)>,
}

impl KeyValue {
    pub fn number(&mut self, key: &str, x: f64) -> &mut Self {
        self.lines.push((key.into(), num(x)));
        self
    }

    pub fn int(&mut self, key: &str, x: usize) -> &mut Self {
        self.lines.push((key.into(), x.to_string()));
        self
    }

    pub fn flag(&mut self, key: &str, x: bool) -> &mut Self {
        self.lines.push((key.into(), x.to_string()));
        self
    }

    pub fn text(&mut self, key: &str, x: &str) -> &mut Self {
        self.lines.push((key.into(), format!("{x:?}")));
        self
    }

    pub fn render(&self) -> String {
        self.lines.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k} = {v}");
            s
        })
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// One row per node: reduced coordinates, `v`, `u = g(v)`.
pub fn profile_csv(ctx: &FunctionalContext, field: &GridField) -> String {
    let grid = field.grid();
    let nd = grid.ndim();
    let mut out = grid.coordinate_names().join(",");
    out.push_str(",v,u\n");
    for (i, &v) in field.values().iter().enumerate() {
        let c = grid.coords(i);
        for x in &c[..nd] {
            out.push_str(&num(*x));
            out.push(',');
        }
        let _ = writeln!(out, "{},{}", num(v), num(ctx.transform().value(v)));
    }
    out
}

pub fn history_csv(history: &[HistoryEntry]) -> String {
    let mut out = String::from("iteration,energy,gradient_norm,step,rescaled\n");
    for h in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            h.iteration,
            num(h.energy),
            num(h.gradient_norm),
            num(h.step),
            h.rescaled as u8
        );
    }
    out
}

pub fn summary(report: &SolveReport, kind: &str) -> KeyValue {
    let mut kv = KeyValue::default();
    kv.text("kind", kind)
        .number("beta", report.beta)
        .number("psi", report.psi)
        .number("theta", report.theta)
        .number("deficit", report.deficit)
        .number("pohozaev_residual", report.pohozaev_residual)
        .number("duality_gap", report.duality_gap)
        .number("el_residual", report.el_residual)
        .number("quasilinear_residual", report.quasilinear_residual)
        .number("gradient_norm", report.gradient_norm)
        .int("iterations", report.iterations)
        .flag("converged", report.converged)
        .number("center_v", report.center_value())
        .number("spacing", report.field.grid().spacing());
    kv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn key_value_lines() {
        let mut kv = KeyValue::default();
        kv.number("beta", 1.5).int("iterations", 3).text("kind", "minimum");
        assert_eq!(kv.render(), "beta = 1.5000000000000000e0\niterations = 3\nkind = \"minimum\"\n");
    }
}
