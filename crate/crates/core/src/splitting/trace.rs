use std::io::{self, Write};

pub const TRACE_CSV_HEADER: &str = "iter,gamma,energy,dy_norm,zy_gap,r_primal,s_dual";

/// Quantities recorded after one iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub gamma: f64,
    /// `Θ_γ` at the new state; `None` when value oracles are missing.
    pub energy: Option<f64>,
    /// `‖y⁺ − y‖`
    pub dy_norm: f64,
    /// `‖z⁺ − y⁺‖`
    pub zy_gap: f64,
    /// `‖y⁺ − z⁺‖`
    pub r_primal: f64,
    /// `‖z⁺ − z‖ / γ`
    pub s_dual: f64,
    pub x_norm: f64,
    pub y_norm: f64,
    pub z_norm: f64,
    /// `‖x⁺ − x‖`
    pub dx_norm: f64,
    pub x_prev_norm: f64,
    pub y_inf: f64,
    pub monitor: Option<f64>,
}

/// Per-iteration history of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter()
    }

    /// Energies of all records, or `None` if any is missing.
    pub fn energies(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for r in &self.records {
            let energy = r.energy.map(|e| e.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.iter, r.gamma, energy, r.dy_norm, r.zy_gap, r.r_primal, r.s_dual
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}
