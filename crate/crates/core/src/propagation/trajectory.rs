use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::format::g12;
use crate::spin::QuantumState;

/// Sampled observables of one evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub field: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub leakage: Vec<f64>,
    /// Rows are samples, columns eigenspaces of the restricted drift (may have zero columns).
    pub populations: Array2<f64>,
    pub lyapunov: Option<Vec<f64>>,
    pub final_state: QuantumState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().unwrap_or(&0.0)
    }

    /// First time the fidelity reaches `threshold`, linearly interpolated between samples.
    pub fn first_crossing(&self, threshold: f64) -> Option<f64> {
        let i = self.fidelity.iter().position(|&f| f >= threshold)?;
        if i == 0 {
            return Some(self.times[0]);
        }
        let (f0, f1) = (self.fidelity[i - 1], self.fidelity[i]);
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        Some(t0 + (threshold - f0) / (f1 - f0) * (t1 - t0))
    }

    /// CSV with header `t,f,F,leakage,S1..Sn[,V]`.
    pub fn to_csv(&self) -> String {
        let n_pop = self.populations.ncols();
        let mut out = String::from("t,f,F,leakage");
        for i in 1..=n_pop {
            let _ = write!(out, ",S{i}");
        }
        if self.lyapunov.is_some() {
            out.push_str(",V");
        }
        out.push('\n');
        for k in 0..self.len() {
            let _ = write!(
                out,
                "{},{},{},{}",
                g12(self.times[k]),
                g12(self.field[k]),
                g12(self.fidelity[k]),
                g12(self.leakage[k])
            );
            for p in self.populations.row(k) {
                let _ = write!(out, ",{}", g12(*p));
            }
            if let Some(v) = &self.lyapunov {
                let _ = write!(out, ",{}", g12(v[k]));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}
