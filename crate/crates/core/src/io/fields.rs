use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::constitutive::Model;
use crate::diagnostics::{DiagnosticsRecord, Monitors};
use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::scheme::EntropyState;

/// Physical fields of one state as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDump {
    pub cell: Vec<usize>,
    /// Cell centres, one entry per axis.
    pub coords: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
}

/// 17 significant digits; parses back to the same bits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

const AXES: [&str; 3] = ["x", "y", "z"];

/// Column names of a field CSV.
pub fn field_header(dim: usize, species: usize) -> Vec<String> {
    let mut h = vec!["cell".to_string()];
    h.extend(AXES[..dim].iter().map(|s| s.to_string()));
    h.extend((1..=species).map(|i| format!("rho_{i}")));
    h.extend(["T", "S", "p"].iter().map(|s| s.to_string()));
    h.extend((1..=species).map(|i| format!("mu_{i}")));
    h
}

impl FieldDump {
    pub fn from_state(model: &Model, grid: &Grid, eps: f64, state: &EntropyState) -> Result<Self> {
        let ph = state.physical(model, eps)?;
        let nc = grid.num_cells();
        Ok(FieldDump {
            cell: (0..nc).collect(),
            coords: (0..nc).map(|c| grid.center(c)).collect(),
            rho: ph.rho,
            t: ph.t,
            s: ph.s,
            p: ph.p,
            mu: ph.mu,
        })
    }

    pub fn species(&self) -> usize {
        self.rho.first().map_or(0, Vec::len)
    }

    /// Entropy state with the stored densities, temperature and saturation.
    pub fn to_state(&self, model: &Model, eps: f64) -> Result<EntropyState> {
        if self.species() != model.params.species {
            return Err(Error::Dimension { expected: model.params.species, found: self.species() });
        }
        EntropyState::from_physical(model, &self.rho, &self.t, &self.s, eps)
    }

    pub fn to_csv(&self) -> String {
        let dim = self.coords.first().map_or(1, Vec::len);
        let mut out = field_header(dim, self.species()).join(",");
        out.push('\n');
        for c in 0..self.cell.len() {
            let mut row = vec![self.cell[c].to_string()];
            row.extend(self.coords[c].iter().map(|v| num(*v)));
            row.extend(self.rho[c].iter().map(|v| num(*v)));
            row.extend([num(self.t[c]), num(self.s[c]), num(self.p[c])]);
            row.extend(self.mu[c].iter().map(|v| num(*v)));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = lines.next().ok_or_else(|| Error::Format("empty field file".into()))?.split(',').collect();
        let dim = header.iter().filter(|h| AXES.contains(h)).count();
        let n = header.iter().filter(|h| h.starts_with("rho_")).count();
        if dim == 0 || n == 0 || header != field_header(dim, n) {
            return Err(Error::Format(format!("unexpected header {:?}", header.join(","))));
        }
        let mut d = FieldDump {
            cell: Vec::new(),
            coords: Vec::new(),
            rho: Vec::new(),
            t: Vec::new(),
            s: Vec::new(),
            p: Vec::new(),
            mu: Vec::new(),
        };
        for (k, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != header.len() {
                return Err(Error::Format(format!("row {} has {} columns, expected {}", k + 1, cols.len(), header.len())));
            }
            let f = |j: usize| -> Result<f64> {
                cols[j].trim().parse().map_err(|_| Error::Format(format!("row {}: bad number {:?}", k + 1, cols[j])))
            };
            d.cell.push(cols[0].trim().parse().map_err(|_| Error::Format(format!("row {}: bad cell index", k + 1)))?);
            d.coords.push((1..=dim).map(f).collect::<Result<_>>()?);
            let o = 1 + dim;
            d.rho.push((o..o + n).map(f).collect::<Result<_>>()?);
            d.t.push(f(o + n)?);
            d.s.push(f(o + n + 1)?);
            d.p.push(f(o + n + 2)?);
            d.mu.push((o + n + 3..o + 2 * n + 3).map(f).collect::<Result<_>>()?);
        }
        Ok(d)
    }

    /// Legacy VTK structured points with one cell-data scalar per field.
    pub fn to_vtk(&self, grid: &Grid, title: &str) -> String {
        let cpa = grid.cells_per_axis();
        let h = grid.spacing();
        let dims: Vec<usize> = (0..3).map(|a| cpa.get(a).map_or(2, |n| n + 1)).collect();
        let spacing: Vec<f64> = (0..3).map(|a| h.get(a).copied().unwrap_or(1.0)).collect();
        let mut out = String::new();
        let _ = writeln!(out, "# vtk DataFile Version 3.0");
        let _ = writeln!(out, "{}", title.replace('\n', " "));
        let _ = writeln!(out, "ASCII");
        let _ = writeln!(out, "DATASET STRUCTURED_POINTS");
        let _ = writeln!(out, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2]);
        let _ = writeln!(out, "ORIGIN 0 0 0");
        let _ = writeln!(out, "SPACING {} {} {}", num(spacing[0]), num(spacing[1]), num(spacing[2]));
        let _ = writeln!(out, "CELL_DATA {}", self.cell.len());
        let mut scalar = |name: &str, v: &mut dyn Iterator<Item = f64>| {
            let _ = writeln!(out, "SCALARS {name} double 1");
            let _ = writeln!(out, "LOOKUP_TABLE default");
            for x in v {
                let _ = writeln!(out, "{}", num(x));
            }
        };
        let n = self.species();
        for i in 0..n {
            scalar(&format!("rho_{}", i + 1), &mut self.rho.iter().map(|r| r[i]));
        }
        scalar("T", &mut self.t.iter().copied());
        scalar("S", &mut self.s.iter().copied());
        scalar("p", &mut self.p.iter().copied());
        for i in 0..n {
            scalar(&format!("mu_{}", i + 1), &mut self.mu.iter().map(|r| r[i]));
        }
        out
    }
}

pub fn write_fields(path: &Path, dump: &FieldDump) -> Result<()> {
    Ok(fs::write(path, dump.to_csv())?)
}

pub fn read_fields(path: &Path) -> Result<FieldDump> {
    FieldDump::from_csv(&fs::read_to_string(path)?)
}

pub fn write_vtk(path: &Path, grid: &Grid, dump: &FieldDump, title: &str) -> Result<()> {
    Ok(fs::write(path, dump.to_vtk(grid, title))?)
}

/// Column names of the diagnostics CSV.
pub fn diagnostics_header(species: usize) -> Vec<String> {
    let mut h: Vec<String> = ["step", "time", "entropy_production", "energy_residual"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=species).map(|i| format!("mass_residual_{i}")));
    h.extend(
        ["lyapunov", "sat_min", "rho_min", "T_min", "T_max"]
            .iter()
            .map(|s| s.to_string()),
    );
    h.extend(Monitors::NAMES.iter().map(|s| s.to_string()));
    h
}

pub fn diagnostics_row(r: &DiagnosticsRecord) -> String {
    let mut row = vec![r.step.to_string(), num(r.time), num(r.entropy_production), num(r.energy_residual)];
    row.extend(r.mass_residual.iter().map(|v| num(*v)));
    row.extend([r.lyapunov, r.sat_min, r.rho_min, r.t_min, r.t_max].map(num));
    row.extend(r.monitors.values().map(num));
    row.join(",")
}

pub fn diagnostics_csv(species: usize, records: &[DiagnosticsRecord]) -> String {
    let mut out = diagnostics_header(species).join(",");
    out.push('\n');
    for r in records {
        out.push_str(&diagnostics_row(r));
        out.push('\n');
    }
    out
}

pub fn parse_diagnostics(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| Error::Format("empty diagnostics file".into()))?.split(',').collect();
    let n = header.iter().filter(|h| h.starts_with("mass_residual_")).count();
    if header != diagnostics_header(n) {
        return Err(Error::Format(format!("unexpected header {:?}", header.join(","))));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != header.len() {
                return Err(Error::Format(format!("row {} has {} columns", k + 1, cols.len())));
            }
            let v: Vec<f64> = cols[1..]
                .iter()
                .map(|c| c.trim().parse().map_err(|_| Error::Format(format!("row {}: bad number {c:?}", k + 1))))
                .collect::<Result<_>>()?;
            Ok(DiagnosticsRecord {
                step: cols[0].trim().parse().map_err(|_| Error::Format(format!("row {}: bad step", k + 1)))?,
                time: v[0],
                entropy_production: v[1],
                energy_residual: v[2],
                mass_residual: v[3..3 + n].to_vec(),
                lyapunov: v[3 + n],
                sat_min: v[4 + n],
                rho_min: v[5 + n],
                t_min: v[6 + n],
                t_max: v[7 + n],
                monitors: Monitors::from_values(&v[8 + n..]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;
    use proptest::prelude::*;

    fn dump(n: usize, vals: &[f64]) -> FieldDump {
        let nc = vals.len();
        FieldDump {
            cell: (0..nc).collect(),
            coords: (0..nc).map(|c| vec![c as f64 * 0.1, vals[c]]).collect(),
            rho: (0..nc).map(|c| vec![vals[c]; n]).collect(),
            t: vals.to_vec(),
            s: vals.iter().map(|v| v / 3.0).collect(),
            p: vals.iter().map(|v| -v).collect(),
            mu: (0..nc).map(|c| (0..n).map(|i| vals[c] * i as f64).collect()).collect(),
        }
    }

    #[test]
    fn header_matches_documented_columns() {
        assert_eq!(
            field_header(1, 2).join(","),
            "cell,x,rho_1,rho_2,T,S,p,mu_1,mu_2"
        );
        assert_eq!(
            diagnostics_header(2).join(","),
            "step,time,entropy_production,energy_residual,mass_residual_1,mass_residual_2,lyapunov,\
             sat_min,rho_min,T_min,T_max,pc_l1,p_l1,rho_lgamma,s_rho_lgamma,log_t_h1,t_beta_h1,pi_z_h1,darcy,f_w1q"
        );
    }

    proptest! {
        #[test]
        fn csv_roundtrip_is_bitwise(vals in prop::collection::vec(prop::num::f64::NORMAL, 1..20), n in 1usize..4) {
            let d = dump(n, &vals);
            let back = FieldDump::from_csv(&d.to_csv()).unwrap();
            prop_assert_eq!(back, d);
        }
    }

    #[test]
    fn file_roundtrip_and_state_reconstruction() {
        let m = Model::default();
        let grid = Grid::new(&GridSpec { cells: vec![3, 2], extent: vec![1.0, 1.0] }).unwrap();
        let rho: Vec<Vec<f64>> = (0..6).map(|c| vec![0.1 + 0.01 * c as f64, 0.2]).collect();
        let t: Vec<f64> = (0..6).map(|c| 1.0 + 0.1 * c as f64).collect();
        let st = EntropyState::from_physical(&m, &rho, &t, &[0.4; 6], 0.01).unwrap();
        let d = FieldDump::from_state(&m, &grid, 0.01, &st).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_fields(&path, &d).unwrap();
        let back = read_fields(&path).unwrap();
        assert_eq!(back, d);
        let st2 = back.to_state(&m, 0.01).unwrap();
        for c in 0..6 {
            assert!((st2.w[c] - st.w[c]).abs() < 1e-14);
            for i in 0..2 {
                assert!((st2.z[c][i] - st.z[c][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(FieldDump::from_csv("").is_err());
        assert!(FieldDump::from_csv("cell,x,rho_1,T,S,p\n").is_err());
        let good = dump(1, &[1.0, 2.0]).to_csv();
        assert!(FieldDump::from_csv(&good.replace("2.0000000000000000e0,", "abc,")).is_err());
        let truncated: String = good.lines().take(2).map(|l| format!("{},\n", &l[..l.len() - 3])).collect();
        assert!(FieldDump::from_csv(&truncated).is_err());
    }

    #[test]
    fn vtk_layout() {
        let grid = Grid::uniform_1d(4, 2.0).unwrap();
        let d = dump(2, &[1.0, 2.0, 3.0, 4.0]);
        let v = d.to_vtk(&grid, "t");
        let lines: Vec<&str> = v.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[3], "DATASET STRUCTURED_POINTS");
        assert_eq!(lines[4], "DIMENSIONS 5 2 2");
        assert_eq!(lines[7], "CELL_DATA 4");
        assert_eq!(v.matches("SCALARS").count(), 7);
        assert_eq!(lines.len(), 8 + 7 * 6);
    }

    #[test]
    fn diagnostics_roundtrip() {
        let r = DiagnosticsRecord {
            step: 3,
            time: 0.03,
            entropy_production: 1.0 / 3.0,
            energy_residual: -1e-13,
            mass_residual: vec![1e-12, -2e-12],
            lyapunov: -4.2,
            sat_min: 0.5,
            rho_min: 0.1,
            t_min: 0.9,
            t_max: 1.1,
            monitors: Monitors::from_values(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]),
        };
        let text = diagnostics_csv(2, &[r.clone(), r.clone()]);
        assert_eq!(parse_diagnostics(&text).unwrap(), vec![r.clone(), r]);
    }
}
