//! Finite-volume operators on uniform structured grids in one or two
//! dimensions.
//!
//! Cells are numbered with the first axis fastest. Every interior face
//! stores its two cells with the normal pointing from `left` to `right`,
//! so a face flux `F` leaves `left` and enters `right`. With the discrete
//! gradient `D u = (u_right - u_left) / dist` and divergence
//! `div F = (sum of outflows * area) / vol`, summation by parts holds
//! exactly:
//!
//! ```text
//! sum_c vol psi_c (div F)_c + sum_f area_f dist_f F_f (D psi)_f = 0.
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry block of a run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Cells per axis; one entry for 1D, two for 2D.
    pub cells: Vec<usize>,
    /// Domain length per axis.
    pub extent: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            cells: vec![100],
            extent: vec![1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Face {
    pub left: usize,
    pub right: usize,
    pub axis: usize,
    pub area: f64,
    /// Distance between the two cell centers.
    pub dist: f64,
}

impl Face {
    /// Volume associated with the face in the summation-by-parts identity.
    pub fn weight(&self) -> f64 {
        self.area * self.dist
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub axis: usize,
    /// Outward normal component along `axis`, `+1` or `-1`.
    pub sign: f64,
    pub area: f64,
}

#[derive(Clone, Debug)]
pub struct Grid {
    n: Vec<usize>,
    h: Vec<f64>,
    extent: Vec<f64>,
    faces: Vec<Face>,
    boundary: Vec<BoundaryFace>,
}

impl Grid {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        let dim = spec.cells.len();
        if !(1..=2).contains(&dim) || spec.extent.len() != dim {
            return Err(Error::Config(format!(
                "grid needs 1 or 2 axes with matching extents, got cells {:?}, extent {:?}",
                spec.cells, spec.extent
            )));
        }
        if spec.cells.contains(&0) || spec.extent.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Config("grid cells and extents must be positive".into()));
        }
        let n = spec.cells.clone();
        let h: Vec<f64> = spec.extent.iter().zip(&n).map(|(e, c)| e / *c as f64).collect();
        let (nx, ny) = (n[0], if dim == 2 { n[1] } else { 1 });
        let (hx, hy) = (h[0], if dim == 2 { h[1] } else { 1.0 });
        let idx = |i: usize, j: usize| i + nx * j;
        let mut faces = Vec::new();
        let mut boundary = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if i + 1 < nx {
                    faces.push(Face { left: idx(i, j), right: idx(i + 1, j), axis: 0, area: hy, dist: hx });
                }
                if dim == 2 && j + 1 < ny {
                    faces.push(Face { left: idx(i, j), right: idx(i, j + 1), axis: 1, area: hx, dist: hy });
                }
            }
        }
        for j in 0..ny {
            boundary.push(BoundaryFace { cell: idx(0, j), axis: 0, sign: -1.0, area: hy });
            boundary.push(BoundaryFace { cell: idx(nx - 1, j), axis: 0, sign: 1.0, area: hy });
        }
        if dim == 2 {
            for i in 0..nx {
                boundary.push(BoundaryFace { cell: idx(i, 0), axis: 1, sign: -1.0, area: hx });
                boundary.push(BoundaryFace { cell: idx(i, ny - 1), axis: 1, sign: 1.0, area: hx });
            }
        }
        Ok(Grid {
            n,
            h,
            extent: spec.extent.clone(),
            faces,
            boundary,
        })
    }

    pub fn uniform_1d(cells: usize, length: f64) -> Result<Self> {
        Grid::new(&GridSpec {
            cells: vec![cells],
            extent: vec![length],
        })
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.n
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn num_cells(&self) -> usize {
        self.n.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    pub fn total_volume(&self) -> f64 {
        self.extent.iter().product()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary
    }

    /// Axis indices of a cell.
    pub fn cell_index(&self, c: usize) -> Vec<usize> {
        let nx = self.n[0];
        if self.dim() == 1 {
            vec![c]
        } else {
            vec![c % nx, c / nx]
        }
    }

    pub fn center(&self, c: usize) -> Vec<f64> {
        self.cell_index(c)
            .iter()
            .zip(&self.h)
            .map(|(&i, h)| (i as f64 + 0.5) * h)
            .collect()
    }

    /// Center coordinate along the first axis scaled to `[0, 1]`.
    pub fn normalized_x(&self, c: usize) -> f64 {
        self.center(c)[0] / self.extent[0]
    }

    /// Largest cell-index distance between coupled cells of a face stencil.
    pub fn face_bandwidth(&self) -> usize {
        if self.dim() == 1 {
            1
        } else {
            self.n[0]
        }
    }

    fn check(&self, len: usize, expected: usize) -> Result<()> {
        if len == expected {
            Ok(())
        } else {
            Err(Error::Dimension { expected, found: len })
        }
    }

    /// Two-point face gradient.
    pub fn grad(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u.len(), self.num_cells())?;
        Ok(self.faces.iter().map(|f| (u[f.right] - u[f.left]) / f.dist).collect())
    }

    /// Cell divergence of a face flux; boundary faces carry no flux.
    pub fn div(&self, flux: &[f64]) -> Result<Vec<f64>> {
        self.check(flux.len(), self.faces.len())?;
        let mut out = vec![0.0; self.num_cells()];
        for (f, &v) in self.faces.iter().zip(flux) {
            out[f.left] += f.area * v;
            out[f.right] -= f.area * v;
        }
        let vol = self.cell_volume();
        out.iter_mut().for_each(|x| *x /= vol);
        Ok(out)
    }

    /// Laplacian with zero-flux (Neumann) closure: `div(grad u)`.
    pub fn laplace(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.div(&self.grad(u)?)
    }

    /// Bi-Laplacian as the Neumann Laplacian applied twice.
    pub fn bilaplace(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.laplace(&self.laplace(u)?)
    }

    /// Face flux `c_f |D w|^(m-1) D w`, with unit weights when `coef` is `None`.
    pub fn p_laplacian_flux(&self, w: &[f64], m: f64, coef: Option<&[f64]>) -> Result<Vec<f64>> {
        if let Some(c) = coef {
            self.check(c.len(), self.faces.len())?;
        }
        let g = self.grad(w)?;
        Ok(g
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let c = coef.map_or(1.0, |c| c[k]);
                c * d.abs().powf(m - 1.0) * d
            })
            .collect())
    }

    /// `sum_c vol u_c v_c`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.cell_volume() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `sum_c vol u_c`.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        self.cell_volume() * u.iter().sum::<f64>()
    }

    /// Per-cell boundary contributions of the exchange laws
    /// `J_i . nu = sum_k b_ik (z_k - z0_k)` and `q . nu = alpha (T - T0)`,
    /// already multiplied by the face area.
    pub fn boundary_assemble(
        &self,
        b: &[Vec<f64>],
        z: &[Vec<f64>],
        z0: &[f64],
        alpha: f64,
        t: &[f64],
        t0: f64,
    ) -> Result<BoundaryTerms> {
        self.check(z.len(), self.num_cells())?;
        self.check(t.len(), self.num_cells())?;
        let n = z0.len();
        let mut species = vec![vec![0.0; n]; self.num_cells()];
        let mut heat = vec![0.0; self.num_cells()];
        for bf in &self.boundary {
            let zc = &z[bf.cell];
            self.check(zc.len(), n)?;
            for i in 0..n {
                let flux: f64 = (0..n).map(|k| b[i][k] * (zc[k] - z0[k])).sum();
                species[bf.cell][i] += bf.area * flux;
            }
            heat[bf.cell] += bf.area * alpha * (t[bf.cell] - t0);
        }
        Ok(BoundaryTerms { species, heat })
    }
}

/// Area-weighted boundary fluxes per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTerms {
    pub species: Vec<Vec<f64>>,
    pub heat: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid2(nx: usize, ny: usize) -> Grid {
        Grid::new(&GridSpec {
            cells: vec![nx, ny],
            extent: vec![1.0, 0.5],
        })
        .unwrap()
    }

    #[test]
    fn geometry() {
        let g = grid2(4, 3);
        assert_eq!(g.num_cells(), 12);
        assert_eq!(g.faces().len(), 3 * 3 + 4 * 2);
        assert_eq!(g.boundary_faces().len(), 2 * 3 + 2 * 4);
        let perimeter: f64 = g.boundary_faces().iter().map(|b| b.area).sum();
        assert!((perimeter - 3.0).abs() < 1e-14);
        assert!((g.cell_volume() * 12.0 - g.total_volume()).abs() < 1e-15);
        assert!(Grid::new(&GridSpec { cells: vec![2, 2, 2], extent: vec![1.0; 3] }).is_err());
    }

    #[test]
    fn gradient_exact_on_linears() {
        let g = grid2(5, 4);
        let u: Vec<f64> = (0..g.num_cells())
            .map(|c| {
                let x = g.center(c);
                3.0 * x[0] - 2.0 * x[1] + 1.0
            })
            .collect();
        let d = g.grad(&u).unwrap();
        for (f, v) in g.faces().iter().zip(&d) {
            let exact = if f.axis == 0 { 3.0 } else { -2.0 };
            assert!((v - exact).abs() < 1e-12);
        }
        let c = g.grad(&vec![2.5; g.num_cells()]).unwrap();
        assert!(c.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_second_order_at_faces() {
        let err = |n: usize| {
            let g = Grid::uniform_1d(n, 1.0).unwrap();
            let u: Vec<f64> = (0..n).map(|c| g.center(c)[0].sin()).collect();
            let d = g.grad(&u).unwrap();
            g.faces()
                .iter()
                .zip(&d)
                .map(|(f, v)| {
                    let xf = g.center(f.left)[0] + 0.5 * f.dist;
                    (v - xf.cos()).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let ratio = err(40) / err(80);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn laplace_exact_on_quadratics_in_interior() {
        let g = Grid::uniform_1d(10, 1.0).unwrap();
        let u: Vec<f64> = (0..10).map(|c| g.center(c)[0].powi(2)).collect();
        let l = g.laplace(&u).unwrap();
        for v in &l[1..9] {
            assert!((v - 2.0).abs() < 1e-10);
        }
        let lin: Vec<f64> = (0..10).map(|c| g.center(c)[0]).collect();
        let l = g.laplace(&lin).unwrap();
        for v in &l[1..9] {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn div_of_constant_interior_flux_vanishes_away_from_boundary() {
        let g = Grid::uniform_1d(6, 1.0).unwrap();
        let d = g.div(&vec![1.3; g.faces().len()]).unwrap();
        for v in &d[1..5] {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn boundary_terms_vanish_at_matched_data() {
        let g = grid2(3, 3);
        let b = crate::constitutive::projector_matrix(2);
        let z = vec![vec![0.4, -0.1]; g.num_cells()];
        let t = vec![1.7; g.num_cells()];
        let bt = g.boundary_assemble(&b, &z, &[0.4, -0.1], 2.0, &t, 1.7).unwrap();
        assert!(bt.species.iter().flatten().all(|v| v.abs() < 1e-15));
        assert!(bt.heat.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn boundary_quadratic_form_matches_expansion() {
        let g = Grid::uniform_1d(4, 1.0).unwrap();
        let b: Vec<Vec<f64>> = crate::constitutive::projector_matrix(3)
            .into_iter()
            .map(|r| r.into_iter().map(|x| 0.7 * x).collect())
            .collect();
        let z: Vec<Vec<f64>> = (0..4).map(|c| vec![0.3 * c as f64, -0.2, 1.1 - c as f64]).collect();
        let z0 = [0.1, 0.2, -0.4];
        let t = vec![1.0; 4];
        let bt = g.boundary_assemble(&b, &z, &z0, 0.0, &t, 1.0).unwrap();
        let form: f64 = (0..4).map(|c| (0..3).map(|i| z[c][i] * bt.species[c][i]).sum::<f64>()).sum();
        let mut direct = 0.0;
        for c in [0usize, 3] {
            for i in 0..3 {
                for j in 0..3 {
                    direct += b[i][j] * z[c][i] * (z[c][j] - z0[j]);
                }
            }
        }
        assert!((form - direct).abs() < 1e-14);
    }

    fn field(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, len)
    }

    proptest! {
        #[test]
        fn summation_by_parts(psi in field(12), flux in field(17)) {
            let g = grid2(4, 3);
            let div = g.div(&flux).unwrap();
            let dpsi = g.grad(&psi).unwrap();
            let lhs = g.inner(&psi, &div);
            let rhs: f64 = g.faces().iter().zip(&flux).zip(&dpsi).map(|((f, fl), d)| f.weight() * fl * d).sum();
            prop_assert!((lhs + rhs).abs() <= 1e-13 * (1.0 + lhs.abs()));
        }

        #[test]
        fn laplace_symmetric_and_dissipative(u in field(12), v in field(12)) {
            let g = grid2(4, 3);
            let lu = g.laplace(&u).unwrap();
            let lv = g.laplace(&v).unwrap();
            let a = g.inner(&u, &lv);
            let b = g.inner(&lu, &v);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            prop_assert!(g.inner(&u, &lu) <= 1e-12);
            let bl = g.bilaplace(&u).unwrap();
            prop_assert!(g.inner(&u, &bl) >= -1e-9);
        }

        #[test]
        fn p_laplacian_is_monotone(w in field(12), m in 1.0f64..8.0) {
            let g = grid2(4, 3);
            let flux = g.p_laplacian_flux(&w, m, None).unwrap();
            let d = g.div(&flux).unwrap();
            prop_assert!(g.inner(&w, &d) <= 1e-9);
        }
    }

    #[test]
    fn p_laplacian_with_unit_exponent_is_gradient() {
        let g = Grid::uniform_1d(5, 1.0).unwrap();
        let w = [0.1, 0.5, -0.2, 0.9, 0.0];
        assert_eq!(g.p_laplacian_flux(&w, 1.0, None).unwrap(), g.grad(&w).unwrap());
        let c = g.p_laplacian_flux(&[1.0; 5], 7.0, None).unwrap();
        assert!(c.iter().all(|v| *v == 0.0));
    }
}
