//! Discrete entropy, energy and mass bookkeeping on accepted states, and
//! norm monitors along a trajectory.

use crate::constitutive::projector;
use crate::error::Result;
use crate::scheme::{CellQuantities, EntropyState, FaceFluxes, PhysicalFields, Scheme, StepReport};

/// Entropy production density per cell, split into its five sources.
/// Face contributions are shared equally by the two adjacent cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductionField {
    /// `K lambda |G|^2 / T`.
    pub darcy: Vec<f64>,
    /// `sum L_ij D z_i D z_j`.
    pub diffusion: Vec<f64>,
    /// `L_00 |D(1/T)|^2`.
    pub heat: Vec<f64>,
    /// `-Phi (S - S')(f(S) - f(S')) / (tau^2 T)`.
    pub capillary: Vec<f64>,
    /// `-sum r_i,eps z_i`.
    pub reaction: Vec<f64>,
}

impl ProductionField {
    pub fn total(&self) -> Vec<f64> {
        (0..self.darcy.len())
            .map(|c| self.darcy[c] + self.diffusion[c] + self.heat[c] + self.capillary[c] + self.reaction[c])
            .collect()
    }

    /// Smallest value of any single term over all cells.
    pub fn min_term(&self) -> f64 {
        [&self.darcy, &self.diffusion, &self.heat, &self.capillary, &self.reaction]
            .iter()
            .flat_map(|v| v.iter())
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Pieces of the discrete entropy balance tested with `phi = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyBalance {
    /// `tau^-1 (sum vol [Phi S rho eta + (1 - Phi) (rho eta)_s])` increment.
    pub rate: f64,
    pub production: f64,
    /// Entropy exchanged through the boundary laws.
    pub boundary: f64,
    /// Entropy-tested regularization terms.
    pub regularization: f64,
}

impl EntropyBalance {
    /// `rate - production - boundary - regularization`; nonnegative up to
    /// solver tolerance by concavity of the entropy.
    pub fn residual(&self) -> f64 {
        self.rate - self.production - self.boundary - self.regularization
    }
}

/// Norm monitors of one state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Monitors {
    /// `|P_c(S)|_L1`.
    pub pc_l1: f64,
    /// `|p|_L1`.
    pub p_l1: f64,
    /// `|rho|_L^gamma`.
    pub rho_lgamma: f64,
    /// `|S^(1/gamma) rho|_L^gamma`.
    pub s_rho_lgamma: f64,
    /// `|ln T|_H1`.
    pub log_t_h1: f64,
    /// `|T^(beta/2)|_H1`.
    pub t_beta_h1: f64,
    /// `|Pi z|_H1`.
    pub pi_z_h1: f64,
    /// `|sqrt(lambda / T) G|_L2`.
    pub darcy: f64,
    /// `|f(S)|_W1q`.
    pub f_w1q: f64,
}

impl Monitors {
    pub const NAMES: [&'static str; 9] = [
        "pc_l1",
        "p_l1",
        "rho_lgamma",
        "s_rho_lgamma",
        "log_t_h1",
        "t_beta_h1",
        "pi_z_h1",
        "darcy",
        "f_w1q",
    ];

    pub fn values(&self) -> [f64; 9] {
        [
            self.pc_l1,
            self.p_l1,
            self.rho_lgamma,
            self.s_rho_lgamma,
            self.log_t_h1,
            self.t_beta_h1,
            self.pi_z_h1,
            self.darcy,
            self.f_w1q,
        ]
    }

    pub fn from_values(v: &[f64]) -> Self {
        Monitors {
            pc_l1: v[0],
            p_l1: v[1],
            rho_lgamma: v[2],
            s_rho_lgamma: v[3],
            log_t_h1: v[4],
            t_beta_h1: v[5],
            pi_z_h1: v[6],
            darcy: v[7],
            f_w1q: v[8],
        }
    }
}

/// Per-step scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub entropy_production: f64,
    pub energy_residual: f64,
    pub mass_residual: Vec<f64>,
    pub lyapunov: f64,
    pub sat_min: f64,
    pub rho_min: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub monitors: Monitors,
}

/// Cell and face quantities of a stored state, with the saturation taken
/// from the state itself.
pub fn state_fluxes(
    scheme: &Scheme,
    state: &EntropyState,
    ph: &PhysicalFields,
) -> (Vec<CellQuantities<f64>>, Vec<FaceFluxes<f64>>) {
    let cells: Vec<CellQuantities<f64>> = (0..state.num_cells())
        .map(|c| CellQuantities {
            rho: ph.rho[c].clone(),
            t: ph.t[c],
            inv_t: 1.0 / ph.t[c],
            p: ph.p[c],
            rhoe: ph.rhoe[c],
            s: ph.s[c],
            ef: ph.ef[c],
            es: ph.es[c],
            mobility: scheme.model.mobility(&ph.s[c], &ph.t[c]),
        })
        .collect();
    let faces = scheme
        .grid
        .faces()
        .iter()
        .map(|f| {
            scheme.face_fluxes(
                f,
                &cells[f.left],
                &cells[f.right],
                &state.z[f.left],
                &state.z[f.right],
                &state.w[f.left],
                &state.w[f.right],
                1.0,
                false,
            )
        })
        .collect();
    (cells, faces)
}

/// The five production terms of the step `prev -> cur`.
pub fn entropy_production_field(scheme: &Scheme, prev: &EntropyState, cur: &EntropyState) -> Result<ProductionField> {
    let m = &scheme.model;
    let eps = scheme.config.eps;
    let tau = scheme.config.tau;
    let g = &scheme.grid;
    let nc = g.num_cells();
    let n = m.params.species;
    let vol = g.cell_volume();
    let ph = cur.physical(m, eps)?;
    let (_, faces) = state_fluxes(scheme, cur, &ph);
    let mut out = ProductionField {
        darcy: vec![0.0; nc],
        diffusion: vec![0.0; nc],
        heat: vec![0.0; nc],
        capillary: vec![0.0; nc],
        reaction: vec![0.0; nc],
    };
    for (f, ff) in g.faces().iter().zip(&faces) {
        let share = 0.5 * f.weight() / vol;
        let darcy = m.params.permeability * ff.mobility * ff.darcy_gradient.powi(2) / ff.t_hat;
        let rho_hat: Vec<f64> = (0..n).map(|i| 0.5 * (ph.rho[f.left][i] + ph.rho[f.right][i])).collect();
        let om = m.onsager(&rho_hat, &ff.t_hat);
        let dz: Vec<f64> = (0..n).map(|i| (cur.z[f.right][i] - cur.z[f.left][i]) / f.dist).collect();
        let dinv = (1.0 / ph.t[f.right] - 1.0 / ph.t[f.left]) / f.dist;
        let mut diff = 0.0;
        for i in 0..n {
            for k in 0..n {
                diff += om.l[i][k] * dz[i] * dz[k];
            }
        }
        let heat = om.l00 * dinv * dinv;
        for c in [f.left, f.right] {
            out.darcy[c] += share * darcy;
            out.diffusion[c] += share * diff;
            out.heat[c] += share * heat;
        }
    }
    let phi = scheme.porosity_field();
    for c in 0..nc {
        let (s, sp) = (cur.s[c], prev.s[c]);
        let df = m.dynamic_potential(&s) - m.dynamic_potential(&sp);
        out.capillary[c] = -phi[c] * (s - sp) * df / (tau * tau * ph.t[c]);
        let r = m.reaction_terms(&cur.z[c], eps);
        out.reaction[c] = -r.iter().zip(&cur.z[c]).map(|(r, z)| r * z).sum::<f64>();
    }
    Ok(out)
}

fn total_entropy(scheme: &Scheme, ph: &PhysicalFields) -> f64 {
    let phi = scheme.porosity_field();
    let vol = scheme.grid.cell_volume();
    (0..phi.len())
        .map(|c| vol * (phi[c] * ph.s[c] * ph.rhoeta[c] + (1.0 - phi[c]) * ph.etas[c]))
        .sum()
}

/// Discrete entropy balance of the step `prev -> cur`.
pub fn entropy_balance(scheme: &Scheme, prev: &EntropyState, cur: &EntropyState) -> Result<EntropyBalance> {
    let m = &scheme.model;
    let p = &m.params;
    let (eps, delta, tau) = (scheme.config.eps, scheme.config.delta, scheme.config.tau);
    let g = &scheme.grid;
    let vol = g.cell_volume();
    let n = p.species;
    let ph_old = prev.physical(m, eps)?;
    let ph = cur.physical(m, eps)?;
    let rate = (total_entropy(scheme, &ph) - total_entropy(scheme, &ph_old)) / tau;
    let production = g.integrate(&entropy_production_field(scheme, prev, cur)?.total());

    let b = m.boundary_matrix();
    let z0 = p.boundary_potentials();
    let mut boundary = 0.0;
    for bf in g.boundary_faces() {
        let z = &cur.z[bf.cell];
        let t = ph.t[bf.cell];
        let mut ex = 0.0;
        for i in 0..n {
            for k in 0..n {
                ex += z[i] * b[i][k] * (z[k] - z0[k]);
            }
        }
        boundary += bf.area * (ex - p.alpha * (t - p.t0) / t);
    }

    let mut regularization = 0.0;
    for c in 0..cur.num_cells() {
        let z2: f64 = cur.z[c].iter().map(|z| z * z).sum();
        let t = ph.t[c];
        regularization += vol * eps * (z2 - (1.0 + t.powf(-p.k3)) * cur.w[c] / t);
    }
    for f in g.faces() {
        let (l, r) = (f.left, f.right);
        let dz2: f64 = (0..n).map(|i| ((cur.z[r][i] - cur.z[l][i]) / f.dist).powi(2)).sum();
        let dw = (cur.w[r] - cur.w[l]) / f.dist;
        let dinv = (1.0 / ph.t[r] - 1.0 / ph.t[l]) / f.dist;
        let t_hat = 0.5 * (ph.t[l] + ph.t[r]);
        let tk3 = 0.5 * (ph.t[l].powf(-p.k3) + ph.t[r].powf(-p.k3));
        let flux = -eps * ((1.0 + t_hat) * dw + tk3 * dw.abs().powf(p.k3 - 1.0) * dw)
            - delta * (1.0 + t_hat) * dw.abs().powi(2) * dw;
        regularization += f.weight() * (eps * dz2 + flux * dinv);
    }
    if delta != 0.0 {
        for i in 0..n {
            let zi: Vec<f64> = cur.z.iter().map(|z| z[i]).collect();
            let lz = g.laplace(&zi)?;
            regularization += delta * g.inner(&lz, &lz);
        }
        let lw = g.laplace(&cur.w)?;
        let inv_t: Vec<f64> = ph.t.iter().map(|t| 1.0 / t).collect();
        let linv = g.laplace(&inv_t)?;
        let weighted: Vec<f64> = lw.iter().zip(&ph.t).map(|(l, t)| (1.0 + t) * l).collect();
        regularization -= delta * g.inner(&linv, &weighted);
    }
    Ok(EntropyBalance {
        rate,
        production,
        boundary,
        regularization,
    })
}

/// `sum vol [Phi E_f,eps + (1 - Phi) E_s,eps]`.
pub fn total_energy(scheme: &Scheme, ph: &PhysicalFields) -> f64 {
    let phi = scheme.porosity_field();
    let vol = scheme.grid.cell_volume();
    (0..phi.len())
        .map(|c| vol * (phi[c] * ph.ef[c] + (1.0 - phi[c]) * ph.es[c]))
        .sum()
}

/// `sum vol Phi S rho_i` per species.
pub fn total_mass(scheme: &Scheme, ph: &PhysicalFields) -> Vec<f64> {
    let phi = scheme.porosity_field();
    let vol = scheme.grid.cell_volume();
    let n = scheme.model.params.species;
    (0..n)
        .map(|i| (0..phi.len()).map(|c| vol * phi[c] * ph.s[c] * ph.rho[c][i]).sum())
        .collect()
}

/// Residual of the integrated energy balance
/// `d E + tau alpha sum_boundary (T - T0) + tau eps int (1 + T^-K3) ln T = 0`.
pub fn energy_budget(scheme: &Scheme, prev: &EntropyState, cur: &EntropyState) -> Result<f64> {
    let m = &scheme.model;
    let p = &m.params;
    let (eps, tau) = (scheme.config.eps, scheme.config.tau);
    let ph_old = prev.physical(m, eps)?;
    let ph = cur.physical(m, eps)?;
    let robin: f64 = scheme
        .grid
        .boundary_faces()
        .iter()
        .map(|bf| bf.area * p.alpha * (ph.t[bf.cell] - p.t0))
        .sum();
    let reg: f64 = (0..cur.num_cells())
        .map(|c| (1.0 + ph.t[c].powf(-p.k3)) * cur.w[c])
        .sum::<f64>()
        * scheme.grid.cell_volume();
    Ok(total_energy(scheme, &ph) - total_energy(scheme, &ph_old) + tau * (robin + eps * reg))
}

/// Residual per species of the integrated mass balance including sources,
/// boundary exchange and the zeroth-order regularizer.
pub fn mass_budget(scheme: &Scheme, prev: &EntropyState, cur: &EntropyState) -> Result<Vec<f64>> {
    let m = &scheme.model;
    let p = &m.params;
    let (eps, tau) = (scheme.config.eps, scheme.config.tau);
    let n = p.species;
    let vol = scheme.grid.cell_volume();
    let old = total_mass(scheme, &prev.physical(m, eps)?);
    let new = total_mass(scheme, &cur.physical(m, eps)?);
    let b = m.boundary_matrix();
    let z0 = p.boundary_potentials();
    let mut out: Vec<f64> = (0..n).map(|i| new[i] - old[i]).collect();
    for c in 0..cur.num_cells() {
        let r = m.reaction_terms(&cur.z[c], eps);
        for i in 0..n {
            out[i] += tau * vol * (eps * cur.z[c][i] - r[i]);
        }
    }
    for bf in scheme.grid.boundary_faces() {
        let z = &cur.z[bf.cell];
        for i in 0..n {
            let ex: f64 = (0..n).map(|k| b[i][k] * (z[k] - z0[k])).sum();
            out[i] += tau * bf.area * ex;
        }
    }
    Ok(out)
}

/// `sum vol [Phi (E_f,eps - S rho eta) + (1 - Phi)(E_s,eps - (rho eta)_s,eps)]`.
pub fn lyapunov(scheme: &Scheme, ph: &PhysicalFields) -> f64 {
    let phi = scheme.porosity_field();
    let vol = scheme.grid.cell_volume();
    (0..phi.len())
        .map(|c| {
            vol * (phi[c] * (ph.ef[c] - ph.s[c] * ph.rhoeta[c]) + (1.0 - phi[c]) * (ph.es[c] - ph.etas[c]))
        })
        .sum()
}

fn h1(scheme: &Scheme, u: &[f64]) -> f64 {
    let g = &scheme.grid;
    let grad = g.grad(u).expect("field length matches grid");
    let l2 = g.inner(u, u);
    let d: f64 = g.faces().iter().zip(&grad).map(|(f, d)| f.weight() * d * d).sum();
    (l2 + d).sqrt()
}

/// Norm monitors of one state.
pub fn state_monitors(scheme: &Scheme, state: &EntropyState) -> Result<Monitors> {
    let m = &scheme.model;
    let p = &m.params;
    let g = &scheme.grid;
    let ph = state.physical(m, scheme.config.eps)?;
    let nc = state.num_cells();
    let rho: Vec<f64> = ph.rho.iter().map(|r| r.iter().sum()).collect();
    let pc: Vec<f64> = ph.s.iter().map(|s| m.capillary_pressure(s).abs()).collect();
    let pabs: Vec<f64> = ph.p.iter().map(|v| v.abs()).collect();
    let rg: Vec<f64> = rho.iter().map(|r| r.powf(p.gamma)).collect();
    let srg: Vec<f64> = rg.iter().zip(&ph.s).map(|(r, s)| r * s).collect();
    let tb: Vec<f64> = ph.t.iter().map(|t| t.powf(0.5 * p.beta)).collect();
    let mut pi_z = 0.0;
    let pz: Vec<Vec<f64>> = state.z.iter().map(|z| projector(z)).collect();
    for i in 0..p.species {
        let comp: Vec<f64> = pz.iter().map(|z| z[i]).collect();
        pi_z += h1(scheme, &comp).powi(2);
    }
    let fs: Vec<f64> = ph.s.iter().map(|s| m.dynamic_potential(s)).collect();
    let fgrad = g.grad(&fs)?;
    let fq = g.integrate(&fs.iter().map(|v| v.abs().powf(p.q)).collect::<Vec<_>>())
        + g.faces().iter().zip(&fgrad).map(|(f, d)| f.weight() * d.abs().powf(p.q)).sum::<f64>();
    let (_, faces) = state_fluxes(scheme, state, &ph);
    let darcy: f64 = g
        .faces()
        .iter()
        .zip(&faces)
        .map(|(f, ff)| f.weight() * ff.mobility * ff.darcy_gradient.powi(2) / ff.t_hat)
        .sum();
    debug_assert_eq!(rho.len(), nc);
    Ok(Monitors {
        pc_l1: g.integrate(&pc),
        p_l1: g.integrate(&pabs),
        rho_lgamma: g.integrate(&rg).powf(1.0 / p.gamma),
        s_rho_lgamma: g.integrate(&srg).powf(1.0 / p.gamma),
        log_t_h1: h1(scheme, &state.w),
        t_beta_h1: h1(scheme, &tb),
        pi_z_h1: pi_z.sqrt(),
        darcy: darcy.sqrt(),
        f_w1q: fq.powf(1.0 / p.q),
    })
}

/// Worst discrete Gibbs-Duhem defect over all faces,
/// `D(rho eta) + sum z_i D rho_i - (1/T) D(rho e)` with the coefficients of
/// the left cell; first order in the mesh width on smooth fields.
pub fn gibbs_duhem_audit(scheme: &Scheme, state: &EntropyState) -> Result<f64> {
    let ph = state.physical(&scheme.model, scheme.config.eps)?;
    let n = scheme.model.params.species;
    let mut worst = 0.0f64;
    for f in scheme.grid.faces() {
        let (l, r) = (f.left, f.right);
        let d = |a: f64, b: f64| (b - a) / f.dist;
        let mut res = d(ph.rhoeta[l], ph.rhoeta[r]) - d(ph.rhoe[l], ph.rhoe[r]) / ph.t[l];
        for i in 0..n {
            res += state.z[l][i] * d(ph.rho[l][i], ph.rho[r][i]);
        }
        worst = worst.max(res.abs());
    }
    Ok(worst)
}

impl DiagnosticsRecord {
    pub fn compute(
        scheme: &Scheme,
        step: usize,
        time: f64,
        prev: Option<&EntropyState>,
        cur: &EntropyState,
    ) -> Result<Self> {
        let ph = cur.physical(&scheme.model, scheme.config.eps)?;
        let n = scheme.model.params.species;
        let (production, energy, mass) = match prev {
            Some(p) => (
                scheme.grid.integrate(&entropy_production_field(scheme, p, cur)?.total()),
                energy_budget(scheme, p, cur)?,
                mass_budget(scheme, p, cur)?,
            ),
            None => (0.0, 0.0, vec![0.0; n]),
        };
        let fold = |v: &mut dyn Iterator<Item = f64>, init: f64, f: fn(f64, f64) -> f64| v.fold(init, f);
        Ok(DiagnosticsRecord {
            step,
            time,
            entropy_production: production,
            energy_residual: energy,
            mass_residual: mass,
            lyapunov: lyapunov(scheme, &ph),
            sat_min: fold(&mut ph.s.iter().cloned(), f64::INFINITY, f64::min),
            rho_min: fold(&mut ph.rho.iter().flatten().cloned(), f64::INFINITY, f64::min),
            t_min: fold(&mut ph.t.iter().cloned(), f64::INFINITY, f64::min),
            t_max: fold(&mut ph.t.iter().cloned(), f64::NEG_INFINITY, f64::max),
            monitors: state_monitors(scheme, cur)?,
        })
    }

    /// Invariant violations of this record, re-checked independently of
    /// the scheme.
    pub fn violations(&self, scheme: &Scheme) -> Vec<String> {
        let tol = 10.0 * scheme.config.newton_tol;
        let eps = scheme.config.eps;
        let mut out = Vec::new();
        if self.entropy_production < -tol {
            out.push(format!("negative entropy production {:.3e}", self.entropy_production));
        }
        if self.energy_residual.abs() > tol * scheme.grid.total_volume().max(1.0) {
            out.push(format!("energy budget residual {:.3e}", self.energy_residual));
        }
        let floor = scheme.model.saturation_floor_limit().is_some_and(|l| eps > 0.0 && eps < l);
        if floor && self.sat_min < eps {
            out.push(format!("saturation {:.6e} below eps = {eps}", self.sat_min));
        }
        if !(self.rho_min > 0.0) || !(self.t_min > 0.0) {
            out.push(format!("positivity lost: rho_min = {}, T_min = {}", self.rho_min, self.t_min));
        }
        out
    }
}

/// Time-aggregated monitors: sup in time for state norms, `L2` in time for
/// the gradient-type norms.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorTable {
    pub names: Vec<&'static str>,
    pub values: Vec<f64>,
}

pub fn apriori_monitors(records: &[DiagnosticsRecord], tau: f64) -> MonitorTable {
    // Indices of the gradient-type monitors integrated in time.
    let l2_time = [4usize, 5, 6, 7];
    let mut values = vec![0.0; Monitors::NAMES.len()];
    for (k, r) in records.iter().enumerate() {
        for (j, v) in r.monitors.values().iter().enumerate() {
            if l2_time.contains(&j) {
                if k > 0 {
                    values[j] += tau * v * v;
                }
            } else {
                values[j] = f64::max(values[j], *v);
            }
        }
    }
    for j in l2_time {
        values[j] = values[j].sqrt();
    }
    MonitorTable {
        names: Monitors::NAMES.to_vec(),
        values,
    }
}

/// Records of a run together with its step reports.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub reports: Vec<StepReport>,
    pub final_state: EntropyState,
}

/// Runs a simulation and records diagnostics at every step. `snapshot` is
/// called with every state (including the initial one).
pub fn run_with_diagnostics<F>(
    scheme: &Scheme,
    initial: &EntropyState,
    horizon: f64,
    mut snapshot: F,
) -> Result<Trajectory>
where
    F: FnMut(usize, f64, &EntropyState) -> Result<()>,
{
    let mut records = Vec::new();
    let mut reports = Vec::new();
    let final_state = scheme.run_simulation(initial, horizon, |e| {
        records.push(DiagnosticsRecord::compute(scheme, e.step, e.time, e.previous, e.current)?);
        if let Some(r) = e.report {
            reports.push(r.clone());
        }
        snapshot(e.step, e.time, e.current)
    })?;
    Ok(Trajectory {
        records,
        reports,
        final_state,
    })
}
