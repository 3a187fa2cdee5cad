use super::*;
use crate::constitutive::{BoundaryMatrix, Model};
use crate::discretization::{Grid, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scheme_1d(cells: usize, config: SchemeConfig) -> Scheme {
    let mut model = Model::default();
    model.closures.boundary_matrix = BoundaryMatrix::Projector { scale: 0.7 };
    model.params.mu0 = vec![0.2, -0.1];
    Scheme::new(model, Grid::uniform_1d(cells, 1.0).unwrap(), config).unwrap()
}

fn random_state(s: &Scheme, rng: &mut ChaCha8Rng) -> EntropyState {
    let nc = s.grid.num_cells();
    let n = s.model.params.species;
    EntropyState {
        z: (0..nc).map(|_| (0..n).map(|_| rng.gen_range(-1.5..0.5)).collect()).collect(),
        w: (0..nc).map(|_| rng.gen_range(-0.3..0.3)).collect(),
        s: (0..nc).map(|_| rng.gen_range(0.3..0.9)).collect(),
    }
}

fn equilibrium(s: &Scheme) -> EntropyState {
    let n = s.model.params.species;
    let rho = s.model.densities_from_entropy_vars(&vec![0.0; n], 0.0, s.config.eps).unwrap();
    let p = s.model.pressure(&rho, 1.0, s.config.eps).unwrap();
    let sat = s.equilibrium_saturation(p).unwrap();
    EntropyState::uniform(s.grid.num_cells(), &vec![0.0; n], 0.0, sat)
}

#[test]
fn saturation_update_matches_bisection() {
    let cfg = SchemeConfig { tau: 0.1, ..SchemeConfig::default() };
    let s = scheme_1d(2, cfg);
    let got = s.saturation_update(0.5, 0.0, 1.0).unwrap();
    let g = |x: f64| ((1.0 - x) / 0.5).ln() + 0.1 / (x * x);
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((got - lo).abs() < 1e-14, "{got} vs {lo}");
}

#[test]
fn saturation_update_stationary_and_monotone() {
    let s = scheme_1d(2, SchemeConfig::default());
    let sp = 0.6;
    let p = -s.model.capillary_pressure(&sp);
    assert!((s.saturation_update(sp, p, 1.0).unwrap() - sp).abs() < 1e-14);
    // f(S) - f(S') = -tau (P_c(S) + p) with f decreasing: S grows with p.
    let mut prev = 0.0;
    for k in 0..200 {
        let p = -5.0 + 0.1 * k as f64;
        let v = s.saturation_update(sp, p, 1.0).unwrap();
        assert!(v > prev, "p = {p}: {v} vs {prev}");
        prev = v;
    }
    assert_eq!(s.saturation_update(sp, 3.0, 0.0).unwrap(), sp);
}

#[test]
fn equilibrium_residual_vanishes() {
    let s = scheme_1d(8, SchemeConfig::default());
    let st = equilibrium(&s);
    let mut model = s.model.clone();
    model.params.mu0 = vec![];
    let s = Scheme::new(model, s.grid.clone(), s.config.clone()).unwrap();
    let prev = s.previous_level(&st).unwrap();
    let r = s.residual(&st.unknowns(), &prev, 1.0).unwrap();
    assert!(s.scaled_residual_norm(&r) < 1e-12);
}

#[test]
fn sigma_zero_solution_is_zero_state() {
    let s = scheme_1d(6, SchemeConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let st = random_state(&s, &mut rng);
    let prev = s.previous_level(&st).unwrap();
    let zero = vec![0.0; st.unknowns().len()];
    let r = s.residual(&zero, &prev, 0.0).unwrap();
    assert!(r.iter().all(|v| *v == 0.0));
}

fn check_jacobian(s: &Scheme, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prev_state = random_state(s, &mut rng);
    let mut cur = random_state(s, &mut rng);
    cur.s = prev_state.s.clone();
    let prev = s.previous_level(&prev_state).unwrap();
    let x = cur.unknowns();
    for sigma in [1.0, 0.5] {
        let jac = s.jacobian(&x, &prev, sigma, false).unwrap();
        let fd = s.fd_jacobian(&x, &prev, sigma).unwrap();
        let scale = fd.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..x.len() {
            for j in 0..x.len() {
                let a = jac.get(i, j);
                assert!(
                    (a - fd[i][j]).abs() <= 1e-6 * scale,
                    "J[{i}][{j}] = {a} vs fd {} (scale {scale})",
                    fd[i][j]
                );
            }
        }
        // Jacobian-vector products against directional differences.
        let v: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let jv = jac.mul_vec(&v);
        let h = 1e-6;
        let xp: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let rp = s.residual(&xp, &prev, sigma).unwrap();
        let rm = s.residual(&xm, &prev, sigma).unwrap();
        let norm = jv.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for k in 0..x.len() {
            let d = (rp[k] - rm[k]) / (2.0 * h);
            assert!((d - jv[k]).abs() <= 1e-5 * norm);
        }
    }
}

#[test]
fn jacobian_matches_finite_differences_1d() {
    let s = scheme_1d(5, SchemeConfig { tau: 0.05, ..SchemeConfig::default() });
    check_jacobian(&s, 11);
}

#[test]
fn jacobian_matches_finite_differences_with_bilaplacian_and_cross_terms() {
    let mut model = Model::default();
    model.params.species = 3;
    model.closures.thermodiffusion = 0.4;
    model.closures.boundary_matrix = BoundaryMatrix::Projector { scale: 0.3 };
    model.params.alpha = 0.5;
    let grid = Grid::new(&GridSpec { cells: vec![3, 3], extent: vec![1.0, 1.0] }).unwrap();
    let cfg = SchemeConfig { delta: 0.02, ..SchemeConfig::default() };
    let s = Scheme::new(model, grid, cfg).unwrap();
    check_jacobian(&s, 12);
}

#[test]
fn frozen_jacobian_drops_coefficient_derivatives_only() {
    let s = scheme_1d(4, SchemeConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let st = random_state(&s, &mut rng);
    let prev = s.previous_level(&st).unwrap();
    let x = st.unknowns();
    let full = s.jacobian(&x, &prev, 1.0, false).unwrap();
    let frozen = s.jacobian(&x, &prev, 1.0, true).unwrap();
    let mut differ = false;
    for i in 0..x.len() {
        for j in 0..x.len() {
            differ |= (full.get(i, j) - frozen.get(i, j)).abs() > 1e-12;
        }
    }
    assert!(differ);
    // At a uniform state every gradient vanishes, so freezing changes nothing.
    let eq = equilibrium(&s);
    let prev = s.previous_level(&eq).unwrap();
    let x = eq.unknowns();
    let full = s.jacobian(&x, &prev, 1.0, false).unwrap();
    let frozen = s.jacobian(&x, &prev, 1.0, true).unwrap();
    for i in 0..x.len() {
        for j in 0..x.len() {
            assert!((full.get(i, j) - frozen.get(i, j)).abs() < 1e-12);
        }
    }
}

#[test]
fn newton_from_exact_solution_takes_no_step() {
    let s = scheme_1d(10, SchemeConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let st = random_state(&s, &mut rng);
    let prev = s.previous_level(&st).unwrap();
    let sol = s.newton_solve(&st.unknowns(), &prev, 1.0).unwrap();
    let again = s.newton_solve(&sol.x, &prev, 1.0).unwrap();
    assert_eq!(again.iterations, 0);
    assert_eq!(again.x, sol.x);
}

#[test]
fn newton_converges_quadratically() {
    let s = scheme_1d(20, SchemeConfig { newton_tol: 1e-11, ..SchemeConfig::default() });
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let st = random_state(&s, &mut rng);
    let prev = s.previous_level(&st).unwrap();
    let sol = s.newton_solve(&st.unknowns(), &prev, 1.0).unwrap();
    let h = &sol.history;
    assert!(h.len() >= 4, "{h:?}");
    // Once in the asymptotic regime r_{k+1} <= C r_k^2 with a moderate C.
    let k = h.len() - 1;
    let ratio = h[k - 1] / (h[k - 2] * h[k - 2]);
    assert!(ratio < 1e3, "history {h:?}");
}

#[test]
fn homotopy_reaches_newton_solution() {
    let s = scheme_1d(8, SchemeConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let st = random_state(&s, &mut rng);
    let prev = s.previous_level(&st).unwrap();
    let direct = s.newton_solve(&st.unknowns(), &prev, 1.0).unwrap();
    let hom = s.homotopy_solve(&prev).unwrap();
    for (a, b) in direct.x.iter().zip(&hom.x) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn picard_then_newton_converges() {
    let s = scheme_1d(8, SchemeConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let st = random_state(&s, &mut rng);
    let prev = s.previous_level(&st).unwrap();
    let pic = s.picard_solve(&st.unknowns(), &prev).unwrap();
    assert!(pic.residual < pic.history[0]);
    let sol = s.newton_solve(&pic.x, &prev, 1.0).unwrap();
    assert!(sol.residual <= s.config.newton_tol);
}

#[test]
fn equilibrium_step_is_stationary() {
    let mut model = Model::default();
    model.params.mu0 = vec![];
    let s = Scheme::new(model, Grid::uniform_1d(10, 1.0).unwrap(), SchemeConfig::default()).unwrap();
    let st = equilibrium(&s);
    let (next, rep) = s.time_step(&st, 1).unwrap();
    assert!(!rep.homotopy_path_used);
    for c in 0..10 {
        assert!((next.s[c] - st.s[c]).abs() < 1e-12);
        assert!(next.w[c].abs() < 1e-12);
    }
}

#[test]
fn zero_horizon_emits_initial_state_only() {
    let s = scheme_1d(4, SchemeConfig::default());
    let st = equilibrium(&s);
    let mut events = 0;
    s.run_simulation(&st, 0.0, |e| {
        assert_eq!(e.step, 0);
        events += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(events, 1);
}

/// Slow re-evaluation of every term of the residual from the pointwise
/// constitutive functions and the grid operators.
fn oracle_residual(s: &Scheme, cur: &EntropyState, prev: &EntropyState) -> Vec<f64> {
    let m = &s.model;
    let p = &m.params;
    let eps = s.config.eps;
    let tau = s.config.tau;
    let g = &s.grid;
    let nc = g.num_cells();
    let n = p.species;
    let vol = g.cell_volume();
    let old = prev.physical(m, eps).unwrap();
    let rho: Vec<Vec<f64>> = (0..nc).map(|c| m.densities_from_entropy_vars(&cur.z[c], cur.w[c], eps).unwrap()).collect();
    let t: Vec<f64> = cur.w.iter().map(|w| w.exp()).collect();
    let pr: Vec<f64> = (0..nc).map(|c| m.pressure(&rho[c], t[c], eps).unwrap()).collect();
    let rhoe: Vec<f64> = (0..nc).map(|c| m.internal_energy(&rho[c], t[c], eps).unwrap()).collect();
    let sat: Vec<f64> = (0..nc).map(|c| s.saturation_update(prev.s[c], pr[c], 1.0).unwrap()).collect();
    let mut out = vec![0.0; nc * (n + 1)];
    // Time differences, sources and zeroth-order regularizers.
    for c in 0..nc {
        let phi = m.porosity(g.normalized_x(c));
        let r = m.reaction_terms(&cur.z[c], eps);
        for i in 0..n {
            let dm = phi * (sat[c] * rho[c][i] - prev.s[c] * old.rho[c][i]) / tau;
            out[c * (n + 1) + i] = vol * (dm - r[i] + eps * cur.z[c][i]);
        }
        let (_, ef) = m.interfacial_and_fluid_energy(&rho[c], t[c], sat[c], eps).unwrap();
        let (_, es) = m.skeleton_entropy_energy(t[c], eps).unwrap();
        let de = phi * (ef - old.ef[c]) + (1.0 - phi) * (es - old.es[c]);
        out[c * (n + 1) + n] = vol * (de / tau + eps * (1.0 + t[c].powf(-p.k3)) * cur.w[c]);
    }
    // Fluxes via grid.grad / grid.div.
    let mean = |u: &[f64], f: &crate::discretization::Face| 0.5 * (u[f.left] + u[f.right]);
    let faces = g.faces();
    let inv_t: Vec<f64> = t.iter().map(|v| 1.0 / v).collect();
    let dinv = g.grad(&inv_t).unwrap();
    let dw = g.grad(&cur.w).unwrap();
    let dz: Vec<Vec<f64>> = (0..n).map(|i| g.grad(&cur.z.iter().map(|z| z[i]).collect::<Vec<_>>()).unwrap()).collect();
    let h: Vec<f64> = (0..nc).map(|c| rhoe[c] + pr[c]).collect();
    let lam: Vec<f64> = sat.iter().zip(&t).map(|(s, t)| m.mobility(s, t)).collect();
    let mut mass_flux = vec![vec![0.0; faces.len()]; n];
    let mut energy_flux = vec![0.0; faces.len()];
    for (k, f) in faces.iter().enumerate() {
        let rh: Vec<f64> = (0..n).map(|i| 0.5 * (rho[f.left][i] + rho[f.right][i])).collect();
        let th = mean(&t, f);
        let gp = th * ((0..n).map(|i| rh[i] * dz[i][k]).sum::<f64>() - mean(&h, f) * dinv[k]);
        let v = -p.permeability * mean(&lam, f) * gp;
        let grads: Vec<Vec<f64>> = (0..n).map(|i| vec![dz[i][k]]).collect();
        let ons = m.onsager_fluxes(&rh, th, &grads, &[dinv[k]]).unwrap();
        for i in 0..n {
            mass_flux[i][k] = rh[i] * v + ons.j[i][0] - eps * dz[i][k];
        }
        let tk3 = 0.5 * (t[f.left].powf(-p.k3) + t[f.right].powf(-p.k3));
        energy_flux[k] = mean(&h, f) * v + ons.q[0]
            - eps * ((1.0 + th) * dw[k] + tk3 * dw[k].abs().powf(p.k3 - 1.0) * dw[k]);
    }
    for i in 0..n {
        let d = g.div(&mass_flux[i]).unwrap();
        for c in 0..nc {
            out[c * (n + 1) + i] += vol * d[c];
        }
    }
    let d = g.div(&energy_flux).unwrap();
    let tb: Vec<f64> = t.clone();
    let bt = g
        .boundary_assemble(&m.boundary_matrix(), &cur.z, &p.boundary_potentials(), p.alpha, &tb, p.t0)
        .unwrap();
    for c in 0..nc {
        out[c * (n + 1) + n] += vol * d[c] + bt.heat[c];
        for i in 0..n {
            out[c * (n + 1) + i] += bt.species[c][i];
        }
    }
    out
}

#[test]
fn residual_matches_term_by_term_oracle() {
    let mut model = Model::default();
    model.closures.boundary_matrix = BoundaryMatrix::Projector { scale: 0.5 };
    model.params.mu0 = vec![0.3, -0.2];
    model.params.alpha = 0.7;
    model.closures.thermodiffusion = 0.2;
    let s = Scheme::new(model, Grid::uniform_1d(7, 1.0).unwrap(), SchemeConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..5 {
        let prev = random_state(&s, &mut rng);
        let cur = random_state(&s, &mut rng);
        let pl = s.previous_level(&prev).unwrap();
        let r = s.residual(&cur.unknowns(), &pl, 1.0).unwrap();
        let o = oracle_residual(&s, &cur, &prev);
        let scale = o.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (a, b) in r.iter().zip(&o) {
            assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
        }
    }
}

#[test]
fn single_species_reduces_to_porous_medium_transport() {
    // eps = delta = 0, no diffusion: the species row is Phi dt(S rho) + div(rho v).
    let mut model = Model::default();
    model.params.species = 1;
    model.closures.diffusivity = 0.0;
    model.closures.reaction_rate = 0.0;
    let cfg = SchemeConfig { eps: 0.0, ..SchemeConfig::default() };
    let s = Scheme::new(model, Grid::uniform_1d(5, 1.0).unwrap(), cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let prev = random_state(&s, &mut rng);
    let cur = random_state(&s, &mut rng);
    let pl = s.previous_level(&prev).unwrap();
    let ev = s.evaluate(&cur.unknowns(), &pl, 1.0).unwrap();
    let vol = s.grid.cell_volume();
    let mut expect: Vec<f64> = (0..5)
        .map(|c| vol * 0.3 * (ev.cells[c].s * ev.cells[c].rho[0] - pl.s[c] * pl.rho[c][0]) / s.config.tau)
        .collect();
    for (f, ff) in s.grid.faces().iter().zip(&ev.faces) {
        let rh = 0.5 * (ev.cells[f.left].rho[0] + ev.cells[f.right].rho[0]);
        expect[f.left] += rh * ff.velocity;
        expect[f.right] -= rh * ff.velocity;
    }
    for c in 0..5 {
        assert!((ev.residual[2 * c] - expect[c]).abs() < 1e-12);
    }
}
