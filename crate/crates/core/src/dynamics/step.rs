use log::warn;

use super::{DynamicsError, SchemeConfig, SimState};
use crate::potential::{ClampTally, PotentialParams};
use crate::spectral::{Axis, Complex64, Grid, ScalarField, SpectralError, VectorField};

/// phi(theta) evaluated at collocation points and dealiased.
#[derive(Debug, Clone)]
pub struct PhiEvaluation {
    pub phi: ScalarField,
    /// Points pulled inside the clamp margin.
    pub clamped: u64,
    /// Points with |theta| >= 1.
    pub beyond_bounds: u64,
}

/// Counters accumulated over one coupled step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub clamped: u64,
    pub beyond_bounds: u64,
    pub cfl_warning: bool,
}

pub fn phi_field(theta: &ScalarField, cfg: &SchemeConfig) -> Result<PhiEvaluation, DynamicsError> {
    phi_field_with(theta, &cfg.potential, cfg)
}

fn phi_field_with(
    theta: &ScalarField,
    p: &PotentialParams,
    cfg: &SchemeConfig,
) -> Result<PhiEvaluation, DynamicsError> {
    let mut clamped = 0;
    let mut beyond_bounds = 0;
    let mut values = theta.to_values();
    for v in values.iter_mut() {
        if v.abs() >= 1.0 {
            beyond_bounds += 1;
        }
        let (s, moved) = p.clamp(*v, cfg.clamp)?;
        if moved {
            clamped += 1;
        }
        *v = p.derivative_unchecked(s);
    }
    let phi = ScalarField::from_values(theta.grid(), &values)?.dealiased();
    Ok(PhiEvaluation {
        phi,
        clamped,
        beyond_bounds,
    })
}

/// mu = kappa^{-1} phi(theta) - kappa Delta theta. Clamp events go to `tally`.
pub fn chemical_potential(
    theta: &ScalarField,
    cfg: &SchemeConfig,
    tally: &ClampTally,
) -> Result<ScalarField, DynamicsError> {
    let eval = phi_field(theta, cfg)?;
    tally.record(eval.clamped);
    Ok(eval.phi.scaled(1.0 / cfg.kappa).axpy(-cfg.kappa, &theta.laplacian()))
}

fn is_zero(f: &ScalarField) -> bool {
    f.coeffs().iter().all(|c| *c == Complex64::new(0.0, 0.0))
}

fn velocity_is_zero(u: &VectorField) -> bool {
    is_zero(&u.u1) && is_zero(&u.u2)
}

/// div(u theta) with dealiased products.
fn convection(theta: &ScalarField, u: &VectorField) -> Result<ScalarField, SpectralError> {
    if velocity_is_zero(u) {
        return Ok(ScalarField::zeros(theta.grid()));
    }
    let f1 = u.u1.dealias_product(theta)?;
    let f2 = u.u2.dealias_product(theta)?;
    Ok(&f1.d(Axis::X1) + &f2.d(Axis::X2))
}

fn truncate(f: ScalarField, cfg: &SchemeConfig) -> ScalarField {
    match cfg.galerkin_n {
        Some(r) => f.cutoff(r),
        None => f,
    }
}

/// Capillary force projected onto divergence-free fields: P(mu grad theta).
pub fn korteweg_force(theta: &ScalarField, mu: &ScalarField) -> Result<VectorField, DynamicsError> {
    let g = theta.gradient();
    Ok(VectorField::new(mu.dealias_product(&g.u1)?, mu.dealias_product(&g.u2)?)?.leray_project())
}

/// P(-kappa div(grad theta (x) grad theta)), the stress form of the same force.
pub fn korteweg_stress_form(theta: &ScalarField, kappa: f64) -> Result<VectorField, DynamicsError> {
    let g = theta.gradient();
    let s11 = g.u1.dealias_product(&g.u1)?;
    let s12 = g.u1.dealias_product(&g.u2)?;
    let s22 = g.u2.dealias_product(&g.u2)?;
    let f1 = (&s11.d(Axis::X1) + &s12.d(Axis::X2)).scaled(-kappa);
    let f2 = (&s12.d(Axis::X1) + &s22.d(Axis::X2)).scaled(-kappa);
    Ok(VectorField::new(f1, f2)?.leray_project())
}

/// Both force forms built pointwise on a grid `oversample` times finer from
/// the band-limited interpolant of theta, then truncated and projected.
/// Returns (P(mu grad theta), P(-kappa div(grad theta (x) grad theta))).
pub fn korteweg_forms_oversampled(
    theta: &ScalarField,
    cfg: &SchemeConfig,
    oversample: usize,
) -> Result<(VectorField, VectorField), DynamicsError> {
    let grid = theta.grid();
    let kappa = cfg.kappa;
    let fine = |f: &ScalarField| f.fine_values(oversample);
    let th = fine(theta);
    let t1 = fine(&theta.d(Axis::X1));
    let t2 = fine(&theta.d(Axis::X2));
    let lap = fine(&theta.laplacian());
    let t11 = fine(&theta.derivative(Axis::X1, 2)?);
    let t22 = fine(&theta.derivative(Axis::X2, 2)?);
    let t12 = fine(&theta.d(Axis::X1).d(Axis::X2));
    let p = &cfg.potential;
    let len = th.len();
    let (mut a1, mut a2, mut b1, mut b2) = (
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
    );
    for i in 0..len {
        let (s, _) = p.clamp(th[i], cfg.clamp)?;
        let mu = p.derivative_unchecked(s) / kappa - kappa * lap[i];
        a1[i] = mu * t1[i];
        a2[i] = mu * t2[i];
        b1[i] = -kappa * (lap[i] * t1[i] + t1[i] * t11[i] + t2[i] * t12[i]);
        b2[i] = -kappa * (lap[i] * t2[i] + t1[i] * t12[i] + t2[i] * t22[i]);
    }
    let back = |v: &[f64]| ScalarField::from_fine_values(grid, oversample, v);
    let a = VectorField::new(back(&a1)?, back(&a2)?)?.leray_project();
    let b = VectorField::new(back(&b1)?, back(&b2)?)?.leray_project();
    Ok((a, b))
}

/// One Cahn-Hilliard step; returns theta^{n+1} and clamp bookkeeping.
pub fn ch_step(state: &SimState, cfg: &SchemeConfig) -> Result<(ScalarField, StepEvents), DynamicsError> {
    let theta = truncate(state.theta.clone(), cfg);
    let eval = phi_field(&theta, cfg)?;
    let phi = truncate(eval.phi.scaled(1.0 / cfg.kappa), cfg);
    let conv = truncate(convection(&theta, &state.u)?, cfg);
    let grid = theta.grid().clone();
    let (dt, m, k, s, eps) = (
        cfg.dt,
        cfg.mobility,
        cfg.kappa,
        cfg.stabilization,
        cfg.epsilon,
    );
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    let (th, ph, cv) = (theta.coeffs(), phi.coeffs(), conv.coeffs());
    for i in 1..grid.len() {
        let q = grid.norm_sq(i);
        let lhs = 1.0 + eps * q + dt * m * (k * q * q + s * q);
        let rhs = th[i] * (1.0 + eps * q) + (ph[i] * (-q) + th[i] * (s * q)) * (dt * m) - cv[i] * dt;
        coeffs[i] = rhs / lhs;
    }
    coeffs[0] = th[0];
    let next = truncate(ScalarField::from_coeffs(&grid, coeffs)?, cfg);
    Ok((
        next,
        StepEvents {
            clamped: eval.clamped,
            beyond_bounds: eval.beyond_bounds,
            cfl_warning: false,
        },
    ))
}

fn strain_force(u: &VectorField, theta: &ScalarField, cfg: &SchemeConfig) -> Result<VectorField, DynamicsError> {
    let grid = theta.grid();
    let nu_min = cfg.viscosity.nu_min();
    let (nu_a, nu_b) = match cfg.viscosity {
        super::ViscosityModel::Constant { nu } => (nu, 0.0),
        super::ViscosityModel::Affine { nu_a, nu_b } => (nu_a, nu_b),
    };
    if nu_b == 0.0 && nu_a == nu_min {
        return Ok(VectorField::zeros(grid));
    }
    let excess = ScalarField::constant(grid, nu_a - nu_min).axpy(nu_b, theta);
    let d11 = u.u1.d(Axis::X1);
    let d22 = u.u2.d(Axis::X2);
    let d12 = &u.u1.d(Axis::X2) + &u.u2.d(Axis::X1);
    let s11 = excess.dealias_product(&d11)?.scaled(2.0);
    let s22 = excess.dealias_product(&d22)?.scaled(2.0);
    let s12 = excess.dealias_product(&d12)?;
    Ok(VectorField::new(
        &s11.d(Axis::X1) + &s12.d(Axis::X2),
        &s12.d(Axis::X1) + &s22.d(Axis::X2),
    )?)
}

fn advection(u: &VectorField) -> Result<VectorField, DynamicsError> {
    let grid = u.grid();
    if velocity_is_zero(u) {
        return Ok(VectorField::zeros(grid));
    }
    let comp = |c: &ScalarField| -> Result<ScalarField, SpectralError> {
        let a = u.u1.dealias_product(&c.d(Axis::X1))?;
        let b = u.u2.dealias_product(&c.d(Axis::X2))?;
        Ok(&a + &b)
    };
    Ok(VectorField::new(comp(&u.u1)?, comp(&u.u2)?)?)
}

/// One momentum step with velocity, theta and mu at the old time level.
/// Returns u^{n+1} and whether the CFL guard tripped.
pub fn ns_step(
    state: &SimState,
    cfg: &SchemeConfig,
    mu: &ScalarField,
) -> Result<(VectorField, bool), DynamicsError> {
    let u = &state.u;
    let theta = &state.theta;
    let grid: Grid = theta.grid().clone();
    let speed = u.linf();
    let cfl = cfg.dt * speed * grid.n() as f64;
    let cfl_warning = cfl > 1.0;
    if cfl_warning {
        warn!("CFL guard: dt |u|_inf N = {cfl:.3e} > 1 at t = {:.6e}", state.t);
    }
    let mut force = strain_force(u, theta, cfg)?.axpy(-1.0, &advection(u)?);
    if cfg.korteweg {
        let g = theta.gradient();
        let cap = VectorField::new(mu.dealias_product(&g.u1)?, mu.dealias_product(&g.u2)?)?;
        force = force.axpy(1.0, &cap);
    }
    force.u1.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    force.u2.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    let force = force.leray_project();
    let nu = cfg.viscosity.nu_min();
    let dt = cfg.dt;
    let advance = |c: &ScalarField, f: &ScalarField| -> ScalarField {
        let stepped = c.axpy(dt, f);
        let out = stepped.map_symbol(|i| 1.0 / (1.0 + dt * nu * grid.norm_sq(i)));
        truncate(out, cfg)
    };
    let next = VectorField::new(advance(&u.u1, &force.u1), advance(&u.u2, &force.u2))?.leray_project();
    Ok((next, cfl_warning))
}

/// theta first (with u^n), then u (with theta^n and mu^n).
pub fn coupled_step(state: &SimState, cfg: &SchemeConfig) -> Result<(SimState, StepEvents), DynamicsError> {
    let (theta_next, mut events) = ch_step(state, cfg)?;
    let needs_flow = !(velocity_is_zero(&state.u) && !cfg.korteweg);
    let u_next = if needs_flow {
        let tally = ClampTally::new();
        let mu = if cfg.korteweg {
            truncate(chemical_potential(&state.theta, cfg, &tally)?, cfg)
        } else {
            ScalarField::zeros(state.theta.grid())
        };
        let (u, cfl) = ns_step(state, cfg, &mu)?;
        events.cfl_warning = cfl;
        u
    } else {
        state.u.clone()
    };
    Ok((
        SimState {
            t: state.t + cfg.dt,
            theta: theta_next,
            u: u_next,
            step: state.step + 1,
            prev_theta: state.theta.clone(),
        },
        events,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::quadrature;
    use crate::potential::PotentialParams;

    fn cfg(dt: f64) -> SchemeConfig {
        SchemeConfig::new(dt, PotentialParams::new(1.0, 2.0).unwrap())
    }

    fn cos_x1(grid: &Grid, a: f64) -> ScalarField {
        ScalarField::from_modes(grid, &[(1, 0, a, 0.0)]).unwrap()
    }

    fn smooth_theta(grid: &Grid) -> ScalarField {
        ScalarField::from_modes(
            grid,
            &[(1, 0, 0.1, 0.0), (0, 1, 0.1, 0.0), (2, 1, 0.05, -0.03), (-1, 3, 0.02, 0.04)],
        )
        .unwrap()
    }

    #[test]
    fn chemical_potential_of_zero_is_zero() {
        let g = Grid::new(16).unwrap();
        let mu = chemical_potential(&ScalarField::zeros(&g), &cfg(1e-3), &ClampTally::new()).unwrap();
        assert_eq!(mu.max_coeff(), 0.0);
    }

    #[test]
    fn chemical_potential_matches_quadrature() {
        let g = Grid::new(32).unwrap();
        let c = cfg(1e-3);
        let a = 0.1;
        let mu = chemical_potential(&cos_x1(&g, a), &c, &ClampTally::new()).unwrap();
        let p = c.potential;
        // mu_hat(e1) = (1/(2pi)^2) int (phi(a cos x1) + a cos x1) e^{-i x1}
        let integral = quadrature(32, 8, |x1, _| {
            (p.derivative(a * x1.cos()).unwrap() + a * x1.cos()) * x1.cos()
        })
        .unwrap();
        let expected = integral / (4.0 * std::f64::consts::PI.powi(2));
        assert!((mu.coeff(1, 0).re - expected).abs() < 1e-8);
        assert!((mu.coeff(-1, 0).re - expected).abs() < 1e-8);
        let phi = phi_field(&cos_x1(&g, a), &c).unwrap().phi;
        assert!((mu.mean() - phi.mean()).abs() < 1e-15);
    }

    #[test]
    fn korteweg_forms_vanish_for_unidirectional_fields() {
        let g = Grid::new(32).unwrap();
        let c = cfg(1e-3);
        let th = cos_x1(&g, 0.3);
        let mu = chemical_potential(&th, &c, &ClampTally::new()).unwrap();
        assert!(korteweg_force(&th, &mu).unwrap().l2_norm() < 1e-12);
        assert!(korteweg_stress_form(&th, 1.0).unwrap().l2_norm() < 1e-12);
        assert_eq!(korteweg_force(&ScalarField::zeros(&g), &mu).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn korteweg_forms_agree() {
        let g = Grid::new(32).unwrap();
        let c = cfg(1e-3);
        let th = ScalarField::from_modes(&g, &[(1, 0, 0.1, 0.0), (0, 1, 0.1, 0.0)]).unwrap();
        let (a, b) = korteweg_forms_oversampled(&th, &c, 4).unwrap();
        assert!(a.axpy(-1.0, &b).l2_norm() <= 1e-8);
        let th = ScalarField::from_modes(&g, &[(1, 0, 0.1, 0.0), (0, 2, 0.1, 0.0), (3, 1, 0.05, 0.02)]).unwrap();
        let (a, b) = korteweg_forms_oversampled(&th, &c, 4).unwrap();
        assert!(a.axpy(-1.0, &b).l2_norm() <= 1e-8);
        assert!(a.l2_norm() > 1e-4);
    }

    #[test]
    fn ch_step_fixed_point_and_scalar_formula() {
        let g = Grid::new(16).unwrap();
        let c = cfg(1e-3);
        let zero = SimState::new(ScalarField::zeros(&g), VectorField::zeros(&g)).unwrap();
        assert_eq!(ch_step(&zero, &c).unwrap().0.max_coeff(), 0.0);

        let a = 0.05;
        let st = SimState::new(cos_x1(&g, a), VectorField::zeros(&g)).unwrap();
        let (next, _) = ch_step(&st, &c).unwrap();
        let phi_hat = phi_field(&st.theta, &c).unwrap().phi.coeff(1, 0).re;
        let (dt, s) = (c.dt, c.stabilization);
        let expected = (a / 2.0 + dt * (-phi_hat + s * a / 2.0)) / (1.0 + dt * (1.0 + s));
        assert!((next.coeff(1, 0).re - expected).abs() <= 1e-12);
        assert!((next.coeff(-1, 0).re - expected).abs() <= 1e-12);
    }

    #[test]
    fn taylor_green_decays_by_implicit_factor() {
        let g = Grid::new(32).unwrap();
        let mut c = cfg(1e-2);
        c.viscosity = crate::dynamics::ViscosityModel::constant(0.7).unwrap();
        let u1 = ScalarField::from_fn(&g, |x, y| x.sin() * y.cos()).unwrap();
        let u2 = ScalarField::from_fn(&g, |x, y| -x.cos() * y.sin()).unwrap();
        let u = VectorField::new(u1, u2).unwrap();
        assert!(advection(&u).unwrap().leray_project().l2_norm() <= 1e-10);
        let st = SimState::new(ScalarField::zeros(&g), u.clone()).unwrap();
        let mu = ScalarField::zeros(&g);
        let (next, cfl) = ns_step(&st, &c, &mu).unwrap();
        assert!(!cfl);
        let expected = u.map(|f| f.scaled(1.0 / (1.0 + 2.0 * 0.7 * c.dt)));
        assert!(next.axpy(-1.0, &expected).l2_norm() <= 1e-12);
    }

    #[test]
    fn coupled_step_keeps_invariants() {
        let g = Grid::new(32).unwrap();
        let mut c = cfg(1e-3);
        c.viscosity = crate::dynamics::ViscosityModel::affine(1.0, 0.3).unwrap();
        let th = smooth_theta(&g);
        let u = VectorField::new(
            ScalarField::from_modes(&g, &[(0, 0, 0.2, 0.0), (1, 2, 0.3, 0.1)]).unwrap(),
            ScalarField::from_modes(&g, &[(0, 0, -0.1, 0.0), (2, 1, 0.1, 0.2)]).unwrap(),
        )
        .unwrap()
        .leray_project();
        let mut st = SimState::new(th, u).unwrap();
        let m0 = st.theta.mean();
        let p0 = st.u.mean();
        for _ in 0..20 {
            st = coupled_step(&st, &c).unwrap().0;
        }
        assert!((st.theta.mean() - m0).abs() <= 1e-15);
        assert!((st.u.mean().0 - p0.0).abs() <= 1e-15);
        assert!((st.u.mean().1 - p0.1).abs() <= 1e-15);
        assert!(st.u.is_divergence_free());
        assert_eq!(st.step, 20);
        assert!((st.t - 0.02).abs() < 1e-15);
    }

    #[test]
    fn zero_state_is_fixed() {
        let g = Grid::new(16).unwrap();
        let st = SimState::new(ScalarField::zeros(&g), VectorField::zeros(&g)).unwrap();
        let (next, ev) = coupled_step(&st, &cfg(1e-3)).unwrap();
        assert_eq!(next.theta.max_coeff(), 0.0);
        assert_eq!(next.u.l2_norm(), 0.0);
        assert_eq!(ev, StepEvents::default());
    }
}
