use std::sync::Arc;

use proptest::prelude::*;
use specgal_core::bases::{build_sphere_basis, DiffusivityProfile, ModeLabel};
use specgal_core::control::{evaluate_cost, optimize, OptimizerOptions};
use specgal_core::dynamics::{
    a_priori_bound, galerkin_rhs, integrate, ControlSignal, PointwiseMap, RegionDofs,
};
use specgal_core::ebm::{
    build_ebm_basis, build_ebm_problem, ebm_control_operator, ebm_error_prefactor, ebm_nonlinearity,
    ebm_sphere_fixture, steady_state, AlbedoRamp, EbmDiscretization, EbmModel, EbmScenario, EmissionField,
    EmissionScenario, FieldSpec, Geometry, RegionMask, RegionSpec, Anomaly,
};
use specgal_core::Error;

fn region(name: &str, mask: RegionMask) -> RegionSpec {
    RegionSpec { name: name.into(), mask, dofs: RegionDofs::Uniform, lower: -20.0, upper: 20.0 }
}

fn polar() -> RegionSpec {
    region("arctic", RegionMask::LatLonBox { lat_min: 45.0, lat_max: 90.0, lon_min: 0.0, lon_max: 360.0 })
}

fn sphere(l: usize) -> EbmDiscretization {
    EbmDiscretization { geometry: Geometry::Sphere, band_limit: l, m_grid: 2000 }
}

fn zonal(modes: usize) -> EbmDiscretization {
    EbmDiscretization { geometry: Geometry::Zonal, band_limit: modes, m_grid: 2000 }
}

fn scenario(disc: EbmDiscretization, initial: FieldSpec, target: FieldSpec) -> EbmScenario {
    EbmScenario { discretization: disc, horizon: 1.0, initial, target, mu: 0.1, control_intervals: 4, steady_dt: 0.02 }
}

fn profile(coeffs: &[f64]) -> FieldSpec {
    FieldSpec::Profile { coeffs: coeffs.to_vec(), harmonics: vec![], anomalies: vec![] }
}

#[test]
fn saturated_ramp_leaves_linear_outgoing_radiation() {
    let model = EbmModel::default();
    let basis = build_sphere_basis(4, 0.6).unwrap();
    let f = ebm_nonlinearity(&model, &basis).unwrap();
    for node in basis.nodes().iter().step_by(7) {
        let s = model.insolation.eval(node.x, 0.0);
        for temp in [0.0, 3.0, 25.0] {
            let absorbed = model.solar_constant * s * (1.0 - model.albedo.alpha_min);
            assert!((f.value(0.0, node, temp) - absorbed + model.a + model.b * temp).abs() < 1e-10);
            assert_eq!(f.derivative(0.0, node, temp), -model.b);
        }
    }
    let dark = EbmModel { solar_constant: 1e-300, ..EbmModel::default() };
    let g = ebm_nonlinearity(&dark, &basis).unwrap();
    let node = &basis.nodes()[0];
    assert!((g.value(0.0, node, 5.0) + dark.a + dark.b * 5.0).abs() < 1e-12);
}

#[test]
fn declared_lipschitz_is_the_sum_of_slopes() {
    let model = EbmModel::default();
    let basis = build_sphere_basis(4, 0.6).unwrap();
    let f = ebm_nonlinearity(&model, &basis).unwrap();
    let ramp = model.albedo;
    let expected = model.b
        + model.solar_constant * model.insolation.sup() * (ramp.alpha_max - ramp.alpha_min) / (ramp.t_hi - ramp.t_lo);
    assert_eq!(f.declared_lipschitz(), Some(expected));
    // S = 1 − 0.482·P₂ peaks at the equator
    assert!((model.insolation.sup() - 1.241).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    #[test]
    fn sampled_slopes_never_exceed_declared_bound(
        v in -60.0f64..40.0, w in -60.0f64..40.0, j in 0usize..50, t in 0.0f64..1.0,
    ) {
        let model = EbmModel::default();
        let basis = build_sphere_basis(4, 0.6).unwrap();
        let f = ebm_nonlinearity(&model, &basis).unwrap();
        let node = &basis.nodes()[j];
        let lip = f.declared_lipschitz().unwrap();
        let diff = (f.value(t, node, v) - f.value(t, node, w)).abs();
        prop_assert!(diff <= lip * (v - w).abs() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn albedo_stays_between_its_plateaus(temp in -100.0f64..100.0) {
        let r = AlbedoRamp::default();
        let a = r.eval(temp);
        prop_assert!(a >= r.alpha_min && a <= r.alpha_max);
    }
}

#[test]
fn zonal_run_reaches_steady_state_with_energy_balance() {
    let model = EbmModel::default();
    let inst = build_ebm_problem(&model, &scenario(zonal(12), profile(&[10.0, 0.0, -20.0]), profile(&[0.0]))).unwrap();
    let p = &inst.problem;
    let n = p.basis.len();
    let steady = steady_state(p, n, 0.02, 1e-9, 200.0).unwrap();
    let rate = galerkin_rhs(p, n, 0.0, &steady, &[]).unwrap().norm();
    assert!(rate < 1e-6, "rate {rate}");
    let values = p.basis.synthesize_slice(&steady.coeffs);
    let forcing = p.eval_nonlinearity(0.0, &values);
    let total = p.basis.grid().integrate(&forcing);
    println!("zonal steady state: rate {rate:.2e}, ∫F = {total:.2e}, mean T = {:.3}", steady.coeffs[0] / 2f64.sqrt());
    assert!(total.abs() < 1e-6, "∫F = {total}");
}

#[test]
fn zonal_and_sphere_agree_on_symmetric_data() {
    // ramp moved far below the temperature range so F is affine in T
    let model = EbmModel {
        diffusivity: DiffusivityProfile::constant(1.0),
        albedo: AlbedoRamp { t_lo: -100.0, t_hi: -90.0, ..AlbedoRamp::default() },
        ..EbmModel::default()
    };
    let init = profile(&[5.0, 1.0, -20.0, 3.0]);
    let zon = build_ebm_problem(&model, &scenario(zonal(10), init.clone(), profile(&[0.0]))).unwrap();
    let sph = build_ebm_problem(&model, &scenario(sphere(9), init, profile(&[0.0]))).unwrap();
    let u = ControlSignal::zero(0.0, 1.0, 4, vec![], vec![]).unwrap();
    let tz = integrate(&zon.problem, zon.problem.basis.len(), &u, 0.005).unwrap();
    let ts = integrate(&sph.problem, sph.problem.basis.len(), &u, 0.005).unwrap();
    let labels = sph.problem.basis.labels();
    let norm = |l: usize| ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt();
    let mut worst: f64 = 0.0;
    for (yz, ys) in tz.states.iter().zip(&ts.states).step_by(20) {
        let zonal_values = zon.problem.basis.synthesize_slice(&yz.coeffs);
        for (node, vz) in zon.problem.basis.nodes().iter().zip(&zonal_values).step_by(37) {
            let mut vs = 0.0;
            for (k, label) in labels.iter().enumerate() {
                if let ModeLabel::Harmonic { l, m: 0 } = *label {
                    vs += ys.coeffs[k] * norm(l) * legendre(l, node.x);
                }
            }
            worst = worst.max((vz - vs).abs());
        }
    }
    println!("cross-geometry sup gap {worst:.3e}");
    assert!(worst < 1e-4, "gap {worst}");
}

fn legendre(l: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if l == 0 {
        return 1.0;
    }
    for k in 1..l {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

#[test]
fn whole_sphere_region_is_the_inclusion() {
    let model = EbmModel {
        regions: vec![RegionSpec {
            dofs: RegionDofs::Nodal,
            ..region("globe", RegionMask::LatLonBox { lat_min: -90.0, lat_max: 90.0, lon_min: 0.0, lon_max: 360.0 })
        }],
        ..EbmModel::default()
    };
    let basis = build_sphere_basis(3, 0.6).unwrap();
    let op = ebm_control_operator(&model, &basis).unwrap();
    assert_eq!(op.dof_count(), basis.grid().len());
    assert!((op.lipschitz() - 1.0).abs() < 1e-12);
    let v: Vec<f64> = (0..op.dof_count()).map(|j| (j as f64 * 0.37).sin()).collect();
    assert_eq!(op.apply(&v), v);
    assert!(op.apply(&vec![0.0; op.dof_count()]).iter().all(|x| *x == 0.0));
}

#[test]
fn regional_forcing_vanishes_outside_and_superposes_on_overlap() {
    let model = EbmModel {
        regions: vec![
            region("north", RegionMask::LatLonBox { lat_min: 30.0, lat_max: 90.0, lon_min: 0.0, lon_max: 360.0 }),
            region("band", RegionMask::LatLonBox { lat_min: 0.0, lat_max: 60.0, lon_min: 300.0, lon_max: 60.0 }),
        ],
        ..EbmModel::default()
    };
    let basis = build_sphere_basis(6, 0.6).unwrap();
    let op = ebm_control_operator(&model, &basis).unwrap();
    let north = &op.regions()[0].nodes;
    let band = &op.regions()[1].nodes;
    let only_north = op.apply(&[1.0, 0.0]);
    let both = op.apply(&[1.0, 1.0]);
    let mut overlap = 0;
    for j in 0..basis.grid().len() {
        let (a, b) = (north.contains(&j), band.contains(&j));
        assert_eq!(only_north[j], if a { 1.0 } else { 0.0 });
        assert_eq!(both[j], a as u8 as f64 + b as u8 as f64);
        overlap += (a && b) as usize;
    }
    assert!(overlap > 0);
    // wrapped longitude box
    assert!(band.iter().all(|&j| {
        let lon = basis.nodes()[j].lon.to_degrees();
        lon >= 300.0 || lon <= 60.0
    }));
}

#[test]
fn empty_region_and_variable_diffusivity_on_sphere_are_rejected() {
    let model = EbmModel { regions: vec![region("void", RegionMask::Nodes { nodes: vec![] })], ..EbmModel::default() };
    let basis = build_sphere_basis(3, 0.6).unwrap();
    assert!(ebm_control_operator(&model, &basis).is_err());

    let variable = EbmModel {
        diffusivity: DiffusivityProfile::Sampled { x: vec![-1.0, 1.0], d: vec![0.5, 0.7] },
        ..EbmModel::default()
    };
    assert!(matches!(build_ebm_basis(&variable, &sphere(4)), Err(Error::Unsupported(_))));
    assert!(build_ebm_basis(&variable, &zonal(6)).is_ok());
}

#[test]
fn a_priori_bound_holds_along_uncontrolled_runs() {
    let fx = ebm_sphere_fixture().unwrap();
    let p = &fx.problem;
    let u = fx.template.clone();
    let lip = p.nonlinearity.declared_lipschitz().unwrap();
    for n in [fx.n_values[0], fx.n_ref] {
        let traj = integrate(p, n, &u, fx.dt).unwrap();
        let bound = a_priori_bound(p, &u, lip, &traj.times).unwrap();
        for (y, b) in traj.states.iter().zip(&bound) {
            assert!(y.norm() <= *b, "‖y‖ = {} > {}", y.norm(), b);
        }
    }
}

#[test]
fn steady_target_gives_near_zero_control() {
    let model = EbmModel { regions: vec![polar()], ..EbmModel::default() };
    let steady = FieldSpec::SteadyState { offset: 0.0 };
    let inst = build_ebm_problem(&model, &scenario(sphere(4), steady.clone(), steady)).unwrap();
    let n = inst.problem.basis.len();
    let options = OptimizerOptions { dt: 0.025, rel_tol: 1e-6, ..OptimizerOptions::default() };
    let sol = optimize(&inst.problem, n, &inst.cost, &inst.template, &options).unwrap();
    let size = sol.control.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("stationary target: cost {:.3e}, max |u| {size:.3e}", sol.cost);
    assert!(size < 1e-3);
    assert!(sol.cost < 1e-6);
}

#[test]
fn cooling_scenario_improves_on_doing_nothing() {
    let model = EbmModel { regions: vec![polar()], ..EbmModel::default() };
    let inst = build_ebm_problem(
        &model,
        &scenario(sphere(4), FieldSpec::SteadyState { offset: 0.0 }, FieldSpec::SteadyState { offset: -1.0 }),
    )
    .unwrap();
    let n = inst.problem.basis.len();
    let options = OptimizerOptions { dt: 0.025, rel_tol: 1e-6, ..OptimizerOptions::default() };
    let idle = evaluate_cost(&inst.problem, n, &inst.template, &inst.cost, options.dt).unwrap();
    let sol = optimize(&inst.problem, n, &inst.cost, &inst.template, &options).unwrap();
    println!("cooling: J(0) = {idle:.4}, J* = {:.4}, ratio {:.4}", sol.cost, sol.cost / idle);
    assert!(sol.cost < idle);
    assert!(sol.control.values.iter().all(|v| *v <= 1e-12));
}

#[test]
fn prefactor_arithmetic() {
    assert_eq!(ebm_error_prefactor(1.0, 1.0, 8.0).unwrap(), 1.0);
    let a = ebm_error_prefactor(3.0, 2.0, 0.5).unwrap();
    assert_eq!(ebm_error_prefactor(3.0, 2.0, 1.0).unwrap(), a / 2.0);
    // (1/σ)·Lip with σ = μ/2 and Lip = 𝒞 + ‖T_d‖, times 2
    let (c, td, mu) = (2.5, 4.0, 0.3);
    let direct = 2.0 * (c + td) / (mu / 2.0);
    assert!((ebm_error_prefactor(c, td, mu).unwrap() - direct).abs() < 1e-12);
    assert!(matches!(ebm_error_prefactor(1.0, 1.0, 0.0), Err(Error::Precondition(_))));
}

#[test]
fn emissions_table_interpolates_in_time() {
    let basis = build_sphere_basis(3, 0.6).unwrap();
    let csv = "# test forcing\nt,mode_or_node,value\n0,node:2,1.0\n1,node:2,3.0\n0,mode:0,0.5\n";
    let field = EmissionField::from_csv(csv.as_bytes(), &basis).unwrap();
    let node = &basis.nodes()[2];
    let c0 = 0.5 * basis.mode(0)[2];
    assert!((field.eval(0.0, node) - (1.0 + c0)).abs() < 1e-12);
    assert!((field.eval(0.5, node) - (2.0 + c0 / 2.0)).abs() < 1e-12);
    assert!((field.eval(7.0, node) - 3.0).abs() < 1e-12);
    assert!((field.eval(-1.0, node) - (1.0 + c0)).abs() < 1e-12);
    assert!(EmissionField::from_csv("t,node,value\n".as_bytes(), &basis).is_err());
    assert!(EmissionField::from_csv("t,mode_or_node,value\n0,node:9999,1\n".as_bytes(), &basis).is_err());

    let ramp = EmissionField::resolve(&EmissionScenario::LinearRamp { start: 1.0, rate: 2.0 }, &basis).unwrap();
    assert_eq!(ramp.eval(0.5, node), 2.0);
}

#[test]
fn model_json_rejects_unknown_keys_and_fills_defaults() {
    let m: EbmModel = serde_json::from_str(r#"{"b": 2.0}"#).unwrap();
    assert_eq!(m.b, 2.0);
    assert_eq!(m.a, 210.0);
    assert!(serde_json::from_str::<EbmModel>(r#"{"bb": 2.0}"#).is_err());
    let text = serde_json::to_string(&EbmModel { regions: vec![polar()], ..EbmModel::default() }).unwrap();
    let back: EbmModel = serde_json::from_str(&text).unwrap();
    assert_eq!(back.regions.len(), 1);
    let _ = Arc::new(back);
}

fn anomaly_profile(lat: f64, lon: f64) -> FieldSpec {
    FieldSpec::Profile {
        coeffs: vec![],
        harmonics: vec![],
        anomalies: vec![Anomaly { lat, lon, amplitude: 5.0, width: 25.0 }],
    }
}

#[test]
fn anomaly_mean_and_rotation_invariance() {
    let model = EbmModel::default();
    let inst = |lat, lon| {
        build_ebm_problem(&model, &scenario(sphere(12), anomaly_profile(lat, lon), profile(&[0.0]))).unwrap().problem
    };
    let p = inst(40.0, 30.0);
    let grid = p.basis.grid();
    let values = p.basis.synthesize_slice(&p.initial.coeffs);
    let mean = grid.integrate(&values) / grid.integrate(&vec![1.0; grid.len()]);
    // spherical mean of a cap profile: ½∫₀^π f(θ) sin θ dθ, by composite Simpson
    let w = 25f64.to_radians();
    let m = 4000;
    let h = std::f64::consts::PI / m as f64;
    let f = |k: usize| {
        let th = k as f64 * h;
        5.0 * (-(th / w).powi(2)).exp() * th.sin()
    };
    let simpson = (1..m).map(|k| if k % 2 == 1 { 4.0 * f(k) } else { 2.0 * f(k) }).sum::<f64>() * h / 3.0;
    assert!((mean - 0.5 * simpson).abs() < 1e-3 * 0.5 * simpson, "{mean} vs {}", 0.5 * simpson);

    // degree-wise energy depends only on the angular distance profile
    let energy = |p: &specgal_core::dynamics::SemilinearProblem| {
        let mut e = vec![0.0; 13];
        for (label, c) in p.basis.labels().iter().zip(&p.initial.coeffs) {
            if let ModeLabel::Harmonic { l, .. } = label {
                e[*l] += c * c;
            }
        }
        e
    };
    let q = inst(-65.0, 200.0);
    for (a, b) in energy(&p).iter().zip(energy(&q)) {
        assert!((a - b).abs() < 1e-3 * a.max(1e-2), "{a} vs {b}");
    }

    let err = build_ebm_problem(&model, &scenario(zonal(8), anomaly_profile(40.0, 30.0), profile(&[0.0])));
    assert!(matches!(err, Err(Error::Model(_))));
}

#[test]
fn steady_state_freezes_time_dependent_emissions() {
    let steady = |emissions| {
        let model = EbmModel { emissions, ..EbmModel::default() };
        let sc = scenario(zonal(10), FieldSpec::SteadyState { offset: 0.0 }, profile(&[0.0]));
        build_ebm_problem(&model, &sc).unwrap().problem.initial
    };
    let ramp = steady(EmissionScenario::LinearRamp { start: 4.0, rate: 500.0 });
    let frozen = steady(EmissionScenario::Constant { value: 4.0 });
    let base = steady(EmissionScenario::None);
    let diff = ramp.coeffs.iter().zip(&frozen.coeffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-5, "{diff}");
    // extra forcing warms the mean
    assert!(frozen.coeffs[0] > base.coeffs[0] + 1.0);
}
