use elastoray_core::amplitude::{transport_a_minus1, transport_b0, BundleKind, BundleSpec, RayBundle};
use elastoray_core::interface_ops::{energy_flux_residual, principal_symbol, rt_matrices, solve_interface_system, InterfaceSetting};
use elastoray_core::raytrace::{trace_broken_ray, BranchPolicy, PhasePoint, TraceLimits};
use elastoray_core::tomography::{ellipticity_denominator, ellipticity_factor, ray_transform_2tensor, TensorField2};
use elastoray_core::{AnalyticField, ElasticMedium, Interface, Mode, Params, Side};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-r..r, -r..r, -r..r).prop_map(|(a, b, c)| Vector3::new(a, b, c))
}

fn field() -> impl Strategy<Value = AnalyticField> {
    let leaf = prop_oneof![
        (0.5..2.0f64).prop_map(AnalyticField::constant),
        (0.5..2.0f64, vec3(0.3)).prop_map(|(c, g)| AnalyticField::affine(c, g)),
        (vec3(1.0), -0.5..0.5f64, 0.3..1.5f64).prop_map(|(c, a, w)| AnalyticField::gaussian_bump(c, a, w)),
        (vec3(1.0), 0.5..2.0f64, -0.3..0.3f64).prop_map(|(c, a, b)| AnalyticField::radial(c, vec![a, 0.0, b])),
    ];
    leaf.prop_recursive(2, 6, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(AnalyticField::Sum),
            prop::collection::vec(inner.clone(), 1..3).prop_map(AnalyticField::Product),
            inner.prop_map(|f| AnalyticField::Exp(Box::new(AnalyticField::Product(vec![AnalyticField::constant(0.3), f])))),
        ]
    })
}

fn fd_check(f: &AnalyticField, x: &Vector3<f64>) -> (f64, f64) {
    let h = 1e-4;
    let j = f.jet(x);
    let mut g = Vector3::zeros();
    let mut hs = Matrix3::zeros();
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = h;
        g[i] = (f.value(&(x + e)) - f.value(&(x - e))) / (2.0 * h);
        let col = (f.gradient(&(x + e)) - f.gradient(&(x - e))) / (2.0 * h);
        hs.set_column(i, &col);
    }
    let eg = (g - j.gradient).norm() / j.gradient.norm().max(1.0);
    let eh = (hs - j.hessian).norm() / j.hessian.norm().max(1.0);
    (eg, eh)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn field_derivatives_match_finite_differences(f in field(), x in vec3(1.5)) {
        let (eg, eh) = fd_check(&f, &x);
        prop_assert!(eg < 1e-5 && eh < 1e-5, "gradient {eg}, hessian {eh}");
    }

    #[test]
    fn speed_gap_identity(lambda in -0.5..5.0f64, mu in 0.2..5.0f64, rho in 0.2..5.0f64) {
        prop_assume!(3.0 * lambda + 2.0 * mu > 0.0);
        let p = Params { lambda, mu, rho };
        let gap = p.cp().powi(2) - p.cs().powi(2);
        prop_assert!((gap - (lambda + mu) / rho).abs() < 1e-12 * (1.0 + gap.abs()));
    }

    #[test]
    fn denominator_bound(cs in 0.1..10.0f64, r in 1.0..100.0f64) {
        let cp = cs * r.sqrt();
        prop_assert!(ellipticity_denominator(cp, cs) >= 1.75 * cs.powi(4) * (1.0 - 1e-12));
    }

    #[test]
    fn factor_sign_follows_d(mu in 0.2..3.0f64, ratio in 0.0..4.0f64) {
        let p = Params { lambda: ratio * mu, mu, rho: 1.0 };
        let f = ellipticity_factor(&p);
        if ratio > 2.0 { prop_assert!(f > 0.0) } else if ratio < 2.0 { prop_assert!(f < 0.0) } else { prop_assert!(f == 0.0) }
    }

    #[test]
    fn crossing_is_order_consistent(a in vec3(2.0), b in vec3(2.0), r in 0.5..1.5f64) {
        let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        m.interfaces.push(Interface::sphere(Vector3::zeros(), r));
        let fwd = m.interface_crossing(&a, &b);
        let rev = m.interface_crossing(&b, &a);
        if let (Some(f), Some(g)) = (fwd, rev) {
            // a segment can cross a sphere twice; only single crossings are comparable
            let single = (a.norm() - r).signum() != (b.norm() - r).signum();
            if single {
                prop_assert!((f.point - g.point).norm() < 1e-10);
            }
        } else {
            prop_assert!(fwd.is_none() == rev.is_none());
        }
    }

    #[test]
    fn principal_symbol_is_symmetric(lambda in 0.1..3.0f64, mu in 0.1..3.0f64, xi in vec3(2.0)) {
        let s = principal_symbol(&Params { lambda, mu, rho: 1.0 }, -1.0, &xi);
        prop_assert!((s - s.transpose()).norm() == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn characteristic_conserved_in_graded_medium(x in vec3(0.5), d in vec3(1.0), g in vec3(0.1)) {
        prop_assume!(d.norm() > 0.1);
        let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        m.regions[0].mu = AnalyticField::affine(1.0, g);
        let start = PhasePoint::launch(&m, x, d, Mode::P, None).unwrap();
        let limits = TraceLimits { max_s: 3.0, ..TraceLimits::default() };
        let ray = trace_broken_ray(&m, &start, None, &BranchPolicy::PurelyTransmitted, &limits).unwrap();
        for seg in &ray.segments {
            for smp in &seg.samples {
                let c = m.regions[0].speed(&smp.point.x, Mode::P);
                prop_assert!(smp.point.characteristic_drift(c) < 1e-8);
            }
        }
    }

    #[test]
    fn energy_flux_balances(theta in 0.0..1.5f64, lambda in 0.5..4.0f64, mu in 0.3..3.0f64, rho in 0.5..3.0f64) {
        let p1 = Params { lambda: 1.0, mu: 1.0, rho: 1.0 };
        let p2 = Params { lambda, mu, rho };
        let xi_t = Vector3::new(theta.sin() / p1.cp(), 0.0, 0.0);
        let s = InterfaceSetting::from_params(Vector3::z(), xi_t, Side::Minus, p1, p2);
        let sol = solve_interface_system(&s, 0).unwrap();
        prop_assert!(energy_flux_residual(&s, 0, &sol) < 1e-10);
    }

    #[test]
    fn ray_transform_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, c1 in vec3(1.0), c2 in vec3(1.0)) {
        let m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
        let start = PhasePoint::launch(&m, Vector3::new(0.0, 0.0, -1.0), Vector3::new(0.2, 0.1, 1.0), Mode::P, None).unwrap();
        let limits = TraceLimits { max_s: 2.0, ..TraceLimits::default() };
        let ray = trace_broken_ray(&m, &start, None, &BranchPolicy::PurelyTransmitted, &limits).unwrap();
        let mk = |c: Vector3<f64>| {
            let f = AnalyticField::gaussian_bump(c, 1.0, 0.6);
            let z = AnalyticField::constant(0.0);
            TensorField2::entries([f.clone(), z.clone(), f.clone(), z.clone(), z, f])
        };
        let (ta, tb) = (mk(c1), mk(c2));
        let comb = TensorField2::Sum(vec![TensorField2::Scaled(a, Box::new(ta.clone())), TensorField2::Scaled(b, Box::new(tb.clone()))]);
        let lhs = ray_transform_2tensor(&m, &ray, &comb, 1e-12);
        let rhs = a * ray_transform_2tensor(&m, &ray, &ta, 1e-12) + b * ray_transform_2tensor(&m, &ray, &tb, 1e-12);
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }
}

#[test]
fn normal_incidence_impedance() {
    let p1 = Params { lambda: 1.0, mu: 1.0, rho: 1.0 };
    let p2 = Params { lambda: 3.0, mu: 2.0, rho: 2.5 };
    let s = InterfaceSetting::from_params(Vector3::z(), Vector3::zeros(), Side::Minus, p1, p2);
    let rt = rt_matrices(&s).unwrap();
    let (z1, z2) = (p1.rho * p1.cp(), p2.rho * p2.cp());
    let t = rt.m_t[(2, 2)];
    assert!((t - Complex64::new(2.0 * z1 / (z1 + z2), 0.0)).norm() < 1e-12);
}

#[test]
fn transports_are_linear() {
    let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
    m.regions[0].mu = AnalyticField::affine(1.0, Vector3::new(0.05, 0.0, 0.1));
    let mut spec = BundleSpec::new(BundleKind::PlaneWave, Vector3::zeros(), Vector3::new(0.1, 0.0, 1.0));
    spec.half_width = 4;
    spec.spacing = 1e-2;
    spec.t_end = 1.0;
    let b = RayBundle::trace(&m, spec).unwrap();
    let one = Complex64::new(1.0, 0.5);
    let t1 = transport_a_minus1(&m, &b, one, Complex64::new(0.3, 0.0)).unwrap();
    let t2 = transport_a_minus1(&m, &b, one * 2.0, Complex64::new(0.6, 0.0)).unwrap();
    for (a, c) in t1.samples.iter().zip(&t2.samples) {
        assert!((c.a_minus1 - a.a_minus1 * 2.0).norm() < 1e-12 * a.a_minus1.norm().max(1.0));
        assert!((c.b0 - a.b0 * 2.0).norm() < 1e-12);
    }
    let b1 = transport_b0(&m, &b, one).unwrap();
    let b2 = transport_b0(&m, &b, one * -3.0).unwrap();
    for (a, c) in b1.samples.iter().zip(&b2.samples) {
        assert!((c.b0 + a.b0 * 3.0).norm() < 1e-12);
    }
}

#[test]
fn density_only_variation_keeps_rays_straight() {
    // λ, μ ∝ ρ keeps c_P constant; b₀ then follows √(ρ(0)/ρ(s))
    let rho = AnalyticField::affine(1.0, Vector3::new(0.0, 0.0, 0.2));
    let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
    m.regions[0].rho = rho.clone();
    m.regions[0].lambda = rho.clone();
    m.regions[0].mu = rho.clone();
    let mut spec = BundleSpec::new(BundleKind::PlaneWave, Vector3::zeros(), Vector3::z());
    spec.t_end = 1.5;
    let b = RayBundle::trace(&m, spec).unwrap();
    let tr = transport_b0(&m, &b, Complex64::new(1.0, 0.0)).unwrap();
    let r0 = rho.value(&tr.samples[0].x);
    for s in &tr.samples {
        let exact = (r0 / rho.value(&s.x)).sqrt();
        assert!((s.b0.re - exact).abs() < 1e-9, "{} vs {}", s.b0.re, exact);
        assert!(s.div_n.abs() < 1e-9);
    }
}

#[test]
fn h_minus1_is_transverse() {
    let mut m = ElasticMedium::homogeneous(1.0, 1.0, 1.0);
    m.regions[0].mu = AnalyticField::Sum(vec![
        AnalyticField::affine(1.0, Vector3::new(0.05, 0.0, 0.1)),
        AnalyticField::gaussian_bump(Vector3::new(0.5, 0.3, 1.0), 0.2, 0.8),
    ]);
    let mut spec = BundleSpec::new(BundleKind::PlaneWave, Vector3::new(0.0, 0.0, -1.0), Vector3::new(0.1, 0.0, 1.0));
    spec.half_width = 3;
    spec.spacing = 1e-2;
    spec.t_end = 1.5;
    let b = RayBundle::trace(&m, spec).unwrap();
    let tr = transport_a_minus1(&m, &b, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
    let b0 = transport_b0(&m, &b, Complex64::new(1.0, 0.0)).unwrap();
    let mut nonzero = false;
    for s in &tr.samples {
        let n = b0.samples.iter().find(|q| q.t == s.t).unwrap().n;
        let h = s.h_minus1;
        let dot = h[0] * n.x + h[1] * n.y + h[2] * n.z;
        assert!(dot.norm() <= 1e-8 * h.norm() + 1e-300);
        nonzero |= h.norm() > 1e-6;
    }
    assert!(nonzero);
}
