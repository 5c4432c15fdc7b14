use super::*;
use crate::linalg::dot;
use crate::mesh::{structured_rectangle, MeshOptions};
use proptest::prelude::{prop_assert, proptest, ProptestConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALL_TAGS: [i64; 4] = [1, 2, 3, 4];

fn steel() -> PlateMaterial {
    PlateMaterial::new(210e9, 0.3, 7850.0, 0.01).unwrap()
}

fn plate(n: usize, kind: Formulation, variant: ControlVariant) -> AssembledPlate {
    let mesh = structured_rectangle(1.0, 1.0, n, n).unwrap();
    assemble_plate(&mesh, &steel(), FESpaces::default(), kind, variant, &ALL_TAGS).unwrap()
}

fn block(p: &AssembledPlate, m: &CsrMatrix, r: &str, c: &str) -> CsrMatrix {
    let l = p.system.layout();
    m.block(l.range(r).unwrap(), l.range(c).unwrap())
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn mass_block_on_unit_right_triangle() {
    let mesh = Mesh2D::new(
        vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        vec![[0, 1, 2]],
        vec![([0, 1], 1), ([1, 2], 1), ([2, 0], 1)],
        MeshOptions::default(),
    )
    .unwrap();
    let p = assemble_plate(
        &mesh,
        &steel(),
        FESpaces::default(),
        Formulation::Vectorial,
        ControlVariant::Dynamic,
        &[1],
    )
    .unwrap();
    let m = block(&p, p.system.mass(), "w", "w");
    for a in 0..3 {
        for b in 0..3 {
            let want = 0.5 / 12.0 * if a == b { 2.0 } else { 1.0 };
            assert!((m.get(a, b) - want).abs() < 1e-16);
        }
    }
}

#[test]
fn piecewise_constant_mass_is_area_diagonal() {
    let mesh = structured_rectangle(2.0, 1.0, 3, 2).unwrap();
    let p = assemble_plate(
        &mesh,
        &steel(),
        FESpaces::with_strain(ScalarFamily::P0),
        Formulation::Vectorial,
        ControlVariant::Dynamic,
        &ALL_TAGS,
    )
    .unwrap();
    let m = block(&p, p.system.mass(), "gamma_y", "gamma_y");
    assert_eq!(m.nnz(), mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        assert!((m.get(t, t) - mesh.triangle_area(t)).abs() < 1e-15);
    }
}

#[test]
fn mass_rows_sum_to_area() {
    let p = plate(1, Formulation::Vectorial, ControlVariant::Dynamic);
    let m = block(&p, p.system.mass(), "theta_x", "theta_x");
    let total: f64 = m.iter().map(|(_, _, v)| v).sum();
    assert!((total - 1.0).abs() < 1e-15);
}

#[test]
fn poisson_zero_decouples_curvatures() {
    let mesh = structured_rectangle(1.0, 1.0, 3, 3).unwrap();
    let mat = PlateMaterial::new(1e9, 0.0, 1000.0, 0.1).unwrap();
    let p = assemble_plate(
        &mesh,
        &mat,
        FESpaces::default(),
        Formulation::Vectorial,
        ControlVariant::Dynamic,
        &ALL_TAGS,
    )
    .unwrap();
    assert_eq!(block(&p, p.system.energy(), "kappa_xx", "kappa_yy").nnz(), 0);
    let p = plate(3, Formulation::Vectorial, ControlVariant::Dynamic);
    assert!(block(&p, p.system.energy(), "kappa_xx", "kappa_yy").nnz() > 0);
}

#[test]
fn energy_blocks_are_scaled_masses() {
    let p = plate(3, Formulation::Vectorial, ControlVariant::Dynamic);
    let rig = plate_rigidity(&steel()).unwrap();
    let coefs = [
        ("w", 1.0 / rig.areal_mass),
        ("theta_x", 1.0 / rig.rotary_inertia),
        ("theta_y", 1.0 / rig.rotary_inertia),
        ("kappa_xx", rig.bending[0][0]),
        ("kappa_xy", rig.bending[2][2]),
        ("gamma_x", rig.shear[0][0]),
    ];
    for (name, c) in coefs {
        let m = block(&p, p.system.mass(), name, name);
        let q = block(&p, p.system.energy(), name, name);
        for (i, j, v) in m.iter() {
            assert!((q.get(i, j) - c * v).abs() <= 1e-13 * (c * v).abs(), "{name}");
        }
    }
}

/// Energy by direct quadrature of the pointwise density on nodal fields.
fn density_oracle(mesh: &Mesh2D, a: &[f64], n: usize) -> f64 {
    let rig = plate_rigidity(&steel()).unwrap();
    let field = |f: usize, node: usize| a[f * n + node];
    let pts = [
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ];
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        let area = mesh.triangle_area(t);
        for b in &pts {
            let v: Vec<f64> = (0..8).map(|f| (0..3).map(|k| b[k] * field(f, tri[k])).sum()).collect();
            let kappa = [v[3], v[4], v[5]];
            let mut bend = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    bend += kappa[i] * rig.bending[i][j] * kappa[j];
                }
            }
            let dens = v[0] * v[0] / rig.areal_mass
                + (v[1] * v[1] + v[2] * v[2]) / rig.rotary_inertia
                + bend
                + rig.shear[0][0] * (v[6] * v[6] + v[7] * v[7]);
            total += 0.5 * dens * area / 3.0;
        }
    }
    total
}

#[test]
fn hamiltonian_matches_density_quadrature() {
    let p = plate(4, Formulation::Vectorial, ControlVariant::Dynamic);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let a = random_vec(p.system.dim(), &mut rng);
        let h = p.system.hamiltonian(&a);
        let want = density_oracle(&p.mesh, &a, p.n_velocity());
        assert!(h >= 0.0);
        assert!((h - want).abs() <= 1e-12 * want, "{h} {want}");
    }
}

#[test]
fn interconnection_is_exactly_skew() {
    for kind in [Formulation::Vectorial, Formulation::Tensorial] {
        for variant in [ControlVariant::Dynamic, ControlVariant::Kinematic] {
            let p = plate(3, kind, variant);
            assert_eq!(p.system.interconnection().skew_defect().0, 0.0);
        }
    }
}

#[test]
fn derivative_blocks_annihilate_constants() {
    for variant in [ControlVariant::Dynamic, ControlVariant::Kinematic] {
        let p = plate(5, Formulation::Vectorial, variant);
        for (name, d) in p.derivative_blocks() {
            let r = d.mul_vec(&vec![1.0; d.ncols()]);
            let scale = d.max_abs();
            assert!(scale > 0.0, "{name}");
            assert!(r.iter().all(|v| v.abs() <= 1e-13 * scale), "{name}");
        }
    }
}

#[test]
fn rotation_coupling_equals_scalar_mass() {
    let mesh = structured_rectangle(1.0, 1.0, 4, 3).unwrap();
    let p = assemble_plate(
        &mesh,
        &steel(),
        FESpaces::default(),
        Formulation::Vectorial,
        ControlVariant::Dynamic,
        &ALL_TAGS,
    )
    .unwrap();
    let s = scalar_blocks(&mesh, ScalarFamily::P1).unwrap();
    let coupling = block(&p, p.system.interconnection(), "theta_x", "gamma_x");
    for (i, j, v) in s.d0.iter() {
        assert!((coupling.get(j, i) - v).abs() < 1e-15);
        assert!((s.mass_v.get(i, j) - v).abs() < 1e-15);
    }
    let dx = block(&p, p.system.interconnection(), "kappa_xx", "theta_x");
    for (i, j, v) in s.dx.iter() {
        assert!((dx.get(i, j) - v).abs() < 1e-12 * v.abs().max(1.0));
    }
}

#[test]
fn p0_blocks_match_closed_form() {
    let mesh = structured_rectangle(1.0, 2.0, 3, 2).unwrap();
    let p = assemble_plate(
        &mesh,
        &steel(),
        FESpaces::with_strain(ScalarFamily::P0),
        Formulation::Tensorial,
        ControlVariant::Dynamic,
        &ALL_TAGS,
    )
    .unwrap();
    let s = scalar_blocks(&mesh, ScalarFamily::P0).unwrap();
    let dy = block(&p, p.system.interconnection(), "K_yy", "theta_y");
    let d0 = block(&p, p.system.interconnection(), "gamma_y", "theta_y");
    for (i, j, v) in s.dy.iter() {
        assert!((dy.get(i, j) - v).abs() < 1e-13 * v.abs().max(1.0));
    }
    for (i, j, v) in s.d0.iter() {
        assert!((d0.get(i, j) + v).abs() < 1e-15);
    }
}

#[test]
fn kinematic_variant_rejects_piecewise_constant_strains() {
    let mesh = structured_rectangle(1.0, 1.0, 2, 2).unwrap();
    let err = assemble_plate(
        &mesh,
        &steel(),
        FESpaces::with_strain(ScalarFamily::P0),
        Formulation::Vectorial,
        ControlVariant::Kinematic,
        &ALL_TAGS,
    )
    .unwrap_err();
    assert!(matches!(err, Error::InvalidParameter(_)));
}

#[test]
fn tensorial_grad_is_minus_div_transpose() {
    let p = plate(3, Formulation::Tensorial, ControlVariant::Dynamic);
    let j = p.system.interconnection();
    for (c, th) in [("K_xx", "theta_x"), ("K_xy", "theta_y"), ("gamma_x", "w")] {
        let grad = block(&p, j, c, th);
        let div = block(&p, j, th, c);
        assert_eq!(grad, div.transpose().scaled(-1.0));
    }
}

#[test]
fn rigid_motion_produces_no_strain_rate() {
    let mesh = structured_rectangle(1.3, 0.7, 5, 4).unwrap();
    let (tx, ty) = (0.37, -1.21);
    for kind in [Formulation::Vectorial, Formulation::Tensorial] {
        let p = assemble_plate(&mesh, &steel(), FESpaces::default(), kind, ControlVariant::Dynamic, &ALL_TAGS).unwrap();
        let zero = |_: Point| 0.0;
        let ew = move |x: Point| 0.5 + tx * x[0] + ty * x[1];
        let etx = move |_: Point| tx;
        let ety = move |_: Point| ty;
        let e = p.interpolate([&ew, &etx, &ety, &zero, &zero, &zero, &zero, &zero]);
        let f = p.system.interconnection().mul_vec(&e);
        let scale = p.system.interconnection().max_abs();
        for v in &f[p.strain_range()] {
            assert!(v.abs() <= 1e-12 * scale, "{v}");
        }
    }
}

#[test]
fn vectorial_and_tensorial_energies_agree() {
    let mesh = structured_rectangle(1.0, 1.0, 4, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for strain in [ScalarFamily::P1, ScalarFamily::P0] {
        let spaces = FESpaces::with_strain(strain);
        let v = assemble_plate(
            &mesh,
            &steel(),
            spaces,
            Formulation::Vectorial,
            ControlVariant::Dynamic,
            &ALL_TAGS,
        )
        .unwrap();
        let t = assemble_plate(
            &mesh,
            &steel(),
            spaces,
            Formulation::Tensorial,
            ControlVariant::Dynamic,
            &ALL_TAGS,
        )
        .unwrap();
        let a_vec = random_vec(v.system.dim(), &mut rng);
        let a_ten = t.from_engineering(&a_vec);
        let (hv, ht) = (v.system.hamiltonian(&a_vec), t.system.hamiltonian(&a_ten));
        assert!((hv - ht).abs() <= 1e-12 * hv);
        assert_eq!(t.to_engineering(&a_ten), a_vec);
    }
}

#[test]
fn shear_force_pairing_gives_perimeter() {
    let p = plate(3, Formulation::Vectorial, ControlVariant::Dynamic);
    let one = |_: Point| 1.0;
    let zero = |_: Point| 0.0;
    let e = p.interpolate([&one, &zero, &zero, &zero, &zero, &zero, &zero, &zero]);
    let u: Vec<f64> = p
        .ports
        .iter()
        .map(|q| if q.quantity == PortQuantity::ShearForce { 1.0 } else { 0.0 })
        .collect();
    let y = p.system.output(&e);
    assert!((dot(&y, &u) - 4.0).abs() < 1e-12);
}

#[test]
fn torsional_port_rotation_rows() {
    let p = plate(2, Formulation::Vectorial, ControlVariant::Dynamic);
    let b = p.system.input();
    let l = p.system.layout();
    let (tx, ty) = (l.range("theta_x").unwrap(), l.range("theta_y").unwrap());
    for (c, port) in p.ports.iter().enumerate() {
        if port.tag != 2 || port.quantity != PortQuantity::TorsionalMoment {
            continue;
        }
        for r in tx.clone() {
            assert_eq!(b.get(r, c), 0.0);
        }
        assert!(ty.clone().any(|r| b.get(r, c) > 0.0));
    }
}

#[test]
fn single_tag_ports_are_local() {
    let mesh = structured_rectangle(1.0, 1.0, 4, 4).unwrap();
    for variant in [ControlVariant::Dynamic, ControlVariant::Kinematic] {
        let p = assemble_plate(&mesh, &steel(), FESpaces::default(), Formulation::Vectorial, variant, &[3]).unwrap();
        assert_eq!(p.system.num_ports(), 15);
        let east: Vec<usize> = mesh.boundary_nodes_by_tag(&[3]).unwrap();
        let nv = p.n_velocity();
        for (r, _, _) in p.system.input().iter() {
            let node = if r < 3 * nv { r % nv } else { (r - 3 * nv) % p.n_strain() };
            assert!(east.contains(&node));
        }
    }
}

#[test]
fn kinematic_labels_swap_roles() {
    let d = plate(2, Formulation::Vectorial, ControlVariant::Dynamic);
    let k = plate(2, Formulation::Vectorial, ControlVariant::Kinematic);
    assert_eq!(d.system.dim(), k.system.dim());
    assert_eq!(d.system.num_ports(), k.system.num_ports());
    assert_eq!(d.ports[0].quantity, PortQuantity::ShearForce);
    assert_eq!(k.ports[0].quantity, PortQuantity::Velocity);
    assert!(d.ports[0].label.starts_with("Qn_t1_s0_n"));
    assert!(k.ports[0].label.starts_with("v_t1_s0_n"));
    assert_eq!(
        k.system.input().mul_vec(&vec![0.0; k.system.num_ports()]),
        vec![0.0; k.system.dim()]
    );
}

/// Trace coefficients of boundary quantities computed from nodal fields.
fn trace_inputs(p: &AssembledPlate, e: &[f64], quantity: impl Fn(&[f64], usize, [f64; 2], PortComponent) -> f64) -> Vec<f64> {
    p.ports
        .iter()
        .map(|port| quantity(e, port.node, p.trace.sides[port.side].normal, port.component))
        .collect()
}

#[test]
fn integration_by_parts_links_both_variants() {
    let mesh = structured_rectangle(1.0, 0.8, 4, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for kind in [Formulation::Vectorial, Formulation::Tensorial] {
        let d = assemble_plate(&mesh, &steel(), FESpaces::default(), kind, ControlVariant::Dynamic, &ALL_TAGS).unwrap();
        let k = assemble_plate(
            &mesh,
            &steel(),
            FESpaces::default(),
            kind,
            ControlVariant::Kinematic,
            &ALL_TAGS,
        )
        .unwrap();
        let n = mesh.num_nodes();
        for _ in 0..3 {
            let e = random_vec(d.system.dim(), &mut rng);
            let f = |b: usize, i: usize| e[b * n + i];
            // moments and shear forces in engineering form
            let m_of = |i: usize| [[f(3, i), f(5, i)], [f(5, i), f(4, i)]];
            let u_dyn = trace_inputs(&d, &e, |_, i, nr, c| {
                let s = [-nr[1], nr[0]];
                let m = m_of(i);
                let mn = [m[0][0] * nr[0] + m[0][1] * nr[1], m[1][0] * nr[0] + m[1][1] * nr[1]];
                match c {
                    PortComponent::Translation => f(6, i) * nr[0] + f(7, i) * nr[1],
                    PortComponent::NormalRotation => mn[0] * nr[0] + mn[1] * nr[1],
                    PortComponent::TangentialRotation => mn[0] * s[0] + mn[1] * s[1],
                }
            });
            let u_kin = trace_inputs(&k, &e, |_, i, nr, c| {
                let s = [-nr[1], nr[0]];
                match c {
                    PortComponent::Translation => f(0, i),
                    PortComponent::NormalRotation => f(1, i) * nr[0] + f(2, i) * nr[1],
                    PortComponent::TangentialRotation => f(1, i) * s[0] + f(2, i) * s[1],
                }
            });
            let bd = dot(&e, &d.system.input().mul_vec(&u_dyn));
            let bk = dot(&e, &k.system.input().mul_vec(&u_kin));
            // e_q^T C e_p + e_p^T A e_q = boundary pairing
            let jd = d.system.interconnection();
            let jk = k.system.interconnection();
            let split = 3 * n;
            let mut ep = e.clone();
            ep[split..].iter_mut().for_each(|v| *v = 0.0);
            let mut eq = e.clone();
            eq[..split].iter_mut().for_each(|v| *v = 0.0);
            let lhs = dot(&eq, &jd.mul_vec(&ep)) + dot(&ep, &jk.mul_vec(&eq));
            let tol = 1e-12 * (bd.abs() + bk.abs() + lhs.abs());
            assert!((bd - bk).abs() <= tol, "{bd} {bk}");
            assert!((lhs - bk).abs() <= tol, "{lhs} {bk}");
        }
    }
}

#[test]
fn quadrature_degree_is_checked() {
    let mesh = structured_rectangle(1.0, 1.0, 1, 1).unwrap();
    let spaces = FESpaces {
        strain: ScalarFamily::P1,
        quadrature_degree: 1,
    };
    assert!(assemble_plate(
        &mesh,
        &steel(),
        spaces,
        Formulation::Vectorial,
        ControlVariant::Dynamic,
        &ALL_TAGS
    )
    .is_err());
}

fn interpolation_error(n: usize, strain: ScalarFamily) -> f64 {
    let mesh = structured_rectangle(1.0, 1.0, n, n).unwrap();
    let p = assemble_plate(
        &mesh,
        &steel(),
        FESpaces::with_strain(strain),
        Formulation::Vectorial,
        ControlVariant::Dynamic,
        &ALL_TAGS,
    )
    .unwrap();
    let pi = std::f64::consts::PI;
    let bump = move |x: Point| (pi * x[0]).sin() * (pi * x[1]).sin();
    let zero = |_: Point| 0.0;
    let rig = plate_rigidity(&steel()).unwrap();
    let a = p.interpolate([&bump, &zero, &zero, &zero, &zero, &zero, &bump, &zero]);
    let exact = 0.5 * 0.25 * (1.0 / rig.areal_mass + rig.shear[0][0]);
    (p.system.hamiltonian(&a) - exact).abs() / exact
}

#[test]
fn refinement_consistency_of_interpolated_energy() {
    for (strain, order) in [(ScalarFamily::P1, 2.0), (ScalarFamily::P0, 1.0)] {
        let errs: Vec<f64> = [4, 8, 16].iter().map(|&n| interpolation_error(n, strain)).collect();
        for w in errs.windows(2) {
            let observed = (w[0] / w[1]).log2();
            assert!(observed >= order - 0.2, "{strain:?}: {errs:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn random_meshes_keep_structure(nx in 1usize..5, ny in 1usize..5, seed in 0u64..500, tensorial: bool, kinematic: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = structured_rectangle(0.5 + rng.gen::<f64>(), 0.5 + rng.gen::<f64>(), nx, ny).unwrap();
        // jitter interior nodes
        let interior: Vec<usize> = {
            let b = mesh.boundary_nodes_by_tag(&ALL_TAGS).unwrap();
            (0..mesh.num_nodes()).filter(|i| !b.contains(i)).collect()
        };
        let (x0, x1, y0, y1) = mesh.extents();
        let hx = (x1 - x0) / nx as f64;
        let hy = (y1 - y0) / ny as f64;
        let mut nodes = mesh.nodes().to_vec();
        for &i in &interior {
            nodes[i][0] += 0.2 * hx * rng.gen_range(-1.0..1.0);
            nodes[i][1] += 0.2 * hy * rng.gen_range(-1.0..1.0);
        }
        let boundary = mesh.boundary_edges().iter().map(|e| (e.nodes, e.tag)).collect();
        let mesh = Mesh2D::new(nodes, mesh.triangles().to_vec(), boundary, MeshOptions::default()).unwrap();
        let kind = if tensorial { Formulation::Tensorial } else { Formulation::Vectorial };
        let variant = if kinematic { ControlVariant::Kinematic } else { ControlVariant::Dynamic };
        let p = assemble_plate(&mesh, &steel(), FESpaces::default(), kind, variant, &ALL_TAGS).unwrap();
        prop_assert!(p.system.interconnection().skew_defect().0 == 0.0);
        let r = crate::phcore::check_dirac(&p.system, 10, 1e-12, seed).unwrap();
        prop_assert!(r.max_relative_residual <= 1e-12);
        prop_assert!(p.system.num_ports() == 3 * p.trace.len());
    }
}
