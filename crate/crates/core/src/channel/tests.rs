use super::*;
use crate::gates;

fn ps(n: usize, t: &str) -> PauliString {
    PauliString::parse(n, t).unwrap()
}

#[test]
fn single_bitflip_chi() {
    let ch = bitflip_product::<f64>(1, 0.1).unwrap();
    let chi = ch.chi_from_kraus(1).unwrap();
    assert!((chi.chi.get(&ps(1, ""), &ps(1, "")).re - 0.9).abs() < 1e-15);
    assert!((chi.chi.get(&ps(1, "X0"), &ps(1, "X0")).re - 0.1).abs() < 1e-15);
    assert!(chi.chi.get(&ps(1, "Z0"), &ps(1, "Z0")).norm() < 1e-15);
    assert_eq!(chi.residual, 0.0);
}

#[test]
fn dephasing_site_identity_weight() {
    let ch = decaying_dephasing_channel::<f64>(1, 0.1, 0.1).unwrap();
    let chi = ch.chi_from_kraus(1).unwrap().chi;
    let expect = 0.9 * 0.1f64.cos().powi(2);
    assert!((chi.entry(0, 0).re - expect).abs() < 1e-12);
    assert!((expect - 0.891030).abs() < 1e-6);
    assert!(ch.is_trace_preserving());

    let off = decaying_dephasing_channel::<f64>(5, 0.0, 0.0).unwrap();
    assert!((off.chi_from_kraus(1).unwrap().chi.entry(0, 0).re - 1.0).abs() < 1e-15);
}

#[test]
fn dephasing_decays_from_center() {
    assert_eq!(site_distance(5, 2), 0);
    assert_eq!(site_distance(4, 1), 0);
    assert_eq!(site_distance(4, 3), 2);
    let ch = decaying_dephasing_channel::<f64>(4, 0.1, 0.1).unwrap();
    let chi = ch.chi_from_kraus(1).unwrap().chi;
    let z = |q| chi.get(&PauliString::single(4, q, PauliLabel::Z), &PauliString::single(4, q, PauliLabel::Z)).re;
    assert!(z(1) > z(2) && z(2) > z(3));
}

#[test]
fn bitflip_pair_diagonal() {
    let ch = bitflip_product::<f64>(2, 0.1).unwrap();
    let rep = ch.truncate_chi(2).unwrap();
    let want = [("", 0.81), ("X0", 0.09), ("X1", 0.09), ("X0 X1", 0.01)];
    for (s, w) in want {
        assert!((rep.chi.get(&ps(2, s), &ps(2, s)).re - w).abs() < 1e-15, "{s}");
    }
    assert!((rep.chi.trace() - 1.0).abs() < 1e-15);
    assert_eq!(rep.l2_error, 0.0);

    let cut = ch.truncate_chi(1).unwrap();
    assert!((cut.l2_error.powi(2) - 1e-4).abs() < 1e-16);
    assert!(cut.l2_error.powi(2) <= cut.diagonal_bound + 1e-18);
}

#[test]
fn block_truncation_matches_dense() {
    let ch = decaying_dephasing_channel::<f64>(3, 0.2, 0.3).unwrap();
    let dense = ChannelModel::kraus_list(ch.to_dense_kraus().unwrap(), 1).unwrap();
    for d in 0..=3 {
        let a = ch.truncate_chi(d).unwrap();
        let b = dense.truncate_chi(d).unwrap();
        assert!(crate::dense::max_abs_diff(a.chi.entries(), b.chi.entries()) < 1e-14, "d={d}");
        assert!((a.l2_error - b.l2_error).abs() < 1e-12);
        assert!((a.diagonal_bound - b.diagonal_bound).abs() < 1e-12);
        assert!(a.l2_error.powi(2) <= a.diagonal_bound + 1e-15);
    }
}

#[test]
fn xflip_normalization() {
    for n in [2, 3, 4, 6, 12] {
        let ch = correlated_xflip_channel::<f64>(n, 0.1).unwrap();
        assert!(ch.is_trace_preserving(), "n={n}");
        let chi = ch.chi_from_kraus(1).unwrap();
        assert!((chi.chi.entry(0, 0).re - 1.0 / 1.01).abs() < 1e-12, "n={n}");
        assert!(chi.residual < 1e-12);
        chi.chi.validate().unwrap();
    }
    assert!(matches!(ch_small(), Representation::KrausList { .. }));
    let m = models::xflip_mixing::<f64>(7);
    let dev = (m.transpose() * &m - nalgebra::DMatrix::identity(7, 7)).abs().max();
    assert!(dev < 1e-10);
}

fn ch_small() -> Representation<f64> {
    correlated_xflip_channel::<f64>(4, 0.1).unwrap().representation().clone()
}

#[test]
fn xflip_dense_and_pauli_forms_agree() {
    let m = models::xflip_mixing::<f64>(5);
    let ch = correlated_xflip_channel::<f64>(5, 0.1).unwrap();
    let chi = ch.chi_from_kraus(1).unwrap().chi;
    let p2 = 1.0 / (5.0 * 1.01);
    for q in 0..5 {
        let x = PauliString::single(5, q, PauliLabel::X);
        let col: f64 = (0..5).map(|k| m[(k, q)]).sum();
        let v = chi.get(&PauliString::identity(5), &x);
        assert!(v.re.abs() < 1e-14 && (v.im + 0.1 * p2 * col).abs() < 1e-14);
    }
}

#[test]
fn incomplete_kraus_rejected() {
    let over = vec![identity::<f64>(2), identity::<f64>(2)];
    assert!(matches!(ChannelModel::kraus_list(over, 1), Err(Error::InvalidChannel(_))));
    let lossy = vec![identity::<f64>(2) * crate::scalar::creal(0.5)];
    let ch = ChannelModel::kraus_list(lossy, 1).unwrap();
    assert!(!ch.is_trace_preserving());
}

#[test]
fn composition_with_layer() {
    let ch = decaying_dephasing_channel::<f64>(4, 0.1, 0.1).unwrap();
    let layer = GateLayer::iswap_layer(4).unwrap();
    let c = ch.after_layer(&layer).unwrap();
    let blocks = c.blocks().unwrap();
    assert_eq!(blocks.len(), 2);
    assert_eq!(blocks[0].0, vec![0, 1]);
    // dense composition agrees
    let e = ch.to_dense_kraus().unwrap();
    let u = crate::dense::kron(&gates::iswap::<f64>(), &gates::iswap::<f64>());
    let rho = crate::dense::projector(&crate::dense::product_state::<f64>(&[
        crate::pauli::StateLabel::from_index(0),
        crate::pauli::StateLabel::from_index(3),
        crate::pauli::StateLabel::from_index(4),
        crate::pauli::StateLabel::from_index(5),
    ]));
    let want = crate::dense::apply_kraus(&e, &(&u * &rho * u.adjoint()));
    let got = crate::dense::apply_kraus(&c.to_dense_kraus().unwrap(), &rho);
    assert!(crate::dense::max_abs_diff(&want, &got) < 1e-14);

    let xf = correlated_xflip_channel::<f64>(4, 0.1).unwrap();
    assert!(matches!(xf.after_layer(&layer), Err(Error::UnsupportedTopology(_))));
}

#[test]
fn embedding_respects_order() {
    let x = crate::dense::pauli::<f64>(PauliLabel::X);
    let a = embed_operator(&x, &[3], &[1, 3]);
    let b = crate::dense::pauli_product::<f64>(&[PauliLabel::I, PauliLabel::X]);
    assert_eq!(a, b);
    let cx = gates::cnot::<f64>();
    let flipped = embed_operator(&cx, &[1, 0], &[0, 1]);
    let swap = gates::swap::<f64>();
    assert!(crate::dense::max_abs_diff(&flipped, &(&swap * &cx * &swap)) < 1e-15);
}

#[test]
fn process_matrix_csv_round_trip() {
    let ch = decaying_dephasing_channel::<f64>(3, 0.1, 0.1).unwrap();
    let chi = ch.chi_from_kraus(1).unwrap().chi;
    let mut buf = Vec::new();
    chi.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("alpha,beta,re,im\n"));
    let back = ProcessMatrix::<f64>::read_csv(3, 1, &buf[..]).unwrap();
    assert_eq!(back.entries(), chi.entries());
    assert!(chi.offdiagonal_excess() <= 1e-15);
}

#[test]
fn layer_validation() {
    let u = gates::iswap::<f64>();
    assert!(GateLayer::new(3, vec![(vec![0, 1], u.clone()), (vec![1, 2], u.clone())]).is_err());
    assert!(GateLayer::new(3, vec![(vec![0], u.clone())]).is_err());
    let l = GateLayer::single_centered(6, &u).unwrap();
    assert_eq!(l.elements()[0].0, vec![2, 3]);
    assert_eq!(GateLayer::<f64>::iswap_layer(5).unwrap().elements().len(), 2);
}
