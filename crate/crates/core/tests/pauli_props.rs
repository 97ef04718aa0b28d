//! Algebraic invariants of signed Pauli strings.

use dyncirc::pauli::{Pauli, PauliString};
use proptest::prelude::*;

fn pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
    (proptest::collection::vec(0u8..4, n), any::<bool>()).prop_map(|(v, neg)| {
        let s: String = v.iter().map(|&k| ['I', 'X', 'Y', 'Z'][k as usize]).collect();
        let mut p: PauliString = s.parse().unwrap();
        p.set_negative(neg);
        p
    })
}

fn triple() -> impl Strategy<Value = (PauliString, PauliString, PauliString)> {
    (1usize..8).prop_flat_map(|n| (pauli_string(n), pauli_string(n), pauli_string(n)))
}

proptest! {
    #[test]
    fn multiplication_is_associative((a, b, c) in triple()) {
        // full phases: (ab)c and a(bc) as i^k · P
        let (k1, ab) = PauliString::multiply_phased(&a, &b).unwrap();
        let (k2, l) = PauliString::multiply_phased(&ab, &c).unwrap();
        let (k3, bc) = PauliString::multiply_phased(&b, &c).unwrap();
        let (k4, r) = PauliString::multiply_phased(&a, &bc).unwrap();
        prop_assert_eq!(&l, &r);
        prop_assert_eq!((k1 + k2) % 4, (k3 + k4) % 4);
    }

    #[test]
    fn signed_multiply_is_exact_for_commuting_inputs((a, b, c) in triple()) {
        prop_assume!(a.commutes(&b).unwrap());
        let (k, p) = PauliString::multiply_phased(&a, &b).unwrap();
        prop_assert!(k % 2 == 0);
        let m = PauliString::multiply(&a, &b).unwrap();
        prop_assert_eq!(m.unsigned(), p);
        prop_assert_eq!(m.is_negative(), k == 2);
        // and agrees with multiplication in the other order
        prop_assert_eq!(m, PauliString::multiply(&b, &a).unwrap());
        let _ = c;
    }

    #[test]
    fn commutation_is_symmetric_and_matches_products((a, b, _c) in triple()) {
        let ab = a.commutes(&b).unwrap();
        prop_assert_eq!(ab, b.commutes(&a).unwrap());
        let (pab, x) = PauliString::multiply_phased(&a, &b).unwrap();
        let (pba, y) = PauliString::multiply_phased(&b, &a).unwrap();
        prop_assert_eq!(x.unsigned(), y.unsigned());
        // AB = ±BA
        let same = (pab % 4) as i32 == (pba % 4) as i32 && x.is_negative() == y.is_negative();
        prop_assert_eq!(same, ab);
    }

    #[test]
    fn squares_are_identity((a, _b, _c) in triple()) {
        let sq = PauliString::multiply(&a, &a).unwrap();
        prop_assert!(sq.is_identity());
        prop_assert!(!sq.is_negative());
    }

    #[test]
    fn clifford_conjugation_preserves_commutation(
        (a, b, _c) in triple(),
        ops in proptest::collection::vec((0u8..4, 0usize..8, 0usize..8), 0..20),
    ) {
        let n = a.len();
        let (mut a2, mut b2) = (a.clone(), b.clone());
        for (k, q0, q1) in ops {
            let (q0, q1) = (q0 % n, q1 % n);
            for p in [&mut a2, &mut b2] {
                match k {
                    0 => p.conj_h(q0),
                    1 => p.conj_s(q0),
                    2 => p.conj_sdg(q0),
                    _ if q0 != q1 => p.conj_cnot(q0, q1),
                    _ => {}
                }
            }
        }
        prop_assert_eq!(a.commutes(&b).unwrap(), a2.commutes(&b2).unwrap());
        prop_assert_eq!(a.weight() == 0, a2.weight() == 0);
    }

    #[test]
    fn text_and_serde_roundtrip((a, _b, _c) in triple()) {
        let s = a.to_string();
        prop_assert_eq!(s.parse::<PauliString>().unwrap(), a.clone());
        let j = serde_json::to_string(&a).unwrap();
        prop_assert_eq!(serde_json::from_str::<PauliString>(&j).unwrap(), a);
    }

    #[test]
    fn embed_then_restrict_roundtrips((a, _b, _c) in triple(), extra in 0usize..5) {
        let k = a.len();
        let n = k + extra;
        let qubits: Vec<usize> = (0..k).map(|i| i + extra).collect();
        let e = PauliString::embed(&a, &qubits, n).unwrap();
        prop_assert_eq!(e.weight(), a.weight());
        prop_assert_eq!(e.restrict(&qubits), a);
    }

    #[test]
    fn single_qubit_commutation_table(x in 0u8..4, y in 0u8..4) {
        let ps = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let (p, q) = (ps[x as usize], ps[y as usize]);
        let expect = x == 0 || y == 0 || x == y;
        prop_assert_eq!(p.commutes_with(q), expect);
    }
}
