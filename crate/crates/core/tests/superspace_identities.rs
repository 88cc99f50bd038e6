//! Superspace identities over the model corpus, and the total-derivative test
//! cross-validated against a brute-force ansatz solver.

use std::collections::BTreeMap;

use kvn_core::grassmann::Blade;
use kvn_core::superfield::{
    build_superfield, check_action_identity, check_berezin_lie, evaluate_on_superfield,
    superfield_eom, total_derivative_test,
};
use kvn_core::superspace::{Field, Sse, Superspace};
use kvn_core::{PhaseSpaceModel, Poly, Scalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus() -> Vec<PhaseSpaceModel> {
    let v = |n, i| Poly::var(n, i);
    let half = Scalar::ratio(1, 2);
    let one = vec![
        v(2, 0).pow(2).add(&v(2, 1).pow(2)).scale(&half),
        v(2, 1)
            .pow(2)
            .scale(&half)
            .add(&v(2, 0).pow(4).scale(&Scalar::ratio(1, 4))),
        v(2, 0).pow(3),
        v(2, 1).pow(2).scale(&half).add(&v(2, 0)),
    ];
    let two = vec![
        (0..4)
            .fold(Poly::zero(4), |acc, k| acc.add(&v(4, k).pow(2)))
            .scale(&half),
        v(4, 0).mul(&v(4, 3)),
    ];
    one.into_iter()
        .map(|h| PhaseSpaceModel::new(1, h).unwrap())
        .chain(two.into_iter().map(|h| PhaseSpaceModel::new(2, h).unwrap()))
        .collect()
}

#[test]
fn taylor_truncation_is_exact_and_matches_substitution() {
    for m in corpus() {
        let phi = build_superfield(&m).unwrap();
        let out = evaluate_on_superfield(m.hamiltonian(), &phi).unwrap();
        assert!(out.remainder.is_zero());
        // oracle: substitute Φ into every monomial directly
        let s = phi.space();
        let mut direct = Sse::zero(s);
        for (e, c) in m.hamiltonian().terms() {
            let mut t = Sse::constant(s, c.clone());
            for (a, &k) in e.iter().enumerate() {
                t = t.mul(&phi.component(a).pow(k));
            }
            direct = direct.add(&t);
        }
        assert_eq!(out.value, direct);
    }
}

#[test]
fn corpus_identities_hold() {
    for m in corpus() {
        let h = m.hamiltonian().to_string();
        assert!(check_berezin_lie(&m).unwrap().passed(), "Berezin, H = {h}");
        let action = check_action_identity(&m).unwrap();
        assert!(action.passed(), "action, H = {h}");
        let eom = superfield_eom(&m).unwrap();
        for c in &eom.checks {
            assert!(c.passed(), "H = {h}: {} -> {}", c.name, c.residual);
        }
    }
}

/// Monomials in `(q, p)` with total degree in `1..=max`.
fn monomials(max: u32) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for d in 1..=max {
        for a in 0..=d {
            out.push([a, d - a]);
        }
    }
    out
}

fn field_monomial(s: &std::sync::Arc<Superspace>, e: [u32; 2]) -> Sse {
    Sse::phi(s, 0).pow(e[0]).mul(&Sse::phi(s, 1).pow(e[1]))
}

/// Whether `d = d/dt P` has a solution `P` spanned by monomials of degree ≤ 3,
/// by exact Gaussian elimination on the coefficient equations.
fn ansatz_solvable(d: &Sse) -> bool {
    let s = d.space().clone();
    let basis: Vec<Sse> = monomials(3)
        .into_iter()
        .map(|e| field_monomial(&s, e).time_derivative().unwrap())
        .collect();
    let n = basis.len();
    let mut table: BTreeMap<(Vec<u32>, Blade), Vec<BigRational>> = BTreeMap::new();
    let columns = basis.iter().enumerate().chain(std::iter::once((n, d)));
    for (k, b) in columns {
        for (e, bl, c) in b.terms() {
            table
                .entry((e.clone(), *bl))
                .or_insert_with(|| vec![BigRational::zero(); n + 1])[k] += &c.re;
        }
    }
    let mut m: Vec<Vec<BigRational>> = table.into_values().collect();
    let mut rank = 0;
    for col in 0..n {
        let Some(piv) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = BigRational::one() / m[rank][col].clone();
        for x in m[rank].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..=n {
                    let v = &m[rank][c] * &f;
                    m[r][c] -= v;
                }
            }
        }
        rank += 1;
    }
    m[rank..].iter().all(|r| r[n].is_zero())
}

fn rational(rng: &mut ChaCha8Rng) -> Scalar {
    Scalar::real(BigRational::new(
        BigInt::from(rng.gen_range(-4..=4)),
        BigInt::from(rng.gen_range(1..=3)),
    ))
}

#[test]
fn total_derivative_test_agrees_with_ansatz_solver() {
    let s = Superspace::new(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let qdot = Sse::field(&s, Field::Phi, 0, 1);
    let pdot = Sse::field(&s, Field::Phi, 1, 1);
    let (mut accepted, mut rejected) = (0, 0);
    for case in 0..60 {
        let d = if case % 3 == 0 {
            // exact by construction
            let mut p = Sse::zero(&s);
            for e in monomials(3) {
                if rng.gen_bool(0.4) {
                    p = p.add(&field_monomial(&s, e).scale(&rational(&mut rng)));
                }
            }
            p.time_derivative().unwrap()
        } else {
            // A(q, p) q̇ + B(q, p) ṗ with A, B of degree ≤ 2
            let mut a = Sse::zero(&s);
            let mut b = Sse::zero(&s);
            for e in monomials(2) {
                if rng.gen_bool(0.3) {
                    a = a.add(&field_monomial(&s, e).scale(&rational(&mut rng)));
                }
                if rng.gen_bool(0.3) {
                    b = b.add(&field_monomial(&s, e).scale(&rational(&mut rng)));
                }
            }
            a.mul(&qdot).add(&b.mul(&pdot))
        };
        let euler = total_derivative_test(&d).unwrap();
        assert_eq!(euler, ansatz_solvable(&d), "{d}");
        if euler {
            accepted += 1;
        } else {
            rejected += 1;
        }
    }
    assert!(accepted >= 20 && rejected >= 10, "{accepted} {rejected}");
}
