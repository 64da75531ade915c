//! Independent reconstruction of the reachable basis by support propagation
//! with hand-built sparse operators over every configuration of at most two
//! excitations.

use std::collections::{BTreeMap, BTreeSet};

use csign::fock::{Atom, Level, Rail};
use csign::StateSpace;

/// (x1, x2, y1, y2, atom1 excited, atom2 excited)
type Conf = ([u8; 4], [bool; 2]);

const X1: usize = 0;
const Y1: usize = 2;

fn all_configs() -> Vec<Conf> {
    let mut out = Vec::new();
    for code in 0..3u32.pow(4) {
        let mut n = [0u8; 4];
        let mut c = code;
        for slot in &mut n {
            *slot = (c % 3) as u8;
            c /= 3;
        }
        for a in 0..4u8 {
            let atoms = [a & 1 == 1, a & 2 == 2];
            let total = n.iter().sum::<u8>() + atoms.iter().filter(|&&e| e).count() as u8;
            if total <= 2 {
                out.push((n, atoms));
            }
        }
    }
    out
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn fact(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Sparse beamsplitter on (x1, y1):
/// `(a†)^n (b†)^m → ((a†+b†)/√2)^n ((a†−b†)/√2)^m`.
fn beamsplitter(c: &Conf) -> BTreeMap<Conf, f64> {
    let (n, m) = (u32::from(c.0[X1]), u32::from(c.0[Y1]));
    let mut poly: BTreeMap<u32, f64> = BTreeMap::new(); // power of a† -> coeff
    for i in 0..=n {
        for j in 0..=m {
            let sign = if (m - j) % 2 == 1 { -1.0 } else { 1.0 };
            *poly.entry(i + j).or_default() += binom(n, i) * binom(m, j) * sign;
        }
    }
    let norm = (fact(n) * fact(m)).sqrt() * 2f64.powf(f64::from(n + m) / 2.0);
    let total = n + m;
    let mut out = BTreeMap::new();
    for (p, coeff) in poly {
        let amp = coeff * (fact(p) * fact(total - p)).sqrt() / norm;
        if amp.abs() > 1e-14 {
            let mut d = *c;
            d.0[X1] = p as u8;
            d.0[Y1] = (total - p) as u8;
            out.insert(d, amp);
        }
    }
    out
}

/// Configurations connected to `c` by the coupling or a photon leak.
fn dynamics_neighbours(c: &Conf) -> Vec<Conf> {
    let mut out = Vec::new();
    for (atom, rail) in [(0usize, X1), (1usize, Y1)] {
        if !c.1[atom] && c.0[rail] > 0 {
            let mut d = *c;
            d.0[rail] -= 1;
            d.1[atom] = true;
            out.push(d);
        }
        if c.1[atom] {
            let mut d = *c;
            d.0[rail] += 1;
            d.1[atom] = false;
            out.push(d);
        }
        if c.0[rail] > 0 {
            let mut d = *c;
            d.0[rail] -= 1;
            out.push(d);
        }
    }
    out
}

fn oracle() -> BTreeSet<Conf> {
    let universe: BTreeSet<Conf> = all_configs().into_iter().collect();
    let seeds: Vec<Conf> =
        [([0, 1, 0, 1], [false; 2]), ([0, 1, 1, 0], [false; 2]), ([1, 0, 0, 1], [false; 2]), ([1, 0, 1, 0], [false; 2])]
            .into_iter()
            .collect();
    let apply = |set: &BTreeSet<Conf>| -> BTreeSet<Conf> {
        let mut out = BTreeSet::new();
        for c in set {
            // every basis configuration may be populated on its own, so take
            // the full support of each image
            out.extend(beamsplitter(c).into_keys());
        }
        out
    };
    let after_bs: BTreeSet<Conf> = apply(&seeds.iter().copied().collect());
    let mut closed = after_bs.clone();
    let mut frontier: Vec<Conf> = closed.iter().copied().collect();
    while let Some(c) = frontier.pop() {
        for d in dynamics_neighbours(&c) {
            assert!(universe.contains(&d), "left the two-excitation sector");
            if closed.insert(d) {
                frontier.push(d);
            }
        }
    }
    let after_bs2 = apply(&closed);
    seeds.into_iter().chain(after_bs).chain(closed).chain(after_bs2).collect()
}

fn crate_space() -> BTreeSet<Conf> {
    StateSpace::c_sign_array()
        .states()
        .iter()
        .map(|s| {
            (
                [s.occupation(Rail::X1), s.occupation(Rail::X2), s.occupation(Rail::Y1), s.occupation(Rail::Y2)],
                [s.level(Atom::A1) == Level::E, s.level(Atom::A2) == Level::E],
            )
        })
        .collect()
}

#[test]
fn reachable_basis_matches_oracle() {
    let expected = oracle();
    assert_eq!(expected.len(), 23);
    assert_eq!(crate_space(), expected);
}

#[test]
fn no_doubly_excited_configuration() {
    assert!(oracle().iter().all(|c| !(c.1[0] && c.1[1])));
}

#[test]
fn oracle_beamsplitter_is_hom() {
    let out = beamsplitter(&([1, 0, 1, 0], [false; 2]));
    assert_eq!(out.len(), 2);
    assert!((out[&([2, 0, 0, 0], [false; 2])] - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((out[&([0, 0, 2, 0], [false; 2])] + 0.5f64.sqrt()).abs() < 1e-15);
}
