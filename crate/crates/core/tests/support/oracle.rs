//! Brute-force second-quantized operators on dictionary state vectors,
//! written independently of the library's Fock-space code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use egoe_core::Statistics;

pub type Occ = Vec<u32>;
pub type Ket = BTreeMap<Occ, f64>;

/// All occupation vectors over `n` states with `m` particles.
pub fn states(stat: Statistics, n: usize, m: usize) -> Vec<Occ> {
    let cap = match stat {
        Statistics::Fermion => 1,
        Statistics::Boson => m as u32,
    };
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fill(&mut out, &mut cur, 0, m as u32, cap);
    out
}

fn fill(out: &mut Vec<Occ>, cur: &mut Occ, pos: usize, left: u32, cap: u32) {
    if pos == cur.len() {
        if left == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for c in 0..=left.min(cap) {
        cur[pos] = c;
        fill(out, cur, pos + 1, left - c, cap);
    }
    cur[pos] = 0;
}

fn jw_sign(occ: &Occ, j: usize) -> f64 {
    if occ[..j].iter().sum::<u32>() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Single-particle creation (`dagger`) or annihilation on state `j`.
pub fn single(stat: Statistics, dagger: bool, j: usize, ket: &Ket) -> Ket {
    let mut out = Ket::new();
    for (occ, &amp) in ket {
        let mut next = occ.clone();
        let factor = match (stat, dagger) {
            (Statistics::Fermion, true) if occ[j] == 0 => {
                next[j] = 1;
                jw_sign(occ, j)
            }
            (Statistics::Fermion, false) if occ[j] == 1 => {
                next[j] = 0;
                jw_sign(occ, j)
            }
            (Statistics::Boson, true) => {
                next[j] += 1;
                f64::from(occ[j] + 1).sqrt()
            }
            (Statistics::Boson, false) if occ[j] > 0 => {
                next[j] -= 1;
                f64::from(occ[j]).sqrt()
            }
            _ => continue,
        };
        *out.entry(next).or_insert(0.0) += factor * amp;
    }
    out
}

fn labels(occ: &Occ) -> Vec<usize> {
    occ.iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat(i).take(c as usize))
        .collect()
}

fn norm_factor(stat: Statistics, occ: &Occ) -> f64 {
    match stat {
        Statistics::Fermion => 1.0,
        Statistics::Boson => occ
            .iter()
            .map(|&c| (1..=c).map(f64::from).product::<f64>())
            .product::<f64>()
            .sqrt()
            .recip(),
    }
}

/// `A†_α |ket⟩`: creators for the labels of `alpha` applied in increasing
/// label order, with boson normalization `(Π ν!)^(-1/2)`.
pub fn create(stat: Statistics, alpha: &Occ, ket: &Ket) -> Ket {
    let mut cur = ket.clone();
    for l in labels(alpha) {
        cur = single(stat, true, l, &cur);
    }
    scale(cur, norm_factor(stat, alpha))
}

/// `A_γ |ket⟩ = (A†_γ)† |ket⟩`: annihilators in decreasing label order.
pub fn annihilate(stat: Statistics, gamma: &Occ, ket: &Ket) -> Ket {
    let mut cur = ket.clone();
    for l in labels(gamma).into_iter().rev() {
        cur = single(stat, false, l, &cur);
    }
    scale(cur, norm_factor(stat, gamma))
}

fn scale(ket: Ket, s: f64) -> Ket {
    ket.into_iter().map(|(k, v)| (k, v * s)).collect()
}

pub fn basis_ket(occ: &Occ) -> Ket {
    Ket::from([(occ.clone(), 1.0)])
}

/// Dense `H_{BA} = Σ V_{αγ} ⟨B|A†_α A_γ|A⟩` with rows/columns indexed by
/// `m_states` and `V` indexed by `k_states`.
pub fn embed(
    stat: Statistics,
    m_states: &[Occ],
    k_states: &[Occ],
    v: impl Fn(usize, usize) -> f64,
) -> Vec<Vec<f64>> {
    let index: BTreeMap<&Occ, usize> = m_states.iter().enumerate().map(|(i, o)| (o, i)).collect();
    let d = m_states.len();
    let mut h = vec![vec![0.0; d]; d];
    for (a, occ) in m_states.iter().enumerate() {
        let ket = basis_ket(occ);
        for (g, gamma) in k_states.iter().enumerate() {
            let down = annihilate(stat, gamma, &ket);
            if down.is_empty() {
                continue;
            }
            for (al, alpha) in k_states.iter().enumerate() {
                let coupling = v(al, g);
                if coupling == 0.0 {
                    continue;
                }
                for (target, amp) in create(stat, alpha, &down) {
                    h[index[&target]][a] += coupling * amp;
                }
            }
        }
    }
    h
}
