//! Seeded input generation shared with the embedded monitor driver.

use crate::frontend::{Literal, TExprKind, TypeTag, TypedSpec};
use crate::interpreter::{Firing, Trace};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xorshift64* seeded through splitmix64.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> XorShift64Star {
        let state = mix(seed.wrapping_add(GOLDEN));
        XorShift64Star { state: if state == 0 { GOLDEN } else { state } }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `lo..=hi` (modulo bias accepted).
    pub fn int_in(&mut self, lo: i32, hi: i32) -> i32 {
        let span = (hi as i64 - lo as i64 + 1) as u64;
        (lo as i64 + (self.next_u64() % span) as i64) as i32
    }

    pub fn bool(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

/// Order-independent digest of a set of firings.
pub fn checksum<'a>(firings: impl IntoIterator<Item = &'a Firing>) -> u64 {
    firings.into_iter().fold(0u64, |acc, f| acc.wrapping_add(mix(((f.position as u64) << 16) ^ f.index as u64)))
}

/// A trace of `len` positions drawn position-major, inputs in declaration
/// order. This is the sequence the embedded monitor driver generates for the
/// same seed and bounds.
pub fn generate_random_trace(spec: &TypedSpec, seed: u64, len: usize, lo: i32, hi: i32) -> Trace {
    generate_dictionary_trace(spec, seed, len, lo, hi, &[])
}

/// Like [`generate_random_trace`], but with probability 1/4 an integer is
/// taken from `dictionary` instead of the range.
pub fn generate_dictionary_trace(
    spec: &TypedSpec,
    seed: u64,
    len: usize,
    lo: i32,
    hi: i32,
    dictionary: &[i32],
) -> Trace {
    assert!(lo <= hi, "empty value range");
    let types: Vec<TypeTag> = spec.inputs().map(|(_, s)| s.ty).collect();
    let mut rng = XorShift64Star::new(seed);
    let mut trace = Trace::empty(len);
    trace.columns = vec![Vec::with_capacity(len); types.len()];
    for _ in 0..len {
        for (col, ty) in trace.columns.iter_mut().zip(&types) {
            let v = match ty {
                TypeTag::Bool => Literal::Bool(rng.bool()),
                TypeTag::Int32 if !dictionary.is_empty() && rng.next_u64() >> 62 == 0 => {
                    Literal::Int(dictionary[(rng.next_u64() % dictionary.len() as u64) as usize])
                }
                TypeTag::Int32 => Literal::Int(rng.int_in(lo, hi)),
            };
            col.push(v);
        }
    }
    trace
}

/// Integer literals of the specification and their neighbours, sorted and
/// deduplicated.
pub fn spec_dictionary(spec: &TypedSpec) -> Vec<i32> {
    let mut out = Vec::new();
    for s in &spec.streams {
        if let Some(e) = &s.expr {
            e.walk(&mut |e| {
                let lits = match &e.kind {
                    TExprKind::Literal(l) | TExprKind::Const { value: l, .. } => vec![*l],
                    TExprKind::Access { default: Some(d), .. } => vec![*d],
                    _ => vec![],
                };
                for l in lits {
                    if let Literal::Int(v) = l {
                        out.extend([v.wrapping_sub(1), v, v.wrapping_add(1)]);
                    }
                }
            });
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}
