#![allow(dead_code)]

use std::path::PathBuf;

use lolac::harness::{Toolchain, XorShift64Star};

pub const CORPUS: [&str; 6] =
    ["altitude", "altitude_adapted", "network", "flight_phase", "flight_phase_nodiv", "sync_pitfall"];

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{name}.lola"))
}

pub fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).unwrap()
}

/// Unoptimized builds keep test turnaround short.
pub fn quick_toolchain() -> Toolchain {
    Toolchain { template: "rustc --edition 2021 -C opt-level=0 -o {out} {src}".into() }
}

/// Random specification text over Int32 inputs `i0`, `i1`, a Bool input `b0`,
/// Int32 outputs `o*`, Bool outputs `c*` and triggers. It may be ill-formed.
pub struct SpecGen {
    r: XorShift64Star,
    ints: Vec<String>,
    bools: Vec<String>,
    max_offset: i64,
    division: bool,
}

impl SpecGen {
    pub fn new(seed: u64) -> SpecGen {
        SpecGen { r: XorShift64Star::new(seed), ints: vec![], bools: vec![], max_offset: 3, division: true }
    }

    pub fn without_division(mut self) -> SpecGen {
        self.division = false;
        self
    }

    fn below(&mut self, n: u64) -> u64 {
        self.r.next_u64() % n
    }

    fn lit(&mut self) -> i64 {
        self.below(7) as i64 - 3
    }

    fn access(&mut self, pool_int: bool) -> String {
        let len = if pool_int { self.ints.len() } else { self.bools.len() };
        let k = self.below(len as u64) as usize;
        let name = if pool_int { self.ints[k].clone() } else { self.bools[k].clone() };
        let span = 2 * self.max_offset as u64 + 1;
        let w = self.below(span) as i64 - self.max_offset;
        if w == 0 && self.below(2) == 0 {
            return name;
        }
        let default =
            if pool_int { self.lit().to_string() } else { ["true", "false"][self.below(2) as usize].to_string() };
        format!("{name}[{w},{default}]")
    }

    fn int_expr(&mut self, depth: u32) -> String {
        let pick = if depth == 0 { self.below(2) } else { self.below(10) };
        match pick {
            0 => self.lit().to_string(),
            1 => self.access(true),
            2 => format!("({} + {})", self.int_expr(depth - 1), self.int_expr(depth - 1)),
            3 => format!("({} - {})", self.int_expr(depth - 1), self.int_expr(depth - 1)),
            4 => format!("({} * {})", self.int_expr(depth - 1), self.int_expr(depth - 1)),
            5 => format!(
                "ite({}, {}, {})",
                self.bool_expr(depth - 1),
                self.int_expr(depth - 1),
                self.int_expr(depth - 1)
            ),
            6 if self.division => {
                let op = ["/", "%"][self.below(2) as usize];
                format!("({} {op} ({} - {}))", self.int_expr(depth - 1), self.access(true), self.lit())
            }
            7 => format!(
                "{}({}, {})",
                ["min", "max"][self.below(2) as usize],
                self.int_expr(depth - 1),
                self.int_expr(depth - 1)
            ),
            8 => format!("-{}", self.access(true)),
            _ => self.access(true),
        }
    }

    fn bool_expr(&mut self, depth: u32) -> String {
        let pick = if depth == 0 { self.below(2) } else { self.below(6) };
        match pick {
            0 => self.access(false),
            1 | 2 => {
                let op = ["<", "<=", "==", "!=", ">", ">="][self.below(6) as usize];
                let d = depth.saturating_sub(1);
                format!("({} {op} {})", self.int_expr(d), self.int_expr(d))
            }
            3 => format!("({} && {})", self.bool_expr(depth - 1), self.bool_expr(depth - 1)),
            4 => format!("({} || {})", self.bool_expr(depth - 1), self.bool_expr(depth - 1)),
            _ => format!("!{}", self.bool_expr(depth - 1)),
        }
    }

    pub fn spec(&mut self) -> String {
        self.ints = vec!["i0".into(), "i1".into()];
        self.bools = vec!["b0".into()];
        let n_int = 1 + self.below(3) as usize;
        let n_bool = self.below(2) as usize;
        let n_trig = 1 + self.below(2) as usize;
        for k in 0..n_int {
            self.ints.push(format!("o{k}"));
        }
        for k in 0..n_bool {
            self.bools.push(format!("c{k}"));
        }
        let mut out = String::from("input i0: Int32, i1: Int32\ninput b0: Bool\n");
        for k in 0..n_int {
            let e = self.int_expr(3);
            out.push_str(&format!("output o{k}: Int32 := {e}\n"));
        }
        for k in 0..n_bool {
            let e = self.bool_expr(2);
            out.push_str(&format!("output c{k}: Bool := {e}\n"));
        }
        for k in 0..n_trig {
            let e = self.bool_expr(2);
            out.push_str(&format!("trigger {e} \"t{k}\"\n"));
        }
        out
    }
}
