use crate::linalg::C64;

pub type Block = [[C64; 2]; 2];

const Z: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// γ₁ = diag(1, −1), γ₂ = antidiag(1, 1) on ℂ², repeated dim(E)/2 times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CliffordPair {
    pub dim_e: usize,
}

impl CliffordPair {
    pub fn new(dim_e: usize) -> Option<Self> {
        (dim_e >= 2 && dim_e % 2 == 0).then_some(CliffordPair { dim_e })
    }

    pub fn copies(&self) -> usize {
        self.dim_e / 2
    }

    pub const GAMMA1: Block = [[ONE, Z], [Z, C64 { re: -1.0, im: 0.0 }]];
    pub const GAMMA2: Block = [[Z, ONE], [ONE, Z]];
    /// i·γ₁γ₂.
    pub const GRADING: Block = [[Z, I], [C64 { re: 0.0, im: -1.0 }, Z]];
    pub const IDENTITY: Block = [[ONE, Z], [Z, ONE]];
}

pub fn block_mul(a: &Block, b: &Block) -> Block {
    let mut c = [[Z; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn block_add(a: &Block, b: &Block) -> Block {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn block_scale(a: &Block, s: C64) -> Block {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

/// a·γ₁ + b·γ₂.
pub fn dirac_block(a: f64, b: f64) -> Block {
    [[C64::new(a, 0.0), C64::new(b, 0.0)], [C64::new(b, 0.0), C64::new(-a, 0.0)]]
}

pub fn block_apply(m: &Block, x: [C64; 2]) -> [C64; 2] {
    [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
}
