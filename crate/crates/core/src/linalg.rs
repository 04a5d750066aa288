//! Block-tridiagonal solve for systems whose unknowns are interleaved pairs
//! `(x_i, y_i)`: 2x2 diagonal blocks and scalar multiples of the identity
//! off the diagonal. This is the Jacobian shape of the coupled midpoint step.

pub type Block = [[f64; 2]; 2];

fn inv2(m: &Block) -> Option<Block> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let r = 1.0 / det;
    Some([[m[1][1] * r, -m[0][1] * r], [-m[1][0] * r, m[0][0] * r]])
}

fn mul_vec(m: &Block, v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Solves `D_i x_i + off (x_{i-1} + x_{i+1}) = rhs_i` in place (block Thomas).
/// Returns `None` on a singular pivot block.
pub fn solve_block_tridiag(diag: &[Block], off: f64, rhs: &mut [[f64; 2]]) -> Option<()> {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    let mut inv: Vec<Block> = Vec::with_capacity(n);
    inv.push(inv2(&diag[0])?);
    for i in 1..n {
        let prev = &inv[i - 1];
        let mut m = diag[i];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] -= off * off * prev[r][c];
            }
        }
        let carry = mul_vec(prev, rhs[i - 1]);
        rhs[i][0] -= off * carry[0];
        rhs[i][1] -= off * carry[1];
        inv.push(inv2(&m)?);
    }
    rhs[n - 1] = mul_vec(&inv[n - 1], rhs[n - 1]);
    for i in (0..n - 1).rev() {
        let y = [rhs[i][0] - off * rhs[i + 1][0], rhs[i][1] - off * rhs[i + 1][1]];
        rhs[i] = mul_vec(&inv[i], y);
    }
    Some(())
}
