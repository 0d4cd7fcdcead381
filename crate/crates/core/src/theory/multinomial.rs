//! The trinomial/binomial comparison used to bound `V_{2p}` increments:
//!
//! `sum_{i+j+k=p, i != p-1 and j != 1} p!/(i!j!k!) |x|^{2i} (2<x,y>)^j |y|^{2k}
//!   <= sum_{k != 1} C(2p, k) |x|^{2p-k} |y|^k`.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::vector::{dot, norm};

pub const MAX_P: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultinomialCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

pub fn multinomial_inequality_check(x: &[f64], y: &[f64], p: u32) -> Result<MultinomialCheck> {
    if !(1..=MAX_P).contains(&p) {
        return Err(invalid(format!("p must lie in 1..={MAX_P}, got {p}")));
    }
    if x.len() != y.len() {
        return Err(crate::error::Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    let nx = norm(x);
    let ny = norm(y);
    let xy2 = 2.0 * dot(x, y);
    let fp = factorial(p);
    let mut lhs = 0.0;
    for i in 0..=p {
        for j in 0..=(p - i) {
            let k = p - i - j;
            // The excluded set is {i = p-1} union {j = 1}.
            if i + 1 == p || j == 1 {
                continue;
            }
            let coef = fp / (factorial(i) * factorial(j) * factorial(k));
            lhs += coef * nx.powi(2 * i as i32) * xy2.powi(j as i32) * ny.powi(2 * k as i32);
        }
    }
    let two_p = 2 * p;
    let fpp = factorial(two_p);
    let mut rhs = 0.0;
    for k in 0..=two_p {
        if k == 1 {
            continue;
        }
        let coef = fpp / (factorial(k) * factorial(two_p - k));
        rhs += coef * nx.powi((two_p - k) as i32) * ny.powi(k as i32);
    }
    Ok(MultinomialCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12 * rhs,
    })
}
