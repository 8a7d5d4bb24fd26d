//! Scaling-and-squaring matrix exponential with Padé approximants of degree
//! 3, 5, 7, 9 and 13 (Higham's 2005 parameter table).

use super::{matmul, norm1, ComplexMatrix, ComplexVector, LuFactor};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

pub fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    assert!(a.is_square(), "expm of a non-square matrix");
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let norm = norm1(a);
    for &(m, theta) in &THETA {
        if norm <= theta {
            return pade_low(a, m);
        }
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil().max(0.0) as i32 } else { 0 };
    let scaled = a.scale(0.5f64.powi(s));
    let mut r = pade13(&scaled);
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    r
}

fn pade_low(a: &ComplexMatrix, m: usize) -> ComplexMatrix {
    let b: &[f64] = match m {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        _ => &B9,
    };
    let n = a.nrows();
    let id = ComplexMatrix::identity(n, n);
    let a2 = matmul(a, a);
    // powers A^0, A^2, A^4, ...
    let mut powers = vec![id.clone(), a2.clone()];
    while powers.len() < m.div_ceil(2) {
        let next = matmul(powers.last().unwrap(), &a2);
        powers.push(next);
    }
    let mut u = ComplexMatrix::zeros(n, n);
    let mut v = ComplexMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u += p.scale(b[2 * k + 1]);
        v += p.scale(b[2 * k]);
    }
    let u = matmul(a, &u);
    solve_pade(u, v)
}

fn pade13(a: &ComplexMatrix) -> ComplexMatrix {
    let b = &B13;
    let n = a.nrows();
    let id = ComplexMatrix::identity(n, n);
    let a2 = matmul(a, a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a4, &a2);
    let inner_u = a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]);
    let u = matmul(&a6, &inner_u) + a6.scale(b[7]) + a4.scale(b[5]) + a2.scale(b[3]) + id.scale(b[1]);
    let u = matmul(a, &u);
    let inner_v = a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]);
    let v = matmul(&a6, &inner_v) + a6.scale(b[6]) + a4.scale(b[4]) + a2.scale(b[2]) + id.scale(b[0]);
    solve_pade(u, v)
}

// (V - U)^{-1} (V + U)
fn solve_pade(u: ComplexMatrix, v: ComplexMatrix) -> ComplexMatrix {
    let q = &v - &u;
    let p = v + u;
    LuFactor::new(q).solve_matrix(&p)
}

/// Fixed-step propagator `exp(dt * L)` applied repeatedly to a vector.
#[derive(Debug, Clone)]
pub struct Propagator {
    step: ComplexMatrix,
    dt: f64,
}

impl Propagator {
    pub fn new(generator: &ComplexMatrix, dt: f64) -> Propagator {
        Propagator { step: expm(&generator.scale(dt)), dt }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, v: &ComplexVector) -> ComplexVector {
        &self.step * v
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.step
    }
}
