pub fn relu(z: f64) -> f64 {
    z.max(0.0)
}

/// Logistic function, evaluated in the branch that never exponentiates a
/// positive argument.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub fn relu_in_place(v: &mut [f64]) {
    for x in v {
        *x = relu(*x);
    }
}
