/// Smoothed hinge `g(x) = log(1 + exp(ρx)) / ρ`, evaluated without overflow.
pub fn smoothed_hinge(x: f64, rho: f64) -> f64 {
    let t = rho * x;
    if t > 30.0 {
        x + (-t).exp().ln_1p() / rho
    } else {
        t.exp().ln_1p() / rho
    }
}

/// `g'(x) = σ(ρx)`.
pub fn smoothed_hinge_derivative(x: f64, rho: f64) -> f64 {
    let t = rho * x;
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
