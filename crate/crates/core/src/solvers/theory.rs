//! Closed-form constants and bounds from the convergence analysis, used to
//! pick inner iteration counts and to check runs against their guarantees.

/// Strong convexity modulus of the linearized subproblem, `mu / (1 + mu)`.
pub fn acpdc_mu_tilde(mu: f64) -> f64 {
    mu / (1.0 + mu)
}

/// `t_0 = ceil(ln 4 * m / sqrt(mu_tilde))`, enough inner steps for the
/// accelerated solver to contract the subproblem gap by a factor four.
pub fn acpdc_t0(mu: f64, m: usize) -> usize {
    (4f64.ln() * m as f64 / acpdc_mu_tilde(mu).sqrt()).ceil() as usize
}

/// `mu_tilde_1 = mu / (L_max + 2 mu)` of the proximal point subproblem.
pub fn acpp_mu_tilde(mu: f64, l_max: f64) -> f64 {
    mu / (l_max + 2.0 * mu)
}

/// `t_0 = ceil(-ln(lambda) / eta)` with
/// `lambda = min{1/4, mu^2/L^2, mu/(2L)}` and `eta = sqrt(mu_tilde_1)/m`.
pub fn acpp_t0(mu: f64, l: f64, l_max: f64, m: usize) -> usize {
    let lambda = 0.25f64.min(mu * mu / (l * l)).min(mu / (2.0 * l));
    let eta = acpp_mu_tilde(mu, l_max).sqrt() / m as f64;
    (-lambda.ln() / eta).ceil() as usize
}

/// `T_(1-s)/2 = sum_i lt_i^((1-s)/2)`.
pub fn t_half(lt: &[f64], s: f64) -> f64 {
    lt.iter().map(|l| l.powf((1.0 - s) / 2.0)).sum()
}

/// Contraction `eta = sqrt(mu_s) / (sqrt(mu_s) + T_(1-s)/2)` of the
/// non-uniform accelerated method.
pub fn acd_eta(mu_s: f64, t: f64) -> f64 {
    mu_s.sqrt() / (mu_s.sqrt() + t)
}

/// Inner steps of the smooth proximal point method: `ceil(-ln(lambda)/eta)`
/// with `lambda = min{1/8, mu/(4L), mu^2/L^2}`, block constants
/// `lt_i = L_i + 2 mu` and `mu_s = mu / max(lt)^s`.
pub fn acpp_smooth_t0(mu: f64, l: f64, lipschitz: &[f64], s: f64) -> usize {
    let lt: Vec<f64> = lipschitz.iter().map(|&li| li + 2.0 * mu).collect();
    let lt_max = lt.iter().cloned().fold(0.0, f64::max);
    let mu_s = mu / lt_max.powf(s);
    let lambda = 0.125f64.min(mu / (4.0 * l)).min(mu * mu / (l * l));
    (-lambda.ln() / acd_eta(mu_s, t_half(&lt, s))).ceil() as usize
}

/// `kappa_s = max lt_i^s / min lt_i^s`.
pub fn kappa_s(lt: &[f64], s: f64) -> f64 {
    let max = lt.iter().cloned().fold(0.0, f64::max);
    let min = lt.iter().cloned().fold(f64::INFINITY, f64::min);
    (max / min).powf(s)
}

/// Expected gap bound of accelerated proximal coordinate gradient after
/// `k` steps: `(1 - sqrt(mu_tilde)/m)^k (gap_0 + mu_tilde/2 ||x0 - x*||^2)`.
pub fn apcg_bound(mu_tilde: f64, m: usize, k: usize, gap0: f64, dist_sq: f64) -> f64 {
    (1.0 - mu_tilde.sqrt() / m as f64).powi(k as i32) * (gap0 + 0.5 * mu_tilde * dist_sq)
}

/// Expected best squared subgradient norm of rcsd after `k + 1`
/// iterations: `2 T_(1-s) (F(x0) - F*) / (k + 1)`.
pub fn rcsd_bound(t_one_minus_s: f64, decrease: f64, k: usize) -> f64 {
    2.0 * t_one_minus_s * decrease / (k as f64 + 1.0)
}

/// Bound on `sum_k ||grad f(x^k) - v^k||^2` of rpcd with `phi = 0`:
/// `4 (L_max + m L^2 / L_min) (F(x0) - F*)`.
pub fn rpcd_bound(l_max: f64, l_min: f64, l: f64, m: usize, decrease: f64) -> f64 {
    4.0 * (l_max + m as f64 * l * l / l_min) * decrease
}

/// Upper constant `c` in `||g||_[1],* <= c ||p||_[1],*`.
pub fn measure_upper(l: f64, l_min: f64, mu: f64) -> f64 {
    (1.0 + l / (mu * l_min)) * (1.0 + (l / (2.0 * l_min * mu + l)).sqrt())
}

/// Lower constant `c` in `||g||_[1],* >= c ||p||_[1],*`, for
/// `gamma` in `[mu, 3 mu)`.
pub fn measure_lower(l: f64, l_min: f64, mu: f64, gamma: f64) -> f64 {
    (gamma / mu) / (1.0 + ((gamma - mu + l / l_min) / (3.0 * mu - gamma)).sqrt())
}

/// Right-hand side of the acpdc rate for the best squared prox-mapping:
/// `2 mu [F(x0) - F* + 4 M ||x0 - x*|| + mu ||x0 - x*||_[1]^2] / K`.
pub fn acpdc_bound(mu: f64, decrease: f64, m_const: f64, dist: f64, dist_sq_1: f64, k: usize) -> f64 {
    2.0 * mu * (decrease + 4.0 * m_const * dist + mu * dist_sq_1) / k as f64
}
