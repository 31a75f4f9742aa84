//! Dormand-Prince 5(4) for 2-component linear systems, stepping exactly onto
//! prescribed output nodes.

pub(crate) type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_STEPS: usize = 2_000_000;

pub(crate) struct Outcome {
    pub states: Vec<State>,
    pub steps: usize,
    pub rejected: usize,
    /// Position where the step size underflowed, if it did.
    pub failed_at: Option<f64>,
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Integrates `y' = f(t, y)` from `nodes[0]` through the increasing `nodes`.
pub(crate) fn integrate(f: impl Fn(f64, &State) -> State, y0: State, nodes: &[f64], tol: f64, h_init: f64) -> Outcome {
    let mut states = Vec::with_capacity(nodes.len());
    states.push(y0);
    let mut t = nodes[0];
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = h_init;
    let mut facold: f64 = 1e-4;
    let mut steps = 0;
    let mut rejected = 0;
    let mut last_rejected = false;
    for &target in nodes.iter().skip(1) {
        while t < target {
            if steps + rejected >= MAX_STEPS {
                return Outcome { states, steps, rejected, failed_at: Some(t) };
            }
            let remaining = target - t;
            let mut hs = h.min(remaining);
            // avoid a sliver step just before the node
            if remaining - hs < 1e-3 * hs {
                hs = remaining;
            }
            if hs <= 1e-14 * t.abs().max(1.0) {
                return Outcome { states, steps, rejected, failed_at: Some(t) };
            }
            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(t + hs, &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
            let ynew = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
            let t_new = if hs == remaining { target } else { t + hs };
            let k7 = f(t_new, &ynew);
            let mut err = 0.0;
            for i in 0..2 {
                let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = tol + tol * y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / 2.0).sqrt();
            let fac11 = err.powf(EXPO1);
            if err <= 1.0 {
                let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut hnew = hs / fac;
                if last_rejected {
                    hnew = hnew.min(hs);
                }
                facold = err.max(1e-4);
                t = t_new;
                y = ynew;
                k1 = k7;
                steps += 1;
                last_rejected = false;
                // a step shortened to land on a node says little about the next one
                if hs >= h {
                    h = hnew;
                }
            } else {
                h = hs / (fac11 / SAFE).min(1.0 / FAC_MIN);
                rejected += 1;
                last_rejected = true;
            }
            if !y[0].is_finite() || !y[1].is_finite() {
                return Outcome { states, steps, rejected, failed_at: Some(t) };
            }
        }
        states.push(y);
    }
    Outcome { states, steps, rejected, failed_at: None }
}
