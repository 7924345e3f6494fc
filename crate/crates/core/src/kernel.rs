//! Three-level implicit average scheme for `ÿ + ẏ = Δy + u y + F`.
//!
//! With `K_j = Δ_h + diag(u(t_j))` the scheme reads, for `c = 1..m-1`,
//!
//! ```text
//! (y[c+1] - 2y[c] + y[c-1])/Δt² + (y[c+1] - y[c-1])/(2Δt)
//!     = ¼(K_{c+1} y[c+1] + 2 K_c y[c] + K_{c-1} y[c-1]) + ¼(F[c+1] + 2F[c] + F[c-1])
//! ```
//!
//! started by the Taylor step `y[1] = y[0] + Δt y1 + ½Δt² (K_0 y[0] + F[0] - y1)`.
//! The whole right-hand side `K y + F` is averaged node by node, so the scheme
//! is affine in `(y, F)` and bilinear in `(u, y)`: its exact derivative with
//! respect to `u` in direction `h` is the same scheme driven by `F = h ⊙ y`.
//!
//! In matrix form the rows are `A_{c+1} y[c+1] + B_c y[c] + C_{c-1} y[c-1]`
//! with `A_j = aI - ¼K_j`, `B_j = -(2/Δt²)I - ½K_j`, `C_j = bI - ¼K_j`,
//! `a = 1/Δt² + 1/(2Δt)` and `b = 1/Δt² - 1/(2Δt)`.

use crate::domain::{dot_l2, laplacian_into, laplacian_matrix, SpaceTimeField, SpatialGrid, TimeGrid};
use crate::error::{Result, WaveError};
use crate::linalg::BandedLu;

/// Growth factor over the data scale beyond which a solve is declared unstable.
pub const INSTABILITY_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Coefficients {
    pub dt: f64,
    pub a: f64,
    pub b: f64,
}

impl Coefficients {
    pub fn new(tg: &TimeGrid) -> Self {
        let dt = tg.dt();
        Self {
            dt,
            a: 1.0 / (dt * dt) + 0.5 / dt,
            b: 1.0 / (dt * dt) - 0.5 / dt,
        }
    }
}

/// `out = Δ_h v + u ⊙ v`
#[inline]
pub(crate) fn apply_k(g: &SpatialGrid, u: &[f64], v: &[f64], out: &mut [f64]) {
    laplacian_into(g, v, out);
    for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(v) {
        *o += ui * vi;
    }
}

/// Factors `A_j = aI - ¼(Δ_h + diag(u_j))`.
pub(crate) fn step_matrix(
    g: &SpatialGrid,
    coef: &Coefficients,
    u: &[f64],
    step: usize,
) -> Result<BandedLu> {
    let umax = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let limit = 1.0 / (coef.dt * coef.dt);
    if !(0.25 * umax < limit) {
        return Err(WaveError::SingularStep {
            step,
            reason: format!(
                "max control {umax:e} violates 0.25*max(u) < 1/dt^2 = {limit:e}; reduce the time step"
            ),
        });
    }
    let mut m = laplacian_matrix(g);
    for i in 0..g.len() {
        let lo = i.saturating_sub(m.bandwidth());
        let hi = (i + m.bandwidth()).min(g.len() - 1);
        for j in lo..=hi {
            let v = m.get(i, j);
            m.set(i, j, -0.25 * v);
        }
        m.add(i, i, coef.a - 0.25 * u[i]);
    }
    m.factorize().map_err(|e| WaveError::SingularStep {
        step,
        reason: e.to_string(),
    })
}

fn slice_norm(g: &SpatialGrid, v: &[f64]) -> f64 {
    dot_l2(g, v, v).sqrt()
}

/// Integrates the scheme forward from `(y0, y1)` with node forcing `forcing`
/// (absent means zero). Returns the displacement at every node.
pub(crate) fn march(
    g: &SpatialGrid,
    tg: &TimeGrid,
    u: &SpaceTimeField,
    forcing: Option<&SpaceTimeField>,
    y0: &[f64],
    y1: &[f64],
) -> Result<SpaceTimeField> {
    let n = g.len();
    let m = tg.steps();
    let coef = Coefficients::new(tg);
    let dt = coef.dt;

    let mut scale = slice_norm(g, y0).max(slice_norm(g, y1));
    if let Some(f) = forcing {
        for k in 0..tg.nodes() {
            scale = scale.max(slice_norm(g, f.slice(k)));
        }
    }
    let threshold = INSTABILITY_FACTOR * scale;
    let check = |step: usize, v: &[f64]| -> Result<()> {
        let norm = slice_norm(g, v);
        if !norm.is_finite() || norm > threshold {
            return Err(WaveError::InstabilityDetected {
                step,
                norm,
                threshold,
            });
        }
        Ok(())
    };

    let mut y = SpaceTimeField::zeros(g, tg);
    y.slice_mut(0).copy_from_slice(y0);

    let mut k_prev = vec![0.0; n];
    apply_k(g, u.slice(0), y0, &mut k_prev);
    {
        let f0 = forcing.map(|f| f.slice(0));
        let y_1 = y.slice_mut(1);
        for i in 0..n {
            let fi = f0.map_or(0.0, |f| f[i]);
            y_1[i] = y0[i] + dt * y1[i] + 0.5 * dt * dt * (k_prev[i] + fi - y1[i]);
        }
    }
    check(1, y.slice(1))?;
    let mut k_cur = vec![0.0; n];
    apply_k(g, u.slice(1), y.slice(1), &mut k_cur);

    let mut rhs = vec![0.0; n];
    let two_dt2 = 2.0 / (dt * dt);
    for c in 1..m {
        {
            let (cur, prev) = (y.slice(c), y.slice(c - 1));
            for i in 0..n {
                rhs[i] = two_dt2 * cur[i] + 0.5 * k_cur[i] - coef.b * prev[i] + 0.25 * k_prev[i];
            }
        }
        if let Some(f) = forcing {
            let (fp, fc, fm) = (f.slice(c + 1), f.slice(c), f.slice(c - 1));
            for i in 0..n {
                rhs[i] += 0.25 * (fp[i] + 2.0 * fc[i] + fm[i]);
            }
        }
        let lu = step_matrix(g, &coef, u.slice(c + 1), c + 1)?;
        lu.solve_in_place(&mut rhs);
        y.slice_mut(c + 1).copy_from_slice(&rhs);
        check(c + 1, &rhs)?;
        std::mem::swap(&mut k_prev, &mut k_cur);
        apply_k(g, u.slice(c + 1), y.slice(c + 1), &mut k_cur);
    }
    Ok(y)
}

/// Applies the transpose of the scheme's solution operator.
///
/// For `z` produced by [`march`] with zero initial data and forcing `F`, and
/// any node field `w`, the returned `φ` satisfies
/// `Σ_k ω_k Δt ⟨z[k], w[k]⟩ = Σ_k ω_k Δt ⟨F[k], φ[k]⟩` exactly up to roundoff.
/// The recursion runs backward in time; in the interior it is the damped
/// wave operator with reversed damping sign, `φ̈ - φ̇ = Δφ + uφ + w`.
pub(crate) fn march_transpose(
    g: &SpatialGrid,
    tg: &TimeGrid,
    u: &SpaceTimeField,
    w: &SpaceTimeField,
) -> Result<SpaceTimeField> {
    let n = g.len();
    let m = tg.steps();
    let coef = Coefficients::new(tg);
    let dt = coef.dt;
    let two_dt2 = 2.0 / (dt * dt);

    let mut scale = 0.0_f64;
    for k in 0..tg.nodes() {
        scale = scale.max(slice_norm(g, w.slice(k)));
    }
    let threshold = INSTABILITY_FACTOR * scale;

    // lambda[r] is the multiplier of scheme row r (the row that determines z[r]).
    let mut lambda = SpaceTimeField::zeros(g, tg);
    let mut kl = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for j in (1..=m).rev() {
        let wj = w.slice(j);
        let weight = tg.weight(j) * dt;
        for i in 0..n {
            rhs[i] = weight * wj[i];
        }
        // - B_j λ[j+1] = (2/Δt²) λ[j+1] + ½ K_j λ[j+1]
        if j < m {
            let next = lambda.slice(j + 1);
            apply_k(g, u.slice(j), next, &mut kl);
            for i in 0..n {
                rhs[i] += two_dt2 * next[i] + 0.5 * kl[i];
            }
        }
        // - C_j λ[j+2] = -b λ[j+2] + ¼ K_j λ[j+2]
        if j + 2 <= m {
            let next2 = lambda.slice(j + 2);
            apply_k(g, u.slice(j), next2, &mut tmp);
            for i in 0..n {
                rhs[i] += -coef.b * next2[i] + 0.25 * tmp[i];
            }
        }
        if j >= 2 {
            let lu = step_matrix(g, &coef, u.slice(j), j)?;
            lu.solve_in_place(&mut rhs);
        }
        // column 1 has a unit diagonal entry (the startup row), so no solve there.
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(WaveError::InstabilityDetected {
                step: j,
                norm: f64::INFINITY,
                threshold,
            });
        }
        lambda.slice_mut(j).copy_from_slice(&rhs);
    }

    // φ[k] = (Sᵀλ)[k] / (ω_k Δt) where S maps node forcing to row right-hand sides.
    let mut phi = SpaceTimeField::zeros(g, tg);
    for k in 0..=m {
        let denom = tg.weight(k) * dt;
        let out = phi.slice_mut(k);
        if k == 0 {
            let l1 = lambda.slice(1);
            for i in 0..n {
                out[i] = 0.5 * dt * dt * l1[i];
            }
        }
        if k >= 2 {
            let l = lambda.slice(k);
            for i in 0..n {
                out[i] += 0.25 * l[i];
            }
        }
        if (1..m).contains(&k) {
            let l = lambda.slice(k + 1);
            for i in 0..n {
                out[i] += 0.5 * l[i];
            }
        }
        if k + 2 <= m {
            let l = lambda.slice(k + 2);
            for i in 0..n {
                out[i] += 0.25 * l[i];
            }
        }
        for v in out.iter_mut() {
            *v /= denom;
        }
        let norm = slice_norm(g, out);
        if !norm.is_finite() || norm > threshold {
            return Err(WaveError::InstabilityDetected {
                step: k,
                norm,
                threshold,
            });
        }
    }
    Ok(phi)
}

/// Velocity by centered differences, second-order one-sided at the last node,
/// `v[0] = v0`.
pub(crate) fn velocity(y: &SpaceTimeField, tg: &TimeGrid, v0: &[f64]) -> SpaceTimeField {
    let m = tg.steps();
    let dt = tg.dt();
    let n = y.space_len();
    let mut v = y.clone();
    v.slice_mut(0).copy_from_slice(v0);
    for k in 1..m {
        let (next, prev) = (y.slice(k + 1), y.slice(k - 1));
        let out = v.slice_mut(k);
        for i in 0..n {
            out[i] = (next[i] - prev[i]) / (2.0 * dt);
        }
    }
    let (last, b1, b2) = (y.slice(m), y.slice(m - 1), y.slice(m - 2));
    let out = v.slice_mut(m);
    for i in 0..n {
        out[i] = (3.0 * last[i] - 4.0 * b1[i] + b2[i]) / (2.0 * dt);
    }
    v
}

/// Centered differences with second-order one-sided differences at both ends.
pub(crate) fn derivative_one_sided(y: &SpaceTimeField, tg: &TimeGrid) -> SpaceTimeField {
    let dt = tg.dt();
    let first: Vec<f64> = (0..y.space_len())
        .map(|i| (-3.0 * y.slice(0)[i] + 4.0 * y.slice(1)[i] - y.slice(2)[i]) / (2.0 * dt))
        .collect();
    velocity(y, tg, &first)
}
