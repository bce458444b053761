//! Discrete residual of the Darboux operator on a degree-`m` slice.

use crate::error::{Error, Result};

fn uniform_step(x: &[f64], name: &str) -> Result<f64> {
    if x.len() < 5 {
        return Err(Error::GridTooCoarse(format!("{name}-grid needs at least 5 points, got {}", x.len())));
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if h.is_nan() || h <= 0.0 || x.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::Invalid(format!("{name}-grid must be uniform and increasing")));
    }
    Ok(h)
}

/// `L^2` norm over interior nodes of
/// `G_tt + ((n-1)/t) G_t - (G_rr + ((n-1)/r) G_r - m(m+n-2)/r^2 G)`
/// with centered differences. `g[i][j] = G(r_i, t_j)`; nodes with `r = 0` or
/// `t = 0` are skipped.
pub fn darboux_residual(g: &[Vec<f64>], radii: &[f64], times: &[f64], n: usize, m: usize) -> Result<f64> {
    let dr = uniform_step(radii, "r")?;
    let dt = uniform_step(times, "t")?;
    if g.len() != radii.len() || g.iter().any(|row| row.len() != times.len()) {
        return Err(Error::Invalid("slice does not match the grids".into()));
    }
    let nm1 = (n - 1) as f64;
    let ang = (m * (m + n - 2)) as f64;
    let mut acc = 0.0;
    for i in 1..radii.len() - 1 {
        let r = radii[i];
        if r <= 0.0 {
            continue;
        }
        for j in 1..times.len() - 1 {
            let t = times[j];
            if t <= 0.0 {
                continue;
            }
            let c = g[i][j];
            let g_tt = (g[i][j + 1] - 2.0 * c + g[i][j - 1]) / (dt * dt);
            let g_t = (g[i][j + 1] - g[i][j - 1]) / (2.0 * dt);
            let g_rr = (g[i + 1][j] - 2.0 * c + g[i - 1][j]) / (dr * dr);
            let g_r = (g[i + 1][j] - g[i - 1][j]) / (2.0 * dr);
            let v = g_tt + nm1 / t * g_t - (g_rr + nm1 / r * g_r - ang / (r * r) * c);
            acc += v * v;
        }
    }
    Ok((acc * dr * dt).sqrt())
}
