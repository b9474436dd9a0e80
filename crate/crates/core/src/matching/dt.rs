use super::domain::TranslationDomain;
use crate::error::{ensure_dim, Error, Result};

/// Min-convolution of `h` with the truncated-L1 pairwise cost:
///
/// `m(t) = min_t' h(t') + alpha * min(|t - t'|_1, gamma)`
///
/// Computed as a separable two-pass L1 distance transform (one forward and
/// one backward sweep per axis), then clipped at `min h + alpha * gamma`.
/// Translation distances are measured in domain units, so one lattice step
/// costs `alpha * stride`. `gamma` may be `f64::INFINITY`.
pub fn dt_message(h: &[f64], domain: &TranslationDomain, alpha: f64, gamma: f64) -> Result<Vec<f64>> {
    ensure_dim(domain.len(), h.len())?;
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("message input"));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() || !(gamma > 0.0) {
        return Err(Error::invalid(format!(
            "need alpha >= 0 and gamma > 0, got alpha={alpha} gamma={gamma}"
        )));
    }
    let mut out = h.to_vec();
    dt_in_place(&mut out, domain, alpha, gamma);
    Ok(out)
}

pub(crate) fn dt_in_place(f: &mut [f64], domain: &TranslationDomain, alpha: f64, gamma: f64) {
    let (nu, nv) = (domain.nu(), domain.nv());
    let step = alpha * domain.stride as f64;
    let floor = f.iter().cloned().fold(f64::INFINITY, f64::min);

    for row in f.chunks_exact_mut(nu) {
        for i in 1..nu {
            row[i] = row[i].min(row[i - 1] + step);
        }
        for i in (0..nu - 1).rev() {
            row[i] = row[i].min(row[i + 1] + step);
        }
    }
    for col in 0..nu {
        for j in 1..nv {
            let prev = f[(j - 1) * nu + col] + step;
            let cur = &mut f[j * nu + col];
            *cur = cur.min(prev);
        }
        for j in (0..nv - 1).rev() {
            let next = f[(j + 1) * nu + col] + step;
            let cur = &mut f[j * nu + col];
            *cur = cur.min(next);
        }
    }
    if gamma.is_finite() {
        let cap = floor + alpha * gamma;
        for v in f.iter_mut() {
            *v = v.min(cap);
        }
    }
}
