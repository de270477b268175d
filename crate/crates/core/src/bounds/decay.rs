use crate::error::{Error, Result};
use crate::model::{StabilityClass, SubsystemSpec};
use crate::numlin::NormSpec;

/// Exponential bound constants `(c, rate)` for one mode.
///
/// Diagonalizable modes give `c = 1` and the distance of the critical
/// eigenvalue to the imaginary axis. Defective modes trade `margin` of the
/// rate for the constant `c = sup_t Σ_{k<m} t^k/k! e^{-(margin + gap) t}`,
/// maximized over Jordan blocks of size `m` whose eigenvalue sits `gap`
/// left of the critical one. A non-diagonal ellipsoidal weight (or any
/// weight with a defective mode) multiplies `c` by `sqrt(cond W)`.
pub fn decay_constants(sub: &SubsystemSpec, norm: &NormSpec, margin: Option<f64>) -> Result<(f64, f64)> {
    let eig = &sub.eig;
    let max_re = eig.max_real_part();
    let critical = match sub.class {
        StabilityClass::Marginal => return Err(Error::MarginalMode(sub.id.clone())),
        StabilityClass::Stable => -max_re,
        StabilityClass::Unstable => max_re,
    };
    let weight_factor = if norm.is_diagonal() && !eig.defective {
        1.0
    } else {
        norm.weight_condition().sqrt()
    };
    if !eig.defective {
        return Ok((weight_factor, critical));
    }
    let margin = margin.ok_or_else(|| Error::MarginRequired(sub.id.clone()))?;
    if !(margin > 0.0) || (sub.class == StabilityClass::Stable && margin >= critical) {
        return Err(Error::InvalidArgument(format!(
            "decay margin {margin} for mode {} must lie in (0, {critical})",
            sub.id
        )));
    }
    let rate = match sub.class {
        StabilityClass::Stable => critical - margin,
        _ => critical + margin,
    };
    let mut c: f64 = 1.0;
    let mut start = 0;
    for &size in &eig.block_sizes {
        let gap = max_re - eig.eigenvalues[start].re;
        c = c.max(poly_exp_sup(size, margin + gap.max(0.0)));
        start += size;
    }
    Ok((c * weight_factor, rate))
}

/// `sup_{t ≥ 0} Σ_{k<m} t^k/k! · e^{-a t}` for `a > 0`.
pub fn poly_exp_sup(m: usize, a: f64) -> f64 {
    if m <= 1 {
        return 1.0;
    }
    let f = |t: f64| {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..m {
            term *= t / k as f64;
            sum += term;
        }
        sum * (-a * t).exp()
    };
    // The maximizer lies below (m - 1) / a; scan then refine.
    let hi = (m as f64 + 1.0) / a;
    let n = 2000;
    let (mut best_t, mut best) = (0.0, f(0.0));
    for i in 1..=n {
        let t = hi * i as f64 / n as f64;
        let v = f(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let step = hi / n as f64;
    let (mut lo, mut up) = ((best_t - step).max(0.0), best_t + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = up - g * (up - lo);
        let x2 = lo + g * (up - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            up = x2;
        }
    }
    best.max(f(0.5 * (lo + up)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::{real_matrix, RealMatrix};

    #[test]
    fn jordan_block_constant_matches_grid_oracle() {
        // 2x2 block, margin 0.5: sup (1 + t) e^{-t/2}.
        let oracle = (0..=200_000)
            .map(|i| {
                let t = i as f64 * 1e-4;
                (1.0 + t) * (-0.5 * t).exp()
            })
            .fold(0.0, f64::max);
        let sub = SubsystemSpec::with_margin("j", real_matrix(&[&[-1.0, 1.0], &[0.0, -1.0]]), Some(0.5)).unwrap();
        let (c, rate) = decay_constants(&sub, &NormSpec::Spectral, Some(0.5)).unwrap();
        assert!((c - oracle).abs() < 1e-8);
        assert!((c - 2.0 * (-0.5f64).exp()).abs() < 1e-12);
        assert!((rate - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diagonalizable_constants() {
        let sub = SubsystemSpec::new("1", real_matrix(&[&[-0.1, 2.0], &[-1.0, -0.1]])).unwrap();
        assert_eq!(decay_constants(&sub, &NormSpec::Spectral, None).unwrap().0, 1.0);
        let neg = SubsystemSpec::new("i", -RealMatrix::identity(3, 3)).unwrap();
        assert_eq!(decay_constants(&neg, &NormSpec::Spectral, None).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn margin_is_required_for_defective_modes() {
        let sub = SubsystemSpec::with_margin("j", real_matrix(&[&[-1.0, 1.0], &[0.0, -1.0]]), Some(0.2)).unwrap();
        assert!(matches!(
            decay_constants(&sub, &NormSpec::Spectral, None),
            Err(Error::MarginRequired(_))
        ));
    }

}
