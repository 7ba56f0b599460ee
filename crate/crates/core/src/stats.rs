//! Small statistics toolbox shared by the verifiers: summaries, Poisson
//! goodness of fit, two-sample chi-square and Kolmogorov-Smirnov tests.

use statrs::function::gamma::{gamma_ur, ln_gamma};

#[derive(Clone, Copy, Debug)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub stderr: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary {
            n: 0,
            mean: 0.0,
            sd: 0.0,
            stderr: 0.0,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let sd = var.sqrt();
    Summary {
        n,
        mean,
        sd,
        stderr: sd / (n as f64).sqrt(),
    }
}

pub fn pearson_corr(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

pub fn poisson_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)).exp()
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi2_sf(stat: f64, dof: f64) -> f64 {
    if dof <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof / 2.0, stat / 2.0)
}

#[derive(Clone, Copy, Debug)]
pub struct GofResult {
    pub stat: f64,
    pub dof: usize,
    pub p: f64,
}

/// Pearson chi-square goodness of fit of observed counts against Poisson
/// with the given parameter. Bins with expected mass below `min_expected`
/// are merged into their tail.
pub fn poisson_gof(observed: &[u64], lambda: f64) -> GofResult {
    let n = observed.len() as f64;
    let kmax = observed.iter().copied().max().unwrap_or(0);
    // bin by count value, with merged tails
    let mut lo = 0u64;
    let mut hi = kmax;
    let min_expected = 5.0;
    while lo < hi && n * poisson_cdf_below(lambda, lo + 1) < min_expected {
        lo += 1;
    }
    while hi > lo && n * poisson_sf_from(lambda, hi) < min_expected {
        hi -= 1;
    }
    let bins = (hi - lo + 1) as usize;
    let mut obs = vec![0f64; bins];
    for &k in observed {
        let idx = k.clamp(lo, hi) - lo;
        obs[idx as usize] += 1.0;
    }
    let mut stat = 0.0;
    for (i, &o) in obs.iter().enumerate() {
        let k = lo + i as u64;
        let e = n * if i == 0 {
            poisson_cdf_below(lambda, k + 1)
        } else if i == bins - 1 {
            poisson_sf_from(lambda, k)
        } else {
            poisson_pmf(lambda, k)
        };
        if e > 0.0 {
            stat += (o - e) * (o - e) / e;
        }
    }
    let dof = bins.saturating_sub(1).max(1);
    GofResult {
        stat,
        dof,
        p: chi2_sf(stat, dof as f64),
    }
}

fn poisson_cdf_below(lambda: f64, k: u64) -> f64 {
    (0..k).map(|j| poisson_pmf(lambda, j)).sum()
}

fn poisson_sf_from(lambda: f64, k: u64) -> f64 {
    1.0 - poisson_cdf_below(lambda, k)
}

#[derive(Clone, Copy, Debug)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov
/// distribution for the p-value. Conservative in the presence of ties.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (m, n) = (xs.len(), ys.len());
    assert!(m > 0 && n > 0, "ks_two_sample needs non-empty samples");
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < m && j < n {
        let t = xs[i].min(ys[j]);
        while i < m && xs[i] <= t {
            i += 1;
        }
        while j < n && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / m as f64 - j as f64 / n as f64).abs());
    }
    let en = ((m as f64 * n as f64) / (m as f64 + n as f64)).sqrt();
    KsResult {
        d,
        p: kolmogorov_sf(en * d),
        n_a: m,
        n_b: n,
    }
}

/// Survival function of the Kolmogorov distribution,
/// Q(z) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 z^2).
pub fn kolmogorov_sf(z: f64) -> f64 {
    if z < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * z * z).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample chi-square homogeneity test over a shared table of cells.
/// Cells whose pooled count is below `min_pooled` are merged into one
/// leftover cell.
pub fn chi2_two_sample(cells: &[(u64, u64)], min_pooled: u64) -> GofResult {
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let mut rest = (0f64, 0f64);
    for &(a, b) in cells {
        if a + b >= min_pooled {
            kept.push((a as f64, b as f64));
        } else {
            rest.0 += a as f64;
            rest.1 += b as f64;
        }
    }
    if rest.0 + rest.1 > 0.0 {
        kept.push(rest);
    }
    let na: f64 = kept.iter().map(|c| c.0).sum();
    let nb: f64 = kept.iter().map(|c| c.1).sum();
    if kept.len() < 2 || na == 0.0 || nb == 0.0 {
        return GofResult {
            stat: 0.0,
            dof: 1,
            p: 1.0,
        };
    }
    let total = na + nb;
    let mut stat = 0.0;
    for (a, b) in &kept {
        let pooled = a + b;
        let ea = na * pooled / total;
        let eb = nb * pooled / total;
        if ea > 0.0 {
            stat += (a - ea) * (a - ea) / ea;
        }
        if eb > 0.0 {
            stat += (b - eb) * (b - eb) / eb;
        }
    }
    let dof = kept.len() - 1;
    GofResult {
        stat,
        dof,
        p: chi2_sf(stat, dof as f64),
    }
}

/// Total variation distance between the two empirical distributions of a
/// shared cell table.
pub fn tv_distance(cells: &[(u64, u64)]) -> f64 {
    let na: u64 = cells.iter().map(|c| c.0).sum();
    let nb: u64 = cells.iter().map(|c| c.1).sum();
    if na == 0 || nb == 0 {
        return 0.0;
    }
    0.5 * cells
        .iter()
        .map(|&(a, b)| (a as f64 / na as f64 - b as f64 / nb as f64).abs())
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::{Distribution, Poisson};

    #[test]
    fn poisson_pmf_matches_direct_formula() {
        // lambda = 3, k = 4: e^-3 3^4/4!
        let direct = (-3.0f64).exp() * 81.0 / 24.0;
        assert_abs_diff_eq!(poisson_pmf(3.0, 4), direct, epsilon = 1e-12);
    }

    #[test]
    fn chi2_sf_known_values() {
        // P[chi2_1 > 3.841] ~ 0.05, P[chi2_2 > 5.991] ~ 0.05
        assert_abs_diff_eq!(chi2_sf(3.841, 1.0), 0.05, epsilon = 1e-3);
        assert_abs_diff_eq!(chi2_sf(5.991, 2.0), 0.05, epsilon = 1e-3);
    }

    #[test]
    fn kolmogorov_sf_known_value() {
        // Q(1.36) ~ 0.049 (the classical 5% point)
        let q = kolmogorov_sf(1.36);
        assert!((q - 0.049).abs() < 2e-3, "q = {q}");
    }

    #[test]
    fn gof_accepts_true_poisson_and_rejects_wrong_rate() {
        let mut rng = crate::rng::stream_rng(11, 1, 0);
        let pois = Poisson::new(100.0).unwrap();
        let counts: Vec<u64> = (0..5000).map(|_| pois.sample(&mut rng) as u64).collect();
        let ok = poisson_gof(&counts, 100.0);
        assert!(ok.p > 0.01, "p = {}", ok.p);
        let bad = poisson_gof(&counts, 110.0);
        assert!(bad.p < 1e-6, "p = {}", bad.p);
    }

    #[test]
    fn ks_separates_and_accepts() {
        let mut rng = crate::rng::stream_rng(5, 2, 0);
        let a: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let c: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() * 0.8).collect();
        assert!(ks_two_sample(&a, &b).p > 0.01);
        assert!(ks_two_sample(&a, &c).p < 1e-6);
    }
}
